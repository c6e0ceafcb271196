import json

import pytest

from explic import automata as au
from explic import checker as C
from explic.bench import requirement
from explic.errors import FormulaError, ResourceLimit, TraceError
from explic.formula import parse_formula as P
from explic.system import generate
from explic.trace import parse_trace, replay

EX2 = parse_trace("{o,b1,e} {o} {o,b1} {w1} ({})^w")
PI = parse_trace("{o} {o,b2} {o,b1,b3} {w2} ({})^w")
PI2 = parse_trace("{o,b2} {o} {o,b1,b3} {w2} ({})^w")


@pytest.fixture(scope="module")
def explain3():
    return generate("auction:3:explain")


@pytest.fixture(scope="module")
def blind3():
    return generate("auction:3:blind")


def test_true_holds():
    s = generate("pennies:2")
    v = C.check(s, P("G true"))
    assert v.holds and v.counterexample is None
    data = v.to_json()
    assert set(data) == {"model", "formula", "holds", "alternation_depth", "counterexample", "stats"}
    assert json.loads(json.dumps(data))["holds"] is True


def test_ltl_violation_has_replaying_counterexample():
    s = generate("auction:2:blind")
    v = C.check(s, P("G !w1"))
    assert not v.holds
    root = v.counterexample[C.ROOT]
    assert replay(s, root) is not None
    assert any("w1" in x for x in root.prefix + root.loop)


def test_alternation_depth():
    s = generate("auction:2:blind")
    for mode in ("ice", "ece", "fce"):
        assert C.alternation_depth(requirement(s, mode)) == 1
    assert C.alternation_depth(P("G !K[bidder1] b2")) == 1
    assert C.alternation_depth(P("G p")) == 0


def test_ill_formed_rejected():
    s = generate("auction:2:blind")
    with pytest.raises(FormulaError):
        C.check(s, P("K[ghost] o"))
    with pytest.raises(FormulaError):
        C.check(s, P("G zz"))


@pytest.mark.parametrize("gen,req,expected", [
    ("auction:2:blind", "ice", False),
    ("auction:2:public", "ice", True),
    ("auction:2:explain", "ice", True),
    ("auction:2:explain", "ece", False),
    ("auction:2:explain", "priv", False),
    ("auction:3:explain", "priv", True),
])
def test_auction_examples(gen, req, expected):
    s = generate(gen)
    assert C.check(s, requirement(s, req)).holds is expected


def test_bid_explanation_cause(explain3):
    c = C.compute_cause(explain3, EX2, 0, P("F w1"), {"b1"})
    assert C.cause_formula_equiv(c, P("b1 | X X b1"))
    assert not C.cause_formula_equiv(c, P("b1"))
    w, side = C.cause_difference(c, P("b1"))
    assert side == "cause-only"
    assert c.contains(w)


def test_bid_explanation_members(explain3):
    c = C.compute_cause(explain3, EX2, 0, P("F w1"), {"b1"})
    assert c.contains(parse_trace("{} {} {b1} ({})^w"))
    assert c.contains(parse_trace("{b1} ({})^w"))
    assert not c.contains(parse_trace("{} {b1} ({})^w"))


def test_late_bid_causes(blind3):
    c = C.compute_cause(blind3, PI, 3, P("!w1"), {"b1"})
    assert C.cause_formula_equiv(c, P("Y Y (!b1 & Y !b1)"), 3)
    c2 = C.compute_cause(blind3, PI2, 3, P("!w1"), {"b1"})
    assert C.cause_formula_equiv(c2, P("Y Y Y !b1"), 3)
    assert not C.cause_formula_equiv(c2, P("Y Y (!b1 & Y !b1)"), 3)


def test_cause_of_true_is_everything(blind3):
    c = C.compute_cause(blind3, PI, 2, P("true"), {"b1", "o"})
    assert C.cause_formula_equiv(c, P("true"))


def test_cause_deterministic(blind3):
    a = C.compute_cause(blind3, PI, 3, P("!w1"), {"b1"})
    b = C.compute_cause(blind3, PI, 3, P("!w1"), {"b1"})
    assert au.language_equiv(a.automaton, b.automaton)


def test_cause_errors(blind3):
    with pytest.raises(TraceError):
        C.compute_cause(blind3, EX2, 0, P("F w1"), {"b1"})
    c = C.compute_cause(blind3, PI, 3, P("!w1"), {"b1"})
    with pytest.raises(FormulaError):
        C.cause_formula_equiv(c, P("b2"))


def test_report_holds():
    s = generate("pennies:2")
    text = C.explain_verdict(C.check(s, P("G true")), s)
    assert "no counterexample" in text


def test_report_blind_ice():
    s = generate("auction:2:blind")
    v = C.check(s, requirement(s, "ice"))
    text = C.explain_verdict(v, s)
    assert "falsifying trace" in text
    assert {"k1", "k2"} <= set(v.counterexample)
    k1, k2 = v.counterexample["k1"], v.counterexample["k2"]
    assert replay(s, k1) is not None and replay(s, k2) is not None
    assert "disagree" in text


def test_report_public_privacy():
    s = generate("auction:2:public")
    v = C.check(s, requirement(s, "priv"))
    assert not v.holds
    assert "b2 is directly observable by bidder1" in C.explain_verdict(v, s)


def test_state_cap():
    s = generate("auction:2:blind")
    with pytest.raises(ResourceLimit):
        C.check(s, requirement(s, "ice"), cap=2)
