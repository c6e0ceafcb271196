import pytest

from explic.bench import requirement
from explic.errors import FragmentError, TraceError
from explic.formula import parse_formula as P
from explic.oracle import (Anchor, BoundedConfig, enumerate_lassos, enumerate_system_lassos, eval_ltl_on_lasso,
                           oracle_cause, oracle_check)
from explic.system import generate, make_system
from explic.trace import LassoTrace, parse_trace, replay, sym_diff

EX2 = parse_trace("{o,b1,e} {o} {o,b1} {w1} ({})^w")


def test_eval_examples():
    assert eval_ltl_on_lasso(parse_trace("({p})^w"), 0, P("G p"))
    assert eval_ltl_on_lasso(EX2, 0, P("F w1"))
    assert not eval_ltl_on_lasso(parse_trace("{a} ({})^w"), 0, P("Y true"))
    assert eval_ltl_on_lasso(parse_trace("{a} ({})^w"), 1, P("Y a"))
    t = parse_trace("{} ({p} {})^w")
    assert eval_ltl_on_lasso(t, 0, P("G F p")) and not eval_ltl_on_lasso(t, 0, P("F G p"))
    assert eval_ltl_on_lasso(t, 7, P("p S !p")) and eval_ltl_on_lasso(t, 2, P("O p & H (p | !p)"))


def test_eval_rejects_knowledge():
    with pytest.raises(FragmentError):
        eval_ltl_on_lasso(EX2, 0, P("K[a] p"))


def test_bounds_validation():
    with pytest.raises(ValueError):
        BoundedConfig(-1, 1)
    with pytest.raises(ValueError):
        BoundedConfig(1, 0)
    with pytest.raises(ValueError):
        Anchor(EX2, -1)


def test_enumerate_trivial():
    s = make_system("one", ["s"], ["s"], [("s", "true", [], "s")], [], [], [])
    assert enumerate_system_lassos(s, BoundedConfig(1, 1)) == [LassoTrace((), (frozenset(),))]


def test_enumerate_explain():
    s = generate("auction:2:explain")
    got = enumerate_system_lassos(s, BoundedConfig(1, 1))
    assert any(t.prefix == (frozenset({"o", "b1"}) | {"e"},) and "o" in t.loop[0] for t in got)
    assert len(set(got)) == len(got)
    assert all(replay(s, t) is not None and t == t.canonical() for t in got)


def test_enumerate_pennies_count():
    assert len(enumerate_system_lassos(generate("pennies:2"), BoundedConfig(0, 1))) == 4


def test_enumerate_lassos_count():
    # prefix 0 or 1, loop 1 over one prop: canonical words are ({})^w, ({p})^w, {p}({})^w, {}({p})^w
    assert len(enumerate_lassos(["p"], BoundedConfig(1, 1))) == 4


def test_bid_explanation_cause():
    s = generate("auction:3:explain")
    c = oracle_cause(s, Anchor(EX2, 0), P("F w1"), {"b1"}, BoundedConfig(4, 1))
    assert parse_trace("{b1} ({})^w") in c
    assert parse_trace("{} {} {b1} ({})^w") in c
    assert parse_trace("{} {b1} ({})^w") not in c


def test_cause_of_true_is_everything():
    s = generate("auction:2:blind")
    t = parse_trace("{o} {o,b2} {w2} ({})^w")
    cfg = BoundedConfig(2, 1)
    c = oracle_cause(s, Anchor(t, 1), P("true"), {"b1"}, cfg)
    assert c == set(enumerate_lassos({"b1"}, cfg))


def test_cause_with_empty_action_set():
    s = generate("auction:2:blind")
    t = parse_trace("{o} {o,b2} {w2} ({})^w")
    cfg = BoundedConfig(2, 1)
    # the fixed actions leave one choice (which bidder wins is not an action): b2 wins
    assert oracle_cause(s, Anchor(t, 2), P("!w1"), set(), cfg) == {LassoTrace((), (frozenset(),))}
    # o and b2 alone do not force the output w2 at time 2 to be absent... they force it present
    assert oracle_cause(s, Anchor(t, 2), P("!w2"), set(), cfg) == set()


def test_cause_rejects_foreign_trace():
    with pytest.raises(TraceError):
        oracle_cause(generate("auction:3:blind"), Anchor(EX2, 0), P("F w1"), {"b1"}, BoundedConfig(2, 1))


def test_cause_downward_consistent():
    s = generate("auction:2:blind")
    t = parse_trace("{o} {o,b2} {o,b1} {w2} ({})^w")
    cfg = BoundedConfig(3, 1)
    A = {"b1", "b2"}
    c = oracle_cause(s, Anchor(t, 3), P("!w1"), A, cfg)
    everything = enumerate_lassos(A, cfg)
    for m in c:
        dm = sym_diff(m, t, A)
        for other in everything:
            if sym_diff(other, t, A).issubset(dm):
                assert other in c


@pytest.mark.parametrize("gen,req,bounds,expected", [
    ("auction:2:blind", "ice", (4, 2), False),
    ("pennies:2", "priv", (2, 1), False),
    ("auction:2:public", "ice", (3, 1), True),
])
def test_oracle_check_examples(gen, req, bounds, expected):
    s = generate(gen)
    v = oracle_check(s, requirement(s, req), BoundedConfig(*bounds))
    assert v.holds is expected
    if not expected:
        assert replay(s, v.counterexample["alpha"]) is not None


def test_oracle_true():
    assert oracle_check(generate("rps:standard"), P("G true"), BoundedConfig(1, 1)).holds


@pytest.mark.parametrize("text", ["K[bidder1] K[bidder2] o", "forall X . X ~>[b1] o",
                                  "exists X . (X ~>[b1] o & X ~>[b2] o)"])
def test_fragment_errors(text):
    with pytest.raises(FragmentError):
        oracle_check(generate("auction:2:blind"), P(text), BoundedConfig(1, 1))
