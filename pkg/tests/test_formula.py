import pytest
from hypothesis import given, settings, strategies as st

from explic import formula as F
from explic.errors import FormulaError, ParseError
from explic.formula import parse_formula as P
from explic.system import generate

from randgen import random_ltl, rng_for

ICE_TEXT = "G ((!w1 & !o & Y o) -> exists X . K[bidder1] (X ~>[b1] !w1))"


def test_ice_text_parses_to_builder_output():
    s = generate("auction:3:blind")
    built = F.mk_explainability(s, "bidder1", P("!w1 & !o & Y o"), P("!w1"), "ICE")
    assert P(ICE_TEXT) == built
    assert F.check_well_formed(built, s) == []


def test_privacy_forms():
    assert P("G !K[bidder1] b2") == F.mk_privacy("bidder1", P("b2"))
    assert F.mk_privacy("bidder1", P("b2"), F.TRUE) == P("G !K[bidder1] b2")
    assert F.mk_privacy("player1", P("c2"), P("!w")) == P("G (!w -> !K[player1] c2)")
    assert F.mk_privacy("agent1", P("p2"), P("!d")) == P("G (!d -> !K[agent1] p2)")


def test_vacuous_quantifier():
    f = P("exists X . (p)")
    assert isinstance(f, F.ExistsCause)
    assert F.free_causal_vars(f) == []


def test_free_variable():
    with pytest.raises(ParseError, match="unbound"):
        P("X ~>[b1] !w1")
    f = P("X ~>[b1] !w1", allow_free=True)
    assert F.check_well_formed(f, generate("auction:2:blind")) == ["free variable X"]


def test_unknown_agent_and_prop():
    s = generate("auction:2:blind")
    assert "unknown agent ghost" in F.check_well_formed(P("K[ghost] o"), s)
    assert "unknown proposition zz" in F.check_well_formed(P("F zz"), s)
    bad = F.check_well_formed(P("exists X . X ~>[qq] o"), s)
    assert any("qq" in v for v in bad)


def test_explainability_action_sets():
    s = generate("pennies:3:blaming")
    ece = F.mk_explainability(s, "player1", P("!w"), P("!w"), "ECE")
    pred = [g for g in F.subformulas(ece) if isinstance(g, F.CausalPred)][0]
    assert set(pred.actions) == {"c2", "c3"}
    fce = F.mk_explainability(s, "player1", P("!w"), P("!w"), "FCE")
    pred = [g for g in F.subformulas(fce) if isinstance(g, F.CausalPred)][0]
    assert set(pred.actions) == s.actions
    with pytest.raises(FormulaError):
        F.mk_explainability(s, "player1", P("!w"), P("K[player1] w"), "ICE")


def test_action_macros():
    s = generate("auction:3:blind")
    f = P("exists X . X ~>[otheracts(bidder1)] !w1")
    pred = f.arg
    assert F.resolve_actions(pred, s) == {"o", "b2", "b3"}
    assert F.resolve_actions(P("exists X . X ~>[acts(bidder2), o] !w1").arg, s) == {"b2", "o"}
    assert F.resolve_actions(P("exists X . X ~>[allacts] !w1").arg, s) == s.actions


def test_desugar_examples():
    assert F.desugar(P("F p")) == F.Until(F.TRUE, F.Atom("p"))
    assert F.desugar(P("forall X . X ~>[a] p")) == F.Not(F.ExistsCause("X", F.Not(F.CausalPred("X", ("a",), F.Atom("p")))))
    core = P("p U (q S !r)")
    assert F.desugar(core) == core


def test_precedence():
    assert P("a U b U c") == F.Until(F.Atom("a"), F.Until(F.Atom("b"), F.Atom("c")))
    assert P("a & b | c") == F.Or(F.And(F.Atom("a"), F.Atom("b")), F.Atom("c"))
    assert P("a -> b -> c") == F.Implies(F.Atom("a"), F.Implies(F.Atom("b"), F.Atom("c")))
    assert P("!a U b") == F.Until(F.Not(F.Atom("a")), F.Atom("b"))
    assert P("a | b <-> c") == F.Iff(F.Or(F.Atom("a"), F.Atom("b")), F.Atom("c"))


def test_syntax_errors():
    for text in ["G (", "a &", "K[] p", "exists . p", "a ~>[b] c"]:
        with pytest.raises(ParseError):
            P(text)


@st.composite
def ltl(draw):
    rng = rng_for(draw(st.integers(0, 10**6)))
    return random_ltl(rng, ["p", "q", "r"], draw(st.integers(0, 4)))


@given(ltl())
@settings(max_examples=200)
def test_print_parse_roundtrip(f):
    assert P(F.to_text(f)) == f


@given(ltl())
@settings(max_examples=200)
def test_desugar_is_core_and_idempotent(f):
    d = F.desugar(f)
    assert F.is_core(d)
    assert F.desugar(d) == d


def test_roundtrip_on_requirements():
    for spec in ["auction:3:explain", "pennies:3:blaming", "rps:well"]:
        s = generate(spec)
        from explic.bench import requirement

        for r in ("ice", "ece", "fce", "priv"):
            f = requirement(s, r)
            assert P(F.to_text(f)) == f
            assert F.check_well_formed(f, s) == []
