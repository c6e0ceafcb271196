import pytest

from explic.errors import ModelError, ParseError
from explic.system import (action_subsets, generate, generate_dutch_auction, generate_matching_pennies,
                           generate_rps, is_deterministic, make_system, parse_model, serialize_model, successors)

FIG1 = """
system auction {
  aps: o, b1, b2, b3, e, w1, w2, w3;
  actions: o, b1, b2, b3;
  agents {
    auctioneer { acts: o; obs: o; }
    bidder1 { acts: b1; obs: b1, w1, o, e; }
    bidder2 { acts: b2; obs: b2, w2, o, e; }
    bidder3 { acts: b3; obs: b3, w3, o, e; }
  }
  states: init*, win1, win2, win3;
  edges {
    init -> init [guard: !o | (!b1 & !b2 & !b3); out: {}];
    init -> win1 [guard: o & b1; out: {e}];
    init -> win2 [guard: o & b2; out: {e}];
    init -> win3 [guard: o & b3; out: {e}];
    win1 -> init [guard: !o; out: {w1}];
    win1 -> win1 [guard: o; out: {}];
    win2 -> init [guard: !o; out: {w2}];
    win2 -> win2 [guard: o; out: {}];
    win3 -> init [guard: !o; out: {w3}];
    win3 -> win3 [guard: o; out: {}];
  }
}
"""


def test_parse_fig1():
    s = parse_model(FIG1)
    assert len(s.states) == 4
    assert s.atomic_props == {"o", "b1", "b2", "b3", "e", "w1", "w2", "w3"}
    assert s.initial == {"init"}


def test_parse_matches_generator():
    a, b = parse_model(FIG1), generate_dutch_auction(3, "explain")
    assert a.edges == b.edges and a.agents == b.agents and a.atomic_props == b.atomic_props


def test_trivial_system():
    s = parse_model("system t { aps: ; actions: ; agents { } states: s*; edges { s -> s [guard: true; out: {}]; } }")
    assert s.states == ("s",)
    assert is_deterministic(s)


def test_missing_self_loop_is_incomplete():
    text = FIG1.replace("init -> init [guard: !o | (!b1 & !b2 & !b3); out: {}];", "")
    with pytest.raises(ModelError, match="init.*action subset \\{\\}"):
        parse_model(text)


def test_syntax_error_position():
    with pytest.raises(ParseError, match="line"):
        parse_model("system x { aps: a; actions a; }")


def test_output_listed_as_action():
    with pytest.raises(ModelError, match="output proposition listed as action"):
        make_system("x", ["s"], ["s"], [("s", "true", ["a"], "s")], ["a"], ["a"], [("u", ["a"], ["a"])])


def test_unknown_agent_prop():
    with pytest.raises(ModelError, match="unknown proposition"):
        make_system("x", ["s"], ["s"], [("s", "true", [], "s")], ["a"], ["a"], [("u", ["a", "zz"], ["a"])])


def test_empty_initial():
    with pytest.raises(ModelError, match="empty initial"):
        make_system("x", ["s"], [], [("s", "true", [], "s")], [], [], [])


def test_successors_fig1():
    s = generate("auction:3:explain")
    assert successors(s, "init", {"o", "b1"}) == {("win1", frozenset({"e"}))}
    assert successors(s, "init", set()) == {("init", frozenset())}
    assert successors(s, "init", {"o", "b1", "b2"}) == {("win1", frozenset({"e"})), ("win2", frozenset({"e"}))}


def test_auction_observations():
    s = generate_dutch_auction(2, "blind")
    assert s.agent("bidder1").obs == {"b1", "w1", "o"}
    pub = generate_dutch_auction(5, "public")
    assert len(pub.actions) == 6
    # init plus one win state per bidder (see the decisions ledger)
    assert len(pub.states) == 6
    assert pub.agent("bidder1").obs >= pub.actions


def test_rps_outcomes():
    std = generate_rps("standard")
    both_r = {"r1", "r2"}
    assert successors(std, "play", both_r) == {("play", frozenset({"d"}))}
    assert successors(std, "play", {"r1", "p2"}) == {("play", frozenset({"l1"}))}
    well = generate_rps("well")
    assert successors(well, "play", {"w1", "s2"}) == {("play", frozenset({"l2"}))}
    assert successors(well, "play", {"p1", "w2"}) == {("play", frozenset({"l2"}))}


def test_pennies_outputs():
    s = generate_matching_pennies(3, True)
    assert successors(s, "play", {"c1"}) == {("play", frozenset({"b1"}))}
    assert successors(generate_matching_pennies(2, False), "play", {"c1", "c2"}) == {("play", frozenset({"w"}))}
    assert successors(generate_matching_pennies(4, True), "play", {"c1", "c2"}) == {("play", frozenset())}
    assert generate_matching_pennies(3, True).agent("player2").obs == {"c2", "w", "b2"}


def test_pennies_deterministic_by_enumeration():
    for n in (2, 3, 4):
        for blaming in (False, True):
            s = generate_matching_pennies(n, blaming)
            assert is_deterministic(s)
            count = max(len(successors(s, st_, sub)) for st_ in s.states for sub in action_subsets(s))
            assert count == 1


def test_auction_nondeterministic():
    for n in (2, 3, 4):
        for v in ("blind", "public", "explain"):
            assert not is_deterministic(generate_dutch_auction(n, v))


@pytest.mark.parametrize("spec", ["auction:2:blind", "auction:4:public", "auction:3:explain", "rps:standard",
                                  "rps:well", "pennies:2", "pennies:3:blaming", "pennies:4:plain"])
def test_generated_complete_and_roundtrip(spec):
    s = generate(spec)
    for st_ in s.states:
        for sub in action_subsets(s):
            assert successors(s, st_, sub)
    text = serialize_model(s)
    again = parse_model(text)
    assert again == s
    assert serialize_model(again) == text


@pytest.mark.parametrize("spec", ["auction:1:blind", "pennies:1", "rps:huge", "auction:3:secret", "nope"])
def test_bad_generator_specs(spec):
    with pytest.raises(ModelError):
        generate(spec)
