"""Extended transition systems: data model, text format, validation and the
benchmark generators (Dutch auction, rock-paper-scissors, matching pennies)."""

import itertools
import re
from dataclasses import dataclass

from dd.autoref import BDD

from . import boolexpr as bx
from .errors import ModelError, ParseError


@dataclass(frozen=True)
class Edge:
    source: str
    guard: bx.Guard
    outputs: frozenset
    target: str


@dataclass(frozen=True)
class AgentView:
    agent: str
    obs: frozenset
    acts: frozenset


@dataclass(frozen=True)
class ExtendedTransitionSystem:
    name: str
    states: tuple
    initial: frozenset
    edges: tuple
    atomic_props: frozenset
    actions: frozenset
    agents: tuple  # AgentView, sorted by agent name

    @property
    def outputs(self):
        return self.atomic_props - self.actions

    @property
    def agent_names(self):
        return tuple(a.agent for a in self.agents)

    def agent(self, name):
        for a in self.agents:
            if a.agent == name:
                return a
        raise ModelError(f"unknown agent {name!r}")

    def edges_from(self, state):
        return tuple(e for e in self.edges if e.source == state)


def make_system(name, states, initial, edges, atomic_props, actions, agents, validate=True):
    """Build a canonical (sorted) system and check its invariants."""
    views = []
    for a in agents:
        if isinstance(a, AgentView):
            views.append(a)
        else:
            agent, obs, acts = a
            views.append(AgentView(agent, frozenset(obs), frozenset(acts)))
    edge_objs = []
    for e in edges:
        if not isinstance(e, Edge):
            src, guard, outs, dst = e
            if isinstance(guard, str):
                guard = bx.parse_guard(guard)
            e = Edge(src, guard, frozenset(outs), dst)
        edge_objs.append(e)
    edge_objs.sort(key=lambda e: (e.source, e.target, str(e.guard), sorted(e.outputs)))
    sys = ExtendedTransitionSystem(
        name=name,
        states=tuple(sorted(set(states))),
        initial=frozenset(initial),
        edges=tuple(edge_objs),
        atomic_props=frozenset(atomic_props),
        actions=frozenset(actions),
        agents=tuple(sorted(views, key=lambda v: v.agent)),
    )
    if validate:
        validate_system(sys)
    return sys


def validate_system(sys):
    if not sys.initial:
        raise ModelError("empty initial state set")
    states = set(sys.states)
    for s in sys.initial:
        if s not in states:
            raise ModelError(f"initial state {s!r} is not declared")
    if not sys.actions <= sys.atomic_props:
        raise ModelError(f"actions not in aps: {sorted(sys.actions - sys.atomic_props)}")
    names = set()
    for a in sys.agents:
        if a.agent in names:
            raise ModelError(f"duplicate agent {a.agent!r}")
        names.add(a.agent)
        if not a.obs <= sys.atomic_props:
            raise ModelError(f"agent {a.agent}: unknown proposition(s) {sorted(a.obs - sys.atomic_props)}")
        if not a.acts <= sys.actions:
            raise ModelError(f"agent {a.agent}: acts must be actions, got {sorted(a.acts - sys.actions)}")
        if not a.acts <= a.obs:
            raise ModelError(f"agent {a.agent}: acts must be observable (Act(a) subset of obs)")
    for e in sys.edges:
        if e.source not in states or e.target not in states:
            raise ModelError(f"edge {e.source} -> {e.target}: unknown state")
        bad = e.guard.variables() - sys.actions
        if bad:
            kind = "non-action" if bad <= sys.atomic_props else "unknown"
            raise ModelError(f"edge {e.source} -> {e.target}: guard mentions {kind} proposition(s) {sorted(bad)}")
        if e.outputs & sys.actions:
            raise ModelError(f"edge {e.source} -> {e.target}: output proposition listed as action {sorted(e.outputs & sys.actions)}")
        if not e.outputs <= sys.atomic_props:
            raise ModelError(f"edge {e.source} -> {e.target}: unknown output(s) {sorted(e.outputs - sys.atomic_props)}")
    _check_complete(sys)


def _check_complete(sys):
    acts = sorted(sys.actions)
    bdd = BDD()
    if acts:
        bdd.declare(*acts)
    for s in sys.states:
        cover = bdd.false
        for e in sys.edges_from(s):
            cover = cover | e.guard.to_bdd(bdd)
        if cover != bdd.true:
            missing = next(bdd.pick_iter(~cover, care_vars=acts))
            subset = sorted(a for a, v in missing.items() if v)
            raise ModelError(f"state {s!r} is not action-complete: no edge enabled for action subset {{{', '.join(subset)}}}")


def successors(sys, state, action_subset):
    action_subset = frozenset(action_subset)
    if not action_subset <= sys.actions:
        raise ModelError(f"not actions: {sorted(action_subset - sys.actions)}")
    out = {(e.target, e.outputs) for e in sys.edges_from(state) if e.guard.evaluate(action_subset)}
    if not out:
        raise ModelError(f"state {state!r} has no successor for {sorted(action_subset)}")
    return out


def action_subsets(sys):
    acts = sorted(sys.actions)
    for bits in itertools.product((False, True), repeat=len(acts)):
        yield frozenset(a for a, b in zip(acts, bits) if b)


def is_deterministic(sys):
    for s in sys.states:
        for sub in action_subsets(sys):
            if len(successors(sys, s, sub)) != 1:
                return False
    return True


def letter_moves(sys, state):
    """All (letter, target) pairs from ``state``; letter = actions | outputs."""
    moves = []
    for sub in action_subsets(sys):
        for tgt, outs in sorted(successors(sys, state, sub), key=lambda x: (x[0], sorted(x[1]))):
            moves.append((sub | outs, tgt))
    return moves


# ---------------------------------------------------------------- text format

def _names(items):
    return ", ".join(sorted(items))


def serialize_model(sys):
    lines = [f"system {sys.name} {{"]
    lines.append(f"  aps: {_names(sys.atomic_props)};")
    lines.append(f"  actions: {_names(sys.actions)};")
    lines.append("  agents {")
    for a in sys.agents:
        lines.append(f"    {a.agent} {{ acts: {_names(a.acts)}; obs: {_names(a.obs)}; }}")
    lines.append("  }")
    states = [s + ("*" if s in sys.initial else "") for s in sys.states]
    lines.append(f"  states: {', '.join(states)};")
    lines.append("  edges {")
    for e in sys.edges:
        lines.append(f"    {e.source} -> {e.target} [guard: {e.guard}; out: {{{_names(e.outputs)}}}];")
    lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")


class _Scanner:
    def __init__(self, text):
        self.text = text
        self.pos = 0

    def error(self, msg, pos=None):
        return ParseError(msg, self.pos if pos is None else pos, self.text)

    def skip(self):
        t = self.text
        while self.pos < len(t):
            if t[self.pos].isspace():
                self.pos += 1
            elif t.startswith("//", self.pos):
                nl = t.find("\n", self.pos)
                self.pos = len(t) if nl < 0 else nl + 1
            else:
                break

    def peek(self, lit):
        self.skip()
        return self.text.startswith(lit, self.pos)

    def expect(self, lit):
        self.skip()
        if not self.text.startswith(lit, self.pos):
            found = self.text[self.pos:self.pos + 10] or "end of input"
            raise self.error(f"expected {lit!r}, found {found!r}")
        self.pos += len(lit)

    def ident(self):
        self.skip()
        m = _IDENT.match(self.text, self.pos)
        if not m:
            found = self.text[self.pos:self.pos + 10] or "end of input"
            raise self.error(f"expected identifier, found {found!r}")
        self.pos = m.end()
        return m.group(0)

    def name_list(self, end):
        """Comma separated identifiers up to (not including) ``end``."""
        out = []
        if self.peek(end):
            return out
        while True:
            out.append((self.ident(), self.pos))
            if self.peek(","):
                self.expect(",")
                continue
            return out

    def until(self, stop):
        self.skip()
        j = self.text.find(stop, self.pos)
        if j < 0:
            raise self.error(f"expected {stop!r}")
        start, self.pos = self.pos, j
        return self.text[start:j], start


def parse_model(text):
    sc = _Scanner(text)
    sc.expect("system")
    name = sc.ident()
    sc.expect("{")
    aps = actions = None
    agents = []
    states, initial = [], []
    edges = []
    seen = set()
    while not sc.peek("}"):
        kw_pos = sc.pos
        kw = sc.ident()
        if kw in seen:
            raise sc.error(f"duplicate section {kw!r}", kw_pos)
        seen.add(kw)
        if kw == "aps":
            sc.expect(":")
            aps = [n for n, _ in sc.name_list(";")]
            sc.expect(";")
        elif kw == "actions":
            sc.expect(":")
            actions = sc.name_list(";")
            sc.expect(";")
        elif kw == "agents":
            sc.expect("{")
            while not sc.peek("}"):
                agent = sc.ident()
                sc.expect("{")
                fields = {}
                while not sc.peek("}"):
                    fpos = sc.pos
                    field = sc.ident()
                    if field not in ("acts", "obs"):
                        raise sc.error(f"unknown agent field {field!r}", fpos)
                    sc.expect(":")
                    fields[field] = sc.name_list(";")
                    sc.expect(";")
                sc.expect("}")
                agents.append((agent, fields.get("obs", []), fields.get("acts", [])))
            sc.expect("}")
        elif kw == "states":
            sc.expect(":")
            if not sc.peek(";"):
                while True:
                    s = sc.ident()
                    states.append(s)
                    if sc.peek("*"):
                        sc.expect("*")
                        initial.append(s)
                    if sc.peek(","):
                        sc.expect(",")
                        continue
                    break
            sc.expect(";")
        elif kw == "edges":
            sc.expect("{")
            while not sc.peek("}"):
                epos = sc.pos
                src = sc.ident()
                sc.expect("->")
                dst = sc.ident()
                sc.expect("[")
                sc.expect("guard")
                sc.expect(":")
                gtext, gpos = sc.until(";")
                guard = bx.parse_guard(gtext, gpos, text)
                sc.expect(";")
                outs = []
                if sc.peek("out"):
                    sc.expect("out")
                    sc.expect(":")
                    sc.expect("{")
                    outs = sc.name_list("}")
                    sc.expect("}")
                    if sc.peek(";"):
                        sc.expect(";")
                sc.expect("]")
                sc.expect(";")
                edges.append((src, guard, outs, dst, epos))
            sc.expect("}")
        else:
            raise sc.error(f"unknown section {kw!r}", kw_pos)
    sc.expect("}")
    sc.skip()
    if sc.pos != len(text):
        raise sc.error("trailing input after system block")
    if aps is None:
        raise sc.error("missing 'aps' section")
    ap_set = set(aps)
    act_names = []
    for a, pos in actions or []:
        if a not in ap_set:
            raise ParseError(f"unknown proposition {a!r} in actions", pos, text)
        act_names.append(a)
    for agent, obs, acts in agents:
        for p, pos in list(obs) + list(acts):
            if p not in ap_set:
                raise ParseError(f"unknown proposition {p!r} for agent {agent}", pos, text)
    state_set = set(states)
    for src, guard, outs, dst, epos in edges:
        for s in (src, dst):
            if s not in state_set:
                raise ParseError(f"unknown state {s!r}", epos, text)
        for p, pos in outs:
            if p not in ap_set:
                raise ParseError(f"unknown proposition {p!r} in outputs", pos, text)
    return make_system(
        name,
        states,
        initial,
        [(src, guard, [p for p, _ in outs], dst) for src, guard, outs, dst, _ in edges],
        aps,
        act_names,
        [(agent, [p for p, _ in obs], [p for p, _ in acts]) for agent, obs, acts in agents],
    )


# ---------------------------------------------------------------- generators

def generate_dutch_auction(n_bidders, variant="blind"):
    if n_bidders < 2:
        raise ModelError("the auction needs at least 2 bidders")
    if variant not in ("blind", "public", "explain"):
        raise ModelError(f"unknown auction variant {variant!r}")
    bidders = [f"b{i}" for i in range(1, n_bidders + 1)]
    wins = [f"w{i}" for i in range(1, n_bidders + 1)]
    acts = ["o"] + bidders
    aps = acts + wins + ["e"]
    emitted = ["e"] if variant == "explain" else []
    no_bid = bx.g_and(*[bx.g_not(bx.var(b)) for b in bidders])
    edges = [("init", bx.g_or(bx.g_not(bx.var("o")), no_bid), [], "init")]
    for i, (b, w) in enumerate(zip(bidders, wins), start=1):
        win = f"win{i}"
        edges.append(("init", bx.g_and(bx.var("o"), bx.var(b)), emitted, win))
        edges.append((win, bx.g_not(bx.var("o")), [w], "init"))
        edges.append((win, bx.var("o"), [], win))
    agents = [("auctioneer", ["o"], ["o"])]
    for i, (b, w) in enumerate(zip(bidders, wins), start=1):
        obs = {b, w, "o"}
        if variant == "public":
            obs |= set(acts)
        if variant == "explain":
            obs.add("e")
        agents.append((f"bidder{i}", obs, [b]))
    states = ["init"] + [f"win{i}" for i in range(1, n_bidders + 1)]
    return make_system(f"auction_{variant}_{n_bidders}", states, ["init"], edges, aps, acts, agents)


RPS_BEATS = {
    "standard": {("p", "r"), ("s", "p"), ("r", "s")},
    "well": {("p", "r"), ("s", "p"), ("r", "s"), ("w", "s"), ("w", "r"), ("p", "w")},
}


def generate_rps(variant="standard"):
    """Repeated rock-paper-scissors; a round where a player does not select
    exactly one object has no effect (no outputs)."""
    if variant not in RPS_BEATS:
        raise ModelError(f"unknown rps variant {variant!r}")
    objects = ["r", "p", "s"] + (["w"] if variant == "well" else [])
    beats = RPS_BEATS[variant]

    def picks(x, i):
        return bx.g_and(*[bx.var(f"{y}{i}") if y == x else bx.g_not(bx.var(f"{y}{i}")) for y in objects])

    def valid(i):
        return bx.g_or(*[picks(x, i) for x in objects])

    edges = []
    for x in objects:
        for y in objects:
            if x == y:
                out = ["d"]
            elif (y, x) in beats:
                out = ["l1"]
            else:
                out = ["l2"]
            edges.append(("play", bx.g_and(picks(x, 1), picks(y, 2)), out, "play"))
    edges.append(("play", bx.g_not(bx.g_and(valid(1), valid(2))), [], "play"))
    acts = [f"{x}{i}" for i in (1, 2) for x in objects]
    agents = []
    for i in (1, 2):
        own = [f"{x}{i}" for x in objects]
        agents.append((f"agent{i}", own + ["d", "l1", "l2"], own))
    return make_system(f"rps_{variant}", ["play"], ["play"], edges, acts + ["d", "l1", "l2"], acts, agents)


def generate_matching_pennies(n_players, blaming=False):
    if n_players < 2:
        raise ModelError("matching pennies needs at least 2 players")
    coins = [f"c{i}" for i in range(1, n_players + 1)]
    heads = [bx.var(c) for c in coins]
    tails = [bx.g_not(h) for h in heads]
    all_eq = bx.g_or(bx.g_and(*heads), bx.g_and(*tails))
    edges = [("play", all_eq, ["w"], "play")]
    special = [all_eq]
    aps = coins + ["w"]
    if blaming:
        aps += [f"b{i}" for i in range(1, n_players + 1)]
    if blaming and n_players >= 3:
        for i in range(n_players):
            sole = bx.g_or(
                bx.g_and(heads[i], *[tails[j] for j in range(n_players) if j != i]),
                bx.g_and(tails[i], *[heads[j] for j in range(n_players) if j != i]),
            )
            edges.append(("play", sole, [f"b{i + 1}"], "play"))
            special.append(sole)
    edges.append(("play", bx.g_not(bx.g_or(*special)), [], "play"))
    agents = []
    for i, c in enumerate(coins, start=1):
        obs = [c, "w"] + ([f"b{i}"] if blaming else [])
        agents.append((f"player{i}", obs, [c]))
    tag = "blaming" if blaming else "plain"
    return make_system(f"pennies_{tag}_{n_players}", ["play"], ["play"], edges, aps, coins, agents)


def generate(spec):
    """Generator spec strings: auction:N:VARIANT, rps:VARIANT, pennies:N[:blaming|plain]."""
    parts = spec.split(":")
    try:
        if parts[0] == "auction" and len(parts) == 3:
            return generate_dutch_auction(int(parts[1]), parts[2])
        if parts[0] == "rps" and len(parts) == 2:
            return generate_rps(parts[1])
        if parts[0] == "pennies" and len(parts) in (2, 3):
            mode = parts[2] if len(parts) == 3 else "plain"
            if mode not in ("blaming", "plain"):
                raise ModelError(f"unknown pennies mode {mode!r}")
            return generate_matching_pennies(int(parts[1]), mode == "blaming")
    except ValueError as exc:
        raise ModelError(f"bad generator spec {spec!r}: {exc}") from None
    raise ModelError(f"bad generator spec {spec!r}")
