"""Büchi automata with BDD edge guards.

Propositions of an automaton's support are plain strings (BDD variable
names). Tagged copies of system propositions are written ``p@tag``; helper
variables (markers, monitor bits) start with ``$``.

States are integers ``0..n-1``; ``edges[s]`` is a list of ``(guard, target)``.
"""

import contextvars
import itertools
import logging
import time
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache

from dd.autoref import BDD

from . import formula as F
from .errors import FormulaError, ResourceLimit
from .trace import LassoTrace, letter_at

log = logging.getLogger(__name__)

BDD_MANAGER = BDD()
_declared = set()
_fresh = itertools.count()


def bvar(name):
    if name not in _declared:
        BDD_MANAGER.declare(name)
        _declared.add(name)
    return BDD_MANAGER.var(name)


TRUE = BDD_MANAGER.true
FALSE = BDD_MANAGER.false


def fresh(prefix):
    return f"${prefix}{next(_fresh)}"


def tagged(prop, tag):
    return f"{prop}@{tag}"


def split_tag(name):
    prop, _, tag = name.rpartition("@")
    return (prop, tag) if prop else (name, None)


# ---------------------------------------------------------------- limits

@dataclass
class Limits:
    cap: int = 1_000_000
    deadline: float = None
    stats: dict = field(default_factory=dict)

    def check_states(self, count, what):
        if count > self.cap:
            raise ResourceLimit(f"{what} exceeded the state cap of {self.cap}")

    def check_time(self):
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise ResourceLimit("timeout")

    def record(self, phase, states, seconds):
        entry = self.stats.setdefault(phase, {"states": 0, "millis": 0.0})
        entry["states"] = max(entry["states"], states)
        entry["millis"] += seconds * 1000.0


_limits = contextvars.ContextVar("explic_limits", default=None)


def limits():
    cur = _limits.get()
    if cur is None:
        cur = Limits()
        _limits.set(cur)
    return cur


class use_limits:
    """Context manager installing a fresh :class:`Limits` for one run."""

    def __init__(self, cap=1_000_000, timeout=None):
        deadline = None if timeout is None else time.monotonic() + timeout
        self.limits = Limits(cap=cap, deadline=deadline)

    def __enter__(self):
        self.token = _limits.set(self.limits)
        return self.limits

    def __exit__(self, *exc):
        _limits.reset(self.token)
        return False


class _phase:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def done(self, states):
        limits().record(self.name, states, time.perf_counter() - self.t0)

    def __exit__(self, *exc):
        return False


# ---------------------------------------------------------------- automaton

class BuchiAutomaton:
    __slots__ = ("support", "n", "init", "edges", "acc")

    def __init__(self, support, n, init, edges, acc):
        self.support = frozenset(support)
        self.n = n
        self.init = tuple(sorted(set(init)))
        self.edges = edges
        self.acc = frozenset(acc)

    def __repr__(self):
        m = sum(len(e) for e in self.edges)
        return f"<BuchiAutomaton states={self.n} edges={m} acc={len(self.acc)} support={sorted(self.support)}>"

    @property
    def states(self):
        return range(self.n)

    def successors(self, s):
        return [t for g, t in self.edges[s]]

    def with_support(self, support):
        extra = set(support)
        return BuchiAutomaton(self.support | extra, self.n, self.init, self.edges, self.acc)


def _merge_edges(pairs):
    """Merge parallel edges (same target) by disjunction; drop false guards."""
    acc = {}
    for g, t in pairs:
        if g == FALSE:
            continue
        acc[t] = acc[t] | g if t in acc else g
    return [(g, t) for t, g in acc.items()]


def build(support, init, edges, acc):
    """Build from an explicit edge map keyed by arbitrary hashable states."""
    index = {}
    order = []
    for s in list(init) + list(edges):
        if s not in index:
            index[s] = len(order)
            order.append(s)
    for s in list(edges):
        for _, t in edges[s]:
            if t not in index:
                index[t] = len(order)
                order.append(t)
    out = [[] for _ in order]
    for s, lst in edges.items():
        out[index[s]] = _merge_edges((g, index[t]) for g, t in lst)
    return BuchiAutomaton(support, len(order), [index[s] for s in init], out, [index[s] for s in acc if s in index])


def universal(support=()):
    return BuchiAutomaton(support, 1, [0], [[(TRUE, 0)]], [0])


def empty(support=()):
    return BuchiAutomaton(support, 1, [0], [[]], [])


def single_state(support, guard):
    """One accepting state with a ``guard`` self-loop: language guard^omega."""
    return BuchiAutomaton(support, 1, [0], [[(guard, 0)]] if guard != FALSE else [[]], [0])


# ---------------------------------------------------------------- graph utils

def sccs(n, succ):
    """Tarjan's algorithm (iterative). Returns list of SCCs (lists of nodes)."""
    index = [None] * n
    low = [0] * n
    on = [False] * n
    stack = []
    out = []
    counter = 0
    for root in range(n):
        if index[root] is not None:
            continue
        work = [(root, 0)]
        while work:
            v, i = work[-1]
            if i == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on[v] = True
            nbrs = succ[v]
            if i < len(nbrs):
                work[-1] = (v, i + 1)
                w = nbrs[i]
                if index[w] is None:
                    work.append((w, 0))
                elif on[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on[w] = False
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def _succ_lists(a):
    return [[t for _, t in a.edges[s]] for s in range(a.n)]


def _nontrivial(comp, succ):
    return len(comp) > 1 or comp[0] in succ[comp[0]]


def accepting_scc_states(a):
    """States lying on an SCC that contains an accepting state and a cycle."""
    succ = _succ_lists(a)
    good = set()
    for comp in sccs(a.n, succ):
        if _nontrivial(comp, succ) and any(s in a.acc for s in comp):
            good.update(comp)
    return good


def is_weak(a):
    succ = _succ_lists(a)
    for comp in sccs(a.n, succ):
        if not _nontrivial(comp, succ):
            continue
        flags = {s in a.acc for s in comp}
        if len(flags) > 1:
            return False
    return True


def _reachable(a):
    seen = set(a.init)
    todo = list(a.init)
    while todo:
        s = todo.pop()
        for _, t in a.edges[s]:
            if t not in seen:
                seen.add(t)
                todo.append(t)
    return seen


def _restrict(a, keep):
    """Renumber ``a`` keeping only the states in ``keep``."""
    keep = sorted(keep)
    if not keep or not any(s in keep for s in a.init):
        return empty(a.support)
    idx = {s: i for i, s in enumerate(keep)}
    edges = [[(g, idx[t]) for g, t in a.edges[s] if t in idx] for s in keep]
    return BuchiAutomaton(a.support, len(keep), [idx[s] for s in a.init if s in idx], edges, [idx[s] for s in a.acc if s in idx])


def trim(a):
    """Drop unreachable states and states with empty language."""
    reach = _reachable(a)
    succ = _succ_lists(a)
    live = set()
    for comp in sccs(a.n, succ):
        if comp[0] in reach and _nontrivial(comp, succ) and any(s in a.acc for s in comp):
            live.update(comp)
    # backward closure
    pred = [[] for _ in range(a.n)]
    for s in range(a.n):
        for t in succ[s]:
            pred[t].append(s)
    todo = list(live)
    while todo:
        t = todo.pop()
        for s in pred[t]:
            if s not in live:
                live.add(s)
                todo.append(s)
    return _restrict(a, live & reach)


def is_trivially_empty(a):
    return not a.acc or all(not a.edges[s] for s in range(a.n))


# ---------------------------------------------------------------- reductions

def bisim_reduce(a):
    """Quotient by forward bisimulation (same acceptance, same guarded
    successor classes); language preserving."""
    if a.n <= 1:
        return a
    cls = [1 if s in a.acc else 0 for s in range(a.n)]
    ncls = len(set(cls))
    while True:
        sigs = {}
        new = []
        for s in range(a.n):
            by = {}
            for g, t in a.edges[s]:
                c = cls[t]
                by[c] = by[c] | g if c in by else g
            sig = (cls[s], frozenset((c, int(g)) for c, g in by.items()))
            if sig not in sigs:
                sigs[sig] = len(sigs)
            new.append(sigs[sig])
        if len(sigs) == ncls:
            cls = new
            break
        cls, ncls = new, len(sigs)
    if ncls == a.n:
        return a
    rep = {}
    for s in range(a.n):
        rep.setdefault(cls[s], s)
    order = sorted(rep)
    idx = {c: i for i, c in enumerate(order)}
    edges = [_merge_edges((g, idx[cls[t]]) for g, t in a.edges[rep[c]]) for c in order]
    acc = {idx[cls[s]] for s in a.acc}
    init = {idx[cls[s]] for s in a.init}
    return BuchiAutomaton(a.support, len(order), init, edges, acc)


def collapse_uniform(a):
    """Merge every state whose whole forward closure carries a single guard g
    into an accepting g-sink. Requires a trimmed automaton."""
    cand = {}
    for s in range(a.n):
        gs = {int(g) for g, _ in a.edges[s]}
        if len(gs) == 1:
            cand[s] = a.edges[s][0][0]
    changed = True
    while changed:
        changed = False
        for s in list(cand):
            g = cand[s]
            for _, t in a.edges[s]:
                if t not in cand or cand[t] != g:
                    del cand[s]
                    changed = True
                    break
    if not cand:
        return a
    sinks = {}
    for s, g in cand.items():
        sinks.setdefault(int(g), g)
    # nothing to gain if every candidate is already a lone sink
    if len(cand) == len(sinks) and all(len(a.edges[s]) == 1 and a.edges[s][0][1] == s and s in a.acc for s in cand):
        return a
    keep = [s for s in range(a.n) if s not in cand]
    idx = {s: i for i, s in enumerate(keep)}
    sink_idx = {k: len(keep) + i for i, k in enumerate(sinks)}

    def tgt(t):
        return sink_idx[int(cand[t])] if t in cand else idx[t]

    edges = [_merge_edges((g, tgt(t)) for g, t in a.edges[s]) for s in keep]
    for k, g in sinks.items():
        edges.append([(g, sink_idx[k])])
    acc = {idx[s] for s in a.acc if s in idx} | set(sink_idx.values())
    init = {tgt(s) for s in a.init}
    return BuchiAutomaton(a.support, len(edges), init, edges, acc)


def reduce(a):
    a = trim(a)
    if a.n > 1:
        a = bisim_reduce(collapse_uniform(a))
        a = trim(a)
    return a


# ---------------------------------------------------------------- algebra

def product(a, b):
    """Intersection. Acceptance F1 x F2 when either side is weak (exact in that
    case), otherwise the two-phase degeneralized product."""
    with _phase("product") as ph:
        lim = limits()
        support = a.support | b.support
        if is_trivially_empty(a) or is_trivially_empty(b):
            return empty(support)
        simple = is_weak(a) or is_weak(b)
        init = [(p, q, 0) for p in a.init for q in b.init]
        index = {}
        order = []
        edges = []
        for s in init:
            index[s] = len(order)
            order.append(s)
            edges.append(None)
        todo = deque(range(len(order)))
        while todo:
            i = todo.popleft()
            p, q, k = order[i]
            if simple:
                k2 = 0
            elif k == 0:
                k2 = 1 if p in a.acc else 0
            else:
                k2 = 0 if q in b.acc else 1
            out = []
            for g1, p2 in a.edges[p]:
                for g2, q2 in b.edges[q]:
                    g = g1 & g2
                    if g == FALSE:
                        continue
                    key = (p2, q2, k2)
                    j = index.get(key)
                    if j is None:
                        j = index[key] = len(order)
                        order.append(key)
                        edges.append(None)
                        todo.append(j)
                    out.append((g, j))
            edges[i] = _merge_edges(out)
            if len(order) % 4096 == 0:
                lim.check_states(len(order), "product")
                lim.check_time()
        if simple:
            acc = [i for i, (p, q, _) in enumerate(order) if p in a.acc and q in b.acc]
        else:
            acc = [i for i, (p, q, k) in enumerate(order) if k == 1 and q in b.acc]
        res = BuchiAutomaton(support, len(order), range(len(init)), edges, acc)
        ph.done(res.n)
        return res


def product_all(automata):
    automata = list(automata)
    out = automata[0]
    for b in automata[1:]:
        out = reduce(product(out, b))
    return out


def union(a, b):
    off = a.n
    edges = [list(e) for e in a.edges] + [[(g, t + off) for g, t in e] for e in b.edges]
    return BuchiAutomaton(a.support | b.support, a.n + b.n, list(a.init) + [s + off for s in b.init], edges,
                          set(a.acc) | {s + off for s in b.acc})


def project(a, away):
    away = set(away) & a.support
    if not away:
        return a
    names = sorted(away)
    edges = [_merge_edges((BDD_MANAGER.exist(names, g), t) for g, t in a.edges[s]) for s in range(a.n)]
    return BuchiAutomaton(a.support - away, a.n, a.init, edges, a.acc)


def project_onto(a, keep):
    return project(a, a.support - set(keep))


def rename(a, mapping):
    """Rename support variables (old -> new); new names must be fresh."""
    mapping = {k: v for k, v in mapping.items() if k in a.support and k != v}
    if not mapping:
        return a
    for v in mapping.values():
        bvar(v)
    edges = [[(BDD_MANAGER.let(mapping, g), t) for g, t in a.edges[s]] for s in range(a.n)]
    support = {mapping.get(p, p) for p in a.support}
    return BuchiAutomaton(support, a.n, a.init, edges, a.acc)


# ---------------------------------------------------------------- letters

def letter_classes(pairs):
    """Partition the alphabet by a list of (source, guard, target) edges.
    Returns [(class_guard, frozenset((source, target), ...))], classes with
    equal enabled sets merged."""
    by_guard = {}
    for s, g, t in pairs:
        key = int(g)
        if key not in by_guard:
            by_guard[key] = (g, [])
        by_guard[key][1].append((s, t))
    classes = [(TRUE, frozenset())]
    for g, st in by_guard.values():
        st = frozenset(st)
        new = []
        for c, enabled in classes:
            c1 = c & g
            if c1 == FALSE:
                new.append((c, enabled))
                continue
            new.append((c1, enabled | st))
            c0 = c & ~g
            if c0 != FALSE:
                new.append((c0, enabled))
        classes = new
    merged = {}
    for c, enabled in classes:
        merged[enabled] = merged[enabled] | c if enabled in merged else c
    return [(c, e) for e, c in merged.items()]


# ---------------------------------------------------------------- complement

def complement(a):
    with _phase("complement") as ph:
        support = a.support
        a = reduce(a)
        if is_trivially_empty(a):
            res = universal(support)
        elif is_weak(a):
            res = _complement_weak(a)
        else:
            res = _complement_rank(a)
        res = reduce(res.with_support(support))
        ph.done(res.n)
        return res


def _classes_for(a, states, cache):
    key = frozenset(states)
    got = cache.get(key)
    if got is None:
        got = letter_classes([(s, g, t) for s in key for g, t in a.edges[s]])
        cache[key] = got
    return got


def _complement_weak(a):
    """Miyano-Hayashi breakpoint construction, exact for weak automata."""
    lim = limits()
    good = accepting_scc_states(a)
    cache = {}
    start = (frozenset(a.init), frozenset())
    index = {start: 0}
    order = [start]
    edges = [None]
    todo = deque([0])
    while todo:
        i = todo.popleft()
        S, O = order[i]
        out = []
        for c, enabled in _classes_for(a, S, cache):
            S2 = frozenset(t for _, t in enabled)
            if O:
                O2 = frozenset(t for s, t in enabled if s in O and t in good)
            else:
                O2 = frozenset(t for t in S2 if t in good)
            key = (S2, O2)
            j = index.get(key)
            if j is None:
                j = index[key] = len(order)
                order.append(key)
                edges.append(None)
                todo.append(j)
                if len(order) % 1024 == 0:
                    lim.check_states(len(order), "complement")
                    lim.check_time()
            out.append((c, j))
        edges[i] = _merge_edges(out)
    lim.check_states(len(order), "complement")
    acc = [i for i, (S, O) in enumerate(order) if not O]
    return BuchiAutomaton(a.support, len(order), [0], edges, acc)


def _tight_rankings(states, bounds, accepting, only=None):
    """Tight level rankings over ``states`` (sorted tuple) with per-state upper
    bounds. Accepting states get even ranks. Also yields the all-zero
    ranking, which is a valid (if non-tight) level ranking. ``only`` fixes
    the maximal odd rank (-1 for the all-zero ranking)."""
    flags = tuple(s in accepting for s in states)
    return _rankings(tuple(bounds[s] for s in states), flags, only)


@lru_cache(maxsize=200000)
def _rankings(bounds, flags, only):
    n = len(bounds)
    if n == 0:
        return ((),)
    out = []
    if only in (None, -1) and all(b >= 0 for b in bounds):
        out.append((0,) * n)
    if only == -1:
        return tuple(out)
    # free[k]: non-accepting states at positions >= k
    free = [0] * (n + 1)
    for k in range(n - 1, -1, -1):
        free[k] = free[k + 1] + (not flags[k])
    odd_tops = [b if b % 2 else b - 1 for b, f in zip(bounds, flags) if not f]
    max_odd = max(odd_tops, default=-1)
    choice = [0] * n
    for r in range(1, max_odd + 1, 2):
        if only is not None and r != only:
            continue
        full = (1 << ((r + 1) // 2)) - 1

        def rec(k, have):
            missing = bin(full & ~have).count("1")
            if missing > free[k]:
                return
            if k == n:
                out.append(tuple(choice))
                if len(out) % 4096 == 0:
                    lim = limits()
                    lim.check_states(len(out), "complement rankings")
                    lim.check_time()
                return
            top = min(bounds[k], r)
            for v in range(top, -1, -1):
                if v % 2:
                    if flags[k]:
                        continue
                    choice[k] = v
                    rec(k + 1, have | (1 << (v // 2)))
                else:
                    choice[k] = v
                    rec(k + 1, have)

        rec(0, 0)
    return tuple(out)


def _complement_rank(a):
    """Rank-based complementation with tight rankings: a subset phase, then a
    guessed ranking phase with the odd-rank breakpoint."""
    lim = limits()
    cache = {}
    acc_states = a.acc
    top = 2 * (a.n - len(a.acc & set(range(a.n)))) - 1
    start = ("S", frozenset(a.init))
    index = {start: 0}
    order = [start]
    edges = [None]
    todo = deque([0])

    def add(key, out, c):
        j = index.get(key)
        if j is None:
            j = index[key] = len(order)
            order.append(key)
            edges.append(None)
            todo.append(j)
            if len(order) % 1024 == 0:
                lim.check_states(len(order), "complement")
                lim.check_time()
        out.append((c, j))

    while todo:
        i = todo.popleft()
        st = order[i]
        out = []
        if st[0] == "S":
            S = st[1]
            for c, enabled in _classes_for(a, S, cache):
                S2 = tuple(sorted({t for _, t in enabled}))
                add(("S", frozenset(S2)), out, c)
                bounds = {t: top for t in S2}
                for f2 in _tight_rankings(S2, bounds, acc_states):
                    add(("R", tuple(zip(S2, f2)), frozenset()), out, c)
        else:
            _, f, O = st
            fmap = dict(f)
            odd = [r for r in fmap.values() if r % 2]
            r_max = max(odd) if odd else -1
            for c, enabled in _classes_for(a, fmap.keys(), cache):
                bounds = {}
                for s, t in enabled:
                    r = fmap[s]
                    bounds[t] = min(bounds.get(t, r), r)
                S2 = tuple(sorted(bounds))
                # the maximal odd rank of a run DAG stabilises, so keep it fixed
                for f2 in _tight_rankings(S2, bounds, acc_states, only=r_max):
                    even = {t for t, r in zip(S2, f2) if r % 2 == 0}
                    if O:
                        O2 = frozenset(t for s, t in enabled if s in O and t in even)
                    else:
                        O2 = frozenset(even)
                    add(("R", tuple(zip(S2, f2)), O2), out, c)
        edges[i] = _merge_edges(out)
    lim.check_states(len(order), "complement")
    acc = [i for i, st in enumerate(order) if st[0] == "R" and not st[2]]
    return BuchiAutomaton(a.support, len(order), [0], edges, acc)


# ---------------------------------------------------------------- emptiness

def find_lasso(a):
    """Accepting lasso as (prefix states/guards, loop states/guards) or None."""
    succ = _succ_lists(a)
    reach = _reachable(a)
    target = None
    comp_of = {}
    for comp in sccs(a.n, succ):
        cs = set(comp)
        if comp[0] in reach and _nontrivial(comp, succ):
            accs = [s for s in comp if s in a.acc]
            if accs:
                target = min(accs)
                for s in comp:
                    comp_of[s] = cs
                break
    if target is None:
        return None
    # shortest path from an initial state to target
    parent = {s: None for s in a.init}
    q = deque(a.init)
    while q:
        s = q.popleft()
        if s == target:
            break
        for g, t in a.edges[s]:
            if t not in parent:
                parent[t] = (s, g)
                q.append(t)
    prefix = []
    cur = target
    while parent[cur] is not None:
        s, g = parent[cur]
        prefix.append(g)
        cur = s
    prefix.reverse()
    # shortest cycle through target inside its SCC
    cs = comp_of[target]
    par = {}
    q = deque()
    for g, t in a.edges[target]:
        if t in cs and t not in par:
            par[t] = (target, g)
            q.append(t)
    while q and target not in par:
        s = q.popleft()
        for g, t in a.edges[s]:
            if t in cs and t not in par:
                par[t] = (s, g)
                q.append(t)
    loop = []
    cur = target
    while True:
        s, g = par[cur]
        loop.append(g)
        cur = s
        if cur == target:
            break
    loop.reverse()
    return prefix, loop


def concretize(guard, support):
    """Lexicographically smallest satisfying letter (as the set of true vars)."""
    g = guard
    out = set()
    for v in sorted(support):
        lit = bvar(v)
        if g & ~lit != FALSE:
            g = g & ~lit
        else:
            g = g & lit
            out.add(v)
    return frozenset(out)


def is_empty(a):
    """None if L(a) is empty, otherwise a lasso word of L(a) over a.support."""
    with _phase("emptiness") as ph:
        res = find_lasso(a)
        ph.done(a.n)
    if res is None:
        return None
    prefix, loop = res
    return LassoTrace(tuple(concretize(g, a.support) for g in prefix), tuple(concretize(g, a.support) for g in loop))


def accepts(a, word):
    """Membership of a lasso word (letters = sets of true support vars)."""
    return find_lasso(product(a, lasso_automaton(word, a.support))) is not None


def language_equiv(a, b):
    support = a.support | b.support
    a, b = a.with_support(support), b.with_support(support)
    return is_empty(product(a, complement(b))) is None and is_empty(product(b, complement(a))) is None


def included(a, b):
    return is_empty(product(a, complement(b.with_support(a.support | b.support)))) is None


# ---------------------------------------------------------------- small automata

def bxor(a, b):
    return (a & ~b) | (~a & b)


def biff(a, b):
    return (a & b) | (~a & ~b)


def literal(v, value):
    return bvar(v) if value else ~bvar(v)


def cube(values):
    g = TRUE
    for v, b in values.items():
        g = g & literal(v, b)
    return g


def letter_guard(x, props, rename=lambda p: p):
    return cube({rename(p): p in x for p in props})


def lasso_automaton(word, support, rename=lambda p: p, marker=None, at=None):
    """Deterministic automaton for one lasso over ``support`` (unrenamed
    names), optionally with ``marker`` true exactly at position ``at``."""
    props = sorted(support)
    plen = len(word.prefix)
    if at is not None:
        plen = max(plen, at + 1)
    llen = len(word.loop)
    n = plen + llen
    edges = []
    for j in range(n):
        g = letter_guard(letter_at(word, j), props, rename)
        if marker is not None:
            g = g & literal(marker, j == at)
        edges.append([(g, j + 1 if j + 1 < n else plen)])
    sup = {rename(p) for p in props} | ({marker} if marker else set())
    return BuchiAutomaton(sup, n, [0], edges, range(n))


def exactly_once(m):
    lm = bvar(m)
    return BuchiAutomaton({m}, 2, [0], [[(~lm, 0), (lm, 1)], [(~lm, 1)]], [1])


def at_zero(m):
    lm = bvar(m)
    return BuchiAutomaton({m}, 2, [0], [[(lm, 1)], [(~lm, 1)]], [1])


def never(q):
    return single_state({q}, ~bvar(q))


def mark_at(m, i):
    lm = bvar(m)
    edges = [[(~lm, j + 1)] for j in range(i)] + [[(lm, i + 1)], [(~lm, i + 1)]]
    return BuchiAutomaton({m}, i + 2, [0], edges, [i + 1])


def at_marker(k, q):
    """q holds at the (unique) k-marked position."""
    lk, lq = bvar(k), bvar(q)
    return BuchiAutomaton({k, q}, 2, [0], [[(~lk, 0), (lk & lq, 1)], [(~lk, 1)]], [1])


def equal_upto_marker(props1, props2, m):
    """Latch: paired props agree at every position up to and including the
    m-marked one; afterwards unconstrained. m holds exactly once."""
    eq = TRUE
    for p, q in zip(props1, props2):
        eq = eq & biff(bvar(p), bvar(q))
    lm = bvar(m)
    support = set(props1) | set(props2) | {m}
    return BuchiAutomaton(support, 2, [0], [[(eq & ~lm, 0), (eq & lm, 1)], [(~lm, 1)]], [1])


def system_automaton(sys, tag, props=None):
    """Initial paths of ``sys`` on ``tag``-props; props outside ``props`` are
    projected away."""
    names = sorted(sys.atomic_props)
    props = set(names) if props is None else set(props)
    for p in names:
        bvar(tagged(p, tag))
    index = {s: k for k, s in enumerate(sys.states)}
    away = [tagged(p, tag) for p in names if p not in props]
    edges = [[] for _ in sys.states]
    for e in sys.edges:
        g = e.guard.to_bdd(BDD_MANAGER, lambda a: tagged(a, tag))
        for o in sorted(sys.outputs):
            g = g & literal(tagged(o, tag), o in e.outputs)
        if away:
            g = BDD_MANAGER.exist(away, g)
        edges[index[e.source]].append((g, index[e.target]))
    edges = [_merge_edges(es) for es in edges]
    support = {tagged(p, tag) for p in names if p in props}
    a = BuchiAutomaton(support, len(sys.states), [index[s] for s in sys.initial], edges, range(len(sys.states)))
    return reduce(a)


def restrict_to_system(a, sys, tag):
    """L(a) intersected with the words whose ``tag`` part is a system trace."""
    return product(a, system_automaton(sys, tag))


# ---------------------------------------------------------------- LTL -> NBA
#
# Internal formulas are tuples:
#   ('ap', v) ('true',) ('false',) ('not', f) ('and', f, g) ('or', f, g)
#   ('X', f) ('Y', f) ('U', f, g) ('S', f, g)
# The tableau works on NNF over: ap, nap, true, false, and, or, X, U, R.

def from_formula(f, rename=lambda p: p):
    """Translate a temporal Formula into internal tuples, renaming atoms."""
    if isinstance(f, F.Atom):
        return ("ap", rename(f.name))
    if isinstance(f, F.Const):
        return ("true",) if f.value else ("false",)
    if isinstance(f, F.Not):
        return ("not", from_formula(f.arg, rename))
    if isinstance(f, F.And):
        return ("and", from_formula(f.left, rename), from_formula(f.right, rename))
    if isinstance(f, F.Or):
        return ("or", from_formula(f.left, rename), from_formula(f.right, rename))
    if isinstance(f, F.Implies):
        return ("or", ("not", from_formula(f.left, rename)), from_formula(f.right, rename))
    if isinstance(f, F.Iff):
        a, b = from_formula(f.left, rename), from_formula(f.right, rename)
        return ("or", ("and", a, b), ("and", ("not", a), ("not", b)))
    if isinstance(f, F.Next):
        return ("X", from_formula(f.arg, rename))
    if isinstance(f, F.Prev):
        return ("Y", from_formula(f.arg, rename))
    if isinstance(f, F.Until):
        return ("U", from_formula(f.left, rename), from_formula(f.right, rename))
    if isinstance(f, F.Since):
        return ("S", from_formula(f.left, rename), from_formula(f.right, rename))
    if isinstance(f, F.Eventually):
        return ("U", ("true",), from_formula(f.arg, rename))
    if isinstance(f, F.Globally):
        return ("not", ("U", ("true",), ("not", from_formula(f.arg, rename))))
    if isinstance(f, F.Once):
        return ("S", ("true",), from_formula(f.arg, rename))
    if isinstance(f, F.Historically):
        return ("not", ("S", ("true",), ("not", from_formula(f.arg, rename))))
    raise FormulaError(f"ltl_to_nba: unsupported constructor {type(f).__name__}")


_T, _F = ("true",), ("false",)


def fold(f):
    """Constant folding on internal formulas (language preserving)."""
    op = f[0]
    if op in ("ap", "true", "false"):
        return f
    args = tuple(fold(g) for g in f[1:])
    if op == "not":
        a = args[0]
        return _F if a == _T else _T if a == _F else a[1] if a[0] == "not" else ("not", a)
    if op in ("and", "or"):
        a, b = args
        unit, zero = (_T, _F) if op == "and" else (_F, _T)
        if zero in args:
            return zero
        if a == unit or a == b:
            return b
        return a if b == unit else (op, a, b)
    if op == "X":
        return args[0] if args[0] in (_T, _F) else ("X", args[0])
    if op == "Y":  # Y true is false at time 0, so only Y false folds
        return _F if args[0] == _F else ("Y", args[0])
    a, b = args  # U and S
    if b in (_T, _F):
        return b
    if a == _F:
        return b
    return (op, a, b)


def _vars_of(f, out):
    if f[0] == "ap":
        out.add(f[1])
    else:
        for c in f[1:]:
            _vars_of(c, out)
    return out


_FUTURE = {"X", "U"}
_PAST = {"Y", "S"}


def _has(f, ops):
    if f[0] in ops:
        return True
    return any(_has(c, ops) for c in f[1:] if isinstance(c, tuple))


class _PastMonitor:
    """Abstracts past subformulas into monitor variables."""

    def __init__(self):
        self.mons = []  # (var, kind, args)
        self.known = {}
        self.defs = []  # (g var, future formula) with G(g <-> f)
        self.gdefs = {}

    def abstract(self, f):
        op = f[0]
        if op in ("ap", "true", "false"):
            return f
        if op in _PAST:
            args = tuple(self._propositional(self.abstract(c)) for c in f[1:])
            key = (op, args)
            if key not in self.known:
                v = fresh("y")
                bvar(v)
                self.known[key] = v
                self.mons.append((v, op, args))
            return ("ap", self.known[key])
        return (op,) + tuple(self.abstract(c) for c in f[1:])

    def _propositional(self, f):
        if not _has(f, _FUTURE):
            return f
        if f[0] in _FUTURE:
            if f not in self.gdefs:
                v = fresh("g")
                bvar(v)
                self.gdefs[f] = v
                self.defs.append((v, f))
            return ("ap", self.gdefs[f])
        return (f[0],) + tuple(self._propositional(c) for c in f[1:])


def _prop_bdd(f, env):
    op = f[0]
    if op == "ap":
        return env.get(f[1]) if f[1] in env else bvar(f[1])
    if op == "true":
        return TRUE
    if op == "false":
        return FALSE
    if op == "not":
        return ~_prop_bdd(f[1], env)
    if op == "and":
        return _prop_bdd(f[1], env) & _prop_bdd(f[2], env)
    if op == "or":
        return _prop_bdd(f[1], env) | _prop_bdd(f[2], env)
    raise FormulaError(f"not propositional: {op}")


def _monitor_automaton(mons):
    """Deterministic automaton constraining each monitor var to the truth of
    its past formula. State: one bit per monitor (previous value of the
    argument for Y, previous own value for S)."""
    names = [v for v, _, _ in mons]
    support = set(names)
    for _, _, args in mons:
        for a in args:
            _vars_of(a, support)
    start = tuple(False for _ in mons)
    index = {start: 0}
    order = [start]
    edges = []
    k = 0
    while k < len(order):
        bits = order[k]
        env = {}
        nxt = []
        guard = TRUE
        for (v, op, args), bit in zip(mons, bits):
            if op == "Y":
                val = TRUE if bit else FALSE
                nxt.append(_prop_bdd(args[0], env))
            else:
                a, b = _prop_bdd(args[0], env), _prop_bdd(args[1], env)
                val = b | (a & (TRUE if bit else FALSE))
                nxt.append(val)
            env[v] = val
            guard = guard & biff(bvar(v), val)
        out = []
        for combo in itertools.product((False, True), repeat=len(mons)):
            g = guard
            for b, ex in zip(combo, nxt):
                g = g & (ex if b else ~ex)
                if g == FALSE:
                    break
            if g == FALSE:
                continue
            if combo not in index:
                index[combo] = len(order)
                order.append(combo)
            out.append((g, index[combo]))
        edges.append(_merge_edges(out))
        k += 1
    return BuchiAutomaton(support, len(order), [0], edges, range(len(order)))


def _nnf(f, neg=False):
    op = f[0]
    if op == "ap":
        return ("nap", f[1]) if neg else f
    if op == "true":
        return ("false",) if neg else f
    if op == "false":
        return ("true",) if neg else f
    if op == "not":
        return _nnf(f[1], not neg)
    if op == "and":
        return ("or" if neg else "and", _nnf(f[1], neg), _nnf(f[2], neg))
    if op == "or":
        return ("and" if neg else "or", _nnf(f[1], neg), _nnf(f[2], neg))
    if op == "X":
        return ("X", _nnf(f[1], neg))
    if op == "U":
        return ("R" if neg else "U", _nnf(f[1], neg), _nnf(f[2], neg))
    raise FormulaError(f"unexpected operator in future fragment: {op}")


def _expand(state):
    """Tableau expansion: list of (guard, next obligations, postponed untils)."""
    out = []
    stack = [(list(state), TRUE, frozenset(), frozenset(), frozenset())]
    while stack:
        todo, guard, nxt, post, done = stack.pop()
        alive = True
        while todo and alive:
            f = todo.pop()
            if f in done:
                continue
            done = done | {f}
            op = f[0]
            if op == "true":
                continue
            if op == "false":
                alive = False
            elif op == "ap" or op == "nap":
                guard = guard & literal(f[1], op == "ap")
                alive = guard != FALSE
            elif op == "and":
                todo += [f[1], f[2]]
            elif op == "or":
                stack.append((todo + [f[2]], guard, nxt, post, done))
                todo = todo + [f[1]]
            elif op == "X":
                nxt = nxt | {f[1]}
            elif op == "U":
                stack.append((todo + [f[1]], guard, nxt | {f}, post | {f}, done))
                todo = todo + [f[2]]
            elif op == "R":
                stack.append((todo + [f[2]], guard, nxt | {f}, post, done))
                todo = todo + [f[2], f[1]]
        if alive:
            out.append((guard, nxt, post))
    return out


def _tableau(f):
    """Future NNF formula -> state-based Büchi automaton (degeneralized)."""
    lim = limits()
    start = frozenset([f])
    states = {start: 0}
    order = [start]
    trans = []
    k = 0
    while k < len(order):
        S = order[k]
        out = []
        for guard, nxt, post in _expand(S):
            nxt = frozenset(nxt)
            if nxt not in states:
                states[nxt] = len(order)
                order.append(nxt)
            out.append((guard, states[nxt], post))
        trans.append(out)
        k += 1
        if k % 512 == 0:
            lim.check_states(len(order), "tableau")
            lim.check_time()
    untils = sorted({u for out in trans for _, _, post in out for u in post}, key=repr)
    if not untils:
        edges = [_merge_edges((g, t) for g, t, _ in out) for out in trans]
        return BuchiAutomaton(set(), len(order), [0], edges, range(len(order)))
    n = len(untils)
    uidx = {u: i for i, u in enumerate(untils)}
    # degeneralize: (state, level); level n = a full round just completed
    index = {(0, 0): 0}
    dorder = [(0, 0)]
    edges = []
    k = 0
    while k < len(dorder):
        s, lvl = dorder[k]
        out = []
        base = 0 if lvl == n else lvl
        for g, t, post in trans[s]:
            bad = {uidx[u] for u in post}
            j = base
            while j < n and j not in bad:
                j += 1
            key = (t, j)
            if key not in index:
                index[key] = len(dorder)
                dorder.append(key)
            out.append((g, index[key]))
        edges.append(_merge_edges(out))
        k += 1
    acc = [i for i, (_, lvl) in enumerate(dorder) if lvl == n]
    return BuchiAutomaton(set(), len(dorder), [0], edges, acc)


def ltl_to_nba(f, support=None, rename=lambda p: p):
    """Büchi automaton for {w | w, 0 |= f}; ``f`` is a temporal Formula or an
    internal tuple formula."""
    with _phase("translate") as ph:
        t = f if isinstance(f, tuple) else from_formula(f, rename)
        sup = set(support) if support is not None else _vars_of(t, set())
        t = fold(t)
        for v in sup:
            bvar(v)
        for v in _vars_of(t, set()):
            bvar(v)
        mon = _PastMonitor()
        core = mon.abstract(t)
        for g, sub in mon.defs:
            iff = ("or", ("and", ("ap", g), sub), ("and", ("not", ("ap", g)), ("not", sub)))
            core = ("and", core, ("not", ("U", ("true",), ("not", iff))))
        tab = _tableau(_nnf(core))
        tab = BuchiAutomaton(_vars_of(core, set()), tab.n, tab.init, tab.edges, tab.acc)
        if mon.mons:
            res = product(tab, _monitor_automaton(mon.mons))
            hidden = {v for v, _, _ in mon.mons} | {g for g, _ in mon.defs}
            res = project(res, hidden)
        else:
            res = tab
        res = reduce(res.with_support(sup | (_vars_of(t, set()))))
        ph.done(res.n)
        return res


def ltl_pointed(f, marker, support=None):
    """Words with ``marker`` true exactly once, at a position where f holds."""
    t = f if isinstance(f, tuple) else from_formula(f)
    body = ("U", ("not", ("ap", marker)), ("and", ("ap", marker), t))
    return reduce(product(ltl_to_nba(body, support), exactly_once(marker)))


# ---------------------------------------------------------------- output

def guard_text(g):
    if g == TRUE:
        return "true"
    if g == FALSE:
        return "false"
    return BDD_MANAGER.to_expr(g)


def to_dot(a, name="A"):
    lines = [f"digraph {name} {{", "  rankdir=LR;", '  node [shape=circle];']
    for s in range(a.n):
        shape = "doublecircle" if s in a.acc else "circle"
        lines.append(f'  s{s} [shape={shape}, label="{s}"];')
    for i, s in enumerate(a.init):
        lines.append(f'  init{i} [shape=point]; init{i} -> s{s};')
    for s in range(a.n):
        for g, t in a.edges[s]:
            label = guard_text(g).replace('"', '\\"')
            lines.append(f'  s{s} -> s{t} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_hoa_like(a):
    """Plain-text dump for debugging (not a standard format)."""
    lines = [f"States: {a.n}", f"Start: {' '.join(map(str, a.init))}", f"AP: {' '.join(sorted(a.support))}",
             f"Acceptance: {' '.join(map(str, sorted(a.acc)))}", "--BODY--"]
    for s in range(a.n):
        lines.append(f"State: {s}{' {acc}' if s in a.acc else ''}")
        for g, t in a.edges[s]:
            lines.append(f"  [{guard_text(g)}] {t}")
    lines.append("--END--")
    return "\n".join(lines) + "\n"
