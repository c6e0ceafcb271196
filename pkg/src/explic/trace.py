"""Lasso traces and the trace relations used by causes and knowledge:
projection, observation equivalence, symmetric difference and similarity."""

import re
from dataclasses import dataclass
from math import lcm

from .errors import ParseError, TraceError


def letter(props=()):
    return frozenset(props)


@dataclass(frozen=True)
class LassoTrace:
    prefix: tuple
    loop: tuple

    def __post_init__(self):
        if len(self.loop) == 0:
            raise TraceError("lasso loop must be nonempty")
        object.__setattr__(self, "prefix", tuple(frozenset(x) for x in self.prefix))
        object.__setattr__(self, "loop", tuple(frozenset(x) for x in self.loop))

    def __str__(self):
        return format_trace(self)

    def letter_at(self, i):
        return letter_at(self, i)

    def canonical(self):
        prefix, loop = list(self.prefix), list(self.loop)
        loop = _min_period(loop)
        while prefix and prefix[-1] == loop[-1]:
            loop = [prefix.pop()] + loop[:-1]
        return LassoTrace(tuple(prefix), tuple(loop))

    def unrolled(self, prefix_len, loop_len):
        """Same word with prefix ``prefix_len`` (>= current) and loop ``loop_len``
        (a multiple of the current loop length)."""
        if prefix_len < len(self.prefix) or loop_len % len(self.loop):
            raise TraceError("can only unroll to a longer prefix and a multiple of the loop")
        return LassoTrace(
            tuple(letter_at(self, k) for k in range(prefix_len)),
            tuple(letter_at(self, prefix_len + k) for k in range(loop_len)),
        )

    @property
    def props(self):
        out = set()
        for x in self.prefix + self.loop:
            out |= x
        return frozenset(out)


def _min_period(loop):
    n = len(loop)
    for d in range(1, n + 1):
        if n % d == 0 and all(loop[k] == loop[k % d] for k in range(n)):
            return loop[:d]
    return loop


def letter_at(t, i):
    if i < 0:
        raise TraceError("negative time index")
    if i < len(t.prefix):
        return t.prefix[i]
    return t.loop[(i - len(t.prefix)) % len(t.loop)]


def same_word(t1, t2):
    return t1.canonical() == t2.canonical()


def window(*traces):
    """Common alignment (prefix length, loop length) for several lassos."""
    return max(len(t.prefix) for t in traces), lcm(*(len(t.loop) for t in traces))


def project(t, props):
    props = frozenset(props)
    return LassoTrace(tuple(x & props for x in t.prefix), tuple(x & props for x in t.loop)).canonical()


def obs_equiv_prefix(t1, t2, props, i):
    props = frozenset(props)
    return all(letter_at(t1, k) & props == letter_at(t2, k) & props for k in range(i + 1))


@dataclass(frozen=True)
class DiffSet:
    prefix_diffs: frozenset
    loop_diffs: frozenset
    alignment: tuple

    def is_empty(self):
        return not self.prefix_diffs and not self.loop_diffs

    def contains(self, prop, i):
        plen, llen = self.alignment
        if i < plen:
            return (prop, i) in self.prefix_diffs
        return (prop, (i - plen) % llen) in self.loop_diffs

    def realign(self, plen, llen):
        p0, l0 = self.alignment
        if plen < p0 or llen % l0:
            raise TraceError("invalid realignment")
        pre = frozenset((p, k) for p, _ in self.prefix_diffs | self.loop_diffs for k in range(plen) if self.contains(p, k))
        loop = frozenset(
            (p, k) for p, _ in self.prefix_diffs | self.loop_diffs for k in range(llen) if self.contains(p, plen + k)
        )
        return DiffSet(pre, loop, (plen, llen))

    def issubset(self, other):
        plen = max(self.alignment[0], other.alignment[0])
        llen = lcm(self.alignment[1], other.alignment[1])
        a, b = self.realign(plen, llen), other.realign(plen, llen)
        return a.prefix_diffs <= b.prefix_diffs and a.loop_diffs <= b.loop_diffs


def sym_diff(t1, t2, props):
    props = frozenset(props)
    plen, llen = window(t1, t2)
    pre = frozenset((p, k) for k in range(plen) for p in (letter_at(t1, k) ^ letter_at(t2, k)) & props)
    loop = frozenset(
        (p, k) for k in range(llen) for p in (letter_at(t1, plen + k) ^ letter_at(t2, plen + k)) & props
    )
    return DiffSet(pre, loop, (plen, llen))


def at_least_as_similar(t, tp, tpp, props):
    """t <=^A_tp tpp: t differs from tp (on A) only where tpp does."""
    return sym_diff(t, tp, props).issubset(sym_diff(tpp, tp, props))


def equal_on(t1, t2, props):
    return sym_diff(t1, t2, props).is_empty()


# ---------------------------------------------------------------- literals

_LETTER = re.compile(r"\{([^{}]*)\}")


def parse_trace(text):
    """Parse ``{o,b1} {o} ({})^w``: letters, then the loop in parentheses."""
    s = text.strip()
    m = re.search(r"\(([^()]*)\)\s*\^\s*w\s*$", s)
    if not m:
        raise ParseError("trace literal needs a loop '( ... )^w' at the end", len(s), text)
    prefix = _letters(s[: m.start()], 0, text)
    loop = _letters(m.group(1), m.start(1), text)
    if not loop:
        raise ParseError("empty loop in trace literal", m.start(1), text)
    return LassoTrace(tuple(prefix), tuple(loop))


def _letters(chunk, offset, text):
    out = []
    pos = 0
    while True:
        while pos < len(chunk) and chunk[pos].isspace():
            pos += 1
        if pos >= len(chunk):
            return out
        m = _LETTER.match(chunk, pos)
        if not m:
            raise ParseError("expected a letter '{...}'", offset + pos, text)
        names = [n.strip() for n in m.group(1).split(",") if n.strip()]
        for n in names:
            if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_'@]*", n):
                raise ParseError(f"bad proposition name {n!r}", offset + pos, text)
        out.append(frozenset(names))
        pos = m.end()


def format_letter(x):
    return "{" + ",".join(sorted(x)) + "}"


def format_trace(t):
    parts = [format_letter(x) for x in t.prefix]
    parts.append("(" + " ".join(format_letter(x) for x in t.loop) + ")^w")
    return " ".join(parts)


# ---------------------------------------------------------------- systems

def replay(sys, t):
    """A state sequence (prefix part, loop part) of an initial path producing
    ``t``, or None if ``t`` is not a trace of ``sys``."""
    from .system import successors

    t = t.canonical()
    acts = sys.actions

    def moves(state, x):
        if not x <= sys.atomic_props:
            return []
        return [tgt for tgt, outs in successors(sys, state, x & acts) if outs == x - acts]

    # unroll the prefix forwards, remembering parents for witness reconstruction
    plen, llen = len(t.prefix), len(t.loop)
    layers = [{s: None for s in sorted(sys.initial)}]
    for k in range(plen):
        nxt = {}
        for s in layers[-1]:
            for s2 in moves(s, t.prefix[k]):
                nxt.setdefault(s2, s)
        layers.append(nxt)
    # loop graph over (state, offset)
    start = list(layers[-1])
    graph = {}
    seen = set()
    stack = [(s, 0) for s in start]
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        s, j = node
        graph[node] = [(s2, (j + 1) % llen) for s2 in moves(s, t.loop[j])]
        stack.extend(graph[node])
    cyc = _cycle_from(graph, [(s, 0) for s in start])
    if cyc is None:
        return None
    path, loop_nodes = cyc
    # path: from some (s,0) start to the loop entry; loop_nodes: cycle
    entry = path[0][0]
    pre_states = [entry]
    for k in range(plen, 0, -1):
        pre_states.append(layers[k][pre_states[-1]])
    pre_states.reverse()  # states at positions 0..plen
    states = pre_states[:-1] + [n[0] for n in path[:-1]]
    cycle_states = [n[0] for n in loop_nodes]
    return states, cycle_states


def _cycle_from(graph, starts):
    """Find a path from a start node to a node on a cycle; returns
    (path including cycle entry, cycle nodes starting at entry) or None."""
    from collections import deque

    for st in starts:
        if st not in graph:
            continue
        parent = {st: None}
        order = deque([st])
        reach = [st]
        while order:
            n = order.popleft()
            for m in graph[n]:
                if m not in parent:
                    parent[m] = n
                    order.append(m)
                    reach.append(m)
        for n in reach:
            cyc = _cycle_through(graph, n)
            if cyc is not None:
                path = [n]
                while parent[path[-1]] is not None:
                    path.append(parent[path[-1]])
                path.reverse()
                return path, cyc
    return None


def _cycle_through(graph, node):
    from collections import deque

    parent = {}
    order = deque()
    for m in graph[node]:
        if m not in parent:
            parent[m] = node
            order.append(m)
    while order:
        n = order.popleft()
        if n == node:
            cyc = []
            cur = parent[node]
            while cur != node:
                cyc.append(cur)
                cur = parent[cur]
            cyc.append(node)
            cyc.reverse()
            return cyc
        for m in graph[n]:
            if m not in parent:
                parent[m] = n
                order.append(m)
    return None


def in_system(sys, t):
    return replay(sys, t) is not None
