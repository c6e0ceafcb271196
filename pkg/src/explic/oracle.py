"""Brute-force reference semantics over bounded lassos.

Every lasso is evaluated on one common window: a prefix of length ``P`` and a
loop of length ``L`` (a multiple of every loop length involved), long enough
that all subformula values are periodic from ``P`` on.  Values are tuples of
booleans indexed by window position.
"""

from dataclasses import dataclass
from functools import reduce
from itertools import product
from math import lcm

from . import automata as au
from . import formula as F
from .checker import ROOT, Verdict
from .errors import FragmentError, TraceError
from .system import letter_moves
from .trace import LassoTrace, letter_at, replay


@dataclass(frozen=True)
class BoundedConfig:
    prefix_bound: int = 6
    loop_bound: int = 3

    def __post_init__(self):
        if self.prefix_bound < 0 or self.loop_bound < 1:
            raise ValueError("bounds must be prefix >= 0 and loop >= 1")


@dataclass(frozen=True)
class Anchor:
    trace: LassoTrace
    time: int

    def __post_init__(self):
        if self.time < 0:
            raise ValueError("anchor time must be >= 0")


# ---------------------------------------------------------------- windows

def _past_depth(f):
    own = 1 if isinstance(f, (F.Prev, F.Since, F.Once, F.Historically)) else 0
    kids = f.children()
    if isinstance(f, F.CausalPred):
        kids = (f.effect,)
    return own + max((_past_depth(c) for c in kids), default=0)


class Window:
    def __init__(self, prefix, loop):
        self.P, self.L = prefix, loop
        self.N = prefix + loop

    def idx(self, i):
        return i if i < self.P else self.P + (i - self.P) % self.L

    def succ(self, k):
        return k + 1 if k + 1 < self.N else self.P

    def letters(self, t):
        return tuple(letter_at(t, k) for k in range(self.N))


def window_for(traces, f=None, prefix=0, loops=()):
    """A window where every given lasso (and any lasso with prefix <=
    ``prefix`` and loop length in ``loops``) has periodic values for f."""
    traces = list(traces)
    P = max([len(t.prefix) for t in traces] + [prefix])
    L = reduce(lcm, [len(t.loop) for t in traces] + list(loops), 1)
    depth = _past_depth(f) if f is not None else 0
    return Window(P + (depth + 1) * L, L)


def _ltl_values(f, W, letters, sub):
    """Truth values of a temporal formula along a window; ``sub`` evaluates
    non-temporal leaves (knowledge, quantifiers)."""
    N = W.N
    if isinstance(f, F.Atom):
        return tuple(f.name in letters[k] for k in range(N))
    if isinstance(f, F.Const):
        return (f.value,) * N
    if isinstance(f, F.Not):
        return tuple(not x for x in _ltl_values(f.arg, W, letters, sub))
    if isinstance(f, (F.And, F.Or, F.Implies, F.Iff)):
        a = _ltl_values(f.left, W, letters, sub)
        b = _ltl_values(f.right, W, letters, sub)
        # b may be lazy (quantifier leaves); only read it where a does not decide
        if isinstance(f, F.And):
            return tuple(x and b[k] for k, x in enumerate(a))
        if isinstance(f, F.Or):
            return tuple(x or b[k] for k, x in enumerate(a))
        if isinstance(f, F.Implies):
            return tuple((not x) or b[k] for k, x in enumerate(a))
        return tuple(x == b[k] for k, x in enumerate(a))
    if isinstance(f, F.Next):
        a = _ltl_values(f.arg, W, letters, sub)
        return tuple(a[W.succ(k)] for k in range(N))
    if isinstance(f, F.Prev):
        a = _ltl_values(f.arg, W, letters, sub)
        return (False,) + tuple(a[k - 1] for k in range(1, N))
    if isinstance(f, F.Once):
        return _ltl_values(F.Since(F.TRUE, f.arg), W, letters, sub)
    if isinstance(f, F.Historically):
        return _ltl_values(F.Not(F.Since(F.TRUE, F.Not(f.arg))), W, letters, sub)
    if isinstance(f, F.Eventually):
        return _ltl_values(F.Until(F.TRUE, f.arg), W, letters, sub)
    if isinstance(f, F.Globally):
        return _ltl_values(F.Not(F.Until(F.TRUE, F.Not(f.arg))), W, letters, sub)
    if isinstance(f, F.Since):
        a = _ltl_values(f.left, W, letters, sub)
        b = _ltl_values(f.right, W, letters, sub)
        out = []
        for k in range(N):
            out.append(b[k] or (k > 0 and a[k] and out[k - 1]))
        return tuple(out)
    if isinstance(f, F.Until):
        a = _ltl_values(f.left, W, letters, sub)
        b = _ltl_values(f.right, W, letters, sub)
        val = [False] * N
        changed = True
        while changed:  # least fixpoint
            changed = False
            for k in range(N - 1, -1, -1):
                v = b[k] or (a[k] and val[W.succ(k)])
                if v != val[k]:
                    val[k] = v
                    changed = True
        return tuple(val)
    return sub(f)


def eval_ltl_on_lasso(t, i, f):
    """Exact truth of a K-free, quantifier-free formula at position i of t."""
    if not F.is_temporal(f):
        raise FragmentError("eval_ltl_on_lasso needs a K-free, quantifier-free formula")
    W = window_for([t], f)

    def sub(g):
        raise FragmentError(f"unexpected node {type(g).__name__}")

    return _ltl_values(f, W, W.letters(t), sub)[W.idx(i)]


# ---------------------------------------------------------------- enumeration

def _move_table(sys):
    table = {}
    for s in sys.states:
        m = {}
        for x, tgt in letter_moves(sys, s):
            m.setdefault(x, set()).add(tgt)
        table[s] = m
    return table


def _words(table, states, length, pos=0, keep=None):
    """Words of ``length`` readable from the state set, with the reached set.
    ``keep(position, letter)`` filters letters."""
    if length == 0:
        yield (), states
        return
    letters = {}
    for s in states:
        for x, tgts in table[s].items():
            letters.setdefault(x, set()).update(tgts)
    for x in sorted(letters, key=lambda y: sorted(y)):
        if keep is not None and not keep(pos, x):
            continue
        for rest, end in _words(table, frozenset(letters[x]), length - 1, pos + 1, keep):
            yield (x,) + rest, end


def enumerate_system_lassos(sys, cfg, keep=None):
    """All canonical lassos of initial paths within the bounds, in a fixed order."""
    table = _move_table(sys)
    seen = set()
    out = []
    for p in range(cfg.prefix_bound + 1):
        for u, S in _words(table, frozenset(sys.initial), p, 0, keep):
            for ln in range(1, cfg.loop_bound + 1):
                for v, _ in _words(table, S, ln, p, keep):
                    t = LassoTrace(u, v).canonical()
                    if t in seen:
                        continue
                    seen.add(t)
                    if replay(sys, t) is not None:
                        out.append(t)
    return out


def enumerate_lassos(props, cfg):
    """All canonical lassos over 2^props within the bounds."""
    props = sorted(props)
    letters = [frozenset(p for j, p in enumerate(props) if bits >> j & 1) for bits in range(1 << len(props))]
    seen = set()
    out = []

    def words(n):
        if n == 0:
            yield ()
            return
        for w in words(n - 1):
            for x in letters:
                yield w + (x,)

    for p in range(cfg.prefix_bound + 1):
        for u in words(p):
            for ln in range(1, cfg.loop_bound + 1):
                for v in words(ln):
                    t = LassoTrace(u, v).canonical()
                    if t not in seen:
                        seen.add(t)
                        out.append(t)
    return out


# ---------------------------------------------------------------- fragment evaluation

def _fragment_error(f):
    """None if f is in the supported fragment, else a message."""
    if isinstance(f, F.Know):
        if not F.is_temporal(f.arg):
            return f"K[{f.agent}] is applied to a formula with knowledge or causes"
        return None
    if isinstance(f, F.ForallCause):
        return "universal cause quantifiers are outside the oracle fragment"
    if isinstance(f, F.ExistsCause):
        body = f.arg.arg if isinstance(f.arg, F.Know) else f.arg
        if not (isinstance(body, F.CausalPred) and body.var == f.var and F.is_temporal(body.effect)):
            return "exists X must scope a single causal predicate, optionally under one K"
        return None
    if isinstance(f, F.CausalPred):
        return "causal predicate outside exists X"
    for c in f.children():
        msg = _fragment_error(c)
        if msg:
            return msg
    return None


class _Lazy:
    """Sequence of booleans computed position by position on first access."""

    def __init__(self, fn, n):
        self.fn, self.n, self.cells = fn, n, {}

    def __len__(self):
        return self.n

    def __getitem__(self, k):
        if k not in self.cells:
            self.cells[k] = self.fn(k)
        return self.cells[k]

    def __iter__(self):
        return (self[k] for k in range(self.n))


def _minimal(masks):
    """The subset-minimal bit masks."""
    out = []
    for m in sorted(set(masks), key=lambda x: (x.bit_count(), x)):
        if not any(b & ~m == 0 for b in out):
            out.append(m)
    return out


class _Oracle:
    def __init__(self, sys, cfg, f=None, lassos=None):
        self.sys = sys
        self.cfg = cfg
        self.lassos = enumerate_system_lassos(sys, cfg) if lassos is None else lassos
        self.W = window_for(self.lassos, f, cfg.prefix_bound, range(1, cfg.loop_bound + 1))
        self.letters = {t: self.W.letters(t) for t in self.lassos}
        self.memo = {}
        self.obs_keys = {}
        self.cause_memo = {}
        self.cands = {}
        self.fixed = {}
        self.table = None
        self.seqs = {}
        self.refuted = {}

    # -- values along the window

    def values(self, f, t, letters=None):
        key = (f, t)
        got = self.memo.get(key)
        if got is None:
            got = _ltl_values(f, self.W, letters or self.letters[t], lambda g: self.leaf(g, t))
            self.memo[key] = got
        return got

    def leaf(self, g, t):
        W = self.W
        if isinstance(g, F.Know):
            return tuple(all(self.values(g.arg, u)[k] for u in self.equiv(t, g.agent, k)) for k in range(W.N))
        if isinstance(g, F.ExistsCause):
            body = g.arg
            if isinstance(body, F.CausalPred):
                return (True,) * W.N
            pred = body.arg
            A = F.resolve_actions(pred, self.sys)

            def known(k):
                mine = self.cause_at(t, k, pred.effect, A)
                return all(self.cause_at(u, k, pred.effect, A) == mine for u in self.equiv(t, body.agent, k))

            return _Lazy(known, W.N)
        raise FragmentError(f"{type(g).__name__} outside the oracle fragment")

    def equiv(self, t, agent, k):
        keys = self.obs_keys.get(agent)
        if keys is None:
            obs = self.sys.agent(agent).obs
            # histories are interned, so one id names one observation prefix
            keys, ids, groups = {}, {}, {}
            for u in self.lassos:
                acc = []
                h = -1
                for x in self.letters[u]:
                    h = ids.setdefault((h, x & obs), len(ids))
                    acc.append(h)
                    groups.setdefault(h, []).append(u)
                keys[u] = acc
            keys = self.obs_keys[agent] = (keys, groups)
        return keys[1][keys[0][t][k]]

    # -- causes

    def candidates(self, A):
        got = self.cands.get(A)
        if got is None:
            traces = enumerate_lassos(A, self.cfg)
            props = sorted(A)
            got = (traces, [self._seq(self.W.letters(c), props) for c in traces])
            self.cands[A] = got
        return got

    def _seq(self, letters, props):
        """Bit vector of ``props`` along the window."""
        m = 0
        for k, x in enumerate(letters):
            for j, p in enumerate(props):
                if p in x:
                    m |= 1 << (k * len(props) + j)
        return m

    def _fixed_groups(self, A):
        got = self.fixed.get(A)
        if got is None:
            fixed = self.sys.actions - A
            got = {}
            for u in self.lassos:
                got.setdefault(tuple(x & fixed for x in self.letters[u]), []).append(u)
            self.fixed[A] = got
        return got

    def cause_at(self, t, k, effect, A, letters=None):
        props = sorted(A)
        fixed = self.sys.actions - A
        tl = letters or self.letters[t]
        ts = self._seq(tl, props)
        gkey = (tuple(x & fixed for x in tl), k, effect, A)
        # the cause depends on t only through its action projections
        key = (gkey, ts)
        got = self.cause_memo.get(key)
        if got is not None:
            return got
        falsifiers = self.seqs.get(gkey)
        if falsifiers is None:
            same = self._fixed_groups(A).get(gkey[0], [])
            falsifiers = self.seqs[gkey] = [self._seq(self.letters[u], props) for u in same
                                            if not self.values(effect, u)[k]]
        bad = _minimal(b ^ ts for b in falsifiers)
        traces, seqs = self.candidates(A)
        diffs = [cs ^ ts for cs in seqs]
        # candidates no enumerated counterfactual refutes; check them against
        # longer counterfactuals, widest difference first (the cause is
        # downward closed, so one confirmed mask vouches for all its subsets)
        open_ = sorted({cm for cm in diffs if not any(b & ~cm == 0 for b in bad)},
                       key=lambda m: (-m.bit_count(), m))
        good, worse = [], []
        for cm in open_:
            if any(cm & ~g == 0 for g in good):
                continue
            if any(b & ~cm == 0 for b in worse) or self._refuted(tl, k, effect, props, cm):
                worse.append(cm)
            else:
                good.append(cm)
        members = [c for c, cm in zip(traces, diffs) if any(cm & ~g == 0 for g in good)]
        got = frozenset(members)
        self.cause_memo[key] = got
        return got

    def _refuted(self, tl, k, effect, props, cm):
        """Is there a system trace that keeps the fixed actions of ``tl``,
        changes A only where ``cm`` allows, and falsifies the effect at k?"""
        W = self.W
        fixed = self.sys.actions - frozenset(props)
        n = len(props)
        shape = tuple((tl[j] & fixed, tuple((p in tl[j]) if not cm >> (j * n + b) & 1 else None
                                            for b, p in enumerate(props))) for j in range(W.N))
        rkey = (shape, k, effect)
        if rkey in self.refuted:
            return self.refuted[rkey]
        if self.table is None:
            self.table = _move_table(self.sys)

        def allowed(j, x):
            y = tl[j]
            if x & fixed != y & fixed:
                return False
            for b, p in enumerate(props):
                if not cm >> (j * n + b) & 1 and (p in x) != (p in y):
                    return False
            return True

        horizon = _future_horizon(effect)
        if horizon is not None:
            found = self._refuted_bounded(allowed, k, effect, k + horizon + 1)
            self.refuted[rkey] = found
            return found

        found = self._refuted_search(allowed, k, effect)
        self.refuted[rkey] = found
        return found

    def _refuted_search(self, allowed, k, effect):
        """Exact search for an allowed system path with the effect false at
        time k.  Nodes carry the state, window position, a clock saturating
        at k+1, the letter and the value of every subformula; untils open in
        the tail must be fulfilled inside one strongly connected component."""
        W, table = self.W, self.table
        subs = _postorder(F.desugar(effect))
        at = {g: n for n, g in enumerate(subs)}
        root = at[F.desugar(effect)]
        untils = [(at[g], at[g.left], at[g.right]) for g in subs if isinstance(g, F.Until)]

        def valuations(x, before):
            free = [n for n, g in enumerate(subs) if isinstance(g, (F.Next, F.Until))]
            for bits in product((False, True), repeat=len(free)):
                guess = dict(zip(free, bits))
                v = []
                ok = True
                for n, g in enumerate(subs):
                    if isinstance(g, F.Atom):
                        b = g.name in x
                    elif isinstance(g, F.Const):
                        b = g.value
                    elif isinstance(g, F.Not):
                        b = not v[at[g.arg]]
                    elif isinstance(g, F.And):
                        b = v[at[g.left]] and v[at[g.right]]
                    elif isinstance(g, F.Or):
                        b = v[at[g.left]] or v[at[g.right]]
                    elif isinstance(g, F.Next):
                        b = guess[n]
                    elif isinstance(g, F.Prev):
                        b = before is not None and before[at[g.arg]]
                    elif isinstance(g, F.Since):
                        b = v[at[g.right]] or (v[at[g.left]] and before is not None and before[n])
                    else:  # Until: forced unless the left holds and the right does not
                        b = guess[n]
                        l, r = v[at[g.left]], v[at[g.right]]
                        if b != (r or (l and b)):
                            ok = False
                            break
                    v.append(b)
                if ok:
                    yield tuple(v)

        def consistent(v, w):
            for n, g in enumerate(subs):
                if isinstance(g, F.Next) and v[n] != w[at[g.arg]]:
                    return False
                if isinstance(g, F.Until) and v[at[g.left]] and not v[at[g.right]] and v[n] != w[n]:
                    return False
            return True

        def expand(s, j, c, x, v):
            out = []
            j2, c2 = W.succ(j), min(c + 1, k + 1)
            for s2 in table[s][x]:
                for x2 in table[s2]:
                    if allowed(j2, x2):
                        for w in valuations(x2, v):
                            if consistent(v, w) and (c2 != k or not w[root]):
                                out.append((s2, j2, c2, x2, w))
            return out

        start = [(s0, 0, 0, x, v) for s0 in sorted(self.sys.initial) for x in table[s0] if allowed(0, x)
                 for v in valuations(x, None) if k != 0 or not v[root]]
        ids, nodes, succ, todo = {}, [], {}, []

        def intern(node):
            if node not in ids:
                ids[node] = len(nodes)
                nodes.append(node)
                todo.append(node)
            return ids[node]

        for node in start:
            intern(node)
        while todo:
            node = todo.pop()
            succ[ids[node]] = [intern(m) for m in expand(*node)]
        tail = [i for i, node in enumerate(nodes) if node[2] == k + 1]
        if not tail:
            return False
        local = {i: n for n, i in enumerate(tail)}
        tsucc = [[local[m] for m in succ[i] if m in local] for i in tail]
        for comp in au.sccs(len(tail), tsucc):
            if len(comp) == 1 and comp[0] not in tsucc[comp[0]]:
                continue
            vals = [nodes[tail[i]][4] for i in comp]
            if all(any(not v[u] or v[r] for v in vals) for u, _, r in untils):
                return True
        return False

    def _refuted_bounded(self, allowed, k, effect, h):
        """_refuted for effects that look at most ``h`` letters ahead: the
        first h letters decide the effect, the rest only has to exist."""
        W, table = self.W, self.table
        live = {(s, j) for s in self.sys.states for j in range(W.N)}
        changed = True
        while changed:  # greatest fixpoint: nodes with an infinite allowed path
            changed = False
            for s, j in list(live):
                if not any(allowed(j, x) and (t, W.succ(j)) in live for x, ts in table[s].items() for t in ts):
                    live.discard((s, j))
                    changed = True
        pad = (frozenset(),)

        def go(i, states, word):
            if i == h:
                return not eval_ltl_on_lasso(LassoTrace(tuple(word), pad), k, effect)
            j, nj = W.idx(i), W.idx(i + 1)
            nxt = {}
            for s in states:
                for x, ts in table[s].items():
                    if allowed(j, x):
                        alive = {t for t in ts if (t, nj) in live}
                        if alive:
                            nxt.setdefault(x, set()).update(alive)
            for x in sorted(nxt, key=sorted):
                word.append(x)
                if go(i + 1, nxt[x], word):
                    return True
                word.pop()
            return False

        start = {s for s in self.sys.initial if (s, 0) in live}
        return bool(start) and go(0, start, [])


def _postorder(f):
    out, seen = [], set()

    def go(g):
        if g in seen:
            return
        for c in g.children():
            go(c)
        seen.add(g)
        out.append(g)

    go(f)
    return out


def _future_horizon(f):
    """How many letters past the current one decide f, or None if unbounded."""
    if isinstance(f, (F.Until, F.Eventually, F.Globally)):
        return None
    kids = [_future_horizon(c) for c in f.children()]
    if None in kids:
        return None
    return (1 if isinstance(f, F.Next) else 0) + max(kids, default=0)


def oracle_cause(sys, anchor, effect, A, cfg):
    """Bounded cause set at the anchor: lassos over 2^A (within cfg) in the cause."""
    if replay(sys, anchor.trace) is None:
        raise TraceError("anchor trace is not an initial path of the system")
    if not F.is_temporal(effect):
        raise FragmentError("cause effects must be K-free and quantifier-free")
    t = anchor.trace
    fixed = sys.actions - frozenset(A)
    lassos = enumerate_system_lassos(sys, cfg, lambda k, x: x & fixed == letter_at(t, k) & fixed)
    o = _Oracle(sys, cfg, effect, lassos)
    # the anchor trace and time may lie outside the enumeration bounds
    W = window_for(o.lassos + [t], effect, max(cfg.prefix_bound, anchor.time + 1), range(1, cfg.loop_bound + 1))
    o.W = W
    o.letters = {u: W.letters(u) for u in o.lassos}
    return o.cause_at(t, W.idx(anchor.time), effect, frozenset(A), letters=W.letters(t))


def oracle_check(sys, f, cfg):
    """Verdict of the bounded semantics; raises FragmentError outside the fragment."""
    msg = _fragment_error(f)
    if msg:
        raise FragmentError(msg)
    o = _Oracle(sys, cfg, f)
    v = Verdict(holds=True, model=sys.name, formula=F.to_text(f), source=f)
    for t in o.lassos:
        if not o.values(f, t)[0]:
            v.holds = False
            v.counterexample = {ROOT: t}
            break
    v.stats = {"oracle": {"states": len(o.lassos), "millis": 0.0}}
    return v


def knowledge_values(sys, f, cfg):
    """(lasso, position, value of K, value of its argument) for every K
    subformula of f, over the enumeration; for property tests."""
    o = _Oracle(sys, cfg, f)
    out = []
    for g in F.subformulas(f):
        if isinstance(g, F.Know):
            for t in o.lassos:
                kv, av = o.values(g, t), o.values(g.arg, t)
                out.extend((t, k, kv[k], av[k]) for k in range(o.W.N))
    return out
