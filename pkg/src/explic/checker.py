"""YLTL2 model checking by automata.

A formula is compiled bottom-up into Büchi automata over tagged propositions
(``p@tag``, one tag per quantified trace) plus position markers.  Every
compiled piece is *pointed*: its words carry a marker that is true exactly
once, at the position where the subformula is evaluated.  Knowledge and
cause-witness traces are existentially quantified by product with the system
automaton followed by projection; universal quantification is complement.
"""

import logging
import time
from dataclasses import dataclass, field

from . import automata as au
from . import formula as F
from .automata import BDD_MANAGER, TRUE, biff, bvar, bxor, tagged
from .errors import FormulaError, TraceError
from .trace import LassoTrace, format_trace, in_system, letter_at, replay

log = logging.getLogger(__name__)

ROOT = "alpha"
_QUANTIFIED = (F.Know, F.ExistsCause, F.CausalPred)


# ---------------------------------------------------------------- results

@dataclass
class Verdict:
    holds: bool
    counterexample: dict = None  # tag -> LassoTrace
    stats: dict = field(default_factory=dict)
    alternation_depth: int = 0
    model: str = ""
    formula: str = ""
    roles: dict = field(default_factory=dict)  # tag -> description
    anchors: dict = field(default_factory=dict)  # marker description -> position
    source: object = field(default=None, repr=False)  # the checked Formula
    automaton: object = field(default=None, repr=False)  # final product, when requested

    def to_json(self):
        cex = None
        if self.counterexample is not None:
            cex = {k: format_trace(t) for k, t in sorted(self.counterexample.items())}
        return {
            "model": self.model,
            "formula": self.formula,
            "holds": self.holds,
            "alternation_depth": self.alternation_depth,
            "counterexample": cex,
            "stats": {k: {"states": v["states"], "millis": round(v["millis"], 3)} for k, v in self.stats.items()},
        }


@dataclass
class CauseLanguage:
    automaton: object  # BuchiAutomaton over the plain names of action_set
    non_cause: object  # its complement
    anchor: int
    action_set: frozenset
    tag: str = None

    def contains(self, word):
        return au.accepts(self.automaton, _restrict_word(word, self.action_set))


def _restrict_word(t, props):
    props = frozenset(props)
    return LassoTrace(tuple(x & props for x in t.prefix), tuple(x & props for x in t.loop))


# ---------------------------------------------------------------- compiler

class Compiler:
    def __init__(self, sys):
        self.sys = sys
        self.counts = {}
        self.roles = {ROOT: "root trace"}
        self.markers = {}

    def _next(self, kind):
        n = self.counts.get(kind, 0) + 1
        self.counts[kind] = n
        return n

    def tag(self, kind, role):
        t = f"{kind}{self._next(kind)}"
        self.roles[t] = role
        return t

    def marker(self, kind, role=None):
        m = f"${kind}{self._next('$' + kind)}"
        bvar(m)
        if role:
            self.markers[m] = role
        return m

    def tvars(self, tag, props):
        out = []
        for p in sorted(props):
            v = tagged(p, tag)
            bvar(v)
            out.append(v)
        return out

    # -- system and relation automata

    def sys_aut(self, tag, props):
        """Initial paths of the system on ``tag``-props, restricted to ``props``."""
        self.tvars(tag, sorted(self.sys.atomic_props))
        return au.system_automaton(self.sys, tag, props)

    def sim_aut(self, sigma, pi, rho, A, acts):
        """sigma <=^A_pi rho together with sigma =_{Act minus A} pi, at every position."""
        g = TRUE
        for p in sorted(acts - A):
            g = g & biff(bvar(tagged(p, sigma)), bvar(tagged(p, pi)))
        for p in sorted(A):
            s, c, r = bvar(tagged(p, sigma)), bvar(tagged(p, pi)), bvar(tagged(p, rho))
            g = g & (~bxor(s, c) | bxor(r, c))
        return au.single_state(set(BDD_MANAGER.support(g)) if g != TRUE else set(), g)

    # -- formula compilation

    def skeleton(self, f, tag, neg, ep, leaves):
        """Internal tuple formula with quantified subformulas replaced by fresh
        marker atoms; ``leaves`` collects (marker, node, polarity, single_use)."""
        if isinstance(f, F.Atom):
            v = tagged(f.name, tag)
            bvar(v)
            return ("ap", v)
        if isinstance(f, F.Const):
            return ("true",) if f.value else ("false",)
        if isinstance(f, F.Not):
            return ("not", self.skeleton(f.arg, tag, not neg, ep, leaves))
        if isinstance(f, (F.And, F.Or)):
            op = "and" if isinstance(f, F.And) else "or"
            return (op, self.skeleton(f.left, tag, neg, ep, leaves), self.skeleton(f.right, tag, neg, ep, leaves))
        if isinstance(f, (F.Next, F.Prev)):
            return ("X" if isinstance(f, F.Next) else "Y", self.skeleton(f.arg, tag, neg, ep, leaves))
        if isinstance(f, (F.Until, F.Since)):
            op = "U" if isinstance(f, F.Until) else "S"
            # the right argument of a positive U/S (left of a negative one) is
            # needed at one position only
            left = self.skeleton(f.left, tag, neg, ep and neg, leaves)
            right = self.skeleton(f.right, tag, neg, ep and not neg, leaves)
            return (op, left, right)
        if isinstance(f, _QUANTIFIED):
            eff = not neg
            q = self.marker("q", _describe(f))
            leaves.append((q, f, eff, ep))
            return ("ap", q) if eff else ("not", ("ap", q))
        raise FormulaError(f"unexpected formula node {type(f).__name__}")

    def pointed(self, f, pol, tag, v, m, keep=False):
        """Words with m exactly once at a position where f (pol) / not f holds on ``tag``."""
        if isinstance(f, _QUANTIFIED):
            return self.quantified(f, pol, tag, v, m, keep)
        leaves = []
        sk = self.skeleton(f, tag, not pol, True, leaves)
        body = sk if pol else ("not", sk)
        aut = au.ltl_pointed(body, m)
        for q, node, eff, ep in leaves:
            if ep:
                c = au.union(self.quantified(node, eff, tag, v, q, keep), au.never(q))
            else:
                k = self.marker("k")
                bad = au.product(self.quantified(node, not eff, tag, v, k, False), au.at_marker(k, q))
                c = au.complement(au.project(au.reduce(bad), {k}))
            aut = au.reduce(au.product(aut, c))
            if not keep:
                aut = au.reduce(au.project(aut, {q}))
        return aut

    def positive(self, node, tag, v, m):
        neg = self.quantified(node, False, tag, v, m, False)
        return au.reduce(au.product(au.complement(neg), au.exactly_once(m)))

    def quantified(self, node, pol, tag, v, m, keep=False):
        sys = self.sys
        if isinstance(node, F.Know):
            if pol:
                return self.positive(node, tag, v, m)
            obs = sys.agent(node.agent).obs
            r = self.tag("k", f"trace indistinguishable for {node.agent}")
            inner = self.pointed(node.arg, False, r, v, m, keep)
            needed = _props_of(inner, r) | obs
            self.tvars(tag, obs)
            self.tvars(r, obs)
            eq = au.equal_upto_marker([tagged(p, tag) for p in sorted(obs)], [tagged(p, r) for p in sorted(obs)], m)
            a = au.reduce(au.product(inner, eq))
            a = au.reduce(au.product(a, self.sys_aut(r, sys.atomic_props if keep else needed)))
            return a if keep else au.reduce(au.project(a, _tag_vars(a, r)))
        if isinstance(node, F.ExistsCause):
            if pol:
                return self.positive(node, tag, v, m)
            r = self.tag("x", f"cause candidate for {node.var}")
            v1 = dict(v)
            v1[node.var] = (r, True)
            v2 = dict(v)
            v2[node.var] = (r, False)
            a = self.pointed(node.arg, False, tag, v1, m, keep)
            if not au.is_trivially_empty(a):
                a = au.reduce(au.product(a, self.pointed(node.arg, False, tag, v2, m, keep)))
            return a if keep else au.reduce(au.project(a, _tag_vars(a, r)))
        if isinstance(node, F.CausalPred):
            if node.var not in v:
                raise FormulaError(f"causal variable {node.var} is not bound")
            rho, inside = v[node.var]
            want = pol if inside else not pol
            if want:
                return self.cause_holds(node, tag, v, m)
            return self.non_cause(node, tag, v, m, keep)
        raise FormulaError(f"not a quantified node: {type(node).__name__}")

    def cause_holds(self, node, tag, v, m):
        neg = self.non_cause(node, tag, v, m, False)
        return au.reduce(au.product(au.complement(neg), au.exactly_once(m)))

    def non_cause(self, node, tag, v, m, keep=False):
        """Some system trace sigma, at least as similar to the current trace as
        the candidate (fixed outside A), violates the effect at m."""
        sys = self.sys
        rho, _ = v[node.var]
        A = F.resolve_actions(node, sys)
        s = self.tag("s", f"counterfactual trace for {node.var}")
        inner = self.pointed(node.effect, False, s, v, m, keep)
        if au.is_trivially_empty(inner):
            return inner
        self.tvars(s, sys.actions | A)
        self.tvars(tag, sys.actions | A)
        self.tvars(rho, A)
        a = au.reduce(au.product(inner, self.sim_aut(s, tag, rho, A, sys.actions)))
        needed = _props_of(a, s) | sys.actions | A
        a = au.reduce(au.product(a, self.sys_aut(s, sys.atomic_props if keep else needed)))
        return a if keep else au.reduce(au.project(a, _tag_vars(a, s)))


def _describe(node):
    if isinstance(node, F.Know):
        return f"K[{node.agent}]"
    if isinstance(node, F.ExistsCause):
        return f"exists {node.var}"
    return f"{node.var} causes"


def _tag_vars(a, tag):
    suffix = "@" + tag
    return {v for v in a.support if v.endswith(suffix)}


def _props_of(a, tag):
    suffix = "@" + tag
    return {v[: -len(suffix)] for v in a.support if v.endswith(suffix)}


# ---------------------------------------------------------------- alternation depth

def alternation_depth(f):
    """Complementations on the deepest path of the compiled plan."""
    return _depth_pointed(F.desugar(f), False, {})


def _depth_pointed(f, pol, v):
    if isinstance(f, _QUANTIFIED):
        return _depth_q(f, pol, v)
    leaves = []
    _leaves(f, not pol, True, leaves)
    best = 0
    for node, eff, ep in leaves:
        d = _depth_q(node, eff, v) if ep else 1 + _depth_q(node, not eff, v)
        best = max(best, d)
    return best


def _leaves(f, neg, ep, out):
    if isinstance(f, _QUANTIFIED):
        out.append((f, not neg, ep))
    elif isinstance(f, F.Not):
        _leaves(f.arg, not neg, ep, out)
    elif isinstance(f, (F.Until, F.Since)):
        _leaves(f.left, neg, ep and neg, out)
        _leaves(f.right, neg, ep and not neg, out)
    else:
        for c in f.children():
            _leaves(c, neg, ep, out)


def _depth_q(node, pol, v):
    if isinstance(node, F.Know):
        return (1 if pol else 0) + _depth_pointed(node.arg, False, v)
    if isinstance(node, F.ExistsCause):
        v1 = dict(v)
        v1[node.var] = True
        v2 = dict(v)
        v2[node.var] = False
        return (1 if pol else 0) + max(_depth_pointed(node.arg, False, v1), _depth_pointed(node.arg, False, v2))
    inside = v.get(node.var, True)
    want = pol if inside else not pol
    return (1 if want else 0) + _depth_pointed(node.effect, False, v)


# ---------------------------------------------------------------- check

def check(sys, f, cap=1_000_000, timeout=None, witness=True, keep_automaton=False):
    """Decide sys |= f. Raises ResourceLimit when the cap or timeout is hit."""
    problems = F.check_well_formed(f, sys)
    if problems:
        raise FormulaError("; ".join(problems))
    core = F.desugar(f)
    depth = alternation_depth(core)
    if depth > 1:
        log.warning("alternation depth %d: expect non-elementary blow-up", depth)
    verdict = Verdict(holds=True, alternation_depth=depth, model=sys.name, formula=F.to_text(f), source=f)
    with au.use_limits(cap=cap, timeout=timeout) as lim:
        comp = Compiler(sys)
        m0 = comp.marker("m")
        neg = comp.pointed(core, False, ROOT, {}, m0)
        res = au.reduce(au.product(neg, au.at_zero(m0)))
        res = au.product(res, comp.sys_aut(ROOT, sys.atomic_props))
        word = au.is_empty(res)
        if keep_automaton:
            verdict.automaton = res
        if word is not None:
            verdict.holds = False
            root = _tag_trace(word, ROOT, sys.atomic_props)
            verdict.counterexample = {ROOT: root}
            verdict.roles = {ROOT: comp.roles[ROOT]}
            if witness:
                try:
                    _witness(sys, core, root, verdict)
                except Exception as exc:  # the root trace alone is still a valid counterexample
                    log.info("witness extraction failed: %s", exc)
        verdict.stats = lim.stats
    return verdict


def _witness(sys, core, root, verdict):
    with au._phase("witness") as ph:
        comp = Compiler(sys)
        m0 = comp.marker("m")
        fixed = au.lasso_automaton(root, sys.atomic_props, lambda p: tagged(p, ROOT))
        a = au.reduce(au.product(fixed, au.at_zero(m0)))
        a = au.product(a, comp.pointed(core, False, ROOT, {}, m0, keep=True))
        word = au.is_empty(a)
        ph.done(a.n)
    if word is None:
        log.info("witness rerun found no lasso")
        return
    tags = {au.split_tag(v)[1] for v in a.support} - {None}
    for t in sorted(tags):
        if t == ROOT:
            continue
        verdict.counterexample[t] = _tag_trace(word, t, _props_of(a, t))
        verdict.roles[t] = comp.roles.get(t, t)
    for mk, role in comp.markers.items():
        if mk in a.support:
            pos = _marker_pos(word, mk)
            if pos is not None:
                verdict.anchors[role] = pos


def _tag_trace(word, tag, props):
    suffix = "@" + tag
    strip = lambda x: frozenset(v[: -len(suffix)] for v in x if v.endswith(suffix))
    return LassoTrace(tuple(strip(x) for x in word.prefix), tuple(strip(x) for x in word.loop)).canonical()


def _marker_pos(word, mk):
    for k in range(len(word.prefix) + len(word.loop)):
        if mk in letter_at(word, k):
            return k
    return None


# ---------------------------------------------------------------- causes

def compute_cause(sys, t, i, effect, A, cap=1_000_000, timeout=None):
    """The cause of ``effect`` at (t, i) over the proposition set A."""
    if not in_system(sys, t):
        raise TraceError("trace is not an initial path of the system")
    if not F.is_temporal(effect):
        raise FormulaError("cause effects must be K-free and quantifier-free")
    A = frozenset(A)
    with au.use_limits(cap=cap, timeout=timeout):
        comp = Compiler(sys)
        tau, rho = "tau", "cause"
        m = comp.marker("m")
        comp.tvars(tau, sys.actions | A)
        comp.tvars(rho, A)
        fixed = au.lasso_automaton(t, sys.actions | A, lambda p: tagged(p, tau), marker=m, at=i)
        node = F.CausalPred("X", tuple(sorted(A)), F.desugar(effect))
        bad = au.product(fixed, comp.non_cause(node, tau, {"X": (rho, True)}, m))
        keep = {tagged(p, rho) for p in A}
        bad = au.reduce(au.project_onto(bad, keep)).with_support(keep)
        plain = {tagged(p, rho): p for p in A}
        for p in A:
            bvar(p)
        non = au.rename(bad, plain).with_support(A)
        cause = au.complement(non).with_support(A)
    return CauseLanguage(cause, non, i, A)


def anchored_language(candidate, anchor, props):
    """{w | w, anchor |= candidate} over ``props``."""
    comp_m = f"$anchor{anchor}"
    bvar(comp_m)
    for p in props:
        bvar(p)
    a = au.product(au.ltl_pointed(F.desugar(candidate), comp_m), au.mark_at(comp_m, anchor))
    return au.reduce(au.project(au.reduce(a), {comp_m})).with_support(props)


def cause_difference(c, candidate, anchor=None):
    """None if c equals the anchored candidate language, else (word, side)
    where side is 'cause-only' or 'candidate-only'."""
    anchor = c.anchor if anchor is None else anchor
    extra = F.atoms(candidate) - set(c.action_set)
    if extra:
        raise FormulaError(f"candidate mentions propositions outside the action set: {sorted(extra)}")
    if not F.is_temporal(candidate):
        raise FormulaError("candidate must be an LTL formula with past")
    L = anchored_language(candidate, anchor, c.action_set)
    w = au.is_empty(au.product(L, c.non_cause))
    if w is not None:
        return _restrict_word(w, c.action_set), "candidate-only"
    w = au.is_empty(au.product(c.automaton, au.complement(L)))
    if w is not None:
        return _restrict_word(w, c.action_set), "cause-only"
    return None


def cause_formula_equiv(c, candidate, anchor=None):
    return cause_difference(c, candidate, anchor) is None


# ---------------------------------------------------------------- reports

def explain_verdict(v, sys=None):
    lines = []
    head = f"{v.model}: {v.formula}" if v.model else v.formula
    lines.append(head)
    if v.holds:
        lines.append("holds: no counterexample")
        return "\n".join(lines) + "\n"
    lines.append("violated")
    cex = v.counterexample or {}
    root = cex.get(ROOT)
    if root is not None:
        lines.append(f"  falsifying trace ({ROOT}): {format_trace(root)}")
        if sys is not None and replay(sys, root) is not None:
            states, loop = replay(sys, root)
            lines.append(f"  states: {' '.join(states)} ({' '.join(loop)})^w")
    for role, pos in sorted(v.anchors.items(), key=lambda x: x[1]):
        lines.append(f"  {role} is decided at time {pos}")
    for tag, t in sorted(cex.items()):
        if tag == ROOT:
            continue
        lines.append(f"  {tag} ({v.roles.get(tag, '')}): {format_trace(t)}")
    if sys is not None and v.source is not None:
        for g in F.subformulas(v.source):
            if isinstance(g, F.Know) and isinstance(g.arg, F.Atom) and g.arg.name in sys.agent(g.agent).obs:
                lines.append(f"  {g.arg.name} is directly observable by {g.agent}")
    knowers = [t for t in cex if t.startswith("k")]
    if root is not None and len(knowers) >= 2:
        lines.append("  the traces " + " and ".join(sorted(knowers))
                     + " look the same to the agent up to that time but disagree on whether the"
                     " candidate belongs to the cause")
    elif root is not None and len(knowers) == 1 and sys is not None:
        other = cex[knowers[0]]
        diff = sorted({p for k in range(max(len(root.prefix), len(other.prefix)) + 1)
                       for p in letter_at(root, k) ^ letter_at(other, k)})
        if diff:
            lines.append(f"  {knowers[0]} differs from the falsifying trace on {', '.join(diff)}")
    return "\n".join(lines) + "\n"


def timed_check(sys, f, **kw):
    t0 = time.perf_counter()
    v = check(sys, f, **kw)
    return v, (time.perf_counter() - t0) * 1000.0
