"""Formula syntax: AST, parser, canonical printer, desugaring, well-formedness
and requirement builders.

Concrete grammar (loosest binding first)::

    f  ::= f '<->' f | f '->' f | f '|' f | f '&' f | f ('U'|'S') f
         | '!' f | 'X' f | 'Y' f | 'F' f | 'G' f | 'O' f | 'H' f
         | 'K[' agent ']' f | ('exists'|'forall') Var '.' f
         | Var '~>[' items ']' f | '(' f ')' | 'true' | 'false' | prop
    items ::= prop | 'acts(' agent ')' | 'otheracts(' agent ')' | 'allacts'
"""

import logging
import re
from dataclasses import dataclass, field, fields

from .errors import FormulaError, ParseError

log = logging.getLogger(__name__)


class Formula:
    __slots__ = ()

    def children(self):
        return tuple(getattr(self, f.name) for f in fields(self) if isinstance(getattr(self, f.name), Formula))

    def __str__(self):
        return to_text(self)


def _node(cls):
    return dataclass(frozen=True)(cls)


@_node
class Atom(Formula):
    name: str
    pos: int = field(default=None, compare=False, repr=False)


@_node
class Const(Formula):
    value: bool
    pos: int = field(default=None, compare=False, repr=False)


@_node
class Not(Formula):
    arg: Formula
    pos: int = field(default=None, compare=False, repr=False)


@_node
class And(Formula):
    left: Formula
    right: Formula
    pos: int = field(default=None, compare=False, repr=False)


@_node
class Or(Formula):
    left: Formula
    right: Formula
    pos: int = field(default=None, compare=False, repr=False)


@_node
class Implies(Formula):
    left: Formula
    right: Formula
    pos: int = field(default=None, compare=False, repr=False)


@_node
class Iff(Formula):
    left: Formula
    right: Formula
    pos: int = field(default=None, compare=False, repr=False)


@_node
class Next(Formula):
    arg: Formula
    pos: int = field(default=None, compare=False, repr=False)


@_node
class Prev(Formula):
    arg: Formula
    pos: int = field(default=None, compare=False, repr=False)


@_node
class Until(Formula):
    left: Formula
    right: Formula
    pos: int = field(default=None, compare=False, repr=False)


@_node
class Since(Formula):
    left: Formula
    right: Formula
    pos: int = field(default=None, compare=False, repr=False)


@_node
class Eventually(Formula):
    arg: Formula
    pos: int = field(default=None, compare=False, repr=False)


@_node
class Globally(Formula):
    arg: Formula
    pos: int = field(default=None, compare=False, repr=False)


@_node
class Once(Formula):
    arg: Formula
    pos: int = field(default=None, compare=False, repr=False)


@_node
class Historically(Formula):
    arg: Formula
    pos: int = field(default=None, compare=False, repr=False)


@_node
class Know(Formula):
    agent: str
    arg: Formula
    pos: int = field(default=None, compare=False, repr=False)


@_node
class ExistsCause(Formula):
    var: str
    arg: Formula
    pos: int = field(default=None, compare=False, repr=False)


@_node
class ForallCause(Formula):
    var: str
    arg: Formula
    pos: int = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ActionMacro:
    kind: str  # acts | otheracts | allacts
    agent: str = None

    def __str__(self):
        return "allacts" if self.kind == "allacts" else f"{self.kind}({self.agent})"


@_node
class CausalPred(Formula):
    var: str
    actions: tuple  # of str | ActionMacro
    effect: Formula
    pos: int = field(default=None, compare=False, repr=False)


TRUE = Const(True)
FALSE = Const(False)

UNARY = {"!": Not, "X": Next, "Y": Prev, "F": Eventually, "G": Globally, "O": Once, "H": Historically}
UNARY_SYMBOL = {v: k for k, v in UNARY.items()}
BINARY_SYMBOL = {And: "&", Or: "|", Implies: "->", Iff: "<->", Until: "U", Since: "S"}
CORE = (Atom, Const, Not, And, Or, Next, Prev, Until, Since, Know, ExistsCause, CausalPred)
_RESERVED = {"exists", "forall", "true", "false", "acts", "otheracts", "allacts"}
KEYWORDS = {"X", "Y", "U", "S", "F", "G", "O", "H", "K", "exists", "forall", "true", "false", "acts", "otheracts", "allacts"}


# ---------------------------------------------------------------- helpers

def conj(*fs):
    fs = [f for f in fs if f != TRUE]
    if not fs:
        return TRUE
    out = fs[0]
    for f in fs[1:]:
        out = And(out, f)
    return out


def disj(*fs):
    fs = [f for f in fs if f != FALSE]
    if not fs:
        return FALSE
    out = fs[0]
    for f in fs[1:]:
        out = Or(out, f)
    return out


def nest(op, f, times):
    for _ in range(times):
        f = op(f)
    return f


def subformulas(f):
    yield f
    for c in f.children():
        yield from subformulas(c)


def atoms(f):
    return frozenset(g.name for g in subformulas(f) if isinstance(g, Atom))


def is_temporal(f):
    """True iff f is K-free, quantifier-free and causal-predicate-free."""
    return not any(isinstance(g, (Know, ExistsCause, ForallCause, CausalPred)) for g in subformulas(f))


def depth(f):
    kids = f.children()
    if not kids:
        return 0
    return 1 + max(depth(c) for c in kids)


def resolve_actions(pred, sys):
    out = set()
    for item in pred.actions:
        if isinstance(item, ActionMacro):
            if item.kind == "allacts":
                out |= sys.actions
            elif item.kind == "acts":
                out |= sys.agent(item.agent).acts
            else:
                out |= sys.actions - sys.agent(item.agent).acts
        else:
            out.add(item)
    return frozenset(out)


# ---------------------------------------------------------------- printing

def to_text(f):
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if type(f) in UNARY_SYMBOL:
        sym = UNARY_SYMBOL[type(f)]
        return sym + ("" if sym == "!" else " ") + to_text(f.arg)
    if type(f) in BINARY_SYMBOL:
        return f"({to_text(f.left)} {BINARY_SYMBOL[type(f)]} {to_text(f.right)})"
    if isinstance(f, Know):
        return f"K[{f.agent}] {to_text(f.arg)}"
    if isinstance(f, ExistsCause):
        return f"exists {f.var} . {to_text(f.arg)}"
    if isinstance(f, ForallCause):
        return f"forall {f.var} . {to_text(f.arg)}"
    if isinstance(f, CausalPred):
        items = ", ".join(str(a) for a in f.actions)
        return f"{f.var} ~>[{items}] {to_text(f.effect)}"
    raise FormulaError(f"cannot print {f!r}")


# ---------------------------------------------------------------- parsing

_TOK = re.compile(r"\s*(?:(<->|->|~>)|([!&|()\[\],.])|([A-Za-z_][A-Za-z0-9_]*))")


def _tokenize(text):
    toks = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOK.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = "op" if m.group(1) or m.group(2) else "id"
        toks.append((kind, m.group(1) or m.group(2) or m.group(3), pos))
        pos = m.end()
    toks.append(("end", "<end>", len(text)))
    return toks


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, value, k=0):
        return self.peek(k)[1] == value and self.peek(k)[0] != "end"

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, msg):
        return ParseError(msg, self.peek()[2], self.text)

    def expect(self, value):
        if not self.at(value):
            raise self.fail(f"expected {value!r}, found {self.peek()[1]!r}")
        return self.take()

    def ident(self, what):
        kind, val, _ = self.peek()
        if kind != "id" or val in KEYWORDS:
            raise self.fail(f"expected {what}, found {val!r}")
        return self.take()[1]

    def var_name(self):
        kind, val, _ = self.peek()
        if kind != "id" or val in _RESERVED:
            raise self.fail(f"expected second-order variable, found {val!r}")
        return self.take()[1]

    def parse(self):
        f = self.iff()
        if self.peek()[0] != "end":
            raise self.fail(f"unexpected token {self.peek()[1]!r}")
        return f

    def iff(self):
        f = self.imp()
        while self.at("<->"):
            pos = self.take()[2]
            f = Iff(f, self.imp(), pos=pos)
        return f

    def imp(self):
        f = self.disj()
        if self.at("->"):
            pos = self.take()[2]
            return Implies(f, self.imp(), pos=pos)
        return f

    def disj(self):
        f = self.conj()
        while self.at("|"):
            pos = self.take()[2]
            f = Or(f, self.conj(), pos=pos)
        return f

    def conj(self):
        f = self.until()
        while self.at("&"):
            pos = self.take()[2]
            f = And(f, self.until(), pos=pos)
        return f

    def until(self):
        f = self.unary()
        if self.peek()[0] == "id" and self.peek()[1] in ("U", "S"):
            _, val, pos = self.take()
            op = Until if val == "U" else Since
            return op(f, self.until(), pos=pos)
        return f

    def unary(self):
        kind, val, pos = self.peek()
        if kind == "id" and self.at("~>", 1) and val not in _RESERVED:
            return self.causal()
        if val == "!" and kind == "op":
            self.take()
            return Not(self.unary(), pos=pos)
        if kind == "id" and val in UNARY and val != "!":
            self.take()
            return UNARY[val](self.unary(), pos=pos)
        if kind == "id" and val == "K":
            self.take()
            self.expect("[")
            agent = self.ident("agent name")
            self.expect("]")
            return Know(agent, self.unary(), pos=pos)
        if kind == "id" and val in ("exists", "forall"):
            self.take()
            var = self.var_name()
            self.expect(".")
            body = self.unary()
            return (ExistsCause if val == "exists" else ForallCause)(var, body, pos=pos)
        if val == "(" and kind == "op":
            self.take()
            f = self.iff()
            self.expect(")")
            return f
        if kind == "id" and val in ("true", "false"):
            self.take()
            return Const(val == "true", pos=pos)
        if kind == "id" and val not in KEYWORDS:
            self.take()
            return Atom(val, pos=pos)
        raise self.fail(f"expected a formula, found {val!r}")

    def causal(self):
        var, pos = self.take()[1:]
        self.expect("~>")
        self.expect("[")
        items = []
        if not self.at("]"):
            while True:
                items.append(self.action_item())
                if self.at(","):
                    self.take()
                    continue
                break
        self.expect("]")
        if not items:
            log.warning("empty action set in causal predicate at offset %d", pos)
        effect = self.unary()
        return CausalPred(var, tuple(items), effect, pos=pos)

    def action_item(self):
        kind, val, _ = self.peek()
        if kind == "id" and val in ("acts", "otheracts"):
            self.take()
            self.expect("(")
            agent = self.ident("agent name")
            self.expect(")")
            return ActionMacro(val, agent)
        if kind == "id" and val == "allacts":
            self.take()
            return ActionMacro("allacts")
        return self.ident("action proposition")


def parse_formula(text, allow_free=False):
    f = _Parser(text).parse()
    if not allow_free:
        free = free_causal_vars(f)
        if free:
            var, pos = free[0]
            raise ParseError(f"unbound second-order variable {var!r}", pos, text)
    return f


def free_causal_vars(f, bound=frozenset()):
    """(var, pos) of causal predicates whose variable is not bound above them."""
    if isinstance(f, CausalPred):
        out = [] if f.var in bound else [(f.var, f.pos)]
        return out + free_causal_vars(f.effect, bound)
    if isinstance(f, (ExistsCause, ForallCause)):
        return free_causal_vars(f.arg, bound | {f.var})
    out = []
    for c in f.children():
        out += free_causal_vars(c, bound)
    return out


# ---------------------------------------------------------------- transforms

def desugar(f):
    if isinstance(f, (Atom, Const)):
        return f
    if isinstance(f, Implies):
        return Or(Not(desugar(f.left)), desugar(f.right))
    if isinstance(f, Iff):
        a, b = desugar(f.left), desugar(f.right)
        return And(Or(Not(a), b), Or(Not(b), a))
    if isinstance(f, Eventually):
        return Until(TRUE, desugar(f.arg))
    if isinstance(f, Globally):
        return Not(Until(TRUE, Not(desugar(f.arg))))
    if isinstance(f, Once):
        return Since(TRUE, desugar(f.arg))
    if isinstance(f, Historically):
        return Not(Since(TRUE, Not(desugar(f.arg))))
    if isinstance(f, ForallCause):
        return Not(ExistsCause(f.var, Not(desugar(f.arg))))
    if isinstance(f, (Not, Next, Prev)):
        return type(f)(desugar(f.arg))
    if isinstance(f, (And, Or, Until, Since)):
        return type(f)(desugar(f.left), desugar(f.right))
    if isinstance(f, Know):
        return Know(f.agent, desugar(f.arg))
    if isinstance(f, ExistsCause):
        return ExistsCause(f.var, desugar(f.arg))
    if isinstance(f, CausalPred):
        return CausalPred(f.var, f.actions, desugar(f.effect))
    raise FormulaError(f"unknown formula node {f!r}")


def is_core(f):
    return all(isinstance(g, CORE) for g in subformulas(f))


def check_well_formed(f, sys):
    """Violations as a list of strings; empty list means well-formed."""
    out = []
    for var, _ in free_causal_vars(f):
        out.append(f"free variable {var}")
    for g in subformulas(f):
        if isinstance(g, Atom) and g.name not in sys.atomic_props:
            out.append(f"unknown proposition {g.name}")
        if isinstance(g, Know) and g.agent not in sys.agent_names:
            out.append(f"unknown agent {g.agent}")
        if isinstance(g, CausalPred):
            for item in g.actions:
                if isinstance(item, ActionMacro):
                    if item.agent is not None and item.agent not in sys.agent_names:
                        out.append(f"unknown agent {item.agent} in causal action set")
                elif item not in sys.atomic_props:
                    out.append(f"causal action set mentions unknown proposition {item}")
    return list(dict.fromkeys(out))


# ---------------------------------------------------------------- builders

def mk_explainability(sys, agent, trigger, effect, mode, var="X"):
    acts = sys.agent(agent).acts
    if mode == "ICE":
        A = acts
    elif mode == "ECE":
        A = sys.actions - acts
    elif mode == "FCE":
        A = sys.actions
    else:
        raise FormulaError(f"unknown explainability mode {mode!r}")
    for g in (trigger, effect):
        if not is_temporal(g):
            raise FormulaError("trigger and effect must be K-free and quantifier-free")
    pred = CausalPred(var, tuple(sorted(A)), effect)
    return Globally(Implies(trigger, ExistsCause(var, Know(agent, pred))))


def mk_privacy(agent, secret, condition=None):
    for g in (secret, condition):
        if g is not None and not is_temporal(g):
            raise FormulaError("secret and condition must be K-free and quantifier-free")
    body = Not(Know(agent, secret))
    if condition is None or condition == TRUE:
        return Globally(body)
    return Globally(Implies(condition, body))
