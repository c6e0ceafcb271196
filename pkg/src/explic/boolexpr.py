"""Boolean guard expressions over action names.

Grammar (precedence ! > & > | > ->, '->' right associative)::

    expr  := disj ('->' expr)?
    disj  := conj ('|' conj)*
    conj  := unary ('&' unary)*
    unary := '!' unary | '(' expr ')' | 'true' | 'false' | NAME
"""

import re

from .errors import ParseError

_TOKEN = re.compile(r"\s*(?:(->)|([!&|()])|([A-Za-z_][A-Za-z0-9_']*))")


class Guard:
    """Immutable boolean expression tree. Nodes are tuples:
    ('const', bool) | ('var', name) | ('not', g) | ('and', a, b) | ('or', a, b) | ('imp', a, b)
    """

    __slots__ = ("node",)

    def __init__(self, node):
        self.node = node

    def __eq__(self, other):
        return isinstance(other, Guard) and self.node == other.node

    def __hash__(self):
        return hash(self.node)

    def __repr__(self):
        return f"Guard({self})"

    def __str__(self):
        return _show(self.node, 0)

    def variables(self):
        out = set()
        _vars(self.node, out)
        return frozenset(out)

    def evaluate(self, true_names):
        return _eval(self.node, true_names)

    def to_bdd(self, bdd, rename=lambda name: name):
        return _bdd(self.node, bdd, rename)


TRUE = Guard(("const", True))
FALSE = Guard(("const", False))


def var(name):
    return Guard(("var", name))


def g_not(g):
    return Guard(("not", g.node))


def g_and(*gs):
    gs = [g for g in gs if g != TRUE]
    if not gs:
        return TRUE
    node = gs[0].node
    for g in gs[1:]:
        node = ("and", node, g.node)
    return Guard(node)


def g_or(*gs):
    gs = [g for g in gs if g != FALSE]
    if not gs:
        return FALSE
    node = gs[0].node
    for g in gs[1:]:
        node = ("or", node, g.node)
    return Guard(node)


def _vars(node, out):
    tag = node[0]
    if tag == "var":
        out.add(node[1])
    elif tag != "const":
        for child in node[1:]:
            _vars(child, out)


def _eval(node, true_names):
    tag = node[0]
    if tag == "const":
        return node[1]
    if tag == "var":
        return node[1] in true_names
    if tag == "not":
        return not _eval(node[1], true_names)
    if tag == "and":
        return _eval(node[1], true_names) and _eval(node[2], true_names)
    if tag == "or":
        return _eval(node[1], true_names) or _eval(node[2], true_names)
    return (not _eval(node[1], true_names)) or _eval(node[2], true_names)


def _bdd(node, bdd, rename):
    tag = node[0]
    if tag == "const":
        return bdd.true if node[1] else bdd.false
    if tag == "var":
        return bdd.var(rename(node[1]))
    if tag == "not":
        return ~_bdd(node[1], bdd, rename)
    a = _bdd(node[1], bdd, rename)
    b = _bdd(node[2], bdd, rename)
    if tag == "and":
        return a & b
    if tag == "or":
        return a | b
    return ~a | b


_PREC = {"imp": 1, "or": 2, "and": 3, "not": 4, "var": 5, "const": 5}


def _show(node, ctx):
    tag = node[0]
    if tag == "const":
        return "true" if node[1] else "false"
    if tag == "var":
        return node[1]
    if tag == "not":
        s = "!" + _show(node[1], 4)
    elif tag == "imp":
        # right associative: the left operand needs parens at equal precedence
        s = _show(node[1], 2) + " -> " + _show(node[2], 1)
    else:
        op = " & " if tag == "and" else " | "
        p = _PREC[tag]
        s = _show(node[1], p) + op + _show(node[2], p + 1)
    return f"({s})" if _PREC[tag] < ctx else s


def parse_guard(text, offset=0, source=None):
    """Parse a BOOLEXPR. ``offset``/``source`` locate errors inside a bigger document."""
    toks = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r} in guard", offset + pos, source)
        start = m.start(1) if m.group(1) else m.start(2) if m.group(2) else m.start(3)
        toks.append((m.group(1) or m.group(2) or m.group(3), offset + start))
        pos = m.end()
    toks.append(("<end>", offset + len(text)))
    p = _GuardParser(toks, source)
    node = p.expr()
    if p.peek() != "<end>":
        raise ParseError(f"unexpected token {p.peek()!r} in guard", p.where(), source)
    return Guard(node)


class _GuardParser:
    def __init__(self, toks, source):
        self.toks = toks
        self.i = 0
        self.source = source

    def peek(self):
        return self.toks[self.i][0]

    def where(self):
        return self.toks[self.i][1]

    def take(self):
        tok = self.toks[self.i][0]
        self.i += 1
        return tok

    def expr(self):
        left = self.disj()
        if self.peek() == "->":
            self.take()
            return ("imp", left, self.expr())
        return left

    def disj(self):
        node = self.conj()
        while self.peek() == "|":
            self.take()
            node = ("or", node, self.conj())
        return node

    def conj(self):
        node = self.unary()
        while self.peek() == "&":
            self.take()
            node = ("and", node, self.unary())
        return node

    def unary(self):
        tok = self.peek()
        if tok == "!":
            self.take()
            return ("not", self.unary())
        if tok == "(":
            self.take()
            node = self.expr()
            if self.peek() != ")":
                raise ParseError("expected ')' in guard", self.where(), self.source)
            self.take()
            return node
        if tok in ("true", "false"):
            self.take()
            return ("const", tok == "true")
        if tok == "<end>" or not (tok[0].isalpha() or tok[0] == "_"):
            raise ParseError(f"expected guard operand, found {tok!r}", self.where(), self.source)
        self.take()
        return ("var", tok)
