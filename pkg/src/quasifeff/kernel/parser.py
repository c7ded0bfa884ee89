"""Parser for the plain-text expression grammar (see ``docs/grammar.md``).

Decimal literals are read as exact rationals, so ``0.1`` means ``1/10``.
Identifiers are resolved to atoms through a callback; by default unknown
names become complex, ``r``-independent atoms, except that ``r`` is the
fiber coordinate and ``<name>bar`` is the conjugate of a known ``<name>``.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .expr import LETTER_NAMES, R, Atom
from .numbers import QI
from .tree import Conj, Const, Deriv, Fn, Pow, Sym

__all__ = ["parse", "ParseError", "AtomTable"]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?|\d+(?:[eE][-+]?\d+)?)"
    r"|(?P<id>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>\*\*|[-+*/^(),]))"
)

_FUNCS = {"exp", "sin", "cos", "log", "sqrt", "conj"} | set(LETTER_NAMES)


class ParseError(ValueError):
    """Raised on malformed expression text; carries the offending position."""

    def __init__(self, msg, text="", pos=None):
        where = f" at position {pos}" if pos is not None else ""
        super().__init__(f"{msg}{where}: {text!r}" if text else msg)
        self.pos = pos


class AtomTable:
    """Name resolution for the parser.

    ``real`` and ``r_dependent`` list names that get those flags when first
    created; everything else defaults to complex and ``r``-independent.
    """

    def __init__(self, atoms=(), real=(), r_dependent=(), strict=False):
        self.atoms = {"r": R}
        self.real = set(real)
        self.r_dependent = set(r_dependent)
        self.strict = strict
        for a in atoms:
            self.add(a)

    def add(self, a: Atom) -> Atom:
        self.atoms[a.name] = a
        if not a.real:
            self.atoms.setdefault(a.conj_name, a.conjugate())
        return a

    def __call__(self, name: str) -> Atom:
        a = self.atoms.get(name)
        if a is not None:
            return a
        if name.endswith("bar") and name[:-3] in self.atoms:
            base = self.atoms[name[:-3]]
            if not base.real:
                return self.add(base).conjugate()
        if self.strict:
            raise ParseError(f"unknown identifier {name!r}")
        a = Atom(name, real=name in self.real, r_dependent=name in self.r_dependent)
        return self.add(a)


def _tokens(text):
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError("unexpected character", text, pos)
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text, resolve):
        self.text = text
        self.toks = _tokens(text)
        self.i = 0
        self.resolve = resolve

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, v, pos = self.take()
        if v != value:
            raise ParseError(f"expected {value!r}, got {v or 'end of input'!r}", self.text, pos)

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            node = node + rhs if op == "+" else node - rhs
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.unary()
            node = node * rhs if op == "*" else node / rhs
        return node

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return -self.unary()
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.peek()[1] in ("^", "**"):
            self.take()
            ex = self.unary()
            if isinstance(ex, Const) and ex.value.is_real():
                return Pow(base, ex.value.re)
            return Pow(base, ex)
        return base

    def primary(self):
        kind, v, pos = self.take()
        if kind == "num":
            return Const(QI(Fraction(v)))
        if kind == "id":
            if v == "I":
                return Const(QI(0, 1))
            if v in _FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                if v in LETTER_NAMES:
                    return Deriv(LETTER_NAMES.index(v), arg)
                if v == "conj":
                    return Conj(arg)
                if v == "sqrt":
                    return Pow(arg, Fraction(1, 2))
                return Fn(v, arg)
            return Sym(self.resolve(v))
        if v == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ParseError(f"unexpected {v or 'end of input'!r}", self.text, pos)


def parse(text: str, atoms=None):
    """Parse ``text`` into an expression tree.

    ``atoms`` is an :class:`AtomTable`, a mapping of names to atoms, or a
    callable resolving names; ``None`` uses a fresh default table.
    """
    if atoms is None:
        resolve = AtomTable()
    elif callable(atoms):
        resolve = atoms
    else:
        resolve = AtomTable(atoms.values() if hasattr(atoms, "values") else atoms)
    if not isinstance(text, str) or not text.strip():
        raise ParseError("empty expression")
    p = _Parser(text, resolve)
    node = p.expr()
    kind, v, pos = p.peek()
    if kind != "end":
        raise ParseError(f"trailing input {v!r}", text, pos)
    return node
