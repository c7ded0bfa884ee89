"""Unevaluated expression trees and their normalization.

Trees are what the parser produces and what random-expression tests build.
They are context free: the same tree can be normalized under different
:class:`~quasifeff.kernel.algebra.FrameAlgebra` contexts, or evaluated on
coordinate jets without ever being normalized.
"""

from __future__ import annotations

from .expr import (
    LETTER_NAMES,
    Atom,
    FieldExpr,
    Poly,
    Word,
    _pw,
    cos_,
    exp_,
    log_,
    poly_pow,
    sin_,
)
from .numbers import ONE, as_qi

__all__ = [
    "Const",
    "Sym",
    "Add",
    "Mul",
    "Pow",
    "Fn",
    "Deriv",
    "Conj",
    "lift",
    "normalize",
    "D",
    "conj",
    "exp",
    "sin",
    "cos",
    "log",
    "sqrt",
]


class Node(FieldExpr):
    __slots__ = ()

    def children(self):
        return ()


class Const(Node):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = as_qi(value)

    def __repr__(self):
        return f"Const({self.value})"


class Sym(Node):
    __slots__ = ("atom",)

    def __init__(self, atom: Atom):
        self.atom = atom

    def __repr__(self):
        return f"Sym({self.atom.name})"


class Add(Node):
    __slots__ = ("terms",)

    def __init__(self, terms):
        self.terms = tuple(terms)

    def children(self):
        return self.terms

    def __repr__(self):
        return "Add(" + ", ".join(map(repr, self.terms)) + ")"


class Mul(Node):
    __slots__ = ("factors",)

    def __init__(self, factors):
        self.factors = tuple(factors)

    def children(self):
        return self.factors

    def __repr__(self):
        return "Mul(" + ", ".join(map(repr, self.factors)) + ")"


class Pow(Node):
    """``base ** exponent``; the exponent is a rational number or a tree."""

    __slots__ = ("base", "exponent")

    def __init__(self, base, exponent):
        self.base = lift(base)
        self.exponent = exponent if isinstance(exponent, FieldExpr) else _pw(exponent)

    def children(self):
        if isinstance(self.exponent, FieldExpr):
            return (self.base, self.exponent)
        return (self.base,)

    def __repr__(self):
        return f"Pow({self.base!r}, {self.exponent!r})"


class Fn(Node):
    __slots__ = ("kind", "arg")
    KINDS = ("exp", "sin", "cos", "log")

    def __init__(self, kind, arg):
        if kind not in self.KINDS:
            raise ValueError(f"unknown function {kind!r}")
        self.kind = kind
        self.arg = lift(arg)

    def children(self):
        return (self.arg,)

    def __repr__(self):
        return f"Fn({self.kind}, {self.arg!r})"


class Deriv(Node):
    __slots__ = ("letter", "arg")

    def __init__(self, letter: int, arg):
        if letter not in (0, 1, 2, 3):
            raise ValueError(f"unknown derivative letter {letter!r}")
        self.letter = letter
        self.arg = lift(arg)

    def children(self):
        return (self.arg,)

    def __repr__(self):
        return f"{LETTER_NAMES[self.letter]}({self.arg!r})"


class Conj(Node):
    __slots__ = ("arg",)

    def __init__(self, arg):
        self.arg = lift(arg)

    def children(self):
        return (self.arg,)

    def __repr__(self):
        return f"Conj({self.arg!r})"


def lift(x) -> FieldExpr:
    if isinstance(x, FieldExpr):
        return x
    if isinstance(x, Atom):
        return Sym(x)
    return Const(x)


def D(letter, e) -> Deriv:
    if isinstance(letter, str):
        letter = LETTER_NAMES.index(letter)
    return Deriv(letter, e)


def conj(e) -> Conj:
    return Conj(e)


def exp(e) -> Fn:
    return Fn("exp", e)


def sin(e) -> Fn:
    return Fn("sin", e)


def cos(e) -> Fn:
    return Fn("cos", e)


def log(e) -> Fn:
    return Fn("log", e)


def sqrt(e) -> Pow:
    return Pow(e, _pw("1/2"))


_FUNCS = {"exp": exp_, "sin": sin_, "cos": cos_, "log": log_}


def normalize(e, ctx) -> Poly:
    """Normal form of a tree (or ``Poly``) in the frame algebra ``ctx``."""
    memo = {}

    def go(node):
        key = id(node)
        hit = memo.get(key)
        if hit is not None:
            return hit[1]
        out = _norm(node)
        memo[key] = (node, out)
        return out

    def _norm(node):
        if isinstance(node, Poly):
            return ctx.reduce(node)
        if isinstance(node, Const):
            return Poly.const(node.value)
        if isinstance(node, Sym):
            return ctx.word_poly(node.atom, (0, 0, 0, 0))
        if isinstance(node, Add):
            out = Poly({})
            for t in node.terms:
                out = out + go(t)
            return out
        if isinstance(node, Mul):
            out = Poly.const(ONE)
            for f in node.factors:
                out = out * go(f)
                if out.is_zero():
                    break
            return out
        if isinstance(node, Pow):
            base = go(node.base)
            if isinstance(node.exponent, FieldExpr):
                ex = go(node.exponent)
                q = ex.constant_value()
                if q is not None and q.is_real():
                    return poly_pow(base, q.re)
                return exp_(ex * log_(base))
            return poly_pow(base, node.exponent)
        if isinstance(node, Fn):
            return _FUNCS[node.kind](go(node.arg))
        if isinstance(node, Deriv):
            return ctx.diff_poly(node.letter, go(node.arg))
        if isinstance(node, Conj):
            return ctx.conj(go(node.arg))
        if isinstance(node, Atom):
            return ctx.word_poly(node, (0, 0, 0, 0))
        if isinstance(node, Word):
            return ctx.word_poly(node.atom, node.counts)
        return Poly.const(node)

    return go(lift(e))
