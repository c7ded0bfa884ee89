"""Truncated multivariate Taylor jets (forward-mode differentiation to order K).

A :class:`Jet` stores the Taylor coefficients of a function of ``n`` real
variables about a base point, up to total degree ``K``.  Arithmetic,
composition with ``exp/log/sin/cos/pow`` and partial derivatives are exact up
to rounding.  Each jet carries ``valid``: the degree up to which its
coefficients are trustworthy.  Differentiation lowers it by one, so reading a
value of a jet that was differentiated too often raises instead of silently
returning truncation garbage.
"""

from __future__ import annotations

import cmath
import itertools
import math
from functools import lru_cache

import numpy as np

from .kernel.expr import LETTER_NAMES, FieldExpr, Paren, Poly, Word
from .kernel.tree import Add, Conj, Const, Deriv, Fn, Mul, Pow, Sym

__all__ = ["JetSpace", "Jet", "JetEnv", "UnknownSymbol", "jet_space"]


class UnknownSymbol(KeyError):
    def __str__(self):
        return self.args[0]


class JetSpace:
    """Monomial bookkeeping for ``nvars`` variables truncated at total degree ``order``."""

    def __init__(self, nvars: int, order: int):
        self.nvars = nvars
        self.order = order
        monos = []
        for deg in range(order + 1):
            for combo in itertools.combinations_with_replacement(range(nvars), deg):
                a = [0] * nvars
                for v in combo:
                    a[v] += 1
                monos.append(tuple(a))
        self.monos = monos
        self.index = {m: i for i, m in enumerate(monos)}
        self.size = len(monos)
        self.degree = np.array([sum(m) for m in monos])
        I, J, T = [], [], []
        for i, a in enumerate(monos):
            for j, b in enumerate(monos):
                if sum(a) + sum(b) <= order:
                    I.append(i)
                    J.append(j)
                    T.append(self.index[tuple(x + y for x, y in zip(a, b))])
        self._I = np.array(I)
        self._J = np.array(J)
        self._T = np.array(T)
        self._dsrc, self._ddst, self._dfac = [], [], []
        for v in range(nvars):
            src, dst, fac = [], [], []
            for i, a in enumerate(monos):
                if sum(a) < order:
                    b = list(a)
                    b[v] += 1
                    src.append(self.index[tuple(b)])
                    dst.append(i)
                    fac.append(b[v])
            self._dsrc.append(np.array(src, dtype=int))
            self._ddst.append(np.array(dst, dtype=int))
            self._dfac.append(np.array(fac, dtype=float))

    def mul(self, a, b):
        w = a[self._I] * b[self._J]
        return np.bincount(self._T, weights=w.real, minlength=self.size) + 1j * np.bincount(
            self._T, weights=w.imag, minlength=self.size
        )

    def const(self, value) -> "Jet":
        c = np.zeros(self.size, dtype=complex)
        c[0] = value
        return Jet(self, c, self.order)

    def var(self, v: int, value) -> "Jet":
        c = np.zeros(self.size, dtype=complex)
        c[0] = value
        if self.order >= 1:
            e = [0] * self.nvars
            e[v] = 1
            c[self.index[tuple(e)]] = 1.0
        return Jet(self, c, self.order)


@lru_cache(maxsize=None)
def jet_space(nvars: int, order: int) -> JetSpace:
    return JetSpace(nvars, order)


class Jet:
    __slots__ = ("space", "c", "valid")

    def __init__(self, space: JetSpace, coeffs, valid=None):
        self.space = space
        self.c = coeffs
        self.valid = space.order if valid is None else valid

    # helpers -----------------------------------------------------------------
    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return self.space.const(complex(other))

    @property
    def value(self) -> complex:
        if self.valid < 0:
            raise ValueError("jet differentiated beyond its truncation order")
        return complex(self.c[0])

    def partial(self, v: int) -> "Jet":
        s = self.space
        out = np.zeros(s.size, dtype=complex)
        out[s._ddst[v]] = self.c[s._dsrc[v]] * s._dfac[v]
        return Jet(s, out, self.valid - 1)

    def derivative(self, multi) -> complex:
        """The partial derivative ``∂^multi`` at the base point."""
        if sum(multi) > self.valid:
            raise ValueError("derivative order exceeds jet validity")
        k = self.space.index[tuple(multi)]
        return complex(self.c[k]) * math.prod(math.factorial(m) for m in multi)

    # arithmetic --------------------------------------------------------------
    def __add__(self, other):
        o = self._lift(other)
        return Jet(self.space, self.c + o.c, min(self.valid, o.valid))

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, -self.c, self.valid)

    def __sub__(self, other):
        o = self._lift(other)
        return Jet(self.space, self.c - o.c, min(self.valid, o.valid))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.space, self.c * complex(other), self.valid)
        return Jet(self.space, self.space.mul(self.c, other.c), min(self.valid, other.valid))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.space, self.c / complex(other), self.valid)
        return self * other.power(-1)

    def __rtruediv__(self, other):
        return self._lift(other) * self.power(-1)

    def __pow__(self, q):
        return self.power(q)

    def conjugate(self) -> "Jet":
        return Jet(self.space, np.conj(self.c), self.valid)

    # composition -------------------------------------------------------------
    def _compose(self, derivs):
        """``f(a0 + δ)`` given ``derivs[n] = f^(n)(a0) / n!``."""
        delta = self.c.copy()
        delta[0] = 0
        out = np.zeros_like(self.c)
        out[0] = derivs[0]
        power = delta
        n_max = min(self.valid, self.space.order)
        for n in range(1, n_max + 1):
            out = out + derivs[n] * power
            if n < n_max:
                power = self.space.mul(power, delta)
        return Jet(self.space, out, self.valid)

    def _orders(self):
        return max(min(self.valid, self.space.order), 0) + 1

    def exp(self):
        e = cmath.exp(self.c[0])
        return self._compose([e / math.factorial(n) for n in range(self._orders())])

    def log(self):
        a0 = complex(self.c[0])
        if a0 == 0:
            raise ZeroDivisionError("log of a jet vanishing at the base point")
        d = [cmath.log(a0)] + [(-1) ** (n + 1) / (n * a0**n) for n in range(1, self._orders())]
        return self._compose(d)

    def sin(self):
        a0 = complex(self.c[0])
        cyc = (cmath.sin(a0), cmath.cos(a0), -cmath.sin(a0), -cmath.cos(a0))
        return self._compose([cyc[n % 4] / math.factorial(n) for n in range(self._orders())])

    def cos(self):
        a0 = complex(self.c[0])
        cyc = (cmath.cos(a0), -cmath.sin(a0), -cmath.cos(a0), cmath.sin(a0))
        return self._compose([cyc[n % 4] / math.factorial(n) for n in range(self._orders())])

    def power(self, q):
        """Principal-branch power ``self ** q`` for real ``q``."""
        q = float(q) if not isinstance(q, int) else q
        a0 = complex(self.c[0])
        if isinstance(q, int) and q >= 0:
            out = self.space.const(1.0)
            out.valid = self.valid
            base = self
            n = q
            while n:
                if n & 1:
                    out = out * base
                base = base * base
                n >>= 1
            return out
        if a0 == 0:
            raise ZeroDivisionError("negative or fractional power of a jet vanishing at the base point")
        d, coef = [], 1.0
        for n in range(self._orders()):
            d.append(coef * a0 ** (q - n))
            coef = coef * (q - n) / (n + 1)
        return self._compose(d)

    def __repr__(self):
        return f"Jet(value={self.c[0]:.6g}, order={self.space.order}, valid={self.valid})"


_JFUNC = {"exp": Jet.exp, "sin": Jet.sin, "cos": Jet.cos, "log": Jet.log}


class JetEnv:
    """Evaluate expression trees (and normal forms) on jets.

    ``variables`` maps coordinate names to variable indices; ``point`` holds
    the base-point values of all ``nvars`` variables.  ``symbols`` maps names
    to ready jets; ``defs`` maps names to trees evaluated on demand.  Frame
    derivative nodes ``D1/D2/D0`` need a ``frame`` object with a
    ``derivative(letter, jet)`` method; ``Dr`` is the partial along the
    variable named ``r``.
    """

    def __init__(self, space, point, variables, symbols=None, defs=None, frame=None):
        self.space = space
        self.point = tuple(point)
        self.variables = dict(variables)
        self.symbols = dict(symbols or {})
        self.defs = dict(defs or {})
        self.frame = frame
        self._cache = {}
        self._words = {}

    def symbol(self, name: str) -> Jet:
        hit = self._cache.get(name)
        if hit is not None:
            return hit
        if name in self.symbols:
            j = self.symbols[name]
            if callable(j):
                j = j()
        elif name in self.variables:
            v = self.variables[name]
            j = self.space.var(v, self.point[v])
        elif name in self.defs:
            j = self.eval(self.defs[name])
        elif name.endswith("bar") and self._known(name[:-3]):
            j = self.symbol(name[:-3]).conjugate()
        elif name in ("r",):
            raise UnknownSymbol("the fiber coordinate r is not a variable of this jet space")
        else:
            raise UnknownSymbol(f"unknown symbol {name!r} in coordinate expression")
        self._cache[name] = j
        return j

    def _known(self, name):
        return name in self.symbols or name in self.variables or name in self.defs

    def derivative(self, letter: int, j: Jet) -> Jet:
        if letter == 3:
            if "r" not in self.variables:
                return Jet(self.space, np.zeros(self.space.size, dtype=complex), j.valid - 1)
            return j.partial(self.variables["r"])
        if self.frame is None:
            raise ValueError(f"{LETTER_NAMES[letter]} needs a CR frame")
        return self.frame.derivative(letter, j)

    def word(self, name: str, counts) -> Jet:
        """Jet of the canonical word ``counts`` applied to the symbol ``name``."""
        key = (name, tuple(counts))
        hit = self._words.get(key)
        if hit is not None:
            return hit
        if not any(counts):
            out = self.symbol(name)
        else:
            lead = next(l for l in range(4) if counts[l])
            rest = list(counts)
            rest[lead] -= 1
            out = self.derivative(lead, self.word(name, tuple(rest)))
        self._words[key] = out
        return out

    def eval(self, node) -> Jet:
        memo = {}

        def go(n):
            hit = memo.get(id(n))
            if hit is not None:
                return hit[1]
            out = self._eval(n, go)
            memo[id(n)] = (n, out)
            return out

        return go(node)

    def _eval(self, n, go):
        if isinstance(n, Poly):
            return self.eval_poly(n)
        if isinstance(n, Const):
            return self.space.const(complex(n.value))
        if isinstance(n, Sym):
            return self.symbol(n.atom.name)
        if isinstance(n, Add):
            out = go(n.terms[0])
            for t in n.terms[1:]:
                out = out + go(t)
            return out
        if isinstance(n, Mul):
            out = go(n.factors[0])
            for f in n.factors[1:]:
                out = out * go(f)
            return out
        if isinstance(n, Pow):
            base = go(n.base)
            if isinstance(n.exponent, FieldExpr):
                ex = go(n.exponent)
                return (ex * base.log()).exp()
            q = n.exponent
            return base.power(q if isinstance(q, int) else float(q))
        if isinstance(n, Fn):
            return _JFUNC[n.kind](go(n.arg))
        if isinstance(n, Deriv):
            return self.derivative(n.letter, go(n.arg))
        if isinstance(n, Conj):
            return go(n.arg).conjugate()
        if isinstance(n, (int, float, complex)):
            return self.space.const(complex(n))
        raise TypeError(f"cannot evaluate {n!r} on jets")

    def eval_poly(self, p: Poly) -> Jet:
        memo = {}

        def factor(f):
            hit = memo.get(f)
            if hit is None:
                if isinstance(f, Word):
                    hit = self.word(f.atom.name, f.counts)
                elif isinstance(f, Paren):
                    hit = self.eval_poly(f.arg)
                else:
                    hit = _JFUNC[f.kind](self.eval_poly(f.arg))
                memo[f] = hit
            return hit

        out = self.space.const(0.0)
        for m, c in p.terms.items():
            t = self.space.const(complex(c))
            for f, pw in m:
                v = factor(f)
                t = t * (v.power(pw) if pw != 1 else v)
            out = out + t
        return out
