"""Normal-form expressions: sums of monomials over derivative words of atoms.

A :class:`Poly` maps monomials to exact :class:`~quasifeff.kernel.numbers.QI`
coefficients.  A monomial is a frozenset of ``(factor, power)`` pairs where a
factor is one of

* :class:`Word` -- a canonically ordered derivative word ``D1^a D2^b D0^c Dr^d``
  applied to an :class:`Atom`;
* :class:`Func` -- ``exp``, ``sin``, ``cos`` or ``log`` of a normal form;
* :class:`Paren` -- a non-monomial normal form raised to a non-positive-integer
  power (reciprocals of sums).

Everything here is context free: products, sums and powers never need the
commutator relations.  Differentiation and conjugation live in
:mod:`quasifeff.kernel.algebra`.
"""

from __future__ import annotations

from dataclasses import dataclass

from .numbers import ONE, QI, ZERO, as_qi, rational

__all__ = [
    "Atom",
    "Word",
    "Func",
    "Paren",
    "Poly",
    "FieldExpr",
    "D1",
    "D2",
    "D0",
    "DR",
    "LETTER_NAMES",
    "R",
    "const",
    "atom",
    "word",
    "exp_",
    "sin_",
    "cos_",
    "log_",
    "inverse",
    "poly_pow",
    "I_",
]

D1, D2, D0, DR = 0, 1, 2, 3
LETTER_NAMES = ("D1", "D2", "D0", "Dr")


@dataclass(frozen=True)
class Atom:
    """A named scalar function.

    ``conj_name`` defaults to ``name`` for real atoms and ``name + "bar"``
    otherwise.  Atoms that are not ``r_dependent`` are annihilated by ``Dr``;
    ``constant`` atoms are annihilated by every derivation.
    """

    name: str
    real: bool = False
    r_dependent: bool = False
    constant: bool = False
    conj_name: str = ""

    def __post_init__(self):
        if not self.conj_name:
            object.__setattr__(self, "conj_name", self.name if self.real else self.name + "bar")
        if self.real and self.conj_name != self.name:
            raise ValueError(f"real atom {self.name!r} must be its own conjugate")

    def conjugate(self) -> "Atom":
        if self.real:
            return self
        return Atom(self.conj_name, False, self.r_dependent, self.constant, self.name)


#: the fiber coordinate of the trivialised circle bundle
R = Atom("r", real=True, r_dependent=True)


def _pw(p):
    """Store integral powers as ``int`` and the rest as ``mpq``."""
    if isinstance(p, int):
        return p
    p = rational(p)
    return int(p) if p.denominator == 1 else p


class Factor:
    __slots__ = ()
    is_exp = False


class Word(Factor):
    """``D1^n1 D2^n2 D0^n0 Dr^nr`` applied to ``atom`` (letters applied right to left)."""

    __slots__ = ("atom", "counts", "key", "_hash")

    def __init__(self, atom: Atom, counts=(0, 0, 0, 0)):
        self.atom = atom
        self.counts = tuple(counts)
        self.key = (0, atom.name, self.counts)
        self._hash = hash(self.key)

    @property
    def order(self) -> int:
        return sum(self.counts)

    def __eq__(self, other):
        return isinstance(other, Word) and self.key == other.key

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Word({self.atom.name}, {self.counts})"


class Func(Factor):
    """A transcendental node ``kind(arg)``; ``arg`` is a :class:`Poly`."""

    __slots__ = ("kind", "arg", "_key", "_hash", "is_exp")
    KINDS = ("exp", "sin", "cos", "log")

    def __init__(self, kind: str, arg: "Poly"):
        if kind not in self.KINDS:
            raise ValueError(f"unknown function {kind!r}")
        self.kind = kind
        self.arg = arg
        self.is_exp = kind == "exp"
        self._key = None
        self._hash = hash((kind, arg))

    @property
    def key(self):
        if self._key is None:
            self._key = (1, self.kind, self.arg.key)
        return self._key

    def __eq__(self, other):
        return (
            isinstance(other, Func)
            and self._hash == other._hash
            and self.kind == other.kind
            and self.arg == other.arg
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Func({self.kind}, {self.arg!r})"


class Paren(Factor):
    """An opaque non-monomial sum, only ever raised to non-positive-integer powers."""

    __slots__ = ("arg", "_key", "_hash")

    def __init__(self, arg: "Poly"):
        self.arg = arg
        self._key = None
        self._hash = hash(("paren", arg))

    @property
    def key(self):
        if self._key is None:
            self._key = (2, self.arg.key)
        return self._key

    def __eq__(self, other):
        return isinstance(other, Paren) and self._hash == other._hash and self.arg == other.arg

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Paren({self.arg!r})"


EMPTY = frozenset()


def mono_key(m) -> tuple:
    return tuple(sorted(((f.key, p) for f, p in m), key=lambda t: t[0]))


def mono_mul(m1, m2):
    if not m1:
        return m2
    if not m2:
        return m1
    d = dict(m1)
    for f, p in m2:
        q = d.get(f)
        if q is None:
            d[f] = p
        else:
            s = _pw(q + p)
            if s:
                d[f] = s
            else:
                del d[f]
    return _canon_exp(d)


def _canon_exp(d: dict):
    """At most one ``exp`` factor per monomial, with power one and nonzero argument."""
    exps = [f for f in d if f.is_exp]
    if exps and (len(exps) > 1 or d[exps[0]] != 1):
        arg = Poly({})
        for f in exps:
            arg = arg + f.arg * Poly.const(d.pop(f))
        if arg.terms:
            d[Func("exp", arg)] = 1
    return frozenset(d.items())


def mono_pow(m, q):
    d = {}
    for f, p in m:
        d[f] = _pw(p * q)
    return _canon_exp(d)


class FieldExpr:
    """Base class for expressions (normal forms and unevaluated trees).

    Arithmetic between two :class:`Poly` values is performed eagerly; as soon
    as an unevaluated tree node is involved a tree is built instead.
    """

    __slots__ = ()

    def _tree(self):
        from . import tree

        return tree

    def __add__(self, other):
        return self._tree().Add((self, self._tree().lift(other)))

    def __radd__(self, other):
        return self._tree().Add((self._tree().lift(other), self))

    def __sub__(self, other):
        return self + (-self._tree().lift(other))

    def __rsub__(self, other):
        return self._tree().lift(other) + (-self)

    def __mul__(self, other):
        return self._tree().Mul((self, self._tree().lift(other)))

    def __rmul__(self, other):
        return self._tree().Mul((self._tree().lift(other), self))

    def __neg__(self):
        return self._tree().Mul((self._tree().Const(-ONE), self))

    def __truediv__(self, other):
        return self * self._tree().Pow(self._tree().lift(other), -1)

    def __rtruediv__(self, other):
        return self._tree().lift(other) * self._tree().Pow(self, -1)

    def __pow__(self, n):
        return self._tree().Pow(self, n)


class Poly(FieldExpr):
    """A normal form: ``{monomial: coefficient}`` with no zero coefficients."""

    __slots__ = ("terms", "_hash", "_key")

    def __init__(self, terms=None):
        self.terms = terms if terms is not None else {}
        self._hash = None
        self._key = None

    # construction -----------------------------------------------------------
    @staticmethod
    def const(value) -> "Poly":
        q = as_qi(value)
        return Poly({EMPTY: q}) if q else Poly({})

    @staticmethod
    def factor(f: Factor, power=1) -> "Poly":
        return Poly({frozenset(((f, _pw(power)),)): ONE})

    @staticmethod
    def mono(m, coeff=ONE) -> "Poly":
        return Poly({m: coeff}) if coeff else Poly({})

    # structure ---------------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def constant_value(self):
        """Return the coefficient if this is a constant, else ``None``."""
        if not self.terms:
            return ZERO
        if len(self.terms) == 1 and EMPTY in self.terms:
            return self.terms[EMPTY]
        return None

    def factors(self):
        seen = set()
        for m in self.terms:
            for f, _ in m:
                if f not in seen:
                    seen.add(f)
                    yield f

    def atoms(self) -> set:
        """Names of all atoms appearing anywhere (including inside nodes)."""
        out = set()
        for f in self.factors():
            if isinstance(f, Word):
                out.add(f.atom.name)
            else:
                out |= f.arg.atoms()
        return out

    def words(self) -> set:
        out = set()
        for f in self.factors():
            if isinstance(f, Word):
                out.add(f)
            else:
                out |= f.arg.words()
        return out

    @property
    def key(self):
        if self._key is None:
            self._key = tuple(
                sorted(((mono_key(m), c.sort_key()) for m, c in self.terms.items()))
            )
        return self._key

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda mc: mono_key(mc[0]))

    def __eq__(self, other):
        if isinstance(other, Poly):
            if self is other:
                return True
            if len(self.terms) != len(other.terms):
                return False
            return self.terms == other.terms
        if isinstance(other, (int, QI, complex)) or hasattr(other, "denominator"):
            return self == Poly.const(other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __repr__(self):
        from .printing import to_text

        return f"Poly({to_text(self)})"

    def __str__(self):
        from .printing import to_text

        return to_text(self)

    # arithmetic ------------------------------------------------------------------
    @staticmethod
    def _coerce(other):
        if isinstance(other, Poly):
            return other
        if isinstance(other, FieldExpr):
            return None
        return Poly.const(other)

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return FieldExpr.__add__(self, other)
        if not o.terms:
            return self
        if not self.terms:
            return o
        if len(o.terms) > len(self.terms):
            big, small = o, self
        else:
            big, small = self, o
        acc = dict(big.terms)
        for m, c in small.terms.items():
            v = acc.get(m)
            if v is None:
                acc[m] = c
            else:
                s = v + c
                if s:
                    acc[m] = s
                else:
                    del acc[m]
        return Poly(acc)

    def __radd__(self, other):
        return self.__add__(other)

    def __neg__(self):
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return FieldExpr.__sub__(self, other)
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return FieldExpr.__rsub__(self, other)
        return o + (-self)

    def scale(self, q) -> "Poly":
        q = as_qi(q)
        if not q:
            return Poly({})
        if q == ONE:
            return self
        return Poly({m: c * q for m, c in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, Poly):
            if isinstance(other, FieldExpr):
                return FieldExpr.__mul__(self, other)
            return self.scale(other)
        a, b = self.terms, other.terms
        if not a or not b:
            return Poly({})
        if len(a) < len(b):
            a, b = b, a
        if len(b) == 1:
            ((m2, c2),) = b.items()
            if not m2:
                return Poly({m: c * c2 for m, c in a.items()})
        acc = {}
        get = acc.get
        for m2, c2 in b.items():
            for m1, c1 in a.items():
                m = mono_mul(m1, m2)
                v = get(m)
                acc[m] = c1 * c2 if v is None else v + c1 * c2
        return Poly({m: c for m, c in acc.items() if c})

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return FieldExpr.__truediv__(self, other)
        return self * inverse(o)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return FieldExpr.__rtruediv__(self, other)
        return o * inverse(self)

    def __pow__(self, q):
        if isinstance(q, FieldExpr):
            return FieldExpr.__pow__(self, q)
        return poly_pow(self, q)

    def conj_coefficients(self) -> "Poly":
        return Poly({m: c.conjugate() for m, c in self.terms.items()})


# constructors -----------------------------------------------------------------

I_ = Poly.const(QI(0, 1))


def const(value) -> Poly:
    return Poly.const(value)


def atom(a: Atom) -> Poly:
    return Poly.factor(Word(a))


def word(a: Atom, counts) -> Poly:
    """A raw derivative word; callers must ensure it is canonical for their context."""
    return Poly.factor(Word(a, counts))


def exp_(arg: Poly) -> Poly:
    if not arg.terms:
        return Poly.const(1)
    # log(u) inside exp with integer multiplicity collapses to a power of u
    if len(arg.terms) == 1:
        ((m, c),) = arg.terms.items()
        if len(m) == 1:
            ((f, p),) = m
            if isinstance(f, Func) and f.kind == "log" and p == 1 and c.is_real():
                n = c.re
                if n.denominator == 1:
                    return poly_pow(f.arg, int(n))
    return Poly.factor(Func("exp", arg))


def sin_(arg: Poly) -> Poly:
    if not arg.terms:
        return Poly({})
    return Poly.factor(Func("sin", arg))


def cos_(arg: Poly) -> Poly:
    if not arg.terms:
        return Poly.const(1)
    return Poly.factor(Func("cos", arg))


def log_(arg: Poly) -> Poly:
    if arg.is_zero():
        raise ValueError("log(0)")
    if arg == Poly.const(1):
        return Poly({})
    if len(arg.terms) == 1:
        ((m, c),) = arg.terms.items()
        if c == ONE and len(m) == 1:
            ((f, p),) = m
            if f.is_exp and p == 1:
                return f.arg
    return Poly.factor(Func("log", arg))


def _monic(p: Poly):
    """Split a sum into ``lead * q`` with ``q`` having leading coefficient one."""
    lead_mono, lead_c = p.sorted_terms()[0]
    return lead_c, p.scale(ONE / lead_c)


def inverse(p: Poly) -> Poly:
    return poly_pow(p, -1)


def poly_pow(p: Poly, q) -> Poly:
    """``p ** q`` for integer or rational ``q``.

    Positive integer powers of sums are expanded; every other power of a sum
    is kept as a :class:`Paren` factor.  Rational powers of non-unit constant
    coefficients are represented as ``exp(q*log(c))``.
    """
    q = _pw(q)
    if q == 0:
        return Poly.const(1)
    if q == 1:
        return p
    if p.is_zero():
        if isinstance(q, int) and q > 0:
            return p
        raise ZeroDivisionError("non-positive power of zero")
    if len(p.terms) == 1:
        ((m, c),) = p.terms.items()
        mono = mono_pow(m, q)
        if isinstance(q, int):
            return Poly({mono: c**q})
        if c == ONE:
            return Poly({mono: ONE})
        return Poly({mono: ONE}) * exp_(log_(Poly.const(c)).scale(q))
    if isinstance(q, int) and q > 0:
        out, base = Poly.const(1), p
        while q:
            if q & 1:
                out = out * base
            base = base * base
            q >>= 1
        return out
    lead, monic = _monic(p)
    out = Poly.factor(Paren(monic), q)
    if isinstance(q, int):
        return out.scale(lead**q)
    return out * poly_pow(Poly.const(lead), q)
