"""Exact complex rationals (Gaussian rationals) used as expression coefficients."""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

from gmpy2 import mpq

__all__ = ["QI", "as_qi", "rational"]


def rational(value) -> mpq:
    """Coerce an int, Fraction, mpq or decimal string to an exact rational."""
    if isinstance(value, type(mpq())):
        return value
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    if isinstance(value, (int, str)):
        return mpq(value)
    if isinstance(value, Rational):
        return mpq(value.numerator, value.denominator)
    if isinstance(value, float):
        # exact binary value; callers wanting 0.1 == 1/10 should pass a string
        return mpq(Fraction(value).numerator, Fraction(value).denominator)
    raise TypeError(f"cannot convert {value!r} to an exact rational")


class QI:
    """A number ``re + i*im`` with exact rational parts.

    Instances are immutable and hashable; ``QI(n) == n`` for integers so they
    can be used interchangeably with plain numbers in comparisons.
    """

    __slots__ = ("re", "im", "_hash")

    def __init__(self, re=0, im=0):
        self.re = rational(re)
        self.im = rational(im)
        self._hash = None

    @classmethod
    def _raw(cls, re, im) -> "QI":
        obj = object.__new__(cls)
        obj.re = re
        obj.im = im
        obj._hash = None
        return obj

    # arithmetic -------------------------------------------------------------
    def __add__(self, other):
        other = as_qi(other)
        return QI._raw(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = as_qi(other)
        return QI._raw(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return as_qi(other) - self

    def __mul__(self, other):
        other = as_qi(other)
        a, b, c, d = self.re, self.im, other.re, other.im
        if not b and not d:
            return QI._raw(a * c, b)
        return QI._raw(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __neg__(self):
        return QI._raw(-self.re, -self.im)

    def __truediv__(self, other):
        other = as_qi(other)
        c, d = other.re, other.im
        den = c * c + d * d
        if not den:
            raise ZeroDivisionError("division by zero Gaussian rational")
        a, b = self.re, self.im
        return QI._raw((a * c + b * d) / den, (b * c - a * d) / den)

    def __rtruediv__(self, other):
        return as_qi(other) / self

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("QI supports integer powers only")
        if n < 0:
            return (ONE / self) ** (-n)
        result, base = ONE, self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def conjugate(self) -> "QI":
        return QI._raw(self.re, -self.im)

    # predicates / conversion ----------------------------------------------
    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def is_real(self) -> bool:
        return not self.im

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __eq__(self, other):
        try:
            other = as_qi(other)
        except TypeError:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.re) if not self.im else hash((self.re, self.im))
        return self._hash

    def sort_key(self):
        return (self.re, self.im)

    def __repr__(self):
        return f"QI({self.re}, {self.im})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}*I"
        return f"({self.re}{'+' if self.im > 0 else '-'}{abs(self.im)}*I)"


ZERO = QI._raw(mpq(0), mpq(0))
ONE = QI._raw(mpq(1), mpq(0))
I = QI._raw(mpq(0), mpq(1))


def as_qi(value) -> QI:
    if isinstance(value, QI):
        return value
    if isinstance(value, complex):
        return QI(rational(value.real), rational(value.imag))
    return QI._raw(rational(value), mpq(0))
