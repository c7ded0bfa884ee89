"""Numeric evaluation of normal forms and equality testing."""

from __future__ import annotations

import cmath
import random
from fractions import Fraction
from dataclasses import dataclass, field

from .expr import LETTER_NAMES, Paren, Poly, Word
from .numbers import QI
from .tree import normalize

__all__ = [
    "PointSample",
    "MissingAssignment",
    "ConfigurationError",
    "evaluate",
    "evaluate_exact",
    "word_text",
    "Structural",
    "Randomized",
    "DEFAULT_POLICY",
    "equals",
    "is_zero",
    "random_sample",
]


class MissingAssignment(KeyError):
    """A derivative word needed for evaluation has no value in the sample."""

    def __init__(self, word):
        self.word = word
        super().__init__(f"no value assigned to {word}")

    def __str__(self):
        return self.args[0]


class ConfigurationError(ValueError):
    """Invalid run configuration (for example a sampler lacking an atom)."""


def word_text(name: str, counts) -> str:
    s = name
    for letter in reversed(range(4)):
        for _ in range(counts[letter]):
            s = f"{LETTER_NAMES[letter]}({s})"
    return s


@dataclass
class PointSample:
    """Values of derivative words at one point of the base (and fiber).

    ``values`` maps ``(atom_name, counts)`` to a complex number.  The fiber
    coordinate ``r`` is stored separately and also answers the bare word of
    the atom ``r``.
    """

    values: dict = field(default_factory=dict)
    r: float | None = None
    point: tuple = ()

    def lookup(self, name: str, counts):
        if name == "r" and self.r is not None and not any(counts):
            return self.r
        try:
            return self.values[(name, counts)]
        except KeyError:
            raise MissingAssignment(word_text(name, counts)) from None

    def with_values(self, extra: dict, r=None) -> "PointSample":
        vals = dict(self.values)
        vals.update(extra)
        return PointSample(vals, self.r if r is None else r, self.point)

    def __contains__(self, key):
        return key in self.values


_CFUNC = {"exp": cmath.exp, "sin": cmath.sin, "cos": cmath.cos, "log": cmath.log}


def evaluate(e, sample: PointSample, ctx=None) -> complex:
    """Evaluate a normal form (or a tree, normalized in ``ctx``) at a sample."""
    p = e if isinstance(e, Poly) and ctx is None else normalize(e, ctx)
    return _eval_poly(p, sample, {})


def _eval_factor(f, sample, memo):
    v = memo.get(f)
    if v is None:
        if isinstance(f, Word):
            v = complex(sample.lookup(f.atom.name, f.counts))
        elif isinstance(f, Paren):
            v = _eval_poly(f.arg, sample, memo)
        else:
            v = _CFUNC[f.kind](_eval_poly(f.arg, sample, memo))
        memo[f] = v
    return v


def _eval_poly(p, sample, memo) -> complex:
    total = 0j
    for m, c in p.terms.items():
        t = complex(c)
        for f, pw in m:
            v = _eval_factor(f, sample, memo)
            if isinstance(pw, int):
                t *= v**pw
            else:
                t *= v ** float(pw)
        total += t
    return total


def evaluate_exact(p: Poly, values) -> QI:
    """Exact evaluation with :class:`QI` values; only polynomial/rational nodes allowed.

    ``values`` maps ``(atom_name, counts)`` to exact numbers.
    """
    total = QI(0)
    memo = {}
    for m, c in p.terms.items():
        t = c
        for f, pw in m:
            if not isinstance(f, Word) or not isinstance(pw, int):
                raise TypeError("exact evaluation needs a polynomial normal form")
            v = memo.get(f)
            if v is None:
                key = (f.atom.name, f.counts)
                if key not in values:
                    raise MissingAssignment(word_text(*key))
                v = QI(0) + values[key]
                memo[f] = v
            t = t * v**pw
        total = total + t
    return total


def _is_polynomial(p: Poly) -> bool:
    return all(isinstance(f, Word) and isinstance(pw, int) for m in p.terms for f, pw in m)


def _all_words(p: Poly, out=None):
    out = set() if out is None else out
    for m in p.terms:
        for f, _ in m:
            if isinstance(f, Word):
                out.add(f)
            else:
                _all_words(f.arg, out)
    return out


def _num(rng, scale):
    # nonzero rationals in [-2, 2] so reciprocal nodes stay finite
    return Fraction(rng.randint(1, 16), 8 * scale) * rng.choice((1, -1))


def random_sample(p: Poly, rng: random.Random, sampler=None, exact=False, scale=1):
    """Independent random values for every word of ``p``.

    Normal forms are free of conjugation nodes, so identities between them
    are polynomial identities in independent word values and complexified
    sampling is sound.  Real atoms get real values so that transcendental
    nodes such as ``exp(I*r)`` stay bounded.

    ``sampler`` may map atom names to callables ``(rng, counts) -> number``;
    when given it must cover every atom that occurs.
    """
    values = {}
    for w in sorted(_all_words(p), key=lambda w: w.key):
        name = w.atom.name
        if sampler is not None:
            if name not in sampler:
                raise ConfigurationError(f"sampler has no entry for atom {name!r}")
            values[(name, w.counts)] = sampler[name](rng, w.counts)
            continue
        if w.atom.real and not any(w.counts):
            v = QI(_num(rng, scale))
        else:
            v = QI(_num(rng, scale), _num(rng, scale))
        values[(name, w.counts)] = v if exact else complex(v)
    return values


@dataclass(frozen=True)
class Structural:
    """Compare normal forms term by term."""


@dataclass(frozen=True)
class Randomized:
    """Evaluate the difference at ``n`` random assignments; equal iff all ``|·| <= tol``."""

    n: int = 8
    tol: float = 1e-9
    seed: int = 0
    structural_first: bool = True


DEFAULT_POLICY = Randomized(8, 1e-9)


def is_zero(e, ctx=None, policy=DEFAULT_POLICY, sampler=None) -> bool:
    p = e if isinstance(e, Poly) and ctx is None else normalize(e, ctx)
    if isinstance(policy, Structural):
        return p.is_zero()
    if policy.structural_first and p.is_zero():
        return True
    rng = random.Random(policy.seed)
    exact = _is_polynomial(p)
    for _ in range(policy.n):
        vals = random_sample(p, rng, sampler, exact=exact)
        if exact:
            v = evaluate_exact(p, vals)
            if abs(complex(v)) > policy.tol:
                return False
        else:
            v = _eval_poly(p, PointSample(vals), {})
            if not abs(v) <= policy.tol:
                return False
    return True


def equals(e1, e2, ctx=None, policy=DEFAULT_POLICY, sampler=None) -> bool:
    """Equality of two expressions under a policy (structural or randomized)."""
    if ctx is None:
        if not (isinstance(e1, Poly) and isinstance(e2, Poly)):
            raise ValueError("trees need a FrameAlgebra context to be compared")
        d = e1 - e2
    else:
        d = normalize(e1, ctx) - normalize(e2, ctx)
    return is_zero(d, None, policy, sampler)
