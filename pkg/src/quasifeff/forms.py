"""Exterior forms expanded in a rigid coframe ``θ¹..θⁿ``.

A form is a map from strictly increasing index tuples (0-based) to
:class:`~quasifeff.kernel.Poly` coefficients.  Exterior derivatives use the
structure constants of the dual frame: ``dθ^i = -Σ_{m<n} c^i_{mn} θ^m∧θ^n``.
"""

from __future__ import annotations

from itertools import combinations

from .kernel import Poly

__all__ = ["Form", "wedge", "perm_sign"]


def perm_sign(seq) -> int:
    """Sign of the permutation sorting ``seq`` (0 if an index repeats)."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


class Form:
    __slots__ = ("degree", "comps")

    def __init__(self, degree: int, comps=None):
        self.degree = degree
        self.comps = {k: v for k, v in (comps or {}).items() if not v.is_zero()}

    @staticmethod
    def one(coeffs) -> "Form":
        """1-form from a sequence of coefficients on ``θ¹..θⁿ``."""
        return Form(1, {(i,): c for i, c in enumerate(coeffs)})

    @staticmethod
    def basis(i: int) -> "Form":
        return Form(1, {(i,): Poly.const(1)})

    def __add__(self, other: "Form") -> "Form":
        assert self.degree == other.degree
        out = dict(self.comps)
        for k, v in other.comps.items():
            out[k] = out.get(k, Poly({})) + v
        return Form(self.degree, out)

    def __neg__(self):
        return Form(self.degree, {k: -v for k, v in self.comps.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, f: Poly) -> "Form":
        return Form(self.degree, {k: f * v for k, v in self.comps.items()})

    def __getitem__(self, idx) -> Poly:
        idx = tuple(idx)
        s = perm_sign(idx)
        if s == 0:
            return Poly({})
        v = self.comps.get(tuple(sorted(idx)), Poly({}))
        return v if s > 0 else -v

    def is_zero(self) -> bool:
        return not self.comps

    def map(self, fn) -> "Form":
        return Form(self.degree, {k: fn(v) for k, v in self.comps.items()})

    def d(self, bundle) -> "Form":
        """Exterior derivative using ``bundle.apply`` and ``bundle.structure_constant``."""
        n = bundle.dim
        out = {}
        for idx, f in self.comps.items():
            # d(f θ^I) = df ∧ θ^I + f dθ^I
            for m in range(n):
                if m in idx:
                    continue
                df = bundle.apply(m, f)
                if df.is_zero():
                    continue
                key = (m,) + idx
                s = perm_sign(key)
                k = tuple(sorted(key))
                out[k] = out.get(k, Poly({})) + (df if s > 0 else -df)
            for pos, i in enumerate(idx):
                # θ^{i_1}∧..∧dθ^{i}∧..: sign (-1)^pos
                for a, b in combinations(range(n), 2):
                    cst = bundle.structure_constant(i, a, b)
                    if cst.is_zero():
                        continue
                    key = idx[:pos] + (a, b) + idx[pos + 1 :]
                    s = perm_sign(key)
                    if s == 0:
                        continue
                    term = f * cst
                    sign = -s * (-1) ** pos
                    k = tuple(sorted(key))
                    out[k] = out.get(k, Poly({})) + (term if sign > 0 else -term)
        return Form(self.degree + 1, out)


def wedge(a: Form, b: Form) -> Form:
    out = {}
    for ka, va in a.comps.items():
        for kb, vb in b.comps.items():
            key = ka + kb
            s = perm_sign(key)
            if s == 0:
                continue
            k = tuple(sorted(key))
            t = va * vb
            out[k] = out.get(k, Poly({})) + (t if s > 0 else -t)
    return Form(a.degree + b.degree, out)
