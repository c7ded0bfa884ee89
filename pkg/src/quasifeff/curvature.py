"""Levi-Civita connection and curvature of a metric with constant Gram matrix in a rigid frame.

Conventions (indices 0-based in code, 1-based in names and reports):

* ``Γ^i_j = Γ^i_{jk} θ^k`` with ``dθ^i + Γ^i_k ∧ θ^k = 0``, so
  ``Γ^i_{nm} - Γ^i_{mn} = c^i_{mn}`` and ``Γ^i_{jk} = θ^i(∇_{e_k} e_j)``.
* ``dΓ^i_j + Γ^i_m ∧ Γ^m_j = Σ_{k<l} R^i_{jkl} θ^k∧θ^l`` (no factor one half).
* ``R_{ijkl} = g_{im} R^m_{jkl}``, ``R_{jl} = R^k_{jkl}``, ``R = g^{jl} R_{jl}``.
* ``Ψ₀ = C_{4141}``, ``Ψ₁ = C_{4341}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product

import sympy

from .bundle import GRAM, AdaptedFrameBundle
from .forms import Form
from .kernel import Poly
from .kernel.evaluate import PointSample, evaluate
from .kernel.numbers import QI

__all__ = [
    "ConnectionCoefficients",
    "CurvatureSet",
    "levi_civita",
    "koszul_connection",
    "curvature",
    "alpha_plane_ricci",
    "goldberg_sachs_check",
    "GoldbergSachsReport",
    "FORCED_RIEMANN",
    "torsion_residual",
]

N = 4
_PAIRS = list(combinations(range(N), 2))
_ZERO = Poly({})


def _lower(i: int) -> int:
    """The single index ``m`` with ``g_{im} = 1``."""
    return int(GRAM[i].argmax())


def _solver_matrix():
    """Inverse of the linear map from lowered ``Γ_{ijk}`` (``i<j``) to lowered torsion data.

    Unknowns ``Γ_{ijk}`` for ``i<j`` (24); equations ``Γ_{anm} - Γ_{amn} = c_{amn}``
    for every ``a`` and ``m<n`` (24), with ``Γ_{jik} = -Γ_{ijk}``.
    """
    unknowns = [(i, j, k) for (i, j) in _PAIRS for k in range(N)]
    col = {u: n for n, u in enumerate(unknowns)}

    def entry(i, j, k):
        if i == j:
            return None, 0
        if i < j:
            return col[(i, j, k)], 1
        return col[(j, i, k)], -1

    rows = []
    eqs = [(a, m, n) for a in range(N) for (m, n) in _PAIRS]
    for a, m, n in eqs:
        row = [0] * len(unknowns)
        for (i, j, k), s in (((a, n, m), 1), ((a, m, n), -1)):
            c, sg = entry(i, j, k)
            if c is not None:
                row[c] += s * sg
        rows.append(row)
    inv = sympy.Matrix(rows).inv()
    mat = [[QI(str(inv[r, c])) for c in range(len(eqs))] for r in range(len(unknowns))]
    return unknowns, eqs, mat


_SOLVER = None


def _solver():
    global _SOLVER
    if _SOLVER is None:
        _SOLVER = _solver_matrix()
    return _SOLVER


@dataclass
class ConnectionCoefficients:
    """``Γ^i_{jk}`` (0-based) for a rigid frame; ``form(i, j)`` gives ``Γ^i_j`` as a 1-form."""

    up: dict
    bundle: AdaptedFrameBundle = None

    def __getitem__(self, key) -> Poly:
        return self.up.get(tuple(key), _ZERO)

    def lowered(self, i, j, k) -> Poly:
        return self[(_lower(i), j, k)]

    def form(self, i: int, j: int) -> Form:
        return Form.one([self[(i, j, k)] for k in range(N)])


def levi_civita(b: AdaptedFrameBundle) -> ConnectionCoefficients:
    """Solve the first structure equations with constant Gram matrix for ``Γ^i_{jk}``."""
    unknowns, eqs, mat = _solver()
    rhs = [b.structure_constant(_lower(a), m, n) for (a, m, n) in eqs]
    low = {}
    for r, (i, j, k) in enumerate(unknowns):
        acc = _ZERO
        for cidx, coef in enumerate(mat[r]):
            if coef != 0 and not rhs[cidx].is_zero():
                acc = acc + rhs[cidx].scale(coef)
        acc = b.ctx.reduce(acc)
        low[(i, j, k)] = acc
        low[(j, i, k)] = -acc
    up = {}
    for i, j, k in product(range(N), repeat=3):
        v = low.get((_lower(i), j, k), _ZERO)
        if not v.is_zero():
            up[(i, j, k)] = v
    return ConnectionCoefficients(up, b)


def koszul_connection(b: AdaptedFrameBundle) -> ConnectionCoefficients:
    """Closed-form alternative: ``2Γ_{ijk} = c_{ikj} - c_{kji} + c_{jik}`` (lowered first index)."""

    def cl(a, m, n):
        return b.structure_constant(_lower(a), m, n)

    up = {}
    for i, j, k in product(range(N), repeat=3):
        il = _lower(i)
        v = b.ctx.reduce((cl(il, k, j) - cl(k, j, il) + cl(j, il, k)).scale(QI("1/2")))
        if not v.is_zero():
            up[(i, j, k)] = v
    return ConnectionCoefficients(up, b)


def torsion_residual(G: ConnectionCoefficients, b: AdaptedFrameBundle, i: int) -> Form:
    """``dθ^i + Γ^i_k ∧ θ^k``; zero for the Levi-Civita connection."""
    from .forms import wedge

    out = Form.basis(i).d(b)
    for k in range(N):
        out = out + wedge(G.form(i, k), Form.basis(k))
    return out.map(b.ctx.reduce)


@dataclass
class CurvatureSet:
    """Lazily computed curvature components (0-based indices, cached)."""

    G: ConnectionCoefficients
    bundle: AdaptedFrameBundle
    _R: dict = field(default_factory=dict, repr=False)
    _ric: dict = field(default_factory=dict, repr=False)
    _weyl: dict = field(default_factory=dict, repr=False)
    _scalar: Poly = field(default=None, repr=False)

    def riemann_up(self, i, j, k, l) -> Poly:
        """``R^i_{jkl}``."""
        if k == l:
            return _ZERO
        if k > l:
            return -self.riemann_up(i, j, l, k)
        key = (i, j, k, l)
        v = self._R.get(key)
        if v is None:
            b, G = self.bundle, self.G
            v = b.apply(k, G[(i, j, l)]) - b.apply(l, G[(i, j, k)])
            for m in range(N):
                cst = b.structure_constant(m, k, l)
                if not cst.is_zero():
                    v = v - cst * G[(i, j, m)]
                v = v + G[(i, m, k)] * G[(m, j, l)] - G[(i, m, l)] * G[(m, j, k)]
            v = b.ctx.reduce(v)
            self._R[key] = v
        return v

    def riemann(self, i, j, k, l) -> Poly:
        """``R_{ijkl} = g_{im} R^m_{jkl}``."""
        return self.riemann_up(_lower(i), j, k, l)

    def ricci(self, j, l) -> Poly:
        key = (j, l)
        v = self._ric.get(key)
        if v is None:
            v = _ZERO
            for k in range(N):
                v = v + self.riemann_up(k, j, k, l)
            v = self.bundle.ctx.reduce(v)
            self._ric[key] = v
        return v

    def scalar(self) -> Poly:
        if self._scalar is None:
            v = _ZERO
            for j in range(N):
                v = v + self.ricci(j, _lower(j))
            self._scalar = self.bundle.ctx.reduce(v)
        return self._scalar

    def weyl(self, i, j, k, l) -> Poly:
        """``C_{ijkl}`` from the standard decomposition for a 4-dimensional metric."""
        key = (i, j, k, l)
        v = self._weyl.get(key)
        if v is None:
            g = GRAM
            v = self.riemann(i, j, k, l)
            gg = int(g[i, k] * g[l, j] - g[i, l] * g[k, j])
            if gg:
                v = v + self.scalar().scale(QI(gg) * QI("1/6"))
            for s, Rt in (
                (int(g[i, l]), (k, j)),
                (-int(g[i, k]), (l, j)),
                (int(g[j, k]), (l, i)),
                (-int(g[j, l]), (k, i)),
            ):
                if s:
                    v = v + self.ricci(*Rt).scale(QI(s) * QI("1/2"))
            v = self.bundle.ctx.reduce(v)
            self._weyl[key] = v
        return v

    @property
    def psi0(self) -> Poly:
        return self.weyl(3, 0, 3, 0)

    @property
    def psi1(self) -> Poly:
        return self.weyl(3, 2, 3, 0)


def curvature(G: ConnectionCoefficients, b: AdaptedFrameBundle = None) -> CurvatureSet:
    return CurvatureSet(G, b or G.bundle)


def alpha_plane_ricci(cs: CurvatureSet):
    """``(R₂₂, R₂₄, R₄₄)``; their vanishing is Ricci flatness on α-planes."""
    return cs.ricci(1, 1), cs.ricci(1, 3), cs.ricci(3, 3)


#: 1-based index quadruples of the Riemann components forced to vanish
FORCED_RIEMANN = ((2, 4, 1, 2), (2, 4, 2, 4), (2, 4, 1, 4), (2, 4, 2, 3), (2, 4, 3, 4))


@dataclass
class GoldbergSachsReport:
    hypotheses_met: bool
    conclusion_holds: bool | None
    samples: list
    tolerance: float

    @property
    def status(self) -> str:
        if not self.hypotheses_met:
            return "hypotheses not met"
        return "conclusion holds" if self.conclusion_holds else "conclusion violated"


def goldberg_sachs_check(cs: CurvatureSet, b: AdaptedFrameBundle, pts, tol: float = 1e-9):
    """Check the hypotheses at each sample and, if they hold, the Weyl-scalar conclusion.

    ``pts`` is a sequence of :class:`PointSample`.  Each sample entry lists the
    residuals of the hypotheses (two shear-free residuals, ``R₂₂, R₂₄, R₄₄``)
    and of the conclusion (``Ψ₀, Ψ₁`` and the five Riemann components).
    """
    from .bundle import shear_free_forms

    sf = shear_free_forms(b)
    hyp = {"shear_free_1": sf[0], "shear_free_2": sf[1]}
    for name, p in zip(("R22", "R24", "R44"), alpha_plane_ricci(cs)):
        hyp[name] = p
    concl = {"Psi0": cs.psi0, "Psi1": cs.psi1}
    for q in FORCED_RIEMANN:
        concl["R" + "".join(map(str, q))] = cs.riemann(*(x - 1 for x in q))
    samples = []
    hyp_ok = True
    concl_ok = True
    for p in pts:
        h = {k: abs(evaluate(v, p)) for k, v in hyp.items()}
        c = {k: abs(evaluate(v, p)) for k, v in concl.items()}
        hok = all(v <= tol for v in h.values())
        cok = all(v <= tol for v in c.values())
        hyp_ok &= hok
        concl_ok &= cok
        samples.append({"point": list(getattr(p, "point", ())), "hypotheses": h, "conclusion": c})
    return GoldbergSachsReport(hyp_ok, concl_ok if hyp_ok else None, samples, tol)


def component_name(kind: str, idx) -> str:
    return kind + "".join(str(i + 1) for i in idx)


def evaluate_components(cs: CurvatureSet, sample: PointSample, which=("ricci",)) -> dict:
    """Numeric values of selected component families at one sample."""
    out = {}
    if "ricci" in which:
        for j, l in product(range(N), repeat=2):
            out[component_name("R", (j, l))] = evaluate(cs.ricci(j, l), sample)
    if "riemann" in which:
        for i, j in product(range(N), repeat=2):
            for k, l in _PAIRS:
                out[component_name("R", (i, j, k, l))] = evaluate(cs.riemann(i, j, k, l), sample)
    if "weyl" in which:
        out["Psi0"] = evaluate(cs.psi0, sample)
        out["Psi1"] = evaluate(cs.psi1, sample)
    return out
