"""Quasi-Fefferman metrics on the trivialized circle bundle and their adapted frames.

In a distinguished coframe ``(μ, μ̄, λ)`` with fiber coordinate ``r`` the
metric is

    g = 2P² [ μμ̄ + λ (dr + Wμ + W̄μ̄ + Hλ) ],   W = i x e^{-ir} - (i/3) c,

with the null coframe ``θ¹ = Pμ, θ² = Pμ̄, θ³ = Pλ, θ⁴ = P(dr + Wμ + W̄μ̄ + Hλ)``
and ``g = 2θ¹θ² + 2θ³θ⁴``.  Frame vectors are stored as ``{letter: Poly}``
over the letters ``D1, D2, D0, Dr``; the covectors dual to the letters are
``μ, μ̄, λ, dr``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cr import AbstractCRStructure, CoordinateCRStructure, GaugeTransform, vf_bracket
from .forms import Form, perm_sign, wedge
from .jets import JetEnv
from .kernel import GENERIC, FrameAlgebra, Poly, normalize, parse
from .kernel.evaluate import PointSample
from .kernel.algebra import STRUCTURE_ATOMS
from .kernel.expr import D0, D1, D2, DR, R, Atom, exp_, poly_pow
from .kernel.numbers import QI
from .kernel.parser import AtomTable
from .kernel.tree import Conj, lift

__all__ = [
    "P_ATOM",
    "H_ATOM",
    "X_ATOM",
    "GRAM",
    "QuasiFeffermanData",
    "AdaptedFrameBundle",
    "build_quasi_fefferman",
    "build_fefferman",
    "fefferman_H",
    "structure_constants",
    "transform_parameters",
    "shear_free_residual",
    "coordinate_shear_free_residual",
    "shear_free_forms",
    "coordinate_coframe",
    "coordinate_metric",
    "coordinate_frame",
    "fefferman_coordinate_metric",
    "adapt_frame",
    "AdaptFrameError",
    "bundle_env",
    "JetSample",
    "bundle_atom_table",
    "metric_function",
    "sample_at",
    "fefferman_data",
    "substitute",
    "gram_matrix",
]

P_ATOM = Atom("P", real=True, r_dependent=True)
H_ATOM = Atom("H", real=True, r_dependent=True)
X_ATOM = Atom("x", conj_name="xbar")
A_ATOM = Atom("a", real=True)
S_ATOM = Atom("s", real=True)

#: Gram matrix of g (and of its inverse) in an adapted frame, 0-based
GRAM = np.array([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])

_I = QI(0, 1)


def bundle_atom_table(extra=()) -> AtomTable:
    """Parser table with the bundle atoms and conventional real/complex flags."""
    atoms = (P_ATOM, H_ATOM, X_ATOM, A_ATOM, S_ATOM, Atom("tau", real=True), Atom("theta", real=True))
    return AtomTable(
        atoms=atoms + STRUCTURE_ATOMS + tuple(extra),
        real=("x1", "x2", "x3", "u", "t0", "theta0"),
    )


@dataclass
class QuasiFeffermanData:
    """Parameters ``(P, H, x)`` of a quasi-Fefferman metric, or ``(a, s)`` profile.

    Entries are expressions (strings in the config grammar, trees or normal
    forms).  For symbolic work they may reference the atoms ``P, H, x, a, s``
    themselves; for numeric work they are coordinate expressions in
    ``x1, x2, x3, r`` that may also use ``c``, ``D1(...)``, ``conj(...)`` etc.
    When ``a`` and ``s`` are given, ``P = a / cos((r+s)/2)``.
    """

    P: object = None
    H: object = 0
    x: object = 0
    a: object = None
    s: object = None
    defs: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    source: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("P", "H", "x", "a", "s"):
            v = getattr(self, name)
            if v is not None and name not in self.source:
                self.source[name] = v if isinstance(v, str) else _describe(v)
        if self.P is None:
            if self.a is None:
                self.P = 1
            else:
                self.s = 0 if self.s is None else self.s
                self.P = lift(_expr(self.a)) / cos_tree((lift(R) + lift(_expr(self.s))) / 2)
        for name in ("P", "H", "x", "a", "s"):
            v = getattr(self, name)
            if v is not None:
                setattr(self, name, lift(_expr(v)))
        self.defs = {k: lift(_expr(v)) for k, v in self.defs.items()}

    def describe(self) -> dict:
        """Parameter expressions as text, for reports."""
        return {k: str(v) for k, v in sorted(self.source.items())}

    @staticmethod
    def symbolic() -> "QuasiFeffermanData":
        """Generic data: ``P``, ``H``, ``x`` as free atoms."""
        return QuasiFeffermanData(P=lift(P_ATOM), H=lift(H_ATOM), x=lift(X_ATOM))

    def W_tree(self, c_tree=None):
        from .kernel.tree import exp as exp_tree

        c_tree = lift(Atom("c", conj_name="cbar")) if c_tree is None else c_tree
        return lift(QI(0, 1)) * self.x * exp_tree(lift(QI(0, -1)) * lift(R)) - lift(QI(0, 1)) / 3 * c_tree


def _describe(v) -> str:
    from .kernel.printing import to_text

    if isinstance(v, (int, float)):
        return repr(v)
    try:
        return to_text(normalize(v, GENERIC))
    except Exception:  # trees with coordinate-only nodes (e.g. Conj of a def)
        return repr(v)


def cos_tree(e):
    from .kernel.tree import cos

    return cos(e)


def _expr(v):
    if isinstance(v, str):
        return parse(v, bundle_atom_table())
    return v


@dataclass
class AdaptedFrameBundle:
    """Adapted null frame, coframe and structure constants of a quasi-Fefferman metric."""

    ctx: FrameAlgebra
    P: Poly
    H: Poly
    x: Poly
    W: Poly
    frame: tuple
    coframe: tuple
    data: QuasiFeffermanData = None
    dim: int = 4
    _consts: dict = field(default_factory=dict, repr=False)

    def apply(self, m: int, f: Poly) -> Poly:
        """``e_m(f)`` (0-based frame index)."""
        out = Poly({})
        for letter, coef in self.frame[m].items():
            d = self.ctx.diff_poly(letter, f)
            if not d.is_zero():
                out = out + coef * d
        return out

    def pairing(self, i: int, vf: dict) -> Poly:
        """``θ^i(V)`` for a vector field over the letters."""
        out = Poly({})
        for letter, v in vf.items():
            t = self.coframe[i].get(letter)
            if t is not None:
                out = out + t * v
        return out

    def structure_constant(self, k: int, m: int, n: int) -> Poly:
        """``c^k_{mn}`` with ``[e_m, e_n] = c^k_{mn} e_k`` (0-based)."""
        if m == n:
            return Poly({})
        if m > n:
            return -self.structure_constant(k, n, m)
        key = (m, n)
        br = self._consts.get(key)
        if br is None:
            vf = vf_bracket(self.ctx, self.frame[m], self.frame[n])
            br = tuple(self.ctx.reduce(self.pairing(kk, vf)) for kk in range(4))
            self._consts[key] = br
        return br[k]

    def coframe_form(self, i: int) -> Form:
        return Form.basis(i)

    def conj(self, p: Poly) -> Poly:
        return self.ctx.conj(p)


def build_quasi_fefferman(s, d: QuasiFeffermanData = None) -> AdaptedFrameBundle:
    """Symbolic frame, coframe and structure constants for the data ``d``.

    ``s`` is a :class:`FrameAlgebra` or an :class:`AbstractCRStructure` in
    its identity frame.
    """
    ctx = s.ctx if isinstance(s, AbstractCRStructure) else s
    d = d or QuasiFeffermanData.symbolic()
    P = normalize(d.P, ctx)
    H = normalize(d.H, ctx)
    x = normalize(d.x, ctx)
    if P.is_zero():
        raise ValueError("P must not vanish identically")
    c = ctx.word_poly(ctx.atom("c"), (0, 0, 0, 0))
    W = x * exp_(Poly.const(QI(0, -1)) * ctx.word_poly(R, (0, 0, 0, 0))).scale(_I) - c.scale(_I / 3)
    Wb = ctx.conj(W)
    Pi = poly_pow(P, -1)
    frame = (
        _vf2({D1: Pi, DR: -(W * Pi)}),
        _vf2({D2: Pi, DR: -(Wb * Pi)}),
        _vf2({D0: Pi, DR: -(H * Pi)}),
        _vf2({DR: Pi}),
    )
    coframe = (
        _vf2({D1: P}),
        _vf2({D2: P}),
        _vf2({D0: P}),
        _vf2({D1: P * W, D2: P * Wb, D0: P * H, DR: P}),
    )
    return AdaptedFrameBundle(ctx, P, H, x, W, frame, coframe, d)


def _vf2(m):
    return {k: v for k, v in m.items() if not v.is_zero()}


def fefferman_H(ctx: FrameAlgebra) -> Poly:
    """λλ-coefficient of the Fefferman representative in the quasi-Fefferman shape.

    ``H_F = -(∂c̄ + ∂̄c)/12 + i(α - ᾱ)/4``.
    """
    c = ctx.word_poly(ctx.atom("c"), (0, 0, 0, 0))
    cb = ctx.conj(c)
    al = ctx.word_poly(ctx.atom("alpha"), (0, 0, 0, 0))
    alb = ctx.conj(al)
    return (ctx.diff_poly(D1, cb) + ctx.diff_poly(D2, c)).scale(QI("-1/12")) + (al - alb).scale(QI(0, "1/4"))


FEFFERMAN_H_TEXT = "-(D1(cbar) + D2(c))/12 + I*(alpha - alphabar)/4"


def build_fefferman(s) -> AdaptedFrameBundle:
    """Fefferman representative as the quasi-Fefferman member ``x = 0, P = 1/√2, H = H_F``.

    With ``r = 2ρ/3`` this is ``μμ̄ + λ((2/3)dρ - (i/3)cμ + (i/3)c̄μ̄ + H_F λ)``.
    """
    ctx = s.ctx if isinstance(s, AbstractCRStructure) else s
    d = QuasiFeffermanData(P=poly_pow(Poly.const(2), "-1/2"), H=fefferman_H(ctx), x=0)
    return build_quasi_fefferman(ctx, d)


def fefferman_data() -> QuasiFeffermanData:
    """Fefferman parameters as coordinate-evaluable expressions."""
    return QuasiFeffermanData(P="1/sqrt(2)", H=FEFFERMAN_H_TEXT, x="0")


def structure_constants(b: AdaptedFrameBundle) -> dict:
    """All ``c^k_{mn}`` for ``m < n``, keyed by 1-based ``(k, m, n)``."""
    out = {}
    for m in range(4):
        for n in range(m + 1, 4):
            for k in range(4):
                out[(k + 1, m + 1, n + 1)] = b.structure_constant(k, m, n)
    return out


# shear-free residuals ---------------------------------------------------------------


def shear_free_forms(b: AdaptedFrameBundle):
    """``(dθ³∧θ¹∧θ³, dθ¹∧θ¹∧θ³)`` as 4-form coefficients on ``θ¹∧θ²∧θ³∧θ⁴``."""
    t1, t3 = Form.basis(0), Form.basis(2)
    out = []
    for i in (2, 0):
        dth = Form.basis(i).d(b)
        four = wedge(wedge(dth, t1), t3)
        out.append(b.ctx.reduce(four[(0, 1, 2, 3)]))
    return tuple(out)


def shear_free_residual(b, sample=None):
    """The two shear-free residuals, symbolic or evaluated at ``sample``."""
    from .kernel.evaluate import evaluate

    forms = shear_free_forms(b)
    if sample is None:
        return forms
    return tuple(evaluate(f, sample) for f in forms)


# numeric layer ------------------------------------------------------------------------


class JetSample(PointSample):
    """A point sample whose word values are computed on demand from a jet environment."""

    def __init__(self, env: JetEnv, r=None, point=()):
        super().__init__({}, r, point)
        self.env = env

    def lookup(self, name, counts):
        key = (name, counts)
        v = self.values.get(key)
        if v is None:
            if name == "r" and not any(counts):
                v = self.r
            else:
                v = self.env.word(name, counts).value
            self.values[key] = v
        return v


def bundle_env(s: CoordinateCRStructure, d: QuasiFeffermanData, point, r: float, order: int = 3) -> JetEnv:
    """Jet environment at ``(point, r)`` binding ``P, H, x, a, s`` and ``W`` to the data."""
    defs = dict(d.defs)
    for name in ("P", "H", "x", "a", "s"):
        v = getattr(d, name)
        if v is not None:
            defs[name] = v
    defs["W"] = d.W_tree()
    return s.env(point, order, r, defs=defs)


def coordinate_coframe(env: JetEnv, perturb=None, dr=None):
    """Coordinate components (over ``x1, x2, x3, r``) of ``θ¹..θ⁴`` as jets.

    ``perturb`` optionally maps the list of four 1-forms (lists of four jets)
    to a modified list, e.g. to break shear-freeness on purpose.  ``dr``
    replaces the coordinate components of the fiber differential.
    """
    frame = env.frame
    zero = env.space.const(0.0)
    one = env.space.const(1.0)
    mu = frame.mu + [zero]
    mub = frame.mubar + [zero]
    lam = frame.lam + [zero]
    dr = dr or [zero, zero, zero, one]
    P = env.symbol("P")
    W = env.symbol("W")
    Wb = W.conjugate()
    H = env.symbol("H")
    th = [
        [P * m for m in mu],
        [P * m for m in mub],
        [P * l for l in lam],
        [P * (dr[j] + W * mu[j] + Wb * mub[j] + H * lam[j]) for j in range(4)],
    ]
    if perturb is not None:
        th = perturb(th)
    return th


def coordinate_shear_free_residual(env: JetEnv, coframe=None):
    """Shear-free residuals computed directly from coordinate components of a coframe.

    Returns the ``θ¹∧θ²∧θ³∧θ⁴`` coefficients of ``dθ³∧θ¹∧θ³`` and
    ``dθ¹∧θ¹∧θ³`` at the base point, independently of the frame algebra.
    """
    th = coframe or coordinate_coframe(env)
    T = np.array([[t.value for t in row] for row in th])
    eps = _LEVI_CIVITA4
    vol = np.einsum("abcd,a,b,c,d->", eps, T[0], T[1], T[2], T[3])
    out = []
    for i in (2, 0):
        F = np.array([[th[i][b].partial(a).value - th[i][a].partial(b).value for b in range(4)] for a in range(4)])
        out.append(complex(0.5 * np.einsum("abcd,ab,c,d->", eps, F, T[0], T[2]) / vol))
    return tuple(out)


def _levi_civita4():
    from itertools import permutations

    e = np.zeros((4, 4, 4, 4))
    for p in permutations(range(4)):
        e[p] = perm_sign(p)
    return e


_LEVI_CIVITA4 = _levi_civita4()


def coordinate_metric(env: JetEnv, coframe=None):
    """Metric components ``g_jk`` at the base point from ``g = 2θ¹θ² + 2θ³θ⁴``."""
    th = coframe or coordinate_coframe(env)
    T = np.array([[t.value for t in row] for row in th])
    G = np.outer(T[0], T[1]) + np.outer(T[1], T[0]) + np.outer(T[2], T[3]) + np.outer(T[3], T[2])
    return G


def coordinate_frame(env: JetEnv):
    """Coordinate components of ``e₁..e₄`` at the base point (rows)."""
    f = env.frame
    P = env.symbol("P").value
    W = env.symbol("W").value
    H = env.symbol("H").value
    vec = [[x.value for x in f.vectors[a]] + [0.0] for a in range(3)]
    e1 = np.array(vec[0]) / P - np.array([0, 0, 0, W]) / P
    e2 = np.array(vec[1]) / P - np.array([0, 0, 0, np.conj(W)]) / P
    e3 = np.array(vec[2]) / P - np.array([0, 0, 0, H]) / P
    e4 = np.array([0, 0, 0, 1.0]) / P
    return np.array([e1, e2, e3, e4], dtype=complex)


def fefferman_coordinate_metric(s: CoordinateCRStructure, point, theta=None):
    """``g_F`` at ``point`` in coordinates ``(x1, x2, x3, ρ)`` from its defining formula.

    ``theta`` is an optional coordinate expression: the fiber coordinate of
    ``s`` is then ``ρ' = ρ - θ`` and ``dρ'`` replaces ``dρ``.
    """
    env = s.env(tuple(point), 2, 0.0)
    f = env.frame
    mu = np.array([m.value for m in f.mu] + [0])
    mub = np.conj(mu)
    lam = np.array([v.value for v in f.lam] + [0])
    drho = np.array([0, 0, 0, 1.0], dtype=complex)
    if theta is not None:
        th = env.eval(lift(_expr(theta)))
        drho = drho - np.array([th.partial(j).value for j in range(3)] + [0])
    c = env.symbol("c").value
    HF = env.eval(parse(FEFFERMAN_H_TEXT, bundle_atom_table())).value
    n = (2 / 3) * drho - (1j / 3) * c * mu + (1j / 3) * np.conj(c) * mub + HF * lam

    def sym(a, b):
        return 0.5 * (np.outer(a, b) + np.outer(b, a))

    return sym(mu, mub) + sym(lam, n)


# gauge transformation of parameters ------------------------------------------------------


def transform_parameters(g: GaugeTransform, d: QuasiFeffermanData) -> QuasiFeffermanData:
    """Unprimed data ``(P, x, H)`` from primed data ``(P', x', H')`` under the gauge ``g``.

    ``P = e^τ P'``, ``x = e^{τ + 5iθ/3} x'`` and

        H = e^{2τ}H' + |h|² + e^{τ+iθ} h (i x' e^{-ir'} - (i/3)c')
            + e^{τ-iθ} h̄ (-i x̄' e^{ir'} + (i/3)c̄') - (2/3) ∂₀θ

    where ``r' = r - 2θ/3`` and ``c' = e^{-τ-iθ}(c - 2ih̄ + ∂(τ+iθ))``.  The
    primed functions of the fiber are evaluated at ``r'``.  The result is a
    tree over the unprimed frame (``D1, D2, D0``, ``c``) and the coordinates.
    """
    from .kernel.tree import D, exp

    tau = lift(_expr(g.tau))
    theta = lift(_expr(g.theta))
    i = lift(QI(0, 1))
    r_new = lift(R) - lift(QI(2, 0)) / 3 * theta
    Pp = substitute(d.P, {"r": r_new})
    Hp = substitute(d.H, {"r": r_new})
    xp = d.x
    phi = tau + i * theta
    h = -i * D(D2, phi)
    hb = Conj(h)
    c = lift(Atom("c", conj_name="cbar"))
    cp = exp(-phi) * (c - lift(QI(0, 2)) * hb + D(D1, phi))
    term = exp(phi) * h * (i * xp * exp(-i * r_new) - i / 3 * cp)
    H = exp(lift(2) * tau) * Hp + h * hb + term + Conj(term) - lift(QI(2, 0)) / 3 * D(D0, theta)
    P = exp(tau) * Pp
    x = exp(tau + lift(QI(0, 5)) / 3 * theta) * xp
    return QuasiFeffermanData(P=P, H=H, x=x, defs=dict(d.defs))


def substitute(tree, mapping: dict):
    """Replace symbols by trees (structural, no normalization)."""
    from .kernel import tree as T

    memo = {}

    def go(n):
        if id(n) in memo:
            return memo[id(n)][1]
        out = _sub(n)
        memo[id(n)] = (n, out)
        return out

    def _sub(n):
        if isinstance(n, T.Sym):
            return mapping.get(n.atom.name, n)
        if isinstance(n, T.Add):
            return T.Add(tuple(go(t) for t in n.terms))
        if isinstance(n, T.Mul):
            return T.Mul(tuple(go(t) for t in n.factors))
        if isinstance(n, T.Pow):
            ex = go(n.exponent) if isinstance(n.exponent, T.FieldExpr) else n.exponent
            return T.Pow(go(n.base), ex)
        if isinstance(n, T.Fn):
            return T.Fn(n.kind, go(n.arg))
        if isinstance(n, T.Deriv):
            if any(k == "r" for k in mapping) and n.letter == DR:
                raise ValueError("cannot substitute r inside a Dr derivative")
            return T.Deriv(n.letter, go(n.arg))
        if isinstance(n, T.Conj):
            return T.Conj(go(n.arg))
        if isinstance(n, Poly):
            if any(name in n.atoms() for name in mapping):
                raise ValueError("cannot substitute inside a normal form")
            return n
        return n

    return go(lift(tree))


# adapted frames ---------------------------------------------------------------------------


class AdaptFrameError(ValueError):
    pass


def adapt_frame(G, k, annihilator=None, tol: float = 1e-10):
    """Complex adapted null frame ``(e₁, e₂, ℓ, k)`` for the metric ``G`` at a point.

    ``ℓ`` is built from the coordinate direction with the largest ``|g(·,k)|``;
    ``ε₁, ε₂`` by Gram–Schmidt on projected coordinate directions in a fixed
    order, and ``e₁ = (ε₁ - iε₂)/√2``.  ``annihilator`` (a covector that must
    vanish on ``e₁``, e.g. ``θ²``) fixes the orientation; otherwise the sign
    of ``det(ε₁, ε₂, ℓ, k)`` is made positive.
    """
    G = np.asarray(G, dtype=complex)
    k = np.asarray(k, dtype=complex)
    n = G.shape[0]
    if abs(np.linalg.det(G)) < tol:
        raise AdaptFrameError("metric is degenerate")
    g = lambda a, b: a @ G @ b
    if np.linalg.norm(k) < tol:
        raise AdaptFrameError("k vanishes")
    if abs(g(k, k)) > max(tol, 1e-9 * np.linalg.norm(k) ** 2 * np.linalg.norm(G)):
        raise AdaptFrameError("k is not null (g(k,k) = %.3g)" % abs(g(k, k)))
    basis = np.eye(n, dtype=complex)
    j = int(np.argmax([abs(g(basis[i], k)) for i in range(n)]))
    v = basis[j] / g(basis[j], k)
    ell = v - 0.5 * g(v, v) * k
    eps = []
    for i in range(n):
        w = basis[i] - g(basis[i], k) * ell - g(basis[i], ell) * k
        for e in eps:
            w = w - g(w, e) * e
        nn = g(w, w).real
        if nn > tol:
            eps.append(w / math.sqrt(nn))
        if len(eps) == 2:
            break
    if len(eps) < 2:
        raise AdaptFrameError("screen space is not positive definite (metric not Lorentzian)")
    e1p, e2p = eps
    if annihilator is not None:
        a = np.asarray(annihilator)
        if abs(a @ (e1p - 1j * e2p)) > abs(a @ (e1p + 1j * e2p)):
            e2p = -e2p
    elif np.linalg.det(np.array([e1p, e2p, ell, k]).real) < 0:
        e2p = -e2p
    e1 = (e1p - 1j * e2p) / math.sqrt(2)
    e2 = (e1p + 1j * e2p) / math.sqrt(2)
    return np.array([e1, e2, ell, k])


def gram_matrix(G, frame):
    F = np.asarray(frame)
    return F @ np.asarray(G) @ F.T


def metric_function(s: CoordinateCRStructure, d: QuasiFeffermanData, order: int = 2, perturb=None):
    """``y -> g(y)`` in coordinates ``(x1, x2, x3, r)`` for finite-difference checks."""

    def G(y):
        env = bundle_env(s, d, y[:3], float(y[3]), order)
        return coordinate_metric(env, coordinate_coframe(env, perturb))

    return G


def sample_at(s: CoordinateCRStructure, d: QuasiFeffermanData, point, r: float, order: int = 4) -> JetSample:
    """Lazy sample for evaluating bundle normal forms built from generic ``P, H, x``."""
    return JetSample(bundle_env(s, d, point, r, order), r=r, point=tuple(point) + (r,))


def gauged_metric_function(base: CoordinateCRStructure, g: GaugeTransform, d_primed: QuasiFeffermanData, order=2):
    """``y -> g'(y)``: the metric of primed data in the gauged coframe, in unprimed coordinates.

    The primed fiber coordinate is ``r' = r - (2/3)θ``, so primed parameters
    are evaluated at ``r'`` and ``dr' = dr - (2/3)dθ``.
    """
    from .cr import GaugedCoordinateCR

    gs = GaugedCoordinateCR(base, _expr(g.tau), _expr(g.theta))
    theta = lift(_expr(g.theta))
    r_new = lift(R) - lift(QI(2)) / 3 * theta
    defs = dict(d_primed.defs)
    for name in ("P", "H"):
        defs[name] = substitute(getattr(d_primed, name), {"r": r_new})
    defs["x"] = d_primed.x
    c = lift(Atom("c", conj_name="cbar"))
    defs["W"] = lift(_I) * lift(X_ATOM) * exp_tree(-lift(_I) * r_new) - lift(_I) / 3 * c

    def G(y):
        env = gs.env(tuple(y[:3]), order, float(y[3]), defs=defs)
        th = env.eval(theta)
        dr = [th.partial(j) * (-2.0 / 3.0) for j in range(3)] + [env.space.const(1.0)]
        return coordinate_metric(env, coordinate_coframe(env, dr=dr))

    return G


def exp_tree(e):
    from .kernel.tree import exp

    return exp(e)
