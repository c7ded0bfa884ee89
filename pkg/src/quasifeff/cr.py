"""Three-dimensional CR structures: coordinate coframes, structure functions, gauges.

Coordinate structures are given by a complex 1-form ``μ`` and a real 1-form
``λ`` on a chart with coordinates ``(x1, x2, x3)``.  All derivatives are taken
with jets in the four variables ``(x1, x2, x3, r)`` so that functions on the
circle bundle can share the same machinery.

Abstract structures keep ``c, α, β`` symbolic inside a
:class:`~quasifeff.kernel.FrameAlgebra`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .jets import Jet, JetEnv, jet_space
from .kernel import GENERIC, FrameAlgebra, Poly, normalize, parse
from .kernel.evaluate import PointSample
from .kernel.expr import D0, D1, D2, DR, Atom, exp_, log_
from .kernel.numbers import QI
from .kernel.parser import AtomTable

__all__ = [
    "CRValidationError",
    "LocalFrame",
    "CoordinateCRStructure",
    "GaugedCoordinateCR",
    "AbstractCRStructure",
    "GaugeTransform",
    "ValidationReport",
    "heisenberg",
    "heisenberg_gauged",
    "heisenberg_deformed",
    "builtin_structure",
    "BUILTINS",
    "validate_coframe",
    "extract_structure_functions",
    "apply_gauge",
    "cr_residual",
    "canonical_section_residual",
    "VARIABLES",
    "STRUCTURE_NAMES",
]

VARIABLES = {"x1": 0, "x2": 1, "x3": 2, "r": 3}
STRUCTURE_NAMES = ("c", "cbar", "alpha", "alphabar", "beta", "betabar")
_I = 1j


class CRValidationError(ValueError):
    """A coframe violates one of the normalizations of a distinguished coframe."""

    def __init__(self, violated, report=None):
        self.violated = list(violated)
        self.report = report
        super().__init__("coframe violates: " + ", ".join(self.violated))


# local frames ---------------------------------------------------------------------


def _det3(m):
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


class LocalFrame:
    """Dual frame ``(∂, ∂̄, ∂₀)`` of a coordinate coframe, as jets at a point.

    ``vectors[a][j]`` is the ``x_j`` component of the frame vector ``a``
    (0 = ∂, 1 = ∂̄, 2 = ∂₀).
    """

    def __init__(self, mu, lam):
        self.mu = list(mu)
        self.mubar = [m.conjugate() for m in mu]
        self.lam = list(lam)
        rows = [self.mu, self.mubar, self.lam]
        self.det = _det3(rows)
        if abs(self.det.value) < 1e-12:
            raise CRValidationError(["coframe matrix is singular"])
        inv_det = self.det.power(-1)
        # inverse = adjugate / det; adj[j][b] = cofactor[b][j]
        cof = [[None] * 3 for _ in range(3)]
        for a in range(3):
            for j in range(3):
                r = [x for x in range(3) if x != a]
                c = [x for x in range(3) if x != j]
                minor = rows[r[0]][c[0]] * rows[r[1]][c[1]] - rows[r[0]][c[1]] * rows[r[1]][c[0]]
                cof[a][j] = minor if (a + j) % 2 == 0 else -minor
        self.vectors = [[cof[b][j] * inv_det for j in range(3)] for b in range(3)]
        self.space = mu[0].space

    def derivative(self, letter: int, f: Jet) -> Jet:
        if letter == DR:
            return f.partial(3)
        X = self.vectors[letter]
        return X[0] * f.partial(0) + X[1] * f.partial(1) + X[2] * f.partial(2)

    @staticmethod
    def d(omega):
        """Coordinate components ``(dω)_jk = ∂_j ω_k - ∂_k ω_j`` of a 1-form."""
        return {(j, k): omega[k].partial(j) - omega[j].partial(k) for j in range(3) for k in range(3) if j < k}

    def two_form_on(self, dw, a: int, b: int) -> Jet:
        """``dω(e_a, e_b)`` for frame vectors ``a``, ``b``."""
        X, Y = self.vectors[a], self.vectors[b]
        out = None
        for (j, k), w in dw.items():
            term = w * (X[j] * Y[k] - X[k] * Y[j])
            out = term if out is None else out + term
        return out

    def structure_jets(self):
        dl = self.d(self.lam)
        dm = self.d(self.mu)
        c = self.two_form_on(dl, D1, D0)
        alpha = self.two_form_on(dm, D1, D0)
        beta = self.two_form_on(dm, D2, D0)
        return {
            "c": c,
            "cbar": c.conjugate(),
            "alpha": alpha,
            "alphabar": alpha.conjugate(),
            "beta": beta,
            "betabar": beta.conjugate(),
        }

    def normalization_jets(self):
        dl = self.d(self.lam)
        dm = self.d(self.mu)
        contact = dl[(0, 1)] * self.lam[2] - dl[(0, 2)] * self.lam[1] + dl[(1, 2)] * self.lam[0]
        return {
            "dlambda_mu_mubar": self.two_form_on(dl, D1, D2),
            "dmu_mu_mubar": self.two_form_on(dm, D1, D2),
            "dlambda_wedge_lambda": contact,
        }


# coordinate structures -------------------------------------------------------------


def _tree(x, table):
    if isinstance(x, str):
        return parse(x, table)
    return x


@dataclass
class CoordinateCRStructure:
    """A CR structure given by coordinate components of ``μ`` and ``λ``.

    ``mu`` and ``lam`` are three expressions each (strings in the config
    grammar or trees) in the coordinates ``x1, x2, x3``; ``defs`` holds
    auxiliary definitions such as ``z = x1 + I*x2``.
    """

    name: str
    mu: tuple
    lam: tuple
    defs: dict = field(default_factory=dict)
    table: AtomTable = field(default_factory=lambda: AtomTable(real=("x1", "x2", "x3", "u")))

    def __post_init__(self):
        self.defs = {k: _tree(v, self.table) for k, v in self.defs.items()}
        self.mu = tuple(_tree(t, self.table) for t in self.mu)
        self.lam = tuple(_tree(t, self.table) for t in self.lam)
        if len(self.mu) != 3 or len(self.lam) != 3:
            raise ValueError("mu and lambda need three coordinate components each")

    def coframe_jets(self, point, order: int, r: float = 0.0):
        space = jet_space(4, order)
        env = JetEnv(space, tuple(point) + (r,), VARIABLES, defs=self.defs)
        return [env.eval(t) for t in self.mu], [env.eval(t) for t in self.lam]

    def local_frame(self, point, order: int = 3, r: float = 0.0) -> LocalFrame:
        mu, lam = self.coframe_jets(point, order, r)
        return LocalFrame(mu, lam)

    def env(self, point, order: int = 3, r: float = 0.0, defs=None, symbols=None) -> JetEnv:
        """Jet environment at ``(point, r)`` with the frame, structure functions and ``defs``.

        Structure functions are valid to order ``order``; the frame is built
        one order higher.
        """
        frame = self.local_frame(point, order + 1, r)
        syms = dict(frame.structure_jets())
        syms.update(symbols or {})
        all_defs = dict(self.defs)
        all_defs.update(defs or {})
        return JetEnv(frame.space, tuple(point) + (r,), VARIABLES, syms, all_defs, frame)


class GaugedCoordinateCR(CoordinateCRStructure):
    """``μ' = e^{τ+iθ}(μ + hλ)``, ``λ' = e^{2τ}λ`` with ``h = -i ∂̄(τ+iθ)``.

    ``tau`` and ``theta`` are real coordinate expressions; their frame
    derivatives are taken in the base structure.
    """

    def __init__(self, base: CoordinateCRStructure, tau, theta, name=None):
        self.base = base
        self.table = base.table
        self.tau = _tree(tau, self.table)
        self.theta = _tree(theta, self.table)
        self.name = name or f"{base.name}-gauged"
        self.defs = dict(base.defs)
        self.mu = self.lam = ()

    def gauge_jets(self, point, order: int, r: float = 0.0):
        """Jets of ``τ``, ``θ``, ``h`` and ``f`` valid to ``order``, with the base frame."""
        env = self.base.env(point, order, r)
        tau = env.eval(self.tau)
        theta = env.eval(self.theta)
        phi = tau + _I * theta
        h = -_I * env.derivative(D2, phi)
        return {"tau": tau, "theta": theta, "h": h, "f": phi.exp(), "env": env}

    def coframe_jets(self, point, order: int, r: float = 0.0):
        g = self.gauge_jets(point, order, r)
        frame = g["env"].frame
        f, h, e2t = g["f"], g["h"], (2 * g["tau"]).exp()
        mu = [f * (m + h * l) for m, l in zip(frame.mu, frame.lam)]
        lam = [e2t * l for l in frame.lam]
        for j in mu + lam:
            j.valid = min(j.valid, order)
        return mu, lam


def heisenberg() -> CoordinateCRStructure:
    """``μ = dz``, ``λ = du + x1 dx2 - x2 dx1 = du + (i/2)(z dz̄ - z̄ dz)``."""
    return CoordinateCRStructure(
        "heisenberg",
        mu=("1", "I", "0"),
        lam=("-x2", "x1", "1"),
        defs={"z": "x1 + I*x2", "zbar": "x1 - I*x2", "u": "x3"},
    )


def heisenberg_gauged(tau="0", theta="0") -> GaugedCoordinateCR:
    return GaugedCoordinateCR(heisenberg(), tau, theta, name=f"heisenberg-gauged(tau={tau},theta={theta})")


def heisenberg_deformed(eps="1/5") -> CoordinateCRStructure:
    """The Heisenberg structure in the exact coframe ``μ' = dζ'`` with ``ζ' = z + ε(u + (i/2)|z|²)``.

    This is the gauge ``f = e^{τ+iθ} = 1 + iε z̄``; ``λ' = |f|² λ``, and
    ``α' = β' = 0`` because ``μ'`` is exact.  The canonical section
    ``ψ' = 1/(f |f|²)`` is closed.
    """
    e = f"({eps})"
    absf2 = f"((1 + {e}*x2)^2 + ({e}*x1)^2)"
    return CoordinateCRStructure(
        f"heisenberg-deformed(eps={eps})",
        mu=(f"1 + I*{e}*x1", f"I + I*{e}*x2", e),
        lam=(f"-x2*{absf2}", f"x1*{absf2}", absf2),
        defs={
            "z": "x1 + I*x2",
            "zbar": "x1 - I*x2",
            "u": "x3",
            "f": f"1 + I*{e}*(x1 - I*x2)",
            "psi": f"1/((1 + I*{e}*(x1 - I*x2))*{absf2})",
        },
    )


BUILTINS = {
    "heisenberg": heisenberg,
    "heisenberg-gauged": heisenberg_gauged,
    "heisenberg-deformed": heisenberg_deformed,
}


def builtin_structure(text: str) -> CoordinateCRStructure:
    """Resolve ``name`` or ``name(key=value, ...)`` to a builtin structure."""
    text = text.strip()
    name, args = text, {}
    if "(" in text:
        if not text.endswith(")"):
            raise ValueError(f"malformed structure name {text!r}")
        name, inner = text[:-1].split("(", 1)
        for part in _split_args(inner):
            if not part.strip():
                continue
            if "=" not in part:
                raise ValueError(f"malformed structure argument {part!r}")
            k, v = part.split("=", 1)
            args[k.strip()] = v.strip()
    if name not in BUILTINS:
        raise KeyError(f"unknown structure {name!r}")
    return BUILTINS[name](**args)


def _split_args(s):
    depth, cur, out = 0, [], []
    for ch in s:
        if ch == "," and depth == 0:
            out.append("".join(cur))
            cur = []
            continue
        depth += ch == "("
        depth -= ch == ")"
        cur.append(ch)
    out.append("".join(cur))
    return out


# validation and extraction -------------------------------------------------------------


@dataclass
class ValidationReport:
    valid: bool
    residuals: list
    violated: list

    def as_dict(self):
        return {"valid": self.valid, "violated": self.violated, "residuals": self.residuals}


def validate_coframe(s: CoordinateCRStructure, points, tol: float = 1e-9, raise_on_error=False):
    """Check ``dλ∧λ ≠ 0``, ``dλ(∂,∂̄) = i``, ``dμ(∂,∂̄) = 0`` and reality of ``λ``.

    Coframes with ``dλ = i f μ∧μ̄ mod λ`` for some ``f > 0`` are rejected,
    not rescaled.  ``docs/conventions.md`` gives the manual rescaling.
    """
    residuals, violated = [], set()
    for p in points:
        entry = {"point": list(map(float, p))}
        try:
            mu, lam = s.coframe_jets(p, 2)
            frame = LocalFrame(mu, lam)
        except CRValidationError as exc:
            entry["singular"] = True
            violated.update(exc.violated)
            residuals.append(entry)
            continue
        norm = frame.normalization_jets()
        entry["lambda_imag"] = max(float(np.max(np.abs(l.c.imag))) for l in lam)
        entry["dlambda_mu_mubar"] = norm["dlambda_mu_mubar"].value
        entry["dlambda_mu_mubar_residual"] = abs(norm["dlambda_mu_mubar"].value - 1j)
        entry["dmu_mu_mubar_residual"] = abs(norm["dmu_mu_mubar"].value)
        entry["dlambda_wedge_lambda"] = abs(norm["dlambda_wedge_lambda"].value)
        if entry["lambda_imag"] > tol:
            violated.add("lambda must be real")
        if entry["dlambda_wedge_lambda"] <= tol:
            violated.add("dlambda ^ lambda != 0 (strict pseudoconvexity)")
        if entry["dlambda_mu_mubar_residual"] > tol:
            violated.add("dlambda has mu^mubar coefficient i")
        if entry["dmu_mu_mubar_residual"] > tol:
            violated.add("dmu has no mu^mubar term")
        residuals.append(entry)
    report = ValidationReport(not violated, residuals, sorted(violated))
    if raise_on_error and violated:
        raise CRValidationError(report.violated, report)
    return report


def _counts_upto(order: int, letters=(0, 1, 2, 3)):
    out = []
    for n1 in range(order + 1):
        for n2 in range(order + 1 - n1):
            for n0 in range(order + 1 - n1 - n2):
                for nr in range(order + 1 - n1 - n2 - n0):
                    counts = (n1, n2, n0, nr)
                    if all(counts[l] == 0 for l in range(4) if l not in letters):
                        out.append(counts)
    return out


def extract_structure_functions(
    s: CoordinateCRStructure, point, order: int = 3, r: float = 0.0, atoms=None, env=None
) -> PointSample:
    """Values of ``c, α, β`` (and conjugates) and their frame words up to ``order``.

    ``atoms`` optionally maps further names to coordinate expressions
    (strings or trees); their words, including ``Dr`` words, are added too.
    Conjugate atoms ``<name>bar`` are filled in for complex entries.
    """
    env = env or s.env(point, order + 1, r, defs=_parse_defs(atoms, s.table))
    values = {}
    base_counts = _counts_upto(order, (0, 1, 2))
    for name in STRUCTURE_NAMES:
        for counts in base_counts:
            values[(name, counts)] = env.word(name, counts).value
    for name in atoms or {}:
        for counts in _counts_upto(order):
            values[(name, counts)] = env.word(name, counts).value
            values[(name + "bar", counts)] = env.word(name, counts).conjugate().value
    return PointSample(values, r=r, point=tuple(point))


def _parse_defs(atoms, table):
    if not atoms:
        return {}
    return {k: _tree(v, table) for k, v in atoms.items()}


def cr_residual(f, s: CoordinateCRStructure, point, r: float = 0.0) -> complex:
    """``∂̄ f`` at ``point``."""
    env = s.env(point, 2, r)
    tree = _tree(f, s.table)
    return env.derivative(D2, env.eval(tree)).value


def canonical_section_residual(psi, s, point=None, r: float = 0.0):
    """``∂̄ log ψ + c̄``: zero iff ``ψ μ∧λ`` is closed.

    For a coordinate structure returns the complex value at ``point``; for an
    :class:`AbstractCRStructure` returns the normal form.
    """
    if isinstance(s, AbstractCRStructure):
        p = normalize(psi, s.ctx) if not isinstance(psi, Poly) else s.ctx.reduce(psi)
        if p.is_zero():
            raise ValueError("canonical section must be non-vanishing")
        return s.frame_diff(D2, log_(p)) + s.ctx.conj(s.c)
    env = s.env(point, 2, r)
    j = env.eval(_tree(psi, s.table))
    if abs(j.value) < 1e-14:
        raise ValueError("canonical section must be non-vanishing at the sample point")
    return (env.derivative(D2, j) / j).value + env.symbol("cbar").value


# abstract structures and gauges --------------------------------------------------------------


#: symbolic constants available in gauge expressions
GAUGE_CONSTANTS = (Atom("t0", real=True, constant=True), Atom("theta0", real=True, constant=True))


@dataclass
class GaugeTransform:
    """A change of distinguished coframe, parametrized by real ``τ`` and ``θ``.

    ``tau``/``theta`` are expressions (trees, normal forms, numbers or
    strings); they are normalized in the structure's frame algebra.
    """

    tau: object = 0
    theta: object = 0

    def parts(self, ctx: FrameAlgebra):
        """``(τ, θ)`` as normal forms; ``t0`` and ``theta0`` in strings denote real constants."""
        table = AtomTable(real=("tau", "theta"), atoms=tuple(ctx.atoms.values()) + GAUGE_CONSTANTS)
        out = []
        for v in (self.tau, self.theta):
            if isinstance(v, str):
                v = parse(v, table)
            out.append(normalize(v, ctx) if not isinstance(v, Poly) else ctx.reduce(v))
        return out

    def compose(self, other: "GaugeTransform") -> "GaugeTransform":
        """Composition for constant gauges (parameters add)."""
        return GaugeTransform(_add(self.tau, other.tau), _add(self.theta, other.theta))


def _add(a, b):
    from .kernel.tree import lift

    if isinstance(a, str) or isinstance(b, str):
        if not isinstance(a, (str, int, float)) or not isinstance(b, (str, int, float)):
            raise TypeError("compose mixes expression text with trees")
        return f"({a}) + ({b})"
    return lift(a) + lift(b)


_ONE = Poly.const(1)


@dataclass
class AbstractCRStructure:
    """Structure functions of a (possibly gauge-transformed) distinguished frame.

    ``frame`` gives the three frame vectors ``∂, ∂̄, ∂₀`` as ``{letter: Poly}``
    maps over the letters of ``ctx``; the identity frame means ``c, α, β`` are
    the atoms of ``ctx`` themselves.
    """

    ctx: FrameAlgebra = GENERIC
    c: Poly = None
    alpha: Poly = None
    beta: Poly = None
    frame: tuple = None
    h: Poly = None

    def __post_init__(self):
        ctx = self.ctx
        if self.c is None:
            self.c = ctx.word_poly(ctx.atom("c"), (0, 0, 0, 0))
        if self.alpha is None:
            self.alpha = ctx.word_poly(ctx.atom("alpha"), (0, 0, 0, 0))
        if self.beta is None:
            self.beta = ctx.word_poly(ctx.atom("beta"), (0, 0, 0, 0))
        if self.frame is None:
            self.frame = ({D1: _ONE}, {D2: _ONE}, {D0: _ONE})
        if self.h is None:
            self.h = Poly({})

    def frame_diff(self, a: int, f: Poly) -> Poly:
        """Derivative of ``f`` along frame vector ``a`` (0 = ∂, 1 = ∂̄, 2 = ∂₀)."""
        out = Poly({})
        for letter, coef in self.frame[a].items():
            out = out + coef * self.ctx.diff_poly(letter, f)
        return out

    def conj(self, p: Poly) -> Poly:
        return self.ctx.conj(p)


def apply_gauge(s: AbstractCRStructure, g: GaugeTransform) -> AbstractCRStructure:
    """Transform the structure functions under ``(τ, θ)``.

    ``c'`` follows the displayed law ``e^{-τ-iθ}(c - 2i h̄ + ∂(τ+iθ))``.  For
    ``α'`` the prefactor is ``e^{-2τ}`` (see the module notes in
    ``docs/conventions.md``); ``β'`` is read off from the commutator
    ``[∂', ∂̄'₀]`` of the new frame.
    """
    ctx = s.ctx
    tau, theta = g.parts(ctx)
    phi = tau + theta.scale(QI(0, 1))
    h = s.frame_diff(D2, phi).scale(QI(0, -1))
    hbar = ctx.conj(h)
    f_inv = exp_(-phi)
    c_new = f_inv * (s.c - hbar.scale(QI(0, 2)) + s.frame_diff(D1, phi))
    alpha_new = exp_(tau.scale(-2)) * (
        s.alpha - s.frame_diff(D0, phi) + h * s.frame_diff(D1, phi) + s.frame_diff(D1, h) + h * s.c
    )
    d1 = {l: f_inv * v for l, v in s.frame[0].items()}
    d2 = {l: ctx.conj(f_inv) * v for l, v in s.frame[1].items()}
    e2 = exp_(tau.scale(-2))
    d0 = _vf_add(s.frame[2], _vf_scale(s.frame[0], -h), _vf_scale(s.frame[1], -hbar))
    d0 = _vf_scale(d0, e2)
    new = AbstractCRStructure(ctx, c_new, alpha_new, None, (d1, d2, d0), h)
    coeffs = frame_commutator_coefficients(new, 1, 2)
    new.beta = -coeffs[0]
    return new


def _vf_add(*vfs):
    out = {}
    for vf in vfs:
        for l, v in vf.items():
            out[l] = out.get(l, Poly({})) + v
    return {l: v for l, v in out.items() if not v.is_zero()}


def _vf_scale(vf, f: Poly):
    return {l: f * v for l, v in vf.items()}


def vf_bracket(ctx: FrameAlgebra, U: dict, V: dict) -> dict:
    """Lie bracket of vector fields given as ``{letter: Poly}``."""
    out = {}
    for a, ua in U.items():
        for b, vb in V.items():
            out[b] = out.get(b, Poly({})) + ua * ctx.diff_poly(a, vb)
            for k, ck in ctx.commutator(a, b).items():
                out[k] = out.get(k, Poly({})) + ua * vb * ck
    for a, va in V.items():
        for b, ub in U.items():
            out[b] = out.get(b, Poly({})) - va * ctx.diff_poly(a, ub)
    return {l: v for l, v in out.items() if not v.is_zero()}


def frame_commutator_coefficients(s: AbstractCRStructure, a: int, b: int):
    """Coefficients ``(k0, k1, k2)`` with ``[X_a, X_b] = Σ k_i X_i`` in the frame of ``s``.

    The frame is upper triangular over the letters (``∂`` and ``∂̄`` are
    multiples of ``D1``, ``D2``; ``∂₀`` has a ``D0`` part), which makes the
    decomposition a back substitution.
    """
    ctx = s.ctx
    br = vf_bracket(ctx, s.frame[a], s.frame[b])
    X0, X1, X2 = s.frame
    k2 = br.get(D0, Poly({})) * X2[D0] ** -1
    rest = _vf_add(br, _vf_scale(X2, -k2))
    k0 = rest.get(D1, Poly({})) * X0[D1] ** -1
    k1 = rest.get(D2, Poly({})) * X1[D2] ** -1
    return (ctx.reduce(k0), ctx.reduce(k1), ctx.reduce(k2))


def structure_from_frame(s: AbstractCRStructure):
    """``(c, α, β)`` recomputed from the commutators of the frame of ``s``."""
    k = frame_commutator_coefficients(s, 0, 2)
    kb = frame_commutator_coefficients(s, 1, 2)
    return -k[2], -k[0], -kb[0]
