"""CR structures: coframe validation, structure functions, gauges and residuals."""

import cmath
import math

import numpy as np
import pytest

from quasifeff.cr import (
    GAUGE_CONSTANTS,
    AbstractCRStructure,
    CoordinateCRStructure,
    CRValidationError,
    GaugeTransform,
    apply_gauge,
    builtin_structure,
    canonical_section_residual,
    cr_residual,
    extract_structure_functions,
    heisenberg,
    heisenberg_deformed,
    heisenberg_gauged,
    structure_from_frame,
    validate_coframe,
)
from quasifeff.embeddability import random_points
from quasifeff.kernel import GENERIC, MU_EXACT, QI, evaluate, normalize, parse
from quasifeff.kernel.expr import exp_
from quasifeff.kernel.tree import lift

POINTS = [(0.3, -0.2, 0.5), (1.0, 0.7, -0.4), (-0.6, 0.1, 0.9)]


def _custom(mu, lam, name="custom"):
    h = heisenberg()
    return CoordinateCRStructure(name, mu, lam, dict(h.defs), h.table)


def fd_structure_function_c(s, point, h=1e-5):
    """``c = dλ(∂, ∂₀)`` from central differences of the coordinate components of ``λ``."""

    def comps(y):
        mu, lam = s.coframe_jets(tuple(y), 0)
        return np.array([m.value for m in mu]), np.array([l.value for l in lam])

    y = np.array(point, dtype=float)
    mu0, lam0 = comps(y)
    dlam = np.empty((3, 3), dtype=complex)  # dlam[a, b] = ∂_a λ_b
    for a in range(3):
        e = np.zeros(3)
        e[a] = h
        dlam[a] = (comps(y + e)[1] - comps(y - e)[1]) / (2 * h)
    F = dlam - dlam.T
    frame = np.linalg.inv(np.array([mu0, np.conj(mu0), lam0])).T  # rows: ∂, ∂̄, ∂₀
    return frame[0] @ F @ frame[2]


class TestValidateCoframe:
    def test_heisenberg_is_valid(self):
        rep = validate_coframe(heisenberg(), POINTS)
        assert rep.valid
        for entry in rep.residuals:
            assert entry["dlambda_mu_mubar_residual"] < 1e-12
            assert entry["dmu_mu_mubar_residual"] < 1e-12

    def test_scaled_lambda_is_rejected(self):
        s = _custom(("1", "I", "0"), ("-2*x2", "2*x1", "2"))
        rep = validate_coframe(s, POINTS)
        assert not rep.valid
        assert rep.violated == ["dlambda has mu^mubar coefficient i"]
        assert abs(rep.residuals[0]["dlambda_mu_mubar"] - 2j) < 1e-12

    def test_mu_with_conjugate_term_is_rejected(self):
        # μ = dz + z̄ dz̄ keeps dμ = 0 but breaks the μ∧μ̄ normalization of dλ
        s = _custom(("1 + x1 - I*x2", "I - I*x1 - x2", "0"), ("-x2", "x1", "1"))
        rep = validate_coframe(s, POINTS)
        assert not rep.valid
        assert "dlambda has mu^mubar coefficient i" in rep.violated

    def test_raise_on_error_names_violation(self):
        s = _custom(("1", "I", "0"), ("-2*x2", "2*x1", "2"))
        with pytest.raises(CRValidationError) as ei:
            validate_coframe(s, POINTS, raise_on_error=True)
        assert "mu^mubar" in str(ei.value)

    def test_nonconstant_scale_and_manual_rescaling(self):
        f = "(2 + x1^2 + sin(x3))"
        lam = ("-x2", "x1", "1")
        scaled = _custom(("1", "I", "0"), tuple(f"{f}*({l})" for l in lam))
        rep = validate_coframe(scaled, POINTS)
        assert rep.violated == ["dlambda has mu^mubar coefficient i"]
        fixed = _custom(("1", "I", "0"), tuple(f"({f}*({l}))/{f}" for l in lam))
        assert validate_coframe(fixed, POINTS).valid

    def test_singular_coframe(self):
        s = _custom(("1", "I", "0"), ("1", "0", "0"))
        rep = validate_coframe(s, POINTS[:1])
        assert not rep.valid


class TestExtractStructureFunctions:
    def test_heisenberg_zero_sample(self):
        for y in random_points(10, 3):
            smp = extract_structure_functions(heisenberg(), y[:3], order=2)
            assert max(abs(v) for v in smp.values.values()) < 1e-14

    def test_gauge_tau_x1_matches_closed_form_and_finite_differences(self):
        s = heisenberg_gauged("x1", "0")
        for p in POINTS:
            smp = extract_structure_functions(s, p, order=1)
            c = smp.lookup("c", (0, 0, 0, 0))
            # h = -i ∂̄τ = -i/2, so c' = e^{-x1}(-2i h̄ + ∂τ) = (3/2) e^{-x1}
            assert abs(c - 1.5 * math.exp(-p[0])) < 1e-12
            assert abs(c - fd_structure_function_c(s, p)) < 1e-8

    def test_conjugate_consistency(self):
        s = heisenberg_gauged("x1*x2/3", "x3/4 + x1^2/5")
        smp = extract_structure_functions(s, POINTS[0], order=2)
        # the conjugate of a word is re-ordered by the kernel, then evaluated on the sample
        for (name, counts), v in smp.values.items():
            if name in ("c", "alpha", "beta"):
                w = GENERIC.conj(GENERIC.word_poly(GENERIC.atom(name), counts))
                assert abs(evaluate(w, smp) - v.conjugate()) < 1e-10

    def test_deformed_structure_is_mu_exact(self):
        s = heisenberg_deformed()
        assert validate_coframe(s, POINTS).valid
        smp = extract_structure_functions(s, POINTS[1], order=1)
        assert abs(smp.lookup("alpha", (0, 0, 0, 0))) < 1e-12
        assert abs(smp.lookup("beta", (0, 0, 0, 0))) < 1e-12
        assert abs(smp.lookup("c", (0, 0, 0, 0))) > 1e-3


class TestResiduals:
    @pytest.mark.parametrize("f, expected", [("z", 0), ("u + I/2*z*zbar", 0), ("zbar", 1)])
    def test_cr_residual(self, f, expected):
        for p in POINTS:
            assert abs(cr_residual(f, heisenberg(), p) - expected) < 1e-12

    def test_canonical_section_on_heisenberg(self):
        assert abs(canonical_section_residual("1", heisenberg(), POINTS[0])) < 1e-14

    def test_canonical_section_equals_cbar_for_constant_section(self):
        s = heisenberg_gauged("x1", "x2/2")
        for p in POINTS:
            cbar = extract_structure_functions(s, p, order=0).lookup("cbar", (0, 0, 0, 0))
            assert abs(canonical_section_residual("1", s, p) - cbar) < 1e-12
            assert abs(cbar) > 1e-3

    def test_pulled_back_section_is_closed(self):
        s = heisenberg_deformed()
        for p in POINTS:
            assert abs(canonical_section_residual("psi", s, p)) < 1e-12

    def test_vanishing_section_is_rejected(self):
        with pytest.raises(ValueError):
            canonical_section_residual("x1", heisenberg(), (0.0, 0.3, 0.1))


class TestApplyGauge:
    def setup_method(self):
        self.s = AbstractCRStructure(GENERIC)

    def test_identity(self):
        t = apply_gauge(self.s, GaugeTransform(0, 0))
        assert (t.c - self.s.c).is_zero()
        assert (t.alpha - self.s.alpha).is_zero()
        assert t.h.is_zero()

    def test_constant_tau(self):
        t = apply_gauge(self.s, GaugeTransform("t0", 0))
        t0 = normalize(lift(GAUGE_CONSTANTS[0]), GENERIC)
        assert t.h.is_zero()
        assert (t.c - exp_(-t0) * self.s.c).is_zero()
        # α' picks up e^{-2τ}; the commutator recomputation is the oracle
        assert (t.alpha - exp_(t0.scale(-2)) * self.s.alpha).is_zero()
        c, alpha, beta = structure_from_frame(t)
        assert (GENERIC.reduce(alpha - t.alpha)).is_zero()

    def test_constant_theta(self):
        t = apply_gauge(self.s, GaugeTransform(0, "theta0"))
        th = normalize(lift(GAUGE_CONSTANTS[1]), GENERIC)
        assert (t.c - exp_(th.scale(QI(0, -1))) * self.s.c).is_zero()

    @pytest.mark.parametrize("tau, theta", [("x1", "0"), ("D1(f) + D2(fbar)", "g")])
    def test_displayed_law_matches_commutators(self, tau, theta):
        from quasifeff.kernel import FrameAlgebra
        from quasifeff.kernel.expr import Atom

        ctx = FrameAlgebra(atoms=(Atom("f"), Atom("g", real=True), Atom("x1", real=True)))
        s = AbstractCRStructure(ctx)
        t = apply_gauge(s, GaugeTransform(normalize(parse(tau, ctx.atoms), ctx), normalize(parse(theta, ctx.atoms), ctx)))
        c, alpha, beta = structure_from_frame(t)
        assert ctx.reduce(c - t.c).is_zero()
        assert ctx.reduce(alpha - t.alpha).is_zero()
        assert ctx.reduce(beta - t.beta).is_zero()

    def test_composition_of_constant_gauges(self):
        g1, g2 = GaugeTransform("t0", "theta0"), GaugeTransform("2*t0", "-theta0/3")
        two = apply_gauge(apply_gauge(self.s, g1), g2)
        one = apply_gauge(self.s, g1.compose(g2))
        assert GENERIC.reduce(two.c - one.c).is_zero()
        assert GENERIC.reduce(two.alpha - one.alpha).is_zero()

    def test_round_trip(self):
        back = apply_gauge(apply_gauge(self.s, GaugeTransform("t0", "theta0")), GaugeTransform("-t0", "-theta0"))
        assert GENERIC.reduce(back.c - self.s.c).is_zero()
        assert GENERIC.reduce(back.alpha - self.s.alpha).is_zero()

    def test_mu_exact_context_keeps_alpha_zero_under_constant_gauge(self):
        s = AbstractCRStructure(MU_EXACT)
        t = apply_gauge(s, GaugeTransform("t0", "theta0"))
        assert t.alpha.is_zero()


class TestBuiltins:
    def test_names(self):
        assert builtin_structure("heisenberg").name == "heisenberg"
        s = builtin_structure("heisenberg-gauged(tau=x1/3, theta=0)")
        assert validate_coframe(s, POINTS).valid

    def test_unknown(self):
        with pytest.raises(KeyError):
            builtin_structure("sphere")

    def test_gauged_coframe_is_the_transformed_coframe(self):
        s = heisenberg_gauged("x1/3", "x2")
        base = heisenberg()
        for p in POINTS:
            mu, lam = s.coframe_jets(p, 0)
            mu0, lam0 = base.coframe_jets(p, 0)
            f = cmath.exp(p[0] / 3 + 1j * p[1])
            assert max(abs(l.value - abs(f) ** 2 * l0.value) for l, l0 in zip(lam, lam0)) < 1e-12
