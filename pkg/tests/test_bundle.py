"""Quasi-Fefferman bundles: frames, structure constants, Fefferman member, gauges, shear-freeness."""

import numpy as np
import pytest

from quasifeff import bundle as B
from quasifeff.cr import GaugedCoordinateCR, GaugeTransform, heisenberg, heisenberg_deformed, heisenberg_gauged
from quasifeff.embeddability import random_points
from quasifeff.kernel import GENERIC, HEISENBERG, QI, PointSample, Poly, evaluate, poly_pow
from quasifeff.kernel.expr import D0, D1, D2, DR

I = QI(0, 1)
STRUCTURES = [heisenberg(), heisenberg_gauged("x1/3", "x2*x3/5"), heisenberg_deformed()]
DATA = B.QuasiFeffermanData(P="1 + x1^2/5 + r^2/7", H="x2*x3 + r/3", x="x1/4 + I*x3*x2")


@pytest.fixture(scope="module")
def generic():
    return B.build_quasi_fefferman(GENERIC)


def closed_form_commutators(b):
    """Coefficients of ``[e1,e2], [e1,e3], [e1,e4], [e3,e4]`` exactly as listed in closed form."""
    ctx = b.ctx
    P, W, H = b.P, b.W, b.H
    Wb = ctx.conj(W)
    Pi = poly_pow(P, -1)
    Pi2 = Pi * Pi
    Pr = ctx.diff_poly(DR, P)
    atom = lambda n: ctx.word_poly(ctx.atom(n), (0, 0, 0, 0))
    c, alpha, betabar = atom("c"), atom("alpha"), atom("betabar")
    d = ctx.diff_poly
    e = b.apply
    return {
        (0, 1): (
            d(D2, P) * Pi2 - Wb * Pr * Pi2,
            -d(D1, P) * Pi2 + W * Pr * Pi2,
            Pi.scale(-I),
            (H * Pi).scale(-I) + e(1, W) - e(0, Wb),
        ),
        (0, 2): (
            d(D0, P) * Pi2 - H * Pr * Pi2 - alpha * Pi,
            -betabar * Pi,
            -d(D1, P) * Pi2 + W * Pr * Pi2 - c * Pi,
            -c * H * Pi + e(2, W) - e(0, H) - alpha * W * Pi - betabar * Wb * Pi,
        ),
        (0, 3): (Pr * Pi2, Poly({}), Poly({}), -d(D1, P) * Pi2 + W * Pr * Pi2 + d(DR, W) * Pi),
        (2, 3): (Poly({}), Poly({}), Pr * Pi2, -d(D0, P) * Pi2 + H * Pr * Pi2 + d(DR, H) * Pi),
    }


class TestStructureConstants:
    def test_listed_commutators(self, generic):
        for (m, n), coeffs in closed_form_commutators(generic).items():
            for k in range(4):
                assert GENERIC.reduce(generic.structure_constant(k, m, n) - coeffs[k]).is_zero(), (k, m, n)

    def test_examples(self, generic):
        Pi = poly_pow(generic.P, -1)
        assert (generic.structure_constant(2, 0, 1) - Pi.scale(-I)).is_zero()
        Pr = GENERIC.diff_poly(DR, generic.P)
        assert (generic.structure_constant(0, 0, 3) - Pr * Pi * Pi).is_zero()

    def test_antisymmetry(self, generic):
        for k in range(4):
            for m in range(4):
                for n in range(4):
                    s = generic.structure_constant(k, m, n) + generic.structure_constant(k, n, m)
                    assert s.is_zero()

    def test_conjugation_swaps_one_and_two(self, generic):
        swap = {0: 1, 1: 0, 2: 2, 3: 3}
        for k in range(4):
            for m in range(4):
                for n in range(m + 1, 4):
                    lhs = GENERIC.conj(generic.structure_constant(k, m, n))
                    rhs = generic.structure_constant(swap[k], swap[m], swap[n])
                    assert GENERIC.reduce(lhs - rhs).is_zero()

    def test_heisenberg_trivial_data(self):
        b = B.build_quasi_fefferman(HEISENBERG, B.QuasiFeffermanData(P=1, x=0, H=0))
        consts = B.structure_constants(b)
        nonzero = {k: v for k, v in consts.items() if not v.is_zero()}
        assert set(nonzero) == {(3, 1, 2)}
        assert (nonzero[(3, 1, 2)] - Poly.const(-I)).is_zero()
        assert b.W.is_zero()
        assert set(b.frame[3]) == {DR} and (b.frame[3][DR] - Poly.const(1)).is_zero()

    def test_zero_P_is_rejected(self):
        with pytest.raises(ValueError):
            B.build_quasi_fefferman(GENERIC, B.QuasiFeffermanData(P=0))


class TestFrameAndMetric:
    def test_gram(self):
        assert (B.GRAM == B.GRAM.T).all()
        assert B.GRAM[0, 1] == B.GRAM[2, 3] == 1 and B.GRAM.sum() == 4

    def test_symbolic_duality(self, generic):
        for i in range(4):
            for j in range(4):
                v = GENERIC.reduce(generic.pairing(i, generic.frame[j]))
                assert (v - Poly.const(1 if i == j else 0)).is_zero()

    @pytest.mark.parametrize("s", STRUCTURES, ids=lambda s: s.name)
    def test_numeric_duality_and_null_k(self, s):
        for y in random_points(5, 11):
            env = B.bundle_env(s, DATA, y[:3], y[3], 2)
            T = np.array([[t.value for t in row] for row in B.coordinate_coframe(env)])
            E = B.coordinate_frame(env)
            assert np.abs(T @ E.T - np.eye(4)).max() < 1e-10
            G = B.coordinate_metric(env)
            assert abs(E[3] @ G @ E[3]) < 1e-12
            assert np.abs(B.gram_matrix(G, E) - B.GRAM).max() < 1e-10

    def test_assembled_metric_is_real(self):
        G = B.metric_function(heisenberg_deformed(), DATA)(np.array([0.2, -0.3, 0.1, 0.5]))
        assert np.abs(G.imag).max() < 1e-12
        assert np.abs(G - G.T).max() < 1e-14
        assert np.sum(np.linalg.eigvalsh(G.real) < 0) == 1


class TestFefferman:
    def test_heisenberg_formula(self):
        y = (0.4, -0.1, 0.7)
        G = B.fefferman_coordinate_metric(heisenberg(), y)
        mu = np.array([1, 1j, 0, 0])
        lam = np.array([-y[1], y[0], 1, 0])
        drho = np.array([0, 0, 0, 1.0])
        sym = lambda a, b: 0.5 * (np.outer(a, b) + np.outer(b, a))
        assert np.abs(G - (sym(mu, mu.conj()) + (2 / 3) * sym(lam, drho))).max() < 1e-14

    @pytest.mark.parametrize("s", STRUCTURES, ids=lambda s: s.name)
    def test_member_of_the_family(self, s):
        # r = 2ρ/3, so the quasi-Fefferman metric in ρ picks up diag(1, 1, 1, 2/3)
        J = np.diag([1, 1, 1, 2 / 3])
        for y in random_points(5, 5):
            Gq = B.metric_function(s, B.fefferman_data())(np.array(y))
            assert np.abs(J @ Gq @ J - B.fefferman_coordinate_metric(s, y[:3])).max() < 1e-12

    def test_symbolic_member_uses_identified_parameters(self):
        b = B.build_fefferman(GENERIC)
        assert b.x.is_zero()
        assert (b.H - B.fefferman_H(GENERIC)).is_zero()
        assert abs(evaluate(b.P * b.P, PointSample({})) - 0.5) < 1e-15

    @pytest.mark.parametrize("tau, theta", [("0.3", "-0.4"), ("x1/3", "x2*x3/5")])
    def test_conformal_under_gauge(self, tau, theta):
        base = heisenberg_deformed()
        gs = GaugedCoordinateCR(base, tau, theta)
        for y in random_points(5, 9):
            G0 = B.fefferman_coordinate_metric(base, y[:3])
            G1 = B.fefferman_coordinate_metric(gs, y[:3], theta=theta)
            t = gs.gauge_jets(y[:3], 0)["tau"].value
            assert np.abs(G1 - np.exp(2 * t) * G0).max() < 1e-9


class TestTransformParameters:
    def test_identity(self):
        d = B.transform_parameters(GaugeTransform(0, 0), DATA)
        for y in random_points(3, 2):
            env0 = B.bundle_env(heisenberg(), DATA, y[:3], y[3], 1)
            env1 = B.bundle_env(heisenberg(), d, y[:3], y[3], 1)
            for name in ("P", "H", "x"):
                assert abs(env0.symbol(name).value - env1.symbol(name).value) < 1e-12

    def test_constant_theta(self):
        th = 0.7
        d = B.transform_parameters(GaugeTransform(0, str(th)), DATA)
        for y in random_points(3, 4):
            env0 = B.bundle_env(heisenberg(), DATA, y[:3], y[3] - 2 * th / 3, 1)
            env1 = B.bundle_env(heisenberg(), d, y[:3], y[3], 1)
            assert abs(env1.symbol("x").value - np.exp(5j * th / 3) * env0.symbol("x").value) < 1e-12
            assert abs(env1.symbol("P").value - env0.symbol("P").value) < 1e-12

    @pytest.mark.parametrize("s", STRUCTURES[::2], ids=lambda s: s.name)
    @pytest.mark.parametrize("tau, theta", [("0.2", "0.5"), ("x1/4", "x2/3 - x3/5")])
    def test_invariance(self, s, tau, theta):
        g = GaugeTransform(tau, theta)
        primed = B.gauged_metric_function(s, g, DATA)
        unprimed = B.metric_function(s, B.transform_parameters(g, DATA))
        for y in random_points(5, 21):
            assert np.abs(primed(np.array(y)) - unprimed(np.array(y))).max() < 1e-9


def _perturb(th):
    # add 0.1·θ⁴ to θ¹
    return [[th[0][j] + 0.1 * th[3][j] for j in range(4)]] + th[1:]


class TestShearFree:
    def test_structural(self, generic):
        assert all(f.is_zero() for f in B.shear_free_residual(generic))

    def test_fefferman_structural(self):
        assert all(f.is_zero() for f in B.shear_free_forms(B.build_fefferman(GENERIC)))

    @pytest.mark.parametrize("s", STRUCTURES, ids=lambda s: s.name)
    def test_numeric(self, s, generic):
        for y in random_points(5, 13):
            smp = B.sample_at(s, DATA, y[:3], y[3])
            assert max(abs(v) for v in B.shear_free_residual(generic, smp)) <= 1e-12
            env = B.bundle_env(s, DATA, y[:3], y[3], 2)
            assert max(abs(v) for v in B.coordinate_shear_free_residual(env)) <= 1e-12

    def test_perturbed_coframe_fails(self):
        for y in random_points(5, 17):
            env = B.bundle_env(heisenberg(), DATA, y[:3], y[3], 2)
            res = B.coordinate_shear_free_residual(env, B.coordinate_coframe(env, _perturb))
            assert max(abs(v) for v in res) > 1e-3

    def test_mubar_perturbation_breaks_second_residual(self):
        mubar = (1, -1j, 0, 0)
        perturb = lambda th: [[th[0][j] + 0.1 * mubar[j] for j in range(4)]] + th[1:]
        for y in random_points(5, 17):
            env = B.bundle_env(heisenberg(), DATA, y[:3], y[3], 2)
            first, second = B.coordinate_shear_free_residual(env, B.coordinate_coframe(env, perturb))
            assert abs(first) < 1e-12 and abs(second) > 1e-3


class TestAdaptFrame:
    def _metric(self, y):
        return B.metric_function(heisenberg_deformed(), DATA)(np.array(y))

    def test_gram_residual(self):
        k = np.array([0, 0, 0, 1.0])
        for y in random_points(10, 23):
            G = self._metric(y)
            F = B.adapt_frame(G, k)
            assert np.abs(B.gram_matrix(G, F) - B.GRAM).max() < 1e-10
            assert np.abs(F[1] - F[0].conj()).max() < 1e-12

    def test_recovers_frame_up_to_residual_freedom(self):
        y = (0.2, 0.1, -0.3, 0.4)
        env = B.bundle_env(heisenberg(), DATA, y[:3], y[3], 2)
        G = B.coordinate_metric(env)
        E = B.coordinate_frame(env)
        theta2 = np.array([t.value for t in B.coordinate_coframe(env)[1]])
        F = B.adapt_frame(G, E[3], annihilator=theta2)
        # e₁ of the adapted frame lies in span(e₁, k) of the analytic frame
        resid = F[0] - (F[0] @ G @ E[1]) * E[0] - (F[0] @ G @ E[2]) * E[3]
        assert np.abs(resid).max() < 1e-10
        assert abs(abs(F[0] @ G @ E[1]) - 1) < 1e-10

    def test_spacelike_k(self):
        with pytest.raises(B.AdaptFrameError):
            B.adapt_frame(self._metric((0.1, 0.2, 0.3, 0.4)), np.array([1.0, 0, 0, 0]))

    def test_degenerate_metric(self):
        with pytest.raises(B.AdaptFrameError):
            B.adapt_frame(np.zeros((4, 4)), np.array([0, 0, 0, 1.0]))
