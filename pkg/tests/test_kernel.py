"""Symbolic kernel: numbers, parsing, normal forms, conjugation, equality and evaluation."""

import itertools
import random

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from strategies import CTX, F, trees

from quasifeff.kernel import (
    GENERIC,
    HEISENBERG,
    MU_EXACT,
    ConfigurationError,
    FrameAlgebra,
    MissingAssignment,
    ParseError,
    PointSample,
    QI,
    Poly,
    Randomized,
    Structural,
    conjugate,
    differentiate,
    equals,
    evaluate,
    is_zero,
    normalize,
    parse,
    to_latex,
    to_text,
)
from quasifeff.kernel.expr import D0, D1, D2, DR, Atom, Word
from quasifeff.kernel.reorder import STRATEGIES, rewrite_word
from quasifeff.kernel.tree import D, Conj, Deriv, Mul, Sym, conj, lift

I = QI(0, 1)
PROPERTY_SETTINGS = settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def p(text, ctx=GENERIC):
    return normalize(parse(text), ctx)


class TestNumbers:
    def test_exact_arithmetic(self):
        a = QI("1/3", "2/5")
        assert a + a - a == a
        assert (a * a.conjugate()).im == 0
        assert QI(1) / QI(0, 1) == QI(0, -1)

    def test_complex_conversion(self):
        assert complex(QI("1/2", -3)) == complex(0.5, -3)


class TestParser:
    def test_grammar_covers_operators_and_functions(self):
        e = parse("exp(I*r) * 2^3 - D1(f)/2 + conj(D0(g)) + sin(r)^2 + cos(r)^2")
        assert isinstance(normalize(e, GENERIC), Poly)

    def test_text_round_trip(self):
        src = p("D2(D1(f)) + I*c*exp(-I*r)/3 - 1/2*x^2")
        again = normalize(parse(to_text(src)), GENERIC)
        assert (src - again).is_zero()

    @pytest.mark.parametrize("bad", ["", "1 +", "f(", "exp)", "3 $ 4", "D1(f, g)"])
    def test_malformed_input_is_rejected(self, bad):
        with pytest.raises(ParseError):
            parse(bad)

    def test_error_carries_position(self):
        with pytest.raises(ParseError) as ei:
            parse("f + * g")
        assert ei.value.pos == 4

    def test_latex_output(self):
        out = to_latex(p("D1(c) + cbar"))
        assert r"\partial" in out and r"\bar{c}" in out


class TestDifferentiate:
    def test_constant(self):
        assert differentiate(lift(5), D1).is_zero()

    def test_bracket_d1_d2(self):
        e = D(D1, D(D2, parse("f"))) - D(D2, D(D1, parse("f")))
        assert (normalize(e, GENERIC) - p("-I*D0(f)")).is_zero()

    def test_bracket_d1_d0(self):
        e = D(D1, D(D0, parse("f"))) - D(D0, D(D1, parse("f")))
        expected = p("-alpha*D1(f) - betabar*D2(f) - c*D0(f)")
        assert (normalize(e, GENERIC) - expected).is_zero()

    def test_bracket_d2_d0(self):
        e = D(D2, D(D0, parse("f"))) - D(D0, D(D2, parse("f")))
        expected = p("-beta*D1(f) - alphabar*D2(f) - cbar*D0(f)")
        assert (normalize(e, GENERIC) - expected).is_zero()

    def test_dr_commutes_and_kills_r_independent_atoms(self):
        assert p("Dr(f)").is_zero()
        assert (p("Dr(r^2)") - p("2*r")).is_zero()
        e = D(DR, D(D1, Sym(F))) - D(D1, D(DR, Sym(F)))
        assert normalize(e, CTX).is_zero()

    def test_chain_rule_through_transcendental_nodes(self):
        assert (p("D1(exp(f))") - p("D1(f)*exp(f)")).is_zero()
        assert (p("D2(sin(f))") - p("D2(f)*cos(f)")).is_zero()
        assert (p("D0(cos(f))") + p("D0(f)*sin(f)")).is_zero()

    def test_reduced_contexts(self):
        assert (p("D1(D0(f)) - D0(D1(f))", MU_EXACT) - p("-c*D0(f)", MU_EXACT)).is_zero()
        assert p("D1(D0(f)) - D0(D1(f))", HEISENBERG).is_zero()

    def test_jacobi_with_structure_functions(self):
        # brackets taken from the commutator table, so derivatives of c, alpha, beta must cancel
        f = Atom("f")
        ctx = FrameAlgebra(atoms=(f,))
        F_ = ctx.word_poly(f, (0, 0, 0, 0))

        def bracket(x, y, g):
            out = Poly({})
            for k, ck in ctx.commutator(x, y).items():
                out = out + ck * ctx.diff_poly(k, g)
            return out

        total = Poly({})
        for x, y, z in ((D1, D2, D0), (D2, D0, D1), (D0, D1, D2)):
            total = total + bracket(x, y, ctx.diff_poly(z, F_)) - ctx.diff_poly(z, bracket(x, y, F_))
        assert ctx.reduce(total).is_zero()


class TestConjugate:
    def test_imaginary_unit(self):
        assert (conjugate(lift(I)) - Poly.const(-I)).is_zero()

    def test_paired_atom(self):
        assert (conjugate(parse("c")) - p("cbar")).is_zero()

    def test_swaps_d1_and_d2(self):
        assert (conjugate(parse("D1(f)")) - p("D2(fbar)")).is_zero()

    def test_real_atoms_and_d0_are_fixed(self):
        table = {"u": Atom("u", real=True)}
        assert (normalize(conj(D(D0, parse("u", table))), GENERIC) - normalize(D(D0, parse("u", table)), GENERIC)).is_zero()


class TestNormalize:
    def test_inverse_exponentials(self):
        assert (p("exp(I*r)*exp(-I*r)") - Poly.const(1)).is_zero()

    def test_canonical_order(self):
        assert (p("D2(D1(f))") - p("D1(D2(f)) + I*D0(f)")).is_zero()

    def test_like_terms(self):
        assert (p("x + x") - p("2*x")).is_zero()

    def test_words_are_canonically_ordered(self):
        out = p("D0(D2(D1(D0(f))))")
        for mono in out.terms:
            for f, _ in mono:
                if isinstance(f, Word):
                    letters = [l for l in range(4) for _ in range(f.counts[l])]
                    assert letters == sorted(letters)

    def test_no_duplicate_monomials(self):
        out = p("D1(D2(f)) + D2(D1(f)) + f*f - f^2")
        assert len(set(out.terms)) == len(out.terms)


class TestEquality:
    def test_structural_distinguishes_non_commuting_words(self):
        assert not equals(parse("D1(D2(f))"), parse("D2(D1(f))"), GENERIC, Structural())

    def test_double_conjugation(self):
        assert equals(conj(conj(parse("c"))), parse("c"), GENERIC, Structural())

    def test_randomized_catches_trigonometric_identity(self):
        e = parse("sin(f)^2 + cos(f)^2 - 1")
        assert not normalize(e, GENERIC).is_zero()
        assert is_zero(e, GENERIC, Randomized(8, 1e-9))

    def test_sampler_missing_atom_is_configuration_error(self):
        sampler = {"f": lambda rng, counts: 1.0}
        with pytest.raises(ConfigurationError):
            equals(parse("f*sin(g)"), parse("g"), GENERIC, Randomized(2, 1e-9, structural_first=False), sampler)


class TestEvaluate:
    def test_vanishing_structure_function(self):
        assert evaluate(p("c"), PointSample({("c", (0, 0, 0, 0)): 0})) == 0

    def test_fiber_exponential(self):
        smp = PointSample({("x", (0, 0, 0, 0)): 1}, r=0.0)
        assert evaluate(p("I*x*exp(-I*r)"), smp) == 1j

    def test_missing_word_is_named(self):
        with pytest.raises(MissingAssignment) as ei:
            evaluate(p("D1(D2(f))"), PointSample({}))
        assert "D1(D2(f))" in str(ei.value)


class TestProperties:
    """Random-tree property suites; each runs on 1000 generated trees."""

    @PROPERTY_SETTINGS
    @given(trees, trees)
    def test_leibniz(self, a, b):
        na, nb = normalize(a, CTX), normalize(b, CTX)
        for w in (D1, D2, D0, DR):
            lhs = normalize(Deriv(w, Mul((a, b))), CTX)
            rhs = normalize(Deriv(w, a), CTX) * nb + na * normalize(Deriv(w, b), CTX)
            assert (lhs - rhs).is_zero()

    @PROPERTY_SETTINGS
    @given(trees)
    def test_involution(self, e):
        assert (normalize(Conj(Conj(e)), CTX) - normalize(e, CTX)).is_zero()

    @PROPERTY_SETTINGS
    @given(trees, st.permutations((D1, D2, D0)))
    def test_jacobi(self, f, order):
        # [X,[Y,Z]] + [Y,[Z,X]] + [Z,[X,Y]] applied to f, each bracket expanded as compositions
        def op(letter):
            return lambda g: Deriv(letter, g)

        def comm(x, y):
            return lambda g: op(x)(op(y)(g)) - op(y)(op(x)(g))

        total = 0
        for x, y, z in ((order[0], order[1], order[2]), (order[1], order[2], order[0]), (order[2], order[0], order[1])):
            yz = comm(y, z)
            total = total + (op(x)(yz(f)) - yz(op(x)(f)))
        assert normalize(total, CTX).is_zero()

    @PROPERTY_SETTINGS
    @given(trees)
    def test_idempotent(self, e):
        once = normalize(e, CTX)
        assert (normalize(once, CTX) - once).is_zero()
        assert normalize(once, CTX).terms == once.terms

    @settings(max_examples=200, deadline=None)
    @given(trees, trees)
    def test_structural_equality_implies_randomized_on_exact_samples(self, a, b):
        e = Mul((a, b)) - Mul((b, a))
        assert normalize(e, CTX).is_zero()
        assert is_zero(e, CTX, Randomized(4, 1e-12, structural_first=False))


def _corpus():
    """50 fixed derivative words: all words of length 3 in D1, D2, D0, then 23 of length 4 and 5."""
    out = [w for w in itertools.product((D1, D2, D0), repeat=3)]
    rng = random.Random(2024)
    while len(out) < 50:
        n = rng.choice((4, 5))
        w = tuple(rng.choice((D1, D2, D0, DR)) for _ in range(n))
        if w not in out:
            out.append(w)
    return out


CORPUS = _corpus()


class TestConfluence:
    def test_corpus_size(self):
        assert len(CORPUS) == 50

    @pytest.mark.parametrize("letters", CORPUS, ids=lambda w: "".join(("1", "2", "0", "r")[l] for l in w))
    def test_rewrite_orders_agree(self, letters):
        f = Atom("f", r_dependent=True)
        ctx = FrameAlgebra(atoms=(f,))
        forms = [rewrite_word(ctx, letters, f, strategy) for strategy in STRATEGIES]
        tree = Sym(f)
        for l in reversed(letters):
            tree = Deriv(l, tree)
        direct = normalize(tree, ctx)
        for out in forms:
            assert (out - direct).is_zero()
        assert (normalize(direct, ctx) - direct).is_zero()

    def test_d1_d2_d0_spot_check(self):
        f = Atom("f")
        ctx = FrameAlgebra(atoms=(f,))
        a, b = (rewrite_word(ctx, (D1, D2, D0), f, s) for s in STRATEGIES)
        assert (a - b).is_zero()

