"""Formal frame differentiation on normal forms.

The derivation algebra is generated by ``D1 = ∂``, ``D2 = ∂̄``, ``D0 = ∂₀`` on
the base and ``Dr = ∂_r`` along the fiber, subject to

    [D1, D2] = -i D0
    [D1, D0] = -α D1 - β̄ D2 - c D0
    [D2, D0] = -β D1 - ᾱ D2 - c̄ D0
    [Dr, ·]  = 0

Words are normal ordered with letters sorted (D1, D2, D0, Dr) from the left.
The structure functions are not independent: ``d² = 0`` on the coframe forces

    D1 c̄ = D2 c + i(α + ᾱ)
    D1 β = D2 α + α c̄ - β c
    D2 β̄ = D1 ᾱ + ᾱ c - β̄ c̄

so any word containing ``D1`` applied to ``c̄`` or ``β``, or ``D2`` applied to
``β̄``, is rewritten through these relations.  Without them the rewriting is
not confluent (the Jacobi identity would fail on the structure functions).
"""

from __future__ import annotations

from .expr import (
    D0,
    D1,
    D2,
    DR,
    Atom,
    Func,
    Paren,
    Poly,
    R,
    Word,
    _pw,
    cos_,
    exp_,
    log_,
    poly_pow,
    sin_,
)
from .numbers import QI

__all__ = [
    "FrameAlgebra",
    "GENERIC",
    "MU_EXACT",
    "HEISENBERG",
    "C",
    "CBAR",
    "ALPHA",
    "ALPHABAR",
    "BETA",
    "BETABAR",
    "STRUCTURE_ATOMS",
]

C = Atom("c", conj_name="cbar")
CBAR = Atom("cbar", conj_name="c")
ALPHA = Atom("alpha", conj_name="alphabar")
ALPHABAR = Atom("alphabar", conj_name="alpha")
BETA = Atom("beta", conj_name="betabar")
BETABAR = Atom("betabar", conj_name="beta")
STRUCTURE_ATOMS = (C, CBAR, ALPHA, ALPHABAR, BETA, BETABAR)

_I = QI(0, 1)


def _counts_minus(counts, letter):
    c = list(counts)
    c[letter] -= 1
    return tuple(c)


def _counts_plus(counts, letter):
    c = list(counts)
    c[letter] += 1
    return tuple(c)


def _letters(counts):
    """Expand counts into the left-to-right letter sequence."""
    out = []
    for letter, n in enumerate(counts):
        out.extend([letter] * n)
    return out


def _lead(counts):
    for letter in (D1, D2, D0):
        if counts[letter]:
            return letter
    return None


class FrameAlgebra:
    """A rewriting context: which structure functions are present, plus substitutions.

    Parameters
    ----------
    c, alpha, beta:
        Whether the structure functions ``c``, ``α``, ``β`` (and their
        conjugates) are kept as symbols.  Disabled ones are identically zero.
        ``c = 0`` forces ``α + ᾱ = 0``, so disabling ``c`` while keeping ``α``
        is rejected.
    subs:
        Optional ``{atom_name: Poly}`` substitution table for non-structure
        atoms.  The conjugate atom is substituted by the conjugate value.
    atoms:
        Extra atoms to register (needed so conjugation can resolve pairs).
    """

    def __init__(self, c=True, alpha=True, beta=True, subs=None, atoms=(), name=None):
        if alpha and not c:
            raise ValueError("alpha requires c: d^2 lambda = 0 gives alpha + conj(alpha) = i*(...) of c")
        self.flags = (bool(c), bool(alpha), bool(beta))
        self.name = name or f"FrameAlgebra(c={c}, alpha={alpha}, beta={beta})"
        self.atoms = {}
        for a in (R,) + STRUCTURE_ATOMS:
            self.register(a)
        for a in atoms:
            self.register(a)
        self.zero = set()
        if not c:
            self.zero |= {"c", "cbar"}
        if not alpha:
            self.zero |= {"alpha", "alphabar"}
        if not beta:
            self.zero |= {"beta", "betabar"}
        self._dw_cache = {}
        self._wp_cache = {}
        self._arg_cache = {}
        self._conj_cache = {}
        self._red_cache = {}
        self.subs = {}
        self.comm = {}
        self._build_comm()
        self.principal = {}
        self._build_principal()
        for name_, value in (subs or {}).items():
            self.substitute(name_, value)

    # setup ----------------------------------------------------------------------
    def register(self, a: Atom) -> Atom:
        old = self.atoms.get(a.name)
        if old is not None and old != a:
            raise ValueError(f"atom {a.name!r} already registered with different flags")
        self.atoms[a.name] = a
        if not a.real and a.conj_name not in self.atoms:
            self.atoms[a.conj_name] = a.conjugate()
        return a

    def atom(self, name: str) -> Atom:
        try:
            return self.atoms[name]
        except KeyError:
            raise KeyError(f"unknown atom {name!r}") from None

    def substitute(self, name: str, value):
        if name in {a.name for a in STRUCTURE_ATOMS} or name == "r":
            raise ValueError(f"cannot substitute structure atom {name!r}; use the context flags")
        a = self.atom(name)
        value = self.reduce(value if isinstance(value, Poly) else Poly.const(value))
        if a.name in value.atoms():
            raise ValueError(f"recursive substitution for {name!r}")
        self.subs[a.name] = value
        if not a.real:
            self.subs[a.conj_name] = self.conj(value)
        self._clear()

    def _clear(self):
        for cache in (self._dw_cache, self._wp_cache, self._arg_cache, self._conj_cache, self._red_cache):
            cache.clear()

    def _sym(self, a: Atom) -> Poly:
        if a.name in self.zero:
            return Poly({})
        return Poly.factor(Word(a))

    def _build_comm(self):
        c, cb = self._sym(C), self._sym(CBAR)
        al, alb = self._sym(ALPHA), self._sym(ALPHABAR)
        be, beb = self._sym(BETA), self._sym(BETABAR)
        table = {
            (D1, D2): {D0: Poly.const(-_I)},
            (D1, D0): {D1: -al, D2: -beb, D0: -c},
            (D2, D0): {D1: -be, D2: -alb, D0: -cb},
        }
        self.comm = {k: {l: p for l, p in v.items() if not p.is_zero()} for k, v in table.items()}

    def _build_principal(self):
        # rules are built lazily because they use word_poly themselves
        if "cbar" not in self.zero:
            self.principal["cbar"] = D1
        if "beta" not in self.zero:
            self.principal["beta"] = D1
            self.principal["betabar"] = D2
        self._rules = {}

    def _rule(self, name):
        rule = self._rules.get(name)
        if rule is None:
            c, cb = self._sym(C), self._sym(CBAR)
            al, alb = self._sym(ALPHA), self._sym(ALPHABAR)
            be, beb = self._sym(BETA), self._sym(BETABAR)
            if name == "cbar":
                rule = self.word_poly(C, (0, 1, 0, 0)) + (al + alb).scale(_I)
            elif name == "beta":
                rule = self.word_poly(ALPHA, (0, 1, 0, 0)) + al * cb - be * c
            else:
                rule = self.word_poly(ALPHABAR, (1, 0, 0, 0)) + alb * c - beb * cb
            self._rules[name] = rule
        return rule

    def commutator(self, a: int, b: int) -> dict:
        """``[D_a, D_b]`` as ``{letter: coefficient}``."""
        if a == b or a == DR or b == DR:
            return {}
        if a < b:
            return self.comm[(a, b)]
        return {k: -v for k, v in self.comm[(b, a)].items()}

    # words ----------------------------------------------------------------------
    def word_poly(self, a: Atom, counts) -> Poly:
        """The normal form of the canonically ordered word ``counts`` applied to ``a``."""
        key = (a.name, counts)
        hit = self._wp_cache.get(key)
        if hit is not None:
            return hit
        out = self._word_poly(a, counts)
        self._wp_cache[key] = out
        return out

    def _word_poly(self, a, counts):
        if a.name in self.zero:
            return Poly.const(0)
        if a.constant:
            return Poly.const(0) if any(counts) else Poly.factor(Word(a))
        if a.name == "r":
            if counts == (0, 0, 0, 0):
                return Poly.factor(Word(a))
            return Poly.const(1) if counts == (0, 0, 0, 1) else Poly.const(0)
        if counts[DR] and not a.r_dependent:
            return Poly.const(0)
        if a.name in self.subs:
            return self.apply_letters(_letters(counts), self.subs[a.name])
        L = self.principal.get(a.name)
        if L is None or counts[L] == 0:
            return Poly.factor(Word(a, counts))
        lead = _lead(counts)
        if lead != L or counts[L] >= 2:
            return self.diff_poly(lead, self.word_poly(a, _counts_minus(counts, lead)))
        # D_L X a with X free of L: X (D_L a) plus the commutators picked up on the way
        xs = _letters(_counts_minus(counts, L))
        out = self.apply_letters(xs, self._rule(a.name))
        for j, lj in enumerate(xs):
            comm = self.commutator(L, lj)
            if not comm:
                continue
            suffix = [0, 0, 0, 0]
            for l in xs[j + 1 :]:
                suffix[l] += 1
            inner_word = Word(a, tuple(suffix))
            inner = Poly({})
            for k, coef in comm.items():
                inner = inner + coef * self.diff_word(k, inner_word)
            out = out + self.apply_letters(xs[:j], inner)
        return out

    def diff_word(self, w: int, word: Word) -> Poly:
        """``D_w`` applied to a normal word."""
        key = (w, word)
        hit = self._dw_cache.get(key)
        if hit is not None:
            return hit
        out = self._diff_word(w, word)
        self._dw_cache[key] = out
        return out

    def _diff_word(self, w, word):
        a, counts = word.atom, word.counts
        if a.constant or a.name in self.zero:
            return Poly.const(0)
        if a.name == "r":
            return Poly.const(1) if w == DR else Poly.const(0)
        if w == DR:
            if not a.r_dependent:
                return Poly.const(0)
            return self.word_poly(a, _counts_plus(counts, DR))
        lead = _lead(counts)
        if lead is None or w <= lead:
            return self.word_poly(a, _counts_plus(counts, w))
        rest = Word(a, _counts_minus(counts, lead))
        out = self.diff_poly(lead, self.diff_word(w, rest))
        for k, coef in self.commutator(lead, w).items():
            out = out - coef * self.diff_word(k, rest)
        return out

    # polynomials ------------------------------------------------------------------
    def apply_letters(self, letters, p: Poly) -> Poly:
        """Apply a left-to-right letter sequence (rightmost acts first)."""
        for letter in reversed(letters):
            p = self.diff_poly(letter, p)
        return p

    def _diff_arg(self, w, arg: Poly) -> Poly:
        key = (w, arg)
        hit = self._arg_cache.get(key)
        if hit is None:
            hit = self.diff_poly(w, arg)
            self._arg_cache[key] = hit
        return hit

    def diff_factor(self, w: int, f) -> Poly:
        if isinstance(f, Word):
            return self.diff_word(w, f)
        du = self._diff_arg(w, f.arg)
        if du.is_zero():
            return du
        if isinstance(f, Paren):
            return du
        kind = f.kind
        if kind == "exp":
            return Poly.factor(f) * du
        if kind == "sin":
            return cos_(f.arg) * du
        if kind == "cos":
            return -(sin_(f.arg) * du)
        return du * poly_pow(f.arg, -1)

    def diff_poly(self, w: int, p: Poly) -> Poly:
        """``D_w p`` by the Leibniz rule; the result is a normal form."""
        acc = {}
        get = acc.get
        for m, c in p.terms.items():
            for f, pw in m:
                df = self.diff_factor(w, f)
                if df.is_zero():
                    continue
                if isinstance(f, Func) and f.is_exp:
                    # d exp(u) = exp(u) du; the monomial keeps its exp factor
                    part = Poly({m: c}) * self._diff_arg(w, f.arg)
                else:
                    d = dict(m)
                    newp = _pw(pw - 1)
                    if pw != 1:
                        df = df.scale(pw)
                    if newp:
                        d[f] = newp
                    else:
                        del d[f]
                    part = Poly({frozenset(d.items()): c}) * df
                for mm, cc in part.terms.items():
                    v = get(mm)
                    acc[mm] = cc if v is None else v + cc
        return Poly({m: c for m, c in acc.items() if c})

    def diff(self, w: int, p: Poly) -> Poly:
        return self.diff_poly(w, p)

    # conjugation ---------------------------------------------------------------------
    def conj_factor(self, f) -> Poly:
        hit = self._conj_cache.get(f)
        if hit is not None:
            return hit
        if isinstance(f, Word):
            a = f.atom
            if a.real:
                abar = a
            else:
                abar = self.atoms.get(a.conj_name) or a.conjugate()
            n1, n2, n0, nr = f.counts
            out = self.word_poly(abar, (0, 0, n0, nr))
            out = self.apply_letters([D2] * n1 + [D1] * n2, out)
        elif isinstance(f, Paren):
            out = self.conj(f.arg)
        else:
            arg = self.conj(f.arg)
            out = {"exp": exp_, "sin": sin_, "cos": cos_, "log": log_}[f.kind](arg)
        self._conj_cache[f] = out
        return out

    def conj(self, p: Poly) -> Poly:
        out = Poly({})
        for m, c in p.terms.items():
            term = Poly.const(c.conjugate())
            for f, pw in m:
                cf = self.conj_factor(f)
                if isinstance(f, Paren):
                    term = term * poly_pow(cf, pw)
                else:
                    term = term * (cf if pw == 1 else poly_pow(cf, pw))
            out = out + term
        return out

    # reduction -----------------------------------------------------------------------
    def reduce_factor(self, f) -> Poly:
        hit = self._red_cache.get(f)
        if hit is not None:
            return hit
        if isinstance(f, Word):
            a = self.atoms.get(f.atom.name, f.atom)
            out = self.word_poly(a, f.counts)
        elif isinstance(f, Paren):
            out = self.reduce(f.arg)
        else:
            arg = self.reduce(f.arg)
            out = {"exp": exp_, "sin": sin_, "cos": cos_, "log": log_}[f.kind](arg)
        self._red_cache[f] = out
        return out

    def reduce(self, p: Poly) -> Poly:
        """Bring an arbitrary ``Poly`` to the normal form of this context."""
        out = Poly({})
        for m, c in p.terms.items():
            term = Poly.const(c)
            for f, pw in m:
                rf = self.reduce_factor(f)
                term = term * (rf if pw == 1 else poly_pow(rf, pw))
                if term.is_zero():
                    break
            out = out + term
        return out

    def __repr__(self):
        return self.name


GENERIC = FrameAlgebra(name="GENERIC")
MU_EXACT = FrameAlgebra(alpha=False, beta=False, name="MU_EXACT")
HEISENBERG = FrameAlgebra(c=False, alpha=False, beta=False, name="HEISENBERG")
