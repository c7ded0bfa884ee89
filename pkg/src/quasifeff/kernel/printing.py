"""Text and LaTeX rendering of normal forms.

The text form uses the config grammar, so ``parse(to_text(p))`` normalizes
back to ``p``.
"""

from __future__ import annotations

from .expr import LETTER_NAMES, Func, Poly, Word
from .numbers import QI

__all__ = ["to_text", "to_latex", "coeff_text"]

_GREEK = {
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "iota",
    "kappa", "lambda", "mu", "nu", "xi", "pi", "rho", "sigma", "tau", "upsilon",
    "phi", "chi", "psi", "omega",
}
_LATEX_LETTERS = (r"\partial", r"\bar{\partial}", r"\partial_0", r"\partial_r")


def _sorted_factors(m):
    return sorted(m, key=lambda fp: fp[0].key)


def _rat(q) -> str:
    return str(q)


def coeff_text(c: QI) -> str:
    if not c.im:
        return _rat(c.re)
    if not c.re:
        if c.im == 1:
            return "I"
        if c.im == -1:
            return "-I"
        return f"{_rat(c.im)}*I"
    sign = "+" if c.im > 0 else "-"
    im = abs(c.im)
    imt = "I" if im == 1 else f"{_rat(im)}*I"
    return f"({_rat(c.re)} {sign} {imt})"


def _pow_text(p) -> str:
    if isinstance(p, int) and p >= 0:
        return str(p)
    return f"({p})"


def _factor_text(f) -> str:
    if isinstance(f, Word):
        s = f.atom.name
        for letter in reversed(range(4)):
            for _ in range(f.counts[letter]):
                s = f"{LETTER_NAMES[letter]}({s})"
        return s
    if isinstance(f, Func):
        return f"{f.kind}({to_text(f.arg)})"
    return f"({to_text(f.arg)})"


def _mono_text(m) -> str:
    parts = []
    for f, p in _sorted_factors(m):
        s = _factor_text(f)
        parts.append(s if p == 1 else f"{s}^{_pow_text(p)}")
    return "*".join(parts)


def to_text(p: Poly) -> str:
    if not isinstance(p, Poly):
        return repr(p)
    if p.is_zero():
        return "0"
    out = []
    for m, c in p.sorted_terms():
        body = _mono_text(m)
        neg = (c.re < 0) if c.is_real() else (not c.re and c.im < 0)
        cc = -c if neg else c
        if not body:
            term = coeff_text(cc)
        elif cc == 1:
            term = body
        else:
            term = f"{coeff_text(cc)}*{body}"
        if not out:
            out.append(("-" if neg else "") + term)
        else:
            out.append((" - " if neg else " + ") + term)
    return "".join(out)


def _latex_name(name: str) -> str:
    bar = name.endswith("bar") and len(name) > 3
    base = name[:-3] if bar else name
    if base in _GREEK:
        base = "\\" + base
    elif len(base) > 1:
        base = r"\mathrm{" + base + "}"
    return r"\bar{" + base + "}" if bar else base


def _latex_rat(q) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return r"\frac{" + str(q.numerator) + "}{" + str(q.denominator) + "}"


def _latex_coeff(c: QI) -> str:
    if not c.im:
        return _latex_rat(c.re)
    if not c.re:
        if c.im == 1:
            return r"\mathrm{i}"
        if c.im == -1:
            return r"-\mathrm{i}"
        return _latex_rat(c.im) + r"\mathrm{i}"
    sign = "+" if c.im > 0 else "-"
    return "(" + _latex_rat(c.re) + sign + _latex_rat(abs(c.im)) + r"\mathrm{i})"


def _latex_factor(f) -> str:
    if isinstance(f, Word):
        ops = "".join(
            _LATEX_LETTERS[letter] * 1 for letter in range(4) for _ in range(f.counts[letter])
        )
        return ops + " " + _latex_name(f.atom.name) if ops else _latex_name(f.atom.name)
    if isinstance(f, Func):
        name = {"exp": r"\exp", "sin": r"\sin", "cos": r"\cos", "log": r"\log"}[f.kind]
        return name + r"\left(" + to_latex(f.arg) + r"\right)"
    return r"\left(" + to_latex(f.arg) + r"\right)"


def to_latex(p: Poly) -> str:
    if p.is_zero():
        return "0"
    out = []
    for m, c in p.sorted_terms():
        parts = []
        for f, pw in _sorted_factors(m):
            s = _latex_factor(f)
            if pw != 1:
                if isinstance(f, Word) and any(f.counts):
                    s = "(" + s + ")"
                s = s + "^{" + (str(pw) if isinstance(pw, int) else _latex_rat(pw)) + "}"
            parts.append(s)
        body = " ".join(parts)
        neg = (c.re < 0) if c.is_real() else (not c.re and c.im < 0)
        cc = -c if neg else c
        if not body:
            term = _latex_coeff(cc)
        elif cc == 1:
            term = body
        else:
            term = _latex_coeff(cc) + " " + body
        if not out:
            out.append(("-" if neg else "") + term)
        else:
            out.append((" - " if neg else " + ") + term)
    return "".join(out)
