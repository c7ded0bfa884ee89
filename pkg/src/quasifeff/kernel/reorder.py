"""Independent rewriting of letter sequences, used to spot-check confluence.

The main kernel normalizes recursively (``diff_word``).  Here a word is
treated as a plain string of letters and adjacent inversions ``a b`` with
``a > b`` are replaced by ``b a + [a, b]`` one at a time, choosing either the
leftmost or the rightmost inversion.  Function coefficients produced by a
commutator are moved to the front with the Leibniz rule.  Different strategies
must reach the same normal form.
"""

from __future__ import annotations

from .expr import Atom, Poly

__all__ = ["rewrite_word", "STRATEGIES"]

STRATEGIES = ("leftmost", "rightmost")


def _find_inversion(letters, strategy):
    idx = range(len(letters) - 1)
    if strategy == "rightmost":
        idx = reversed(idx)
    for i in idx:
        if letters[i] > letters[i + 1]:
            return i
    return None


def _push(ctx, prefix, g: Poly, tail):
    """Expand ``prefix (g * tail)`` into ``[(coef, letters)]`` with coefficients in front."""
    if g.is_zero():
        return []
    if not prefix:
        return [(g, tuple(tail))]
    last = prefix[-1]
    out = _push(ctx, prefix[:-1], ctx.diff_poly(last, g), tail)
    out += _push(ctx, prefix[:-1], g, (last,) + tuple(tail))
    return out


def rewrite_word(ctx, letters, a: Atom, strategy="leftmost", max_steps=100000) -> Poly:
    """Normal form of ``letters`` (left to right, rightmost acts first) applied to ``a``."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    work = [(Poly.const(1), tuple(letters))]
    done = {}
    steps = 0
    while work:
        coef, word = work.pop()
        i = _find_inversion(word, strategy)
        if i is None:
            done[word] = done.get(word, Poly({})) + coef
            continue
        steps += 1
        if steps > max_steps:
            raise RuntimeError("rewriting did not terminate")
        x, y = word[i], word[i + 1]
        work.append((coef, word[:i] + (y, x) + word[i + 2 :]))
        for k, ck in ctx.commutator(x, y).items():
            for g, w in _push(ctx, word[:i], ck, (k,) + word[i + 2 :]):
                work.append((coef * g, w))
    out = Poly({})
    for word, coef in done.items():
        if coef.is_zero():
            continue
        counts = [0, 0, 0, 0]
        for l in word:
            counts[l] += 1
        out = out + coef * ctx.word_poly(a, tuple(counts))
    return out
