"""Coordinate finite-difference curvature, used as an independent check of the frame pipeline.

Given a function ``y -> G(y)`` returning metric components in coordinates,
Christoffel symbols come from central first differences and the Riemann
tensor from central second differences of ``G``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["CoordinateCurvature", "coordinate_curvature", "frame_components"]

DEFAULT_STEP = 1e-4


@dataclass
class CoordinateCurvature:
    """Values at one point: ``Gamma[a, b, c] = Γ^a_{bc}``, ``Riem[a, b, c, d] = R^a_{bcd}``."""

    G: np.ndarray
    Gamma: np.ndarray
    Riem: np.ndarray

    @property
    def ricci(self) -> np.ndarray:
        return np.einsum("abad->bd", self.Riem)

    @property
    def riem_lower(self) -> np.ndarray:
        return np.einsum("ae,ebcd->abcd", self.G, self.Riem)


def coordinate_curvature(metric, y, h: float = DEFAULT_STEP) -> CoordinateCurvature:
    """Curvature of the metric ``metric(y)`` (an ``n×n`` array) at ``y``.

    ``R^a_{bcd} = ∂_c Γ^a_{db} - ∂_d Γ^a_{cb} + Γ^a_{ce} Γ^e_{db} - Γ^a_{de} Γ^e_{cb}``.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    E = np.eye(n) * h
    G0 = np.asarray(metric(y), dtype=complex)
    plus = [np.asarray(metric(y + E[c]), dtype=complex) for c in range(n)]
    minus = [np.asarray(metric(y - E[c]), dtype=complex) for c in range(n)]
    dG = np.array([(plus[c] - minus[c]) / (2 * h) for c in range(n)])  # dG[c, a, b]
    ddG = np.empty((n, n, n, n), dtype=complex)  # ddG[c, d, a, b]
    for c in range(n):
        ddG[c, c] = (plus[c] - 2 * G0 + minus[c]) / h**2
        for d in range(c + 1, n):
            pp = metric(y + E[c] + E[d])
            pm = metric(y + E[c] - E[d])
            mp = metric(y - E[c] + E[d])
            mm = metric(y - E[c] - E[d])
            v = (np.asarray(pp) - pm - mp + mm) / (4 * h * h)
            ddG[c, d] = ddG[d, c] = v
    Ginv = np.linalg.inv(G0)
    # lowered Christoffel Γ_{dbc} = ½(∂_b G_dc + ∂_c G_db - ∂_d G_bc) and its derivatives
    low = 0.5 * (np.einsum("bdc->dbc", dG) + np.einsum("cdb->dbc", dG) - dG)
    dlow = 0.5 * (
        np.einsum("ebdc->edbc", ddG) + np.einsum("ecdb->edbc", ddG) - np.einsum("edbc->edbc", ddG)
    )  # dlow[e, d, b, c] = ∂_e Γ_{dbc}
    Gamma = np.einsum("ad,dbc->abc", Ginv, low)
    dGinv = -np.einsum("ai,eij,jd->ead", Ginv, dG, Ginv)
    dGamma = np.einsum("ead,dbc->eabc", dGinv, low) + np.einsum("ad,edbc->eabc", Ginv, dlow)
    Riem = (
        np.einsum("cadb->abcd", dGamma)
        - np.einsum("dacb->abcd", dGamma)
        + np.einsum("ace,edb->abcd", Gamma, Gamma)
        - np.einsum("ade,ecb->abcd", Gamma, Gamma)
    )
    return CoordinateCurvature(G0, Gamma, Riem)


def frame_components(cc: CoordinateCurvature, frame):
    """Ricci ``Ric(e_j, e_l)`` and lowered Riemann ``R(e_i, e_j, e_k, e_l)`` for frame rows ``e``."""
    F = np.asarray(frame)
    ric = F @ cc.ricci @ F.T
    riem = np.einsum("abcd,ia,jb,kc,ld->ijkl", cc.riem_lower, F, F, F, F)
    return ric, riem
