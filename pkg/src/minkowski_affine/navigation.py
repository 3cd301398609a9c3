"""Zermelo navigation: the shifted norm F~ with F(y/F~(y) + U) = 1.

The root is found in s = 1/F~ by doubling a bracket and running a
safeguarded Newton iteration on ``F_base(s y + U) - 1`` (see
``_kernels._navigation_solve``). For a Euclidean base with metric G and
shift W the solution is the Randers norm of :func:`randers_closed_form`,
which is the cross-check for the numerical route.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConvergenceFailure, NavigationInfeasible, SpecError
from .norm_core import NAVIGATION_RESIDUAL, evaluate_many
from .specs import NAVIGATION_MARGIN, EuclideanNorm, NavigationNorm, RandersNorm

NavigationData = NavigationNorm


def solve_many(data: NavigationNorm, Y) -> np.ndarray:
    """F~ at each row of Y; the residual is re-checked with the base norm."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if np.any(np.linalg.norm(Y, axis=1) == 0.0):
        raise SpecError("the norm is not evaluated at y = 0")
    F, res, its = _kernels.values(data.structure, data.params, Y)
    if np.any(its >= _kernels.MAX_NEWTON):
        raise ConvergenceFailure("navigation Newton iteration hit its iteration cap")
    resid = np.abs(evaluate_many(data.base, Y / F[:, None] + data.U) - 1.0)
    if np.any(resid > NAVIGATION_RESIDUAL):
        raise ConvergenceFailure(f"navigation residual {resid.max():.3g} exceeds {NAVIGATION_RESIDUAL:g}")
    return F


def solve(data: NavigationNorm, y) -> float:
    return float(solve_many(data, y)[0])


def _check_wind(G: np.ndarray, W: np.ndarray) -> float:
    w2 = float(W @ G @ W)
    if w2 >= (1.0 - NAVIGATION_MARGIN) ** 2:
        raise NavigationInfeasible(f"need |W|_G < 1, got {np.sqrt(w2):.12g}")
    return 1.0 - w2


def randers_closed_form(G, W) -> RandersNorm:
    """Randers norm alpha + beta solving the navigation problem for (G, W).

    alpha^2 = (G/lam + G W W^T G / lam^2)(y, y), beta = (G W).y / lam,
    lam = 1 - |W|_G^2.
    """
    G = EuclideanNorm(G).Q
    W = np.asarray(W, dtype=float)
    lam = _check_wind(G, W)
    GW = G @ W
    return RandersNorm(G / lam + np.outer(GW, GW) / lam**2, GW / lam)


@dataclass(frozen=True)
class RandersIdentities:
    det_g: float
    sigma: float
    I_vector: np.ndarray
    F: float
    alpha: float
    beta: float
    lam: float


def randers_identities(G, W, y, convention: str = "corrected") -> RandersIdentities:
    """Closed-form det g, sigma and mean Cartan vector I^A of the Randers norm for (G, W).

    With ``m = dim + 1``::

        det g = (F / (lam alpha))^m det G
        I^A   = m alpha / (2 F) * (lam W - y beta / alpha^2 - (1 - lam) y / F + beta^2 y / (alpha^2 F))

    ``convention="printed"`` uses ``m = dim`` in both and divides I^A by a
    further F, the variant that only agrees with a rescaled norm on the
    indicatrix. I^A is returned with its index raised (g^AB I_B).
    """
    G = EuclideanNorm(G).Q
    W = np.asarray(W, dtype=float)
    y = np.asarray(y, dtype=float)
    lam = _check_wind(G, W)
    spec = randers_closed_form(G, W)
    dim = len(y)
    alpha = float(np.sqrt(y @ spec.a @ y))
    beta = float(spec.b @ y)
    F = alpha + beta
    if convention == "corrected":
        m, scale = dim + 1, 1.0
    elif convention == "printed":
        m, scale = dim, 1.0 / F
    else:
        raise SpecError(f"convention must be 'corrected' or 'printed', got {convention!r}")
    det_g = (F / (lam * alpha)) ** m * float(np.linalg.det(G))
    I_up = (scale * m * alpha / (2 * F)) * (
        lam * W - y * beta / alpha**2 - (1 - lam) * y / F + beta**2 * y / (alpha**2 * F)
    )
    return RandersIdentities(
        det_g=det_g, sigma=float(np.sqrt(np.linalg.det(G))), I_vector=I_up,
        F=F, alpha=alpha, beta=beta, lam=lam,
    )
