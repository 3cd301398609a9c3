"""Pointwise invariants of a Minkowski norm obtained by differentiating F.

Conventions for a norm F on R^{n+1} (``dim = n + 1``)::

    g_AB   = 1/2 d_A d_B F^2                 fundamental tensor
    h_AB   = g_AB - l_A l_B, l = dF          angular form
    A_ABC  = F/4 d_A d_B d_C F^2             Cartan torsion
    I_A    = g^BC A_ABC                      Cartan form
    tau    = log(sqrt(det g) / sigma_F)      distortion
    M_ABC  = A_ABC - k (I_A h_BC + I_B h_CA + I_C h_AB)

with ``k = 1/(dim + 1)`` (the trace-free choice) or ``k = 1/(dim + 2)``
(``matsumoto="printed"``). The pseudo-inverse of the angular form is
``h^AB = g^AB - y^A y^B / F^2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np

from . import _kernels
from .errors import (
    ConvergenceFailure,
    DifferentiationFailure,
    NotStronglyConvex,
    PhiDomainViolation,
    SpecError,
)
from .specs import AlphaBetaNorm, NormSpec

EPS_CONVEX = 1e-8
NAVIGATION_RESIDUAL = 1e-12
MATSUMOTO_MODES = ("tracefree", "printed")


def matsumoto_coefficient(dim: int, mode: str = "tracefree") -> float:
    if mode == "tracefree":
        return 1.0 / (dim + 1)
    if mode == "printed":
        return 1.0 / (dim + 2)
    raise SpecError(f"matsumoto mode must be one of {MATSUMOTO_MODES}, got {mode!r}")


@dataclass(frozen=True)
class Jet3:
    """Derivatives of F^2 at a point, plus F and dF."""

    y: np.ndarray
    value: float
    gradient: np.ndarray
    hessian: np.ndarray
    third: np.ndarray
    F: float
    ell: np.ndarray


@dataclass(frozen=True)
class NormTensors:
    y: np.ndarray
    F: float
    ell: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    h: np.ndarray
    h_inv: np.ndarray
    A: np.ndarray
    I: np.ndarray
    tau: float
    M: np.ndarray
    det_g: float
    sigma_F: float
    matsumoto: str


def _as_points(spec: NormSpec, Y) -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[None, :]
    if Y.ndim != 2 or Y.shape[1] != spec.dimension:
        raise SpecError(f"points must have {spec.dimension} components, got shape {Y.shape}")
    if not np.all(np.isfinite(Y)):
        raise SpecError("points must be finite")
    if np.any(np.linalg.norm(Y, axis=1) == 0.0):
        raise SpecError("the norm is not evaluated at y = 0")
    return Y


def _check_values(spec: NormSpec, F: np.ndarray, res: np.ndarray, its: np.ndarray) -> None:
    if np.any(its >= _kernels.MAX_NEWTON) or np.any(res > NAVIGATION_RESIDUAL):
        worst = float(np.nanmax(res))
        raise ConvergenceFailure(f"navigation root not converged (max residual {worst:.3g})")
    if not np.all(np.isfinite(F)) or np.any(F <= 0.0):
        if _has_alpha_beta(spec):
            raise PhiDomainViolation("phi(beta/alpha) is not positive on the evaluation set")
        raise NotStronglyConvex("norm is not positive on the evaluation set")


def _has_alpha_beta(spec: NormSpec) -> bool:
    while True:
        if isinstance(spec, AlphaBetaNorm):
            return True
        base = getattr(spec, "base", None)
        if base is None:
            return False
        spec = base


def evaluate_many(spec: NormSpec, Y) -> np.ndarray:
    Y = _as_points(spec, Y)
    F, res, its = _kernels.values(spec.structure, spec.params, Y)
    _check_values(spec, F, res, its)
    return F


def evaluate(spec: NormSpec, y) -> float:
    """F(y) for a single nonzero vector."""
    return float(evaluate_many(spec, y)[0])


def jets(spec: NormSpec, Y, order: int = 4) -> tuple:
    """Checked derivative stack of F^2 at each row of Y (leading batch axis)."""
    Y = _as_points(spec, Y)
    evaluate_many(spec, Y)
    out = _kernels.jets(spec.structure, spec.params, Y, order)
    for arr in out:
        if not np.all(np.isfinite(arr)):
            raise DifferentiationFailure("non-finite derivative of F^2")
    return out


# -- secondary scheme: Richardson-extrapolated central differences ---------


def _richardson(stencil, h0: float, levels: int = 2):
    """Extrapolate an O(h^2) estimate ``stencil(h)`` over ``levels`` halvings."""
    table = [stencil(h0 / 2**i) for i in range(levels + 1)]
    for lvl in range(1, levels + 1):
        fac = 4.0**lvl
        table = [(fac * table[i + 1] - table[i]) / (fac - 1.0) for i in range(len(table) - 1)]
    return table[0]


def fd_jet3(spec: NormSpec, y, rel_step: float = 1e-3, levels: int = 2) -> Jet3:
    """Jet3 by finite differences of F^2 only (no derivative information).

    Mixed partials come from 1-D central stencils along sums of coordinate
    directions and polarization. The third-order stencil uses a step ten
    times larger, since its roundoff grows like eps/h^3.
    """
    y = _as_points(spec, y)[0]
    d = len(y)
    h0 = rel_step * np.linalg.norm(y)
    eye = np.eye(d)

    def f2(points):
        return evaluate_many(spec, points) ** 2

    def directional(v, order):
        def stencil(h):
            if order == 1:
                p = np.array([y + h * v, y - h * v])
                vals = f2(p)
                return (vals[0] - vals[1]) / (2 * h)
            if order == 2:
                p = np.array([y + h * v, y, y - h * v])
                vals = f2(p)
                return (vals[0] - 2 * vals[1] + vals[2]) / h**2
            p = np.array([y + 2 * h * v, y + h * v, y - h * v, y - 2 * h * v])
            vals = f2(p)
            return (vals[0] - 2 * vals[1] + 2 * vals[2] - vals[3]) / (2 * h**3)

        return _richardson(stencil, h0 * (10.0 if order == 3 else 1.0), levels)

    grad = np.array([directional(eye[a], 1) for a in range(d)])
    hess = np.zeros((d, d))
    for a in range(d):
        hess[a, a] = directional(eye[a], 2)
    for a in range(d):
        for b in range(a + 1, d):
            plus = directional(eye[a] + eye[b], 2)
            minus = directional(eye[a] - eye[b], 2)
            hess[a, b] = hess[b, a] = (plus - minus) / 4.0
    third = np.zeros((d, d, d))
    signs = [(1, 1), (1, -1), (-1, 1), (-1, -1)]
    for a in range(d):
        for b in range(a, d):
            for c in range(b, d):
                # polarization: sum_{e2,e3 = +-1} e2 e3 D3(a + e2 b + e3 c) = 24 T(a,b,c)
                acc = 0.0
                for s2, s3 in signs:
                    acc += s2 * s3 * directional(eye[a] + s2 * eye[b] + s3 * eye[c], 3)
                val = acc / 24.0
                for perm in {(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)}:
                    third[perm] = val
    value = float(f2(y[None])[0])
    F = np.sqrt(value)
    return Jet3(y=y, value=value, gradient=grad, hessian=hess, third=third, F=F, ell=grad / (2 * F))


def _taylor_jet3(spec: NormSpec, y) -> Jet3:
    y = _as_points(spec, y)[0]
    f0, f1, f2, f3 = (a[0] for a in jets(spec, y, order=3))
    F = float(np.sqrt(f0))
    return Jet3(y=y, value=float(f0), gradient=f1, hessian=f2, third=f3, F=F, ell=f1 / (2 * F))


# Cross-validation tolerances relative to the k-th derivative scale F^2/|y|^k.
CROSS_TOL = {"gradient": 1e-9, "hessian": 1e-7, "third": 1e-5}


def cross_validate(primary: Jet3, secondary: Jet3) -> dict[str, float]:
    """Scaled max deviations between two jets; raises if any exceeds CROSS_TOL."""
    scale = primary.value
    ny = np.linalg.norm(primary.y)
    errs = {
        "gradient": np.abs(primary.gradient - secondary.gradient).max() * ny / scale,
        "hessian": np.abs(primary.hessian - secondary.hessian).max() * ny**2 / scale,
        "third": np.abs(primary.third - secondary.third).max() * ny**3 / scale,
    }
    bad = {k: v for k, v in errs.items() if v > CROSS_TOL[k]}
    if bad:
        raise DifferentiationFailure(f"derivative schemes disagree: {bad}")
    return {k: float(v) for k, v in errs.items()}


def jet3(spec: NormSpec, y, scheme: str = "taylor") -> Jet3:
    """Derivatives of F^2 to third order.

    ``scheme`` is ``"taylor"`` (nested forward mode, exact), ``"fd"``
    (finite differences) or ``"checked"`` (taylor, cross-validated against fd).
    """
    if scheme == "taylor":
        return _taylor_jet3(spec, y)
    if scheme == "fd":
        return fd_jet3(spec, y)
    if scheme == "checked":
        primary = _taylor_jet3(spec, y)
        cross_validate(primary, fd_jet3(spec, y))
        return primary
    raise SpecError(f"unknown differentiation scheme {scheme!r}")


# -- tensors ----------------------------------------------------------------


def ambient(Y, f0, f1, f2, f3, f4=None, *, sigma_F=1.0, matsumoto="tracefree"):
    """Batched ambient tensors from a derivative stack of F^2.

    All arrays carry a leading batch axis. With ``f4`` the first
    y-derivatives of the tensors needed downstream are included as well
    (suffix ``_d``, derivative index last).
    """
    dim = Y.shape[1]
    F = np.sqrt(f0)
    Fb = F[:, None]
    ell = f1 / (2 * Fb)
    g = 0.5 * f2
    g_inv = np.linalg.inv(g)
    h = g - ell[:, :, None] * ell[:, None, :]
    A = F[:, None, None, None] * f3 / 4.0
    I = np.einsum("nbc,nabc->na", g_inv, A)
    f0b = f0[:, None, None]
    h_inv = g_inv - Y[:, :, None] * Y[:, None, :] / f0b
    det_g = np.linalg.det(g)
    with np.errstate(invalid="ignore", divide="ignore"):  # non-convex input is rejected by the caller
        tau = np.log(np.sqrt(det_g) / sigma_F)
    k = matsumoto_coefficient(dim, matsumoto)
    Ih = I[:, :, None, None] * h[:, None, :, :]
    M = A - k * (Ih + np.einsum("nbca->nabc", Ih) + np.einsum("ncab->nabc", Ih))
    out = SimpleNamespace(
        y=Y, F=F, ell=ell, g=g, g_inv=g_inv, h=h, h_inv=h_inv, A=A, I=I, M=M,
        det_g=det_g, tau=tau, sigma_F=sigma_F, f0=f0, f1=f1, f2=f2, f3=f3,
    )
    if f4 is None:
        return out
    eye = np.eye(dim)
    # Hessian of F: (f2 - 2 l l) / (2F); it is also the y-derivative of l.
    FH = (f2 - 2 * ell[:, :, None] * ell[:, None, :]) / (2 * Fb[:, :, None])
    g_d = 0.5 * f3
    g_inv_d = -np.einsum("nae,nefc,nfb->nabc", g_inv, g_d, g_inv)
    h_d = g_d - np.einsum("nac,nb->nabc", FH, ell) - np.einsum("na,nbc->nabc", ell, FH)
    A_d = ell[:, None, None, None, :] * f3[..., None] / 4.0 + F[:, None, None, None, None] * f4 / 4.0
    I_d = np.einsum("nbcd,nabc->nad", g_inv_d, A) + np.einsum("nbc,nabcd->nad", g_inv, A_d)
    logdet_d = np.einsum("nab,nabd->nd", g_inv, g_d)
    yy_d = np.einsum("nad,nb->nabd", np.broadcast_to(eye, (len(Y), dim, dim)), Y)
    h_inv_d = (
        g_inv_d
        - (yy_d + np.einsum("nabd->nbad", yy_d)) / f0b[..., None]
        + Y[:, :, None, None] * Y[:, None, :, None] * f1[:, None, None, :] / (f0b[..., None] ** 2)
    )
    out.FH = FH
    out.g_d, out.g_inv_d, out.h_d, out.A_d, out.I_d = g_d, g_inv_d, h_d, A_d, I_d
    out.logdet_d, out.h_inv_d = logdet_d, h_inv_d
    return out


def check_convexity(T, eps: float = EPS_CONVEX) -> None:
    """Smallest eigenvalue of g, scale-normalized by |y|^2/F^2, must exceed eps."""
    lam = np.linalg.eigvalsh(T.g)[:, 0]
    scaled = lam * np.einsum("na,na->n", T.y, T.y) / T.F**2
    if np.any(scaled <= eps):
        i = int(np.argmin(scaled))
        raise NotStronglyConvex(
            f"fundamental tensor loses positive definiteness at y = {np.round(T.y[i], 6).tolist()} "
            f"(scaled min eigenvalue {scaled[i]:.3g} <= {eps:g})"
        )


def tensors_many(spec: NormSpec, Y, sigma_F: float = 1.0, matsumoto: str = "tracefree", eps_convex: float = EPS_CONVEX):
    """Batched :func:`tensors` as a namespace of stacked arrays."""
    if not sigma_F > 0:
        raise SpecError("sigma_F must be positive")
    Y = _as_points(spec, Y)
    T = ambient(Y, *jets(spec, Y, order=3), sigma_F=sigma_F, matsumoto=matsumoto)
    check_convexity(T, eps_convex)
    return T


def tensors(spec: NormSpec, y, sigma_F: float = 1.0, matsumoto: str = "tracefree",
            eps_convex: float = EPS_CONVEX) -> NormTensors:
    """All pointwise tensors of F at y.

    ``sigma_F`` only enters the distortion; pass the Busemann-Hausdorff
    value from :func:`minkowski_affine.affine_volumes.sigma_F` when tau is
    needed and 1 otherwise.
    """
    T = tensors_many(spec, y, sigma_F=sigma_F, matsumoto=matsumoto, eps_convex=eps_convex)
    return NormTensors(
        y=T.y[0], F=float(T.F[0]), ell=T.ell[0], g=T.g[0], g_inv=T.g_inv[0], h=T.h[0],
        h_inv=T.h_inv[0], A=T.A[0], I=T.I[0], tau=float(T.tau[0]), M=T.M[0],
        det_g=float(T.det_g[0]), sigma_F=float(sigma_F), matsumoto=matsumoto,
    )


def distortion_many(spec: NormSpec, Y, sigma_F: float = 1.0) -> np.ndarray:
    Y = _as_points(spec, Y)
    _, _, f2 = jets(spec, Y, order=2)
    return np.log(np.sqrt(np.linalg.det(0.5 * f2)) / sigma_F)


def cartan_form_is_dtau(spec: NormSpec, y, direction, sigma_F: float = 1.0,
                        rel_step: float = 1e-3) -> tuple[float, float]:
    """(I(v), d tau(v)) at a point of the indicatrix, d tau by central differences.

    The two agree for every Minkowski norm; the caller compares them.
    """
    y = _as_points(spec, y)[0]
    v = np.asarray(direction, dtype=float)
    T = tensors(spec, y, sigma_F=sigma_F)
    if abs(T.F - 1.0) > 1e-9:
        raise SpecError(f"y must lie on the indicatrix (F(y) = {T.F:.12g})")
    if abs(T.ell @ v) > 1e-9 * np.linalg.norm(v):
        raise SpecError("direction must be tangent to the indicatrix")
    h0 = rel_step * np.linalg.norm(y) / np.linalg.norm(v)

    def stencil(h):
        t = distortion_many(spec, np.array([y + h * v, y - h * v]), sigma_F)
        return (t[0] - t[1]) / (2 * h)

    return float(T.I @ v), float(_richardson(stencil, h0, 2))
