"""The indicatrix M = {F = 1}: sphere quadrature, local charts, surface data.

Every point of M is reached radially from a direction u on the unit
sphere, r = u / F(u). Around u we use the chart

    theta -> r(normalize(u + T theta)),

where T is an orthonormal frame of the tangent space of the sphere at u,
oriented so that det[T | u] > 0. All theta-derivatives are taken at
theta = 0 and come from the exact derivative stack of F^2, so nothing in
this module differences sampled data. At theta = 0 the chart's
sphere-area density is 1, so integrals over M pull back to plain
weighted sums over a :class:`SphereGrid`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np
from scipy.special import roots_gegenbauer

from .errors import NonPositiveCurvature, SingularChart, SpecError
from .norm_core import EPS_CONVEX, ambient, check_convexity, evaluate_many, jets
from .specs import NormSpec

DEFAULT_RESOLUTION = 32
MIN_RESOLUTION = 4
SINGULAR_TOL = 1e-10


def sphere_area(dim: int) -> float:
    """Area of the unit sphere in R^dim."""
    return 2 * math.pi ** (dim / 2) / math.gamma(dim / 2)


def ball_volume_unit(dim: int) -> float:
    """Volume of the Euclidean unit ball in R^dim."""
    return sphere_area(dim) / dim


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Quadrature nodes and weights on the unit sphere of R^dim."""

    nodes: np.ndarray
    weights: np.ndarray
    dim: int
    resolution: int
    scheme: str

    def __len__(self) -> int:
        return len(self.weights)

    def integrate(self, values) -> float:
        """Weighted sum, reduced with ``math.fsum`` so the result does not depend on order."""
        return math.fsum(np.asarray(self.weights * np.asarray(values, dtype=float)).tolist())

    def metadata(self) -> dict:
        return {"dim": self.dim, "resolution": self.resolution, "scheme": self.scheme, "nodes": len(self)}


def _circle(m: int):
    phi = 2 * math.pi * np.arange(m) / m
    return np.stack([np.cos(phi), np.sin(phi)], axis=1), np.full(m, 2 * math.pi / m)


def _sphere_nodes(dim: int, res: int):
    if dim == 2:
        return _circle(2 * res)
    # Last coordinate t carries weight (1 - t^2)^((dim-3)/2); the remaining
    # coordinates are sqrt(1 - t^2) times a point of the sphere one dimension down.
    t, wt = roots_gegenbauer(res, (dim - 2) / 2)
    sub, wsub = _sphere_nodes(dim - 1, res)
    rad = np.sqrt(1 - t**2)
    nodes = np.concatenate(
        [np.concatenate([rad[i] * sub, np.full((len(sub), 1), t[i])], axis=1) for i in range(res)]
    )
    weights = np.concatenate([wt[i] * wsub for i in range(res)])
    return nodes, weights


def sphere_grid(dim: int, resolution: int = DEFAULT_RESOLUTION) -> SphereGrid:
    """Product quadrature on the unit sphere of R^dim.

    dim 2: trapezoid rule on 2*resolution equispaced angles. dim 3:
    Gauss-Legendre in the cosine of the polar angle (resolution nodes)
    times 2*resolution azimuths. Higher dims recurse with Gauss-Gegenbauer
    rules in the last coordinate.
    """
    if dim < 2:
        raise SpecError("sphere grids need dim >= 2")
    if int(resolution) != resolution or resolution < MIN_RESOLUTION:
        raise SpecError(f"resolution must be an integer >= {MIN_RESOLUTION}, got {resolution!r}")
    resolution = int(resolution)
    nodes, weights = _sphere_nodes(dim, resolution)
    scheme = {2: "trapezoid"}.get(dim, "gauss-legendre x trapezoid" if dim == 3 else "gauss-gegenbauer product")
    return SphereGrid(nodes=nodes, weights=weights, dim=dim, resolution=resolution, scheme=scheme)


def local_frames(U) -> np.ndarray:
    """Orthonormal tangent frames T (batch x dim x n) with det[T | u] > 0."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    U = U / np.linalg.norm(U, axis=1, keepdims=True)
    N, dim = U.shape
    en = np.zeros(dim)
    en[-1] = 1.0
    # Householder reflection sending e_n to +-u; its first n columns span u^perp.
    s = np.where(U[:, -1] >= 0, 1.0, -1.0)
    v = en[None, :] - s[:, None] * U
    vv = np.einsum("na,na->n", v, v)
    H = np.broadcast_to(np.eye(dim), (N, dim, dim)).copy()
    mask = vv > 1e-30
    H[mask] -= 2 * v[mask, :, None] * v[mask, None, :] / vv[mask, None, None]
    T = H[:, :, :-1].copy()
    orient = np.linalg.det(np.concatenate([T, U[:, :, None]], axis=2))
    T[orient < 0, :, 0] *= -1
    return T


def _check_frames(U: np.ndarray, T: np.ndarray) -> None:
    n = U.shape[1] - 1
    if T.shape != (len(U), U.shape[1], n):
        raise SpecError(f"chart frames must have shape {(len(U), U.shape[1], n)}, got {T.shape}")
    gram = np.einsum("nai,naj->nij", T, T)
    if np.abs(gram - np.eye(n)).max() > 1e-10 or np.abs(np.einsum("na,nai->ni", U, T)).max() > 1e-10:
        raise SpecError("chart frames must be orthonormal and orthogonal to u")


def _unit_directions(spec: NormSpec, U) -> np.ndarray:
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if U.ndim != 2 or U.shape[1] != spec.dimension:
        raise SpecError(f"expected directions of dimension {spec.dimension}, got shape {U.shape}")
    nrm = np.linalg.norm(U, axis=1)
    if np.any(nrm == 0):
        raise SpecError("the zero vector is not a direction")
    return U / nrm[:, None]


def radial_point(spec: NormSpec, u) -> np.ndarray:
    """r = u / F(u), the point of the indicatrix in direction u."""
    U = np.atleast_2d(np.asarray(u, dtype=float))
    r = U / evaluate_many(spec, U)[:, None]
    return r[0] if np.ndim(u) == 1 else r


def chart_geometry(spec: NormSpec, U, frames=None, *, order: int = 2, sigma_F: float = 1.0,
                   matsumoto: str = "tracefree", eps_convex: float = EPS_CONVEX, check: bool = True):
    """Batched chart data at theta = 0 for each direction in U.

    ``order=2`` gives the surface quantities (needs F^2 up to 3rd
    derivatives for the Cartan tensors); ``order=4`` adds the chart
    derivatives that the Blaschke structure consumes.
    """
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    U = _unit_directions(spec, U)
    N, dim = U.shape
    n = dim - 1
    T = local_frames(U) if frames is None else np.asarray(frames, dtype=float).reshape(N, dim, n)
    if frames is not None:
        _check_frames(U, T)

    stack = jets(spec, U, order=4 if order == 4 else 3)
    Fu = np.sqrt(stack[0])
    # f_k is homogeneous of degree 2 - k, which moves the stack from u to r.
    at_r = [f * Fu.reshape((N,) + (1,) * (f.ndim - 1)) ** (k - 2) for k, f in enumerate(stack)]
    r = U / Fu[:, None]
    amb = ambient(r, *at_r, sigma_F=sigma_F, matsumoto=matsumoto)
    if check:
        check_convexity(amb, eps_convex)

    # Derivatives of F(normalize(u + T theta)) and q = 1/F along the chart.
    ell = amb.ell
    FH_u = (stack[2] - 2 * ell[:, :, None] * ell[:, None, :]) / (2 * Fu[:, None, None])
    eye = np.eye(n)
    Fi = np.einsum("na,nai->ni", ell, T)
    Fij = np.einsum("nab,nai,nbj->nij", FH_u, T, T) - Fu[:, None, None] * eye
    q = 1 / Fu
    qi = -Fi / Fu[:, None] ** 2
    qij = -Fij / Fu[:, None, None] ** 2 + 2 * Fi[:, :, None] * Fi[:, None, :] / Fu[:, None, None] ** 3
    e = q[:, None, None] * T + U[:, :, None] * qi[:, None, :]
    r2 = (
        -q[:, None, None, None] * eye[None, None] * U[:, :, None, None]
        + T[:, :, None, :] * qi[:, None, :, None]
        + T[:, :, :, None] * qi[:, None, None, :]
        + U[:, :, None, None] * qij[:, None, :, :]
    )

    er = np.concatenate([e, r[:, :, None]], axis=2)
    det_er = np.linalg.det(er)
    scale = np.prod(np.linalg.norm(er, axis=1), axis=1)
    if check and np.any(np.abs(det_er) <= SINGULAR_TOL * scale):
        i = int(np.argmin(np.abs(det_er) / scale))
        raise SingularChart(f"chart Jacobian is rank-deficient at u = {np.round(U[i], 6).tolist()}")

    h = np.einsum("nab,nai,nbj->nij", amb.h, e, e)
    # Gauss decomposition r_ij = Gamma^k_ij e_k - h_ij r for the centro-affine
    # transversal -r; by Cramer's rule the last coefficient is the determinant
    # ratio -det(e, r_ij) / det(e, r).
    coeff = np.linalg.solve(er[:, None, None], r2.transpose(0, 2, 3, 1)[..., None])[..., 0]
    gamma_c = coeff[..., :n].transpose(0, 3, 1, 2)
    h_det = -coeff[..., n]

    nu = ell / np.linalg.norm(ell, axis=1, keepdims=True)
    support = np.einsum("na,na->n", r, nu)
    gram = np.einsum("nai,naj->nij", e, e)
    det_gram = np.linalg.det(gram)
    dV_E = np.sqrt(det_gram)
    II = -np.einsum("naij,na->nij", r2, nu)
    K = np.linalg.det(II) / det_gram
    # det(e, r) / det(e | nu) = <r, nu> and det(e | nu)^2 = det gram.
    K_det = np.linalg.det(h) * support**n / det_gram
    if check and (np.any(K <= 0) or np.any(support <= 0)):
        i = int(np.argmin(np.minimum(K, support)))
        raise NonPositiveCurvature(
            f"indicatrix is not strictly convex around u = {np.round(U[i], 6).tolist()} "
            f"(K = {K[i]:.3g}, <r, nu> = {support[i]:.3g})"
        )

    out = SimpleNamespace(
        u=U, frames=T, F_u=Fu, r=r, e=e, r2=r2, amb=amb, h=h, h_det=h_det, gamma_c=gamma_c,
        nu=nu, support=support, II=II, K=K, K_det=K_det, dV_E=dV_E, det_er=det_er,
        A=np.einsum("nabc,nai,nbj,nck->nijk", amb.A, e, e, e),
        I=np.einsum("na,nai->ni", amb.I, e),
    )
    if order == 4:
        dh = (
            np.einsum("nabc,nai,nbj,nck->nijk", amb.h_d, e, e, e)
            + np.einsum("nab,naik,nbj->nijk", amb.h, r2, e)
            + np.einsum("nab,nai,nbjk->nijk", amb.h, e, r2)
        )
        dI = np.einsum("nac,nai,nck->nik", amb.I_d, e, e) + np.einsum("na,naik->nik", amb.I, r2)
        out.dh, out.dI = dh, dI
    return out


@dataclass(frozen=True, eq=False)
class IndicatrixSample:
    """Surface data of the indicatrix at r = u / F(u) in one local chart."""

    u: np.ndarray
    r: np.ndarray
    frame: np.ndarray
    e: np.ndarray
    h: np.ndarray
    h_det: np.ndarray
    nu: np.ndarray
    II: np.ndarray
    K: float
    K_det: float
    dV_E: float
    support: float


def sample(spec: NormSpec, u, chart=None) -> IndicatrixSample:
    """Indicatrix data at direction u; ``chart`` is an optional tangent frame (dim x n).

    ``h`` is the pullback of the angular form and ``h_det`` the same
    metric from the determinant ratio; ``K`` is det II over the Gram
    determinant and ``K_det`` the same curvature through det h.
    """
    frames = None if chart is None else np.asarray(chart, dtype=float)[None]
    c = chart_geometry(spec, np.asarray(u, dtype=float)[None], frames)
    return IndicatrixSample(
        u=c.u[0], r=c.r[0], frame=c.frames[0], e=c.e[0], h=c.h[0], h_det=c.h_det[0], nu=c.nu[0],
        II=c.II[0], K=float(c.K[0]), K_det=float(c.K_det[0]), dV_E=float(c.dV_E[0]),
        support=float(c.support[0]),
    )


def chart_metric(spec: NormSpec, u, chart, thetas) -> np.ndarray:
    """Pullback angular form h_ij(theta) of the chart at u, at each row of ``thetas``.

    Exact at every theta (not only at 0); used to difference h in the chart.
    """
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    T = np.asarray(chart, dtype=float)
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    w = u[None, :] + thetas @ T.T
    nw = np.linalg.norm(w, axis=1)
    V = w / nw[:, None]
    # d v / d theta = (I - v v^T) T / |w|;  d(y / F) / dy = (I - y l^T / F) / F.
    dv = np.einsum("nab,bi->nai", np.eye(len(u)) - V[:, :, None] * V[:, None, :], T) / nw[:, None, None]
    stack = jets(spec, V, order=3)
    Fv = np.sqrt(stack[0])
    ell = stack[1] / (2 * Fv[:, None])
    e = (dv - V[:, :, None] * np.einsum("na,nai->ni", ell, dv)[:, None, :] / Fv[:, None, None]) / Fv[:, None, None]
    g = 0.5 * stack[2]
    h_amb = g - ell[:, :, None] * ell[:, None, :]
    return np.einsum("nab,nai,nbj->nij", h_amb, e, e)


def centro_affine_connection(spec: NormSpec, u, chart=None, convention: str = "printed") -> np.ndarray:
    """Christoffel symbols Gamma[k, i, j] of the centro-affine connection at u.

    The default is the Levi-Civita connection of h shifted by -1/2 h^-1 A,
    for which nabla h = A. ``"induced"`` is the connection of the immersion
    with transversal -r, read off the Gauss decomposition of the second
    chart derivatives; it equals Levi-Civita - h^-1 A, so its cubic form is
    nabla h = 2 A. The Blaschke structure uses the induced one.
    """
    frames = None if chart is None else np.asarray(chart, dtype=float)[None]
    c = chart_geometry(spec, np.asarray(u, dtype=float)[None], frames, order=4)
    if convention == "induced":
        return c.gamma_c[0]
    if convention == "printed":
        return (levi_civita(c) - 0.5 * np.einsum("nkl,nijl->nkij", np.linalg.inv(c.h), c.A))[0]
    raise SpecError(f"convention must be 'induced' or 'printed', got {convention!r}")


def levi_civita(c) -> np.ndarray:
    """Christoffel symbols of the pullback angular form, from order-4 chart data."""
    dh = c.dh  # dh[n, i, j, k] = d_k h_ij
    # Gamma_{l ij} = 1/2 (d_i h_lj + d_j h_il - d_l h_ij)
    low = 0.5 * (
        np.einsum("nlji->nlij", dh) + np.einsum("nilj->nlij", dh) - np.einsum("nijl->nlij", dh)
    )
    return np.einsum("nkl,nlij->nkij", np.linalg.inv(c.h), low)
