"""Busemann-Hausdorff normalization, affine area, mixed volumes, inequalities.

Integrals over the indicatrix are pulled back to a :class:`SphereGrid`
through the radial charts of :mod:`indicatrix`, so every integral is a
weighted sum over sphere nodes. With n = dim - 1 and omega the volume of
the Euclidean unit ball:

    Vol(B_F)  = 1/(n+1) sum w F(u)^-(n+1)
    sigma_F   = omega / Vol(B_F)
    S         = sigma_F^(n/(n+2)) int K^(1/(n+2)) dV_E   (also int sqrt det G)
    V_0       = sigma_F Vol(B_F),  V_(k+1) = 1/(n+1) int L_k sqrt det G

The mixed volumes are cross-checked against the coefficients of the
polynomial t -> Vol(B_F + t Xi), where Xi is bounded by -xi(M).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .blaschke import blaschke_structure
from .errors import NonPositiveCurvature, SpecError
from .indicatrix import SphereGrid, ball_volume_unit, chart_geometry, sphere_grid
from .norm_core import EPS_CONVEX, evaluate_many
from .specs import NormSpec

T_SAMPLES = np.linspace(0.0, 1.0, 11)


def _grid(spec: NormSpec, grid: SphereGrid | int | None) -> SphereGrid:
    if grid is None:
        return sphere_grid(spec.dimension)
    if isinstance(grid, (int, np.integer)):
        return sphere_grid(spec.dimension, int(grid))
    if grid.dim != spec.dimension:
        raise SpecError(f"grid is for dimension {grid.dim}, spec has dimension {spec.dimension}")
    return grid


def ball_volume(spec: NormSpec, grid: SphereGrid | int | None = None) -> float:
    """Euclidean volume of the unit ball of F."""
    grid = _grid(spec, grid)
    F = evaluate_many(spec, grid.nodes)
    return grid.integrate(F ** (-spec.dimension)) / spec.dimension


def sigma_F(spec: NormSpec, grid: SphereGrid | int | None = None) -> float:
    """Busemann-Hausdorff normalization omega / Vol(B_F)."""
    return ball_volume_unit(spec.dimension) / ball_volume(spec, grid)


def affine_area(spec: NormSpec, grid: SphereGrid | int | None = None, sigma: float | None = None) -> float:
    """Affine area of the indicatrix from the Gauss-Kronecker curvature.

    ``sigma`` defaults to the Busemann-Hausdorff normalization; any other
    positive constant volume scale may be passed.
    """
    grid = _grid(spec, grid)
    sigma = sigma_F(spec, grid) if sigma is None else float(sigma)
    c = chart_geometry(spec, grid.nodes)
    n = spec.dimension - 1
    return sigma ** (n / (n + 2)) * grid.integrate(c.K ** (1 / (n + 2)) * c.dV_E)


@dataclass
class VolumeReport:
    dim: int
    vol_ball: float
    sigma_F: float
    omega: float
    S_affine: float
    S_blaschke: float
    S_euclidean: float
    total_curvature: float
    holder_lhs: float
    holder_rhs: float
    V: list
    V_polynomial: list
    polynomial_residual: float
    thm52_margin: float
    thm53: list
    thm54_integral: float
    thm54_margin: float
    alexandrov_fenchel: list
    L_min: list
    L_max: list
    K_min: float
    K_max: float
    max_symmetry_defect: float
    grid: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _volumes_t(grid: SphereGrid, sigma: float, r, e, xi, dxi, ts) -> np.ndarray:
    """sigma/(n+1) sum w det(e - t dxi | r - t xi) at each t."""
    dim = r.shape[1]
    out = []
    for t in ts:
        m = np.concatenate([e - t * dxi, (r - t * xi)[:, :, None]], axis=2)
        out.append(sigma / dim * grid.integrate(np.linalg.det(m)))
    return np.array(out)


def omega_t_volumes(spec: NormSpec, grid: SphereGrid | int | None = None, ts=T_SAMPLES, **kw):
    """(t, Vol_sigma(Omega_t)) for the parallel bodies B_F + t Xi."""
    grid = _grid(spec, grid)
    sig = sigma_F(spec, grid)
    b = blaschke_structure(spec, grid.nodes, sigma_F=sig, **kw)
    ts = np.asarray(ts, dtype=float)
    return ts, _volumes_t(grid, sig, b.r, b.chart.e, b.xi, b.dxi, ts)


def _polynomial_volumes(ts, vols, dim: int):
    """Least-squares fit of degree dim; returns V_k = coeff_k / binom(dim, k) and the residual."""
    Vm = np.vander(ts, dim + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(Vm, vols, rcond=None)
    resid = float(np.max(np.abs(Vm @ coef - vols)) / np.max(np.abs(vols)))
    return [float(coef[k] / math.comb(dim, k)) for k in range(dim + 1)], resid


def thm53_pairs(n: int):
    """Admissible (k, k*) with 0 <= k < k* <= n+1 and k < (n+2)/2."""
    return [(k, ks) for ks in range(1, n + 2) for k in range(ks) if 2 * k < n + 2]


def thm53_rows(V, omega: float, n: int) -> list[dict]:
    rows = []
    for k, ks in thm53_pairs(n):
        lhs = V[ks] ** (n + 2 - 2 * k) * V[k] ** (2 * ks - n - 2)
        rhs = omega ** (2 * (ks - k))
        rows.append({"k": k, "k_star": ks, "lhs": float(lhs), "rhs": float(rhs), "margin": float(1 - lhs / rhs)})
    return rows


def volume_data(spec: NormSpec, grid: SphereGrid | int | None = None, *, matsumoto: str = "tracefree",
                eps_convex: float = EPS_CONVEX, sigma: float | None = None):
    """Grid, sigma_F and Blaschke data shared by the reports below."""
    grid = _grid(spec, grid)
    vol = ball_volume(spec, grid)
    sig = ball_volume_unit(spec.dimension) / vol if sigma is None else float(sigma)
    b = blaschke_structure(spec, grid.nodes, sigma_F=sig, matsumoto=matsumoto, eps_convex=eps_convex)
    return grid, vol, sig, b


def mixed_volumes(spec: NormSpec, grid: SphereGrid | int | None = None, **kw) -> dict:
    """V_0..V_(n+1) from the curvature integrals and from the polynomial fit."""
    grid, vol, sig, b = volume_data(spec, grid, **kw)
    return _mixed(grid, vol, sig, b)


def _mixed(grid, vol, sig, b) -> dict:
    dim = b.r.shape[1]
    L0 = np.concatenate([np.ones((len(grid), 1)), b.L], axis=1)
    V = [sig * vol] + [grid.integrate(L0[:, k] * b.blaschke_area_weight) / dim for k in range(dim)]
    ts = T_SAMPLES
    vols = _volumes_t(grid, sig, b.r, b.chart.e, b.xi, b.dxi, ts)
    Vp, resid = _polynomial_volumes(ts, vols, dim)
    return {"V": V, "V_polynomial": Vp, "polynomial_residual": resid, "t": ts.tolist(), "vol_t": vols.tolist()}


def check_theorems(spec: NormSpec, grid: SphereGrid | int | None = None, **kw) -> VolumeReport:
    """All volumes, areas and inequality margins on one grid."""
    grid, vol, sig, b = volume_data(spec, grid, **kw)
    c = b.chart
    dim = spec.dimension
    n = dim - 1
    omega = ball_volume_unit(dim)
    if np.any(b.det_s <= 0):
        raise NonPositiveCurvature("affine Gauss-Kronecker curvature L_n is not positive on the grid")
    S_aff = sig ** (n / (n + 2)) * grid.integrate(c.K ** (1 / (n + 2)) * c.dV_E)
    S_bl = grid.integrate(b.blaschke_area_weight)
    S_E = grid.integrate(c.dV_E)
    total_K = grid.integrate(c.K * c.dV_E)
    holder_lhs = (grid.integrate(c.K ** (1 / (n + 2)) * c.dV_E) / S_E) ** (n + 2)
    mv = _mixed(grid, vol, sig, b)
    V = mv["V"]
    thm54 = grid.integrate(np.sqrt(b.det_s) * b.blaschke_area_weight)
    return VolumeReport(
        dim=dim, vol_ball=vol, sigma_F=sig, omega=omega,
        S_affine=S_aff, S_blaschke=S_bl, S_euclidean=S_E, total_curvature=total_K,
        holder_lhs=holder_lhs, holder_rhs=total_K / S_E,
        V=V, V_polynomial=mv["V_polynomial"], polynomial_residual=mv["polynomial_residual"],
        thm52_margin=dim * omega - S_aff,
        thm53=thm53_rows(V, omega, n),
        thm54_integral=thm54, thm54_margin=dim * omega - thm54,
        alexandrov_fenchel=[float(V[k] ** 2 - V[k - 1] * V[k + 1]) for k in range(1, dim)],
        L_min=b.L.min(axis=0).tolist(), L_max=b.L.max(axis=0).tolist(),
        K_min=float(c.K.min()), K_max=float(c.K.max()),
        max_symmetry_defect=float(b.symmetry_defect.max()),
        grid=grid.metadata(),
    )


def scaled_area_bound(spec: NormSpec, grid: SphereGrid | int | None = None, sigma_bar: float = 1.0) -> dict:
    """Affine area and isoperimetric bound for the constant volume scale sigma_bar.

    ``S_bar <= (n+1) (omega^2 Vol_bar(B_F)^n)^(1/(n+2))`` with
    ``Vol_bar = sigma_bar Vol(B_F)``.
    """
    if not sigma_bar > 0:
        raise SpecError("sigma_bar must be positive")
    grid = _grid(spec, grid)
    dim = spec.dimension
    n = dim - 1
    omega = ball_volume_unit(dim)
    S_bar = affine_area(spec, grid, sigma=sigma_bar)
    bound = dim * (omega**2 * (sigma_bar * ball_volume(spec, grid)) ** n) ** (1 / (n + 2))
    return {"sigma_bar": float(sigma_bar), "S": S_bar, "bound": bound, "margin": bound - S_bar}
