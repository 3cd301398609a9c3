"""Equiaffine (Blaschke) structure of the indicatrix.

With n = dim - 1, c = 2/(n+2), rho = (sigma_F^2 / det g)^(1/(n+2)) and
phi = 1/rho, on M::

    G_ij  = rho h_ij                                        Blaschke metric
    xi    = -phi (y + c h^AB I_B)                           affine normal
    C     = 2 rho M                                         cubic form
    s_i^j = phi (delta + c nabla_i Y^j + c^2 I_i Y^j)       shape operator

where Y^j = h^jk I_k and nabla is the induced centro-affine connection.
These follow from differentiating xi along the chart (the terms along r
cancel only for this c) and from r_ij = nabla-bar_i e_j + G_ij xi.
``convention="printed"`` swaps in the variants with rho and phi exchanged
in xi and C and with the shape operator built from the Levi-Civita
derivative of I; they are kept to reproduce the comparison, and are not
consistent with the structure equations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from types import SimpleNamespace

import numpy as np

from .errors import SpecError
from .indicatrix import chart_geometry, levi_civita
from .norm_core import EPS_CONVEX
from .specs import NormSpec

CONVENTIONS = ("corrected", "printed")
NULL_TOL = 1e-12


def elementary_means(lam: np.ndarray) -> np.ndarray:
    """L_k = e_k(lambda) / binom(n, k) for k = 1..n (last axis)."""
    n = lam.shape[-1]
    out = []
    for k in range(1, n + 1):
        e = sum(np.prod(lam[..., list(ix)], axis=-1) for ix in combinations(range(n), k))
        out.append(e / math.comb(n, k))
    return np.stack(out, axis=-1)


def _sym_eig(s: np.ndarray, h: np.ndarray):
    """Eigenvalues of s after symmetrizing in the h inner product; also the defect."""
    B = np.einsum("nil,nlj->nij", s, h)
    Bs = 0.5 * (B + B.transpose(0, 2, 1))
    defect = np.linalg.norm(B - B.transpose(0, 2, 1), axis=(1, 2)) / np.maximum(np.linalg.norm(B, axis=(1, 2)), 1e-300)
    Linv = np.linalg.inv(np.linalg.cholesky(h))
    lam = np.linalg.eigvalsh(Linv @ Bs @ Linv.transpose(0, 2, 1))
    return lam, defect


def blaschke_structure(spec: NormSpec, U, frames=None, *, sigma_F: float = 1.0, matsumoto: str = "tracefree",
                       convention: str = "corrected", eps_convex: float = EPS_CONVEX):
    """Batched Blaschke data for the directions in U (a namespace of arrays)."""
    if convention not in CONVENTIONS:
        raise SpecError(f"convention must be one of {CONVENTIONS}, got {convention!r}")
    if not sigma_F > 0:
        raise SpecError("sigma_F must be positive")
    c = chart_geometry(spec, U, frames, order=4, sigma_F=sigma_F, matsumoto=matsumoto, eps_convex=eps_convex)
    amb = c.amb
    N, dim = c.r.shape
    n = dim - 1
    k = 2.0 / (n + 2)
    phi = (amb.det_g / sigma_F**2) ** (1.0 / (n + 2))
    rho = 1.0 / phi
    h_inv = np.linalg.inv(c.h)
    Z = np.einsum("nab,nb->na", amb.g_inv, amb.I)  # = h^AB I_B, tangent to M
    Y = np.einsum("nij,nj->ni", h_inv, c.I)
    eye = np.eye(n)

    # d_k Y^j, then the induced covariant derivative nabla_k Y^j.
    dY = np.einsum("njl,nlk->njk", h_inv, c.dI - np.einsum("nlmk,nm->nlk", c.dh, Y))
    nablaY = dY.transpose(0, 2, 1) + np.einsum("njkl,nl->nkj", c.gamma_c, Y)
    M_chart = np.einsum("nabc,nai,nbj,nck->nijk", amb.M, c.e, c.e, c.e)

    if convention == "corrected":
        xi = -phi[:, None] * (c.r + k * Z)
        s = phi[:, None, None] * (eye + k * nablaY + k**2 * c.I[:, :, None] * Y[:, None, :])
        C = 2 * rho[:, None, None, None] * M_chart
    else:
        xi = -rho[:, None] * (c.r + Z)
        lc = levi_civita(c)
        I_semi = c.dI.transpose(0, 2, 1) - np.einsum("nlki,nl->nki", lc, c.I)  # I_{i;k} at [k, i]
        s = (
            eye
            + k * np.einsum("njl,nli->nij", h_inv, I_semi)
            - (2 * n / (n + 2) ** 2) * c.I[:, :, None] * Y[:, None, :]
        )
        C = 2 * phi[:, None, None, None] * M_chart

    G = rho[:, None, None] * c.h
    lam, defect = _sym_eig(s, c.h)
    L = elementary_means(lam)

    # Ambient derivative of xi(y) = -phi(y) (y + k g^-1 I) along e_k; independent of s.
    dZ = np.einsum("nabc,nb->nac", amb.g_inv_d, amb.I) + np.einsum("nab,nbc->nac", amb.g_inv, amb.I_d)
    dlogphi = amb.logdet_d / (n + 2)
    if convention == "corrected":
        dxi_amb = -phi[:, None, None] * (
            (c.r + k * Z)[:, :, None] * dlogphi[:, None, :] + np.eye(dim) + k * dZ
        )
    else:
        dxi_amb = -rho[:, None, None] * (
            -(c.r + Z)[:, :, None] * dlogphi[:, None, :] + np.eye(dim) + dZ
        )
    dxi = np.einsum("nac,nci->nai", dxi_amb, c.e)

    sqrt_det_G = np.sqrt(np.linalg.det(G))
    return SimpleNamespace(
        chart=c, u=c.u, r=c.r, G=G, xi=xi, C=C, s=s, lam=lam, L=L, symmetry_defect=defect,
        det_s=np.linalg.det(s), blaschke_area_weight=sqrt_det_G, phi=phi, rho=rho, dxi=dxi,
        sigma_F=sigma_F, convention=convention,
    )


@dataclass(frozen=True, eq=False)
class BlaschkeData:
    G: np.ndarray
    xi: np.ndarray
    C: np.ndarray
    s: np.ndarray
    lam: np.ndarray
    L: np.ndarray
    blaschke_area_weight: float
    symmetry_defect: float
    r: np.ndarray
    e: np.ndarray
    dxi: np.ndarray


def blaschke_at(spec: NormSpec, u, sigma_F: float = 1.0, chart=None, **kw) -> BlaschkeData:
    """Blaschke data at the indicatrix point in direction u.

    ``dxi`` holds the chart derivatives of the affine normal computed from
    the ambient field; the structure equation reads dxi = -e s^T.
    """
    frames = None if chart is None else np.asarray(chart, dtype=float)[None]
    b = blaschke_structure(spec, np.asarray(u, dtype=float)[None], frames, sigma_F=sigma_F, **kw)
    return BlaschkeData(
        G=b.G[0], xi=b.xi[0], C=b.C[0], s=b.s[0], lam=b.lam[0], L=b.L[0],
        blaschke_area_weight=float(b.blaschke_area_weight[0]), symmetry_defect=float(b.symmetry_defect[0]),
        r=b.r[0], e=b.chart.e[0], dxi=b.dxi[0],
    )


def cubic_on(C: np.ndarray, v: np.ndarray) -> float:
    return float(np.einsum("ijk,i,j,k->", C, v, v, v))


def _cubic_roots(a0: float, a1: float, a2: float, a3: float) -> list[float]:
    """Angles in [0, pi) where a0 c^3 + 3 a1 c^2 s + 3 a2 c s^2 + a3 s^3 = 0."""
    scale = max(abs(a0), abs(a1), abs(a2), abs(a3))
    angles = []
    if abs(a3) <= 1e-12 * scale:
        angles.append(math.pi / 2)
    coeffs = [a3, 3 * a2, 3 * a1, a0]
    while len(coeffs) > 1 and abs(coeffs[0]) <= 1e-12 * scale:
        coeffs = coeffs[1:]
    if len(coeffs) > 1:
        for t in np.roots(coeffs):
            if abs(t.imag) <= 1e-7 * max(1.0, abs(t)):
                angles.append(math.atan(t.real) % math.pi)
    return sorted(set(round(a, 14) for a in angles))


@dataclass(frozen=True, eq=False)
class NullDirections:
    """Null directions of the cubic form at one point (chart and ambient components, G-unit)."""

    chart: list
    ambient: list
    multiplicity: int


def darboux_null_direction(spec: NormSpec, u, sigma_F: float = 1.0, tol: float = NULL_TOL) -> NullDirections | None:
    """Null directions C(v, v, v) = 0 of the cubic form at u (ambient dimension 3).

    Returns ``None`` where C vanishes (every direction is null). A real
    binary cubic has one or three real roots; all are reported.
    """
    if spec.dimension != 3:
        raise SpecError("Darboux null directions are defined for ambient dimension 3")
    b = blaschke_at(spec, u, sigma_F=sigma_F)
    Linv = np.linalg.inv(np.linalg.cholesky(b.G))
    basis = Linv.T  # columns are G-orthonormal
    Cn = np.einsum("abc,ai,bj,ck->ijk", b.C, basis, basis, basis)
    if np.abs(Cn).max() <= tol:
        return None
    angles = _cubic_roots(Cn[0, 0, 0], Cn[0, 0, 1], Cn[0, 1, 1], Cn[1, 1, 1])
    chart = [basis @ np.array([math.cos(a), math.sin(a)]) for a in angles]
    return NullDirections(chart=chart, ambient=[b.e @ v for v in chart], multiplicity=len(chart))
