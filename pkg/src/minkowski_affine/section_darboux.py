"""Planar sections of a 3-dimensional indicatrix and the distortion test.

For a plane W = span(w1, w2) and a shift U, let F_U be the navigation
shift of F by U and f_U its restriction to W (a 2-dimensional norm in the
coordinates of the basis). Along the section curve

    c(theta) = (cos theta w1 + sin theta w2) / F_U(...)

the combination T = tau(f_U)/3 - tau(F_U)/4 is constant exactly when the
curve is a Darboux curve of the shifted indicatrix, i.e. the cubic form
vanishes on its tangent. Each distortion uses its own norm's
Busemann-Hausdorff normalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .affine_volumes import sigma_F
from .blaschke import blaschke_structure
from .errors import SectionMisses, SpecError
from .norm_core import distortion_many, evaluate_many, jets
from .specs import LinearNorm, NormSpec, shifted

DEFAULT_SAMPLES = 64
DEFAULT_THRESHOLD = 1e-5
SHIFT_RADIUS = 0.9


@dataclass(frozen=True, eq=False)
class SectionSpec:
    """A 2-plane in R^3 given by two basis vectors (the columns of ``basis``)."""

    basis: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=float)
        if B.shape == (2, 3):
            B = B.T
        if B.shape != (3, 2):
            raise SpecError(f"section basis must be two vectors in R^3, got shape {np.shape(self.basis)}")
        gram = B.T @ B
        if np.linalg.det(gram) <= 1e-10 * np.prod(np.diag(gram)):
            raise SpecError("section basis vectors are linearly dependent")
        B.setflags(write=False)
        object.__setattr__(self, "basis", B)

    @classmethod
    def parse(cls, text: str) -> "SectionSpec":
        """From ``"a,b,c;d,e,f"``."""
        try:
            rows = [[float(x) for x in part.split(",")] for part in text.split(";")]
        except ValueError as exc:
            raise SpecError(f"cannot parse section {text!r}: {exc}") from None
        return cls(np.array(rows, dtype=float))

    def to_list(self) -> list:
        return self.basis.T.tolist()


DEFAULT_SECTION = SectionSpec(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))


def _check3(spec: NormSpec) -> None:
    if spec.dimension != 3:
        raise SpecError("section tests need a 3-dimensional norm")


def induced_norm(spec3: NormSpec, section: SectionSpec) -> LinearNorm:
    """The 2-dimensional norm c -> F(c1 w1 + c2 w2)."""
    _check3(spec3)
    return LinearNorm(spec3, section.basis)


def _shift(spec3: NormSpec, U) -> NormSpec:
    U = np.asarray(U, dtype=float)
    return spec3 if not np.any(U) else shifted(spec3, U)


@dataclass(frozen=True, eq=False)
class SectionProfile:
    theta: np.ndarray
    points: np.ndarray
    tau: np.ndarray
    tau_bar: np.ndarray
    T: np.ndarray
    dev: float
    sigma: float
    sigma_bar: float
    U: np.ndarray


def _section_points(f2d: NormSpec, n_samples: int):
    theta = 2 * math.pi * np.arange(n_samples) / n_samples
    c = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    stack = jets(f2d, c, order=2)
    F = np.sqrt(stack[0])
    return theta, c / F[:, None], stack


def section_T_profile(spec3: NormSpec, section: SectionSpec, U=(0.0, 0.0, 0.0),
                      n_samples: int = DEFAULT_SAMPLES, resolution: int | None = None) -> SectionProfile:
    """T = tau/3 - tau_bar/4 along the section curve of the indicatrix shifted by U."""
    _check3(spec3)
    if n_samples < 3:
        raise SpecError("n_samples must be at least 3")
    FU = _shift(spec3, U)
    fU = induced_norm(FU, section)
    sig = sigma_F(fU, resolution)
    sig_bar = sigma_F(FU, resolution)
    theta, p, stack = _section_points(fU, n_samples)
    y = p @ section.basis.T
    # The tangent plane of the shifted indicatrix must be transverse to W.
    ell3 = jets(FU, y, order=2)[1]
    along = np.linalg.norm(ell3 @ section.basis, axis=1) / np.linalg.norm(ell3, axis=1)
    if np.any(along < 1e-12):
        raise SectionMisses("the shifted indicatrix is tangent to the section plane")
    tau = distortion_many(fU, p, sig)
    tau_bar = distortion_many(FU, y, sig_bar)
    T = tau / 3 - tau_bar / 4
    return SectionProfile(
        theta=theta, points=y, tau=tau, tau_bar=tau_bar, T=T, dev=float(T.max() - T.min()),
        sigma=sig, sigma_bar=sig_bar, U=np.asarray(U, dtype=float),
    )


def section_cubic(spec3: NormSpec, section: SectionSpec, U=(0.0, 0.0, 0.0), n_samples: int = DEFAULT_SAMPLES,
                  resolution: int | None = None, sigma_bar: float | None = None) -> np.ndarray:
    """|C(v, v, v)| / G(v, v)^(3/2) for the tangent v of the section curve at each sample."""
    _check3(spec3)
    FU = _shift(spec3, U)
    fU = induced_norm(FU, section)
    sig_bar = sigma_F(FU, resolution) if sigma_bar is None else sigma_bar
    _, p, stack = _section_points(fU, n_samples)
    grad = stack[1]
    v = np.stack([-grad[:, 1], grad[:, 0]], axis=1) @ section.basis.T
    y = p @ section.basis.T
    b = blaschke_structure(FU, y, sigma_F=sig_bar)
    e = b.chart.e
    er = np.concatenate([e, b.r[:, :, None]], axis=2)
    w = np.linalg.solve(er, v[:, :, None])[:, :2, 0]  # tangent, so the r-component is ~0
    Cvvv = np.einsum("nijk,ni,nj,nk->n", b.C, w, w, w)
    Gvv = np.einsum("nij,ni,nj->n", b.G, w, w)
    return np.abs(Cvvv) / Gvv**1.5


def darboux_consistency(spec3: NormSpec, section: SectionSpec, U=(0.0, 0.0, 0.0),
                        n_samples: int = DEFAULT_SAMPLES, resolution: int | None = None) -> tuple[float, float]:
    """(T deviation, max normalized cubic form on the section tangent)."""
    prof = section_T_profile(spec3, section, U, n_samples, resolution)
    cub = section_cubic(spec3, section, U, n_samples, resolution, sigma_bar=prof.sigma_bar)
    return prof.dev, float(cub.max())


def random_shifts(spec3: NormSpec, n_shifts: int, seed: int, radius: float = SHIFT_RADIUS) -> np.ndarray:
    """Shifts U = rho d / F(d) with uniform directions d and rho uniform on [0, radius)."""
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(n_shifts, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    rho = rng.uniform(0.0, radius, size=n_shifts)
    return rho[:, None] * d / evaluate_many(spec3, d)[:, None]


def theorem33_sweep(spec3: NormSpec, section: SectionSpec, n_shifts: int = 5, seed: int = 0, *,
                    threshold: float = DEFAULT_THRESHOLD, cubic_threshold: float | None = None,
                    n_samples: int = DEFAULT_SAMPLES, resolution: int | None = None,
                    radius: float = SHIFT_RADIUS, keep_profiles: bool = False) -> dict:
    """Section test over random shifts; PASS when every shift is below the thresholds."""
    _check3(spec3)
    cubic_threshold = threshold if cubic_threshold is None else cubic_threshold
    shifts = random_shifts(spec3, n_shifts, seed, radius)
    rows, profiles = [], []
    for U in shifts:
        prof = section_T_profile(spec3, section, U, n_samples, resolution)
        cub = section_cubic(spec3, section, U, n_samples, resolution, sigma_bar=prof.sigma_bar)
        rows.append({"U": U.tolist(), "dev": prof.dev, "max_cubic": float(cub.max()),
                     "sigma": prof.sigma, "sigma_bar": prof.sigma_bar})
        if keep_profiles:
            profiles.append(prof)
    max_dev = max(r["dev"] for r in rows)
    max_cubic = max(r["max_cubic"] for r in rows)
    report = {
        "section": section.to_list(), "seed": int(seed), "n_shifts": int(n_shifts), "n_samples": int(n_samples),
        "threshold": threshold, "cubic_threshold": cubic_threshold, "shifts": rows,
        "max_dev": max_dev, "max_cubic": max_cubic,
        "pass": bool(max_dev <= threshold and max_cubic <= cubic_threshold),
    }
    if keep_profiles:
        report["profiles"] = profiles
    return report
