"""Declarative descriptions of Minkowski norms and their JSON form.

A norm is one of four closed-form variants::

    EuclideanNorm(Q)             F(y) = sqrt(y^T Q y)
    RandersNorm(a, b)            F(y) = alpha(y) + beta(y)
    AlphaBetaNorm(a, b, phi)     F(y) = alpha(y) * phi(beta(y) / alpha(y))
    NavigationNorm(base, U)      F(y) solves F_base(y / F(y) + U) = 1

with ``alpha(y) = sqrt(y^T a y)`` and ``beta(y) = b . y``.  A fifth variant,
:class:`LinearNorm`, composes a norm with a linear map ``y -> L y``; it is
how induced norms on subspaces are represented and is not part of the file
format.

Every spec exposes a hashable ``structure`` (which jax kernels to build) and
a ``params`` pytree of arrays (what to feed them), so all specs of one shape
share a single compiled kernel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import NavigationInfeasible, SpecError

PHI_FAMILIES = ("identity", "randers", "quadratic", "exponential")
VARIANTS = ("euclidean", "randers", "alpha_beta", "navigation")

# F_base(U) must stay below 1 by this margin for the shifted norm to exist.
NAVIGATION_MARGIN = 1e-10


def _matrix(value: Any, dim: int, name: str) -> np.ndarray:
    try:
        m = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"{name}: not a numeric matrix") from exc
    if m.shape != (dim, dim):
        raise SpecError(f"{name}: expected shape ({dim}, {dim}), got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise SpecError(f"{name}: non-finite entries")
    if not np.allclose(m, m.T, rtol=0, atol=1e-12 * max(1.0, np.abs(m).max())):
        raise SpecError(f"{name}: matrix is not symmetric")
    m = 0.5 * (m + m.T)
    if np.linalg.eigvalsh(m)[0] <= 0:
        raise SpecError(f"{name}: matrix is not positive definite")
    m.setflags(write=False)
    return m


def _vector(value: Any, dim: int, name: str) -> np.ndarray:
    try:
        v = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"{name}: not a numeric vector") from exc
    if v.shape != (dim,):
        raise SpecError(f"{name}: expected length {dim}, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise SpecError(f"{name}: non-finite entries")
    v.setflags(write=False)
    return v


@dataclass(frozen=True)
class PhiSpec:
    """Catalog entry for the profile function of an (alpha, beta) norm.

    ``identity`` is phi = 1, ``randers`` is 1 + eps*s, ``quadratic`` is
    1 + eps*s**2 and ``exponential`` is exp(eps*s).
    """

    family: str
    epsilon: float = 0.0

    def __post_init__(self):
        if self.family not in PHI_FAMILIES:
            raise SpecError(f"phi.family: unknown family {self.family!r}; expected one of {PHI_FAMILIES}")
        if not np.isfinite(self.epsilon):
            raise SpecError("phi.epsilon: must be finite")
        object.__setattr__(self, "epsilon", float(self.epsilon))

    def __call__(self, s):
        """Evaluate phi with numpy (the jax kernels carry their own copy)."""
        s = np.asarray(s, dtype=float)
        if self.family == "identity":
            return np.ones_like(s)
        if self.family == "randers":
            return 1.0 + self.epsilon * s
        if self.family == "quadratic":
            return 1.0 + self.epsilon * s**2
        return np.exp(self.epsilon * s)


class NormSpec:
    """Base class of the norm variants."""

    dimension: int

    @property
    def structure(self) -> tuple:
        raise NotImplementedError

    @property
    def params(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


@dataclass(frozen=True, eq=False)
class EuclideanNorm(NormSpec):
    Q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.Q, dtype=float)
        if q.ndim != 2:
            raise SpecError("Q: expected a square matrix")
        object.__setattr__(self, "Q", _matrix(q, q.shape[0], "Q"))
        _check_dimension(q.shape[0])

    @property
    def dimension(self) -> int:
        return self.Q.shape[0]

    @property
    def structure(self):
        return ("euclidean",)

    @property
    def params(self):
        return {"Q": self.Q}

    def to_dict(self):
        return {"dimension": self.dimension, "variant": "euclidean", "Q": self.Q.tolist()}


@dataclass(frozen=True, eq=False)
class RandersNorm(NormSpec):
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.ndim != 2:
            raise SpecError("a: expected a square matrix")
        dim = a.shape[0]
        _check_dimension(dim)
        object.__setattr__(self, "a", _matrix(a, dim, "a"))
        object.__setattr__(self, "b", _vector(self.b, dim, "b"))
        bb = float(self.b @ np.linalg.solve(self.a, self.b))
        if bb >= 1.0:
            raise SpecError(f"Randers norm needs a^AB b_A b_B < 1, got {bb:.6g}")

    @property
    def dimension(self) -> int:
        return self.a.shape[0]

    @property
    def structure(self):
        return ("randers",)

    @property
    def params(self):
        return {"a": self.a, "b": self.b}

    def to_dict(self):
        return {"dimension": self.dimension, "variant": "randers", "a": self.a.tolist(), "b": self.b.tolist()}


@dataclass(frozen=True, eq=False)
class AlphaBetaNorm(NormSpec):
    a: np.ndarray
    b: np.ndarray
    phi: PhiSpec

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.ndim != 2:
            raise SpecError("a: expected a square matrix")
        dim = a.shape[0]
        _check_dimension(dim)
        object.__setattr__(self, "a", _matrix(a, dim, "a"))
        object.__setattr__(self, "b", _vector(self.b, dim, "b"))
        if not isinstance(self.phi, PhiSpec):
            raise SpecError("phi: expected a PhiSpec")

    @property
    def dimension(self) -> int:
        return self.a.shape[0]

    @property
    def structure(self):
        return ("alpha_beta", self.phi.family)

    @property
    def params(self):
        return {"a": self.a, "b": self.b, "eps": np.float64(self.phi.epsilon)}

    def to_dict(self):
        return {
            "dimension": self.dimension,
            "variant": "alpha_beta",
            "a": self.a.tolist(),
            "b": self.b.tolist(),
            "phi": {"family": self.phi.family, "epsilon": self.phi.epsilon},
        }


@dataclass(frozen=True, eq=False)
class NavigationNorm(NormSpec):
    """Zermelo shift of ``base`` by ``U``; the indicatrix is that of ``base`` minus U.

    Nested shifts are flattened on construction (shifting twice is shifting
    by the sum), so ``base`` is never itself a :class:`NavigationNorm`.
    """

    base: NormSpec
    U: np.ndarray
    _checked: bool = field(default=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.base, NormSpec):
            raise SpecError("base: expected a NormSpec")
        U = _vector(self.U, self.base.dimension, "U")
        if isinstance(self.base, NavigationNorm):
            inner = self.base
            U = np.asarray(inner.U + U)
            U.setflags(write=False)
            object.__setattr__(self, "base", inner.base)
        object.__setattr__(self, "U", U)
        if not self._checked:
            from .norm_core import evaluate

            fu = evaluate(self.base, U) if np.any(U) else 0.0
            if fu >= 1.0 - NAVIGATION_MARGIN:
                raise NavigationInfeasible(f"navigation needs F_base(U) < 1, got F_base(U) = {fu:.12g}")

    @property
    def dimension(self) -> int:
        return self.base.dimension

    @property
    def structure(self):
        return ("navigation", self.base.structure)

    @property
    def params(self):
        return {"base": self.base.params, "U": self.U}

    def to_dict(self):
        return {
            "dimension": self.dimension,
            "variant": "navigation",
            "base": self.base.to_dict(),
            "U": self.U.tolist(),
        }


@dataclass(frozen=True, eq=False)
class LinearNorm(NormSpec):
    """``F(y) = F_base(L y)`` with ``L`` of shape (base.dimension, k), rank k."""

    base: NormSpec
    L: np.ndarray

    def __post_init__(self):
        L = np.array(self.L, dtype=float)
        if L.ndim != 2 or L.shape[0] != self.base.dimension:
            raise SpecError(f"L: expected shape ({self.base.dimension}, k), got {L.shape}")
        if L.shape[1] < 2 or np.linalg.matrix_rank(L) < L.shape[1]:
            raise SpecError("L: must have full column rank k >= 2")
        L.setflags(write=False)
        object.__setattr__(self, "L", L)

    @property
    def dimension(self) -> int:
        return self.L.shape[1]

    @property
    def structure(self):
        return ("linear", self.base.structure)

    @property
    def params(self):
        return {"base": self.base.params, "L": self.L}

    def to_dict(self):
        raise SpecError("linear compositions are internal and have no file representation")


def _check_dimension(dim: int) -> None:
    if dim < 2:
        raise SpecError(f"dimension must be >= 2, got {dim}")


def shifted(spec: NormSpec, U) -> NavigationNorm:
    """The norm with navigation data (spec, U)."""
    return NavigationNorm(spec, np.asarray(U, dtype=float))


def compose_linear(spec: NormSpec, L) -> NormSpec:
    """``y -> F(L y)`` for square invertible L, kept inside the four file variants.

    (alpha, beta) data pull back as a -> L^T a L, b -> L^T b; a shift U
    pulls back to L^{-1} U.
    """
    L = np.asarray(L, dtype=float)
    if L.shape != (spec.dimension, spec.dimension) or abs(np.linalg.det(L)) < 1e-12:
        raise SpecError("compose_linear needs a square invertible matrix")
    if isinstance(spec, EuclideanNorm):
        return EuclideanNorm(L.T @ spec.Q @ L)
    if isinstance(spec, RandersNorm):
        return RandersNorm(L.T @ spec.a @ L, L.T @ spec.b)
    if isinstance(spec, AlphaBetaNorm):
        return AlphaBetaNorm(L.T @ spec.a @ L, L.T @ spec.b, spec.phi)
    if isinstance(spec, NavigationNorm):
        return NavigationNorm(compose_linear(spec.base, L), np.linalg.solve(L, spec.U))
    return LinearNorm(spec, L)


# -- file format ----------------------------------------------------------


def from_dict(doc: Any, path: str = "$") -> NormSpec:
    """Build a spec from its JSON document; errors name the offending field."""
    if not isinstance(doc, dict):
        raise SpecError(f"{path}: expected an object")
    for key in ("dimension", "variant"):
        if key not in doc:
            raise SpecError(f"{path}: missing field {key!r}")
    dim = doc["dimension"]
    if not isinstance(dim, int) or isinstance(dim, bool):
        raise SpecError(f"{path}.dimension: expected an integer")
    _check_dimension(dim)
    variant = doc["variant"]

    def need(key):
        if key not in doc:
            raise SpecError(f"{path}: variant {variant!r} needs field {key!r}")
        return doc[key]

    try:
        if variant == "euclidean":
            spec = EuclideanNorm(_matrix(need("Q"), dim, f"{path}.Q"))
        elif variant == "randers":
            spec = RandersNorm(_matrix(need("a"), dim, f"{path}.a"), _vector(need("b"), dim, f"{path}.b"))
        elif variant == "alpha_beta":
            phi = need("phi")
            if not isinstance(phi, dict) or "family" not in phi:
                raise SpecError(f"{path}.phi: expected an object with 'family'")
            spec = AlphaBetaNorm(
                _matrix(need("a"), dim, f"{path}.a"),
                _vector(need("b"), dim, f"{path}.b"),
                PhiSpec(phi["family"], phi.get("epsilon", 0.0)),
            )
        elif variant == "navigation":
            base = from_dict(need("base"), f"{path}.base")
            if base.dimension != dim:
                raise SpecError(f"{path}.base: dimension {base.dimension} does not match {dim}")
            spec = NavigationNorm(base, _vector(need("U"), dim, f"{path}.U"))
        else:
            raise SpecError(f"{path}.variant: unknown variant {variant!r}; expected one of {VARIANTS}")
    except SpecError as exc:
        msg = str(exc)
        raise SpecError(msg if msg.startswith(path) else f"{path}: {msg}") from None
    return spec


def loads(text: str) -> NormSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return from_dict(doc)


def load(path: str | Path) -> NormSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecError(f"{path}: cannot read spec file ({exc.strerror})") from None
    try:
        return loads(text)
    except SpecError as exc:
        raise SpecError(f"{path}: {exc}") from None


def dump(spec: NormSpec, path: str | Path) -> None:
    Path(path).write_text(spec.to_json(indent=2) + "\n", encoding="utf-8")
