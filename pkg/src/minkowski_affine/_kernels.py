"""jax kernels: closed-form norms, the navigation root, and derivative stacks.

Norms are built from a spec's ``structure`` as functions ``f(params, y)``.
Derivatives of F^2 are nested forward-mode (``jacfwd``) through these
closed forms; the navigation norm is differentiated through its converged
root with the implicit function rule, never through the iteration.

Batched kernels are jitted once per (structure, kind) and always run on a
fixed chunk size, so grids of any resolution reuse one compiled program.
"""

from __future__ import annotations

from functools import lru_cache

import jax
import jax.numpy as jnp
import numpy as np

from . import _jaxsetup  # noqa: F401  (float64)

CHUNK = 128
NEWTON_TOL = 1e-14
MAX_NEWTON = 200
MAX_DOUBLING = 80


def _phi(family: str, eps, s):
    if family == "identity":
        return jnp.ones_like(s)
    if family == "randers":
        return 1.0 + eps * s
    if family == "quadratic":
        return 1.0 + eps * s**2
    if family == "exponential":
        return jnp.exp(eps * s)
    raise ValueError(family)


def _navigation_solve(Fb, U, y):
    """Root s = 1/F~(y) of F_base(s y + U) - 1, with bracket and Newton counts."""

    def phi(s):
        return Fb(s * y + U) - 1.0

    def dphi(s):
        return jax.jvp(Fb, (s * y + U,), (y,))[1]

    hi0 = 1.0 / Fb(y)

    def bcond(st):
        lo, hi, k = st
        return (phi(hi) < 0.0) & (k < MAX_DOUBLING)

    def bbody(st):
        lo, hi, k = st
        return hi, 2.0 * hi, k + 1

    lo, hi, _ = jax.lax.while_loop(bcond, bbody, (jnp.zeros_like(hi0), hi0, 0))

    # phi is convex in s, so Newton started above the root decreases
    # monotonically; the bracket only guards against round-off.
    def ncond(st):
        lo, hi, s, f, ds, k = st
        stalled = ds <= 4.0 * jnp.finfo(s.dtype).eps * s
        return (jnp.abs(f) > NEWTON_TOL) & ~stalled & (k < MAX_NEWTON)

    def nbody(st):
        lo, hi, s, f, _, k = st
        lo = jnp.where(f < 0.0, s, lo)
        hi = jnp.where(f > 0.0, s, hi)
        step = s - f / dphi(s)
        inside = (step > lo) & (step < hi)
        s_new = jnp.where(inside, step, 0.5 * (lo + hi))
        return lo, hi, s_new, phi(s_new), jnp.abs(s_new - s), k + 1

    lo, hi, s, f, _, k = jax.lax.while_loop(ncond, nbody, (lo, hi, hi, phi(hi), jnp.inf * hi, 0))
    return s, jnp.abs(f), k


def _navigation_norm(Fb, U):
    """F~ with navigation data (Fb, U) as a custom_jvp function of y."""

    @jax.custom_jvp
    def nav(y):
        s, _, _ = _navigation_solve(Fb, U, y)
        return 1.0 / s

    @nav.defjvp
    def nav_jvp(primals, tangents):
        (y,), (dy,) = primals, tangents
        t = nav(y)
        z = y + t * U
        # d/dy of F_b(y + t U) - t = 0
        dFy = jax.jvp(Fb, (z,), (dy,))[1]
        dFU = jax.jvp(Fb, (z,), (U,))[1]
        return t, dFy / (1.0 - dFU)

    return nav


def norm_function(structure: tuple):
    """Return ``f(params, y) -> F(y)`` for a spec structure."""
    kind = structure[0]
    if kind == "euclidean":
        return lambda p, y: jnp.sqrt(y @ p["Q"] @ y)
    if kind == "randers":
        return lambda p, y: jnp.sqrt(y @ p["a"] @ y) + p["b"] @ y
    if kind == "alpha_beta":
        family = structure[1]

        def ab(p, y):
            alpha = jnp.sqrt(y @ p["a"] @ y)
            return alpha * _phi(family, p["eps"], (p["b"] @ y) / alpha)

        return ab
    if kind == "navigation":
        base = norm_function(structure[1])

        def nav(p, y):
            bp = p["base"]
            return _navigation_norm(lambda z: base(bp, z), p["U"])(y)

        return nav
    if kind == "linear":
        base = norm_function(structure[1])
        return lambda p, y: base(p["base"], p["L"] @ y)
    raise ValueError(f"unknown structure {structure!r}")


def _diagnosed_function(structure: tuple):
    """``f(params, y) -> (F, residual, iterations)`` for the outermost root solve."""
    kind = structure[0]
    if kind == "navigation":
        base = norm_function(structure[1])

        def nav(p, y):
            Fb = lambda z: base(p["base"], z)
            s, res, k = _navigation_solve(Fb, p["U"], y)
            return 1.0 / s, res, k

        return nav
    if kind == "linear":
        inner = _diagnosed_function(structure[1])
        return lambda p, y: inner(p["base"], p["L"] @ y)
    f = norm_function(structure)
    return lambda p, y: (f(p, y), jnp.zeros(()), jnp.zeros((), dtype=jnp.int32))


def _jet_function(structure: tuple, order: int):
    """Derivatives of F^2 up to ``order`` (2..4), all orders returned."""
    F = norm_function(structure)

    def jet(p, y):
        f = lambda x: F(p, x) ** 2

        def d1(x):
            v, g = jax.value_and_grad(f)(x)
            return g, (v, g)

        level = d1
        for _ in range(order - 1):
            level = _stack(level)
        top, aux = level(y)
        return aux

    return jet


def _stack(fn):
    def nxt(x):
        d, aux = jax.jacfwd(fn, has_aux=True)(x)
        return d, aux + (d,)

    return nxt


@lru_cache(maxsize=None)
def _value_kernel(structure: tuple):
    return jax.jit(jax.vmap(_diagnosed_function(structure), in_axes=(None, 0)))


@lru_cache(maxsize=None)
def _jet_kernel(structure: tuple, order: int):
    return jax.jit(jax.vmap(_jet_function(structure, order), in_axes=(None, 0)))


def _to_jax(params):
    return jax.tree_util.tree_map(jnp.asarray, params)


def _chunked(kernel, params, Y: np.ndarray):
    Y = np.asarray(Y, dtype=float)
    n = len(Y)
    pad = (-n) % CHUNK
    if pad:
        Y = np.concatenate([Y, np.repeat(Y[:1], pad, axis=0)])
    jp = _to_jax(params)
    pieces = [kernel(jp, jnp.asarray(Y[i : i + CHUNK])) for i in range(0, len(Y), CHUNK)]
    out = [np.concatenate([np.asarray(p[j]) for p in pieces])[:n] for j in range(len(pieces[0]))]
    return tuple(out)


def values(structure: tuple, params, Y: np.ndarray):
    """F at each row of Y, with navigation residuals and iteration counts."""
    return _chunked(_value_kernel(structure), params, Y)


def jets(structure: tuple, params, Y: np.ndarray, order: int = 4):
    """Tuple (F^2, grad, Hessian, 3rd, [4th]) of F^2 at each row of Y."""
    if order not in (2, 3, 4):
        raise ValueError("order must be 2, 3 or 4")
    return _chunked(_jet_kernel(structure, order), params, Y)
