import os
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
SPECS = ROOT / "specs"

# Reuse compiled jax kernels across test runs and CLI subprocesses.
os.environ.setdefault("MINKAFF_JAX_CACHE_DIR", str(ROOT / ".jax_cache"))

from minkowski_affine.navigation import randers_closed_form  # noqa: E402
from minkowski_affine.specs import (  # noqa: E402
    AlphaBetaNorm,
    EuclideanNorm,
    NavigationNorm,
    PhiSpec,
    RandersNorm,
    compose_linear,
    load,
)

W = np.array([0.0, 0.0, 0.5])
SHEAR = np.array([[1.0, 0.2, 0.0], [0.0, 1.0, 0.0], [0.4, 0.3, 1.0]])


def general_ab():
    base = AlphaBetaNorm(np.eye(3), [0.0, 0.0, 1.0], PhiSpec("quadratic", 0.1))
    return NavigationNorm(base, [0.0, 0.1, 0.2])


def strict_specs():
    return [load(p) for p in sorted((SPECS / "strict").glob("*.json"))]


@pytest.fixture(scope="session")
def euclid():
    return EuclideanNorm(np.eye(3))


@pytest.fixture(scope="session")
def ellipsoid():
    return EuclideanNorm(np.diag([1.0, 1.0, 4.0]))


@pytest.fixture(scope="session")
def randers_nav():
    """Randers norm as navigation data (G = I, W)."""
    return NavigationNorm(EuclideanNorm(np.eye(3)), W)


@pytest.fixture(scope="session")
def randers_closed():
    return randers_closed_form(np.eye(3), W)


@pytest.fixture(scope="session")
def randers_simple():
    return RandersNorm(np.eye(3), [0.0, 0.0, 0.5])


@pytest.fixture(scope="session")
def gab():
    return general_ab()


@pytest.fixture(scope="session")
def sheared():
    return compose_linear(general_ab(), SHEAR)


@pytest.fixture(scope="session")
def ab_quadratic():
    return AlphaBetaNorm(np.eye(3), [0.0, 0.0, 1.0], PhiSpec("quadratic", 0.1))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_directions(rng, n, dim=3):
    u = rng.normal(size=(n, dim))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def nabla_h_fd(spec, u, frame, gamma, step=1e-4):
    """Covariant derivative of the chart metric, differencing h(theta) exactly evaluated."""
    from minkowski_affine.indicatrix import chart_metric
    n = frame.shape[1]
    th = np.concatenate([step * np.eye(n), -step * np.eye(n)])
    hs = chart_metric(spec, u, frame, th)
    dh = np.stack([(hs[k] - hs[n + k]) / (2 * step) for k in range(n)], axis=-1)  # dh[i, j, k]
    h = chart_metric(spec, u, frame, np.zeros((1, n)))[0]
    return (dh - np.einsum("lki,lj->ijk", gamma, h) - np.einsum("lkj,il->ijk", gamma, h))


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    return request.config.stash.setdefault(ACCEPTANCE_KEY, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
