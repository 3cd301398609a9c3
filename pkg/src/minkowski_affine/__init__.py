"""Differential and affine invariants of Minkowski norms."""

from . import _jaxsetup  # noqa: F401
from .errors import *  # noqa: F401,F403
from .specs import (  # noqa: F401
    AlphaBetaNorm,
    EuclideanNorm,
    LinearNorm,
    NavigationNorm,
    NormSpec,
    PhiSpec,
    RandersNorm,
    compose_linear,
    shifted,
)

__version__ = "0.1.0"
