"""Probability maximization over convex sets by stochastic approximation."""

from ._backend import BACKEND
from .geometry import (
    Ball,
    BallSet,
    Box,
    ConvexBody,
    Ellipsoid,
    FeasibleSet,
    GeometryError,
    PolytopeSet,
    SymPolytope,
    bounding_box,
    contains,
    minkowski_gauge,
    project,
    sample_uniform,
    volume,
)

__version__ = "0.1.0"
