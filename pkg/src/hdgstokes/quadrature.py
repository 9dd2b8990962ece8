"""Gauss rules on the reference triangle and the reference edge [0, 1].

Triangle rules are collapsed (Duffy) tensor products of Gauss-Legendre and
Gauss-Jacobi(1, 0) points, so every weight is positive and the exactness
degree follows directly from the 1D rules.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi

MAX_DEGREE = 40


@dataclass(frozen=True)
class TriangleRule:
    points: np.ndarray  # (nq, 2) reference coordinates
    weights: np.ndarray  # (nq,), sum 1/2
    exact_degree: int


@dataclass(frozen=True)
class EdgeRule:
    points: np.ndarray  # (nq,) in [0, 1]
    weights: np.ndarray  # (nq,), sum 1
    exact_degree: int


def _check_degree(degree):
    if degree < 0:
        raise ValueError(f"quadrature degree must be >= 0, got {degree}")
    if degree > MAX_DEGREE:
        raise ValueError(f"quadrature degree {degree} exceeds the supported ceiling {MAX_DEGREE}")


@lru_cache(maxsize=None)
def edge_rule(degree: int) -> EdgeRule:
    """Gauss-Legendre rule on [0, 1] exact for polynomials of ``degree``."""
    _check_degree(degree)
    n = degree // 2 + 1
    x, w = leggauss(n)
    pts = 0.5 * (x + 1.0)
    wts = 0.5 * w
    pts.setflags(write=False)
    wts.setflags(write=False)
    return EdgeRule(pts, wts, 2 * n - 1)


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> TriangleRule:
    """Collapsed Gauss rule on {(0,0), (1,0), (0,1)} exact to ``degree``.

    The map (a, b) -> (a, b (1 - a)) sends the unit square onto the
    triangle with Jacobian 1 - a; that factor is absorbed by a Gauss-Jacobi
    rule in a.
    """
    _check_degree(degree)
    n = degree // 2 + 1
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    a = 0.5 * (xj + 1.0)
    wa = wj / 4.0
    xl, wl = leggauss(n)
    b = 0.5 * (xl + 1.0)
    wb = 0.5 * wl
    A, Bv = np.meshgrid(a, b, indexing="ij")
    pts = np.column_stack([A.ravel(), (Bv * (1.0 - A)).ravel()])
    wts = np.outer(wa, wb).ravel()
    pts.setflags(write=False)
    wts.setflags(write=False)
    return TriangleRule(pts, wts, 2 * n - 1)
