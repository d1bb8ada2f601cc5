"""Quadrature rules on the reference triangle and the unit interval."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    """Points in barycentric coordinates and positive weights.

    Triangle weights sum to 1/2 (reference triangle area); edge weights sum to 1.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> QuadratureRule:
    """Collapsed Gauss-Legendre rule exact for polynomials of total ``degree``.

    The Duffy map ``(s, t) -> (s, t(1-s))`` adds one degree in ``s``, so
    ``n = ceil((degree + 2) / 2)`` points per direction suffice.
    """
    if degree < 0:
        raise ValueError("degree must be non-negative")
    n = max(1, -(-(degree + 2) // 2))
    g, w = np.polynomial.legendre.leggauss(n)
    g, w = 0.5 * (g + 1.0), 0.5 * w
    S, T = np.meshgrid(g, g, indexing="ij")
    WS, WT = np.meshgrid(w, w, indexing="ij")
    x = S.ravel()
    y = (T * (1.0 - S)).ravel()
    weights = (WS * WT * (1.0 - S)).ravel()
    points = np.column_stack([1.0 - x - y, x, y])
    return QuadratureRule(points, weights, degree)


@lru_cache(maxsize=None)
def edge_rule(degree: int) -> QuadratureRule:
    """Gauss-Legendre rule on [0, 1]; points are (1 - s, s)."""
    n = max(1, -(-(degree + 1) // 2))
    g, w = np.polynomial.legendre.leggauss(n)
    s = 0.5 * (g + 1.0)
    return QuadratureRule(np.column_stack([1.0 - s, s]), 0.5 * w, degree)
