"""Quadrature rules on triangles (barycentric) and on edges (unit interval).

Triangle rules are conical (collapsed) Gauss products: Gauss-Jacobi in the
collapsed direction times Gauss-Legendre along the fibre. They are exact for
all polynomials of total degree <= ``degree`` and all points are interior.
Weights are normalised to sum to one; multiply by the element area at use.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

MAX_TRI_DEGREE = 10


@dataclass(frozen=True)
class TriangleRule:
    degree: int
    points: np.ndarray  # (nq, 3) barycentric coordinates
    weights: np.ndarray  # (nq,), sum to 1


@dataclass(frozen=True)
class EdgeRule:
    degree: int
    points: np.ndarray  # (nq,) in [0, 1]
    weights: np.ndarray  # (nq,), sum to 1


@lru_cache(maxsize=None)
def tri_rule(degree):
    """Return a triangle rule exact up to total degree ``degree`` (1..10)."""
    if not isinstance(degree, (int, np.integer)) or not 1 <= degree <= MAX_TRI_DEGREE:
        raise ValueError(f"unsupported triangle quadrature degree: {degree!r}")
    if degree == 1:
        pts = np.array([[1.0, 1.0, 1.0]]) / 3.0
        wts = np.array([1.0])
    else:
        n = (degree + 2) // 2
        # Collapsed coordinate a in [0, 1] carries the Jacobian (1 - a).
        xa, wa = roots_jacobi(n, 1.0, 0.0)
        xb, wb = np.polynomial.legendre.leggauss(n)
        a = 0.5 * (xa + 1.0)
        b = 0.5 * (xb + 1.0)
        wa = wa / wa.sum()
        wb = wb / wb.sum()
        A, B = np.meshgrid(a, b, indexing="ij")
        l1 = A.ravel()
        l2 = ((1.0 - A) * B).ravel()
        pts = np.column_stack([1.0 - l1 - l2, l1, l2])
        wts = np.outer(wa, wb).ravel()
    pts.setflags(write=False)
    wts.setflags(write=False)
    return TriangleRule(int(degree), pts, wts)


@lru_cache(maxsize=None)
def edge_rule(degree):
    """Gauss-Legendre rule on [0, 1] exact up to ``degree``."""
    if not isinstance(degree, (int, np.integer)) or degree < 0:
        raise ValueError(f"unsupported edge quadrature degree: {degree!r}")
    n = max(1, (degree + 2) // 2)
    x, w = np.polynomial.legendre.leggauss(n)
    pts = 0.5 * (x + 1.0)
    wts = 0.5 * w
    pts.setflags(write=False)
    wts.setflags(write=False)
    return EdgeRule(int(degree), pts, wts)
