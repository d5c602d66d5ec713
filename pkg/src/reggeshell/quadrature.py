"""Gauss rules on the reference segment and the reference triangle.

The reference triangle has vertices (-1,0), (1,0), (0,1) and area 1.  The
triangle rules come from a Duffy-type collapse of a tensorized Gauss rule,
which makes the exactness degree trivially guaranteed at any order.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["QuadratureRule", "segment_rule", "triangle_rule"]


@dataclass(frozen=True)
class QuadratureRule:
    """Quadrature points, weights and guaranteed polynomial exactness."""

    points: np.ndarray  # (n,) for segments, (n, 2) for triangles
    weights: np.ndarray
    exactness: int


_segment_cache: dict[int, QuadratureRule] = {}
_triangle_cache: dict[int, QuadratureRule] = {}


def segment_rule(d):
    """Gauss-Legendre rule on [-1, 1] exact for polynomials of degree >= d."""
    if d < 0:
        raise ValueError("exactness degree must be nonnegative")
    d = int(d)
    if d not in _segment_cache:
        n = d // 2 + 1
        x, w = np.polynomial.legendre.leggauss(n)
        _segment_cache[d] = QuadratureRule(x, w, 2 * n - 1)
    return _segment_cache[d]


def triangle_rule(d):
    """Collapsed tensor-Gauss rule on the reference triangle, exact to degree d.

    With x = u (1 - y) the integral becomes an iterated integral over
    [-1,1] x [0,1] with the extra factor (1 - y), hence a monomial x^a y^b
    needs u-degree a and y-degree a + b + 1.
    """
    if d < 0:
        raise ValueError("exactness degree must be nonnegative")
    d = int(d)
    if d not in _triangle_cache:
        nu = d // 2 + 1
        ny = (d + 1) // 2 + 1
        u, wu = np.polynomial.legendre.leggauss(nu)
        ty, wy = np.polynomial.legendre.leggauss(ny)
        y = 0.5 * (ty + 1.0)
        wy = 0.5 * wy
        U, Y = np.meshgrid(u, y, indexing="ij")
        WU, WY = np.meshgrid(wu, wy, indexing="ij")
        pts = np.column_stack([(U * (1.0 - Y)).ravel(), Y.ravel()])
        wts = (WU * WY * (1.0 - Y)).ravel()
        _triangle_cache[d] = QuadratureRule(pts, wts, d)
    return _triangle_cache[d]
