"""Fixed quadrature rules for the data and verification side.

The certified constants pipeline never depends on these rules: P1 element
matrices, loads for edgewise-constant data, and the gradient/flux gap are
closed-form or exactly integrated.  The rules here evaluate smooth boundary
data, oscillation terms, and true errors against manufactured solutions.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "EDGE_GAUSS5_NODES",
    "EDGE_GAUSS5_WEIGHTS",
    "TRI7_BARY",
    "TRI7_WEIGHTS",
    "EDGE_MIDPOINT_BARY",
    "triangle_points",
]

# 5-point Gauss-Legendre on (0, 1); exact for polynomials up to degree 9.
_x, _w = np.polynomial.legendre.leggauss(5)
EDGE_GAUSS5_NODES = 0.5 * (_x + 1.0)
EDGE_GAUSS5_WEIGHTS = 0.5 * _w
del _x, _w

# 7-point degree-5 rule on the triangle, in barycentric coordinates.
# Weights sum to one; multiply by |K|.
_s15 = math.sqrt(15.0)
_a = (6.0 - _s15) / 21.0
_b = (6.0 + _s15) / 21.0
TRI7_BARY = np.array(
    [[1 / 3, 1 / 3, 1 / 3]]
    + [[_a, _a, 1 - 2 * _a], [_a, 1 - 2 * _a, _a], [1 - 2 * _a, _a, _a]]
    + [[_b, _b, 1 - 2 * _b], [_b, 1 - 2 * _b, _b], [1 - 2 * _b, _b, _b]]
)
TRI7_WEIGHTS = np.array(
    [9 / 40]
    + [(155.0 - _s15) / 1200.0] * 3
    + [(155.0 + _s15) / 1200.0] * 3
)

# Edge midpoints of a triangle (midpoint m_j is on the edge opposite
# vertex j); the three-point midpoint rule with weights 1/3 is exact for
# quadratics, which keeps every degree-2 integral in the certified chain
# quadrature-error free.
EDGE_MIDPOINT_BARY = np.array(
    [[0.0, 0.5, 0.5],
     [0.5, 0.0, 0.5],
     [0.5, 0.5, 0.0]]
)

for _arr in (EDGE_GAUSS5_NODES, EDGE_GAUSS5_WEIGHTS, TRI7_BARY, TRI7_WEIGHTS,
             EDGE_MIDPOINT_BARY):
    _arr.setflags(write=False)


def triangle_points(mesh, bary: np.ndarray) -> np.ndarray:
    """Physical coordinates of barycentric points on every triangle.

    Returns an array of shape (T, Q, 2) for `bary` of shape (Q, 3).
    """
    corners = mesh.vertices[mesh.triangles]          # (T, 3, 2)
    return np.einsum("qk,tkx->tqx", bary, corners)
