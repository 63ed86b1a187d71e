"""Explicit constants of the certified bound chain.

Three families:
  - the projection constant per element, C0(K) = h_K / j11, with j11 the
    first positive root of the Bessel function J1;
  - the edge trace constant 0.574 * sqrt(|e|/|K|) * h_K (the rounded
    published value; the sharper sqrt(1/j11^2 + 1/j11) is available behind
    a flag);
  - their mesh-wide maxima C0*h and C1(h).

For certified use the Bessel root enters only in denominators, so it is
rounded down; the stored bracket is sign-checked against J1 before first
use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import j1 as _bessel_j1

from .mesh import Mesh, MeshError

__all__ = [
    "ExplicitConstants",
    "bessel_j1_root",
    "projection_constant_times_h",
    "trace_coefficient",
    "trace_constant",
    "c1_of_mesh",
    "TRACE_COEFF",
]

# First positive root of J1 is 3.83170597020751231561...; the bracket
# straddles it widely enough that the sign of a double-precision J1
# evaluation is trustworthy at both ends.
_J11_LO = 3.8317059702075
_J11_HI = 3.831705970207525

TRACE_COEFF = 0.574

_verified = False


def bessel_j1_root() -> float:
    """First positive root of J1, rounded down (safe in denominators).

    The returned value agrees with 3.8317059702075123 to more than twelve
    significant digits; the sign change of J1 across the stored bracket is
    verified once per process.
    """
    global _verified
    if not _verified:
        lo, hi = _bessel_j1(_J11_LO), _bessel_j1(_J11_HI)
        if not (lo > 0.0 > hi):
            raise ArithmeticError(
                f"Bessel J1 bracket check failed: J1({_J11_LO}) = {lo!r}, "
                f"J1({_J11_HI}) = {hi!r}")
        _verified = True
    return _J11_LO


def projection_constant_times_h(mesh: Mesh) -> float:
    """C0 * h = max over elements of h_K / j11 (the bound constant of the
    elementwise-mean projection error)."""
    return mesh.h / bessel_j1_root()


def trace_coefficient(sharp: bool = False) -> float:
    """The leading trace coefficient: 0.574, or the sharper Bessel form."""
    if sharp:
        j = bessel_j1_root()
        return math.sqrt(1.0 / j ** 2 + 1.0 / j)
    return TRACE_COEFF


def trace_constant(mesh: Mesh, edge: int, tri: int | None = None,
                   sharp: bool = False) -> float:
    """Trace constant of edge `edge` with respect to triangle `tri`.

    Bounds ||v||_L2(e) by coeff * sqrt(|e|/|K|) * h_K * ||grad v||_L2(K)
    for functions with zero mean on the edge.  If `tri` is omitted the
    first adjacent triangle is used (unique for boundary edges).
    """
    if not 0 <= edge < mesh.num_edges:
        raise MeshError(f"edge index {edge} out of range")
    if tri is None:
        tri = int(mesh.edge_tris[edge, 0])
    elif edge not in mesh.tri_edges[tri]:
        raise MeshError(f"edge {edge} is not an edge of triangle {tri}")
    coeff = trace_coefficient(sharp)
    return coeff * math.sqrt(mesh.edge_lengths[edge] / mesh.areas[tri]) \
        * mesh.diameters[tri]


def _per_boundary_edge(mesh: Mesh, sharp: bool) -> np.ndarray:
    if mesh.num_boundary_edges == 0:
        raise MeshError("mesh has no boundary edges")
    tris = mesh.boundary_adjacent_triangles()
    coeff = trace_coefficient(sharp)
    return coeff * np.sqrt(mesh.edge_lengths[mesh.boundary_edges] / mesh.areas[tris]) \
        * mesh.diameters[tris]


def c1_of_mesh(mesh: Mesh, sharp: bool = False) -> float:
    """C1(h): the maximum trace constant over the boundary edges."""
    return float(_per_boundary_edge(mesh, sharp).max())


@dataclass(frozen=True)
class ExplicitConstants:
    """All explicit constants of one mesh, for auditing and reuse."""

    j11: float
    c0_times_h: float
    trace_coeff: float
    c1: float
    per_edge: np.ndarray    # trace constant per boundary edge, loop order
    h: float
    num_boundary_edges: int

    @classmethod
    def for_mesh(cls, mesh: Mesh, sharp: bool = False) -> "ExplicitConstants":
        per_edge = _per_boundary_edge(mesh, sharp)
        per_edge.setflags(write=False)
        return cls(
            j11=bessel_j1_root(),
            c0_times_h=projection_constant_times_h(mesh),
            trace_coeff=trace_coefficient(sharp),
            c1=float(per_edge.max()),
            per_edge=per_edge,
            h=mesh.h,
            num_boundary_edges=mesh.num_boundary_edges,
        )
