"""Conforming P1 elements for the reaction-diffusion Neumann problem.

Assembles a(u, v) = integral of (grad u . grad v + u v) and the boundary
load b(f_h, v) for edgewise-constant data, and solves the discrete Neumann
problem.  Element matrices are closed-form and exact for P1, so no
quadrature error enters the certified pipeline; the projection onto
piecewise constants is the nodal mean per triangle, again exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import quadrature
from .linalg import DEFAULT_TOL, NumericalError, SparseSymMatrix, SpdFactor
from .mesh import Mesh

__all__ = [
    "P1Solution",
    "P1NeumannSolver",
    "assemble_bilinear",
    "assemble_boundary_load",
    "solve_neumann",
    "project_pi_h",
    "pi_h_of_function",
    "norms",
    "gradients_of",
    "integral",
]

COMPATIBILITY_RTOL = 1e-8

# reference mass matrix: element mass is |K|/12 times this
_MASS0 = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]])


@dataclass
class P1Solution:
    """Piecewise-linear continuous function given by nodal coefficients.

    `gradients` holds the (constant) gradient per triangle and is derived
    from the nodal values at construction.
    """

    mesh: Mesh
    nodal: np.ndarray
    gradients: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.nodal = np.asarray(self.nodal, dtype=float)
        if self.nodal.shape != (self.mesh.num_vertices,):
            raise ValueError("nodal coefficient vector has wrong length")
        if self.gradients is None:
            self.gradients = gradients_of(self.mesh, self.nodal)

    def at_barycentric(self, bary: np.ndarray) -> np.ndarray:
        """Values at barycentric points on every triangle, shape (T, Q)."""
        corner_vals = self.nodal[self.mesh.triangles]      # (T, 3)
        return np.einsum("qk,tk->tq", bary, corner_vals)


def _shape_coefficients(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """Per-triangle (b_i, c_i) with grad(phi_i) = (b_i, c_i) / (2|K|)."""
    p = mesh.vertices[mesh.triangles]        # (T, 3, 2)
    nxt = p[:, [1, 2, 0], :]
    prv = p[:, [2, 0, 1], :]
    b = nxt[:, :, 1] - prv[:, :, 1]          # y_{i+1} - y_{i+2}
    c = prv[:, :, 0] - nxt[:, :, 0]          # x_{i+2} - x_{i+1}
    return b, c


def gradients_of(mesh: Mesh, nodal: np.ndarray) -> np.ndarray:
    """Constant gradient of the P1 interpolant on each triangle, (T, 2)."""
    b, c = _shape_coefficients(mesh)
    vals = nodal[mesh.triangles]
    inv2a = 1.0 / (2.0 * mesh.areas)
    gx = np.einsum("tk,tk->t", vals, b) * inv2a
    gy = np.einsum("tk,tk->t", vals, c) * inv2a
    return np.stack([gx, gy], axis=1)


def assemble_bilinear(mesh: Mesh) -> SparseSymMatrix:
    """Assemble the SPD matrix of a(u, v) over the P1 space (exact integration)."""
    b, c = _shape_coefficients(mesh)
    inv4a = 1.0 / (4.0 * mesh.areas)
    stiff = (np.einsum("ti,tj->tij", b, b) + np.einsum("ti,tj->tij", c, c)) \
        * inv4a[:, None, None]
    mass = mesh.areas[:, None, None] / 12.0 * _MASS0
    local = stiff + mass                                     # (T, 3, 3)

    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    return SparseSymMatrix(mesh.num_vertices, rows, cols, local.ravel())


def assemble_boundary_load(mesh: Mesh, f_h: np.ndarray) -> np.ndarray:
    """Load vector of b(f_h, v) for edgewise-constant boundary data.

    Exact: for constant f on an edge, the two endpoint basis functions each
    receive f |e| / 2.
    """
    f_h = np.asarray(f_h, dtype=float)
    if f_h.shape != (mesh.num_boundary_edges,):
        raise ValueError(
            f"boundary data has length {f_h.shape}, expected ({mesh.num_boundary_edges},)")
    load = np.zeros(mesh.num_vertices)
    ends = mesh.edges[mesh.boundary_edges]                   # (B, 2)
    half = 0.5 * f_h * mesh.edge_lengths[mesh.boundary_edges]
    np.add.at(load, ends[:, 0], half)
    np.add.at(load, ends[:, 1], half)
    return load


def integral(u: P1Solution) -> float:
    """Exact integral of u over the domain."""
    return float(np.dot(u.mesh.areas, u.nodal[u.mesh.triangles].mean(axis=1)))


class P1NeumannSolver:
    """Factor the P1 system once per mesh and solve for many right-hand sides."""

    def __init__(self, mesh: Mesh, tol: float = DEFAULT_TOL):
        self.mesh = mesh
        self.system = assemble_bilinear(mesh)
        self.factor = SpdFactor(self.system, tol=tol)

    def solve(self, f_h: np.ndarray) -> P1Solution:
        """Solve for edgewise-constant Neumann data."""
        load = assemble_boundary_load(self.mesh, f_h)
        blen = self.mesh.edge_lengths[self.mesh.boundary_edges]
        fb = float(np.sqrt(np.dot(blen, np.asarray(f_h, dtype=float) ** 2)))
        return self.solve_load(load, data_scale=fb * np.sqrt(blen.sum()))

    def solve_load(self, load: np.ndarray, data_scale: float = 0.0) -> P1Solution:
        """Solve for an arbitrary assembled load vector.

        Checks the compatibility identity (test function one): the integral
        of the solution must equal the total load.
        """
        u = P1Solution(self.mesh, self.factor.solve(load))
        total_load = float(load.sum())
        vol = integral(u)
        scale = max(abs(total_load), abs(vol), float(np.abs(load).sum()), data_scale)
        if abs(vol - total_load) > COMPATIBILITY_RTOL * scale:
            raise NumericalError(
                f"Neumann compatibility violated: integral of solution {vol!r} "
                f"vs total load {total_load!r}")
        return u


def solve_neumann(mesh: Mesh, f_h: np.ndarray, tol: float = DEFAULT_TOL) -> P1Solution:
    """One-shot discrete Neumann solve for edgewise-constant data."""
    return P1NeumannSolver(mesh, tol=tol).solve(f_h)


def project_pi_h(u: P1Solution) -> np.ndarray:
    """L2 projection of a P1 function onto piecewise constants (nodal means)."""
    return u.nodal[u.mesh.triangles].mean(axis=1)


def pi_h_of_function(mesh: Mesh, func) -> np.ndarray:
    """Elementwise means of a smooth function, by degree-5 quadrature.

    Verification-side only; certified quantities never depend on it.
    """
    pts = quadrature.triangle_points(mesh, quadrature.TRI7_BARY)
    vals = func(pts[:, :, 0], pts[:, :, 1])
    return vals @ quadrature.TRI7_WEIGHTS


def norms(u: P1Solution) -> tuple[float, float, float]:
    """(||u||_0, ||grad u||_0, ||u||_H1), all by exact integration."""
    mesh = u.mesh
    vals = u.nodal[mesh.triangles]
    l2sq = float(np.dot(mesh.areas / 12.0,
                        (vals ** 2).sum(axis=1) + vals.sum(axis=1) ** 2))
    h1sq = float(np.dot(mesh.areas, (u.gradients ** 2).sum(axis=1)))
    return np.sqrt(l2sq), np.sqrt(h1sq), np.sqrt(l2sq + h1sq)
