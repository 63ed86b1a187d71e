"""Lowest-order Raviart-Thomas fields and the flux-equilibration saddle solve.

Degree-of-freedom convention: the coefficient of edge e is the (constant)
normal component p . n_e on e, with n_e the global edge normal fixed in
:mod:`hypercircle.mesh`.  The flux through e is therefore coefficient
times |e|.  On an adjacent triangle the edge's local basis function is

    psi_e(x) = sign * |e| / (2 |K|) * (x - P_opp),

with sign = +1 when n_e points out of the triangle and P_opp the opposite
vertex, so that psi_e . n_e = 1 on e, psi_e . n = 0 on the other two edges,
and div psi_e = sign * |e| / |K|.

The mixed problem minimizes ||p||_0 over fields whose boundary normal
components equal the data (imposed strongly, no solver tolerance) subject
to a per-triangle divergence constraint with multiplier rho; a scalar pair
(c, d) makes the saddle system nonsingular for arbitrary, possibly
incompatible, inputs: c absorbs exactly the mean imbalance between the
prescribed boundary flux and the target divergence, and the d row pins
the multiplier gauge (integral of rho equals zero).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import quadrature
from .linalg import DEFAULT_TOL, NumericalError, SparseSymMatrix, SymIndefFactor
from .mesh import Mesh
from .p1 import P1Solution

__all__ = [
    "RT0Field",
    "MixedSolution",
    "CompatibilityError",
    "assemble_mixed",
    "MixedSolver",
    "solve_mixed",
    "diff_norm_grad_minus_flux",
    "boundary_outward_signs",
]

COMPATIBILITY_RTOL = 1e-8


class CompatibilityError(NumericalError):
    """Boundary flux and target divergence are globally inconsistent."""

    def __init__(self, c: float, mismatch: float):
        super().__init__(
            f"incompatible mixed problem: multiplier c = {c!r} "
            f"(flux-minus-divergence mismatch {mismatch!r})")
        self.c = c
        self.mismatch = mismatch


@dataclass
class RT0Field:
    """H(div)-conforming lowest-order Raviart-Thomas field."""

    mesh: Mesh
    coeffs: np.ndarray  # (E,) normal component per edge, global orientation

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.mesh.num_edges,):
            raise ValueError("flux coefficient vector has wrong length")

    def divergence(self) -> np.ndarray:
        """Constant divergence per triangle, (T,)."""
        mesh = self.mesh
        contrib = (self.coeffs[mesh.tri_edges] * mesh.tri_edge_signs
                   * mesh.edge_lengths[mesh.tri_edges])
        return contrib.sum(axis=1) / mesh.areas

    def at_barycentric(self, bary: np.ndarray) -> np.ndarray:
        """Field values at barycentric points on every triangle, (T, Q, 2)."""
        mesh = self.mesh
        pts = quadrature.triangle_points(mesh, bary)          # (T, Q, 2)
        corners = mesh.vertices[mesh.triangles]               # (T, 3, 2)
        factors = (self.coeffs[mesh.tri_edges] * mesh.tri_edge_signs
                   * mesh.edge_lengths[mesh.tri_edges]
                   / (2.0 * mesh.areas[:, None]))             # (T, 3)
        # sum_j factor_j * (x - P_j)
        total = factors.sum(axis=1)
        moment = np.einsum("tj,tjx->tx", factors, corners)
        return total[:, None, None] * pts - moment[:, None, :]


@dataclass
class MixedSolution:
    """Solution of the mixed saddle problem: flux, multiplier field, and c."""

    flux: RT0Field
    rho: np.ndarray
    c: float


def boundary_outward_signs(mesh: Mesh) -> np.ndarray:
    """For each boundary edge (loop order), +1 if the global edge normal
    is the outward normal of the domain, else -1."""
    signs = np.empty(mesh.num_boundary_edges, dtype=np.int8)
    for k, e in enumerate(mesh.boundary_edges):
        t = mesh.edge_tris[e, 0]
        j = int(np.flatnonzero(mesh.tri_edges[t] == e)[0])
        signs[k] = mesh.tri_edge_signs[t, j]
    return signs


def _element_mass_blocks(mesh: Mesh) -> np.ndarray:
    """Per-triangle 3x3 RT0 mass blocks (psi_i, psi_j)_K, exactly integrated.

    The integrand is quadratic, so the three-point edge-midpoint rule is
    exact.
    """
    corners = mesh.vertices[mesh.triangles]                       # (T, 3, 2)
    mids = quadrature.triangle_points(mesh, quadrature.EDGE_MIDPOINT_BARY)
    lengths = mesh.edge_lengths[mesh.tri_edges]                   # (T, 3)
    signs = mesh.tri_edge_signs.astype(float)
    scale = signs * lengths / (2.0 * mesh.areas[:, None])         # (T, 3)
    # basis value of local edge j at midpoint q: scale_j * (m_q - P_j)
    basis = scale[:, None, :, None] * (mids[:, :, None, :] - corners[:, None, :, :])
    # (T, Q, j, 2); integrate with weight |K|/3 per midpoint
    blocks = np.einsum("tqix,tqjx->tij", basis, basis) * (mesh.areas[:, None, None] / 3.0)
    return blocks


def assemble_mixed(mesh: Mesh) -> SparseSymMatrix:
    """Assemble the full symmetric indefinite saddle system.

    Unknown ordering: all E edge fluxes, then T multipliers rho, then c.
    The last row/column is the (c, d) pair: column entries |K| in the
    divergence rows, row entries |K| against rho.
    """
    ne, nt = mesh.num_edges, mesh.num_triangles
    n = ne + nt + 1
    rows, cols, vals = [], [], []

    blocks = _element_mass_blocks(mesh)
    te = mesh.tri_edges
    rows.append(np.repeat(te, 3, axis=1).ravel())
    cols.append(np.tile(te, (1, 3)).ravel())
    vals.append(blocks.ravel())

    # divergence coupling: (div p, q)_K = sum_j sign_j |e_j| x_j for q = 1 on K
    div_entries = (mesh.tri_edge_signs * mesh.edge_lengths[te]).ravel()
    tri_rows = ne + np.repeat(np.arange(nt), 3)
    edge_cols = te.ravel()
    rows.append(tri_rows)
    cols.append(edge_cols)
    vals.append(div_entries)
    rows.append(edge_cols)
    cols.append(tri_rows)
    vals.append(div_entries)

    # c column in divergence rows, d row against rho
    tri_ids = ne + np.arange(nt)
    last = np.full(nt, ne + nt)
    rows.append(tri_ids)
    cols.append(last)
    vals.append(mesh.areas)
    rows.append(last)
    cols.append(tri_ids)
    vals.append(mesh.areas)

    return SparseSymMatrix(n, np.concatenate(rows), np.concatenate(cols),
                           np.concatenate(vals))


class MixedSolver:
    """Factor the reduced saddle system once per mesh; solve many data pairs.

    Boundary flux coefficients are eliminated (imposed strongly), which
    keeps p . n = f_h exact on the boundary.
    """

    def __init__(self, mesh: Mesh, tol: float = DEFAULT_TOL):
        self.mesh = mesh
        full = assemble_mixed(mesh).csr
        ne, nt = mesh.num_edges, mesh.num_triangles

        interior = np.flatnonzero(mesh.edge_tris[:, 1] >= 0)
        self.interior_edges = interior
        self.boundary_signs = boundary_outward_signs(mesh)
        keep = np.concatenate([interior, ne + np.arange(nt), [ne + nt]])
        self._keep = keep
        reduced = full[keep][:, keep]
        self._coupling = full[keep][:, mesh.boundary_edges]
        self.system = SparseSymMatrix.from_csr(reduced.tocsr())
        self.factor = SymIndefFactor(self.system, tol=tol)

    def solve(self, f_h: np.ndarray, target_div: np.ndarray) -> MixedSolution:
        """Solve for boundary data f_h and per-triangle target divergence."""
        mesh = self.mesh
        f_h = np.asarray(f_h, dtype=float)
        target_div = np.asarray(target_div, dtype=float)
        if f_h.shape != (mesh.num_boundary_edges,):
            raise ValueError("boundary data has wrong length")
        if target_div.shape != (mesh.num_triangles,):
            raise ValueError("target divergence has wrong length")

        ne, nt = mesh.num_edges, mesh.num_triangles
        ni = self.interior_edges.size
        x_b = self.boundary_signs * f_h

        rhs = np.zeros(ni + nt + 1)
        rhs[ni:ni + nt] = mesh.areas * target_div
        rhs -= self._coupling @ x_b

        sol = self.factor.solve(rhs)
        coeffs = np.zeros(ne)
        coeffs[self.interior_edges] = sol[:ni]
        coeffs[mesh.boundary_edges] = x_b
        rho = sol[ni:ni + nt]
        c = float(sol[-1])

        blen = mesh.edge_lengths[mesh.boundary_edges]
        target_norm = float(np.sqrt(np.dot(mesh.areas, target_div ** 2)))
        data_norm = float(np.sqrt(np.dot(blen, f_h ** 2)))
        scale = max(target_norm, data_norm)
        if abs(c) > COMPATIBILITY_RTOL * scale:
            mismatch = float(np.dot(blen, f_h) - np.dot(mesh.areas, target_div))
            raise CompatibilityError(c, mismatch)
        rho_mean = float(np.dot(mesh.areas, rho))
        if abs(rho_mean) > COMPATIBILITY_RTOL * max(
                scale, float(np.sqrt(np.dot(mesh.areas, rho ** 2)))):
            raise NumericalError(f"multiplier gauge violated: integral of rho = {rho_mean!r}")
        return MixedSolution(RT0Field(mesh, coeffs), rho, c)


def solve_mixed(mesh: Mesh, f_h: np.ndarray, target_div: np.ndarray,
                tol: float = DEFAULT_TOL) -> MixedSolution:
    """One-shot mixed solve; see :class:`MixedSolver` for factor reuse."""
    return MixedSolver(mesh, tol=tol).solve(f_h, target_div)


def grad_minus_flux_at_midpoints(u: P1Solution, p: RT0Field) -> np.ndarray:
    """(grad u - p) at the three edge midpoints of every triangle, (T, 3, 2)."""
    if u.mesh is not p.mesh:
        raise ValueError("P1 solution and RT0 field live on different meshes")
    return u.gradients[:, None, :] - p.at_barycentric(quadrature.EDGE_MIDPOINT_BARY)


def diff_norm_grad_minus_flux(u: P1Solution, p: RT0Field) -> float:
    """Exact L2 norm of (grad u - p); the integrand is quadratic per triangle."""
    diff = grad_minus_flux_at_midpoints(u, p)
    per_tri = (diff ** 2).sum(axis=2).sum(axis=1) / 3.0
    return float(np.sqrt(np.dot(u.mesh.areas, per_tri)))
