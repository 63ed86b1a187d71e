"""The discrete bound constant kappa_h.

kappa_h is the maximum over edgewise-constant boundary data f_h of
Y(f_h, p_h, beta) / ||f_h||_b, where

    Y^2 = (2 + beta + 1/beta) (C0 h)^4 ||grad u_h||_0^2
        + (1 + 1/beta) ||grad u_h - p_h||_0^2,

u_h solves the discrete Neumann problem for f_h and p_h the minimal-norm
equilibrated flux whose divergence matches the elementwise mean of u_h.
Both solution operators are linear in f_h, so Y^2 and ||f_h||_b^2 are
quadratic forms x^T A x and x^T B x over the boundary-edge basis, and
kappa_h^2 is the top eigenvalue of the pencil (A, B).

The expensive part (one P1 solve plus one mixed solve per boundary edge)
is independent of beta; the workspace caches the resulting Gram blocks so
beta sweeps reuse them.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .constants import projection_constant_times_h
from .linalg import DEFAULT_TOL, DenseSymMatrix, max_generalized_eig
from .mesh import Mesh
from .p1 import P1NeumannSolver, project_pi_h
from .rt0 import MixedSolver, grad_minus_flux_at_midpoints

__all__ = [
    "YParams",
    "KappaResult",
    "KappaWorkspace",
    "boundary_norm",
    "y_value",
    "build_forms",
    "compute_kappa",
]


def boundary_norm(mesh: Mesh, f_h: np.ndarray) -> float:
    """||f_h||_b for edgewise-constant boundary data."""
    f_h = np.asarray(f_h, dtype=float)
    blen = mesh.edge_lengths[mesh.boundary_edges]
    return float(np.sqrt(np.dot(blen, f_h ** 2)))


@dataclass(frozen=True)
class YParams:
    """Parameters of the Y functional: beta and the projection constant."""

    beta: float
    c0h: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")

    @classmethod
    def for_mesh(cls, mesh: Mesh, beta: float) -> "YParams":
        return cls(beta=beta, c0h=projection_constant_times_h(mesh))

    @property
    def grad_coef(self) -> float:
        """Coefficient (2 + beta + 1/beta) (C0 h)^4 of the gradient term."""
        return (2.0 + self.beta + 1.0 / self.beta) * self.c0h ** 4

    @property
    def flux_coef(self) -> float:
        """Coefficient (1 + 1/beta) of the gradient/flux gap term."""
        return 1.0 + 1.0 / self.beta


class KappaWorkspace:
    """Per-mesh solvers and cached boundary-basis Gram blocks."""

    def __init__(self, mesh: Mesh, tol: float = DEFAULT_TOL, jobs: int = 1):
        self.mesh = mesh
        self.jobs = max(1, jobs)
        self.p1 = P1NeumannSolver(mesh, tol=tol)
        self.mixed = MixedSolver(mesh, tol=tol)
        self._grams: tuple[np.ndarray, np.ndarray] | None = None

    def solve_fields(self, f_h: np.ndarray):
        """Gradient field and gradient/flux gap for one boundary datum.

        Returns (grad (T,2), gap (T,3,2), P1Solution, MixedSolution).
        """
        u = self.p1.solve(f_h)
        mixed = self.mixed.solve(f_h, project_pi_h(u))
        gap = grad_minus_flux_at_midpoints(u, mixed.flux)
        return u.gradients, gap, u, mixed

    def gram_blocks(self) -> tuple[np.ndarray, np.ndarray]:
        """Boundary-basis Gram matrices of the two Y terms (beta-free).

        Entry (i, j) of the first block is (grad u_i, grad u_j); of the
        second, (grad u_i - p_i, grad u_j - p_j).  Both integrals are
        exact (constant resp. quadratic integrands).
        """
        if self._grams is None:
            mesh = self.mesh
            nb = mesh.num_boundary_edges

            def basis_fields(i: int):
                f = np.zeros(nb)
                f[i] = 1.0
                grad, gap, _, _ = self.solve_fields(f)
                return grad, gap

            if self.jobs > 1:
                with ThreadPoolExecutor(max_workers=self.jobs) as pool:
                    results = list(pool.map(basis_fields, range(nb)))
            else:
                results = [basis_fields(i) for i in range(nb)]
            grads = np.stack([g for g, _ in results])          # (B, T, 2)
            gaps = np.stack([d for _, d in results])           # (B, T, 3, 2)

            a_grad = np.einsum("itx,jtx,t->ij", grads, grads, mesh.areas)
            a_gap = np.einsum("itmx,jtmx,t->ij", gaps, gaps, mesh.areas / 3.0)
            self._grams = (0.5 * (a_grad + a_grad.T), 0.5 * (a_gap + a_gap.T))
        return self._grams


@dataclass(frozen=True)
class KappaResult:
    """kappa_h with the pencil it came from and the maximizing datum."""

    kappa: float
    maximizer: np.ndarray       # boundary data with ||f||_b = 1
    matrix_a: DenseSymMatrix
    matrix_b: np.ndarray        # diagonal of B: boundary edge lengths
    params: YParams
    h: float
    domain: str | None
    level: int | None

    @property
    def beta(self) -> float:
        return self.params.beta


def y_value(mesh: Mesh, f_h: np.ndarray, params: YParams,
            workspace: KappaWorkspace | None = None) -> float:
    """Y(f_h, p_h, beta) for one boundary datum (solves both problems)."""
    ws = workspace if workspace is not None else KappaWorkspace(mesh)
    grad, gap, _, _ = ws.solve_fields(f_h)
    grad_sq = float(np.dot(mesh.areas, (grad ** 2).sum(axis=1)))
    gap_sq = float(np.dot(mesh.areas / 3.0, (gap ** 2).sum(axis=(1, 2))))
    return float(np.sqrt(params.grad_coef * grad_sq + params.flux_coef * gap_sq))


def build_forms(mesh: Mesh, params: YParams,
                workspace: KappaWorkspace | None = None,
                ) -> tuple[DenseSymMatrix, np.ndarray]:
    """The quadratic forms of Y^2 and ||f||_b^2 over boundary-edge data.

    Returns (A, b_diag) with Y^2(f) = x^T A x and ||f||_b^2 = x^T diag(b) x
    for x the coefficient vector of f over the boundary edges.
    """
    ws = workspace if workspace is not None else KappaWorkspace(mesh)
    a_grad, a_gap = ws.gram_blocks()
    a = params.grad_coef * a_grad + params.flux_coef * a_gap
    b_diag = mesh.edge_lengths[mesh.boundary_edges].astype(float)
    return DenseSymMatrix.from_full(a), b_diag


def compute_kappa(mesh: Mesh, params: YParams,
                  workspace: KappaWorkspace | None = None,
                  tol: float = DEFAULT_TOL) -> KappaResult:
    """kappa_h = sqrt of the top eigenvalue of A x = lambda B x."""
    a, b_diag = build_forms(mesh, params, workspace=workspace)
    lam, x = max_generalized_eig(a, b_diag, tol=tol)
    kappa = float(np.sqrt(max(lam, 0.0)))
    return KappaResult(
        kappa=kappa, maximizer=x, matrix_a=a, matrix_b=b_diag, params=params,
        h=mesh.h, domain=mesh.domain.value if mesh.domain else None,
        level=mesh.level,
    )
