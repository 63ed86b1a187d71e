"""Verification suites: manufactured solutions, hypercircle identity
surrogates, trace and projection property checks, convergence rates.

Everything here sits on the data/verification side of the package: it
exercises the certified chain against independent evidence (closed-form
solutions, refined reference solutions, random sampling) and never feeds
back into the computed constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import quadrature
from .constants import bessel_j1_root, c1_of_mesh, trace_constant
from .estimator import (BoundaryFunction, aposteriori_bound, boundary_l2_norm,
                        project_pi_gamma, quadrature_boundary_load)
from .kappa import KappaWorkspace, YParams, compute_kappa, y_value
from .linalg import DEFAULT_TOL
from .mesh import Domain, Mesh, generate
from .p1 import (P1NeumannSolver, P1Solution, norms, pi_h_of_function,
                 project_pi_h, solve_neumann)
from .rt0 import diff_norm_grad_minus_flux, solve_mixed

__all__ = [
    "ManufacturedSolution",
    "MANUFACTURED",
    "BOUNDARY_DATA",
    "interpolate",
    "true_error",
    "rate_table",
    "HypercircleGap",
    "check_hypercircle_discrete",
    "OrthogonalityCheck",
    "check_orthogonality_continuous",
    "CheckResult",
    "verification_checks",
]


# ---------------------------------------------------------------------------
# Manufactured solutions: u = exp(a x + b y) with a^2 + b^2 = 1 solves
# -Laplace(u) + u = 0 exactly.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ManufacturedSolution:
    """Closed-form solution of the model problem with its Neumann data."""

    name: str
    a: float
    b: float

    def u(self, x, y):
        return np.exp(self.a * np.asarray(x) + self.b * np.asarray(y))

    def grad(self, x, y):
        vals = self.u(x, y)
        return np.stack([self.a * vals, self.b * vals], axis=-1)

    def pde_residual(self, x, y):
        """-Laplace(u) + u from the closed-form second derivatives."""
        vals = self.u(x, y)
        return -(self.a ** 2 + self.b ** 2) * vals + vals

    def neumann_data(self) -> BoundaryFunction:
        a, b = self.a, self.b
        return BoundaryFunction(
            self.name,
            lambda x, y, nx, ny: np.exp(a * x + b * y) * (a * nx + b * ny))


_SQRT_HALF = math.sqrt(0.5)
MANUFACTURED = {
    "exp_x": ManufacturedSolution("exp_x", 1.0, 0.0),
    "exp_diag": ManufacturedSolution("exp_diag", _SQRT_HALF, _SQRT_HALF),
}

# CLI data catalog: name -> (boundary function, exact solution or None)
BOUNDARY_DATA: dict[str, tuple[BoundaryFunction, ManufacturedSolution | None]] = {
    name: (ms.neumann_data(), ms) for name, ms in MANUFACTURED.items()
}
BOUNDARY_DATA["one"] = (BoundaryFunction.constant(1.0, "one"), None)
BOUNDARY_DATA["zero"] = (BoundaryFunction.constant(0.0, "zero"), None)


def interpolate(mesh: Mesh, exact) -> P1Solution:
    """Nodal interpolant of a closed-form function onto the P1 space."""
    return P1Solution(mesh, exact.u(mesh.vertices[:, 0], mesh.vertices[:, 1]))


def true_error(mesh: Mesh, u_h: P1Solution, exact) -> tuple[float, float]:
    """(H1 error, boundary L2 error) of u_h against a closed-form solution.

    Degree-5 triangle quadrature and 5-point edge Gauss; `exact` needs
    vectorized `u(x, y)` and `grad(x, y)` evaluators.
    """
    pts = quadrature.triangle_points(mesh, quadrature.TRI7_BARY)
    ue = exact.u(pts[:, :, 0], pts[:, :, 1])
    ge = exact.grad(pts[:, :, 0], pts[:, :, 1])
    uh = u_h.at_barycentric(quadrature.TRI7_BARY)
    sq = (ue - uh) ** 2 + ((ge - u_h.gradients[:, None, :]) ** 2).sum(axis=-1)
    err_h1 = math.sqrt(float(np.dot(mesh.areas, sq @ quadrature.TRI7_WEIGHTS)))

    ends = mesh.edges[mesh.boundary_edges]
    a = mesh.vertices[ends[:, 0]]
    d = mesh.vertices[ends[:, 1]] - a
    t = quadrature.EDGE_GAUSS5_NODES
    x = a[:, None, 0] + np.outer(d[:, 0], t)
    y = a[:, None, 1] + np.outer(d[:, 1], t)
    uh_edge = np.outer(u_h.nodal[ends[:, 0]], 1.0 - t) + np.outer(u_h.nodal[ends[:, 1]], t)
    sq_b = (exact.u(x, y) - uh_edge) ** 2
    lengths = mesh.edge_lengths[mesh.boundary_edges]
    err_b = math.sqrt(float(np.dot(lengths, sq_b @ quadrature.EDGE_GAUSS5_WEIGHTS)))
    return err_h1, err_b


def rate_table(values: Sequence[tuple[float, float]]) -> list[float]:
    """Convergence rates log(q_2h / q_h) / log 2 for an h-halving sequence."""
    rates = []
    for (h_prev, q_prev), (h_cur, q_cur) in zip(values, values[1:]):
        if abs(h_prev - 2.0 * h_cur) > 1e-9 * h_prev:
            raise ValueError(
                f"mesh sizes do not halve: {h_prev!r} followed by {h_cur!r}")
        rates.append(math.log(q_prev / q_cur) / math.log(2.0))
    return rates


# ---------------------------------------------------------------------------
# Discrete hypercircle identity, checked against a refined reference
# solution.  The uniform meshes are nested, so every integral below is
# exact on the fine mesh (integrands are at most quadratic per fine
# triangle; the midpoint rule handles them).
# ---------------------------------------------------------------------------

def _locate_points(mesh: Mesh, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Containing triangle and barycentric coordinates for each point."""
    n = points.shape[0]
    best = np.full(n, -np.inf)
    owner = np.zeros(n, dtype=np.int64)
    bary = np.zeros((n, 3))
    corners = mesh.vertices[mesh.triangles]
    for t in range(mesh.num_triangles):
        p0, p1, p2 = corners[t]
        m = np.array([p1 - p0, p2 - p0]).T
        inv = np.linalg.inv(m)
        local = (points - p0) @ inv.T
        lam = np.column_stack([1.0 - local.sum(axis=1), local])
        score = lam.min(axis=1)
        better = score > best
        if np.any(better):
            best[better] = score[better]
            owner[better] = t
            bary[better] = lam[better]
    if best.min() < -1e-9:
        raise ValueError("a point lies outside the mesh")
    return owner, bary


def _boundary_data_on_refinement(coarse: Mesh, fine: Mesh,
                                 f_h: np.ndarray) -> np.ndarray:
    """Transfer edgewise-constant boundary data to a nested refinement."""
    ends_f = fine.edges[fine.boundary_edges]
    mids = 0.5 * (fine.vertices[ends_f[:, 0]] + fine.vertices[ends_f[:, 1]])
    ends_c = coarse.edges[coarse.boundary_edges]
    a = coarse.vertices[ends_c[:, 0]]
    d = coarse.vertices[ends_c[:, 1]] - a
    dd = (d ** 2).sum(axis=1)
    # distance of each fine midpoint to each coarse boundary segment
    diff = mids[None, :, :] - a[:, None, :]
    t = np.clip(np.einsum("cfx,cx->cf", diff, d) / dd[:, None], 0.0, 1.0)
    proj = a[:, None, :] + t[:, :, None] * d[:, None, :]
    dist = ((mids[None, :, :] - proj) ** 2).sum(axis=2)
    nearest = dist.argmin(axis=0)
    return np.asarray(f_h, dtype=float)[nearest]


@dataclass(frozen=True)
class HypercircleGap:
    """Both sides of the discrete hypercircle identity and their gap."""

    base_level: int
    ref_level: int
    lhs: float
    rhs: float

    @property
    def gap(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def rel_gap(self) -> float:
        return self.gap / self.lhs if self.lhs > 0 else 0.0


def check_hypercircle_discrete(mesh: Mesh, f_h: np.ndarray,
                               ref_refinements: int = 2,
                               tol: float = DEFAULT_TOL) -> HypercircleGap:
    """Evaluate the discrete hypercircle identity with a refined reference.

    The identity ties ||grad u_h - p_h||^2 to the (uncomputable) exact
    solution of the edgewise-constant-data problem; replacing it with a
    reference solution `ref_refinements` levels finer leaves a gap that
    must shrink as the reference is refined.
    """
    if mesh.domain is None or mesh.level is None:
        raise ValueError("hypercircle check needs a generated (taggable) mesh")
    u_h = solve_neumann(mesh, f_h, tol=tol)
    mixed = solve_mixed(mesh, f_h, project_pi_h(u_h), tol=tol)
    p_h = mixed.flux
    lhs = diff_norm_grad_minus_flux(u_h, p_h) ** 2

    fine = generate(mesh.domain, mesh.level + ref_refinements)
    f_fine = _boundary_data_on_refinement(mesh, fine, f_h)
    u_ref = solve_neumann(fine, f_fine, tol=tol)

    vert_owner, vert_bary = _locate_points(mesh, fine.vertices)
    uh_on_fine = np.einsum("nk,nk->n", vert_bary, u_h.nodal[mesh.triangles[vert_owner]])
    w = P1Solution(fine, u_ref.nodal - uh_on_fine)
    w_l2, w_h1semi, w_h1 = norms(w)

    centroids = quadrature.triangle_points(
        fine, np.array([[1 / 3, 1 / 3, 1 / 3]]))[:, 0, :]
    owner, _ = _locate_points(mesh, centroids)

    mids = quadrature.triangle_points(fine, quadrature.EDGE_MIDPOINT_BARY)
    flat = mids.reshape(-1, 2)
    flat_owner = np.repeat(owner, 3)
    p_vals = _rt0_at_points(p_h, flat, flat_owner).reshape(fine.num_triangles, 3, 2)
    grad_gap = u_ref.gradients[:, None, :] - p_vals
    grad_flux_sq = float(np.dot(fine.areas / 3.0, (grad_gap ** 2).sum(axis=(1, 2))))

    # coarse elementwise means of w (exact: fine P1 integrates elementwise)
    w_means_fine = w.nodal[fine.triangles].mean(axis=1)
    sums = np.zeros(mesh.num_triangles)
    np.add.at(sums, owner, fine.areas * w_means_fine)
    pi_w = sums / mesh.areas
    pi_uh = project_pi_h(u_h)

    w_mid = w.at_barycentric(quadrature.EDGE_MIDPOINT_BARY)
    uh_fine = P1Solution(fine, uh_on_fine)
    uh_mid = uh_fine.at_barycentric(quadrature.EDGE_MIDPOINT_BARY)
    prod = (pi_w[owner][:, None] - w_mid) * (pi_uh[owner][:, None] - uh_mid)
    inner = float(np.dot(fine.areas / 3.0, prod.sum(axis=1)))

    rhs = w_h1 ** 2 + grad_flux_sq + w_l2 ** 2 + 2.0 * inner
    return HypercircleGap(base_level=mesh.level,
                          ref_level=mesh.level + ref_refinements,
                          lhs=lhs, rhs=rhs)


def _rt0_at_points(field, points: np.ndarray, tri_indices: np.ndarray) -> np.ndarray:
    """RT0 field values at physical points lying in the given triangles."""
    mesh = field.mesh
    corners = mesh.vertices[mesh.triangles]
    factors = (field.coeffs[mesh.tri_edges] * mesh.tri_edge_signs
               * mesh.edge_lengths[mesh.tri_edges] / (2.0 * mesh.areas[:, None]))
    total = factors.sum(axis=1)
    moment = np.einsum("tj,tjx->tx", factors, corners)
    return total[tri_indices, None] * points - moment[tri_indices]


# ---------------------------------------------------------------------------
# Continuous hypercircle orthogonality kernel.  With u = exp(x), alpha = 1,
# g = 0, v = u + w for a mean-zero polynomial perturbation w, and
# sigma = grad u + tau where div tau = w with tau . n = 0 on the unit
# square boundary, the identity's cross term must vanish:
# (grad u - sigma, grad(v - u)) - alpha ||v - u||^2 = -(tau, grad w) - ||w||^2 = 0.
# ---------------------------------------------------------------------------

def _bump_w(x, y):
    return x * (1 - x) * y * (1 - y) - 1.0 / 36.0


def _bump_grad_w(x, y):
    return np.stack([(1 - 2 * x) * y * (1 - y), x * (1 - x) * (1 - 2 * y)], axis=-1)


def _tau(x, y):
    px = x ** 2 / 2 - x ** 3 / 3 - x / 6.0
    qy = (y ** 2 / 2 - y ** 3 / 3 - y / 6.0) / 6.0
    return np.stack([px * y * (1 - y), qy + 0.0 * x], axis=-1)


@dataclass(frozen=True)
class OrthogonalityCheck:
    """Quadrature residuals of the continuous hypercircle identity."""

    kernel_residual: float     # cross term minus alpha ||v-u||^2
    identity_residual: float   # full four-norm identity
    scale: float               # ||v - u||_0^2, for relative judgment


def check_orthogonality_continuous(level: int = 4) -> OrthogonalityCheck:
    """Check Theorem-style orthogonality on the unit square by quadrature."""
    mesh = generate(Domain.SQUARE, level)
    pts = quadrature.triangle_points(mesh, quadrature.TRI7_BARY)
    x, y = pts[:, :, 0], pts[:, :, 1]
    wq = quadrature.TRI7_WEIGHTS

    w_vals = _bump_w(x, y)
    gw = _bump_grad_w(x, y)
    tau = _tau(x, y)

    def integrate(vals):
        return float(np.dot(mesh.areas, vals @ wq))

    w_sq = integrate(w_vals ** 2)
    cross = integrate((-tau * gw).sum(axis=-1))
    kernel = cross - w_sq

    # full identity: ||grad w||^2 + ||tau||^2 + 2 ||w||^2 = ||grad w - tau||^2
    gw_sq = integrate((gw ** 2).sum(axis=-1))
    tau_sq = integrate((tau ** 2).sum(axis=-1))
    gap_sq = integrate(((gw - tau) ** 2).sum(axis=-1))
    identity = gw_sq + tau_sq + 2.0 * w_sq - gap_sq
    return OrthogonalityCheck(kernel_residual=abs(kernel),
                              identity_residual=abs(identity),
                              scale=w_sq)


# ---------------------------------------------------------------------------
# Random mean-zero quadratics for the trace inequality.
# ---------------------------------------------------------------------------

_GAUSS3_NODES = np.array([0.5 - math.sqrt(0.15), 0.5, 0.5 + math.sqrt(0.15)])
_GAUSS3_WEIGHTS = np.array([5.0, 8.0, 5.0]) / 18.0
_SIMPSON_NODES = np.array([0.0, 0.5, 1.0])
_SIMPSON_WEIGHTS = np.array([1.0, 4.0, 1.0]) / 6.0


def _quadratic(coeffs, x, y):
    c0, c1, c2, c3, c4, c5 = coeffs
    return c0 + c1 * x + c2 * y + c3 * x ** 2 + c4 * x * y + c5 * y ** 2


def _quadratic_grad_sq(coeffs, x, y):
    _, c1, c2, c3, c4, c5 = coeffs
    gx = c1 + 2 * c3 * x + c4 * y
    gy = c2 + c4 * x + 2 * c5 * y
    return gx ** 2 + gy ** 2


def trace_inequality_sample(mesh: Mesh, num: int = 1000, seed: int = 0,
                            sharp: bool = False) -> float:
    """Worst ratio ||v||_e / (C(e,K) |v|_H1(K)) over random mean-zero quadratics.

    All integrals are exact for quadratics (Simpson for the edge mean,
    3-point Gauss for the quartic edge square, midpoint rule for the
    gradient square).  Returns the maximum observed ratio; the trace
    theorem asserts it never exceeds one.
    """
    rng = np.random.default_rng(seed)
    mids = quadrature.triangle_points(mesh, quadrature.EDGE_MIDPOINT_BARY)
    worst = 0.0
    for _ in range(num):
        t = int(rng.integers(mesh.num_triangles))
        j = int(rng.integers(3))
        e = int(mesh.tri_edges[t, j])
        coeffs = rng.uniform(-1.0, 1.0, size=6)

        va, vb = mesh.edges[e]
        a = mesh.vertices[va]
        d = mesh.vertices[vb] - a
        xs = a[0] + _SIMPSON_NODES * d[0]
        ys = a[1] + _SIMPSON_NODES * d[1]
        coeffs[0] -= float(_SIMPSON_WEIGHTS @ _quadratic(coeffs, xs, ys))

        xg = a[0] + _GAUSS3_NODES * d[0]
        yg = a[1] + _GAUSS3_NODES * d[1]
        edge_norm = math.sqrt(
            mesh.edge_lengths[e] * float(_GAUSS3_WEIGHTS @ _quadratic(coeffs, xg, yg) ** 2))

        gsq = _quadratic_grad_sq(coeffs, mids[t, :, 0], mids[t, :, 1])
        h1 = math.sqrt(mesh.areas[t] / 3.0 * float(gsq.sum()))
        bound = trace_constant(mesh, e, t, sharp=sharp) * h1
        if bound > 0:
            worst = max(worst, edge_norm / bound)
    return worst


# ---------------------------------------------------------------------------
# TAP-style verification checks for the CLI.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    value: float
    threshold: float

    def tap_line(self, index: int) -> str:
        status = "ok" if self.ok else "not ok"
        return (f"{status} {index} - {self.name} "
                f"(value={self.value:.6e}, threshold={self.threshold:.6e})")


def verification_checks(domain: Domain | str, level: int, beta: float = 100.0,
                        tol: float = DEFAULT_TOL, jobs: int = 1) -> list[CheckResult]:
    """Run the standard verification battery for one domain and level."""
    domain = Domain.parse(domain) if not isinstance(domain, Domain) else domain
    mesh = generate(domain, level)
    results: list[CheckResult] = []

    rng = np.random.default_rng(7)
    xs = rng.uniform(0.0, 1.0, size=1_000_000)
    ys = rng.uniform(0.0, 1.0, size=xs.size)
    resid = max(float(np.abs(ms.pde_residual(xs, ys)).max())
                for ms in MANUFACTURED.values())
    results.append(CheckResult("manufactured solutions solve the PDE", resid <= 1e-12,
                               resid, 1e-12))

    euler = mesh.num_vertices - mesh.num_edges + mesh.num_triangles
    results.append(CheckResult("Euler characteristic V - E + T = 1",
                               euler == 1, float(euler), 1.0))

    finer = generate(domain, level + 1)
    ratio = c1_of_mesh(mesh) / c1_of_mesh(finer)
    scaling_err = abs(ratio - math.sqrt(2.0))
    results.append(CheckResult("C1 refinement factor sqrt(2)",
                               scaling_err <= 1e-13, scaling_err, 1e-13))

    worst = trace_inequality_sample(mesh, num=1000, seed=11)
    results.append(CheckResult("trace inequality on 1000 random quadratics",
                               worst <= 1.0 + 1e-12, worst, 1.0))

    proj_ok, proj_worst = projection_bound_check(domain, levels=range(1, 5))
    results.append(CheckResult("projection error bound C0 h |g|_H1",
                               proj_ok, proj_worst, 1.0))

    ws = KappaWorkspace(mesh, tol=tol, jobs=jobs)
    params = YParams.for_mesh(mesh, beta)
    result = compute_kappa(mesh, params, workspace=ws, tol=tol)
    a_full = result.matrix_a.full()
    rel = 0.0
    for _ in range(5):
        f = rng.uniform(-1.0, 1.0, size=mesh.num_boundary_edges)
        quad = float(f @ a_full @ f)
        yv = y_value(mesh, f, params, workspace=ws) ** 2
        rel = max(rel, abs(quad - yv) / max(quad, yv))
    results.append(CheckResult("x^T A x matches Y^2 on random data",
                               rel <= 1e-8, rel, 1e-8))

    exact = MANUFACTURED["exp_x"]
    f = exact.neumann_data()
    solver = P1NeumannSolver(mesh, tol=tol)
    u_gal = solver.solve_load(quadrature_boundary_load(mesh, f))
    err_h1, err_b = true_error(mesh, u_gal, exact)
    fb = boundary_l2_norm(mesh, f)
    mh = math.hypot(c1_of_mesh(mesh), result.kappa)
    results.append(CheckResult("a priori H1 bound covers the true error",
                               err_h1 <= mh * fb, err_h1 / (mh * fb), 1.0))
    results.append(CheckResult("a priori boundary bound covers the true error",
                               err_b <= mh ** 2 * fb, err_b / (mh ** 2 * fb), 1.0))
    report = aposteriori_bound(mesh, f, beta, workspace=ws, tol=tol)
    u_proj = solver.solve(project_pi_gamma(mesh, f))
    err_h1_proj, _ = true_error(mesh, u_proj, exact)
    apost_ratio = max(err_h1, err_h1_proj) / report.bound_apost
    results.append(CheckResult("a posteriori bound covers the true error",
                               apost_ratio <= 1.0, apost_ratio, 1.0))

    base = generate(Domain.SQUARE, 1)
    f_ind = np.zeros(base.num_boundary_edges)
    f_ind[0] = 1.0
    gaps = [check_hypercircle_discrete(base, f_ind, ref_refinements=k, tol=tol).gap
            for k in (1, 2, 3)]
    monotone = gaps[0] > gaps[1] > gaps[2]
    results.append(CheckResult("hypercircle gap shrinks with reference refinement",
                               monotone, gaps[-1], gaps[0]))

    ortho = check_orthogonality_continuous()
    rel_kernel = ortho.kernel_residual / ortho.scale
    results.append(CheckResult("continuous hypercircle orthogonality kernel",
                               rel_kernel <= 1e-6, rel_kernel, 1e-6))
    return results


def projection_bound_check(domain: Domain | str, levels=range(1, 5),
                           ) -> tuple[bool, float]:
    """Check ||g - pi_h g||_0 <= C0 h |g|_H1 for g = sin(pi x) sin(pi y).

    Returns (all levels pass, worst ratio of error to bound).
    """
    g = lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y)

    def grad_sq(x, y):
        gx = np.pi * np.cos(np.pi * x) * np.sin(np.pi * y)
        gy = np.pi * np.sin(np.pi * x) * np.cos(np.pi * y)
        return gx ** 2 + gy ** 2

    worst = 0.0
    for level in levels:
        mesh = generate(domain, level)
        pts = quadrature.triangle_points(mesh, quadrature.TRI7_BARY)
        x, y = pts[:, :, 0], pts[:, :, 1]
        means = pi_h_of_function(mesh, g)
        gsq = float(np.dot(mesh.areas, (g(x, y) ** 2) @ quadrature.TRI7_WEIGHTS))
        proj_err = math.sqrt(max(gsq - float(np.dot(mesh.areas, means ** 2)), 0.0))
        seminorm = math.sqrt(float(np.dot(mesh.areas, grad_sq(x, y) @ quadrature.TRI7_WEIGHTS)))
        bound = mesh.h / bessel_j1_root() * seminorm
        worst = max(worst, proj_err / bound)
    return worst <= 1.0, worst
