"""Certified bound assembly: the a priori constants M_h, the a posteriori
bound, boundary-data projection, and the data-oscillation term.

Boundary integrals of general data use a fixed 5-point Gauss rule per edge
(exact through degree 9).  These touch only the data side of the bounds;
the constants kappa_h and C1(h) never depend on them.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .constants import ExplicitConstants
from .kappa import KappaResult, KappaWorkspace, YParams, boundary_norm, y_value
from .linalg import DEFAULT_TOL, NumericalError
from .mesh import Mesh
from .quadrature import EDGE_GAUSS5_NODES, EDGE_GAUSS5_WEIGHTS
from .rt0 import boundary_outward_signs

__all__ = [
    "BoundaryFunction",
    "BoundReport",
    "boundary_values",
    "project_pi_gamma",
    "boundary_l2_norm",
    "oscillation_norm",
    "quadrature_boundary_load",
    "apriori_bounds",
    "aposteriori_bound",
    "full_report",
]

_REPORT_FIELDS = ("domain", "level", "h", "beta", "kappa", "c1", "mh",
                  "osc", "y", "bound_h1", "bound_b", "true_err_h1",
                  "fb", "bound_apost", "true_err_b")


@dataclass(frozen=True)
class BoundaryFunction:
    """Boundary data evaluator f(x, y, nx, ny) with (nx, ny) the outward normal.

    The evaluator must be vectorized over point arrays.
    """

    name: str
    func: Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], np.ndarray]

    @classmethod
    def from_xy(cls, name: str, g: Callable[[np.ndarray, np.ndarray], np.ndarray]):
        return cls(name, lambda x, y, nx, ny: g(x, y))

    @classmethod
    def constant(cls, value: float, name: str | None = None):
        return cls(name or f"const_{value}",
                   lambda x, y, nx, ny: np.full_like(np.asarray(x, dtype=float), value))


def boundary_values(mesh: Mesh, f: BoundaryFunction) -> np.ndarray:
    """f at the Gauss points of every boundary edge, shape (B, 5)."""
    ends = mesh.edges[mesh.boundary_edges]
    a = mesh.vertices[ends[:, 0]]                       # (B, 2)
    d = mesh.vertices[ends[:, 1]] - a
    t = EDGE_GAUSS5_NODES
    x = a[:, None, 0] + np.outer(d[:, 0], t)
    y = a[:, None, 1] + np.outer(d[:, 1], t)
    lengths = mesh.edge_lengths[mesh.boundary_edges]
    signs = boundary_outward_signs(mesh).astype(float)
    nx = (signs * d[:, 1] / lengths)[:, None] + 0.0 * x
    ny = (-signs * d[:, 0] / lengths)[:, None] + 0.0 * y
    vals = np.asarray(f.func(x, y, nx, ny), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NumericalError(f"boundary function {f.name!r} is not finite on the boundary")
    return vals


def project_pi_gamma(mesh: Mesh, f: BoundaryFunction) -> np.ndarray:
    """Edgewise means of f: the L2 projection onto edgewise constants."""
    return boundary_values(mesh, f) @ EDGE_GAUSS5_WEIGHTS


def boundary_l2_norm(mesh: Mesh, f: BoundaryFunction) -> float:
    """||f||_b by edge quadrature."""
    vals = boundary_values(mesh, f)
    lengths = mesh.edge_lengths[mesh.boundary_edges]
    return float(np.sqrt(np.dot(lengths, (vals ** 2) @ EDGE_GAUSS5_WEIGHTS)))


def oscillation_norm(mesh: Mesh, f: BoundaryFunction) -> float:
    """||(I - pi_Gamma) f||_b: the edgewise-variance part of the data."""
    vals = boundary_values(mesh, f)
    lengths = mesh.edge_lengths[mesh.boundary_edges]
    second = (vals ** 2) @ EDGE_GAUSS5_WEIGHTS
    mean = vals @ EDGE_GAUSS5_WEIGHTS
    per_edge = lengths * (second - mean ** 2)
    if np.any(per_edge < -1e-14):
        bad = int(np.argmin(per_edge))
        raise NumericalError(
            f"negative oscillation radicand {per_edge[bad]!r} on boundary edge {bad}")
    return float(np.sqrt(np.clip(per_edge, 0.0, None).sum()))


def quadrature_boundary_load(mesh: Mesh, f: BoundaryFunction) -> np.ndarray:
    """Load vector of b(f, v) for general data, by edge quadrature.

    Verification-side: the certified chain only ever loads edgewise
    constants, which :func:`hypercircle.p1.assemble_boundary_load` handles
    exactly.
    """
    vals = boundary_values(mesh, f)
    lengths = mesh.edge_lengths[mesh.boundary_edges]
    t = EDGE_GAUSS5_NODES
    w = EDGE_GAUSS5_WEIGHTS
    first = lengths * (vals @ (w * (1.0 - t)))
    second = lengths * (vals @ (w * t))
    load = np.zeros(mesh.num_vertices)
    ends = mesh.edges[mesh.boundary_edges]
    np.add.at(load, ends[:, 0], first)
    np.add.at(load, ends[:, 1], second)
    return load


@dataclass
class BoundReport:
    """One certified-bound record; every intermediate quantity is kept.

    Serialized fields: domain, level, h, beta, kappa, c1, mh, osc, y,
    bound_h1, bound_b, true_err_h1 (nullable), plus the audit extras fb,
    bound_apost, true_err_b.
    """

    domain: str | None
    level: int | None
    h: float
    beta: float
    kappa: float | None = None
    c1: float | None = None
    mh: float | None = None
    osc: float | None = None
    y: float | None = None
    bound_h1: float | None = None
    bound_b: float | None = None
    true_err_h1: float | None = None
    fb: float | None = None
    bound_apost: float | None = None
    true_err_b: float | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: d[k] for k in _REPORT_FIELDS}

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @staticmethod
    def csv_header() -> str:
        return ",".join(_REPORT_FIELDS)

    def to_csv_row(self) -> str:
        d = self.to_dict()

        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, float):
                return repr(v)
            return str(v)

        return ",".join(fmt(d[k]) for k in _REPORT_FIELDS)


def apriori_bounds(kappa_result: KappaResult, consts: ExplicitConstants,
                   f: BoundaryFunction, mesh: Mesh) -> BoundReport:
    """A priori bounds M_h ||f||_b (H1) and M_h^2 ||f||_b (boundary L2)."""
    if consts.h != kappa_result.h or consts.num_boundary_edges != kappa_result.maximizer.size:
        raise ValueError("constants and kappa result come from different meshes")
    if mesh.h != kappa_result.h:
        raise ValueError("mesh and kappa result do not match")
    c1 = consts.c1
    mh = float(np.hypot(c1, kappa_result.kappa))
    fb = boundary_l2_norm(mesh, f)
    return BoundReport(
        domain=kappa_result.domain, level=kappa_result.level, h=kappa_result.h,
        beta=kappa_result.beta, kappa=kappa_result.kappa, c1=c1, mh=mh,
        fb=fb, bound_h1=mh * fb, bound_b=mh ** 2 * fb,
    )


def aposteriori_bound(mesh: Mesh, f: BoundaryFunction, beta: float,
                      workspace: KappaWorkspace | None = None,
                      tol: float = DEFAULT_TOL) -> BoundReport:
    """A posteriori bound C1(h) ||(I - pi_Gamma) f||_b + Y(f_h, p_h, beta).

    Solves the primal and equilibrated-flux problems for f_h = pi_Gamma f;
    the report itemizes the oscillation and Y components.
    """
    ws = workspace if workspace is not None else KappaWorkspace(mesh, tol=tol)
    consts = ExplicitConstants.for_mesh(mesh)
    params = YParams.for_mesh(mesh, beta)
    f_h = project_pi_gamma(mesh, f)
    y = y_value(mesh, f_h, params, workspace=ws)
    osc = oscillation_norm(mesh, f)
    return BoundReport(
        domain=mesh.domain.value if mesh.domain else None, level=mesh.level,
        h=mesh.h, beta=beta, c1=consts.c1, osc=osc, y=y,
        fb=boundary_l2_norm(mesh, f),
        bound_apost=consts.c1 * osc + y,
    )


def full_report(mesh: Mesh, f: BoundaryFunction, beta: float,
                workspace: KappaWorkspace | None = None,
                kappa_result: KappaResult | None = None,
                tol: float = DEFAULT_TOL, jobs: int = 1) -> BoundReport:
    """A priori and a posteriori bounds for one mesh and one datum."""
    ws = workspace if workspace is not None else KappaWorkspace(mesh, tol=tol, jobs=jobs)
    if kappa_result is None:
        from .kappa import compute_kappa
        kappa_result = compute_kappa(mesh, YParams.for_mesh(mesh, beta),
                                     workspace=ws, tol=tol)
    consts = ExplicitConstants.for_mesh(mesh)
    report = apriori_bounds(kappa_result, consts, f, mesh)
    post = aposteriori_bound(mesh, f, beta, workspace=ws, tol=tol)
    report.osc = post.osc
    report.y = post.y
    report.bound_apost = post.bound_apost
    return report
