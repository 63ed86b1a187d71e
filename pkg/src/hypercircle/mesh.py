"""Structured triangulations of the four benchmark polygons.

Supported domains: the unit square, the isosceles right triangle with unit
legs, the equilateral triangle with unit side, and the L-shape
(0,2)^2 minus [1,2]^2.  Level L uses grid spacing 2^-(L+1) on every
domain, so uniform refinement halves every edge length and quarters every
area.

Vertex coordinates come from integer grid indices divided by a power of
two, which is exact in binary floating point; the only irrational factor
(sqrt(3)/2 for the equilateral domain) is applied once per coordinate.
Meshes are immutable after construction: all arrays are marked read-only.

Conventions fixed here and relied on downstream:
  - triangles are counterclockwise;
  - edges store (low vertex index, high vertex index); the global edge
    normal is the tangent low->high rotated clockwise, i.e. n = (ty, -tx);
  - local edge j of a triangle is the edge opposite local vertex j;
  - tri_edge_signs[t, j] = +1 when the global normal of that edge points
    out of triangle t;
  - boundary_edges lists edge indices in counterclockwise loop order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "Domain",
    "Mesh",
    "MeshError",
    "generate",
    "refine",
    "boundary_length",
    "element_geometry",
    "write_mesh_text",
    "read_mesh_text",
    "DEFAULT_TRIANGLE_BUDGET",
]

DEFAULT_TRIANGLE_BUDGET = 2_000_000


class MeshError(ValueError):
    """Invalid mesh input or violated construction invariant."""


class Domain(str, Enum):
    """The four benchmark polygons."""

    SQUARE = "square"
    RIGHT_TRIANGLE = "right-tri"
    EQUILATERAL = "equi-tri"
    LSHAPE = "lshape"

    @classmethod
    def parse(cls, name: str) -> "Domain":
        try:
            return cls(name)
        except ValueError:
            valid = ", ".join(d.value for d in cls)
            raise MeshError(f"unknown domain {name!r} (expected one of: {valid})") from None


@dataclass(frozen=True)
class Mesh:
    """Conforming triangulation with per-element and per-edge geometry.

    Arrays are read-only; a mesh is safe to share across threads.
    """

    vertices: np.ndarray        # (V, 2) float64
    triangles: np.ndarray       # (T, 3) int, counterclockwise
    edges: np.ndarray           # (E, 2) int, low vertex index first
    edge_tris: np.ndarray       # (E, 2) int, adjacent triangles, -1 if none
    boundary_edges: np.ndarray  # (B,) int, edge indices in loop order
    tri_edges: np.ndarray       # (T, 3) int, local edge j opposite vertex j
    tri_edge_signs: np.ndarray  # (T, 3) int8, +1 if global normal exits the triangle
    areas: np.ndarray           # (T,) element areas |K|
    diameters: np.ndarray       # (T,) longest edge h_K per element
    edge_lengths: np.ndarray    # (E,)
    h: float                    # max over elements of h_K
    domain: Domain | None = None
    level: int | None = None

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def num_boundary_edges(self) -> int:
        return self.boundary_edges.shape[0]

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())

    def boundary_edge_lengths(self) -> np.ndarray:
        """Lengths of the boundary edges, in boundary loop order."""
        return self.edge_lengths[self.boundary_edges]

    def boundary_adjacent_triangles(self) -> np.ndarray:
        """The unique triangle adjacent to each boundary edge, loop order."""
        return self.edge_tris[self.boundary_edges, 0]


def generate(domain: Domain | str, level: int,
             max_triangles: int = DEFAULT_TRIANGLE_BUDGET) -> Mesh:
    """Build the level-`level` uniform mesh of `domain`.

    Level L means grid spacing 2^-(L+1): the level-1 square mesh has
    h = sqrt(2)/4, the level-1 equilateral mesh has h = 1/4.
    """
    domain = Domain.parse(domain) if not isinstance(domain, Domain) else domain
    if level < 1:
        raise MeshError(f"level must be >= 1, got {level}")
    # cells per side at spacing 2^-(level+1); the L-shape spans two units
    n = 2 ** (level + 2) if domain is Domain.LSHAPE else 2 ** (level + 1)
    if 2 * n * n > max_triangles:
        raise MeshError(
            f"level {level} needs up to {2 * n * n} triangles, "
            f"exceeding the budget of {max_triangles}")

    if domain is Domain.SQUARE:
        verts, tris = _grid_square(n)
    elif domain is Domain.RIGHT_TRIANGLE:
        verts, tris = _grid_right_triangle(n)
    elif domain is Domain.EQUILATERAL:
        verts, tris = _grid_equilateral(n)
    elif domain is Domain.LSHAPE:
        verts, tris = _grid_lshape(n)
    else:  # pragma: no cover
        raise MeshError(f"unhandled domain {domain}")
    return _build(verts, tris, domain=domain, level=level)


def refine(mesh: Mesh) -> Mesh:
    """Return the next uniform refinement (a new mesh; `mesh` is untouched)."""
    if mesh.domain is None or mesh.level is None:
        raise MeshError("mesh has no generator tag; only generated meshes can be refined")
    return generate(mesh.domain, mesh.level + 1)


def boundary_length(mesh: Mesh) -> float:
    """Total length of the boundary (the perimeter of the domain)."""
    return float(mesh.edge_lengths[mesh.boundary_edges].sum())


def element_geometry(mesh: Mesh, t: int) -> tuple[float, float, np.ndarray]:
    """(|K|, h_K, local edge lengths) for triangle `t`.

    Local edge j is opposite local vertex j.
    """
    if not 0 <= t < mesh.num_triangles:
        raise MeshError(f"triangle index {t} out of range [0, {mesh.num_triangles})")
    lengths = mesh.edge_lengths[mesh.tri_edges[t]]
    return float(mesh.areas[t]), float(mesh.diameters[t]), lengths


# ---------------------------------------------------------------------------
# Domain generators: integer grid index pairs -> (vertices, triangles)
# ---------------------------------------------------------------------------

def _grid_square(n: int) -> tuple[np.ndarray, np.ndarray]:
    verts = np.array([(i / n, j / n) for j in range(n + 1) for i in range(n + 1)])
    vid = lambda i, j: j * (n + 1) + i
    tris = []
    for j in range(n):
        for i in range(n):
            # split lower-left -> upper-right
            tris.append((vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)))
            tris.append((vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)))
    return verts, np.array(tris)


def _grid_right_triangle(n: int) -> tuple[np.ndarray, np.ndarray]:
    index = {}
    verts = []
    for j in range(n + 1):
        for i in range(n + 1 - j):
            index[(i, j)] = len(verts)
            verts.append((i / n, j / n))
    tris = []
    for j in range(n):
        for i in range(n - j):
            if i + j <= n - 2:
                tris.append((index[(i, j)], index[(i + 1, j)], index[(i + 1, j + 1)]))
                tris.append((index[(i, j)], index[(i + 1, j + 1)], index[(i, j + 1)]))
            else:
                # cell cut by the hypotenuse: keep the lower-left half
                tris.append((index[(i, j)], index[(i + 1, j)], index[(i, j + 1)]))
    return np.array(verts), np.array(tris)


def _grid_equilateral(n: int) -> tuple[np.ndarray, np.ndarray]:
    half_sqrt3 = math.sqrt(3.0) / 2.0
    index = {}
    verts = []
    for j in range(n + 1):
        for i in range(n + 1 - j):
            index[(i, j)] = len(verts)
            verts.append(((2 * i + j) / (2 * n), j * half_sqrt3 / n))
    tris = []
    for j in range(n):
        for i in range(n - j):
            tris.append((index[(i, j)], index[(i + 1, j)], index[(i, j + 1)]))
            if i + j <= n - 2:
                tris.append((index[(i + 1, j)], index[(i + 1, j + 1)], index[(i, j + 1)]))
    return np.array(verts), np.array(tris)


def _grid_lshape(n: int) -> tuple[np.ndarray, np.ndarray]:
    n2 = n // 2
    index = {}
    verts = []
    for j in range(n + 1):
        for i in range(n + 1):
            if i <= n2 or j <= n2:
                index[(i, j)] = len(verts)
                verts.append((2 * i / n, 2 * j / n))
    tris = []
    for j in range(n):
        for i in range(n):
            if i >= n2 and j >= n2:
                continue
            tris.append((index[(i, j)], index[(i + 1, j)], index[(i + 1, j + 1)]))
            tris.append((index[(i, j)], index[(i + 1, j + 1)], index[(i, j + 1)]))
    return np.array(verts), np.array(tris)


# ---------------------------------------------------------------------------
# Shared construction / validation
# ---------------------------------------------------------------------------

def _build(vertices: np.ndarray, triangles: np.ndarray,
           domain: Domain | None = None, level: int | None = None) -> Mesh:
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64)
    nv = vertices.shape[0]
    nt = triangles.shape[0]

    p = vertices[triangles]                       # (T, 3, 2)
    signed = 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                    - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
    flip = signed < 0
    if np.any(flip):
        triangles = triangles.copy()
        triangles[flip, 1], triangles[flip, 2] = triangles[flip, 2], triangles[flip, 1]
        p = vertices[triangles]
        signed = np.abs(signed)
    if np.any(signed <= 0):
        bad = int(np.argmin(signed))
        raise MeshError(f"triangle {bad} is degenerate (zero area)")
    areas = signed

    edge_index: dict[tuple[int, int], int] = {}
    edge_tris: list[list[int]] = []
    tri_edges = np.empty((nt, 3), dtype=np.int64)
    tri_edge_signs = np.empty((nt, 3), dtype=np.int8)
    for t in range(nt):
        v = triangles[t]
        for j in range(3):
            a, b = int(v[(j + 1) % 3]), int(v[(j + 2) % 3])
            key = (a, b) if a < b else (b, a)
            e = edge_index.get(key)
            if e is None:
                e = len(edge_index)
                edge_index[key] = e
                edge_tris.append([t])
            else:
                if len(edge_tris[e]) == 2:
                    raise MeshError(f"edge {key} adjacent to more than two triangles")
                edge_tris[e].append(t)
            tri_edges[t, j] = e
            # CCW traversal order (a, b) matching stored (low, high) order
            # means the clockwise-rotated global normal points outward.
            tri_edge_signs[t, j] = 1 if (a, b) == key else -1

    ne = len(edge_index)
    edges = np.array(list(edge_index.keys()), dtype=np.int64)
    adj = np.full((ne, 2), -1, dtype=np.int64)
    for e, ts in enumerate(edge_tris):
        adj[e, : len(ts)] = ts

    if nv - ne + nt != 1:
        raise MeshError(
            f"triangulation is not simply connected: V-E+T = {nv - ne + nt}, expected 1")

    boundary = _order_boundary_loop(vertices, edges, adj)

    dv = vertices[edges[:, 1]] - vertices[edges[:, 0]]
    edge_lengths = np.hypot(dv[:, 0], dv[:, 1])
    diameters = edge_lengths[tri_edges].max(axis=1)

    mesh = Mesh(
        vertices=vertices, triangles=triangles, edges=edges, edge_tris=adj,
        boundary_edges=boundary, tri_edges=tri_edges, tri_edge_signs=tri_edge_signs,
        areas=areas, diameters=diameters, edge_lengths=edge_lengths,
        h=float(diameters.max()), domain=domain, level=level,
    )
    for arr in (mesh.vertices, mesh.triangles, mesh.edges, mesh.edge_tris,
                mesh.boundary_edges, mesh.tri_edges, mesh.tri_edge_signs,
                mesh.areas, mesh.diameters, mesh.edge_lengths):
        arr.setflags(write=False)
    return mesh


def _order_boundary_loop(vertices: np.ndarray, edges: np.ndarray,
                         adj: np.ndarray) -> np.ndarray:
    boundary = np.flatnonzero(adj[:, 1] < 0)
    if boundary.size == 0:
        raise MeshError("mesh has no boundary edges")
    incident: dict[int, list[int]] = {}
    for e in boundary:
        for v in edges[e]:
            incident.setdefault(int(v), []).append(int(e))
    if any(len(es) != 2 for es in incident.values()):
        raise MeshError("boundary is not a simple closed loop")

    start = min(incident)
    loop = []
    used = set()
    vertex = start
    while True:
        nxt = [e for e in incident[vertex] if e not in used]
        if not nxt:
            break
        e = min(nxt)
        loop.append(e)
        used.add(e)
        a, b = edges[e]
        vertex = int(b) if int(a) == vertex else int(a)
        if vertex == start:
            break
    if len(loop) != boundary.size:
        raise MeshError("boundary edges do not form a single closed loop")

    # orient the traversal counterclockwise
    pts = []
    vertex = start
    for e in loop:
        pts.append(vertex)
        a, b = edges[e]
        vertex = int(b) if int(a) == vertex else int(a)
    poly = vertices[pts]
    area2 = np.dot(poly[:, 0], np.roll(poly[:, 1], -1)) - np.dot(poly[:, 1], np.roll(poly[:, 0], -1))
    if area2 < 0:
        loop.reverse()
    return np.array(loop, dtype=np.int64)


# ---------------------------------------------------------------------------
# Text format
#   line 1: V T E B
#   V lines "x y", T lines "i j k", E lines "a b t1 t2" (t2 = -1 boundary),
#   B lines of boundary-edge indices in loop order.
# ---------------------------------------------------------------------------

def write_mesh_text(mesh: Mesh, stream) -> None:
    """Write the whitespace-separated text form of `mesh` to a text stream."""
    w = stream.write
    w(f"{mesh.num_vertices} {mesh.num_triangles} {mesh.num_edges} {mesh.num_boundary_edges}\n")
    for x, y in mesh.vertices:
        w(f"{float(x)!r} {float(y)!r}\n")
    for i, j, k in mesh.triangles:
        w(f"{i} {j} {k}\n")
    for (a, b), (t1, t2) in zip(mesh.edges, mesh.edge_tris):
        w(f"{a} {b} {t1} {t2}\n")
    for e in mesh.boundary_edges:
        w(f"{e}\n")


def read_mesh_text(stream) -> Mesh:
    """Read a mesh written by :func:`write_mesh_text`.

    Connectivity is rebuilt from vertices and triangles; the file's edge and
    boundary tables are checked for consistency with the rebuilt ones.
    """
    tokens = stream.read().split()
    pos = 0

    def take(k):
        nonlocal pos
        out = tokens[pos:pos + k]
        if len(out) != k:
            raise MeshError("truncated mesh file")
        pos += k
        return out

    nv, nt, ne, nb = (int(s) for s in take(4))
    verts = np.array([float(s) for s in take(2 * nv)]).reshape(nv, 2)
    tris = np.array([int(s) for s in take(3 * nt)]).reshape(nt, 3)
    take(4 * ne)  # edge table is derivable; skip but require presence
    take(nb)
    mesh = _build(verts, tris)
    if mesh.num_edges != ne or mesh.num_boundary_edges != nb:
        raise MeshError(
            f"mesh file header inconsistent with connectivity: "
            f"E={mesh.num_edges} (file {ne}), B={mesh.num_boundary_edges} (file {nb})")
    return mesh
