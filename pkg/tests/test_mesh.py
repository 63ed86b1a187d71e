"""Mesh generation: counts, geometry, invariants, and the text format."""

import io
import math

import numpy as np
import pytest

from hypercircle.mesh import (DEFAULT_TRIANGLE_BUDGET, Domain, Mesh, MeshError,
                              _build, boundary_length, element_geometry,
                              generate, read_mesh_text, refine, write_mesh_text)

DOMAINS = [d.value for d in Domain]


class TestGenerate:
    def test_square_level1_counts(self):
        m = generate("square", 1)
        assert m.num_vertices == 25
        assert m.num_triangles == 32
        assert m.num_edges == 56
        assert m.num_boundary_edges == 16
        assert m.h == pytest.approx(math.sqrt(2) / 4, rel=1e-15)

    def test_equilateral_level1(self):
        m = generate("equi-tri", 1)
        assert m.num_triangles == 16
        np.testing.assert_allclose(m.areas, math.sqrt(3) / 64, rtol=1e-13)
        np.testing.assert_allclose(m.diameters, 0.25, rtol=1e-13)

    @pytest.mark.parametrize("domain", DOMAINS)
    @pytest.mark.parametrize("level", [1, 2, 3])
    def test_euler_characteristic(self, domain, level):
        m = generate(domain, level)
        assert m.num_vertices - m.num_edges + m.num_triangles == 1

    def test_rejects_bad_level(self):
        with pytest.raises(MeshError):
            generate("square", 0)
        with pytest.raises(MeshError):
            generate("square", -3)

    def test_rejects_budget_blowout(self):
        with pytest.raises(MeshError, match="budget"):
            generate("square", 30)
        level_ok = 1
        assert generate("square", level_ok, max_triangles=DEFAULT_TRIANGLE_BUDGET)

    def test_rejects_unknown_domain(self):
        with pytest.raises(MeshError, match="unknown domain"):
            generate("hexagon", 1)


class TestBoundaryLength:
    def test_square(self):
        assert boundary_length(generate("square", 2)) == pytest.approx(4.0, abs=1e-13)

    def test_lshape(self):
        # side-2 L-shape: outer sides 2+2, inner staircase 1+1+1+1
        assert boundary_length(generate("lshape", 1)) == pytest.approx(8.0, abs=1e-13)

    def test_right_triangle(self):
        expect = 2.0 + math.sqrt(2.0)
        assert boundary_length(generate("right-tri", 3)) == pytest.approx(expect, rel=1e-14)

    def test_equilateral(self):
        assert boundary_length(generate("equi-tri", 2)) == pytest.approx(3.0, rel=1e-14)


class TestElementGeometry:
    def test_reference_triangle(self):
        m = _build(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
                   np.array([[0, 1, 2]]))
        area, diam, lengths = element_geometry(m, 0)
        assert area == pytest.approx(0.5)
        assert diam == pytest.approx(math.sqrt(2.0))
        assert sorted(lengths) == pytest.approx([1.0, 1.0, math.sqrt(2.0)])

    def test_small_equilateral_area(self):
        m = generate("equi-tri", 1)
        area, _, _ = element_geometry(m, 0)
        assert area == pytest.approx(0.027063293868263706, rel=1e-12)

    def test_degenerate_triangle_rejected(self):
        with pytest.raises(MeshError, match="degenerate"):
            _build(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]),
                   np.array([[0, 1, 2]]))

    def test_bad_index(self):
        m = generate("square", 1)
        with pytest.raises(MeshError):
            element_geometry(m, 32)


class TestInvariants:
    @pytest.mark.parametrize("domain", DOMAINS)
    def test_orientation_positive(self, domain):
        m = generate(domain, 2)
        p = m.vertices[m.triangles]
        cross = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                 - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
        assert np.all(cross > 0)

    @pytest.mark.parametrize("domain", DOMAINS)
    def test_edge_adjacency(self, domain):
        m = generate(domain, 2)
        counts = (m.edge_tris >= 0).sum(axis=1)
        boundary = np.zeros(m.num_edges, dtype=bool)
        boundary[m.boundary_edges] = True
        assert np.all(counts[boundary] == 1)
        assert np.all(counts[~boundary] == 2)

    @pytest.mark.parametrize("domain", DOMAINS)
    def test_refinement_halves_edges_quarters_areas(self, domain):
        coarse = generate(domain, 2)
        fine = refine(coarse)
        assert fine.level == 3
        assert fine.h == pytest.approx(coarse.h / 2, rel=1e-14)
        assert fine.areas.max() == pytest.approx(coarse.areas.max() / 4, rel=1e-13)
        assert fine.areas.min() == pytest.approx(coarse.areas.min() / 4, rel=1e-13)
        assert fine.edge_lengths.max() == pytest.approx(coarse.edge_lengths.max() / 2,
                                                        rel=1e-14)

    @pytest.mark.parametrize("domain", DOMAINS)
    def test_all_triangles_congruent(self, domain):
        m = generate(domain, 2)
        triples = np.sort(m.edge_lengths[m.tri_edges], axis=1)
        assert np.allclose(triples, triples[0], rtol=1e-13)

    @pytest.mark.parametrize("domain", DOMAINS)
    def test_boundary_loop_closed_and_ccw(self, domain):
        m = generate(domain, 2)
        loop = m.boundary_edges
        assert len(set(loop.tolist())) == len(loop)
        # walk: consecutive edges share exactly one vertex; loop closes
        ends = m.edges[loop]
        vertex = (set(ends[0]) & set(ends[-1])).pop()
        pts = []
        for a, b in ends:
            pts.append(vertex)
            vertex = int(b) if int(a) == vertex else int(a)
        assert vertex == pts[0]
        poly = m.vertices[pts]
        area2 = (np.dot(poly[:, 0], np.roll(poly[:, 1], -1))
                 - np.dot(poly[:, 1], np.roll(poly[:, 0], -1)))
        assert area2 > 0
        assert 0.5 * area2 == pytest.approx(m.total_area, rel=1e-12)

    @pytest.mark.parametrize("domain", DOMAINS)
    def test_interior_edge_signs_opposite(self, domain):
        m = generate(domain, 1)
        sign_sum = np.zeros(m.num_edges, dtype=int)
        for t in range(m.num_triangles):
            for j in range(3):
                sign_sum[m.tri_edges[t, j]] += m.tri_edge_signs[t, j]
        interior = m.edge_tris[:, 1] >= 0
        assert np.all(sign_sum[interior] == 0)
        assert np.all(np.abs(sign_sum[~interior]) == 1)

    def test_arrays_read_only(self):
        m = generate("square", 1)
        with pytest.raises(ValueError):
            m.vertices[0, 0] = 7.0

    def test_refine_requires_tag(self):
        m = _build(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
                   np.array([[0, 1, 2]]))
        with pytest.raises(MeshError):
            refine(m)


class TestTextFormat:
    @pytest.mark.parametrize("domain", DOMAINS)
    def test_round_trip(self, domain):
        m = generate(domain, 1)
        buf = io.StringIO()
        write_mesh_text(m, buf)
        again = read_mesh_text(io.StringIO(buf.getvalue()))
        np.testing.assert_array_equal(m.triangles, again.triangles)
        np.testing.assert_array_equal(m.edges, again.edges)
        np.testing.assert_array_equal(m.boundary_edges, again.boundary_edges)
        np.testing.assert_array_equal(m.vertices, again.vertices)

    def test_write_is_deterministic(self):
        bufs = []
        for _ in range(2):
            buf = io.StringIO()
            write_mesh_text(generate("lshape", 1), buf)
            bufs.append(buf.getvalue())
        assert bufs[0] == bufs[1]

    def test_truncated_file_rejected(self):
        buf = io.StringIO()
        write_mesh_text(generate("square", 1), buf)
        text = buf.getvalue()
        with pytest.raises(MeshError):
            read_mesh_text(io.StringIO(text[: len(text) // 2]))
