import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rclab.lattice import (InvalidGeometryError, Vertex, boundary_vertices,
                           build_annulus, build_box, build_rect, dual_map,
                           make_edge)


def brute_force_box_edges(n, center=(0, 0)):
    """Independent enumeration: all nearest-neighbor pairs in the square."""
    cx, cy = center
    verts = [(x, y) for x in range(cx - n, cx + n + 1)
             for y in range(cy - n, cy + n + 1)]
    vs = set(verts)
    edges = set()
    for (x, y) in verts:
        for (dx, dy) in ((1, 0), (0, 1)):
            if (x + dx, y + dy) in vs:
                edges.add(((x, y), (x + dx, y + dy)))
    return verts, edges


class TestBox:
    def test_degenerate(self):
        b = build_box(0)
        assert b.n_vertices == 1
        assert b.n_edges == 0

    def test_b1_counts(self):
        b = build_box(1)
        assert (b.n_vertices, b.n_edges) == (9, 12)

    def test_b2_counts_match_enumeration(self):
        b = build_box(2)
        verts, edges = brute_force_box_edges(2)
        assert b.n_vertices == len(verts) == 25
        assert b.n_edges == len(edges) == 40
        assert {(tuple(e.a), tuple(e.b)) for e in b.edges} == edges

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 9, 17, 33, 64])
    def test_edge_count_formula(self, n):
        assert build_box(n).n_edges == 4 * n * (2 * n + 1)

    def test_offcenter(self):
        b = build_box(2, center=(5, -3))
        verts, edges = brute_force_box_edges(2, (5, -3))
        assert {(tuple(e.a), tuple(e.b)) for e in b.edges} == edges

    def test_edge_order_is_sorted(self):
        b = build_box(3)
        assert list(b.edges) == sorted(b.edges)

    def test_negative_radius(self):
        with pytest.raises(InvalidGeometryError):
            build_box(-1)


class TestBoundary:
    @pytest.mark.parametrize("n,count", [(0, 1), (1, 8), (2, 16), (5, 40)])
    def test_counts(self, n, count):
        assert len(boundary_vertices(build_box(n))) == count

    def test_cyclic_adjacent(self):
        ring = boundary_vertices(build_box(3))
        for a, b in zip(ring, ring[1:] + ring[:1]):
            assert abs(a.x - b.x) + abs(a.y - b.y) == 1

    def test_all_at_sup_norm(self):
        for v in boundary_vertices(build_box(4)):
            assert max(abs(v.x), abs(v.y)) == 4


class TestAnnulus:
    def test_degenerate_inner(self):
        a = build_annulus((0, 0), 0, 1)
        assert a.n_edges == build_box(1).n_edges == 12
        assert a.inner_boundary == (Vertex(0, 0),)

    def test_ann_1_2_edges(self):
        # B(2) has 40 edges; the four spokes incident to the origin are
        # interior to B(1) and drop out
        a = build_annulus((0, 0), 1, 2)
        assert a.n_edges == 36
        origin = Vertex(0, 0)
        assert all(origin not in e for e in a.edges)

    def test_ring_edges_belong(self):
        a = build_annulus((0, 0), 1, 2)
        assert a.has_edge((1, 0), (1, 1))  # inner ring edge kept

    def test_boundary_counts_2_4(self):
        a = build_annulus((0, 0), 2, 4)
        assert len(a.inner_boundary) == 16
        assert len(a.outer_boundary) == 32

    def test_invalid(self):
        with pytest.raises(InvalidGeometryError):
            build_annulus((0, 0), 2, 2)
        with pytest.raises(InvalidGeometryError):
            build_annulus((0, 0), 3, 2)

    @given(st.integers(0, 4), st.integers(1, 3))
    @settings(max_examples=20, deadline=None)
    def test_partition_of_outer_box(self, n1, dn):
        n2 = n1 + dn
        ann = build_annulus((0, 0), n1, n2)
        box = build_box(n2)
        interior = {(e.a, e.b) for e in box.edges
                    if max(abs(e.a.x), abs(e.a.y)) < n1
                    or max(abs(e.b.x), abs(e.b.y)) < n1}
        ann_set = {(e.a, e.b) for e in ann.edges}
        assert ann_set | interior == {(e.a, e.b) for e in box.edges}
        assert not (ann_set & interior)

    def test_faces_classified(self):
        a = build_annulus((0, 0), 1, 3)
        for (fx, fy) in a.faces:
            d = max(abs(2 * fx + 1), abs(2 * fy + 1))
            assert 3 <= d <= 5


class TestDualMap:
    def test_example_edge(self, box1):
        dm = dual_map(box1)
        e = make_edge((0, 0), (1, 0))
        d = dm.to_dual(e)
        # (1/2, -1/2) - (1/2, 1/2) in doubled coordinates
        assert (tuple(d.a), tuple(d.b)) == ((1, -1), (1, 1))

    def test_involution_and_midpoints(self, box2):
        dm = dual_map(box2)
        for e in box2.edges:
            d = dm.to_dual(e)
            assert dm.to_primal(d) == e
            # shared midpoint: dual endpoints are stored doubled, so their
            # sum is 4x the true midpoint while the primal sum is 2x
            assert (d.a.x + d.b.x, d.a.y + d.b.y) == \
                (2 * (e.a.x + e.b.x), 2 * (e.a.y + e.b.y))

    def test_bijection_size(self, box2):
        dm = dual_map(box2)
        assert len(dm) == box2.n_edges
        duals = {dm.to_dual(e) for e in box2.edges}
        assert len(duals) == box2.n_edges

    def test_empty_domain_rejected(self):
        with pytest.raises(InvalidGeometryError):
            dual_map(build_box(0))


class TestRect:
    def test_grid_ids(self):
        r = build_rect(0, 3, 0, 2)
        assert r.h_edge_grid.shape == (3, 3)
        assert r.v_edge_grid.shape == (2, 4)
        for row in range(3):
            for col in range(3):
                e = r.edges[r.h_edge_grid[row, col]]
                assert e.a == Vertex(col, row) and e.b == Vertex(col + 1, row)

    def test_domains_immutable(self):
        r = build_rect(0, 2, 0, 2)
        with pytest.raises(ValueError):
            r.edge_a[0] = 5
