from collections import deque

import numpy as np
import pytest

from rclab.lattice import Vertex, build_box, build_rect, make_edge
from rclab.rcmodel import Configuration
from rclab.paths import (below_region, chemical_distance, crossing_rectangle,
                         dist_to_boundary, dual_territory_bottom,
                         duality_dichotomy_holds, has_dual_vertical_crossing,
                         has_horizontal_crossing, horizontal_crossing,
                         lowest_crossing, radial_chemical_distance,
                         three_arm_point_count)

# ---------------------------------------------------------------------------
# brute-force reference machinery


def all_crossings(config, box):
    """Every simple open path that starts on the left column and ends on
    the right column (recorded at each right-column visit; the below-order
    minimum may pass through the right column and continue)."""
    left = set(box.left_column())
    right = set(box.right_column())
    out = []

    def extend(path, visited):
        v = path[-1]
        if v in right:
            out.append(tuple(path))
        vid = box.vertex_index[v]
        for t in range(box.adj_indptr[vid], box.adj_indptr[vid + 1]):
            if not config.bits[box.adj_edge[t]]:
                continue
            w = box.vertices[box.adj_vertex[t]]
            if w in visited:
                continue
            visited.add(w)
            path.append(w)
            extend(path, visited)
            path.pop()
            visited.remove(w)

    for s in left:
        extend([s], {s})
    return out


def below_face_set(config, box, path_vertices):
    edges = [make_edge(path_vertices[i], path_vertices[i + 1])
             for i in range(len(path_vertices) - 1)]
    on_path = {box.edge_id(e.a, e.b) for e in edges}
    W, H = box.x1 - box.x0, box.y1 - box.y0
    reached = set()
    dq = deque()
    for c in range(W):
        reached.add((0, c))
        dq.append((0, c))
    while dq:
        r, c = dq.popleft()
        if r <= H and (r + 1, c) not in reached and \
                int(box.h_edge_grid[r, c]) not in on_path:
            reached.add((r + 1, c))
            dq.append((r + 1, c))
        if r >= 1 and (r - 1, c) not in reached and \
                int(box.h_edge_grid[r - 1, c]) not in on_path:
            reached.add((r - 1, c))
            dq.append((r - 1, c))
        if 1 <= r <= H:
            if c + 1 <= W - 1 and (r, c + 1) not in reached and \
                    int(box.v_edge_grid[r - 1, c + 1]) not in on_path:
                reached.add((r, c + 1))
                dq.append((r, c + 1))
            if c - 1 >= 0 and (r, c - 1) not in reached and \
                    int(box.v_edge_grid[r - 1, c]) not in on_path:
                reached.add((r, c - 1))
                dq.append((r, c - 1))
    return frozenset(f for f in reached if 1 <= f[0] <= H)


def edge_set(box, path_vertices):
    return frozenset(box.edge_id(*make_edge(path_vertices[i], path_vertices[i + 1])[:2])
                     for i in range(len(path_vertices) - 1))


def brute_force_lowest(config, box):
    """(edge set, below set) of the canonical below-order minimum, or None."""
    crossings = all_crossings(config, box)
    if not crossings:
        return None
    bsets = [below_face_set(config, box, p) for p in crossings]
    minimal = [i for i, bs in enumerate(bsets)
               if all(bs <= other for other in bsets)]
    assert minimal, "below-order has no minimum"
    esets = [edge_set(box, crossings[i]) for i in minimal]
    canon = [es for es in esets if all(es <= other for other in esets)]
    assert canon, "no inclusion-minimal representative among ties"
    return canon[0], bsets[minimal[0]]


def check_box_exhaustive(box):
    for idx in range(1 << box.n_edges):
        cfg = Configuration.from_index(box, idx)
        bf = brute_force_lowest(cfg, box)
        assert duality_dichotomy_holds(cfg, box), idx
        assert has_horizontal_crossing(cfg, box) == (bf is not None), idx
        lc = lowest_crossing(cfg, box)
        assert (lc is not None) == (bf is not None), idx
        if bf is None:
            continue
        crossings = all_crossings(cfg, box)
        assert chemical_distance(cfg, box) == min(len(p) - 1 for p in crossings)
        lc_edges = frozenset(box.edge_id(e.a, e.b) for e in lc.path)
        assert lc_edges == bf[0], idx
        assert lc.below_area == len(bf[1]), idx


# ---------------------------------------------------------------------------


class TestCrossingBasics:
    def test_all_open(self):
        box = build_box(3)
        cfg = Configuration.all_open(box)
        assert has_horizontal_crossing(cfg, box)
        assert chemical_distance(cfg, box) == 6

    def test_all_closed(self):
        box = build_box(3)
        cfg = Configuration.all_closed(box)
        assert not has_horizontal_crossing(cfg, box)
        assert chemical_distance(cfg, box) is None
        assert lowest_crossing(cfg, box) is None

    def test_bottom_row_only(self):
        box = build_box(2)
        bits = np.zeros(box.n_edges, dtype=np.uint8)
        for x in range(-2, 2):
            bits[box.edge_id((x, -2), (x + 1, -2))] = 1
        cfg = Configuration(box, bits)
        assert has_horizontal_crossing(cfg, box)
        assert chemical_distance(cfg, box) == 4

    def test_serpentine_path(self):
        box = build_box(2)
        bits = np.zeros(box.n_edges, dtype=np.uint8)
        pts = [(-2, -2), (-1, -2), (-1, 0), (0, 0), (0, -2), (1, -2), (1, 1), (2, 1)]
        path = []
        for a, b in zip(pts, pts[1:]):
            (ax, ay), (bx, by) = a, b
            step = (np.sign(bx - ax), np.sign(by - ay))
            cur = a
            while cur != b:
                nxt = (cur[0] + step[0], cur[1] + step[1])
                path.append((cur, nxt))
                cur = nxt
        for pair in path:
            bits[box.edge_id(*pair)] = 1
        cfg = Configuration(box, bits)
        assert chemical_distance(cfg, box) == len(path)
        res = horizontal_crossing(cfg, box)
        assert res.exists and res.shortest_length == len(path)
        assert len(res.shortest_path) == len(path)

    def test_crossing_result_path_valid(self, rng):
        box = build_box(3)
        for _ in range(20):
            cfg = Configuration.bernoulli(box, 0.55, rng)
            res = horizontal_crossing(cfg, box)
            assert res.exists == has_horizontal_crossing(cfg, box)
            if res.exists:
                assert res.shortest_length == chemical_distance(cfg, box)
                assert len(res.shortest_path) == res.shortest_length
                for e in res.shortest_path:
                    assert cfg.bits[box.edge_id(e.a, e.b)]


class TestRadial:
    def test_all_open(self):
        box = build_box(3)
        assert radial_chemical_distance(Configuration.all_open(box), box) == 3

    def test_isolated_origin(self):
        box = build_box(2)
        assert radial_chemical_distance(Configuration.all_closed(box), box) is None

    def test_single_ray(self):
        box = build_box(3)
        bits = np.zeros(box.n_edges, dtype=np.uint8)
        for x in range(3):
            bits[box.edge_id((x, 0), (x + 1, 0))] = 1
        cfg = Configuration(box, bits)
        assert radial_chemical_distance(cfg, box) == 3

    def test_detour_ray(self):
        box = build_box(2)
        bits = np.zeros(box.n_edges, dtype=np.uint8)
        pts = [(0, 0), (0, 1), (1, 1), (1, 0), (2, 0)]
        for a, b in zip(pts, pts[1:]):
            bits[box.edge_id(a, b)] = 1
        assert radial_chemical_distance(Configuration(box, bits), box) == 4


class TestLowestCrossingExhaustive:
    def test_12_edge_box(self):
        check_box_exhaustive(build_rect(0, 2, 0, 2))

    def test_wide_box(self):
        check_box_exhaustive(build_rect(0, 3, 0, 1))

    def test_tall_box(self):
        check_box_exhaustive(build_rect(0, 1, 0, 3))


class TestLowestCrossingFixtures:
    def test_all_open_bottom_row(self):
        box = build_box(2)
        lc = lowest_crossing(Configuration.all_open(box), box)
        assert lc.length == 4
        assert all(e.a.y == -2 and e.b.y == -2 for e in lc.path)
        assert lc.below_area == 0

    def test_detour_around_gap(self):
        box = build_box(2)
        bits = np.ones(box.n_edges, dtype=np.uint8)
        bits[box.edge_id((0, -2), (1, -2))] = 0
        lc = lowest_crossing(Configuration(box, bits), box)
        assert lc.length == 4 + 3 - 1  # up, across, down around the gap
        assert lc.below_area == 1

    def test_lower_of_two_crossings(self):
        box = build_box(2)
        bits = np.zeros(box.n_edges, dtype=np.uint8)
        for y in (-1, 1):
            for x in range(-2, 2):
                bits[box.edge_id((x, y), (x + 1, y))] = 1
        lc = lowest_crossing(Configuration(box, bits), box)
        assert all(e.a.y == -1 for e in lc.path)

    def test_random_agreement_4x4(self, rng):
        box = build_rect(0, 3, 0, 3)
        for _ in range(400):
            cfg = Configuration.bernoulli(box, 0.5, rng)
            bf = brute_force_lowest(cfg, box)
            lc = lowest_crossing(cfg, box)
            assert (lc is not None) == (bf is not None)
            if lc is not None:
                assert frozenset(box.edge_id(e.a, e.b) for e in lc.path) == bf[0]
                assert lc.below_area == len(bf[1])

    def test_shortest_never_longer(self, rng):
        box = build_box(4)
        for _ in range(100):
            cfg = Configuration.bernoulli(box, 0.5, rng)
            lc = lowest_crossing(cfg, box)
            if lc is not None:
                assert chemical_distance(cfg, box) <= lc.length


class TestDichotomy:
    def test_exhaustive_small_rect(self):
        rect = crossing_rectangle(2)  # [0,3] x [0,2]: 17 edges
        n = 1 << rect.n_edges
        crossing_total = 0
        for idx in range(n):
            cfg = Configuration.from_index(rect, idx)
            assert duality_dichotomy_holds(cfg, rect)
            if has_horizontal_crossing(cfg, rect):
                crossing_total += 1
        # self-dual geometry at p = 1/2, q = 1: exactly half the configs cross
        assert crossing_total * 2 == n

    def test_sampled_large(self, rng):
        rect = crossing_rectangle(10)
        for _ in range(200):
            cfg = Configuration.bernoulli(rect, 0.5, rng)
            assert duality_dichotomy_holds(cfg, rect)

    def test_both_events_detected(self):
        rect = crossing_rectangle(3)
        assert has_horizontal_crossing(Configuration.all_open(rect), rect)
        assert not has_dual_vertical_crossing(Configuration.all_open(rect), rect)
        assert has_dual_vertical_crossing(Configuration.all_closed(rect), rect)


class TestThreeArmPoints:
    def test_cap_zero_counts_everything(self):
        box = build_box(3)
        cfg = Configuration.all_open(box)
        lc = lowest_crossing(cfg, box)
        assert three_arm_point_count(cfg, box, lc, 0) == lc.length

    def test_all_open_bottom_row_vacuous(self):
        # bottom-row edges sit on the boundary: distance 0, vacuous pass
        box = build_box(2)
        cfg = Configuration.all_open(box)
        lc = lowest_crossing(cfg, box)
        assert three_arm_point_count(cfg, box, lc, 10) == lc.length

    def test_interior_crossing_full_pass(self):
        # middle-row crossing of B(3): every edge has the three-arm
        # property out to its boundary distance (theorem-backed)
        box = build_box(3)
        bits = np.zeros(box.n_edges, dtype=np.uint8)
        for x in range(-3, 3):
            bits[box.edge_id((x, 0), (x + 1, 0))] = 1
        cfg = Configuration(box, bits)
        lc = lowest_crossing(cfg, box)
        assert lc is not None and lc.length == 6
        assert three_arm_point_count(cfg, box, lc, 100) == 6

    @pytest.mark.parametrize("n,q_p", [(6, 0.5)])
    def test_sampled_full_pass(self, n, q_p, rng):
        box = build_box(n)
        passes = total = 0
        for _ in range(25):
            cfg = Configuration.bernoulli(box, q_p, rng)
            lc = lowest_crossing(cfg, box)
            if lc is None:
                continue
            total += lc.length
            passes += three_arm_point_count(cfg, box, lc, 10**9)
        assert total > 0
        assert passes == total


class TestBelowRegion:
    def test_counts_real_faces_only(self):
        box = build_box(2)
        cfg = Configuration.all_open(box)
        lc = lowest_crossing(cfg, box)
        # bottom-row crossing: nothing strictly below
        assert below_region(cfg, box, lc.path) == 0

    def test_dist_to_boundary(self):
        box = build_box(3)
        assert dist_to_boundary(box, (0, 0)) == 3
        assert dist_to_boundary(box, (3, 1)) == 0
        assert dist_to_boundary(box, (-2, 1)) == 1


class TestDualTerritory:
    def test_dual_row_shapes(self):
        box = build_rect(0, 4, 0, 3)
        t = dual_territory_bottom(Configuration.all_closed(box), box)
        assert t.shape == (5, 4)
        assert t.all()  # all closed: territory floods everything

    def test_all_open_stays_in_fringe(self):
        box = build_rect(0, 4, 0, 3)
        t = dual_territory_bottom(Configuration.all_open(box), box)
        assert t[0].all() and not t[1:].any()
