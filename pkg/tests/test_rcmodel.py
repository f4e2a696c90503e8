import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rclab.lattice import Vertex, build_box, build_rect, dual_map
from rclab.rcmodel import (BoundaryCondition, Configuration, OracleSizeError,
                           Params, WeightBreakdown, cluster_count,
                           critical_point, dual_parameter, exact_distribution,
                           exact_event_probability,
                           heat_bath_open_probability,
                           induced_boundary_condition, log_weight)

Q_GRID = [1.0, 1.5, 2.0, 3.0, 4.0]


class TestCriticalPoint:
    def test_values(self):
        assert critical_point(1) == pytest.approx(0.5)
        assert critical_point(4) == pytest.approx(2 / 3)
        assert critical_point(2) == pytest.approx(math.sqrt(2) / (1 + math.sqrt(2)))

    def test_invalid(self):
        with pytest.raises(ValueError):
            critical_point(0.0)
        with pytest.raises(ValueError):
            critical_point(-1.0)


class TestDualParameter:
    def test_q1_complement(self):
        assert dual_parameter(0.8, 1.0) == pytest.approx(0.2)

    def test_q2_example(self):
        assert dual_parameter(0.5, 2.0) == pytest.approx(2 / 3)

    @pytest.mark.parametrize("q", Q_GRID)
    def test_self_dual_at_critical_point(self, q):
        pc = critical_point(q)
        assert dual_parameter(pc, q) == pytest.approx(pc, abs=1e-14)

    @given(st.floats(0.01, 0.99), st.floats(1.0, 4.0))
    @settings(max_examples=200, deadline=None)
    def test_defining_relation(self, p, q):
        ps = dual_parameter(p, q)
        assert 0 < ps < 1
        assert ps * p / ((1 - ps) * (1 - p)) == pytest.approx(q, rel=1e-10)

    def test_endpoints_rejected(self):
        for p in (0.0, 1.0):
            with pytest.raises(ValueError):
                dual_parameter(p, 2.0)


class TestParams:
    def test_bounds(self):
        with pytest.raises(ValueError):
            Params(0.5, 0.5)
        with pytest.raises(ValueError):
            Params(0.5, 4.5)
        with pytest.raises(ValueError):
            Params(-0.1, 2.0)


class TestBoundaryCondition:
    def test_free_wired(self, box1):
        free = BoundaryCondition.free(box1)
        wired = BoundaryCondition.wired(box1)
        assert free.is_free
        assert len(wired.classes) == 1 and len(wired.classes[0]) == 8

    def test_canonicalization(self, box1):
        a = BoundaryCondition(box1, [[(1, 1), (-1, -1)]])
        b = BoundaryCondition(box1, [[(-1, -1), (1, 1)]])
        assert a == b
        assert a.representative((1, 1)) == Vertex(-1, -1)

    def test_rejects_non_boundary(self, box1):
        with pytest.raises(ValueError):
            BoundaryCondition(box1, [[(0, 0), (1, 1)]])

    def test_rejects_overlap(self, box1):
        with pytest.raises(ValueError):
            BoundaryCondition(box1, [[(1, 1), (1, 0)], [(1, 0), (0, 1)]])


class TestClusterCount:
    def test_all_closed(self, box1):
        c = Configuration.all_closed(box1)
        assert cluster_count(c, BoundaryCondition.free(box1)) == 9
        assert cluster_count(c, BoundaryCondition.wired(box1)) == 2

    def test_all_open(self, box1):
        c = Configuration.all_open(box1)
        for bc in (BoundaryCondition.free(box1), BoundaryCondition.wired(box1)):
            assert cluster_count(c, bc) == 1

    def test_partial_wiring(self, box1):
        c = Configuration.all_closed(box1)
        bc = BoundaryCondition(box1, [[(1, 1), (-1, -1)], [(1, 0), (0, 1)]])
        # 9 isolated vertices, two pairs merged
        assert cluster_count(c, bc) == 7


class TestLogWeight:
    def test_single_edge_open(self, single_edge):
        p, q = 0.3, 2.0
        wb = log_weight(Configuration.all_open(single_edge), Params(p, q),
                        BoundaryCondition.free(single_edge))
        assert (wb.o, wb.c, wb.k) == (1, 0, 1)
        assert wb.log_weight == pytest.approx(math.log(p) + math.log(q))

    def test_single_edge_closed(self, single_edge):
        p, q = 0.3, 2.0
        wb = log_weight(Configuration.all_closed(single_edge), Params(p, q),
                        BoundaryCondition.free(single_edge))
        assert (wb.o, wb.c, wb.k) == (0, 1, 2)
        assert wb.log_weight == pytest.approx(math.log(1 - p) + 2 * math.log(q))

    def test_all_open_b1(self, box1):
        p, q = 0.41, 3.0
        wb = log_weight(Configuration.all_open(box1), Params(p, q),
                        BoundaryCondition.free(box1))
        assert wb.log_weight == pytest.approx(12 * math.log(p) + math.log(q))

    def test_counts_sum(self, box1, rng):
        cfg = Configuration.bernoulli(box1, 0.5, rng)
        wb = log_weight(cfg, Params(0.5, 2.0), BoundaryCondition.free(box1))
        assert wb.o + wb.c == box1.n_edges

    def test_degenerate_p(self, single_edge):
        bc = BoundaryCondition.free(single_edge)
        wb = log_weight(Configuration.all_open(single_edge), Params(0.0, 2.0), bc)
        assert wb.log_weight == -math.inf
        wb = log_weight(Configuration.all_closed(single_edge), Params(0.0, 2.0), bc)
        assert math.isfinite(wb.log_weight)


class TestExactDistribution:
    def test_single_edge_formula(self, single_edge):
        p, q = 0.37, 2.0
        table = exact_distribution(single_edge, Params(p, q),
                                   BoundaryCondition.free(single_edge))
        p_open = table.probability(lambda c: bool(c.bits[0]))
        assert p_open == pytest.approx(p / (p + (1 - p) * q), rel=1e-12)

    def test_single_edge_bernoulli(self, single_edge):
        p = 0.73
        table = exact_distribution(single_edge, Params(p, 1.0),
                                   BoundaryCondition.free(single_edge))
        assert table.probability(lambda c: bool(c.bits[0])) == pytest.approx(p)

    @pytest.mark.parametrize("q", Q_GRID)
    @pytest.mark.parametrize("kind", ["free", "wired"])
    def test_normalization(self, box1, q, kind):
        bc = getattr(BoundaryCondition, kind)(box1)
        table = exact_distribution(box1, Params(critical_point(q), q), bc)
        assert table.probabilities.sum() == pytest.approx(1.0, abs=1e-12)

    def test_weights_consistent(self, box1, rng):
        params = Params(0.44, 2.5)
        bc = BoundaryCondition.wired(box1)
        table = exact_distribution(box1, params, bc)
        for idx in rng.integers(0, table.n_configs, size=25):
            wb = log_weight(table.config(int(idx)), params, bc)
            expected = math.exp(wb.log_weight - table.log_z)
            assert table.probabilities[idx] == pytest.approx(expected, rel=1e-12)

    def test_q1_product_measure(self, box1):
        p = 0.31
        table = exact_distribution(box1, Params(p, 1.0),
                                   BoundaryCondition.free(box1))
        marg = table.edge_marginals()
        assert np.allclose(marg, p, atol=1e-12)
        # exact pairwise independence
        idx = np.arange(table.n_configs, dtype=np.uint64)
        for e, f in [(0, 1), (3, 7), (10, 11)]:
            be = ((idx >> np.uint64(e)) & np.uint64(1)).astype(float)
            bf = ((idx >> np.uint64(f)) & np.uint64(1)).astype(float)
            joint = float((be * bf) @ table.probabilities)
            assert joint == pytest.approx(p * p, abs=1e-12)

    def test_size_cap(self):
        with pytest.raises(OracleSizeError):
            exact_distribution(build_box(2), Params(0.5, 2.0),
                               BoundaryCondition.free(build_box(2)))


class TestExactEventProbability:
    def test_trivial_events(self, single_edge):
        params = Params(0.3, 2.0)
        bc = BoundaryCondition.free(single_edge)
        assert exact_event_probability(single_edge, params, bc,
                                       lambda c: True) == pytest.approx(1.0)
        assert exact_event_probability(single_edge, params, bc,
                                       lambda c: False) == 0.0

    def test_matches_distribution(self, single_edge):
        params = Params(0.62, 3.0)
        bc = BoundaryCondition.free(single_edge)
        table = exact_distribution(single_edge, params, bc)
        assert exact_event_probability(
            single_edge, params, bc, lambda c: bool(c.bits[0])
        ) == pytest.approx(table.probability(lambda c: bool(c.bits[0])))


class TestInducedBoundaryCondition:
    def test_all_closed_free(self, box1, box2):
        outer = Configuration.all_closed(box2)
        induced = induced_boundary_condition(
            outer, BoundaryCondition.free(box2), box1)
        assert induced.is_free

    def test_all_open_wired(self, box1, box2):
        outer = Configuration.all_open(box2)
        induced = induced_boundary_condition(
            outer, BoundaryCondition.free(box2), box1)
        assert induced == BoundaryCondition.wired(box1)

    def test_wired_outer_all_closed(self, box1, box2):
        # disjoint boundaries: exterior wiring alone reaches no B(1) vertex
        outer = Configuration.all_closed(box2)
        induced = induced_boundary_condition(
            outer, BoundaryCondition.wired(box2), box1)
        assert induced.is_free

    def test_single_exterior_path(self, box1, box2):
        # open a path (1,1)-(2,1) and (2,1)-(2,0)-(1,0)... connecting two
        # B(1)-boundary vertices strictly outside B(1)
        bits = np.zeros(box2.n_edges, dtype=np.uint8)
        for pair in [((1, 1), (2, 1)), ((2, 0), (2, 1)), ((1, 0), (2, 0))]:
            bits[box2.edge_id(*pair)] = 1
        outer = Configuration(box2, bits)
        induced = induced_boundary_condition(
            outer, BoundaryCondition.free(box2), box1)
        assert induced.classes == ((Vertex(1, 0), Vertex(1, 1)),)

    def test_non_nested_rejected(self, box2):
        stray = build_box(1, center=(10, 10))
        outer = Configuration.all_closed(box2)
        with pytest.raises(ValueError):
            induced_boundary_condition(outer, BoundaryCondition.free(box2), stray)


def exterior_conditional_table(box_in, box_out, params, bc_out, exterior_bits):
    """Conditional law on the inner box given the exterior configuration,
    computed directly from joint weights (independent of the domain Markov
    machinery)."""
    inner_ids = [box_out.edge_id(e.a, e.b) for e in box_in.edges]
    outer_ids = [i for i in range(box_out.n_edges) if i not in set(inner_ids)]
    weights = np.empty(1 << box_in.n_edges)
    bits = np.zeros(box_out.n_edges, dtype=np.uint8)
    for j, i in enumerate(outer_ids):
        bits[i] = exterior_bits[j]
    for idx in range(1 << box_in.n_edges):
        for j, i in enumerate(inner_ids):
            bits[i] = (idx >> j) & 1
        wb = log_weight(Configuration(box_out, bits), params, bc_out)
        weights[idx] = wb.log_weight
    weights -= weights.max()
    probs = np.exp(weights)
    return probs / probs.sum()


class TestDomainMarkov:
    @pytest.mark.parametrize("q", [1.0, 2.0, 4.0])
    @pytest.mark.parametrize("kind", ["free", "wired"])
    def test_conditional_equals_induced(self, box1, box2, q, kind, rng):
        params = Params(critical_point(q), q)
        bc_out = getattr(BoundaryCondition, kind)(box2)
        n_ext = box2.n_edges - box1.n_edges
        for trial in range(3):
            ext = (rng.random(n_ext) < 0.4).astype(np.uint8)
            cond = exterior_conditional_table(box1, box2, params, bc_out, ext)
            # build full outer config for the induced-bc computation
            inner_ids = {box2.edge_id(e.a, e.b) for e in box1.edges}
            outer_ids = [i for i in range(box2.n_edges) if i not in inner_ids]
            bits = np.zeros(box2.n_edges, dtype=np.uint8)
            for j, i in enumerate(outer_ids):
                bits[i] = ext[j]
            induced = induced_boundary_condition(
                Configuration(box2, bits), bc_out, box1)
            table = exact_distribution(box1, params, induced)
            assert np.allclose(cond, table.probabilities, rtol=1e-10, atol=1e-14)


class TestHeatBathConditional:
    def test_q1_always_p(self, box1, rng):
        params = Params(0.42, 1.0)
        bc = BoundaryCondition.free(box1)
        cfg = Configuration.bernoulli(box1, 0.5, rng)
        for e in range(0, box1.n_edges, 3):
            assert heat_bath_open_probability(cfg, e, params, bc) == \
                pytest.approx(0.42)

    def test_isolated_edge_value(self, single_edge):
        q = 2.0
        pc = critical_point(q)
        params = Params(pc, q)
        cfg = Configuration.all_closed(single_edge)
        got = heat_bath_open_probability(cfg, 0, params,
                                         BoundaryCondition.free(single_edge))
        assert got == pytest.approx(math.sqrt(2) - 1, rel=1e-12)

    def test_detour_gives_p(self, box1):
        # open the three other sides of the unit square containing edge
        # (0,0)-(1,0): endpoints connected without the edge itself
        bits = np.zeros(box1.n_edges, dtype=np.uint8)
        for pair in [((0, 0), (0, 1)), ((0, 1), (1, 1)), ((1, 0), (1, 1))]:
            bits[box1.edge_id(*pair)] = 1
        cfg = Configuration(box1, bits)
        e = box1.edge_id((0, 0), (1, 0))
        params = Params(0.37, 3.5)
        got = heat_bath_open_probability(cfg, e, params,
                                         BoundaryCondition.free(box1))
        assert got == pytest.approx(0.37)

    @pytest.mark.parametrize("q", [1.5, 2.0, 4.0])
    def test_matches_oracle_conditional(self, single_edge, box1, q, rng):
        """P(edge open | rest) from the exact table equals the heat-bath
        formula, including wired boundary wiring."""
        params = Params(critical_point(q), q)
        for dom in (single_edge, box1):
            for bc in (BoundaryCondition.free(dom), BoundaryCondition.wired(dom)):
                table = exact_distribution(dom, params, bc)
                probs = table.probabilities
                idx = np.arange(table.n_configs, dtype=np.uint64)
                for e in range(min(dom.n_edges, 5)):
                    bit = ((idx >> np.uint64(e)) & np.uint64(1)).astype(bool)
                    rest = (idx & ~np.uint64(1 << e)).astype(np.uint64)
                    cfg_idx = int(rng.integers(0, table.n_configs))
                    r = rest[cfg_idx]
                    sel = rest == r
                    p_open = probs[sel & bit].sum() / probs[sel].sum()
                    cfg = Configuration.from_index(dom, cfg_idx)
                    got = heat_bath_open_probability(cfg, e, params, bc)
                    assert got == pytest.approx(p_open, rel=1e-10)


class TestMonotonicityAndFKG:
    def increasing_events(self, box1):
        lr = lambda c: __import__("rclab.paths", fromlist=["x"]).has_horizontal_crossing(c, box1)
        return [
            ("edge0", lambda c: bool(c.bits[0])),
            ("edge5", lambda c: bool(c.bits[5])),
            ("crossing", lr),
            ("two edges", lambda c: bool(c.bits[2]) and bool(c.bits[9])),
        ]

    @pytest.mark.parametrize("q", Q_GRID)
    @pytest.mark.parametrize("kind", ["free", "wired"])
    def test_fkg_nonnegative_covariance(self, box1, q, kind):
        bc = getattr(BoundaryCondition, kind)(box1)
        table = exact_distribution(box1, Params(critical_point(q), q), bc)
        events = self.increasing_events(box1)
        inds = {name: table.indicator_vector(ev) for name, ev in events}
        for na, ia in inds.items():
            for nb, ib in inds.items():
                cov = (table.expectation(ia * ib)
                       - table.expectation(ia) * table.expectation(ib))
                assert cov >= -1e-12, (na, nb, q, kind)

    @pytest.mark.parametrize("q", Q_GRID)
    def test_wired_dominates_free(self, box1, q):
        params = Params(critical_point(q), q)
        t_free = exact_distribution(box1, params, BoundaryCondition.free(box1))
        t_wired = exact_distribution(box1, params, BoundaryCondition.wired(box1))
        for name, ev in self.increasing_events(box1):
            pf = t_free.expectation(t_free.indicator_vector(ev))
            pw = t_wired.expectation(t_wired.indicator_vector(ev))
            assert pw >= pf - 1e-12, (name, q)


class TestDualityQ1:
    def test_pushforward_is_dual_bernoulli(self, box1):
        """Under q=1, mapping omega to the dual configuration (dual edge
        open iff primal edge closed) sends Bernoulli(p) to Bernoulli(1-p) =
        Bernoulli(p*) on the dual edge set."""
        p = 0.3
        table = exact_distribution(box1, Params(p, 1.0),
                                   BoundaryCondition.free(box1))
        dm = dual_map(box1)
        # dual edge open frequencies under the pushforward
        idx = np.arange(table.n_configs, dtype=np.uint64)
        for e_id, e in enumerate(box1.edges):
            d = dm.to_dual(e)
            primal_closed = 1.0 - ((idx >> np.uint64(e_id)) & np.uint64(1))
            p_dual_open = float(primal_closed @ table.probabilities)
            assert p_dual_open == pytest.approx(1 - p, abs=1e-12)
        # joint factorization on a pair of dual edges
        b0 = 1.0 - ((idx >> np.uint64(0)) & np.uint64(1)).astype(float)
        b1 = 1.0 - ((idx >> np.uint64(1)) & np.uint64(1)).astype(float)
        joint = float((b0 * b1) @ table.probabilities)
        assert joint == pytest.approx((1 - p) ** 2, abs=1e-12)
