import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpinfer.graph import Graph, LabelAssignment
from cpinfer.metric import (
    INFEASIBLE,
    DegenerateError,
    SwapState,
    periphery_edges,
    t_sample,
)


def star(n=4):
    return Graph.from_edges(n, [(0, i) for i in range(1, n)])


def er_graph(n, p, seed):
    rng = np.random.default_rng(seed)
    A = np.triu(rng.random((n, n)) < p, 1)
    return Graph.from_dense(A | A.T)


def t_direct(g, c):
    """Pearson correlation of the upper triangles of A and Delta, by double loop."""
    A = g.to_dense()
    a, d = [], []
    for i in range(g.n):
        for j in range(i + 1, g.n):
            a.append(A[i, j])
            d.append(c[i] + c[j] - c[i] * c[j])
    return np.corrcoef(a, d)[0, 1]


def random_labels(rng, n, k):
    c = np.zeros(n, dtype=np.int8)
    c[rng.choice(n, k, replace=False)] = 1
    return c


class TestSampleMetric:
    def test_star_hub_core(self):
        assert t_sample(star(), [1, 0, 0, 0]) == pytest.approx(1.0, abs=1e-12)

    def test_matches_pearson(self):
        rng = np.random.default_rng(5)
        g = er_graph(50, 0.2, 5)
        c = random_labels(rng, 50, 10)
        assert t_sample(g, c) == pytest.approx(t_direct(g, c), abs=1e-12)

    def test_two_hubs_on_star(self):
        c = [1, 1, 0, 0]
        assert t_sample(star(), c) == pytest.approx(t_direct(star(), c), abs=1e-12)

    def test_symmetric_in_node_order(self):
        rng = np.random.default_rng(2)
        g = er_graph(40, 0.15, 2)
        c = random_labels(rng, 40, 8)
        perm = rng.permutation(40)
        A = g.to_dense()[np.ix_(perm, perm)]
        assert t_sample(Graph.from_dense(A), c[perm]) == pytest.approx(t_sample(g, c), abs=1e-12)

    @pytest.mark.parametrize("c", [[0, 0, 0, 0], [1, 1, 1, 1], [0, 1, 1, 1]])
    def test_degenerate_labels(self, c):
        # k = n - 1 makes every pair touch the core
        with pytest.raises(DegenerateError):
            t_sample(star(), c)

    def test_degenerate_graphs(self):
        with pytest.raises(DegenerateError):
            t_sample(Graph.from_edges(4, []), [1, 0, 0, 0])
        complete = Graph.from_edges(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])
        with pytest.raises(DegenerateError):
            t_sample(complete, [1, 0, 0, 0])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            t_sample(star(), [1, 0, 0])


class TestSwapState:
    def test_star_counts(self):
        s = SwapState(star(), [1, 0, 0, 0])
        assert (s.m_pp, s.k, s.n1) == (0, 1, 3)

    def test_triangle_counts(self):
        # the triangle is complete, so T itself is undefined; the counts are not
        c = LabelAssignment(np.array([1, 0, 0]))
        n, k = 3, c.k
        assert n * (n - 1) // 2 - (n - k) * (n - k - 1) // 2 == 2
        assert periphery_edges(Graph.from_edges(3, [(0, 1), (0, 2), (1, 2)]), c) == 1

    def test_infeasible_toggle(self):
        s = SwapState(star(), [1, 0, 0, 0])
        assert s.swap_delta(0) == INFEASIBLE
        with pytest.raises(DegenerateError):
            s.swap_apply(0)

    def test_delta_equals_recompute(self):
        s = SwapState(star(), [1, 1, 0, 0])
        assert s.swap_delta(1) == pytest.approx(t_sample(star(), [1, 0, 0, 0]), abs=1e-12)
        assert s.swap_delta(1) == pytest.approx(1.0)

    def test_invariants_under_random_swaps(self):
        rng = np.random.default_rng(11)
        g = er_graph(200, 0.05, 11)
        s = SwapState(g, random_labels(rng, 200, 30))
        for u in rng.integers(0, 200, size=300):
            if s.swap_delta(u) == INFEASIBLE:
                continue
            expect = s.swap_delta(u)
            s.swap_apply(u)
            labels = s.labels()
            assert s.t == pytest.approx(expect, abs=1e-12)
            assert s.k == labels.k
            assert s.m_pp == periphery_edges(g, labels)
            assert s.t == pytest.approx(t_sample(g, labels), abs=1e-10)

    def test_involution(self):
        rng = np.random.default_rng(4)
        g = er_graph(50, 0.1, 4)
        s = SwapState(g, random_labels(rng, 50, 10))
        t0, c0 = s.t, s.c.copy()
        s.swap_apply(7).swap_apply(7)
        assert s.t == t0
        assert (s.c == c0).all()

    def test_sequence_matches_reinit(self):
        rng = np.random.default_rng(8)
        g = er_graph(80, 0.1, 8)
        s = SwapState(g, random_labels(rng, 80, 20))
        for u in rng.integers(0, 80, size=100):
            if s.swap_delta(u) != INFEASIBLE:
                s.swap_apply(u)
        fresh = SwapState(g, s.labels())
        assert (fresh.peri_nbrs == s.peri_nbrs).all()
        assert (fresh.m_pp, fresh.k, fresh.t) == (s.m_pp, s.k, s.t)

    def test_isolated_node_only_moves_k(self):
        g = Graph.from_edges(6, [(0, 1), (0, 2), (1, 2), (3, 4)])
        s = SwapState(g, [1, 0, 0, 0, 0, 0])
        m_pp, n1 = s.m_pp, s.n1
        s.swap_apply(5)
        assert s.m_pp == m_pp and s.k == 2 and s.n1 > n1


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(5, 25),
    p=st.floats(0.1, 0.6),
    seed=st.integers(0, 2**32 - 1),
    moves=st.lists(st.integers(0, 24), min_size=1, max_size=30),
)
def test_swap_matches_full_recompute(n, p, seed, moves):
    g = er_graph(n, p, seed)
    if g.m == 0 or g.m == g.n_pairs:
        return
    rng = np.random.default_rng(seed)
    s = SwapState(g, random_labels(rng, n, max(1, n // 3)))
    for u in moves:
        u %= n
        d = s.swap_delta(u)
        if d == INFEASIBLE:
            continue
        s.swap_apply(u)
        assert abs(s.t - t_sample(g, s.labels())) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(n=st.integers(4, 20), seed=st.integers(0, 2**32 - 1))
def test_t_bounded_and_matches_pearson(n, seed):
    g = er_graph(n, 0.3, seed)
    if g.m == 0 or g.m == g.n_pairs:
        return
    rng = np.random.default_rng(seed)
    c = random_labels(rng, n, int(rng.integers(1, n - 1)))
    t = t_sample(g, c)
    assert -1 - 1e-12 <= t <= 1 + 1e-12
    assert t == pytest.approx(t_direct(g, c), abs=1e-10)
