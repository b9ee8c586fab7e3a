import itertools
import logging

import numpy as np
import pytest

from cpinfer.detect import (
    BayesSBMResult,
    DetectConfig,
    DetectResult,
    GibbsError,
    bayes_sbm,
    detect,
    greedy_once,
)
from cpinfer.graph import Graph, LabelAssignment, misclassification
from cpinfer.metric import DegenerateError, t_sample
from cpinfer.models import ModelSpec, sample


def star(n=4):
    return Graph.from_edges(n, [(0, i) for i in range(1, n)])


def er_graph(n, p, seed):
    rng = np.random.default_rng(seed)
    A = np.triu(rng.random((n, n)) < p, 1)
    return Graph.from_dense(A | A.T)


def exhaustive_t(g):
    best = -np.inf
    for bits in itertools.product((0, 1), repeat=g.n):
        if 1 <= sum(bits) <= g.n - 2:
            best = max(best, t_sample(g, bits))
    return best


class TestGreedyOnce:
    def test_star_converges(self):
        labels, t, _ = greedy_once(star(), [1, 1, 0, 0], seed=0)
        assert labels.c.tolist() == [1, 0, 0, 0]
        assert t == pytest.approx(1.0)
        assert exhaustive_t(star()) == pytest.approx(1.0)

    def test_star_from_periphery_hub(self):
        # (0,1,1,1) is degenerate, so start one step away from it
        labels, t, _ = greedy_once(star(5), [0, 1, 1, 0, 0], seed=1)
        assert t == pytest.approx(exhaustive_t(star(5)))

    def test_fixed_point_single_pass(self):
        labels, t, passes = greedy_once(star(), [1, 0, 0, 0], seed=0)
        assert passes == 1
        assert labels.c.tolist() == [1, 0, 0, 0]

    def test_t_never_decreases(self):
        g = er_graph(60, 0.15, 3)
        rng = np.random.default_rng(3)
        init = (rng.random(60) < 0.5).astype(np.int8)
        _, t, _ = greedy_once(g, init, seed=3)
        assert t >= t_sample(g, init)
        assert t == pytest.approx(t_sample(g, greedy_once(g, init, seed=3)[0]))

    def test_fixed_k_exchange_keeps_k(self):
        g = er_graph(30, 0.3, 5)
        init = np.zeros(30, dtype=np.int8)
        init[:7] = 1
        labels, t, _ = greedy_once(g, init, seed=5, fixed_k=True)
        assert labels.k == 7
        assert t >= t_sample(g, init)

    def test_rejects_degenerate_init(self):
        with pytest.raises(DegenerateError):
            greedy_once(star(), [0, 0, 0, 0])


class TestDetect:
    def test_deterministic(self):
        g = er_graph(100, 0.1, 0)
        a = detect(g, DetectConfig(seed=42))
        b = detect(g, DetectConfig(seed=42))
        assert a.labels == b.labels and a.restart_t == b.restart_t

    def test_workers_do_not_change_result(self):
        g = er_graph(150, 0.08, 1)
        a = detect(g, DetectConfig(seed=7, restarts=6))
        b = detect(g, DetectConfig(seed=7, restarts=6, workers=3))
        assert a.labels == b.labels and a.restart_t == b.restart_t

    def test_best_restart_reported(self):
        g = er_graph(80, 0.1, 2)
        res = detect(g, DetectConfig(seed=1, restarts=5))
        assert res.t_value == max(res.restart_t)
        assert res.t_value == pytest.approx(t_sample(g, res.labels))

    def test_fixed_k(self):
        g = er_graph(6, 0.5, 4)
        for seed in range(5):
            assert detect(g, DetectConfig(seed=seed, fixed_k=2)).k == 2

    def test_fixed_k_out_of_range(self):
        with pytest.raises(DegenerateError):
            detect(er_graph(6, 0.5, 4), DetectConfig(fixed_k=5))

    def test_er_totality(self):
        g, _ = sample(ModelSpec.er(200, 0.5), seed=0)
        res = detect(g, DetectConfig(seed=0))
        assert np.isfinite(res.t_value)
        assert 1 <= res.k <= 198

    def test_matches_exhaustive_small(self):
        hits = 0
        for seed in range(10):
            g = er_graph(10, 0.4, seed)
            if g.m == 0 or g.m == g.n_pairs:
                hits += 1
                continue
            res = detect(g, DetectConfig(seed=seed, restarts=100))
            hits += abs(res.t_value - exhaustive_t(g)) <= 1e-12
        assert hits >= 9

    def test_recovers_planted_core(self):
        spec = ModelSpec.cpsbm(300, 30, 0.5, 0.2, 0.02)
        g, truth = sample(spec, seed=5)
        res = detect(g, DetectConfig(seed=5))
        assert misclassification(res.labels, truth.labels) < 0.03

    def test_json_roundtrip(self):
        res = detect(er_graph(40, 0.2, 0), DetectConfig(seed=0, restarts=3))
        back = DetectResult.from_json(res.to_json())
        assert back.labels == res.labels and back.t_value == res.t_value

    def test_bad_config(self):
        with pytest.raises(ValueError):
            DetectConfig(restarts=0)
        with pytest.raises(ValueError):
            DetectConfig(init_core_prob=1.0)


class TestBayesSBM:
    def test_strong_signal(self):
        spec = ModelSpec.cpsbm(500, 50, 0.2, 0.1, 0.01)
        g, truth = sample(spec, seed=0)
        res = bayes_sbm(g, iters=600, burn_in=200, seed=0)
        assert 1 - misclassification(res.labels, truth.labels) >= 0.9

    def test_probabilities_and_trace(self):
        g, _ = sample(ModelSpec.cpsbm(200, 20, 0.3, 0.1, 0.02), seed=1)
        res = bayes_sbm(g, iters=300, burn_in=100, seed=1)
        assert isinstance(res, BayesSBMResult)
        assert res.core_prob.min() >= 0 and res.core_prob.max() <= 1
        assert res.k_trace.shape == (300,)
        # mean core size after burn-in equals the sum of core frequencies
        assert res.core_prob.sum() == pytest.approx(res.k_trace[100:].mean())
        r = res.rates[res.rates[:, 0] > 0]
        assert ((r[:, 0] >= r[:, 1]) & (r[:, 1] >= r[:, 2])).all()

    def test_deterministic(self):
        g, _ = sample(ModelSpec.cpsbm(150, 15, 0.3, 0.1, 0.02), seed=2)
        a = bayes_sbm(g, iters=200, burn_in=50, seed=9)
        b = bayes_sbm(g, iters=200, burn_in=50, seed=9)
        assert a.labels == b.labels and (a.core_prob == b.core_prob).all()

    def test_zero_edges(self, caplog):
        with caplog.at_level(logging.WARNING):
            res = bayes_sbm(Graph.from_edges(10, []), seed=0)
        assert res.labels.k == 0
        assert "no edges" in caplog.text

    def test_ordering_failure_without_fallback(self):
        # a disassortative graph makes ordered rate draws essentially impossible
        g, _ = sample(ModelSpec.cpsbm(200, 100, 0.01, 0.3, 0.01), seed=3)
        with pytest.raises(GibbsError):
            bayes_sbm(g, iters=50, burn_in=10, seed=3, max_attempts=5, fallback_sort=False)

    def test_bad_burn_in(self):
        with pytest.raises(ValueError):
            bayes_sbm(star(), iters=10, burn_in=10)


def test_label_assignment_result_type():
    res = detect(er_graph(30, 0.3, 0), DetectConfig(seed=0, restarts=2))
    assert isinstance(res.labels, LabelAssignment)
