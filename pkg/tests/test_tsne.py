import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lmkbench.dataset import FeatureMatrix
from lmkbench.tsne import (
    TsneConfig,
    TsneError,
    conditional_affinities,
    kl_divergence,
    run_tsne,
    run_tsne_detailed,
    squared_distances,
    student_t_affinities,
    symmetrize,
)


def perplexity_of(probs):
    nz = [p for p in probs if p > 0]
    return 2.0 ** -sum(p * math.log2(p) for p in nz)


def clusters(n_per=20, dim=50, k=3, seed=7, spread=10.0):
    rng = np.random.default_rng(seed)
    centers = rng.normal(scale=spread, size=(k, dim))
    data = np.vstack([c + rng.normal(size=(n_per, dim)) for c in centers])
    ids = tuple(f"c{j}_{i:02d}" for j in range(k) for i in range(n_per))
    return FeatureMatrix(ids, data)


class TestConditional:
    def test_uniform_distances(self):
        sigma, p = conditional_affinities(np.full(5, 2.0), 5)
        assert np.allclose(p, 0.2) and math.isinf(sigma)

    def test_equal_distances_unreachable(self):
        with pytest.raises(TsneError, match="unreachable"):
            conditional_affinities(np.full(5, 2.0), 3)

    def test_single_neighbor(self):
        _, p = conditional_affinities([4.0], 30)
        assert p.tolist() == [1.0]

    def test_closer_neighbor_more_probable(self):
        _, p = conditional_affinities([1.0, 4.0, 9.0], 2.0)
        assert p[0] > p[1] > p[2]

    @settings(max_examples=40)
    @given(st.lists(st.floats(0.01, 100), min_size=3, max_size=40, unique=True), st.floats(1.5, 30))
    def test_hits_target_perplexity(self, row, perp):
        _, p = conditional_affinities(row, perp)
        target = min(perp, len(row))
        assert abs(perplexity_of(p) - target) <= 1e-3
        assert abs(p.sum() - 1.0) <= 1e-9

    def test_bad_inputs(self):
        with pytest.raises(TsneError):
            conditional_affinities([], 5)
        with pytest.raises(TsneError):
            conditional_affinities([1.0, -1.0], 1.5)


class TestAffinities:
    def test_symmetrize_hand_case(self):
        c = np.array([[0, 1 / 3, 2 / 3], [1 / 3, 0, 2 / 3], [0.5, 0.5, 0]])
        p = symmetrize(c)
        assert p[0, 1] == pytest.approx((1 / 3 + 1 / 3) / 6)
        assert p.sum() == pytest.approx(1.0) and np.array_equal(p, p.T)

    def test_two_points(self):
        p = symmetrize(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert p[0, 1] == 0.5

    def test_squared_distances(self):
        x = np.array([[0.0, 0.0], [3.0, 4.0]])
        assert squared_distances(x).tolist() == [[0, 25], [25, 0]]

    def test_q_sums_to_one(self):
        q, _ = student_t_affinities(np.random.default_rng(0).normal(size=(6, 2)))
        assert q.sum() == pytest.approx(1.0) and np.all(np.diag(q) == 0)


class TestKl:
    def test_zero_when_equal(self):
        y = np.random.default_rng(1).normal(size=(5, 2))
        q, _ = student_t_affinities(y)
        assert kl_divergence(q, y) == pytest.approx(0.0, abs=1e-12)

    def test_hand_sum(self):
        y = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [3.0, 3.0]])
        rng = np.random.default_rng(2)
        p = rng.uniform(size=(4, 4))
        p = p + p.T
        np.fill_diagonal(p, 0)
        p /= p.sum()
        kern = [[0.0 if i == j else 1 / (1 + sum((a - b) ** 2 for a, b in zip(y[i], y[j]))) for j in range(4)]
                for i in range(4)]
        z = sum(map(sum, kern))
        expected = sum(p[i][j] * math.log(p[i][j] / (kern[i][j] / z)) for i in range(4) for j in range(4) if i != j)
        assert kl_divergence(p, y) == pytest.approx(expected, rel=1e-12)

    @given(st.integers(0, 2**32 - 1))
    def test_non_negative(self, seed):
        rng = np.random.default_rng(seed)
        p = rng.uniform(size=(5, 5))
        p = p + p.T
        np.fill_diagonal(p, 0)
        assert kl_divergence(p / p.sum(), rng.normal(size=(5, 2))) >= 0


class TestRun:
    def test_two_points(self):
        fm = FeatureMatrix(("a", "b"), np.array([[0.0, 0.0], [1.0, 1.0]]))
        emb = run_tsne(fm, TsneConfig(perplexity=1, iterations=50))
        assert emb.ids == ("a", "b") and emb.coords.shape == (2, 2)

    def test_perplexity_must_be_below_n(self):
        with pytest.raises(TsneError):
            run_tsne(clusters(n_per=3, k=1), TsneConfig(perplexity=5))

    def test_clusters_separate(self):
        fm = clusters()
        res = run_tsne_detailed(fm, TsneConfig(perplexity=15, iterations=500, seed=7))
        assert res.final_kl < res.initial_kl
        y = res.embedding.coords
        labels = np.array([i.split("_")[0] for i in res.embedding.ids])
        d = np.sqrt(squared_distances(y))
        same = labels[:, None] == labels[None, :]
        np.fill_diagonal(same, False)
        diff = labels[:, None] != labels[None, :]
        assert d[same].mean() < d[diff].mean()

    def test_deterministic_and_permutation_consistent(self):
        fm = clusters(n_per=8, dim=10)
        cfg = TsneConfig(perplexity=5, iterations=120, seed=3)
        a = run_tsne(fm, cfg)
        b = run_tsne(fm, cfg)
        assert a.coords.tobytes() == b.coords.tobytes()
        perm = np.random.default_rng(0).permutation(len(fm.ids))
        shuffled = FeatureMatrix(tuple(fm.ids[i] for i in perm), fm.data[perm])
        c = run_tsne(shuffled, cfg)
        assert c.ids == a.ids and c.coords.tobytes() == a.coords.tobytes()

    def test_seed_changes_layout(self):
        fm = clusters(n_per=5, dim=4)
        a = run_tsne(fm, TsneConfig(perplexity=3, iterations=30, seed=1))
        b = run_tsne(fm, TsneConfig(perplexity=3, iterations=30, seed=2))
        assert not np.array_equal(a.coords, b.coords)
