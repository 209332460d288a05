import math

import numpy as np
import pytest

from hypervad.core import Modality
from hypervad.refine import VisualStats, fit_visual_stats, mahalanobis, neighbor_sets, refine_scores

from conftest import make_matrix
from oracles import inverse_2x2, knn_refine_oracle


def identity_stats(dim):
    return VisualStats(mean=np.zeros(dim), precision=np.eye(dim), shrinkage=0.0, sample_count=2)


class TestFitVisualStats:
    def test_full_shrinkage_is_scaled_identity(self):
        rows = np.eye(3)
        stats = fit_visual_stats(make_matrix(rows), shrinkage=1.0)
        sample = np.cov(rows, rowvar=False, ddof=1)
        scale = np.trace(sample) / 3.0
        assert np.allclose(stats.precision, np.eye(3) / scale, atol=1e-12)

    def test_singular_without_shrinkage_fails(self):
        rows = np.array([[1.0, 2.0], [1.0, 2.0]])
        with pytest.raises(ValueError, match="positive definite"):
            fit_visual_stats(make_matrix(rows), shrinkage=0.0)

    def test_hand_rows_match_closed_form_inverse(self):
        rows = np.array([[0.0, 0.0], [1.0, 0.5], [2.0, -1.0], [0.5, 2.5]])
        stats = fit_visual_stats(make_matrix(rows), shrinkage=0.0)
        centered = rows - rows.mean(axis=0)
        cov = centered.T @ centered / 3.0
        assert np.max(np.abs(stats.precision - inverse_2x2(cov))) < 1e-12

    def test_zero_shrinkage_recovers_textbook_estimator(self, rng):
        X = rng.normal(size=(200, 4)) @ rng.normal(size=(4, 4))
        stats = fit_visual_stats(make_matrix(X), shrinkage=0.0)
        textbook = np.cov(X, rowvar=False, ddof=1)
        assert np.max(np.abs(np.linalg.inv(stats.precision) - textbook)) < 1e-12

    def test_needs_two_rows(self):
        with pytest.raises(ValueError, match="at least 2"):
            fit_visual_stats(make_matrix(np.ones((1, 3))), shrinkage=0.5)

    def test_precision_symmetric(self, rng):
        stats = fit_visual_stats(make_matrix(rng.normal(size=(50, 6))), shrinkage=0.1)
        assert np.max(np.abs(stats.precision - stats.precision.T)) < 1e-10

    def test_rejects_bad_shrinkage(self, rng):
        with pytest.raises(ValueError, match="shrinkage"):
            fit_visual_stats(make_matrix(rng.normal(size=(5, 2))), shrinkage=1.5)


class TestMahalanobis:
    def test_zero_at_mean(self, rng):
        stats = fit_visual_stats(make_matrix(rng.normal(size=(20, 3))), shrinkage=0.1)
        assert mahalanobis(stats.mean, stats) == 0.0

    def test_identity_precision_is_euclidean(self, rng):
        stats = identity_stats(4)
        for _ in range(10):
            x = rng.normal(size=4)
            assert mahalanobis(x, stats) == pytest.approx(np.linalg.norm(x), abs=1e-12)

    def test_diagonal_closed_form(self):
        stats = VisualStats(
            mean=np.zeros(2), precision=np.diag([0.25, 1.0]), shrinkage=0.0, sample_count=4
        )
        # oracle: sqrt(2^2/4 + 1^2/1) = sqrt(2)
        assert mahalanobis(np.array([2.0, 1.0]), stats) == pytest.approx(math.sqrt(2), abs=1e-12)
        assert mahalanobis(np.array([2.0, 1.0]), stats) == pytest.approx(1.41421, abs=1e-5)

    def test_dim_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            mahalanobis(np.zeros(3), identity_stats(2))


class TestNeighborSets:
    def test_self_is_always_first(self, rng):
        m = make_matrix(rng.normal(size=(8, 3)), Modality.TEXT)
        sets = neighbor_sets(m, 4)
        assert np.array_equal(sets[:, 0], np.arange(8))

    def test_identical_embeddings_tie_break_deterministic(self):
        m = make_matrix(np.ones((5, 2)), Modality.TEXT)
        sets = neighbor_sets(m, 3)
        assert sets[0].tolist() == [0, 1, 2]
        assert sets[3].tolist() == [3, 0, 1]

    def test_k_bounds(self, rng):
        m = make_matrix(rng.normal(size=(4, 2)), Modality.TEXT)
        with pytest.raises(ValueError):
            neighbor_sets(m, 0)
        with pytest.raises(ValueError):
            neighbor_sets(m, 5)


class TestRefineScores:
    def test_k1_is_identity(self, rng):
        scores = rng.uniform(size=10)
        m = make_matrix(rng.normal(size=(10, 4)), Modality.TEXT)
        stats = fit_visual_stats(make_matrix(rng.normal(size=(10, 4))), shrinkage=0.1)
        assert np.array_equal(refine_scores(scores, m, stats, 1), scores)

    def test_identical_embeddings_equal_weights_mean(self):
        scores = np.array([0.1, 0.9, 0.5, 0.3])
        m = make_matrix(np.tile([1.0, 2.0], (4, 1)), Modality.TEXT)
        stats = identity_stats(2)
        out = refine_scores(scores, m, stats, 3)
        sets = neighbor_sets(m, 3)
        for t in range(4):
            assert out[t] == pytest.approx(scores[sets[t]].mean(), abs=1e-15)

    def test_matches_bruteforce_oracle(self, rng):
        for n, k in ((6, 3), (20, 5), (50, 7), (256, 9)):
            scores = rng.uniform(size=n)
            rows = rng.normal(size=(n, 3))
            stats = fit_visual_stats(make_matrix(rng.normal(size=(max(n, 4), 3))), shrinkage=0.1)
            out = refine_scores(scores, make_matrix(rows, Modality.TEXT), stats, k)
            oracle = knn_refine_oracle(scores, rows, stats.mean, stats.precision, k)
            assert np.max(np.abs(out - oracle)) == 0.0

    def test_range_preservation(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 30))
            k = int(rng.integers(1, n + 1))
            scores = rng.uniform(size=n)
            m = make_matrix(rng.normal(size=(n, 4)), Modality.TEXT)
            stats = fit_visual_stats(make_matrix(rng.normal(size=(n + 4, 4))), shrinkage=0.2)
            out = refine_scores(scores, m, stats, k)
            sets = neighbor_sets(m, k)
            for t in range(n):
                group = scores[sets[t]]
                assert group.min() - 1e-12 <= out[t] <= group.max() + 1e-12

    def test_weight_monotonicity(self):
        # pushing one neighbor further from the visual mean shrinks its share
        stats = identity_stats(2)
        base = np.array([[1.0, 0.0], [0.0, 1.0], [0.7, 0.7]])
        scores = np.array([0.0, 1.0, 0.0])

        def influence_of_row1(row1):
            rows = base.copy()
            rows[1] = row1
            out = refine_scores(scores, make_matrix(rows, Modality.TEXT), stats, 3)
            return out[0]  # only neighbor 1 has score 1, so a'_0 equals its weight share

        near = influence_of_row1(np.array([0.0, 1.0]))
        far = influence_of_row1(np.array([0.0, 5.0]))
        assert far < near

    def test_underflow_fallback_unweighted_mean(self, rng, caplog):
        # overflowing Mahalanobis distances give inf - inf = nan weights,
        # which must fall back to the unweighted neighborhood mean
        scores = np.array([0.2, 0.4, 0.9])
        rows = np.full((3, 2), 1e200)
        stats = identity_stats(2)
        with caplog.at_level("WARNING"), np.errstate(over="ignore", invalid="ignore"):
            out = refine_scores(scores, make_matrix(rows, Modality.TEXT), stats, 3)
        assert np.allclose(out, scores.mean(), atol=1e-12)
        assert any("underflow" in r.message for r in caplog.records)

    def test_score_length_mismatch(self, rng):
        m = make_matrix(rng.normal(size=(3, 2)), Modality.TEXT)
        with pytest.raises(ValueError, match="one score per"):
            refine_scores(np.array([0.5]), m, identity_stats(2), 1)
