import numpy as np
import pytest

from hypervad.core import SegmentRecord
from hypervad.evaluate import (
    UndefinedMetricError,
    auc_roc,
    average_precision,
    build_report,
    expand_to_frames,
)

from conftest import make_segments
from oracles import ap_sweep_oracle, auc_pairwise_oracle


class TestExpandToFrames:
    def test_single_window_single_segment(self):
        segs = [SegmentRecord(0, 0, 4, "x")]
        out = expand_to_frames([0.7], [0], segs)
        assert np.array_equal(out, np.full(5, 0.7))

    def test_two_windows_uneven_segments(self):
        segs = [SegmentRecord(0, 0, 2, "x"), SegmentRecord(1, 3, 4, "y")]
        out = expand_to_frames([0.2, 0.9], [0, 1], segs)
        assert out.tolist() == [0.2, 0.2, 0.2, 0.9, 0.9]

    def test_gap_raises_named_range(self):
        segs = [SegmentRecord(0, 0, 1, "x"), SegmentRecord(1, 4, 5, "y")]
        with pytest.raises(ValueError, match="frames 2..3"):
            expand_to_frames([0.2, 0.9], [0, 1], segs)

    def test_missing_window_raises(self):
        segs = make_segments(2)
        with pytest.raises(ValueError, match="missing window"):
            expand_to_frames([0.5], [0, 3], segs)

    def test_empty(self):
        assert expand_to_frames([], [], []).size == 0


class TestAucRoc:
    def test_perfect_ranking(self):
        assert auc_roc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0

    def test_inverted_ranking(self):
        assert auc_roc([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1]) == 0.0

    def test_all_ties_half(self):
        assert auc_roc([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0]) == 0.5

    def test_single_class_undefined(self):
        with pytest.raises(UndefinedMetricError):
            auc_roc([0.1, 0.2], [1, 1])

    def test_matches_pairwise_oracle_exactly(self, rng):
        for trial in range(30):
            n = int(rng.integers(5, 60))
            scores = rng.choice([0.1, 0.25, 0.5, 0.8], size=n) if trial % 2 else rng.uniform(size=n)
            labels = rng.integers(0, 2, size=n)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            assert auc_roc(scores, labels) == auc_pairwise_oracle(scores, labels)

    def test_monotone_transform_invariance(self, rng):
        scores = rng.uniform(size=40)
        labels = rng.integers(0, 2, size=40)
        labels[0], labels[1] = 0, 1
        base = auc_roc(scores, labels)
        assert auc_roc(np.exp(3 * scores), labels) == pytest.approx(base, abs=1e-12)
        assert auc_roc(scores**3 + 7, labels) == pytest.approx(base, abs=1e-12)

    def test_complement_identity_without_ties(self, rng):
        scores = rng.permutation(np.linspace(0.01, 0.99, 30))
        labels = rng.integers(0, 2, size=30)
        labels[0], labels[1] = 0, 1
        assert auc_roc(scores, labels) + auc_roc(-scores, labels) == pytest.approx(1.0, abs=1e-12)


class TestAveragePrecision:
    def test_perfect_ranking(self):
        assert average_precision([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0

    def test_single_positive_ranked_last(self):
        # direct formula: one threshold step reaches recall 1 at precision 1/4
        assert average_precision([0.9, 0.8, 0.7, 0.1], [0, 0, 0, 1]) == pytest.approx(0.25, abs=1e-12)

    def test_no_positives_undefined(self):
        with pytest.raises(UndefinedMetricError):
            average_precision([0.5, 0.6], [0, 0])

    def test_matches_sweep_oracle(self, rng):
        for trial in range(30):
            n = int(rng.integers(4, 50))
            scores = rng.choice([0.2, 0.4, 0.6, 0.9], size=n) if trial % 2 else rng.uniform(size=n)
            labels = rng.integers(0, 2, size=n)
            if labels.sum() == 0:
                labels[0] = 1
            assert average_precision(scores, labels) == pytest.approx(
                ap_sweep_oracle(scores, labels), abs=1e-12
            )

    def test_random_permutation_ap_near_prevalence(self):
        # statistical check: mean AP of randomly permuted scores approaches
        # the positive fraction (random-ranker AP carries a small positive
        # finite-sample bias, so n must be large enough for the 0.05 bound)
        rng = np.random.default_rng(7)
        n, n_pos = 200, 60
        labels = (np.arange(n) < n_pos).astype(int)
        prevalence = n_pos / n
        values = []
        for _ in range(1000):
            scores = rng.permutation(np.linspace(0.001, 0.999, n))
            values.append(average_precision(scores, labels))
        assert abs(float(np.mean(values)) - prevalence) < 0.05


class TestBuildReport:
    def test_defined_case(self):
        report = build_report([0.9, 0.1], [1, 0])
        assert report.defined
        assert report.auc_roc == 1.0
        assert report.average_precision == 1.0
        assert (report.frame_count, report.positive_count) == (2, 1)

    def test_single_class_flagged_not_defaulted(self):
        report = build_report([0.9, 0.1], [0, 0])
        assert not report.defined
        assert report.auc_roc is None and report.average_precision is None
        assert "class" in report.undefined_reason or "positive" in report.undefined_reason

    def test_empty_flagged(self):
        report = build_report([], [])
        assert not report.defined
        assert report.frame_count == 0

    def test_as_dict_round(self):
        d = build_report([0.9, 0.1], [1, 0]).as_dict()
        assert d["defined"] is True and d["auc_roc"] == 1.0
