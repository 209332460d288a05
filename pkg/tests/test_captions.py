import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypervad.captions import (
    CaptionSet,
    build_summaries,
    build_summary_texts,
    clean_caption_indices,
    clean_captions,
    identity_captions,
    window_slices,
)
from hypervad.core import Modality

from conftest import make_matrix
from oracles import cosine_argmax_oracle


class TestCleanCaptions:
    def test_identity_on_orthonormal_self(self):
        eye = np.eye(4)
        idx, reports = clean_caption_indices(
            make_matrix(eye, Modality.VISUAL), make_matrix(eye, Modality.TEXT)
        )
        assert np.array_equal(idx, np.arange(4))
        assert reports == ()

    def test_hand_built_similarity_targets(self):
        # caption rows are the standard basis, frame row t points at its target
        targets = [2, 2, 0, 3]
        captions = np.eye(4)
        frames = captions[targets]
        idx, _ = clean_caption_indices(
            make_matrix(frames, Modality.VISUAL), make_matrix(captions, Modality.TEXT)
        )
        assert idx.tolist() == targets
        assert idx.tolist() == cosine_argmax_oracle(frames, captions).tolist()

    def test_exact_tie_breaks_to_lower_index(self):
        captions = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])
        frames = np.array([[2.0, 0.0], [3.0, 0.0], [0.0, 1.0], [0.0, 2.0]])
        idx, _ = clean_caption_indices(
            make_matrix(frames, Modality.VISUAL), make_matrix(captions, Modality.TEXT)
        )
        # captions 0 and 1 are bitwise identical for rows 0 and 1
        assert idx[0] == 0 and idx[1] == 0

    def test_zero_norm_rows_reported_and_never_selected(self):
        captions = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        frames = np.array([[1.0, 0.0], [0.0, 0.0], [0.3, 0.9]])
        idx, reports = clean_caption_indices(
            make_matrix(frames, Modality.VISUAL), make_matrix(captions, Modality.TEXT)
        )
        assert ("text", 0) in reports and ("visual", 1) in reports
        assert idx[0] == 1  # caption 0 has zero norm, so next best wins
        assert idx[1] == 0  # all -inf collapses to the lowest index
        assert idx.tolist() == cosine_argmax_oracle(frames, captions).tolist()

    def test_count_mismatch(self):
        with pytest.raises(ValueError, match="count mismatch"):
            clean_caption_indices(
                make_matrix(np.ones((3, 2)), Modality.VISUAL),
                make_matrix(np.ones((2, 2)), Modality.TEXT),
            )

    @settings(max_examples=40, deadline=None)
    @given(n=st.integers(1, 64), dim=st.integers(1, 8), seed=st.integers(0, 2**31))
    def test_matches_bruteforce_oracle(self, n, dim, seed):
        rng = np.random.default_rng(seed)
        frames = rng.normal(size=(n, dim))
        captions = rng.normal(size=(n, dim))
        if n >= 2:  # engineered exact tie
            captions[1] = captions[0]
        idx, _ = clean_caption_indices(
            make_matrix(frames, Modality.VISUAL), make_matrix(captions, Modality.TEXT)
        )
        assert idx.tolist() == cosine_argmax_oracle(frames, captions).tolist()

    def test_idempotent_at_index_level(self, rng):
        frames = rng.normal(size=(20, 6))
        captions = rng.normal(size=(20, 6))
        a, _ = clean_caption_indices(
            make_matrix(frames, Modality.VISUAL), make_matrix(captions, Modality.TEXT)
        )
        b, _ = clean_caption_indices(
            make_matrix(frames, Modality.VISUAL), make_matrix(captions, Modality.TEXT)
        )
        assert np.array_equal(a, b)

    def test_scale_invariance_of_indices(self, rng):
        frames = rng.normal(size=(30, 5))
        captions = rng.normal(size=(30, 5))
        base, _ = clean_caption_indices(
            make_matrix(frames, Modality.VISUAL), make_matrix(captions, Modality.TEXT)
        )
        scaled_f = frames.copy()
        scaled_c = captions.copy()
        # powers of two keep the normalized rows bitwise identical
        scaled_f[3] *= 4.0
        scaled_c[7] *= 0.25
        scaled_c[11] *= 1024.0
        after, _ = clean_caption_indices(
            make_matrix(scaled_f, Modality.VISUAL), make_matrix(scaled_c, Modality.TEXT)
        )
        assert np.array_equal(base, after)

    def test_caption_set_invariant(self):
        frames = np.eye(3)
        cs = clean_captions(
            ["a", "b", "c"],
            make_matrix(frames, Modality.VISUAL),
            make_matrix(frames[[1, 0, 2]], Modality.TEXT),
        )
        assert cs.cleaned == tuple(cs.raw[j] for j in cs.cleaned_index)


class TestCaptionSetType:
    def test_rejects_out_of_range_index(self):
        with pytest.raises(ValueError, match="out of range"):
            CaptionSet(raw=("a", "b"), cleaned_index=np.array([0, 5]))

    def test_identity_captions(self):
        cs = identity_captions(["x", "y"])
        assert cs.cleaned == ("x", "y")


class TestSummaries:
    def test_window_one_template(self):
        cs = identity_captions(["a man runs"])
        texts, mapping = build_summary_texts(cs, None, 1)
        assert texts == ["VISUAL: a man runs | AUDIO: none"]
        assert mapping.tolist() == [0]

    def test_window_two_over_four_segments(self):
        cs = identity_captions(["a", "b", "c", "d"])
        texts, mapping = build_summary_texts(cs, ["p", None, "q", "r"], 2)
        assert len(texts) == 2
        assert texts[0] == "VISUAL: a b | AUDIO: p"
        assert texts[1] == "VISUAL: c d | AUDIO: q r"
        assert mapping.tolist() == [0, 0, 1, 1]

    def test_trailing_partial_window_kept(self):
        cs = identity_captions(["a", "b", "c", "d"])
        texts, mapping = build_summary_texts(cs, None, 3)
        assert len(texts) == 2
        assert texts[1] == "VISUAL: d | AUDIO: none"
        assert mapping.tolist() == [0, 0, 0, 1]

    def test_window_slices_cover_every_segment(self):
        for n in range(0, 12):
            for w in range(1, 5):
                slices = window_slices(n, w)
                covered = [t for lo, hi in slices for t in range(lo, hi)]
                assert covered == list(range(n))

    def test_summary_embeddings_average_cleaned_rows(self, rng):
        captions = rng.normal(size=(4, 3))
        cs = CaptionSet(raw=("a", "b", "c", "d"), cleaned_index=np.array([1, 1, 0, 3]))
        summaries = build_summaries(cs, make_matrix(captions, Modality.TEXT), None, 2)
        assert summaries.n_windows == 2
        expected0 = (captions[1] + captions[1]) / 2
        expected1 = (captions[0] + captions[3]) / 2
        assert np.allclose(summaries.embeddings.data[0], expected0, atol=1e-15)
        assert np.allclose(summaries.embeddings.data[1], expected1, atol=1e-15)

    def test_empty_dataset(self):
        cs = identity_captions([])
        summaries = build_summaries(cs, make_matrix(np.zeros((0, 3)), Modality.TEXT), None, 4)
        assert summaries.n_windows == 0
        assert summaries.segment_to_window.size == 0
