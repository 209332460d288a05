"""Caption cleaning by semantic self-alignment and windowed summary building.

Cleaning replaces each segment's caption with the caption from the whole
video whose text embedding is most cosine-similar to that segment's visual
embedding. Ties break to the lowest index; zero-norm rows are reported and
score minus infinity against everything.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import EmbeddingMatrix, Modality


@dataclass(frozen=True)
class CaptionSet:
    """Raw captions plus the per-segment index of the cleaned replacement.

    Invariant: cleaned[t] == raw[cleaned_index[t]] for all t.
    """

    raw: tuple
    cleaned_index: np.ndarray
    zero_norm_rows: tuple = ()

    def __post_init__(self):
        idx = np.asarray(self.cleaned_index, dtype=np.int64)
        idx.flags.writeable = False
        object.__setattr__(self, "cleaned_index", idx)
        if idx.shape != (len(self.raw),):
            raise ValueError("one cleaned index per caption required")
        if idx.size and (idx.min() < 0 or idx.max() >= len(self.raw)):
            raise ValueError("cleaned_index out of range")

    @property
    def cleaned(self) -> tuple:
        return tuple(self.raw[j] for j in self.cleaned_index)


@dataclass(frozen=True)
class SummarySet:
    """Per-window textual summaries with their embeddings.

    Every segment maps to exactly one window of ``window`` consecutive
    segments; a trailing partial window is kept so every frame gets a score.
    """

    texts: tuple
    embeddings: EmbeddingMatrix
    window: int
    segment_to_window: np.ndarray

    def __post_init__(self):
        mapping = np.asarray(self.segment_to_window, dtype=np.int64)
        mapping.flags.writeable = False
        object.__setattr__(self, "segment_to_window", mapping)
        if self.embeddings.count != len(self.texts):
            raise ValueError("one embedding row per summary required")
        if mapping.size and (mapping.min() < 0 or mapping.max() >= len(self.texts)):
            raise ValueError("segment_to_window references a missing window")

    @property
    def n_windows(self) -> int:
        return len(self.texts)


def _normalize_rows(data: np.ndarray):
    norms = np.linalg.norm(data, axis=1)
    zero = norms == 0.0
    safe = np.where(zero, 1.0, norms)
    return data / safe[:, None], zero


def clean_caption_indices(frame_embs: EmbeddingMatrix, caption_embs: EmbeddingMatrix):
    """Argmax cosine alignment of each visual row against all caption rows.

    Returns (indices, zero_norm_rows) where zero_norm_rows lists
    ("visual"|"text", row) pairs whose similarities were pinned to -inf.
    """
    if frame_embs.count != caption_embs.count:
        raise ValueError(
            f"count mismatch: {frame_embs.count} visual rows vs {caption_embs.count} captions"
        )
    if frame_embs.dim != caption_embs.dim:
        raise ValueError(f"dim mismatch: {frame_embs.dim} vs {caption_embs.dim}")
    n = frame_embs.count
    if n == 0:
        return np.zeros(0, dtype=np.int64), ()

    f_unit, f_zero = _normalize_rows(frame_embs.data)
    c_unit, c_zero = _normalize_rows(caption_embs.data)
    sim = f_unit @ c_unit.T
    sim[f_zero, :] = -np.inf
    sim[:, c_zero] = -np.inf
    # np.argmax returns the first maximum, which is the lowest-index tie break
    indices = np.argmax(sim, axis=1).astype(np.int64)

    reports = tuple(
        [("visual", int(r)) for r in np.nonzero(f_zero)[0]]
        + [("text", int(r)) for r in np.nonzero(c_zero)[0]]
    )
    return indices, reports


def clean_captions(
    raw_captions: Sequence[str],
    frame_embs: EmbeddingMatrix,
    caption_embs: EmbeddingMatrix,
) -> CaptionSet:
    indices, reports = clean_caption_indices(frame_embs, caption_embs)
    if len(raw_captions) != len(indices):
        raise ValueError("caption count must match embedding count")
    return CaptionSet(raw=tuple(raw_captions), cleaned_index=indices, zero_norm_rows=reports)


def identity_captions(raw_captions: Sequence[str]) -> CaptionSet:
    """CaptionSet with cleaning disabled: every segment keeps its own caption."""
    n = len(raw_captions)
    return CaptionSet(raw=tuple(raw_captions), cleaned_index=np.arange(n, dtype=np.int64))


def window_slices(n_segments: int, window: int):
    """Consecutive windows of ``window`` segments; the trailing partial one is kept."""
    if window < 1:
        raise ValueError("window must be at least 1")
    return [(start, min(start + window, n_segments)) for start in range(0, n_segments, window)]


def build_summary_texts(
    cleaned: CaptionSet,
    audio_captions: Optional[Sequence[Optional[str]]],
    window: int,
):
    """Deterministic per-window summary strings.

    Template: "VISUAL: <cleaned captions joined by spaces> | AUDIO: <audio
    captions joined by spaces, or 'none'>".
    """
    n = len(cleaned.raw)
    texts = []
    mapping = np.zeros(n, dtype=np.int64)
    cleaned_texts = cleaned.cleaned
    for k, (lo, hi) in enumerate(window_slices(n, window)):
        mapping[lo:hi] = k
        visual_part = " ".join(cleaned_texts[lo:hi])
        audio_parts = []
        if audio_captions is not None:
            audio_parts = [a for a in audio_captions[lo:hi] if a is not None]
        audio_part = " ".join(audio_parts) if audio_parts else "none"
        texts.append(f"VISUAL: {visual_part} | AUDIO: {audio_part}")
    return texts, mapping


def build_summaries(
    cleaned: CaptionSet,
    caption_embs: EmbeddingMatrix,
    audio_captions: Optional[Sequence[Optional[str]]],
    window: int,
) -> SummarySet:
    """Summary texts plus window embeddings.

    The window embedding is the arithmetic mean of the member segments'
    cleaned caption embeddings, i.e. rows caption_embs[cleaned_index[t]].
    """
    texts, mapping = build_summary_texts(cleaned, audio_captions, window)
    n = len(cleaned.raw)
    rows = caption_embs.data[cleaned.cleaned_index] if n else caption_embs.data[:0]
    means = np.zeros((len(texts), caption_embs.dim))
    for k, (lo, hi) in enumerate(window_slices(n, window)):
        means[k] = rows[lo:hi].mean(axis=0)
    return SummarySet(
        texts=tuple(texts),
        embeddings=EmbeddingMatrix(means, Modality.TEXT),
        window=window,
        segment_to_window=mapping,
    )
