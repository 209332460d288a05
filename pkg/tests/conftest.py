import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hypervad.core import EmbeddingMatrix, Modality, SegmentRecord


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def make_segments(n, frames_per_segment=4, audio=False):
    return [
        SegmentRecord(
            index=i,
            frame_start=i * frames_per_segment,
            frame_end=(i + 1) * frames_per_segment - 1,
            visual_caption=f"caption {i}",
            audio_caption=f"audio {i}" if audio else None,
        )
        for i in range(n)
    ]


def make_matrix(rows, modality=Modality.VISUAL):
    return EmbeddingMatrix(np.asarray(rows, dtype=np.float64), modality)
