"""End-to-end orchestration: ingest files, run the stage chain
(clean, fuse, summarize, optimize, refine, expand, evaluate), and write
scores, loss history, and a JSON report.

Stage toggles mirror the component ablation grid: caption cleaning on/off,
hyperbolic vs euclidean fusion, prompt optimizer on/off, refinement on/off,
audio present or absent (driven by the manifest), stub vs remote scorer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import captions as cap
from . import dataio, fusion, refine
from .core import (
    Modality,
    PipelineConfig,
    ScoreSeries,
    StageError,
    ValidationError,
    validate_dataset,
)
from .evaluate import EvalReport, build_report, expand_to_frames
from .prompt_opt import PromptState, StubScorer, optimize_prompt, resolve_target_mass
from .remote import RemoteScorer

SCORES_FILE = "scores.csv"
LOSS_FILE = "loss_history.csv"
REPORT_FILE = "report.json"


@dataclass
class RunManifest:
    """Input paths, output directory, resolved config, and stage toggles."""

    visual_path: Path
    text_path: Path
    captions_path: Path
    out_dir: Path
    audio_path: Optional[Path] = None
    labels_path: Optional[Path] = None
    config: PipelineConfig = field(default_factory=PipelineConfig)
    cleaning: bool = True
    fusion_mode: str = "hyperbolic"  # or "euclidean"
    optimizer: bool = True
    refinement: bool = True
    scorer: str = "stub"  # or "remote"
    endpoint: Optional[str] = None

    def __post_init__(self):
        if self.fusion_mode not in ("hyperbolic", "euclidean"):
            raise ValidationError(f"fusion_mode must be hyperbolic or euclidean, got {self.fusion_mode!r}")
        if self.scorer not in ("stub", "remote"):
            raise ValidationError(f"scorer must be stub or remote, got {self.scorer!r}")
        if self.scorer == "remote" and not self.endpoint:
            raise ValidationError("remote scorer requires an endpoint")

    def toggles(self) -> dict:
        return {
            "cleaning": self.cleaning,
            "fusion": self.fusion_mode,
            "optimizer": self.optimizer,
            "refinement": self.refinement,
            "scorer": self.scorer,
            "audio": self.audio_path is not None,
        }


def load_dataset(manifest: RunManifest):
    """Fail-fast ingestion: every referenced file must exist and parse, and
    the assembled dataset must validate, before any stage runs."""
    for name, path in (
        ("visual embeddings", manifest.visual_path),
        ("text embeddings", manifest.text_path),
        ("captions", manifest.captions_path),
        ("audio embeddings", manifest.audio_path),
        ("labels", manifest.labels_path),
    ):
        if path is not None and not Path(path).is_file():
            raise ValidationError(f"{name} file not found: {path}")

    embeddings = {
        Modality.VISUAL: dataio.read_embeddings(manifest.visual_path),
        Modality.TEXT: dataio.read_embeddings(manifest.text_path),
    }
    if manifest.audio_path is not None:
        embeddings[Modality.AUDIO] = dataio.read_embeddings(manifest.audio_path)
    segments = dataio.read_captions(manifest.captions_path)
    dataset = validate_dataset(segments, embeddings)

    labels = None
    if manifest.labels_path is not None:
        labels = dataio.read_labels(manifest.labels_path)
        if labels.size != dataset.n_frames:
            raise ValidationError(
                f"labels cover {labels.size} frames but segments cover {dataset.n_frames}"
            )
    return dataset, labels


def _make_scorer(manifest: RunManifest, emb_dim: int):
    if manifest.scorer == "remote":
        return RemoteScorer(manifest.endpoint)
    return StubScorer(manifest.config.prompt_dim, emb_dim, manifest.config.seed)


@dataclass
class RunResult:
    scores: ScoreSeries
    eval_report: Optional[EvalReport]
    prompt_state: PromptState
    report: dict
    out_dir: Path


def _stage(name: str):
    """Decorator-free stage wrapper: re-raise anything as StageError."""

    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and not isinstance(exc, (StageError, ValidationError)):
                raise StageError(name, str(exc)) from exc
            return False

    return _Ctx()


def run_pipeline(manifest: RunManifest) -> RunResult:
    """Execute the configured stages and write outputs to the manifest's
    output directory. Output files appear only after every stage succeeded;
    a stage failure leaves no partial outputs behind."""
    dataset, labels = load_dataset(manifest)
    config = manifest.config
    n = dataset.n_segments

    with _stage("clean"):
        raw_captions = [seg.visual_caption for seg in dataset.segments]
        if manifest.cleaning:
            caption_set = cap.clean_captions(
                raw_captions,
                dataset.matrix(Modality.VISUAL),
                dataset.matrix(Modality.TEXT),
            )
        else:
            caption_set = cap.identity_captions(raw_captions)

    with _stage("fuse"):
        fused_seq = None
        euclidean_fused = None
        if manifest.fusion_mode == "hyperbolic":
            fused_seq = fusion.fuse_sequence(dataset, config)
        else:
            euclidean_fused = fusion.fuse_sequence_euclidean(dataset, config)

    with _stage("summarize"):
        audio_caps = [seg.audio_caption for seg in dataset.segments] if dataset.has_audio else None
        summaries = cap.build_summaries(
            caption_set, dataset.matrix(Modality.TEXT), audio_caps, config.window
        )
        fused_windows = None
        if fused_seq is not None and n > 0:
            fused_windows = fusion.window_fused_points(
                fused_seq.points, summaries.segment_to_window, summaries.n_windows, config
            )

    with _stage("score"):
        scorer = _make_scorer(manifest, dataset.matrix(Modality.TEXT).dim)
        q0 = np.zeros(config.prompt_dim)
        state, window_scores = optimize_prompt(
            q0,
            summaries,
            scorer,
            learning_rate=config.learning_rate,
            opt_iters=config.opt_iters if manifest.optimizer else 0,
            target_mass=config.target_mass,
            sparsity_weight=config.sparsity_weight,
            fused=fused_windows,
        )

    with _stage("refine"):
        if manifest.refinement and summaries.n_windows > 0:
            stats = refine.fit_visual_stats(dataset.matrix(Modality.VISUAL), config.shrinkage)
            if summaries.embeddings.dim != stats.dim:
                raise ValidationError(
                    f"refinement needs matching text/visual dims, got "
                    f"{summaries.embeddings.dim} vs {stats.dim}"
                )
            k = min(config.neighbors, summaries.n_windows)
            refined = refine.refine_scores(window_scores, summaries.embeddings, stats, k)
        else:
            refined = np.asarray(window_scores, dtype=np.float64)

    with _stage("expand"):
        frame_scores = expand_to_frames(refined, summaries.segment_to_window, dataset.segments)
        segment_scores = (
            refined[summaries.segment_to_window] if n > 0 else np.zeros(0)
        )
        series = ScoreSeries(segment_scores, frame_scores, labels)

    with _stage("evaluate"):
        eval_report = build_report(frame_scores, labels) if labels is not None else None

    report = {
        "config": config.as_dict(),
        "toggles": manifest.toggles(),
        "active_components": sorted(
            name
            for name, on in [
                ("audio_captions", dataset.has_audio),
                ("caption_cleaning", manifest.cleaning),
                ("hyperbolic_fusion", manifest.fusion_mode == "hyperbolic"),
                ("euclidean_fusion", manifest.fusion_mode == "euclidean"),
                ("prompt_optimizer", manifest.optimizer),
                ("mahalanobis_refinement", manifest.refinement),
            ]
            if on
        ),
        "dataset": {
            "segments": n,
            "frames": dataset.n_frames,
            "windows": summaries.n_windows,
            "has_audio": dataset.has_audio,
            "zero_norm_rows": [list(r) for r in caption_set.zero_norm_rows],
        },
        "scorer": {
            "name": scorer.info.name,
            "deterministic": scorer.info.deterministic,
            "gradient_mode": scorer.info.gradient_mode,
        },
        "optimization": {
            "iterations": state.iteration,
            "initial_loss": state.loss_history[0],
            "final_loss": state.loss_history[-1],
            "monotone_fraction": state.monotone_fraction,
            "target_mass": resolve_target_mass(config.target_mass, summaries.n_windows),
        },
        "fusion": {
            "karcher_failures": list(fused_seq.karcher_failures) if fused_seq is not None else [],
        },
        "metrics": eval_report.as_dict() if eval_report is not None else None,
    }

    with _stage("write"):
        out_dir = Path(manifest.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        try:
            for name, writer in (
                (SCORES_FILE, lambda p: dataio.write_scores(p, frame_scores)),
                (LOSS_FILE, lambda p: dataio.write_loss_history(p, state.loss_history)),
                (REPORT_FILE, lambda p: dataio.write_report(p, report)),
            ):
                path = out_dir / name
                writer(path)
                written.append(path)
        except Exception:
            for path in written:
                path.unlink(missing_ok=True)
            raise

    return RunResult(
        scores=series,
        eval_report=eval_report,
        prompt_state=state,
        report=report,
        out_dir=out_dir,
    )


def eval_only(scores_path, labels_path) -> EvalReport:
    """Score a written scores CSV against a labels CSV."""
    scores = dataio.read_scores(scores_path)
    labels = dataio.read_labels(labels_path)
    if scores.size != labels.size:
        raise ValidationError(
            f"length mismatch: {scores.size} scores vs {labels.size} labels"
        )
    return build_report(scores, labels)
