"""Dataset-level evaluation: index image/scribble/ground-truth triplets,
segment each, aggregate scores, and drive the ablation protocols."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import EmptyDatasetError, InvalidParameterError, UnreadableDirectoryError
from .imagecore import load_image, load_mask, load_scribbles
from .metrics import DEFAULT_BOUNDARY_TOL, SegmentationScores, score
from .segmenter import SegmentationState, SolverConfig, segment

log = logging.getLogger(__name__)

_RASTER_EXTS = (".png", ".ppm")


@dataclass(frozen=True)
class DatasetEntry:
    id: str
    image_path: Path
    annotation_path: Path
    gt_path: Path


@dataclass(frozen=True)
class DatasetIndex:
    root: Path
    entries: tuple[DatasetEntry, ...]


@dataclass
class EvalReport:
    per_image: dict[str, SegmentationScores]
    failures: dict[str, str]
    means: Optional[SegmentationScores]
    config: SolverConfig
    wall_times: dict[str, float]
    boundary_tol: float


def index_dataset(root: str | Path) -> DatasetIndex:
    """Collect one entry per filename stem present in all of images/,
    scribbles/, and gt/ under root; partially present stems are logged as
    warnings and skipped."""
    root = Path(root)
    if not root.is_dir():
        raise UnreadableDirectoryError(f"dataset root is not a directory: {root}")
    subdirs = {}
    for name in ("images", "scribbles", "gt"):
        sub = root / name
        if not sub.is_dir():
            raise UnreadableDirectoryError(f"missing dataset subdirectory: {sub}")
        subdirs[name] = {
            p.stem: p
            for p in sorted(sub.iterdir())
            if p.suffix.lower() in _RASTER_EXTS
        }
    all_stems = set().union(*(d.keys() for d in subdirs.values()))
    complete = sorted(
        stem for stem in all_stems if all(stem in d for d in subdirs.values())
    )
    for stem in sorted(all_stems.difference(complete)):
        missing = [name for name, d in subdirs.items() if stem not in d]
        log.warning("skipping %r: missing in %s", stem, ", ".join(missing))
    if not complete:
        raise EmptyDatasetError(f"no complete image/scribble/gt triplets in {root}")
    entries = tuple(
        DatasetEntry(
            id=stem,
            image_path=subdirs["images"][stem],
            annotation_path=subdirs["scribbles"][stem],
            gt_path=subdirs["gt"][stem],
        )
        for stem in complete
    )
    return DatasetIndex(root=root, entries=entries)


def evaluate_entry(
    entry: DatasetEntry,
    cfg: SolverConfig,
    boundary_tol: float,
    exclude_seeds: bool = False,
) -> tuple[SegmentationScores, float, SegmentationState]:
    """Segment one dataset entry and score it against its ground truth."""
    img = load_image(entry.image_path)
    scribbles = load_scribbles(entry.annotation_path, img.width, img.height)
    gt = load_mask(entry.gt_path)
    start = time.perf_counter()
    state = segment(img, scribbles, cfg)
    wall = time.perf_counter() - start
    ignore = (scribbles.labels != 0) if exclude_seeds else None
    return (
        score(state.mask, gt, boundary_tol=boundary_tol, ignore=ignore),
        wall,
        state,
    )


def _evaluate_worker(args: tuple) -> tuple[str, SegmentationScores | None, str, float]:
    entry, cfg, boundary_tol, exclude_seeds = args
    try:
        scores, wall, _ = evaluate_entry(entry, cfg, boundary_tol, exclude_seeds)
        return entry.id, scores, "", wall
    except Exception as exc:  # per-image failures never kill the run
        return entry.id, None, f"{type(exc).__name__}: {exc}", 0.0


def evaluate(
    index: DatasetIndex,
    cfg: SolverConfig = SolverConfig(),
    boundary_tol: float = DEFAULT_BOUNDARY_TOL,
    workers: int = 1,
    exclude_seeds: bool = False,
) -> EvalReport:
    """Run segment + score over every entry; failures are recorded per image
    and excluded from the means."""
    if not index.entries:
        raise EmptyDatasetError("dataset index has no entries")
    jobs = [(entry, cfg, boundary_tol, exclude_seeds) for entry in index.entries]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate_worker, jobs))
    else:
        results = [_evaluate_worker(job) for job in jobs]

    per_image: dict[str, SegmentationScores] = {}
    failures: dict[str, str] = {}
    wall_times: dict[str, float] = {}
    for entry_id, scores, err, wall in results:
        if scores is None:
            failures[entry_id] = err
            log.warning("entry %r failed: %s", entry_id, err)
        else:
            per_image[entry_id] = scores
            wall_times[entry_id] = wall
    return EvalReport(
        per_image=per_image,
        failures=failures,
        means=mean_scores(per_image.values()),
        config=cfg,
        wall_times=wall_times,
        boundary_tol=boundary_tol,
    )


def mean_scores(scores) -> Optional[SegmentationScores]:
    scores = list(scores)
    if not scores:
        return None
    return SegmentationScores(
        **{
            name: float(np.mean([getattr(s, name) for s in scores]))
            for name in SegmentationScores.FIELDS
        }
    )


def ablate_superpixels(
    index: DatasetIndex,
    cfg: SolverConfig,
    k_list: list[int],
    boundary_tol: float = DEFAULT_BOUNDARY_TOL,
    workers: int = 1,
) -> dict[int, EvalReport]:
    """evaluate() once per superpixel count in ascending k_list."""
    if not k_list:
        raise InvalidParameterError("k_list must not be empty")
    if list(k_list) != sorted(k_list):
        raise InvalidParameterError("k_list must be ascending")
    return {
        k: evaluate(
            index, replace(cfg, k_target=k), boundary_tol=boundary_tol, workers=workers
        )
        for k in k_list
    }


def ablate_fbs(
    index: DatasetIndex,
    cfg: SolverConfig,
    boundary_tol: float = DEFAULT_BOUNDARY_TOL,
    workers: int = 1,
) -> dict[str, EvalReport]:
    """Full pipeline versus the identity v-step (no edge-aware smoothing)."""
    return {
        "with_fbs": evaluate(
            index, replace(cfg, use_fbs=True), boundary_tol=boundary_tol,
            workers=workers,
        ),
        "without_fbs": evaluate(
            index, replace(cfg, use_fbs=False), boundary_tol=boundary_tol,
            workers=workers,
        ),
    }
