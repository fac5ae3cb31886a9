"""Per-pixel label costs: geodesic (default), Gaussian, and histogram modes.

f1 is the cost of labeling a pixel foreground, f2 the cost of labeling it
background.  The geodesic builder measures normalized shortest-path distance
from each superpixel center to the nearest foreground / background seed
superpixel over the region adjacency graph; the Gaussian and histogram
builders are classic color-model alternatives kept for ablation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSeedsError,
    DisconnectedGraphError,
    InvalidParameterError,
    MissingSeedsError,
)
from .imagecore import ImageBuffer, ScribbleMap
from .superpixel import SuperpixelGraph, SuperpixelPartition, multi_source_dijkstra

# Keeps the two-class distance ratio finite when both distances are zero.
_NORMALIZATION_EPS = 1e-12

# Variance floor for the Gaussian color model (channels scaled to [0, 1]).
_VARIANCE_FLOOR = 1e-4

DEFAULT_HISTOGRAM_BINS = 16


@dataclass(frozen=True)
class UnaryField:
    """Nonnegative per-pixel costs f1 (foreground) and f2 (background)."""

    f1: np.ndarray
    f2: np.ndarray

    def __post_init__(self) -> None:
        for name in ("f1", "f2"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if not np.isfinite(arr).all() or (arr < 0).any():
                raise ValueError(f"{name} must be finite and nonnegative")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.f1.shape != self.f2.shape:
            raise ValueError("f1 and f2 must share a shape")

    @property
    def height(self) -> int:
        return self.f1.shape[0]

    @property
    def width(self) -> int:
        return self.f1.shape[1]


def _require_seeds(scribbles: ScribbleMap) -> None:
    fg, bg = scribbles.seed_counts()
    if fg < 1 or bg < 1:
        raise MissingSeedsError(
            f"need at least one seed per class, got fg={fg}, bg={bg}"
        )


def _clamp_seeds(
    f1: np.ndarray, f2: np.ndarray, scribbles: ScribbleMap
) -> tuple[np.ndarray, np.ndarray]:
    """Scribbled pixels are authoritative: cost 0 for their own label, 1 for
    the opposite one."""
    fg = scribbles.fg_mask()
    bg = scribbles.bg_mask()
    f1 = f1.copy()
    f2 = f2.copy()
    f1[fg] = 0.0
    f2[fg] = 1.0
    f1[bg] = 1.0
    f2[bg] = 0.0
    return f1, f2


def seed_superpixels(part: SuperpixelPartition, seed_mask: np.ndarray) -> np.ndarray:
    """Indices of superpixels containing at least one seed pixel."""
    return np.unique(part.label[seed_mask])


def geodesic_unary(
    graph: SuperpixelGraph,
    part: SuperpixelPartition,
    scribbles: ScribbleMap,
) -> UnaryField:
    """Normalized superpixel-geodesic costs.

    Multi-source Dijkstra from the foreground-seeded and background-seeded
    superpixel sets gives d_F(k), d_B(k) per superpixel; the broadcast cost
    of labeling pixel i in S_k foreground is d_F / (d_F + d_B), so costs lie
    in [0, 1] and f1 + f2 = 1 away from seeds.
    """
    _require_seeds(scribbles)
    if scribbles.labels.shape != part.label.shape:
        raise InvalidParameterError("scribbles and partition dimensions differ")
    d_fg = multi_source_dijkstra(graph, seed_superpixels(part, scribbles.fg_mask()))
    d_bg = multi_source_dijkstra(graph, seed_superpixels(part, scribbles.bg_mask()))
    if not (np.isfinite(d_fg).all() and np.isfinite(d_bg).all()):
        raise DisconnectedGraphError("superpixel unreachable from a seed set")
    total = d_fg + d_bg + _NORMALIZATION_EPS
    cost_fg = d_fg / total
    cost_bg = d_bg / total
    f1 = cost_fg[part.label]
    f2 = cost_bg[part.label]
    f1, f2 = _clamp_seeds(f1, f2, scribbles)
    return UnaryField(f1=f1, f2=f2)


def gaussian_unary(img: ImageBuffer, scribbles: ScribbleMap) -> UnaryField:
    """Per-channel Gaussian color model fit to each seed class.

    Cost of assigning pixel i to class l sums (I_c - mu_lc)^2 / (2 s_lc^2)
    + log s_lc over channels, on [0, 1]-scaled channels with the variance
    floored; shifted so the global minimum over pixels and classes is 0.
    """
    _require_seeds(scribbles)
    if scribbles.labels.shape != img.shape:
        raise InvalidParameterError("scribbles and image dimensions differ")
    rgb = img.pixels.astype(np.float64) / 255.0
    costs = []
    for mask in (scribbles.fg_mask(), scribbles.bg_mask()):
        samples = rgb[mask]
        if samples.shape[0] < 2:
            raise DegenerateSeedsError(
                "Gaussian color model needs >= 2 seeds per class"
            )
        mu = samples.mean(axis=0)
        var = np.maximum(samples.var(axis=0), _VARIANCE_FLOOR)
        sigma = np.sqrt(var)
        cost = (((rgb - mu) ** 2) / (2.0 * var) + np.log(sigma)).sum(axis=-1)
        costs.append(cost)
    shift = min(c.min() for c in costs)
    f1, f2 = (c - shift for c in costs)
    f1, f2 = _clamp_seeds(f1, f2, scribbles)
    return UnaryField(f1=f1, f2=f2)


def histogram_unary(
    img: ImageBuffer,
    scribbles: ScribbleMap,
    bins_per_channel: int = DEFAULT_HISTOGRAM_BINS,
) -> UnaryField:
    """Negative log-probability under per-class 3-D color histograms.

    Seed pixels fill an add-one-smoothed histogram per class; the cost of a
    pixel is -log p_l(color), shifted so the global minimum is 0.
    """
    _require_seeds(scribbles)
    if scribbles.labels.shape != img.shape:
        raise InvalidParameterError("scribbles and image dimensions differ")
    if not (2 <= bins_per_channel <= 64):
        raise InvalidParameterError(
            f"bins_per_channel must be in [2, 64], got {bins_per_channel}"
        )
    b = bins_per_channel
    bin_idx = (img.pixels.astype(np.int64) * b) // 256  # (h, w, 3) in [0, b)
    flat_bin = (bin_idx[..., 0] * b + bin_idx[..., 1]) * b + bin_idx[..., 2]
    costs = []
    for mask in (scribbles.fg_mask(), scribbles.bg_mask()):
        counts = np.bincount(flat_bin[mask], minlength=b**3).astype(np.float64)
        probs = (counts + 1.0) / (counts.sum() + b**3)
        costs.append(-np.log(probs)[flat_bin])
    shift = min(c.min() for c in costs)
    f1, f2 = (c - shift for c in costs)
    f1, f2 = _clamp_seeds(f1, f2, scribbles)
    return UnaryField(f1=f1, f2=f2)
