"""Alternating-direction segmentation: superpixel-geodesic unary costs plus
a bilateral-affinity pairwise term.

The relaxed labeling u and the smoothed field v are coupled through a
quadratic penalty; each outer iteration minimizes the per-pixel subproblem
in u (closed form, or projected gradient descent for fidelity checks) and
the edge-aware smoothing subproblem in v (fast bilateral solver), until u
stops moving.  The final mask thresholds u and re-asserts every scribbled
pixel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bilateral import (
    BilateralGrid,
    FbsProblem,
    GridParams,
    apply_w_hat,
    bistochastize,
    build_grid,
    fbs_solve,
)
from .errors import InvalidParameterError, MissingSeedsError
from .imagecore import BinaryMask, ImageBuffer, ScribbleMap, rgb_to_yuv
from .superpixel import SuperpixelGraph, SuperpixelPartition, build_graph, slic
from .unary import UnaryField, gaussian_unary, geodesic_unary, histogram_unary

UNARY_MODES = ("geodesic", "gaussian", "histogram")
U_STEP_METHODS = ("closed_form", "sgd")

# External (config file / HTTP override / CLI) key for every tunable.
CONFIG_KEYS = (
    "lambda",
    "theta",
    "sigma_xy",
    "sigma_l",
    "sigma_uv",
    "superpixels",
    "compactness",
    "slic_iters",
    "max_outer_iters",
    "outer_tol",
    "sgd_step",
    "sgd_iters",
    "threshold",
    "unary_mode",
    "u_step",
    "use_fbs",
    "histogram_bins",
)


@dataclass(frozen=True)
class SolverConfig:
    """All tunables of the pipeline, with the defaults used throughout.

    sgd_step defaults to 0.5 / theta (resolved at use), which contracts the
    per-pixel quadratic by half per step.
    """

    lam: float = 100.0
    theta: float = 0.1
    grid: GridParams = field(default_factory=GridParams)
    k_target: int = 1600
    compactness: float = 10.0
    slic_iters: int = 10
    max_outer_iters: int = 30
    outer_tol: float = 1e-4
    sgd_step: Optional[float] = None
    sgd_iters: int = 50
    threshold: float = 0.5
    unary_mode: str = "geodesic"
    u_step: str = "closed_form"
    use_fbs: bool = True
    histogram_bins: int = 16

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise InvalidParameterError("lam must be >= 0")
        if self.theta <= 0:
            raise InvalidParameterError("theta must be positive")
        if not (0.0 < self.threshold < 1.0):
            raise InvalidParameterError("threshold must be in (0, 1)")
        for name in ("k_target", "slic_iters", "max_outer_iters", "sgd_iters"):
            if getattr(self, name) < 1:
                raise InvalidParameterError(f"{name} must be >= 1")
        if self.unary_mode not in UNARY_MODES:
            raise InvalidParameterError(
                f"unary_mode must be one of {UNARY_MODES}, got {self.unary_mode!r}"
            )
        if self.u_step not in U_STEP_METHODS:
            raise InvalidParameterError(
                f"u_step must be one of {U_STEP_METHODS}, got {self.u_step!r}"
            )

    def resolved_sgd_step(self) -> float:
        return self.sgd_step if self.sgd_step is not None else 0.5 / self.theta


def config_to_dict(cfg: SolverConfig) -> dict:
    """Flatten a SolverConfig to the external key-value form."""
    return {
        "lambda": cfg.lam,
        "theta": cfg.theta,
        "sigma_xy": cfg.grid.sigma_xy,
        "sigma_l": cfg.grid.sigma_l,
        "sigma_uv": cfg.grid.sigma_uv,
        "superpixels": cfg.k_target,
        "compactness": cfg.compactness,
        "slic_iters": cfg.slic_iters,
        "max_outer_iters": cfg.max_outer_iters,
        "outer_tol": cfg.outer_tol,
        "sgd_step": cfg.sgd_step,
        "sgd_iters": cfg.sgd_iters,
        "threshold": cfg.threshold,
        "unary_mode": cfg.unary_mode,
        "u_step": cfg.u_step,
        "use_fbs": cfg.use_fbs,
        "histogram_bins": cfg.histogram_bins,
    }


def config_from_dict(overrides: dict, base: Optional[SolverConfig] = None) -> SolverConfig:
    """Apply external key-value overrides on top of base (or the defaults).

    Unknown keys are rejected; None values mean "keep the base value"
    (except sgd_step, where None is itself the documented default).
    """
    unknown = set(overrides) - set(CONFIG_KEYS)
    if unknown:
        raise InvalidParameterError(f"unknown config keys: {sorted(unknown)}")
    merged = config_to_dict(base if base is not None else SolverConfig())
    for key, value in overrides.items():
        if value is None and key != "sgd_step":
            continue
        merged[key] = value
    grid = GridParams(
        sigma_xy=float(merged["sigma_xy"]),
        sigma_l=float(merged["sigma_l"]),
        sigma_uv=float(merged["sigma_uv"]),
    )
    sgd_step = merged["sgd_step"]
    return SolverConfig(
        lam=float(merged["lambda"]),
        theta=float(merged["theta"]),
        grid=grid,
        k_target=int(merged["superpixels"]),
        compactness=float(merged["compactness"]),
        slic_iters=int(merged["slic_iters"]),
        max_outer_iters=int(merged["max_outer_iters"]),
        outer_tol=float(merged["outer_tol"]),
        sgd_step=None if sgd_step is None else float(sgd_step),
        sgd_iters=int(merged["sgd_iters"]),
        threshold=float(merged["threshold"]),
        unary_mode=str(merged["unary_mode"]),
        u_step=str(merged["u_step"]),
        use_fbs=bool(merged["use_fbs"]),
        histogram_bins=int(merged["histogram_bins"]),
    )


@dataclass
class SegmentationState:
    """Inputs, intermediates, and outputs of one segmentation run."""

    u: np.ndarray
    v: np.ndarray
    unary: UnaryField
    partition: SuperpixelPartition
    graph: SuperpixelGraph
    grid: BilateralGrid
    energy_trace: list[float]
    half_step_trace: list[float]
    outer_iters: int
    converged: bool
    cg_converged: bool
    cg_stats: list[dict] = field(default_factory=list)
    mask: Optional[BinaryMask] = None


def u_update(
    unary: UnaryField,
    v: np.ndarray,
    theta: float,
    sgd_step: Optional[float] = None,
    sgd_iters: int = 50,
    u0: Optional[np.ndarray] = None,
    method: str = "closed_form",
) -> np.ndarray:
    """Minimize (f1 - f2) u + theta/2 (u - v)^2 per pixel over u in [0, 1].

    The closed form is clamp(v - (f1 - f2) / theta, 0, 1); the "sgd" method
    runs projected gradient descent from u0 instead (step defaulting to
    0.5 / theta) and agrees with the closed form to well under 1e-6.
    """
    if theta <= 0:
        raise InvalidParameterError("theta must be positive")
    diff = unary.f1 - unary.f2
    if method == "closed_form":
        return np.clip(v - diff / theta, 0.0, 1.0)
    if method != "sgd":
        raise InvalidParameterError(f"unknown u_update method {method!r}")
    step = sgd_step if sgd_step is not None else 0.5 / theta
    u = np.clip(v if u0 is None else u0, 0.0, 1.0).astype(np.float64)
    for _ in range(sgd_iters):
        grad = diff + theta * (u - v)
        u = np.clip(u - step * grad, 0.0, 1.0)
    return u


def v_update(
    grid: BilateralGrid,
    u: np.ndarray,
    theta: float,
    lam: float,
    cg_tol: float = 1e-5,
    cg_max_iters: int = 50,
    stats: dict | None = None,
    warm_start: np.ndarray | None = None,
) -> np.ndarray:
    """Minimize theta/2 ||v - u||^2 + lam/2 sum_ij W_hat_ij (v_i - v_j)^2.

    This is the bilateral-solver objective with uniform confidence theta/2
    and target u (the one-half on the coupling term halves the confidence,
    not the multiplier).
    """
    prob = FbsProblem(
        target=np.asarray(u, dtype=np.float64),
        confidence=np.full_like(np.asarray(u, dtype=np.float64), theta / 2.0),
        lam=lam,
    )
    return fbs_solve(
        grid,
        prob,
        cg_tol=cg_tol,
        cg_max_iters=cg_max_iters,
        stats=stats,
        warm_start=warm_start,
    )


def energy(
    u: np.ndarray,
    v: np.ndarray,
    unary: UnaryField,
    grid: BilateralGrid,
    lam: float,
) -> float:
    """Unary cost of u plus lam * v^T (I - W_hat) v, computed matrix-free."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    unary_cost = float((unary.f1 * u + unary.f2 * (1.0 - u)).sum())
    wv = apply_w_hat(grid, v)
    pairwise = float((v * v).sum() - (v * wv).sum())
    return unary_cost + lam * pairwise


def coupled_energy(
    u: np.ndarray,
    v: np.ndarray,
    unary: UnaryField,
    grid: BilateralGrid,
    lam: float,
    theta: float,
) -> float:
    """The alternating-direction surrogate: energy() plus the coupling
    penalty theta/2 ||u - v||^2."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    return energy(u, v, unary, grid, lam) + 0.5 * theta * float(((u - v) ** 2).sum())


def build_unary(
    img: ImageBuffer,
    scribbles: ScribbleMap,
    cfg: SolverConfig,
    part: SuperpixelPartition,
    graph: SuperpixelGraph,
) -> UnaryField:
    if cfg.unary_mode == "geodesic":
        return geodesic_unary(graph, part, scribbles)
    if cfg.unary_mode == "gaussian":
        return gaussian_unary(img, scribbles)
    return histogram_unary(img, scribbles, bins_per_channel=cfg.histogram_bins)


def segment(
    img: ImageBuffer,
    scribbles: ScribbleMap,
    cfg: SolverConfig = SolverConfig(),
    precomputed: dict | None = None,
) -> SegmentationState:
    """Run the full pipeline and return the finalized state (mask included).

    Parameters
    ----------
    img : ImageBuffer
        RGB input image.
    scribbles : ScribbleMap
        Must contain at least one foreground and one background seed.
    cfg : SolverConfig
        Tunables; see the dataclass for defaults.
    precomputed : dict, optional
        Cache hooks: may carry "partition", "graph" (valid for the same
        image / k_target / compactness / slic_iters) and "grid" (a
        bistochastized BilateralGrid for the same image / grid params).
        Scribbles never affect these, so interactive callers can reuse them
        across strokes.
    """
    if scribbles.labels.shape != img.shape:
        raise InvalidParameterError("scribbles and image dimensions differ")
    if not scribbles.is_valid_annotation():
        fg, bg = scribbles.seed_counts()
        raise MissingSeedsError(
            f"need at least one seed per class, got fg={fg}, bg={bg}"
        )
    precomputed = precomputed or {}

    part = precomputed.get("partition")
    graph = precomputed.get("graph")
    if part is None or graph is None:
        part = slic(img, cfg.k_target, cfg.compactness, cfg.slic_iters)
        graph = build_graph(part)

    unary = build_unary(img, scribbles, cfg, part, graph)

    grid = precomputed.get("grid")
    if grid is None:
        grid = bistochastize(build_grid(rgb_to_yuv(img), cfg.grid))

    u = (unary.f1 < unary.f2).astype(np.float64)
    v = u.copy()

    energy_trace: list[float] = []
    # Surrogate value before any update, then after every half-step.
    half_step_trace: list[float] = [
        coupled_energy(u, v, unary, grid, cfg.lam, cfg.theta)
    ]
    cg_stats: list[dict] = []
    outer_iters = 0
    converged = False
    cg_ok = True
    step = cfg.resolved_sgd_step()
    for outer_iters in range(1, cfg.max_outer_iters + 1):
        u_prev = u
        u = u_update(
            unary,
            v,
            cfg.theta,
            sgd_step=step,
            sgd_iters=cfg.sgd_iters,
            u0=u_prev,
            method=cfg.u_step,
        )
        half_step_trace.append(
            coupled_energy(u, v, unary, grid, cfg.lam, cfg.theta)
        )
        if cfg.use_fbs:
            stats: dict = {}
            v = v_update(grid, u, cfg.theta, cfg.lam, stats=stats, warm_start=v)
            cg_ok = cg_ok and bool(stats.get("converged", True))
            cg_stats.append(
                {
                    "outer_iter": outer_iters,
                    "vertex_count": grid.vertex_count,
                    "cg_iterations": stats.get("iterations"),
                    "residual": stats.get("residual"),
                    "residual_history": stats.get("residual_history"),
                }
            )
        else:
            v = u.copy()
        half_step_trace.append(
            coupled_energy(u, v, unary, grid, cfg.lam, cfg.theta)
        )
        energy_trace.append(half_step_trace[-1])
        # The first u-step starts from v = u and cannot move u against its
        # own unary preference, so |du| is always 0 there; the stopping test
        # is meaningful only once the smoothed field has fed back.
        if outer_iters > 1 and float(np.abs(u - u_prev).max()) < cfg.outer_tol:
            converged = True
            break

    mask_values = u >= cfg.threshold
    mask_values[scribbles.fg_mask()] = True
    mask_values[scribbles.bg_mask()] = False

    return SegmentationState(
        u=u,
        v=v,
        unary=unary,
        partition=part,
        graph=graph,
        grid=grid,
        energy_trace=energy_trace,
        half_step_trace=half_step_trace,
        outer_iters=outer_iters,
        converged=converged,
        cg_converged=cg_ok,
        cg_stats=cg_stats,
        mask=BinaryMask(mask_values),
    )
