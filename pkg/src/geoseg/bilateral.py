"""Fast bilateral solver on a simplified (hard-assignment) bilateral grid.

Pixels are splatted one-to-one onto occupied vertices of a 5-D lattice over
(x, y, luma, u, v); a separable [1, 2, 1] blur couples adjacent occupied
vertices; bistochastization vectors rescale the factored affinity so it is
symmetric and row-stochastic.  The solver then minimizes a confidence-
weighted quadratic in bilateral space with Jacobi-preconditioned conjugate
gradient and slices the result back to pixels.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    ConvergenceWarning,
    InvalidParameterError,
    LengthMismatchError,
    SingularSystemError,
)
from .imagecore import YuvImage

# Center weight of the 5-D blur: each dimension contributes a center tap of
# weight 2 ([1, 2, 1] per dimension, additively), counted once.
BLUR_CENTER_WEIGHT = 10.0

_N_DIMS = 5

DEFAULT_BISTOCH_ITERS = 20
DEFAULT_BISTOCH_TOL = 1e-5
DEFAULT_CG_TOL = 1e-5
DEFAULT_CG_ITERS = 50


@dataclass(frozen=True)
class GridParams:
    """Support of the bilateral filter: spatial sigma in pixels, luma and
    chroma sigmas in [0, 1] channel units."""

    sigma_xy: float = 8.0
    sigma_l: float = 0.06
    sigma_uv: float = 0.06

    def __post_init__(self) -> None:
        for name in ("sigma_xy", "sigma_l", "sigma_uv"):
            if getattr(self, name) <= 0:
                raise InvalidParameterError(f"{name} must be positive")


@dataclass(frozen=True)
class BilateralGrid:
    """Occupied vertices of the quantized 5-D lattice for one reference image.

    coords: (v, 5) int64 lattice coordinates (lexicographically sorted);
    pixel_to_vertex: (h*w,) int64, row-major; splat_counts m: (v,) float64;
    blur_neighbors: (v, 5, 2) int64 vertex index of the -1/+1 neighbor per
    dimension, -1 where unoccupied; blur_rows/blur_srcs: the same taps
    flattened for gather-and-accumulate; n_vec: (v,) float64
    bistochastization vector (all ones until bistochastize() has run).
    """

    shape: tuple[int, int]
    coords: np.ndarray
    pixel_to_vertex: np.ndarray
    splat_counts: np.ndarray
    blur_neighbors: np.ndarray
    blur_rows: np.ndarray
    blur_srcs: np.ndarray
    n_vec: np.ndarray

    def __post_init__(self) -> None:
        for name in (
            "coords",
            "pixel_to_vertex",
            "splat_counts",
            "blur_neighbors",
            "blur_rows",
            "blur_srcs",
            "n_vec",
        ):
            arr = np.ascontiguousarray(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def vertex_count(self) -> int:
        return self.coords.shape[0]

    @property
    def n_pixels(self) -> int:
        return self.shape[0] * self.shape[1]


@dataclass(frozen=True)
class FbsProblem:
    """Target image t, per-pixel confidence c >= 0, pairwise multiplier."""

    target: np.ndarray
    confidence: np.ndarray
    lam: float

    def __post_init__(self) -> None:
        t = np.ascontiguousarray(self.target, dtype=np.float64)
        c = np.ascontiguousarray(self.confidence, dtype=np.float64)
        if t.shape != c.shape:
            raise LengthMismatchError("target and confidence shapes differ")
        if not np.isfinite(t).all():
            raise InvalidParameterError("target must be finite")
        if not np.isfinite(c).all() or (c < 0).any():
            raise InvalidParameterError("confidence must be finite and >= 0")
        if not (c > 0).any():
            raise InvalidParameterError("at least one pixel needs confidence > 0")
        if self.lam < 0:
            raise InvalidParameterError("lam must be >= 0")
        t.flags.writeable = False
        c.flags.writeable = False
        object.__setattr__(self, "target", t)
        object.__setattr__(self, "confidence", c)


def build_grid(ref_img: YuvImage, params: GridParams) -> BilateralGrid:
    """Quantize every pixel to its 5-D lattice cell and index the occupied
    vertices, their populations, and their +-1 neighbors per dimension."""
    h, w = ref_img.height, ref_img.width
    xs = np.tile(np.arange(w, dtype=np.float64), h)
    ys = np.repeat(np.arange(h, dtype=np.float64), w)
    coords = np.stack(
        [
            np.floor(xs / params.sigma_xy),
            np.floor(ys / params.sigma_xy),
            np.floor(ref_img.luma.ravel() / params.sigma_l),
            np.floor(ref_img.chroma_u.ravel() / params.sigma_uv),
            np.floor(ref_img.chroma_v.ravel() / params.sigma_uv),
        ],
        axis=1,
    ).astype(np.int64)
    verts, pixel_to_vertex = np.unique(coords, axis=0, return_inverse=True)
    pixel_to_vertex = pixel_to_vertex.ravel().astype(np.int64)
    counts = np.bincount(pixel_to_vertex, minlength=verts.shape[0]).astype(np.float64)

    index = {row.tobytes(): i for i, row in enumerate(verts)}
    neighbors = np.full((verts.shape[0], _N_DIMS, 2), -1, dtype=np.int64)
    shifted = verts.copy()
    for d in range(_N_DIMS):
        for s, delta in enumerate((-1, 1)):
            shifted[:, d] = verts[:, d] + delta
            for i, row in enumerate(shifted):
                j = index.get(row.tobytes())
                if j is not None:
                    neighbors[i, d, s] = j
        shifted[:, d] = verts[:, d]

    flat_nb = neighbors.reshape(verts.shape[0], -1)
    rows, taps = np.nonzero(flat_nb >= 0)
    return BilateralGrid(
        shape=(h, w),
        coords=verts,
        pixel_to_vertex=pixel_to_vertex,
        splat_counts=counts,
        blur_neighbors=neighbors,
        blur_rows=rows.astype(np.int64),
        blur_srcs=flat_nb[rows, taps],
        n_vec=np.ones(verts.shape[0], dtype=np.float64),
    )


def splat(grid: BilateralGrid, pixel_values: np.ndarray) -> np.ndarray:
    """S x: sum per vertex of the values of its pixels."""
    flat = np.asarray(pixel_values, dtype=np.float64).ravel()
    if flat.size != grid.n_pixels:
        raise LengthMismatchError(
            f"expected {grid.n_pixels} pixel values, got {flat.size}"
        )
    return np.bincount(
        grid.pixel_to_vertex, weights=flat, minlength=grid.vertex_count
    )


def slice_back(grid: BilateralGrid, vertex_values: np.ndarray) -> np.ndarray:
    """S^T y: every pixel reads the value of its vertex; returns (h, w)."""
    y = np.asarray(vertex_values, dtype=np.float64)
    if y.size != grid.vertex_count:
        raise LengthMismatchError(
            f"expected {grid.vertex_count} vertex values, got {y.size}"
        )
    return y[grid.pixel_to_vertex].reshape(grid.shape)


def blur_apply(grid: BilateralGrid, x: np.ndarray) -> np.ndarray:
    """B x: center tap of weight 10 plus the +-1 neighbor taps (weight 1)
    along each of the five lattice dimensions; missing neighbors contribute
    nothing."""
    x = np.asarray(x, dtype=np.float64)
    if x.size != grid.vertex_count:
        raise LengthMismatchError(
            f"expected {grid.vertex_count} vertex values, got {x.size}"
        )
    taps = np.bincount(
        grid.blur_rows, weights=x[grid.blur_srcs], minlength=grid.vertex_count
    )
    return BLUR_CENTER_WEIGHT * x + taps


def bistochastize(
    grid: BilateralGrid,
    max_iters: int = DEFAULT_BISTOCH_ITERS,
    tol: float = DEFAULT_BISTOCH_TOL,
) -> BilateralGrid:
    """Fixed-point iteration n <- sqrt(n * m / B(n)) from the current n_vec.

    At the fixed point n * B(n) = m holds elementwise, which makes the
    induced affinity W_hat = S^T Dm^-1 Dn B Dn Dm^-1 S row-stochastic.
    Hitting the iteration cap with the change still above 10x tol is
    reported as a ConvergenceWarning, not an error.
    """
    n = grid.n_vec.astype(np.float64).copy()
    m = grid.splat_counts
    change = 0.0
    for _ in range(max_iters):
        n_new = np.sqrt(n * m / blur_apply(grid, n))
        change = float(np.max(np.abs(n_new - n) / np.maximum(n, 1e-30)))
        n = n_new
        if change < tol:
            break
    else:
        if change > 10.0 * tol:
            warnings.warn(
                f"bistochastization stopped at change {change:.3e} after "
                f"{max_iters} iterations (tol {tol:.1e})",
                ConvergenceWarning,
                stacklevel=2,
            )
    return replace(grid, n_vec=n)


def apply_w_hat(grid: BilateralGrid, v: np.ndarray) -> np.ndarray:
    """W_hat v, matrix-free: slice(Dm^-1 Dn B Dn Dm^-1 splat(v))."""
    m = grid.splat_counts
    n = grid.n_vec
    z = splat(grid, v) / m
    z = n * blur_apply(grid, n * z) / m
    return slice_back(grid, z)


def fbs_solve(
    grid: BilateralGrid,
    prob: FbsProblem,
    cg_tol: float = DEFAULT_CG_TOL,
    cg_max_iters: int = DEFAULT_CG_ITERS,
    stats: dict | None = None,
    warm_start: np.ndarray | None = None,
) -> np.ndarray:
    """Minimize sum_i c_i (v_i - t_i)^2 + (lam/2) sum_ij W_hat_ij (v_i - v_j)^2
    over vertex-constant fields.

    Assembles A = lam (Dm - Dn B Dn) + diag(S c) and b = S(c * t) in
    bilateral space, solves A y = b with Jacobi-preconditioned conjugate
    gradient started from the confidence-weighted vertex means, and slices
    the solution back to pixels.

    Parameters
    ----------
    grid : BilateralGrid
        Must already be bistochastized.
    prob : FbsProblem
        Target, confidence, and pairwise multiplier.
    cg_tol : float
        Stop when ||A y - b|| / ||b|| drops below this.
    cg_max_iters : int
        Iteration cap; exceeding it with residual > 10x tol emits a
        ConvergenceWarning.
    stats : dict, optional
        If given, filled with iterations / residual / converged /
        residual_history.
    warm_start : np.ndarray, optional
        Pixel field to start from (e.g. the previous smoothing result in an
        alternating scheme); defaults to the confidence-weighted vertex
        means of the target.
    """
    if prob.target.shape != grid.shape:
        raise LengthMismatchError(
            f"problem shape {prob.target.shape} != grid shape {grid.shape}"
        )
    m = grid.splat_counts
    n = grid.n_vec
    lam = float(prob.lam)
    sc = splat(grid, prob.confidence)
    sct = splat(grid, prob.confidence * prob.target)

    if lam == 0.0 and (sc <= 0.0).any():
        raise SingularSystemError(
            "lam = 0 with zero-confidence vertices leaves the system singular"
        )

    def apply_a(y: np.ndarray) -> np.ndarray:
        return lam * (m * y - n * blur_apply(grid, n * y)) + sc * y

    # diag(Dn B Dn) is the blur center weight times n^2.
    diag = lam * (m - BLUR_CENTER_WEIGHT * n * n) + sc
    diag = np.maximum(diag, 1e-30)

    b = sct
    if warm_start is not None:
        y = splat(grid, np.asarray(warm_start, dtype=np.float64) * prob.confidence)
        with np.errstate(invalid="ignore", divide="ignore"):
            y = np.where(sc > 0.0, y / sc, float(prob.target.mean()))
    else:
        with np.errstate(invalid="ignore", divide="ignore"):
            y = np.where(sc > 0.0, sct / sc, float(prob.target.mean()))

    norm_b = float(np.linalg.norm(b))
    history: list[float] = []
    if norm_b == 0.0:
        y = np.zeros_like(y)
        rel = 0.0
        iters = 0
    else:
        r = b - apply_a(y)
        z = r / diag
        p = z.copy()
        rz = float(r @ z)
        rel = float(np.linalg.norm(r)) / norm_b
        history.append(rel)
        iters = 0
        for iters in range(1, cg_max_iters + 1):
            if rel < cg_tol:
                iters -= 1
                break
            ap = apply_a(p)
            pap = float(p @ ap)
            # A is SPD whenever some confidence is positive.
            if pap <= 0.0:
                raise AssertionError(
                    f"conjugate gradient lost positive definiteness (pAp={pap:.3e})"
                )
            alpha = rz / pap
            y = y + alpha * p
            r = r - alpha * ap
            rel = float(np.linalg.norm(r)) / norm_b
            history.append(rel)
            z = r / diag
            rz_new = float(r @ z)
            p = z + (rz_new / rz) * p
            rz = rz_new
        converged = rel < cg_tol
        if not converged and rel > 10.0 * cg_tol:
            warnings.warn(
                f"conjugate gradient stopped at relative residual {rel:.3e} "
                f"after {iters} iterations (tol {cg_tol:.1e})",
                ConvergenceWarning,
                stacklevel=2,
            )
    if stats is not None:
        stats["iterations"] = iters
        stats["residual"] = rel
        stats["converged"] = rel < cg_tol or norm_b == 0.0
        stats["residual_history"] = history
    return slice_back(grid, y)
