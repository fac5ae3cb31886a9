"""Shared fixtures-in-plain-code: synthetic scenes, scribble construction,
and independent dense oracles for the bilateral solver tests."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from geoseg.bilateral import BLUR_CENTER_WEIGHT, BilateralGrid, GridParams
from geoseg.imagecore import (
    BACKGROUND,
    FOREGROUND,
    BinaryMask,
    ImageBuffer,
    ScribbleMap,
    YuvImage,
)


def make_scribbles(shape, fg_points=(), bg_points=()) -> ScribbleMap:
    """Scribble map from explicit (row, col) seed lists."""
    labels = np.zeros(shape, dtype=np.uint8)
    for r, c in fg_points:
        labels[r, c] = FOREGROUND
    for r, c in bg_points:
        labels[r, c] = BACKGROUND
    return ScribbleMap(labels)


def stroke_scribbles(shape, fg_row, bg_row, length=12) -> ScribbleMap:
    """One horizontal stroke per class, centered on the given rows."""
    h, w = shape
    labels = np.zeros(shape, dtype=np.uint8)
    c0 = max(0, w // 2 - length // 2)
    c1 = min(w, c0 + length)
    labels[fg_row, c0:c1] = FOREGROUND
    labels[bg_row, c0:c1] = BACKGROUND
    return ScribbleMap(labels)


def two_region_scene(
    rng: np.random.Generator,
    size: int = 128,
    textured: bool = False,
    layout: str = "vertical",
) -> tuple[ImageBuffer, ScribbleMap, BinaryMask]:
    """A color-separable two-region image with one stroke per class.

    Region colors are sampled with a healthy RGB gap so the geometry, not a
    lucky palette, decides the outcome.
    """
    while True:
        fg_color = rng.integers(0, 256, size=3)
        bg_color = rng.integers(0, 256, size=3)
        if np.linalg.norm(fg_color.astype(float) - bg_color.astype(float)) > 90:
            break
    yy, xx = np.mgrid[:size, :size]
    if layout == "vertical":
        region = xx < size // 2
    elif layout == "horizontal":
        region = yy < size // 2
    elif layout == "diagonal":
        region = xx + yy < size
    elif layout == "rect":
        q = size // 4
        region = (xx >= q) & (xx < size - q) & (yy >= q) & (yy < size - q)
    else:
        raise ValueError(f"unknown layout {layout!r}")

    img = np.where(region[..., None], fg_color, bg_color).astype(np.float64)
    if textured:
        img = img + rng.uniform(-20, 20, size=img.shape)
    img = np.clip(img, 0, 255).astype(np.uint8)

    labels = np.zeros((size, size), dtype=np.uint8)
    fg_cells = np.argwhere(region)
    bg_cells = np.argwhere(~region)
    # Strokes: short horizontal runs around interior points of each region.
    for cells, code in ((fg_cells, FOREGROUND), (bg_cells, BACKGROUND)):
        r, c = cells[len(cells) // 2]
        c0 = max(0, c - 5)
        c1 = min(size, c + 6)
        row_ok = region[r, c0:c1] if code == FOREGROUND else ~region[r, c0:c1]
        cols = np.arange(c0, c1)[row_ok]
        labels[r, cols] = code
    return ImageBuffer(img), ScribbleMap(labels), BinaryMask(region)


def synthetic_suite(
    seed: int = 7, n: int = 20, size: int = 128
) -> list[tuple[ImageBuffer, ScribbleMap, BinaryMask]]:
    """The 20-scene acceptance suite: solid and textured two-region images."""
    rng = np.random.default_rng(seed)
    layouts = ("vertical", "horizontal", "diagonal", "rect")
    scenes = []
    for i in range(n):
        scenes.append(
            two_region_scene(
                rng,
                size=size,
                textured=(i % 2 == 1),
                layout=layouts[i % len(layouts)],
            )
        )
    return scenes


def add_color_noise(
    img: ImageBuffer, rng: np.random.Generator, sigma: float = 15.0
) -> ImageBuffer:
    """Additive Gaussian channel noise, clipped back to 8 bits."""
    noisy = img.pixels.astype(np.float64) + rng.normal(0.0, sigma, size=img.pixels.shape)
    return ImageBuffer(np.clip(noisy, 0, 255).astype(np.uint8))


def write_dataset(root, scenes, ids=None) -> None:
    """Lay out (img, scribbles, gt) triplets in the images/scribbles/gt
    directory convention."""
    from geoseg.imagecore import save_image, save_mask, save_scribbles

    root = Path(root)
    for sub in ("images", "scribbles", "gt"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    for i, (img, scr, gt) in enumerate(scenes):
        name = (ids[i] if ids else f"scene{i:03d}") + ".png"
        save_image(img, root / "images" / name)
        save_scribbles(scr, root / "scribbles" / name)
        save_mask(gt, root / "gt" / name)


# ---------------------------------------------------------------------------
# Independent dense oracles for the bilateral machinery.
# ---------------------------------------------------------------------------


def reference_grid_structure(ref: YuvImage, params: GridParams):
    """Rebuild the splat map and blur matrix from scratch.

    Quantization, vertex indexing, and neighbor discovery are re-derived
    here without touching the implementation's grid internals, so structural
    bugs in build_grid cannot cancel out.
    """
    h, w = ref.height, ref.width
    n = h * w
    xs = np.tile(np.arange(w), h)
    ys = np.repeat(np.arange(h), w)
    coords = np.stack(
        [
            np.floor(xs / params.sigma_xy),
            np.floor(ys / params.sigma_xy),
            np.floor(ref.luma.ravel() / params.sigma_l),
            np.floor(ref.chroma_u.ravel() / params.sigma_uv),
            np.floor(ref.chroma_v.ravel() / params.sigma_uv),
        ],
        axis=1,
    ).astype(np.int64)
    verts, inv = np.unique(coords, axis=0, return_inverse=True)
    inv = inv.ravel()
    v_count = verts.shape[0]
    splat = np.zeros((v_count, n))
    splat[inv, np.arange(n)] = 1.0
    blur = np.eye(v_count) * BLUR_CENTER_WEIGHT
    where = {tuple(row): i for i, row in enumerate(verts)}
    for i, row in enumerate(verts):
        for d in range(5):
            for delta in (-1, 1):
                key = list(row)
                key[d] += delta
                j = where.get(tuple(key))
                if j is not None:
                    blur[i, j] += 1.0
    return verts, inv, splat, blur


def dense_w_hat(grid: BilateralGrid, ref: YuvImage, params: GridParams) -> np.ndarray:
    """Materialize W_hat = S^T Dm^-1 Dn B Dn Dm^-1 S from the reference
    structure plus the grid's bistochastization vector."""
    verts, inv, splat, blur = reference_grid_structure(ref, params)
    assert np.array_equal(verts, grid.coords), "vertex sets disagree"
    assert np.array_equal(inv, grid.pixel_to_vertex), "splat maps disagree"
    m = splat.sum(axis=1)
    dm_inv = np.diag(1.0 / m)
    dn = np.diag(grid.n_vec)
    return splat.T @ dm_inv @ dn @ blur @ dn @ dm_inv @ splat


def dense_fbs_minimizer(
    w_hat: np.ndarray, t: np.ndarray, c: np.ndarray, lam: float
) -> np.ndarray:
    """Exact pixel-space minimizer of the confidence-weighted quadratic:
    (diag(c) + lam (D_r - W_hat)) v = c * t with D_r the exact row sums."""
    n = w_hat.shape[0]
    d_r = np.diag(w_hat.sum(axis=1))
    a = np.diag(c.ravel()) + lam * (d_r - w_hat)
    return np.linalg.solve(a, (c * t).ravel())


def floyd_warshall(n_nodes: int, edges: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """All-pairs shortest paths by the cubic recurrence."""
    dist = np.full((n_nodes, n_nodes), np.inf)
    np.fill_diagonal(dist, 0.0)
    for (a, b), w in zip(edges, weights):
        a, b, w = int(a), int(b), float(w)
        if w < dist[a, b]:
            dist[a, b] = w
            dist[b, a] = w
    for k in range(n_nodes):
        via = dist[:, k : k + 1] + dist[k : k + 1, :]
        np.minimum(dist, via, out=dist)
    return dist


def random_connected_graph(rng: np.random.Generator, max_nodes: int = 30):
    """A random weighted connected graph (spanning tree plus extra edges)."""
    from geoseg.superpixel import SuperpixelGraph

    n = int(rng.integers(2, max_nodes + 1))
    edges = set()
    order = rng.permutation(n)
    for i in range(1, n):
        a = int(order[int(rng.integers(0, i))])
        b = int(order[i])
        edges.add((min(a, b), max(a, b)))
    extra = int(rng.integers(0, n))
    for _ in range(extra):
        a, b = rng.integers(0, n, size=2)
        if a != b:
            edges.add((min(int(a), int(b)), max(int(a), int(b))))
    edge_arr = np.array(sorted(edges), dtype=np.int32)
    weights = rng.uniform(0.05, 3.0, size=edge_arr.shape[0])
    return SuperpixelGraph(n_nodes=n, edges=edge_arr, weights=weights)
