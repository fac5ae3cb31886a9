"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines inline.
"""

from __future__ import annotations

import os
import time

import numpy as np
import pytest

from geoseg.bilateral import FbsProblem, GridParams, bistochastize, build_grid, fbs_solve
from geoseg.harness import evaluate, index_dataset, mean_scores
from geoseg.imagecore import BinaryMask, ImageBuffer, rgb_to_yuv
from geoseg.metrics import score
from geoseg.segmenter import SolverConfig, segment, u_update
from geoseg.superpixel import multi_source_dijkstra
from geoseg.unary import UnaryField

from helpers import (
    add_color_noise,
    dense_fbs_minimizer,
    dense_w_hat,
    floyd_warshall,
    random_connected_graph,
    synthetic_suite,
)


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def _fbs_instances(n: int):
    """Random solver instances on grids fine enough to resolve every pixel.

    With one vertex per pixel the factorized solve spans the full pixel
    space, so the dense minimizer is the exact reference; coarser grids
    restrict the solution to vertex-constant fields and answer a different
    question.
    """
    rng = np.random.default_rng(2024)
    for _ in range(n):
        h = int(rng.integers(6, 21))
        w = int(rng.integers(6, 21))
        px = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
        # Carve flat patches so color cells are shared and the 5-D blur has
        # nontrivial structure.
        px[:, : w // 2] = px[0, 0]
        if rng.random() < 0.5:
            px[: h // 2, w // 2 :] = px[0, -1]
        yuv = rgb_to_yuv(ImageBuffer(px))
        params = GridParams(
            sigma_xy=1.0,
            sigma_l=float(rng.uniform(0.2, 0.6)),
            sigma_uv=float(rng.uniform(0.2, 0.6)),
        )
        t = rng.random((h, w))
        c = rng.uniform(0.1, 1.0, size=(h, w))
        lam = float(rng.uniform(0.5, 8.0))
        yield yuv, params, t, c, lam


def test_fbs_oracle_equivalence():
    start = time.perf_counter()
    worst = 0.0
    count = 0
    for yuv, params, t, c, lam in _fbs_instances(50):
        grid = bistochastize(build_grid(yuv, params), max_iters=300, tol=1e-12)
        w_hat = dense_w_hat(grid, yuv, params)
        expect = dense_fbs_minimizer(w_hat, t, c, lam)
        got = fbs_solve(grid, FbsProblem(t, c, lam), cg_tol=1e-9, cg_max_iters=500)
        rms = float(np.sqrt(np.mean((got.ravel() - expect) ** 2)))
        worst = max(worst, rms)
        count += 1
    elapsed = time.perf_counter() - start
    _report(
        "FBS oracle equivalence",
        worst < 1e-4 and elapsed < 60.0 and count >= 50,
        f"{count} instances, worst RMS {worst:.3e}, {elapsed:.1f}s",
    )


def test_bistochastization():
    worst_dev = 0.0
    worst_asym = 0.0
    all_nonneg = True
    for yuv, params, _, _, _ in _fbs_instances(50):
        grid = bistochastize(build_grid(yuv, params))  # default settings
        w_hat = dense_w_hat(grid, yuv, params)
        worst_asym = max(worst_asym, float(np.abs(w_hat - w_hat.T).max()))
        all_nonneg = all_nonneg and bool((w_hat >= 0).all())
        row_sums = w_hat @ np.ones(w_hat.shape[0])
        worst_dev = max(worst_dev, float(np.abs(row_sums - 1.0).max()))
    _report(
        "Bistochastization",
        worst_dev <= 1e-4 and worst_asym < 1e-12 and all_nonneg,
        f"row-sum dev {worst_dev:.3e}, asymmetry {worst_asym:.1e}, "
        f"nonnegative={all_nonneg}",
    )


def test_geodesic_oracle():
    rng = np.random.default_rng(777)
    worst = 0.0
    for _ in range(100):
        graph = random_connected_graph(rng, max_nodes=30)
        dense = floyd_warshall(graph.n_nodes, graph.edges, graph.weights)
        n_src = int(rng.integers(1, graph.n_nodes + 1))
        sources = rng.choice(graph.n_nodes, size=n_src, replace=False)
        expect = dense[:, sources].min(axis=1)
        got = multi_source_dijkstra(graph, sources)
        worst = max(worst, float(np.abs(got - expect).max()))
    _report(
        "Geodesic oracle",
        worst <= 1e-12,
        f"100 graphs, worst deviation {worst:.2e}",
    )


def test_u_subproblem():
    rng = np.random.default_rng(31337)
    n = 120_000
    f1 = rng.uniform(0.0, 2.0, size=(1, n))
    f2 = rng.uniform(0.0, 2.0, size=(1, n))
    unary = UnaryField(f1=f1, f2=f2)
    v = rng.uniform(-1.0, 2.0, size=(1, n))
    u0 = rng.uniform(0.0, 1.0, size=(1, n))
    worst = 0.0
    for theta in (0.02, 0.1, 0.7):
        closed = u_update(unary, v, theta)
        sgd = u_update(unary, v, theta, sgd_iters=50, u0=u0, method="sgd")
        worst = max(worst, float(np.abs(closed - sgd).max()))
    _report(
        "u-subproblem SGD vs closed form",
        worst < 1e-6,
        f"{3 * n} pixels, worst |diff| {worst:.2e}",
    )


def test_surrogate_monotonicity():
    rng = np.random.default_rng(99)
    cfg = SolverConfig(k_target=64, max_outer_iters=10)
    worst_rise = 0.0
    runs = 0
    scenes = synthetic_suite(seed=5150, n=20, size=32)
    for img, scribbles, _ in scenes:
        noisy = add_color_noise(img, rng, sigma=25.0)
        state = segment(noisy, scribbles, cfg)
        trace = state.half_step_trace
        for prev, cur in zip(trace, trace[1:]):
            allowed = 10.0 * 1e-5 * max(1.0, abs(prev))
            worst_rise = max(worst_rise, (cur - prev) / max(1.0, abs(prev)))
            if cur > prev + allowed:
                _report(
                    "Surrogate monotonicity",
                    False,
                    f"rise {cur - prev:.3e} above tolerance {allowed:.3e}",
                )
        runs += 1
    _report(
        "Surrogate monotonicity",
        runs == 20,
        f"{runs} runs, worst relative rise {worst_rise:.2e}",
    )


def _suite_config() -> SolverConfig:
    return SolverConfig(lam=100.0, theta=0.1, k_target=256)


def test_end_to_end_synthetic_accuracy():
    start = time.perf_counter()
    scenes = synthetic_suite(seed=7, n=20, size=128)
    ious = []
    seeds_ok = True
    for img, scribbles, gt in scenes:
        state = segment(img, scribbles, _suite_config())
        ious.append(score(state.mask, gt).iou)
        seeds_ok = seeds_ok and bool(
            state.mask.values[scribbles.fg_mask()].all()
            and not state.mask.values[scribbles.bg_mask()].any()
        )
    elapsed = time.perf_counter() - start
    mean_iou = float(np.mean(ious))
    _report(
        "End-to-end synthetic accuracy",
        mean_iou >= 0.95 and seeds_ok and elapsed < 120.0,
        f"mean IoU {mean_iou:.4f} (min {min(ious):.4f}), seeds_ok={seeds_ok}, "
        f"{elapsed:.1f}s",
    )


def test_fbs_ablation_trend():
    rng = np.random.default_rng(1234)
    scenes = synthetic_suite(seed=7, n=20, size=128)
    noisy = [
        (add_color_noise(img, rng, sigma=15.0), scr, gt) for img, scr, gt in scenes
    ]
    cfg = _suite_config()
    recalls = {}
    for use_fbs in (True, False):
        from dataclasses import replace

        run_cfg = replace(cfg, use_fbs=use_fbs)
        vals = [
            score(segment(img, scr, run_cfg).mask, gt).boundary_recall
            for img, scr, gt in noisy
        ]
        recalls[use_fbs] = float(np.mean(vals))
    _report(
        "FBS ablation trend",
        recalls[True] >= recalls[False],
        f"boundary recall with FBS {recalls[True]:.4f} vs without "
        f"{recalls[False]:.4f}",
    )


def test_superpixel_count_trend():
    scenes = synthetic_suite(seed=7, n=20, size=128)
    means = {}
    for k in (64, 256):
        from dataclasses import replace

        cfg = replace(_suite_config(), k_target=k)
        vals = [score(segment(img, scr, cfg).mask, gt).iou for img, scr, gt in scenes]
        means[k] = float(np.mean(vals))
    _report(
        "Superpixel count trend",
        means[256] >= means[64] - 0.02,
        f"mean IoU K=256 {means[256]:.4f} vs K=64 {means[64]:.4f}",
    )


def test_metrics_unit_truth():
    gt = np.zeros((10, 10), dtype=bool)
    gt[:, :5] = True
    pred = np.zeros((10, 10), dtype=bool)
    pred[:, :6] = True
    s = score(BinaryMask(pred), BinaryMask(gt))
    ok = (
        abs(s.iou - 0.8333) < 5e-5
        and abs(s.f2 - 0.9615) < 5e-5
        and s.error_rate == 0.10
    )
    _report(
        "Metrics unit truth",
        ok,
        f"iou {s.iou:.4f}, f2 {s.f2:.4f}, error {s.error_rate:.2f}",
    )


@pytest.mark.skipif(
    not os.environ.get("GEOSEG_VGG_ROOT"),
    reason="set GEOSEG_VGG_ROOT to the prepared VGG dataset to run",
)
def test_vgg_dataset_informative():
    """Optional, informative only: requires the external dataset arranged in
    the images/scribbles/gt layout."""
    index = index_dataset(os.environ["GEOSEG_VGG_ROOT"])
    report = evaluate(index, SolverConfig(), workers=os.cpu_count() or 1)
    mean_iou = report.means.iou if report.means else float("nan")
    _report(
        "VGG dataset run (informative)",
        abs(mean_iou - 0.623) <= 0.08,
        f"mean IoU {mean_iou:.4f} vs published 0.623 +- 0.08",
    )
