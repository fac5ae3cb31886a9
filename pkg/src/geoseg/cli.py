"""Command-line entry points: single-image segmentation, dataset evaluation,
the two ablation protocols, and grid inspection.

Config resolution order is defaults < config file (--config or the
GEOSEG_CONFIG environment variable) < explicit flags.  Exit codes: 0 on
success, 2 for dataset/input-level failures, 3 for seed errors, 4 for
solver non-convergence under --strict.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from .errors import (
    DegenerateSeedsError,
    GeosegError,
    MissingSeedsError,
)
from .bilateral import build_grid, GridParams
from .harness import ablate_fbs, ablate_superpixels, evaluate, index_dataset
from .imagecore import (
    load_image,
    load_scribbles,
    rgb_to_yuv,
    save_gray,
    save_image,
    save_label_map,
    save_mask,
)
from .metrics import DEFAULT_BOUNDARY_TOL
from .segmenter import (
    SolverConfig,
    UNARY_MODES,
    U_STEP_METHODS,
    config_from_dict,
    config_to_dict,
    segment,
)
from .superpixel import boundary_overlay

CONFIG_ENV_VAR = "GEOSEG_CONFIG"

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SEEDS = 3
EXIT_NONCONVERGENCE = 4

_DEFAULTS = SolverConfig()


def add_config_flags(parser: argparse.ArgumentParser) -> None:
    """Flags mirroring every SolverConfig field (None = not overridden)."""
    g = parser.add_argument_group("solver configuration")
    g.add_argument("--lambda", dest="lam", type=float, default=None,
                   help=f"pairwise multiplier (default {_DEFAULTS.lam})")
    g.add_argument("--theta", type=float, default=None,
                   help=f"coupling parameter (default {_DEFAULTS.theta})")
    g.add_argument("--superpixels", type=int, default=None,
                   help=f"target superpixel count (default {_DEFAULTS.k_target})")
    g.add_argument("--sigma-xy", type=float, default=None,
                   help=f"spatial grid sigma in pixels (default {_DEFAULTS.grid.sigma_xy})")
    g.add_argument("--sigma-l", type=float, default=None,
                   help=f"luma grid sigma (default {_DEFAULTS.grid.sigma_l})")
    g.add_argument("--sigma-uv", type=float, default=None,
                   help=f"chroma grid sigma (default {_DEFAULTS.grid.sigma_uv})")
    g.add_argument("--threshold", type=float, default=None,
                   help=f"label cut on u (default {_DEFAULTS.threshold})")
    g.add_argument("--unary", dest="unary_mode", choices=UNARY_MODES, default=None,
                   help=f"unary term builder (default {_DEFAULTS.unary_mode})")
    g.add_argument("--u-step", dest="u_step", choices=U_STEP_METHODS, default=None,
                   help=f"u-subproblem solver (default {_DEFAULTS.u_step})")
    g.add_argument("--compactness", type=float, default=None,
                   help=f"SLIC compactness (default {_DEFAULTS.compactness})")
    g.add_argument("--slic-iters", type=int, default=None,
                   help=f"SLIC iterations (default {_DEFAULTS.slic_iters})")
    g.add_argument("--max-outer-iters", type=int, default=None,
                   help=f"outer iteration cap (default {_DEFAULTS.max_outer_iters})")
    g.add_argument("--outer-tol", type=float, default=None,
                   help=f"outer stopping tolerance on max|du| (default {_DEFAULTS.outer_tol})")
    g.add_argument("--sgd-step", type=float, default=None,
                   help="gradient step for --u-step sgd (default 0.5/theta)")
    g.add_argument("--sgd-iters", type=int, default=None,
                   help=f"gradient steps per u-update (default {_DEFAULTS.sgd_iters})")
    g.add_argument("--histogram-bins", type=int, default=None,
                   help=f"bins per channel for --unary histogram (default {_DEFAULTS.histogram_bins})")
    g.add_argument("--no-fbs", dest="use_fbs", action="store_false", default=None,
                   help="replace the smoothing step with v = u (ablation)")
    parser.add_argument("--config", type=Path, default=None,
                        help=f"JSON config file (fallback: ${CONFIG_ENV_VAR})")
    parser.add_argument("--strict", action="store_true",
                        help="exit 4 if the solver did not converge")


def _coerce_scalar(token: str):
    lowered = token.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    if lowered in ("null", "none"):
        return None
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        return token.strip("\"'")


def parse_config_file(path: Path) -> dict:
    """Flat key-value config: JSON object, or `key = value` lines
    (# comments allowed)."""
    text = path.read_text()
    try:
        data = json.loads(text)
        if not isinstance(data, dict):
            raise GeosegError(f"config file {path} must hold a flat object")
        return data
    except json.JSONDecodeError:
        pass
    overrides: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, _, value = line.partition(sep)
                overrides[key.strip()] = _coerce_scalar(value.strip())
                break
        else:
            raise GeosegError(f"config file {path}:{lineno}: expected key = value")
    return overrides


def resolve_config(args: argparse.Namespace) -> SolverConfig:
    cfg = SolverConfig()
    config_path = args.config
    if config_path is None and os.environ.get(CONFIG_ENV_VAR):
        config_path = Path(os.environ[CONFIG_ENV_VAR])
    if config_path is not None:
        try:
            file_overrides = parse_config_file(Path(config_path))
        except OSError as exc:
            if isinstance(exc, FileNotFoundError):
                raise
            raise GeosegError(f"unreadable config file {config_path}: {exc}") from exc
        cfg = config_from_dict(file_overrides, base=cfg)
    flag_overrides = {
        "lambda": args.lam,
        "theta": args.theta,
        "superpixels": args.superpixels,
        "sigma_xy": args.sigma_xy,
        "sigma_l": args.sigma_l,
        "sigma_uv": args.sigma_uv,
        "threshold": args.threshold,
        "unary_mode": args.unary_mode,
        "u_step": args.u_step,
        "compactness": args.compactness,
        "slic_iters": args.slic_iters,
        "max_outer_iters": args.max_outer_iters,
        "outer_tol": args.outer_tol,
        "sgd_step": args.sgd_step,
        "sgd_iters": args.sgd_iters,
        "histogram_bins": args.histogram_bins,
        "use_fbs": args.use_fbs,
    }
    # A None flag means "not given"; sgd_step keeps its file/default value then.
    flag_overrides = {k: v for k, v in flag_overrides.items() if v is not None}
    return config_from_dict(flag_overrides, base=cfg)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geoseg",
        description="Interactive binary image segmentation with superpixel "
        "geodesics and a fast bilateral solver.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_seg = sub.add_parser("segment", help="segment one image from a scribble sidecar")
    p_seg.add_argument("image", type=Path)
    p_seg.add_argument("scribbles", type=Path)
    p_seg.add_argument("out", type=Path, help="output mask PNG")
    p_seg.add_argument("--dump-debug", action="store_true",
                       help="also write superpixel overlay, f1/f2 maps, and trace JSON")
    add_config_flags(p_seg)

    p_eval = sub.add_parser("eval", help="evaluate a dataset (images/scribbles/gt)")
    p_eval.add_argument("root", type=Path)
    p_eval.add_argument("report_out", type=Path, help="output directory for reports")
    p_eval.add_argument("--workers", type=int, default=1)
    p_eval.add_argument("--boundary-tol", type=float, default=DEFAULT_BOUNDARY_TOL)
    p_eval.add_argument("--exclude-seeds", action="store_true",
                        help="score without the scribbled pixels")
    add_config_flags(p_eval)

    p_ak = sub.add_parser("ablate-k", help="sweep the superpixel count")
    p_ak.add_argument("root", type=Path)
    p_ak.add_argument("report_out", type=Path)
    p_ak.add_argument("--k-list", type=str, required=True,
                      help="comma-separated ascending superpixel counts")
    p_ak.add_argument("--workers", type=int, default=1)
    p_ak.add_argument("--boundary-tol", type=float, default=DEFAULT_BOUNDARY_TOL)
    add_config_flags(p_ak)

    p_af = sub.add_parser("ablate-fbs", help="compare full pipeline vs identity v-step")
    p_af.add_argument("root", type=Path)
    p_af.add_argument("report_out", type=Path)
    p_af.add_argument("--workers", type=int, default=1)
    p_af.add_argument("--boundary-tol", type=float, default=DEFAULT_BOUNDARY_TOL)
    add_config_flags(p_af)

    p_gi = sub.add_parser("grid-info", help="print bilateral grid statistics")
    p_gi.add_argument("image", type=Path)
    add_config_flags(p_gi)

    return parser


def _error_name(exc: BaseException) -> str:
    name = type(exc).__name__
    if name.endswith("Error"):
        name = name[: -len("Error")]
    return name


def _fail(exc: BaseException, code: int) -> int:
    print(f"{_error_name(exc)}: {exc}", file=sys.stderr)
    return code


def _run_segment(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    img = load_image(args.image)
    scribbles = load_scribbles(args.scribbles, img.width, img.height)
    start = time.perf_counter()
    state = segment(img, scribbles, cfg)
    wall = time.perf_counter() - start
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_mask(state.mask, args.out)
    print(f"wall_s={wall:.3f} outer_iters={state.outer_iters} "
          f"converged={state.converged} K={state.partition.k} "
          f"vertices={state.grid.vertex_count}")
    if args.dump_debug:
        stem = args.out.parent / args.out.stem
        save_image(boundary_overlay(img, state.partition), f"{stem}_superpixels.png")
        save_label_map(state.partition.label, f"{stem}_labels.png")
        save_gray(state.unary.f1, f"{stem}_f1.png")
        save_gray(state.unary.f2, f"{stem}_f2.png")
        debug = {
            "config": config_to_dict(cfg),
            "wall_s": wall,
            "outer_iters": state.outer_iters,
            "converged": state.converged,
            "cg_converged": state.cg_converged,
            "superpixels": state.partition.k,
            "vertex_count": state.grid.vertex_count,
            "energy_trace": state.energy_trace,
            "half_step_trace": state.half_step_trace,
        }
        Path(f"{stem}_debug.json").write_text(json.dumps(debug, indent=2) + "\n")
        with Path(f"{stem}_fbs.jsonl").open("w") as fh:
            for row in state.cg_stats:
                fh.write(json.dumps(row) + "\n")
    # CG stalls inside individual v-steps are warnings (and recorded in the
    # debug JSON); strict mode gates on the outer loop's own tolerance.
    if args.strict and not state.converged:
        print("NonConvergence: outer loop hit its iteration cap", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def _run_eval(args: argparse.Namespace) -> int:
    from . import reporting

    cfg = resolve_config(args)
    index = index_dataset(args.root)
    report = evaluate(index, cfg, boundary_tol=args.boundary_tol,
                      workers=args.workers, exclude_seeds=args.exclude_seeds)
    outdir = args.report_out
    outdir.mkdir(parents=True, exist_ok=True)
    reporting.write_eval_csv(report, outdir / "report.csv")
    reporting.write_eval_json(report, outdir / "report.json")
    reporting.render_eval_figure(report, outdir / "report.png")
    if report.means is None:
        print("NonConvergence: every dataset entry failed", file=sys.stderr)
        return EXIT_INPUT
    print(f"images={len(report.per_image)} failures={len(report.failures)} "
          f"mean_iou={report.means.iou:.4f} mean_f2={report.means.f2:.4f}")
    return EXIT_OK


def _run_ablate_k(args: argparse.Namespace) -> int:
    from . import reporting

    cfg = resolve_config(args)
    k_list = [int(tok) for tok in args.k_list.split(",") if tok.strip()]
    index = index_dataset(args.root)
    reports = ablate_superpixels(index, cfg, k_list,
                                 boundary_tol=args.boundary_tol,
                                 workers=args.workers)
    outdir = args.report_out
    outdir.mkdir(parents=True, exist_ok=True)
    reporting.write_k_ablation_csv(reports, outdir / "k_ablation.csv")
    reporting.render_k_ablation_figure(reports, outdir / "k_ablation.png")
    for k in sorted(reports):
        means = reports[k].means
        print(f"k={k} mean_iou={means.iou if means else float('nan'):.4f}")
    return EXIT_OK


def _run_ablate_fbs(args: argparse.Namespace) -> int:
    from . import reporting

    cfg = resolve_config(args)
    index = index_dataset(args.root)
    reports = ablate_fbs(index, cfg, boundary_tol=args.boundary_tol,
                         workers=args.workers)
    outdir = args.report_out
    outdir.mkdir(parents=True, exist_ok=True)
    reporting.write_fbs_ablation_csv(reports, outdir / "fbs_ablation.csv")
    reporting.render_fbs_ablation_figure(reports, outdir / "fbs_ablation.png")
    for variant in ("with_fbs", "without_fbs"):
        means = reports[variant].means
        recall = means.boundary_recall if means else float("nan")
        print(f"{variant} boundary_recall={recall:.4f}")
    return EXIT_OK


def _run_grid_info(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    img = load_image(args.image)
    grid = build_grid(rgb_to_yuv(img), cfg.grid)
    info = {
        "width": img.width,
        "height": img.height,
        "pixels": img.width * img.height,
        "vertices": grid.vertex_count,
        "pixels_per_vertex": img.width * img.height / grid.vertex_count,
        "sigma_xy": cfg.grid.sigma_xy,
        "sigma_l": cfg.grid.sigma_l,
        "sigma_uv": cfg.grid.sigma_uv,
    }
    print(json.dumps(info, indent=2))
    return EXIT_OK


_COMMANDS = {
    "segment": _run_segment,
    "eval": _run_eval,
    "ablate-k": _run_ablate_k,
    "ablate-fbs": _run_ablate_fbs,
    "grid-info": _run_grid_info,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (MissingSeedsError, DegenerateSeedsError) as exc:
        return _fail(exc, EXIT_SEEDS)
    except (GeosegError, FileNotFoundError) as exc:
        return _fail(exc, EXIT_INPUT)


if __name__ == "__main__":
    sys.exit(main())
