"""Report writers: per-image CSV/JSON tables plus matplotlib figures
rendered to files alongside them."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .harness import EvalReport  # noqa: E402
from .metrics import SegmentationScores  # noqa: E402
from .segmenter import config_to_dict  # noqa: E402

# Wall times stay out of the CSV so identical configs reproduce it verbatim;
# they are reported in the JSON mirror instead.
_CSV_HEADER = ("id", *SegmentationScores.FIELDS)


def write_eval_csv(report: EvalReport, path: str | Path) -> None:
    """One row per successfully scored image, then a MEAN row."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_HEADER)
        for entry_id in sorted(report.per_image):
            s = report.per_image[entry_id]
            writer.writerow(
                [entry_id]
                + [f"{getattr(s, name):.6f}" for name in SegmentationScores.FIELDS]
            )
        if report.means is not None:
            writer.writerow(
                ["MEAN"]
                + [
                    f"{getattr(report.means, name):.6f}"
                    for name in SegmentationScores.FIELDS
                ]
            )


def report_to_dict(report: EvalReport) -> dict:
    return {
        "per_image": {k: v.as_dict() for k, v in sorted(report.per_image.items())},
        "failures": dict(sorted(report.failures.items())),
        "excluded": len(report.failures),
        "means": report.means.as_dict() if report.means is not None else None,
        "config": config_to_dict(report.config),
        "wall_times": dict(sorted(report.wall_times.items())),
        "boundary_tol": report.boundary_tol,
    }


def write_eval_json(report: EvalReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report_to_dict(report), indent=2) + "\n")


def render_eval_figure(report: EvalReport, path: str | Path) -> None:
    """Per-image IoU bars plus a mean-score summary panel."""
    ids = sorted(report.per_image)
    fig, (ax_top, ax_bot) = plt.subplots(2, 1, figsize=(max(6, len(ids) * 0.5), 7))
    ious = [report.per_image[i].iou for i in ids]
    ax_top.bar(range(len(ids)), ious, color="#4878cf")
    ax_top.set_xticks(range(len(ids)))
    ax_top.set_xticklabels(ids, rotation=60, ha="right", fontsize=7)
    ax_top.set_ylabel("IoU")
    ax_top.set_ylim(0, 1.05)
    if report.means is not None:
        ax_top.axhline(report.means.iou, color="#d65f5f", ls="--", lw=1,
                       label=f"mean {report.means.iou:.3f}")
        ax_top.legend(fontsize=8)
        vals = [getattr(report.means, n) for n in SegmentationScores.FIELDS]
        ax_bot.bar(SegmentationScores.FIELDS, vals, color="#6acc65")
        for x, val in enumerate(vals):
            ax_bot.text(x, val + 0.01, f"{val:.3f}", ha="center", fontsize=8)
    ax_bot.set_ylim(0, 1.1)
    ax_bot.set_ylabel("mean value")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_k_ablation_csv(reports: dict[int, EvalReport], path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["superpixels", "mean_iou", "mean_f2", "images", "failures"])
        for k, rep in sorted(reports.items()):
            means = rep.means
            writer.writerow(
                [
                    k,
                    f"{means.iou:.6f}" if means else "",
                    f"{means.f2:.6f}" if means else "",
                    len(rep.per_image),
                    len(rep.failures),
                ]
            )


def render_k_ablation_figure(
    reports: dict[int, EvalReport], path: str | Path
) -> None:
    """Mean IoU and F2 as a function of the superpixel count."""
    ks = sorted(reports)
    ious = [reports[k].means.iou if reports[k].means else float("nan") for k in ks]
    f2s = [reports[k].means.f2 if reports[k].means else float("nan") for k in ks]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ks, ious, "o-", label="mean IoU")
    ax.plot(ks, f2s, "s--", label="mean F2")
    ax.set_xlabel("superpixel count")
    ax.set_ylabel("score")
    ax.set_ylim(0, 1.05)
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_fbs_ablation_csv(reports: dict[str, EvalReport], path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variant", *SegmentationScores.FIELDS, "images", "failures"])
        for variant in ("with_fbs", "without_fbs"):
            rep = reports[variant]
            means = rep.means
            row = [variant]
            row += [
                f"{getattr(means, n):.6f}" if means else ""
                for n in SegmentationScores.FIELDS
            ]
            row += [len(rep.per_image), len(rep.failures)]
            writer.writerow(row)


def render_fbs_ablation_figure(
    reports: dict[str, EvalReport], path: str | Path
) -> None:
    """Grouped bars comparing mean scores with and without the smoothing step."""
    fields = SegmentationScores.FIELDS
    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.38
    for offset, (variant, color) in enumerate(
        (("with_fbs", "#4878cf"), ("without_fbs", "#d65f5f"))
    ):
        means = reports[variant].means
        vals = [getattr(means, n) if means else 0.0 for n in fields]
        xs = [i + (offset - 0.5) * width for i in range(len(fields))]
        ax.bar(xs, vals, width=width, label=variant.replace("_", " "), color=color)
    ax.set_xticks(range(len(fields)))
    ax.set_xticklabels(fields, rotation=20, ha="right")
    ax.set_ylim(0, 1.1)
    ax.legend()
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
