"""Fuzz report files: a per-case CSV and a summary figure."""
from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

GOLDEN = (5 ** 0.5 - 1) / 2
STYLE = {
    "font.family": "serif",
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}

CSV_FIELDS = ("index", "verified", "states", "checks", "non_bottom_checks", "exclusions",
              "guarded", "full", "guarded_checks", "guarded_perm_checks", "coexec_steps",
              "violations", "flags")


def new_figure(width: float = 6.0, ncols: int = 2):
    plt.rcParams.update(STYLE)
    return plt.subplots(1, ncols, figsize=(width, width * GOLDEN / ncols * 1.4))


def save(fig, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def write_report(report, out_dir: str) -> tuple:
    """Write fuzz.csv and fuzz.png into out_dir; returns both paths."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "fuzz.csv")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_FIELDS)
        for c in report.cases:
            row = []
            for k in CSV_FIELDS:
                v = getattr(c, k)
                row.append(";".join(v) if isinstance(v, list) else v)
            w.writerow(row)

    fig, (left, right) = new_figure()
    ver = [c for c in report.cases if c.verified]
    rej = [c for c in report.cases if not c.verified]
    left.scatter([c.states for c in rej], [c.checks for c in rej], s=8, marker="x",
                 color="0.6", label="rejected")
    left.scatter([c.states for c in ver], [c.non_bottom_checks for c in ver], s=8,
                 color="C0", label="verified")
    left.set_xlabel("symbolic states")
    left.set_ylabel("run-time checks")
    left.legend(frameon=False)

    kinds = {}
    for c in ver:
        kinds[c.guarded.split(" ")[0]] = kinds.get(c.guarded.split(" ")[0], 0) + 1
    names = sorted(kinds)
    right.bar(range(len(names)), [kinds[n] for n in names], color="C0")
    right.set_xticks(range(len(names)))
    right.set_xticklabels(names)
    right.set_ylabel("verified programs")
    right.set_title(f"guarded outcomes, seed {report.config.seed}")
    png_path = save(fig, os.path.join(out_dir, "fuzz.png"))
    return csv_path, png_path
