"""Figure rendering for run directories (the `report` subcommand).

Reads whatever delimited artifacts a run produced (energy.csv,
defect.csv, criteria.csv, regularity.json) and renders matplotlib
figures next to them.  Files that are absent are skipped silently, so
one reporter serves synth, simulate and analyze runs alike.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _read_csv(path: Path):
    with path.open() as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _energy_figure(run_dir: Path, out: Path):
    src = run_dir / "energy.csv"
    if not src.exists():
        return None
    _, rows = _read_csv(src)
    t = np.array([float(r[0]) for r in rows])
    e = np.array([float(r[1]) for r in rows])
    drift = np.array([float(r[2]) for r in rows])
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
    ax1.plot(t, e, "k-")
    ax1.set_ylabel("horizontal energy E(t)")
    ax2.semilogy(t, np.maximum(drift, 1e-17), "b-")
    ax2.set_ylabel("|E(t) - E(0)| / E(0)")
    ax2.set_xlabel("t")
    fig.tight_layout()
    dest = out / "energy.png"
    fig.savefig(dest, dpi=150)
    plt.close(fig)
    return dest


def _defect_figure(run_dir: Path, out: Path):
    src = run_dir / "defect.csv"
    if not src.exists():
        return None
    _, rows = _read_csv(src)
    eps = np.array([float(r[0]) for r in rows])
    d = np.array([float(r[1]) for r in rows])
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(eps, np.maximum(d, 1e-300), "ko-", label="measured")
    meta = run_dir / "defect.json"
    if meta.exists():
        blob = json.loads(meta.read_text())
        slope = blob.get("fitted_exponent")
        if slope is not None and np.isfinite(slope) and np.all(d > 0):
            ref = d[0] * (eps / eps[0]) ** slope
            ax.loglog(eps, ref, "r--", label=f"slope {slope:.3f}")
    ax.set_xlabel("scale eps")
    ax.set_ylabel("L1 defect")
    ax.legend()
    fig.tight_layout()
    dest = out / "defect_decay.png"
    fig.savefig(dest, dpi=150)
    plt.close(fig)
    return dest


def _criteria_figure(run_dir: Path, out: Path):
    src = run_dir / "criteria.csv"
    if not src.exists():
        return None
    header, rows = _read_csv(src)
    cols = ["criterion", "hypothesis_holds", "predicted_decay", "measured_decay", "decay_pass"]
    idx = [header.index(c) for c in cols]
    cells = [[r[i] for i in idx] for r in rows]
    fig, ax = plt.subplots(figsize=(7, 0.6 + 0.35 * len(cells)))
    ax.axis("off")
    table = ax.table(cellText=cells, colLabels=cols, loc="center")
    table.scale(1.0, 1.3)
    for (row, col), cell in table.get_celld().items():
        if row > 0 and col == 1:
            cell.set_facecolor("#c8e6c9" if cells[row - 1][1] == "1" else "#ffcdd2")
    fig.tight_layout()
    dest = out / "criteria.png"
    fig.savefig(dest, dpi=150)
    plt.close(fig)
    return dest


def _structure_figure(run_dir: Path, out: Path):
    src = run_dir / "structure.csv"
    if not src.exists():
        return None
    _, rows = _read_csv(src)
    fig, ax = plt.subplots(figsize=(5, 4))
    by_dir: dict = {}
    for name, sep, val in rows:
        by_dir.setdefault(name, []).append((float(sep), float(val)))
    for name, pts in by_dir.items():
        pts.sort()
        r = [p[0] for p in pts]
        v = [max(p[1], 1e-300) for p in pts]
        ax.loglog(r, v, "-", alpha=0.6, label=name)
    ax.set_xlabel("separation")
    ax.set_ylabel("increment norm")
    if len(by_dir) <= 6:
        ax.legend(fontsize=7)
    fig.tight_layout()
    dest = out / "structure.png"
    fig.savefig(dest, dpi=150)
    plt.close(fig)
    return dest


def render_run_report(run_dir: Path, out: Path) -> list:
    """Render every applicable figure; returns the list of files written."""
    written = []
    for renderer in (_energy_figure, _defect_figure, _criteria_figure, _structure_figure):
        dest = renderer(Path(run_dir), Path(out))
        if dest is not None:
            written.append(dest)
    return written
