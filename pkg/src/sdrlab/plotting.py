"""Line charts of experiment summaries, written as SVG files.

Uses the non-interactive Agg backend and fixes the SVG hash salt and
metadata so figures are reproducible byte for byte.
"""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .errors import InputError  # noqa: E402
from .experiments import RiskSummary  # noqa: E402

STYLE = {
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "axes.labelsize": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "lines.linewidth": 1.4,
    "lines.markersize": 3.5,
    "svg.hashsalt": "sdrlab",
    "svg.fonttype": "none",
}

Series = Mapping[str, tuple[Sequence[float], Sequence[float]]]


def write_svg_lines(
    series: Series,
    path,
    xlabel: str = "kappa",
    ylabel: str = "mean loss",
    title: str | None = None,
    logx: bool = False,
) -> Path:
    """Draw one polyline per entry of ``series`` (label -> (x, y)) and save as SVG."""
    if not series:
        raise InputError("no series to plot")
    path = Path(path)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        for label, (x, y) in series.items():
            ax.plot(list(x), list(y), marker="o", label=str(label))
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if logx:
            ax.set_xscale("log")
        if title:
            ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
        plt.close(fig)
    return path


def dtsir_series(summaries: Sequence[RiskSummary], quantity: str = "mean_loss") -> dict[str, Series]:
    """Group DT-SIR summaries into ``{model: {"p=..": (kappas, values)}}``."""
    out: dict[str, dict[str, tuple[list, list]]] = defaultdict(dict)
    for s in summaries:
        xs, ys = out[s.model].setdefault(f"p={s.p}", ([], []))
        xs.append(s.kappa)
        ys.append(getattr(s, quantity))
    return {m: dict(v) for m, v in out.items()}


def plot_dtsir_curves(summaries: Sequence[RiskSummary], out_dir) -> list[Path]:
    """Mean loss and kappa * mean loss against kappa, one file pair per model."""
    out_dir = Path(out_dir)
    paths = []
    for quantity, ylabel, stem in (
        ("mean_loss", "mean loss", "dtsir_loss"),
        ("mean_kappa_loss", "kappa x mean loss", "dtsir_kappa_loss"),
    ):
        for model, series in dtsir_series(summaries, quantity).items():
            paths.append(
                write_svg_lines(series, out_dir / f"{stem}_{model}.svg", ylabel=ylabel, title=model)
            )
    return paths


def plot_table1(summaries: Sequence[RiskSummary], out_dir) -> list[Path]:
    """Mean top eigenvalue against H, one line per n, one file per mu."""
    out_dir = Path(out_dir)
    by_mu: dict[float, dict[str, tuple[list, list]]] = defaultdict(dict)
    for s in summaries:
        xs, ys = by_mu[s.mu].setdefault(f"n={s.n}", ([], []))
        xs.append(s.H)
        ys.append(s.mean_eigs[0])
    return [
        write_svg_lines(series, out_dir / f"table1_mu{mu:g}.svg", xlabel="H",
                        ylabel="mean top eigenvalue", title=f"mu = {mu:g}", logx=True)
        for mu, series in by_mu.items()
    ]
