"""Figures from run CSVs.

Reads only the documented trace schema (t, player, action_count,
swap_regret_cum, external_regret_cum, path_len_sq_cum, nash_gap, ce_gap,
x0..x{m-1}) and never recomputes metrics.  Three figure kinds: per-player
swap regret against iteration on a logarithmic x-axis, strategy
trajectories, and cumulative squared path length.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("swap-regret", "trajectory", "path-length")
REQUIRED_COLUMNS = (
    "t", "player", "action_count", "swap_regret_cum", "external_regret_cum",
    "path_len_sq_cum", "nash_gap", "ce_gap",
)
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


class SchemaError(ValueError):
    """The CSV does not carry the documented trace columns."""


@dataclass(frozen=True)
class PlotSpec:
    """What to draw: input CSVs, figure kind, axis scale, and output path."""

    inputs: tuple
    kind: str
    output: str
    x_scale: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if self.kind not in KINDS:
            raise ValueError(f"unknown plot kind {self.kind!r}; pick one of {KINDS}")
        if self.x_scale not in (None, "log", "linear"):
            raise ValueError("x_scale must be 'log' or 'linear'")

    @property
    def effective_x_scale(self) -> str:
        if self.x_scale is not None:
            return self.x_scale
        return "linear" if self.kind == "trajectory" else "log"


@dataclass(frozen=True)
class PlayerSeries:
    player: int
    t: np.ndarray
    swap: np.ndarray
    path: np.ndarray
    strategies: np.ndarray


def load_table(path) -> list:
    """Parse one trace CSV into per-player series, schema-checked."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing required column(s) {', '.join(missing)}")
        rows = list(reader)
    players: dict[int, dict] = {}
    for row in rows:
        i = int(row["player"])
        bucket = players.setdefault(i, {"t": [], "swap": [], "path": [], "x": []})
        bucket["t"].append(float(row["t"]))
        bucket["swap"].append(float(row["swap_regret_cum"]))
        bucket["path"].append(float(row["path_len_sq_cum"]))
        m = int(row["action_count"])
        strat = []
        for j in range(m):
            col = f"x{j}"
            if col not in row or row[col] in (None, ""):
                raise SchemaError(f"{path}: missing strategy column {col}")
            strat.append(float(row[col]))
        bucket["x"].append(strat)
    out = []
    for i in sorted(players):
        b = players[i]
        out.append(
            PlayerSeries(
                player=i,
                t=np.asarray(b["t"]),
                swap=np.asarray(b["swap"]),
                path=np.asarray(b["path"]),
                strategies=np.asarray(b["x"]),
            )
        )
    if not out:
        warnings.warn(f"{path}: no data rows; axes will be empty")
    return out


def _positive_times(series: PlayerSeries):
    mask = series.t > 0
    return series.t[mask], mask


def build_figure(spec: PlotSpec):
    """Assemble the figure for a spec; one panel per input CSV."""
    tables = [load_table(path) for path in spec.inputs]
    ncols = len(tables)
    if spec.kind == "trajectory":
        nrows = max((len(tb) for tb in tables), default=1) or 1
        fig, axes = plt.subplots(
            nrows, ncols, figsize=(4.2 * ncols, 2.9 * nrows), squeeze=False, dpi=110
        )
        for c, (path, table) in enumerate(zip(spec.inputs, tables)):
            for r in range(nrows):
                ax = axes[r][c]
                ax.set_xscale(spec.effective_x_scale)
                ax.set_xlabel("iteration")
                ax.set_ylabel("probability")
                if r < len(table):
                    series = table[r]
                    for j in range(series.strategies.shape[1]):
                        ax.plot(
                            series.t, series.strategies[:, j],
                            color=_COLORS[j % len(_COLORS)], linewidth=0.9,
                            label=f"action {j}",
                        )
                    ax.set_title(f"{_short(path)} player {series.player}")
                    ax.legend(loc="upper right", fontsize=7)
                    ax.set_ylim(-0.02, 1.02)
        fig.tight_layout()
        return fig

    fig, axes = plt.subplots(1, ncols, figsize=(4.6 * ncols, 3.4), squeeze=False, dpi=110)
    for c, (path, table) in enumerate(zip(spec.inputs, tables)):
        ax = axes[0][c]
        ax.set_xscale(spec.effective_x_scale)
        ax.set_xlabel("iteration")
        if spec.kind == "swap-regret":
            ax.set_ylabel("cumulative swap regret")
            for series in table:
                t, mask = _positive_times(series)
                ax.plot(
                    t, series.swap[mask], color=_COLORS[series.player % len(_COLORS)],
                    linewidth=1.1, label=f"player {series.player}",
                )
        else:
            ax.set_ylabel("cumulative squared path length")
            for series in table:
                t, mask = _positive_times(series)
                ax.plot(
                    t, series.path[mask], color=_COLORS[series.player % len(_COLORS)],
                    linewidth=1.1, label=f"player {series.player}",
                )
        ax.set_title(_short(path))
        if table:
            ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    return fig


def _short(path) -> str:
    name = str(path).rsplit("/", 1)[-1]
    return name[:-4] if name.endswith(".csv") else name


def render(spec: PlotSpec) -> str:
    """Draw and write the image; identical inputs give identical bytes."""
    fig = build_figure(spec)
    fig.savefig(spec.output, metadata={"Software": "swapdyn-plots"})
    plt.close(fig)
    return spec.output
