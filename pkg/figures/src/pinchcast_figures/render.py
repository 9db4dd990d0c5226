"""Turn sweep result CSVs into mean-with-error-band comparison figures.

The input contract is the results file written by the simulation CLI: a
fixed header followed by one row per (sweep value, architecture,
radiation model, trial).  This package reads that file directly and does
not import the simulator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

EXPECTED_COLUMNS = ("scenario", "sweep_value", "architecture",
                    "radiation_model", "trial", "objective_bps_hz",
                    "group_min_rates", "iterations", "wall_ms")

FIGURE_PRESETS = {
    "fig3": dict(xlabel="alternating-optimization round",
                 title="Convergence of the multicast objective"),
    "fig4": dict(xlabel="transmit power (dBm)",
                 title="Multicast rate vs transmit power"),
    "fig5": dict(xlabel="antennas per waveguide",
                 title="Multicast rate vs antenna count"),
    "fig6": dict(xlabel="users per group",
                 title="Multicast rate vs user count"),
    "fig7": dict(xlabel="number of groups",
                 title="Multicast rate vs group count"),
    "fig8": dict(xlabel="region length (m)",
                 title="Multicast rate vs region length"),
    "fig9": dict(xlabel="region length (m)",
                 title="Multicast rate vs region length, separated groups"),
}

_STYLE = {
    "wd": dict(color="#1f77b4", marker="o"),
    "wm": dict(color="#d62728", marker="s"),
    "conv": dict(color="#2ca02c", marker="^"),
    "massive": dict(color="#9467bd", marker="v"),
}
_RADIATION_LINES = {"equal": "--", "proportional": "-", "none": "-."}


class ValidationError(ValueError):
    """Raised when the input rows cannot be rendered."""


@dataclass(frozen=True)
class FigureSpec:
    """What to render: which file, which preset, where to write."""

    input_csv: str
    figure_id: str
    output_path: str
    log_y: bool = False


@dataclass
class Series:
    """Aggregated curve for one (architecture, radiation model) pair."""

    architecture: str
    radiation_model: str
    sweep_values: np.ndarray
    means: np.ndarray
    stderr: np.ndarray   # zero where a point has a single trial

    @property
    def label(self) -> str:
        if self.radiation_model == "none":
            return self.architecture
        return f"{self.architecture} ({self.radiation_model})"


@dataclass
class FigureData:
    """Everything drawn, kept for inspection by tests and callers."""

    spec: FigureSpec
    series: list[Series] = field(default_factory=list)


def read_rows(path: str) -> list[dict]:
    """Parse a results CSV, validating the header against the contract."""
    with open(path, "r", encoding="utf-8", newline="") as handle:
        lines = [line for line in handle.read().split("\n") if line]
    if not lines:
        raise ValidationError(f"{path} is empty")
    header = lines[0].split(",")
    missing = [col for col in EXPECTED_COLUMNS if col not in header]
    if missing:
        raise ValidationError(
            f"{path} is missing required columns: {', '.join(missing)}")
    idx = {col: header.index(col) for col in EXPECTED_COLUMNS}
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != len(header):
            raise ValidationError(f"malformed line in {path}: {line!r}")
        rows.append({
            "sweep_value": float(parts[idx["sweep_value"]]),
            "architecture": parts[idx["architecture"]],
            "radiation_model": parts[idx["radiation_model"]],
            "trial": int(parts[idx["trial"]]),
            "objective": float(parts[idx["objective_bps_hz"]]),
            "iterations": int(parts[idx["iterations"]]),
        })
    if not rows:
        raise ValidationError(f"{path} has a header but no data rows")
    return rows


def aggregate(rows: list[dict]) -> list[Series]:
    """Mean and standard error per (architecture, radiation model) curve.

    Failed trials (negative iteration counts) are dropped; a curve with
    no surviving rows is an error.
    """
    alive = [r for r in rows if r["iterations"] >= 0 and np.isfinite(r["objective"])]
    if not alive:
        raise ValidationError("no successful rows to plot")
    keys = []
    for row in alive:
        key = (row["architecture"], row["radiation_model"])
        if key not in keys:
            keys.append(key)
    series = []
    for arch, model in keys:
        mine = [r for r in alive if r["architecture"] == arch
                and r["radiation_model"] == model]
        values = sorted({r["sweep_value"] for r in mine})
        means, errs = [], []
        for v in values:
            objs = np.array([r["objective"] for r in mine if r["sweep_value"] == v])
            means.append(objs.mean())
            errs.append(objs.std(ddof=1) / np.sqrt(objs.size) if objs.size > 1 else 0.0)
        series.append(Series(architecture=arch, radiation_model=model,
                             sweep_values=np.array(values),
                             means=np.array(means), stderr=np.array(errs)))
    return series


def render_figure(spec: FigureSpec) -> FigureData:
    """Render one preset figure; returns the plotted data for inspection.

    Validation failures raise before any file is touched.
    """
    if spec.figure_id not in FIGURE_PRESETS:
        raise ValidationError(
            f"unknown figure id {spec.figure_id!r}; "
            f"choose from {', '.join(sorted(FIGURE_PRESETS))}")
    rows = read_rows(spec.input_csv)
    series = aggregate(rows)
    preset = FIGURE_PRESETS[spec.figure_id]

    fig, ax = plt.subplots(figsize=(6.0, 4.2), dpi=150)
    for curve in series:
        style = _STYLE.get(curve.architecture, dict(color="#7f7f7f", marker="x"))
        line = _RADIATION_LINES.get(curve.radiation_model, "-")
        ax.plot(curve.sweep_values, curve.means, line, marker=style["marker"],
                color=style["color"], markersize=4.5, linewidth=1.4,
                label=curve.label)
        band = curve.stderr > 0
        if np.any(band):
            ax.fill_between(curve.sweep_values, curve.means - curve.stderr,
                            curve.means + curve.stderr,
                            color=style["color"], alpha=0.18, linewidth=0)
    ax.set_xlabel(preset["xlabel"])
    ax.set_ylabel("multicast rate (bits/s/Hz)")
    ax.set_title(preset["title"])
    if spec.log_y:
        ax.set_yscale("log")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.output_path, metadata={"Software": None})
    plt.close(fig)
    return FigureData(spec=spec, series=series)
