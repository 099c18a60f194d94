"""Turn regret-sweep CSV reports into figures.

The input contract is the report CSV written by the experiment harness:
columns ``policy, sweep_axis, sweep_value, trials, mean_regret, stderr,
regret_kind``. Rendering draws one line per policy over the sorted sweep
values with a shaded one-standard-error band, and is deterministic given
identical inputs and a pinned toolchain.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

__version__ = "0.1.0"

REQUIRED_COLUMNS = {
    "policy", "sweep_axis", "sweep_value", "trials",
    "mean_regret", "stderr", "regret_kind",
}

AXIS_LABELS = {"budget": "budget", "cost": "interventional cost"}


class SchemaMismatch(Exception):
    """The CSV does not carry the report columns this renderer expects."""


@dataclass(frozen=True)
class FigureSpec:
    """What to render: input CSVs, regret kind, output path and labels."""

    inputs: tuple[str, ...]
    output: str
    kind: str | None = None  # simple | cumulative | None (sole kind in data)
    title: str | None = None
    xlabel: str | None = None
    ylabel: str | None = None


@dataclass
class Series:
    policy: str
    x: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray


@dataclass
class FigureResult:
    path: Path
    sweep_axis: str
    kind: str
    series: list[Series] = field(default_factory=list)


def load_rows(paths) -> list[dict]:
    rows: list[dict] = []
    for path in paths:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            header = set(reader.fieldnames or [])
            missing = REQUIRED_COLUMNS - header
            if missing:
                raise SchemaMismatch(
                    f"{path}: missing column(s) {sorted(missing)}"
                )
            rows.extend(reader)
    return rows


def collect_series(rows: list[dict], kind: str | None) -> tuple[str, str, list[Series]]:
    """Group rows by policy for one regret kind; returns (axis, kind, series)."""
    kinds = sorted({r["regret_kind"] for r in rows})
    if kind is None:
        if len(kinds) != 1:
            raise SchemaMismatch(
                f"data holds regret kinds {kinds}; pick one with --kind"
            )
        kind = kinds[0]
    rows = [r for r in rows if r["regret_kind"] == kind]
    if not rows:
        raise SchemaMismatch(f"no rows with regret kind {kind!r}")
    axes = sorted({r["sweep_axis"] for r in rows})
    if len(axes) != 1:
        raise SchemaMismatch(f"data mixes sweep axes {axes}")
    grouped: dict[str, list[tuple[float, float, float]]] = {}
    for r in rows:
        grouped.setdefault(r["policy"], []).append(
            (float(r["sweep_value"]), float(r["mean_regret"]), float(r["stderr"]))
        )
    series = []
    for policy in sorted(grouped):
        points = sorted(grouped[policy])
        arr = np.array(points)
        series.append(Series(policy, arr[:, 0], arr[:, 1], arr[:, 2]))
    return axes[0], kind, series


def render(spec: FigureSpec) -> FigureResult:
    """Render the figure described by ``spec`` and return what was drawn."""
    rows = load_rows(spec.inputs)
    axis, kind, series = collect_series(rows, spec.kind)
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=120)
    for s in series:
        ax.plot(s.x, s.mean, marker="o", markersize=3.5, linewidth=1.6, label=s.policy)
        ax.fill_between(s.x, s.mean - s.stderr, s.mean + s.stderr, alpha=0.18)
    ax.set_xlabel(spec.xlabel or AXIS_LABELS.get(axis, axis))
    ax.set_ylabel(spec.ylabel or f"mean {kind} regret")
    if spec.title:
        ax.set_title(spec.title)
    ax.legend()
    ax.grid(True, alpha=0.25)
    fig.tight_layout()
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out)
    plt.close(fig)
    return FigureResult(path=out, sweep_axis=axis, kind=kind, series=series)
