"""Render experiment CSVs into figure images plus data sidecars.

Consumes the documented CSV schemas of the simulation harness:

    fig2  d, count, ln_d, ln_count, mode     degree distribution
    fig3  ln_d, ln_count, mode               same data, log-log columns
    fig4  t, mean, stddev, mode              diameter over time
    fig5  t, coverage_mean, coverage_std, mode  rumor coverage

Every render writes the image plus a JSON sidecar holding exactly the
plotted arrays, so figure correctness is testable without comparing
pixels.  Identical input CSVs produce byte-identical sidecars.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

KINDS = ("fig2", "fig3", "fig4", "fig5")

_REQUIRED = {
    "fig2": ("d", "count", "mode"),
    "fig3": ("ln_d", "ln_count", "mode"),
    "fig4": ("t", "mean", "mode"),
    "fig5": ("t", "coverage_mean", "mode"),
}
_XY = {
    "fig2": ("d", "count"),
    "fig3": ("ln_d", "ln_count"),
    "fig4": ("t", "mean"),
    "fig5": ("t", "coverage_mean"),
}
_AXES = {
    "fig2": ("degree", "node count"),
    "fig3": ("ln degree", "ln node count"),
    "fig4": ("time slot", "network diameter"),
    "fig5": ("time slot", "rumor coverage"),
}

DEFAULT_LABELS = {"on": "with search engine", "off": "without search engine"}


class SchemaError(ValueError):
    """Input CSV lacks the columns the figure kind requires."""

    def __init__(self, path, missing, found):
        super().__init__(
            f"{path}: missing column(s) {sorted(missing)}; found {found}"
        )
        self.missing = sorted(missing)


class EmptySeriesError(ValueError):
    """No data rows to plot; no output file is written."""


@dataclass
class PlotSpec:
    kind: str
    inputs: list[str | Path]
    output: str | Path
    xlabel: str | None = None
    ylabel: str | None = None
    series_labels: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_LABELS))


def load_series(path, kind: str) -> dict[str, tuple[list[float], list[float]]]:
    """Mode -> (x, y) arrays from one CSV, schema-checked."""
    if kind not in KINDS:
        raise ValueError(f"unknown figure kind {kind!r}; expected one of {KINDS}")
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise EmptySeriesError(f"{path}: empty file")
    header = lines[0].split(",")
    missing = set(_REQUIRED[kind]) - set(header)
    if missing:
        raise SchemaError(path, missing, header)
    x_col, y_col = _XY[kind]
    xi, yi, mi = header.index(x_col), header.index(y_col), header.index("mode")
    series: dict[str, tuple[list[float], list[float]]] = {}
    for ln in lines[1:]:
        cells = ln.split(",")
        xs, ys = series.setdefault(cells[mi], ([], []))
        xs.append(float(cells[xi]))
        ys.append(float(cells[yi]))
    return series


def render(spec: PlotSpec) -> Path:
    """Write the figure image and its data sidecar; returns the image path.

    Raises EmptySeriesError (nothing written) when no rows survive, and
    SchemaError when an input lacks the kind's columns.
    """
    series: dict[str, tuple[list[float], list[float]]] = {}
    for path in spec.inputs:
        for mode, (xs, ys) in load_series(path, spec.kind).items():
            have = series.setdefault(mode, ([], []))
            have[0].extend(xs)
            have[1].extend(ys)
    series = {m: s for m, s in series.items() if s[0]}
    if not series:
        raise EmptySeriesError(f"{spec.inputs}: no data rows for {spec.kind}")

    xlabel, ylabel = _AXES[spec.kind]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    try:
        for mode in sorted(series):
            xs, ys = series[mode]
            label = spec.series_labels.get(mode, mode)
            if spec.kind in ("fig2", "fig3"):
                ax.plot(xs, ys, marker="o", markersize=3, linewidth=0.8, label=label)
            else:
                ax.plot(xs, ys, linewidth=1.5, label=label)
        if spec.kind == "fig5":
            ax.set_ylim(0.0, 1.05)
        ax.set_xlabel(spec.xlabel or xlabel)
        ax.set_ylabel(spec.ylabel or ylabel)
        ax.legend()
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        output = Path(spec.output)
        output.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(output)
    finally:
        plt.close(fig)

    sidecar = {
        "kind": spec.kind,
        "series": [
            {
                "mode": mode,
                "label": spec.series_labels.get(mode, mode),
                "x": series[mode][0],
                "y": series[mode][1],
            }
            for mode in sorted(series)
        ],
    }
    with open(sidecar_path(output), "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return output


def sidecar_path(output) -> Path:
    return Path(str(output) + ".data.json")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="figplots-render",
        description="Render a simulation CSV as a figure image plus data sidecar",
    )
    parser.add_argument("--kind", choices=KINDS, required=True)
    parser.add_argument(
        "--in",
        dest="inputs",
        action="append",
        required=True,
        help="input CSV (repeatable)",
    )
    parser.add_argument("--out", required=True, help="output image path (.svg/.png/...)")
    parser.add_argument("--xlabel")
    parser.add_argument("--ylabel")
    args = parser.parse_args(argv)
    spec = PlotSpec(
        kind=args.kind,
        inputs=args.inputs,
        output=args.out,
        xlabel=args.xlabel,
        ylabel=args.ylabel,
    )
    try:
        output = render(spec)
    except (SchemaError, EmptySeriesError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {output} and {sidecar_path(output)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
