"""Render sweep CSV files as risk, cosine, and margin figures.

The input contract is the sweep CSV format: a fixed header, floats at 17
significant digits, empty cells for values that are unavailable at a grid
point (the opposite regime's parameters, or theory columns inside the
near-threshold dead zone).  These scripts consume that contract and nothing
else; they never import the solver package, so either side can be rebuilt
independently.

Every figure is a pure function of the CSV content: a fixed style sheet and
DPI make re-rendering a byte-identical file.  Theory is drawn as a line,
simulation aggregates as markers with error bars of one standard error
(std / sqrt(trials)), and the interpolation threshold as a dashed vertical
line.  The excess-risk view derives the baseline error from any row where
both risk and excess theory are present, since their difference is the
kappa-independent baseline.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

__all__ = [
    "FigureSpec",
    "MissingColumn",
    "EmptyInput",
    "build_figure",
    "render",
    "main",
]


class MissingColumn(Exception):
    """A column the figure needs is absent from a CSV header."""


class EmptyInput(Exception):
    """The CSV rows contain nothing to draw for the requested figure."""


_Y_AXES = ("excess_risk", "risk", "cosine", "margin")

# Columns each selector reads, split by overlay.  kappa is always needed;
# kappa_star only when the threshold line is requested.
_THEORY_COLS = {
    "excess_risk": ("excess_theory",),
    "risk": ("risk_theory",),
    "cosine": ("cosine_theory",),
    "margin": ("normalized_margin",),
}
_SIM_COLS = {
    "excess_risk": ("risk_sim_mean", "risk_sim_std", "trials",
                    "risk_theory", "excess_theory"),
    "risk": ("risk_sim_mean", "risk_sim_std", "trials"),
    "cosine": ("cosine_sim_mean",),
    "margin": (),
}
_Y_LABELS = {
    "excess_risk": "excess risk",
    "risk": "test risk",
    "cosine": "cosine similarity",
    "margin": "normalized margin",
}

_STYLE = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 150,
    "savefig.dpi": 150,
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.6,
    "svg.hashsalt": "ddc-figures",
}


@dataclass(frozen=True)
class FigureSpec:
    """One figure: input CSVs, a y-axis selector, overlays, output path."""

    csv_paths: tuple
    y_axis: str
    out_path: str
    theory_line: bool = True
    sim_markers: bool = True
    threshold_line: bool = True

    def __post_init__(self):
        if isinstance(self.csv_paths, str):
            object.__setattr__(self, "csv_paths", (self.csv_paths,))
        else:
            object.__setattr__(self, "csv_paths", tuple(self.csv_paths))
        if not self.csv_paths:
            raise ValueError("csv_paths must name at least one file")
        if self.y_axis not in _Y_AXES:
            raise ValueError(f"unknown y-axis selector: {self.y_axis!r}; "
                             f"choose one of {_Y_AXES}")
        if not self.out_path:
            raise ValueError("out_path must be a file name")

    def required_columns(self) -> set:
        needed = {"kappa"}
        if self.threshold_line:
            needed.add("kappa_star")
        if self.theory_line:
            needed.update(_THEORY_COLS[self.y_axis])
        if self.sim_markers:
            needed.update(_SIM_COLS[self.y_axis])
        return needed


def _read_rows(spec: FigureSpec):
    """Parse and concatenate the CSVs, sorted by kappa.

    Numeric cells parse to float, empty cells to None; the header of every
    file must contain each column the figure reads.
    """
    rows = []
    for path in spec.csv_paths:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            header = set(reader.fieldnames or ())
            absent = sorted(spec.required_columns() - header)
            if absent:
                raise MissingColumn(
                    f"{path} lacks column(s) {', '.join(absent)}")
            for rec in reader:
                row = {}
                for key, raw in rec.items():
                    if key in ("regime", "solver_flags"):
                        row[key] = raw
                    else:
                        row[key] = float(raw) if raw else None
                rows.append(row)
    if not rows:
        raise EmptyInput("the input CSVs contain no rows")
    rows.sort(key=lambda row: row["kappa"])
    return rows


def _series(rows, ycol):
    pts = [(row["kappa"], row[ycol]) for row in rows
           if row.get(ycol) is not None]
    return [p[0] for p in pts], [p[1] for p in pts]


def _sim_series(rows, spec):
    """(x, y, yerr) of the simulation markers, or None when absent."""
    y = spec.y_axis
    if y == "margin":
        return None
    if y == "cosine":
        xs, ys = _series(rows, "cosine_sim_mean")
        return (xs, ys, None) if xs else None
    baseline = 0.0
    if y == "excess_risk":
        anchors = [row for row in rows
                   if row.get("risk_theory") is not None
                   and row.get("excess_theory") is not None]
        if not anchors:
            return None
        baseline = anchors[0]["risk_theory"] - anchors[0]["excess_theory"]
    xs, ys, errs = [], [], []
    for row in rows:
        mean = row.get("risk_sim_mean")
        if mean is None:
            continue
        xs.append(row["kappa"])
        ys.append(mean - baseline)
        std = row.get("risk_sim_std") or 0.0
        trials = row.get("trials") or 1.0
        errs.append(std / math.sqrt(trials))
    return (xs, ys, errs) if xs else None


def build_figure(spec: FigureSpec):
    """The matplotlib Figure for `spec`; render() saves it to disk."""
    rows = _read_rows(spec)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        drew = False
        if spec.theory_line:
            xs, ys = _series(rows, _THEORY_COLS[spec.y_axis][0])
            if xs:
                ax.plot(xs, ys, color="C0", label="theory")
                drew = True
        if spec.sim_markers:
            sim = _sim_series(rows, spec)
            if sim is not None:
                xs, ys, errs = sim
                if errs is None:
                    ax.plot(xs, ys, "o", color="C1", markersize=4,
                            label="simulation")
                else:
                    ax.errorbar(xs, ys, yerr=errs, fmt="o", color="C1",
                                markersize=4, capsize=2, label="simulation")
                drew = True
        if not drew:
            plt.close(fig)
            raise EmptyInput(
                f"no {spec.y_axis} values to draw in the input rows")
        if spec.threshold_line:
            stars = [row["kappa_star"] for row in rows
                     if row.get("kappa_star") is not None]
            if stars:
                ax.axvline(stars[0], color="0.4", linestyle="--",
                           label="kappa*")
        ax.set_xlabel("kappa = p / n")
        ax.set_ylabel(_Y_LABELS[spec.y_axis])
        ax.legend()
        fig.tight_layout()
    return fig


def render(spec: FigureSpec) -> str:
    """Write the figure to spec.out_path and return that path.

    The style context must still be active while saving: SVG element ids
    are derived from svg.hashsalt at write time, and a blank timestamp
    keeps repeated renders byte-identical.
    """
    fig = build_figure(spec)
    metadata = {"Date": None} if spec.out_path.endswith(".svg") else None
    with matplotlib.rc_context(_STYLE):
        fig.savefig(spec.out_path, metadata=metadata)
    plt.close(fig)
    return spec.out_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ddc-figures",
        description="Render a sweep CSV as a risk, cosine, or margin figure.")
    parser.add_argument("--csv", action="append", required=True,
                        help="input sweep CSV (repeatable)")
    parser.add_argument("--y", required=True, choices=_Y_AXES)
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--no-theory", action="store_true")
    parser.add_argument("--no-markers", action="store_true")
    parser.add_argument("--no-threshold", action="store_true")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        spec = FigureSpec(csv_paths=tuple(args.csv), y_axis=args.y,
                          out_path=args.out,
                          theory_line=not args.no_theory,
                          sim_markers=not args.no_markers,
                          threshold_line=not args.no_threshold)
        print(render(spec))
        return 0
    except (ValueError, OSError, MissingColumn, EmptyInput) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
