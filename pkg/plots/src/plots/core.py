"""Read summary CSVs and draw one panel per metric, one line per method.

The CSV contract is the summary file the tengraph CLI writes: a header row
with a "method" column, a sweep column ("K" or "card_A"), and one mean value
per metric column. Cells holding "n/a" mark sweep points where a method does
not apply; those points are dropped from that method's line.

Everything is validated and collected into plain lists before matplotlib is
touched, so a malformed CSV can never leave a partial image behind. The same
collected lists feed both the renderer and dump_series, which is how tests
compare plotted numbers instead of pixels.
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

DEFAULT_METRICS = ("kron_frob_error", "mode_frob_error_avg", "mode_max_error_avg")


class SchemaError(ValueError):
    """The CSV does not match the summary layout this package plots."""


@dataclass(frozen=True)
class PlotSpec:
    """What to plot: which file, which sweep column, which metric panels."""

    input: Path
    x: str
    out: Path
    fmt: str = "png"
    metrics: tuple = field(default=DEFAULT_METRICS)


def load_series(path, x, metrics=DEFAULT_METRICS):
    """Collect per-method lines for each metric from a summary CSV.

    Returns {"x": x, "panels": [{"metric": m, "lines": [...]}, ...]} where
    each line is {"method": name, "x": [...], "y": [...]} sorted by sweep
    value. Methods keep their first-appearance order. Raises SchemaError on
    a missing column, an unparsable cell, a duplicate (method, x) pair, or
    a file with no data rows.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty file")
    header, data = rows[0], rows[1:]
    missing = [c for c in [x, "method", *metrics] if c not in header]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing} in {header}")
    if not data:
        raise SchemaError(f"{path}: no data rows")
    at = {c: header.index(c) for c in header}

    methods = []
    points = {}  # (method, metric) -> list of (x, y)
    seen = set()
    for lineno, row in enumerate(data, start=2):
        if len(row) != len(header):
            raise SchemaError(
                f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}"
            )
        method = row[at["method"]]
        try:
            xval = int(row[at[x]])
        except ValueError:
            raise SchemaError(f"{path}:{lineno}: bad {x} value {row[at[x]]!r}")
        if (method, xval) in seen:
            raise SchemaError(f"{path}:{lineno}: duplicate row for {method}, {x}={xval}")
        seen.add((method, xval))
        if method not in methods:
            methods.append(method)
        for metric in metrics:
            cell = row[at[metric]]
            if cell == "n/a":
                continue
            try:
                yval = float(cell)
            except ValueError:
                raise SchemaError(f"{path}:{lineno}: bad {metric} value {cell!r}")
            points.setdefault((method, metric), []).append((xval, yval))

    panels = []
    for metric in metrics:
        lines = []
        for method in methods:
            pts = sorted(points.get((method, metric), []))
            if pts:
                lines.append(
                    {
                        "method": method,
                        "x": [p[0] for p in pts],
                        "y": [p[1] for p in pts],
                    }
                )
        if not lines:
            raise SchemaError(f"{path}: metric {metric} has no plottable values")
        panels.append({"metric": metric, "lines": lines})
    return {"x": x, "panels": panels}


def dump_series(series, path):
    """Write the collected panel data as JSON (floats round-trip exactly)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(series, fh, indent=2)
        fh.write("\n")


def render(spec):
    """Draw the panels described by ``spec`` and write the image file.

    Returns the loaded series so callers can reuse the plotted numbers.
    """
    series = load_series(spec.input, spec.x, spec.metrics)

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    n = len(series["panels"])
    fig, axes = plt.subplots(1, n, figsize=(4.2 * n, 3.4), squeeze=False)
    for ax, panel in zip(axes[0], series["panels"]):
        ticks = set()
        for line in panel["lines"]:
            ax.plot(line["x"], line["y"], marker="o", label=line["method"])
            ticks.update(line["x"])
        ax.set_xticks(sorted(ticks))
        ax.set_xlabel(spec.x)
        ax.set_title(panel["metric"])
        ax.grid(True, alpha=0.3)
    axes[0][0].set_ylabel("mean over replications")
    axes[0][-1].legend(loc="best", fontsize="small")
    fig.tight_layout()
    fig.savefig(spec.out, format=spec.fmt, dpi=150)
    plt.close(fig)
    return series
