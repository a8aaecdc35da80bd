"""The five figure builders.

Each builder draws onto a fresh matplotlib figure and returns the list of
manifest elements describing what it plotted, so tests can assert on
content without parsing pixels.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .schema import RenderInputError, load_artifact, require

PRUNED_COLOR = "tab:orange"
KEPT_COLOR = "tab:green"


def _term_label(entry) -> str:
    return "+".join(entry["params"]) if "params" in entry else str(entry["param_indices"])


def build_rmse_curve(paths, style):
    """Stepwise RMSE decrease; pruned or harmful terms marked with crosses."""
    (path,) = paths
    doc = load_artifact(path, {"selection_report", "diagnostics_report"})
    elements = []
    fig, ax = plt.subplots(figsize=style.get("figsize", (8, 4.5)))

    if doc["kind"] == "selection_report":
        curve = require(doc, "holdout_curve", path)
        terms = require(doc, "candidate_sequence", path)
        records = require(doc, "term_records", path)
        marked = [r["position"] for r in records if not r["retained"]]
        marker_role = "pruned_term"
        ax.set_ylabel("holdout RMSE (standardized)")
    else:
        curve = require(doc, "curve", path)
        terms = require(doc, "contributions", path)
        marked = require(doc, "negative_terms", path)
        marker_role = "negative_contribution"
        ax.set_ylabel("evaluation RMSE (standardized)")

    xs = np.arange(len(curve))
    ax.plot(xs, curve, "-o", color="tab:blue", ms=4, zorder=2)
    elements.append({"type": "line", "role": "rmse_curve", "points": len(curve)})
    if marked:
        ax.scatter(
            [p + 1 for p in marked],
            [curve[p + 1] for p in marked],
            marker="x", s=90, color=PRUNED_COLOR, zorder=3,
            label=marker_role.replace("_", " "),
        )
        ax.legend(loc="upper right", frameon=False)
    elements.append(
        {"type": "marker", "role": marker_role, "count": len(marked), "positions": list(marked)}
    )
    labels = [""] + [_term_label(t) for t in terms]
    ax.set_xticks(xs)
    ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=7)
    ax.set_xlabel("additive terms, in selection order")
    ax.set_title(style.get("title", f"RMSE decrease: {doc.get('target', '')}"))
    return fig, elements


def build_variability_grid(paths, style):
    """Targets-by-terms grid of explained variability; crosses mark negatives."""
    docs = [load_artifact(p, {"diagnostics_report"}) for p in paths]
    columns = []
    for doc in docs:
        for c in require(doc, "contributions", doc.get("target", "?")):
            label = _term_label(c)
            if label not in columns:
                columns.append(label)
    if not columns:
        raise RenderInputError("no contributions found in the given reports")
    grid = np.zeros((len(docs), len(columns)))
    for i, doc in enumerate(docs):
        for c in doc["contributions"]:
            grid[i, columns.index(_term_label(c))] += c["value"]

    fig, ax = plt.subplots(
        figsize=style.get("figsize", (max(6, 0.45 * len(columns)), 1.2 + 0.5 * len(docs)))
    )
    span = max(abs(grid.min()), abs(grid.max()), 1e-9)
    mesh = ax.imshow(grid, cmap="RdBu_r", vmin=-span, vmax=span, aspect="auto")
    fig.colorbar(mesh, ax=ax, label="explained variability")
    crosses = np.argwhere(grid < 0.0)
    if len(crosses):
        ax.scatter(crosses[:, 1], crosses[:, 0], marker="x", s=80, color="black")
    ax.set_xticks(range(len(columns)))
    ax.set_xticklabels(columns, rotation=60, ha="right", fontsize=7)
    ax.set_yticks(range(len(docs)))
    ax.set_yticklabels([d.get("target", f"report {i}") for i, d in enumerate(docs)])
    ax.set_title(style.get("title", "Explained variability by term"))
    elements = [
        {"type": "grid", "role": "variability", "rows": len(docs), "cols": len(columns)},
        {
            "type": "marker",
            "role": "negative_contribution",
            "count": int(len(crosses)),
            "cells": [[int(r), int(c)] for r, c in crosses],
        },
    ]
    return fig, elements


_BAND_ORDER = (
    ("single", "high"), ("single", "mid"), ("single", "low"),
    ("pair", "high"), ("pair", "mid"), ("pair", "low"),
    ("triple", "all"),
)


def build_grouped_bars(paths, style):
    """Banded sums of explained variability per target."""
    docs = [load_artifact(p, {"diagnostics_report"}) for p in paths]
    for doc, path in zip(docs, paths):
        if not doc.get("grouped"):
            raise RenderInputError(f"{path}: missing required field 'grouped'")
    hi, lo = docs[0]["grouped"]["thresholds"]
    labels = {
        ("single", "high"): f"single >= {hi}",
        ("single", "mid"): f"single [{lo}, {hi})",
        ("single", "low"): f"single < {lo} (incl. negative)",
        ("pair", "high"): f"pair >= {hi}",
        ("pair", "mid"): f"pair [{lo}, {hi})",
        ("pair", "low"): f"pair < {lo} (incl. negative)",
        ("triple", "all"): "triple (all)",
    }
    fig, ax = plt.subplots(figsize=style.get("figsize", (8, 1.5 + 0.8 * len(docs))))
    height = 0.8 / len(_BAND_ORDER)
    cmap = plt.get_cmap("tab10")
    for b, (kind, band) in enumerate(_BAND_ORDER):
        values = [doc["grouped"]["sums"][kind][band] for doc in docs]
        offsets = [i + (b - 3) * height for i in range(len(docs))]
        ax.barh(offsets, values, height=height, color=cmap(b), label=labels[(kind, band)])
    ax.axvline(0.0, color="black", lw=0.8)
    ax.set_yticks(range(len(docs)))
    ax.set_yticklabels([d.get("target", f"report {i}") for i, d in enumerate(docs)])
    ax.invert_yaxis()
    ax.set_xlabel("summed explained variability")
    ax.legend(fontsize=7, loc="lower right", frameon=False)
    ax.set_title(style.get("title", "Explained variability, grouped"))
    elements = [
        {
            "type": "bars",
            "role": "grouped_variability",
            "targets": len(docs),
            "bands": len(_BAND_ORDER),
            "thresholds": [hi, lo],
        }
    ]
    return fig, elements


def _scatter_stats(doc, source):
    out = {}
    for entry in require(doc, "targets", source):
        name = entry["target"]
        center = (
            entry["default"]["r_square"]
            if entry.get("default")
            else entry["mean"]
        )
        out[name] = (center, entry["min"], entry["max"])
    return out


def build_r2_scatter(paths, style):
    """R-square comparison with min/max spread bars and a one-to-one line."""
    if len(paths) not in (1, 2):
        raise RenderInputError("r2_scatter takes one or two random-splits reports")
    docs = [load_artifact(p, {"experiment_random_splits"}) for p in paths]
    stats_a = _scatter_stats(docs[0], paths[0])
    fig, ax = plt.subplots(figsize=style.get("figsize", (5.5, 5.5)))
    points = []
    if len(docs) == 1:
        for name, (center, lo, hi) in stats_a.items():
            mean = next(
                e["mean"] for e in docs[0]["targets"] if e["target"] == name
            )
            points.append((center, mean, (0.0, 0.0), (mean - lo, hi - mean), name))
        ax.set_xlabel("default-split R$^2$")
        ax.set_ylabel("random-splits mean R$^2$ (min-max bars)")
    else:
        stats_b = _scatter_stats(docs[1], paths[1])
        shared = [n for n in stats_a if n in stats_b]
        if not shared:
            raise RenderInputError("the two reports share no targets")
        for name in shared:
            xa, xlo, xhi = stats_a[name]
            yb, ylo, yhi = stats_b[name]
            points.append((xa, yb, (xa - xlo, xhi - xa), (yb - ylo, yhi - yb), name))
        ax.set_xlabel(style.get("xlabel", "run A R$^2$"))
        ax.set_ylabel(style.get("ylabel", "run B R$^2$"))

    for x, y, xerr, yerr, name in points:
        ax.errorbar(
            x, y,
            xerr=[[max(xerr[0], 0)], [max(xerr[1], 0)]],
            yerr=[[max(yerr[0], 0)], [max(yerr[1], 0)]],
            fmt="o", ms=5, capsize=2, color="tab:blue", ecolor="tab:gray",
        )
        ax.annotate(name, (x, y), fontsize=7, xytext=(4, 4), textcoords="offset points")

    lims_lo = min(min(p[0] for p in points), min(p[1] for p in points), 0.0) - 0.05
    ax.plot([lims_lo, 1.05], [lims_lo, 1.05], "--", color="black", lw=0.9)
    ax.set_xlim(lims_lo, 1.05)
    ax.set_ylim(lims_lo, 1.05)
    ax.set_title(style.get("title", "R$^2$ with sampling spread"))
    elements = [
        {"type": "line", "role": "one_to_one"},
        {"type": "errorbar", "role": "spread", "count": len(points)},
    ]
    return fig, elements


def build_learning_curve(paths, style):
    """Explained variability versus training-set size."""
    (path,) = paths
    doc = load_artifact(path, {"experiment_learning_curve"})
    summary = require(doc, "summary", path)
    cells = require(doc, "cells", path)
    sizes = [s["size"] for s in summary]
    fig, ax = plt.subplots(figsize=style.get("figsize", (6.5, 4.5)))
    elements = []
    for key, label, color in (
        ("total_mean", "all terms", "tab:blue"),
        ("top6_mean", "top 6", "tab:orange"),
        ("top3_mean", "top 3", "tab:green"),
    ):
        ax.plot(sizes, [s[key] for s in summary], "-o", color=color, label=label)
        elements.append({"type": "line", "role": key.replace("_mean", ""), "points": len(sizes)})
    ax.scatter(
        [c["size"] for c in cells],
        [c["total"] for c in cells],
        s=12, color="tab:blue", alpha=0.35,
    )
    elements.append({"type": "scatter", "role": "cells", "count": len(cells)})
    ax.set_xlabel("training ensemble members")
    ax.set_ylabel("explained variability")
    ax.set_xticks(sizes)
    ax.legend(frameon=False)
    ax.set_title(style.get("title", f"Learning curve: {doc.get('target', '')}"))
    return fig, elements


BUILDERS = {
    "rmse_curve": (build_rmse_curve, 1, 1),
    "variability_grid": (build_variability_grid, 1, None),
    "grouped_bars": (build_grouped_bars, 1, None),
    "r2_scatter": (build_r2_scatter, 1, 2),
    "learning_curve": (build_learning_curve, 1, 1),
}


def render_figure(kind, paths, style):
    """Dispatch to a builder; returns (figure, manifest elements)."""
    if kind not in BUILDERS:
        raise RenderInputError(f"unknown figure kind {kind!r}")
    builder, at_least, at_most = BUILDERS[kind]
    if len(paths) < at_least or (at_most is not None and len(paths) > at_most):
        bound = f"{at_least}" if at_most == at_least else f"{at_least}..{at_most or 'n'}"
        raise RenderInputError(f"{kind} expects {bound} input file(s), got {len(paths)}")
    return builder([str(p) for p in paths], style)
