"""Explained-variability accounting and R-square evaluation.

The stepwise curve walks the cumulative prediction term by term over the
evaluation rows, normalized by the evaluation-target standard deviation, so
it starts near 1 and ends at sqrt(1 - R^2) for well-behaved models.  Each
term's explained variability is the decrease it produces in that curve;
negative values are allowed (a term can hurt unseen data) and are listed
separately.  Contributions telescope: they sum to curve[0] - curve[-1].

Grouped summaries band per-term contributions by term order and magnitude
(thresholds default to 0.05 / 0.02, the lowest band keeping the negative
terms); three-parameter groups are summed without banding since their total
is typically already small.
"""

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .emulator import EmulatorModel, predict_term
from .errors import InputError
from .util import SCHEMA_VERSION, rmse


def r_square(predictions, truths) -> float:
    """1 - SSE / centered SST; negative when the emulator adds bias/noise."""
    p = np.asarray(predictions, dtype=float).reshape(-1)
    t = np.asarray(truths, dtype=float).reshape(-1)
    if p.shape != t.shape or p.size < 2:
        raise InputError("predictions and truths must match, length >= 2")
    denom = float(np.sum((t - t.mean()) ** 2))
    if denom == 0.0:
        raise InputError("r_square undefined for constant truths")
    return float(1.0 - np.sum((p - t) ** 2) / denom)


@dataclass
class DiagnosticsReport:
    target_name: str
    n_eval: int
    curve: list
    contributions: list
    negative_terms: list
    total_explained: float
    r_square: float
    eval_mean: float
    eval_std: float
    eval_row_ids: tuple = ()
    warnings: list = field(default_factory=list)
    grouped: dict | None = None

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "diagnostics_report",
            "target": self.target_name,
            "n_eval": self.n_eval,
            "normalization_note": "curve in evaluation-set standardized units",
            "eval_mean": self.eval_mean,
            "eval_std": self.eval_std,
            "curve": self.curve,
            "contributions": self.contributions,
            "negative_terms": self.negative_terms,
            "total_explained": self.total_explained,
            "r_square": self.r_square,
            "eval_row_ids": list(self.eval_row_ids),
            "warnings": self.warnings,
            "grouped": self.grouped,
        }


def explained_variability(
    model: EmulatorModel, eval_x, eval_y, eval_row_ids=None
) -> DiagnosticsReport:
    """Per-term explained variability of a model on evaluation rows.

    eval_x columns follow model.param_names; eval_y is in raw target units.
    Evaluation rows should be disjoint from the training rows; an overlap
    (detected via the model's recorded training ids) is flagged, not fatal.
    """
    y = np.asarray(eval_y, dtype=float).reshape(-1)
    if y.size < 2:
        raise InputError("need at least 2 evaluation rows")
    x = np.atleast_2d(np.asarray(eval_x, dtype=float))
    if x.shape[0] != y.size:
        raise InputError("eval_x and eval_y disagree on row count")
    sigma = float(y.std())
    mean = float(y.mean())
    if sigma == 0.0:
        raise InputError("evaluation target is constant")

    warnings = []
    if eval_row_ids is not None:
        train_ids = set(model.provenance.get("train_row_ids", ()))
        overlap = sorted(train_ids & {str(r) for r in eval_row_ids})
        if overlap:
            warnings.append(
                f"{len(overlap)} evaluation rows overlap the training rows "
                f"(e.g. {overlap[:3]})"
            )

    t_idx = model.target_index
    # cumulative raw-unit prediction, starting from the model's constant term
    pred = np.full(y.size, model.normalization.target_mean[t_idx])
    scale = model.normalization.target_std[t_idx]
    curve = [rmse(y - pred) / sigma]
    contributions = []
    for k, term in enumerate(model.sequence):
        pred = pred + scale * predict_term(model, k, x)
        value = rmse(y - pred) / sigma
        contributions.append(
            {
                "position": term.position,
                "kind": term.kind,
                "param_indices": list(term.param_indices),
                "params": [model.param_names[i] for i in term.param_indices],
                "value": float(curve[-1] - value),
            }
        )
        curve.append(value)

    negative = [c["position"] for c in contributions if c["value"] < 0.0]
    return DiagnosticsReport(
        target_name=model.target_name,
        n_eval=int(y.size),
        curve=[float(v) for v in curve],
        contributions=contributions,
        negative_terms=negative,
        total_explained=float(curve[0] - curve[-1]),
        r_square=r_square(pred, y),
        eval_mean=mean,
        eval_std=sigma,
        eval_row_ids=() if eval_row_ids is None else tuple(str(r) for r in eval_row_ids),
        warnings=warnings,
    )


def diagnose_dataset(model: EmulatorModel, dataset: Dataset) -> DiagnosticsReport:
    """Evaluate a model against a dataset, matching columns by name."""
    missing = [p for p in model.param_names if p not in dataset.param_names]
    if missing:
        raise InputError(f"evaluation data lacks parameter columns {missing}")
    if model.target_name not in dataset.target_names:
        raise InputError(f"evaluation data lacks target {model.target_name!r}")
    cols = [dataset.param_index(p) for p in model.param_names]
    report = explained_variability(
        model,
        dataset.params[:, cols],
        dataset.targets[:, dataset.target_index(model.target_name)],
        eval_row_ids=dataset.row_ids,
    )
    report.grouped = group_variability(report)
    return report


_BANDS = ("high", "mid", "low")


def group_variability(report: DiagnosticsReport, thresholds=(0.05, 0.02)) -> dict:
    """Band per-term contributions by order and magnitude.

    Orders 1 and 2 split at the two thresholds, with the lowest band
    including negative contributions; order-3 terms are summed whole.
    Band sums partition the report total exactly.
    """
    hi, lo = thresholds
    if not hi > lo > 0:
        raise InputError(f"thresholds must satisfy hi > lo > 0, got {thresholds}")

    def band(value):
        if value >= hi:
            return "high"
        if value >= lo:
            return "mid"
        return "low"

    groups = {
        "single": {b: 0.0 for b in _BANDS},
        "pair": {b: 0.0 for b in _BANDS},
        "triple": {"all": 0.0},
    }
    counts = {
        "single": {b: 0 for b in _BANDS},
        "pair": {b: 0 for b in _BANDS},
        "triple": {"all": 0},
    }
    for c in report.contributions:
        kind, value = c["kind"], c["value"]
        key = "all" if kind == "triple" else band(value)
        groups[kind][key] += value
        counts[kind][key] += 1
    total = sum(v for sub in groups.values() for v in sub.values())
    return {
        "thresholds": [hi, lo],
        "sums": groups,
        "counts": counts,
        "total": float(total),
    }


def reduce_parameters(dataset: Dataset, keep) -> Dataset:
    """Column-subset view; downstream operations work unchanged."""
    return dataset.select_parameters(keep)
