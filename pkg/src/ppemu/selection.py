"""Greedy construction of the additive term sequence.

The workflow, on the training slice of a dataset:

1. normalize parameters to [0,1] and standardize the target;
2. split the selection rows 80/20 (seeded, deterministic);
3. on the 80%, pick single parameters iteratively: fit a 1-D GP per
   parameter on the current residuals, keep the one with the lowest
   in-sample RMSE, subtract its mean, repeat m1 times;
4. rank all parameter pairs by how much a joint 2-D fit beats the two
   marginal 1-D fits, take the top m2 and fit them sequentially;
5. same for parameter triples (joint 3-D fit versus three marginal fits);
6. walk the cumulative prediction over the 20% holdout and drop every term
   whose step does not strictly decrease the holdout RMSE (forced mode
   keeps everything).

The pair criterion for a candidate (p, q) against the post-singles
baseline b is

    delta = (b - rmse_joint(p,q)) - (2 b - rmse(p) - rmse(q)),

i.e. the improvement from the joint fit minus the improvement the two
parameters deliver independently; triples generalize it with three
marginal terms.  Candidate scans run embarrassingly parallel over a
thread pool and reduce in fixed index order, so results never depend on
worker count.
"""

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .data import Dataset, fit_normalization
from .errors import InputError
from .gp import GPComponent, KernelConfig, gp_fit, gp_predict_mean
from .hyper import HyperparameterSet
from .util import SCHEMA_VERSION, ordered_map, rmse

_KINDS = {1: "single", 2: "pair", 3: "triple"}

# residual spread below which fitting is pointless (standardized units)
_DEGENERATE_STD = 1e-12


@dataclass(frozen=True)
class TermSpec:
    """One additive term: 1-3 parameter indices plus its slot in the sequence.

    kind "full" is reserved for the non-additive all-parameter baseline and
    never appears in selected sequences.
    """

    param_indices: tuple
    position: int
    kind: str = ""

    def __post_init__(self):
        idx = tuple(int(i) for i in self.param_indices)
        object.__setattr__(self, "param_indices", idx)
        if len(set(idx)) != len(idx):
            raise InputError(f"term indices must be distinct: {idx}")
        if self.kind == "full":
            if len(idx) < 1:
                raise InputError("full term needs at least one parameter")
            return
        if not 1 <= len(idx) <= 3:
            raise InputError(f"terms take 1-3 parameters, got {len(idx)}")
        expected = _KINDS[len(idx)]
        if self.kind == "":
            object.__setattr__(self, "kind", expected)
        elif self.kind != expected:
            raise InputError(f"kind {self.kind!r} inconsistent with {len(idx)} indices")
        if len(idx) > 1 and list(idx) != sorted(idx):
            # pairs and triples are canonicalized to ascending index order
            object.__setattr__(self, "param_indices", tuple(sorted(idx)))

    @property
    def order(self) -> int:
        return len(self.param_indices)

    def to_dict(self, param_names=None) -> dict:
        d = {
            "position": self.position,
            "kind": self.kind,
            "param_indices": list(self.param_indices),
        }
        if param_names is not None:
            d["params"] = [param_names[i] for i in self.param_indices]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TermSpec":
        return cls(
            param_indices=tuple(d["param_indices"]),
            position=int(d["position"]),
            kind=d.get("kind", ""),
        )


@dataclass
class SelectionConfig:
    """Knobs for the term-selection workflow.

    m1/m2/m3 default to floor(3D/4), floor(D/3), floor(D/4) clamped to the
    combinatorial maxima.  forced keeps exactly the requested terms and
    skips pruning.  selection_subset restricts which training rows drive
    selection (the 80/20 split is drawn only from them).
    """

    hyper: HyperparameterSet
    m1: int | None = None
    m2: int | None = None
    m3: int | None = None
    allow_repeats: bool = True
    forced: bool = False
    prune_epsilon: float = 0.0
    holdout_fraction: float = 0.2
    selection_subset: tuple | None = None

    def __post_init__(self):
        for label in ("m1", "m2", "m3"):
            v = getattr(self, label)
            if v is not None and v < 0:
                raise InputError(f"{label} must be nonnegative")
        if not 0.0 < self.holdout_fraction < 1.0:
            raise InputError("holdout_fraction must be in (0, 1)")
        if self.prune_epsilon < 0.0:
            raise InputError("prune_epsilon must be nonnegative")
        if self.selection_subset is not None:
            self.selection_subset = tuple(str(r) for r in self.selection_subset)

    def to_dict(self) -> dict:
        return {
            "hyper": self.hyper.to_dict(),
            "m1": self.m1,
            "m2": self.m2,
            "m3": self.m3,
            "allow_repeats": self.allow_repeats,
            "forced": self.forced,
            "prune_epsilon": self.prune_epsilon,
            "holdout_fraction": self.holdout_fraction,
            "selection_subset": None
            if self.selection_subset is None
            else list(self.selection_subset),
        }


@dataclass
class SelectionReport:
    """Everything the selection run measured, JSON-serializable."""

    seed: int
    config: dict
    param_names: tuple
    target_name: str
    counts: tuple
    fit_row_ids: tuple
    holdout_row_ids: tuple
    single_iterations: list = field(default_factory=list)
    pair_ranking: list = field(default_factory=list)
    triple_ranking: list = field(default_factory=list)
    candidate_sequence: list = field(default_factory=list)
    training_curve: list = field(default_factory=list)
    holdout_curve: list = field(default_factory=list)
    term_records: list = field(default_factory=list)
    final_sequence: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        names = list(self.param_names)
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "selection_report",
            "seed": self.seed,
            "config": self.config,
            "param_names": names,
            "target": self.target_name,
            "m1": self.counts[0],
            "m2": self.counts[1],
            "m3": self.counts[2],
            "fit_row_ids": list(self.fit_row_ids),
            "holdout_row_ids": list(self.holdout_row_ids),
            "single_iterations": self.single_iterations,
            "pair_ranking": self.pair_ranking,
            "triple_ranking": self.triple_ranking,
            "candidate_sequence": [t.to_dict(names) for t in self.candidate_sequence],
            "training_curve": self.training_curve,
            "holdout_curve": self.holdout_curve,
            "term_records": self.term_records,
            "final_sequence": [t.to_dict(names) for t in self.final_sequence],
            "warnings": self.warnings,
        }


def default_term_counts(d: int) -> tuple:
    """Initial guesses for the number of single/pair/triple terms."""
    if d < 1:
        raise InputError("need at least one parameter")
    m1 = min((d * 3) // 4, d)
    m2 = min(d // 3, math.comb(d, 2))
    m3 = min(d // 4, math.comb(d, 3))
    return m1, m2, m3


def _config_1d(hyper):
    return KernelConfig(range=hyper.range_1d, nugget_ratio=hyper.nugget_ratio)


def _fit_eval(x_cols, residuals, cfg):
    """Fit a GP on the given columns and score its in-sample mean."""
    comp = gp_fit(x_cols, residuals, cfg)
    mean = gp_predict_mean(comp, x_cols)
    return comp, mean, rmse(residuals - mean)


@dataclass
class SingleSelection:
    index: int
    component: GPComponent
    residuals: np.ndarray
    rmse_table: list
    degenerate: bool = False


def select_single_iteration(
    X: np.ndarray,
    residuals: np.ndarray,
    hyper: HyperparameterSet,
    exclude=frozenset(),
    workers: int = 1,
) -> SingleSelection:
    """One greedy iteration: fit every parameter, keep the best, subtract it.

    Ties break toward the lowest parameter index.  All-constant residuals
    yield a degenerate no-op term (zero weights) with residuals unchanged.
    """
    X = np.asarray(X, dtype=float)
    residuals = np.asarray(residuals, dtype=float)
    if residuals.shape[0] != X.shape[0] or X.shape[0] < 2:
        raise InputError("need matching X/residual rows, at least 2")
    if not np.all(np.isfinite(residuals)):
        raise InputError("residuals contain non-finite values")
    d = X.shape[1]
    cfg = _config_1d(hyper)

    if float(np.std(residuals)) < _DEGENERATE_STD:
        base = rmse(residuals)
        index = min(set(range(d)) - set(exclude), default=0)
        comp = GPComponent(
            inputs=X[:, [index]].copy(), weights=np.zeros(X.shape[0]), kernel=cfg
        )
        return SingleSelection(index, comp, residuals.copy(), [base] * d, degenerate=True)

    candidates = [j for j in range(d) if j not in exclude]
    if not candidates:
        raise InputError("every parameter is excluded from selection")
    fits = ordered_map(lambda j: _fit_eval(X[:, [j]], residuals, cfg), candidates, workers)

    table = [math.inf] * d
    best_j, best = None, None
    for j, (comp, mean, err) in zip(candidates, fits):
        table[j] = err
        if best is None or err < best[2]:
            best_j, best = j, (comp, mean, err)
    comp, mean, _ = best
    return SingleSelection(best_j, comp, residuals - mean, table)


def rank_pairs(
    X: np.ndarray,
    residuals: np.ndarray,
    baseline_rmse: float,
    hyper: HyperparameterSet,
    workers: int = 1,
) -> list:
    """Rank every parameter pair by joint-versus-marginal improvement.

    Returns [(p, q), delta] entries sorted by descending delta, ties in
    ascending index order.  Pairs are canonical (p < q); the isotropic
    kernel makes the score invariant to column order anyway.
    """
    return _rank_groups(X, residuals, baseline_rmse, hyper, order=2, workers=workers)


def rank_triples(
    X: np.ndarray,
    residuals: np.ndarray,
    baseline_rmse: float,
    hyper: HyperparameterSet,
    workers: int = 1,
) -> list:
    """Rank parameter triples: joint 3-D fit versus three marginal fits."""
    return _rank_groups(X, residuals, baseline_rmse, hyper, order=3, workers=workers)


def _rank_groups(X, residuals, baseline_rmse, hyper, order, workers):
    X = np.asarray(X, dtype=float)
    residuals = np.asarray(residuals, dtype=float)
    actual = rmse(residuals)
    if abs(actual - baseline_rmse) > 1e-8 * max(1.0, actual):
        raise InputError(
            f"baseline_rmse {baseline_rmse} does not match residuals (rmse {actual})"
        )
    d = X.shape[1]
    groups = list(combinations(range(d), order))
    if not groups:
        return []

    cfg1 = _config_1d(hyper)
    cfg_joint = KernelConfig(
        range=hyper.range_for(order), nugget_ratio=hyper.nugget_ratio
    )
    singles = ordered_map(
        lambda j: _fit_eval(X[:, [j]], residuals, cfg1)[2], range(d), workers
    )
    joint = ordered_map(
        lambda g: _fit_eval(X[:, list(g)], residuals, cfg_joint)[2], groups, workers
    )
    ranked = []
    for g, joint_rmse in zip(groups, joint):
        marginal = sum(singles[j] for j in g)
        delta = (baseline_rmse - joint_rmse) - (order * baseline_rmse - marginal)
        ranked.append((g, delta))
    ranked.sort(key=lambda item: (-item[1], item[0]))
    return ranked


def fit_sequence(X: np.ndarray, y: np.ndarray, sequence, hyper: HyperparameterSet):
    """Fit each term in order against the running residuals.

    Returns (components, curve) where curve[k] is the in-sample RMSE after
    k terms; curve[0] is the RMSE of y itself.  In-sample the curve never
    increases: each GP mean is a contraction of its residuals.
    """
    X = np.asarray(X, dtype=float)
    residual = np.asarray(y, dtype=float).copy()
    curve = [rmse(residual)]
    components = []
    for term in sequence:
        cols = list(term.param_indices)
        if max(cols, default=-1) >= X.shape[1]:
            raise InputError(f"term {term} references an unknown parameter column")
        cfg = KernelConfig(
            range=hyper.range_for(len(cols)), nugget_ratio=hyper.nugget_ratio
        )
        comp, mean, err = _fit_eval(X[:, cols], residual, cfg)
        residual -= mean
        components.append(comp)
        curve.append(err)
    return components, curve


def prune_terms(
    components,
    sequence,
    holdout_X: np.ndarray,
    holdout_y: np.ndarray,
    epsilon: float = 0.0,
    forced: bool = False,
):
    """Walk the cumulative holdout prediction and drop unhelpful terms.

    A term is retained iff its step decreases the holdout RMSE by more than
    epsilon (strictly); forced mode retains everything.  Returns
    (pruned sequence with renumbered positions, holdout curve, records),
    where records carries one entry per candidate term.
    """
    holdout_X = np.asarray(holdout_X, dtype=float)
    holdout_y = np.asarray(holdout_y, dtype=float)
    if holdout_y.size == 0:
        raise InputError("pruning is undefined on an empty holdout")
    if len(components) != len(sequence):
        raise InputError("components and sequence lengths differ")

    pred = np.zeros_like(holdout_y)
    curve = [rmse(holdout_y)]
    records = []
    retained = []
    for term, comp in zip(sequence, components):
        pred = pred + gp_predict_mean(comp, holdout_X[:, list(term.param_indices)])
        err = rmse(holdout_y - pred)
        delta = curve[-1] - err
        curve.append(err)
        keep = forced or delta > epsilon
        records.append(
            {
                "position": term.position,
                "kind": term.kind,
                "param_indices": list(term.param_indices),
                "holdout_delta": float(delta),
                "retained": bool(keep),
                "reason": "forced"
                if forced
                else ("holdout_rmse_decrease" if keep else "no_holdout_decrease"),
            }
        )
        if keep:
            retained.append(term)

    pruned_sequence = [
        TermSpec(param_indices=t.param_indices, position=i, kind=t.kind)
        for i, t in enumerate(retained)
    ]
    return pruned_sequence, curve, records


def run_selection(
    dataset: Dataset,
    target,
    cfg: SelectionConfig,
    seed: int = 0,
    workers: int = 1,
):
    """Full selection workflow on a training slice; returns (sequence, report).

    The dataset argument is the training data only.  Normalization
    statistics are fit on all of its rows; the 80/20 fit/holdout split is
    drawn (seeded) from cfg.selection_subset when given, else from every
    row.  The returned sequence is pruned and re-positioned, ready for a
    final retrain on the complete training slice.
    """
    t_idx = dataset.target_index(target) if isinstance(target, str) else int(target)
    if not 0 <= t_idx < dataset.n_targets:
        raise InputError(f"target index {t_idx} out of range")
    if dataset.n_rows < 10:
        raise InputError("selection needs at least 10 training rows")

    d = dataset.n_params
    m1_max, m2_max, m3_max = dataset.n_rows, math.comb(d, 2), math.comb(d, 3)
    defaults = default_term_counts(d)
    m1 = defaults[0] if cfg.m1 is None else cfg.m1
    m2 = defaults[1] if cfg.m2 is None else cfg.m2
    m3 = defaults[2] if cfg.m3 is None else cfg.m3
    if m2 > m2_max or m3 > m3_max:
        raise InputError(
            f"term counts (m2={m2}, m3={m3}) exceed combinatorial maxima "
            f"({m2_max}, {m3_max}) for {d} parameters"
        )
    if not cfg.allow_repeats and m1 > d:
        raise InputError(f"m1={m1} singles impossible without repeats for {d} parameters")

    normalization = fit_normalization(dataset)
    X_all = normalization.normalize_params(dataset.params)
    y_all = normalization.standardize_target(dataset.targets[:, t_idx], t_idx)

    if cfg.selection_subset is not None:
        sel_idx = dataset.row_indices(cfg.selection_subset)
    else:
        sel_idx = np.arange(dataset.n_rows)
    if len(sel_idx) < 10:
        raise InputError("selection subset needs at least 10 rows")

    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(sel_idx))
    n_hold = max(1, int(round(len(sel_idx) * cfg.holdout_fraction)))
    if n_hold >= len(sel_idx):
        raise InputError("holdout fraction leaves no fit rows")
    fit_idx = sel_idx[perm[: len(sel_idx) - n_hold]]
    hold_idx = sel_idx[perm[len(sel_idx) - n_hold :]]

    X_fit, y_fit = X_all[fit_idx], y_all[fit_idx]
    X_hold, y_hold = X_all[hold_idx], y_all[hold_idx]

    target_name = dataset.target_names[t_idx]
    report = SelectionReport(
        seed=seed,
        config=cfg.to_dict(),
        param_names=dataset.param_names,
        target_name=target_name,
        counts=(m1, m2, m3),
        fit_row_ids=tuple(dataset.row_ids[i] for i in fit_idx),
        holdout_row_ids=tuple(dataset.row_ids[i] for i in hold_idx),
    )

    if float(np.std(y_fit)) < _DEGENERATE_STD:
        report.warnings.append(
            f"target {target_name!r} is constant on the selection rows; "
            "no terms selected"
        )
        report.training_curve = [rmse(y_fit)]
        report.holdout_curve = [rmse(y_hold)]
        return [], report

    names = dataset.param_names
    sequence = []
    components = []
    residual = y_fit.copy()
    curve = [rmse(residual)]
    chosen_singles = set()

    for iteration in range(m1):
        exclude = chosen_singles if not cfg.allow_repeats else frozenset()
        picked = select_single_iteration(X_fit, residual, cfg.hyper, exclude, workers)
        before = curve[-1]
        residual = picked.residuals
        curve.append(rmse(residual))
        chosen_singles.add(picked.index)
        term = TermSpec((picked.index,), position=len(sequence))
        sequence.append(term)
        components.append(picked.component)
        report.single_iterations.append(
            {
                "iteration": iteration,
                "chosen": names[picked.index],
                "chosen_index": picked.index,
                "rmse_before": float(before),
                "rmse_after": float(curve[-1]),
                "degenerate": picked.degenerate,
                "candidate_rmse": [
                    None if math.isinf(v) else float(v) for v in picked.rmse_table
                ],
            }
        )
        if picked.degenerate:
            report.warnings.append(
                f"residuals became constant at single iteration {iteration}"
            )

    if m2 > 0:
        ranking = rank_pairs(X_fit, residual, curve[-1], cfg.hyper, workers)
        report.pair_ranking = [
            {"params": [names[p], names[q]], "indices": [p, q], "delta": float(dv)}
            for (p, q), dv in ranking
        ]
        cfg2 = KernelConfig(range=cfg.hyper.range_2d, nugget_ratio=cfg.hyper.nugget_ratio)
        for (p, q), _ in ranking[:m2]:
            comp, mean, err = _fit_eval(X_fit[:, [p, q]], residual, cfg2)
            residual = residual - mean
            curve.append(err)
            sequence.append(TermSpec((p, q), position=len(sequence)))
            components.append(comp)

    if m3 > 0:
        ranking3 = rank_triples(X_fit, residual, curve[-1], cfg.hyper, workers)
        report.triple_ranking = [
            {
                "params": [names[i] for i in g],
                "indices": list(g),
                "delta": float(dv),
            }
            for g, dv in ranking3
        ]
        cfg3 = KernelConfig(range=cfg.hyper.range_3d, nugget_ratio=cfg.hyper.nugget_ratio)
        for g, _ in ranking3[:m3]:
            comp, mean, err = _fit_eval(X_fit[:, list(g)], residual, cfg3)
            residual = residual - mean
            curve.append(err)
            sequence.append(TermSpec(tuple(g), position=len(sequence)))
            components.append(comp)

    report.candidate_sequence = list(sequence)
    report.training_curve = [float(v) for v in curve]

    pruned, holdout_curve, records = prune_terms(
        components, sequence, X_hold, y_hold, cfg.prune_epsilon, cfg.forced
    )
    report.holdout_curve = [float(v) for v in holdout_curve]
    report.term_records = records
    report.final_sequence = pruned
    return pruned, report
