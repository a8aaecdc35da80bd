"""Experiment protocols: random splits, hyperparameter sweep, learning curve.

Each protocol runs the full pipeline (selection, retrain, evaluation) under
controlled variation and returns a JSON-ready report.  Repeats execute over
immutable dataset views with per-repeat seeds derived up front from the
master seed, so results are identical no matter how many workers run them.
"""

import numpy as np

from .data import Dataset, SplitPlan, make_split
from .diagnostics import diagnose_dataset, r_square
from .emulator import final_train, predict, train_emulator
from .errors import InputError
from .hyper import PRESETS, SWEEP_PRESETS
from .selection import SelectionConfig
from .util import SCHEMA_VERSION, ordered_map

LEARNING_SIZES = (100, 200, 300, 400)


def _child_seeds(seed: int, count: int) -> list:
    rng = np.random.default_rng(seed)
    return [int(s) for s in rng.integers(0, 2**62, size=count)]


def _fit_and_score(dataset, target, train_ids, val_ids, cfg, seed):
    train = dataset.take_rows(train_ids)
    val = dataset.take_rows(val_ids)
    model, report = train_emulator(train, target, cfg, seed=seed)
    cols = [val.param_index(p) for p in model.param_names]
    pred = predict(model, val.params[:, cols])
    truth = val.targets[:, val.target_index(model.target_name)]
    return {
        "seed": seed,
        "r_square": r_square(pred, truth),
        "n_terms": len(model.sequence),
        "n_train": train.n_rows,
        "n_val": val.n_rows,
    }


def experiment_random_splits(
    dataset: Dataset,
    targets,
    train_size: int,
    val_size: int,
    repeats: int = 10,
    seed: int = 0,
    cfg: SelectionConfig | None = None,
    default_split: SplitPlan | None = None,
    workers: int = 1,
) -> dict:
    """R-square spread from repeated random train/validation draws.

    Runs the full pipeline per repeat, plus the designated default split
    when given.  Reports per-target R-square values, mean, min, max, and
    spread (max - min).
    """
    if isinstance(targets, str):
        targets = [targets]
    if cfg is None:
        cfg = SelectionConfig(hyper=PRESETS["default"])
    if repeats < 1:
        raise InputError("repeats must be >= 1")
    if train_size + val_size > dataset.n_rows:
        raise InputError("split sizes exceed available rows")
    seeds = _child_seeds(seed, repeats)
    plans = [
        make_split(dataset, train_size=train_size, val_size=val_size, seed=s)
        for s in seeds
    ]

    per_target = []
    for target in targets:
        runs = ordered_map(
            lambda ps: _fit_and_score(
                dataset, target, ps[0].train_ids, ps[0].validation_ids, cfg, ps[1]
            ),
            list(zip(plans, seeds)),
            workers,
        )
        default_entry = None
        if default_split is not None:
            default_entry = _fit_and_score(
                dataset,
                target,
                default_split.train_ids,
                default_split.validation_ids,
                cfg,
                seed,
            )
        values = [r["r_square"] for r in runs]
        per_target.append(
            {
                "target": target,
                "default": default_entry,
                "repeats": runs,
                "mean": float(np.mean(values)),
                "min": float(np.min(values)),
                "max": float(np.max(values)),
                "spread": float(np.max(values) - np.min(values)),
            }
        )
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "experiment_random_splits",
        "seed": seed,
        "train_size": train_size,
        "val_size": val_size,
        "repeats": repeats,
        "hyper": cfg.hyper.to_dict(),
        "targets": per_target,
    }


def experiment_hyper_sweep(
    dataset: Dataset,
    target,
    split: SplitPlan,
    frozen_sequence,
    sets=None,
    workers: int = 1,
) -> dict:
    """R-square per hyperparameter set with the term sequence frozen.

    The sweep re-fits components only; it never re-selects terms, so the
    spread isolates hyperparameter sensitivity from sampling sensitivity.
    """
    if sets is None:
        sets = [PRESETS[name] for name in SWEEP_PRESETS]
    train = dataset.take_rows(split.train_ids)
    val = dataset.take_rows(split.validation_ids)
    t_name = train.target_names[
        train.target_index(target) if isinstance(target, str) else int(target)
    ]

    def score(hyper):
        model = final_train(train, t_name, frozen_sequence, hyper)
        cols = [val.param_index(p) for p in model.param_names]
        pred = predict(model, val.params[:, cols])
        return {
            "set": hyper.name,
            "hyper": hyper.to_dict(),
            "r_square": r_square(pred, val.targets[:, val.target_index(t_name)]),
        }

    entries = ordered_map(score, sets, workers)
    values = [e["r_square"] for e in entries]
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "experiment_hyper_sweep",
        "target": t_name,
        "n_terms": len(list(frozen_sequence)),
        "entries": entries,
        "mean": float(np.mean(values)),
        "min": float(np.min(values)),
        "max": float(np.max(values)),
        "spread": float(np.max(values) - np.min(values)),
    }


def _aggregate_by_identity(contributions) -> dict:
    """Sum contributions of repeat-selected parameters / groups.

    A parameter selected several times spreads its effect over multiple
    terms; importance rankings care about the parameter, not the slot.
    """
    agg = {}
    for c in contributions:
        key = (c["kind"], tuple(c["param_indices"]))
        agg[key] = agg.get(key, 0.0) + c["value"]
    return agg


def _leader_values(contributions) -> list:
    """Identity-aggregated contributions, positive only, descending."""
    agg = _aggregate_by_identity(contributions)
    return sorted((v for v in agg.values() if v > 0.0), reverse=True)


def experiment_learning_curve(
    dataset: Dataset,
    target,
    eval_ids,
    sizes=LEARNING_SIZES,
    repeats: int = 5,
    seed: int = 0,
    cfg: SelectionConfig | None = None,
    pool_ids=None,
    fixed_identity: bool = False,
    workers: int = 1,
) -> dict:
    """Explained variability versus training-set size on fixed eval rows.

    For each size and repeat, training rows are drawn (seeded) from the pool
    (default: every row outside the eval set), a model is trained, and each
    cell records the net total explained variability alongside top-3 / top-6
    subtotals.  Subtotals aggregate contributions by parameter / group
    identity (repeat selections merge), keep the positive ones, and sum the
    k largest; leaders_total sums every positive aggregate, so
    top3 <= top6 <= leaders_total by construction.  By default the top
    identities are re-ranked per cell, while fixed_identity pins them to the
    ranking of the largest size's first repeat.
    """
    if cfg is None:
        cfg = SelectionConfig(hyper=PRESETS["default"])
    sizes = [int(s) for s in sizes]
    eval_ids = [str(r) for r in eval_ids]
    if not eval_ids:
        raise InputError("need evaluation rows")
    eval_ds = dataset.take_rows(eval_ids)
    if pool_ids is None:
        eval_set = set(eval_ids)
        pool_ids = [r for r in dataset.row_ids if r not in eval_set]
    else:
        pool_ids = [str(r) for r in pool_ids]
        if set(pool_ids) & set(eval_ids):
            raise InputError("training pool overlaps evaluation rows")
    if max(sizes) > len(pool_ids):
        raise InputError(
            f"size {max(sizes)} exceeds the {len(pool_ids)} rows available"
        )
    if max(sizes) + len(eval_ids) > dataset.n_rows:
        raise InputError("sizes plus evaluation rows exceed the dataset")

    seeds = _child_seeds(seed, len(sizes) * repeats)
    tasks = [
        (size, rep, seeds[i * repeats + rep])
        for i, size in enumerate(sizes)
        for rep in range(repeats)
    ]

    def run(task):
        size, rep, child = task
        rng = np.random.default_rng(child)
        train_ids = [pool_ids[i] for i in rng.permutation(len(pool_ids))[:size]]
        train = dataset.take_rows(train_ids)
        model, _ = train_emulator(train, target, cfg, seed=child)
        report = diagnose_dataset(model, eval_ds)
        leaders = _leader_values(report.contributions)
        return {
            "size": size,
            "repeat": rep,
            "seed": child,
            "total": report.total_explained,
            "top3": float(sum(leaders[:3])),
            "top6": float(sum(leaders[:6])),
            "leaders_total": float(sum(leaders)),
            "n_terms": len(model.sequence),
            "contributions": report.contributions,
        }

    cells = ordered_map(run, tasks, workers)

    if fixed_identity:
        reference = next(
            c for c in cells if c["size"] == max(sizes) and c["repeat"] == 0
        )
        ranked = sorted(
            _aggregate_by_identity(reference["contributions"]).items(),
            key=lambda item: -item[1],
        )
        for k in (3, 6):
            chosen = {key for key, _ in ranked[:k]}
            for cell in cells:
                agg = _aggregate_by_identity(cell["contributions"])
                cell[f"top{k}"] = float(
                    sum(v for key, v in agg.items() if key in chosen)
                )

    for cell in cells:
        del cell["contributions"]

    summary = []
    for size in sizes:
        rows = [c for c in cells if c["size"] == size]
        summary.append(
            {
                "size": size,
                "total_mean": float(np.mean([c["total"] for c in rows])),
                "top3_mean": float(np.mean([c["top3"] for c in rows])),
                "top6_mean": float(np.mean([c["top6"] for c in rows])),
            }
        )
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "experiment_learning_curve",
        "target": target if isinstance(target, str) else dataset.target_names[target],
        "seed": seed,
        "sizes": sizes,
        "repeats": repeats,
        "eval_ids": eval_ids,
        "fixed_identity": fixed_identity,
        "cells": cells,
        "summary": summary,
    }
