"""Dataset ingestion, normalization, splits, outliers, augmentation.

A Dataset is an immutable bundle of an n x D raw parameter matrix and an
n x T raw target matrix with names, row ids, and optional row tags.  All
subset operations return new Dataset objects; the underlying arrays are
marked read-only so nothing downstream can mutate shared data.

Parameters are normalized linearly to [0,1] and targets standardized to
zero mean / unit standard deviation, with the statistics always taken from
an explicit row set (normally the training rows of the active split) so
validation data never leaks into them.
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    param_names: tuple
    target_names: tuple
    params: np.ndarray
    targets: np.ndarray
    row_ids: tuple
    tags: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "param_names", tuple(self.param_names))
        object.__setattr__(self, "target_names", tuple(self.target_names))
        object.__setattr__(self, "row_ids", tuple(str(r) for r in self.row_ids))
        if self.tags is not None:
            object.__setattr__(self, "tags", tuple(self.tags))
        object.__setattr__(self, "params", _readonly(self.params))
        object.__setattr__(self, "targets", _readonly(self.targets))

        n, d = self.params.shape
        if self.targets.shape[0] != n:
            raise InputError("parameter and target matrices disagree on row count")
        if len(self.param_names) != d:
            raise InputError("parameter name count does not match matrix width")
        if len(self.target_names) != self.targets.shape[1]:
            raise InputError("target name count does not match matrix width")
        if len(self.row_ids) != n:
            raise InputError("row id count does not match row count")
        if self.tags is not None and len(self.tags) != n:
            raise InputError("tag count does not match row count")
        if len(set(self.param_names)) != d:
            raise InputError("duplicate parameter names")
        if len(set(self.target_names)) != len(self.target_names):
            raise InputError("duplicate target names")
        if set(self.param_names) & set(self.target_names):
            raise InputError("a name cannot be both parameter and target")
        if len(set(self.row_ids)) != n:
            raise InputError("duplicate row ids")
        if not np.all(np.isfinite(self.params)):
            raise InputError("non-finite parameter values")
        if not np.all(np.isfinite(self.targets)):
            raise InputError("non-finite target values")

    @property
    def n_rows(self) -> int:
        return self.params.shape[0]

    @property
    def n_params(self) -> int:
        return self.params.shape[1]

    @property
    def n_targets(self) -> int:
        return self.targets.shape[1]

    def param_index(self, name: str) -> int:
        try:
            return self.param_names.index(name)
        except ValueError:
            raise InputError(f"unknown parameter {name!r}") from None

    def target_index(self, name: str) -> int:
        try:
            return self.target_names.index(name)
        except ValueError:
            raise InputError(f"unknown target {name!r}") from None

    def row_indices(self, ids) -> np.ndarray:
        lookup = {r: i for i, r in enumerate(self.row_ids)}
        out = []
        for r in ids:
            r = str(r)
            if r not in lookup:
                raise InputError(f"unknown row id {r!r}")
            out.append(lookup[r])
        return np.asarray(out, dtype=int)

    def take_rows(self, ids) -> "Dataset":
        idx = self.row_indices(ids)
        return Dataset(
            param_names=self.param_names,
            target_names=self.target_names,
            params=self.params[idx],
            targets=self.targets[idx],
            row_ids=[self.row_ids[i] for i in idx],
            tags=None if self.tags is None else [self.tags[i] for i in idx],
        )

    def select_parameters(self, keep) -> "Dataset":
        """Column-subset view keeping only the named/indexed parameters."""
        idx = _param_indices(self, keep)
        if len(idx) == 0:
            raise InputError("cannot keep an empty parameter set")
        return Dataset(
            param_names=[self.param_names[i] for i in idx],
            target_names=self.target_names,
            params=self.params[:, idx],
            targets=self.targets,
            row_ids=self.row_ids,
            tags=self.tags,
        )


def _param_indices(dataset: Dataset, keep) -> list:
    idx = []
    seen = set()
    for k in keep:
        i = dataset.param_index(k) if isinstance(k, str) else int(k)
        if not 0 <= i < dataset.n_params:
            raise InputError(f"parameter index {i} out of range")
        if i in seen:
            raise InputError(f"duplicate parameter selector {k!r}")
        seen.add(i)
        idx.append(i)
    return idx


@dataclass(frozen=True)
class NormalizationSpec:
    """Linear [0,1] maps for parameters, standardization for targets."""

    param_names: tuple
    target_names: tuple
    param_min: np.ndarray
    param_max: np.ndarray
    target_mean: np.ndarray
    target_std: np.ndarray
    source_row_ids: tuple

    def __post_init__(self):
        object.__setattr__(self, "param_names", tuple(self.param_names))
        object.__setattr__(self, "target_names", tuple(self.target_names))
        object.__setattr__(self, "source_row_ids", tuple(self.source_row_ids))
        for name in ("param_min", "param_max", "target_mean", "target_std"):
            object.__setattr__(self, name, _readonly(np.atleast_1d(getattr(self, name))))

    def normalize_params(self, raw: np.ndarray) -> np.ndarray:
        raw = np.atleast_2d(np.asarray(raw, dtype=float))
        return (raw - self.param_min) / (self.param_max - self.param_min)

    def denormalize_params(self, unit: np.ndarray) -> np.ndarray:
        unit = np.atleast_2d(np.asarray(unit, dtype=float))
        return unit * (self.param_max - self.param_min) + self.param_min

    def standardize_target(self, raw, index: int) -> np.ndarray:
        return (np.asarray(raw, dtype=float) - self.target_mean[index]) / self.target_std[index]

    def destandardize_target(self, std, index: int) -> np.ndarray:
        return np.asarray(std, dtype=float) * self.target_std[index] + self.target_mean[index]

    def to_dict(self) -> dict:
        return {
            "param_names": list(self.param_names),
            "target_names": list(self.target_names),
            "param_min": self.param_min.tolist(),
            "param_max": self.param_max.tolist(),
            "target_mean": self.target_mean.tolist(),
            "target_std": self.target_std.tolist(),
            "source_row_ids": list(self.source_row_ids),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationSpec":
        return cls(
            param_names=d["param_names"],
            target_names=d["target_names"],
            param_min=np.asarray(d["param_min"], dtype=float),
            param_max=np.asarray(d["param_max"], dtype=float),
            target_mean=np.asarray(d["target_mean"], dtype=float),
            target_std=np.asarray(d["target_std"], dtype=float),
            source_row_ids=d.get("source_row_ids", ()),
        )


def fit_normalization(dataset: Dataset, rows=None) -> NormalizationSpec:
    """Fit per-parameter [min,max] and per-target (mean, std) on the given rows.

    `rows` is a sequence of row ids (default: every row).  Standard deviations
    are population (ddof=0) statistics.
    """
    if rows is None:
        idx = np.arange(dataset.n_rows)
        row_ids = dataset.row_ids
    else:
        idx = dataset.row_indices(rows)
        row_ids = tuple(dataset.row_ids[i] for i in idx)
    if len(idx) == 0:
        raise InputError("cannot fit normalization on an empty row set")

    p = dataset.params[idx]
    t = dataset.targets[idx]
    pmin = p.min(axis=0)
    pmax = p.max(axis=0)
    for j, name in enumerate(dataset.param_names):
        if pmax[j] <= pmin[j]:
            raise InputError(f"parameter {name!r} is constant on the fit rows")
    tmean = t.mean(axis=0)
    tstd = t.std(axis=0)
    for j, name in enumerate(dataset.target_names):
        if tstd[j] <= 0.0:
            raise InputError(f"target {name!r} is constant on the fit rows")
    return NormalizationSpec(
        param_names=dataset.param_names,
        target_names=dataset.target_names,
        param_min=pmin,
        param_max=pmax,
        target_mean=tmean,
        target_std=tstd,
        source_row_ids=row_ids,
    )


@dataclass(frozen=True)
class SplitPlan:
    train_ids: tuple
    validation_ids: tuple
    selection_ids: tuple | None = None
    seed: int | None = None
    rule: str = "explicit"

    def __post_init__(self):
        object.__setattr__(self, "train_ids", tuple(str(r) for r in self.train_ids))
        object.__setattr__(self, "validation_ids", tuple(str(r) for r in self.validation_ids))
        if self.selection_ids is not None:
            object.__setattr__(self, "selection_ids", tuple(str(r) for r in self.selection_ids))
        if not self.train_ids or not self.validation_ids:
            raise InputError("train and validation sets must both be non-empty")
        overlap = set(self.train_ids) & set(self.validation_ids)
        if overlap:
            raise InputError(f"train/validation overlap: {sorted(overlap)[:5]}")
        if self.selection_ids is not None:
            stray = set(self.selection_ids) - set(self.train_ids)
            if stray:
                raise InputError(f"selection subset not within train rows: {sorted(stray)[:5]}")

    def to_dict(self) -> dict:
        return {
            "train_ids": list(self.train_ids),
            "validation_ids": list(self.validation_ids),
            "selection_ids": None if self.selection_ids is None else list(self.selection_ids),
            "seed": self.seed,
            "rule": self.rule,
        }


def make_split(
    dataset: Dataset,
    *,
    train_ids=None,
    validation_ids=None,
    train_size: int | None = None,
    val_size: int | None = None,
    tag_quotas: dict | None = None,
    seed: int = 0,
) -> SplitPlan:
    """Build a train/validation split plan.

    Exactly one rule applies:
      explicit    train_ids + validation_ids
      random      train_size + val_size, drawn without replacement by seed
      stratified  tag_quotas: {tag: count} drawn per tag for training by seed;
                  validation is every remaining row
    """
    if train_ids is not None or validation_ids is not None:
        if train_ids is None or validation_ids is None:
            raise InputError("explicit rule needs both train_ids and validation_ids")
        dataset.row_indices(train_ids)
        dataset.row_indices(validation_ids)
        return SplitPlan(train_ids, validation_ids, rule="explicit")

    if tag_quotas is not None:
        if dataset.tags is None:
            raise InputError("stratified split requires row tags")
        rng = np.random.default_rng(seed)
        train = []
        for tag in sorted(tag_quotas):
            count = int(tag_quotas[tag])
            members = [r for r, t in zip(dataset.row_ids, dataset.tags) if t == tag]
            if count > len(members):
                raise InputError(
                    f"quota {count} exceeds {len(members)} rows tagged {tag!r}"
                )
            picked = rng.permutation(len(members))[:count]
            train.extend(members[i] for i in sorted(picked))
        chosen = set(train)
        validation = [r for r in dataset.row_ids if r not in chosen]
        return SplitPlan(train, validation, seed=seed, rule="stratified")

    if train_size is None or val_size is None:
        raise InputError("random rule needs train_size and val_size")
    if train_size + val_size > dataset.n_rows:
        raise InputError(
            f"split sizes {train_size}+{val_size} exceed {dataset.n_rows} rows"
        )
    if train_size < 1 or val_size < 1:
        raise InputError("split sizes must be positive")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(dataset.n_rows)
    train = [dataset.row_ids[i] for i in perm[:train_size]]
    validation = [dataset.row_ids[i] for i in perm[train_size : train_size + val_size]]
    return SplitPlan(train, validation, seed=seed, rule=f"random:{train_size}/{val_size}")


def exclude_outliers(
    dataset: Dataset,
    *,
    ids=None,
    z_threshold: float | None = None,
    targets=None,
) -> tuple:
    """Drop outlier rows; returns (reduced dataset, exclusion report).

    Either an explicit id list or a per-target z-score rule: a row is excluded
    when |y - mean| / std exceeds the threshold for any of the named targets
    (default: every target).  The report lists each exclusion with the
    triggering target, value, and z-score.
    """
    if (ids is None) == (z_threshold is None):
        raise InputError("give exactly one of ids or z_threshold")

    report = []
    if ids is not None:
        idx = set(dataset.row_indices(ids).tolist())
        report = [{"row_id": str(r), "reason": "explicit"} for r in ids]
    else:
        if z_threshold <= 0:
            raise InputError("z_threshold must be positive")
        cols = (
            range(dataset.n_targets)
            if targets is None
            else [dataset.target_index(t) for t in targets]
        )
        idx = set()
        mean = dataset.targets.mean(axis=0)
        std = dataset.targets.std(axis=0)
        for j in cols:
            if std[j] == 0.0:
                continue
            z = (dataset.targets[:, j] - mean[j]) / std[j]
            for i in np.flatnonzero(np.abs(z) > z_threshold):
                idx.add(int(i))
                report.append(
                    {
                        "row_id": dataset.row_ids[i],
                        "reason": "z_score",
                        "target": dataset.target_names[j],
                        "value": float(dataset.targets[i, j]),
                        "z": float(z[i]),
                    }
                )
    keep = [r for i, r in enumerate(dataset.row_ids) if i not in idx]
    if not keep:
        raise InputError("outlier rule excluded every row")
    return dataset.take_rows(keep), report


def augment_with_outputs(dataset: Dataset, easy_targets, providers) -> Dataset:
    """Append emulated output columns as extra parameters.

    Each appended column holds the matching provider's *predictions* on the
    dataset rows, never the true target values, mirroring deployment where
    the truth is unavailable.  Providers expose `target_name`, `param_names`,
    and `predict(raw_param_matrix)`.  Appended columns are named
    "emu_<target>" since they carry emulated values.
    """
    easy_targets = list(easy_targets)
    providers = list(providers)
    if len(easy_targets) != len(providers):
        raise InputError("need exactly one provider model per easy target")
    new_cols = []
    new_names = []
    for name, provider in zip(easy_targets, providers):
        if provider.target_name != name:
            raise InputError(
                f"provider emulates {provider.target_name!r}, expected {name!r}"
            )
        col_name = f"emu_{name}"
        if col_name in dataset.param_names or col_name in dataset.target_names:
            raise InputError(f"column {col_name!r} already exists")
        missing = [p for p in provider.param_names if p not in dataset.param_names]
        if missing:
            raise InputError(f"dataset lacks provider parameters {missing}")
        cols = [dataset.param_index(p) for p in provider.param_names]
        new_cols.append(provider.predict(dataset.params[:, cols]))
        new_names.append(col_name)
    return Dataset(
        param_names=list(dataset.param_names) + new_names,
        target_names=dataset.target_names,
        params=np.column_stack([dataset.params] + new_cols),
        targets=dataset.targets,
        row_ids=dataset.row_ids,
        tags=dataset.tags,
    )


def load_schema(path) -> dict:
    """Read a CSV column-role sidecar: parameters, targets, optional id/tag."""
    try:
        schema = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read schema {path}: {exc}") from exc
    for key in ("parameters", "targets"):
        if key not in schema or not isinstance(schema[key], list) or not schema[key]:
            raise InputError(f"schema {path} must list non-empty {key!r}")
    return schema


def load_csv(path, schema) -> Dataset:
    """Load one-row-per-ensemble-member CSV under a column-role schema.

    schema: dict (or path to JSON) with keys "parameters", "targets", and
    optional "id" and "tag" column names.  Any non-finite or missing cell is
    an error naming the row and column.
    """
    if not isinstance(schema, dict):
        schema = load_schema(schema)
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: empty file, header required")
    header = rows[0]
    col = {name: i for i, name in enumerate(header)}
    if len(col) != len(header):
        raise InputError(f"{path}: duplicate column names in header")

    p_names = list(schema["parameters"])
    t_names = list(schema["targets"])
    for name in p_names + t_names:
        if name not in col:
            raise InputError(f"{path}: column {name!r} declared in schema but missing")
    id_col = schema.get("id")
    tag_col = schema.get("tag")
    if id_col is not None and id_col not in col:
        raise InputError(f"{path}: id column {id_col!r} missing")
    if tag_col is not None and tag_col not in col:
        raise InputError(f"{path}: tag column {tag_col!r} missing")

    def parse(cell, r, name):
        try:
            v = float(cell)
        except ValueError:
            raise InputError(f"{path}: row {r}, column {name!r}: not a number: {cell!r}") from None
        if not np.isfinite(v):
            raise InputError(f"{path}: row {r}, column {name!r}: non-finite value {cell!r}")
        return v

    params, targets, ids, tags = [], [], [], []
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise InputError(f"{path}: row {r} has {len(row)} cells, expected {len(header)}")
        params.append([parse(row[col[n]], r, n) for n in p_names])
        targets.append([parse(row[col[n]], r, n) for n in t_names])
        ids.append(row[col[id_col]] if id_col else str(r - 2))
        if tag_col:
            tags.append(row[col[tag_col]])
    if not params:
        raise InputError(f"{path}: no data rows")
    return Dataset(
        param_names=p_names,
        target_names=t_names,
        params=np.asarray(params),
        targets=np.asarray(targets),
        row_ids=ids,
        tags=tags if tag_col else None,
    )


def save_csv(dataset: Dataset, path) -> dict:
    """Write the dataset plus an id (and tag) column; returns the schema dict."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["member_id"]
        if dataset.tags is not None:
            header.append("tag")
        header += list(dataset.param_names) + list(dataset.target_names)
        writer.writerow(header)
        for i in range(dataset.n_rows):
            row = [dataset.row_ids[i]]
            if dataset.tags is not None:
                row.append(dataset.tags[i])
            row += [repr(float(v)) for v in dataset.params[i]]
            row += [repr(float(v)) for v in dataset.targets[i]]
            writer.writerow(row)
    schema = {
        "id": "member_id",
        "parameters": list(dataset.param_names),
        "targets": list(dataset.target_names),
    }
    if dataset.tags is not None:
        schema["tag"] = "tag"
    return schema
