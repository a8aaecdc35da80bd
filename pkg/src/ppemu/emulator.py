"""Assemble, retrain, apply, and persist the final additive emulator.

A trained model is self-contained: normalization, term specs, training
coordinates, and weight vectors all live in one versioned JSON document,
so prediction never needs the original dataset.  Models are immutable and
predictions are pure, hence safe to share across threads.

Raw-unit prediction is

    y(x) = target_mean + target_std * sum_k mean_k(normalize(x))

which reduces to the training mean for an empty sequence and decays toward
it far from all training data.  Queries that normalize outside [0,1] are
accepted (emulators are routinely swept across the hypercube) but flagged
as extrapolation.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .data import Dataset, NormalizationSpec, fit_normalization
from .errors import InputError, SchemaError
from .gp import GPComponent, KernelConfig, gp_fit, gp_predict_mean
from .hyper import HyperparameterSet
from .selection import SelectionConfig, TermSpec, fit_sequence, run_selection
from .util import SCHEMA_VERSION, canonical_json

MODEL_KIND = "emulator_model"


@dataclass(frozen=True)
class EmulatorModel:
    target_name: str
    normalization: NormalizationSpec
    sequence: tuple
    components: tuple
    hyper: HyperparameterSet | None
    training_curve: tuple = ()
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "sequence", tuple(self.sequence))
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "training_curve", tuple(self.training_curve))
        if len(self.sequence) != len(self.components):
            raise InputError("sequence and components must pair up")
        for term, comp in zip(self.sequence, self.components):
            if comp.dim != term.order:
                raise InputError(
                    f"component dimension {comp.dim} != term order {term.order}"
                )
        if self.target_name not in self.normalization.target_names:
            raise InputError(f"target {self.target_name!r} missing from normalization")

    @property
    def param_names(self) -> tuple:
        return self.normalization.param_names

    @property
    def target_index(self) -> int:
        return self.normalization.target_names.index(self.target_name)

    def predict(self, queries) -> np.ndarray:
        return predict(self, queries)


def _as_queries(model: EmulatorModel, queries) -> np.ndarray:
    q = np.atleast_2d(np.asarray(queries, dtype=float))
    if q.shape[1] != len(model.param_names):
        raise InputError(
            f"queries have {q.shape[1]} columns, model expects "
            f"{len(model.param_names)} ({', '.join(model.param_names)})"
        )
    if not np.all(np.isfinite(q)):
        raise InputError("queries contain non-finite values")
    return q


def predict(model: EmulatorModel, queries) -> np.ndarray:
    """Predict in raw target units; columns follow model.param_names."""
    q = _as_queries(model, queries)
    unit = model.normalization.normalize_params(q)
    total = np.zeros(q.shape[0])
    for term, comp in zip(model.sequence, model.components):
        total += gp_predict_mean(comp, unit[:, list(term.param_indices)])
    return model.normalization.destandardize_target(total, model.target_index)


def extrapolation_flags(model: EmulatorModel, queries) -> np.ndarray:
    """True per row when any normalized coordinate falls outside [0,1]."""
    unit = model.normalization.normalize_params(_as_queries(model, queries))
    return np.any((unit < 0.0) | (unit > 1.0), axis=1)


def predict_term(model: EmulatorModel, position: int, queries) -> np.ndarray:
    """Mean of one additive term in standardized units."""
    if not 0 <= position < len(model.sequence):
        raise InputError(
            f"term position {position} out of range (model has {len(model.sequence)})"
        )
    q = _as_queries(model, queries)
    unit = model.normalization.normalize_params(q)
    term = model.sequence[position]
    return gp_predict_mean(model.components[position], unit[:, list(term.param_indices)])


def final_train(
    train: Dataset,
    target,
    sequence,
    hyper: HyperparameterSet,
    *,
    seed=None,
    config_digest=None,
) -> EmulatorModel:
    """Re-fit the (pruned) sequence on the complete training slice.

    Terms are re-positioned 0..K-1 in the given order; everything needed for
    standalone prediction is stored on the model.  Provenance excludes wall
    clock time so identical runs serialize byte-identically.
    """
    t_idx = train.target_index(target) if isinstance(target, str) else int(target)
    if not 0 <= t_idx < train.n_targets:
        raise InputError(f"target index {t_idx} out of range")
    sequence = [
        TermSpec(param_indices=t.param_indices, position=i, kind=t.kind)
        for i, t in enumerate(sequence)
    ]
    for term in sequence:
        if term.kind == "full":
            raise InputError("full terms cannot join an additive sequence")
        if max(term.param_indices, default=-1) >= train.n_params:
            raise InputError(f"term {term.param_indices} references unknown parameters")

    normalization = fit_normalization(train)
    x = normalization.normalize_params(train.params)
    y = normalization.standardize_target(train.targets[:, t_idx], t_idx)
    components, curve = fit_sequence(x, y, sequence, hyper)
    return EmulatorModel(
        target_name=train.target_names[t_idx],
        normalization=normalization,
        sequence=tuple(sequence),
        components=tuple(components),
        hyper=hyper,
        training_curve=tuple(float(v) for v in curve),
        provenance={
            "tool_version": __version__,
            "seed": seed,
            "config_digest": config_digest,
            "n_train": train.n_rows,
            "train_row_ids": list(train.row_ids),
        },
    )


def train_emulator(
    train: Dataset,
    target,
    cfg: SelectionConfig,
    seed: int = 0,
    workers: int = 1,
    config_digest=None,
):
    """Selection plus final retrain; returns (model, selection report)."""
    sequence, report = run_selection(train, target, cfg, seed=seed, workers=workers)
    model = final_train(
        train, target, sequence, cfg.hyper, seed=seed, config_digest=config_digest
    )
    return model, report


def full_gp_baseline(
    train: Dataset,
    target,
    hyper_range: float | None = None,
    nugget_ratio: float = 2.0,
    *,
    seed=None,
) -> EmulatorModel:
    """Single non-additive GP over every parameter, same predict contract.

    Default range scales with dimension as sqrt(D) * 0.4, mirroring the
    per-axis scales of the additive presets on the D-cube diagonal.
    """
    t_idx = train.target_index(target) if isinstance(target, str) else int(target)
    d = train.n_params
    if hyper_range is None:
        hyper_range = math.sqrt(d) * 0.4
    normalization = fit_normalization(train)
    x = normalization.normalize_params(train.params)
    y = normalization.standardize_target(train.targets[:, t_idx], t_idx)
    cfg = KernelConfig(range=hyper_range, nugget_ratio=nugget_ratio)
    comp = gp_fit(x, y, cfg)
    residual_rmse = float(
        np.sqrt(np.mean((y - gp_predict_mean(comp, x)) ** 2))
    )
    term = TermSpec(tuple(range(d)), position=0, kind="full" if d > 3 else "")
    return EmulatorModel(
        target_name=train.target_names[t_idx],
        normalization=normalization,
        sequence=(term,),
        components=(comp,),
        hyper=None,
        training_curve=(float(np.sqrt(np.mean(y * y))), residual_rmse),
        provenance={
            "tool_version": __version__,
            "seed": seed,
            "baseline": True,
            "n_train": train.n_rows,
        },
    )


def model_to_dict(model: EmulatorModel) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": MODEL_KIND,
        "target": model.target_name,
        "normalization": model.normalization.to_dict(),
        "hyper": None if model.hyper is None else model.hyper.to_dict(),
        "sequence": [t.to_dict(list(model.param_names)) for t in model.sequence],
        "components": [
            {
                "kernel": {
                    "range": comp.kernel.range,
                    "nugget_ratio": comp.kernel.nugget_ratio,
                    "smoothness": comp.kernel.smoothness,
                },
                "inputs": comp.inputs.tolist(),
                "weights": comp.weights.tolist(),
            }
            for comp in model.components
        ],
        "training_curve": list(model.training_curve),
        "provenance": model.provenance,
    }


def model_from_dict(doc: dict) -> EmulatorModel:
    from .util import check_schema_version

    if doc.get("kind") != MODEL_KIND:
        raise SchemaError(f"not an emulator model file (kind={doc.get('kind')!r})")
    check_schema_version(doc.get("schema_version", ""), kind=MODEL_KIND)
    components = []
    for entry in doc["components"]:
        k = entry["kernel"]
        kernel = KernelConfig(
            range=float(k["range"]),
            nugget_ratio=float(k["nugget_ratio"]),
            smoothness=str(k.get("smoothness", "")),
        )
        components.append(
            GPComponent(
                inputs=np.asarray(entry["inputs"], dtype=float),
                weights=np.asarray(entry["weights"], dtype=float),
                kernel=kernel,
            )
        )
    hyper = None if doc.get("hyper") is None else HyperparameterSet.from_dict(doc["hyper"])
    return EmulatorModel(
        target_name=doc["target"],
        normalization=NormalizationSpec.from_dict(doc["normalization"]),
        sequence=tuple(TermSpec.from_dict(t) for t in doc["sequence"]),
        components=tuple(components),
        hyper=hyper,
        training_curve=tuple(doc.get("training_curve", ())),
        provenance=doc.get("provenance", {}),
    )


def save_model(model: EmulatorModel, path) -> None:
    Path(path).write_text(canonical_json(model_to_dict(model)))


def load_model(path) -> EmulatorModel:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read model {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"model file {path} is not valid JSON: {exc}") from exc
    return model_from_dict(doc)
