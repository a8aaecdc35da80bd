import numpy as np
import pytest

from ppemu.data import fit_normalization
from ppemu.diagnostics import (
    DiagnosticsReport,
    diagnose_dataset,
    explained_variability,
    group_variability,
    r_square,
    reduce_parameters,
)
from ppemu.emulator import EmulatorModel, train_emulator
from ppemu.errors import InputError
from ppemu.gp import KernelConfig, gp_fit
from ppemu.hyper import PRESETS
from ppemu.selection import SelectionConfig, TermSpec
from ppemu.synth import synth_generate

HYPER = PRESETS["default"]


def test_r_square_basics():
    y = np.array([1.0, 2.0, 3.0, 4.0])
    assert r_square(y, y) == 1.0
    assert r_square(np.full(4, y.mean()), y) == 0.0
    with pytest.raises(InputError):
        r_square(y, np.full(4, 2.0))
    with pytest.raises(InputError):
        r_square(y[:2], y)


def test_r_square_negated_standardized_truths():
    rng = np.random.default_rng(0)
    y = rng.normal(0, 1, 500)
    y = (y - y.mean()) / y.std()
    assert r_square(-y, y) == pytest.approx(-3.0, abs=1e-9)


def test_r_square_common_shift_invariance():
    rng = np.random.default_rng(1)
    y = rng.normal(3.0, 2.0, 60)
    p = y + rng.normal(0, 0.5, 60)
    base = r_square(p, y)
    for c in (-7.0, 100.0):
        assert r_square(p + c, y + c) == pytest.approx(base, abs=1e-9)


@pytest.fixture(scope="module")
def trained():
    ds, _ = synth_generate("additive_interaction", 300, 6, seed=31)
    train = ds.take_rows(ds.row_ids[:240])
    held = ds.take_rows(ds.row_ids[240:])
    cfg = SelectionConfig(hyper=HYPER, m1=4, m2=1, m3=1)
    model, _ = train_emulator(train, "y", cfg, seed=31)
    return train, held, model


def test_explained_variability_telescopes(trained):
    _, held, model = trained
    report = diagnose_dataset(model, held)
    assert len(report.curve) == len(model.sequence) + 1
    assert report.curve[0] == pytest.approx(1.0, abs=0.2)
    total = sum(c["value"] for c in report.contributions)
    assert total == pytest.approx(report.curve[0] - report.curve[-1], abs=1e-12)
    assert report.total_explained == pytest.approx(total, abs=1e-12)
    # R^2 is consistent with the curve endpoint: 1 - curve_end^2
    assert report.r_square == pytest.approx(1.0 - report.curve[-1] ** 2, abs=1e-9)


def test_overlap_flagged_not_fatal(trained):
    train, _, model = trained
    report = diagnose_dataset(model, train.take_rows(train.row_ids[:20]))
    assert any("overlap" in w for w in report.warnings)


def test_negative_contribution_listed(trained):
    train, held, model = trained
    # graft on a spurious term fitted to shuffled targets: hurts held-out rows
    rng = np.random.default_rng(5)
    norm = model.normalization
    x = norm.normalize_params(train.params)
    shuffled = rng.permutation(
        norm.standardize_target(train.targets[:, 0], model.target_index)
    )
    cfg1 = KernelConfig(range=HYPER.range_1d, nugget_ratio=HYPER.nugget_ratio)
    bad = gp_fit(x[:, [5]], shuffled, cfg1)
    spoiled = EmulatorModel(
        target_name=model.target_name,
        normalization=norm,
        sequence=list(model.sequence) + [TermSpec((5,), len(model.sequence))],
        components=list(model.components) + [bad],
        hyper=model.hyper,
        provenance=model.provenance,
    )
    report = diagnose_dataset(spoiled, held)
    last = report.contributions[-1]
    assert last["value"] < 0
    assert last["position"] in report.negative_terms


def test_perfect_model_explains_everything():
    ds, _ = synth_generate("additive_interaction", 60, 4, seed=32, noise=0.0)
    norm = fit_normalization(ds)
    x = norm.normalize_params(ds.params)
    y_std = norm.standardize_target(ds.targets[:, 0], 0)
    # zero-nugget interpolator over all rows reproduces the target exactly
    comp = gp_fit(x[:, [0, 1, 2]], y_std, KernelConfig(range=0.7, nugget_ratio=0.0))
    model = EmulatorModel(
        target_name="y",
        normalization=norm,
        sequence=(TermSpec((0, 1, 2), 0),),
        components=(comp,),
        hyper=HYPER,
    )
    report = explained_variability(model, ds.params, ds.targets[:, 0])
    assert report.curve[-1] < 1e-5
    assert report.total_explained == pytest.approx(report.curve[0], abs=1e-5)


def _report_with(contributions):
    return DiagnosticsReport(
        target_name="y",
        n_eval=10,
        curve=[],
        contributions=contributions,
        negative_terms=[],
        total_explained=sum(c["value"] for c in contributions),
        r_square=0.5,
        eval_mean=0.0,
        eval_std=1.0,
    )


def test_group_variability_bands():
    report = _report_with(
        [
            {"position": 0, "kind": "single", "param_indices": [0], "value": 0.4},
            {"position": 1, "kind": "single", "param_indices": [1], "value": 0.03},
            {"position": 2, "kind": "pair", "param_indices": [2, 3], "value": 0.06},
            {"position": 3, "kind": "pair", "param_indices": [1, 2], "value": -0.01},
            {"position": 4, "kind": "triple", "param_indices": [0, 1, 2], "value": 0.01},
        ]
    )
    grouped = group_variability(report)
    assert grouped["sums"]["single"]["high"] == pytest.approx(0.4)
    assert grouped["sums"]["single"]["mid"] == pytest.approx(0.03)
    assert grouped["sums"]["single"]["low"] == 0.0
    assert grouped["sums"]["pair"]["high"] == pytest.approx(0.06)
    assert grouped["sums"]["pair"]["low"] == pytest.approx(-0.01)
    assert grouped["sums"]["triple"]["all"] == pytest.approx(0.01)
    assert grouped["total"] == pytest.approx(report.total_explained, abs=1e-12)


def test_group_variability_all_below_low_band():
    report = _report_with(
        [
            {"position": 0, "kind": "single", "param_indices": [0], "value": 0.005},
            {"position": 1, "kind": "single", "param_indices": [1], "value": -0.004},
        ]
    )
    grouped = group_variability(report)
    assert grouped["sums"]["single"]["low"] == pytest.approx(0.001)
    assert grouped["counts"]["single"]["low"] == 2
    assert grouped["sums"]["single"]["high"] == 0.0


def test_grouping_partitions_total(trained):
    _, held, model = trained
    report = diagnose_dataset(model, held)
    grouped = group_variability(report)
    assert grouped["total"] == pytest.approx(report.total_explained, abs=1e-12)


def test_reduce_parameters_keep_all_identity():
    ds, _ = synth_generate("additive_interaction", 120, 6, seed=33)
    same = reduce_parameters(ds, list(ds.param_names))
    np.testing.assert_array_equal(same.params, ds.params)

    dropped = reduce_parameters(ds, ["x1", "x2"])
    assert dropped.param_names == ("x1", "x2")
    with pytest.raises(InputError):
        reduce_parameters(ds, [])


def test_reduce_parameters_effect_on_fit():
    # keeping the active parameters preserves skill; dropping one loses it
    ds, manifest = synth_generate("additive_interaction", 300, 8, seed=34)
    train_ids, val_ids = ds.row_ids[:240], ds.row_ids[240:]
    active = manifest["active_singles"] + list(manifest["active_pairs"][0])

    def score(view):
        cfg = SelectionConfig(hyper=HYPER, m1=3, m2=1, m3=0)
        model, _ = train_emulator(view.take_rows(train_ids), "y", cfg, seed=34)
        val = view.take_rows(val_ids)
        cols = [val.param_index(p) for p in model.param_names]
        from ppemu.emulator import predict

        return r_square(predict(model, val.params[:, cols]), val.targets[:, 0])

    full = score(ds)
    kept = score(reduce_parameters(ds, active))
    crippled = score(reduce_parameters(ds, active[1:]))
    assert abs(kept - full) < 0.1
    assert crippled < kept - 0.15
