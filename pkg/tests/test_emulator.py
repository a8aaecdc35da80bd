import numpy as np
import pytest

from ppemu.data import fit_normalization
from ppemu.emulator import (
    EmulatorModel,
    extrapolation_flags,
    final_train,
    full_gp_baseline,
    load_model,
    model_to_dict,
    predict,
    predict_term,
    save_model,
    train_emulator,
)
from ppemu.errors import InputError, SchemaError
from ppemu.hyper import PRESETS
from ppemu.selection import SelectionConfig, TermSpec
from ppemu.synth import synth_generate
from ppemu.util import canonical_json

HYPER = PRESETS["default"]


@pytest.fixture(scope="module")
def interaction_model():
    ds, _ = synth_generate("additive_interaction", 250, 6, seed=21)
    cfg = SelectionConfig(hyper=HYPER, m1=4, m2=1, m3=0)
    model, report = train_emulator(ds, "y", cfg, seed=21)
    return ds, model, report


def test_final_train_curve_monotone(interaction_model):
    _, model, _ = interaction_model
    curve = model.training_curve
    assert len(curve) == len(model.sequence) + 1
    assert all(curve[k + 1] <= curve[k] + 1e-12 for k in range(len(curve) - 1))


def test_empty_sequence_predicts_training_mean():
    ds, _ = synth_generate("noise_only", 60, 4, seed=22)
    model = final_train(ds, "y", [], HYPER)
    pred = predict(model, ds.params[:10])
    np.testing.assert_allclose(pred, np.full(10, ds.targets[:, 0].mean()), atol=1e-12)


def test_predict_tracks_training_points(interaction_model):
    ds, model, _ = interaction_model
    pred = predict(model, ds.params)
    truth = ds.targets[:, 0]
    r2 = 1 - np.sum((pred - truth) ** 2) / np.sum((truth - truth.mean()) ** 2)
    assert r2 > 0.8


def test_predict_far_query_returns_mean(interaction_model):
    ds, model, _ = interaction_model
    far = np.full((1, ds.n_params), 50.0)
    pred = predict(model, far)
    assert pred[0] == pytest.approx(ds.targets[:, 0].mean(), rel=1e-3)
    assert extrapolation_flags(model, far)[0]
    assert not extrapolation_flags(model, ds.params[:5]).any()


def test_sum_decomposition(interaction_model):
    ds, model, _ = interaction_model
    q = ds.params[:20]
    total_std = sum(
        predict_term(model, k, q) for k in range(len(model.sequence))
    )
    expected = model.normalization.destandardize_target(total_std, model.target_index)
    np.testing.assert_allclose(predict(model, q), expected, atol=1e-12)


def test_predict_term_out_of_range(interaction_model):
    _, model, _ = interaction_model
    with pytest.raises(InputError):
        predict_term(model, len(model.sequence), np.zeros((1, 6)))


def test_predict_row_permutation_safe(interaction_model):
    ds, model, _ = interaction_model
    q = ds.params[:30]
    perm = np.random.default_rng(0).permutation(30)
    np.testing.assert_allclose(predict(model, q)[perm], predict(model, q[perm]), atol=1e-12)


def test_final_train_rejects_unknown_indices():
    ds, _ = synth_generate("additive_interaction", 50, 4, seed=23)
    with pytest.raises(InputError):
        final_train(ds, "y", [TermSpec((9,), 0)], HYPER)


def test_deterministic_retrain_byte_identical(interaction_model):
    ds, model, _ = interaction_model
    again = final_train(
        ds, "y", model.sequence, HYPER,
        seed=model.provenance["seed"], config_digest=model.provenance["config_digest"],
    )
    assert canonical_json(model_to_dict(model)) == canonical_json(model_to_dict(again))


def test_roundtrip_serialization(interaction_model, tmp_path):
    ds, model, _ = interaction_model
    path = tmp_path / "model.json"
    save_model(model, path)
    back = load_model(path)
    rng = np.random.default_rng(3)
    q = rng.uniform(ds.params.min(0), ds.params.max(0), size=(100, ds.n_params))
    np.testing.assert_allclose(predict(back, q), predict(model, q), atol=1e-12)
    # and byte-identical when saved again
    assert canonical_json(model_to_dict(back)) == path.read_text()


def test_roundtrip_empty_model(tmp_path):
    ds, _ = synth_generate("noise_only", 40, 3, seed=24)
    model = final_train(ds, "y", [], HYPER)
    path = tmp_path / "empty.json"
    save_model(model, path)
    back = load_model(path)
    np.testing.assert_allclose(predict(back, ds.params), predict(model, ds.params))


def test_load_rejects_unknown_smoothness(tmp_path, interaction_model):
    _, model, _ = interaction_model
    doc = model_to_dict(model)
    doc["components"][0]["kernel"]["smoothness"] = "matern99"
    path = tmp_path / "bad.json"
    path.write_text(canonical_json(doc))
    with pytest.raises(InputError, match="smoothness"):
        load_model(path)


def test_load_rejects_schema_mismatch(tmp_path, interaction_model):
    _, model, _ = interaction_model
    doc = model_to_dict(model)
    doc["schema_version"] = "9.0"
    path = tmp_path / "future.json"
    path.write_text(canonical_json(doc))
    with pytest.raises(SchemaError):
        load_model(path)
    path.write_text("{not json")
    with pytest.raises(InputError):
        load_model(path)


def test_baseline_matches_one_term_model_in_1d():
    ds, _ = synth_generate("sines_1d", 60, 1, seed=25)
    baseline = full_gp_baseline(ds, "y", hyper_range=0.6, nugget_ratio=2.0)
    one_term = final_train(ds, "y", [TermSpec((0,), 0)], HYPER)
    q = np.linspace(ds.params.min(), ds.params.max(), 50)[:, None]
    np.testing.assert_allclose(predict(baseline, q), predict(one_term, q), atol=1e-8)


def test_baseline_noise_target_negative_r2():
    ds, _ = synth_generate("noise_only", 200, 8, seed=26)
    train = ds.take_rows(ds.row_ids[:150])
    baseline = full_gp_baseline(train, "y")
    held = ds.take_rows(ds.row_ids[150:])
    pred = predict(baseline, held.params)
    truth = held.targets[:, 0]
    r2 = 1 - np.sum((pred - truth) ** 2) / np.sum((truth - truth.mean()) ** 2)
    assert r2 <= 0.05


def test_baseline_roundtrips(tmp_path):
    ds, _ = synth_generate("additive_interaction", 80, 5, seed=27)
    baseline = full_gp_baseline(ds, "y")
    path = tmp_path / "baseline.json"
    save_model(baseline, path)
    back = load_model(path)
    np.testing.assert_allclose(predict(back, ds.params), predict(baseline, ds.params))


def test_additive_beats_baseline_when_sparse():
    # high dimension, few rows: the additive model holds its own against
    # the all-parameter GP on a single-parameter target
    ds, _ = synth_generate("dominant_single", 160, 12, seed=28, weak_scale=0.0)
    train = ds.take_rows(ds.row_ids[:120])
    held = ds.take_rows(ds.row_ids[120:])
    truth = held.targets[:, 0]

    def r2(pred):
        return 1 - np.sum((pred - truth) ** 2) / np.sum((truth - truth.mean()) ** 2)

    cfg = SelectionConfig(hyper=HYPER, m1=3, m2=0, m3=0)
    additive, _ = train_emulator(train, "y", cfg, seed=28)
    baseline = full_gp_baseline(train, "y")
    assert r2(predict(baseline, held.params)) <= r2(predict(additive, held.params)) + 0.05
