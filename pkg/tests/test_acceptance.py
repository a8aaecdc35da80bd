"""Acceptance suite: one test per release criterion, tolerances pinned.

Run with `pytest tests/test_acceptance.py`; the terminal summary prints one
PASS/FAIL line per criterion (see conftest.py).
"""

import json
import math
import time

import numpy as np
import pytest

from ppemu.cli import main as cli_main
from ppemu.data import augment_with_outputs, make_split, save_csv
from ppemu.diagnostics import diagnose_dataset, group_variability, r_square
from ppemu.emulator import predict, train_emulator
from ppemu.experiments import (
    experiment_hyper_sweep,
    experiment_learning_curve,
    experiment_random_splits,
)
from ppemu.gp import KernelConfig, gp_fit, gp_predict_mean
from ppemu.hyper import PRESETS
from ppemu.selection import SelectionConfig, rank_pairs, run_selection
from ppemu.synth import synth_generate
from ppemu.util import rmse

from oracles import gp_mean_oracle

DEFAULT = PRESETS["default"]


def test_gp_oracle_equivalence():
    """20 random instances match a naive dense-solve oracle to 1e-8 in <10s."""
    start = time.monotonic()
    rng = np.random.default_rng(606)
    for _ in range(20):
        d = int(rng.integers(1, 4))
        m = int(rng.integers(5, 101))
        x = rng.uniform(0, 1, size=(m, d))
        y = rng.normal(0, 1.5, m)
        cfg = KernelConfig(
            range=float(rng.uniform(0.2, 1.2)),
            nugget_ratio=float(rng.uniform(0.5, 4.0)),
        )
        q = rng.uniform(0, 1, size=(25, d))
        got = gp_predict_mean(gp_fit(x, y, cfg), q)
        want = gp_mean_oracle(
            x.tolist(), y.tolist(), q.tolist(), cfg.range, cfg.nugget_ratio
        )
        np.testing.assert_allclose(got, want, atol=1e-8)
    assert time.monotonic() - start < 10.0


def test_fixed_hyper_smoothing_orderings():
    """Smoothing orderings of the noisy-sines fixture, eta in {1.0, 0.5}, <5s."""
    start = time.monotonic()
    ds, _ = synth_generate("sines_1d", 100, 1, seed=42)
    x, y = ds.params, ds.targets[:, 0]
    grid = np.linspace(0.0, 1.0, 401)[:, None]
    signal = np.sin(np.pi * grid[:, 0]) + np.sin(2 * np.pi * grid[:, 0])

    curves, at_samples = {}, {}
    for eta in (1.0, 0.5):
        for rng_ in (1.0, 0.4, 0.1, 0.02):
            comp = gp_fit(x, y, KernelConfig(range=rng_, nugget_ratio=eta))
            curves[(rng_, eta)] = gp_predict_mean(comp, grid)
            at_samples[(rng_, eta)] = gp_predict_mean(comp, x)

    for eta in (1.0, 0.5):
        err = {r: rmse(curves[(r, eta)] - signal) for r in (1.0, 0.4, 0.1)}
        assert err[0.4] < err[1.0]
        assert err[0.1] < err[1.0]
        # a tiny range chases the high-frequency component through the samples
        fit_err = {r: rmse(at_samples[(r, eta)] - y) for r in (0.02, 0.4)}
        assert fit_err[0.02] < fit_err[0.4]

    d_eta = np.max(np.abs(curves[(0.4, 1.0)] - curves[(0.4, 0.5)]))
    for eta in (1.0, 0.5):
        d_range = np.max(np.abs(curves[(0.4, eta)] - curves[(1.0, eta)]))
        assert d_eta < d_range
    assert time.monotonic() - start < 5.0


def test_pair_criterion_arithmetic():
    """Delta(1.0, 0.9, 0.85, 0.6) = 0.15 exactly; pairs canonical over C(10,2)."""
    delta = (1.0 - 0.6) - (2.0 * 1.0 - 0.9 - 0.85)
    assert abs(delta - 0.15) <= 1e-15
    rearranged = 0.9 + 0.85 - 1.0 - 0.6
    assert abs(rearranged - 0.15) <= 1e-15

    rng = np.random.default_rng(77)
    x = rng.uniform(0, 1, size=(60, 10))
    y = rng.normal(0, 1, 60)
    ranked = rank_pairs(x, y, rmse(y), DEFAULT)
    pairs = [p for p, _ in ranked]
    assert len(pairs) == math.comb(10, 2)
    assert all(p < q for p, q in pairs)
    assert len(set(pairs)) == len(pairs)
    cfg2 = KernelConfig(range=DEFAULT.range_2d, nugget_ratio=DEFAULT.nugget_ratio)
    for p, q in pairs:
        fwd = gp_predict_mean(gp_fit(x[:, [p, q]], y, cfg2), x[:, [p, q]])
        rev = gp_predict_mean(gp_fit(x[:, [q, p]], y, cfg2), x[:, [q, p]])
        np.testing.assert_array_equal(fwd, rev)


def test_interaction_recovery():
    """Planted terms recovered and held-out R2 >= 0.8 in >= 9/10 seeds, <2min."""
    start = time.monotonic()
    cfg = SelectionConfig(hyper=DEFAULT)
    singles_ok = pair_ok = r2_ok = 0
    for seed in range(10):
        ds, manifest = synth_generate("additive_interaction", 400, 10, seed=seed)
        split = make_split(ds, train_size=320, val_size=80, seed=seed)
        train = ds.take_rows(split.train_ids)
        model, report = train_emulator(train, "y", cfg, seed=seed)

        selected = {t.param_indices[0] for t in model.sequence if t.kind == "single"}
        singles_ok += set(manifest["active_single_indices"]) <= selected
        pair_ok += report.pair_ranking[0]["indices"] == manifest["active_pair_indices"][0]

        val = ds.take_rows(split.validation_ids)
        r2 = r_square(predict(model, val.params), val.targets[:, 0])
        r2_ok += r2 >= manifest["r2_threshold"]
    assert singles_ok >= 9
    assert pair_ok >= 9
    assert r2_ok >= 9
    assert time.monotonic() - start < 120.0


def test_telescoping_exactness():
    """Contributions sum to the curve drop and bands partition it, 1e-12."""
    ds, _ = synth_generate("additive_interaction", 300, 8, seed=61)
    train = ds.take_rows(ds.row_ids[:240])
    held = ds.take_rows(ds.row_ids[240:])
    for m3 in (0, 2):
        cfg = SelectionConfig(hyper=DEFAULT, m1=5, m2=2, m3=m3)
        model, _ = train_emulator(train, "y", cfg, seed=61)
        report = diagnose_dataset(model, held)
        total = sum(c["value"] for c in report.contributions)
        assert abs(total - (report.curve[0] - report.curve[-1])) <= 1e-12
        assert abs(report.total_explained - total) <= 1e-12
        grouped = group_variability(report)
        assert abs(grouped["total"] - report.total_explained) <= 1e-12


def test_hyper_insensitivity_ordering():
    """Sweep spread (sets 1-5, frozen sequence) < 10-random-split spread."""
    cfg = SelectionConfig(hyper=DEFAULT)
    ds, _ = synth_generate("additive_interaction", 400, 10, seed=101, noise=0.5)
    default_split = make_split(ds, train_size=320, val_size=80, seed=101)
    sequence, _ = run_selection(
        ds.take_rows(default_split.train_ids), "y", cfg, seed=101, workers=2
    )
    sweep = experiment_hyper_sweep(
        ds, "y", default_split, sequence,
        sets=[PRESETS[f"set{i}"] for i in range(1, 6)], workers=2,
    )
    splits = experiment_random_splits(
        ds, "y", train_size=320, val_size=80, repeats=10, seed=101,
        cfg=cfg, workers=2,
    )
    assert sweep["spread"] < splits["targets"][0]["spread"]


def test_pruning_soundness():
    """Every retained term strictly decreases holdout RMSE; forced keeps m1+m2."""
    for seed in range(3):
        ds, _ = synth_generate("additive_interaction", 300, 10, seed=seed)
        _, report = run_selection(ds, "y", SelectionConfig(hyper=DEFAULT), seed=seed)
        retained = [r for r in report.term_records if r["retained"]]
        assert retained, "selection kept nothing on a strong fixture"
        assert all(r["holdout_delta"] > 0 for r in retained)

    ds, _ = synth_generate("additive_interaction", 300, 43, seed=9)
    forced_cfg = SelectionConfig(hyper=DEFAULT, m1=20, m2=5, m3=0, forced=True)
    sequence, report = run_selection(ds, "y", forced_cfg, seed=9)
    assert len(sequence) == 25
    assert sum(r["retained"] for r in report.term_records) == 25


def test_worker_determinism(tmp_path):
    """Same config+seed: byte-identical artifacts across 1, 2, 8 workers."""
    ds, _ = synth_generate("additive_interaction", 200, 8, seed=71)
    schema = save_csv(ds, tmp_path / "data.csv")
    (tmp_path / "data.schema.json").write_text(json.dumps(schema))
    blobs = []
    for workers in (1, 2, 8):
        out = tmp_path / f"w{workers}"
        rc = cli_main([
            "train",
            "--data", str(tmp_path / "data.csv"),
            "--schema", str(tmp_path / "data.schema.json"),
            "--target", "y",
            "--split", "random:160/40",
            "--seed", "71",
            "--m1", "5", "--m2", "2", "--m3", "1",
            "--workers", str(workers),
            "--out-dir", str(out),
        ])
        assert rc == 0
        blobs.append(
            (
                (out / "model_y.json").read_bytes(),
                (out / "selection_y.json").read_bytes(),
            )
        )
    assert blobs[0] == blobs[1] == blobs[2]


def test_augmentation_benefit():
    """Predicted-easy-output augmentation lifts score-target R2 in >=8/10 seeds."""
    cfg = SelectionConfig(hyper=DEFAULT)
    wins = 0
    for seed in range(10):
        ds, _ = synth_generate("score_chain", 300, 4, seed=seed)
        split = make_split(ds, train_size=240, val_size=60, seed=seed)
        train = ds.take_rows(split.train_ids)
        val = ds.take_rows(split.validation_ids)

        provider, _ = train_emulator(train, "y1", cfg, seed=seed)
        plain, _ = train_emulator(train, "y2_score", cfg, seed=seed)
        t_idx = val.target_index("y2_score")
        r2_plain = r_square(predict(plain, val.params), val.targets[:, t_idx])

        aug_train = augment_with_outputs(train, ["y1"], [provider])
        aug_val = augment_with_outputs(val, ["y1"], [provider])
        boosted, _ = train_emulator(aug_train, "y2_score", cfg, seed=seed)
        cols = [aug_val.param_index(p) for p in boosted.param_names]
        r2_aug = r_square(
            predict(boosted, aug_val.params[:, cols]), aug_val.targets[:, t_idx]
        )
        wins += r2_aug > r2_plain
    assert wins >= 8


def test_learning_curve_protocol():
    """4 sizes x 5 repeats; top-3 <= top-6 <= leaders in every cell; top-3 flat."""
    ds, _ = synth_generate("dominant_single", 500, 10, seed=77)
    out = experiment_learning_curve(
        ds, "y", ds.row_ids[400:], sizes=(100, 200, 300, 400), repeats=5,
        seed=77, cfg=SelectionConfig(hyper=DEFAULT), workers=2,
    )
    assert len(out["cells"]) == 20
    for cell in out["cells"]:
        assert cell["top3"] <= cell["top6"] + 1e-12
        assert cell["top6"] <= cell["leaders_total"] + 1e-12
    totals = [s["total_mean"] for s in out["summary"]]
    top3s = [s["top3_mean"] for s in out["summary"]]
    assert max(top3s) - min(top3s) < max(totals) - min(totals)


def test_negative_r_square():
    """Predictions = -truths on standardized truths give R2 = -3 +- 1e-9."""
    rng = np.random.default_rng(88)
    y = rng.normal(0, 1, 1000)
    y = (y - y.mean()) / y.std()
    assert r_square(-y, y) == pytest.approx(-3.0, abs=1e-9)
