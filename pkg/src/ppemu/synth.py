"""Synthetic ensemble generators for tests, demos, and calibration.

Every generator is a pure function of (scenario, n, d, seed) plus optional
scale overrides, and returns (Dataset, manifest).  The manifest records the
ground truth the scenario plants (active parameters, interacting pairs,
noise scales), so downstream checks never have to re-derive it.

Scenarios
---------
sines_1d              one parameter, y = sin(pi x) + sin(2 pi x)
                      + 0.5 sin(16 pi x); the first two terms are the signal,
                      the last one plays the role of high-frequency noise
additive_interaction  smooth single-parameter effects plus one genuine
                      pair interaction, everything else inert
dominant_single       one strong parameter plus several weak ones
noise_only            target independent of every parameter
score_chain           chained outputs: an easy additive output y1 feeds a
                      downstream output whose observation-mismatch score is
                      hard to emulate from the raw parameters alone
"""

import numpy as np

from .data import Dataset
from .errors import InputError

SCENARIOS = (
    "sines_1d",
    "additive_interaction",
    "dominant_single",
    "noise_only",
    "score_chain",
)


def latin_hypercube(n: int, d: int, rng) -> np.ndarray:
    """LHS on the unit cube: n rows, each column visits n equal bins once."""
    out = np.empty((n, d))
    for j in range(d):
        out[:, j] = (rng.permutation(n) + rng.uniform(0.0, 1.0, n)) / n
    return out


def _param_names(d):
    return [f"x{j + 1}" for j in range(d)]


def synth_generate(scenario: str, n: int, d: int, seed: int = 0, **options):
    """Generate a synthetic dataset; returns (Dataset, manifest dict)."""
    if scenario not in SCENARIOS:
        raise InputError(f"unknown scenario {scenario!r}; known: {list(SCENARIOS)}")
    if n < 2:
        raise InputError("need at least 2 rows")
    rng = np.random.default_rng(seed)
    builder = {
        "sines_1d": _sines_1d,
        "additive_interaction": _additive_interaction,
        "dominant_single": _dominant_single,
        "noise_only": _noise_only,
        "score_chain": _score_chain,
    }[scenario]
    dataset, manifest = builder(n, d, rng, options)
    manifest.update({"scenario": scenario, "n": n, "d": dataset.n_params, "seed": seed})
    return dataset, manifest


def _sines_1d(n, d, rng, options):
    if d not in (0, 1):
        raise InputError("sines_1d is one-dimensional")
    x = rng.uniform(0.0, 1.0, n)
    y = np.sin(np.pi * x) + np.sin(2 * np.pi * x) + 0.5 * np.sin(16 * np.pi * x)
    ds = Dataset(
        param_names=["x1"],
        target_names=["y"],
        params=x[:, None],
        targets=y[:, None],
        row_ids=[str(i) for i in range(n)],
    )
    manifest = {"signal_terms": ["sin(pi x)", "sin(2 pi x)"], "noise_term": "0.5 sin(16 pi x)"}
    return ds, manifest


def _additive_interaction(n, d, rng, options):
    if d < 4:
        raise InputError("additive_interaction needs at least 4 parameters")
    single_scales = options.get("single_scales", (2.0, 1.5))
    pair_scale = options.get("pair_scale", 2.5)
    noise = options.get("noise", 0.1)
    x = latin_hypercube(n, d, rng)
    # planted structure: two smooth singles, one multiplicative pair, rest inert
    y = (
        single_scales[0] * np.sin(np.pi * x[:, 0])
        + single_scales[1] * x[:, 1] ** 2
        + pair_scale * x[:, 2] * x[:, 3]
        + rng.normal(0.0, noise, n)
    )
    names = _param_names(d)
    ds = Dataset(
        param_names=names,
        target_names=["y"],
        params=x,
        targets=y[:, None],
        row_ids=[str(i) for i in range(n)],
    )
    manifest = {
        "active_singles": [names[0], names[1]],
        "active_single_indices": [0, 1],
        "active_pairs": [[names[2], names[3]]],
        "active_pair_indices": [[2, 3]],
        "single_scales": list(single_scales),
        "pair_scale": pair_scale,
        "noise": noise,
        # calibrated holdout bar for the recovery checks on this fixture
        "r2_threshold": 0.8,
    }
    return ds, manifest


def _dominant_single(n, d, rng, options):
    """One strong parameter, two medium ones, three weak high-frequency ones.

    The dominant and medium effects are smooth and saturate with little
    data; the weak effects ride at twice and three times the fundamental
    frequency, so they only emerge as the training set grows.
    """
    if d < 7:
        raise InputError("dominant_single needs at least 7 parameters")
    dominant_scale = options.get("dominant_scale", 3.0)
    medium_scale = options.get("medium_scale", 0.8)
    weak_scale = options.get("weak_scale", 0.3)
    noise = options.get("noise", 0.02)
    x = latin_hypercube(n, d, rng)
    y = (
        dominant_scale * np.sin(np.pi * x[:, 0])
        + medium_scale * np.sin(np.pi * x[:, 1])
        + medium_scale * x[:, 2] ** 2
        + weak_scale * np.sin(2 * np.pi * x[:, 3])
        + weak_scale * np.cos(2 * np.pi * x[:, 4])
        + weak_scale * np.sin(3 * np.pi * x[:, 5])
    )
    y = y + rng.normal(0.0, noise, n)
    names = _param_names(d)
    ds = Dataset(
        param_names=names,
        target_names=["y"],
        params=x,
        targets=y[:, None],
        row_ids=[str(i) for i in range(n)],
    )
    manifest = {
        "dominant": names[0],
        "medium": names[1:3],
        "weak": names[3:6],
        "dominant_scale": dominant_scale,
        "medium_scale": medium_scale,
        "weak_scale": weak_scale,
        "noise": noise,
    }
    return ds, manifest


def _noise_only(n, d, rng, options):
    if d < 1:
        raise InputError("noise_only needs at least 1 parameter")
    x = latin_hypercube(n, d, rng)
    y = rng.normal(0.0, 1.0, n)
    ds = Dataset(
        param_names=_param_names(d),
        target_names=["y"],
        params=x,
        targets=y[:, None],
        row_ids=[str(i) for i in range(n)],
    )
    return ds, {"active_singles": [], "active_pairs": []}


def _score_chain(n, d, rng, options):
    """Chained outputs where a score target benefits from augmentation.

    y1 is an easy additive function of two parameters.  y2 follows y1 with
    extra noise, and y2_score = -(y2 - obs)^2 folds it around the observed
    value, so the score is a ridge over (x1, x2) but a clean parabola in y1.
    y3_score shows the low-noise case where a score emulates fine directly.
    """
    if d < 2:
        raise InputError("score_chain needs at least 2 parameters")
    noise_y1 = options.get("noise_y1", 0.03)
    noise_y2 = options.get("noise_y2", 0.15)
    noise_y3 = options.get("noise_y3", 0.02)
    x = latin_hypercube(n, d, rng)
    y1 = np.sin(np.pi * x[:, 0]) + 1.2 * x[:, 1] + rng.normal(0.0, noise_y1, n)
    y2 = 2.0 * y1 + rng.normal(0.0, noise_y2, n)
    obs_y2 = float(options.get("obs_y2", 2.5))
    y2_score = -((y2 - obs_y2) ** 2)
    y3 = 1.5 * x[:, 0] + rng.normal(0.0, noise_y3, n)
    obs_y3 = float(options.get("obs_y3", 0.75))
    y3_score = -((y3 - obs_y3) ** 2)
    names = _param_names(d)
    ds = Dataset(
        param_names=names,
        target_names=["y1", "y2", "y2_score", "y3", "y3_score"],
        params=x,
        targets=np.column_stack([y1, y2, y2_score, y3, y3_score]),
        row_ids=[str(i) for i in range(n)],
    )
    manifest = {
        "easy_targets": ["y1"],
        "difficult_targets": ["y2_score"],
        "obs_y2": obs_y2,
        "obs_y3": obs_y3,
        "noise": {"y1": noise_y1, "y2": noise_y2, "y3": noise_y3},
        "active_singles": [names[0], names[1]],
    }
    return ds, manifest
