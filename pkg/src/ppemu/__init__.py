"""Additive GP emulation and diagnostics for sparse perturbed-parameter ensembles."""

__version__ = "0.1.0"

from .errors import InputError, NumericalError, PpemuError, SchemaError  # noqa: E402,F401
from .gp import (  # noqa: E402,F401
    GPComponent,
    KernelConfig,
    gp_fit,
    gp_predict_mean,
    matern_cov,
)
from .hyper import PRESETS, HyperparameterSet, get_preset  # noqa: E402,F401
from .data import (  # noqa: E402,F401
    Dataset,
    NormalizationSpec,
    SplitPlan,
    augment_with_outputs,
    exclude_outliers,
    fit_normalization,
    load_csv,
    make_split,
    save_csv,
)
from .synth import SCENARIOS, latin_hypercube, synth_generate  # noqa: E402,F401
from .selection import (  # noqa: E402,F401
    SelectionConfig,
    SelectionReport,
    TermSpec,
    default_term_counts,
    fit_sequence,
    prune_terms,
    rank_pairs,
    rank_triples,
    run_selection,
    select_single_iteration,
)
from .emulator import (  # noqa: E402,F401
    EmulatorModel,
    extrapolation_flags,
    final_train,
    full_gp_baseline,
    load_model,
    predict,
    predict_term,
    save_model,
    train_emulator,
)
