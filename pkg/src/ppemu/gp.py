"""Mean-only Gaussian-process interpolation with fixed hyperparameters.

Each additive term of the emulator is the mean of a GP with an isotropic
Matern 5/2 covariance

    k(r) = (1 + sqrt(5) t + 5 t^2 / 3) * exp(-sqrt(5) t),   t = r / range,

a single scalar length scale (``range``) and a fixed nugget-to-signal-variance
ratio ``eta``.  Fitting solves (C + eta I) alpha = y; predicting evaluates
c(x*)^T alpha.  The prior mean is zero, so predictions decay toward zero far
from the training inputs, and the signal variance never enters: the mean is
invariant to it, only the ratio eta matters.

Hyperparameters are specified, never estimated.  Components are immutable
after construction; fit and predict are pure functions of their inputs.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InputError, NumericalError

MATERN52 = "matern52"

_SQRT5 = math.sqrt(5.0)

# Jitter escalation for the SPD solve: the nugget normally guarantees
# conditioning; this guards nugget_ratio = 0 configurations.
_JITTERS = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)

# Training inputs are expected in normalized [0,1] coordinates; allow a little
# slack for round-off at the box edges.
_BOUNDS_TOL = 1e-6


@dataclass(frozen=True)
class KernelConfig:
    """Fixed covariance hyperparameters for one GP term.

    range: length scale in normalized-parameter units, > 0.
    nugget_ratio: nugget-to-signal-variance ratio (noise-to-signal), >= 0.
    smoothness: only Matern 5/2 is supported; kept in serialized models for
        forward compatibility.
    """

    range: float
    nugget_ratio: float = 0.0
    smoothness: str = MATERN52

    def __post_init__(self):
        if not (self.range > 0.0 and math.isfinite(self.range)):
            raise InputError(f"kernel range must be positive, got {self.range}")
        if not (self.nugget_ratio >= 0.0 and math.isfinite(self.nugget_ratio)):
            raise InputError(
                f"nugget_ratio must be nonnegative, got {self.nugget_ratio}"
            )
        if self.smoothness != MATERN52:
            raise InputError(f"unsupported smoothness {self.smoothness!r}")


@dataclass(frozen=True)
class GPComponent:
    """One fitted GP term: training coordinates, solved weights, kernel.

    The mean prediction at x* is sum_i k(x*, inputs_i) * weights_i with
    weights = (C + eta I)^-1 responses.
    """

    inputs: np.ndarray
    weights: np.ndarray
    kernel: KernelConfig

    def __post_init__(self):
        if self.inputs.ndim != 2:
            raise InputError("component inputs must be a 2-D array")
        if self.weights.shape != (self.inputs.shape[0],):
            raise InputError("weights length must equal number of input rows")
        self.inputs.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, (n, m).

    Computed from per-dimension differences (not the dot-product identity) so
    nearby points keep full precision and column order does not matter.
    """
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def matern52_from_sqdist(d2: np.ndarray, range_: float) -> np.ndarray:
    """Matern 5/2 correlation from squared distances."""
    t = np.sqrt(np.maximum(d2, 0.0)) / range_
    return (1.0 + _SQRT5 * t + (5.0 / 3.0) * t * t) * np.exp(-_SQRT5 * t)


def matern_cov(x_a, x_b, cfg: KernelConfig) -> float:
    """Covariance between two points; symmetric, in (0, 1]."""
    a = np.atleast_1d(np.asarray(x_a, dtype=float))
    b = np.atleast_1d(np.asarray(x_b, dtype=float))
    if a.shape != b.shape or a.ndim != 1:
        raise InputError(f"point dimensions differ: {a.shape} vs {b.shape}")
    d2 = float(np.sum((a - b) ** 2))
    return float(matern52_from_sqdist(np.asarray(d2), cfg.range))


def matern_cov_matrix(a: np.ndarray, b: np.ndarray, cfg: KernelConfig) -> np.ndarray:
    """Cross-covariance matrix between two coordinate sets, (n, m)."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[1] != b.shape[1]:
        raise InputError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    return matern52_from_sqdist(_sq_dists(a, b), cfg.range)


def solve_spd(mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve a symmetric positive-definite system with jitter escalation.

    Tries a Cholesky factorization as given, then with diagonal jitter
    1e-10 escalating tenfold up to 1e-6 before giving up.
    """
    n = mat.shape[0]
    for jitter in _JITTERS:
        try:
            cf = scipy.linalg.cho_factor(
                mat if jitter == 0.0 else mat + jitter * np.eye(n),
                lower=True,
                check_finite=False,
            )
        except scipy.linalg.LinAlgError:
            continue
        return scipy.linalg.cho_solve(cf, rhs, check_finite=False)
    raise NumericalError(
        f"covariance factorization failed after jitter escalation (n={n})"
    )


def gp_fit(inputs, responses, cfg: KernelConfig) -> GPComponent:
    """Fit GP weights: solve (C + nugget_ratio * I) alpha = responses.

    inputs is (m, d) in normalized [0,1] coordinates; responses length m.
    """
    x = np.ascontiguousarray(np.atleast_2d(np.asarray(inputs, dtype=float)))
    if x.ndim != 2 or x.shape[0] < 1:
        raise InputError("inputs must be a non-empty (m, d) matrix")
    y = np.asarray(responses, dtype=float).reshape(-1)
    if y.shape[0] != x.shape[0]:
        raise InputError(
            f"responses length {y.shape[0]} != number of input rows {x.shape[0]}"
        )
    if not np.all(np.isfinite(y)):
        raise InputError("responses contain non-finite values")
    if not np.all(np.isfinite(x)):
        raise InputError("inputs contain non-finite values")
    if x.min() < -_BOUNDS_TOL or x.max() > 1.0 + _BOUNDS_TOL:
        raise InputError("training inputs must lie in [0,1] per dimension")

    cov = matern52_from_sqdist(_sq_dists(x, x), cfg.range)
    if cfg.nugget_ratio != 0.0:
        cov = cov + cfg.nugget_ratio * np.eye(x.shape[0])
    weights = solve_spd(cov, y)
    return GPComponent(inputs=x, weights=weights, kernel=cfg)


def gp_predict_mean(comp: GPComponent, queries) -> np.ndarray:
    """Zero-prior-mean prediction at each query row, length k."""
    q = np.atleast_2d(np.asarray(queries, dtype=float))
    if q.shape[1] != comp.dim:
        raise InputError(
            f"query dimension {q.shape[1]} != component dimension {comp.dim}"
        )
    cross = matern52_from_sqdist(_sq_dists(q, comp.inputs), comp.kernel.range)
    return cross @ comp.weights
