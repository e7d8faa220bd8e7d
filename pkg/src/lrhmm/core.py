"""Core types for left-right hidden Markov models with Gaussian emissions.

A model holds one state per time step of the training sequences.  Transition
structure is banded: from state ``i`` only states ``i .. i + band_width`` are
reachable, the last state is absorbing, and the start distribution normally
puts all mass on the first state.  Every probability the package manipulates
is kept in log space; structurally impossible transitions are ``-inf``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import solve_triangular

_LOG_2PI = math.log(2.0 * math.pi)

# Tolerances for model invariants (row stochasticity, covariance symmetry).
ROW_SUM_TOL = 1e-9
SYMMETRY_RTOL = 1e-12


class LrHmmError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(LrHmmError):
    """The caller violated an interface contract (bad shapes, bad arguments)."""


class ModelError(LrHmmError):
    """A model or data set is invalid or numerically unusable."""


class DegenerateStateError(ModelError):
    """A state lost all posterior mass during training."""


class ParseError(LrHmmError):
    """A data file could not be parsed."""


def _frozen_array(values, dtype=float) -> np.ndarray:
    out = np.array(values, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class ObservationSequence:
    """A single recorded trial: ``values`` has one row per time step.

    Parameters
    ----------
    values : array, shape (T, M)
        Sensor readings; a 1-D array is treated as a single channel.
    dt : float
        Sampling interval in seconds, > 0.
    sensor_id : str
        Identifier of the sensor that produced the trial.
    trial_id : int
        Index of the trial within its recording session.
    label : int or None
        Motion class (1 or 2) when known.
    """

    values: np.ndarray
    dt: float
    sensor_id: str = ""
    trial_id: int = 0
    label: int | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise UsageError(f"sequence values must be 2-D, got shape {values.shape}")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise UsageError("sequence must have at least one step and one channel")
        if not np.all(np.isfinite(values)):
            raise UsageError("sequence contains non-finite values")
        if not self.dt > 0:
            raise UsageError(f"dt must be positive, got {self.dt}")
        if self.label not in (None, 1, 2):
            raise UsageError(f"label must be 1, 2 or None, got {self.label!r}")
        object.__setattr__(self, "values", _frozen_array(values))
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def n_steps(self) -> int:
        return self.values.shape[0]

    @property
    def n_dims(self) -> int:
        return self.values.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_steps * self.dt


@dataclass(frozen=True, eq=False)
class GaussianEmission:
    """Gaussian observation density of one state: N(mean, covariance).

    The covariance must be symmetric (to ``SYMMETRY_RTOL`` relative) and
    positive definite; the Cholesky factor is computed once at construction.
    """

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        if mean.ndim == 0:
            mean = mean[None]
        if mean.ndim != 1:
            raise UsageError(f"mean must be 1-D, got shape {mean.shape}")
        cov = np.asarray(self.covariance, dtype=float)
        if cov.ndim == 0:
            cov = cov[None, None]
        m = mean.shape[0]
        if cov.shape != (m, m):
            raise UsageError(f"covariance shape {cov.shape} does not match mean length {m}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise UsageError("emission parameters contain non-finite values")
        scale = max(float(np.abs(cov).max()), np.finfo(float).tiny)
        if float(np.abs(cov - cov.T).max()) > SYMMETRY_RTOL * scale:
            raise ModelError("covariance is not symmetric")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise ModelError("covariance is not positive definite") from None
        object.__setattr__(self, "mean", _frozen_array(mean))
        object.__setattr__(self, "covariance", _frozen_array(cov))
        object.__setattr__(self, "_chol", _frozen_array(chol))
        object.__setattr__(self, "_log_det", 2.0 * float(np.log(np.diag(chol)).sum()))

    @property
    def n_dims(self) -> int:
        return self.mean.shape[0]


class _EmissionTable:
    """Stacked per-state emission parameters for vectorised log-density."""

    def __init__(self, means: np.ndarray, chols: np.ndarray):
        self.means = means                                          # (N, M)
        self.chols = chols                                          # (N, M, M)
        self.n_dims = means.shape[1]
        log_dets = 2.0 * np.log(np.diagonal(chols, axis1=1, axis2=2)).sum(axis=1)
        self.log_norms = -0.5 * (self.n_dims * _LOG_2PI + log_dets)  # (N,)

    @classmethod
    def from_emissions(cls, emissions) -> "_EmissionTable":
        return cls(np.stack([e.mean for e in emissions]),
                   np.stack([e._chol for e in emissions]))

    def log_b(self, values: np.ndarray) -> np.ndarray:
        """Log densities of ``values`` (..., M) under every state: (..., N)."""
        values = np.asarray(values, dtype=float)
        diff = values[..., None, :] - self.means                    # (..., N, M)
        if self.n_dims == 1:
            z = diff[..., 0] / self.chols[:, 0, 0]
            quad = z * z
        else:
            lead = diff.shape[:-2]
            n_states = self.means.shape[0]
            quad = np.empty(lead + (n_states,))
            flat = diff.reshape(-1, n_states, self.n_dims)
            for j in range(n_states):
                y = solve_triangular(self.chols[j], flat[:, j, :].T, lower=True)
                quad[..., j] = (y * y).sum(axis=0).reshape(lead)
        return self.log_norms - 0.5 * quad


def gaussian_log_density(x, emission: GaussianEmission) -> float:
    """Log density of observation ``x`` under ``emission``.

    Evaluated through the cached Cholesky factor of the covariance.  A scalar
    ``x`` is accepted for single-channel emissions.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    if x.shape != (emission.n_dims,):
        raise UsageError(
            f"observation shape {x.shape} does not match emission dimension {emission.n_dims}"
        )
    table = _EmissionTable.from_emissions([emission])
    return float(table.log_b(x[None, :])[0, 0])


@dataclass(frozen=True, eq=False)
class LrHmmModel:
    """A left-right HMM: banded transitions, Gaussian state emissions.

    ``log_pi`` and ``log_A`` store log probabilities with ``-inf`` for
    structural zeros.  ``emissions`` holds one :class:`GaussianEmission` per
    state.  Instances are immutable; semantic invariants (stochastic rows,
    band structure) are checked by :func:`validate_model`, not here.
    """

    n_states: int
    n_dims: int
    log_pi: np.ndarray
    log_A: np.ndarray
    emissions: tuple
    band_width: int = 1

    def __post_init__(self):
        n, m = self.n_states, self.n_dims
        if n < 1 or m < 1:
            raise UsageError("n_states and n_dims must be >= 1")
        if self.band_width < 1:
            raise UsageError("band_width must be >= 1")
        log_pi = np.asarray(self.log_pi, dtype=float)
        log_A = np.asarray(self.log_A, dtype=float)
        if log_pi.shape != (n,):
            raise UsageError(f"log_pi shape {log_pi.shape}, expected ({n},)")
        if log_A.shape != (n, n):
            raise UsageError(f"log_A shape {log_A.shape}, expected ({n}, {n})")
        if np.any(np.isnan(log_pi)) or np.any(np.isnan(log_A)):
            raise UsageError("log probabilities contain NaN")
        if np.any(np.isposinf(log_pi)):
            raise UsageError("log_pi contains +inf")
        if np.any(np.isposinf(log_A)):
            raise UsageError("log_A contains +inf")
        emissions = tuple(self.emissions)
        if len(emissions) != n:
            raise UsageError(f"expected {n} emissions, got {len(emissions)}")
        for j, e in enumerate(emissions):
            if not isinstance(e, GaussianEmission):
                raise UsageError(f"emission {j} is not a GaussianEmission")
            if e.n_dims != m:
                raise UsageError(f"emission {j} has dimension {e.n_dims}, expected {m}")
        object.__setattr__(self, "log_pi", _frozen_array(log_pi))
        object.__setattr__(self, "log_A", _frozen_array(log_A))
        object.__setattr__(self, "emissions", emissions)

    @cached_property
    def _table(self) -> _EmissionTable:
        return _EmissionTable.from_emissions(self.emissions)


@dataclass(frozen=True, eq=False)
class ForwardBackwardCache:
    """Per-sequence E-step quantities.

    ``log_alpha`` and ``log_beta`` are the forward/backward log variables
    (T, N); ``gamma`` holds state posteriors as probabilities with exact 0.0
    where the band makes a state unreachable; ``log_xi_sums`` is the (N, N)
    log of pairwise transition posteriors summed over t = 1..T-1.
    """

    log_alpha: np.ndarray
    log_beta: np.ndarray
    gamma: np.ndarray
    log_xi_sums: np.ndarray
    log_likelihood: float


def validate_model(model: LrHmmModel) -> list[str]:
    """Check every model invariant; return a list of violations (empty = valid).

    Checks the band structure of ``log_A``, row stochasticity of ``A`` and
    ``pi`` (to ``ROW_SUM_TOL``), the absorbing final state, and symmetry /
    positive definiteness of every emission covariance.  Never raises.
    """
    violations: list[str] = []
    n = model.n_states
    band = model.band_width
    with np.errstate(over="ignore"):
        a = np.exp(model.log_A)
        pi = np.exp(model.log_pi)

    for i in range(n):
        for j in range(n):
            in_band = i <= j <= min(i + band, n - 1)
            if not in_band and not np.isneginf(model.log_A[i, j]):
                violations.append(f"transition {i}->{j} outside the band is not -inf")

    row_sums = a.sum(axis=1)
    for i, s in enumerate(row_sums):
        if not np.isfinite(s) or abs(s - 1.0) > ROW_SUM_TOL:
            violations.append(f"row {i} of A sums to {s!r}, expected 1")
    if abs(a[n - 1, n - 1] - 1.0) > ROW_SUM_TOL:
        violations.append(f"final state is not absorbing (self-transition {a[n - 1, n - 1]!r})")

    pi_sum = pi.sum()
    if not np.isfinite(pi_sum) or abs(pi_sum - 1.0) > ROW_SUM_TOL:
        violations.append(f"pi sums to {pi_sum!r}, expected 1")

    for j, e in enumerate(model.emissions):
        cov = e.covariance
        scale = max(float(np.abs(cov).max()), np.finfo(float).tiny)
        if float(np.abs(cov - cov.T).max()) > SYMMETRY_RTOL * scale:
            violations.append(f"emission {j} covariance is not symmetric")
            continue
        min_eig = float(np.linalg.eigvalsh(cov).min())
        if not min_eig > 0:
            violations.append(f"emission {j} covariance is not positive definite "
                              f"(min eigenvalue {min_eig!r})")
    return violations


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

def model_to_json(model: LrHmmModel) -> str:
    """Serialize a model to a JSON document (probabilities, not logs)."""
    with np.errstate(over="ignore"):
        pi = np.exp(model.log_pi)
        a = np.exp(model.log_A)
    doc = {
        "n_states": model.n_states,
        "n_dims": model.n_dims,
        "band_width": model.band_width,
        "pi": pi.tolist(),
        "A": a.tolist(),
        "emissions": [
            {"mean": e.mean.tolist(), "covariance": e.covariance.tolist()}
            for e in model.emissions
        ],
    }
    return json.dumps(doc, indent=2)


def model_from_json(text: str) -> LrHmmModel:
    """Parse a model document; raises ModelError if invariants are violated."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid model JSON: {exc}") from None
    try:
        n_states = int(doc["n_states"])
        n_dims = int(doc["n_dims"])
        band_width = int(doc["band_width"])
        pi = np.asarray(doc["pi"], dtype=float)
        a = np.asarray(doc["A"], dtype=float)
        emissions = tuple(
            GaussianEmission(np.asarray(e["mean"], dtype=float),
                             np.asarray(e["covariance"], dtype=float))
            for e in doc["emissions"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed model document: {exc}") from None
    with np.errstate(divide="ignore"):
        model = LrHmmModel(n_states, n_dims, np.log(pi), np.log(a), emissions, band_width)
    problems = validate_model(model)
    if problems:
        raise ModelError("invalid model: " + "; ".join(problems))
    return model


def save_model(model: LrHmmModel, path) -> None:
    with open(path, "w") as fh:
        fh.write(model_to_json(model))
        fh.write("\n")


def load_model(path) -> LrHmmModel:
    with open(path) as fh:
        return model_from_json(fh.read())
