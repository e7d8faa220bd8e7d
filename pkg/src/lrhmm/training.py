"""Model initialization and Baum-Welch training.

The model has as many states as the training sequences have time steps, so
the initializer can seed each state's emission from the cross-sequence
statistics of the matching step.  All recursions run in log space over the
transition band only; expectation quantities are accumulated over sequences
in a canonical order (sorted by ``trial_id``) so that training results do
not depend on how the caller happened to order the input list.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .core import (
    DegenerateStateError,
    ForwardBackwardCache,
    GaussianEmission,
    LrHmmModel,
    ObservationSequence,
    UsageError,
    _EmissionTable,
)

log = logging.getLogger(__name__)

# A state whose total posterior mass falls below this is unusable: its
# emission update would divide by (numerical) zero.
DEGENERATE_MASS = 1e-12

# Absolute floor for the covariance regularization increment.
_COV_EPS_ABS = 1e-9


@dataclass(frozen=True)
class TrainingConfig:
    """Hyperparameters for :func:`baum_welch`.

    ``covariance_floor_eps`` scales the ridge added to every estimated
    covariance: eps = max(covariance_floor_eps * trace(cov) / M, 1e-9).
    """

    max_iterations: int = 100
    loglik_rel_tolerance: float = 1e-6
    covariance_floor_eps: float = 1e-6
    rng_seed: int = 0
    band_width: int = 1

    def __post_init__(self):
        if self.max_iterations < 1:
            raise UsageError("max_iterations must be >= 1")
        if not self.loglik_rel_tolerance > 0:
            raise UsageError("loglik_rel_tolerance must be > 0")
        if not self.covariance_floor_eps > 0:
            raise UsageError("covariance_floor_eps must be > 0")
        if self.band_width < 1:
            raise UsageError("band_width must be >= 1")


@dataclass(frozen=True)
class TrainingTrace:
    """Per-iteration total log-likelihood of the model that entered the
    iteration, plus convergence bookkeeping."""

    log_likelihoods: tuple
    iterations_run: int
    converged: bool


# ---------------------------------------------------------------------------
# banded log-space recursions (leading batch dimensions allowed)
# ---------------------------------------------------------------------------

def _band_diagonals(log_a: np.ndarray, band_width: int) -> list[np.ndarray]:
    return [np.ascontiguousarray(np.diagonal(log_a, offset=d))
            for d in range(band_width + 1)]


def _forward(log_b: np.ndarray, log_pi: np.ndarray, diags: list[np.ndarray]) -> np.ndarray:
    """Forward log variables; ``log_b`` is (..., T, N), result matches."""
    n_steps = log_b.shape[-2]
    out = np.empty_like(log_b)
    out[..., 0, :] = log_pi + log_b[..., 0, :]
    for t in range(1, n_steps):
        prev = out[..., t - 1, :]
        acc = prev + diags[0]
        for d in range(1, len(diags)):
            if diags[d].size == 0:
                continue
            acc[..., d:] = np.logaddexp(acc[..., d:], prev[..., :-d] + diags[d])
        out[..., t, :] = acc + log_b[..., t, :]
    return out


def _backward(log_b: np.ndarray, diags: list[np.ndarray]) -> np.ndarray:
    n_steps = log_b.shape[-2]
    out = np.empty_like(log_b)
    out[..., n_steps - 1, :] = 0.0
    for t in range(n_steps - 2, -1, -1):
        nxt = log_b[..., t + 1, :] + out[..., t + 1, :]
        acc = nxt + diags[0]
        for d in range(1, len(diags)):
            if diags[d].size == 0:
                continue
            acc[..., :-d] = np.logaddexp(acc[..., :-d], nxt[..., d:] + diags[d])
        out[..., t, :] = acc
    return out


def _state_posteriors(log_alpha: np.ndarray, log_beta: np.ndarray) -> np.ndarray:
    """Posterior state probabilities, exact 0.0 where a state is unreachable."""
    log_ab = log_alpha + log_beta
    norm = logsumexp(log_ab, axis=-1, keepdims=True)
    return np.exp(log_ab - norm)


def _xi_prob_sums(log_alpha, log_beta, log_b, diags, log_lik):
    """Pairwise posteriors summed over sequences and t = 1..T-1, one vector
    per band diagonal.  Exponents are bounded above by ~0, so this is safe
    to accumulate in probability space."""
    sums = []
    ll = np.asarray(log_lik)[..., None, None]
    for d, diag in enumerate(diags):
        if diag.size == 0:
            sums.append(np.zeros(0))
            continue
        hi = log_alpha.shape[-1] - d
        expo = (log_alpha[..., :-1, :hi] + diag
                + log_b[..., 1:, d:] + log_beta[..., 1:, d:] - ll)
        term = np.exp(expo)
        sums.append(term.sum(axis=tuple(range(term.ndim - 1))))
    return sums


def forward_backward(seq: ObservationSequence, model: LrHmmModel) -> ForwardBackwardCache:
    """Run the forward-backward recursions for one sequence.

    The sequence may be shorter than the model horizon (truncated history);
    it must not be longer.  Returns the log forward/backward variables, the
    state posteriors, the (N, N) log sum of pairwise transition posteriors
    over t = 1..T-1, and the forward log-likelihood (summed over all states
    at the final step).
    """
    _check_scorable(seq, model)
    diags = _band_diagonals(model.log_A, model.band_width)
    log_b = model._table.log_b(seq.values)                  # (T, N)
    log_alpha = _forward(log_b, model.log_pi, diags)
    log_beta = _backward(log_b, diags)
    ll = float(logsumexp(log_alpha[-1, :]))
    gamma = _state_posteriors(log_alpha, log_beta)

    n = model.n_states
    log_xi = np.full((n, n), -np.inf)
    if seq.n_steps > 1:
        for d, diag in enumerate(diags):
            if diag.size == 0:
                continue
            hi = n - d
            vals = (log_alpha[:-1, :hi] + diag
                    + log_b[1:, d:] + log_beta[1:, d:] - ll)     # (T-1, N-d)
            idx = np.arange(hi)
            log_xi[idx, idx + d] = logsumexp(vals, axis=0)
    return ForwardBackwardCache(log_alpha, log_beta, gamma, log_xi, ll)


def _check_scorable(seq: ObservationSequence, model: LrHmmModel) -> None:
    if not isinstance(seq, ObservationSequence):
        raise UsageError("expected an ObservationSequence")
    if seq.n_dims != model.n_dims:
        raise UsageError(
            f"sequence has {seq.n_dims} channels, model expects {model.n_dims}")
    if seq.n_steps > model.n_states:
        raise UsageError(
            f"history of {seq.n_steps} steps exceeds the model horizon of "
            f"{model.n_states} states")


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------

def _prepare_batch(sequences) -> tuple[list[ObservationSequence], np.ndarray]:
    seqs = list(sequences)
    if not seqs:
        raise UsageError("at least one training sequence is required")
    for s in seqs:
        if not isinstance(s, ObservationSequence):
            raise UsageError("training data must be ObservationSequence instances")
    n_steps = seqs[0].n_steps
    n_dims = seqs[0].n_dims
    for s in seqs[1:]:
        if s.n_steps != n_steps or s.n_dims != n_dims:
            raise UsageError(
                f"all sequences must share shape ({n_steps}, {n_dims}); "
                f"trial {s.trial_id} has ({s.n_steps}, {s.n_dims})")
    # Canonical accumulation order: sorted by trial id (stable on ties).
    seqs.sort(key=lambda s: s.trial_id)
    return seqs, np.stack([s.values for s in seqs])


def _floor_covariances(covs: np.ndarray, eps_rel: float) -> np.ndarray:
    """Add eps * I per state, eps = max(eps_rel * trace / M, 1e-9)."""
    n_dims = covs.shape[-1]
    traces = np.trace(covs, axis1=-2, axis2=-1)
    eps = np.maximum(eps_rel * traces / n_dims, _COV_EPS_ABS)
    out = covs.copy()
    idx = np.arange(n_dims)
    out[..., idx, idx] += eps[..., None]
    return out


def _banded_uniform_log_a(n_states: int, band_width: int) -> np.ndarray:
    log_a = np.full((n_states, n_states), -np.inf)
    for i in range(n_states):
        hi = min(i + band_width, n_states - 1)
        width = hi - i + 1
        log_a[i, i:hi + 1] = -np.log(width)
    return log_a


def initialize_model(sequences, config: TrainingConfig) -> LrHmmModel:
    """Build the canonical starting model for a set of sequences.

    One state per time step.  The start distribution is a point mass on the
    first state; transition rows are uniform over the band.  State ``j``'s
    emission mean is the cross-sequence mean of step ``j``, perturbed by
    seeded noise of scale 0.01x the per-channel standard deviation (pooled
    over sequences and steps); its covariance is the diagonal per-channel
    variance of step ``j``, floored.
    """
    seqs, x = _prepare_batch(sequences)
    _, n_steps, n_dims = x.shape
    n_states = n_steps

    step_means = x.mean(axis=0)                             # (T, M)
    step_vars = x.var(axis=0)                               # (T, M)
    pooled_std = x.std(axis=(0, 1))                         # (M,)
    rng = np.random.default_rng(config.rng_seed)
    means = step_means + 0.01 * pooled_std * rng.standard_normal((n_states, n_dims))

    covs = np.zeros((n_states, n_dims, n_dims))
    idx = np.arange(n_dims)
    covs[:, idx, idx] = step_vars
    covs = _floor_covariances(covs, config.covariance_floor_eps)

    log_pi = np.full(n_states, -np.inf)
    log_pi[0] = 0.0
    log_a = _banded_uniform_log_a(n_states, config.band_width)
    emissions = tuple(GaussianEmission(means[j], covs[j]) for j in range(n_states))
    return LrHmmModel(n_states, n_dims, log_pi, log_a, emissions, config.band_width)


# ---------------------------------------------------------------------------
# Baum-Welch
# ---------------------------------------------------------------------------

def _m_step(x, gamma, xi_sums, log_a_old, eps_rel):
    """Re-estimate (log_pi, log_a, means, covs) from batched posteriors."""
    n_seq, n_steps, n_dims = x.shape
    n_states = gamma.shape[-1]

    pi = gamma[:, 0, :].mean(axis=0)
    pi = pi / pi.sum()

    a = np.zeros((n_states, n_states))
    for d, numer in enumerate(xi_sums):
        if numer.size == 0:
            continue
        idx = np.arange(n_states - d)
        a[idx, idx + d] = numer
    row_sums = a.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        old_rows = np.exp(log_a_old)
    for i in range(n_states):
        if row_sums[i] > 0:
            a[i] /= row_sums[i]
        else:
            # No transition evidence for this row (e.g. the absorbing final
            # state, or T == 1): keep the previous distribution.
            a[i] = old_rows[i]

    mass = gamma.sum(axis=(0, 1))                           # (N,)
    weakest = int(np.argmin(mass))
    if mass[weakest] < DEGENERATE_MASS:
        raise DegenerateStateError(
            f"state {weakest} has total posterior mass {mass[weakest]:.3e}")

    means = np.einsum("ktn,ktm->nm", gamma, x) / mass[:, None]
    diffs = x[:, :, None, :] - means[None, None, :, :]      # (K, T, N, M)
    covs = np.einsum("ktn,ktnm,ktnp->nmp", gamma, diffs, diffs,
                     optimize=True) / mass[:, None, None]
    covs = 0.5 * (covs + covs.transpose(0, 2, 1))
    covs = _floor_covariances(covs, eps_rel)

    with np.errstate(divide="ignore"):
        return np.log(pi), np.log(a), means, covs


def _relative_change(current: float, previous: float) -> float:
    return abs(current - previous) / max(1.0, abs(current), abs(previous))


def baum_welch(sequences, config: TrainingConfig,
               initial_model: LrHmmModel | None = None
               ) -> tuple[LrHmmModel, TrainingTrace]:
    """Fit a left-right HMM to ``sequences`` by expectation-maximization.

    Starts from :func:`initialize_model` unless ``initial_model`` is given.
    Each iteration records the total log-likelihood of the model entering
    it; the loop stops when the relative change drops below
    ``config.loglik_rel_tolerance`` or after ``config.max_iterations``
    iterations.  Raises :class:`DegenerateStateError` if a state loses all
    posterior mass.

    Returns the fitted model and a :class:`TrainingTrace`.  The trace's
    log-likelihood list is non-decreasing (up to tiny rounding); permuting
    the input sequences does not change the result because accumulation
    order is fixed by ``trial_id``.
    """
    seqs, x = _prepare_batch(sequences)
    n_seq, n_steps, n_dims = x.shape

    if initial_model is None:
        model0 = initialize_model(seqs, config)
    else:
        model0 = initial_model
        if model0.n_states != n_steps:
            raise UsageError(
                f"initial model has {model0.n_states} states, sequences have "
                f"{n_steps} steps")
        if model0.n_dims != n_dims:
            raise UsageError("initial model dimensionality does not match data")

    band_width = model0.band_width
    log_pi = model0.log_pi.copy()
    log_a = model0.log_A.copy()
    means = np.stack([e.mean for e in model0.emissions])
    covs = np.stack([e.covariance for e in model0.emissions])

    trace: list[float] = []
    converged = False
    previous = np.nan
    for _ in range(config.max_iterations):
        table = _EmissionTable(means, np.linalg.cholesky(covs))
        diags = _band_diagonals(log_a, band_width)
        log_b = table.log_b(x)                              # (K, T, N)
        log_alpha = _forward(log_b, log_pi, diags)
        log_lik = logsumexp(log_alpha[:, -1, :], axis=-1)   # (K,)
        total = float(log_lik.sum())
        trace.append(total)
        if len(trace) > 1 and _relative_change(total, previous) < config.loglik_rel_tolerance:
            converged = True
            break
        previous = total

        log_beta = _backward(log_b, diags)
        gamma = _state_posteriors(log_alpha, log_beta)
        xi_sums = _xi_prob_sums(log_alpha, log_beta, log_b, diags, log_lik)
        log_pi, log_a, means, covs = _m_step(x, gamma, xi_sums, log_a, config.covariance_floor_eps)

    emissions = tuple(GaussianEmission(means[j], covs[j]) for j in range(n_steps))
    model = LrHmmModel(n_steps, n_dims, log_pi, log_a, emissions, band_width)
    return model, TrainingTrace(tuple(trace), len(trace), converged)
