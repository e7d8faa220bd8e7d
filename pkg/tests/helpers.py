"""Shared brute-force oracles for the test suite.

Everything here is deliberately naive: densities through explicit inverse
and determinant, likelihoods and decodings by enumerating every state path.
The naive versions are only usable for tiny models, which is exactly the
regime where the real implementations are checked against them.
"""

import itertools
import math

import numpy as np

from lrhmm import GaussianEmission, LrHmmModel, ObservationSequence


def oracle_log_density(x, mean, cov):
    """Multivariate normal log density via inv + slogdet (no Cholesky)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    diff = x - mean
    quad = float(diff @ np.linalg.inv(cov) @ diff)
    sign, logdet = np.linalg.slogdet(cov)
    assert sign > 0
    return -0.5 * (x.size * math.log(2.0 * math.pi) + logdet + quad)


def random_spd(rng, n_dims):
    a = rng.normal(0.0, 1.0, (n_dims, n_dims))
    return a @ a.T + (0.3 + 0.1 * n_dims) * np.eye(n_dims)


def random_banded_model(rng, n_states, n_dims, band_width=1, canonical_pi=True):
    """A valid left-right model with random in-band rows and random Gaussians."""
    log_a = np.full((n_states, n_states), -np.inf)
    for i in range(n_states - 1):
        hi = min(i + band_width, n_states - 1)
        row = rng.dirichlet(np.full(hi - i + 1, 2.0))
        log_a[i, i:hi + 1] = np.log(row)
    log_a[n_states - 1, n_states - 1] = 0.0

    log_pi = np.full(n_states, -np.inf)
    if canonical_pi or n_states == 1:
        log_pi[0] = 0.0
    else:
        width = min(band_width + 1, n_states)
        log_pi[:width] = np.log(rng.dirichlet(np.full(width, 2.0)))

    means = rng.normal(0.0, 2.0, (n_states, n_dims))
    emissions = tuple(GaussianEmission(means[j], random_spd(rng, n_dims))
                      for j in range(n_states))
    return LrHmmModel(n_states, n_dims, log_pi, log_a, emissions, band_width)


def path_log_score(values, model, path):
    """Joint log probability of one complete state path and the data."""
    e = model.emissions[path[0]]
    score = float(model.log_pi[path[0]]) + oracle_log_density(
        values[0], e.mean, e.covariance)
    for t in range(1, len(path)):
        e = model.emissions[path[t]]
        score += float(model.log_A[path[t - 1], path[t]])
        score += oracle_log_density(values[t], e.mean, e.covariance)
    return score


def enum_paths(n_states, n_steps):
    return itertools.product(range(n_states), repeat=n_steps)


def enum_log_likelihood(values, model):
    """Total likelihood by summing over every state path."""
    total = -np.inf
    for path in enum_paths(model.n_states, len(values)):
        total = np.logaddexp(total, path_log_score(values, model, path))
    return float(total)


def enum_viterbi(values, model):
    """Best path by enumeration; exact ties break to the path whose
    reversed tuple is smallest (final state first, then predecessors)."""
    best_score = -np.inf
    best_paths = []
    for path in enum_paths(model.n_states, len(values)):
        score = path_log_score(values, model, path)
        if score > best_score:
            best_score = score
            best_paths = [path]
        elif score == best_score:
            best_paths.append(path)
    best = min(best_paths, key=lambda p: tuple(reversed(p)))
    return np.array(best, dtype=int), float(best_score)


def enum_pair_posteriors(values, model):
    """Pairwise transition posteriors summed over t, by enumeration."""
    ll = enum_log_likelihood(values, model)
    xi = np.zeros((model.n_states, model.n_states))
    for path in enum_paths(model.n_states, len(values)):
        weight = math.exp(path_log_score(values, model, path) - ll)
        if weight == 0.0:
            continue
        for t in range(len(path) - 1):
            xi[path[t], path[t + 1]] += weight
    return xi


def sample_sequence(rng, model, n_steps, dt=0.025, **kwargs):
    """Draw one observation sequence from a model's own generative process."""
    pi = np.exp(model.log_pi)
    a = np.exp(model.log_A)
    chols = [np.linalg.cholesky(e.covariance) for e in model.emissions]
    state = int(rng.choice(model.n_states, p=pi))
    rows = []
    for t in range(n_steps):
        if t:
            state = int(rng.choice(model.n_states, p=a[state]))
        e = model.emissions[state]
        rows.append(e.mean + chols[state] @ rng.standard_normal(model.n_dims))
    return ObservationSequence(np.array(rows), dt, **kwargs)
