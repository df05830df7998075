"""Hidden state sequences: forward filtering, backward sampling, marginal likelihood."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ParameterError


@dataclass
class NormalizedTransitions:
    P: np.ndarray
    p0: np.ndarray
    T_row: np.ndarray


def normalize_transitions(pi, pi0, phi) -> NormalizedTransitions:
    """P[j, j'] = pi phi / T_j with T_j = sum_k pi[j, k] phi[j, k]; p0 = pi0 / sum(pi0)."""
    scaled = np.asarray(pi, dtype=float) * np.asarray(phi, dtype=float)
    T_row = scaled.sum(axis=1)
    if np.any(~(T_row > 0)) or not pi0.sum() > 0:
        raise NumericError("transition row with zero total rate")
    return NormalizedTransitions(scaled / T_row[:, None], pi0 / pi0.sum(), T_row)


def _scaled_likelihoods(loglik):
    loglik = np.asarray(loglik, dtype=float)
    shift = loglik.max(axis=1)
    dead = ~np.isfinite(shift)
    shift = np.where(dead, 0.0, shift)
    return np.exp(loglik - shift[:, None]), shift, dead


def forward_filter(trans: NormalizedTransitions, loglik):
    """Normalised forward messages and the log marginal likelihood.

    Returns ``(alpha, logZ)`` where ``alpha[t]`` is p(z_t | y_1..t). ``logZ``
    is ``-inf`` when the observations are impossible under the model.
    """
    lik, shift, dead = _scaled_likelihoods(loglik)
    T, J = lik.shape
    alpha = np.empty((T, J))
    if dead.any():
        return alpha, -math.inf
    P = trans.P
    a = trans.p0 * lik[0]
    logZ = 0.0
    for t in range(T):
        if t:
            a = (a @ P) * lik[t]
        c = a.sum()
        if not c > 0:
            return alpha, -math.inf
        a = a / c
        alpha[t] = a
        logZ += math.log(c)
    return alpha, logZ + float(shift.sum())


def backward_sample(alpha, P, rng) -> np.ndarray:
    """Draw z_T from alpha_T, then z_t with probability proportional to alpha_t * P[:, z_{t+1}]."""
    T, J = alpha.shape
    u = rng.uniform(size=T)
    z = np.empty(T, dtype=np.int64)
    c = np.cumsum(alpha[-1])
    z[-1] = min(int(np.searchsorted(c, u[-1] * c[-1], side="right")), J - 1)
    for t in range(T - 2, -1, -1):
        c = np.cumsum(alpha[t] * P[:, z[t + 1]])
        z[t] = min(int(np.searchsorted(c, u[t] * c[-1], side="right")), J - 1)
    return z


def ffbs_sample_z(trans: NormalizedTransitions, loglik, rng) -> np.ndarray:
    """Exact joint draw of one state path; O(T J^2)."""
    alpha, logZ = forward_filter(trans, loglik)
    if not np.isfinite(logZ):
        raise NumericError("forward messages vanished: observations impossible under current parameters")
    return backward_sample(alpha, trans.P, rng)


def count_transitions(z_seqs, J: int):
    """Transition counts N (within sequences only) and initial-state counts N0."""
    N = np.zeros((J, J), dtype=np.int64)
    N0 = np.zeros(J, dtype=np.int64)
    for z in z_seqs:
        z = np.asarray(z)
        if z.size == 0:
            continue
        if z.min() < 0 or z.max() >= J:
            raise ParameterError("state index outside 0..J-1")
        N0[z[0]] += 1
        np.add.at(N, (z[:-1], z[1:]), 1)
    return N, N0


def marginal_loglik(trans: NormalizedTransitions, logliks):
    """log p(Y | parameters) with paths integrated out, and surprisal.

    ``logliks`` is one T x J table or a list of them (independent sequences).
    Surprisal is the negative log likelihood per observation, in nats.
    """
    tables = [logliks] if isinstance(logliks, np.ndarray) and logliks.ndim == 2 else list(logliks)
    total = 0.0
    n = 0
    for table in tables:
        total += forward_filter(trans, table)[1]
        n += len(table)
    return total, (-total / n if n else math.nan)
