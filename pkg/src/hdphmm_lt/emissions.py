"""Emission families: linear-Gaussian over binary state vectors, and categorical.

Observation arrays passed here are the concatenation of all sequences in a
batch, with ``z`` concatenated the same way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericError, ParameterError
from .rand import dirichlet_draw, gamma_draw
from .similarity import BinaryStateMatrix

LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class LinearGaussianEmission:
    """y_t ~ N(W^T (1, eta_{z_t}), diag(sigma2)); row 0 of W is the bias."""

    W: np.ndarray
    sigma2: np.ndarray
    a_sigma: float = 0.1
    b_sigma: float = 0.1
    w_fixed: bool = True
    w_prior_precision: float = 1.0

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=float)
        self.sigma2 = np.asarray(self.sigma2, dtype=float)
        if np.any(~(self.sigma2 > 0)):
            raise ParameterError("sigma2 must be positive")
        if self.W.shape[1] != self.sigma2.shape[0]:
            raise ParameterError("W has a column per channel; sigma2 must match")

    @property
    def K(self) -> int:
        return self.W.shape[1]

    @property
    def D(self) -> int:
        return self.W.shape[0] - 1

    def means(self, eta) -> np.ndarray:
        """Per-state mean vectors, shape (J, K)."""
        eta = np.asarray(eta, dtype=float)
        return self.W[0] + eta @ self.W[1:]


@dataclass
class CategoricalEmission:
    theta: np.ndarray
    a0: float = 0.5

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        if not self.a0 > 0:
            raise ParameterError("a0 must be positive")
        if not np.allclose(self.theta.sum(axis=1), 1.0, atol=1e-9):
            raise ParameterError("rows of theta must sum to one")

    @property
    def V(self) -> int:
        return self.theta.shape[1]


def loglik_table(emission, states, observations) -> np.ndarray:
    """T x J table of log f(y_t | z_t = j)."""
    if isinstance(emission, CategoricalEmission):
        y = np.asarray(observations)
        if y.ndim != 1 or not np.issubdtype(y.dtype, np.integer):
            raise InputError("categorical observations must be a 1-D integer array")
        if y.size and (y.min() < 0 or y.max() >= emission.V):
            raise InputError(f"symbol outside vocabulary of size {emission.V}")
        with np.errstate(divide="ignore"):
            return np.log(emission.theta[:, y].T)
    Y = np.asarray(observations, dtype=float)
    if Y.ndim != 2 or Y.shape[1] != emission.K:
        raise InputError(f"expected a T x {emission.K} observation matrix, got shape {Y.shape}")
    eta = states.eta if isinstance(states, BinaryStateMatrix) else states
    mean = emission.means(eta)
    prec = 1.0 / emission.sigma2
    # expand the quadratic to avoid a T x J x K temporary
    quad = ((Y * Y) @ prec)[:, None] - 2.0 * Y @ (mean * prec).T + ((mean * mean) @ prec)[None, :]
    const = -0.5 * (emission.K * LOG_2PI + np.log(emission.sigma2).sum())
    return const - 0.5 * quad


def emission_log_ratio_fn(emission: LinearGaussianEmission, states: BinaryStateMatrix, Y, z):
    """Callback (j, d) -> sum_{t: z_t = j} log f(y_t | eta_jd = 1) / f(y_t | eta_jd = 0).

    Evaluates the two Gaussian log densities directly through per-state
    sufficient statistics; reads ``states.eta`` at call time.
    """
    J = states.eta.shape[0]
    counts = np.bincount(z, minlength=J).astype(float)
    sums = np.zeros((J, emission.K))
    np.add.at(sums, z, Y)
    prec = 1.0 / emission.sigma2

    def ratio(j, d):
        if counts[j] == 0:
            return 0.0
        eta_j = states.eta[j].astype(float)
        on, off = eta_j.copy(), eta_j.copy()
        on[d], off[d] = 1.0, 0.0
        a = emission.W[0] + on @ emission.W[1:]
        b = emission.W[0] + off @ emission.W[1:]
        # sum_t [(y - b)^2 - (y - a)^2] / (2 sigma2) per channel
        return float((((a - b) * (2.0 * sums[j] - counts[j] * (a + b))) * prec).sum() / 2.0)

    return ratio


def sample_sigma2(emission: LinearGaussianEmission, residuals, rng) -> np.ndarray:
    """sigma2_k ~ InverseGamma(a + T/2, b + sum_t r_tk^2 / 2)."""
    R = np.asarray(residuals, dtype=float).reshape(-1, emission.K)
    shape = emission.a_sigma + 0.5 * R.shape[0]
    rate = emission.b_sigma + 0.5 * (R * R).sum(axis=0)
    emission.sigma2 = 1.0 / gamma_draw(np.full(emission.K, shape), rate, rng)
    return emission.sigma2


def design_matrix(eta, z) -> np.ndarray:
    """Rows (1, eta_{z_t}); shape T x (D + 1)."""
    X = np.asarray(eta, dtype=float)[z]
    return np.hstack([np.ones((X.shape[0], 1)), X])


def w_posterior_params(emission: LinearGaussianEmission, X, Y, prior_precision: float):
    """Per-channel Gaussian posterior (means, precisions) of the columns of W."""
    XtX = X.T @ X
    XtY = X.T @ Y
    P = X.shape[1]
    means, precs = [], []
    for k in range(emission.K):
        prec = prior_precision * np.eye(P) + XtX / emission.sigma2[k]
        try:
            mean = np.linalg.solve(prec, XtY[:, k] / emission.sigma2[k])
        except np.linalg.LinAlgError as exc:
            raise NumericError("singular posterior precision for W") from exc
        means.append(mean)
        precs.append(prec)
    return np.array(means).T, precs


def sample_W(emission: LinearGaussianEmission, states, observations, z, rng,
             prior_precision: float | None = None) -> np.ndarray:
    """Bayesian linear regression update of W; no-op when ``w_fixed``."""
    if emission.w_fixed:
        return emission.W
    tau = emission.w_prior_precision if prior_precision is None else prior_precision
    eta = states.eta if isinstance(states, BinaryStateMatrix) else states
    X = design_matrix(eta, z)
    means, precs = w_posterior_params(emission, X, np.asarray(observations, dtype=float), tau)
    W = np.empty_like(emission.W)
    for k, prec in enumerate(precs):
        try:
            L = np.linalg.cholesky(prec)
        except np.linalg.LinAlgError as exc:
            raise NumericError("posterior precision for W is not positive definite") from exc
        W[:, k] = means[:, k] + np.linalg.solve(L.T, rng.standard_normal(prec.shape[0]))
    emission.W = W
    return W


def sample_mu(states: BinaryStateMatrix, rng) -> np.ndarray:
    """mu_d ~ Beta(a + sum_j eta_jd, b + J - sum_j eta_jd)."""
    on = states.eta.sum(axis=0).astype(float)
    J = states.eta.shape[0]
    mu = rng.beta(states.a_mu + on, states.b_mu + J - on)
    states.mu = np.clip(mu, 1e-12, 1.0 - 1e-12)
    return states.mu


def symbol_counts(z, y, J: int, V: int) -> np.ndarray:
    counts = np.zeros((J, V), dtype=np.int64)
    np.add.at(counts, (np.asarray(z), np.asarray(y)), 1)
    return counts


def sample_theta_categorical(emission: CategoricalEmission, z, observations, rng) -> np.ndarray:
    """theta_j ~ Dirichlet(a0 + count(j, v))."""
    J, V = emission.theta.shape
    y = np.asarray(observations)
    if y.size and (y.min() < 0 or y.max() >= V):
        raise InputError(f"symbol outside vocabulary of size {V}")
    counts = symbol_counts(z, y, J, V)
    emission.theta = np.vstack([dirichlet_draw(emission.a0 + counts[j], rng) for j in range(J)])
    return emission.theta
