"""Similarity kernels and the updates for their parameters.

Three kernels are supported:

* ``constant``: phi == 1, the ordinary HDP-HMM;
* ``laplacian_hamming``: phi = exp(-lam * hamming(eta_j, eta_j')) over binary state vectors;
* ``gaussian_euclidean``: phi = exp(-(lam / 2) * |loc_j - loc_j'|^2) over real locations.

The decay rate ``lam`` is drawn exactly by adaptive rejection sampling, binary
states by coordinate-wise Gibbs, and locations by Hamiltonian Monte Carlo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import DivergenceError, IntegrityError, ParameterError
from .rand import LogConcaveTarget, ars_sample, leapfrog

CONSTANT = "constant"
LAPLACIAN_HAMMING = "laplacian_hamming"
GAUSSIAN_EUCLIDEAN = "gaussian_euclidean"
KERNELS = (CONSTANT, LAPLACIAN_HAMMING, GAUSSIAN_EUCLIDEAN)


@dataclass
class KernelSpec:
    variant: str = CONSTANT
    lam: float = 1.0
    b_lambda: float = 1.0
    h_loc: float = 1.0
    hmc_step: float = 0.05
    hmc_leapfrog_steps: int = 20
    sample_lambda: bool = True

    def __post_init__(self):
        if self.variant not in KERNELS:
            raise ParameterError(f"unknown kernel {self.variant!r}; expected one of {KERNELS}")
        if self.lam < 0:
            raise ParameterError("lambda must be non-negative")
        if not (self.b_lambda > 0 and self.h_loc > 0 and self.hmc_step > 0):
            raise ParameterError("b_lambda, h_loc and hmc_step must be positive")

    @property
    def is_constant(self) -> bool:
        return self.variant == CONSTANT


@dataclass
class BinaryStateMatrix:
    """Binary state vectors eta (J x D) with Beta-Bernoulli coordinate priors."""

    eta: np.ndarray
    mu: np.ndarray
    a_mu: float = 1.0
    b_mu: float = 1.0

    def __post_init__(self):
        self.eta = np.asarray(self.eta, dtype=np.int8)
        self.mu = np.asarray(self.mu, dtype=float)
        if not np.isin(self.eta, (0, 1)).all():
            raise ParameterError("eta entries must be 0 or 1")
        if not np.all((self.mu > 0) & (self.mu < 1)):
            raise ParameterError("mu must lie in (0, 1)")


@dataclass
class LocationMatrix:
    loc: np.ndarray

    def __post_init__(self):
        self.loc = np.asarray(self.loc, dtype=float)
        if not np.all(np.isfinite(self.loc)):
            raise ParameterError("locations must be finite")


def hamming_distances(eta: np.ndarray) -> np.ndarray:
    eta = np.asarray(eta)
    return (eta[:, None, :] != eta[None, :, :]).sum(axis=2).astype(float)


def sq_euclidean_distances(loc: np.ndarray) -> np.ndarray:
    diff = loc[:, None, :] - loc[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def kernel_distances(kernel: KernelSpec, states) -> np.ndarray:
    """The matrix d with phi = exp(-lam * d); half squared distance for the Gaussian kernel."""
    if kernel.variant == LAPLACIAN_HAMMING:
        return hamming_distances(states.eta)
    if kernel.variant == GAUSSIAN_EUCLIDEAN:
        return 0.5 * sq_euclidean_distances(states.loc)
    raise ParameterError("the constant kernel has no distances")


def compute_phi(kernel: KernelSpec, states=None, J: int | None = None) -> np.ndarray:
    """Similarity matrix in (0, 1], symmetric with unit diagonal."""
    if kernel.is_constant:
        if J is None:
            J = (states.eta if hasattr(states, "eta") else states.loc).shape[0]
        return np.ones((J, J))
    phi = np.exp(-kernel.lam * kernel_distances(kernel, states))
    np.fill_diagonal(phi, 1.0)
    return phi


# -- decay rate --------------------------------------------------------------------


def lambda_log_density(b_lambda: float, distances, N, Q):
    """Log posterior density of lam (up to a constant) and its derivative.

    exp{-(b + sum d n) lam} * prod_{d > 0} (1 - exp(-lam d))^q
    """
    d = np.asarray(distances, dtype=float)
    rate = b_lambda + float((d * N).sum())
    mask = (d > 0) & (Q > 0)
    if np.any((d <= 0) & (Q > 0) & ~np.eye(d.shape[0], dtype=bool)):
        raise IntegrityError("failed jumps recorded between states at zero distance")
    dd = d[mask]
    qq = Q[mask].astype(float)

    def logf(lam):
        return -rate * lam + float(qq @ np.log(-np.expm1(-lam * dd)))

    def dlogf(lam):
        with np.errstate(over="ignore"):
            return -rate + float(qq @ (dd / np.expm1(lam * dd)))

    return logf, dlogf


def sample_lambda(kernel: KernelSpec, distances, N, Q, rng) -> float:
    """Exact draw of the kernel decay rate; stores it on ``kernel``."""
    logf, dlogf = lambda_log_density(kernel.b_lambda, distances, N, Q)
    kernel.lam = ars_sample(LogConcaveTarget(logf, dlogf, lower=0.0, start=1.0), rng)
    return kernel.lam


# -- binary state vectors ------------------------------------------------------------


def _log_q_ratio(lam: float, h_rest: np.ndarray) -> np.ndarray:
    """log((1 - phi_rest e^-lam) / (1 - phi_rest)) with phi_rest = exp(-lam h_rest)."""
    with np.errstate(divide="ignore"):
        return np.log(-np.expm1(-lam * (h_rest + 1.0))) - np.log(-np.expm1(-lam * h_rest))


def eta_log_odds(j: int, d: int, eta, mu, N, Q, lam: float, emission_ratio: float = 0.0,
                 hamming=None) -> float:
    """Log odds of eta[j, d] = 1 versus 0 given everything else.

    Sums the prior log odds, the successful-jump term (c1 - c0) * lam, the
    failed-jump term and the caller's emission log ratio. Returns +/-inf when
    one value is impossible (a failure recorded to a state it would coincide with).
    """
    eta = np.asarray(eta)
    L = math.log(mu[d]) - math.log1p(-mu[d]) + emission_ratio
    if lam == 0.0:
        return L
    others = np.arange(eta.shape[0]) != j
    col = eta[others, d]
    n_pair = (N[j, :] + N[:, j])[others]
    c1 = float(n_pair[col == 1].sum())
    c0 = float(n_pair[col == 0].sum())
    L += (c1 - c0) * lam
    q_pair = (Q[j, :] + Q[:, j])[others]
    if q_pair.any():
        H = hamming_distances(eta)[j] if hamming is None else hamming[j]
        h_rest = H[others] - (eta[j, d] != col)
        busy = q_pair > 0
        terms = np.where(col[busy] == 1, -1.0, 1.0) * q_pair[busy] * _log_q_ratio(lam, h_rest[busy])
        if np.isinf(terms).any() and np.isnan(terms.sum()):
            raise IntegrityError(f"both values of eta[{j}, {d}] are impossible")
        L += float(terms.sum())
    return L


def gibbs_update_eta(states: BinaryStateMatrix, N, Q, kernel: KernelSpec, emission_log_ratio, rng):
    """One lexicographic sweep over all (j, d) coordinates, updating ``states.eta`` in place.

    ``emission_log_ratio(j, d)`` must read the current ``states.eta``.
    """
    eta = states.eta
    lam = 0.0 if kernel.is_constant else kernel.lam
    H = hamming_distances(eta)
    J, D = eta.shape
    for j in range(J):
        for d in range(D):
            L = eta_log_odds(j, d, eta, states.mu, N, Q, lam, emission_log_ratio(j, d), H)
            new = int(rng.uniform() < expit(L))
            if new != eta[j, d]:
                eta[j, d] = new
                row = (eta[j] != eta).sum(axis=1)
                H[j, :] = row
                H[:, j] = row
    return eta


# -- locations ---------------------------------------------------------------------


def location_log_posterior(loc, N, Q, lam: float, h_loc: float) -> float:
    """Log prior plus sum_{j != j'} n log phi + q log(1 - phi), Gaussian kernel."""
    sq = sq_euclidean_distances(loc)
    off = ~np.eye(loc.shape[0], dtype=bool)
    lp = -0.5 * h_loc * float((loc * loc).sum())
    lp += float((N[off] * (-0.5 * lam * sq[off])).sum())
    q = Q[off]
    if q.any():
        with np.errstate(divide="ignore"):
            lq = np.log(-np.expm1(-0.5 * lam * sq[off]))
        busy = q > 0
        lp += float((q[busy] * lq[busy]).sum())
    return lp


def location_grad(loc, N, Q, lam: float, h_loc: float) -> np.ndarray:
    """Gradient of :func:`location_log_posterior`, symmetrised over jump direction."""
    sq = sq_euclidean_distances(loc)
    phi = np.exp(-0.5 * lam * sq)
    np.fill_diagonal(phi, 0.0)
    Nsym = (N + N.T).astype(float)
    Qsym = (Q + Q.T).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        odds = np.where(Qsym > 0, phi / -np.expm1(-0.5 * lam * sq), 0.0)
    weight = Nsym - Qsym * odds
    np.fill_diagonal(weight, 0.0)
    # sum_j' w_jj' (l_j - l_j')
    pull = weight.sum(axis=1)[:, None] * loc - weight @ loc
    return -h_loc * loc - lam * pull


def hmc_update_locations(states: LocationMatrix, N, Q, kernel: KernelSpec, rng):
    """One HMC proposal for the whole location matrix. Returns ``(loc, accepted)``."""
    lam, h = kernel.lam, kernel.h_loc
    steps = int(kernel.hmc_leapfrog_steps)
    if steps == 0:
        return states.loc, True
    q0 = states.loc
    p0 = rng.standard_normal(q0.shape)
    lp0 = location_log_posterior(q0, N, Q, lam, h)
    try:
        q1, p1 = leapfrog(q0, p0, lambda x: location_grad(x, N, Q, lam, h), kernel.hmc_step, steps)
    except DivergenceError:
        return states.loc, False
    lp1 = location_log_posterior(q1, N, Q, lam, h)
    log_ratio = (lp1 - 0.5 * float((p1 * p1).sum())) - (lp0 - 0.5 * float((p0 * p0).sum()))
    if not np.isfinite(log_ratio) or math.log(rng.uniform()) >= log_ratio:
        return states.loc, False
    states.loc = q1
    return q1, True
