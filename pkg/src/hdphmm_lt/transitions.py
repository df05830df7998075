"""Rescaled-HDP transition block under the weak-limit truncation.

Rates ``pi[j, j']`` are unnormalised Gamma variables; the transition matrix
is ``pi * phi`` row-normalised. Conditional conjugacy comes from the jump
process augmentation: total holding times ``u``, failed jump counts ``Q``,
table counts ``M`` and the ``(r, w)`` auxiliaries for the top-level
concentration.

The initial-state row ``pi0`` is treated as one more jump-process row with
similarity fixed at one: it has a holding time ``u0`` and table counts
``M0`` so that the first state of every sequence informs ``alpha`` and
``beta`` like any other transition.

Every conditional is split into a ``*_params`` function returning the
distribution's parameters and a ``sample_*`` function that draws from it
and stores the result on the state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ParameterError
from .rand import LogConcaveTarget, ars_sample, crp_table_counts, dirichlet_draw, gamma_draw


@dataclass
class HdpHyper:
    """Concentrations (current values) and their Gamma(shape, rate) priors.

    For sticky models the Gamma prior applies to ``alpha + kappa`` and
    ``rho = kappa / (alpha + kappa)`` is Uniform(0, 1).
    """

    alpha: float = 1.0
    gamma_conc: float = 1.0
    a_alpha: float = 0.1
    b_alpha: float = 0.1
    a_gamma: float = 0.1
    b_gamma: float = 0.1
    kappa: float = 0.0
    sticky: bool = False
    J: int = 20

    def __post_init__(self):
        for name in ("alpha", "gamma_conc", "a_alpha", "b_alpha", "a_gamma", "b_gamma"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        if self.kappa < 0:
            raise ParameterError("kappa must be non-negative")
        if self.J < 2:
            raise ParameterError("truncation J must be at least 2")

    @property
    def rho(self) -> float:
        return self.kappa / (self.alpha + self.kappa)


@dataclass
class TransitionState:
    beta: np.ndarray
    pi: np.ndarray
    pi0: np.ndarray
    u: np.ndarray
    Q: np.ndarray
    M: np.ndarray
    r: np.ndarray
    N: np.ndarray
    N0: np.ndarray
    u0: float = 0.0
    M0: np.ndarray = None
    sticky_m: np.ndarray = None
    w: float | None = None

    def __post_init__(self):
        J = self.beta.shape[0]
        if self.M0 is None:
            self.M0 = np.zeros(J, dtype=np.int64)
        if self.sticky_m is None:
            self.sticky_m = np.zeros(J, dtype=np.int64)

    @property
    def J(self) -> int:
        return self.beta.shape[0]

    @classmethod
    def empty(cls, J: int) -> "TransitionState":
        z = np.zeros((J, J), dtype=np.int64)
        return cls(
            beta=np.full(J, 1.0 / J),
            pi=np.ones((J, J)),
            pi0=np.ones(J),
            u=np.zeros(J),
            Q=z.copy(),
            M=z.copy(),
            r=np.zeros(J, dtype=np.int64),
            N=z.copy(),
            N0=np.zeros(J, dtype=np.int64),
        )


def row_totals(pi: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """T_j: total rate of successful jumps out of each state."""
    return (pi * phi).sum(axis=1)


# -- holding times and failed jumps ------------------------------------------

MAX_POISSON_RATE = 1e12


def u_posterior_params(state: TransitionState, phi: np.ndarray):
    """Shape ``n_j.`` and rate ``T_j`` of each total holding time."""
    return state.N.sum(axis=1), row_totals(state.pi, phi)


def sample_u(state: TransitionState, phi: np.ndarray, rng) -> np.ndarray:
    """Resample holding times; unvisited states get exactly zero.

    Also refreshes ``u0``, the initial row's holding time, from
    Gamma(#sequences, sum(pi0)).
    """
    shape, rate = u_posterior_params(state, phi)
    u = np.zeros(state.J)
    busy = shape > 0
    if busy.any():
        u[busy] = gamma_draw(shape[busy].astype(float), rate[busy], rng)
    state.u = u
    n_seq = int(state.N0.sum())
    state.u0 = gamma_draw(float(n_seq), float(state.pi0.sum()), rng) if n_seq else 0.0
    return u


def q_rates(state: TransitionState, phi: np.ndarray) -> np.ndarray:
    return state.u[:, None] * state.pi * (1.0 - phi)


def sample_q(state: TransitionState, phi: np.ndarray, rng) -> np.ndarray:
    """Failed jump attempts; zero wherever phi is exactly one."""
    lam = np.maximum(q_rates(state, phi), 0.0)
    if not np.all(lam < MAX_POISSON_RATE):
        raise NumericError("failed-jump rate is not finite or too large to sample")
    state.Q = rng.poisson(lam).astype(np.int64)
    return state.Q


# -- rates ---------------------------------------------------------------------


def pi_posterior_params(state: TransitionState, hyper: HdpHyper):
    """Gamma(shape, rate) of each rate ``pi[j, j']`` given n, q, u."""
    J = state.J
    shape = hyper.alpha * state.beta[None, :] + state.N + state.Q
    if hyper.kappa:
        shape = shape + hyper.kappa * np.eye(J)
    rate = np.broadcast_to((1.0 + state.u)[:, None], (J, J))
    return shape, rate


def sample_pi(state: TransitionState, hyper: HdpHyper, rng) -> np.ndarray:
    shape, rate = pi_posterior_params(state, hyper)
    state.pi = gamma_draw(shape, rate, rng)
    return state.pi


def pi0_posterior_params(state: TransitionState, hyper: HdpHyper):
    shape = hyper.alpha * state.beta + state.N0
    return shape, np.full(state.J, 1.0 + state.u0)


def sample_pi0(state: TransitionState, hyper: HdpHyper, rng) -> np.ndarray:
    shape, rate = pi0_posterior_params(state, hyper)
    state.pi0 = gamma_draw(shape, rate, rng)
    return state.pi0


# -- table counts ----------------------------------------------------------------


def table_customers(state: TransitionState) -> np.ndarray:
    """Customers seated in restaurant (j, j'): successful plus failed jumps."""
    return state.N + state.Q


def m_masses(state: TransitionState, hyper: HdpHyper) -> np.ndarray:
    masses = hyper.alpha * np.broadcast_to(state.beta, (state.J, state.J))
    if hyper.kappa:
        masses = masses + hyper.kappa * np.eye(state.J)
    return masses


def sample_m(state: TransitionState, hyper: HdpHyper, rng) -> np.ndarray:
    """Antoniak table counts by CRP simulation, then the sticky split.

    Each diagonal table is independently "sticky" with probability
    ``kappa / (alpha * beta_j + kappa)``; ``sticky_m`` records how many.
    """
    state.M = crp_table_counts(table_customers(state), m_masses(state, hyper), rng)
    state.M0 = crp_table_counts(state.N0, hyper.alpha * state.beta, rng)
    if hyper.kappa:
        diag = np.diag(state.M)
        p = hyper.kappa / (hyper.alpha * state.beta + hyper.kappa)
        state.sticky_m = rng.binomial(diag, p).astype(np.int64)
    else:
        state.sticky_m = np.zeros(state.J, dtype=np.int64)
    return state.M


def regular_column_counts(state: TransitionState) -> np.ndarray:
    """m_{.j'}: tables serving dish j' from the top level, initial row included."""
    return state.M.sum(axis=0) - state.sticky_m + state.M0


# -- top-level weights and concentrations ------------------------------------------


def beta_posterior_params(state: TransitionState, hyper: HdpHyper) -> np.ndarray:
    return hyper.gamma_conc / state.J + regular_column_counts(state)


def sample_beta(state: TransitionState, hyper: HdpHyper, rng) -> np.ndarray:
    state.beta = dirichlet_draw(beta_posterior_params(state, hyper), rng)
    return state.beta


def log_holding_sum(state: TransitionState) -> tuple[float, float]:
    """(sum_j log(1 + u_j), log(1 + u0))."""
    return float(np.log1p(state.u).sum()), float(math.log1p(state.u0))


def alpha_posterior_params(state: TransitionState, hyper: HdpHyper):
    """Gamma(shape, rate) for alpha in the non-sticky model."""
    rows, init = log_holding_sum(state)
    m = int(regular_column_counts(state).sum())
    return hyper.a_alpha + m, hyper.b_alpha + rows + init


def total_concentration_params(state: TransitionState, hyper: HdpHyper, rho: float):
    """Gamma(shape, rate) for s = alpha + kappa given rho (sticky model)."""
    rows, init = log_holding_sum(state)
    m = int(regular_column_counts(state).sum()) + int(state.sticky_m.sum())
    return hyper.a_alpha + m, hyper.b_alpha + rows + (1.0 - rho) * init


def rho_log_density(state: TransitionState, s: float):
    """Log density (up to a constant) of rho given s, with its gradient.

    ``rho^#sticky (1 - rho)^#regular exp(s * rho * log(1 + u0))`` on (0, 1).
    """
    k = float(state.sticky_m.sum())
    m = float(regular_column_counts(state).sum())
    c = s * math.log1p(state.u0)

    def logf(x):
        return (k * math.log(x) if k else 0.0) + (m * math.log1p(-x) if m else 0.0) + c * x

    def dlogf(x):
        return k / x - m / (1.0 - x) + c

    return logf, dlogf


def sample_alpha(state: TransitionState, hyper: HdpHyper, rng) -> float:
    """Resample alpha (and kappa for sticky models) and store them on ``hyper``."""
    if not hyper.sticky:
        shape, rate = alpha_posterior_params(state, hyper)
        hyper.alpha = gamma_draw(shape, rate, rng)
        return hyper.alpha
    return sticky_rho_update(state, hyper, rng)[0]


def sticky_rho_update(state: TransitionState, hyper: HdpHyper, rng):
    """Gibbs pass over (s, rho) with s = alpha + kappa and rho = kappa / s.

    Uses the sticky/regular split of the diagonal tables made in
    :func:`sample_m`. Returns the new ``(alpha, kappa)``.
    """
    shape, rate = total_concentration_params(state, hyper, hyper.rho)
    s = gamma_draw(shape, rate, rng)
    k = int(state.sticky_m.sum())
    m = int(regular_column_counts(state).sum())
    if state.u0 == 0.0:
        rho = rng.beta(1.0 + k, 1.0 + m)
    else:
        logf, dlogf = rho_log_density(state, s)
        rho = ars_sample(LogConcaveTarget(logf, dlogf, lower=0.0, upper=1.0, start=0.5), rng)
    rho = min(max(rho, 1e-12), 1.0 - 1e-12)
    hyper.alpha = max((1.0 - rho) * s, 1e-300)
    hyper.kappa = rho * s
    return hyper.alpha, hyper.kappa


def sample_r_w(state: TransitionState, hyper: HdpHyper, rng):
    """Auxiliaries for gamma: r_j' ~ CRP(m_.j', gamma/J), w ~ Beta(gamma, m..).

    ``w`` is left as ``None`` when there are no tables (Beta(gamma, 0) is improper).
    """
    cols = regular_column_counts(state)
    state.r = crp_table_counts(cols, hyper.gamma_conc / state.J, rng)
    total = int(cols.sum())
    state.w = float(rng.beta(hyper.gamma_conc, total)) if total > 0 else None
    if state.w is not None:
        state.w = min(max(state.w, 1e-300), 1.0 - 1e-16)
    return state.r, state.w


def gamma_posterior_params(state: TransitionState, hyper: HdpHyper):
    if state.w is None:
        return hyper.a_gamma, hyper.b_gamma
    return hyper.a_gamma + int(state.r.sum()), hyper.b_gamma - math.log(state.w)


def sample_gamma_conc(state: TransitionState, hyper: HdpHyper, rng) -> float:
    shape, rate = gamma_posterior_params(state, hyper)
    hyper.gamma_conc = gamma_draw(shape, rate, rng)
    return hyper.gamma_conc
