"""Gibbs sampler orchestration: configuration, chain state, sweeps and traces.

A sweep visits the blocks in this order:

1. gamma, alpha (and kappa), beta, pi, pi0 given the augmented data;
2. z by forward filtering / backward sampling, then u, Q, M, r, w from
   their forward distributions;
3. emission parameters and state locations (eta, theta or loc);
4. kernel decay rate, noise variances and the coordinate means mu.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import gammaln, xlogy

from . import emissions, similarity, states, transitions
from .dataio import Dataset
from .emissions import CategoricalEmission, LinearGaussianEmission
from .errors import InputError, ParameterError
from .metrics import f1_binary, hamming_metric
from .rand import RandomStream, dirichlet_draw, gamma_draw
from .similarity import (CONSTANT, GAUSSIAN_EUCLIDEAN, LAPLACIAN_HAMMING, BinaryStateMatrix,
                         KernelSpec, LocationMatrix)
from .transitions import HdpHyper, TransitionState

VARIANTS = ("vanilla", "sticky", "lt", "sticky-lt")
METRICS = ("f1", "hamming", "train_loglik", "test_surprisal")
TRACE_COLUMNS = ("chain", "iteration", "log_joint", "lambda", "alpha", "gamma", "kappa",
                 "n_states", "f1", "hamming", "train_loglik", "test_surprisal")
HMC_WINDOW = 50


@dataclass
class EmissionConfig:
    family: str = "linear_gaussian"
    a_sigma: float = 0.1
    b_sigma: float = 0.1
    sigma2_init: float = 1.0
    w_fixed: bool = True
    w_prior_precision: float = 1.0
    a0: float = 0.5
    V: int | None = None
    a_mu: float = 1.0
    b_mu: float = 1.0
    D: int | None = None
    loc_dim: int = 2

    def __post_init__(self):
        if self.family not in ("linear_gaussian", "categorical"):
            raise ParameterError(f"unknown emission family {self.family!r}")


def default_kernel_for(family: str) -> str:
    return LAPLACIAN_HAMMING if family == "linear_gaussian" else GAUSSIAN_EUCLIDEAN


@dataclass
class ModelConfig:
    """Everything needed to run chains. Serialises to a single JSON document."""

    variant: str = "lt"
    kernel: KernelSpec = field(default_factory=KernelSpec)
    emission: EmissionConfig = field(default_factory=EmissionConfig)
    hyper: HdpHyper = field(default_factory=HdpHyper)
    iterations: int = 3000
    burn_in: int = 1000
    thin: int = 10
    seed: int = 0
    chains: int = 5
    metrics: list = field(default_factory=lambda: ["f1", "hamming"])
    init_rho: float = 0.5
    fix_kappa: bool = False
    hmc_adapt: bool = True

    def __post_init__(self):
        if isinstance(self.kernel, dict):
            self.kernel = KernelSpec(**self.kernel)
        if isinstance(self.emission, dict):
            self.emission = EmissionConfig(**self.emission)
        if isinstance(self.hyper, dict):
            self.hyper = HdpHyper(**self.hyper)
        if self.variant not in VARIANTS:
            raise ParameterError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.variant in ("vanilla", "sticky"):
            self.kernel.variant = CONSTANT
        elif self.kernel.variant == CONSTANT:
            self.kernel.variant = default_kernel_for(self.emission.family)
        self.hyper.sticky = self.variant in ("sticky", "sticky-lt") and not self.fix_kappa
        if self.variant in ("vanilla", "lt"):
            self.hyper.kappa = 0.0
        if self.iterations < 1 or self.burn_in < 0 or self.iterations <= self.burn_in:
            raise ParameterError("need iterations >= 1 and iterations > burn_in >= 0")
        if self.thin < 1 or self.chains < 1:
            raise ParameterError("thin and chains must be positive")
        unknown = set(self.metrics) - set(METRICS)
        if unknown:
            raise ParameterError(f"unknown metrics {sorted(unknown)}")
        if not 0.0 < self.init_rho < 1.0:
            raise ParameterError("init_rho must lie in (0, 1)")

    @property
    def is_lt(self) -> bool:
        return not self.kernel.is_constant

    def with_variant(self, variant: str) -> "ModelConfig":
        d = self.to_dict()
        d["variant"] = variant
        if variant in ("lt", "sticky-lt") and d["kernel"]["variant"] == CONSTANT:
            d["kernel"]["variant"] = default_kernel_for(self.emission.family)
        return ModelConfig.from_dict(d)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        d.pop("data", None)
        d.pop("test_data", None)
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelConfig":
        return cls.from_dict(json.loads(text))


@dataclass
class ChainState:
    """All latent variables of one chain plus its random stream."""

    hyper: HdpHyper
    trans: TransitionState
    kernel: KernelSpec
    emission: LinearGaussianEmission | CategoricalEmission
    z: list
    rng: RandomStream
    binary: BinaryStateMatrix | None = None
    locations: LocationMatrix | None = None
    iteration: int = 0
    hmc_accepted: int = 0
    hmc_proposed: int = 0
    state_sum: list | None = None
    state_count: int = 0

    @property
    def J(self) -> int:
        return self.trans.J

    def state_points(self):
        return self.binary if self.kernel.variant == LAPLACIAN_HAMMING else self.locations

    def phi(self) -> np.ndarray:
        if self.kernel.is_constant:
            return np.ones((self.J, self.J))
        return similarity.compute_phi(self.kernel, self.state_points())

    def normalized(self) -> states.NormalizedTransitions:
        return states.normalize_transitions(self.trans.pi, self.trans.pi0, self.phi())


# -- initialisation ------------------------------------------------------------------


def _check_data(config: ModelConfig, data: Dataset):
    if config.emission.family == "categorical" and not data.symbolic:
        raise InputError("categorical emissions need symbol sequences")
    if config.emission.family == "linear_gaussian" and data.symbolic:
        raise InputError("linear-Gaussian emissions need real-valued observations")


def _vocabulary(config: ModelConfig, datasets) -> int:
    top = max(int(s.max()) for d in datasets if d is not None for s in d.sequences if s.size)
    V = config.emission.V
    if V is None:
        return top + 1
    if top >= V:
        raise InputError(f"symbol {top} outside configured vocabulary of size {V}")
    return V


def init_chain(config: ModelConfig, data: Dataset, rng: RandomStream,
               test: Dataset | None = None) -> ChainState:
    """Initial state: prior-mean concentrations, uniform beta, prior draws elsewhere.

    z is drawn i.i.d. from beta; the auxiliaries are then drawn forward.
    """
    _check_data(config, data)
    J = config.hyper.J
    hyper = copy.deepcopy(config.hyper)
    hyper.alpha = hyper.a_alpha / hyper.b_alpha
    hyper.gamma_conc = hyper.a_gamma / hyper.b_gamma
    if hyper.sticky:
        hyper.kappa = hyper.alpha * config.init_rho / (1.0 - config.init_rho)
    kernel = copy.deepcopy(config.kernel)
    ec = config.emission

    trans = TransitionState.empty(J)
    trans.pi = gamma_draw(hyper.alpha * trans.beta[None, :] + hyper.kappa * np.eye(J), 1.0, rng)
    trans.pi0 = gamma_draw(hyper.alpha * trans.beta, 1.0, rng)

    binary = locations = None
    if ec.family == "linear_gaussian":
        if data.W is None and ec.w_fixed:
            raise InputError("w_fixed requires the dataset to carry W")
        K = data.sequences[0].shape[1]
        D = data.W.shape[0] - 1 if data.W is not None else (ec.D or 1)
        W = data.W.copy() if data.W is not None else rng.standard_normal((D + 1, K))
        emission = LinearGaussianEmission(W, np.full(K, ec.sigma2_init), ec.a_sigma, ec.b_sigma,
                                          ec.w_fixed, ec.w_prior_precision)
    else:
        V = _vocabulary(config, [data, test])
        theta = np.vstack([dirichlet_draw(np.full(V, ec.a0), rng) for _ in range(J)])
        emission = CategoricalEmission(theta, ec.a0)
        D = ec.D or 0
    if ec.family == "linear_gaussian" or kernel.variant == LAPLACIAN_HAMMING:
        if D < 1:
            raise ParameterError("binary states need D >= 1")
        mu = np.full(D, 0.5)
        binary = BinaryStateMatrix((rng.uniform(size=(J, D)) < mu).astype(np.int8), mu,
                                   ec.a_mu, ec.b_mu)
    if kernel.variant == GAUSSIAN_EUCLIDEAN:
        locations = LocationMatrix(rng.standard_normal((J, ec.loc_dim)) / math.sqrt(kernel.h_loc))

    cum = np.cumsum(trans.beta)
    z = [np.minimum(np.searchsorted(cum, rng.uniform(size=n) * cum[-1], side="right"), J - 1)
         .astype(np.int64) for n in data.lengths]
    state = ChainState(hyper, trans, kernel, emission, z, rng, binary, locations)
    _refresh_auxiliaries(state)
    return state


def _refresh_auxiliaries(state: ChainState):
    t, rng = state.trans, state.rng
    t.N, t.N0 = states.count_transitions(state.z, state.J)
    phi = state.phi()
    transitions.sample_u(t, phi, rng)
    transitions.sample_q(t, phi, rng)
    transitions.sample_m(t, state.hyper, rng)
    transitions.sample_r_w(t, state.hyper, rng)


# -- blocks ------------------------------------------------------------------------------


def loglik_tables(state: ChainState, data: Dataset) -> list:
    full = emissions.loglik_table(state.emission, state.binary, data.concat())
    cuts = np.cumsum(data.lengths)[:-1]
    return np.split(full, cuts)


def sample_transition_block(state: ChainState):
    t, h, rng = state.trans, state.hyper, state.rng
    transitions.sample_gamma_conc(t, h, rng)
    transitions.sample_alpha(t, h, rng)
    transitions.sample_beta(t, h, rng)
    transitions.sample_pi(t, h, rng)
    transitions.sample_pi0(t, h, rng)


def sample_sequence_block(state: ChainState, data: Dataset):
    trans = state.normalized()
    tables = loglik_tables(state, data)
    state.z = [states.ffbs_sample_z(trans, table, state.rng) for table in tables]
    _refresh_auxiliaries(state)


def sample_state_block(state: ChainState, data: Dataset, adapt: bool = False):
    t, rng = state.trans, state.rng
    z = np.concatenate(state.z)
    if isinstance(state.emission, LinearGaussianEmission):
        Y = data.concat()
        emissions.sample_W(state.emission, state.binary, Y, z, rng)
        ratio = emissions.emission_log_ratio_fn(state.emission, state.binary, Y, z)
        similarity.gibbs_update_eta(state.binary, t.N, t.Q, state.kernel, ratio, rng)
    else:
        if state.binary is not None:
            similarity.gibbs_update_eta(state.binary, t.N, t.Q, state.kernel, lambda j, d: 0.0, rng)
        emissions.sample_theta_categorical(state.emission, z, data.concat(), rng)
    if state.locations is not None:
        _, ok = similarity.hmc_update_locations(state.locations, t.N, t.Q, state.kernel, rng)
        state.hmc_proposed += 1
        state.hmc_accepted += int(ok)
        if adapt and state.hmc_proposed >= HMC_WINDOW:
            if state.hmc_accepted / state.hmc_proposed < 0.2:
                state.kernel.hmc_step *= 0.5
            state.hmc_accepted = state.hmc_proposed = 0


def sample_hyper_block(state: ChainState, data: Dataset):
    t, rng = state.trans, state.rng
    if not state.kernel.is_constant and state.kernel.sample_lambda:
        d = similarity.kernel_distances(state.kernel, state.state_points())
        similarity.sample_lambda(state.kernel, d, t.N, t.Q, rng)
    if isinstance(state.emission, LinearGaussianEmission):
        z = np.concatenate(state.z)
        X = emissions.design_matrix(state.binary.eta, z)
        emissions.sample_sigma2(state.emission, data.concat() - X @ state.emission.W, rng)
    if state.binary is not None:
        emissions.sample_mu(state.binary, rng)


def gibbs_sweep(state: ChainState, data: Dataset, adapt: bool = False) -> ChainState:
    """One full Gibbs sweep; mutates and returns ``state``."""
    sample_transition_block(state)
    sample_sequence_block(state, data)
    sample_state_block(state, data, adapt)
    sample_hyper_block(state, data)
    state.iteration += 1
    return state


# -- diagnostics ----------------------------------------------------------------------------


def _log_gamma_pdf(x, shape, rate):
    x = np.asarray(x, dtype=float)
    return xlogy(shape, rate) - gammaln(shape) + xlogy(shape - 1.0, x) - rate * x


def log_joint(state: ChainState, data: Dataset) -> float:
    """log p(parameters, z, Y) under the model, auxiliaries excluded."""
    h, t, J = state.hyper, state.trans, state.J
    lp = float(_log_gamma_pdf(h.gamma_conc, h.a_gamma, h.b_gamma))
    if h.sticky:
        s = h.alpha + h.kappa
        lp += float(_log_gamma_pdf(s, h.a_alpha, h.b_alpha)) - math.log(s)
    else:
        lp += float(_log_gamma_pdf(h.alpha, h.a_alpha, h.b_alpha))
    a = h.gamma_conc / J
    lp += float(gammaln(h.gamma_conc) - J * gammaln(a) + ((a - 1.0) * np.log(t.beta)).sum())
    shape = h.alpha * t.beta[None, :] + h.kappa * np.eye(J)
    lp += float(_log_gamma_pdf(t.pi, shape, 1.0).sum())
    lp += float(_log_gamma_pdf(t.pi0, h.alpha * t.beta, 1.0).sum())
    trans = state.normalized()
    N, N0 = states.count_transitions(state.z, J)
    lp += float(xlogy(N0, trans.p0).sum() + xlogy(N, trans.P).sum())
    for z, table in zip(state.z, loglik_tables(state, data)):
        lp += float(table[np.arange(len(z)), z].sum())
    em = state.emission
    if isinstance(em, LinearGaussianEmission):
        lp += float((_log_gamma_pdf(1.0 / em.sigma2, em.a_sigma, em.b_sigma) - 2 * np.log(em.sigma2)).sum())
    else:
        lp += float((gammaln(em.V * em.a0) - em.V * gammaln(em.a0)) * J
                    + ((em.a0 - 1.0) * np.log(em.theta)).sum())
    if state.binary is not None:
        b = state.binary
        lp += float(xlogy(b.eta, b.mu).sum() + xlogy(1 - b.eta, 1.0 - b.mu).sum())
        lp += float(((b.a_mu - 1) * np.log(b.mu) + (b.b_mu - 1) * np.log1p(-b.mu)).sum()
                    - b.mu.size * (gammaln(b.a_mu) + gammaln(b.b_mu) - gammaln(b.a_mu + b.b_mu)))
    if not state.kernel.is_constant:
        k = state.kernel
        lp += math.log(k.b_lambda) - k.b_lambda * k.lam
    if state.locations is not None:
        loc = state.locations.loc
        h_loc = state.kernel.h_loc
        lp += float(0.5 * loc.size * math.log(h_loc / (2 * math.pi)) - 0.5 * h_loc * (loc * loc).sum())
    return lp


def state_matrix(state: ChainState) -> list | None:
    """Per-sequence T x D matrices eta_{z_t}, or None without binary states."""
    if state.binary is None:
        return None
    return [state.binary.eta[z] for z in state.z]


def trace_row(state: ChainState, data: Dataset, metrics, test: Dataset | None = None,
              chain: int = 0) -> dict:
    row = dict.fromkeys(TRACE_COLUMNS)
    row.update(chain=chain, iteration=state.iteration, log_joint=log_joint(state, data),
               alpha=state.hyper.alpha, gamma=state.hyper.gamma_conc, kappa=state.hyper.kappa,
               n_states=int(np.unique(np.concatenate(state.z)).size))
    if not state.kernel.is_constant:
        row["lambda"] = state.kernel.lam
    mats = state_matrix(state)
    if data.truth is not None and mats is not None:
        pred, truth = np.concatenate(mats), data.truth_concat()
        if "f1" in metrics:
            row["f1"] = f1_binary(pred, truth)
        if "hamming" in metrics:
            row["hamming"] = hamming_metric(pred, truth)[1]
    if "train_loglik" in metrics:
        row["train_loglik"] = states.marginal_loglik(state.normalized(), loglik_tables(state, data))[0]
    if test is not None and "test_surprisal" in metrics:
        tables = loglik_tables(state, test)
        row["test_surprisal"] = states.marginal_loglik(state.normalized(), tables)[1]
    return row


# -- chains ------------------------------------------------------------------------------------


@dataclass
class ChainResult:
    trace: list
    state: ChainState
    burn_in: int

    def post_burn_in(self) -> list:
        return [r for r in self.trace if r["iteration"] > self.burn_in]

    def posterior_mean(self, column: str) -> float:
        vals = [r[column] for r in self.post_burn_in() if r[column] is not None]
        return float(np.mean(vals)) if vals else math.nan

    def state_matrix_mean(self) -> list | None:
        if self.state.state_sum is None or not self.state.state_count:
            return None
        return [s / self.state.state_count for s in self.state.state_sum]


def run_chain(config: ModelConfig, data: Dataset, rng: RandomStream | None = None,
              test: Dataset | None = None, state: ChainState | None = None, chain: int = 0,
              until: int | None = None) -> ChainResult:
    """Run (or continue) one chain up to ``until`` (default ``config.iterations``) sweeps.

    A trace row is recorded every ``thin`` sweeps and after the final sweep.
    Post-burn-in rows also accumulate the average state matrix.
    """
    if state is None:
        rng = RandomStream(config.seed).split(chain) if rng is None else rng
        state = init_chain(config, data, rng, test)
    stop = config.iterations if until is None else min(until, config.iterations)
    trace = []
    while state.iteration < stop:
        adapt = config.hmc_adapt and state.iteration < config.burn_in
        gibbs_sweep(state, data, adapt)
        it = state.iteration
        if it % config.thin == 0 or it == config.iterations:
            trace.append(trace_row(state, data, config.metrics, test, chain))
            mats = state_matrix(state)
            if it > config.burn_in and mats is not None:
                if state.state_sum is None:
                    state.state_sum = [np.zeros(m.shape) for m in mats]
                for acc, m in zip(state.state_sum, mats):
                    acc += m
                state.state_count += 1
    return ChainResult(trace, state, config.burn_in)


def fit(config: ModelConfig, data: Dataset, test: Dataset | None = None) -> list:
    """Run ``config.chains`` independent chains seeded by ``(seed, chain index)``."""
    root = RandomStream(config.seed)
    return [run_chain(config, data, root.split(c), test, chain=c) for c in range(config.chains)]


def averaged_state_matrix(results) -> list | None:
    """Mean of the per-chain averaged state matrices (equal weight per chain)."""
    mats = [r.state_matrix_mean() for r in results]
    if any(m is None for m in mats):
        return None
    return [np.mean([m[i] for m in mats], axis=0) for i in range(len(mats[0]))]
