"""Sampler correctness checks.

Two complementary harnesses:

* :func:`geweke_test` compares independent draws from the generative model
  with a Gibbs chain that regenerates its data after every sweep. Both target
  the same joint distribution, so any statistic must agree in distribution.
* :func:`conditional_oracle_suite` checks individual conditionals against
  brute-force computations (enumeration, Stirling numbers, quadrature,
  finite differences, direct jump-process simulation).

:data:`MUTATIONS` holds deliberate one-line corruptions of the sampler used to
show that the harnesses have teeth.
"""

from __future__ import annotations

import contextlib
import itertools
import math
import time
from dataclasses import dataclass, field
from unittest import mock

import numpy as np
from scipy import integrate, stats
from scipy.special import gammaln, logsumexp

from . import similarity, states, transitions
from .dataio import Dataset
from .emissions import CategoricalEmission
from .errors import HdpLtError, ParameterError
from .model import ChainState, EmissionConfig, ModelConfig, gibbs_sweep
from .rand import RandomStream, crp_table_counts, stirling_pmf_oracle
from .similarity import GAUSSIAN_EUCLIDEAN, KernelSpec, LocationMatrix
from .transitions import HdpHyper, TransitionState

GEWEKE_STATISTICS = ("alpha", "gamma", "lambda", "beta_1", "pi_11", "n_11", "m_total",
                     "log1p_q_total", "log1p_u_1")
TINY = np.finfo(float).tiny


# -- effective sample size -------------------------------------------------------------


def effective_sample_size(x) -> float:
    """Geyer's initial monotone sequence estimate of the ESS of a scalar chain."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 4:
        return float(n)
    x = x - x.mean()
    var = float(x @ x) / n
    if var == 0.0:
        return float(n)
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n] / n
    rho = acov / acov[0]
    pairs = rho[: n - n % 2].reshape(-1, 2).sum(axis=1)
    total = 0.0
    prev = math.inf
    for k, g in enumerate(pairs):
        if g <= 0.0:
            break
        g = min(g, prev)
        total += g
        prev = g
    tau = -1.0 + 2.0 * total
    return float(n / max(tau, 1.0 / n))


# -- tiny model --------------------------------------------------------------------------


def tiny_config(J: int = 3, V: int = 4) -> ModelConfig:
    """The small categorical LT model used by the Geweke test."""
    if J > 3 or V > 4:
        raise ParameterError("the Geweke model is limited to J <= 3 and V <= 4")
    return ModelConfig(
        variant="lt",
        kernel=KernelSpec(GAUSSIAN_EUCLIDEAN, lam=1.0, b_lambda=1.0, h_loc=1.0, hmc_step=0.2,
                          hmc_leapfrog_steps=8),
        emission=EmissionConfig(family="categorical", a0=1.0, V=V, loc_dim=2),
        hyper=HdpHyper(J=J, a_alpha=4.0, b_alpha=2.0, a_gamma=4.0, b_gamma=2.0),
        iterations=2, burn_in=1, thin=1, chains=1, metrics=[], hmc_adapt=False,
    )


GEWEKE_LENGTHS = (5, 5)


def _crp_tables(n: int, mass: float, rng) -> int:
    # plain loop, kept apart from the vectorised sampler on purpose
    tables = 0
    for i in range(n):
        if rng.uniform() < mass / (i + mass):
            tables += 1
    return tables


def _gamma(shape, rate, rng):
    return np.maximum(rng.gamma(shape, 1.0 / rate), TINY)


def forward_draw(config: ModelConfig, lengths, rng) -> ChainState:
    """Independent joint draw of parameters, paths, symbols and auxiliaries.

    Written against the generative model directly; it shares no sampling
    code with the Gibbs blocks. Returns a chain state whose paths and
    auxiliaries are filled in, with the symbols in ``state.extra_data``.
    """
    h, k, ec = config.hyper, config.kernel, config.emission
    J, V = h.J, ec.V
    gamma = float(_gamma(h.a_gamma, h.b_gamma, rng))
    alpha = float(_gamma(h.a_alpha, h.b_alpha, rng))
    g = _gamma(np.full(J, gamma / J), 1.0, rng)
    beta = np.maximum(g / g.sum(), TINY)
    beta /= beta.sum()
    pi = _gamma(alpha * np.tile(beta, (J, 1)), 1.0, rng)
    pi0 = _gamma(alpha * beta, 1.0, rng)
    lam = float(rng.exponential(1.0 / k.b_lambda))
    loc = rng.normal(0.0, 1.0 / math.sqrt(k.h_loc), size=(J, ec.loc_dim))
    diff = loc[:, None, :] - loc[None, :, :]
    phi = np.exp(-0.5 * lam * (diff ** 2).sum(axis=2))
    theta = np.vstack([rng.dirichlet(np.full(V, ec.a0)) for _ in range(J)])
    theta = np.maximum(theta, TINY)
    theta /= theta.sum(axis=1, keepdims=True)

    P = pi * phi / (pi * phi).sum(axis=1, keepdims=True)
    p0 = pi0 / pi0.sum()
    zs, ys = [], []
    N = np.zeros((J, J), dtype=np.int64)
    N0 = np.zeros(J, dtype=np.int64)
    for T in lengths:
        z = np.empty(T, dtype=np.int64)
        z[0] = rng.choice(J, p=p0)
        for t in range(1, T):
            z[t] = rng.choice(J, p=P[z[t - 1]])
        zs.append(z)
        ys.append(np.array([rng.choice(V, p=theta[j]) for j in z], dtype=np.int64))
        N0[z[0]] += 1
        for a, b in zip(z[:-1], z[1:]):
            N[a, b] += 1

    out = N.sum(axis=1)
    u = np.array([float(_gamma(out[j], (pi[j] * phi[j]).sum(), rng)) if out[j] else 0.0
                  for j in range(J)])
    u0 = float(_gamma(len(lengths), pi0.sum(), rng))
    Q = rng.poisson(u[:, None] * pi * (1.0 - phi)).astype(np.int64)
    M = np.array([[_crp_tables(int(N[j, i] + Q[j, i]), alpha * beta[i], rng) for i in range(J)]
                  for j in range(J)], dtype=np.int64)
    M0 = np.array([_crp_tables(int(N0[i]), alpha * beta[i], rng) for i in range(J)], dtype=np.int64)
    cols = M.sum(axis=0) + M0
    total = int(cols.sum())
    w = float(rng.beta(gamma, total)) if total else None
    r = np.array([_crp_tables(int(c), gamma / J, rng) for c in cols], dtype=np.int64)

    hyper = HdpHyper(alpha=alpha, gamma_conc=gamma, a_alpha=h.a_alpha, b_alpha=h.b_alpha,
                     a_gamma=h.a_gamma, b_gamma=h.b_gamma, J=J)
    trans = TransitionState(beta=beta, pi=pi, pi0=pi0, u=u, Q=Q, M=M, r=r, N=N, N0=N0, u0=u0,
                            M0=M0, w=w)
    kernel = KernelSpec(k.variant, lam=lam, b_lambda=k.b_lambda, h_loc=k.h_loc,
                        hmc_step=k.hmc_step, hmc_leapfrog_steps=k.hmc_leapfrog_steps)
    state = ChainState(hyper, trans, kernel, CategoricalEmission(theta, ec.a0), zs, rng,
                       locations=LocationMatrix(loc))
    state.extra_data = ys
    return state


def geweke_statistics(state: ChainState) -> dict:
    t = state.trans
    return {
        "alpha": state.hyper.alpha,
        "gamma": state.hyper.gamma_conc,
        "lambda": state.kernel.lam,
        "beta_1": float(t.beta[0]),
        "pi_11": float(t.pi[0, 0]),
        "n_11": float(t.N[0, 0]),
        "m_total": float(t.M.sum() + t.M0.sum()),
        # holding times and failure counts are extremely heavy-tailed when a
        # row's total rate is tiny, so they are compared on the log scale
        "log1p_q_total": math.log1p(float(t.Q.sum())),
        "log1p_u_1": math.log1p(float(t.u[0])),
    }


@dataclass
class GewekeStatistic:
    name: str
    forward_mean: float
    forward_var: float
    gibbs_mean: float
    gibbs_var: float
    z: float
    forward_ess: float
    gibbs_ess: float

    def __post_init__(self):
        for k, v in vars(self).items():
            if k != "name":
                setattr(self, k, float(v))


@dataclass
class GewekeReport:
    statistics: list
    n_samples: int
    threshold: float = 4.0
    seconds: float = 0.0
    failure: str | None = None

    @property
    def max_abs_z(self) -> float:
        return max((abs(s.z) for s in self.statistics if not math.isnan(s.z)), default=math.inf)

    @property
    def passed(self) -> bool:
        """All |z| below threshold, and the Gibbs chain ran to the end."""
        return self.failure is None and all(abs(s.z) < self.threshold for s in self.statistics)

    def z_scores(self) -> dict:
        return {s.name: s.z for s in self.statistics}

    def to_dict(self) -> dict:
        return {"n_samples": self.n_samples, "threshold": self.threshold, "passed": self.passed,
                "seconds": self.seconds, "failure": self.failure,
                "statistics": [vars(s).copy() for s in self.statistics]}


def _z_score(f, g) -> tuple[float, float, float]:
    ess_f = effective_sample_size(f)
    ess_g = effective_sample_size(g)
    se2 = f.var() / ess_f + g.var() / ess_g
    if se2 == 0.0:
        return (0.0 if f.mean() == g.mean() else math.inf), ess_f, ess_g
    return float((g.mean() - f.mean()) / math.sqrt(se2)), ess_f, ess_g


def geweke_test(config: ModelConfig, n_samples: int, rng: RandomStream,
                lengths=GEWEKE_LENGTHS, threshold: float = 4.0, sweeps_per_sample: int = 1) -> GewekeReport:
    """Marginal-conditional versus successive-conditional comparison.

    The successive-conditional chain starts from a forward draw and, after
    every Gibbs sweep, regenerates all symbols from the emission model given
    the current paths.
    """
    if n_samples <= 0:
        raise ParameterError("geweke_test needs n_samples > 0 (an empty report is meaningless)")
    if sum(lengths) > 10 * len(lengths) or max(lengths) > 10:
        raise ParameterError("Geweke sequences are limited to length 10")
    start = time.perf_counter()
    fwd_rng = rng.split(0)
    forward = [geweke_statistics(forward_draw(config, lengths, fwd_rng)) for _ in range(n_samples)]

    chain_rng = rng.split(1)
    state = forward_draw(config, lengths, chain_rng)
    ys = state.extra_data
    gibbs = []
    failure = None
    for _ in range(n_samples):
        try:
            for _ in range(sweeps_per_sample):
                gibbs_sweep(state, Dataset(ys))
                ys = _regenerate_symbols(state, chain_rng)
        except HdpLtError as exc:
            failure = f"gibbs chain failed after {len(gibbs)} samples: {exc}"
            break
        gibbs.append(geweke_statistics(state))
    if failure is not None and len(gibbs) < 2:
        gibbs = [dict.fromkeys(GEWEKE_STATISTICS, math.nan)] * 2

    out = []
    for name in GEWEKE_STATISTICS:
        f = np.array([s[name] for s in forward])
        g = np.array([s[name] for s in gibbs])
        z, ess_f, ess_g = _z_score(f, g)
        out.append(GewekeStatistic(name, float(f.mean()), float(f.var()), float(g.mean()),
                                   float(g.var()), z, ess_f, ess_g))
    return GewekeReport(out, n_samples, threshold, time.perf_counter() - start, failure)


def _regenerate_symbols(state: ChainState, rng) -> list:
    theta = state.emission.theta
    cum = np.cumsum(theta, axis=1)
    ys = []
    for z in state.z:
        u = rng.uniform(size=len(z)) * cum[z, -1]
        ys.append(np.minimum((cum[z] <= u[:, None]).sum(axis=1), theta.shape[1] - 1))
    return ys


# -- mutations -------------------------------------------------------------------------------


def _pi_shape_plus_one(state, hyper):
    shape, rate = _ORIGINAL["pi_posterior_params"](state, hyper)
    return shape + 1.0, rate


def _u_rate_without_phi(state, phi):
    return state.N.sum(axis=1), state.pi.sum(axis=1)


def _tables_without_failures(state):
    return state.N


def _lambda_exponent_shifted(b_lambda, distances, N, Q):
    return _ORIGINAL["lambda_log_density"](b_lambda, distances, N, Q + 1)


def _backward_transposed(alpha, P, rng):
    return _ORIGINAL["backward_sample"](alpha, P.T, rng)


_ORIGINAL = {
    "pi_posterior_params": transitions.pi_posterior_params,
    "lambda_log_density": similarity.lambda_log_density,
    "backward_sample": states.backward_sample,
}

MUTATIONS = {
    "pi_shape": (transitions, "pi_posterior_params", _pi_shape_plus_one),
    "u_rate": (transitions, "u_posterior_params", _u_rate_without_phi),
    "m_count_base": (transitions, "table_customers", _tables_without_failures),
    "lambda_exponent": (similarity, "lambda_log_density", _lambda_exponent_shifted),
    "ffbs_backward": (states, "backward_sample", _backward_transposed),
}


@contextlib.contextmanager
def mutation(name: str):
    """Temporarily replace one sampler function with a corrupted version."""
    if name not in MUTATIONS:
        raise ParameterError(f"unknown mutation {name!r}; expected one of {sorted(MUTATIONS)}")
    module, attr, fake = MUTATIONS[name]
    with mock.patch.object(module, attr, fake):
        yield


# -- conditional oracles -------------------------------------------------------------------


@dataclass
class OracleResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""

    def __post_init__(self):
        self.passed = bool(self.passed)
        self.value = float(self.value)


@dataclass
class OracleReport:
    results: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def by_name(self, prefix: str) -> list:
        return [r for r in self.results if r.name.startswith(prefix)]

    def to_dict(self) -> dict:
        return {"passed": self.passed, "seconds": self.seconds,
                "results": [vars(r).copy() for r in self.results]}


def antoniak_oracle(n: int, mass: float, rng, draws: int = 200_000, tol: float = 0.01) -> OracleResult:
    """Total variation between simulated table counts and the Stirling pmf."""
    m = crp_table_counts(np.full(draws, n), mass, rng)
    emp = np.bincount(m, minlength=n + 1)[: n + 1] / draws
    tv = 0.5 * float(np.abs(emp - stirling_pmf_oracle(n, mass)).sum())
    return OracleResult(f"antoniak[n={n},mass={mass}]", tv <= tol, tv, tol)


def table_count_oracle(rng, draws: int = 100_000, tol: float = 0.01) -> OracleResult:
    """The table sampler must seat successful and failed jumps together."""
    J = 2
    t = TransitionState.empty(J)
    t.beta = np.array([0.6, 0.4])
    t.N = np.array([[2, 1], [0, 3]])
    t.Q = np.array([[0, 3], [1, 0]])
    hyper = HdpHyper(alpha=1.5, J=J)
    target = stirling_pmf_oracle(int(t.N[0, 1] + t.Q[0, 1]), hyper.alpha * t.beta[1])
    counts = np.zeros(len(target))
    for _ in range(draws // 1000):
        # repeat the single-restaurant draw through the public sampler
        batch = []
        for _ in range(1000):
            transitions.sample_m(t, hyper, rng)
            batch.append(t.M[0, 1])
        counts += np.bincount(batch, minlength=len(target))[: len(target)]
    tv = 0.5 * float(np.abs(counts / counts.sum() - target).sum())
    return OracleResult("table_counts[n+q]", tv <= tol, tv, tol)


def full_log_joint(z_counts, Q, u, pi, phi) -> float:
    """log p(N, u, Q | pi, phi) for the jump-process augmentation.

    Each row: Gamma(n_j., T_j) density of u_j, multinomial path factor
    prod (pi phi / T_j)^n, and independent Poisson(u pi (1 - phi)) failures.
    Constant factors in N are dropped.
    """
    N = z_counts
    T = (pi * phi).sum(axis=1)
    lp = 0.0
    for j in range(pi.shape[0]):
        n = N[j].sum()
        if n:
            lp += n * math.log(T[j]) + (n - 1) * math.log(u[j]) - u[j] * T[j] - gammaln(n)
            lp += float((N[j] * np.log(pi[j] * phi[j] / T[j])).sum())
        rate = u[j] * pi[j] * (1.0 - phi[j])
        for i in range(pi.shape[0]):
            if rate[i] > 0 or Q[j, i] > 0:
                lp += stats.poisson.logpmf(Q[j, i], rate[i]) if rate[i] > 0 else -math.inf
    return lp


def eta_oracle(rng, tol: float = 1e-10, trials: int = 25) -> OracleResult:
    """Each coordinate's log odds against a two-point evaluation of the full joint."""
    worst = 0.0
    for _ in range(trials):
        J, D = 4, 3
        eta = (rng.uniform(size=(J, D)) < 0.5).astype(np.int8)
        mu = rng.uniform(0.2, 0.8, size=D)
        lam = float(rng.uniform(0.2, 2.0))
        pi = rng.gamma(1.0, 1.0, size=(J, J)) + 0.05
        N = rng.poisson(2.0, size=(J, J))
        u = rng.gamma(3.0, 1.0, size=J)
        phi = np.exp(-lam * similarity.hamming_distances(eta))
        Q = rng.poisson(u[:, None] * pi * (1.0 - phi))
        ratio = float(rng.normal())
        for j, d in itertools.product(range(J), range(D)):
            lp = []
            for v in (0, 1):
                e = eta.copy()
                e[j, d] = v
                ph = np.exp(-lam * similarity.hamming_distances(e))
                prior = math.log(mu[d]) if v else math.log1p(-mu[d])
                lp.append(full_log_joint(N, Q, u, pi, ph) + prior + (ratio if v else 0.0))
            brute = lp[1] - lp[0]
            got = similarity.eta_log_odds(j, d, eta, mu, N, Q, lam, ratio)
            if math.isinf(brute) or math.isinf(got):
                err = 0.0 if brute == got else math.inf
            else:
                err = abs(got - brute)
            worst = max(worst, err)
    return OracleResult("eta_log_odds", worst <= tol, worst, tol)


def _lambda_instance():
    loc = np.array([[0.0, 0.0], [0.9, 0.3], [-0.5, 1.1]])
    N = np.array([[3, 2, 0], [1, 4, 1], [2, 0, 2]])
    Q = np.array([[0, 1, 2], [0, 0, 1], [1, 1, 0]])
    pi = np.array([[1.0, 0.6, 0.3], [0.4, 1.2, 0.8], [0.9, 0.2, 0.7]])
    u = np.array([2.0, 2.5, 1.5])
    return loc, N, Q, pi, u


def lambda_quadrature_cdf(b_lambda, loc, N, Q, pi, u):
    """CDF of the decay rate by quadrature of prior times the full augmented joint."""
    sq = similarity.sq_euclidean_distances(loc)

    def logdens(lam):
        return -b_lambda * lam + full_log_joint(N, Q, u, pi, np.exp(-0.5 * lam * sq))

    grid = np.linspace(1e-6, 30.0, 6001)
    lp = np.array([logdens(x) for x in grid])
    dens = np.exp(lp - lp.max())
    cdf = integrate.cumulative_trapezoid(dens, grid, initial=0.0)
    cdf /= cdf[-1]
    return lambda x: np.interp(x, grid, cdf)


def lambda_oracle(rng, draws: int = 2000, alpha: float = 0.01) -> OracleResult:
    """KS test of adaptive-rejection draws against quadrature."""
    loc, N, Q, pi, u = _lambda_instance()
    kernel = KernelSpec(GAUSSIAN_EUCLIDEAN, b_lambda=1.0)
    d = similarity.kernel_distances(kernel, LocationMatrix(loc))
    x = np.array([similarity.sample_lambda(kernel, d, N, Q, rng) for _ in range(draws)])
    p = float(stats.kstest(x, lambda_quadrature_cdf(1.0, loc, N, Q, pi, u)).pvalue)
    return OracleResult("lambda_ars_ks", p >= alpha, p, alpha, "value is the KS p-value")


def hmc_gradient_oracle(rng, step: float = 1e-5, tol: float = 1e-5, trials: int = 5) -> OracleResult:
    """Analytic location gradient against central differences of the full log joint."""
    worst = 0.0
    for _ in range(trials):
        J, dim = 4, 2
        loc = rng.normal(size=(J, dim))
        lam, h_loc = float(rng.uniform(0.3, 2.0)), 1.3
        pi = rng.gamma(1.0, 1.0, size=(J, J)) + 0.05
        N = rng.poisson(2.0, size=(J, J))
        u = rng.gamma(3.0, 1.0, size=J)
        Q = rng.poisson(1.5, size=(J, J))
        np.fill_diagonal(Q, 0)

        def logp(flat):
            x = flat.reshape(J, dim)
            diff = x[:, None, :] - x[None, :, :]
            phi = np.exp(-0.5 * lam * (diff ** 2).sum(axis=2))
            return -0.5 * h_loc * float((x * x).sum()) + full_log_joint(N, Q, u, pi, phi)

        flat = loc.ravel()
        fd = np.empty_like(flat)
        for i in range(flat.size):
            e = np.zeros_like(flat)
            e[i] = step
            fd[i] = (logp(flat + e) - logp(flat - e)) / (2 * step)
        g = similarity.location_grad(loc, N, Q, lam, h_loc).ravel()
        worst = max(worst, float(np.max(np.abs(g - fd)) / max(np.max(np.abs(fd)), 1e-12)))
    return OracleResult("hmc_gradient", worst <= tol, worst, tol)


def enumerate_paths(trans, loglik):
    """Exact log marginal likelihood and per-time state marginals by brute force."""
    T, J = loglik.shape
    logP, logp0 = np.log(trans.P), np.log(trans.p0)
    paths = np.array(list(itertools.product(range(J), repeat=T)))
    lp = logp0[paths[:, 0]] + loglik[0, paths[:, 0]]
    for t in range(1, T):
        lp += logP[paths[:, t - 1], paths[:, t]] + loglik[t, paths[:, t]]
    logZ = float(logsumexp(lp))
    w = np.exp(lp - logZ)
    marg = np.zeros((T, J))
    for t in range(T):
        marg[t] = np.bincount(paths[:, t], weights=w, minlength=J)
    return logZ, marg


def ffbs_oracle(rng, draws: int = 100_000, J: int = 3, T: int = 5):
    """Forward-filter likelihood and sampled marginals against enumeration."""
    pi = rng.gamma(1.0, 1.0, size=(J, J))
    pi0 = rng.gamma(1.0, 1.0, size=J)
    phi = np.exp(-rng.uniform(0.0, 2.0, size=(J, J)))
    phi = np.minimum(phi, phi.T)
    np.fill_diagonal(phi, 1.0)
    trans = states.normalize_transitions(pi, pi0, phi)
    loglik = rng.normal(size=(T, J))
    logZ, marg = enumerate_paths(trans, loglik)
    alpha, got = states.forward_filter(trans, loglik)
    ll_err = abs(got - logZ)
    counts = np.zeros((T, J))
    for _ in range(draws):
        z = states.backward_sample(alpha, trans.P, rng)
        counts[np.arange(T), z] += 1
    emp = counts / draws
    se = np.sqrt(marg * (1 - marg) / draws)
    worst = float(np.max(np.abs(emp - marg) / np.maximum(se, 1e-300)))
    return [OracleResult("ffbs_loglik", ll_err <= 1e-10, ll_err, 1e-10),
            OracleResult("ffbs_marginals", worst <= 3.0, worst, 3.0, "value is max |error| in MC standard errors")]


def holding_time_oracle(rng, visits: int = 4, draws: int = 4000, alpha: float = 0.01) -> list:
    """Simulate the jump process with failed attempts out of one state.

    Conditioned on ``visits`` successful departures, the total holding time
    must follow the Gamma used by the sampler, and failures given the holding
    time must be Poisson with the sampler's rates.
    """
    J = 3
    pi = np.array([[0.7, 1.2, 0.4], [0.3, 0.5, 0.9], [1.0, 0.2, 0.6]])
    phi = np.array([[1.0, 0.35, 0.8], [0.35, 1.0, 0.5], [0.8, 0.5, 1.0]])
    t = TransitionState.empty(J)
    t.pi = pi
    t.N = np.zeros((J, J), dtype=np.int64)
    t.N[0, 1] = visits
    shape, rate = transitions.u_posterior_params(t, phi)
    total_rate = pi[0].sum()
    us, qs = np.empty(draws), np.empty((draws, J))
    for i in range(draws):
        u, q, done = 0.0, np.zeros(J), 0
        while done < visits:
            u += rng.exponential(1.0 / total_rate)
            k = rng.choice(J, p=pi[0] / total_rate)
            if rng.uniform() < phi[0, k]:
                done += 1
            else:
                q[k] += 1
        us[i], qs[i] = u, q
    p = float(stats.kstest(us, stats.gamma(shape[0], scale=1.0 / rate[0]).cdf).pvalue)
    t.u = np.zeros(J)
    expected = np.array([transitions.q_rates(_with_u(t, x), phi)[0] for x in us])
    resid = (qs - expected).sum(axis=0)
    zq = float(np.max(np.abs(resid) / np.sqrt(np.maximum(expected.sum(axis=0), 1e-12))))
    return [OracleResult("holding_time_ks", p >= alpha, p, alpha, "value is the KS p-value"),
            OracleResult("failed_jump_rates", zq <= 4.0, zq, 4.0, "max |z| of summed Poisson residuals")]


def _with_u(t: TransitionState, u0: float) -> TransitionState:
    t.u = np.zeros(t.J)
    t.u[0] = u0
    return t


def conditional_oracle_suite(rng: RandomStream) -> OracleReport:
    """Run every brute-force conditional check with its documented tolerance."""
    start = time.perf_counter()
    report = OracleReport()
    for n in range(1, 7):
        for mass in (0.1, 1.0, 10.0):
            report.results.append(antoniak_oracle(n, mass, rng.split(n * 100 + int(mass * 10))))
    report.results.append(table_count_oracle(rng.split(1)))
    report.results.append(eta_oracle(rng.split(2)))
    report.results.append(lambda_oracle(rng.split(3)))
    report.results.append(hmc_gradient_oracle(rng.split(4)))
    report.results.extend(ffbs_oracle(rng.split(5)))
    report.results.extend(holding_time_oracle(rng.split(6)))
    report.seconds = time.perf_counter() - start
    return report


def format_report(report: dict) -> str:
    lines = []
    if "oracles" in report:
        lines.append("conditional oracles:")
        for r in report["oracles"]["results"]:
            mark = "PASS" if r["passed"] else "FAIL"
            lines.append(f"  {mark} {r['name']}: {r['value']:.3g} (tolerance {r['tolerance']:g})")
    if "geweke" in report:
        g = report["geweke"]
        lines.append(f"geweke test ({g['n_samples']} samples, |z| < {g['threshold']:g}):")
        if g.get("failure"):
            lines.append(f"  FAIL {g['failure']}")
        for s in g["statistics"]:
            mark = "PASS" if abs(s["z"]) < g["threshold"] else "FAIL"
            lines.append(f"  {mark} {s['name']}: z = {s['z']:+.2f} "
                         f"(forward {s['forward_mean']:.4g}, gibbs {s['gibbs_mean']:.4g}, "
                         f"ess {s['gibbs_ess']:.0f})")
    return "\n".join(lines)
