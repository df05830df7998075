"""Synthetic data: the cocktail-party simulator and draws from a (possibly LT) HDP-HMM."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .rand import RandomStream, dirichlet_draw
from .similarity import hamming_distances, sq_euclidean_distances


@dataclass
class CocktailParams:
    """Conversation simulator settings; durations are in seconds.

    ``duration`` seconds of conversation are rendered on ``steps`` time steps.
    """

    speakers: int = 16
    groups: int = 4
    steps: int = 2000
    channels: int = 12
    noise_sd: float = 0.3
    amplitude_mean: float = 1.0
    amplitude_sd: float = 0.5
    amplitude_corr: float = 0.0
    pause_mean: float = 0.25
    pause_sd: float = 0.25
    turn_duration_mean: float = 3.0
    turn_duration_sd: float = 0.75
    duration: float = 40.0
    seed: int = 0

    def __post_init__(self):
        if self.speakers <= 0 or self.groups <= 0 or self.speakers % self.groups:
            raise ParameterError("speakers must be a positive multiple of groups")
        if self.steps <= 0 or self.channels <= 0 or self.duration <= 0:
            raise ParameterError("steps, channels and duration must be positive")
        if not 0.0 <= self.amplitude_corr < 1.0:
            raise ParameterError("amplitude_corr must lie in [0, 1)")
        if self.noise_sd < 0 or self.turn_duration_mean <= 0:
            raise ParameterError("noise_sd must be >= 0 and turn_duration_mean > 0")


@dataclass
class CocktailData:
    observations: np.ndarray  # T x K
    truth: np.ndarray  # T x D bits
    W: np.ndarray  # (D + 1) x K, row 0 is the background channel
    signal: np.ndarray  # T x (D + 1) amplitudes with the leading column of ones


def _positive_normal(rng, mean, sd):
    while True:
        x = rng.normal(mean, sd)
        if x >= 0:
            return x


def _ar1_envelope(rng, T, D, corr):
    """Unit-variance stationary AR(1) paths, one column per speaker."""
    eps = rng.normal(size=(T, D))
    if corr == 0.0:
        return eps
    out = np.empty_like(eps)
    out[0] = eps[0]
    scale = np.sqrt(1.0 - corr * corr)
    for t in range(1, T):
        out[t] = corr * out[t - 1] + scale * eps[t]
    return out


def gen_cocktail(params: CocktailParams, rng=None) -> CocktailData:
    """Turn-taking conversations mixed onto microphone channels.

    Within each group at most one speaker is on at any time. Pauses between
    turns are normal draws truncated at zero. While on, a speaker's amplitude
    has marginal N(amplitude_mean, amplitude_sd^2), floored at zero, and
    follows an AR(1) envelope with lag-one correlation ``amplitude_corr``.
    """
    rng = RandomStream(params.seed) if rng is None else rng
    D, C, T = params.speakers, params.groups, params.steps
    per = D // C
    rate = T / params.duration
    truth = np.zeros((T, D), dtype=np.int8)
    for c in range(C):
        members = np.arange(c * per, (c + 1) * per)
        t = 0.0
        prev = -1
        while True:
            t += _positive_normal(rng, params.pause_mean, params.pause_sd) * rate
            length = max(1.0, rng.normal(params.turn_duration_mean, params.turn_duration_sd) * rate)
            choices = members[members != prev] if per > 1 else members
            who = int(rng.choice(choices))
            start, stop = int(round(t)), int(round(t + length))
            if start >= T:
                break
            truth[start:min(stop, T), who] = 1
            prev = who
            t += length
    amp = _ar1_envelope(rng, T, D, params.amplitude_corr)
    amp = params.amplitude_mean + params.amplitude_sd * amp
    signal = np.hstack([np.ones((T, 1)), truth * np.maximum(amp, 0.0)])
    W = rng.uniform(0.0, 1.0, size=(D + 1, params.channels))
    Y = signal @ W
    if params.noise_sd > 0:
        Y = Y + rng.normal(0.0, params.noise_sd, size=Y.shape)
    return CocktailData(Y, truth, W, signal)


def reachable_states(group_sizes) -> int:
    """Joint on/off configurations with at most one speaker per group."""
    return int(np.prod([s + 1 for s in group_sizes]))


@dataclass
class SynthHdpParams:
    """Settings for draws from a truncated HDP-HMM.

    ``kernel`` is ``None`` for the ordinary model, or ``"gaussian_euclidean"``
    / ``"laplacian_hamming"`` to rescale transition rows by similarities.
    """

    J: int = 8
    gamma_conc: float = 3.0
    alpha: float = 3.0
    D: int = 4
    K: int = 6
    mu: float = 0.5
    T: int = 300
    n_sequences: int = 1
    noise_sd: float = 0.3
    emission: str = "linear_gaussian"
    V: int = 30
    a0: float = 0.5
    kernel: str | None = None
    lam: float = 1.0
    loc_dim: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.J < 1 or self.T < 1 or self.n_sequences < 1:
            raise ParameterError("J, T and n_sequences must be positive")
        if not (self.gamma_conc > 0 and self.alpha > 0):
            raise ParameterError("concentrations must be positive")
        if self.emission not in ("linear_gaussian", "categorical"):
            raise ParameterError(f"unknown emission family {self.emission!r}")
        if self.kernel not in (None, "gaussian_euclidean", "laplacian_hamming"):
            raise ParameterError(f"unknown kernel {self.kernel!r}")


@dataclass
class SynthData:
    sequences: list  # T x K float arrays or length-T symbol arrays
    z: list
    truth: list | None  # per-sequence T x D bits (linear-Gaussian only)
    beta: np.ndarray
    P: np.ndarray
    p0: np.ndarray
    eta: np.ndarray | None = None
    W: np.ndarray | None = None
    theta: np.ndarray | None = None
    loc: np.ndarray | None = None
    extra: dict = field(default_factory=dict)


def stick_breaking(gamma_conc: float, J: int, rng) -> np.ndarray:
    """GEM(gamma) weights truncated at J sticks; the last stick takes the remainder."""
    v = rng.beta(1.0, gamma_conc, size=J)
    v[-1] = 1.0
    rest = np.concatenate([[1.0], np.cumprod(1.0 - v[:-1])])
    beta = v * rest
    beta = np.maximum(beta, np.finfo(float).tiny)
    return beta / beta.sum()


def sample_markov_path(P, p0, T: int, rng) -> np.ndarray:
    J = P.shape[0]
    cum = np.cumsum(P, axis=1)
    u = rng.uniform(size=T)
    z = np.empty(T, dtype=np.int64)
    z[0] = min(int(np.searchsorted(np.cumsum(p0), u[0] * p0.sum(), side="right")), J - 1)
    for t in range(1, T):
        row = cum[z[t - 1]]
        z[t] = min(int(np.searchsorted(row, u[t] * row[-1], side="right")), J - 1)
    return z


def gen_hdp_hmm(params: SynthHdpParams, rng=None) -> SynthData:
    """Draw parameters and sequences from a truncated HDP-HMM.

    Rows are Dirichlet(alpha * beta) (normalised Gammas). With a kernel, each
    row is rescaled elementwise by its similarities and renormalised.
    """
    rng = RandomStream(params.seed) if rng is None else rng
    J = params.J
    beta = stick_breaking(params.gamma_conc, J, rng)
    rows = np.vstack([dirichlet_draw(params.alpha * beta, rng) for _ in range(J)])
    p0 = dirichlet_draw(params.alpha * beta, rng)
    eta = loc = None
    if params.emission == "linear_gaussian" or params.kernel == "laplacian_hamming":
        eta = (rng.uniform(size=(J, params.D)) < params.mu).astype(np.int8)
    if params.kernel == "gaussian_euclidean":
        loc = rng.standard_normal((J, params.loc_dim))
        phi = np.exp(-0.5 * params.lam * sq_euclidean_distances(loc))
    elif params.kernel == "laplacian_hamming":
        phi = np.exp(-params.lam * hamming_distances(eta))
    else:
        phi = np.ones((J, J))
    P = rows * phi
    P /= P.sum(axis=1, keepdims=True)
    z_seqs = [sample_markov_path(P, p0, params.T, rng) for _ in range(params.n_sequences)]
    W = theta = None
    truth = None
    if params.emission == "linear_gaussian":
        W = rng.uniform(0.0, 1.0, size=(params.D + 1, params.K))
        seqs = []
        for z in z_seqs:
            X = np.hstack([np.ones((len(z), 1)), eta[z]])
            seqs.append(X @ W + rng.normal(0.0, params.noise_sd, size=(len(z), params.K)))
        truth = [eta[z].astype(np.int8) for z in z_seqs]
    else:
        theta = np.vstack([dirichlet_draw(np.full(params.V, params.a0), rng) for _ in range(J)])
        cum = np.cumsum(theta, axis=1)
        seqs = []
        for z in z_seqs:
            u = rng.uniform(size=len(z))
            y = np.array([np.searchsorted(cum[j], ui * cum[j, -1], side="right") for j, ui in zip(z, u)])
            seqs.append(np.minimum(y, params.V - 1).astype(np.int64))
    return SynthData(seqs, z_seqs, truth, beta, P, p0, eta=eta, W=W, theta=theta, loc=loc,
                     extra={"rows": rows, "phi": phi})
