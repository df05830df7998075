"""Seedable random streams and the special-purpose samplers used by the Gibbs blocks.

Everything here is a pure function of its arguments and the state of the
:class:`RandomStream` it is handed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DivergenceError, IntegrityError, ParameterError

TINY = np.finfo(float).tiny


class RandomStream:
    """A numpy ``Generator`` keyed by ``(seed, stream ids...)``.

    Child streams obtained with :meth:`split` are statistically independent of
    the parent and of each other, and are reproducible from the key alone.
    Attribute access falls through to the wrapped generator, so
    ``rng.normal(...)`` works as it does on ``numpy.random.Generator``.
    """

    def __init__(self, seed: int = 0, key: tuple[int, ...] = ()):
        if seed < 0:
            raise ParameterError("seed must be non-negative")
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        seq = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self.generator = np.random.Generator(np.random.PCG64(seq))

    def split(self, stream_id: int) -> "RandomStream":
        return RandomStream(self.seed, self.key + (stream_id,))

    @property
    def state(self) -> dict:
        return self.generator.bit_generator.state

    @state.setter
    def state(self, value: dict) -> None:
        self.generator.bit_generator.state = value

    def __getattr__(self, name):
        return getattr(self.generator, name)

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, key={self.key})"


def gamma_draw(shape, rate, rng):
    """Draw from Gamma(shape, rate); broadcasts over array arguments.

    Shapes below one are boosted: ``G(a) = G(a + 1) * U**(1/a)``, carried out
    in log space so that very small shapes do not collapse to exactly zero.
    Results are floored at the smallest normal double.
    """
    shape = np.asarray(shape, dtype=float)
    rate = np.asarray(rate, dtype=float)
    if np.any(~(shape > 0)) or np.any(~(rate > 0)):
        raise ParameterError("gamma_draw requires shape > 0 and rate > 0")
    shape, rate = np.broadcast_arrays(shape, rate)
    small = shape < 1.0
    boosted = np.where(small, shape + 1.0, shape)
    g = rng.standard_gamma(boosted)
    if np.any(small):
        u = rng.uniform(size=shape.shape)
        with np.errstate(divide="ignore", over="ignore"):
            logg = np.log(g) + np.where(small, np.log(u) / shape, 0.0)
        g = np.exp(logg)
    out = np.maximum(g / rate, TINY)
    return float(out) if out.ndim == 0 else out


def log_gamma_draw(shape, rng):
    """Log of a Gamma(shape, 1) draw, exact even when the draw underflows."""
    shape = np.asarray(shape, dtype=float)
    if np.any(~(shape > 0)):
        raise ParameterError("log_gamma_draw requires shape > 0")
    small = shape < 1.0
    g = rng.standard_gamma(np.where(small, shape + 1.0, shape))
    u = rng.uniform(size=shape.shape)
    with np.errstate(divide="ignore"):
        return np.log(g) + np.where(small, np.log(u) / shape, 0.0)


def dirichlet_draw(masses, rng) -> np.ndarray:
    """Dirichlet draw as normalised Gammas; every entry is strictly positive."""
    masses = np.asarray(masses, dtype=float)
    if masses.ndim != 1 or masses.size == 0:
        raise ParameterError("dirichlet_draw needs a non-empty vector of masses")
    if np.any(~(masses > 0)):
        raise ParameterError("Dirichlet masses must be positive")
    logg = log_gamma_draw(masses, rng)
    logg -= logg.max()
    p = np.exp(logg)
    p = np.maximum(p / p.sum(), TINY)
    return p / p.sum()


def crp_table_count(n: int, mass: float, rng) -> int:
    """Number of occupied tables after seating ``n`` customers in a CRP.

    Customer ``i`` (0-based) opens a new table with probability
    ``mass / (i + mass)``.
    """
    if n < 0:
        raise ParameterError("customer count must be non-negative")
    if not mass > 0:
        raise ParameterError("CRP mass must be positive")
    if n == 0:
        return 0
    i = np.arange(n)
    return int(np.count_nonzero(rng.uniform(size=n) < mass / (i + mass)))


SEAT_DIRECT = 4096


def _seat_large(n: int, mass: float, rng) -> int:
    """Exact table count for a large ``n`` at a cost that grows like ``mass * log(n)``.

    The first ``SEAT_DIRECT`` customers are seated one by one. The rest go in
    doubling blocks ``[lo, 2 lo)``. Within a block the new-table probabilities
    are bounded by ``p = mass / (lo + mass)``, so each customer's Bernoulli is
    split into a Bernoulli(p) candidate and an acceptance with the ratio to the
    bound. The candidates are drawn as a binomial count at uniform positions.
    """
    i = np.arange(SEAT_DIRECT)
    tables = int(np.count_nonzero(rng.uniform(size=SEAT_DIRECT) < mass / (i + mass)))
    lo = SEAT_DIRECT
    while lo < n:
        hi = min(n, 2 * lo)
        bound = mass / (lo + mass)
        k = int(rng.binomial(hi - lo, bound))
        if k:
            pos = lo + rng.choice(hi - lo, size=k, replace=False)
            accept = (mass / (pos + mass)) / bound
            tables += int(np.count_nonzero(rng.uniform(size=k) < accept))
        lo = hi
    return tables


def crp_table_counts(counts, masses, rng) -> np.ndarray:
    """Vectorised :func:`crp_table_count` over matching arrays of counts and masses.

    Entries with zero customers get zero tables and may carry any mass.
    Entries above ``SEAT_DIRECT`` customers use an exact thinned sampler, so
    memory stays bounded however many failed jumps the chain carries.
    """
    counts = np.asarray(counts)
    masses = np.broadcast_to(np.asarray(masses, dtype=float), counts.shape)
    flat = counts.ravel().astype(np.int64)
    if np.any(flat < 0):
        raise ParameterError("customer counts must be non-negative")
    out = np.zeros(flat.shape, dtype=np.int64)
    busy = np.flatnonzero(flat)
    if busy.size == 0:
        return out.reshape(counts.shape)
    mass = masses.ravel()[busy]
    if np.any(~(mass > 0)):
        raise ParameterError("CRP mass must be positive where customers are seated")
    reps = flat[busy]
    large = reps > SEAT_DIRECT
    for k in np.flatnonzero(large):
        out[busy[k]] = _seat_large(int(reps[k]), float(mass[k]), rng)
    busy, mass, reps = busy[~large], mass[~large], reps[~large]
    total = int(reps.sum())
    if total == 0:
        return out.reshape(counts.shape)
    owner = np.repeat(np.arange(busy.size), reps)
    starts = np.cumsum(reps) - reps
    seat = np.arange(total) - np.repeat(starts, reps)
    m = np.repeat(mass, reps)
    new_table = rng.uniform(size=total) < m / (seat + m)
    out[busy] = np.bincount(owner, weights=new_table, minlength=busy.size).astype(np.int64)
    return out.reshape(counts.shape)


STIRLING_MAX_N = 12


def unsigned_stirling_first(n: int) -> list[int]:
    """Row ``s(n, 0..n)`` of unsigned Stirling numbers of the first kind."""
    if n < 0:
        raise ParameterError("n must be non-negative")
    row = [1]
    for k in range(n):
        nxt = [0] * (k + 2)
        for m in range(k + 2):
            nxt[m] = (k * row[m] if m <= k else 0) + (row[m - 1] if m >= 1 else 0)
        row = nxt
    return row


def stirling_pmf_oracle(n: int, mass: float) -> np.ndarray:
    """Exact pmf over m = 0..n proportional to ``s(n, m) * mass**m``.

    Test oracle only; capped at n = 12.
    """
    if n > STIRLING_MAX_N:
        raise ParameterError(f"stirling oracle is limited to n <= {STIRLING_MAX_N}")
    if not mass > 0:
        raise ParameterError("mass must be positive")
    s = unsigned_stirling_first(n)
    w = np.array([s[m] * mass**m for m in range(n + 1)], dtype=float)
    return w / w.sum()


@dataclass
class LogConcaveTarget:
    """A univariate log-concave density known up to a constant.

    ``lower``/``upper`` delimit the support; ``start`` seeds the outward
    bracketing search for initial hull abscissae.
    """

    log_density: Callable[[float], float]
    log_density_gradient: Callable[[float], float]
    lower: float = -math.inf
    upper: float = math.inf
    lower_open: bool = True
    start: float = 1.0


class _Hull:
    """Tangent-based upper hull and chord-based squeeze for ARS."""

    def __init__(self, target: LogConcaveTarget, xs):
        self.target = target
        self.x = np.empty(0)
        self.h = np.empty(0)
        self.dh = np.empty(0)
        for x in xs:
            self._insert(x, *self._eval(x))
        self._rebuild()

    def _eval(self, x):
        h = float(self.target.log_density(x))
        dh = float(self.target.log_density_gradient(x))
        if not (np.isfinite(h) and np.isfinite(dh)):
            raise IntegrityError(f"log density or gradient not finite at abscissa {x!r}")
        return h, dh

    def _insert(self, x, h, dh):
        i = int(np.searchsorted(self.x, x))
        if i < self.x.size and self.x[i] == x:
            return
        self.x = np.insert(self.x, i, x)
        self.h = np.insert(self.h, i, h)
        self.dh = np.insert(self.dh, i, dh)
        self._check_concave()

    def _check_concave(self):
        x, h, dh = self.x, self.h, self.dh
        if x.size < 2:
            return
        scale = 1e-8 * (1.0 + np.abs(dh[:-1]) + np.abs(dh[1:]))
        bad = np.flatnonzero(dh[1:] > dh[:-1] + scale)
        if bad.size:
            raise IntegrityError(
                f"log density is not concave: gradient increases between "
                f"abscissae {x[bad[0]]!r} and {x[bad[0] + 1]!r}"
            )
        gap = h[1:] - (h[:-1] + dh[:-1] * (x[1:] - x[:-1]))
        tol = 1e-8 * (1.0 + np.abs(h[1:]))
        bad = np.flatnonzero(gap > tol)
        if bad.size:
            raise IntegrityError(
                f"log density is not concave: lies above its tangent at abscissa {x[bad[0] + 1]!r}"
            )

    def _rebuild(self):
        x, h, dh = self.x, self.h, self.dh
        k = x.size
        z = np.empty(k + 1)
        z[0], z[-1] = self.target.lower, self.target.upper
        if k > 1:
            ddh = dh[:-1] - dh[1:]
            with np.errstate(divide="ignore", invalid="ignore"):
                zi = (h[1:] - h[:-1] - x[1:] * dh[1:] + x[:-1] * dh[:-1]) / ddh
            mid = 0.5 * (x[:-1] + x[1:])
            zi = np.where(np.isfinite(zi) & (ddh > 1e-12 * (1 + np.abs(dh[:-1]))), zi, mid)
            z[1:-1] = np.clip(zi, x[:-1], x[1:])
        self.z = z
        self.log_mass = np.array([self._segment_log_mass(i) for i in range(k)])
        m = self.log_mass.max()
        if not np.isfinite(m):
            raise IntegrityError("upper hull is improper; bracket the mode on unbounded sides")
        w = np.exp(self.log_mass - m)
        self.cum = np.cumsum(w) / w.sum()

    def _segment_log_mass(self, i):
        a, b = self.z[i], self.z[i + 1]
        s, hx, x = self.dh[i], self.h[i], self.x[i]
        if b <= a:
            return -np.inf
        if abs(s) < 1e-300:
            return hx + math.log(b - a) if np.isfinite(b - a) else np.inf
        if s > 0:
            if not np.isfinite(b):
                return np.inf
            hb = hx + s * (b - x)
            width = b - a
            return hb + math.log(-math.expm1(-s * width)) - math.log(s) if np.isfinite(width) else hb - math.log(s)
        if not np.isfinite(a):
            return np.inf
        ha = hx + s * (a - x)
        width = b - a
        return ha + math.log(-math.expm1(s * width)) - math.log(-s) if np.isfinite(width) else ha - math.log(-s)

    def upper_at(self, xv):
        i = int(np.searchsorted(self.z[1:-1], xv))
        return self.h[i] + self.dh[i] * (xv - self.x[i])

    def lower_at(self, xv):
        x = self.x
        if xv < x[0] or xv > x[-1] or x.size < 2:
            return -np.inf
        i = min(int(np.searchsorted(x, xv, side="right")) - 1, x.size - 2)
        t = (xv - x[i]) / (x[i + 1] - x[i])
        return (1 - t) * self.h[i] + t * self.h[i + 1]

    def draw_upper(self, rng):
        i = int(np.searchsorted(self.cum, rng.uniform(), side="right"))
        i = min(i, self.x.size - 1)
        a, b = self.z[i], self.z[i + 1]
        s = self.dh[i]
        u = rng.uniform()
        if abs(s) < 1e-300:
            return a + u * (b - a)
        if s < 0:
            if np.isfinite(b):
                return a + math.log1p(u * math.expm1(s * (b - a))) / s
            return a + math.log1p(-u) / s
        if np.isfinite(a):
            return b + math.log1p(u * math.expm1(-s * (b - a))) / s
        return b + math.log1p(-u) / s

    def add(self, x, h, dh):
        self._insert(x, h, dh)
        self._rebuild()


def _bracket(target: LogConcaveTarget) -> list[float]:
    """Initial abscissae: start point plus outward doubling until the mode is bracketed."""
    lo, hi = target.lower, target.upper
    x0 = float(target.start)
    if not (lo < x0 < hi):
        if np.isfinite(lo) and np.isfinite(hi):
            x0 = 0.5 * (lo + hi)
        elif np.isfinite(lo):
            x0 = lo + 1.0
        else:
            x0 = hi - 1.0
    grad = target.log_density_gradient
    pts = [x0]
    g0 = grad(x0)
    if not np.isfinite(g0):
        raise IntegrityError(f"gradient not finite at starting abscissa {x0!r}")
    if g0 >= 0:
        if np.isfinite(hi):
            pts.append(x0 + 0.5 * (hi - x0))
        else:
            step = 1.0
            x = x0 + step
            for _ in range(1100):
                if grad(x) < 0:
                    break
                step *= 2.0
                x = x0 + step
            else:
                raise IntegrityError("could not find an abscissa with negative gradient")
            pts.append(x)
    if g0 <= 0:
        if np.isfinite(lo):
            pts.append(lo + 0.5 * (x0 - lo))
        else:
            step = 1.0
            x = x0 - step
            for _ in range(1100):
                if grad(x) > 0:
                    break
                step *= 2.0
                x = x0 - step
            else:
                raise IntegrityError("could not find an abscissa with positive gradient")
            pts.append(x)
    return sorted(set(pts))


def ars_sample(target: LogConcaveTarget, rng, size: int | None = None, max_points: int = 60):
    """Adaptive rejection sampling from a log-concave density.

    Returns one float, or an array when ``size`` is given (the hull is
    shared across the draws). Raises :class:`IntegrityError` when concavity
    is violated at an evaluated abscissa.
    """
    hull = _Hull(target, _bracket(target))
    n = 1 if size is None else int(size)
    out = np.empty(n)
    got = 0
    while got < n:
        x = hull.draw_upper(rng)
        if not (target.lower <= x <= target.upper) or not np.isfinite(x):
            continue
        ux = hull.upper_at(x)
        logw = math.log(rng.uniform())
        if logw <= hull.lower_at(x) - ux:
            out[got] = x
            got += 1
            continue
        hx = float(target.log_density(x))
        accept = logw <= hx - ux
        if hull.x.size < max_points and np.isfinite(hx):
            dhx = float(target.log_density_gradient(x))
            if np.isfinite(dhx):
                hull.add(x, hx, dhx)
        if accept:
            out[got] = x
            got += 1
    return float(out[0]) if size is None else out


def leapfrog(position, momentum, grad, step: float, steps: int):
    """Leapfrog integration for H(q, p) = -log pi(q) + |p|^2 / 2.

    ``grad`` returns the gradient of the log density (not of the potential).
    Raises :class:`DivergenceError` when a visited gradient is non-finite.
    """
    q = np.array(position, dtype=float, copy=True)
    p = np.array(momentum, dtype=float, copy=True)
    if steps == 0:
        return q, p
    if not step > 0:
        raise ParameterError("leapfrog step must be positive")
    g = np.asarray(grad(q), dtype=float)
    if not np.all(np.isfinite(g)):
        raise DivergenceError("non-finite gradient at start of trajectory")
    p = p + 0.5 * step * g
    for i in range(steps):
        q = q + step * p
        g = np.asarray(grad(q), dtype=float)
        if not np.all(np.isfinite(g)):
            raise DivergenceError(f"non-finite gradient at leapfrog step {i + 1}")
        if i < steps - 1:
            p = p + step * g
    p = p + 0.5 * step * g
    return q, p
