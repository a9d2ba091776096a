"""Seeded Monte Carlo estimates for the RRS link.

Draws of ``|H|`` come from :func:`rrsfading.sumdist.sample_chunk`, one
independent substream per chunk.  Each chunk is reduced to a small record
(count, sum, sum of squares, ...) and the records are combined in chunk
order, so every estimate is a deterministic function of
``(seed, samples, chunk_size)`` no matter how many workers run.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import linkmetrics, sumdist
from .errors import ParameterError

MIN_SAMPLES = 1000
MAX_MOMENT_ORDER = 8
JACKKNIFE_GROUPS = 1000


@dataclass(frozen=True)
class McConfig:
    seed: int
    samples: int
    chunk_size: int = sumdist.DEFAULT_CHUNK
    confidence: float = 0.99
    workers: int = 1

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ParameterError("seed must be a 64-bit unsigned integer")
        if self.samples < MIN_SAMPLES:
            raise ParameterError(f"need at least {MIN_SAMPLES} samples for a valid interval, got {self.samples}")
        if self.chunk_size < 1:
            raise ParameterError("chunk_size must be positive")
        if not 0 < self.confidence < 1:
            raise ParameterError("confidence must lie in (0, 1)")
        if self.workers < 1:
            raise ParameterError("workers must be at least 1")

    @property
    def z(self):
        return float(stats.norm.ppf(0.5 + self.confidence / 2))


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    ci_low: float
    ci_high: float
    samples_used: int

    def contains(self, value, sigmas=None):
        """Interval test; ``sigmas`` switches from the CI to ``mean +- k*SE``."""
        if sigmas is None:
            return self.ci_low <= value <= self.ci_high
        return abs(value - self.mean) <= sigmas * self.std_error


def _estimate(mean, se, n, z):
    return McEstimate(mean, se, mean - z * se, mean + z * se, n)


def _map_chunks(d, cfg, reducer):
    """Apply ``reducer(draws)`` to every chunk; results in chunk order."""
    sizes = sumdist.chunk_sizes(cfg.samples, cfg.chunk_size)

    def job(i):
        return reducer(sumdist.sample_chunk(d, cfg.seed, i, sizes[i]))

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(job, range(len(sizes))))
    return [job(i) for i in range(len(sizes))]


def _mean_of(d, cfg, fn):
    """Sample mean and standard error of ``fn(draws)``."""
    parts = _map_chunks(d, cfg, lambda x: _moments_of(fn(x)))
    n = sum(p[0] for p in parts)
    s1 = math.fsum(p[1] for p in parts)
    s2 = math.fsum(p[2] for p in parts)
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0) * n / (n - 1)
    return mean, math.sqrt(var / n), n


def _moments_of(v):
    return len(v), math.fsum(v), math.fsum(v * v)


def mc_outage(s, cfg):
    """Fraction of draws with received SNR below the threshold."""
    if s.gamma_thr == 0:
        return McEstimate(0.0, 0.0, 0.0, 0.0, cfg.samples)
    r_thr = math.sqrt(s.gamma_thr / s.snr_gain)
    parts = _map_chunks(s.dist, cfg, lambda x: int(np.count_nonzero(x < r_thr)))
    p = sum(parts) / cfg.samples
    se = math.sqrt(p * (1 - p) / cfg.samples)
    return _estimate(p, se, cfg.samples, cfg.z)


def mc_capacity(s, cfg):
    g = s.snr_gain
    mean, se, n = _mean_of(s.dist, cfg, lambda x: s.bandwidth * np.log2(1.0 + g * x * x))
    return _estimate(mean, se, n, cfg.z)


def mc_bep(s, mod, cfg):
    """Semi-analytic BEP: conditional BEP averaged over channel draws."""
    g = s.snr_gain
    mean, se, n = _mean_of(s.dist, cfg, lambda x: linkmetrics.conditional_bep(mod, g * x * x))
    return _estimate(mean, se, n, cfg.z)


def _group_stats(d, cfg, orders):
    """Count and power sums of ``|H|**n`` per jackknife block.

    Blocks are slices of each chunk, sized so there are about
    ``JACKKNIFE_GROUPS`` of them in total.
    """
    block = max(1, math.ceil(cfg.samples / JACKKNIFE_GROUPS))

    def reduce(x):
        out = []
        for i in range(0, len(x), block):
            xb = x[i:i + block]
            x2 = xb * xb
            out.append((len(xb), {n: math.fsum(xb ** n) if n % 2 else math.fsum(x2 ** (n // 2))
                                  for n in orders}))
        return out

    return [g for part in _map_chunks(d, cfg, reduce) for g in part]


def _jackknife(parts, stat):
    """Grouped jackknife over blocks; returns ``(estimate, std_error)``."""
    n_tot = sum(p[0] for p in parts)
    keys = parts[0][1].keys()
    totals = {k: math.fsum(p[1][k] for p in parts) for k in keys}
    full = stat({k: totals[k] / n_tot for k in keys})
    g = len(parts)
    if g < 2:
        return full, 0.0
    loo = []
    for cnt, sums in parts:
        rest = n_tot - cnt
        loo.append(stat({k: (totals[k] - sums[k]) / rest for k in keys}))
    loo = np.array(loo)
    var = (g - 1) / g * float(np.sum((loo - loo.mean()) ** 2))
    return full, math.sqrt(var)


def mc_moments(d, cfg, orders):
    """Sample moments ``E|H|**n`` with jackknife errors, keyed by order."""
    orders = [int(n) for n in orders]
    for n in orders:
        if n < 0:
            raise ParameterError(f"moment order must be nonnegative, got {n}")
        if n > MAX_MOMENT_ORDER:
            raise ParameterError(f"moment orders above {MAX_MOMENT_ORDER} are not supported, got {n}")
    wanted = sorted({n for n in orders if n > 0})
    out = {}
    parts = _group_stats(d, cfg, wanted) if wanted else []
    for n in orders:
        if n == 0:
            out[n] = McEstimate(1.0, 0.0, 1.0, 1.0, cfg.samples)
            continue
        mean, se = _jackknife(parts, lambda mu, n=n: mu[n])
        out[n] = _estimate(mean, se, cfg.samples, cfg.z)
    return out


def mc_aof(d, cfg):
    """AoF estimate ``E|H|^4 / (E|H|^2)^2 - 1`` with jackknife error."""
    parts = _group_stats(d, cfg, [2, 4])
    mean, se = _jackknife(parts, lambda mu: mu[4] / mu[2] ** 2 - 1.0)
    return _estimate(mean, se, cfg.samples, cfg.z)


def mc_charfn(d, cfg, t):
    """``(E cos(t|H|), E sin(t|H|))`` as two estimates."""
    re = _mean_of(d, cfg, lambda x: np.cos(t * x))
    im = _mean_of(d, cfg, lambda x: np.sin(t * x))
    return _estimate(*re, cfg.z), _estimate(*im, cfg.z)
