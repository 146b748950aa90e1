"""Monte Carlo busy periods of the M/G/infinity queue.

With infinitely many servers departures never interact, so a busy period
is fully described by its start and the latest departure scheduled so far.
Arrivals are scanned in order: one arriving before that departure extends it
to ``max(cover, t + S)``, the first one after it closes the period and opens
the next.  Memory is constant per stream and no event calendar is needed.

Streams are independent: stream ``i`` draws from
``PCG64(SeedSequence(seed, spawn_key=(i,)))`` and its statistics are merged
in index order, so results depend only on ``(seed, n_streams)``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import _kernels
from .dist import ServiceTimeModel, format_spec
from .errors import InfiniteMomentError, SampleSizeError

__all__ = [
    "SimConfig",
    "SimStats",
    "RunningMoments",
    "simulate",
    "simulate_busy_periods",
    "busy_period_samples",
    "write_samples",
    "MAX_SAMPLES",
]

MAX_SAMPLES = 10 ** 8
BLOCK = 1 << 16


@dataclass(frozen=True)
class SimConfig:
    lam: float
    model: ServiceTimeModel
    n_busy_periods: int
    seed: int = 0
    n_streams: int = 1

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError("arrival rate must be positive and finite")
        if not math.isfinite(self.model.mean):
            raise InfiniteMomentError(f"{self.model} has an infinite mean; busy periods are not finite on average")
        if int(self.n_busy_periods) < 1:
            raise ValueError("n_busy_periods must be >= 1")
        if int(self.n_streams) < 1:
            raise ValueError("n_streams must be >= 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")

    def stream_sizes(self):
        base, extra = divmod(int(self.n_busy_periods), int(self.n_streams))
        return [base + (1 if i < extra else 0) for i in range(int(self.n_streams))]

    def stream_seed(self, index):
        return np.random.SeedSequence(int(self.seed), spawn_key=(index,))


class RunningMoments:
    """Count, mean and central sums of powers 2-4, mergeable (Chan/Pebay)."""

    __slots__ = ("n", "mean", "m2", "m3", "m4")

    def __init__(self, n=0, mean=0.0, m2=0.0, m3=0.0, m4=0.0):
        self.n, self.mean, self.m2, self.m3, self.m4 = n, mean, m2, m3, m4

    @classmethod
    def from_array(cls, x):
        x = np.asarray(x, dtype=float)
        if x.size == 0:
            return cls()
        mean = float(x.mean())
        d = x - mean
        d2 = d * d
        return cls(x.size, mean, float(d2.sum()), float((d2 * d).sum()), float((d2 * d2).sum()))

    def merge(self, other):
        na, nb = self.n, other.n
        if nb == 0:
            return RunningMoments(na, self.mean, self.m2, self.m3, self.m4)
        if na == 0:
            return RunningMoments(nb, other.mean, other.m2, other.m3, other.m4)
        n = na + nb
        delta = other.mean - self.mean
        d_n = delta / n
        mean = self.mean + nb * d_n
        m2 = self.m2 + other.m2 + delta * d_n * na * nb
        m3 = (self.m3 + other.m3 + delta * d_n * d_n * na * nb * (na - nb)
              + 3 * d_n * (na * other.m2 - nb * self.m2))
        m4 = (self.m4 + other.m4 + delta * d_n ** 3 * na * nb * (na * na - na * nb + nb * nb)
              + 6 * d_n * d_n * (na * na * other.m2 + nb * nb * self.m2)
              + 4 * d_n * (na * other.m3 - nb * self.m3))
        return RunningMoments(n, mean, m2, m3, m4)

    def update(self, x):
        merged = self.merge(RunningMoments.from_array(x))
        self.n, self.mean, self.m2, self.m3, self.m4 = merged.n, merged.mean, merged.m2, merged.m3, merged.m4

    @property
    def variance(self):
        return self.m2 / (self.n - 1) if self.n > 1 else 0.0


@dataclass(frozen=True)
class SimStats:
    n: int
    mean: float
    variance: float
    ci95_mean: tuple
    ci95_variance: tuple
    events: int
    seed: int
    n_streams: int

    def as_dict(self):
        return {
            "n": self.n,
            "mean": self.mean,
            "variance": self.variance,
            "ci95_mean": list(self.ci95_mean),
            "ci95_variance": list(self.ci95_variance),
            "events": self.events,
            "seed": self.seed,
            "n_streams": self.n_streams,
        }


def _run_stream(lam, model, n, seed_seq, keep):
    """Simulate ``n`` busy periods from one stream; returns (moments, samples, arrivals)."""
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    # a block of BLOCK arrivals completes at most BLOCK busy periods
    buf = np.empty(BLOCK)
    moments = RunningMoments()
    chunks = []
    done = 0
    events = 0
    t, cover, is_open = 0.0, 0.0, False
    while done < n:
        gaps = -np.log1p(-rng.random(BLOCK)) / lam
        services = np.ascontiguousarray(model.quantile(rng.random(BLOCK)), dtype=float)
        consumed, finished, t, cover, is_open = _kernels.scan(gaps, services, buf, 0, n - done,
                                                              t, cover, is_open)
        moments.update(buf[:finished])
        if keep:
            chunks.append(buf[:finished].copy())
        done += finished
        events += consumed
    samples = np.concatenate(chunks) if keep else None
    return moments, samples, events


def _run(cfg, keep):
    sizes = cfg.stream_sizes()
    jobs = [(cfg.lam, cfg.model, n, cfg.stream_seed(i), keep) for i, n in enumerate(sizes) if n > 0]
    workers = min(len(jobs), os.cpu_count() or 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda job: _run_stream(*job), jobs))
    else:
        results = [_run_stream(*job) for job in jobs]
    return results


def _pairwise_merge(items):
    while len(items) > 1:
        merged = [items[i].merge(items[i + 1]) for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            merged.append(items[-1])
        items = merged
    return items[0]


def _stats(moments, events, cfg):
    n = moments.n
    mean = moments.mean
    var = moments.variance
    if n > 1:
        half = float(stats.t.ppf(0.975, n - 1)) * math.sqrt(var / n)
        m4 = moments.m4 / n
        # large-sample variance of s^2 from the fourth central moment
        v_s2 = max((m4 - var * var * (n - 3) / (n - 1)) / n, 0.0)
        half_v = float(stats.norm.ppf(0.975)) * math.sqrt(v_s2)
    else:
        half = half_v = math.inf
    return SimStats(
        n=n,
        mean=float(mean),
        variance=float(var),
        ci95_mean=(mean - half, mean + half),
        ci95_variance=(max(var - half_v, 0.0), var + half_v),
        events=int(events),
        seed=int(cfg.seed),
        n_streams=int(cfg.n_streams),
    )


def simulate(cfg: SimConfig, keep_samples: bool = False):
    """Run once; return ``(stats, samples)`` with ``samples`` None unless kept."""
    if keep_samples and cfg.n_busy_periods > MAX_SAMPLES:
        raise SampleSizeError(f"{cfg.n_busy_periods} samples exceed the limit of {MAX_SAMPLES}")
    results = _run(cfg, keep=keep_samples)
    moments = _pairwise_merge([r[0] for r in results])
    st = _stats(moments, sum(r[2] for r in results), cfg)
    samples = np.concatenate([r[1] for r in results]) if keep_samples else None
    return st, samples


def simulate_busy_periods(cfg: SimConfig) -> SimStats:
    """Mean and variance of ``cfg.n_busy_periods`` simulated busy periods, with 95% intervals.

    The mean interval is a Student-t interval; the variance interval is the
    approximate large-sample normal interval.
    """
    results = _run(cfg, keep=False)
    moments = _pairwise_merge([r[0] for r in results])
    return _stats(moments, sum(r[2] for r in results), cfg)


def busy_period_samples(cfg: SimConfig) -> np.ndarray:
    """Raw busy-period lengths, streams concatenated in index order.

    Generation matches :func:`simulate_busy_periods` exactly.
    """
    if cfg.n_busy_periods > MAX_SAMPLES:
        raise SampleSizeError(f"{cfg.n_busy_periods} samples exceed the limit of {MAX_SAMPLES}")
    results = _run(cfg, keep=True)
    return np.concatenate([r[1] for r in results])


def write_samples(path, samples):
    """One length per line, shortest round-trip decimal text."""
    with open(path, "w") as fh:
        for x in samples:
            fh.write(f"{float(x)!r}\n")


def describe(cfg: SimConfig) -> dict:
    return {"lambda": cfg.lam, "dist": format_spec(cfg.model), "rho": cfg.lam * cfg.model.mean,
            "n": int(cfg.n_busy_periods), "seed": int(cfg.seed), "streams": int(cfg.n_streams)}
