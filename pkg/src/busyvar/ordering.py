"""Variability ordering of service times and of busy periods.

``G1 <=_V G2`` means equal means and ``h1(t) <= h2(t)`` for every ``t``,
where ``h`` is the integrated tail.  Ordered service implies ordered
busy-period variance; whether the busy periods themselves are ordered is
open, so :func:`empirical_busy_order` only looks for statistical evidence
against it in simulated samples.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from .core import QueueInput, VarianceResult, variance_integral
from .dist import ServiceTimeModel
from .errors import InfiniteMomentError

__all__ = [
    "Outcome",
    "MeanCheck",
    "OrderVerdict",
    "VarianceConsequence",
    "check_variability_order",
    "variance_consequence",
    "empirical_busy_order",
]


class Outcome(str, enum.Enum):
    HOLDS = "holds"
    FAILS = "fails"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class MeanCheck:
    passed: bool
    mean1: float
    mean2: float
    p_value: Optional[float] = None


@dataclass(frozen=True)
class OrderVerdict:
    """Outcome of a variability-order check.

    ``gap`` is the largest value of ``h1 - h2`` seen (positive means a
    violation); ``witness_t`` is where it occurred and is set only on failure.
    """

    outcome: Outcome
    witness_t: Optional[float]
    gap: float
    mean_check: MeanCheck
    effect_size: Optional[float] = None
    note: str = ""


@dataclass(frozen=True)
class VarianceConsequence:
    first: VarianceResult
    second: VarianceResult
    margin: float
    violated: bool


def _tails(m1, m2, t):
    return m1.integrated_tail(t) - m2.integrated_tail(t)


def check_variability_order(m1: ServiceTimeModel, m2: ServiceTimeModel, t_max_factor: float = 40.0,
                            n_grid: int = 512, tol: Optional[float] = None) -> OrderVerdict:
    """Test ``m1 <=_V m2`` on a geometric time grid.

    The grid spans ``(0, t_max_factor * max(mean1, mean2)]``; the worst grid
    point and its neighbourhood are refined twice before deciding.
    """
    a1, a2 = m1.mean, m2.mean
    if not (math.isfinite(a1) and math.isfinite(a2)):
        raise InfiniteMomentError("variability order needs finite means")
    scale = max(a1, a2)
    if tol is None:
        tol = 1e-9 * scale
    means = MeanCheck(abs(a1 - a2) <= tol, a1, a2)
    if not means.passed:
        return OrderVerdict(Outcome.INCONCLUSIVE, None, a1 - a2, means,
                            note="means differ; the order is undefined")
    t_max = t_max_factor * scale
    grid = np.concatenate([[0.0], np.geomspace(t_max * 1e-7, t_max, n_grid)])
    for b in (*m1.breakpoints, *m2.breakpoints):
        if 0 < b < t_max:
            grid = np.append(grid, b)
    grid = np.unique(grid)
    diff = _tails(m1, m2, grid)
    for _ in range(2):
        i = int(np.argmax(diff))
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, len(grid) - 1)]
        fine = np.linspace(lo, hi, 65)
        grid = np.unique(np.concatenate([grid, fine]))
        diff = _tails(m1, m2, grid)
    i = int(np.argmax(diff))
    gap = float(diff[i])
    if gap > tol:
        return OrderVerdict(Outcome.FAILS, float(grid[i]), gap, means)
    return OrderVerdict(Outcome.HOLDS, None, gap, means)


def variance_consequence(m1: ServiceTimeModel, m2: ServiceTimeModel, lam: float,
                         rel_tol: float = 1e-8) -> VarianceConsequence:
    """Busy-period variances of two ordered service models at the same arrival rate.

    Raises ``ValueError`` unless ``m1 <=_V m2`` holds.  A reported violation
    points to a numerical problem, not a counterexample.
    """
    verdict = check_variability_order(m1, m2)
    if verdict.outcome is not Outcome.HOLDS:
        raise ValueError(f"{m1} <=_V {m2} does not hold ({verdict.outcome.value})")
    v1 = variance_integral(QueueInput(lam, m1))
    v2 = variance_integral(QueueInput(lam, m2))
    margin = v2.value - v1.value
    violated = margin < -rel_tol * abs(v2.value)
    return VarianceConsequence(v1, v2, margin, violated)


def _tail_means(x_sorted, suffix, grid):
    """Empirical ``mean((X - t)^+)`` and ``mean(((X - t)^+)^2)`` at each grid point."""
    n = x_sorted.size
    idx = np.searchsorted(x_sorted, grid, side="right")
    count = n - idx
    s1 = suffix[0][idx]
    s2 = suffix[1][idx]
    first = (s1 - count * grid) / n
    second = (s2 - 2 * grid * s1 + count * grid * grid) / n
    return first, second


def _suffix_sums(x_sorted):
    s1 = np.concatenate([np.cumsum(x_sorted[::-1])[::-1], [0.0]])
    s2 = np.concatenate([np.cumsum((x_sorted ** 2)[::-1])[::-1], [0.0]])
    return s1, s2


def empirical_busy_order(samples1, samples2, n_grid: int = 256, alpha_level: float = 0.05,
                         min_size: int = 10_000) -> OrderVerdict:
    """Look for significant evidence against ``B1 <=_V B2`` in two sample sets.

    Means are compared with a two-sample z test.  The empirical integrated
    tails ``mean((B - t)^+)`` are compared on a shared grid with a one-sided
    z test per grid point, Bonferroni-adjusted.  ``holds`` only means that
    no violation was significant.
    """
    x1 = np.sort(np.asarray(samples1, dtype=float))
    x2 = np.sort(np.asarray(samples2, dtype=float))
    if x1.size < min_size or x2.size < min_size:
        raise ValueError(f"need at least {min_size} samples per set, got {x1.size} and {x2.size}")
    n1, n2 = x1.size, x2.size
    m1, m2 = float(x1.mean()), float(x2.mean())
    se = math.sqrt(x1.var(ddof=1) / n1 + x2.var(ddof=1) / n2)
    z = (m1 - m2) / se if se > 0 else (0.0 if m1 == m2 else math.inf)
    p = float(2 * stats.norm.sf(abs(z)))
    means = MeanCheck(p >= alpha_level, m1, m2, p)
    if not means.passed:
        return OrderVerdict(Outcome.INCONCLUSIVE, None, m1 - m2, means, effect_size=z,
                            note="sample means differ significantly")

    hi = float(np.quantile(np.concatenate([x1, x2]), 0.999))
    grid = np.linspace(0.0, hi, n_grid)
    f1, g1 = _tail_means(x1, _suffix_sums(x1), grid)
    f2, g2 = _tail_means(x2, _suffix_sums(x2), grid)
    var = np.maximum(g1 - f1 ** 2, 0.0) / n1 + np.maximum(g2 - f2 ** 2, 0.0) / n2
    sd = np.sqrt(var)
    diff = f1 - f2
    with np.errstate(divide="ignore", invalid="ignore"):
        zs = np.where(sd > 0, diff / sd, np.where(diff > 0, np.inf, 0.0))
    crit = stats.norm.isf(alpha_level / n_grid)
    i = int(np.argmax(zs))
    note = "statistical evidence only, not a proof"
    if zs[i] > crit:
        return OrderVerdict(Outcome.FAILS, float(grid[i]), float(diff[i]), means,
                            effect_size=float(zs[i]), note=note)
    return OrderVerdict(Outcome.HOLDS, None, float(diff.max()), means, effect_size=float(zs[i]), note=note)
