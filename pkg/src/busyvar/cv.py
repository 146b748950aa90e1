"""Coefficient of variation of the busy period.

``gamma_B^2 = 2 e^rho lambda beta / (e^rho - 1)^2 - 1`` with
``beta = e^rho int_0^inf (e^{-lambda int_0^t (1-G)} - e^{-rho}) dt``.
Because ``int_0^t (1-G) = alpha - h(t)``, the integrand equals
``e^{-rho} (e^{lambda h(t)} - 1)`` and ``beta`` is computed as
``int_0^inf (e^{lambda h(t)} - 1) dt``, which avoids subtracting two tiny
numbers far out in the tail.

When the service time is long compared with ``1/lambda``, ``gamma_B^2``
approaches 1, as for an exponential busy period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import QueueInput, _guard, tail_exp_integral
from .numerics import DEFAULT_ABS_TOL, DEFAULT_REL_TOL

__all__ = ["CvResult", "ExponentialityVerdict", "beta_integral", "cv_squared", "exponentiality_diagnostic"]


@dataclass(frozen=True)
class CvResult:
    beta: float
    gamma_B2: float
    err_est: float

    @property
    def exponentiality_gap(self):
        return abs(self.gamma_B2 - 1.0)


@dataclass(frozen=True)
class ExponentialityVerdict:
    gamma_B2: float
    gap: float
    threshold: float

    @property
    def approximately_exponential(self):
        return self.gap < self.threshold

    @property
    def label(self):
        return "approximately-exponential" if self.approximately_exponential else "not-exponential"


def beta_integral(q: QueueInput, rel_tol=DEFAULT_REL_TOL, abs_tol=DEFAULT_ABS_TOL):
    """``beta``; returns the QuadResult of the stabilised integral."""
    if not math.isfinite(q.model.moments().mu2):
        return None
    _guard(q.rho)
    return tail_exp_integral(q, abs_tol=abs_tol, rel_tol=rel_tol)


def cv_squared(q: QueueInput, rel_tol=DEFAULT_REL_TOL, abs_tol=DEFAULT_ABS_TOL) -> CvResult:
    rho, lam = q.rho, q.lam
    _guard(rho)
    quad = beta_integral(q, rel_tol=rel_tol, abs_tol=abs_tol)
    if quad is None:
        return CvResult(math.inf, math.inf, 0.0)
    factor = 2 * math.exp(rho) * lam / math.expm1(rho) ** 2
    gamma_b2 = factor * quad.value - 1.0
    return CvResult(quad.value, max(gamma_b2, 0.0), factor * quad.abs_err_est)


def exponentiality_diagnostic(q: QueueInput, threshold: float = 0.01, rel_tol=DEFAULT_REL_TOL,
                              abs_tol=DEFAULT_ABS_TOL) -> ExponentialityVerdict:
    """Report how far ``gamma_B^2`` sits from 1.

    The threshold is a reporting convention, not a statistical test.
    """
    res = cv_squared(q, rel_tol=rel_tol, abs_tol=abs_tol)
    return ExponentialityVerdict(res.gamma_B2, res.exponentiality_gap, threshold)
