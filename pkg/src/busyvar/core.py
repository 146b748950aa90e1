"""Busy-period mean and variance of the M/G/infinity queue.

Three independent routes to the variance:

* :func:`variance_integral` -- direct quadrature of
  ``(2 e^rho / lambda) int_0^inf (e^{lambda h(t)} - 1) dt - mean^2``;
* :func:`variance_series` -- expansion of the exponential in powers of the
  integrated tail, driven by the ``b_n`` coefficients;
* :func:`variance_mm_exact` / :func:`variance_md_exact` -- closed forms for
  exponential and constant service.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .dist import Deterministic, Exponential, ServiceTimeModel
from .errors import InfiniteMomentError, LoadRangeError
from .numerics import DEFAULT_ABS_TOL, DEFAULT_REL_TOL, integrate_semi_infinite, sum_series

__all__ = [
    "RHO_MAX",
    "Method",
    "QueueInput",
    "VarianceResult",
    "traffic_intensity",
    "mean_busy_period",
    "tail_exp_integral",
    "variance_integral",
    "b_coefficient",
    "variance_series",
    "variance_mm_exact",
    "variance_md_exact",
    "mm_series",
]

# e^{2 rho} stays representable up to rho ~ 354
RHO_MAX = 300.0


class Method(str, enum.Enum):
    INTEGRAL = "integral"
    SERIES = "series"
    SERIES_AS_PRINTED = "series_as_printed"
    MM_EXACT = "mm_exact"
    MD_EXACT = "md_exact"


@dataclass(frozen=True)
class QueueInput:
    """Arrival rate plus service model."""

    lam: float
    model: ServiceTimeModel

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"arrival rate must be positive and finite, got {self.lam!r}")
        if not math.isfinite(self.model.mean):
            raise InfiniteMomentError(f"{self.model} has an infinite mean; traffic intensity is undefined")

    @property
    def rho(self) -> float:
        return self.lam * self.model.mean


@dataclass(frozen=True)
class VarianceResult:
    value: float
    method: Method
    err_est: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def is_infinite(self):
        return math.isinf(self.value)


def _guard(rho):
    if not rho <= RHO_MAX:
        raise LoadRangeError(f"traffic intensity {rho!r} exceeds the overflow guard {RHO_MAX}")


def traffic_intensity(q: QueueInput) -> float:
    return q.rho


def mean_busy_period(q: QueueInput) -> float:
    """``(e^rho - 1) / lambda``."""
    _guard(q.rho)
    return math.expm1(q.rho) / q.lam


def tail_exp_integral(q: QueueInput, abs_tol=DEFAULT_ABS_TOL, rel_tol=DEFAULT_REL_TOL):
    """``int_0^inf (e^{lambda h(t)} - 1) dt`` by quadrature; returns a QuadResult."""
    lam, model = q.lam, q.model

    def f(t):
        return np.expm1(lam * model.integrated_tail(t))

    return integrate_semi_infinite(f, abs_tol=abs_tol, rel_tol=rel_tol,
                                   scale=model.mean, breakpoints=model.breakpoints)


def _infinite(method, mom):
    return VarianceResult(math.inf, method, 0.0, {"reason": "infinite second moment", "mu2": mom.mu2})


def variance_integral(q: QueueInput, rel_tol=DEFAULT_REL_TOL, abs_tol=DEFAULT_ABS_TOL) -> VarianceResult:
    """Busy-period variance by direct quadrature of the tail-exponential integral."""
    mom = q.model.moments()
    if not math.isfinite(mom.mu2):
        return _infinite(Method.INTEGRAL, mom)
    rho, lam = q.rho, q.lam
    _guard(rho)
    quad = tail_exp_integral(q, abs_tol=abs_tol, rel_tol=rel_tol)
    factor = 2.0 * math.exp(rho) / lam
    mean = math.expm1(rho) / lam
    value = factor * quad.value - mean * mean
    err = factor * quad.abs_err_est + 4 * np.finfo(float).eps * factor * abs(quad.value)
    return VarianceResult(max(value, 0.0), Method.INTEGRAL, err,
                          {"evaluations": quad.evaluations, "integral": quad.value})


def b_coefficient(model: ServiceTimeModel, n: int, rel_tol=1e-12) -> float:
    """``2(n+2) int_0^inf h(v)^{n+1} dv / (alpha^{n+2} (1 + gamma_s^2))``.

    Always lies between ``2/(1+gamma_s^2)`` and 2, with ``b_0 = 2``.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    mom = model.moments()
    if not math.isfinite(mom.mu2):
        raise InfiniteMomentError(f"{model} has an infinite second moment")
    if isinstance(model, Exponential):
        return (n + 2) / (n + 1)
    if isinstance(model, Deterministic):
        return 2.0
    alpha = mom.alpha

    def f(v):
        return (model.integrated_tail(v) / alpha) ** (n + 1)

    # quadrature-tail families share one node set across n so cached tails get reused
    scale = alpha / (n + 1) if model.has_closed_tail else alpha
    quad = integrate_semi_infinite(f, abs_tol=0.0, rel_tol=rel_tol, scale=scale,
                                   breakpoints=model.breakpoints)
    return 2 * (n + 2) * (quad.value / alpha) / (1 + mom.gamma_s2)


def _log_ratio_term(rho, n):
    """``rho^n / n!`` without overflow in the intermediate powers."""
    return math.exp(n * math.log(rho) - math.lgamma(n + 1))


def variance_series(q: QueueInput, tol=1e-13, max_terms=500, corrected=True) -> VarianceResult:
    """Busy-period variance from the ``b_n`` series.

    With ``corrected=False`` the ``n >= 3`` sum is used without the
    ``(1 + gamma_s^2)`` factor; that form underestimates the variance of any
    non-deterministic service and is kept only to reproduce the reference values.
    """
    mom = q.model.moments()
    method = Method.SERIES if corrected else Method.SERIES_AS_PRINTED
    if not math.isfinite(mom.mu2):
        return _infinite(method, mom)
    rho, lam = q.rho, q.lam
    _guard(rho)
    floor = 2.0 / (1.0 + mom.gamma_s2)
    # 0 <= b_{n-2} - floor <= 2 - floor
    spread = 2.0 - floor
    head = _md_numerator(rho) / lam ** 2 + math.exp(rho) * mom.sigma2
    factor = (1.0 + mom.gamma_s2) if corrected else 1.0
    scale = math.exp(rho) / lam ** 2 * factor
    if rho == 0.0 or spread == 0.0:
        return VarianceResult(max(head, 0.0), method, 4 * np.finfo(float).eps * abs(head),
                              {"terms_used": 0})

    def term(n):
        return _log_ratio_term(rho, n) * (b_coefficient(q.model, n - 2) - floor)

    def tail(n, _t):
        r = rho / (n + 2)
        if r >= 1:
            return math.inf
        return spread * _log_ratio_term(rho, n + 1) / (1 - r)

    res = sum_series(term, tol=tol, max_terms=max_terms, start=3, tail_bound=tail)
    value = head + scale * res.value
    err = scale * res.truncation_bound + 1e-12 * abs(scale * res.value) + 4 * np.finfo(float).eps * abs(head)
    return VarianceResult(max(value, 0.0), method, err,
                          {"terms_used": res.terms_used, "corrected": corrected})


def mm_series(rho, tol=1e-16, max_terms=500, decay=1.0):
    """``sum_{n>=1} rho^n q^n / (n n!)`` with ``q = decay``; returns a SeriesResult."""
    if rho == 0.0:
        return sum_series(lambda n: 0.0, tol=tol, max_terms=max_terms)
    log_rho = math.log(rho)
    log_q = math.log(decay)

    def term(n):
        return math.exp(n * (log_rho + log_q) - math.lgamma(n + 1)) / n

    # term_{m+1}/term_m = rho q m / (m+1)^2 <= rho q / (m+1)
    return sum_series(term, tol=tol, max_terms=max_terms, ratio_bound=lambda n: rho * decay / (n + 1))


def variance_mm_exact(lam: float, rho: float, tol=1e-16) -> VarianceResult:
    """Exact busy-period variance for exponential service."""
    _guard(rho)
    s = mm_series(rho, tol=tol)
    # 2e^rho(1 + rho S) - e^{2rho} - 1 == 2 rho e^rho S - (e^rho - 1)^2
    a = 2 * rho * math.exp(rho) * s.value
    b = math.expm1(rho) ** 2
    value = (a - b) / lam ** 2
    err = (2 * rho * math.exp(rho) * s.truncation_bound + 4 * np.finfo(float).eps * (a + b)) / lam ** 2
    return VarianceResult(value, Method.MM_EXACT, err, {"terms_used": s.terms_used})


def variance_md_exact(lam: float, rho: float) -> VarianceResult:
    """Exact busy-period variance for constant service: ``(e^{2rho} - 2 rho e^rho - 1)/lambda^2``."""
    _guard(rho)
    value = _md_numerator(rho) / lam ** 2
    return VarianceResult(value, Method.MD_EXACT, 8 * np.finfo(float).eps * value, {})


def _md_numerator(rho):
    """``e^{2rho} - 2 rho e^rho - 1``, via its positive series below rho = 1."""
    if rho >= 1.0:
        return math.expm1(2 * rho) - 2 * rho * math.exp(rho)
    # sum_{n>=3} (2^n - 2n) rho^n / n!
    return sum_series(lambda n: (2.0 ** n - 2 * n) * rho ** n / math.factorial(n),
                      tol=1e-17, start=3, ratio_bound=lambda n: 2 * rho / (n + 1)).value
