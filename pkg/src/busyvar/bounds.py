"""Bounds on the busy-period variance.

``general_bounds`` needs only rho, lambda and the squared service CV.  The
improved M/M/infinity upper bound comes in two flavours: ``as_printed``
reproduces the reference table, ``corrected`` carries the ``(1+gamma_s^2) = 2``
factor of the series representation and is the only one that really bounds
the exact value from above.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

from scipy import special

from .core import RHO_MAX, VarianceResult, _guard, _md_numerator, mm_series, variance_mm_exact
from .errors import InfiniteMomentError

__all__ = [
    "Variant",
    "BoundsReport",
    "ClassComparison",
    "Table1Row",
    "TABLE1_RHOS",
    "TABLE1_PRINTED",
    "general_bounds",
    "improved_upper_mm",
    "dfr_lower",
    "imrl_lower",
    "class_comparison",
    "table1",
    "table1_footnotes",
]


class Variant(str, enum.Enum):
    GENERAL = "general_1_3"
    IMPROVED_AS_PRINTED = "improved_1_7_as_printed"
    IMPROVED_CORRECTED = "improved_1_7_corrected"
    DFR = "dfr_1_10"
    IMRL = "imrl_1_11"


@dataclass(frozen=True)
class BoundsReport:
    lower: Optional[float]
    upper: Optional[float]
    variant: Variant
    inputs: dict = field(default_factory=dict)
    err_est: float = 0.0

    @property
    def is_bound(self):
        """False for the as-printed improved column, which is not a valid upper bound."""
        return self.variant is not Variant.IMPROVED_AS_PRINTED


def general_bounds(lam: float, rho: float, gamma_s2: float) -> BoundsReport:
    """Bracket depending only on ``rho``, ``lambda`` and ``gamma_s^2``."""
    _guard(rho)
    if gamma_s2 < 0:
        raise ValueError("gamma_s2 must be >= 0")
    e = math.exp(rho)
    # e^{2rho} + e^rho rho^2 g - 2 rho e^rho - 1
    lower = max(_md_numerator(rho) + e * rho * rho * gamma_s2, 0.0) / lam ** 2
    # 2 e^rho (g+1)(e^rho - 1 - rho) - (e^rho - 1)^2
    excess = math.expm1(rho) - rho
    upper = (2 * e * (gamma_s2 + 1) * excess - math.expm1(rho) ** 2) / lam ** 2
    return BoundsReport(lower, upper, Variant.GENERAL,
                        {"lambda": lam, "rho": rho, "gamma_s2": gamma_s2})


def improved_upper_mm(lam: float, rho: float, M: int = 14, variant: str = "corrected") -> BoundsReport:
    """Truncated-series upper bound for exponential service.

    ``variant`` is ``"corrected"`` (factor 2 on the series part, a genuine
    bound) or ``"as_printed"`` (factor 1, reproduces the reference column).
    """
    _guard(rho)
    if M < 3:
        raise ValueError("M must be >= 3")
    if variant not in ("corrected", "as_printed"):
        raise ValueError(f"unknown variant {variant!r}")
    alpha = rho / lam
    e = math.exp(rho)
    head = math.fsum(math.exp(n * math.log(rho) - math.lgamma(n + 1)) / (n - 1) for n in range(3, M + 1)) \
        if rho > 0 else 0.0
    # e^rho - sum_{n<=M} rho^n/n! == e^rho P(M+1, rho)
    remainder = e * special.gammainc(M + 1, rho) / M
    factor = 2.0 if variant == "corrected" else 1.0
    value = _md_numerator(rho) / lam ** 2 + e * alpha * alpha + e / lam ** 2 * factor * (head + remainder)
    tag = Variant.IMPROVED_CORRECTED if variant == "corrected" else Variant.IMPROVED_AS_PRINTED
    return BoundsReport(None, value, tag, {"lambda": lam, "rho": rho, "M": M, "gamma_s2": 1.0})


def dfr_lower(lam: float, rho: float, gamma_s2: float) -> BoundsReport:
    """Lower bound for DFR service, written in terms of the squared service CV."""
    _guard(rho)
    decay = math.exp(-0.5 * (gamma_s2 - 1.0))
    s = mm_series(rho, decay=decay)
    raw = (2 * math.exp(rho) * rho * s.value - math.expm1(rho) ** 2) / lam ** 2
    return BoundsReport(max(raw, 0.0), None, Variant.DFR,
                        {"lambda": lam, "rho": rho, "gamma_s2": gamma_s2, "raw": raw},
                        err_est=2 * math.exp(rho) * rho * s.truncation_bound / lam ** 2)


def imrl_lower(lam: float, alpha: float, mu2: float, mu3: float) -> BoundsReport:
    """Lower bound for IMRL service from the first three raw moments."""
    if not (math.isfinite(mu2) and math.isfinite(mu3)):
        raise InfiniteMomentError("the IMRL bound needs finite second and third moments")
    rho = lam * alpha
    _guard(rho)
    shape = 2 * alpha * mu3 / (3 * mu2 * mu2) - 1.0
    s = mm_series(rho, decay=math.exp(-shape))
    e = math.exp(rho)
    raw = e / rho * mu2 * s.value - math.expm1(rho) ** 2 / lam ** 2
    return BoundsReport(max(raw, 0.0), None, Variant.IMRL,
                        {"lambda": lam, "rho": rho, "alpha": alpha, "mu2": mu2, "mu3": mu3, "raw": raw},
                        err_est=e / rho * mu2 * s.truncation_bound)


@dataclass(frozen=True)
class ClassComparison:
    """What a NBUE/NWUE claim implies; the claim itself is not verified."""

    tag: str
    relation: str
    reference: VarianceResult

    @property
    def statement(self):
        return f"VAR {self.relation} {self.reference.value:.8g}"

    def admits(self, variance: float, rel_tol=1e-12) -> bool:
        slack = rel_tol * self.reference.value
        if self.relation == "<=":
            return variance <= self.reference.value + slack
        return variance >= self.reference.value - slack


def class_comparison(tag: str, lam: float, rho: float) -> ClassComparison:
    """NBUE service has variance at most the M/M/infinity value; NWUE at least."""
    tag = tag.upper()
    relations = {"NBUE": "<=", "NWUE": ">="}
    if tag not in relations:
        raise ValueError(f"class must be NBUE or NWUE, got {tag!r}")
    return ClassComparison(tag, relations[tag], variance_mm_exact(lam, rho))


TABLE1_RHOS = (0.5, 1.0, 10.0, 20.0, 50.0, 100.0)

# rho -> (upper_1_3, upper_1_7 with M=14, lower_1_3) reference values, lambda = 1
TABLE1_PRINTED = {
    0.5: (0.55954328, 0.50046123, 0.48174095),
    1.0: (4.8574775, 3.9415704, 3.6707743),
    10.0: (1.4545705e9, 5.6362048e8, 4.8692729e8),
    20.0: (7.061558e17, 2.5325047e17, 2.3538545e17),
    50.0: (8.0643512e43, 2.8801252e43, 2.6881171e43),
    100.0: (2.167792e87, 7.7421139e86, 7.2259735e86),
}

TABLE1_COLUMNS = ("rho", "upper_1_3", "upper_1_7_printed", "lower_1_3", "upper_1_7_corrected", "exact_1_4")


@dataclass(frozen=True)
class Table1Row:
    rho: float
    upper_1_3: float
    upper_1_7_printed: float
    lower_1_3: float
    upper_1_7_corrected: float
    exact_1_4: float

    def as_tuple(self):
        return tuple(getattr(self, c) for c in TABLE1_COLUMNS)


def table1(lam: float = 1.0, rho_list=TABLE1_RHOS, M: int = 14) -> list:
    """Exponential-service bounds table, one :class:`Table1Row` per rho."""
    rows = []
    for rho in rho_list:
        if rho > RHO_MAX:
            _guard(rho)
        general = general_bounds(lam, rho, 1.0)
        rows.append(Table1Row(
            rho=rho,
            upper_1_3=general.upper,
            upper_1_7_printed=improved_upper_mm(lam, rho, M, "as_printed").upper,
            lower_1_3=general.lower,
            upper_1_7_corrected=improved_upper_mm(lam, rho, M, "corrected").upper,
            exact_1_4=variance_mm_exact(lam, rho).value,
        ))
    return rows


def table1_footnotes(rows, lam: float = 1.0, M: int = 14, rel_tol: float = 1e-6) -> list:
    """Notes on cells where recomputation departs from the reference values."""
    notes = []
    if lam == 1.0 and M == 14:
        for row in rows:
            printed = TABLE1_PRINTED.get(row.rho)
            if printed is None:
                continue
            for name, ours, theirs in zip(("upper_1_3", "upper_1_7_printed", "lower_1_3"),
                                          (row.upper_1_3, row.upper_1_7_printed, row.lower_1_3), printed):
                if abs(ours - theirs) > rel_tol * abs(theirs):
                    notes.append(f"rho={row.rho:g} {name}: reference {theirs:.8g}, formula gives {ours:.8g}")
    notes.append("upper_1_7_printed omits the factor 2 on its series part and can fall below exact_1_4 "
                 "(e.g. rho=0.5); upper_1_7_corrected is the valid upper bound")
    return notes
