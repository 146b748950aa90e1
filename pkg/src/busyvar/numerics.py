"""Adaptive quadrature and guarded series summation.

Quadrature is a global adaptive Gauss-Kronrod (7/15) scheme.  Semi-infinite
ranges are mapped onto ``[0, 1)`` with ``t = start + c*u/(1-u)`` so the
integrand's own scale ``c`` sets where the nodes land, instead of a
hand-picked truncation point.

Integrands are evaluated on numpy arrays of nodes, 15 or 30 at a time.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import IntegrandError, QuadratureError, SeriesError

__all__ = [
    "QuadResult",
    "SeriesResult",
    "integrate_interval",
    "integrate_semi_infinite",
    "sum_series",
    "DEFAULT_ABS_TOL",
    "DEFAULT_REL_TOL",
    "DEFAULT_MAX_EVALS",
]

DEFAULT_ABS_TOL = 1e-12
DEFAULT_REL_TOL = 1e-10
DEFAULT_MAX_EVALS = 2_000_000

_EPS = np.finfo(float).eps

# Kronrod abscissae (descending, last is the centre) and weights, QUADPACK values.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:7], [0.0], _XGK[6::-1]])
_W_KRONROD = np.concatenate([_WGK[:7], [_WGK[7]], _WGK[6::-1]])
_W_GAUSS = np.zeros(15)
_W_GAUSS[[1, 3, 5, 7, 9, 11, 13]] = [_WG[0], _WG[1], _WG[2], _WG[3], _WG[2], _WG[1], _WG[0]]


@dataclass(frozen=True)
class QuadResult:
    value: float
    abs_err_est: float
    evaluations: int


@dataclass(frozen=True)
class SeriesResult:
    """Outcome of :func:`sum_series`.

    ``truncation_bound`` is an absolute bound on the neglected tail.
    """

    value: float
    terms_used: int
    converged: bool
    truncation_bound: float


def _check_finite(y, x):
    if not np.all(np.isfinite(y)):
        bad = x[~np.isfinite(y)][0]
        raise IntegrandError(f"integrand is not finite at t={bad!r}")


def _adaptive(g, pieces, abs_tol, rel_tol, max_evals):
    """Global adaptive GK15 of ``g`` over the list of finite ``pieces`` (in the mapped variable)."""
    evals = 0

    def rule(intervals):
        nonlocal evals
        centres = np.array([0.5 * (a + b) for a, b in intervals])
        halves = np.array([0.5 * (b - a) for a, b in intervals])
        x = (centres[:, None] + halves[:, None] * _NODES[None, :]).ravel()
        y = np.asarray(g(x), dtype=float).reshape(len(intervals), 15)
        evals += x.size
        k = halves * (y @ _W_KRONROD)
        gauss = halves * (y @ _W_GAUSS)
        resabs = np.abs(halves) * (np.abs(y) @ _W_KRONROD)
        return k, np.abs(k - gauss), resabs

    heap = []
    frozen = []
    k, err, resabs = rule(pieces)
    for (a, b), ki, ei, ri in zip(pieces, k, err, resabs):
        heapq.heappush(heap, (-ei, a, b, ki, ei, ri))
    total = float(np.sum(k))
    total_err = float(np.sum(err))

    while total_err > max(abs_tol, rel_tol * abs(total)):
        if not heap:
            break
        if evals >= max_evals:
            best = _collect(heap, frozen, evals)
            raise QuadratureError(
                f"quadrature did not converge within {max_evals} evaluations "
                f"(estimate {best.value!r}, error {best.abs_err_est:.3g})",
                result=best,
            )
        _, a, b, ki, ei, ri = heapq.heappop(heap)
        mid = 0.5 * (a + b)
        # Interval already at rounding level or too narrow to bisect.
        if ei <= 50 * _EPS * ri or not (a < mid < b) or (b - a) <= 4 * _EPS * max(abs(a), abs(b)):
            frozen.append((a, b, ki, ei, ri))
            continue
        (k1, k2), (e1, e2), (r1, r2) = rule([(a, mid), (mid, b)])
        heapq.heappush(heap, (-e1, a, mid, k1, e1, r1))
        heapq.heappush(heap, (-e2, mid, b, k2, e2, r2))
        total += k1 + k2 - ki
        total_err += e1 + e2 - ei
        if len(heap) % 64 == 0:
            # resum to keep the running totals from drifting
            entries = [h[3:] for h in heap] + [f[2:] for f in frozen]
            total = math.fsum(e[0] for e in entries)
            total_err = math.fsum(e[1] for e in entries)

    return _collect(heap, frozen, evals)


def _collect(heap, frozen, evals):
    vals = [h[3] for h in heap] + [f[2] for f in frozen]
    errs = [h[4] for h in heap] + [f[3] for f in frozen]
    return QuadResult(math.fsum(vals), math.fsum(errs), evals)


def integrate_interval(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    abs_tol: float = DEFAULT_ABS_TOL,
    rel_tol: float = DEFAULT_REL_TOL,
    breakpoints: Sequence[float] = (),
    max_evals: int = DEFAULT_MAX_EVALS,
) -> QuadResult:
    """Integrate a vectorised ``f`` over the bounded interval ``[a, b]``.

    ``breakpoints`` inside ``(a, b)`` are used as initial subdivision points,
    which is where kinks of the integrand should go.
    """
    if not b > a:
        return QuadResult(0.0, 0.0, 1)
    cuts = sorted({a, b, *(p for p in breakpoints if a < p < b)})
    pieces = list(zip(cuts[:-1], cuts[1:]))

    def g(x):
        y = f(x)
        _check_finite(y, x)
        return y

    return _adaptive(g, pieces, abs_tol, rel_tol, max_evals)


def integrate_semi_infinite(
    f: Callable[[np.ndarray], np.ndarray],
    abs_tol: float = DEFAULT_ABS_TOL,
    rel_tol: float = DEFAULT_REL_TOL,
    scale: float = 1.0,
    breakpoints: Sequence[float] = (),
    start: float = 0.0,
    max_evals: int = DEFAULT_MAX_EVALS,
) -> QuadResult:
    """Integrate a vectorised ``f`` over ``[start, inf)``.

    The part beyond the last breakpoint is mapped to ``u in [0, 1)`` via
    ``t = last + scale*u/(1-u)``; everything before it is integrated
    directly.  ``f`` must be integrable and eventually decaying.

    Parameters
    ----------
    f : callable
        Takes and returns 1-d float arrays.
    abs_tol, rel_tol : float
        Stop once the summed error estimate is below ``max(abs_tol, rel_tol*|value|)``.
    scale : float
        Length scale of the mapping, normally the service mean.
    breakpoints : sequence of float
        Known kinks of ``f``.
    start : float
        Lower limit.
    max_evals : int
        Evaluation budget; exceeding it raises :class:`QuadratureError`.
    """
    if not scale > 0:
        raise ValueError("scale must be positive")
    inner = sorted({start, *(p for p in breakpoints if p > start)})
    last = inner[-1]
    finite = list(zip(inner[:-1], inner[1:]))
    # finite pieces live on [-len(finite), 0) in an auxiliary variable so one
    # heap drives the whole range; piece j occupies [j - len(finite), j + 1 - len(finite)]
    offset = len(finite)
    lo = np.array([p[0] for p in finite] + [last])
    width = np.array([p[1] - p[0] for p in finite] + [0.0])

    def g(s):
        s = np.asarray(s, dtype=float)
        out = np.empty_like(s)
        tail = s >= 0.0
        if np.any(tail):
            u = s[tail]
            one_minus = 1.0 - u
            t = last + scale * u / one_minus
            y = np.asarray(f(t), dtype=float)
            _check_finite(y, t)
            out[tail] = y * (scale / (one_minus * one_minus))
        head = ~tail
        if np.any(head):
            j = np.floor(s[head]).astype(int) + offset
            j = np.clip(j, 0, offset - 1)
            frac = s[head] - (j - offset)
            t = lo[j] + width[j] * frac
            y = np.asarray(f(t), dtype=float)
            _check_finite(y, t)
            out[head] = y * width[j]
        return out

    pieces = [(float(j - offset), float(j + 1 - offset)) for j in range(offset)]
    pieces += [(0.0, 0.25), (0.25, 0.5), (0.5, 0.75), (0.75, 1.0)]
    return _adaptive(g, pieces, abs_tol, rel_tol, max_evals)


def sum_series(
    term: Callable[[int], float],
    tol: float = 1e-15,
    max_terms: int = 500,
    start: int = 1,
    ratio_bound: Optional[Callable[[int], float]] = None,
    tail_bound: Optional[Callable[[int, float], float]] = None,
) -> SeriesResult:
    """Sum ``term(n)`` for ``n = start, start+1, ...`` with a certified stop.

    Summation stops at the first ``n`` where both the last term and the bound
    on the remaining tail fall below ``tol * |partial|``.  The tail bound is
    ``tail_bound(n, term_n)`` when given; otherwise it is the geometric bound
    ``term_n * r / (1 - r)`` with ``r = ratio_bound(n)`` bounding every later
    ratio ``term_{m+1}/term_m``.  Without either callable the observed ratio
    of the last two terms stands in for ``r``; that is a heuristic, not a bound.
    """
    terms = []
    previous = None
    for i in range(max_terms):
        n = start + i
        t = float(term(n))
        if not math.isfinite(t):
            raise SeriesError(f"series term {n} is not finite", result=None)
        terms.append(t)
        partial = math.fsum(terms)
        if tail_bound is not None:
            bound = float(tail_bound(n, t))
        else:
            if ratio_bound is not None:
                r = float(ratio_bound(n))
            elif previous not in (None, 0.0):
                r = abs(t / previous)
            else:
                r = 0.0 if t == 0.0 else math.inf
            bound = 0.0 if t == 0.0 else (abs(t) * r / (1.0 - r) if r < 1.0 else math.inf)
        previous = t
        limit = tol * abs(partial)
        if abs(t) <= limit and bound <= limit:
            return SeriesResult(partial, i + 1, True, bound)
        if t == 0.0 and bound == 0.0:
            return SeriesResult(partial, i + 1, True, 0.0)
    partial = math.fsum(terms)
    raise SeriesError(
        f"series did not converge within {max_terms} terms (partial sum {partial!r})",
        result=SeriesResult(partial, max_terms, False, math.inf),
    )
