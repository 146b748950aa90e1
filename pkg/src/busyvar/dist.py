"""Parametric service-time models.

Every model supplies what the busy-period formulas consume: the survival
function ``1 - G(t)``, the integrated tail ``h(t) = int_t^inf (1 - G(v)) dv``,
raw moments, reliability-class tags, and inverse-CDF sampling.

Models are immutable and accept scalars or numpy arrays wherever a time
argument is expected.  They are usually built from the mini-language handled
by :func:`parse_spec`, e.g. ``"erlang:k=2,mean=1"`` or
``"hyperexp:p=0.5|0.5,mean=0.5|1.5"``.
"""

from __future__ import annotations

import enum
import functools
import math
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np
from scipy import special

from .errors import InfiniteMomentError, ParseError
from .numerics import integrate_semi_infinite

__all__ = [
    "Family",
    "Tri",
    "MomentSet",
    "ReliabilityTags",
    "ServiceTimeModel",
    "Deterministic",
    "Exponential",
    "Erlang",
    "Gamma",
    "HyperExponential",
    "Uniform",
    "Weibull",
    "Lomax",
    "survival",
    "integrated_tail",
    "partial_integrated_tail",
    "moments",
    "sample",
    "parse_spec",
    "format_spec",
]


class Family(str, enum.Enum):
    DETERMINISTIC = "det"
    EXPONENTIAL = "exp"
    ERLANG = "erlang"
    GAMMA = "gamma"
    HYPEREXPONENTIAL = "hyperexp"
    UNIFORM = "uniform"
    WEIBULL = "weibull"
    LOMAX = "lomax"


class Tri(str, enum.Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class MomentSet:
    """Raw moments of a service time; ``math.inf`` marks a moment that does not exist."""

    alpha: float
    mu2: float
    mu3: float
    sigma2: float
    gamma_s2: float

    @classmethod
    def from_raw(cls, alpha, mu2, mu3, sigma2=None):
        if sigma2 is None:
            sigma2 = mu2 - alpha * alpha if math.isfinite(mu2) else math.inf
        sigma2 = max(sigma2, 0.0)
        gamma_s2 = sigma2 / (alpha * alpha) if math.isfinite(sigma2) else math.inf
        return cls(alpha, mu2, mu3, sigma2, gamma_s2)


@dataclass(frozen=True)
class ReliabilityTags:
    nbue: Tri
    nwue: Tri
    dfr: Tri
    imrl: Tri

    def as_dict(self):
        return {"NBUE": self.nbue.value, "NWUE": self.nwue.value,
                "DFR": self.dfr.value, "IMRL": self.imrl.value}


_Y, _N = Tri.YES, Tri.NO
_EXPONENTIAL_TAGS = ReliabilityTags(_Y, _Y, _Y, _Y)
# IFR implies NBUE; it excludes DFR/IMRL, and NWUE unless exponential.
_IFR_TAGS = ReliabilityTags(_Y, _N, _N, _N)
# DFR implies IMRL and NWUE.
_DFR_TAGS = ReliabilityTags(_N, _Y, _Y, _Y)


class _ParamError(ValueError):
    def __init__(self, param, message):
        super().__init__(message)
        self.param = param


def _positive(name, value):
    value = float(value)
    if not (value > 0 and math.isfinite(value)):
        raise _ParamError(name, f"{name} must be a positive finite number, got {value!r}")
    return value


def _scalar_or_array(fn):
    """Run ``fn`` on a float array and hand back a float for scalar input."""

    def wrapper(self, t):
        arr = np.asarray(t, dtype=float)
        if np.any(arr < 0) or np.any(np.isnan(arr)):
            raise ValueError("time argument must be >= 0")
        out = fn(self, np.atleast_1d(arr))
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


class ServiceTimeModel(ABC):
    """Common interface of all service-time families."""

    family: ClassVar[Family]
    keys: ClassVar[tuple]

    # tail quadrature tolerance, relative to the mean
    tail_tol: ClassVar[float] = 1e-13

    @property
    @abstractmethod
    def mean(self) -> float:
        ...

    @abstractmethod
    def _survival(self, t: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def quantile(self, u):
        """Inverse CDF; ``u`` in ``[0, 1)``."""

    @abstractmethod
    def moments(self) -> MomentSet:
        ...

    @property
    @abstractmethod
    def tags(self) -> ReliabilityTags:
        ...

    @abstractmethod
    def scaled(self, factor: float) -> "ServiceTimeModel":
        """The same shape with every time quantity multiplied by ``factor``."""

    @abstractmethod
    def params(self) -> dict:
        ...

    @property
    def breakpoints(self) -> tuple:
        """Times where the survival function has a kink or jump."""
        return ()

    @property
    def has_closed_tail(self) -> bool:
        return True

    @_scalar_or_array
    def survival(self, t):
        """``1 - G(t)``."""
        return self._survival(t)

    @_scalar_or_array
    def integrated_tail(self, t):
        """``h(t) = int_t^inf (1 - G(v)) dv``; ``h(0)`` is the mean."""
        if not math.isfinite(self.mean):
            raise InfiniteMomentError(f"{format_spec(self)} has an infinite mean; its tail integral diverges")
        return self._integrated_tail(t)

    @_scalar_or_array
    def partial_integrated_tail(self, t):
        """``int_0^t (1 - G(v)) dv``."""
        if not math.isfinite(self.mean):
            raise InfiniteMomentError(f"{format_spec(self)} has an infinite mean")
        return self._partial_integrated_tail(t)

    def _integrated_tail(self, t):
        # quadrature fallback for families without a closed form
        return np.array([_tail_by_quadrature(self, float(ti)) for ti in t])

    def _partial_integrated_tail(self, t):
        return self.mean - self._integrated_tail(t)

    def sample(self, rng: np.random.Generator, size=None):
        """Draw service times by inverting the CDF at ``rng.random(size)``."""
        u = rng.random(size)
        return self.quantile(u)

    def to_spec(self) -> str:
        return format_spec(self)

    def __str__(self):
        return format_spec(self)


@dataclass(frozen=True)
class Deterministic(ServiceTimeModel):
    value: float
    family: ClassVar[Family] = Family.DETERMINISTIC
    keys: ClassVar[tuple] = ("mean",)

    def __post_init__(self):
        object.__setattr__(self, "value", _positive("mean", self.value))

    @property
    def mean(self):
        return self.value

    @property
    def breakpoints(self):
        return (self.value,)

    def _survival(self, t):
        return np.where(t < self.value, 1.0, 0.0)

    def _integrated_tail(self, t):
        return np.maximum(self.value - t, 0.0)

    def _partial_integrated_tail(self, t):
        return np.minimum(t, self.value)

    def quantile(self, u):
        return np.full_like(np.asarray(u, dtype=float), self.value) if np.ndim(u) else self.value

    def moments(self):
        a = self.value
        return MomentSet.from_raw(a, a * a, a ** 3, sigma2=0.0)

    @property
    def tags(self):
        # mean residual life alpha - t decreases: NBUE but not IMRL
        return _IFR_TAGS

    def scaled(self, factor):
        return Deterministic(self.value * factor)

    def params(self):
        return {"mean": self.value}


@dataclass(frozen=True)
class Exponential(ServiceTimeModel):
    mean_: float
    family: ClassVar[Family] = Family.EXPONENTIAL
    keys: ClassVar[tuple] = ("mean",)

    def __post_init__(self):
        object.__setattr__(self, "mean_", _positive("mean", self.mean_))

    @property
    def mean(self):
        return self.mean_

    def _survival(self, t):
        return np.exp(-t / self.mean_)

    def _integrated_tail(self, t):
        return self.mean_ * np.exp(-t / self.mean_)

    def _partial_integrated_tail(self, t):
        return -self.mean_ * np.expm1(-t / self.mean_)

    def quantile(self, u):
        return -self.mean_ * np.log1p(-np.asarray(u, dtype=float))

    def moments(self):
        a = self.mean_
        return MomentSet.from_raw(a, 2 * a * a, 6 * a ** 3, sigma2=a * a)

    @property
    def tags(self):
        return _EXPONENTIAL_TAGS

    def scaled(self, factor):
        return Exponential(self.mean_ * factor)

    def params(self):
        return {"mean": self.mean_}


@dataclass(frozen=True)
class Gamma(ServiceTimeModel):
    """Gamma service with given shape and mean.

    Integer shapes use the Erlang closed-form tail; other shapes fall back to
    quadrature of the survival function.
    """

    shape: float
    mean_: float
    family: ClassVar[Family] = Family.GAMMA
    keys: ClassVar[tuple] = ("shape", "mean")

    def __post_init__(self):
        object.__setattr__(self, "shape", _positive("shape", self.shape))
        object.__setattr__(self, "mean_", _positive("mean", self.mean_))

    @property
    def mean(self):
        return self.mean_

    @property
    def rate(self):
        return self.shape / self.mean_

    @property
    def _integer_shape(self):
        return float(self.shape).is_integer() and self.shape <= 200

    @property
    def has_closed_tail(self):
        return self._integer_shape

    def _survival(self, t):
        return special.gammaincc(self.shape, self.rate * t)

    def _integrated_tail(self, t):
        if not self._integer_shape:
            return super()._integrated_tail(t)
        x = self.rate * t
        total = np.zeros_like(x)
        for j in range(int(self.shape)):
            total += special.gammaincc(j + 1, x)
        return total / self.rate

    def quantile(self, u):
        return special.gammaincinv(self.shape, np.asarray(u, dtype=float)) / self.rate

    def moments(self):
        a, th = self.shape, self.rate
        mu2 = a * (a + 1) / th ** 2
        mu3 = a * (a + 1) * (a + 2) / th ** 3
        return MomentSet.from_raw(self.mean_, mu2, mu3, sigma2=a / th ** 2)

    @property
    def tags(self):
        if self.shape == 1:
            return _EXPONENTIAL_TAGS
        return _IFR_TAGS if self.shape > 1 else _DFR_TAGS

    def scaled(self, factor):
        return Gamma(self.shape, self.mean_ * factor)

    def params(self):
        return {"shape": self.shape, "mean": self.mean_}


@dataclass(frozen=True)
class Erlang(Gamma):
    family: ClassVar[Family] = Family.ERLANG
    keys: ClassVar[tuple] = ("k", "mean")

    def __post_init__(self):
        super().__post_init__()
        if not float(self.shape).is_integer():
            raise _ParamError("k", f"k must be a positive integer, got {self.shape!r}")
        if self.shape > 200:
            raise _ParamError("k", "k above 200 is not supported")

    @property
    def k(self):
        return int(self.shape)

    def scaled(self, factor):
        return Erlang(self.shape, self.mean_ * factor)

    def params(self):
        return {"k": self.k, "mean": self.mean_}


@dataclass(frozen=True)
class HyperExponential(ServiceTimeModel):
    probs: tuple
    means: tuple
    family: ClassVar[Family] = Family.HYPEREXPONENTIAL
    keys: ClassVar[tuple] = ("p", "mean")

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        means = tuple(_positive("mean", m) for m in self.means)
        if len(probs) != len(means) or not probs:
            raise _ParamError("mean", "p and mean must list the same, non-zero number of branches")
        if any(not (0 < p <= 1) for p in probs):
            raise _ParamError("p", "branch probabilities must lie in (0, 1]")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise _ParamError("p", f"branch probabilities sum to {math.fsum(probs)!r}, not 1")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "means", means)

    @property
    def mean(self):
        return math.fsum(p * m for p, m in zip(self.probs, self.means))

    def _survival(self, t):
        return sum(p * np.exp(-t / m) for p, m in zip(self.probs, self.means))

    def _integrated_tail(self, t):
        return sum(p * m * np.exp(-t / m) for p, m in zip(self.probs, self.means))

    def _partial_integrated_tail(self, t):
        return sum(-p * m * np.expm1(-t / m) for p, m in zip(self.probs, self.means))

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        target = 1.0 - u
        lo = np.zeros_like(u)
        # S(t) <= exp(-t/max_mean), so this t already has S(t) <= 1 - u
        hi = max(self.means) * -np.log1p(-u)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            above = self._survival(mid) > target
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        out = 0.5 * (lo + hi)
        return float(out) if out.ndim == 0 else out

    def moments(self):
        mu = [math.fsum(p * math.factorial(r) * m ** r for p, m in zip(self.probs, self.means))
              for r in (1, 2, 3)]
        return MomentSet.from_raw(mu[0], mu[1], mu[2])

    @property
    def tags(self):
        if len(set(self.means)) == 1:
            return _EXPONENTIAL_TAGS
        return _DFR_TAGS

    def scaled(self, factor):
        return HyperExponential(self.probs, tuple(m * factor for m in self.means))

    def params(self):
        return {"p": self.probs, "mean": self.means}


@dataclass(frozen=True)
class Uniform(ServiceTimeModel):
    low: float
    high: float
    family: ClassVar[Family] = Family.UNIFORM
    keys: ClassVar[tuple] = ("low", "high")

    def __post_init__(self):
        low, high = float(self.low), float(self.high)
        if not (low >= 0 and math.isfinite(low)):
            raise _ParamError("low", "low must be >= 0")
        if not (high > low and math.isfinite(high)):
            raise _ParamError("high", "high must exceed low")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    @property
    def mean(self):
        return 0.5 * (self.low + self.high)

    @property
    def breakpoints(self):
        return tuple(b for b in (self.low, self.high) if b > 0)

    def _survival(self, t):
        a, b = self.low, self.high
        return np.clip((b - t) / (b - a), 0.0, 1.0)

    def _integrated_tail(self, t):
        a, b = self.low, self.high
        inside = (b - np.clip(t, a, b)) ** 2 / (2 * (b - a))
        return np.where(t < a, (a - t) + 0.5 * (b - a), inside)

    def quantile(self, u):
        return self.low + np.asarray(u, dtype=float) * (self.high - self.low)

    def moments(self):
        a, b = self.low, self.high
        raw = [(b ** (r + 1) - a ** (r + 1)) / ((r + 1) * (b - a)) for r in (1, 2, 3)]
        return MomentSet.from_raw(raw[0], raw[1], raw[2], sigma2=(b - a) ** 2 / 12)

    @property
    def tags(self):
        return _IFR_TAGS

    def scaled(self, factor):
        return Uniform(self.low * factor, self.high * factor)

    def params(self):
        return {"low": self.low, "high": self.high}


@dataclass(frozen=True)
class Weibull(ServiceTimeModel):
    """Weibull service; the integrated tail is computed by quadrature."""

    shape: float
    scale: float
    family: ClassVar[Family] = Family.WEIBULL
    keys: ClassVar[tuple] = ("shape", "scale")

    def __post_init__(self):
        object.__setattr__(self, "shape", _positive("shape", self.shape))
        object.__setattr__(self, "scale", _positive("scale", self.scale))

    @property
    def mean(self):
        return self.scale * math.gamma(1 + 1 / self.shape)

    @property
    def has_closed_tail(self):
        return False

    def _survival(self, t):
        return np.exp(-((t / self.scale) ** self.shape))

    def quantile(self, u):
        return self.scale * (-np.log1p(-np.asarray(u, dtype=float))) ** (1 / self.shape)

    def moments(self):
        raw = [self.scale ** r * math.gamma(1 + r / self.shape) for r in (1, 2, 3)]
        return MomentSet.from_raw(*raw)

    @property
    def tags(self):
        if self.shape == 1:
            return _EXPONENTIAL_TAGS
        return _IFR_TAGS if self.shape > 1 else _DFR_TAGS

    def scaled(self, factor):
        return Weibull(self.shape, self.scale * factor)

    def params(self):
        return {"shape": self.shape, "scale": self.scale}


@dataclass(frozen=True)
class Lomax(ServiceTimeModel):
    """Pareto type II service; heavy tailed, moments of order >= shape are infinite."""

    shape: float
    scale: float
    family: ClassVar[Family] = Family.LOMAX
    keys: ClassVar[tuple] = ("shape", "scale")

    def __post_init__(self):
        object.__setattr__(self, "shape", _positive("shape", self.shape))
        object.__setattr__(self, "scale", _positive("scale", self.scale))

    @property
    def mean(self):
        return self.scale / (self.shape - 1) if self.shape > 1 else math.inf

    def _survival(self, t):
        return (1.0 + t / self.scale) ** (-self.shape)

    def _integrated_tail(self, t):
        return self.mean * (1.0 + t / self.scale) ** (1.0 - self.shape)

    def _partial_integrated_tail(self, t):
        return -self.mean * np.expm1((1.0 - self.shape) * np.log1p(t / self.scale))

    def quantile(self, u):
        return self.scale * np.expm1(-np.log1p(-np.asarray(u, dtype=float)) / self.shape)

    def moments(self):
        c, s = self.shape, self.scale
        mu2 = 2 * s * s / ((c - 1) * (c - 2)) if c > 2 else math.inf
        mu3 = 6 * s ** 3 / ((c - 1) * (c - 2) * (c - 3)) if c > 3 else math.inf
        return MomentSet.from_raw(self.mean, mu2, mu3)

    @property
    def tags(self):
        # hazard shape/(scale + t) decreases
        return _DFR_TAGS

    def scaled(self, factor):
        return Lomax(self.shape, self.scale * factor)

    def params(self):
        return {"shape": self.shape, "scale": self.scale}


@functools.lru_cache(maxsize=65536)
def _tail_by_quadrature(model, t):
    alpha = model.mean
    res = integrate_semi_infinite(
        model._survival, abs_tol=model.tail_tol * alpha, rel_tol=model.tail_tol,
        scale=alpha, start=t, breakpoints=tuple(b for b in model.breakpoints if b > t),
    )
    return res.value


def survival(model: ServiceTimeModel, t):
    return model.survival(t)


def integrated_tail(model: ServiceTimeModel, t):
    return model.integrated_tail(t)


def partial_integrated_tail(model: ServiceTimeModel, t):
    return model.partial_integrated_tail(t)


def moments(model: ServiceTimeModel) -> MomentSet:
    return model.moments()


def sample(model: ServiceTimeModel, rng: np.random.Generator, size=None):
    return model.sample(rng, size)


# ---------------------------------------------------------------- mini-language

_FAMILIES = {
    "det": Family.DETERMINISTIC,
    "deterministic": Family.DETERMINISTIC,
    "exp": Family.EXPONENTIAL,
    "exponential": Family.EXPONENTIAL,
    "erlang": Family.ERLANG,
    "gamma": Family.GAMMA,
    "hyperexp": Family.HYPEREXPONENTIAL,
    "hyperexponential": Family.HYPEREXPONENTIAL,
    "uniform": Family.UNIFORM,
    "weibull": Family.WEIBULL,
    "lomax": Family.LOMAX,
}

_CLASSES = {cls.family: cls for cls in
            (Deterministic, Exponential, Erlang, Gamma, HyperExponential, Uniform, Weibull, Lomax)}

_LIST_KEYS = {Family.HYPEREXPONENTIAL: {"p", "mean"}}

_NAME = re.compile(r"[a-z][a-z0-9_]*")
_NUM = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")


def _build(family, values):
    cls = _CLASSES[family]
    if family is Family.HYPEREXPONENTIAL:
        return cls(tuple(values["p"]), tuple(values["mean"]))
    if family is Family.ERLANG:
        return cls(values["k"], values["mean"])
    return cls(*(values[k] for k in cls.keys))


def parse_spec(text: str) -> ServiceTimeModel:
    """Parse ``family:key=value[,key=value...]`` into a model.

    List-valued parameters separate entries with ``|``.  Raises
    :class:`~busyvar.errors.ParseError` with the offending offset.
    """
    if not isinstance(text, str):
        raise ParseError("distribution spec must be a string", str(text), 0)
    m = _NAME.match(text, 0)
    if not m:
        raise ParseError("expected a family name", text, 0)
    name = m.group()
    if name not in _FAMILIES:
        raise ParseError(f"unknown family {name!r}", text, 0)
    family = _FAMILIES[name]
    cls = _CLASSES[family]
    pos = m.end()
    if pos >= len(text) or text[pos] != ":":
        raise ParseError("expected ':' after the family name", text, pos)
    pos += 1
    values, where = {}, {}
    while True:
        km = _NAME.match(text, pos)
        if not km:
            raise ParseError("expected a parameter name", text, pos)
        key = km.group()
        if key not in cls.keys:
            raise ParseError(f"unknown parameter {key!r} for {family.value} (expected {', '.join(cls.keys)})",
                             text, pos)
        if key in values:
            raise ParseError(f"parameter {key!r} given twice", text, pos)
        pos = km.end()
        if pos >= len(text) or text[pos] != "=":
            raise ParseError("expected '='", text, pos)
        pos += 1
        where[key] = pos
        items = []
        while True:
            nm = _NUM.match(text, pos)
            if not nm:
                raise ParseError("expected a number", text, pos)
            items.append(float(nm.group()))
            pos = nm.end()
            if pos < len(text) and text[pos] == "|":
                pos += 1
                continue
            break
        if key in _LIST_KEYS.get(family, ()):
            values[key] = items
        elif len(items) != 1:
            raise ParseError(f"parameter {key!r} takes a single value", text, where[key])
        else:
            values[key] = items[0]
        if pos == len(text):
            break
        if text[pos] != ",":
            raise ParseError("expected ',' or end of input", text, pos)
        pos += 1
    missing = [k for k in cls.keys if k not in values]
    if missing:
        raise ParseError(f"missing parameter {missing[0]!r}", text, len(text))
    try:
        return _build(family, values)
    except _ParamError as exc:
        raise ParseError(str(exc), text, where.get(exc.param, len(text))) from None


def _fmt_num(x):
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def format_spec(model: ServiceTimeModel) -> str:
    """Canonical spec string; ``parse_spec(format_spec(m)) == m``."""
    parts = []
    for key, value in model.params().items():
        if isinstance(value, tuple):
            parts.append(f"{key}=" + "|".join(_fmt_num(v) for v in value))
        else:
            parts.append(f"{key}={_fmt_num(value)}")
    return f"{model.family.value}:" + ",".join(parts)
