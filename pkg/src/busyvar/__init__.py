"""Busy-period variance of the M/G/infinity queue: exact routes, bounds, ordering and simulation."""

from ._kernels import BACKEND
from .bounds import (BoundsReport, class_comparison, dfr_lower, general_bounds, imrl_lower, improved_upper_mm,
                     table1)
from .core import (Method, QueueInput, VarianceResult, b_coefficient, mean_busy_period, traffic_intensity,
                   variance_integral, variance_md_exact, variance_mm_exact, variance_series)
from .cv import CvResult, cv_squared, exponentiality_diagnostic
from .dist import (Deterministic, Erlang, Exponential, Gamma, HyperExponential, Lomax, ServiceTimeModel, Uniform,
                   Weibull, format_spec, parse_spec)
from .errors import (BusyVarError, InfiniteMomentError, IntegrandError, LoadRangeError, NumericError, ParseError,
                     QuadratureError, SampleSizeError, SeriesError)
from .ordering import Outcome, check_variability_order, empirical_busy_order, variance_consequence
from .sim import SimConfig, SimStats, busy_period_samples, simulate, simulate_busy_periods

__version__ = "0.1.0"
