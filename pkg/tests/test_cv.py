import math

import pytest
from hypothesis import given, settings, strategies as st

from busyvar.core import QueueInput, mean_busy_period, variance_integral
from busyvar.cv import beta_integral, cv_squared, exponentiality_diagnostic
from busyvar.dist import Deterministic, Erlang, Exponential, Lomax, Uniform


def test_values():
    assert cv_squared(QueueInput(1.0, Exponential(1.0))).gamma_B2 == pytest.approx(1.4267, rel=1e-4)
    assert cv_squared(QueueInput(1.0, Deterministic(1.0))).gamma_B2 == pytest.approx(0.32260622532306815, rel=1e-12)


@given(rho=st.floats(0.1, 6.0), lam=st.floats(0.2, 5.0))
@settings(max_examples=30, deadline=None)
def test_identity_with_variance(rho, lam):
    q = QueueInput(lam, Uniform(0.0, 2 * rho / lam))
    target = variance_integral(q).value / mean_busy_period(q) ** 2
    assert cv_squared(q).gamma_B2 == pytest.approx(target, rel=1e-9)


def test_deterministic_approaches_one():
    gaps = [exponentiality_diagnostic(QueueInput(1.0, Deterministic(r))).gap for r in (5, 10, 15, 20)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-6


def test_verdict_label():
    v = exponentiality_diagnostic(QueueInput(1.0, Deterministic(20.0)), threshold=0.01)
    assert v.approximately_exponential and v.label == "approximately-exponential"
    v = exponentiality_diagnostic(QueueInput(1.0, Erlang(2, 1.0)))
    assert v.label == "not-exponential"


def test_infinite_second_moment():
    q = QueueInput(1.0, Lomax(1.8, 1.0))
    assert beta_integral(q) is None
    assert cv_squared(q).gamma_B2 == math.inf
