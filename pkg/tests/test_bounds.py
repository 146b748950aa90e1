import math

import pytest
from hypothesis import given, settings, strategies as st

from busyvar.bounds import (TABLE1_COLUMNS, TABLE1_RHOS, Variant, class_comparison, dfr_lower, general_bounds,
                            imrl_lower, improved_upper_mm, table1, table1_footnotes)
from busyvar.core import QueueInput, variance_integral, variance_mm_exact
from busyvar.dist import Exponential, HyperExponential, Lomax, Weibull


def test_general_bounds_exponential_rho1():
    b = general_bounds(1.0, 1.0, 1.0)
    assert b.lower == pytest.approx(3.6707743, rel=1e-7)
    assert b.upper == pytest.approx(4.8574775, rel=1e-7)
    assert b.variant is Variant.GENERAL


def test_rho_half_upper_cell_is_formula_value():
    b = general_bounds(1.0, 0.5, 1.0)
    assert b.upper == pytest.approx(0.5599604025766234, rel=1e-13)


@given(rho=st.floats(0.05, 6.0), g2=st.floats(0.0, 4.0))
@settings(max_examples=40, deadline=None)
def test_bounds_ordered(rho, g2):
    b = general_bounds(1.0, rho, g2)
    assert 0 <= b.lower <= b.upper * (1 + 1e-12)


@pytest.mark.parametrize("rho", [0.25, 0.5, 1.0, 3.0])
def test_bracket_holds_for_weibull(rho):
    m = Weibull(0.7, 1.0).scaled(rho / Weibull(0.7, 1.0).mean)
    v = variance_integral(QueueInput(1.0, m)).value
    b = general_bounds(1.0, rho, m.moments().gamma_s2)
    assert b.lower <= v <= b.upper


def test_improved_variants():
    for rho in (0.5, 1.0, 2.0, 5.0):
        c = improved_upper_mm(1.0, rho, 14, "corrected")
        ex = variance_mm_exact(1.0, rho).value
        assert c.upper >= ex * (1 - 1e-12)
        assert c.is_bound
    p = improved_upper_mm(1.0, 0.5, 14, "as_printed")
    assert p.upper < variance_mm_exact(1.0, 0.5).value
    assert p.variant is Variant.IMPROVED_AS_PRINTED


def test_improved_converges_with_M():
    ex = variance_mm_exact(1.0, 2.0).value
    vals = [improved_upper_mm(1.0, 2.0, M).upper for M in (4, 8, 16, 30)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(ex, rel=1e-12)


def test_improved_rejects_bad_input():
    with pytest.raises(ValueError):
        improved_upper_mm(1.0, 1.0, 2)
    with pytest.raises(ValueError):
        improved_upper_mm(1.0, 1.0, 14, "other")


def test_dfr_and_imrl_equal_mm_for_exponential():
    for rho in (0.5, 1.0, 2.0):
        ex = variance_mm_exact(1.0, rho).value
        m = Exponential(rho).moments()
        assert dfr_lower(1.0, rho, 1.0).lower == pytest.approx(ex, rel=1e-10)
        assert imrl_lower(1.0, m.alpha, m.mu2, m.mu3).lower == pytest.approx(ex, rel=1e-10)


def test_dfr_imrl_values_h2():
    h = HyperExponential((0.5, 0.5), (0.5, 1.5)).moments()
    assert dfr_lower(1.0, 1.0, h.gamma_s2).lower == pytest.approx(2.2722771, rel=1e-7)
    assert imrl_lower(1.0, h.alpha, h.mu2, h.mu3).lower == pytest.approx(4.725456, rel=1e-6)


@pytest.mark.parametrize("m", [Lomax(4.5, 2.0), Weibull(0.5, 1.0), HyperExponential((0.2, 0.8), (3.0, 0.5))],
                         ids=str)
def test_dfr_family_lower_bounds_hold(m):
    mom = m.moments()
    v = variance_integral(QueueInput(1.0, m)).value
    assert dfr_lower(1.0, m.mean, mom.gamma_s2).lower <= v
    assert imrl_lower(1.0, mom.alpha, mom.mu2, mom.mu3).lower <= v


def test_class_comparison():
    c = class_comparison("nbue", 1.0, 1.0)
    assert c.relation == "<="
    assert c.statement == "VAR <= 4.2123665"
    assert c.admits(2.5) and not c.admits(5.0)
    w = class_comparison("NWUE", 1.0, 1.0)
    assert w.admits(5.8) and not w.admits(2.0)
    with pytest.raises(ValueError):
        class_comparison("dfr", 1.0, 1.0)


def test_table1_shape_and_footnotes():
    rows = table1()
    assert [r.rho for r in rows] == list(TABLE1_RHOS)
    assert len(rows[0].as_tuple()) == len(TABLE1_COLUMNS)
    notes = table1_footnotes(rows)
    assert any("rho=0.5 upper_1_3" in n for n in notes)
    for r in rows:
        assert r.lower_1_3 <= r.exact_1_4 <= r.upper_1_7_corrected * (1 + 1e-12)
