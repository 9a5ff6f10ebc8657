"""Gauge evaluation against an arbitrary-precision Gamma oracle."""

import math

import mpmath
import pytest
from hypothesis import given, strategies as st

from gmtkit.gauges import (PowerGauge, PowerLogGauge, TableGauge, eval_gauge,
                           gauge_ratio, volume_constant)


def oracle_omega(s: float) -> float:
    """pi^(s/2) / Gamma(s/2 + 1) at 50 digits."""
    with mpmath.workdps(50):
        return float(mpmath.pi ** (s / 2) / mpmath.gamma(s / 2 + 1))


def test_h_at_zero_is_exact_zero():
    assert eval_gauge(PowerGauge(1.0, normalized=True), 0.0) == 0.0
    assert eval_gauge(PowerLogGauge(1.0, 1.0), 0.0) == 0.0
    assert eval_gauge(TableGauge([(0.0, 0.0), (1.0, 1.0)]), 0.0) == 0.0


def test_normalized_power_values_match_gamma_oracle():
    # omega_1 = 2 and omega_2 = pi, both to high precision
    assert oracle_omega(1.0) == pytest.approx(2.0, rel=1e-14)
    assert oracle_omega(2.0) == pytest.approx(math.pi, rel=1e-14)
    assert eval_gauge(PowerGauge(1.0, normalized=True), 0.5) == pytest.approx(1.0, rel=1e-12)
    assert eval_gauge(PowerGauge(2.0, normalized=True), 1.0) == pytest.approx(math.pi, rel=1e-12)
    for s in (0.5, 1.0, 1.7, 2.0, 3.0):
        assert volume_constant(s) == pytest.approx(oracle_omega(s), rel=1e-12)


def test_negative_argument_rejected():
    with pytest.raises(ValueError):
        eval_gauge(PowerGauge(1.0), -0.1)
    with pytest.raises(ValueError):
        gauge_ratio(PowerGauge(1.0), 0.0, 2)


@given(st.floats(min_value=0.0, max_value=8.0), st.floats(min_value=0.0, max_value=8.0))
def test_gauge_monotone(t1, t2):
    lo, hi = sorted((t1, t2))
    for gauge in (PowerGauge(0.7), PowerGauge(2.0, normalized=True),
                  PowerLogGauge(1.0, 1.0), PowerLogGauge(0.5, 2.0),
                  TableGauge([(0.0, 0.0), (0.5, 0.25), (1.0, 1.0), (4.0, 2.0)])):
        assert gauge(lo) <= gauge(hi) + 1e-15


def test_gauge_ratio_power_identity():
    g = PowerGauge(1.0)  # s = N-1 for N=2
    for t in (0.01, 0.3, 1.0, 2.5):
        assert gauge_ratio(g, t, 2) == pytest.approx(1.0)


def test_power_log_ratio_strictly_decreasing():
    # h(t)/t = 1/max(1, log(1/t)); strictly decreasing on t = 2^-k, k >= 1
    g = PowerLogGauge(1.0, 1.0)
    ratios = [gauge_ratio(g, 2.0**-k, 2) for k in range(1, 13)]
    assert ratios[0] == pytest.approx(1.0)
    assert ratios[1] == pytest.approx(1.0 / (2 * math.log(2)), rel=1e-12)
    assert all(a > b for a, b in zip(ratios, ratios[1:]))


def test_power_log_vanishes_against_own_power():
    g = PowerLogGauge(1.5, 1.0)
    samples = [g(2.0**-k) / (2.0**-k) ** 1.5 for k in range(2, 16)]
    assert all(a > b for a, b in zip(samples, samples[1:]))
    assert samples[-1] < 0.1


def test_table_gauge_interpolation_and_clamp():
    g = TableGauge([(0.0, 0.0), (1.0, 2.0), (2.0, 3.0)])
    assert g(0.5) == pytest.approx(1.0)
    assert g(1.5) == pytest.approx(2.5)
    assert g(10.0) == 3.0  # clamp above the top knot
    # t^2 sampled: ratio example
    knots = [(k / 16, (k / 16) ** 2) for k in range(17)]
    g2 = TableGauge(knots)
    assert gauge_ratio(g2, 0.25, 2) == pytest.approx(0.25)


def test_table_gauge_rejects_bad_knots():
    with pytest.raises(ValueError):
        TableGauge([(0.0, 0.0), (1.0, 2.0), (2.0, 1.0)])  # decreasing values
    with pytest.raises(ValueError):
        TableGauge([(0.0, 0.0), (1.0, 1.0), (1.0, 2.0)])  # duplicate t
    with pytest.raises(ValueError):
        TableGauge([(0.0, 0.0), (0.5, 0.0), (1.0, 1.0)])  # vanishing on (0, 0.5]
    with pytest.raises(ValueError):
        TableGauge([(0.0, 0.5), (1.0, 1.0)])  # h(0) != 0


def test_invalid_parameters_rejected():
    with pytest.raises(ValueError):
        PowerGauge(0.0)
    with pytest.raises(ValueError):
        PowerLogGauge(1.0, 0.0)
