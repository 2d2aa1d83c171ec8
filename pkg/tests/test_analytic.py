import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uavrelay.analytic import (
    FixedDistance,
    Metric,
    NearestPoint,
    SirQuery,
    UniformDisk,
    ccdf_curve,
    ccdf_sir,
    db_to_linear,
    ergodic_capacity,
    linear_to_db,
    mean_over_distance,
    outage,
)
from uavrelay.montecarlo import sample_sir_nearest
from uavrelay.propagation import RelayKind

SUAV, GROUND = RelayKind.SUAV, RelayKind.GROUND

# evaluated independently with mpmath at 30 digits
EXP_MINUS_PI2_4 = 0.0848049724711137773
SUAV_1_05_1 = 0.175677537253213853
GROUND_1_05_1 = 0.539641485816297176


def test_spot_values():
    assert abs(ccdf_sir(SirQuery(GROUND, 1.0, 1.0, 1.0)) - EXP_MINUS_PI2_4) < 1e-12
    assert abs(ccdf_sir(SirQuery(SUAV, 1.0, 0.5, 1.0)) - SUAV_1_05_1) < 1e-12
    assert abs(ccdf_sir(SirQuery(GROUND, 1.0, 0.5, 1.0)) - GROUND_1_05_1) < 1e-12
    assert abs(outage(SirQuery(GROUND, 1.0, 1.0, 1.0)) - (1 - EXP_MINUS_PI2_4)) < 1e-12


@pytest.mark.parametrize("kind", list(RelayKind))
def test_degenerate_inputs(kind):
    assert ccdf_sir(SirQuery(kind, 2.0, 0.7, 0.0)) == 1.0
    assert ccdf_sir(SirQuery(kind, 0.0, 0.7, 5.0)) == 1.0
    assert outage(SirQuery(kind, 2.0, 0.7, 0.0)) == 0.0
    assert outage(SirQuery(kind, 0.0, 0.7, 3.0)) == 0.0


@pytest.mark.parametrize("kw", [dict(lam=-1, r=1, xi=1), dict(lam=1, r=0, xi=1), dict(lam=1, r=1, xi=-1),
                                dict(lam=math.nan, r=1, xi=1)])
def test_query_validation(kw):
    with pytest.raises(ValueError):
        SirQuery(GROUND, **kw)


lams = st.floats(0.0, 10.0)
rs = st.floats(0.01, 10.0)
xis = st.floats(0.0, 1e4)


@given(st.sampled_from(list(RelayKind)), lams, rs, xis)
def test_ccdf_is_probability(kind, lam, r, xi):
    p = ccdf_sir(SirQuery(kind, lam, r, xi))
    assert 0.0 <= p <= 1.0


@given(st.sampled_from(list(RelayKind)), st.floats(0.01, 10), rs, xis, xis)
def test_ccdf_non_increasing_in_xi(kind, lam, r, a, b):
    lo, hi = sorted((a, b))
    assert ccdf_sir(SirQuery(kind, lam, r, hi)) <= ccdf_sir(SirQuery(kind, lam, r, lo))


@given(st.sampled_from(list(RelayKind)), lams, lams, rs, xis)
def test_ccdf_non_increasing_in_lambda(kind, a, b, r, xi):
    lo, hi = sorted((a, b))
    assert ccdf_sir(SirQuery(kind, hi, r, xi)) <= ccdf_sir(SirQuery(kind, lo, r, xi))


@given(lams, xis)
def test_crossover_at_unit_distance(lam, xi):
    assert ccdf_sir(SirQuery(SUAV, lam, 1.0, xi)) == ccdf_sir(SirQuery(GROUND, lam, 1.0, xi))


@given(st.floats(0.01, 10), st.floats(0.01, 0.99), st.floats(1e-3, 1e3))
def test_aerial_worse_inside_unit_distance(lam, r, xi):
    # at r < 1 the ground exponent r^2*atan(s) is below r*atan(s/r)
    assert ccdf_sir(SirQuery(SUAV, lam, r, xi)) <= ccdf_sir(SirQuery(GROUND, lam, r, xi)) + 1e-15


def test_curve_matches_pointwise():
    xi = db_to_linear(np.arange(-10, 31, 5))
    curve = ccdf_curve(SUAV, 0.5, 2.0, xi)
    assert np.array_equal(curve, [ccdf_sir(SirQuery(SUAV, 0.5, 2.0, float(x))) for x in xi])
    with pytest.raises(ValueError):
        ccdf_curve(SUAV, 0.5, 2.0, [-1.0])


def test_db_round_trip():
    x = np.array([0.1, 1.0, 31.6])
    assert np.allclose(db_to_linear(linear_to_db(x)), x)
    assert db_to_linear(10.0) == pytest.approx(10.0)


def test_capacity_no_interference_is_capped():
    c = ergodic_capacity(GROUND, 0.0, 1.0, cap=4.8)
    assert c.bits_per_hz == 4.8 and c.capped


def test_capacity_against_direct_summation():
    # integral of P(SIR > 2^t - 1) via a fine trapezoid in the variable u = log(1+t)
    u = np.linspace(0, math.log1p(200.0), 400_001)
    t = np.expm1(u)
    g = ccdf_curve(GROUND, 1.0, 1.0, np.expm1(t * math.log(2))) * np.exp(u)
    ref = float(np.sum((g[1:] + g[:-1]) / 2 * np.diff(u)))
    c = ergodic_capacity(GROUND, 1.0, 1.0)
    assert not c.capped
    assert abs(c.bits_per_hz - ref) < 1e-6


@pytest.mark.parametrize("kind", list(RelayKind))
def test_capacity_decreasing_in_lambda(kind):
    assert ergodic_capacity(kind, 2.0, 1.0).bits_per_hz < ergodic_capacity(kind, 1.0, 1.0).bits_per_hz


def test_fixed_distance_is_pointwise():
    for m in (Metric("ccdf", 2.0), Metric("outage", 2.0)):
        v = mean_over_distance(m, SUAV, 1.0, FixedDistance(0.8))
        q = SirQuery(SUAV, 1.0, 0.8, 2.0)
        assert v == (ccdf_sir(q) if m.name == "ccdf" else outage(q))
    assert mean_over_distance(Metric("capacity"), GROUND, 1.0, FixedDistance(1.0)) == \
        ergodic_capacity(GROUND, 1.0, 1.0).bits_per_hz


def test_nearest_point_ground_closed_form():
    # E over f(r) of exp(-a r^2) with a = lam*pi*atan(1) is lam*pi / (lam*pi + a)
    lam = 1.0
    a = lam * math.pi * math.atan(1.0)
    exact = lam * math.pi / (lam * math.pi + a)
    assert abs(mean_over_distance(Metric("ccdf", 1.0), GROUND, lam, NearestPoint(lam)) - exact) < 1e-6


@pytest.mark.slow
def test_nearest_point_against_monte_carlo():
    v = mean_over_distance(Metric("ccdf", 1.0), GROUND, 1.0, NearestPoint(1.0))
    _, sir = sample_sir_nearest(GROUND, 1.0, 1_000_000, seed=2015)
    hit = sir > 1.0
    se = hit.std(ddof=1) / math.sqrt(len(hit))
    assert abs(hit.mean() - v) < 2 * se


@pytest.mark.parametrize("kind", list(RelayKind))
def test_uniform_disk_small_radius_limit(kind):
    assert mean_over_distance(Metric("ccdf", 1.0), kind, 1.0, UniformDisk(1e-6)) == pytest.approx(1.0, abs=1e-5)


def test_uniform_disk_ground_closed_form():
    # mean of exp(-a r^2) for r uniform on a disk of radius R: (1 - exp(-a R^2)) / (a R^2)
    R, lam = 1.5, 0.5
    a = lam * math.pi * math.atan(1.0)
    exact = -math.expm1(-a * R * R) / (a * R * R)
    assert abs(mean_over_distance(Metric("ccdf", 1.0), GROUND, lam, UniformDisk(R)) - exact) < 1e-6


def test_law_and_metric_validation():
    for bad in (lambda: NearestPoint(0.0), lambda: UniformDisk(0.0), lambda: FixedDistance(-1.0),
                lambda: Metric("median")):
        with pytest.raises(ValueError):
            bad()
