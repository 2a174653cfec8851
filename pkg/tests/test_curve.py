import numpy as np
import pytest

from dcems import CurveError, PowerOutOfRange, ProcessingCurve, WorkExceedsCapacity

from helpers import identity_curve, random_curve, two_segment_curve


def test_identity_curve_work():
    curve = ProcessingCurve.from_breakpoints([(0.0, 0.0), (100.0, 100.0)])
    assert curve.work(50.0, 1.0) == pytest.approx(50.0)


def test_two_segment_work_hand_value():
    # segment 2 applies at 75 kW: 1 * 75 + 50 = 125
    assert two_segment_curve().work(75.0, 1.0) == pytest.approx(125.0)


def test_zero_power_zero_work():
    assert two_segment_curve().work(0.0, 1.0) == 0.0
    assert identity_curve().work(0.0, 2.5) == 0.0


def test_work_scales_with_dt():
    assert two_segment_curve().work(75.0, 0.25) == pytest.approx(125.0 * 0.25)


def test_power_outside_domain_names_bound():
    with pytest.raises(PowerOutOfRange) as err:
        two_segment_curve().work(100.5, 1.0)
    assert "100" in str(err.value)
    with pytest.raises(PowerOutOfRange):
        two_segment_curve().work(-1.0, 1.0)


def test_min_power_identity():
    assert identity_curve(100.0).min_power_for_work(50.0, 1.0) == pytest.approx(50.0)


def test_min_power_two_segment_hand_value():
    assert two_segment_curve().min_power_for_work(125.0, 1.0) == pytest.approx(75.0)


def test_min_power_zero_work():
    assert two_segment_curve().min_power_for_work(0.0, 1.0) == 0.0


def test_work_beyond_capacity_carries_shortfall():
    curve = two_segment_curve()
    with pytest.raises(WorkExceedsCapacity) as err:
        curve.min_power_for_work(160.0, 1.0)
    assert err.value.shortfall == pytest.approx(10.0)


def test_hypograph_rows_identity():
    rows = identity_curve(100.0).hypograph_rows()
    assert len(rows) == 1
    slope, intercept = rows[0]
    assert slope == pytest.approx(1.0)
    assert intercept == pytest.approx(0.0)


def test_hypograph_rows_two_segment():
    rows = two_segment_curve().hypograph_rows()
    assert [(round(s, 9), round(b, 9)) for s, b in rows] == [(2.0, 0.0), (1.0, 50.0)]
    curve = two_segment_curve()
    for p in (0.0, 25.0, 50.0, 75.0, 100.0):
        cap = min(s * p + b for s, b in rows)
        assert cap == pytest.approx(curve.work(p, 1.0), abs=1e-9)


def test_hypograph_rows_three_segment():
    curve = ProcessingCurve.from_breakpoints(
        [(0.0, 0.0), (30.0, 90.0), (70.0, 170.0), (100.0, 200.0)]
    )
    rows = curve.hypograph_rows()
    assert len(rows) == 3
    for p in np.linspace(0.0, 100.0, 7):
        cap = min(s * p + b for s, b in rows)
        assert cap == pytest.approx(curve.work(float(p), 1.0), abs=1e-9)


def test_concavity_property():
    rng = np.random.default_rng(3)
    for _ in range(50):
        curve = random_curve(rng)
        p1, p2 = rng.uniform(0.0, curve.max_power_kw, 2)
        theta = rng.uniform(0.0, 1.0)
        mix = theta * p1 + (1 - theta) * p2
        lhs = curve.work(float(mix), 1.0)
        rhs = theta * curve.work(float(p1), 1.0) + (1 - theta) * curve.work(float(p2), 1.0)
        assert lhs >= rhs - 1e-9


def test_round_trip_property():
    rng = np.random.default_rng(4)
    for _ in range(50):
        curve = random_curve(rng)
        p = float(rng.uniform(0.0, curve.max_power_kw))
        w = curve.work(p, 1.0)
        back = curve.min_power_for_work(w, 1.0)
        assert back == pytest.approx(p, rel=1e-9, abs=1e-9)


def test_hypograph_exactness_property():
    rng = np.random.default_rng(5)
    for _ in range(30):
        curve = random_curve(rng)
        rows = curve.hypograph_rows()
        for p in rng.uniform(0.0, curve.max_power_kw, 5):
            cap = min(s * p + b for s, b in rows)
            assert cap == pytest.approx(curve.work(float(p), 1.0), abs=1e-9)


def test_vectorized_evaluation_matches_scalar():
    curve = two_segment_curve()
    powers = np.array([0.0, 10.0, 49.999, 50.0, 75.0, 100.0])
    rates = curve.rate(powers)
    for p, r in zip(powers, rates):
        assert r == pytest.approx(curve.work(float(p), 1.0))


def test_constructor_rejects_bad_shapes():
    with pytest.raises(CurveError):  # does not start at zero power
        ProcessingCurve.from_breakpoints([(10.0, 0.0), (100.0, 90.0)])
    with pytest.raises(CurveError):  # work at zero power
        ProcessingCurve.from_breakpoints([(0.0, 5.0), (100.0, 105.0)])
    with pytest.raises(CurveError):  # slopes not strictly decreasing
        ProcessingCurve.from_breakpoints([(0.0, 0.0), (50.0, 50.0), (100.0, 110.0)])
    with pytest.raises(CurveError):  # negative slope
        ProcessingCurve.from_breakpoints([(0.0, 0.0), (50.0, 100.0), (100.0, 90.0)])
    with pytest.raises(CurveError):  # zero-width segment
        ProcessingCurve.from_breakpoints([(0.0, 0.0), (50.0, 100.0), (50.0, 100.0)])
    with pytest.raises(CurveError):  # single point is not a curve
        ProcessingCurve.from_breakpoints([(0.0, 0.0)])
