import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nfdx.errors import DomainError
from nfdx.physics import (
    HY6201,
    AntennaSpec,
    BearingGeometry,
    ImbalanceSpec,
    ImpedancePair,
    imbalance_force,
    inner_race_frequency,
    outer_race_frequency,
    reactive_near_field_radius,
    reflection_coefficient,
)

C = 299_792_458.0


def test_hy6201_inner_race():
    # 3.5 * 25 * (1 + 6/22) = 87.5 * 28/22
    assert inner_race_frequency(HY6201, 25.0) == pytest.approx(87.5 * 28 / 22, rel=1e-12)
    assert inner_race_frequency(HY6201, 25.0) == pytest.approx(111.3636, abs=1e-4)
    assert abs(inner_race_frequency(HY6201, 25.0) - 111.3) < 0.1


def test_hy6201_outer_race_differs_from_reference_63_8():
    f = outer_race_frequency(HY6201, 25.0)
    assert f == pytest.approx(87.5 * 16 / 22, rel=1e-12)
    assert f == pytest.approx(63.6364, abs=1e-4)
    assert abs(f - 63.8) > 0.15


def test_vanishing_ratio_and_right_angle():
    # D_b cannot be 0 by invariant; a 90 degree contact angle kills the ratio term instead
    g = BearingGeometry(7, 6.0, 22.0, contact_angle=89.999999999)
    assert inner_race_frequency(g, 25.0) == pytest.approx(87.5, rel=1e-9)
    assert outer_race_frequency(g, 25.0) == pytest.approx(inner_race_frequency(g, 25.0), rel=1e-9)


def test_sum_identity_hy6201():
    total = inner_race_frequency(HY6201, 25.0) + outer_race_frequency(HY6201, 25.0)
    assert total == pytest.approx(175.0, rel=1e-12)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n_balls=0, ball_diameter=6, pitch_diameter=22),
        dict(n_balls=7, ball_diameter=0, pitch_diameter=22),
        dict(n_balls=7, ball_diameter=6, pitch_diameter=6),
        dict(n_balls=7, ball_diameter=6, pitch_diameter=22, contact_angle=90),
        dict(n_balls=7, ball_diameter=6, pitch_diameter=22, contact_angle=-1),
    ],
)
def test_geometry_invariants(kwargs):
    with pytest.raises(DomainError):
        BearingGeometry(**kwargs)


@pytest.mark.parametrize("f", [0.0, -1.0, math.nan])
def test_bad_shaft_frequency(f):
    with pytest.raises(DomainError):
        inner_race_frequency(HY6201, f)


geometries = st.builds(
    BearingGeometry,
    n_balls=st.integers(1, 40),
    ball_diameter=st.floats(0.1, 50),
    pitch_diameter=st.floats(51, 500),
    contact_angle=st.floats(0, 89.9),
)


@given(geometries, st.floats(0.1, 500))
def test_sum_identity_property(g, f):
    total = inner_race_frequency(g, f) + outer_race_frequency(g, f)
    assert total == pytest.approx(g.n_balls * f, rel=1e-12)


@given(geometries, st.floats(0.1, 500))
def test_inner_exceeds_outer_and_both_positive(g, f):
    fi, fo = inner_race_frequency(g, f), outer_race_frequency(g, f)
    assert fo > 0 and fi > 0
    if g.ratio_cos > 0:
        assert fi > fo


def test_imbalance_force_examples():
    assert imbalance_force(ImbalanceSpec(0.0, 0.05, 157.08)) == 0.0
    assert imbalance_force(ImbalanceSpec(0.01, 0.05, 2 * math.pi * 25)) == pytest.approx(
        0.0005 * 157.07963267948966**2, rel=1e-12
    )
    assert imbalance_force(ImbalanceSpec(0.01, 0.05, 2 * math.pi * 25)) == pytest.approx(12.337, abs=5e-4)


@given(st.floats(0, 10), st.floats(0, 1), st.floats(0, 1e3), st.floats(0.1, 10))
def test_imbalance_force_quadratic_in_speed(m, r, w, k):
    f1 = imbalance_force(ImbalanceSpec(m, r, w))
    fk = imbalance_force(ImbalanceSpec(m, r, k * w))
    assert fk == pytest.approx(k * k * f1, rel=1e-12, abs=1e-300)


def test_imbalance_rejects_negative():
    with pytest.raises(DomainError):
        ImbalanceSpec(-1, 0.05, 1.0)


def test_antenna_wavelength():
    a = AntennaSpec(0.05, 5.8e9)
    assert a.wavelength * a.carrier_frequency == pytest.approx(C, rel=1e-9)
    assert a.wavelength == pytest.approx(0.051688, abs=1e-6)


@pytest.mark.parametrize(
    "carrier, expected, spec_value",
    [
        # 0.62 * sqrt(0.05**3 / (c / f)), evaluated directly
        (5.8e9, 0.030489502733034694, 0.030466),
        (433e6, 0.008330676933634765, 0.008329),
    ],
)
def test_reactive_near_field_radius(carrier, expected, spec_value):
    r = reactive_near_field_radius(AntennaSpec(0.05, carrier))
    assert r == pytest.approx(expected, rel=1e-12)
    assert r == pytest.approx(spec_value, rel=1e-3)


def test_near_field_radius_at_l_equal_lambda():
    lam = C / 1e9
    assert reactive_near_field_radius(AntennaSpec(lam, 1e9)) == pytest.approx(0.62 * lam, rel=1e-12)


def test_near_field_radius_larger_at_higher_carrier():
    low = reactive_near_field_radius(AntennaSpec(0.05, 433e6))
    high = reactive_near_field_radius(AntennaSpec(0.05, 5.8e9))
    assert low < high


@given(st.floats(0.001, 1.0), st.floats(0.001, 1.0), st.floats(1e8, 1e10))
def test_near_field_monotone_in_size(l1, l2, f):
    if l1 == l2:
        return
    lo, hi = sorted((l1, l2))
    assert reactive_near_field_radius(AntennaSpec(lo, f)) < reactive_near_field_radius(AntennaSpec(hi, f))


@given(st.floats(1e8, 1e10), st.floats(1e8, 1e10))
def test_near_field_decreasing_in_wavelength(f1, f2):
    if f1 == f2:
        return
    lo, hi = sorted((f1, f2))  # higher frequency = shorter wavelength = larger radius
    assert reactive_near_field_radius(AntennaSpec(0.05, lo)) < reactive_near_field_radius(AntennaSpec(0.05, hi))


@pytest.mark.parametrize(
    "zi, zo, expected",
    [(50 + 0j, 50 + 0j, 0), (0, 50, -1), (100 + 0j, 50 + 0j, 1 / 3)],
)
def test_reflection_coefficient_examples(zi, zo, expected):
    assert reflection_coefficient(ImpedancePair(zi, zo)) == pytest.approx(expected, abs=1e-15)


def test_reflection_zero_denominator():
    with pytest.raises(DomainError):
        ImpedancePair(50, -50)


passive = st.builds(complex, st.floats(0, 1e4), st.floats(-1e4, 1e4))


@given(passive, passive)
def test_reflection_antisymmetric(zi, zo):
    if abs(zi + zo) < 1e-6:
        return
    g = reflection_coefficient(ImpedancePair(zi, zo))
    assert reflection_coefficient(ImpedancePair(zo, zi)) == pytest.approx(-g, abs=1e-9)


@given(passive, st.floats(1e-3, 1e4))
def test_reflection_bounded_for_real_reference(zi, zo):
    # |G| <= 1 needs a passive load against a real, positive reference
    g = reflection_coefficient(ImpedancePair(zi, complex(zo)))
    assert abs(g) <= 1 + 1e-12
