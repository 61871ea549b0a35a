import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperspec.photonics import (
    Cavity,
    branching_ratio,
    calibration_factor,
    fourier_limit_check,
    purcell_chain,
    purcell_factor,
    single_ion_oscillator_strength,
    spontaneous_lifetime,
)
from hyperspec.units import Q_, UnitError, to_si

# CODATA 2018 exact / recommended values, typed in independently of scipy
E_CHARGE = 1.602176634e-19
EPS0 = 8.8541878128e-12
M_E = 9.1093837015e-31
C_LIGHT = 299792458.0


def textbook_lifetime(f, lam, n):
    """1/tau = 2 pi e^2 n^2 f / (eps0 m_e c lambda^2), the emission-from-absorption relation."""
    return 1.0 / (2 * math.pi * E_CHARGE**2 * n**2 * f / (EPS0 * M_E * C_LIGHT * lam**2))


def test_calibrated_reference_lifetime():
    T = spontaneous_lifetime(6.3e-7).T_spon
    assert T.to("ms").magnitude == pytest.approx(2.5, rel=0.05)


def test_uncalibrated_matches_textbook_relation():
    raw = spontaneous_lifetime(6.3e-7, calibrated=False).T_spon.to("s").magnitude
    oracle = textbook_lifetime(6.3e-7, 619.011e-9, 1.93)
    assert raw == pytest.approx(oracle, rel=1e-6)
    assert raw == pytest.approx(2.5e-3, rel=0.2)
    assert calibration_factor() == pytest.approx(1.0, abs=0.05)


def test_intrinsic_local_field_model():
    r = spontaneous_lifetime(6.3e-7, local_field="intrinsic")
    assert r.T_spon.to("ms").magnitude == pytest.approx(2.5, rel=1e-9)
    assert r.chi == pytest.approx(((1.93**2 + 2) / 3) ** 2)
    with pytest.raises(ValueError):
        spontaneous_lifetime(6.3e-7, local_field="bogus")


def test_branching_ratio_example():
    assert branching_ratio(140e-6, 2.5e-3) == pytest.approx(0.056, abs=0.002)
    assert branching_ratio("140 us", "2.5 ms") == pytest.approx(0.056)
    with pytest.raises(ValueError):
        branching_ratio(3e-3, 2.5e-3)


def test_orientation_average_factor():
    assert single_ion_oscillator_strength(2.1e-7) == pytest.approx(6.3e-7)
    with pytest.raises(ValueError):
        single_ion_oscillator_strength(-1.0)


def test_default_cavity():
    cav = Cavity()
    assert cav.quality_factor == pytest.approx(6.46e5, rel=1e-3)
    w2 = 619.011e-9 / math.pi * math.sqrt(2e-6 * 20e-6)
    assert cav.mode_volume == pytest.approx(math.pi / 4 * w2 * 2e-6, rel=1e-12)


def test_purcell_chain_reference():
    out = purcell_chain(xi=0.056)
    assert out["C"] == pytest.approx(340, rel=0.15)
    fl = fourier_limit_check(340, 140e-6, 3e-6)
    assert fl.satisfied
    assert fl.margin == pytest.approx(3.64, abs=0.01)


def test_chain_from_oscillator_strength():
    out = purcell_chain(P_avg=2.1e-7)
    assert out["T_spon_s"] == pytest.approx(2.5e-3, rel=0.05)
    assert out["xi"] == pytest.approx(0.056, rel=0.05)
    assert out["conventions"]["lambda_in_purcell"] == "vacuum"
    with pytest.raises(UnitError):
        purcell_chain()


def test_cavity_overrides():
    cav = Cavity.from_inputs(Q="1e6", V=Q_(2.0, "um**3"))
    assert cav.quality_factor == 1e6
    assert cav.mode_volume == pytest.approx(2e-18)
    assert cav.conventions()["Q"] == "given"
    with pytest.raises(ValueError):
        Cavity(mirror_roc=1e-6)


def test_medium_convention_divides_by_n_cubed():
    vac = purcell_factor(0.056, 619e-9, 6e5, 2e-18, 1.93, "vacuum")
    med = purcell_factor(0.056, 619e-9, 6e5, 2e-18, 1.93, "medium")
    assert vac / med == pytest.approx(1.93**3)
    with pytest.raises(ValueError):
        purcell_factor(0.056, 619e-9, 6e5, 2e-18, 1.93, "other")


def test_unit_mismatch_rejected():
    with pytest.raises(UnitError):
        purcell_factor(0.056, "619 s", 6e5, 2e-18)
    with pytest.raises(UnitError):
        to_si("3 parsecs/banana", "m")
    with pytest.raises(UnitError):
        to_si(5.0, "m", allow_bare=False)
    assert to_si("619.011 nm", "m") == pytest.approx(619.011e-9)


def test_fourier_check_is_strict():
    assert not fourier_limit_check(2 * 140 / 3, 140e-6, 3e-6).satisfied


@settings(max_examples=50, deadline=None)
@given(st.floats(1e3, 1e7), st.floats(1.01, 3.0))
def test_purcell_monotone_in_q(Q, k):
    assert purcell_factor(0.05, 619e-9, Q * k, 2e-18) > purcell_factor(0.05, 619e-9, Q, 2e-18)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-9, 1e-5), st.floats(1.01, 3.0))
def test_lifetime_decreases_with_strength(P, k):
    a = spontaneous_lifetime(P).T_spon.magnitude
    b = spontaneous_lifetime(P * k).T_spon.magnitude
    assert b < a
    assert a / b == pytest.approx(k, rel=1e-12)
