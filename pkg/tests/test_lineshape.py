import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import modulated_echo_trials
from hyperspec.lineshape import (
    NotDecayingError,
    fit_echo_decay,
    fit_line,
    fit_modulated_echo,
    gaussian,
    homogeneous_linewidth,
    lorentzian,
    omega_grid,
)


def test_exact_echo_decay():
    tau = np.linspace(1e-6, 10e-6, 12)
    fit = fit_echo_decay(tau, 0.7 * np.exp(-2 * tau / 3e-6))
    assert fit.T2 == pytest.approx(3e-6, rel=1e-9)
    assert fit.A == pytest.approx(0.7, rel=1e-9)
    assert fit.gamma_h * math.pi * fit.T2 == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("T2, expected, window", [(3.0e-6, 106.1e3, (87e3, 129e3)),
                                                  (4.5e-6, 70.7e3, (56e3, 88e3))])
def test_homogeneous_linewidth_values(T2, expected, window):
    g = homogeneous_linewidth(T2)
    assert g == pytest.approx(expected, abs=0.05e3)
    assert window[0] <= g <= window[1]


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-7, 1e-2), st.floats(1e-3, 1e3))
def test_echo_fit_scale_and_unit_invariance(T2, A):
    tau = np.linspace(0.05, 2.0, 15) * T2
    y = A * np.exp(-2 * tau / T2)
    fit = fit_echo_decay(tau, y)
    assert fit.T2 == pytest.approx(T2, rel=1e-7)
    in_us = fit_echo_decay(tau * 1e6, y)
    assert in_us.T2 == pytest.approx(fit.T2 * 1e6, rel=1e-7)


def test_echo_noisy_within_error_bars():
    rng = np.random.default_rng(2)
    tau = np.linspace(20e-6, 1.6e-3, 40)
    inside = 0
    for _ in range(40):
        fit = fit_echo_decay(tau, np.exp(-2 * tau / 880e-6) + 0.02 * rng.normal(size=40))
        inside += abs(fit.T2 - 880e-6) < 3 * fit.T2_err
    assert inside >= 36


def test_echo_errors():
    tau = np.linspace(1, 10, 8)
    with pytest.raises(NotDecayingError):
        fit_echo_decay(tau, np.exp(tau / 5))
    with pytest.raises(ValueError):
        fit_echo_decay(tau[:3], np.exp(-tau[:3]))
    with pytest.raises(ValueError):
        fit_echo_decay(tau, np.full(8, np.nan))


def test_modulated_exact():
    tau = np.linspace(10e-6, 1.5e-3, 120)
    y = 1.3 * np.exp(-2 * tau / 680e-6) * (1 + 0.5 * np.cos(2 * np.pi * 2500 * tau / 2) ** 2)
    fit = fit_modulated_echo(tau, y)
    assert fit.omega_identified
    assert fit.T2 == pytest.approx(680e-6, rel=1e-6)
    assert fit.frequency == pytest.approx(2500.0, rel=1e-6)
    assert fit.m == pytest.approx(0.5, rel=1e-6)


def test_modulated_falls_back_without_modulation():
    rng = np.random.default_rng(4)
    tau = np.linspace(10e-6, 1.5e-3, 80)
    with pytest.warns(UserWarning):
        fit = fit_modulated_echo(tau, np.exp(-2 * tau / 680e-6) + 0.01 * rng.normal(size=80))
    assert not fit.omega_identified
    assert fit.m == 0.0
    assert fit.T2 == pytest.approx(680e-6, rel=0.05)
    assert fit.warnings


def test_omega_grid_spans_record():
    tau = np.linspace(0, 1e-3, 101)
    g = omega_grid(tau, 20)
    assert len(g) == 20
    assert g[0] == pytest.approx(2 * math.pi / 1e-3)
    assert g[-1] == pytest.approx(2 * math.pi * 0.5 / 1e-5)


def test_modulated_monte_carlo_small():
    assert modulated_echo_trials(20, seed=9) >= 19


def test_line_fit_lorentzian():
    rng = np.random.default_rng(5)
    f = np.linspace(5.99e6 - 150e3, 5.99e6 + 150e3, 601)
    y = lorentzian(f, 1.0, 5.99e6, 29e3) + 0.05 * rng.normal(size=f.size)
    fit = fit_line(f, y)
    assert fit.preferred == "lorentzian"
    assert fit.fwhm == pytest.approx(29e3, rel=0.03)
    assert fit.center == pytest.approx(5.99e6, abs=1e3)


def test_line_fit_gaussian_preferred():
    rng = np.random.default_rng(6)
    f = np.linspace(-60e9, 60e9, 401)
    y = gaussian(f, 1.0, 0.0, 9e9, 0.1) + 0.02 * rng.normal(size=f.size)
    fit = fit_line(f, y)
    assert fit.preferred == "gaussian"
    assert fit.fwhm == pytest.approx(9e9, rel=0.03)


def test_line_fit_forced_kind_and_wide_line():
    f = np.linspace(-100e9, 100e9, 301)
    y = lorentzian(f, 2.0, 1e9, 27e9)
    fit = fit_line(f, y, kind="lorentzian")
    assert fit.kind == "lorentzian"
    assert fit.fwhm == pytest.approx(27e9, rel=1e-6)


def test_line_fit_errors():
    f = np.linspace(0, 1, 100)
    with pytest.raises(ValueError):
        fit_line(f, lorentzian(f, 1.0, 0.0, 0.05))
    with pytest.raises(ValueError):
        fit_line(f, lorentzian(f, 1.0, 0.5, 0.05), kind="voigt")
