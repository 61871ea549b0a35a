import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import oracle_agrees, random_scheme
from hyperspec import kernels
from hyperspec.shb import (
    LevelScheme,
    amplitude_sum,
    find_extrema,
    fit_hole_decay,
    predict_features,
    simulate_spectrum,
)

REF_SCHEME = LevelScheme.from_splittings((5.99, 10.42), (1.4, 2.9))


def positions(feats, kind):
    return sorted(round(f.detuning, 6) for f in feats if f.kind == kind)


def test_reference_scheme_features():
    feats = predict_features(REF_SCHEME)
    anti = positions(feats, "antihole")
    holes = positions(feats, "hole")
    for x in (5.99, 10.42, 16.41):
        assert any(abs(a - x) < 1e-9 for a in anti)
        assert any(abs(a + x) < 1e-9 for a in anti)
    for x in (1.4, 2.9, 4.3):
        assert any(abs(h - x) < 1e-9 for h in holes)
        assert any(abs(h + x) < 1e-9 for h in holes)
    centre = [f for f in feats if f.detuning == 0.0]
    assert centre[0].amplitude == -1.0


def test_conservation_uniform_strengths():
    assert abs(amplitude_sum(REF_SCHEME)) < 1e-9


def test_single_ground_level_gives_central_hole_only():
    feats = predict_features(LevelScheme((0.0,), (0.0, 2.0)))
    assert [(f.detuning, f.amplitude) for f in feats] == [(0.0, -1.0)]


def test_positions_scale_with_splittings():
    a = predict_features(REF_SCHEME)
    b = predict_features(REF_SCHEME.scaled(2.0))
    assert np.allclose([2 * f.detuning for f in a], [f.detuning for f in b])
    assert np.allclose([f.amplitude for f in a], [f.amplitude for f in b])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_features_are_symmetric(seed):
    scheme = random_scheme(np.random.default_rng(seed))
    feats = predict_features(scheme)
    pos = {round(f.detuning, 9): f.amplitude for f in feats}
    for x, amp in pos.items():
        assert round(-x, 9) in pos
    if np.allclose(scheme.strengths, scheme.strengths[0, 0]):
        assert abs(amplitude_sum(scheme)) < 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_matches_rate_equation_oracle(seed):
    assert oracle_agrees(random_scheme(np.random.default_rng(seed)))


def test_spectrum_depth_and_grid():
    spec = simulate_spectrum(REF_SCHEME, width=0.2, depth=0.3)
    assert spec.delta_absorption[np.argmin(np.abs(spec.detuning))] == pytest.approx(-0.3, rel=1e-9)
    flat = simulate_spectrum(REF_SCHEME, width=0.2, depth=0.0)
    assert not np.any(flat.delta_absorption)
    with pytest.raises(ValueError):
        simulate_spectrum(REF_SCHEME, width=0.2, depth=0.3, grid=(-20, 20, 0.1))
    with pytest.raises(ValueError):
        simulate_spectrum(REF_SCHEME, width=0.2, depth=1.5)


def test_simulated_extrema_within_one_step():
    spec = simulate_spectrum(REF_SCHEME, width=0.1, depth=0.5, grid=(-20, 20, 0.01))
    ext = find_extrema(spec.detuning, spec.delta_absorption, rel_threshold=0.01)
    for x in (0.0, 1.4, 2.9, 4.3, 5.99, 10.42, 16.41):
        for sgn in (1, -1):
            assert min(abs(e.detuning - sgn * x) for e in ext) <= 0.01 + 1e-9


def test_scheme_validation():
    with pytest.raises(ValueError):
        LevelScheme((0.0, 0.0), (0.0,))
    with pytest.raises(ValueError):
        LevelScheme((0.0, 1.0), (0.0,), strengths=[[1.0], [-1.0]])
    with pytest.raises(ValueError):
        LevelScheme((0.0, 1.0), (0.0, 1.0), strengths=[[0.0, 0.0], [1.0, 1.0]])


def test_numba_and_numpy_paths_agree():
    if not kernels.HAVE_NUMBA:
        pytest.skip("numba disabled")
    rng = np.random.default_rng(1)
    x = np.linspace(-5, 5, 401)
    pos, amp = rng.normal(size=7), rng.normal(size=7)
    assert np.allclose(kernels.lorentzian_sum(x, pos, amp, 0.1, True),
                       kernels.lorentzian_sum(x, pos, amp, 0.1, False), rtol=1e-12, atol=1e-14)
    scheme = random_scheme(rng)
    assert oracle_agrees(scheme, use_numba=True) and oracle_agrees(scheme, use_numba=False)


def test_hole_decay_exact():
    t = np.linspace(0.5, 20, 10)
    fit = fit_hole_decay(t, 2.0 * np.exp(-t / 5.0))
    assert fit.T1 == pytest.approx(5.0, rel=1e-8)
    assert fit.A == pytest.approx(2.0, rel=1e-8)


def test_hole_decay_noisy():
    rng = np.random.default_rng(11)
    t = np.linspace(0.5, 15, 8)
    hits = 0
    for _ in range(50):
        y = np.exp(-t / 5.0) + rng.normal(0, 0.1 * np.exp(-t / 5.0))
        hits += abs(fit_hole_decay(t, y).T1 - 5.0) < 1.0
    assert hits >= 45


def test_hole_decay_errors():
    t = np.linspace(1, 10, 6)
    with pytest.raises(ValueError):
        fit_hole_decay(t[:3], np.exp(-t[:3]))
    with pytest.raises(ValueError):
        fit_hole_decay(t, np.exp(t / 5))
    with pytest.raises(ValueError):
        fit_hole_decay(t, np.exp(-t / 5), optical_t1=2.0)
