"""Spectral hole burning: feature prediction, spectrum synthesis and hole-decay fits.

Burn model: a laser at detuning 0 excites, in every inhomogeneous class, the
transitions g_i -> e_j it is resonant with.  In the weak-burn (linear) limit
each excitation removes population from g_i and returns it to ground level k
with branching ratio ``b_kj = S_kj / sum_k' S_k'j``.  A probe at detuning nu
then sees transition g_k -> e_l of the burnt class at

    nu = (e_l - e_j) - (g_k - g_i)

with weight ``S_ij * dp_k * S_kl``, where ``dp_i = -(1 - b_ij)`` and
``dp_k = b_kj`` (k != i).  Features with k == i are holes, k != i antiholes.

Conservation rule: summing signed amplitudes over all features gives
``sum_ij S_ij d_i sum_k dp_k R_k`` with row sums ``R_k = sum_l S_kl``; since
``sum_k dp_k = 0``, this vanishes whenever all R_k are equal (uniform strengths).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from . import kernels

POSITION_TOL = 1e-9  # MHz; coincident features are merged


@dataclass(frozen=True)
class LevelScheme:
    """Cumulative ground / excited energies (MHz, ascending from 0)."""

    ground: tuple
    excited: tuple
    strengths: np.ndarray | None = None
    degeneracy: tuple | None = None

    def __post_init__(self):
        g = np.asarray(self.ground, float)
        e = np.asarray(self.excited, float)
        for name, a in (("ground", g), ("excited", e)):
            if a.ndim != 1 or len(a) == 0 or a[0] != 0 or np.any(np.diff(a) <= 0):
                raise ValueError(f"{name} energies must start at 0 and increase strictly")
        S = np.ones((len(g), len(e))) if self.strengths is None else np.asarray(self.strengths, float)
        if S.shape != (len(g), len(e)) or np.any(S < 0) or not np.all(np.isfinite(S)):
            raise ValueError("strength matrix must be non-negative with shape (N_g, N_e)")
        if np.any(S.sum(axis=1) == 0) or np.any(S.sum(axis=0) == 0):
            raise ValueError("strength matrix has an all-zero row or column")
        d = np.ones(len(g)) if self.degeneracy is None else np.asarray(self.degeneracy, float)
        if d.shape != g.shape or np.any(d <= 0):
            raise ValueError("degeneracy must be positive, one per ground level")
        object.__setattr__(self, "ground", tuple(g))
        object.__setattr__(self, "excited", tuple(e))
        object.__setattr__(self, "strengths", S)
        object.__setattr__(self, "degeneracy", tuple(d))

    @classmethod
    def from_splittings(cls, ground_gaps, excited_gaps, **kw) -> "LevelScheme":
        """Build from adjacent-level gaps, e.g. (5.99, 10.42) -> (0, 5.99, 16.41)."""
        return cls(tuple(np.concatenate([[0.0], np.cumsum(ground_gaps)])),
                   tuple(np.concatenate([[0.0], np.cumsum(excited_gaps)])), **kw)

    @property
    def branching(self) -> np.ndarray:
        S = self.strengths
        return S / S.sum(axis=0, keepdims=True)

    def scaled(self, c: float) -> "LevelScheme":
        return LevelScheme(tuple(c * np.asarray(self.ground)), tuple(c * np.asarray(self.excited)),
                           self.strengths, self.degeneracy)


@dataclass(frozen=True)
class Feature:
    detuning: float
    amplitude: float  # signed: negative = hole (less absorption)

    @property
    def kind(self) -> str:
        return "hole" if self.amplitude < 0 else "antihole"

    def to_dict(self) -> dict:
        return {"detuning_MHz": self.detuning, "sign": self.kind, "amplitude": self.amplitude}


def _raw_features(scheme: LevelScheme):
    g = np.asarray(scheme.ground)
    e = np.asarray(scheme.excited)
    S, b, d = scheme.strengths, scheme.branching, np.asarray(scheme.degeneracy)
    ng, ne = S.shape
    pos, amp = [], []
    for i in range(ng):
        for j in range(ne):
            if S[i, j] == 0:
                continue
            dp = b[:, j].copy()
            dp[i] -= 1.0
            w = S[i, j] * d[i]
            for k in range(ng):
                for l in range(ne):
                    if S[k, l] == 0 or dp[k] == 0:
                        continue
                    pos.append((e[l] - e[j]) - (g[k] - g[i]))
                    amp.append(w * dp[k] * S[k, l])
    return np.array(pos), np.array(amp)


def predict_features(scheme: LevelScheme, min_amplitude: float = 1e-12) -> list[Feature]:
    """Hole and antihole positions with signed relative amplitudes.

    Contributions at the same detuning are summed; the list is sorted by
    detuning and amplitudes are normalised so the central hole is -1.
    """
    pos, amp = _raw_features(scheme)
    if len(pos) == 0:
        # a single ground level cannot be pumped; keep only the saturation hole
        return [Feature(0.0, -1.0)]
    order = np.argsort(pos, kind="stable")
    pos, amp = pos[order], amp[order]
    merged: list[list[float]] = []
    for p, a in zip(pos, amp):
        if merged and abs(p - merged[-1][0]) <= POSITION_TOL:
            merged[-1][1] += a
            merged[-1][2] += 1
            merged[-1][0] += (p - merged[-1][0]) / merged[-1][2]
        else:
            merged.append([p, a, 1])
    centre = sum(a for p, a, _ in merged if abs(p) <= POSITION_TOL)
    norm = abs(centre) if centre != 0 else max(abs(a) for _, a, _ in merged)
    out = [Feature(0.0 if abs(p) <= POSITION_TOL else float(p), float(a / norm))
           for p, a, _ in merged]
    return [f for f in out if abs(f.amplitude) > min_amplitude]


def amplitude_sum(scheme: LevelScheme) -> float:
    """Signed sum of all unmerged feature amplitudes (zero for uniform strengths)."""
    return float(_raw_features(scheme)[1].sum())


@dataclass
class HoleSpectrum:
    features: list
    detuning: np.ndarray
    delta_absorption: np.ndarray
    hole_width: float

    def to_dict(self) -> dict:
        return {"features": [f.to_dict() for f in self.features], "hole_width_MHz": self.hole_width}


def simulate_spectrum(scheme: LevelScheme, width: float, depth: float,
                      grid: tuple[float, float, float] = (-20.0, 20.0, 0.01),
                      use_numba: bool | None = None) -> HoleSpectrum:
    """Sum of signed Lorentzians (FWHM ``width`` MHz) at the predicted features.

    ``grid`` is (start, stop, step) in MHz, inclusive of both ends.  The curve
    is scaled so the central hole reaches ``-depth``.
    """
    lo, hi, step = grid
    if width <= 0 or step <= 0 or hi <= lo:
        raise ValueError("width, step must be positive and hi > lo")
    if step > width / 5:
        raise ValueError(f"grid step {step} MHz too coarse for hole width {width} MHz (need <= width/5)")
    if not 0 <= depth <= 1:
        raise ValueError("burn depth must be within [0, 1]")
    feats = predict_features(scheme)
    n = int(round((hi - lo) / step)) + 1
    x = lo + step * np.arange(n)
    pos = np.array([f.detuning for f in feats])
    amp = np.array([f.amplitude for f in feats])
    curve = kernels.lorentzian_sum(x, pos, amp, width / 2, use_numba)
    at0 = kernels.lorentzian_sum(np.zeros(1), pos, amp, width / 2, use_numba)[0]
    curve = curve * (depth / abs(at0)) if depth > 0 else np.zeros_like(x)
    return HoleSpectrum(feats, x, curve, width)


def find_extrema(x: np.ndarray, y: np.ndarray, rel_threshold: float = 0.01) -> list[Feature]:
    """Local minima below zero and maxima above zero, ignoring tiny wiggles."""
    thr = rel_threshold * np.max(np.abs(y)) if len(y) else 0.0
    out = []
    for n in range(1, len(y) - 1):
        if y[n] < -thr and y[n] <= y[n - 1] and y[n] < y[n + 1]:
            out.append(Feature(float(x[n]), float(y[n])))
        elif y[n] > thr and y[n] >= y[n - 1] and y[n] > y[n + 1]:
            out.append(Feature(float(x[n]), float(y[n])))
    return out


def rate_equation_spectrum(scheme: LevelScheme, probe: np.ndarray, width: float,
                           n_classes: int | None = None, use_numba: bool | None = None) -> np.ndarray:
    """Brute-force ensemble simulation used as an oracle for :func:`predict_features`.

    The inhomogeneous line is discretised into ``n_classes`` offset classes
    (default: enough for ten classes per burn width);
    each is burnt by a Lorentzian laser (FWHM ``width``) at rate
    ``S_ij L(delta + e_j - g_i)``, populations change linearly, and a
    delta-function probe sums over classes by interpolation.
    """
    g = np.asarray(scheme.ground)
    e = np.asarray(scheme.excited)
    span = (g[-1] + e[-1]) + np.max(np.abs(probe)) + 20 * width
    if n_classes is None:
        n_classes = max(20000, int(math.ceil(20 * span / width)) + 1)
    delta = np.linspace(-span, span, n_classes)
    if delta[1] - delta[0] > width / 10:
        raise ValueError("too few classes to resolve the burn width")
    # burn rate from g_i scales with its population (degeneracy); branching does not
    S_burn = scheme.strengths * np.asarray(scheme.degeneracy)[:, None]
    dp = kernels.burn_populations(delta, g, e, S_burn, scheme.branching, width / 2, use_numba)
    return kernels.probe_absorption(probe, delta, dp, g, e, scheme.strengths, use_numba)


# --- hole decay ------------------------------------------------------------

@dataclass
class DecayFit:
    T1: float
    T1_err: float
    A: float
    A_err: float
    residual_norm: float
    covariance: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {"T1_s": self.T1, "T1_err_s": self.T1_err, "A": self.A, "A_err": self.A_err,
                "residual_norm": self.residual_norm}


def _exp(t, A, T):
    return A * np.exp(-t / T)


def fit_hole_decay(t_wait, area, optical_t1: float | None = None) -> DecayFit:
    """Single-exponential A exp(-t/T1) fit to hole area versus waiting time (s)."""
    t = np.asarray(t_wait, float)
    y = np.asarray(area, float)
    if len(t) < 4 or len(t) != len(y):
        raise ValueError("need at least 4 (t, area) points")
    if not np.all(np.isfinite(t)) or not np.all(np.isfinite(y)):
        raise ValueError("non-finite data")
    if optical_t1 is not None and np.any(t <= optical_t1):
        raise ValueError("waiting times must exceed the optical lifetime")
    slope = np.polyfit(t, y, 1)[0]
    if slope * np.sign(y.mean()) >= 0:
        raise ValueError("series is not decaying")
    T0 = (t.max() - t.min()) / max(math.log(max(y[np.argmin(t)] / y[np.argmax(t)], 1.0001)), 1e-3)
    A0 = y[np.argmin(t)] * math.exp(t.min() / T0)
    popt, pcov = curve_fit(_exp, t, y, p0=[A0, T0], maxfev=10000)
    if popt[1] <= 0 or not np.all(np.isfinite(pcov)):
        raise ValueError("fit did not yield a decaying exponential")
    err = np.sqrt(np.diag(pcov))
    r = y - _exp(t, *popt)
    return DecayFit(float(popt[1]), float(err[1]), float(popt[0]), float(err[0]),
                    float(np.linalg.norm(r)), pcov)
