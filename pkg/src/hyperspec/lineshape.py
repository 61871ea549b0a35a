"""Echo-decay and line-profile fitting.

All fits run on linear amplitudes.  Inputs are rescaled internally
(delays by their maximum, amplitudes by their peak magnitude) so results are
invariant to the units and overall scale of the data.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

FWHM_GAUSS = 2 * math.sqrt(2 * math.log(2))


class NotDecayingError(ValueError):
    pass


def _check_series(tau, amp, sigma, min_points):
    t = np.asarray(tau, float)
    y = np.asarray(amp, float)
    if t.ndim != 1 or t.shape != y.shape:
        raise ValueError("delays and amplitudes must be 1-D arrays of equal length")
    if len(t) < min_points:
        raise ValueError(f"need at least {min_points} points, got {len(t)}")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite values in series")
    if np.any(np.diff(t) <= 0):
        raise ValueError("delays must be strictly increasing")
    w = None
    if sigma is not None:
        s = np.asarray(sigma, float)
        if s.shape != t.shape or np.any(s <= 0):
            raise ValueError("uncertainties must be positive, one per point")
        w = 1.0 / s
    return t, y, w


def _lsq(fun, x0, w, **kw):
    def resid(x):
        r = fun(x)
        return r if w is None else r * w
    return least_squares(resid, x0, xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=20000, **kw)


def _cov(res, n_par):
    J = res.jac
    dof = max(len(res.fun) - n_par, 1)
    s2 = 2 * res.cost / dof
    try:
        cov = np.linalg.pinv(J.T @ J) * s2
    except np.linalg.LinAlgError:  # pragma: no cover
        cov = np.full((n_par, n_par), np.inf)
    return cov


@dataclass
class EchoFit:
    T2: float
    T2_err: float
    A: float
    A_err: float
    residual_norm: float

    @property
    def gamma_h(self) -> float:
        """Homogeneous linewidth 1/(pi T2), Hz."""
        return 1.0 / (math.pi * self.T2)

    @property
    def gamma_h_err(self) -> float:
        return self.gamma_h * self.T2_err / self.T2

    def to_dict(self) -> dict:
        return {"T2_s": self.T2, "T2_err_s": self.T2_err, "A": self.A, "A_err": self.A_err,
                "gamma_h_Hz": self.gamma_h, "gamma_h_err_Hz": self.gamma_h_err,
                "residual_norm": self.residual_norm}


def homogeneous_linewidth(T2: float) -> float:
    return 1.0 / (math.pi * T2)


def fit_echo_decay(tau, amp, sigma=None) -> EchoFit:
    """Fit A exp(-2 tau / T2) to echo amplitudes (delays in seconds)."""
    t, y, w = _check_series(tau, amp, sigma, 4)
    ts, ys = t.max(), np.max(np.abs(y))
    if ys == 0:
        raise NotDecayingError("all amplitudes are zero")
    tn, yn = t / ts, y / ys
    wn = None if w is None else w * ys
    slope = np.polyfit(tn, yn, 1)[0]
    if slope * np.sign(yn.mean()) >= 0:
        raise NotDecayingError("echo amplitudes do not decay")
    pos = yn > 0
    if pos.sum() >= 2:
        k = -np.polyfit(tn[pos], np.log(yn[pos]), 1)[0]
    else:
        k = 1.0
    k = max(k, 1e-3)
    x0 = [yn[0] * math.exp(k * tn[0]), 2.0 / k]

    def model(x, tt=tn):
        return x[0] * np.exp(-2 * tt / x[1])

    res = _lsq(lambda x: model(x) - yn, x0, wn, method="lm")
    A, T2 = res.x
    if T2 <= 0:
        raise NotDecayingError("fitted T2 is not positive")
    cov = _cov(res, 2)
    T2_err = math.sqrt(max(cov[1, 1], 0)) * ts
    if T2_err > T2 * ts:
        raise ValueError("T2 uncertainty exceeds 100%")
    return EchoFit(T2 * ts, T2_err, A * ys, math.sqrt(max(cov[0, 0], 0)) * ys,
                   float(np.linalg.norm(res.fun)) * ys)


@dataclass
class ModulatedEchoFit:
    T2: float
    T2_err: float
    m: float
    m_err: float
    omega: float  # rad/s
    omega_err: float
    A: float
    residual_norm: float
    omega_identified: bool = True
    warnings: list = field(default_factory=list)

    @property
    def gamma_h(self) -> float:
        return 1.0 / (math.pi * self.T2)

    @property
    def frequency(self) -> float:
        """omega / 2 pi in Hz."""
        return self.omega / (2 * math.pi)

    def to_dict(self) -> dict:
        return {"T2_s": self.T2, "T2_err_s": self.T2_err, "m": self.m, "m_err": self.m_err,
                "omega_rad_per_s": self.omega, "omega_err_rad_per_s": self.omega_err,
                "modulation_frequency_Hz": self.frequency, "A": self.A,
                "gamma_h_Hz": self.gamma_h, "residual_norm": self.residual_norm,
                "omega_identified": self.omega_identified, "warnings": self.warnings}


def _modulated(x, t):
    A, T2, m, om = x
    return A * np.exp(-2 * t / T2) * (1 + m * np.cos(om * t / 2) ** 2)


def _modulated_jac(x, t):
    A, T2, m, om = x
    e = np.exp(-2 * t / T2)
    c2 = np.cos(om * t / 2) ** 2
    f = 1 + m * c2
    return np.column_stack([e * f, A * e * f * 2 * t / T2**2, A * e * c2,
                            -A * e * m * np.sin(om * t / 2) * np.cos(om * t / 2) * t])


def omega_grid(tau, n: int = 20) -> np.ndarray:
    """Log-spaced angular frequencies from one cycle per span up to Nyquist."""
    t = np.asarray(tau, float)
    span = t[-1] - t[0]
    f_lo, f_hi = 1.0 / span, 1.0 / (2 * np.min(np.diff(t)))
    return 2 * math.pi * np.geomspace(f_lo, f_hi, n)


def fit_modulated_echo(tau, amp, init: dict | None = None, sigma=None, n_omega: int = 20,
                       n_refine: int = 3) -> ModulatedEchoFit:
    """Fit E = A exp(-2 tau/T2) [1 + m cos^2(omega tau / 2)] with an omega multistart.

    ``init`` may give starting values for T2 (s), m and omega (rad/s); a given
    omega is tried in addition to the grid.  Grid points are ranked by a
    linear least-squares cost at fixed T2 and the best ``n_refine`` are
    refined.  When omega cannot be identified (fewer than one period in the
    data or m consistent with zero) the result falls back to the m = 0 fit
    and ``omega_identified`` is False.
    """
    t, y, w = _check_series(tau, amp, sigma, 10)
    plain = fit_echo_decay(t, y, sigma)
    ts, ys = t.max(), np.max(np.abs(y))
    tn, yn = t / ts, y / ys
    wn = None if w is None else w * ys
    init = init or {}
    T2_0 = init.get("T2", plain.T2) / ts
    m_0 = init.get("m", 0.5)
    omegas = list(omega_grid(t, n_omega) * ts)
    if "omega" in init:
        omegas.insert(0, init["omega"] * ts)
    # screen the grid: at fixed T2 and omega the model is linear in (A, A m)
    decay = np.exp(-2 * tn / T2_0)
    ww = np.ones_like(tn) if wn is None else wn
    costs = []
    for om in omegas:
        basis = np.column_stack([decay, decay * np.cos(om * tn / 2) ** 2]) * ww[:, None]
        coef, *_ = np.linalg.lstsq(basis, yn * ww, rcond=None)
        costs.append(float(np.sum((basis @ coef - yn * ww) ** 2)))
        if "omega" in init and len(costs) == 1:
            costs[0] = -np.inf  # always refine a user-supplied start
    best = None
    for idx in np.argsort(costs, kind="stable")[:n_refine]:
        om = omegas[idx]
        basis = np.column_stack([decay, decay * np.cos(om * tn / 2) ** 2])
        c0, c1 = np.linalg.lstsq(basis, yn, rcond=None)[0]
        m0 = c1 / c0 if c0 != 0 and abs(c1 / c0) < 10 else m_0
        res = _lsq(lambda x: _modulated(x, tn) - yn, [c0, T2_0, m0, om], wn, method="lm",
                   jac=lambda x: _modulated_jac(x, tn) * (1 if wn is None else wn[:, None]))
        if best is None or res.cost < best.cost:
            best = res
    A, T2, m, om = best.x
    cov = _cov(best, 4)
    err = np.sqrt(np.clip(np.diag(cov), 0, None))
    notes = []
    identified = True
    periods = om * (tn[-1] - tn[0]) / (2 * math.pi)
    if periods < 1:
        identified = False
        notes.append("fitted modulation completes less than one period over the data")
    # 3 sigma: the best of many trial frequencies overstates significance
    if abs(m) < 0.01 or abs(m) < 3 * err[2]:
        identified = False
        notes.append("modulation amplitude consistent with zero")
    if not identified:
        warnings.warn("omega not identifiable; falling back to m = 0 fit", stacklevel=2)
        return ModulatedEchoFit(plain.T2, plain.T2_err, 0.0, 0.0, float("nan"), float("nan"),
                                plain.A, plain.residual_norm, False, notes)
    return ModulatedEchoFit(float(T2 * ts), float(err[1] * ts), float(m), float(err[2]),
                            float(om / ts), float(err[3] / ts), float(A * ys),
                            float(np.linalg.norm(best.fun)) * ys, True, notes)


# --- line profiles ---------------------------------------------------------

def lorentzian(x, a, x0, fwhm, b=0.0):
    return a / (1 + ((x - x0) / (fwhm / 2)) ** 2) + b


def gaussian(x, a, x0, fwhm, b=0.0):
    return a * np.exp(-0.5 * ((x - x0) / (fwhm / FWHM_GAUSS)) ** 2) + b


PROFILES = {"lorentzian": lorentzian, "gaussian": gaussian}


@dataclass
class LineFit:
    kind: str
    center: float
    center_err: float
    fwhm: float
    fwhm_err: float
    amplitude: float
    baseline: float
    aic: dict
    preferred: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "center_Hz": self.center, "center_err_Hz": self.center_err,
                "fwhm_Hz": self.fwhm, "fwhm_err_Hz": self.fwhm_err, "amplitude": self.amplitude,
                "baseline": self.baseline, "aic": self.aic, "preferred_kind": self.preferred}


def fit_line(detuning, amp, kind: str = "auto", sigma=None) -> LineFit:
    """Fit a Lorentzian or Gaussian peak plus constant baseline.

    Both profiles are always fitted and scored by AIC; ``kind='auto'``
    returns the lower-AIC one.
    """
    x, y, w = _check_series(detuning, amp, sigma, 5)
    if kind not in ("auto", *PROFILES):
        raise ValueError(f"unknown profile kind {kind!r}")
    xc, xs = 0.5 * (x[0] + x[-1]), 0.5 * (x[-1] - x[0])
    ys = np.max(np.abs(y))
    if ys == 0:
        raise ValueError("all amplitudes are zero")
    xn, yn = (x - xc) / xs, y / ys
    wn = None if w is None else w * ys
    base0 = float(np.median(np.concatenate([yn[:2], yn[-2:]])))
    ipk = int(np.argmax(np.abs(yn - base0)))
    edge = max(1, len(x) // 20)
    if ipk < edge or ipk >= len(x) - edge:
        raise ValueError("peak lies at the edge of the detuning range")
    a0 = yn[ipk] - base0
    half = np.abs(yn - base0) >= abs(a0) / 2
    width0 = max(np.ptp(xn[half]), 2 * np.min(np.diff(xn)))
    fits = {}
    for name, f in PROFILES.items():
        res = _lsq(lambda p, f=f: f(xn, *p) - yn, [a0, xn[ipk], width0, base0], wn, method="lm")
        n = len(xn)
        rss = max(2 * res.cost, 1e-300)
        fits[name] = (res, n * math.log(rss / n) + 2 * 4)
    preferred = min(fits, key=lambda k: fits[k][1])
    use = preferred if kind == "auto" else kind
    res = fits[use][0]
    cov = _cov(res, 4)
    err = np.sqrt(np.clip(np.diag(cov), 0, None))
    a, x0, fw, b = res.x
    return LineFit(use, float(x0 * xs + xc), float(err[1] * xs), float(abs(fw) * xs), float(err[2] * xs),
                   float(a * ys), float(b * ys), {k: float(v[1]) for k, v in fits.items()}, preferred)
