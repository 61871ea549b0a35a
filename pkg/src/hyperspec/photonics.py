"""Cavity enhancement chain: oscillator strength -> T_spon -> xi -> Purcell factor.

Inputs accept pint quantities, unit strings or bare SI floats; incompatible
dimensions raise :class:`~hyperspec.units.UnitError`.  Dimensioned results
are returned as pint quantities.

Emission-rate conventions (``local_field``):

``"absorption"`` (default)
    P was obtained from an absorption measurement, which already contains the
    local-field enhancement ``chi = ((n^2 + 2)/3)^2`` and a factor 1/n, so
    ``A = K0 n^2 P / lambda^2`` with ``K0 = 2 pi e^2 / (eps0 m_e c)``.
``"intrinsic"``
    P is a free-ion value and ``A = K0 n chi P / lambda^2``.

A calibration factor ``kappa`` multiplies A so that the reference point
(P = 6.3e-7, 619.011 nm, n = 1.93) gives T_spon = 2.5 ms; it is reported with
every result.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import constants as sc

from .units import Q_, UnitError, to_si

K0 = 2 * math.pi * sc.e**2 / (sc.epsilon_0 * sc.m_e * sc.c)  # m^2/s

Y2O3_INDEX = 1.93
PR_LINE_WAVELENGTH = 619.011e-9  # m, vacuum
REFERENCE_POINT = {"P": 6.3e-7, "wavelength_m": PR_LINE_WAVELENGTH, "n": Y2O3_INDEX, "T_spon_s": 2.5e-3}

LAMBDA_CONVENTIONS = ("vacuum", "medium")
LOCAL_FIELD_MODELS = ("absorption", "intrinsic")
DEFAULT_MIRROR_ROC = 22e-6  # m; fibre-mirror radius of curvature


def local_field_factor(n: float) -> float:
    return ((n * n + 2) / 3) ** 2


def single_ion_oscillator_strength(P_avg: float) -> float:
    """Single-ion value from the orientation-averaged one (factor 3)."""
    P_avg = to_si(P_avg, "dimensionless", "P_avg")
    if P_avg < 0:
        raise ValueError("oscillator strength must be non-negative")
    return 3.0 * P_avg


def _raw_rate(P: float, lam: float, n: float, local_field: str) -> float:
    if local_field == "absorption":
        fac = n * n
    elif local_field == "intrinsic":
        fac = n * local_field_factor(n)
    else:
        raise ValueError(f"local_field must be one of {LOCAL_FIELD_MODELS}")
    return K0 * fac * P / lam**2


def calibration_factor(local_field: str = "absorption") -> float:
    ref = REFERENCE_POINT
    raw = _raw_rate(ref["P"], ref["wavelength_m"], ref["n"], local_field)
    return 1.0 / (ref["T_spon_s"] * raw)


@dataclass(frozen=True)
class LifetimeResult:
    T_spon: object  # pint quantity (s)
    kappa: float
    chi: float
    local_field: str

    def to_dict(self) -> dict:
        return {"T_spon_s": float(self.T_spon.to("s").magnitude), "calibration_kappa": self.kappa,
                "local_field_chi": self.chi, "local_field_model": self.local_field}


def spontaneous_lifetime(P_single, wavelength=PR_LINE_WAVELENGTH, n=Y2O3_INDEX,
                         local_field: str = "absorption", calibrated: bool = True) -> LifetimeResult:
    """Radiative lifetime of the transition from its single-ion oscillator strength."""
    P = to_si(P_single, "dimensionless", "P_single")
    lam = to_si(wavelength, "m", "wavelength")
    n = to_si(n, "dimensionless", "n")
    if n < 1:
        raise ValueError("refractive index below 1 is nonphysical")
    if P <= 0 or lam <= 0:
        raise ValueError("oscillator strength and wavelength must be positive")
    kappa = calibration_factor(local_field) if calibrated else 1.0
    rate = kappa * _raw_rate(P, lam, n, local_field)
    return LifetimeResult(Q_(1.0 / rate, "s"), kappa, local_field_factor(n), local_field)


def branching_ratio(T1, T_spon) -> float:
    """xi = T1 / T_spon."""
    t1 = to_si(T1, "s", "T1")
    ts = to_si(T_spon, "s", "T_spon")
    if ts <= 0 or t1 < 0:
        raise ValueError("T_spon must be positive and T1 non-negative")
    if t1 > ts:
        raise ValueError(f"T1 = {t1} s exceeds T_spon = {ts} s (nonphysical branching ratio)")
    return t1 / ts


@dataclass(frozen=True)
class Cavity:
    """Plane-concave fibre cavity; explicit Q or V override the derived values."""

    finesse: float = 1e5
    length: float = 2e-6  # m
    mirror_roc: float = DEFAULT_MIRROR_ROC  # m
    wavelength: float = PR_LINE_WAVELENGTH  # m, vacuum
    Q: float | None = None
    V: float | None = None  # m^3
    waist: float | None = None  # m

    @classmethod
    def from_inputs(cls, finesse=1e5, length=2e-6, mirror_roc=DEFAULT_MIRROR_ROC,
                    wavelength=PR_LINE_WAVELENGTH, Q=None, V=None, waist=None) -> "Cavity":
        return cls(
            to_si(finesse, "dimensionless", "finesse"),
            to_si(length, "m", "length"),
            to_si(mirror_roc, "m", "mirror_roc"),
            to_si(wavelength, "m", "wavelength"),
            None if Q is None else to_si(Q, "dimensionless", "Q"),
            None if V is None else to_si(V, "m**3", "V"),
            None if waist is None else to_si(waist, "m", "waist"),
        )

    def __post_init__(self):
        for k in ("finesse", "length", "mirror_roc", "wavelength"):
            if getattr(self, k) <= 0:
                raise ValueError(f"{k} must be positive")
        if self.Q is None and self.V is None and self.waist is None and self.mirror_roc <= self.length:
            raise ValueError("mirror radius of curvature must exceed the cavity length")

    @property
    def quality_factor(self) -> float:
        """Q = 2 F d / lambda unless given."""
        return self.Q if self.Q is not None else 2 * self.finesse * self.length / self.wavelength

    @property
    def mode_waist(self) -> float:
        if self.waist is not None:
            return self.waist
        d, R = self.length, self.mirror_roc
        return math.sqrt(self.wavelength / math.pi * math.sqrt(d * (R - d)))

    @property
    def mode_volume(self) -> float:
        """V = (pi/4) w0^2 d unless given, in m^3."""
        return self.V if self.V is not None else math.pi / 4 * self.mode_waist**2 * self.length

    def conventions(self) -> dict:
        return {
            "Q": "given" if self.Q is not None else "Q = 2 F d / lambda_vac",
            "V": "given" if self.V is not None else "V = (pi/4) w0^2 d",
            "w0": ("given" if self.waist is not None
                   else "w0^2 = (lambda_vac/pi) sqrt(d (R - d)), plane-concave"),
        }


def purcell_factor(xi, wavelength, Q, V, n=1.0, convention: str = "vacuum") -> float:
    """C = xi (3 lambda^3 / 4 pi^2) (Q / V).

    ``convention='medium'`` uses lambda / n in the cubic term.
    """
    xi = to_si(xi, "dimensionless", "xi")
    lam = to_si(wavelength, "m", "wavelength")
    Q = to_si(Q, "dimensionless", "Q")
    V = to_si(V, "m**3", "V")
    n = to_si(n, "dimensionless", "n")
    if convention not in LAMBDA_CONVENTIONS:
        raise ValueError(f"convention must be one of {LAMBDA_CONVENTIONS}")
    if min(lam, Q, V) <= 0 or xi < 0:
        raise ValueError("wavelength, Q and V must be positive and xi non-negative")
    if convention == "medium":
        lam = lam / n
    return xi * 3 * lam**3 / (4 * math.pi**2) * Q / V


@dataclass(frozen=True)
class FourierCheck:
    satisfied: bool
    margin: float
    threshold: float

    def to_dict(self) -> dict:
        return {"satisfied": self.satisfied, "margin": self.margin, "threshold_2T1_over_T2": self.threshold}


def fourier_limit_check(C, T1, T2) -> FourierCheck:
    """Transform-limited emission requires C > 2 T1 / T2 (strict)."""
    C = to_si(C, "dimensionless", "C")
    t1 = to_si(T1, "s", "T1")
    t2 = to_si(T2, "s", "T2")
    if min(t1, t2) <= 0 or C < 0:
        raise ValueError("T1, T2 must be positive and C non-negative")
    thr = 2 * t1 / t2
    return FourierCheck(bool(C > thr), C / thr, thr)


def check_emitter_times(T1, T_spon, T2) -> None:
    t1, ts, t2 = (to_si(v, "s", k) for v, k in ((T1, "T1"), (T_spon, "T_spon"), (T2, "T2")))
    if not 0 < t1 <= ts:
        raise ValueError("need 0 < T1 <= T_spon")
    if t2 > 2 * t1:
        raise ValueError("T2 cannot exceed 2 T1 for the same optical transition")


def purcell_chain(P_avg=None, P_single=None, xi=None, T1=140e-6, T2=3e-6, wavelength=PR_LINE_WAVELENGTH,
                  n=Y2O3_INDEX, cavity: Cavity | None = None, convention: str = "vacuum",
                  local_field: str = "absorption") -> dict:
    """Full chain with every intermediate quantity and convention flag."""
    lam = to_si(wavelength, "m", "wavelength")
    cavity = cavity or Cavity(wavelength=lam)
    out: dict = {"conventions": {"lambda_in_purcell": convention, "local_field_model": local_field,
                                 **cavity.conventions()}}
    if xi is None:
        if P_single is None:
            if P_avg is None:
                raise UnitError("need one of P_avg, P_single or xi")
            out["P_avg"] = to_si(P_avg, "dimensionless", "P_avg")
            P_single = single_ion_oscillator_strength(P_avg)
        out["P_single"] = to_si(P_single, "dimensionless", "P_single")
        life = spontaneous_lifetime(P_single, lam, n, local_field)
        out.update(life.to_dict())
        xi = branching_ratio(T1, life.T_spon)
        check_emitter_times(T1, life.T_spon, T2)
    xi = to_si(xi, "dimensionless", "xi")
    Q, V = cavity.quality_factor, cavity.mode_volume
    C = purcell_factor(xi, lam, Q, V, n, convention)
    out.update({
        "xi": xi, "wavelength_m": lam, "n": to_si(n, "dimensionless", "n"),
        "finesse": cavity.finesse, "length_m": cavity.length, "mirror_roc_m": cavity.mirror_roc,
        "Q": Q, "mode_waist_m": cavity.mode_waist, "V_m3": V, "C": C,
        "T1_s": to_si(T1, "s", "T1"), "T2_s": to_si(T2, "s", "T2"),
    })
    out["fourier_limit"] = fourier_limit_check(C, T1, T2).to_dict()
    return out
