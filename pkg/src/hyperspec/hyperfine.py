"""Hyperfine structure of one crystal-field level from the full Hamiltonian.

The total Hamiltonian acts on (CF levels of a window) x (2I+1 nuclear states)
and is expressed in MHz::

    H = E_CF + a1 N.I + a2 sum_q (-1)^q C2_q(4f) T2_-q(I) + a3 sum_q B_2q T2_q(I)
          + muB B.(L + g_e S) - g_n mu_n B.I

N is the magnetic hyperfine vector ``sum_i [l_i - sqrt(10) (s_i C2_i)^(1)]``,
C2 the summed Racah tensor of the 4f electrons and T2(I) the nuclear rank-2
tensor normalised so that ``T2_0 = (3 Iz^2 - I(I+1)) / (I (2I - 1))``.
The lattice term takes the rank-2 crystal-field parameters (converted from
cm^-1 to MHz), which is why a3 is dimensionless.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import constants as sc

from .angular import L_F, HalfInt, TermLabel, reduced_C
from .electronic import (
    CM1_TO_MHZ,
    CfLevelSet,
    CrystalFieldParams,
    spherical_to_cartesian,
    tensor_operator,
    vector_operator,
)

MU_B_MHZ_PER_T = sc.physical_constants["Bohr magneton in Hz/T"][0] * 1e-6
MU_N_MHZ_PER_T = sc.physical_constants["nuclear magneton in MHz/T"][0]
G_E = 2.0023

TERMS = ("H1", "H2", "H3", "HZ", "Hz")
ALL_TERMS = frozenset(TERMS)


@dataclass(frozen=True)
class NuclearParams:
    I: HalfInt = HalfInt(5)
    g_n: float = 1.6
    isotope: str = "141Pr"

    def __post_init__(self):
        object.__setattr__(self, "I", HalfInt.of(self.I))
        if self.I.twice_value <= 0:
            raise ValueError("nuclear spin must be > 0")

    @property
    def dim(self) -> int:
        return self.I.twice_value + 1


@dataclass(frozen=True)
class HyperfineParams:
    """a1, a2 in MHz; a3 dimensionless."""

    a1: float
    a2: float
    a3: float

    def __post_init__(self):
        for name in ("a1", "a2", "a3"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.a1, self.a2, self.a3])


@dataclass(frozen=True)
class MagneticField:
    """Field magnitude (T) along a unit direction in the crystal-field axes."""

    magnitude: float
    direction: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        n = np.linalg.norm(d)
        if self.magnitude < 0:
            raise ValueError("field magnitude must be >= 0")
        if n == 0:
            raise ValueError("field direction must be nonzero")
        if abs(n - 1.0) > 1e-12:
            d = d / n
        object.__setattr__(self, "direction", tuple(float(x) for x in d))

    @property
    def vector(self) -> np.ndarray:
        return self.magnitude * np.asarray(self.direction)

    @classmethod
    def zero(cls) -> "MagneticField":
        return cls(0.0)


def spin_matrices(I) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Ix, Iy, Iz for spin I in the |I, m> basis ordered m = I ... -I."""
    I = HalfInt.of(I)
    j = I.value
    m = np.arange(j, -j - 1, -1)
    jp = np.diag(np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1)), 1)
    jx = 0.5 * (jp + jp.T)
    jy = -0.5j * (jp - jp.T)
    return jx.astype(complex), jy, np.diag(m).astype(complex)


def nuclear_rank2(I) -> dict:
    """Spherical components T2_q(I) with T2_0 = (3Iz^2 - I(I+1)) / (I(2I-1))."""
    ix, iy, iz = spin_matrices(I)
    j = HalfInt.of(I).value
    if j < 1:
        raise ValueError("a rank-2 nuclear tensor needs I >= 1")
    ip = ix + 1j * iy
    im = ix - 1j * iy
    i2 = j * (j + 1) * np.eye(len(iz))
    c = math.sqrt(6) / (j * (2 * j - 1))
    return {
        0: c * (3 * iz @ iz - i2) / math.sqrt(6),
        1: -c * 0.5 * (ip @ iz + iz @ ip),
        -1: c * 0.5 * (im @ iz + iz @ im),
        2: c * 0.5 * ip @ ip,
        -2: c * 0.5 * im @ im,
    }


def _spherical_nuclear(I) -> dict:
    ix, iy, iz = spin_matrices(I)
    return {1: -(ix + 1j * iy) / math.sqrt(2), 0: iz, -1: (ix - 1j * iy) / math.sqrt(2)}


@dataclass
class HyperfineLevelSet:
    """Hyperfine levels of one CF level, energies in MHz relative to the lowest."""

    energies: np.ndarray
    splittings: np.ndarray
    adjacent_splittings: np.ndarray
    pair_gaps_hz: np.ndarray
    doubly_degenerate: bool
    target: int
    multiplet: str
    contributions: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "multiplet": self.multiplet,
            "cf_level": self.target,
            "energies_MHz": self.energies.tolist(),
            "splittings_MHz": self.splittings.tolist(),
            "adjacent_splittings_MHz": self.adjacent_splittings.tolist(),
            "doublet_pair_gaps_Hz": self.pair_gaps_hz.tolist(),
            "doubly_degenerate": bool(self.doubly_degenerate),
            "contributions": self.contributions,
        }


class HyperfineSystem:
    """Projected electronic operators for one window of CF levels.

    ``multiplet`` selects the window (all CF levels assigned to it); with
    ``full_space=True`` every one of the 91 levels is kept instead.
    """

    def __init__(self, cf_levels: CfLevelSet, cf: CrystalFieldParams | None,
                 multiplet: str | TermLabel | None, nuclear: NuclearParams = NuclearParams(),
                 full_space: bool = False, g_e: float = G_E):
        if full_space:
            idx = np.arange(len(cf_levels.energies))
        else:
            if multiplet is None:
                raise ValueError("a multiplet selector is required unless full_space=True")
            idx = cf_levels.levels_of(multiplet)
        if len(idx) == 0:
            raise ValueError(f"empty window: no CF levels assigned to {multiplet}")
        self.cf_levels = cf_levels
        self.window = idx
        self.multiplet = str(multiplet) if multiplet is not None else "all"
        self.nuclear = nuclear
        self.g_e = g_e
        self.energies_cm = cf_levels.energies[idx] - cf_levels.energies[idx[0]]
        V = cf_levels.vectors[:, idx]
        order = cf_levels.order

        def proj(m):
            return V.conj().T @ m @ V

        self.N = {q: proj(tensor_operator("N", 1, q, order)) for q in (-1, 0, 1)}
        c2 = reduced_C(L_F, 2, L_F)
        self.C2 = {q: c2 * proj(tensor_operator("U", 2, q, order)) for q in range(-2, 3)}
        lx, ly, lz = (proj(m) for m in vector_operator("L", order))
        sx, sy, sz = (proj(m) for m in vector_operator("S", order))
        self.mag = (lx + g_e * sx, ly + g_e * sy, lz + g_e * sz)
        self.b2 = {q: v * CM1_TO_MHZ for q, v in (cf.rank2() if cf else {}).items()}
        self.I_sph = _spherical_nuclear(nuclear.I)
        self.I_cart = spin_matrices(nuclear.I)
        self.T2 = nuclear_rank2(nuclear.I)
        self._parts = self._assemble_parts()

    @property
    def n_levels(self) -> int:
        return len(self.window)

    def _assemble_parts(self) -> dict:
        eye_n = np.eye(self.nuclear.dim)
        eye_e = np.eye(self.n_levels)
        h1 = sum((-1) ** q * np.kron(self.N[q], self.I_sph[-q]) for q in (-1, 0, 1))
        h2 = sum((-1) ** q * np.kron(self.C2[q], self.T2[-q]) for q in range(-2, 3))
        h3 = np.zeros_like(h1)
        for q, b in self.b2.items():
            if b != 0:
                h3 = h3 + b * np.kron(eye_e, self.T2[q])
        zel = tuple(MU_B_MHZ_PER_T * np.kron(m, eye_n) for m in self.mag)
        znu = tuple(-self.nuclear.g_n * MU_N_MHZ_PER_T * np.kron(eye_e, i) for i in self.I_cart)
        return {"H1": h1, "H2": h2, "H3": h3, "HZ": zel, "Hz": znu}

    def cf_diagonal(self, gap_scale: float = 1.0) -> np.ndarray:
        e = gap_scale * (self.energies_cm - self.energies_cm[0]) * CM1_TO_MHZ
        return np.kron(np.diag(e), np.eye(self.nuclear.dim)).astype(complex)

    def perturbation(self, hf: HyperfineParams, field: MagneticField | None = None,
                     terms=ALL_TERMS) -> np.ndarray:
        """Everything except the CF energies, in MHz."""
        p = self._parts
        out = np.zeros_like(p["H1"])
        if "H1" in terms and hf.a1:
            out = out + hf.a1 * p["H1"]
        if "H2" in terms and hf.a2:
            out = out + hf.a2 * p["H2"]
        if "H3" in terms and hf.a3:
            out = out + hf.a3 * p["H3"]
        if field is not None and field.magnitude > 0:
            b = field.vector
            for key in ("HZ", "Hz"):
                if key in terms:
                    out = out + sum(bi * m for bi, m in zip(b, p[key]))
        return out

    def hamiltonian(self, hf: HyperfineParams, field: MagneticField | None = None,
                    terms=ALL_TERMS, gap_scale: float = 1.0) -> np.ndarray:
        H = self.cf_diagonal(gap_scale) + self.perturbation(hf, field, terms)
        return 0.5 * (H + H.conj().T)

    def level_energies(self, hf: HyperfineParams, field: MagneticField | None = None,
                       target: int = 0, terms=ALL_TERMS, gap_scale: float = 1.0) -> np.ndarray:
        """The 2I+1 eigenvalues (MHz) that belong to CF level ``target`` of the window."""
        H = self.hamiltonian(hf, field, terms, gap_scale)
        w, v = np.linalg.eigh(H)
        d = self.nuclear.dim
        block = slice(target * d, (target + 1) * d)
        weight = np.sum(np.abs(v[block, :]) ** 2, axis=0)
        pick = np.sort(np.argsort(weight)[-d:])
        return w[pick]

    def zero_field_splittings(self, hf: HyperfineParams, target: int = 0, terms=ALL_TERMS,
                              pair_tol_hz: float = 10.0) -> HyperfineLevelSet:
        e = self.level_energies(hf, None, target, terms)
        return _level_set(e, target, self.multiplet, pair_tol_hz)

    def splittings_vs_field(self, hf: HyperfineParams, directions, magnitude: float,
                            target: int = 0, threads: int = 1, terms=ALL_TERMS) -> np.ndarray:
        """Level energies (n_dir x 2I+1, MHz, ascending) for each field direction."""
        dirs = np.asarray(directions, dtype=float)
        if dirs.ndim != 2 or len(dirs) == 0:
            raise ValueError("need a non-empty list of 3-vectors")
        if magnitude <= 0:
            raise ValueError("field magnitude must be positive for a field sweep")
        base = self.hamiltonian(hf, None, terms)
        p = self._parts
        d = self.nuclear.dim

        def one(u):
            u = u / np.linalg.norm(u)
            H = base.copy()
            for key in ("HZ", "Hz"):
                if key in terms:
                    H = H + magnitude * sum(ui * m for ui, m in zip(u, p[key]))
            w, v = np.linalg.eigh(H)
            weight = np.sum(np.abs(v[target * d:(target + 1) * d, :]) ** 2, axis=0)
            return w[np.sort(np.argsort(weight)[-d:])]

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                rows = list(pool.map(one, dirs))
        else:
            rows = [one(u) for u in dirs]
        return np.array(rows)

    def contribution_analysis(self, hf: HyperfineParams, target: int = 0,
                              field: MagneticField | None = None) -> dict:
        """Splittings with each term removed and each term alone.

        ``delta`` is full minus without-term: the signed contribution of the
        term to each (ascending, bottom-up) splitting.
        """
        def spl(terms):
            e = np.sort(self.level_energies(hf, field, target, terms))
            return _doublet_splittings(e) if field is None else np.diff(e)

        full = spl(ALL_TERMS)
        out = {"full": full.tolist(), "terms": {}}
        for t in TERMS:
            without = spl(ALL_TERMS - {t})
            alone = spl({t})
            delta = full - without
            out["terms"][t] = {
                "without": without.tolist(),
                "alone": alone.tolist(),
                "delta": delta.tolist(),
                "sign": np.sign(np.round(delta, 12)).astype(int).tolist(),
            }
        no_q = spl(ALL_TERMS - {"H2", "H3"})
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(full != 0, no_q / full, np.nan)
        out["quadrupole_off"] = no_q.tolist()
        out["hyperfine_fraction"] = frac.tolist()
        return out

    def second_order(self, hf: HyperfineParams, field: MagneticField | None = None,
                     target: int = 0, gap_scale: float = 1.0, min_gap_cm: float = 1.0,
                     terms=ALL_TERMS) -> np.ndarray:
        """Second-order effective Hamiltonian eigenvalues for CF level ``target``.

        H_eff = V_nn + sum_{n' != n} V_nn' V_n'n / (E_n - E_n'), with V every
        term beyond the CF energies; a pseudoquadrupole estimate independent
        of the full diagonalisation.
        """
        d = self.nuclear.dim
        V = self.perturbation(hf, field, terms)
        E = gap_scale * (self.energies_cm - self.energies_cm[0])
        n = target
        sl = slice(n * d, (n + 1) * d)
        heff = V[sl, sl].copy()
        for m in range(self.n_levels):
            if m == n:
                continue
            gap = E[n] - E[m]
            if abs(gap) < min_gap_cm:
                raise ValueError(
                    f"CF level {n} is within {abs(gap):.3g} cm^-1 of level {m}; "
                    "second-order estimate is not valid"
                )
            sm = slice(m * d, (m + 1) * d)
            heff += V[sl, sm] @ V[sm, sl] / (gap * CM1_TO_MHZ)
        return np.linalg.eigvalsh(0.5 * (heff + heff.conj().T))


def _doublet_splittings(e: np.ndarray) -> np.ndarray:
    e = np.sort(e)
    centers = 0.5 * (e[0::2] + e[1::2])
    return np.diff(centers)


def _level_set(e: np.ndarray, target: int, multiplet: str, pair_tol_hz: float) -> HyperfineLevelSet:
    e = np.sort(np.real(e))
    e = e - e[0]
    if len(e) % 2:
        raise ValueError("zero-field pairing needs a half-integer nuclear spin")
    pair_gaps = (e[1::2] - e[0::2]) * 1e6
    adj = _doublet_splittings(e)
    return HyperfineLevelSet(
        energies=e,
        splittings=np.sort(adj),
        adjacent_splittings=adj,
        pair_gaps_hz=pair_gaps,
        doubly_degenerate=bool(np.all(np.abs(pair_gaps) < pair_tol_hz)),
        target=target,
        multiplet=multiplet,
    )


def build_total_hamiltonian(cf_levels: CfLevelSet, nuc: NuclearParams, hf: HyperfineParams,
                            B: MagneticField | None, window, cf: CrystalFieldParams | None = None,
                            terms=ALL_TERMS) -> np.ndarray:
    """Total Hamiltonian (MHz) on (window CF levels) x (nuclear states).

    ``window`` is a multiplet label such as ``'3H4'``, or ``'all'`` for the
    whole 91-level electronic space.  Energies are relative to the lowest
    level of the window.
    """
    full = isinstance(window, str) and window.lower() == "all"
    sys_ = HyperfineSystem(cf_levels, cf, None if full else window, nuc, full_space=full)
    return sys_.hamiltonian(hf, B, terms)


def zero_field_splittings(system: HyperfineSystem, hf: HyperfineParams, target: int = 0,
                          pair_tol_hz: float = 10.0) -> HyperfineLevelSet:
    return system.zero_field_splittings(hf, target, pair_tol_hz=pair_tol_hz)


def splittings_vs_field(system: HyperfineSystem, hf: HyperfineParams, directions,
                        magnitude: float, target: int = 0, threads: int = 1) -> dict:
    """Map direction index -> level energies at fixed field magnitude (T)."""
    rows = system.splittings_vs_field(hf, directions, magnitude, target, threads)
    return {i: r for i, r in enumerate(rows)}


def contribution_analysis(system: HyperfineSystem, hf: HyperfineParams, target: int = 0) -> dict:
    return system.contribution_analysis(hf, target)


def second_order_oracle(system: HyperfineSystem, hf: HyperfineParams, target: int = 0,
                        gap_scale: float = 1.0, field: MagneticField | None = None) -> np.ndarray:
    """Zero-field (or in-field) splittings from second-order perturbation theory."""
    e = np.sort(system.second_order(hf, field, target, gap_scale))
    return _doublet_splittings(e) if field is None else np.diff(e)


def max_zeeman_slope(rows: np.ndarray, magnitude: float) -> float:
    """Largest level-difference slope (MHz/T) over a direction sweep."""
    return float(np.max(rows[:, -1] - rows[:, 0]) / magnitude)
