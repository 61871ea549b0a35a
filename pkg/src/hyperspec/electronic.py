"""Free-ion plus crystal-field Hamiltonian of a 4f^2 ion on the 91 |SLJM> states.

Energies are in cm^-1.  The crystal field uses Wybourne normalisation,
``H_CF = sum_kq B_kq sum_i C^(k)_q(i)``, with the quantisation axis along the
site C2 axis.  Coulomb energies use the Slater integrals F^k (not F_k).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .angular import (
    F2_TERMS,
    L_F,
    TermLabel,
    reduced_C,
    reduced_double_tensor,
    reduced_Uk,
    tensor_one_part,
    tensor_product_reduced,
    tensor_two_part,
    wigner3j,
    wigner6j,
)

CM1_TO_MHZ = 29979.2458  # exact: c in units of 1e4 m/s

# Casimir eigenvalues for the f^2 terms: G(R7) from W, G(G2) from U
_W_OF_TERM = {(0, 0): (0, 0, 0), (1, 1): (1, 1, 0), (1, 3): (1, 1, 0), (1, 5): (1, 1, 0),
              (0, 2): (2, 0, 0), (0, 4): (2, 0, 0), (0, 6): (2, 0, 0)}
_U_OF_TERM = {(0, 0): (0, 0), (1, 1): (1, 1), (1, 3): (1, 0), (1, 5): (1, 1),
              (0, 2): (2, 0), (0, 4): (2, 0), (0, 6): (2, 0)}

_ALLOWED_Q = {
    "C1": lambda q: True,
    "Ci": lambda q: True,
    "C2": lambda q: q % 2 == 0,
    "C2h": lambda q: q % 2 == 0,
    "C2v": lambda q: q % 2 == 0,
    "D2": lambda q: q % 2 == 0,
    "D2h": lambda q: q % 2 == 0,
    "C3": lambda q: q % 3 == 0,
    "C3i": lambda q: q % 3 == 0,
    "D3d": lambda q: q % 3 == 0,
}
_REAL_ONLY = {"C2v", "D2", "D2h", "D3d"}


class SymmetryError(ValueError):
    """Crystal-field parameters incompatible with the declared site symmetry."""


@dataclass(frozen=True)
class BasisState:
    S: int
    L: int
    J: int
    M: int

    @property
    def multiplet(self) -> TermLabel:
        return TermLabel(self.S, self.L, self.J)


def _g_r7(w) -> float:
    w1, w2, w3 = w
    return (w1 * (w1 + 5) + w2 * (w2 + 3) + w3 * (w3 + 1)) / 10


def _g_g2(u) -> float:
    u1, u2 = u
    return (u1 * u1 + u1 * u2 + u2 * u2 + 5 * u1 + 4 * u2) / 12


@dataclass(frozen=True)
class FreeIonParams:
    """Slater integrals, spin-orbit constant and two-body terms, all in cm^-1."""

    F2: float
    F4: float
    F6: float
    zeta: float
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    configuration: str = "f2"

    def __post_init__(self):
        if self.configuration != "f2":
            raise ValueError("only the f2 configuration is supported")
        if not (self.F2 >= self.F4 >= self.F6 >= 0):
            warnings.warn("Slater integrals not ordered F2 >= F4 >= F6 >= 0", stacklevel=2)
        if self.zeta < 0:
            raise ValueError("spin-orbit constant zeta must be >= 0")


@dataclass
class CrystalFieldParams:
    """Wybourne B_kq (cm^-1); missing negative-q entries follow from Hermiticity."""

    bkq: dict = field(default_factory=dict)
    site_symmetry: str = "C1"

    def __post_init__(self):
        if self.site_symmetry not in _ALLOWED_Q:
            raise SymmetryError(f"unknown site symmetry {self.site_symmetry!r}")
        full = {}
        for (k, q), val in self.bkq.items():
            k, q, val = int(k), int(q), complex(val)
            if k not in (2, 4, 6) or abs(q) > k:
                raise ValueError(f"invalid crystal-field index B{k}{q}")
            full[(k, q)] = val
        for (k, q), val in list(full.items()):
            partner = (-1) ** q * val.conjugate()
            if (k, -q) in full:
                if abs(full[(k, -q)] - partner) > 1e-9 * max(1.0, abs(val)):
                    raise SymmetryError(f"B{k},{-q} violates B_k,-q = (-1)^q conj(B_kq)")
            else:
                full[(k, -q)] = partner
        allowed = _ALLOWED_Q[self.site_symmetry]
        for (k, q), val in full.items():
            if val == 0:
                continue
            if not allowed(q):
                raise SymmetryError(f"B{k}{q} not allowed in {self.site_symmetry} symmetry")
            if self.site_symmetry in _REAL_ONLY and abs(val.imag) > 1e-12:
                raise SymmetryError(f"B{k}{q} must be real in {self.site_symmetry} symmetry")
        self.bkq = full

    def scaled(self, factor: float) -> "CrystalFieldParams":
        return CrystalFieldParams({kq: factor * v for kq, v in self.bkq.items()}, self.site_symmetry)

    def rank2(self) -> dict:
        """The rank-2 entries, used by the lattice quadrupole term."""
        return {q: self.bkq.get((2, q), 0j) for q in range(-2, 3)}


def build_f2_basis(order: str = "LSJM") -> tuple[BasisState, ...]:
    """The 91 |SLJM_J> states of f^2 in canonical (L, S, J, M_J) order.

    ``order`` may permute the sort key; it exists so basis-order independence
    can be checked.
    """
    states = []
    for term in F2_TERMS:
        for J in range(abs(term.L - term.S), term.L + term.S + 1):
            for M in range(-J, J + 1):
                states.append(BasisState(term.S, term.L, J, M))
    keys = {"L": lambda s: s.L, "S": lambda s: s.S, "J": lambda s: s.J, "M": lambda s: s.M}
    if sorted(order) != sorted("LSJM"):
        raise ValueError("order must be a permutation of 'LSJM'")
    return tuple(sorted(states, key=lambda s: tuple(keys[c](s) for c in order)))


def multiplets(basis=None) -> list[TermLabel]:
    basis = basis or build_f2_basis()
    seen = []
    for s in basis:
        m = s.multiplet
        if m not in seen:
            seen.append(m)
    return seen


def coulomb_energy(term: TermLabel, fi: FreeIonParams) -> float:
    """Electrostatic plus two-body-correction energy of an f^2 term (cm^-1)."""
    L = term.L
    e = 0.0
    for k, Fk in ((2, fi.F2), (4, fi.F4), (6, fi.F6)):
        ck = reduced_C(L_F, k, L_F)
        e += Fk * (-1) ** L * ck * ck * wigner6j(L_F, L_F, L, L_F, L_F, k)
    key = (term.S, term.L)
    e += fi.alpha * L * (L + 1) + fi.beta * _g_g2(_U_OF_TERM[key]) + fi.gamma * _g_r7(_W_OF_TERM[key])
    return e


# --- reduced matrix elements in the |(L S) J> scheme -------------------------

_SPIN_HALF_RED = math.sqrt(1.5)          # <1/2||s||1/2>
_L_RED = math.sqrt(L_F * (L_F + 1) * (2 * L_F + 1))  # <3||l||3>


def _red_U(a: TermLabel, b: TermLabel, k: int) -> float:
    if a.S != b.S:
        return 0.0
    return tensor_one_part(a.L, a.S, a.J, b.L, b.J, k, reduced_Uk(a, b, k))


def _red_L(a: TermLabel, b: TermLabel) -> float:
    if a.S != b.S or a.L != b.L:
        return 0.0
    return tensor_one_part(a.L, a.S, a.J, a.L, b.J, 1, math.sqrt(a.L * (a.L + 1) * (2 * a.L + 1)))


def _red_S(a: TermLabel, b: TermLabel) -> float:
    if a.S != b.S or a.L != b.L:
        return 0.0
    return tensor_two_part(a.L, a.S, a.J, a.S, b.J, 1, math.sqrt(a.S * (a.S + 1) * (2 * a.S + 1)))


def _red_sC2(a: TermLabel, b: TermLabel) -> float:
    """<(LS)J|| sum_i (s_i C2_i)^(1) ||(L'S')J'>."""
    dbl = reduced_double_tensor(a, b, 1, 2, _SPIN_HALF_RED, reduced_C(L_F, 2, L_F))
    return tensor_product_reduced(a.L, a.S, a.J, b.L, b.S, b.J, 2, 1, 1, dbl)


def _red_hyperfine(a: TermLabel, b: TermLabel) -> float:
    """Magnetic hyperfine vector N = sum_i [l_i - sqrt(10) (s_i C2_i)^(1)]."""
    return _red_L(a, b) - math.sqrt(10.0) * _red_sC2(a, b)


def _spin_orbit(a: TermLabel, b: TermLabel) -> float:
    """<(LS)J| sum_i l_i.s_i |(L'S')J> (J equal)."""
    dbl = reduced_double_tensor(a, b, 1, 1, _SPIN_HALF_RED, _L_RED)
    if dbl == 0.0:
        return 0.0
    phase = (-1) ** (b.L + a.S + a.J)
    return phase * wigner6j(a.J, a.S, a.L, 1, b.L, b.S) * dbl


_REDUCED = {
    "U": _red_U,
    "L": lambda a, b, k: _red_L(a, b),
    "S": lambda a, b, k: _red_S(a, b),
    "N": lambda a, b, k: _red_hyperfine(a, b),
}


@lru_cache(maxsize=None)
def _tensor_matrix(kind: str, k: int, q: int, order: str) -> np.ndarray:
    basis = build_f2_basis(order)
    n = len(basis)
    out = np.zeros((n, n))
    red_cache = {}
    for i, a in enumerate(basis):
        ma = a.multiplet
        for j, b in enumerate(basis):
            if b.M != a.M - q:
                continue
            mb = b.multiplet
            key = (ma, mb)
            if key not in red_cache:
                red_cache[key] = _REDUCED[kind](ma, mb, k)
            r = red_cache[key]
            if r == 0.0:
                continue
            out[i, j] = (-1) ** (a.J - a.M) * wigner3j(a.J, k, b.J, -a.M, q, b.M) * r
    out.setflags(write=False)
    return out


def tensor_operator(kind: str, k: int, q: int, order: str = "LSJM") -> np.ndarray:
    """Matrix of component q of an electronic tensor operator on the f^2 basis.

    ``kind`` is ``'U'`` (unit tensor U^k), ``'L'``, ``'S'`` (rank-1 angular
    momenta) or ``'N'`` (rank-1 magnetic hyperfine operator).
    """
    if kind not in _REDUCED:
        raise ValueError(f"unknown operator kind {kind!r}")
    if kind != "U" and k != 1:
        raise ValueError(f"operator {kind} is rank 1")
    return _tensor_matrix(kind, k, q, order)


def spherical_to_cartesian(vec_q: dict) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(V_x, V_y, V_z) from spherical components {+1, 0, -1}."""
    vp, v0, vm = vec_q[1], vec_q[0], vec_q[-1]
    vx = (vm - vp) / math.sqrt(2)
    vy = 1j * (vm + vp) / math.sqrt(2)
    return vx, vy, v0.astype(complex)


def vector_operator(kind: str, order: str = "LSJM") -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cartesian components of a rank-1 electronic operator ('L', 'S', 'N')."""
    return spherical_to_cartesian({q: tensor_operator(kind, 1, q, order) for q in (-1, 0, 1)})


@lru_cache(maxsize=None)
def _free_ion_parts(order: str) -> tuple[np.ndarray, np.ndarray, list]:
    """Per-term Coulomb projectors and the spin-orbit matrix (unit zeta)."""
    basis = build_f2_basis(order)
    n = len(basis)
    so = np.zeros((n, n))
    for i, a in enumerate(basis):
        for j, b in enumerate(basis):
            if a.J == b.J and a.M == b.M:
                so[i, j] = _spin_orbit(a.multiplet, b.multiplet)
    terms = [TermLabel(s.S, s.L) for s in basis]
    return so, np.arange(n), terms


def build_electronic_hamiltonian(fi: FreeIonParams, cf: CrystalFieldParams | None,
                                 order: str = "LSJM") -> np.ndarray:
    """Hermitian 91x91 matrix of H_FI + H_CF in cm^-1."""
    so, _, terms = _free_ion_parts(order)
    cache = {}
    diag = []
    for t in terms:
        if t not in cache:
            cache[t] = coulomb_energy(t, fi)
        diag.append(cache[t])
    H = np.diag(np.asarray(diag, dtype=complex)) + fi.zeta * so
    if cf is not None:
        for (k, q), bkq in cf.bkq.items():
            if bkq == 0:
                continue
            H = H + bkq * reduced_C(L_F, k, L_F) * tensor_operator("U", k, q, order)
    return H


@dataclass
class CfLevelSet:
    """Crystal-field levels: energies relative to the lowest (cm^-1) and eigenvectors."""

    energies: np.ndarray
    vectors: np.ndarray
    offset: float
    multiplet: list
    weights: np.ndarray
    degenerate_groups: list
    degeneracy_tol: float
    basis: tuple
    order: str = "LSJM"

    def levels_of(self, label: str | TermLabel) -> np.ndarray:
        """Indices of the levels assigned to one multiplet, ascending energy."""
        target = TermLabel.parse(label) if isinstance(label, str) else label
        idx = [i for i, m in enumerate(self.multiplet) if m == target]
        return np.asarray(idx, dtype=int)

    def multiplet_energies(self, label) -> np.ndarray:
        idx = self.levels_of(label)
        e = self.energies[idx]
        return e - e[0] if len(e) else e


def diagonalize_electronic(H: np.ndarray, degeneracy_tol: float = 0.01, order: str = "LSJM",
                           hermitian_tol: float = 1e-10) -> CfLevelSet:
    """Diagonalise H_FI + H_CF and label each level by its dominant multiplet."""
    H = np.asarray(H)
    scale = max(np.abs(H).max(), 1.0)
    if np.abs(H - H.conj().T).max() > hermitian_tol * scale:
        raise ValueError("electronic Hamiltonian is not Hermitian within tolerance")
    basis = build_f2_basis(order)
    if len(basis) != H.shape[0]:
        raise ValueError("basis size does not match the Hamiltonian")
    w, v = np.linalg.eigh(0.5 * (H + H.conj().T))
    offset = float(w[0])
    labels = multiplets(basis)
    member = np.zeros((len(labels), len(basis)))
    for i, s in enumerate(basis):
        member[labels.index(s.multiplet), i] = 1.0
    weights = member @ (np.abs(v) ** 2)
    assign = [labels[i] for i in np.argmax(weights, axis=0)]
    groups, start = [], 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > degeneracy_tol:
            if i - start > 1:
                groups.append(list(range(start, i)))
            start = i
    return CfLevelSet(w - offset, v, offset, assign, weights.T, groups, degeneracy_tol, basis, order)
