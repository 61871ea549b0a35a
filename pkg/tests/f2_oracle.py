"""Explicit two-electron construction of f^2 operators, independent of hyperspec.angular.

Everything is built on the 14 x 14 = 196-dimensional product space of two
f spin-orbitals using sympy's Clebsch-Gordan and Gaunt coefficients.  Coupled
|(L S) J M> states with L + S even are antisymmetric, so matrix elements
between them equal the antisymmetrised-basis values.
"""
from functools import lru_cache

import numpy as np
from sympy import Rational, sqrt as ssqrt, pi
from sympy.physics.wigner import clebsch_gordan, gaunt, wigner_3j

L = 3
HALF = Rational(1, 2)
ML = list(range(-L, L + 1))
MS = [HALF, -HALF]
ORBITALS = [(ml, ms) for ml in ML for ms in MS]
N1 = len(ORBITALS)


def _idx(ml, ms):
    return ORBITALS.index((ml, ms))


@lru_cache(maxsize=None)
def cg(j1, m1, j2, m2, j, m):
    return float(clebsch_gordan(j1, j2, j, m1, m2, m))


@lru_cache(maxsize=None)
def orbital_C(k, q):
    """<l m | C^k_q | l m'> on the 7 orbital states."""
    out = np.zeros((7, 7))
    for a, m in enumerate(ML):
        for b, mp in enumerate(ML):
            g = gaunt(L, k, L, -m, q, mp)
            if g != 0:
                out[a, b] = float((-1) ** m * ssqrt(4 * pi / (2 * k + 1)) * g)
    return out


def _ladder(j, ms):
    dim = len(ms)
    jz = np.diag([float(m) for m in ms])
    jp = np.zeros((dim, dim))
    for b, m in enumerate(ms):
        for a, mp in enumerate(ms):
            if mp == m + 1:
                jp[a, b] = float(ssqrt(j * (j + 1) - m * (m + 1)))
    return {1: -jp / np.sqrt(2), 0: jz, -1: jp.T / np.sqrt(2)}


ORB_L = _ladder(L, ML)
SPIN_S = _ladder(HALF, MS)


def one_body(orb=None, spin=None):
    """Single-electron operator on the 14 spin-orbitals."""
    o = np.eye(7) if orb is None else orb
    s = np.eye(2) if spin is None else spin
    return np.kron(o, s)


def two_body_sum(op1):
    e = np.eye(N1)
    return np.kron(op1, e) + np.kron(e, op1)


@lru_cache(maxsize=None)
def single_sC2(q):
    out = np.zeros((N1, N1))
    for a in (-1, 0, 1):
        for b in range(-2, 3):
            c = cg(1, a, 2, b, 1, q)
            if c:
                out += c * one_body(orbital_C(2, b), SPIN_S[a])
    return out


def operator(kind, k=1, q=0):
    """Two-electron operator in product space."""
    if kind == "U":
        return two_body_sum(one_body(orbital_unit(k, q)))
    if kind == "L":
        return two_body_sum(one_body(ORB_L[q]))
    if kind == "S":
        return two_body_sum(one_body(None, SPIN_S[q]))
    if kind == "N":
        return two_body_sum(one_body(ORB_L[q]) - np.sqrt(10) * single_sC2(q))
    raise ValueError(kind)


@lru_cache(maxsize=None)
def orbital_unit(k, q):
    """<l m | u^k_q | l m'> with <l||u^k||l> = 1."""
    out = np.zeros((7, 7))
    for a, m in enumerate(ML):
        for b, mp in enumerate(ML):
            out[a, b] = float((-1) ** (L - m) * wigner_3j(L, k, L, -m, q, mp))
    return out


def spin_orbit():
    single = sum((-1) ** q * one_body(ORB_L[q], SPIN_S[-q]) for q in (-1, 0, 1))
    return two_body_sum(single)


def coulomb(F):
    """sum_k F^k C^k(1).C^k(2) on the product space; F = {2: F2, 4: F4, 6: F6}."""
    out = np.zeros((N1 * N1, N1 * N1))
    for k, Fk in F.items():
        for q in range(-k, k + 1):
            out += Fk * (-1) ** q * np.kron(one_body(orbital_C(k, q)), one_body(orbital_C(k, -q)))
    return out


def coupled_states(basis):
    """196 x len(basis) matrix of |(L S) J M> states in product space."""
    T = np.zeros((N1 * N1, len(basis)))
    for col, st in enumerate(basis):
        for ML_ in range(-st.L, st.L + 1):
            MS_ = st.M - ML_
            if abs(MS_) > st.S:
                continue
            c_j = cg(st.L, ML_, st.S, MS_, st.J, st.M)
            if not c_j:
                continue
            for m1 in ML:
                m2 = ML_ - m1
                if abs(m2) > L:
                    continue
                c_l = cg(L, m1, L, m2, st.L, ML_)
                if not c_l:
                    continue
                for s1 in MS:
                    s2 = MS_ - s1
                    if s2 not in MS:
                        continue
                    c_s = cg(HALF, s1, HALF, s2, st.S, MS_)
                    if not c_s:
                        continue
                    p, r = _idx(m1, s1), _idx(m2, s2)
                    T[p * N1 + r, col] += c_j * c_l * c_s
    return T


def project(op, T):
    return T.conj().T @ op @ T
