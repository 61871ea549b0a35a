"""Angular-momentum algebra for the 4f^2 configuration.

Wigner 3-j and 6-j symbols are evaluated with exact rational arithmetic
(Python integers and ``fractions.Fraction``) and converted to float only at
the end, so high-j Racah sums suffer no cancellation error.  Every symbol is
memoised on its doubled-integer arguments.

Reduced matrix element convention
---------------------------------
All modules use one Wigner-Eckart convention, with nothing absorbed into
the reduced element::

    <j m | T^k_q | j' m'> = (-1)**(j - m) * (j k j'; -m q m') * <j || T^k || j'>

Under this convention a Hermitian tensor (T^k_q)^dagger = (-1)**q T^k_-q has
``<j||T||j'> = (-1)**(j - j') * conj(<j'||T||j>)``.  Two-electron states are
coupled orbital-first, ``|(L S) J M> = sum <L ML S MS | J M> |L ML>|S MS>``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Real

__all__ = [
    "HalfInt",
    "TermLabel",
    "F2_TERMS",
    "wigner3j",
    "wigner6j",
    "wigner9j",
    "clebsch_gordan",
    "reduced_C",
    "reduced_Uk",
    "reduced_double_tensor",
    "tensor_one_part",
    "tensor_two_part",
    "tensor_product_reduced",
]

L_F = 3  # orbital angular momentum of an f electron


@dataclass(frozen=True, order=True)
class HalfInt:
    """Integer or half-integer stored doubled, so arithmetic stays exact."""

    twice_value: int

    def __post_init__(self):
        if not isinstance(self.twice_value, int):
            raise TypeError("twice_value must be an int")

    @classmethod
    def of(cls, value) -> "HalfInt":
        """Build from an int, float, Fraction, HalfInt or a string like ``'5/2'``."""
        if isinstance(value, HalfInt):
            return value
        if isinstance(value, str):
            value = Fraction(value.strip())
        doubled = Fraction(value) * 2
        if doubled.denominator != 1:
            raise ValueError(f"{value!r} is not an integer or half-integer")
        return cls(int(doubled))

    @property
    def value(self) -> float:
        return self.twice_value / 2

    @property
    def is_integer(self) -> bool:
        return self.twice_value % 2 == 0

    def projections(self) -> list["HalfInt"]:
        """All m from -j to j in unit steps (descending)."""
        if self.twice_value < 0:
            raise ValueError("angular momentum magnitude must be >= 0")
        return [HalfInt(m) for m in range(self.twice_value, -self.twice_value - 1, -2)]

    def __float__(self) -> float:
        return self.value

    def __neg__(self) -> "HalfInt":
        return HalfInt(-self.twice_value)

    def __add__(self, other) -> "HalfInt":
        return HalfInt(self.twice_value + HalfInt.of(other).twice_value)

    def __sub__(self, other) -> "HalfInt":
        return HalfInt(self.twice_value - HalfInt.of(other).twice_value)

    def __str__(self) -> str:
        if self.is_integer:
            return str(self.twice_value // 2)
        return f"{self.twice_value}/2"


_L_LETTERS = "SPDFGHIKLMNOQ"
_PAULI_F2 = {(0, 0), (1, 1), (0, 2), (1, 3), (0, 4), (1, 5), (0, 6)}


@dataclass(frozen=True)
class TermLabel:
    """An f^2 Russell-Saunders term ``^{2S+1}L`` with an optional J."""

    S: int
    L: int
    J: int | None = None

    def __post_init__(self):
        if (self.S, self.L) not in _PAULI_F2:
            raise ValueError(f"S={self.S}, L={self.L} is not a Pauli-allowed f^2 term")
        if self.J is not None and not abs(self.L - self.S) <= self.J <= self.L + self.S:
            raise ValueError(f"J={self.J} violates |L-S| <= J <= L+S for {self.term}")

    @property
    def term(self) -> str:
        return f"{2 * self.S + 1}{_L_LETTERS[self.L]}"

    @property
    def label(self) -> str:
        return self.term if self.J is None else f"{self.term}{self.J}"

    @classmethod
    def parse(cls, text: str) -> "TermLabel":
        """Parse labels such as ``'3H4'``, ``'1D2'`` or ``'3F'``."""
        text = text.strip()
        if len(text) < 2 or not text[0].isdigit():
            raise ValueError(f"cannot parse term label {text!r}")
        mult = int(text[0])
        letter = text[1].upper()
        if letter not in _L_LETTERS:
            raise ValueError(f"unknown L letter in {text!r}")
        J = int(text[2:]) if len(text) > 2 else None
        return cls((mult - 1) // 2, _L_LETTERS.index(letter), J)

    def __str__(self) -> str:
        return self.label


F2_TERMS = tuple(TermLabel(S, L) for S, L in sorted(_PAULI_F2, key=lambda t: (t[1], t[0])))


def _doubled(x) -> int:
    if isinstance(x, HalfInt):
        return x.twice_value
    if isinstance(x, int):
        return 2 * x
    if isinstance(x, (Real, Fraction, str)):
        return HalfInt.of(x).twice_value
    raise TypeError(f"cannot interpret {x!r} as an angular momentum")


@lru_cache(maxsize=None)
def _fact(n: int) -> int:
    return math.factorial(n)


def _triangle_ok(a: int, b: int, c: int) -> bool:
    """Triangle rule on doubled values, including integer-sum parity."""
    return (a + b + c) % 2 == 0 and abs(a - b) <= c <= a + b


def _delta_sq(a: int, b: int, c: int) -> Fraction:
    """Triangle coefficient squared, arguments doubled."""
    return Fraction(
        _fact((a + b - c) // 2) * _fact((a - b + c) // 2) * _fact((-a + b + c) // 2),
        _fact((a + b + c) // 2 + 1),
    )


def _signed_sqrt(s: Fraction, p: Fraction) -> float:
    """Float of s * sqrt(p) for rational s, p >= 0, rounded once."""
    if s == 0:
        return 0.0
    val = math.sqrt(s * s * p)
    return val if s > 0 else -val


@lru_cache(maxsize=None)
def _w3j(j1: int, j2: int, j3: int, m1: int, m2: int, m3: int) -> float:
    if m1 + m2 + m3 != 0 or not _triangle_ok(j1, j2, j3):
        return 0.0
    if abs(m1) > j1 or abs(m2) > j2 or abs(m3) > j3:
        return 0.0
    if (j1 + m1) % 2 or (j2 + m2) % 2 or (j3 + m3) % 2:
        return 0.0
    # half-integer bookkeeping: everything below is in plain integers
    a = (j1 + j2 - j3) // 2
    b = (j1 - m1) // 2
    c = (j2 + m2) // 2
    d = (j3 - j2 + m1) // 2
    e = (j3 - j1 - m2) // 2
    kmin = max(0, -d, -e)
    kmax = min(a, b, c)
    total = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = _fact(k) * _fact(a - k) * _fact(b - k) * _fact(c - k) * _fact(d + k) * _fact(e + k)
        total += Fraction(-1 if k % 2 else 1, den)
    pref = _delta_sq(j1, j2, j3) * (
        _fact((j1 + m1) // 2) * _fact((j1 - m1) // 2)
        * _fact((j2 + m2) // 2) * _fact((j2 - m2) // 2)
        * _fact((j3 + m3) // 2) * _fact((j3 - m3) // 2)
    )
    if ((j1 - j2 - m3) // 2) % 2:
        total = -total
    return _signed_sqrt(total, pref)


def wigner3j(j1, j2, j3, m1, m2, m3) -> float:
    """Wigner 3-j symbol ``(j1 j2 j3; m1 m2 m3)``.

    Arguments may be ints, half-integer floats/Fractions, strings such as
    ``'5/2'`` or :class:`HalfInt`.  Selection-rule violations give exactly 0.
    """
    return _w3j(*(_doubled(x) for x in (j1, j2, j3, m1, m2, m3)))


def _canonical_6j(j):
    # the 24 tetrahedral symmetries: column permutations and swapping
    # upper/lower entries in any two columns
    a, b, c, d, e, f = j
    cols = [(a, d), (b, e), (c, f)]
    best = None
    for perm in itertools.permutations(cols):
        for flips in ((0, 0, 0), (1, 1, 0), (1, 0, 1), (0, 1, 1)):
            key = tuple(
                (p[1], p[0]) if fl else p for p, fl in zip(perm, flips)
            )
            flat = (key[0][0], key[1][0], key[2][0], key[0][1], key[1][1], key[2][1])
            if best is None or flat < best:
                best = flat
    return best


@lru_cache(maxsize=None)
def _w6j_canon(a: int, b: int, c: int, d: int, e: int, f: int) -> float:
    triads = ((a, b, c), (a, e, f), (d, b, f), (d, e, c))
    if not all(_triangle_ok(*t) for t in triads):
        return 0.0
    pref = Fraction(1)
    for t in triads:
        pref *= _delta_sq(*t)
    s1 = (a + b + c) // 2
    s2 = (a + e + f) // 2
    s3 = (d + b + f) // 2
    s4 = (d + e + c) // 2
    p1 = (a + b + d + e) // 2
    p2 = (a + c + d + f) // 2
    p3 = (b + c + e + f) // 2
    tmin = max(s1, s2, s3, s4)
    tmax = min(p1, p2, p3)
    total = Fraction(0)
    for t in range(tmin, tmax + 1):
        num = _fact(t + 1)
        den = (
            _fact(t - s1) * _fact(t - s2) * _fact(t - s3) * _fact(t - s4)
            * _fact(p1 - t) * _fact(p2 - t) * _fact(p3 - t)
        )
        total += Fraction(-num if t % 2 else num, den)
    return _signed_sqrt(total, pref)


@lru_cache(maxsize=None)
def _w6j(a: int, b: int, c: int, d: int, e: int, f: int) -> float:
    return _w6j_canon(*_canonical_6j((a, b, c, d, e, f)))


def wigner6j(j1, j2, j3, j4, j5, j6) -> float:
    """Wigner 6-j symbol ``{j1 j2 j3; j4 j5 j6}``; 0 when any triad fails."""
    return _w6j(*(_doubled(x) for x in (j1, j2, j3, j4, j5, j6)))


@lru_cache(maxsize=None)
def _w9j(a, b, c, d, e, f, g, h, i) -> float:
    rows = ((a, b, c), (d, e, f), (g, h, i))
    cols = ((a, d, g), (b, e, h), (c, f, i))
    if not all(_triangle_ok(*t) for t in rows + cols):
        return 0.0
    xmin = max(abs(a - i), abs(d - h), abs(b - f))
    xmax = min(a + i, d + h, b + f)
    total = 0.0
    for x in range(xmin, xmax + 1, 2):
        term = _w6j(a, d, g, h, i, x) * _w6j(b, e, h, d, x, f) * _w6j(c, f, i, x, a, b)
        total += (x + 1) * term * (-1 if x % 2 else 1)
    return total


def wigner9j(*j) -> float:
    """Wigner 9-j symbol, row-major arguments.  Float sum of exact 6-j values."""
    if len(j) != 9:
        raise TypeError("wigner9j takes nine arguments")
    return _w9j(*(_doubled(x) for x in j))


def clebsch_gordan(j1, m1, j2, m2, j, m) -> float:
    """<j1 m1 j2 m2 | j m> in the Condon-Shortley phase convention."""
    tj1, tm1, tj2, tm2, tj, tm = (_doubled(x) for x in (j1, m1, j2, m2, j, m))
    phase = -1 if ((tj1 - tj2 + tm) // 2) % 2 else 1
    return phase * math.sqrt(tj + 1) * _w3j(tj1, tj2, tj, tm1, tm2, -tm)


def reduced_C(l: int, k: int, lp: int) -> float:
    """<l || C^k || l'> for Racah-normalised spherical harmonics."""
    phase = -1 if l % 2 else 1
    return phase * math.sqrt((2 * l + 1) * (2 * lp + 1)) * wigner3j(l, k, lp, 0, 0, 0)


def tensor_one_part(j1, j2, J, j1p, Jp, k, red: float) -> float:
    """Reduced element of a rank-k operator acting on part 1 of |(j1 j2) J>."""
    if red == 0.0:
        return 0.0
    t = _doubled(j1) + _doubled(j2) + _doubled(Jp) + 2 * k
    phase = -1 if (t // 2) % 2 else 1
    dim = math.sqrt((_doubled(J) + 1) * (_doubled(Jp) + 1))
    return phase * dim * wigner6j(j1, J, j2, Jp, j1p, k) * red


def tensor_two_part(j1, j2, J, j2p, Jp, k, red: float) -> float:
    """Reduced element of a rank-k operator acting on part 2 of |(j1 j2) J>."""
    if red == 0.0:
        return 0.0
    t = _doubled(j1) + _doubled(j2p) + _doubled(J) + 2 * k
    phase = -1 if (t // 2) % 2 else 1
    dim = math.sqrt((_doubled(J) + 1) * (_doubled(Jp) + 1))
    return phase * dim * wigner6j(j2, J, j1, Jp, j2p, k) * red


def tensor_product_reduced(j1, j2, J, j1p, j2p, Jp, k1, k2, K, red12: float) -> float:
    """Reduced element of [T^k1(part 1) x U^k2(part 2)]^K on coupled states.

    ``red12`` is the product (or the double-tensor element) of the reduced
    elements in the two subspaces.
    """
    if red12 == 0.0:
        return 0.0
    dim = math.sqrt((_doubled(J) + 1) * (_doubled(Jp) + 1) * (2 * K + 1))
    return dim * wigner9j(j1, j1p, k1, j2, j2p, k2, J, Jp, K) * red12


@lru_cache(maxsize=None)
def _reduced_Uk(S: int, L: int, Sp: int, Lp: int, k: int) -> float:
    if S != Sp:
        return 0.0
    # U^k = u^k(1) + u^k(2) with <l||u^k||l> = 1; the coupled product state
    # with L+S even is already antisymmetric
    six = wigner6j(L_F, L, L_F, Lp, L_F, k)
    phase = ((-1) ** (Lp + k)) + ((-1) ** (L + k))
    return phase * math.sqrt((2 * L + 1) * (2 * Lp + 1)) * six


def reduced_Uk(bra: TermLabel, ket: TermLabel, k: int) -> float:
    """<f^2 S L || U^(k) || f^2 S' L'> with unit one-electron normalisation.

    ``U^(0)`` is ``(2/sqrt(7))`` times the identity, so the k = 0 diagonal
    element equals ``2*sqrt((2L+1)/7)``.
    """
    if not isinstance(bra, TermLabel) or not isinstance(ket, TermLabel):
        raise TypeError("reduced_Uk expects TermLabel arguments")
    if not 0 <= k <= 2 * L_F:
        raise ValueError("k must lie in 0..6")
    return _reduced_Uk(bra.S, bra.L, ket.S, ket.L, k)


@lru_cache(maxsize=None)
def _reduced_double(S: int, L: int, Sp: int, Lp: int, kappa: int, k: int,
                    spin_red: float, orb_red: float) -> float:
    """Two-electron double-tensor element <(ss)S (ll)L || sum_i w_i || ...>."""
    spin = math.sqrt((2 * S + 1) * (2 * Sp + 1)) * wigner6j("1/2", S, "1/2", Sp, "1/2", kappa)
    orb = math.sqrt((2 * L + 1) * (2 * Lp + 1)) * wigner6j(L_F, L, L_F, Lp, L_F, k)
    # particle-1 phase (-1)^(2s+S'+kappa)(-1)^(2l+L'+k), particle 2 has S, L
    p1 = (-1) ** (1 + Sp + kappa + Lp + k)
    p2 = (-1) ** (1 + S + kappa + L + k)
    return (p1 + p2) * spin * orb * spin_red * orb_red


def reduced_double_tensor(bra: TermLabel, ket: TermLabel, kappa: int, k: int,
                          spin_red: float, orb_red: float) -> float:
    """Double-tensor (spin rank kappa, orbital rank k) element between f^2 terms.

    The one-electron operator is ``s^kappa x o^k`` with one-electron reduced
    elements ``spin_red`` (spin) and ``orb_red`` (orbital); the result is the
    two-electron element reduced separately in spin and orbital space.
    """
    return _reduced_double(bra.S, bra.L, ket.S, ket.L, kappa, k, spin_red, orb_red)
