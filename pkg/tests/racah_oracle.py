"""Exact Racah-sum 3-j and 6-j symbols on doubled integer arguments.

Written separately from hyperspec.angular: every quantity is an integer or a
Fraction, and the symbol is returned as ``(sign, square)`` so nothing is
rounded until the final comparison.  Cross-checked against sympy in
test_acceptance on a random subset.
"""
import itertools
import math
from fractions import Fraction
from math import factorial as fac


def _tri(a, b, c):
    return abs(a - b) <= c <= a + b and (a + b + c) % 2 == 0


def _delta_sq(a, b, c):
    # arguments doubled; (a+b-c)/2 etc. are integers once the triad is valid
    return Fraction(fac((a + b - c) // 2) * fac((a - b + c) // 2) * fac((-a + b + c) // 2),
                    fac((a + b + c) // 2 + 1))


def _as_float(total: Fraction, square: Fraction) -> float:
    if total == 0:
        return 0.0
    # float(Fraction) is correctly rounded, so one sqrt keeps ~1 ulp
    return math.copysign(math.sqrt(float(total * total * square)), total)


def three_j(j1, j2, j3, m1, m2, m3) -> float:
    """All arguments doubled."""
    if m1 + m2 + m3 != 0 or not _tri(j1, j2, j3):
        return 0.0
    if any(abs(m) > j or (j + m) % 2 for j, m in ((j1, m1), (j2, m2), (j3, m3))):
        return 0.0
    pre = _delta_sq(j1, j2, j3) * fac((j1 + m1) // 2) * fac((j1 - m1) // 2) * fac((j2 + m2) // 2) \
        * fac((j2 - m2) // 2) * fac((j3 + m3) // 2) * fac((j3 - m3) // 2)
    kmin = max(0, (j2 - j3 - m1) // 2, (j1 - j3 + m2) // 2)
    kmax = min((j1 + j2 - j3) // 2, (j1 - m1) // 2, (j2 + m2) // 2)
    total = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = fac(k) * fac((j3 - j2 + m1) // 2 + k) * fac((j3 - j1 - m2) // 2 + k) \
            * fac((j1 + j2 - j3) // 2 - k) * fac((j1 - m1) // 2 - k) * fac((j2 + m2) // 2 - k)
        total += Fraction((-1) ** k, den)
    if ((j1 - j2 - m3) // 2) % 2:
        total = -total
    return _as_float(total, pre)


def six_j(a, b, c, d, e, f) -> float:
    """All arguments doubled."""
    triads = ((a, b, c), (a, e, f), (d, b, f), (d, e, c))
    if not all(_tri(*t) for t in triads):
        return 0.0
    pre = Fraction(1)
    for t in triads:
        pre *= _delta_sq(*t)
    alphas = [sum(t) // 2 for t in triads]
    betas = [(a + b + d + e) // 2, (b + c + e + f) // 2, (c + a + f + d) // 2]
    total = Fraction(0)
    for k in range(max(alphas), min(betas) + 1):
        den = math.prod(fac(k - x) for x in alphas) * math.prod(fac(y - k) for y in betas)
        total += Fraction((-1) ** k * fac(k + 1), den)
    return _as_float(total, pre)


def all_three_j(jmax2=12):
    """Every admissible 3-j with j <= jmax2/2, doubled arguments."""
    r = range(jmax2 + 1)
    for j1, j2, j3 in itertools.product(r, repeat=3):
        if not _tri(j1, j2, j3):
            continue
        for m1 in range(-j1, j1 + 1, 2):
            for m2 in range(-j2, j2 + 1, 2):
                if abs(m1 + m2) <= j3:
                    yield j1, j2, j3, m1, m2, -m1 - m2


def all_six_j(jmax2=12):
    r = range(jmax2 + 1)
    for a, b, c in itertools.product(r, repeat=3):
        if not _tri(a, b, c):
            continue
        for d, e in itertools.product(r, repeat=2):
            if not _tri(d, e, c):
                continue
            for f in r:
                if _tri(a, e, f) and _tri(d, b, f):
                    yield a, b, c, d, e, f
