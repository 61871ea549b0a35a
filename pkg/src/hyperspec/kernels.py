"""Hot loops for hole-burning spectra, compiled with numba when available.

Set ``HYPERSPEC_DISABLE_NUMBA=1`` to force the pure-numpy implementations
(both paths are tested against each other).
"""
from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("HYPERSPEC_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    HAVE_NUMBA = False


def _lorentzian_sum_np(x, pos, amp, hwhm):
    d = (x[:, None] - pos[None, :]) / hwhm
    return (amp[None, :] / (1.0 + d * d)).sum(axis=1)


def _burn_populations_np(delta, g, e, S, branch, hwhm):
    # class delta has transition i->j at delta + e_j - g_i; laser sits at 0
    nu = delta[:, None, None] + e[None, None, :] - g[None, :, None]
    rate = S[None] / (1.0 + (nu / hwhm) ** 2)
    ng = len(g)
    dp = np.zeros((len(delta), ng))
    for i in range(ng):
        for k in range(ng):
            coef = branch[k] - (1.0 if k == i else 0.0)  # per upper level j
            dp[:, k] += rate[:, i, :] @ coef
    return dp


def _probe_np(nu, delta, dp, g, e, S):
    out = np.zeros(len(nu))
    for k in range(len(g)):
        for l in range(len(e)):
            if S[k, l] != 0.0:
                out += S[k, l] * np.interp(nu - e[l] + g[k], delta, dp[:, k], left=0.0, right=0.0)
    return out


if HAVE_NUMBA:
    @njit(cache=True)
    def _lorentzian_sum_nb(x, pos, amp, hwhm):
        out = np.zeros(x.shape[0])
        for n in range(x.shape[0]):
            acc = 0.0
            for f in range(pos.shape[0]):
                d = (x[n] - pos[f]) / hwhm
                acc += amp[f] / (1.0 + d * d)
            out[n] = acc
        return out

    @njit(cache=True)
    def _burn_populations_nb(delta, g, e, S, branch, hwhm):
        ng, ne = g.shape[0], e.shape[0]
        dp = np.zeros((delta.shape[0], ng))
        for c in range(delta.shape[0]):
            for i in range(ng):
                for j in range(ne):
                    if S[i, j] == 0.0:
                        continue
                    d = (delta[c] + e[j] - g[i]) / hwhm
                    r = S[i, j] / (1.0 + d * d)
                    for k in range(ng):
                        dp[c, k] += r * branch[k, j]
                    dp[c, i] -= r
        return dp

    @njit(cache=True)
    def _probe_nb(nu, delta, dp, g, e, S):
        n = delta.shape[0]
        h0, step = delta[0], (delta[n - 1] - delta[0]) / (n - 1)
        out = np.zeros(nu.shape[0])
        for p in range(nu.shape[0]):
            acc = 0.0
            for k in range(g.shape[0]):
                for l in range(e.shape[0]):
                    if S[k, l] == 0.0:
                        continue
                    x = (nu[p] - e[l] + g[k] - h0) / step
                    i0 = int(np.floor(x))
                    if i0 < 0 or i0 >= n - 1:
                        continue
                    t = x - i0
                    acc += S[k, l] * ((1.0 - t) * dp[i0, k] + t * dp[i0 + 1, k])
            out[p] = acc
        return out


def lorentzian_sum(x, pos, amp, hwhm: float, use_numba: bool | None = None) -> np.ndarray:
    """sum_f amp_f / (1 + ((x - pos_f)/hwhm)^2)."""
    args = (np.ascontiguousarray(x, float), np.ascontiguousarray(pos, float),
            np.ascontiguousarray(amp, float), float(hwhm))
    if _pick(use_numba):
        return _lorentzian_sum_nb(*args)
    return _lorentzian_sum_np(*args)


def burn_populations(delta, g, e, S, branch, hwhm: float, use_numba: bool | None = None) -> np.ndarray:
    """Linear-response population change per ground level for each offset class.

    ``branch[k, j]`` is the decay probability from upper level j to ground k.
    """
    args = tuple(np.ascontiguousarray(a, float) for a in (delta, g, e, S, branch)) + (float(hwhm),)
    if _pick(use_numba):
        return _burn_populations_nb(*args)
    return _burn_populations_np(*args)


def probe_absorption(nu, delta, dp, g, e, S, use_numba: bool | None = None) -> np.ndarray:
    """Absorption change seen by a delta-function probe; ``delta`` must be uniform."""
    args = tuple(np.ascontiguousarray(a, float) for a in (nu, delta, dp, g, e, S))
    if _pick(use_numba):
        return _probe_nb(*args)
    return _probe_np(*args)


def _pick(use_numba):
    if use_numba is None:
        return HAVE_NUMBA
    if use_numba and not HAVE_NUMBA:
        raise RuntimeError("numba requested but unavailable or disabled")
    return bool(use_numba)
