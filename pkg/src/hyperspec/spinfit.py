"""Parameter estimation: hyperfine constants a_i and effective spin Hamiltonians.

The spin Hamiltonian of one CF level is ``H_s = B.M.I + I.Q.I`` with, in the
principal axes of each tensor, ``M = diag(g1, g2, g3)`` and
``Q = diag(E - D/3, -E - D/3, 2D/3)``.  One principal axis of each tensor is
the site C2 axis (lab z), so the in-plane orientation is a rotation angle
about z.

Sphere fits compare the sorted, trace-centred level energies per direction.
Sorting removes the dependence on eigenvalue order and centring removes the
arbitrary energy offset, while the sign of D stays observable.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares
from scipy.spatial.transform import Rotation

from .angular import HalfInt
from .hyperfine import HyperfineParams, HyperfineSystem, MagneticField, spin_matrices

log = logging.getLogger(__name__)


class FitError(RuntimeError):
    """Fit failed to converge or is ill-posed."""


@dataclass
class FitReport:
    params: dict
    residual_norm: float
    residuals: np.ndarray
    covariance: np.ndarray
    iterations: int
    converged: bool
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "params": self.params,
            "residual_norm": float(self.residual_norm),
            "residuals": np.asarray(self.residuals).tolist(),
            "covariance": np.asarray(self.covariance).tolist(),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            **self.extra,
        }


def _covariance(jac: np.ndarray, resid: np.ndarray) -> np.ndarray:
    dof = max(len(resid) - jac.shape[1], 1)
    s2 = float(resid @ resid) / dof
    u, s, vt = np.linalg.svd(jac, full_matrices=False)
    thresh = np.finfo(float).eps * max(jac.shape) * (s[0] if len(s) else 0)
    inv = np.where(s > thresh, 1.0 / np.where(s > thresh, s, 1.0) ** 2, 0.0)
    cov = (vt.T * inv) @ vt * s2
    return 0.5 * (cov + cov.T)


# --- spin Hamiltonian ------------------------------------------------------

def _rz(phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _proper_axes(vecs: np.ndarray) -> np.ndarray:
    """Deterministic sign choice for eigenvector columns, det = +1."""
    v = vecs.copy()
    for i in range(3):
        j = np.argmax(np.abs(v[:, i]) + 1e-9 * np.arange(3)[::-1])
        if v[j, i] < 0:
            v[:, i] = -v[:, i]
    if np.linalg.det(v) < 0:
        v[:, 2] = -v[:, 2]
    return v


@dataclass(frozen=True)
class SpinHamiltonianParams:
    """D, E (MHz), g1..g3 (MHz/T) and ZYZ Euler angles (rad) of both tensors.

    ``euler_M`` / ``euler_Q`` rotate the principal frame of M / Q into the
    crystal-field axes.
    """

    D: float
    E: float
    g: tuple
    euler_M: tuple = (0.0, 0.0, 0.0)
    euler_Q: tuple = (0.0, 0.0, 0.0)

    @property
    def g_abs(self) -> tuple:
        return tuple(sorted(abs(x) for x in self.g))

    def tensors(self) -> tuple[np.ndarray, np.ndarray]:
        rm = Rotation.from_euler("ZYZ", self.euler_M).as_matrix()
        rq = Rotation.from_euler("ZYZ", self.euler_Q).as_matrix()
        M = rm @ np.diag(self.g) @ rm.T
        Q = rq @ np.diag([self.E - self.D / 3, -self.E - self.D / 3, 2 * self.D / 3]) @ rq.T
        return M, Q

    @classmethod
    def from_tensors(cls, M: np.ndarray, Q: np.ndarray) -> "SpinHamiltonianParams":
        """Canonical form: |g1| <= |g2| <= |g3| with g3 >= 0; D on Q axis 3, E >= 0."""
        M = 0.5 * (M + M.T)
        Q = 0.5 * (Q + Q.T)
        gm, vm = np.linalg.eigh(M)
        if np.max(np.abs(gm)) > 0 and gm[np.argmax(np.abs(gm))] < 0:
            # overall sign of M is a time-reversal gauge
            gm, M = -gm, -M
        order = np.argsort(np.abs(gm), kind="stable")
        gm, vm = gm[order], _proper_axes(vm[:, order])
        qv, vq = np.linalg.eigh(Q)
        iD = int(np.argmax(np.abs(qv)))
        rest = [i for i in range(3) if i != iD]
        a, b = qv[rest[0]], qv[rest[1]]
        if a - b < 0:
            rest = rest[::-1]
            a, b = b, a
        D = 1.5 * qv[iD]
        E = 0.5 * (a - b)
        vq = _proper_axes(vq[:, rest + [iD]])
        # _proper_axes may flip the third column; a symmetric tensor is unaffected
        with warnings.catch_warnings():
            # axes along z give beta = 0; the angle split is then arbitrary but harmless
            warnings.simplefilter("ignore", UserWarning)
            em = tuple(Rotation.from_matrix(vm).as_euler("ZYZ"))
            eq = tuple(Rotation.from_matrix(vq).as_euler("ZYZ"))
        return cls(float(D), float(E), tuple(float(x) for x in gm), em, eq)

    def canonical(self) -> "SpinHamiltonianParams":
        return SpinHamiltonianParams.from_tensors(*self.tensors())

    def c2_axes(self, tol: float = 1e-6) -> dict:
        """Index (0..2) of the principal axis along the C2 axis, or None."""
        out = {}
        for name, e in (("M", self.euler_M), ("Q", self.euler_Q)):
            R = Rotation.from_euler("ZYZ", e).as_matrix()
            dots = np.abs(R[2, :])
            i = int(np.argmax(dots))
            out[name] = i if abs(dots[i] - 1) < tol else None
        return out

    def to_dict(self) -> dict:
        return {
            "D_MHz": self.D,
            "E_MHz": self.E,
            "abs_E_MHz": abs(self.E),
            "g_MHz_per_T": list(self.g),
            "abs_g_MHz_per_T": list(self.g_abs),
            "euler_M_rad": list(self.euler_M),
            "euler_Q_rad": list(self.euler_Q),
            "c2_principal_axis": self.c2_axes(),
            "sign_ambiguity": "signs of individual g_i and the handedness of the Q axes "
                              "relative to M are not determined by level energies; "
                              "magnitudes reported",
        }


def spin_hamiltonian_matrix(M: np.ndarray, Q: np.ndarray, B: np.ndarray, I) -> np.ndarray:
    ops = np.array(spin_matrices(I))
    return np.einsum("i,ij,jab->ab", B, M, ops) + np.einsum("ij,iab,jbc->ac", Q, ops, ops)


def spin_hamiltonian_splittings(p: SpinHamiltonianParams, B: MagneticField | None, I=HalfInt(5)) -> np.ndarray:
    """Eigenvalues (MHz, ascending) of H_s for field B (tesla)."""
    M, Q = p.tensors()
    b = np.zeros(3) if B is None else B.vector
    return np.linalg.eigvalsh(spin_hamiltonian_matrix(M, Q, b, I))


def sample_sphere(n: int) -> np.ndarray:
    """Quasi-uniform unit vectors: +-x, +-y, +-z plus a Fibonacci lattice."""
    if n < 6:
        raise ValueError("need at least 6 directions")
    if n < 20:
        warnings.warn("fewer than 20 directions may not identify all spin-Hamiltonian "
                      "parameters", stacklevel=2)
    axes = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], float)
    m = n - 6
    if m == 0:
        return axes
    k = np.arange(m) + 0.5
    z = 1 - 2 * k / m
    r = np.sqrt(1 - z * z)
    phi = math.pi * (3 - math.sqrt(5)) * k
    fib = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    return np.vstack([axes, fib])


class SphereModel:
    """Vectorised H_s evaluation over a fixed set of field vectors.

    Fit vector: ``(gx, gy, gz, D, E, phi_M[, phi_Q])`` in the crystal-field
    frame with z the C2 axis and the in-plane principal axes rotated by phi.
    """

    def __init__(self, directions: np.ndarray, magnitude: float, I=HalfInt(5), shared_axes: bool = True):
        self.B = magnitude * np.asarray(directions, float)
        self.I = HalfInt.of(I)
        self.ops = np.array(spin_matrices(self.I))
        self.opop = np.einsum("iab,jbc->ijac", self.ops, self.ops)
        self.shared = shared_axes
        self.nparam = 6 if shared_axes else 7

    def tensors(self, x):
        gx, gy, gz, D, E, phm = x[:6]
        phq = phm if self.shared else x[6]
        rm, rq = _rz(phm), _rz(phq)
        M = rm @ np.diag([gx, gy, gz]) @ rm.T
        Q = rq @ np.diag([E - D / 3, -E - D / 3, 2 * D / 3]) @ rq.T
        return M, Q

    def tensor_derivs(self, x):
        """d M / d x and d Q / d x, shape (nparam, 3, 3)."""
        gx, gy, gz, D, E, phm = x[:6]
        phq = phm if self.shared else x[6]
        rm, rq = _rz(phm), _rz(phq)
        drm = np.array([[-math.sin(phm), -math.cos(phm), 0], [math.cos(phm), -math.sin(phm), 0], [0, 0, 0]])
        drq = np.array([[-math.sin(phq), -math.cos(phq), 0], [math.cos(phq), -math.sin(phq), 0], [0, 0, 0]])
        dm = np.zeros((self.nparam, 3, 3))
        dq = np.zeros((self.nparam, 3, 3))
        gd = np.diag([gx, gy, gz])
        qd = np.diag([E - D / 3, -E - D / 3, 2 * D / 3])
        for i in range(3):
            e = np.zeros((3, 3))
            e[i, i] = 1
            dm[i] = rm @ e @ rm.T
        dq[3] = rq @ np.diag([-1 / 3, -1 / 3, 2 / 3]) @ rq.T
        dq[4] = rq @ np.diag([1.0, -1.0, 0.0]) @ rq.T
        dm[5] = drm @ gd @ rm.T + rm @ gd @ drm.T
        dQphi = drq @ qd @ rq.T + rq @ qd @ drq.T
        if self.shared:
            dq[5] = dQphi
        else:
            dq[6] = dQphi
        return dm, dq

    def hamiltonians(self, x) -> np.ndarray:
        M, Q = self.tensors(x)
        zee = np.einsum("ni,ij,jab->nab", self.B, M, self.ops)
        quad = np.einsum("ij,ijac->ac", Q, self.opop)
        return zee + quad[None]

    def levels(self, x) -> np.ndarray:
        return np.linalg.eigvalsh(self.hamiltonians(x))

    def levels_and_jac(self, x):
        w, v = np.linalg.eigh(self.hamiltonians(x))
        # Hellmann-Feynman: d lambda / d T = <v| dH/dT |v>
        iexp = np.real(np.einsum("nak,jab,nbk->nkj", v.conj(), self.ops, v))
        ii = np.real(np.einsum("nak,ijab,nbk->nkij", v.conj(), self.opop, v))
        dm, dq = self.tensor_derivs(x)
        dl_dM = np.einsum("ni,nkj->nkij", self.B, iexp)
        jac = np.einsum("nkij,pij->nkp", dl_dM, dm) + np.einsum("nkij,pij->nkp", ii, dq)
        return w, jac

    def to_params(self, x) -> SpinHamiltonianParams:
        return SpinHamiltonianParams.from_tensors(*self.tensors(x))


def _centered(levels: np.ndarray) -> np.ndarray:
    lv = np.sort(np.asarray(levels, float), axis=-1)
    return lv - lv.mean(axis=-1, keepdims=True)


def fit_spin_hamiltonian(levels: np.ndarray, directions: np.ndarray, magnitude: float = 5e-3,
                         I=HalfInt(5), n_starts: int = 8, seed: int = 0, shared_axes: bool = False,
                         jacobian: str = "analytic", tol: float = 1e-14) -> FitReport:
    """Fit H_s to level energies computed on a sphere of field directions.

    ``levels`` is (n_dir, 2I+1) in MHz; ``directions`` unit vectors in the CF
    frame; ``magnitude`` in tesla.  Returns a :class:`FitReport` whose
    ``params`` hold the canonical :class:`SpinHamiltonianParams` as a dict
    (``extra['spin_params']`` keeps the object).
    """
    data = _centered(levels)
    model = SphereModel(directions, magnitude, I, shared_axes)
    if data.shape != (len(model.B), model.ops.shape[1]):
        raise ValueError("levels must be (n_directions, 2I+1)")

    def resid(x):
        return (model.levels(x) - data).ravel()

    def jac(x):
        return model.levels_and_jac(x)[1].reshape(-1, model.nparam)

    rng = np.random.default_rng(seed)
    spread = float(np.median(data[:, -1] - data[:, 0]))
    gscale = max(spread / (magnitude * 2 * HalfInt.of(I).value), 1.0)
    best = None
    for s in range(n_starts):
        sign = 1 if s % 2 == 0 else -1
        x0 = np.array([
            *rng.uniform(0.2, 1.5, 3) * gscale,
            sign * rng.uniform(0.5, 1.2) * spread / 6,
            rng.uniform(0.0, 0.1) * spread / 6,
            rng.uniform(0, math.pi),
            *([] if shared_axes else [rng.uniform(0, math.pi)]),
        ])
        res = least_squares(resid, x0, jac=jac if jacobian == "analytic" else "2-point",
                            method="lm", xtol=tol, ftol=tol, gtol=tol, max_nfev=4000)
        log.debug("start %d cost %.3e", s, res.cost)
        if best is None or res.cost < best.cost:
            best = res
        if best.cost < 1e-24 * max(1.0, float(data.size)):
            break
    r = best.fun
    params = model.to_params(best.x)
    report = FitReport(
        params=params.to_dict(),
        residual_norm=float(np.linalg.norm(r)),
        residuals=r,
        covariance=_covariance(best.jac, r),
        iterations=int(best.nfev),
        converged=bool(best.status > 0),
        extra={"raw_x": best.x.tolist(), "shared_axes": shared_axes, "field_T": magnitude,
               "n_directions": len(model.B)},
    )
    report.extra["spin_params"] = params
    return report


def jacobian_rank(p_x: np.ndarray, directions: np.ndarray, magnitude: float = 5e-3,
                  shared_axes: bool = True, rtol: float = 1e-8) -> int:
    """Numerical rank of d(levels)/d(parameters) at fit vector ``p_x``."""
    model = SphereModel(directions, magnitude, HalfInt(5), shared_axes)
    J = model.levels_and_jac(np.asarray(p_x, float))[1].reshape(-1, model.nparam)
    s = np.linalg.svd(J, compute_uv=False)
    return int(np.sum(s > rtol * s[0]))


def fit_spin_hamiltonian_from_model(system: HyperfineSystem, hf: HyperfineParams, target: int = 0,
                                    n_directions: int = 100, magnitude: float = 5e-3,
                                    threads: int = 1, **kw) -> FitReport:
    """Compute full-model levels on the sphere and fit H_s to them."""
    dirs = sample_sphere(n_directions)
    levels = system.splittings_vs_field(hf, dirs, magnitude, target, threads)
    return fit_spin_hamiltonian(levels, dirs, magnitude, system.nuclear.I, **kw)


# --- hyperfine constants ---------------------------------------------------

A_SCALE = np.array([100.0, 10.0, 1e-8])


def _model_splittings(systems, x) -> np.ndarray:
    hf = HyperfineParams(*(np.asarray(x) * A_SCALE))
    return np.concatenate([s.zero_field_splittings(hf, t).splittings for s, t in systems])


def fit_hyperfine_constants(exp_splittings, systems, init: HyperfineParams,
                            max_nfev: int = 500, tol: float = 1e-12) -> FitReport:
    """Least-squares (a1, a2, a3) against measured zero-field splittings.

    ``systems`` is a list of ``(HyperfineSystem, cf_level_index)`` pairs; each
    contributes its two ascending splittings, in order, to the model vector.
    """
    target = np.asarray(exp_splittings, float)
    if np.any(target < 0):
        raise ValueError("experimental splittings must be non-negative")
    if len(target) != 2 * len(systems):
        raise ValueError("need two splittings per fitted CF level")
    if len(target) < 3:
        raise FitError("three constants need at least two fitted CF levels")
    x0 = init.as_array() / A_SCALE

    def resid(x):
        return _model_splittings(systems, x) - target

    r0 = resid(x0)
    if not np.any(r0):
        # exact solution at the starting point (e.g. zero targets from zero init)
        return FitReport(params={"a1_MHz": init.a1, "a2_MHz": init.a2, "a3": init.a3},
                         residual_norm=0.0, residuals=r0, covariance=np.zeros((3, 3)),
                         iterations=0, converged=True,
                         extra={"model_splittings_MHz": target.tolist(),
                                "target_splittings_MHz": target.tolist()})
    res = least_squares(resid, x0, method="lm", xtol=tol, ftol=tol, gtol=tol, max_nfev=max_nfev)
    sv = np.linalg.svd(res.jac, compute_uv=False)
    if sv[0] == 0 or sv[-1] <= 1e-12 * sv[0]:
        raise FitError("degenerate Jacobian: (a1, a2, a3) not identifiable from these splittings")
    a = res.x * A_SCALE
    cov = _covariance(res.jac, res.fun) * np.outer(A_SCALE, A_SCALE)
    report = FitReport(
        params={"a1_MHz": a[0], "a2_MHz": a[1], "a3": a[2]},
        residual_norm=float(np.linalg.norm(res.fun)),
        residuals=res.fun,
        covariance=cov,
        iterations=int(res.nfev),
        converged=bool(res.status > 0),
        extra={"model_splittings_MHz": (res.fun + target).tolist(),
               "target_splittings_MHz": target.tolist()},
    )
    if not report.converged:
        raise FitError(f"a_i fit did not converge after {res.nfev} evaluations")
    return report
