"""Pointed manifold models reduced to their radial curvature matrices.

A model is seen only through ``a(t; u)``: the symmetric ``(n-1) x (n-1)``
matrix of ``<R(E_i, T) T, E_j>`` along the unit-speed geodesic from the base
point in direction ``u``, written in a parallel orthonormal frame. The curvature
tensor follows the sign convention in which ``K(E_i ^ T) = -a_ii``, so the round
unit sphere has ``a = -I`` and its Jacobi components solve ``f'' = a f``.

Distances are normalized so that the single cut point of the base point sits at
distance pi.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

BOUNDARY_TOL = 1e-10
UNIT_TOL = 1e-10
ORTHO_TOL = 1e-12


class ModelError(ValueError):
    """A model violates the single-cut-point normalization or is malformed."""


# ---------------------------------------------------------------------------
# frames
# ---------------------------------------------------------------------------

def frame(U: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal frames ``e_1..e_{n-1}`` orthogonal to each row of ``U``.

    Gram-Schmidt of the canonical basis against ``u``, skipping the canonical
    vector most parallel to ``u`` (lowest index on ties). Returns shape
    ``(m, n, n-1)`` with the frame vectors as columns; a single direction of
    shape ``(n,)`` gives ``(n, n-1)``.
    """
    U = np.asarray(U, dtype=float)
    single = U.ndim == 1
    U = np.atleast_2d(U)
    m, n = U.shape
    skip = np.argmax(np.abs(U), axis=1)
    idx = np.arange(n - 1)[None, :]
    idx = idx + (idx >= skip[:, None])
    eye = np.eye(n)
    E = np.empty((m, n, n - 1))
    for j in range(n - 1):
        v = eye[idx[:, j]]
        # two passes of modified Gram-Schmidt keep the frame orthogonal to ~eps
        for _ in range(2):
            v = v - np.sum(v * U, axis=1, keepdims=True) * U
            for i in range(j):
                e = E[:, :, i]
                v = v - np.sum(v * e, axis=1, keepdims=True) * e
        E[:, :, j] = v / np.linalg.norm(v, axis=1, keepdims=True)
    return E[0] if single else E


def normalize(U: np.ndarray) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    return U / np.linalg.norm(U, axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# isometries between base tangent spaces
# ---------------------------------------------------------------------------

def validate_isometry(Q, n: Optional[int] = None, tol: float = ORTHO_TOL) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ModelError(f"isometry must be a square matrix, got shape {Q.shape}")
    if n is not None and Q.shape[0] != n:
        raise ModelError(f"isometry has order {Q.shape[0]}, expected {n}")
    err = np.max(np.abs(Q.T @ Q - np.eye(Q.shape[0])))
    if err > tol:
        raise ModelError(f"isometry is not orthogonal: max|Q^T Q - I| = {err:.3e}")
    return Q


def random_isometry(n: int, seed: int) -> np.ndarray:
    """Haar-distributed orthogonal matrix from a seeded Gaussian QR."""
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, n))
    Qm, R = np.linalg.qr(Z)
    return Qm * np.sign(np.diag(R))[None, :]


# ---------------------------------------------------------------------------
# warped profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WarpedProfile:
    """Warping function ``f`` of the metric ``dt^2 + f(t)^2 g_{S^{n-1}}`` on [0, pi].

    ``ratio`` returns ``f''/f`` with the removable endpoint singularities
    filled in, which is the radial curvature matrix entry of the model.
    """

    name: str
    f: Callable
    fp: Callable
    fpp: Callable
    ratio: Callable
    params: dict = field(default_factory=dict)

    def check(self, grid_points: int = 2001) -> None:
        ends = {
            "f(0)": (self.f(0.0), 0.0), "f'(0)": (self.fp(0.0), 1.0),
            "f(pi)": (self.f(np.pi), 0.0), "f'(pi)": (self.fp(np.pi), -1.0),
        }
        for label, (got, want) in ends.items():
            if abs(float(got) - want) > BOUNDARY_TOL:
                raise ModelError(
                    f"profile {self.name!r}: {label} = {float(got):.3e}, expected {want}; "
                    "not a single-cut-point model normalized to distance pi")
        t = np.linspace(0.0, np.pi, grid_points)[1:-1]
        if np.any(np.asarray(self.f(t)) <= 0):
            raise ModelError(f"profile {self.name!r} is not positive on (0, pi)")


def bump_ratio(t, beta: float):
    """Closed form of ``f''/f`` for ``f = sin(t) exp(beta sin^2 t)``; regular at both ends."""
    t = np.asarray(t, dtype=float)
    return (-1.0 + 4 * beta * np.cos(t) ** 2 + 2 * beta * np.cos(2 * t)
            + beta ** 2 * np.sin(2 * t) ** 2)


def bump_profile(beta: float) -> WarpedProfile:
    beta = float(beta)

    def f(t):
        t = np.asarray(t, dtype=float)
        return np.sin(t) * np.exp(beta * np.sin(t) ** 2)

    def fp(t):
        t = np.asarray(t, dtype=float)
        return (np.cos(t) + beta * np.sin(t) * np.sin(2 * t)) * np.exp(beta * np.sin(t) ** 2)

    def fpp(t):
        return bump_ratio(t, beta) * f(t)

    return WarpedProfile("bump", f, fp, fpp, lambda t: bump_ratio(t, beta), {"beta": beta})


def round_profile() -> WarpedProfile:
    p = bump_profile(0.0)
    return WarpedProfile("round", p.f, p.fp, p.fpp, p.ratio, {})


def read_profile_table(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["t", "f", "fp", "fpp"]:
            raise ModelError(f"{path}: columns must be exactly t,f,fp,fpp; got {reader.fieldnames}")
        rows = [[float(r[c]) for c in ("t", "f", "fp", "fpp")] for r in reader]
    data = np.array(rows)
    if data.shape[0] < 4 or np.any(np.diff(data[:, 0]) <= 0):
        raise ModelError(f"{path}: need at least 4 rows with strictly increasing t")
    return {"t": data[:, 0], "f": data[:, 1], "fp": data[:, 2], "fpp": data[:, 3]}


def table_profile(path, k0: float, kpi: float) -> WarpedProfile:
    """Profile from a sampled (t, f, f', f'') table, cubic-interpolated.

    ``k0`` and ``kpi`` are the sectional curvatures at the two poles; a table
    cannot resolve ``f''/f`` there, so they are required.
    """
    tab = read_profile_table(path)
    t = tab["t"]
    if abs(t[0]) > BOUNDARY_TOL or abs(t[-1] - np.pi) > BOUNDARY_TOL:
        raise ModelError(f"{path}: table must span [0, pi]")
    sf, sfp, sfpp = (CubicSpline(t, tab[c]) for c in ("f", "fp", "fpp"))

    def ratio(s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = sfpp(s) / sf(s)
        r = np.where(s <= 0.0, -k0, r)
        return np.where(s >= np.pi, -kpi, r)

    return WarpedProfile(f"table:{Path(path).name}", sf, sfp, sfpp, ratio,
                         {"path": str(path), "k0": k0, "kpi": kpi})


# ---------------------------------------------------------------------------
# perturbed spheres (the charted family)
# ---------------------------------------------------------------------------

def angular_mode(U) -> np.ndarray:
    """Degree-2 harmonic ``u_1^2 - u_2^2`` driving the angular perturbation."""
    U = np.asarray(U, dtype=float)
    return U[..., 0] ** 2 - U[..., 1] ** 2


def perturbed_ratio(t, Y, beta: float, amplitude: float):
    """``phi_tt / phi`` for ``phi = f_beta(t) exp(A sin^4(t) Y)``.

    This is the radial curvature entry of ``dt^2 + phi^2 g_{S^{n-1}}``; the
    radial shape operator of that metric is isotropic, so ``a = ratio * I``.
    """
    t = np.asarray(t, dtype=float)
    s2, c2 = np.sin(t) ** 2, np.cos(t) ** 2
    psi_t = 4 * np.sin(t) ** 3 * np.cos(t)
    lin = 20 * s2 * c2 + 16 * beta * s2 ** 2 * c2 - 4 * s2 ** 2
    return bump_ratio(t, beta) + amplitude * Y * lin + (amplitude * Y * psi_t) ** 2


# ---------------------------------------------------------------------------
# geometries
# ---------------------------------------------------------------------------

FrameField = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class RadialGeometry:
    """A pointed model of dimension ``n`` seen through ``a(t; u)``.

    ``field(t, U)`` returns the curvature matrices in the default frames
    ``frame(U)``; ``t`` is a scalar or an array broadcast against the rows of
    ``U``. Other frames are reached by rotation, so every frame-covariant
    quantity is independent of the frame choice.
    """

    n: int
    kind: str
    evaluator: FrameField
    params: dict = field(default_factory=dict)
    isotropic: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise ModelError("dimension must be >= 2")
        if self.kind not in ("warped", "synthetic", "charted"):
            raise ModelError(f"unknown geometry kind {self.kind!r}")

    def curvature(self, t, U, frames: Optional[np.ndarray] = None) -> np.ndarray:
        U = np.atleast_2d(np.asarray(U, dtype=float))
        if U.shape[1] != self.n:
            raise ModelError(f"direction dimension {U.shape[1]} != model dimension {self.n}")
        a = self.evaluator(np.broadcast_to(np.asarray(t, dtype=float), U.shape[:1]), U)
        if frames is None or self.isotropic:
            return a
        R = np.einsum("mki,mkj->mij", frame(U), frames)
        return np.einsum("mki,mkl,mlj->mij", R, a, R)

    def describe(self) -> dict:
        return {"kind": self.kind, "n": self.n, **self.params}


def _isotropic(n: int, scalar: Callable) -> FrameField:
    eye = np.eye(n - 1)

    def field_(t, U):
        return scalar(t, U)[:, None, None] * eye
    return field_


def warped_geometry(profile: WarpedProfile, n: int = 2) -> RadialGeometry:
    """Radial curvature ``a = (f''/f) I`` of ``dt^2 + f^2 g_{S^{n-1}}``."""
    profile.check()
    return RadialGeometry(n, "warped", _isotropic(n, lambda t, U: profile.ratio(t)),
                          {"profile": profile.name, **profile.params}, isotropic=True)


def synthetic_constant(kappa: float, n: int = 2) -> RadialGeometry:
    """Constant field ``a = -kappa I``; no manifold realization is implied."""
    kappa = float(kappa)
    return RadialGeometry(n, "synthetic", _isotropic(n, lambda t, U: np.full(t.shape, -kappa)),
                          {"field": "constant", "kappa": kappa}, isotropic=True)


def anisotropy_tensor(n: int) -> np.ndarray:
    return np.diag(np.linspace(1.0, -1.0, n)) + 0.25 * (np.eye(n, k=1) + np.eye(n, k=-1))


def synthetic_anisotropic(kappa: float, eta: float, n: int = 3) -> RadialGeometry:
    """``a = E^T (-kappa I - eta sin^2(t) S) E`` for a fixed symmetric ``S``."""
    kappa, eta = float(kappa), float(eta)
    S = anisotropy_tensor(n)

    def field_(t, U):
        E = frame(U)
        T = -kappa * np.eye(n) - (eta * np.sin(t) ** 2)[:, None, None] * S
        return np.einsum("mki,mkl,mlj->mij", E, T, E)

    return RadialGeometry(n, "synthetic", field_,
                          {"field": "anisotropic", "kappa": kappa, "eta": eta})


def synthetic_field(func: FrameField, n: int, **params) -> RadialGeometry:
    """Wrap a user field ``(t, U) -> a`` given in the default frames."""
    return RadialGeometry(n, "synthetic", func, {"field": "user", **params})


def charted_geometry(beta: float, amplitude: float, n: int = 2) -> RadialGeometry:
    """Radial curvature of the perturbed sphere ``dt^2 + (f_beta e^{A sin^4 t Y})^2 g``."""
    if n not in (2, 3):
        raise ModelError("charted models are restricted to n in {2, 3}")
    beta, amplitude = float(beta), float(amplitude)
    bump_profile(beta).check()
    return RadialGeometry(
        n, "charted",
        _isotropic(n, lambda t, U: perturbed_ratio(t, angular_mode(U), beta, amplitude)),
        {"beta": beta, "amplitude": amplitude}, isotropic=True)


# ---------------------------------------------------------------------------
# sectional curvature algebra
# ---------------------------------------------------------------------------

def sectional_curvature(a, x) -> float:
    """Radial sectional curvature ``-x^T a x`` of the plane spanned by ``x`` and the geodesic."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if abs(np.linalg.norm(x) - 1.0) > UNIT_TOL:
        raise ValueError(f"x must be a unit vector, |x| = {np.linalg.norm(x):.12g}")
    return float(-x @ a @ x)


def polarization_roundtrip(a) -> np.ndarray:
    """Rebuild ``a`` from sectional curvatures of coordinate planes and their bisectors."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    k = a.shape[0]
    eye = np.eye(k)
    K = np.array([sectional_curvature(a, eye[i]) for i in range(k)])
    out = np.diag(-K)
    for i in range(k):
        for j in range(i + 1, k):
            # |e_i + e_j| = sqrt(2); the plane curvature does not see the scale
            kij = sectional_curvature(a, (eye[i] + eye[j]) / np.sqrt(2.0))
            out[i, j] = out[j, i] = 0.5 * (K[i] + K[j]) - kij
    return out
