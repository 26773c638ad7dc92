"""Curvature gap between two pointed models and the Jacobi system matrix.

The gap ``lambda(t)`` is the largest difference of radial sectional curvatures
over corresponding planes. For a fixed direction the inner maximum over the
plane is a Rayleigh quotient of ``a1 - a2``, so it is computed exactly as the
spectral radius; only the outer maximum over directions is sampled.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .models import ModelError, RadialGeometry, frame
from .sampling import DirectionSampler

LEMMA21_RTOL = 1e-9


@dataclass(frozen=True)
class QuadratureSpec:
    nodes: int = 257

    def __post_init__(self):
        if self.nodes < 3 or self.nodes % 2 == 0:
            raise ValueError("Simpson quadrature needs an odd node count >= 3")

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, np.pi, self.nodes)


def simpson_weights(nodes: int, a: float = 0.0, b: float = np.pi) -> np.ndarray:
    if nodes < 3 or nodes % 2 == 0:
        raise ValueError("Simpson quadrature needs an odd node count >= 3")
    h = (b - a) / (nodes - 1)
    w = np.full(nodes, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * h / 3


def simpson(values, a: float = 0.0, b: float = np.pi) -> float:
    values = np.asarray(values, dtype=float)
    return float(simpson_weights(values.shape[0], a, b) @ values)


def cumulative_simpson(values, a: float = 0.0, b: float = np.pi) -> np.ndarray:
    """Running integral on a uniform grid.

    Even nodes use composite Simpson; odd nodes add the half-panel value from
    the quadratic through the surrounding panel.
    """
    y = np.asarray(values, dtype=float)
    m = y.shape[0]
    h = (b - a) / (m - 1)
    out = np.zeros_like(y)
    for i in range(2, m, 2):
        out[i] = out[i - 2] + h / 3 * (y[i - 2] + 4 * y[i - 1] + y[i])
        out[i - 1] = out[i - 2] + h / 12 * (5 * y[i - 2] + 8 * y[i - 1] - y[i])
    return out


def assemble_A(a) -> np.ndarray:
    """Block matrix ``[[0, I], [a, 0]]`` of order ``2(n-1)``; batches on leading axes."""
    a = np.asarray(a, dtype=float)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError("curvature matrix must be square")
    k = a.shape[-1]
    A = np.zeros(a.shape[:-2] + (2 * k, 2 * k))
    A[..., :k, k:] = np.eye(k)
    A[..., k:, :k] = a
    return A


def operator_norm(M) -> np.ndarray | float:
    """Largest singular value, from the top eigenvalue of ``M^T M``; batches on leading axes."""
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    G = np.swapaxes(M, -1, -2) @ M
    top = np.linalg.eigvalsh(G)[..., -1]
    out = np.sqrt(np.maximum(top, 0.0))
    return float(out) if out.ndim == 0 else out


def spectral_radius_sym(S) -> np.ndarray:
    ev = np.linalg.eigvalsh(S)
    return np.maximum(np.abs(ev[..., 0]), np.abs(ev[..., -1]))


def _check_pair(g1: RadialGeometry, g2: RadialGeometry, Q) -> None:
    if g1.n != g2.n:
        raise ModelError(f"dimension mismatch: {g1.n} vs {g2.n}")
    if np.shape(Q) != (g1.n, g1.n):
        raise ModelError(f"isometry must be {g1.n}x{g1.n}")


def paired_curvatures(g1, g2, Q, t, U):
    """``a1(t; u)`` and ``a2(t; Qu)`` in corresponding frames ``E(u)`` and ``Q E(u)``."""
    U = np.atleast_2d(U)
    E = frame(U)
    a1 = g1.curvature(t, U)
    a2 = g2.curvature(t, U @ Q.T, frames=np.einsum("ij,mjk->mik", Q, E))
    return a1, a2


def gap_radius(g1, g2, Q, t, U) -> np.ndarray:
    """Exact inner maximum: spectral radius of ``a1 - a2`` for each direction."""
    a1, a2 = paired_curvatures(g1, g2, Q, t, U)
    return spectral_radius_sym(a1 - a2)


def _lambda_objective(g1, g2, Q, times):
    times = np.atleast_1d(np.asarray(times, dtype=float))

    def objective(U, idx):
        j, c, n = U.shape
        t = np.repeat(times[idx], c)
        return gap_radius(g1, g2, Q, t, U.reshape(j * c, n)).reshape(j, c)
    return objective


def lambda_search(g1, g2, Q, times, sampler: DirectionSampler, extra=None):
    _check_pair(g1, g2, Q)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    return sampler.search(_lambda_objective(g1, g2, Q, times), g1.n,
                          problems=times.size, sense="max", extra=extra)


def lambda_at(g1, g2, Q, t: float, sampler: DirectionSampler = DirectionSampler()) -> float:
    """Sampled (lower-bound) value of the curvature gap at time ``t``."""
    if not 0.0 <= t <= np.pi:
        raise ValueError("t must lie in [0, pi]")
    return float(lambda_search(g1, g2, Q, [t], sampler).value[0])


@dataclass
class LambdaCurve:
    grid: np.ndarray
    values: np.ndarray
    integral: float
    richardson_error: float
    directions: np.ndarray
    sampler: dict = field(default_factory=dict)
    semantics: str = "sampled lower bound of the max over directions"

    def check_consistency(self, tol: float = 1e-12) -> bool:
        return abs(simpson(self.values) - self.integral) <= tol * max(1.0, abs(self.integral))

    def to_dict(self) -> dict:
        return {"integral": self.integral, "richardson_error": self.richardson_error,
                "nodes": int(self.grid.size), "quadrature": "composite Simpson",
                "semantics": self.semantics, "sampler": self.sampler}


def lambda_integral(g1, g2, Q, quadrature: QuadratureSpec = QuadratureSpec(),
                    sampler: DirectionSampler = DirectionSampler()) -> LambdaCurve:
    grid = quadrature.grid()
    res = lambda_search(g1, g2, Q, grid, sampler)
    values = np.maximum(res.value, 0.0)
    integral = simpson(values)
    coarse = simpson(values[::2]) if grid.size >= 5 and (grid.size - 1) % 4 == 0 else integral
    meta = {**sampler.metadata(), "evaluations": int(res.evaluations),
            "refinement_gain_max": float(np.max(res.value - res.sampled_value))}
    return LambdaCurve(grid, values, integral, (integral - coarse) / 15.0, res.direction, meta)


@dataclass
class Lemma21Report:
    t: float
    u: list
    lhs: float
    rhs: float
    lam: float
    norm_A2: float
    c1: float
    c1_bound: float
    gap_ok: bool
    c1_ok: bool

    @property
    def ok(self) -> bool:
        return self.gap_ok and self.c1_ok


def verify_lemma21(g1, g2, Q, t: float, u, sampler: DirectionSampler = DirectionSampler(),
                   lam: Optional[float] = None, c1: Optional[float] = None) -> Lemma21Report:
    """Check ``|A1 - A2| <= 2(n-1) lambda(t)`` and ``|A2| <= c1 + 2(n-1) lambda(t)``.

    ``lam`` and ``c1`` are sampled maxima; both are raised to cover ``u`` itself so
    the comparison never uses a bound that the direction under test already beats.
    """
    _check_pair(g1, g2, Q)
    u = np.asarray(u, dtype=float)
    n = g1.n
    a1, a2 = paired_curvatures(g1, g2, Q, t, u[None, :])
    A1, A2 = assemble_A(a1[0]), assemble_A(a2[0])
    lhs = operator_norm(A1 - A2)
    local = float(spectral_radius_sym(a1[0] - a2[0]))
    if lam is None:
        lam = float(lambda_search(g1, g2, Q, [t], sampler, extra=u[None, :]).value[0])
    lam = max(lam, local)
    c1 = max(c1 if c1 is not None else 0.0, operator_norm(A1))
    rhs = 2 * (n - 1) * lam
    nA2 = operator_norm(A2)
    c1_bound = c1 + rhs
    return Lemma21Report(float(t), u.tolist(), lhs, rhs, lam, nA2, c1, c1_bound,
                         lhs <= rhs * (1 + LEMMA21_RTOL),
                         nA2 <= c1_bound * (1 + LEMMA21_RTOL))
