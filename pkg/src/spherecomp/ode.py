"""Batched explicit Runge-Kutta integrators.

Every trajectory in a batch shares one step sequence, and the step is accepted
only when the worst element passes the error test. Steps are clipped so that
every output node is hit exactly, which gives grid output without an
interpolant. Because the step sequence depends on the whole batch, callers that
need bit-stable results must keep the batch composition fixed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

Rhs = Callable[[float, np.ndarray], np.ndarray]


class IntegrationError(RuntimeError):
    """Raised when the adaptive step size underflows or the step budget runs out."""


# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([
    71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
])


@dataclass(frozen=True)
class IntegratorSpec:
    """Integrator settings shared by the Jacobi and geodesic solvers."""

    method: str = "dp54"
    rtol: float = 1e-11
    atol: float = 1e-11
    rk4_substeps: int = 16
    max_steps: int = 200_000

    def __post_init__(self):
        if self.method not in ("dp54", "rk4"):
            raise ValueError(f"unknown integrator method {self.method!r}")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")
        if self.rk4_substeps < 1:
            raise ValueError("rk4_substeps must be >= 1")


@dataclass
class IntegrationStats:
    accepted: int = 0
    rejected: int = 0
    evaluations: int = 0
    min_step: float = np.inf


def integrate(rhs: Rhs, t_out, y0, spec: IntegratorSpec = IntegratorSpec(),
              post_step: Optional[Callable[[float, np.ndarray], np.ndarray]] = None,
              ) -> tuple[np.ndarray, IntegrationStats]:
    """Integrate ``y' = rhs(t, y)`` for a batch of states.

    ``y0`` has shape ``(m, d)``; the result has shape ``(len(t_out), m, d)``
    with ``result[0] == y0``. ``t_out`` must be strictly increasing.
    ``post_step`` may rewrite the state after each accepted step (chart
    changes); it must return an array of the same shape.
    """
    t_out = np.asarray(t_out, dtype=float)
    if t_out.ndim != 1 or t_out.size < 2 or np.any(np.diff(t_out) <= 0):
        raise ValueError("t_out must be a strictly increasing 1-d grid")
    y = np.array(y0, dtype=float)
    if y.ndim != 2:
        raise ValueError("y0 must have shape (batch, dim)")
    if spec.method == "rk4":
        return _integrate_rk4(rhs, t_out, y, spec, post_step)
    return _integrate_dp54(rhs, t_out, y, spec, post_step)


def _integrate_dp54(rhs, t_out, y, spec, post_step):
    out = np.empty((t_out.size,) + y.shape)
    out[0] = y
    stats = IntegrationStats()
    t = t_out[0]
    span = t_out[-1] - t_out[0]
    h = min(span / 64, 0.01 * span) if span > 0 else 0.0
    h_floor = 1e-14 * max(1.0, abs(t_out[-1]))
    k = np.empty((7,) + y.shape)
    for idx in range(1, t_out.size):
        target = t_out[idx]
        while t < target:
            if stats.accepted + stats.rejected >= spec.max_steps:
                raise IntegrationError(f"step budget exhausted at t={t:.6g}")
            last = h >= target - t
            step = target - t if last else h
            k[0] = rhs(t, y)
            for s in range(1, 7):
                acc = y.copy()
                for j, a in enumerate(_A[s]):
                    if a != 0.0:
                        acc += (step * a) * k[j]
                k[s] = rhs(t + _C[s] * step, acc)
            stats.evaluations += 7
            y_new = y + step * np.tensordot(_B, k, axes=1)
            err = step * np.tensordot(_E, k, axes=1)
            scale = spec.atol + spec.rtol * np.maximum(np.abs(y), np.abs(y_new))
            ratio = np.abs(err) / scale
            err_norm = float(np.max(ratio)) if ratio.size else 0.0
            if not np.isfinite(err_norm):
                err_norm = np.inf
            if err_norm <= 1.0:
                t = target if last else t + step
                y = y_new
                if post_step is not None:
                    y = post_step(t, y)
                stats.accepted += 1
                stats.min_step = min(stats.min_step, step)
                factor = 5.0 if err_norm == 0.0 else min(5.0, 0.9 * err_norm ** -0.2)
                # a short final step to hit a node says nothing about the next step
                h = max(h, step * factor) if last else step * factor
            else:
                stats.rejected += 1
                h = step * max(0.1, 0.9 * err_norm ** -0.2)
                if h < h_floor:
                    raise IntegrationError(
                        f"step size underflow (h={h:.3g}) at t={t:.6g}")
        out[idx] = y
    return out, stats


def _integrate_rk4(rhs, t_out, y, spec, post_step):
    out = np.empty((t_out.size,) + y.shape)
    out[0] = y
    stats = IntegrationStats()
    for idx in range(1, t_out.size):
        t0, t1 = t_out[idx - 1], t_out[idx]
        h = (t1 - t0) / spec.rk4_substeps
        for s in range(spec.rk4_substeps):
            t = t0 + s * h
            k1 = rhs(t, y)
            k2 = rhs(t + h / 2, y + (h / 2) * k1)
            k3 = rhs(t + h / 2, y + (h / 2) * k2)
            k4 = rhs(t + h, y + h * k3)
            y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            if post_step is not None:
                y = post_step(t + h, y)
            stats.evaluations += 4
            stats.accepted += 1
        stats.min_step = min(stats.min_step, h)
        out[idx] = y
    return out, stats
