"""Jacobi fields in parallel frames, their deviation, and the closeness constants.

Along the radial geodesic in direction ``u`` a normal Jacobi field with
``J(0) = 0`` and ``J'(0) = x`` has frame components ``f`` solving
``f'' = a(t; u) f``. Stacking ``(f, f')`` gives the linear system
``d/dt J~ = A(t; u) J~``. Since the system is linear in ``x``, maxima and minima
over unit ``x`` come out of singular values of the fundamental solution; only
the directions ``u`` are sampled.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .curvature import (
    LambdaCurve, QuadratureSpec, _check_pair, assemble_A, cumulative_simpson,
    lambda_integral, operator_norm, paired_curvatures, simpson,
)
from .models import ModelError, RadialGeometry, frame
from .ode import IntegratorSpec, integrate
from .parallel import chunked_map
from .sampling import DirectionSampler

ORTHO_TOL = 1e-10
CHAIN_RTOL = 1e-6
CONJUGATE_TOL = 1e-8


class ConjugatePointError(ModelError):
    """Some Jacobi field has vanishing velocity at pi: the model is degenerate."""


def delta_n(n: int) -> float:
    """Closeness threshold ``sqrt(1 + ((8/pi)(n-1))^(-1/2)) - 1``."""
    if n < 2:
        raise ValueError("need n >= 2")
    return float(np.sqrt(1.0 + (8.0 / np.pi * (n - 1)) ** -0.5) - 1.0)


def final_bound_rhs(n: int) -> float:
    return float(1.0 + (8.0 / np.pi * (n - 1)) ** -0.5)


@dataclass
class EpsilonSolution:
    root: float
    residual: float
    bracket: tuple
    iterations: int


def solve_epsilon(c: float, c3: float, n: int, delta: Optional[float] = None,
                  max_doublings: int = 10) -> EpsilonSolution:
    """Root of ``c x exp(2(n-1)x) / c3 = delta/2`` by bisection on [0, 1], widened if needed."""
    if c <= 0 or c3 <= 0:
        raise ValueError("c and c3 must be positive")
    delta = delta_n(n) if delta is None else delta
    target = 0.5 * delta

    def g(x):
        return c * x * np.exp(2 * (n - 1) * x) / c3 - target

    lo, hi = 0.0, 1.0
    doublings = 0
    while g(hi) <= 0:
        if doublings >= max_doublings:
            raise ValueError("could not bracket the threshold root")
        lo, hi = hi, 2 * hi
        doublings += 1
    bracket = (lo, hi)
    iterations = 0
    while iterations < 2000:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid) > 0:
            hi = mid
        else:
            lo = mid
        iterations += 1
    root = lo if abs(g(lo)) <= abs(g(hi)) else hi
    return EpsilonSolution(root, float(abs(g(root))), bracket, iterations)


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------

def _jacobi_rhs(g: RadialGeometry, U, frames, k, cols):
    def rhs(t, y):
        Y = y.reshape(-1, 2 * k, cols)
        a = g.curvature(t, U, frames)
        dY = np.empty_like(Y)
        dY[:, :k] = Y[:, k:]
        dY[:, k:] = a @ Y[:, :k]
        return dY.reshape(y.shape)
    return rhs


def fundamental(g: RadialGeometry, U, grid, spec: IntegratorSpec = IntegratorSpec(),
                frames: Optional[np.ndarray] = None) -> np.ndarray:
    """Solutions with ``J~(0) = (0, e_j)`` for every frame vector, all directions at once.

    Returns shape ``(T, m, 2(n-1), n-1)``. Directions are integrated in fixed
    chunks so the result does not depend on the worker count.
    """
    U = np.atleast_2d(np.asarray(U, dtype=float))
    k = g.n - 1
    if frames is None:
        frames = frame(U)
    grid = np.asarray(grid, dtype=float)

    def run(sl):
        m = U[sl].shape[0]
        Y0 = np.zeros((m, 2 * k, k))
        Y0[:, k:, :] = np.eye(k)
        out, _ = integrate(_jacobi_rhs(g, U[sl], frames[sl], k, k), grid,
                           Y0.reshape(m, -1), spec)
        return out.reshape(grid.size, m, 2 * k, k)

    return np.concatenate(chunked_map(run, U.shape[0]), axis=1)


@dataclass
class JacobiTrajectory:
    grid: np.ndarray
    states: np.ndarray  # (T, 2(n-1))
    u: np.ndarray
    x: np.ndarray
    frame: np.ndarray

    @property
    def position(self) -> np.ndarray:
        return self.states[:, : self.states.shape[1] // 2]

    @property
    def velocity(self) -> np.ndarray:
        return self.states[:, self.states.shape[1] // 2:]

    def residual(self, g: RadialGeometry) -> float:
        """Max of ``|J~' - A J~|`` at interior nodes, derivative by central differences."""
        h = self.grid[1] - self.grid[0]
        d = (self.states[2:] - self.states[:-2]) / (2 * h)
        a = g.curvature(self.grid[1:-1], np.broadcast_to(self.u, (self.grid.size - 2, g.n)),
                        np.broadcast_to(self.frame, (self.grid.size - 2,) + self.frame.shape))
        A = assemble_A(a)
        return float(np.max(np.abs(d - np.einsum("tij,tj->ti", A, self.states[1:-1]))))


def _unit_normal(u, x):
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    if abs(np.linalg.norm(u) - 1) > ORTHO_TOL or abs(np.linalg.norm(x) - 1) > ORTHO_TOL:
        raise ValueError("u and x must be unit vectors")
    if abs(u @ x) > ORTHO_TOL:
        raise ValueError("x must be orthogonal to u")
    return u, x


def integrate_jacobi(g: RadialGeometry, u, x, grid=None,
                     spec: IntegratorSpec = IntegratorSpec(),
                     frame_u: Optional[np.ndarray] = None, xi=None) -> JacobiTrajectory:
    """``xi`` overrides the initial frame coordinates ``E^T x`` (used to pair fields exactly)."""
    u, x = _unit_normal(u, x)
    grid = QuadratureSpec().grid() if grid is None else np.asarray(grid, dtype=float)
    k = g.n - 1
    E = frame(u) if frame_u is None else np.asarray(frame_u, dtype=float)
    xi = E.T @ x if xi is None else np.asarray(xi, dtype=float)
    y0 = np.concatenate([np.zeros(k), xi])[None, :]
    out, _ = integrate(_jacobi_rhs(g, u[None, :], E[None], k, 1), grid, y0, spec)
    return JacobiTrajectory(grid, out[:, 0, :], u, x, E)


def _pair_trajectories(g1, g2, Q, u1, x1, grid, spec):
    _check_pair(g1, g2, Q)
    u1, x1 = _unit_normal(u1, x1)
    E = frame(u1)
    j1 = integrate_jacobi(g1, u1, x1, grid, spec, E)
    j2 = integrate_jacobi(g2, Q @ u1, Q @ x1, grid, spec, Q @ E, xi=j1.velocity[0])
    return j1, j2


@dataclass
class PhiCurve:
    grid: np.ndarray
    values: np.ndarray
    j1: JacobiTrajectory
    j2: JacobiTrajectory


def phi_curve(g1, g2, Q, u1, x1, grid=None, spec: IntegratorSpec = IntegratorSpec()) -> PhiCurve:
    """Deviation ``|J~1(t) - J~2(t)|`` of corresponding Jacobi fields."""
    j1, j2 = _pair_trajectories(g1, g2, Q, u1, x1, grid, spec)
    return PhiCurve(j1.grid, np.linalg.norm(j1.states - j2.states, axis=1), j1, j2)


@dataclass
class Envelope:
    value: float
    h0: np.ndarray
    growth: np.ndarray
    curve: np.ndarray  # h0(t) exp(int_0^t |A2|), bounds phi(t) pointwise


def _envelope_from(gap_norm, j1_norm, a2_norm):
    h0 = cumulative_simpson(gap_norm * j1_norm)
    growth = cumulative_simpson(a2_norm)
    curve = h0 * np.exp(growth)
    return Envelope(float(simpson(gap_norm * j1_norm) * np.exp(simpson(a2_norm))), h0, growth, curve)


def gronwall_envelope(g1, g2, Q, u1, x1, grid=None, spec: IntegratorSpec = IntegratorSpec(),
                      detail: bool = False):
    """``h0(pi) exp(int_0^pi |A(r; u2)| dr)`` with ``h0 = int |A1 - A2| |J~1|``, by Simpson."""
    j1, _ = _pair_trajectories(g1, g2, Q, u1, x1, grid, spec)
    u1 = np.asarray(u1, dtype=float)
    T = j1.grid.size
    U = np.broadcast_to(u1, (T, g1.n))
    a1, a2 = paired_curvatures(g1, g2, Q, j1.grid, U)
    gap = operator_norm(assemble_A(a1) - assemble_A(a2))
    env = _envelope_from(gap, np.linalg.norm(j1.states, axis=1), operator_norm(assemble_A(a2)))
    return env if detail else env.value


# ---------------------------------------------------------------------------
# constants
# ---------------------------------------------------------------------------

@dataclass
class ComparisonConstants:
    n: int
    c1: float
    c2: float
    c3: float
    c: float
    delta_n: float
    epsilon_n: float
    epsilon_residual: float
    c3_direction: list
    c3_x: list
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"c1": self.c1, "c2": self.c2, "c3": self.c3, "c": self.c,
                "delta_n": self.delta_n, "epsilon_n": self.epsilon_n}


def _a_norm_max(g, U, grid):
    T, m = grid.size, U.shape[0]
    t = np.repeat(grid, m)
    a = g.curvature(t, np.tile(U, (T, 1)))
    return operator_norm(assemble_A(a)).reshape(T, m).max(axis=0)


def _phi_stats(Phi):
    """Per direction: max_t sigma_max(Phi(t)) and sigma_min of the velocity block at pi."""
    k = Phi.shape[-1]
    c2 = np.linalg.svd(Phi, compute_uv=False)[..., 0].max(axis=0)
    D = Phi[-1, :, k:, :]
    c3 = np.linalg.svd(D, compute_uv=False)[..., -1]
    return c2, c3


def constants(g1: RadialGeometry, sampler: DirectionSampler = DirectionSampler(),
              quadrature: QuadratureSpec = QuadratureSpec(),
              spec: IntegratorSpec = IntegratorSpec()) -> ComparisonConstants:
    """``c1``, ``c2``, ``c3``, ``c``, ``delta_n`` and ``epsilon_n`` for a reference model.

    ``c1`` and ``c2`` are sampled maxima refined upward; ``c3`` is a sampled
    minimum refined downward. The inner extremum over ``x`` is exact.
    """
    n = g1.n
    grid = quadrature.grid()
    P = sampler.points(n)

    def obj_c1(U, idx):
        j, c, _ = U.shape
        return _a_norm_max(g1, U.reshape(j * c, n), grid).reshape(j, c)

    def obj_phi(which):
        def obj(U, idx):
            j, c, _ = U.shape
            Phi = fundamental(g1, U.reshape(j * c, n), grid, spec)
            return _phi_stats(Phi)[which].reshape(j, c)
        return obj

    r1 = sampler.search(obj_c1, n, sense="max")
    c2s, c3s = _phi_stats(fundamental(g1, P, grid, spec))
    i2, i3 = int(np.argmax(c2s)), int(np.argmin(c3s))
    r2 = sampler.climb(obj_phi(0), P[i2], c2s[i2], sense="max")
    r3 = sampler.climb(obj_phi(1), P[i3], c3s[i3], sense="min")
    c1v, c2v, c3v = float(r1.value[0]), float(r2.value[0]), float(r3.value[0])
    u3 = r3.direction[0]
    Phi3 = fundamental(g1, u3[None, :], grid, spec)
    k = n - 1
    _, s, vt = np.linalg.svd(Phi3[-1, 0, k:, :])
    x3 = frame(u3) @ vt[-1]
    if c3v <= CONJUGATE_TOL:
        raise ConjugatePointError(
            f"c3 = {c3v:.3e}: conjugate point at pi for u={u3.tolist()}, x={x3.tolist()}")
    c = 2 * (n - 1) * c2v * np.exp(np.pi * c1v)
    d = delta_n(n)
    eps = solve_epsilon(c, c3v, n, d)
    meta = {
        "sampler": sampler.metadata(), "nodes": int(grid.size),
        "c1_sampled": float(r1.sampled_value[0]), "c2_sampled": float(c2s[i2]),
        "c3_sampled": float(c3s[i3]),
        "c3_note": "sampled minimum over directions: an upper bound on the true minimum",
        "epsilon_bracket": list(eps.bracket), "epsilon_iterations": eps.iterations,
    }
    return ComparisonConstants(n, c1v, c2v, c3v, float(c), d, eps.root, eps.residual,
                               u3.tolist(), x3.tolist(), meta)


# ---------------------------------------------------------------------------
# differential of the cut-point correspondence
# ---------------------------------------------------------------------------

def velocity_blocks(g1, g2, Q, U, grid, spec):
    """Fundamental solutions of both models in corresponding frames."""
    U = np.atleast_2d(U)
    E = frame(U)
    Phi1 = fundamental(g1, U, grid, spec, E)
    Phi2 = fundamental(g2, U @ Q.T, grid, spec, np.einsum("ij,mjk->mik", Q, E))
    return Phi1, Phi2


def deviation_from_blocks(D1, D2) -> np.ndarray:
    k = D1.shape[-1]
    s = np.linalg.svd(D1, compute_uv=False)
    if np.any(s[..., -1] <= CONJUGATE_TOL):
        raise ConjugatePointError("velocity block at pi is singular (conjugate point)")
    M = np.linalg.solve(np.swapaxes(D1, -1, -2), np.swapaxes(D2, -1, -2))
    return operator_norm(np.swapaxes(M, -1, -2) - np.eye(k))


def dsigma_deviation(g1, g2, Q, u1, grid=None, spec: IntegratorSpec = IntegratorSpec()) -> float:
    """``|D2 D1^{-1} - I|``: distance of the cut-point differential from the transported isometry."""
    _check_pair(g1, g2, Q)
    grid = QuadratureSpec().grid() if grid is None else np.asarray(grid, dtype=float)
    Phi1, Phi2 = velocity_blocks(g1, g2, Q, np.asarray(u1, dtype=float), grid, spec)
    k = g1.n - 1
    return float(deviation_from_blocks(Phi1[-1, 0, k:, :], Phi2[-1, 0, k:, :]))


# ---------------------------------------------------------------------------
# the closeness statement
# ---------------------------------------------------------------------------

@dataclass
class DirectionRecord:
    u: list
    deviation: float
    phi_pi: float
    envelope: float

    def to_dict(self) -> dict:
        return {"u": self.u, "deviation": self.deviation, "phi_pi": self.phi_pi,
                "envelope": self.envelope}


@dataclass
class KeyLemmaReport:
    n: int
    constants: ComparisonConstants
    lam: LambdaCurve
    directions: list
    hypothesis_met: bool
    conclusion_met: bool
    checks: dict
    curves: dict

    @property
    def lambda_integral(self) -> float:
        return self.lam.integral

    @property
    def max_deviation(self) -> float:
        return max(r.deviation for r in self.directions)

    @property
    def violations(self) -> list[str]:
        out = [name for name in ("lemma21", "gronwall", "deviation_chain")
               if not self.checks[name]["ok"]]
        if self.hypothesis_met and not self.conclusion_met:
            out.append("key_lemma")
        return out

    def to_dict(self) -> dict:
        return {
            "n": self.n, "constants": self.constants.to_dict(),
            "lambda_integral": self.lambda_integral,
            "directions": [r.to_dict() for r in self.directions],
            "hypothesis_met": self.hypothesis_met, "conclusion_met": self.conclusion_met,
            "max_deviation": self.max_deviation, "checks": self.checks,
        }


def verify_key_lemma(g1, g2, Q, sampler: DirectionSampler = DirectionSampler(),
                     quadrature: QuadratureSpec = QuadratureSpec(),
                     spec: IntegratorSpec = IntegratorSpec(),
                     consts: Optional[ComparisonConstants] = None,
                     lam: Optional[LambdaCurve] = None) -> KeyLemmaReport:
    """Evaluate the hypothesis, the conclusion, and every inequality of the proof chain."""
    _check_pair(g1, g2, Q)
    n, k = g1.n, g1.n - 1
    grid = quadrature.grid()
    consts = constants(g1, sampler, quadrature, spec) if consts is None else consts
    lam = lambda_integral(g1, g2, Q, quadrature, sampler) if lam is None else lam
    P = sampler.points(n)
    m, T = P.shape[0], grid.size

    Phi1, Phi2 = velocity_blocks(g1, g2, Q, P, grid, spec)
    dev = deviation_from_blocks(Phi1[-1, :, k:, :], Phi2[-1, :, k:, :])
    diff = Phi1 - Phi2
    phi = np.linalg.svd(diff, compute_uv=False)[..., 0]  # (T, m): max over unit x
    j1_max = np.linalg.svd(Phi1, compute_uv=False)[..., 0]

    t_all = np.repeat(grid, m)
    a1, a2 = paired_curvatures(g1, g2, Q, t_all, np.tile(P, (T, 1)))
    A1, A2 = assemble_A(a1), assemble_A(a2)
    gap = operator_norm(A1 - A2).reshape(T, m)
    a2n = operator_norm(A2).reshape(T, m)

    # uniform-in-x envelope: |J~1^x(s)| <= sigma_max(Phi1(s)) for every unit x
    env_curve = np.empty((T, m))
    env_pi = np.empty(m)
    gron_ok = True
    worst_ratio = 0.0
    for i in range(m):
        e = _envelope_from(gap[:, i], j1_max[:, i], a2n[:, i])
        env_curve[:, i] = e.curve
        env_pi[i] = e.value
        for j in range(k):
            ex = _envelope_from(gap[:, i], np.linalg.norm(Phi1[:, i, :, j], axis=1), a2n[:, i])
            phx = np.linalg.norm(diff[:, i, :, j], axis=1)
            ok = np.all(phx <= ex.curve * (1 + CHAIN_RTOL) + 1e-15) and \
                phx.max() <= ex.value * (1 + CHAIN_RTOL) + 1e-15
            gron_ok &= bool(ok)
            if ex.value > 0:
                worst_ratio = max(worst_ratio, float(phx.max() / ex.value))
    gron_ok &= bool(np.all(phi <= env_curve * (1 + CHAIN_RTOL) + 1e-15))
    gron_ok &= bool(np.all(phi.max(axis=0) <= env_pi * (1 + CHAIN_RTOL) + 1e-15))

    s1 = np.linalg.svd(Phi1[-1, :, k:, :], compute_uv=False)[..., -1]
    c3_used = np.minimum(consts.c3, s1)
    chain_ok = bool(np.all(dev <= phi[-1] / c3_used * (1 + CHAIN_RTOL) + 1e-15))

    lam_rhs = 2 * (n - 1) * lam.values[:, None]
    l21_ok = bool(np.all(gap <= lam_rhs * (1 + 1e-9)))
    c1_ok = bool(np.all(a2n <= (max(consts.c1, float(operator_norm(A1).max()))
                                + lam_rhs) * (1 + 1e-9)))
    I = lam.integral
    proof_bound = consts.c * I * np.exp(2 * (n - 1) * I)

    records = [DirectionRecord(P[i].tolist(), float(dev[i]), float(phi[-1, i]), float(env_pi[i]))
               for i in range(m)]
    checks = {
        "lemma21": {"ok": l21_ok and c1_ok, "gap_ok": l21_ok, "c1_ok": c1_ok,
                    "max_ratio": float(np.max(gap / np.where(lam_rhs > 0, lam_rhs, np.inf)))},
        "gronwall": {"ok": gron_ok, "max_phi_over_envelope": worst_ratio},
        "deviation_chain": {"ok": chain_ok,
                            "max_deviation_times_c3_over_phi": float(np.max(
                                dev * c3_used / np.where(phi[-1] > 0, phi[-1], np.inf)))},
        "proof_bound": {"phi_pi_max": float(phi[-1].max()), "bound": float(proof_bound),
                        "ok": bool(phi[-1].max() <= proof_bound * (1 + CHAIN_RTOL) + 1e-15),
                        "note": "uses sampled c1, c2; advisory"},
    }
    curves = {"t": grid, "lambda": lam.values, "phi_max": phi.max(axis=1),
              "envelope_max": env_curve.max(axis=1)}
    return KeyLemmaReport(n, consts, lam, records, bool(I < consts.epsilon_n),
                          bool(dev.max() <= consts.delta_n / 2), checks, curves)
