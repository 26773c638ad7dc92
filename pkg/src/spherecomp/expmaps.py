"""Charted perturbed spheres, exp/log by shooting, the sigma maps and F~.

A charted model lives on two charts: polar normal coordinates ``x = t theta``
about the pole ``p`` and ``y = (pi - t) theta`` about the cut point ``q``. The
metric ``dt^2 + phi(t, theta)^2 g_S`` with ``phi = f_beta(t) exp(A sin^4 t Y)``
has the same formula in both charts, and the transition ``z -> (pi-|z|) z/|z|``
is an involution. Geodesics follow Hamilton's equations for
``H = (p_r^2 + |p_perp|^2 / m) / 2`` where ``m = (phi / |x|)^2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .jacobi import delta_n, final_bound_rhs
from .models import ModelError, RadialGeometry, bump_profile, charted_geometry, frame
from .ode import IntegratorSpec, integrate

SWITCH_RADIUS = 0.6 * np.pi
POLE_EPS = 1e-12
SMALL_T = 1e-2
REFOCUS_TOL = 1e-6
SHOOT_TOL = 1e-10
NEWTON_MAX = 64
FD_SHOOT = 1e-7


class ShootingError(RuntimeError):
    """The log map failed to converge."""


@dataclass(frozen=True)
class ChartPoint:
    coords: np.ndarray  # (k, n)
    chart: np.ndarray  # (k,) 0 = pole chart, 1 = cut-point chart

    def in_chart(self, chart: int) -> np.ndarray:
        """Coordinates in the requested chart (undefined at the other chart's centre)."""
        X = np.array(self.coords, dtype=float)
        flip = self.chart != chart
        X[flip] = transition(X[flip])
        return X


def transition(Z):
    Z = np.asarray(Z, dtype=float)
    r = np.linalg.norm(Z, axis=-1, keepdims=True)
    if np.any(r < POLE_EPS):
        raise ModelError("chart transition is undefined at the chart centre")
    return (np.pi - r) * Z / r


def _sinc_terms(t):
    """``ln(sin t / t)``, ``cot t - 1/t`` and ``sin t / t`` with series near 0."""
    small = t < SMALL_T
    ts = np.where(small, 1.0, t)
    S = np.where(small, 1 - t ** 2 / 6 + t ** 4 / 120, np.sin(ts) / ts)
    lnS = np.where(small, -t ** 2 / 6 - t ** 4 / 180 - t ** 6 / 2835, np.log(np.abs(S)))
    g = np.where(small, -t / 3 - t ** 3 / 45 - 2 * t ** 5 / 945, 1 / np.tan(ts) - 1 / ts)
    return lnS, g, S


@dataclass(frozen=True)
class ChartedMetric:
    n: int = 2
    beta: float = 0.0
    amplitude: float = 0.0

    def __post_init__(self):
        if self.n not in (2, 3):
            raise ModelError("charted models are restricted to n in {2, 3}")
        bump_profile(self.beta).check()

    def geometry(self) -> RadialGeometry:
        return charted_geometry(self.beta, self.amplitude, self.n)

    def describe(self) -> dict:
        return {"n": self.n, "beta": self.beta, "amplitude": self.amplitude}

    # -- metric ------------------------------------------------------------
    def _terms(self, X):
        t = np.linalg.norm(X, axis=-1)
        safe = t > POLE_EPS
        theta = np.where(safe[..., None], X / np.where(safe, t, 1.0)[..., None], 0.0)
        lnS, g, S = _sinc_terms(t)
        c = t ** 2 * S ** 4
        cp = 2 * t * S ** 4 + 4 * t ** 2 * S ** 4 * g
        P = X[..., 0] ** 2 - X[..., 1] ** 2
        A, b = self.amplitude, self.beta
        lnm = 2 * lnS + 2 * b * np.sin(t) ** 2 + 2 * A * c * P
        gradP = np.zeros_like(X)
        gradP[..., 0] = 2 * X[..., 0]
        gradP[..., 1] = -2 * X[..., 1]
        dlnm = (2 * g + 2 * b * np.sin(2 * t) + 2 * A * cp * P)[..., None] * theta \
            + (2 * A * c)[..., None] * gradP
        return t, safe, theta, lnm, dlnm

    def metric(self, X) -> np.ndarray:
        """Metric tensor at chart coordinates ``X`` (same formula in both charts)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        _, _, th, lnm, _ = self._terms(X)
        P = np.einsum("ki,kj->kij", th, th)
        return P + np.exp(lnm)[:, None, None] * (np.eye(self.n) - P)

    def velocity(self, X, Pm) -> np.ndarray:
        _, _, th, lnm, _ = self._terms(X)
        pr = np.einsum("ki,ki->k", th, Pm)
        return pr[:, None] * th + (Pm - pr[:, None] * th) / np.exp(lnm)[:, None]

    def momentum(self, X, V) -> np.ndarray:
        _, _, th, lnm, _ = self._terms(X)
        vr = np.einsum("ki,ki->k", th, V)
        return vr[:, None] * th + np.exp(lnm)[:, None] * (V - vr[:, None] * th)

    # -- Hamiltonian flow ----------------------------------------------------
    def rhs(self, s, Y):
        n = self.n
        X, Pm = Y[:, :n], Y[:, n:2 * n]
        t, safe, th, lnm, dlnm = self._terms(X)
        m = np.exp(lnm)
        one_minus = -np.expm1(-lnm)
        pr = np.einsum("ki,ki->k", th, Pm)
        perp = Pm - pr[:, None] * th
        out = np.zeros_like(Y)
        out[:, :n] = pr[:, None] * th + perp / m[:, None]
        twist = np.where(safe, pr * one_minus / np.where(safe, t, 1.0), 0.0)
        out[:, n:2 * n] = -twist[:, None] * perp \
            + (0.5 * np.einsum("ki,ki->k", perp, perp) / m)[:, None] * dlnm
        return out

    def switch(self, s, Y):
        """Move states past ``SWITCH_RADIUS`` into the other chart."""
        n = self.n
        X = Y[:, :n]
        r = np.linalg.norm(X, axis=1)
        idx = np.nonzero(r > SWITCH_RADIUS)[0]
        if idx.size == 0:
            return Y
        Y = Y.copy()
        Xi, ri = X[idx], r[idx]
        th = Xi / ri[:, None]
        V = self.velocity(Xi, Y[idx, n:2 * n])
        vr = np.einsum("ki,ki->k", th, V)
        W = -vr[:, None] * th + ((np.pi - ri) / ri)[:, None] * (V - vr[:, None] * th)
        Ynew = (np.pi - ri)[:, None] * th
        Y[idx, :n] = Ynew
        Y[idx, n:2 * n] = self.momentum(Ynew, W)
        Y[idx, 2 * n] = 1.0 - Y[idx, 2 * n]
        return Y


# ---------------------------------------------------------------------------
# exp
# ---------------------------------------------------------------------------

@dataclass
class GeodesicEnd:
    point: ChartPoint
    velocity: np.ndarray  # chart velocity d/ds at s = 1
    speed0: np.ndarray
    speed1: np.ndarray


def _as_base(base, k, n) -> ChartPoint:
    if base is None:
        return ChartPoint(np.zeros((k, n)), np.zeros(k, dtype=int))
    if isinstance(base, ChartPoint):
        C = np.atleast_2d(base.coords)
        ch = np.atleast_1d(base.chart).astype(int)
        if C.shape[0] == 1 and k > 1:
            C, ch = np.repeat(C, k, axis=0), np.repeat(ch, k)
        return ChartPoint(C, ch)
    C = np.atleast_2d(np.asarray(base, dtype=float))
    if C.shape[0] == 1 and k > 1:
        C = np.repeat(C, k, axis=0)
    return ChartPoint(C, np.zeros(C.shape[0], dtype=int))


def geodesic_flow(m: ChartedMetric, V, base=None, spec: IntegratorSpec = IntegratorSpec(),
                  nodes: int = 2) -> tuple[np.ndarray, GeodesicEnd]:
    """Integrate geodesics ``s -> exp_base(s v)`` for ``s`` in [0, 1].

    ``V`` are chart velocities at the base points. Returns the raw state
    history and the end data.
    """
    V = np.atleast_2d(np.asarray(V, dtype=float))
    k, n = V.shape
    if n != m.n:
        raise ModelError(f"vector dimension {n} != model dimension {m.n}")
    B = _as_base(base, k, n)
    Y0 = np.zeros((k, 2 * n + 1))
    Y0[:, :n] = B.coords
    Y0[:, n:2 * n] = m.momentum(B.coords, V)
    Y0[:, 2 * n] = B.chart
    Y0 = m.switch(0.0, Y0)
    out, _ = integrate(m.rhs, np.linspace(0.0, 1.0, nodes), Y0, spec, post_step=m.switch)
    Yf = out[-1]
    X, Pm = Yf[:, :n], Yf[:, n:2 * n]
    vel = m.velocity(X, Pm)
    g0 = m.metric(Y0[:, :n])
    V0 = m.velocity(Y0[:, :n], Y0[:, n:2 * n])
    sp0 = np.sqrt(np.einsum("ki,kij,kj->k", V0, g0, V0))
    sp1 = np.sqrt(np.einsum("ki,kij,kj->k", vel, m.metric(X), vel))
    end = GeodesicEnd(ChartPoint(X, np.rint(Yf[:, 2 * n]).astype(int)), vel, sp0, sp1)
    return out, end


def exp_map(m: ChartedMetric, V, base=None, spec: IntegratorSpec = IntegratorSpec()) -> ChartPoint:
    """``exp_base(v)``; the default base is the pole ``p`` (origin of chart 0)."""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if base is None and np.any(np.linalg.norm(V, axis=1) > np.pi * (1 + 1e-12)):
        raise ValueError("|v| must not exceed pi")
    return geodesic_flow(m, V, base, spec)[1].point


def _residual(end: ChartPoint, target: ChartPoint) -> np.ndarray:
    """Coordinate difference, measured in the target's chart."""
    X = np.array(end.coords, dtype=float)
    flip = end.chart != target.chart
    if np.any(flip):
        X[flip] = transition(X[flip])
    return X - target.coords


@dataclass
class LogResult:
    vectors: np.ndarray
    residual: np.ndarray
    iterations: np.ndarray
    fallback: np.ndarray


def log_map(m: ChartedMetric, target, base=None, spec: IntegratorSpec = IntegratorSpec(),
            guess=None, tol: float = SHOOT_TOL, detail: bool = False):
    """Newton shooting for ``v`` with ``exp_base(v) = target``.

    Undamped Newton runs for up to 64 iterations; stragglers continue with
    step bisection (damped Newton), and anything still unconverged raises.
    """
    if not isinstance(target, ChartPoint):
        C = np.atleast_2d(np.asarray(target, dtype=float))
        target = ChartPoint(C, np.zeros(C.shape[0], dtype=int))
    T = ChartPoint(np.atleast_2d(target.coords).astype(float),
                   np.atleast_1d(target.chart).astype(int))
    k, n = T.coords.shape
    B = _as_base(base, k, n)
    if guess is None:
        same = B.chart == T.chart
        V = np.where(same[:, None], T.coords - B.coords, 0.0)
        if np.any(~same):
            V[~same] = T.in_chart(0)[~same] - B.in_chart(0)[~same]
    else:
        V = np.array(np.atleast_2d(guess), dtype=float)

    def shoot(Vs, rows):
        end = geodesic_flow(m, Vs, ChartPoint(B.coords[rows], B.chart[rows]), spec)[1].point
        return _residual(end, ChartPoint(T.coords[rows], T.chart[rows]))

    res = np.full(k, np.inf)
    iters = np.zeros(k, dtype=int)
    fallback = np.zeros(k, dtype=bool)
    active = np.arange(k)
    R = shoot(V, active)
    res = np.linalg.norm(R, axis=1)
    for phase in ("newton", "bisect"):
        for _ in range(NEWTON_MAX):
            active = np.nonzero(res >= tol)[0]
            if active.size == 0:
                break
            if phase == "bisect":
                fallback[active] = True
            Va, Ra = V[active], R[active]
            J = _shooting_jacobian(shoot, Va, Ra, active, n)
            try:
                dV = np.linalg.solve(J, -Ra[..., None])[..., 0]
            except np.linalg.LinAlgError:
                dV = -np.einsum("kji,kj->ki", J, Ra)
            lam = np.ones(active.size)
            Vn = Va + dV
            Rn = shoot(Vn, active)
            rn = np.linalg.norm(Rn, axis=1)
            if phase == "bisect":
                for _h in range(20):
                    bad = rn >= res[active]
                    if not np.any(bad):
                        break
                    lam[bad] *= 0.5
                    Vn[bad] = Va[bad] + lam[bad, None] * dV[bad]
                    Rn[bad] = shoot(Vn[bad], active[bad])
                    rn[bad] = np.linalg.norm(Rn[bad], axis=1)
                keep = rn < res[active]
            else:
                keep = np.isfinite(rn)
            upd = active[keep]
            V[upd], R[upd], res[upd] = Vn[keep], Rn[keep], rn[keep]
            iters[active] += 1
            if phase == "bisect" and not np.any(keep):
                break
    if np.any(res >= tol):
        i = int(np.argmax(res))
        raise ShootingError(
            f"log map did not converge for {int(np.sum(res >= tol))} target(s); worst residual "
            f"{res[i]:.3e} at target {T.coords[i].tolist()} (chart {int(T.chart[i])})")
    out = LogResult(V, res, iters, fallback)
    return out if detail else V


def _shooting_jacobian(shoot, Va, Ra, rows, n):
    h = FD_SHOOT * np.maximum(1.0, np.linalg.norm(Va, axis=1))
    stack = np.concatenate([Va + h[:, None] * e for e in np.eye(n)], axis=0)
    Rs = shoot(stack, np.tile(rows, n)).reshape(n, len(rows), n)
    return np.transpose((Rs - Ra[None]) / h[None, :, None], (1, 2, 0))


# ---------------------------------------------------------------------------
# correspondences between the unit spheres at the poles
# ---------------------------------------------------------------------------

def pole_to_pole(m: ChartedMetric, U, start_chart: int = 0,
                 spec: IntegratorSpec = IntegratorSpec()) -> GeodesicEnd:
    U = np.atleast_2d(np.asarray(U, dtype=float))
    base = ChartPoint(np.zeros_like(U), np.full(U.shape[0], start_chart, dtype=int))
    return geodesic_flow(m, np.pi * U, base, spec)[1]


@dataclass
class RefocusReport:
    ok: bool
    max_miss: float
    geodesics: int

    def to_dict(self) -> dict:
        return {"ok": self.ok, "max_miss": self.max_miss, "geodesics": self.geodesics}


def refocusing_check(m: ChartedMetric, count: int = 64, tol: float = REFOCUS_TOL,
                     spec: IntegratorSpec = IntegratorSpec()) -> RefocusReport:
    """All geodesics from ``p`` must reach ``q`` (origin of chart 1) at length pi."""
    from .sampling import sphere_points
    end = pole_to_pole(m, sphere_points(m.n, count), 0, spec)
    miss = np.where(end.point.chart == 1, np.linalg.norm(end.point.coords, axis=1), np.inf)
    worst = float(np.max(miss))
    return RefocusReport(bool(worst < tol), worst, count)


def sigma_pq(m: ChartedMetric, U, spec: IntegratorSpec = IntegratorSpec(),
             start_chart: int = 0) -> np.ndarray:
    """``-tau'(pi)`` for the unit-speed geodesic leaving the pole in direction ``u``.

    The result is in coordinates of the opposite pole's chart, whose coordinate
    basis is orthonormal at that pole.
    """
    end = pole_to_pole(m, U, start_chart, spec)
    target = 1 - start_chart
    if np.any(end.point.chart != target):
        raise ModelError("geodesic did not reach the opposite chart")
    return -end.velocity / np.pi


def sigma_qp(m: ChartedMetric, W, spec: IntegratorSpec = IntegratorSpec()) -> np.ndarray:
    return sigma_pq(m, W, spec, start_chart=1)


# ---------------------------------------------------------------------------
# comparison maps
# ---------------------------------------------------------------------------

SigmaFn = Callable[[np.ndarray], np.ndarray]


@dataclass
class ComparisonMap:
    n: int
    sigma: SigmaFn
    Q: np.ndarray
    m1: Optional[ChartedMetric] = None
    m2: Optional[ChartedMetric] = None
    label: str = ""

    def F_tilde(self, X) -> np.ndarray:
        """``|x| sigma(x/|x|)`` with ``F~(0) = 0``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        r = np.linalg.norm(X, axis=1)
        out = np.zeros_like(X)
        nz = r > 0
        if np.any(nz):
            out[nz] = r[nz, None] * self.sigma(X[nz] / r[nz, None])
        return out

    def F(self, points: ChartPoint, spec: IntegratorSpec = IntegratorSpec()) -> ChartPoint:
        """``exp_{p2}(t Q u)`` for ``point = exp_{p1}(t u)``, via the log map at ``p1``."""
        if self.m1 is None or self.m2 is None:
            raise ModelError("F needs charted models")
        V = log_map(self.m1, points, None, spec)
        return exp_map(self.m2, V @ self.Q.T, None, spec)

    def describe(self) -> dict:
        d = {"label": self.label, "n": self.n}
        if self.m1 is not None:
            d["model1"] = self.m1.describe()
            d["model2"] = self.m2.describe()
        return d


def _tabulate_circle(fn: SigmaFn, nodes: int) -> SigmaFn:
    """Periodic spline of the angle lift of a circle map."""
    a = 2 * np.pi * np.arange(nodes) / nodes
    W = fn(np.column_stack([np.cos(a), np.sin(a)]))
    b = np.unwrap(np.arctan2(W[:, 1], W[:, 0]))
    deg = int(np.round((b[-1] - b[0]) / (2 * np.pi)))
    if abs(deg) != 1:
        raise ModelError("sigma is not a circle diffeomorphism")
    knots = np.append(a, 2 * np.pi)
    lift = np.append(b, b[0] + deg * 2 * np.pi) - deg * knots
    spline = CubicSpline(knots, lift, bc_type="periodic")

    def sigma(V):
        V = np.atleast_2d(V)
        th = np.mod(np.arctan2(V[:, 1], V[:, 0]), 2 * np.pi)
        out = deg * th + spline(th)
        return np.column_stack([np.cos(out), np.sin(out)])
    return sigma


def build_comparison(m1: ChartedMetric, m2: ChartedMetric, Q,
                     spec: IntegratorSpec = IntegratorSpec(),
                     table_nodes: Optional[int] = 4096) -> ComparisonMap:
    """``sigma = sigma^{p2}_{q2} o Q o sigma^{q1}_{p1}``, with ``F~`` by the radial formula.

    For ``n = 2`` sigma is tabulated on ``table_nodes`` angles and splined
    (set ``table_nodes=None`` to shoot on every call).
    """
    if m1.n != m2.n:
        raise ModelError(f"dimension mismatch: {m1.n} vs {m2.n}")
    Q = np.asarray(Q, dtype=float)
    for mm in (m1, m2):
        rep = refocusing_check(mm, spec=spec)
        if not rep.ok:
            raise ModelError(f"model {mm.describe()} does not refocus at distance pi "
                             f"(miss {rep.max_miss:.3e})")

    def sigma(V):
        U1 = sigma_qp(m1, V, spec)
        U1 /= np.linalg.norm(U1, axis=1, keepdims=True)
        return sigma_pq(m2, U1 @ Q.T, spec)

    fn = sigma
    if m1.n == 2 and table_nodes:
        fn = _tabulate_circle(sigma, table_nodes)
    return ComparisonMap(m1.n, fn, Q, m1, m2, "charted")


def identity_comparison(n: int) -> ComparisonMap:
    return ComparisonMap(n, lambda V: np.array(np.atleast_2d(V), dtype=float), np.eye(n),
                         label="identity")


def circle_map_comparison(eta: float, k: int = 2) -> ComparisonMap:
    """Synthetic ``n = 2`` comparison with ``sigma(theta) = theta + eta sin(k theta)``."""
    if abs(eta * k) >= 1:
        raise ModelError("need |eta k| < 1 for a circle diffeomorphism")

    def sigma(V):
        V = np.atleast_2d(V)
        th = np.arctan2(V[:, 1], V[:, 0])
        out = th + eta * np.sin(k * th)
        return np.column_stack([np.cos(out), np.sin(out)])
    return ComparisonMap(2, sigma, np.eye(2), label=f"circle-map eta={eta} k={k}")


# ---------------------------------------------------------------------------
# Lipschitz estimates
# ---------------------------------------------------------------------------

def dsigma_fd(sigma: SigmaFn, V, h: float = 1e-5) -> np.ndarray:
    """Central differences of sigma along the frame at each ``v``: shape ``(k, n, n-1)``."""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    k, n = V.shape
    E = frame(V)
    cols = []
    for j in range(n - 1):
        e = E[:, :, j]
        plus = np.cos(h) * V + np.sin(h) * e
        minus = np.cos(h) * V - np.sin(h) * e
        cols.append((sigma(plus) - sigma(minus)) / (2 * h))
    return np.stack(cols, axis=2)


def ball_samples(n: int, count: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((count, n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * radius * rng.random(count)[:, None] ** (1.0 / n)


@dataclass
class LipschitzEstimate:
    n: int
    lower: float
    upper: float
    derivative_lower: float
    derivative_upper: float
    lip_b: float
    lip_b_derivative: float
    final_bound_rhs: float
    final_bound_ok: bool
    lemma31_ok: bool
    ratios_within_derivative_bounds: bool
    pairs: int
    directions: int

    @property
    def lip_b_conservative(self) -> float:
        return max(self.lip_b, self.lip_b_derivative)

    def to_dict(self) -> dict:
        return {
            "lower": self.lower, "upper": self.upper,
            "derivative_lower": self.derivative_lower, "derivative_upper": self.derivative_upper,
            "lip_b": self.lip_b, "lip_b_derivative": self.lip_b_derivative,
            "final_bound_rhs": self.final_bound_rhs, "final_bound_ok": self.final_bound_ok,
            "lemma31_ok": self.lemma31_ok,
            "ratios_within_derivative_bounds": self.ratios_within_derivative_bounds,
            "pairs": self.pairs, "directions": self.directions,
        }


def lipschitz_estimate(cm: ComparisonMap, pairs: int = 10_000, directions: int = 2048,
                       seed: int = 0, h: float = 1e-5, radius: float = np.pi) -> LipschitzEstimate:
    """Two-point and derivative bounds on the bi-Lipschitz constant of ``F~``.

    ``|dF~_x(X)|^2 = alpha^2 + beta^2 |dsigma_v(w0)|^2`` for ``X = alpha v + beta w0``,
    so the derivative bounds are ``max(1, sup|dsigma|)`` and ``min(1, inf|dsigma|)``.
    """
    from .sampling import sphere_points
    n = cm.n
    rng = np.random.default_rng(seed)
    X = ball_samples(n, pairs, radius, rng)
    Y = ball_samples(n, pairs, radius, rng)
    d = np.linalg.norm(X - Y, axis=1)
    ok = d > 1e-12
    ratios = np.linalg.norm(cm.F_tilde(X[ok]) - cm.F_tilde(Y[ok]), axis=1) / d[ok]
    lower, upper = float(ratios.min()), float(ratios.max())

    V = sphere_points(n, directions, seed)
    s = np.linalg.svd(dsigma_fd(cm.sigma, V, h), compute_uv=False)
    d_up = max(1.0, float(s[:, 0].max()))
    d_lo = min(1.0, float(s[:, -1].min()))
    lip = max(upper, 1.0 / lower)
    lip_d = max(d_up, 1.0 / d_lo)
    rhs = final_bound_rhs(n)
    dn = delta_n(n)
    within = bool(lower >= d_lo - 1e-4 and upper <= d_up + 1e-4)
    return LipschitzEstimate(
        n, lower, upper, d_lo, d_up, lip, lip_d, rhs,
        bool(max(lip, lip_d) ** 2 <= rhs),
        bool(d_lo >= 1 - dn / 2 and d_up <= 1 + dn / 2),
        within, int(ok.sum()), int(directions))


def conjugation_gap(cm: ComparisonMap, count: int = 1000, seed: int = 0, radius: float = 0.9 * np.pi,
                    spec: IntegratorSpec = IntegratorSpec()) -> float:
    """Max distance between ``exp_{q2}(F~(x))`` and ``F(exp_{q1}(x))`` in the ``q2`` chart."""
    if cm.m1 is None:
        raise ModelError("conjugation check needs charted models")
    rng = np.random.default_rng(seed)
    X = ball_samples(cm.n, count, radius, rng)
    zero = ChartPoint(np.zeros_like(X), np.ones(count, dtype=int))
    P1 = exp_map(cm.m1, X, zero, spec)
    via_F = cm.F(P1, spec)
    direct = exp_map(cm.m2, cm.F_tilde(X), zero, spec)
    return float(np.max(np.linalg.norm(via_F.in_chart(1) - direct.in_chart(1), axis=1)))
