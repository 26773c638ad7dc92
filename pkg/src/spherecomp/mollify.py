"""Mollification of F~ near the origin, blending, and an immersion spot-check (n = 2).

Two discretizations of the convolution are offered. ``mollify`` convolves a
sampled grid with the bump kernel at the grid's own spacing. ``PointMollifier``
evaluates the convolution at arbitrary points with a stencil whose spacing is a
fixed fraction of epsilon, so the discrete kernel is self-similar in epsilon and
the smoothing error scales like epsilon squared.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np
from scipy import ndimage

from .expmaps import ComparisonMap

EPS_SWEEP = (4e-2, 2e-2, 1e-2, 5e-3)
PASS_MARGIN = 1e-6


def bump(z2):
    """Unnormalized ``exp(-1 / (1 - |z|^2))`` for squared radii ``z2``; zero outside the unit ball."""
    z2 = np.asarray(z2, dtype=float)
    inside = z2 < 1
    out = np.zeros_like(z2)
    out[inside] = np.exp(-1.0 / (1.0 - z2[inside]))
    return out


def kernel_stencil(eps: float, h: float):
    """Offsets and weights of the discrete kernel with radius ``eps`` on spacing ``h``."""
    if eps < 2 * h:
        raise ValueError(f"epsilon {eps:g} is below the grid resolution (need >= 2h = {2 * h:g})")
    k = int(np.ceil(eps / h))
    i = np.arange(-k, k + 1)
    I, J = np.meshgrid(i, i, indexing="ij")
    w = bump(((I * h) ** 2 + (J * h) ** 2) / eps ** 2)
    w /= w.sum()
    return k, w


def mollify(values, h: float, eps: float):
    """Convolve grid samples ``values`` (shape ``(N, N)`` or ``(N, N, d)``) with the kernel.

    Returns the smoothed grid and a mask of nodes whose kernel support lies
    inside the grid.
    """
    values = np.asarray(values, dtype=float)
    k, w = kernel_stencil(eps, h)
    if values.ndim == 2:
        values = values[..., None]
        squeeze = True
    else:
        squeeze = False
    out = np.stack([ndimage.correlate(values[..., c], w, mode="constant")
                    for c in range(values.shape[-1])], axis=-1)
    mask = np.zeros(values.shape[:2], dtype=bool)
    mask[k:-k, k:-k] = True
    return (out[..., 0] if squeeze else out), mask


def ball_grid(a: float, nodes: int):
    x = np.linspace(-a, a, nodes)
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    return np.stack([X1, X2], axis=-1), x[1] - x[0]


class PointMollifier:
    """``F~_eps(x) = sum_k w_k F~(x - z_k)`` on a stencil of spacing ``eps / cells``."""

    def __init__(self, cm: ComparisonMap, eps: float, cells: int = 4):
        self.cm = cm
        self.eps = eps
        k, w = kernel_stencil(eps, eps / cells)
        i = np.arange(-k, k + 1) * (eps / cells)
        Z1, Z2 = np.meshgrid(i, i, indexing="ij")
        keep = w > 0
        self.offsets = np.column_stack([Z1[keep], Z2[keep]])
        self.weights = w[keep]

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        pts = X[:, None, :] - self.offsets[None, :, :]
        vals = self.cm.F_tilde(pts.reshape(-1, 2)).reshape(pts.shape)
        return np.einsum("k,mkd->md", self.weights, vals)


def smoothstep(rho, r: float, R: float):
    """Quintic cutoff: 1 on ``rho <= r``, 0 on ``rho >= R``, C^2 in between."""
    s = np.clip((R - np.asarray(rho, dtype=float)) / (R - r), 0.0, 1.0)
    return s ** 3 * (10 - 15 * s + 6 * s ** 2)


@dataclass
class MollifierConfig:
    epsilon: float = 1e-2
    a: float = np.pi / 2
    r: Optional[float] = None
    R: Optional[float] = None
    grid: int = 129
    cells_per_eps: int = 4
    samples: int = 1200
    fd_step: float = 1e-5
    seed: int = 0
    sweep: tuple = EPS_SWEEP

    def __post_init__(self):
        if self.r is None:
            self.r = self.a / 3
        if self.R is None:
            self.R = 2 * self.a / 3
        if not 0 < self.r < self.R < self.a < np.pi:
            raise ValueError("need 0 < r < R < a < pi")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.samples < 3:
            raise ValueError("need at least 3 samples")
        self.sweep = tuple(float(e) for e in self.sweep)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sweep"] = list(self.sweep)
        return d


def blended(cm: ComparisonMap, cfg: MollifierConfig, smooth: Optional[PointMollifier] = None):
    smooth = PointMollifier(cm, cfg.epsilon, cfg.cells_per_eps) if smooth is None else smooth

    def F(X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        g = smoothstep(np.linalg.norm(X, axis=1), cfg.r, cfg.R)[:, None]
        out = cm.F_tilde(X)
        on = g[:, 0] > 0
        if np.any(on):
            out[on] = (1 - g[on]) * out[on] + g[on] * smooth(X[on])
        return out
    return F


def fd_jacobian(F, X, h: float) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    cols = [(F(X + h * e) - F(X - h * e)) / (2 * h) for e in np.eye(X.shape[1])]
    return np.stack(cols, axis=2)


def region_samples(cfg: MollifierConfig) -> dict:
    """Stratified samples in the plateau ``B_r``, the annulus, and ``r``-outside ``supp g``."""
    rng = np.random.default_rng(cfg.seed)
    per = -(-cfg.samples // 3)
    bands = {"plateau": (0.0, cfg.r), "annulus": (cfg.r, cfg.R), "outside": (cfg.R, cfg.a)}
    out = {}
    for name, (lo, hi) in bands.items():
        ang = rng.uniform(0, 2 * np.pi, per)
        rad = np.sqrt(rng.uniform(lo ** 2, hi ** 2, per))
        out[name] = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
    return out


@dataclass
class ImmersionReport:
    epsilon: float
    samples: int
    min_singular_value: float
    region_min: dict
    passed: bool
    orientation_flip: bool
    blend_identity_error: dict
    convergence: dict
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "samples": self.samples,
                "min_singular_value": self.min_singular_value, "region_min": self.region_min,
                "pass": self.passed, "orientation_flip": self.orientation_flip,
                "blend_identity_error": self.blend_identity_error,
                "convergence": self.convergence, "config": self.config}


def convergence_sweep(cm: ComparisonMap, cfg: MollifierConfig, points=None, floor: float = 1e-8):
    """``sup |F~_eps - F~|`` and the Jacobian gap over the annulus for each epsilon in the sweep.

    A sequence counts as monotone if every value is at most its predecessor or
    already below ``floor`` (round-off level for near-identity maps).
    """
    X = region_samples(cfg)["annulus"] if points is None else points
    JF = fd_jacobian(cm.F_tilde, X, cfg.fd_step)
    F0 = cm.F_tilde(X)
    values, jac = [], []
    for eps in cfg.sweep:
        S = PointMollifier(cm, eps, cfg.cells_per_eps)
        values.append(float(np.max(np.linalg.norm(S(X) - F0, axis=1))))
        gap = fd_jacobian(S, X, cfg.fd_step) - JF
        jac.append(float(np.max(np.linalg.svd(gap, compute_uv=False)[:, 0])))

    def monotone(seq):
        return all(b <= a or b <= floor for a, b in zip(seq, seq[1:]))
    return {"epsilons": list(cfg.sweep), "value_gap": values, "jacobian_gap": jac,
            "monotone": bool(monotone(values) and monotone(jac))}


def blend_and_check(cm: ComparisonMap, cfg: MollifierConfig = MollifierConfig(),
                    with_convergence: bool = True) -> ImmersionReport:
    if cm.n != 2:
        raise ValueError("the mollifier check is implemented for n = 2 only")
    smooth = PointMollifier(cm, cfg.epsilon, cfg.cells_per_eps)
    F = blended(cm, cfg, smooth)
    regions = region_samples(cfg)
    region_min = {}
    dets = []
    for name, X in regions.items():
        J = fd_jacobian(F, X, cfg.fd_step)
        region_min[name] = float(np.linalg.svd(J, compute_uv=False)[:, -1].min())
        dets.append(np.linalg.det(J))
    dets = np.concatenate(dets)
    # the sampled region is connected, so a sign change forces a singular Jacobian somewhere
    flip = bool(dets.min() < 0 < dets.max())
    smin = min(region_min.values())
    ident = {
        "plateau": float(np.max(np.abs(F(regions["plateau"]) - smooth(regions["plateau"])))),
        "outside": float(np.max(np.abs(F(regions["outside"]) - cm.F_tilde(regions["outside"])))),
    }
    conv = convergence_sweep(cm, cfg) if with_convergence else {}
    total = sum(len(X) for X in regions.values())
    return ImmersionReport(cfg.epsilon, total, smin, region_min,
                           bool(smin > PASS_MARGIN and not flip), flip, ident, conv, cfg.to_dict())


def dump_grid_csv(cm: ComparisonMap, cfg: MollifierConfig, path) -> int:
    """Write the blended map on the ``grid x grid`` lattice over ``[-a, a]^2`` (x1,x2,Fx1,Fx2)."""
    G, _ = ball_grid(cfg.a, cfg.grid)
    X = G.reshape(-1, 2)
    FX = blended(cm, cfg)(X)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x1,x2,Fx1,Fx2\n")
        for row in np.hstack([X, FX]):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    return X.shape[0]
