"""Deterministic direction sets on unit spheres and local refinement of extrema.

Maxima over the unit sphere are only ever sampled, so every extremum reported
here is a bound from one side (a lower bound for a max, an upper bound for a
min). The hill-climb starts from the best sample and only accepts strict
improvements, so turning refinement on or deepening it cannot move the result
the wrong way.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.stats import norm, qmc

from .models import frame

GOLDEN = (1 + 5 ** 0.5) / 2


@dataclass(frozen=True)
class DirectionSampler:
    count: int = 512
    refine: bool = True
    seed: int = 0
    step_start: float = 0.1
    step_min: float = 1e-3
    max_iter: int = 400

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("sampler count must be positive")
        if not 0 < self.step_min <= self.step_start:
            raise ValueError("need 0 < step_min <= step_start")

    def points(self, n: int) -> np.ndarray:
        return sphere_points(n, self.count, self.seed)

    def metadata(self) -> dict:
        return {"count": self.count, "refine": self.refine, "seed": self.seed,
                "step_start": self.step_start, "step_min": self.step_min}

    def search(self, objective: Callable, n: int, problems: int = 1, sense: str = "max",
               extra: Optional[np.ndarray] = None) -> "SearchResult":
        """Extremize ``objective`` over directions, independently for each problem.

        ``objective(U, idx)`` receives directions of shape ``(j, c, n)`` for the
        problems ``idx`` (shape ``(j,)``) and returns values of shape ``(j, c)``.
        ``extra`` directions are added to the sample set for every problem.
        """
        if sense not in ("max", "min"):
            raise ValueError("sense must be 'max' or 'min'")
        sign = 1.0 if sense == "max" else -1.0
        P = self.points(n)
        if extra is not None:
            P = np.vstack([P, np.atleast_2d(extra)])
        idx = np.arange(problems)
        vals = sign * objective(np.broadcast_to(P, (problems,) + P.shape), idx)
        best = np.argmax(vals, axis=1)
        u = P[best].copy()
        v = vals[idx, best].copy()
        sampled = sign * v
        evaluations = vals.size
        if self.refine:
            u, v, ev = _hill_climb(lambda U, i: sign * objective(U, i), u, v, self)
            evaluations += ev
        return SearchResult(sign * v, u, sampled, evaluations)

    def climb(self, objective: Callable, u0: np.ndarray, v0: np.ndarray,
              sense: str = "max") -> "SearchResult":
        """Refine already-evaluated starting points (one per problem)."""
        sign = 1.0 if sense == "max" else -1.0
        u = np.array(u0, dtype=float, ndmin=2)
        v = sign * np.array(v0, dtype=float, ndmin=1)
        sampled = sign * v.copy()
        evaluations = 0
        if self.refine:
            u, v, evaluations = _hill_climb(lambda U, i: sign * objective(U, i), u, v, self)
        return SearchResult(sign * v, u, sampled, evaluations)


@dataclass
class SearchResult:
    value: np.ndarray  # (problems,)
    direction: np.ndarray  # (problems, n)
    sampled_value: np.ndarray
    evaluations: int


def _hill_climb(objective, u, v, sampler: DirectionSampler):
    k, n = u.shape
    step = np.full(k, sampler.step_start)
    evaluations = 0
    for _ in range(sampler.max_iter):
        active = np.nonzero(step >= sampler.step_min)[0]
        if active.size == 0:
            break
        ua, sa = u[active], step[active][:, None, None]
        E = frame(ua)  # (j, n, n-1)
        moves = np.concatenate([E, -E], axis=2).transpose(0, 2, 1)  # (j, 2(n-1), n)
        cand = np.cos(sa) * ua[:, None, :] + np.sin(sa) * moves
        cand /= np.linalg.norm(cand, axis=2, keepdims=True)
        vals = objective(cand, active)
        evaluations += vals.size
        j = np.argmax(vals, axis=1)
        cv = vals[np.arange(active.size), j]
        better = cv > v[active]
        up = active[better]
        u[up] = cand[better, j[better]]
        v[up] = cv[better]
        step[active[~better]] *= 0.5
    return u, v, evaluations


def sphere_points(n: int, count: int, seed: int = 0) -> np.ndarray:
    """Low-discrepancy points on the unit sphere in R^n.

    Equally spaced angles for n=2 (nested under doubling), a Fibonacci lattice
    for n=3, and a scrambled Sobol net pushed through the Gaussian inverse CDF
    and normalized for n>3 (nested in the count).
    """
    if n < 2:
        raise ValueError("need n >= 2")
    i = np.arange(count)
    if n == 2:
        a = 2 * np.pi * i / count
        return np.column_stack([np.cos(a), np.sin(a)])
    if n == 3:
        z = 1 - (2 * i + 1) / count
        r = np.sqrt(1 - z ** 2)
        ph = 2 * np.pi * i / GOLDEN
        return np.column_stack([r * np.cos(ph), r * np.sin(ph), z])
    eng = qmc.Sobol(d=n, scramble=True, seed=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        s = eng.random(count)
    g = norm.ppf(np.clip(s, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)
