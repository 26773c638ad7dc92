"""Scenario configuration: TOML in, validated dataclasses out, TOML back."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np
import tomli
import tomli_w

from .curvature import QuadratureSpec
from .models import (
    ModelError, RadialGeometry, bump_profile, charted_geometry, random_isometry,
    round_profile, synthetic_anisotropic, synthetic_constant, table_profile,
    validate_isometry, warped_geometry,
)
from .mollify import MollifierConfig
from .ode import IntegratorSpec
from .sampling import DirectionSampler

MODEL_KINDS = ("warped-round", "warped-bump", "warped-table", "synthetic-constant",
               "synthetic-anisotropic", "charted-perturbed")


class ConfigError(ValueError):
    pass


def load_schema(name: str) -> dict:
    text = resources.files("spherecomp").joinpath("schemas", name).read_text(encoding="utf-8")
    return json.loads(text)


def _prune(d: dict) -> dict:
    return {k: v for k, v in d.items() if v is not None}


@dataclass
class ModelSpec:
    kind: str = "warped-round"
    n: int = 2
    beta: Optional[float] = None
    kappa: Optional[float] = None
    eta: Optional[float] = None
    amplitude: Optional[float] = None
    table: Optional[str] = None
    k0: Optional[float] = None
    kpi: Optional[float] = None

    def _need(self, *names):
        missing = [x for x in names if getattr(self, x) is None]
        if missing:
            raise ConfigError(f"model kind {self.kind!r} needs {', '.join(missing)}")

    def geometry(self, base_dir: Path = Path(".")) -> RadialGeometry:
        k = self.kind
        if k == "warped-round":
            return warped_geometry(round_profile(), self.n)
        if k == "warped-bump":
            self._need("beta")
            return warped_geometry(bump_profile(self.beta), self.n)
        if k == "warped-table":
            self._need("table", "k0", "kpi")
            path = Path(self.table)
            if not path.is_absolute():
                path = base_dir / path
            return warped_geometry(table_profile(path, self.k0, self.kpi), self.n)
        if k == "synthetic-constant":
            self._need("kappa")
            return synthetic_constant(self.kappa, self.n)
        if k == "synthetic-anisotropic":
            self._need("kappa", "eta")
            return synthetic_anisotropic(self.kappa, self.eta, self.n)
        if k == "charted-perturbed":
            self._need("amplitude")
            return charted_geometry(self.beta or 0.0, self.amplitude, self.n)
        raise ConfigError(f"unknown model kind {k!r}")

    def chart(self):
        """The charted realization, or None for models without one."""
        from .expmaps import ChartedMetric
        if self.n not in (2, 3):
            return None
        if self.kind == "warped-round":
            return ChartedMetric(self.n, 0.0, 0.0)
        if self.kind == "warped-bump":
            return ChartedMetric(self.n, self.beta, 0.0)
        if self.kind == "charted-perturbed":
            return ChartedMetric(self.n, self.beta or 0.0, self.amplitude)
        return None


@dataclass
class IsometrySpec:
    kind: str = "identity"
    matrix: Optional[list] = None
    seed: Optional[int] = None

    def build(self, n: int) -> np.ndarray:
        if self.kind == "identity":
            return np.eye(n)
        if self.kind == "random":
            return random_isometry(n, 0 if self.seed is None else self.seed)
        if self.kind == "matrix":
            if self.matrix is None:
                raise ConfigError("isometry kind 'matrix' needs matrix")
            try:
                return validate_isometry(np.asarray(self.matrix, dtype=float), n)
            except ModelError as exc:
                raise ConfigError(str(exc)) from None
        raise ConfigError(f"unknown isometry kind {self.kind!r}")


@dataclass
class SamplerSpec:
    count: int = 512
    refine: bool = True
    seed: int = 0
    step_start: float = 0.1
    step_min: float = 1e-3

    def build(self) -> DirectionSampler:
        return DirectionSampler(self.count, self.refine, self.seed, self.step_start, self.step_min)


@dataclass
class IntegratorConfig:
    method: str = "dp54"
    rtol: float = 1e-11
    atol: float = 1e-11
    rk4_substeps: int = 16

    def build(self) -> IntegratorSpec:
        return IntegratorSpec(self.method, self.rtol, self.atol, self.rk4_substeps)


@dataclass
class QuadratureConfig:
    nodes: int = 257

    def build(self) -> QuadratureSpec:
        return QuadratureSpec(self.nodes)


@dataclass
class LipschitzSpec:
    pairs: int = 10_000
    directions: int = 2048
    fd_step: float = 1e-5
    conjugation_points: int = 1000


@dataclass
class MollifierSpec:
    enabled: bool = True
    epsilon: float = 1e-2
    a: float = float(np.pi / 2)
    r: Optional[float] = None
    R: Optional[float] = None
    grid: int = 129
    cells_per_eps: int = 4
    samples: int = 1200
    fd_step: float = 1e-5
    sweep: list = field(default_factory=lambda: [4e-2, 2e-2, 1e-2, 5e-3])

    def build(self, seed: int = 0) -> MollifierConfig:
        return MollifierConfig(self.epsilon, self.a, self.r, self.R, self.grid,
                               self.cells_per_eps, self.samples, self.fd_step, seed,
                               tuple(self.sweep))


@dataclass
class OutputSpec:
    report: Optional[str] = None
    curves: Optional[str] = None
    lambda_csv: Optional[str] = None
    grid_csv: Optional[str] = None


_SECTIONS = {
    "model1": ModelSpec, "model2": ModelSpec, "isometry": IsometrySpec,
    "sampler": SamplerSpec, "integrator": IntegratorConfig, "quadrature": QuadratureConfig,
    "lipschitz": LipschitzSpec, "mollifier": MollifierSpec, "output": OutputSpec,
}


@dataclass
class ScenarioConfig:
    model1: ModelSpec = field(default_factory=ModelSpec)
    model2: ModelSpec = field(default_factory=ModelSpec)
    isometry: IsometrySpec = field(default_factory=IsometrySpec)
    sampler: SamplerSpec = field(default_factory=SamplerSpec)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    lipschitz: LipschitzSpec = field(default_factory=LipschitzSpec)
    mollifier: MollifierSpec = field(default_factory=MollifierSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    base_dir: str = "."

    @classmethod
    def from_dict(cls, data: dict, base_dir: str = ".") -> "ScenarioConfig":
        try:
            jsonschema.validate(data, load_schema("config.schema.json"))
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"config invalid at {where}: {exc.message}") from None
        kwargs = {name: typ(**data.get(name, {})) for name, typ in _SECTIONS.items()}
        cfg = cls(**kwargs, base_dir=base_dir)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            if f.name == "base_dir":
                continue
            sec = _prune(asdict(getattr(self, f.name)))
            if sec:
                out[f.name] = sec
        return out

    def validate(self) -> None:
        if self.model1.n != self.model2.n:
            raise ConfigError(f"dimension mismatch: {self.model1.n} vs {self.model2.n}")
        self.isometry.build(self.model1.n)
        self.sampler.build()
        self.integrator.build()
        self.quadrature.build()
        if self.mollifier.enabled:
            try:
                self.mollifier.build()
            except ValueError as exc:
                raise ConfigError(f"mollifier: {exc}") from None

    @property
    def n(self) -> int:
        return self.model1.n

    def Q(self) -> np.ndarray:
        return self.isometry.build(self.n)

    def geometries(self):
        base = Path(self.base_dir)
        return self.model1.geometry(base), self.model2.geometry(base)

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())


def loads(text: str, base_dir: str = ".") -> ScenarioConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    return ScenarioConfig.from_dict(data, base_dir)


def load(path) -> ScenarioConfig:
    path = Path(path)
    return loads(path.read_text(encoding="utf-8"), str(path.parent))


def set_param(cfg: ScenarioConfig, dotted: str, value) -> ScenarioConfig:
    """Copy of ``cfg`` with ``section.key`` (or a bare ``model2`` key) replaced."""
    section, _, key = dotted.rpartition(".")
    section = section or "model2"
    data = cfg.to_dict()
    data.setdefault(section, {})[key] = value
    return ScenarioConfig.from_dict(data, cfg.base_dir)
