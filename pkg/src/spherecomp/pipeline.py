"""Pipeline orchestration, verdicts, and report emission."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from . import __version__
from .config import ConfigError, ScenarioConfig, load_schema, set_param
from .curvature import lambda_integral
from .expmaps import build_comparison, conjugation_gap, dsigma_fd, lipschitz_estimate, refocusing_check
from .jacobi import constants, verify_key_lemma
from .models import ModelError, frame
from .mollify import blend_and_check, dump_grid_csv

SCHEMA_VERSION = 1
VERIFIED = "HYPOTHESIS_MET_AND_VERIFIED"
NOT_MET = "HYPOTHESIS_NOT_MET"
VIOLATION = "INEQUALITY_VIOLATION"
REJECTED = "MODEL_REJECTED"
EXIT_CODES = {VERIFIED: 0, NOT_MET: 2, VIOLATION: 3, REJECTED: 4}
DSIGMA_CONSISTENCY_TOL = 1e-4

COMMAND_STAGES = {
    "lambda": ("lambda",),
    "constants": ("constants",),
    "keylemma": ("lambda", "constants", "keylemma"),
    "compare": ("lambda", "constants", "keylemma", "compare"),
    "mollify-check": ("mollify",),
    "run": ("lambda", "constants", "keylemma", "compare", "mollify"),
}


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if not np.isfinite(v):
            return None
        return v
    return obj


@dataclass
class PipelineResult:
    report: dict
    curves: Optional[dict] = None
    lambda_curve: Optional[object] = None
    comparison: Optional[object] = None
    mollifier_cfg: Optional[object] = None

    @property
    def exit_code(self) -> int:
        return self.report["exit_code"]


@dataclass
class _Timer:
    enabled: bool
    timings: dict = field(default_factory=dict)

    def run(self, name, fn, *args, **kwargs):
        t0 = time.perf_counter()
        out = fn(*args, **kwargs)
        if self.enabled:
            self.timings[name] = time.perf_counter() - t0
        return out


def _base_report(cfg: ScenarioConfig, command: str, stages) -> dict:
    return {
        "schema_version": SCHEMA_VERSION, "toolkit_version": __version__, "command": command,
        "verdict": None, "exit_code": 0, "config": cfg.to_dict(), "n": cfg.n,
        "stages": list(stages), "constants": None, "constants_detail": None,
        "lambda_integral": None, "lambda": None, "directions": None,
        "hypothesis_met": None, "conclusion_met": None, "max_deviation": None,
        "checks": {}, "violations": [], "lipschitz": None, "mollifier": None, "skipped": {},
    }


def _reject(report: dict, exc: Exception) -> dict:
    report["verdict"] = REJECTED
    report["exit_code"] = EXIT_CODES[REJECTED]
    report["error"] = str(exc)
    return report


def dsigma_consistency(cm, directions: np.ndarray, deviations: np.ndarray, h: float) -> dict:
    """Finite-difference ``|dsigma - I|`` in corresponding frames against the Jacobi values."""
    M = dsigma_fd(cm.sigma, directions, h)
    QE = np.einsum("ij,mjk->mik", cm.Q, frame(directions))
    D = np.einsum("mji,mjk->mik", QE, M) - np.eye(cm.n - 1)
    fd_dev = np.linalg.svd(D, compute_uv=False)[:, 0]
    gap = float(np.max(np.abs(fd_dev - deviations)))
    return {"ok": bool(gap <= DSIGMA_CONSISTENCY_TOL), "max_discrepancy": gap,
            "max_fd_deviation": float(fd_dev.max()), "directions": int(len(directions))}


def run_pipeline(cfg: ScenarioConfig, command: str = "run", deterministic: bool = False) -> PipelineResult:
    stages = COMMAND_STAGES[command]
    report = _base_report(cfg, command, stages)
    timer = _Timer(not deterministic)
    result = PipelineResult(report)
    n, Q = cfg.n, cfg.Q()
    sampler = cfg.sampler.build()
    quad = cfg.quadrature.build()
    spec = cfg.integrator.build()

    try:
        g1, g2 = timer.run("models", cfg.geometries)
        charts = (cfg.model1.chart(), cfg.model2.chart())
        for label, mc in zip(("model1", "model2"), charts):
            if mc is not None and mc.amplitude != 0.0:
                rep = timer.run(f"refocus_{label}", refocusing_check, mc, spec=spec)
                report["checks"][f"refocus_{label}"] = rep.to_dict()
                if not rep.ok:
                    raise ModelError(f"{label} does not refocus at distance pi "
                                     f"(max miss {rep.max_miss:.3e})")
        report["models"] = {"model1": g1.describe(), "model2": g2.describe()}

        lam = consts = kl = None
        if "lambda" in stages:
            lam = timer.run("lambda", lambda_integral, g1, g2, Q, quad, sampler)
            result.lambda_curve = lam
            report["lambda_integral"] = lam.integral
            report["lambda"] = lam.to_dict()
        if "constants" in stages:
            consts = timer.run("constants", constants, g1, sampler, quad, spec)
            report["constants"] = consts.to_dict()
            report["constants_detail"] = {
                "epsilon_residual": consts.epsilon_residual, "c3_direction": consts.c3_direction,
                "c3_x": consts.c3_x, **consts.metadata}
        if "keylemma" in stages:
            kl = timer.run("keylemma", verify_key_lemma, g1, g2, Q, sampler, quad, spec, consts, lam)
            report["directions"] = [r.to_dict() for r in kl.directions]
            report["hypothesis_met"] = kl.hypothesis_met
            report["conclusion_met"] = kl.conclusion_met
            report["max_deviation"] = kl.max_deviation
            report["checks"].update(kl.checks)
            report["violations"] = list(kl.violations)
            result.curves = kl.curves

        cm = None
        wants_map = "compare" in stages or "mollify" in stages
        if wants_map:
            if None in charts:
                reason = "no charted realization for this model pair"
                for s in ("compare", "mollify"):
                    if s in stages:
                        report["skipped"][s] = reason
            else:
                cm = timer.run("comparison_map", build_comparison, charts[0], charts[1], Q, spec)
                result.comparison = cm

        if "compare" in stages and cm is not None:
            lip = timer.run("lipschitz", lipschitz_estimate, cm, cfg.lipschitz.pairs,
                            cfg.lipschitz.directions, cfg.sampler.seed, cfg.lipschitz.fd_step)
            report["lipschitz"] = lip.to_dict()
            if cfg.lipschitz.conjugation_points > 0:
                gap = timer.run("conjugation", conjugation_gap, cm, cfg.lipschitz.conjugation_points,
                                cfg.sampler.seed, spec=spec)
                report["checks"]["conjugation"] = {"ok": bool(gap <= 1e-6), "max_gap": gap}
                if gap > 1e-6:
                    report["violations"].append("conjugation")
            cons = dsigma_consistency(cm, sampler.points(n),
                                      np.array([r.deviation for r in kl.directions]),
                                      cfg.lipschitz.fd_step)
            report["checks"]["dsigma_consistency"] = cons
            if not cons["ok"]:
                report["violations"].append("dsigma_consistency")
            if kl.conclusion_met:
                report["checks"]["lemma31"] = {"ok": lip.lemma31_ok}
                if not lip.lemma31_ok:
                    report["violations"].append("lemma31")
            if kl.hypothesis_met:
                report["checks"]["final_bound"] = {"ok": lip.final_bound_ok}
                if not lip.final_bound_ok:
                    report["violations"].append("final_bound")
        elif "compare" in stages:
            report["skipped"].setdefault("compare", "no charted realization for this model pair")

        if "mollify" in stages and cm is not None:
            if n != 2:
                report["skipped"]["mollify"] = "mollifier check is implemented for n = 2 only"
            elif not cfg.mollifier.enabled:
                report["skipped"]["mollify"] = "disabled in config"
            else:
                mcfg = cfg.mollifier.build(cfg.sampler.seed)
                result.mollifier_cfg = mcfg
                imm = timer.run("mollify", blend_and_check, cm, mcfg)
                report["mollifier"] = imm.to_dict()
    except ModelError as exc:
        _reject(report, exc)
        if not deterministic:
            report["timings"] = timer.timings
        result.report = jsonable(report)
        return result

    if kl is not None:
        if report["violations"]:
            verdict = VIOLATION
        elif not kl.hypothesis_met:
            verdict = NOT_MET
        else:
            verdict = VERIFIED
        report["verdict"] = verdict
        report["exit_code"] = EXIT_CODES[verdict]
    if not deterministic:
        report["timings"] = timer.timings
    result.report = jsonable(report)
    return result


def validate_report(report: dict) -> None:
    jsonschema.validate(report, load_schema("report.schema.json"))


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_report(report: dict, path) -> None:
    Path(path).write_text(dumps_report(report), encoding="utf-8")


def _write_csv(path, header, columns) -> int:
    rows = list(zip(*columns))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])
    return len(rows)


def write_lambda_csv(curve, path) -> int:
    return _write_csv(path, ["t", "lambda"], [curve.grid, curve.values])


def write_curves_csv(curves: dict, path) -> int:
    keys = ["t", "lambda", "phi_max", "envelope_max"]
    return _write_csv(path, keys, [curves[k] for k in keys])


def write_grid_csv(result: PipelineResult, path) -> int:
    if result.comparison is None or result.mollifier_cfg is None:
        raise ValueError("no mollifier run to dump")
    return dump_grid_csv(result.comparison, result.mollifier_cfg, path)


SWEEP_FIELDS = ["value", "verdict", "exit_code", "lambda_integral", "epsilon_n", "delta_n",
                "max_deviation", "hypothesis_met", "conclusion_met", "lip_b", "min_singular_value"]


def parse_sweep(text: str):
    try:
        param, rng = text.split("=", 1)
        start, stop, steps = rng.split(":")
        steps = int(steps)
        start, stop = float(start), float(stop)
    except ValueError:
        raise ConfigError(f"sweep must look like param=start:stop:steps, got {text!r}") from None
    if steps < 1:
        raise ConfigError("sweep needs at least one step")
    return param.strip(), np.linspace(start, stop, steps)


def run_sweep(cfg: ScenarioConfig, sweep: str, outdir, command: str = "run",
              deterministic: bool = False) -> list[dict]:
    """One report per sweep value plus an aggregate ``sweep.csv`` in ``outdir``."""
    param, values = parse_sweep(sweep)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = []
    for i, v in enumerate(values):
        point = set_param(cfg, param, float(v))
        rep = run_pipeline(point, command, deterministic).report
        write_report(rep, outdir / f"point_{i:03d}.json")
        cons = rep.get("constants") or {}
        rows.append({
            "value": float(v), "verdict": rep["verdict"], "exit_code": rep["exit_code"],
            "lambda_integral": rep["lambda_integral"], "epsilon_n": cons.get("epsilon_n"),
            "delta_n": cons.get("delta_n"), "max_deviation": rep["max_deviation"],
            "hypothesis_met": rep["hypothesis_met"], "conclusion_met": rep["conclusion_met"],
            "lip_b": (rep["lipschitz"] or {}).get("lip_b"),
            "min_singular_value": (rep["mollifier"] or {}).get("min_singular_value"),
        })
    with open(outdir / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r[k] is None else repr(r[k]) if isinstance(r[k], float) else r[k])
                        for k in SWEEP_FIELDS})
    return rows
