"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``python3 tests/test_acceptance.py`` or via pytest; the criteria
summary is printed at the end of the session.
"""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from spherecomp.config import load
from spherecomp.curvature import QuadratureSpec, lambda_at, lambda_integral, verify_lemma21
from spherecomp.expmaps import (
    ChartedMetric, ChartPoint, ball_samples, build_comparison, exp_map, identity_comparison,
    lipschitz_estimate, log_map, refocusing_check,
)
from spherecomp.jacobi import (
    constants, delta_n, final_bound_rhs, gronwall_envelope, integrate_jacobi, phi_curve,
    verify_key_lemma,
)
from spherecomp.models import (
    frame, random_isometry, round_profile, synthetic_anisotropic, synthetic_constant, warped_geometry,
)
from spherecomp.mollify import MollifierConfig, PointMollifier, ball_grid, blend_and_check, mollify
from spherecomp.pipeline import run_pipeline
from spherecomp.sampling import DirectionSampler

from conftest import ROOT, bump

BETAS = (1e-2, 1e-3, 1e-4)
crit = pytest.mark.criterion


def n3_pairs():
    r3 = warped_geometry(round_profile(), 3)
    return {
        "synthetic-1.02": (r3, synthetic_constant(1.02, 3)),
        "bump-1e-2": (r3, bump(1e-2, 3)),
        "anisotropic-0.05": (r3, synthetic_anisotropic(1.0, 0.05, 3)),
    }


Q_CHOICES = {"identity": np.eye(3), "random-1": random_isometry(3, 1), "random-2": random_isometry(3, 2)}
MATRIX = [(p, q) for p in n3_pairs() for q in Q_CHOICES]


# 1 -----------------------------------------------------------------------------

@crit(1, "constants oracle for the round 2-sphere")
def test_constants_oracle(round2):
    c = constants(round2)
    for name, want in [("c1", 1.0), ("c2", 1.0), ("c3", 1.0), ("c", 2 * np.exp(np.pi))]:
        assert getattr(c, name) == pytest.approx(want, rel=1e-9), name
    assert c.delta_n == pytest.approx(0.275404, abs=1e-6)
    assert c.epsilon_n == pytest.approx(2.9579e-3, abs=1e-6)


# 2 -----------------------------------------------------------------------------

@crit(2, "lambda closed forms")
@pytest.mark.parametrize("beta", BETAS)
def test_lambda_closed_forms(round2, beta):
    assert lambda_at(round2, bump(beta), np.eye(2), np.pi / 2) == pytest.approx(2 * beta, abs=1e-8)
    lam = lambda_integral(round2, synthetic_constant(1 + 2 * beta, 2), np.eye(2))
    assert lam.integral == pytest.approx(2 * beta * np.pi, abs=1e-9)


# 3 -----------------------------------------------------------------------------

@crit(3, "Jacobi trajectories match closed forms")
@pytest.mark.parametrize("kappa", [1.0, 1.02, 0.5, 1.44])
def test_jacobi_closed_forms(kappa):
    g = warped_geometry(round_profile(), 2) if kappa == 1.0 else synthetic_constant(kappa, 2)
    w = np.sqrt(kappa)
    tr = integrate_jacobi(g, [1.0, 0.0], [0.0, 1.0])
    t = tr.grid
    exact = np.column_stack([np.sin(w * t) / w, np.cos(w * t)])
    assert t[0] == 0 and t[-1] == pytest.approx(np.pi)
    assert np.max(np.abs(tr.states - exact)) < 1e-8


# 4 -----------------------------------------------------------------------------

@crit(4, "Gronwall domination on the 3x3x8 matrix")
@pytest.mark.parametrize("pair, qname", MATRIX)
def test_gronwall_matrix(pair, qname):
    g1, g2 = n3_pairs()[pair]
    Q = Q_CHOICES[qname]
    U = DirectionSampler(count=8).points(3)
    for u, E in zip(U, frame(U)):
        for x in E.T:
            env = gronwall_envelope(g1, g2, Q, u, x, detail=True)
            phi = phi_curve(g1, g2, Q, u, x).values
            assert np.all(phi <= env.curve * (1 + 1e-6)), (u, x)


@crit(4, "Gronwall domination on the 3x3x8 matrix")
def test_gronwall_closed_form_values(round2, syn102):
    beta = 0.01
    env = gronwall_envelope(round2, syn102, np.eye(2), [1.0, 0.0], [0.0, 1.0])
    assert env == pytest.approx(2 * beta * np.pi * np.exp((1 + 2 * beta) * np.pi), rel=1e-6)
    w = np.sqrt(1 + 2 * beta)
    # |J2(pi) - J1(pi)| with J1 = (0, -1) and J2 = (sin(w pi)/w, cos(w pi))
    phi_pi = np.hypot(np.sin(w * np.pi) / w, 1 + np.cos(w * np.pi))
    got = phi_curve(round2, syn102, np.eye(2), [1.0, 0.0], [0.0, 1.0]).values[-1]
    assert got == pytest.approx(phi_pi, abs=1e-6)


# 5 -----------------------------------------------------------------------------

@crit(5, "Key Lemma end to end")
def test_key_lemma_end_to_end(round2, syn102):
    c = constants(round2)
    rep = verify_key_lemma(round2, bump(1e-4), np.eye(2), consts=c)
    assert rep.hypothesis_met
    assert 10 * rep.max_deviation <= delta_n(2) / 2
    assert not rep.violations
    rep = verify_key_lemma(round2, syn102, np.eye(2), consts=c)
    assert not rep.hypothesis_met
    assert rep.max_deviation == pytest.approx(4.888e-4, abs=1e-6)
    assert not rep.violations


# 6 -----------------------------------------------------------------------------

@crit(6, "curvature operator gap bound never violated")
@pytest.mark.parametrize("pair, qname", MATRIX)
def test_lemma21_matrix(pair, qname):
    g1, g2 = n3_pairs()[pair]
    Q = Q_CHOICES[qname]
    sampler = DirectionSampler(count=128)
    lam = lambda_integral(g1, g2, Q, QuadratureSpec(17), sampler)
    for t, lt in zip(lam.grid, lam.values):
        for u in DirectionSampler(count=8).points(3):
            r = verify_lemma21(g1, g2, Q, t, u, sampler, lam=lt)
            assert r.lhs <= 2 * (3 - 1) * r.lam * (1 + 1e-9) + 1e-300, (t, u)
            assert r.ok


@crit(6, "curvature operator gap bound never violated")
@pytest.mark.parametrize("name", ["anisotropic_n3", "round_vs_synthetic", "perturbed_sphere"])
def test_lemma21_in_pipeline(name):
    rep = run_pipeline(load(f"{ROOT}/configs/{name}.toml"), "keylemma", True).report
    assert rep["checks"]["lemma21"]["ok"]
    assert rep["exit_code"] != 3 and "lemma21" not in rep["violations"]


# 7 -----------------------------------------------------------------------------

@crit(7, "Lipschitz constants")
def test_lipschitz_identity():
    for n in (2, 3):
        assert lipschitz_estimate(identity_comparison(n)).lip_b == pytest.approx(1.0, abs=1e-9)


@crit(7, "Lipschitz constants")
@pytest.mark.parametrize("m2", [ChartedMetric(2, 1e-3), ChartedMetric(2, -0.05), ChartedMetric(2, 0.0, 1e-3),
                                ChartedMetric(3, 1e-2)])
def test_lipschitz_warped_pairs(m2):
    cm = build_comparison(ChartedMetric(m2.n), m2, random_isometry(m2.n, 11))
    est = lipschitz_estimate(cm, pairs=10_000 if m2.n == 2 else 3000, directions=2048 if m2.n == 2 else 512)
    assert est.lip_b == pytest.approx(1.0, abs=1e-6)


@crit(7, "Lipschitz constants")
def test_lipschitz_final_bound_for_verified_pair():
    assert final_bound_rhs(2) == pytest.approx(1.62666, abs=1e-5)
    rep = run_pipeline(load(f"{ROOT}/configs/round_vs_bump.toml"), "compare", True).report
    assert rep["hypothesis_met"] and rep["exit_code"] == 0
    lip = rep["lipschitz"]
    assert lip["lip_b"] ** 2 <= lip["final_bound_rhs"] and lip["final_bound_ok"]


# 8 -----------------------------------------------------------------------------

@crit(8, "exp/log roundtrip and refocusing on the perturbed sphere")
def test_exp_log_roundtrip():
    m = ChartedMetric(2, 0.0, 1e-3)
    V = ball_samples(2, 1000, 0.95 * np.pi, np.random.default_rng(0))
    P = exp_map(m, V)
    back = log_map(m, P)
    assert np.max(np.linalg.norm(back - V, axis=1)) < 1e-7


@crit(8, "exp/log roundtrip and refocusing on the perturbed sphere")
def test_exp_log_roundtrip_off_pole():
    m = ChartedMetric(2, 0.0, 1e-3)
    rng = np.random.default_rng(1)
    base = ChartPoint(ball_samples(2, 1000, 0.3 * np.pi, rng), np.zeros(1000, dtype=int))
    V = ball_samples(2, 1000, 0.6 * np.pi, rng)
    back = log_map(m, exp_map(m, V, base), base)
    assert np.max(np.linalg.norm(back - V, axis=1)) < 1e-7


@crit(8, "exp/log roundtrip and refocusing on the perturbed sphere")
def test_refocusing():
    rep = refocusing_check(ChartedMetric(2, 0.0, 1e-3), count=64)
    assert rep.ok and rep.geodesics == 64 and rep.max_miss < 1e-6


# 9 -----------------------------------------------------------------------------

@crit(9, "mollifier reproduction and immersion")
def test_mollifier_identity():
    G, h = ball_grid(np.pi / 2, 129)
    out, mask = mollify(G, h, 4 * h)
    assert np.max(np.abs(out[mask] - G[mask])) < 1e-10
    X = G[mask][::7]
    assert np.max(np.abs(PointMollifier(identity_comparison(2), 1e-2)(X) - X)) < 1e-10


@crit(9, "mollifier reproduction and immersion")
def test_mollifier_round_vs_bump():
    cm = build_comparison(ChartedMetric(2), ChartedMetric(2, 1e-3), np.eye(2))
    rep = blend_and_check(cm, MollifierConfig(epsilon=1e-2))
    assert rep.min_singular_value > 0.9 and rep.passed
    assert rep.convergence["monotone"]


# 10 ----------------------------------------------------------------------------

def _cli_run(config, workers):
    env = dict(os.environ, SPHERECOMP_WORKERS=str(workers))
    proc = subprocess.run([sys.executable, "-m", "spherecomp.cli", "run", "--config", config,
                           "--deterministic"], capture_output=True, env=env, check=False)
    return proc.returncode, proc.stdout


@crit(10, "deterministic reports at any worker count")
@pytest.mark.parametrize("name", ["round_vs_bump", "anisotropic_n3"])
def test_determinism(name):
    config = f"{ROOT}/configs/{name}.toml"
    runs = [_cli_run(config, w) for w in (1, 1, 4)]
    assert runs[0][0] in (0, 2)
    assert runs[0] == runs[1] == runs[2]
    assert "timings" not in json.loads(runs[0][1])


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
