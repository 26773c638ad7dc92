import numpy as np
import pytest
from scipy.integrate import solve_ivp

from spherecomp.ode import IntegrationError, IntegratorSpec, integrate


def oscillator(w):
    def rhs(t, y):
        return np.stack([y[:, 1], -(w ** 2) * y[:, 0]], axis=1)
    return rhs


def test_dp54_matches_closed_form():
    t = np.linspace(0, np.pi, 129)
    out, stats = integrate(oscillator(1.3), t, [[0.0, 1.0]])
    exact = np.column_stack([np.sin(1.3 * t) / 1.3, np.cos(1.3 * t)])
    assert np.max(np.abs(out[:, 0, :] - exact)) < 1e-9
    assert stats.accepted > 0 and stats.rejected >= 0


def test_dp54_agrees_with_scipy_dop853():
    def rhs(t, y):
        return np.array([y[1], -(1 + 0.3 * np.sin(3 * t)) * y[0] - 0.1 * y[1] ** 3])
    t = np.linspace(0, 4, 41)
    ref = solve_ivp(rhs, (0, 4), [0.2, 1.0], method="DOP853", t_eval=t, rtol=1e-13, atol=1e-13)
    ours, _ = integrate(lambda s, Y: rhs(s, Y[0])[None, :], t, [[0.2, 1.0]])
    assert np.max(np.abs(ours[:, 0, :] - ref.y.T)) < 1e-9


def test_batch_rows_are_independent():
    t = np.linspace(0, 2, 5)
    rhs = oscillator(2.0)
    both, _ = integrate(rhs, t, [[0.0, 1.0], [1.0, 0.0]])
    alone, _ = integrate(rhs, t, [[1.0, 0.0]])
    assert np.max(np.abs(both[:, 1] - alone[:, 0])) < 1e-10


def test_rk4_fallback():
    t = np.linspace(0, np.pi, 65)
    out, _ = integrate(oscillator(1.0), t, [[0.0, 1.0]], IntegratorSpec(method="rk4"))
    assert np.max(np.abs(out[:, 0, 0] - np.sin(t))) < 1e-9


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_step_underflow_is_reported():
    def blowup(t, y):
        return y ** 2
    with pytest.raises(IntegrationError):
        integrate(blowup, [0.0, 2.0], [[1.0]])


def test_post_step_hook_can_rewrite_state():
    calls = []

    def hook(t, y):
        calls.append(t)
        return y
    integrate(oscillator(1.0), [0.0, 1.0], [[0.0, 1.0]], post_step=hook)
    assert calls and calls[-1] == 1.0


@pytest.mark.parametrize("bad", [dict(method="euler"), dict(rtol=0.0), dict(rk4_substeps=0)])
def test_spec_validation(bad):
    with pytest.raises(ValueError):
        IntegratorSpec(**bad)


def test_grid_must_increase():
    with pytest.raises(ValueError):
        integrate(oscillator(1.0), [0.0, 0.0], [[0.0, 1.0]])
