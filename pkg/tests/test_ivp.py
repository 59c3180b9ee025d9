import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from varcalc.ivp import IVPProblem, integrate_ivp


def test_exponential():
    sol = integrate_ivp(IVPProblem(lambda t, y: y, 0.0, 1.0, [1.0], tol=1e-10))
    assert sol.status == "completed"
    assert abs(sol.ys[-1, 0] - math.e) < 1e-9
    assert sol.ts[-1] == 1.0 and sol.t_stop == 1.0


def test_blow_up():
    sol = integrate_ivp(IVPProblem(lambda t, y: y * y, 0.0, 2.0, [1.0], blow_up_threshold=1e6, tol=1e-10))
    assert sol.status == "blew_up"
    assert abs(sol.t_stop - 1.0) < 1e-3
    assert abs(sol.ys[-1, 0]) > 1e6


def test_constant():
    sol = integrate_ivp(IVPProblem(lambda t, y: np.zeros_like(y), 0.0, 3.0, [2.5, -1.0]))
    assert sol.status == "completed"
    assert np.all(sol.ys == np.array([2.5, -1.0]))


def test_harmonic_oscillator_against_scipy():
    rhs = lambda t, y: np.array([y[1], -y[0]])
    sol = integrate_ivp(IVPProblem(rhs, 0.0, 10.0, [1.0, 0.0], tol=1e-11))
    ref = solve_ivp(rhs, (0.0, 10.0), [1.0, 0.0], method="DOP853", rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(sol.ys[-1], ref.y[:, -1], atol=1e-8)
    np.testing.assert_allclose(sol.ys[-1], [math.cos(10.0), -math.sin(10.0)], atol=1e-8)


def test_dense_output():
    sol = integrate_ivp(IVPProblem(lambda t, y: y, 0.0, 1.0, [1.0], tol=1e-12))
    t = np.linspace(0.0, 1.0, 101)
    assert np.max(np.abs(sol(t)[0] - np.exp(t))) < 1e-7
    assert np.max(np.abs(sol.derivative(t)[0] - np.exp(t))) < 1e-5
    assert sol(sol.ts[3])[0] == pytest.approx(sol.ys[3, 0], abs=1e-15)


def test_fixed_step_order():
    """Global error ratio for halved steps is ~2^5 for the fifth-order solution."""
    p = IVPProblem(lambda t, y: -2 * t * y, 0.0, 1.0, [1.0])
    exact = math.exp(-1.0)
    errs = [abs(integrate_ivp(p, fixed_step=h).ys[-1, 0] - exact) for h in (0.1, 0.05)]
    assert 20 < errs[0] / errs[1] < 45


def test_tolerance_controls_error():
    p_loose = IVPProblem(lambda t, y: np.cos(t) * y, 0.0, 5.0, [1.0], tol=1e-6)
    p_tight = IVPProblem(lambda t, y: np.cos(t) * y, 0.0, 5.0, [1.0], tol=1e-12)
    exact = math.exp(math.sin(5.0))
    e_loose = abs(integrate_ivp(p_loose).ys[-1, 0] - exact)
    e_tight = abs(integrate_ivp(p_tight).ys[-1, 0] - exact)
    assert e_tight < 1e-10 and e_tight < e_loose


def test_max_step_respected():
    sol = integrate_ivp(IVPProblem(lambda t, y: np.zeros_like(y), 0.0, 1.0, [0.0]), max_step=0.01)
    assert np.max(np.diff(sol.ts)) <= 0.01 + 1e-15
    assert np.all(np.diff(sol.ts) > 0)


def test_exit_when():
    sol = integrate_ivp(
        IVPProblem(lambda t, y: np.ones_like(y), 0.0, 10.0, [0.0]), exit_when=lambda t, y: y[0] > 2.0, max_step=0.1
    )
    assert sol.status == "exited"
    # the step that left the region is discarded: the last state is still inside
    assert 1.9 - 1e-12 <= sol.ys[-1, 0] <= 2.0
    assert sol.t_stop == sol.ts[-1]


def test_step_failure_on_nan():
    def rhs(t, y):
        return np.array([np.nan]) if t > 0.5 else np.array([1.0])

    sol = integrate_ivp(IVPProblem(rhs, 0.0, 1.0, [0.0]))
    assert sol.status == "step_failure"
    assert sol.t_stop <= 0.5 + 1e-6
    assert sol.message


@pytest.mark.parametrize("kw", [dict(t0=1.0, t_end=0.0), dict(tol=1e-2), dict(tol=1e-16), dict(blow_up_threshold=0.0)])
def test_problem_validation(kw):
    args = dict(rhs=lambda t, y: y, t0=0.0, t_end=1.0, y0=[1.0])
    args.update(kw)
    with pytest.raises(ValueError):
        IVPProblem(**args)


def test_deterministic():
    p = IVPProblem(lambda t, y: np.array([y[1], -np.sin(y[0])]), 0.0, 4.0, [1.0, 0.0])
    a, b = integrate_ivp(p), integrate_ivp(p)
    assert np.array_equal(a.ts, b.ts) and np.array_equal(a.ys, b.ys)
