import math

import numpy as np
import pytest

from irlmrac.errors import ConfigError, UnboundedCostError
from irlmrac.oracle import fd_gradient, rk4_propagate, rollout_cost
from irlmrac.plant import PlantModel, PlantState, aircraft, discretize_zoh, case2_schedule, step
from irlmrac.reference import ReferenceSpec

ZERO_REF = ReferenceSpec(kind="constant", amplitude=0.0)
SCALAR = PlantModel([[-1.0]], [[1.0]], [[1.0]])


def test_fd_gradient_examples():
    w = np.array([[1.0, -2.0], [0.5, 3.0]])
    np.testing.assert_array_equal(fd_gradient(lambda v: 7.0, w), np.zeros_like(w))
    np.testing.assert_allclose(fd_gradient(lambda v: 0.5 * np.sum(v * v), w, eps=1e-4), w,
                               rtol=0, atol=1e-8)
    with pytest.raises(ConfigError):
        fd_gradient(lambda v: 0.0, w, eps=1e-2)


def test_rk4_zero_drift_exact():
    m = PlantModel(np.zeros((2, 2)), [[1.0], [-2.0]], [[1.0, 0.0]])
    s = rk4_propagate(m, (0.5, None), [1.0, 1.0], 2.0, 0.1, 0.01)
    np.testing.assert_allclose(s.x, [1.0 + 0.1, 1.0 - 0.2], rtol=0, atol=1e-14)


def test_rk4_diagonal_matches_exponentials():
    m = PlantModel(np.diag([-1.0, -2.0]), [[0.0], [0.0]], [[1.0, 0.0]])
    s = rk4_propagate(m, (1.0, None), [1.0, 1.0], 0.0, 0.1, 1e-3)
    np.testing.assert_allclose(s.x, [math.exp(-0.1), math.exp(-0.2)], rtol=0, atol=1e-10)


@pytest.mark.parametrize("seg", [None, *case2_schedule().segments])
def test_rk4_agrees_with_zoh(seg):
    m = aircraft()
    dist = (1.0, None) if seg is None else (seg.rho, seg.xi)
    x0 = PlantState([0.01, -0.02])
    a = rk4_propagate(m, dist, x0, 0.3, 0.1, 1e-4).x
    b = step(discretize_zoh(m, dist, 0.1), x0, 0.3).x
    assert np.linalg.norm(a - b) <= 1e-8 * np.linalg.norm(b)


def test_rk4_fourth_order():
    m = aircraft()
    x0 = PlantState([0.01, 0.0])
    exact = step(discretize_zoh(m, (1.0, None), 0.1), x0, 0.2).x
    err = [np.linalg.norm(rk4_propagate(m, (1.0, None), x0, 0.2, 0.1, h).x - exact)
           for h in (0.01, 0.005)]
    assert 12 < err[0] / err[1] < 20


def test_rk4_rejects_coarse_substep():
    with pytest.raises(ConfigError):
        rk4_propagate(aircraft(), (1.0, None), [0, 0], 0.0, 0.1, 0.05)


def test_rollout_zero_everything():
    J = rollout_cost(aircraft(), np.zeros(3), ZERO_REF, [0.0, 0.0], 5.0, 1e-3,
                     np.eye(3), 1.0)
    assert J == 0.0


@pytest.mark.parametrize("T", [0.5, 2.0, 8.0])
def test_rollout_scalar_closed_form(T):
    # U = e(t)^2 / 2 with e = exp(-t): integral 1/4 (1 - exp(-2T))
    J = rollout_cost(SCALAR, np.zeros(3), ZERO_REF, [1.0], T, 1e-4,
                     np.diag([1.0, 0.0, 0.0]), 1.0)
    assert J == pytest.approx(0.25 * (1 - math.exp(-2 * T)), rel=2e-4)


def test_rollout_monotone_in_horizon():
    K = [-0.2, 0.1, 0.0]
    costs = [rollout_cost(aircraft(), K, ReferenceSpec(amplitude=5.0), [0.0, 0.0], T, 1e-3,
                          np.eye(3), 1.0) for T in (0.5, 1.0, 2.0, 4.0)]
    assert all(b >= a for a, b in zip(costs, costs[1:]))
    assert costs[0] > 0


def test_rollout_unbounded_raises():
    unstable = PlantModel([[1.0]], [[1.0]], [[1.0]])
    with pytest.raises(UnboundedCostError):
        rollout_cost(unstable, [5.0, 0, 0], ZERO_REF, [1.0], 60.0, 1e-2,
                     np.eye(3), 1.0)
