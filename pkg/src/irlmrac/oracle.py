"""Brute-force references used to check the fast paths.

Nothing here touches the ZOH discretization or the controller update laws:
plants are integrated with fixed-step RK4 and costs are summed on a fine grid.
"""

import math

import numpy as np

from irlmrac.errors import ConfigError, UnboundedCostError
from irlmrac.plant import PlantState, effective_pair
from irlmrac.reference import Reference

MAX_HORIZON = 60.0
U_CUTOFF = 1e-10
COST_LIMIT = 1e12


def _substeps(dt, substep):
    n = int(round(dt / substep))
    if n < 1 or abs(n * substep - dt) > 1e-9 * dt:
        raise ConfigError(f"substep {substep} must divide dt {dt}")
    return n


def _rk4(A, b, x, h, n):
    """``n`` classical RK4 steps of ``xdot = A x + b`` with constant ``b``."""
    for _ in range(n):
        k1 = A @ x + b
        k2 = A @ (x + 0.5 * h * k1) + b
        k3 = A @ (x + 0.5 * h * k2) + b
        k4 = A @ (x + h * k3) + b
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def rk4_propagate(model, disturbance, x0, u, dt, substep):
    """Integrate the plant over ``dt`` with the input held at ``u``."""
    if substep > dt / 10 + 1e-15:
        raise ConfigError(f"substep must be at most dt/10, got {substep} for dt={dt}")
    n = _substeps(dt, substep)
    A_eff, B_eff = effective_pair(model, disturbance)
    x0 = x0 if isinstance(x0, PlantState) else PlantState(x0)
    b = B_eff @ np.atleast_1d(np.asarray(u, dtype=float))
    return PlantState(_rk4(A_eff, b, x0.x, dt / n, n), x0.t + dt)


def fd_gradient(loss, weights, eps=1e-6):
    """Central-difference gradient of a scalar ``loss`` over every entry of ``weights``."""
    if not 1e-8 <= eps <= 1e-4:
        raise ConfigError(f"eps must lie in [1e-8, 1e-4], got {eps}")
    w = np.array(weights, dtype=float)
    grad = np.zeros_like(w)
    flat, g = w.reshape(-1), grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        up = loss(w.copy())
        flat[i] = orig - eps
        down = loss(w.copy())
        flat[i] = orig
        g[i] = (up - down) / (2 * eps)
    return grad


def rollout_cost(model, gains, ref, x0, horizon, dt_fine, Q, R, dt=0.1,
                 error_history=(0.0, 0.0), disturbance=(1.0, None)):
    """Truncated infinite-horizon cost of a frozen three-tap policy.

    The control is recomputed every ``dt`` from sampled errors and held in
    between, while the plant and the integrand are advanced every ``dt_fine``.
    The integrand uses the continuous window ``[e(t), e(t-dt), e(t-2dt)]``;
    before time zero the error is interpolated linearly through
    ``error_history = (e(-dt), e(-2dt))``. Integration stops at ``horizon``,
    at 60 s, or once the instantaneous utility falls below 1e-10.
    """
    if dt_fine > dt / 10 + 1e-15:
        raise ConfigError(f"dt_fine must be at most dt/10, got {dt_fine}")
    n = _substeps(dt, dt_fine)
    K = np.asarray(getattr(gains, "K", gains), dtype=float).reshape(3)
    Q = np.asarray(Q, dtype=float)
    A_eff, B_eff = effective_pair(model, disturbance)
    spec = getattr(ref, "spec", ref)
    reference = Reference(spec)
    x = (x0 if isinstance(x0, PlantState) else PlantState(x0)).x.copy()
    C = model.C[0]

    def err(t):
        return float(C @ x) - reference.sample(t)

    e1, e2 = error_history
    e = err(0.0)
    # fine-grid error buffer covering [-2dt, t]
    buf = list(np.interp(np.arange(-2 * n, 0) * dt_fine, [-2 * dt, -dt, 0.0], [e2, e1, e]))
    sampled = [e, e1, e2]
    u = float(K @ sampled)
    steps = int(math.ceil(min(horizon, MAX_HORIZON) / dt_fine - 1e-9))
    J = 0.0
    for i in range(steps):
        t = i * dt_fine
        if i:
            e = err(t)
            if i % n == 0:
                sampled = [e, sampled[0], sampled[1]]
                u = float(K @ sampled)
        buf.append(e)
        window = np.array([e, buf[-1 - n], buf[-1 - 2 * n]])
        U = 0.5 * float(window @ Q @ window + R * u * u)
        if not math.isfinite(U) or J > COST_LIMIT:
            raise UnboundedCostError(f"rollout cost diverged at t={t:.4f}")
        if U < U_CUTOFF:
            break
        J += U * dt_fine
        x = _rk4(A_eff, B_eff[:, 0] * u, x, dt_fine, 1)
    return J
