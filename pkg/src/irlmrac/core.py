"""Actor-critic mathematics of the adaptive controller.

The critic is a quadratic form ``V = 1/2 z' H z`` in ``z = [E; u]`` where
``E = [e(t), e(t-dt), e(t-2dt)]``. The actor is the three-tap gain row
``u = K E``. Greedy gains ``-H_uu^{-1} H_uE`` need no plant model.

All functions are pure: they return new values and never mutate inputs.
"""

from dataclasses import dataclass

import numpy as np

from irlmrac.errors import ConfigError, DivergenceError, SingularCriticError

H_MIN = 1e-6
MODES = ("residual", "as_printed")


@dataclass(frozen=True)
class ErrorWindow:
    e0: float = 0.0
    e1: float = 0.0
    e2: float = 0.0

    @property
    def vector(self):
        return np.array([self.e0, self.e1, self.e2])

    @classmethod
    def from_vector(cls, E):
        e0, e1, e2 = (float(v) for v in E)
        return cls(e0, e1, e2)


def push_error(window, e_new):
    e_new = float(e_new)
    if not np.isfinite(e_new):
        raise DivergenceError(f"tracking error is not finite: {e_new}")
    return ErrorWindow(e_new, window.e0, window.e1)


def _vec(E):
    return E.vector if isinstance(E, ErrorWindow) else np.asarray(E, dtype=float).reshape(3)


def stack(E, u):
    """``z = [E; u]``."""
    return np.append(_vec(E), float(u))


@dataclass(frozen=True, eq=False)
class CostWeights:
    Q: np.ndarray
    R: float = 1.0

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float)
        if Q.shape != (3, 3):
            raise ConfigError(f"cost.Q must be 3x3, got shape {Q.shape}")
        if not np.all(np.isfinite(Q)) or not np.allclose(Q, Q.T, rtol=0, atol=1e-12):
            raise ConfigError("cost.Q must be finite and symmetric")
        if np.linalg.eigvalsh(Q).min() <= 0:
            raise ConfigError("cost.Q must be positive definite")
        if not (np.isfinite(self.R) and self.R > 0):
            raise ConfigError(f"cost.R must be positive, got {self.R}")
        Q.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", float(self.R))

    @classmethod
    def identity(cls):
        return cls(np.eye(3), 1.0)


@dataclass(frozen=True, eq=False)
class CriticWeights:
    """Symmetric 4x4 critic matrix with an enforced floor on ``H_uu``."""

    H: np.ndarray

    def __post_init__(self):
        H = np.array(self.H, dtype=float)
        if H.shape != (4, 4):
            raise ConfigError(f"critic weights must be 4x4, got shape {H.shape}")
        if not np.all(np.isfinite(H)):
            raise DivergenceError("critic weights became non-finite")
        if not np.allclose(H, H.T, rtol=0, atol=1e-12):
            raise ConfigError("critic weights must be symmetric")
        H.setflags(write=False)
        object.__setattr__(self, "H", H)

    @classmethod
    def identity(cls):
        return cls(np.eye(4))

    @property
    def H_EE(self):
        return self.H[:3, :3]

    @property
    def H_Eu(self):
        return self.H[:3, 3]

    @property
    def H_uE(self):
        return self.H[3, :3]

    @property
    def H_uu(self):
        return float(self.H[3, 3])


@dataclass(frozen=True, eq=False)
class ActorGains:
    K: np.ndarray

    def __post_init__(self):
        K = np.array(self.K, dtype=float).reshape(3)
        if not np.all(np.isfinite(K)):
            raise DivergenceError("actor gains became non-finite")
        K.setflags(write=False)
        object.__setattr__(self, "K", K)

    @classmethod
    def zeros(cls):
        return cls(np.zeros(3))


def utility(E, u, w):
    E = _vec(E)
    u = float(u)
    return 0.5 * float(E @ w.Q @ E + u * w.R * u)


def value(critic, E, u):
    z = stack(E, u)
    return 0.5 * float(z @ critic.H @ z)


def policy(actor, E):
    return float(actor.K @ _vec(E))


def greedy_gains(critic, h_min=H_MIN):
    """Gains minimizing the critic over ``u``: ``-H_uE / H_uu``."""
    if not critic.H_uu >= h_min:
        raise SingularCriticError(f"H_uu={critic.H_uu!r} is below the floor {h_min}")
    return ActorGains(-critic.H_uE / critic.H_uu)


def critic_target(U_int, V_next):
    return float(U_int) + float(V_next)


def bellman_residual(critic, E, u, target):
    return value(critic, E, u) - target


def _finish_critic(H, h_min):
    H = 0.5 * (H + H.T)
    if not np.all(np.isfinite(H)):
        raise DivergenceError("critic update produced non-finite weights")
    if H[3, 3] < h_min:
        H[3, 3] = h_min
    return CriticWeights(H)


def update_critic(critic, E, u, target, rate, mode="residual", normalize=False, h_min=H_MIN):
    """One gradient step of the critic toward ``target``.

    ``residual`` steps along ``-delta z z'`` with ``delta = V(E, u) - target``;
    ``as_printed`` replaces ``delta`` by ``delta**2 / 2``. With ``normalize``
    the step is divided by ``(1 + z'z)**2`` which keeps the change in ``V(z)``
    below ``rate * |delta| / 2`` however large the errors are.
    """
    if not 0 <= rate < 1:
        raise ConfigError(f"critic rate must lie in [0, 1), got {rate}")
    if mode not in MODES:
        raise ConfigError(f"update mode must be one of {MODES}, got {mode!r}")
    z = stack(E, u)
    delta = value(critic, E, u) - float(target)
    scale = delta if mode == "residual" else 0.5 * delta * delta
    if normalize:
        scale /= (1.0 + z @ z) ** 2
    return _finish_critic(critic.H - rate * scale * np.outer(z, z), h_min)


def update_actor(actor, u_hat, E, critic, rate, mode="residual", normalize=False, h_min=H_MIN):
    """One gradient step of the actor toward the critic's greedy control at ``E``."""
    if not 0 <= rate < 1:
        raise ConfigError(f"actor rate must lie in [0, 1), got {rate}")
    if mode not in MODES:
        raise ConfigError(f"update mode must be one of {MODES}, got {mode!r}")
    E = _vec(E)
    u_target = float(greedy_gains(critic, h_min).K @ E)
    diff = float(u_hat) - u_target
    scale = diff if mode == "residual" else 0.5 * diff * diff
    if normalize:
        scale /= 1.0 + E @ E
    return ActorGains(actor.K - rate * scale * E)


def check_convergence(critic_history, window, tol):
    """True when the last ``window + 1`` successive critic changes are all within ``tol``."""
    if window < 1 or not tol > 0:
        raise ConfigError("convergence window must be >= 1 and tolerance > 0")
    if len(critic_history) < window + 2:
        return False
    recent = [np.asarray(getattr(h, "H", h)) for h in critic_history[-(window + 2):]]
    return all(np.linalg.norm(b - a) <= tol for a, b in zip(recent, recent[1:]))
