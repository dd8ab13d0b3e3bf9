"""Continuous LTI plant simulated under zero-order-hold control.

The plant obeys ``xdot = A x + B (rho u + Xi x)``, ``y = C x`` where the
matched disturbance ``(rho, Xi)`` is piecewise constant in the step index.
Each disturbance segment is folded into an effective pair and discretized
exactly, so the sampled trajectory carries no integration error.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg
import yaml

from irlmrac.errors import ConfigError, DivergenceError, NumericError

PRESET_DIR = Path(__file__).parent / "presets"


def _matrix(value, name, ndim=2):
    arr = np.array(value, dtype=float)
    if arr.ndim == 1 and ndim == 2:
        raise ConfigError(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    if arr.ndim != ndim:
        raise ConfigError(f"{name} must have {ndim} dimensions, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PlantModel:
    """State-space triple ``(A, B, C)``.

    Units for the bundled aircraft preset: states are angle of attack (rad)
    and pitch rate (rad/s), the input is elevator deflection and the output
    is vertical acceleration (m/s^2).
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = _matrix(self.A, "A")
        B = _matrix(self.B, "B")
        C = _matrix(self.C, "C")
        if A.shape[0] != A.shape[1]:
            raise ConfigError(f"A must be square, got shape {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise ConfigError(f"B must have {A.shape[0]} rows, got shape {B.shape}")
        if C.shape[1] != A.shape[0]:
            raise ConfigError(f"C must have {A.shape[0]} columns, got shape {C.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def p(self):
        return self.C.shape[0]

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(data["A"], data["B"], data["C"])
        except KeyError as exc:
            raise ConfigError(f"plant definition is missing matrix {exc.args[0]}") from None

    def to_dict(self):
        return {"A": self.A.tolist(), "B": self.B.tolist(), "C": self.C.tolist()}


@dataclass(frozen=True, eq=False)
class PlantState:
    x: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        x = np.array(self.x, dtype=float).reshape(-1)
        if not np.all(np.isfinite(x)):
            raise DivergenceError("plant state has non-finite entries")
        if not self.t >= 0.0:
            raise ConfigError(f"time must be non-negative, got {self.t}")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)


@dataclass(frozen=True, eq=False)
class Segment:
    """Disturbance ``(rho, Xi)`` active from ``start_step`` until the next segment."""

    start_step: int
    rho: float = 1.0
    xi: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        xi = np.array(self.xi, dtype=float).reshape(-1)
        xi.setflags(write=False)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "rho", float(self.rho))


class DisturbanceSchedule:
    """Ordered, total map from step index to matched disturbance ``(rho, Xi)``."""

    def __init__(self, segments):
        segments = tuple(s if isinstance(s, Segment) else Segment(**s) for s in segments)
        if not segments:
            raise ConfigError("disturbance schedule is empty")
        if segments[0].start_step != 0:
            raise ConfigError("first disturbance segment must start at step 0, "
                              f"got {segments[0].start_step}")
        starts = [s.start_step for s in segments]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ConfigError(f"disturbance segment starts must increase strictly: {starts}")
        sizes = {s.xi.size for s in segments if s.xi.size}
        if len(sizes) > 1:
            raise ConfigError("disturbance Xi rows have inconsistent lengths")
        for s in segments:
            if s.rho == 0.0 or not np.isfinite(s.rho):
                raise ConfigError(f"rho must be finite and nonzero, got {s.rho}")
            if not np.all(np.isfinite(s.xi)):
                raise ConfigError("Xi has non-finite entries")
        self.segments = segments

    @classmethod
    def identity(cls):
        return cls([Segment(0)])

    @property
    def starts(self):
        return [s.start_step for s in self.segments]

    def index(self, k):
        if k < 0:
            raise ConfigError(f"step index must be non-negative, got {k}")
        return int(np.searchsorted(self.starts, k, side="right")) - 1

    def to_list(self):
        return [{"start_step": s.start_step, "rho": s.rho, "xi": s.xi.tolist()}
                for s in self.segments]


def disturbance_at(schedule, k):
    """Return ``(rho, Xi)`` of the segment containing step ``k``."""
    if not schedule.segments:
        raise ConfigError("disturbance schedule is empty")
    seg = schedule.segments[schedule.index(k)]
    return seg.rho, seg.xi


@dataclass(frozen=True, eq=False)
class DiscretePlant:
    Ad: np.ndarray
    Bd: np.ndarray
    dt: float


def effective_pair(model, disturbance=(1.0, None)):
    """Fold ``(rho, Xi)`` into ``(A + B Xi, rho B)``."""
    rho, xi = disturbance
    A_eff = model.A.copy()
    if xi is not None and np.size(xi):
        xi = np.asarray(xi, dtype=float).reshape(model.m, model.n)
        A_eff = A_eff + model.B @ xi
    return A_eff, float(rho) * model.B


def discretize_zoh(model, disturbance=(1.0, None), dt=0.1):
    """Exact zero-order-hold discretization via the augmented matrix exponential.

    ``expm([[A, B], [0, 0]] dt) = [[Ad, Bd], [0, I]]``; no inverse of ``A`` is
    formed, so singular drift matrices are handled.
    """
    if not dt > 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    A_eff, B_eff = effective_pair(model, disturbance)
    n, m = B_eff.shape
    M = np.zeros((n + m, n + m))
    M[:n, :n] = A_eff * dt
    M[:n, n:] = B_eff * dt
    E = scipy.linalg.expm(M)
    Ad, Bd = E[:n, :n], E[:n, n:]
    if not (np.all(np.isfinite(Ad)) and np.all(np.isfinite(Bd))):
        raise NumericError(f"ZOH discretization produced non-finite entries at dt={dt}")
    return DiscretePlant(Ad, Bd, float(dt))


def step(plant, state, u, k=None):
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if not np.all(np.isfinite(u)):
        raise DivergenceError("control input is not finite", step=k)
    with np.errstate(over="ignore", invalid="ignore"):
        x = plant.Ad @ state.x + plant.Bd @ u
    if not np.all(np.isfinite(x)):
        raise DivergenceError("plant state became non-finite", step=k)
    return PlantState(x, state.t + plant.dt)


def output(model, state):
    y = model.C @ state.x
    return float(y[0]) if y.size == 1 else y


def load_plant(source):
    """Load a plant from a preset name or a YAML file with row-major A, B, C."""
    path = Path(source)
    if not path.suffix:
        path = PRESET_DIR / f"plant_{source}.yaml"
    if not path.is_file():
        raise ConfigError(f"plant preset not found: {source}")
    with open(path) as f:
        data = yaml.safe_load(f)
    return PlantModel.from_dict(data)


def aircraft():
    """Linearized longitudinal aircraft dynamics used by the bundled scenarios."""
    return load_plant("aircraft")


def case2_schedule():
    """Three-segment matched disturbance of the second scenario."""
    return DisturbanceSchedule([
        Segment(0, 0.8052, [-0.2760, -0.0858]),
        Segment(60, 0.5693, [-0.1959, -0.0028]),
        Segment(120, 0.4187, [-0.5324, -0.0002]),
    ])
