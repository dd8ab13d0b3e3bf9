"""Episode runner: reference, plant and adaptive controller wired together.

The controller only ever receives the measured output ``y`` and the reference
``y_ref``. The plant matrices live in :class:`PlantSimulator`, which the loop
treats as an opaque ``apply(u) -> y`` device.
"""

import csv
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from irlmrac import core
from irlmrac.core import ActorGains, CostWeights, CriticWeights, ErrorWindow
from irlmrac.errors import ConfigError, DivergenceError, MracError
from irlmrac.plant import (
    DisturbanceSchedule,
    PlantModel,
    PlantState,
    aircraft,
    discretize_zoh,
    output,
    step,
)
from irlmrac.reference import Reference, ReferenceSpec

CSV_VERSION = 1
QUADRATURES = ("left", "trapezoid")


@dataclass
class ExperimentConfig:
    name: str = "custom"
    steps: int = 180
    dt: float = 0.1
    actor_rate: float = 0.5
    critic_rate: float = 0.5
    cost: CostWeights = field(default_factory=CostWeights.identity)
    tol: float = 1e-8
    window: int = 10
    plant: PlantModel = field(default_factory=aircraft)
    plant_preset: str = "aircraft"
    x0: np.ndarray = None
    disturbance: DisturbanceSchedule = field(default_factory=DisturbanceSchedule.identity)
    reference: ReferenceSpec = field(default_factory=ReferenceSpec)
    mode: str = "residual"
    normalize: bool = True
    h_min: float = core.H_MIN
    critic_init: np.ndarray = None
    actor_init: np.ndarray = None
    quadrature: str = "left"
    seed: int = 0
    divergence_limit: float = 1e9

    def __post_init__(self):
        if self.x0 is None:
            self.x0 = np.zeros(self.plant.n)
        if self.critic_init is None:
            self.critic_init = np.eye(4)
        if self.actor_init is None:
            self.actor_init = np.zeros(3)
        self.x0 = np.array(self.x0, dtype=float).reshape(-1)
        self.critic_init = np.array(self.critic_init, dtype=float)
        self.actor_init = np.array(self.actor_init, dtype=float).reshape(-1)

    def validate(self):
        """Raise :class:`ConfigError` naming the first violated bound."""
        if not (isinstance(self.steps, (int, np.integer)) and self.steps >= 1):
            raise ConfigError(f"steps (N) must be an integer >= 1, got {self.steps!r}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigError(f"dt (Delta) must be > 0, got {self.dt!r}")
        for name, symbol in (("actor_rate", "zeta_a"), ("critic_rate", "zeta_c")):
            rate = getattr(self, name)
            if not 0 < rate < 1:
                raise ConfigError(f"{name} ({symbol}) must satisfy 0 < {symbol} < 1, got {rate!r}")
        if not self.tol > 0:
            raise ConfigError(f"convergence.tol (delta) must be > 0, got {self.tol!r}")
        if not (isinstance(self.window, (int, np.integer)) and self.window >= 1):
            raise ConfigError(f"convergence.window (L) must be an integer >= 1, got {self.window!r}")
        if self.plant.p != 1 or self.plant.m != 1:
            raise ConfigError("plant must be single-input single-output")
        if self.x0.shape != (self.plant.n,) or not np.all(np.isfinite(self.x0)):
            raise ConfigError(f"plant.x0 must be a finite vector of length {self.plant.n}")
        for seg in self.disturbance.segments:
            if seg.xi.size not in (0, self.plant.n):
                raise ConfigError(f"disturbance Xi must have {self.plant.n} entries")
        self.reference.validate()
        if self.mode not in core.MODES:
            raise ConfigError(f"update.mode must be one of {core.MODES}, got {self.mode!r}")
        if not self.h_min > 0:
            raise ConfigError(f"update.h_min must be > 0, got {self.h_min!r}")
        critic = CriticWeights(self.critic_init)
        if critic.H_uu < self.h_min:
            raise ConfigError("init.critic H_uu is below update.h_min")
        ActorGains(self.actor_init)
        if self.quadrature not in QUADRATURES:
            raise ConfigError(f"quadrature must be one of {QUADRATURES}, got {self.quadrature!r}")
        if not self.divergence_limit > 0:
            raise ConfigError("divergence_limit must be > 0")
        return self


@dataclass(frozen=True)
class StepRecord:
    k: int
    t: float
    y_ref: float
    y: float
    e: float
    u: float
    K0: float
    K1: float
    K2: float
    Kg0: float
    Kg1: float
    Kg2: float
    V: float
    U: float
    bellman_residual: float
    critic_change: float

    @property
    def K(self):
        return np.array([self.K0, self.K1, self.K2])

    @property
    def greedy_K(self):
        return np.array([self.Kg0, self.Kg1, self.Kg2])


COLUMNS = [f.name for f in fields(StepRecord)]


@dataclass(frozen=True)
class Status:
    kind: str               # converged | max_steps | diverged
    step: int = None

    def __str__(self):
        if self.kind == "converged":
            return f"converged_at({self.step})"
        if self.kind == "diverged":
            return f"diverged({self.step})"
        return "max_steps"

    @classmethod
    def parse(cls, text):
        text = text.strip()
        if text == "max_steps":
            return cls("max_steps")
        for kind, prefix in (("converged", "converged_at("), ("diverged", "diverged(")):
            if text.startswith(prefix) and text.endswith(")"):
                return cls(kind, int(text[len(prefix):-1]))
        raise ValueError(f"unrecognised status {text!r}")


@dataclass
class TrajectoryLog:
    records: list
    status: Status
    dt: float = 0.1
    window: int = 10
    tol: float = 1e-8
    segment_starts: list = field(default_factory=lambda: [0])
    states: np.ndarray = None       # plant ground truth, never seen by the controller
    critic_history: list = None
    final_critic: CriticWeights = None
    final_actor: ActorGains = None

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])


@dataclass(frozen=True)
class Transition:
    """What the controller learned from one sample interval."""

    E: np.ndarray
    u: float
    K: np.ndarray
    greedy_K: np.ndarray
    V: float
    U: float
    residual: float
    critic_change: float
    converged: bool


class MracController:
    """Adaptive actor-critic controller fed only with ``(y, y_ref)`` samples."""

    def __init__(self, cfg):
        self.dt = cfg.dt
        self.weights = cfg.cost
        self.actor_rate = cfg.actor_rate
        self.critic_rate = cfg.critic_rate
        self.mode = cfg.mode
        self.normalize = cfg.normalize
        self.h_min = cfg.h_min
        self.quadrature = cfg.quadrature
        self.window_len = cfg.window
        self.tol = cfg.tol
        self.critic = CriticWeights(cfg.critic_init)
        self.actor = ActorGains(cfg.actor_init)
        self.history = [self.critic.H]
        self.k = 0
        self.converged_at = None
        self.E = None
        self.u = None

    @property
    def frozen(self):
        return self.converged_at is not None

    def reset(self, y, y_ref):
        # window padded with zeros before the first two samples
        self.E = ErrorWindow(y - y_ref)
        self.u = core.policy(self.actor, self.E)
        return self.u

    def _greedy(self):
        try:
            return core.greedy_gains(self.critic, self.h_min).K
        except MracError:
            return np.full(3, np.nan)

    def observe(self, y, y_ref):
        """Consume ``y((k+1)dt)`` and ``y_ref((k+1)dt)``; adapt; return the transition at k."""
        E, u = self.E, self.u
        E_next = core.push_error(E, y - y_ref)
        V = core.value(self.critic, E, u)
        U = core.utility(E, u, self.weights)
        u_next = core.policy(self.actor, E_next)
        V_next = core.value(self.critic, E_next, u_next)
        if self.quadrature == "trapezoid":
            U_int = 0.5 * (U + core.utility(E_next, u_next, self.weights)) * self.dt
        else:
            U_int = U * self.dt
        target = core.critic_target(U_int, V_next)
        residual = V - target
        K_used, greedy = self.actor.K, self._greedy()
        change = 0.0
        if not self.frozen:
            critic = core.update_critic(self.critic, E, u, target, self.critic_rate,
                                        self.mode, self.normalize, self.h_min)
            self.actor = core.update_actor(self.actor, u, E, critic, self.actor_rate,
                                           self.mode, self.normalize, self.h_min)
            change = float(np.linalg.norm(critic.H - self.critic.H))
            self.critic = critic
            self.history.append(critic.H)
            if self.k > self.window_len and core.check_convergence(
                    self.history, self.window_len, self.tol):
                self.converged_at = self.k
        self.E = E_next
        self.u = core.policy(self.actor, E_next)
        self.k += 1
        return Transition(E.vector, u, K_used, greedy, V, U, residual, change,
                          self.converged_at is not None)


class PlantSimulator:
    """Ground-truth plant under ZOH with a scheduled matched disturbance."""

    def __init__(self, model, schedule, dt, x0):
        self.model = model
        self.schedule = schedule
        self.dt = dt
        self.state = PlantState(x0)
        self.k = 0
        self._cache = {}
        self.states = [self.state.x]

    def _discrete(self, k):
        i = self.schedule.index(k)
        if i not in self._cache:
            seg = self.schedule.segments[i]
            self._cache[i] = discretize_zoh(self.model, (seg.rho, seg.xi), self.dt)
        return self._cache[i]

    def output(self):
        return output(self.model, self.state)

    def apply(self, u):
        self.state = step(self._discrete(self.k), self.state, u, k=self.k)
        self.k += 1
        self.states.append(self.state.x)
        return self.output()


def _check_magnitude(values, limit, k):
    for v in values:
        if not (math.isfinite(v) and abs(v) <= limit):
            raise DivergenceError(f"logged magnitude {v!r} exceeds {limit:g}", step=k)


def simulate(controller, plant, reference, steps, dt, limit=1e9):
    """Run the adaptation loop; returns ``(records, status)``."""
    records = []
    y = plant.output()
    y_ref = reference.sample(0.0)
    status = Status("max_steps")
    try:
        u = controller.reset(y, y_ref)
        for k in range(steps):
            y_next = plant.apply(u)
            y_ref_next = reference.sample((k + 1) * dt)
            tr = controller.observe(y_next, y_ref_next)
            rec = StepRecord(k, k * dt, y_ref, y, y - y_ref, tr.u,
                             *map(float, tr.K), *map(float, tr.greedy_K),
                             tr.V, tr.U, tr.residual, tr.critic_change)
            _check_magnitude((rec.y, rec.u, rec.V, rec.bellman_residual,
                              *rec.K, *controller.critic.H.ravel(), y_next), limit, k)
            records.append(rec)
            if tr.converged and status.kind == "max_steps":
                status = Status("converged", k)
            y, y_ref, u = y_next, y_ref_next, controller.u
    except DivergenceError as exc:
        status = Status("diverged", exc.step if exc.step is not None else len(records))
    return records, status


def run_episode(cfg):
    """Execute one adaptation episode; configuration errors raise before any stepping."""
    cfg.validate()
    plant = PlantSimulator(cfg.plant, cfg.disturbance, cfg.dt, cfg.x0)
    controller = MracController(cfg)
    reference = Reference(cfg.reference)
    records, status = simulate(controller, plant, reference, cfg.steps, cfg.dt,
                               cfg.divergence_limit)
    return TrajectoryLog(
        records=records,
        status=status,
        dt=cfg.dt,
        window=cfg.window,
        tol=cfg.tol,
        segment_starts=cfg.disturbance.starts,
        states=np.array(plant.states),
        critic_history=controller.history,
        final_critic=controller.critic,
        final_actor=controller.actor,
    )


def settling_step(changes, window, tol):
    """First k > window whose last ``window + 1`` critic changes are all within ``tol``."""
    changes = np.asarray(changes, dtype=float)
    for k in range(window + 1, changes.size):
        if np.all(changes[k - window:k + 1] <= tol):
            return k
    return None


def _mean_abs(values):
    values = np.asarray(values, dtype=float)
    return float(np.mean(np.abs(values))) if values.size else float("nan")


def metrics(log):
    """Summary statistics of a trajectory log."""
    if not log.records:
        raise ConfigError("cannot summarise an empty log")
    e = log.column("e")
    n = len(e)
    final = max(1, math.ceil(0.1 * n))
    segments = []
    starts = [s for s in log.segment_starts if s < n]
    for i, start in enumerate(starts):
        end = starts[i + 1] if i + 1 < len(starts) else n
        seg = e[start:end]
        segments.append({
            "start_step": int(start),
            "end_step": int(end - 1),
            "mean_abs_error": _mean_abs(seg),
            "mean_abs_error_first10": _mean_abs(seg[:10]),
            "mean_abs_error_last10": _mean_abs(seg[-10:]),
        })
    return {
        "status": str(log.status),
        "records": n,
        "settling_step": settling_step(log.column("critic_change"), log.window, log.tol),
        "mean_abs_error_final": _mean_abs(e[-final:]),
        "max_abs_control": float(np.max(np.abs(log.column("u")))),
        "mean_abs_residual_final": _mean_abs(log.column("bellman_residual")[-20:]),
        "final_gains": [float(v) for v in log.records[-1].K],
        "segments": segments,
    }


def write_csv(log, path):
    with open(path, "w", newline="") as f:
        f.write(f"# irlmrac trajectory v{CSV_VERSION} status={log.status}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(COLUMNS)
        for rec in log.records:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in asdict(rec).values()])


def read_csv(path):
    """Parse a trajectory CSV back into ``(records, status)``."""
    status = None
    with open(path, newline="") as f:
        lines = f.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            if "status=" in line:
                status = Status.parse(line.split("status=", 1)[1])
            continue
        body.append(line)
    reader = csv.reader(body)
    header = next(reader)
    if header != COLUMNS:
        raise ValueError(f"unexpected trajectory columns: {header}")
    records = [StepRecord(int(row[0]), *map(float, row[1:])) for row in reader]
    return records, status
