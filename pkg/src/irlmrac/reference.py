"""Reference output trajectories.

The square wave is piecewise constant, so its first-order lag is advanced
with the exact exponential solution between switching instants rather than
a sampled filter. Stateful generators only move forward in time.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from irlmrac.errors import ConfigError, OrderingError

KINDS = ("filtered_square", "distorted_square", "constant", "table")
# tolerance on the half-period phase so that t = k*dt lands on the intended side of a switch
_PHASE_EPS = 1e-9


@dataclass(frozen=True)
class ReferenceSpec:
    kind: str = "filtered_square"
    amplitude: float = 30.0                  # m/s^2
    period: float = 6.0                      # s
    filter_time_constant: float = 0.5        # s
    distortion_amplitude_fraction: float = 0.2
    distortion_frequency: float = 0.25       # Hz
    table: tuple = field(default_factory=tuple)
    initial_value: float = None              # None: start on the periodic orbit

    def __post_init__(self):
        object.__setattr__(self, "table", tuple((float(t), float(v)) for t, v in self.table))
        self.validate()

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"reference kind must be one of {KINDS}, got {self.kind!r}")
        for name in ("amplitude", "period", "filter_time_constant",
                     "distortion_amplitude_fraction", "distortion_frequency"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"reference.{name} must be finite")
        if self.amplitude < 0:
            raise ConfigError(f"reference.amplitude must be >= 0, got {self.amplitude}")
        if self.period <= 0:
            raise ConfigError(f"reference.period must be > 0, got {self.period}")
        if self.filter_time_constant < 0:
            raise ConfigError("reference.filter_time_constant must be >= 0, "
                              f"got {self.filter_time_constant}")
        if self.distortion_amplitude_fraction < 0:
            raise ConfigError("reference.distortion_amplitude_fraction must be >= 0")
        if self.initial_value is not None and abs(self.initial_value) > self.amplitude:
            raise ConfigError("reference.initial_value must lie within [-amplitude, amplitude]")
        if self.kind == "table":
            if not self.table:
                raise ConfigError("table reference needs at least one (t, value) row")
            times = [t for t, _ in self.table]
            if any(b <= a for a, b in zip(times, times[1:])):
                raise ConfigError("table reference times must increase strictly")

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        csv_path = data.pop("table_csv", None)
        if csv_path is not None:
            data["table"] = read_table_csv(csv_path)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown reference keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self):
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["table"] = [list(row) for row in self.table]
        return out


def read_table_csv(path):
    """Two-column ``t,value`` CSV; a non-numeric first row is treated as a header."""
    rows = []
    try:
        with open(path, newline="") as f:
            for i, row in enumerate(csv.reader(f)):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except ValueError:
                    if i == 0:
                        continue
                    raise ConfigError(f"{path}: malformed row {i + 1}: {row}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read reference table {path}: {exc}") from None
    return rows


class Reference:
    """Sampler for one ``ReferenceSpec``; single consumer, forward time only."""

    def __init__(self, spec):
        spec.validate()
        self.spec = spec
        self._t = 0.0
        if spec.initial_value is not None:
            self._v = float(spec.initial_value)
        else:
            self._v = self.periodic_start()

    @property
    def stateful(self):
        return self.spec.kind in ("filtered_square", "distorted_square")

    def _half_index(self, t):
        return math.floor(t / (0.5 * self.spec.period) + _PHASE_EPS)

    def raw_square(self, t):
        a = self.spec.amplitude
        return a if self._half_index(t) % 2 == 0 else -a

    def periodic_start(self):
        """Filter output at t=0 on the periodic steady state (start of a high half-period)."""
        a, tau = self.spec.amplitude, self.spec.filter_time_constant
        if tau == 0:
            return a
        q = math.exp(-0.5 * self.spec.period / tau)
        return -a * (1 - q) / (1 + q)

    def _advance(self, t):
        tau = self.spec.filter_time_constant
        if tau == 0:
            self._t, self._v = t, self.raw_square(t)
            return
        half = 0.5 * self.spec.period
        while self._t < t:
            level = self.raw_square(self._t)
            t_switch = (self._half_index(self._t) + 1) * half
            t_next = min(t, t_switch)
            self._v = level + (self._v - level) * math.exp(-(t_next - self._t) / tau)
            self._t = t_next

    def filtered(self, t):
        if t < self._t - 1e-12:
            raise OrderingError(f"reference sampled at t={t} after t={self._t}")
        if t > self._t:
            self._advance(t)
        return self._v

    def sample(self, t):
        if t < 0:
            raise ConfigError(f"reference time must be non-negative, got {t}")
        spec = self.spec
        if spec.kind == "constant":
            return float(spec.amplitude)
        if spec.kind == "table":
            times, values = zip(*spec.table)
            return float(np.interp(t, times, values))
        v = self.filtered(t)
        if spec.kind == "distorted_square":
            v += (spec.distortion_amplitude_fraction * spec.amplitude
                  * math.sin(2 * math.pi * spec.distortion_frequency * t))
        return v


def sample(reference, t):
    return reference.sample(t)
