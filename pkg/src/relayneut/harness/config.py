"""Experiment configuration for Monte Carlo power sweeps."""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

ALGORITHMS = ("effin", "optin", "repeater-fs", "repeater-os", "ic-fs", "ic-os")
AXES = ("relay_power_db", "tx_power_db")
DISTRIBUTIONS = ("uniform01", "complex_gaussian")
FORMATS = ("csv", "json")

_AXIS_ALIASES = {"relay": "relay_power_db", "tx": "tx_power_db"}
_DIST_ALIASES = {"cgauss": "complex_gaussian"}


class ConfigError(ValueError):
    pass


def parse_db_range(text):
    """``"a:b:step"`` to the inclusive grid ``a, a+step, ..., b``."""
    try:
        parts = [float(x) for x in text.split(":")]
    except ValueError as exc:
        raise ConfigError(f"bad dB range {text!r}; expected a:b:step") from exc
    if len(parts) == 1:
        return (parts[0],)
    if len(parts) != 3:
        raise ConfigError(f"bad dB range {text!r}; expected a:b:step")
    a, b, step = parts
    if step <= 0 or b < a:
        raise ConfigError(f"bad dB range {text!r}; need step > 0 and b >= a")
    n = int(np.floor((b - a) / step + 1e-9)) + 1
    return tuple(float(a + k * step) for k in range(n))


@dataclass(frozen=True)
class ExperimentConfig:
    K: int = 2
    M: int = 8
    N: int = 2
    sweep: str = "relay_power_db"
    values: tuple = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    tx_db: float = 10.0
    relay_db: float = 30.0
    algorithms: tuple = ALGORITHMS
    trials: int = 100
    seed: int = 0
    distribution: str = "uniform01"
    output: str = None
    format: str = "csv"
    streams: tuple = None
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "sweep", _AXIS_ALIASES.get(self.sweep, self.sweep))
        object.__setattr__(self, "distribution",
                           _DIST_ALIASES.get(self.distribution, self.distribution))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        self.validate()

    def validate(self):
        if not self.algorithms:
            raise ConfigError("no algorithms selected")
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown:
            raise ConfigError(f"unknown algorithms {unknown}; choose from {list(ALGORITHMS)}")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ConfigError("duplicate algorithms")
        if self.sweep not in AXES:
            raise ConfigError(f"sweep axis must be one of {AXES}, got {self.sweep!r}")
        if not self.values:
            raise ConfigError("empty sweep")
        if any(b < a for a, b in zip(self.values, self.values[1:])):
            raise ConfigError("sweep values must be sorted ascending")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ConfigError("trials must be a positive integer")
        if self.K < 2 or self.M < 1 or self.N < 1:
            raise ConfigError("need K >= 2, M >= 1, N >= 1")
        if self.distribution not in DISTRIBUTIONS:
            raise ConfigError(f"distribution must be one of {DISTRIBUTIONS}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")

    def point_powers(self, db):
        """``(tx_db, relay_db)`` at one sweep value."""
        if self.sweep == "relay_power_db":
            return self.tx_db, db
        return db, self.relay_db

    def to_dict(self):
        d = asdict(self)
        d["values"] = list(self.values)
        d["algorithms"] = list(self.algorithms)
        d["streams"] = None if self.streams is None else list(self.streams)
        return d

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path):
        try:
            doc = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(doc)
