"""Golden replay of the two-user, two-subcarrier example instance."""

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from ..channel import RelayMatrix, read_fixture
from ..neutralize import build_system, solve_min_norm
from ..rates import secrecy_report

RELAY_NAMES = ("min_norm", "min_norm_block_diagonal", "null_space_member")


def table1_path():
    return Path(resources.files("relayneut") / "data" / "table1.json")


@dataclass(frozen=True)
class ReplayRow:
    name: str
    expected: float
    computed: float
    relay_power: float

    @property
    def delta(self):
        return self.computed - self.expected


@dataclass(frozen=True)
class ReplayReport:
    rows: tuple
    min_norm_max_entry_error: float
    tolerance: float

    @property
    def passed(self):
        return (self.min_norm_max_entry_error <= self.tolerance
                and all(abs(r.delta) <= self.tolerance for r in self.rows))

    def format(self):
        lines = [f"{'relay':<26}{'expected':>10}{'computed':>12}{'delta':>11}{'power':>10}"]
        for r in self.rows:
            lines.append(f"{r.name:<26}{r.expected:>10.4f}{r.computed:>12.6f}"
                         f"{r.delta:>+11.2e}{r.relay_power:>10.3f}")
        lines.append(f"recomputed min-norm relay vs printed: max entry error "
                     f"{self.min_norm_max_entry_error:.2e}")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


def replay_table1(fixture=None):
    """Recompute the min-norm relay and the three printed designs' sum secrecy."""
    fx = read_fixture(table1_path() if fixture is None else fixture)
    ch, p = fx.channels, fx.precoders
    if p is None:
        raise ValueError("fixture carries no precoders")
    expected = fx.expected.get("sum_secrecy", {})
    tol = float(fx.expected.get("tolerance", 1e-3))
    rows = []
    for name in RELAY_NAMES:
        if name not in fx.relays:
            continue
        rep = secrecy_report(ch, RelayMatrix(fx.relays[name], ch.M), p)
        rows.append(ReplayRow(name, float(expected.get(name, np.nan)), rep.sum_secrecy,
                              rep.relay_power_used))
    err = np.nan
    if "min_norm" in fx.relays:
        R = solve_min_norm(build_system(ch, p)).matrix
        err = float(np.max(np.abs(R - fx.relays["min_norm"])))
    return ReplayReport(tuple(rows), err, tol)
