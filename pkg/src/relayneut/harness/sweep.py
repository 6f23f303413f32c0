"""Seeded, paired Monte Carlo sweeps over a transmit or relay power axis."""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..baselines import baseline_report
from ..channel import Scenario, generate_channels
from ..effin import effin
from ..optin import optin


@dataclass(frozen=True)
class PointStats:
    algorithm: str
    sweep_db: float
    mean_sum_secrecy: float
    stderr: float
    feasible_frac: float
    mean_relay_power: float
    trials: int
    seed: int
    wall_time: float = 0.0


@dataclass
class SweepResult:
    config: object
    rows: list
    samples: dict = field(default_factory=dict)    # (algorithm, db) -> per-trial secrecy
    feasible: dict = field(default_factory=dict)   # (algorithm, db) -> per-trial flags
    failures: list = field(default_factory=list)   # (algorithm, db, seed, message)
    metadata: dict = field(default_factory=dict)

    def curve(self, algorithm):
        """``(sweep_db, mean_sum_secrecy)`` arrays for one algorithm."""
        rows = [r for r in self.rows if r.algorithm == algorithm]
        return (np.array([r.sweep_db for r in rows]),
                np.array([r.mean_sum_secrecy for r in rows]))

    def row(self, algorithm, db):
        for r in self.rows:
            if r.algorithm == algorithm and r.sweep_db == db:
                return r
        raise KeyError((algorithm, db))


def _evaluate(ch, sc, algorithms):
    """Per-algorithm ``(sum_secrecy, feasible, relay_power, error)`` on one point."""
    out = {}
    seed_design = None
    if "effin" in algorithms or "optin" in algorithms:
        seed_design = effin(ch, sc)
    for name in algorithms:
        t0 = time.perf_counter()
        try:
            if name == "effin":
                d = seed_design
                res = (d.sum_secrecy, d.feasible, d.report.relay_power_used if d.feasible else 0.0)
            elif name == "optin":
                d = optin(ch, sc, start=seed_design)
                res = (d.sum_secrecy, d.feasible, d.report.relay_power_used if d.feasible else 0.0)
            else:
                relay, mode = name.split("-")
                rep = baseline_report(ch, sc, relay, mode.upper())
                res = (rep.sum_secrecy, True, rep.relay_power_used)
            err = None
        except Exception as exc:  # recorded, not fatal
            res, err = (0.0, False, 0.0), f"{type(exc).__name__}: {exc}"
        out[name] = res + (err, time.perf_counter() - t0)
    return out


def _run_trial(cfg, t):
    """All sweep points of trial ``t``: ``{(algorithm, k): (s, ok, power, err, dt)}``."""
    seed = cfg.seed + t
    base = Scenario.from_db(cfg.K, cfg.M, cfg.N, cfg.tx_db, cfg.relay_db, cfg.streams)
    ch = generate_channels(base, seed, cfg.distribution)
    out = {}
    for k, db in enumerate(cfg.values):
        tx_db, relay_db = cfg.point_powers(db)
        sc = Scenario.from_db(cfg.K, cfg.M, cfg.N, tx_db, relay_db, cfg.streams)
        for name, res in _evaluate(ch, sc, cfg.algorithms).items():
            out[name, k] = res
    return out


def run_sweep(cfg, workers=1):
    """Run every algorithm at every sweep point on ``cfg.trials`` seeded channel sets.

    Trial ``t`` draws its channels once from seed ``cfg.seed + t``; all
    algorithms and sweep points of that trial share them.  Infeasible or failed
    trials contribute zero to the mean.  With ``workers > 1`` trials run in a
    process pool; results are indexed by trial, so the output does not depend
    on scheduling (apart from wall times).
    """
    cfg.validate()
    algos, values = cfg.algorithms, cfg.values
    shape = (cfg.trials, len(values))
    secrecy = {a: np.zeros(shape) for a in algos}
    feasible = {a: np.zeros(shape, dtype=bool) for a in algos}
    power = {a: np.zeros(shape) for a in algos}
    wall = {a: np.zeros(len(values)) for a in algos}
    failures = []
    trials = range(cfg.trials)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_trial, [cfg] * cfg.trials, trials))
    else:
        results = [_run_trial(cfg, t) for t in trials]
    for t, res in zip(trials, results):
        for (name, k), (s, ok, pw, err, dt) in res.items():
            secrecy[name][t, k] = s
            feasible[name][t, k] = ok
            power[name][t, k] = pw
            wall[name][k] += dt
            if err is not None:
                failures.append((name, values[k], cfg.seed + t, err))
    rows = []
    n = cfg.trials
    for name in algos:
        for k, db in enumerate(values):
            col = secrecy[name][:, k]
            se = float(np.std(col, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
            rows.append(PointStats(name, float(db), float(np.mean(col)), se,
                                   float(np.mean(feasible[name][:, k])),
                                   float(np.mean(power[name][:, k])), n, cfg.seed,
                                   float(wall[name][k])))
    meta = {
        "distribution": cfg.distribution,
        "channels": "one realization per seed, shared by all algorithms and sweep points",
        "seeds": [cfg.seed, cfg.seed + cfg.trials - 1],
        "infeasible_counts_as": 0.0,
    }
    meta.update(cfg.metadata)
    return SweepResult(cfg, rows,
                       {(a, float(db)): secrecy[a][:, k].copy()
                        for a in algos for k, db in enumerate(values)},
                       {(a, float(db)): feasible[a][:, k].copy()
                        for a in algos for k, db in enumerate(values)},
                       failures, meta)
