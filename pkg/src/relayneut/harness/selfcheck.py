"""Quick invariant and gradient self-tests behind ``relayneut check``."""

import numpy as np

from ..channel import Precoders, RelayMatrix, Scenario, generate_channels, read_fixture
from ..effin import effin_relay
from ..neutralize import build_system, min_antennas, neutralized_family, relay_from_target
from ..optin import (block_diagonal_part, build_q2, objective_gradient, power_gradient,
                     q2_objective, q2_power, rate_from_target)
from ..rates import leakage_rate, relay_tx_power, relay_tx_power_kron
from .replay import replay_table1, table1_path


def realizable_target(ch, p, rng):
    """Block-diagonal target of a random member of the neutralizing family."""
    sys = build_system(ch, p)
    y = rng.standard_normal(sys.null_dim) + 1j * rng.standard_normal(sys.null_dim)
    relay = neutralized_family(sys, y)
    T = (ch.H_stacked() + ch.GH_stacked() @ relay.matrix @ ch.F_stacked()) @ p.stacked()
    return block_diagonal_part(T, ch.K, ch.M), relay


def finite_difference_error(fun, grad, T, entries, step=1e-5):
    """Relative error of ``grad`` (a ``d/dT^*`` gradient) against central differences.

    For real ``fun``, ``d fun / d Re T_ab = 2 Re G_ab`` and
    ``d fun / d Im T_ab = 2 Im G_ab``.
    """
    num, ana = [], []
    for a, b in entries:
        for unit, part in ((1.0, np.real), (1j, np.imag)):
            E = np.zeros_like(T)
            E[a, b] = unit * step
            num.append((fun(T + E) - fun(T - E)) / (2 * step))
            ana.append(2.0 * part(grad[a, b]))
    num, ana = np.array(num), np.array(ana)
    return float(np.linalg.norm(num - ana) / max(np.linalg.norm(ana), 1e-300))


def block_entries(K, M):
    return [(i * M + a, i * M + b) for i in range(K) for a in range(M) for b in range(M)]


def random_precoders(K, M, rng):
    return Precoders(tuple(rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))
                           for _ in range(K)))


def run_checks(seed=0):
    """List of ``(name, passed, detail)``."""
    rng = np.random.default_rng(seed)
    out = []

    rep = replay_table1()
    out.append(("table1 replay", rep.passed,
                f"max |delta| {max(abs(r.delta) for r in rep.rows):.2e}, "
                f"min-norm entry error {rep.min_norm_max_entry_error:.2e}"))

    fx = read_fixture(table1_path())
    ch, p = fx.channels, fx.precoders
    q2 = build_q2(ch, p)
    errs, gaps, perr, gerr = [], [], [], []
    for _ in range(5):
        T, relay = realizable_target(ch, p, rng)
        T = T * rng.uniform(0.5, 2.0)
        errs.append(finite_difference_error(lambda x: q2_objective(q2, x),
                                            objective_gradient(q2, T), T,
                                            block_entries(ch.K, ch.M)))
        T0, _ = realizable_target(ch, p, rng)
        gaps.append(abs(q2_objective(q2, T0) - rate_from_target(ch, p, T0)))
        relay = relay_from_target(ch, p, T0)
        perr.append(abs(q2_power(q2, T0) - relay_tx_power(ch, relay, p)))
        G = power_gradient(q2, T0)
        gerr.append(finite_difference_error(lambda x: q2_power(q2, x), G, T0,
                                            block_entries(ch.K, ch.M)))
    out.append(("objective gradient vs finite differences", max(errs) <= 1e-5,
                f"max relative error {max(errs):.2e}"))
    out.append(("relay-side objective vs direct rate", max(gaps) <= 1e-8,
                f"max gap {max(gaps):.2e}"))
    out.append(("power gradient vs finite differences", max(gerr) <= 1e-6,
                f"max relative error {max(gerr):.2e}"))
    out.append(("relay power forms", max(perr) <= 1e-8, f"max gap {max(perr):.2e}"))

    worst_leak, worst_pow = 0.0, 0.0
    for trial in range(5):
        K, M = 2 + trial % 2, (2, 4)[trial % 2]
        S = (M,) * K
        N = min_antennas(K, M, S)
        sc = Scenario(K, M, N, (10.0,) * K, 100.0)
        chx = generate_channels(sc, seed + trial)
        px = random_precoders(K, M, rng)
        sys = build_system(chx, px)
        y = rng.standard_normal(sys.null_dim) + 1j * rng.standard_normal(sys.null_dim)
        for relay in (neutralized_family(sys, np.zeros(sys.null_dim)),
                      neutralized_family(sys, y)):
            worst_leak = max(worst_leak, max(leakage_rate(chx, relay, px, i) for i in range(K)))
        r_eff = effin_relay(chx)
        worst_leak = max(worst_leak, max(leakage_rate(chx, r_eff, px, i) for i in range(K)))
        rnd = RelayMatrix(rng.standard_normal((M * N, M * N)) + 0j, M)
        a, b = relay_tx_power(chx, rnd, px), relay_tx_power_kron(chx, rnd, px)
        worst_pow = max(worst_pow, abs(a - b) / max(1.0, abs(a)))
    out.append(("neutralization leaves zero leakage", worst_leak <= 1e-8,
                f"max leakage {worst_leak:.2e}"))
    out.append(("trace vs Kronecker relay power", worst_pow <= 1e-9,
                f"max relative gap {worst_pow:.2e}"))
    return out
