"""Closed-form rates, colluding-eavesdropper leakage, secrecy and relay power.

All rates are in bits/s/Hz (log base 2) with unit noise variance at every
receiver and at the relay.
"""

from dataclasses import dataclass

import numpy as np

from .channel import RelayMatrix, equivalent_channel, stack_eavesdroppers
from .numerics import capacity, herm

NEUTRALIZATION_TOL = 1e-8


def _R(r):
    return r.matrix if isinstance(r, RelayMatrix) else np.asarray(r)


@dataclass(frozen=True)
class RateReport:
    per_user_rate: tuple
    per_user_leakage: tuple
    per_user_secrecy: tuple
    sum_secrecy: float
    relay_power_used: float
    tx_power_used: tuple
    simplified: bool = False
    neutralization_residual: float = float("nan")

    def as_dict(self):
        return {
            "per_user_rate": list(self.per_user_rate),
            "per_user_leakage": list(self.per_user_leakage),
            "per_user_secrecy": list(self.per_user_secrecy),
            "sum_secrecy": self.sum_secrecy,
            "relay_power_used": self.relay_power_used,
            "tx_power_used": list(self.tx_power_used),
            "simplified": self.simplified,
            "neutralization_residual": self.neutralization_residual,
        }


def amplified_noise(ch, r, j):
    """``G_j^H R R^H G_j``: relay noise forwarded to RX ``j``."""
    gr = herm(ch.G(j)) @ _R(r)
    return gr @ herm(gr)


def user_rate(ch, r, p, i):
    """Achievable rate of user ``i`` treating other users as noise."""
    M = ch.M
    cov = amplified_noise(ch, r, i) + np.eye(M)
    for j in range(ch.K):
        if j != i:
            s = equivalent_channel(ch, r, j, i) @ p[j]
            cov = cov + s @ herm(s)
    signal = equivalent_channel(ch, r, i, i) @ p[i]
    return capacity(signal, cov)


def leakage_rate(ch, r, p, i):
    """Rate at which the other receivers, colluding, can decode message ``i``.

    Worst case: every other message has already been removed.
    """
    hbar, g = stack_eavesdroppers(ch, r, i)
    gr = herm(g) @ _R(r)
    cov = gr @ herm(gr) + np.eye(hbar.shape[0])
    return capacity(hbar @ p[i], cov)


def simplified_secrecy(ch, r, p, i):
    """Secrecy rate of user ``i`` when its leakage has been neutralized."""
    cov = amplified_noise(ch, r, i) + np.eye(ch.M)
    return capacity(equivalent_channel(ch, r, i, i) @ p[i], cov)


def neutralization_residual(ch, r, p):
    """``max_{i != j} ||Hbar_ji P_i||_F``."""
    worst = 0.0
    for i in range(ch.K):
        for j in range(ch.K):
            if j != i:
                worst = max(worst, float(np.linalg.norm(equivalent_channel(ch, r, i, j) @ p[i])))
    return worst


def relay_input_covariance(ch, p):
    """``sum_i F_i P_i P_i^H F_i^H + I_MN``."""
    MN = ch.M * ch.N
    q = np.eye(MN, dtype=complex)
    for i in range(ch.K):
        fp = ch.F(i) @ p[i]
        q = q + fp @ herm(fp)
    return q


def relay_tx_power(ch, r, p):
    R = _R(r)
    return float(np.real(np.trace(R @ relay_input_covariance(ch, p) @ herm(R))))


def relay_tx_power_kron(ch, r, p):
    """Relay power as a quadratic form in ``vec(R)``.

    ``tr(R Q R^H) = vec(R)^H (Q^T kron I) vec(R)``; note the transpose,
    which matters because ``Q`` is complex Hermitian.
    """
    R = _R(r)
    v = R.reshape(-1, order="F")
    q = relay_input_covariance(ch, p)
    big = np.kron(q.T, np.eye(R.shape[0]))
    return float(np.real(np.vdot(v, big @ v)))


def secrecy_report(ch, r, p, assume_neutralized=False, tol=NEUTRALIZATION_TOL):
    """Full rate report of a design ``(R, {P_i})``.

    With ``assume_neutralized`` the leakage-free expression is used, but only
    if the measured neutralization residual is at most ``tol``; otherwise the
    full expression is evaluated regardless.
    """
    residual = neutralization_residual(ch, r, p)
    simplified = bool(assume_neutralized and residual <= tol)
    rates, leaks, secs = [], [], []
    for i in range(ch.K):
        if simplified:
            ri = simplified_secrecy(ch, r, p, i)
            li = 0.0
        else:
            ri = user_rate(ch, r, p, i)
            li = leakage_rate(ch, r, p, i)
        rates.append(ri)
        leaks.append(li)
        secs.append(max(0.0, ri - li))
    return RateReport(
        per_user_rate=tuple(rates),
        per_user_leakage=tuple(leaks),
        per_user_secrecy=tuple(secs),
        sum_secrecy=float(sum(secs)),
        relay_power_used=relay_tx_power(ch, r, p),
        tx_power_used=tuple(p.power(i) for i in range(ch.K)),
        simplified=simplified,
        neutralization_residual=residual,
    )
