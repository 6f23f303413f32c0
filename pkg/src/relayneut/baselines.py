"""Reference designs: a plain repeater and a switched-off relay, each with
full-spectrum (FS) or orthogonal (OS) subcarrier sharing and equal power split.
"""

from dataclasses import dataclass

import numpy as np

from .channel import Precoders, RelayMatrix, equivalent_channel
from .rates import amplified_noise, secrecy_report

MODES = ("FS", "OS")
RELAYS = ("repeater", "ic")


@dataclass(frozen=True)
class SharingAssignment:
    mode: str
    active: tuple                 # per user: sorted tuple of subcarrier indices
    per_subcarrier_power: tuple   # per user: power on each active subcarrier

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")


def repeater_relay(scenario):
    """Scaled identity spending exactly the relay budget on ``tr(R R^H)``."""
    MN = scenario.M * scenario.N
    return RelayMatrix(np.sqrt(scenario.relay_power / MN) * np.eye(MN, dtype=complex),
                       scenario.M)


def ic_relay(scenario):
    return RelayMatrix.zero(scenario.M, scenario.N)


def os_blocks(K, M):
    """Contiguous, near-equal subcarrier blocks in user order."""
    return [tuple(int(m) for m in b) for b in np.array_split(np.arange(M), K)]


def subcarrier_secrecy(ch, r, scenario):
    """Scalar per-subcarrier secrecy proxy ``s[i, m]`` used only for assignment.

    Each link is read off the diagonal of the equivalent channel with power
    ``P_i / M``; both the intended and the colluding receivers see their own
    amplified relay noise.
    """
    K, M = ch.K, ch.M
    gain = np.empty((K, K, M))  # gain[j, i, m] = |hbar_ji(m)|^2
    for j in range(K):
        for i in range(K):
            gain[j, i] = np.abs(np.diag(equivalent_channel(ch, r, i, j))) ** 2
    noise = np.array([1.0 + np.real(np.diag(amplified_noise(ch, r, j))) for j in range(K)])
    s = np.zeros((K, M))
    for i in range(K):
        p = scenario.tx_power[i] / M
        direct = np.log2(1.0 + gain[i, i] * p / noise[i])
        leak = sum(gain[j, i] * p / noise[j] for j in range(K) if j != i)
        s[i] = np.maximum(0.0, direct - np.log2(1.0 + leak))
    return s


def assign_spectrum(ch, r, scenario, mode):
    mode = mode.upper()
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    K, M = ch.K, ch.M
    s = subcarrier_secrecy(ch, r, scenario)
    if mode == "OS":
        active = [tuple(m for m in block if s[i, m] > 0)
                  for i, block in enumerate(os_blocks(K, M))]
    else:
        sets = [[] for _ in range(K)]
        for m in range(M):
            if np.any(s[:, m] > 0):
                sets[int(np.argmax(s[:, m]))].append(m)  # argmax breaks ties low
        active = [tuple(a) for a in sets]
    power = tuple(
        tuple([scenario.tx_power[i] / len(a)] * len(a)) if a else ()
        for i, a in enumerate(active))
    return SharingAssignment(mode, tuple(active), power)


def assignment_precoders(assignment, M):
    mats = []
    for act, pw in zip(assignment.active, assignment.per_subcarrier_power):
        d = np.zeros(M)
        d[list(act)] = np.sqrt(pw)
        mats.append(np.diag(d).astype(complex))
    return Precoders(tuple(mats))


def baseline_design(ch, scenario, which, mode):
    """``(relay, precoders, assignment)`` of a baseline configuration."""
    if which == "repeater":
        r = repeater_relay(scenario)
    elif which == "ic":
        r = ic_relay(scenario)
    else:
        raise ValueError(f"unknown baseline {which!r}; expected one of {RELAYS}")
    a = assign_spectrum(ch, r, scenario, mode)
    return r, assignment_precoders(a, ch.M), a


def baseline_report(ch, scenario, which, mode):
    """Exact (leakage-aware) rates of a baseline design."""
    r, p, _ = baseline_design(ch, scenario, which, mode)
    return secrecy_report(ch, r, p)
