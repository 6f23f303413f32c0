"""Network realizations: scenario parameters, channels, precoders, relay matrices.

Users are indexed from 0.  Channels are held per subcarrier:

* ``h[j, i, m]``  direct gain from TX ``i`` to RX ``j`` on subcarrier ``m``
* ``f[i, m]``     length-``N`` uplink vector from TX ``i`` to the relay
* ``g[j, m]``     length-``N`` downlink vector from the relay to RX ``j``

The block matrices ``H_ji`` (M x M, diagonal), ``F_i`` and ``G_j`` (MN x M,
block-diagonal) are built on demand.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .numerics import block_diag, herm

DISTRIBUTIONS = ("uniform01", "complex_gaussian")


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


class FixtureError(ValueError):
    """Malformed or inconsistent fixture file."""


@dataclass(frozen=True)
class Scenario:
    num_users: int
    num_subcarriers: int
    relay_antennas: int
    tx_power: tuple
    relay_power: float
    streams: tuple = None

    def __post_init__(self):
        K, M, N = self.num_users, self.num_subcarriers, self.relay_antennas
        if K < 2:
            raise ValueError("need at least two users")
        if M < 1 or N < 1:
            raise ValueError("need at least one subcarrier and one relay antenna")
        tx = tuple(float(p) for p in np.broadcast_to(self.tx_power, (K,)))
        object.__setattr__(self, "tx_power", tx)
        object.__setattr__(self, "relay_power", float(self.relay_power))
        streams = self.streams
        if streams is None:
            streams = (M,) * K
        streams = tuple(int(s) for s in streams)
        object.__setattr__(self, "streams", streams)
        if len(streams) != K or any(s < 0 or s > M for s in streams):
            raise ValueError(f"streams must be K={K} counts in [0, {M}]")
        if any(p <= 0 for p in tx) or self.relay_power <= 0:
            raise ValueError("power budgets must be positive")

    @classmethod
    def from_db(cls, K, M, N, tx_db, relay_db, streams=None):
        tx = np.broadcast_to(db_to_linear(tx_db), (K,))
        return cls(K, M, N, tuple(tx), float(db_to_linear(relay_db)), streams)

    @property
    def K(self):
        return self.num_users

    @property
    def M(self):
        return self.num_subcarriers

    @property
    def N(self):
        return self.relay_antennas

    def with_powers(self, tx_power=None, relay_power=None):
        return Scenario(
            self.K, self.M, self.N,
            self.tx_power if tx_power is None else tx_power,
            self.relay_power if relay_power is None else relay_power,
            self.streams,
        )


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ChannelSet:
    h: np.ndarray  # (K, K, M): h[j, i, m]
    f: np.ndarray  # (K, M, N)
    g: np.ndarray  # (K, M, N)
    distribution: str = "fixture"

    def __post_init__(self):
        h, f, g = _frozen(self.h), _frozen(self.f), _frozen(self.g)
        if h.ndim != 3 or h.shape[0] != h.shape[1]:
            raise ValueError(f"h must have shape (K, K, M), got {h.shape}")
        K, _, M = h.shape
        if f.ndim != 3 or f.shape[:2] != (K, M) or g.shape != f.shape:
            raise ValueError(
                f"f and g must have shape (K={K}, M={M}, N); got {f.shape}, {g.shape}")
        if not (np.all(np.isfinite(h)) and np.all(np.isfinite(f)) and np.all(np.isfinite(g))):
            raise ValueError("channel entries must be finite")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "g", g)

    @property
    def K(self):
        return self.h.shape[0]

    @property
    def M(self):
        return self.h.shape[2]

    @property
    def N(self):
        return self.f.shape[2]

    def H(self, j, i):
        """Direct channel from TX ``i`` to RX ``j`` (M x M diagonal)."""
        return np.diag(self.h[j, i])

    def F(self, i):
        """Uplink block-diagonal matrix of TX ``i`` (MN x M)."""
        return block_diag([v.reshape(-1, 1) for v in self.f[i]])

    def G(self, j):
        """Downlink block-diagonal matrix of RX ``j`` (MN x M)."""
        return block_diag([v.reshape(-1, 1) for v in self.g[j]])

    def H_stacked(self):
        """KM x KM block matrix whose (j, i) block is ``H_ji``."""
        K, M = self.K, self.M
        out = np.zeros((K * M, K * M), dtype=complex)
        for j in range(K):
            for i in range(K):
                out[j * M:(j + 1) * M, i * M:(i + 1) * M] = self.H(j, i)
        return out

    def GH_stacked(self):
        """``[G_1^H; ...; G_K^H]`` (KM x MN)."""
        return np.vstack([herm(self.G(j)) for j in range(self.K)])

    def F_stacked(self):
        """``[F_1, ..., F_K]`` (MN x KM)."""
        return np.hstack([self.F(i) for i in range(self.K)])


@dataclass(frozen=True, eq=False)
class Precoders:
    matrices: tuple

    def __post_init__(self):
        mats = tuple(_frozen(p) for p in self.matrices)
        for p in mats:
            if p.ndim != 2 or p.shape[0] != p.shape[1]:
                raise ValueError("precoders must be square M x M matrices")
        object.__setattr__(self, "matrices", mats)

    def __getitem__(self, i):
        return self.matrices[i]

    def __len__(self):
        return len(self.matrices)

    def active_columns(self, i):
        p = self.matrices[i]
        return tuple(int(c) for c in np.flatnonzero(np.any(p != 0, axis=0)))

    def compact(self, i):
        """Non-zero columns of ``P_i`` (M x S_i)."""
        return self.matrices[i][:, list(self.active_columns(i))]

    def streams(self):
        return tuple(len(self.active_columns(i)) for i in range(len(self)))

    def power(self, i):
        p = self.matrices[i]
        return float(np.real(np.vdot(p, p)))

    def stacked(self):
        return block_diag(list(self.matrices))

    def covariances(self):
        return [p @ herm(p) for p in self.matrices]

    @classmethod
    def identity(cls, K, M, scale=1.0):
        return cls(tuple(scale * np.eye(M, dtype=complex) for _ in range(K)))

    @classmethod
    def zeros(cls, K, M):
        return cls(tuple(np.zeros((M, M), complex) for _ in range(K)))


RELAY_STRUCTURES = ("general", "block-diagonal", "scaled-identity", "zero")


def _infer_structure(r, M, N, tol=0.0):
    if not np.any(np.abs(r) > tol):
        return "zero"
    c = r[0, 0]
    if np.all(np.abs(r - c * np.eye(r.shape[0])) <= tol):
        return "scaled-identity"
    r4 = r.reshape(M, N, M, N)
    off = r4.copy()
    for m in range(M):
        off[m, :, m, :] = 0
    if np.all(np.abs(off) <= tol):
        return "block-diagonal"
    return "general"


@dataclass(frozen=True, eq=False)
class RelayMatrix:
    matrix: np.ndarray
    num_subcarriers: int
    structure: str = None

    def __post_init__(self):
        r = _frozen(self.matrix)
        M = self.num_subcarriers
        if r.ndim != 2 or r.shape[0] != r.shape[1] or r.shape[0] % M:
            raise ValueError(f"relay matrix must be MN x MN, got {r.shape} with M={M}")
        object.__setattr__(self, "matrix", r)
        N = r.shape[0] // M
        actual = _infer_structure(r, M, N)
        tag = self.structure or actual
        if tag not in RELAY_STRUCTURES:
            raise ValueError(f"unknown structure tag {tag!r}")
        # a stronger claim than the data supports is rejected
        order = {"zero": 0, "scaled-identity": 1, "block-diagonal": 2, "general": 3}
        if order[actual] > order[tag]:
            raise ValueError(f"matrix does not have the claimed {tag} structure")
        object.__setattr__(self, "structure", tag)

    @property
    def M(self):
        return self.num_subcarriers

    @property
    def N(self):
        return self.matrix.shape[0] // self.num_subcarriers

    def block(self, f, m):
        """``R_fm``: forwards subcarrier ``m`` onto subcarrier ``f``."""
        N = self.N
        return self.matrix[f * N:(f + 1) * N, m * N:(m + 1) * N]

    @classmethod
    def zero(cls, M, N):
        return cls(np.zeros((M * N, M * N), complex), M, "zero")


def generate_channels(scenario, seed, distribution="uniform01"):
    """Draw one i.i.d. channel realization, deterministic in ``seed``."""
    if distribution not in DISTRIBUTIONS:
        raise ValueError(f"distribution must be one of {DISTRIBUTIONS}")
    rng = np.random.default_rng(seed)
    K, M, N = scenario.K, scenario.M, scenario.N

    def draw(shape):
        if distribution == "uniform01":
            return rng.random(shape) + 1j * rng.random(shape)
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)

    h = draw((K, K, M))
    f = draw((K, M, N))
    g = draw((K, M, N))
    return ChannelSet(h, f, g, distribution)


def equivalent_channel(ch, r, i, j):
    """``H_ji + G_j^H R F_i`` (M x M), the end-to-end channel from TX i to RX j."""
    R = r.matrix if isinstance(r, RelayMatrix) else np.asarray(r)
    M, N = ch.M, ch.N
    r4 = R.reshape(M, N, M, N)
    relayed = np.einsum("fa,fame,me->fm", np.conj(ch.g[j]), r4, ch.f[i])
    return np.diag(ch.h[j, i]) + relayed


def stack_eavesdroppers(ch, r, i):
    """Colluding-eavesdropper view of message ``i``.

    Returns ``(Hbar_minus_i, G_minus_i)``: the equivalent channels ``Hbar_ji``
    for ``j != i`` stacked vertically in ascending ``j`` (M(K-1) x M) and the
    concatenation ``[G_j]`` (MN x M(K-1)).
    """
    others = [j for j in range(ch.K) if j != i]
    hbar = np.vstack([equivalent_channel(ch, r, i, j) for j in others])
    g = np.hstack([ch.G(j) for j in others])
    return hbar, g


# --- fixture files ---------------------------------------------------------

def _enc(z):
    z = np.asarray(z)
    return np.stack([z.real, z.imag], axis=-1).tolist()


def _dec(obj, where, shape=None):
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise FixtureError(f"{where}: malformed complex literal ({exc})") from exc
    if arr.ndim == 0 or arr.shape[-1] != 2:
        raise FixtureError(f"{where}: complex numbers must be [re, im] pairs")
    z = arr[..., 0] + 1j * arr[..., 1]
    if shape is not None and z.shape != tuple(shape):
        raise FixtureError(f"{where}: expected shape {tuple(shape)}, got {z.shape}")
    return z


@dataclass
class Fixture:
    scenario: Scenario
    channels: ChannelSet
    precoders: Precoders = None
    relays: dict = field(default_factory=dict)
    expected: dict = field(default_factory=dict)


def read_fixture(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FixtureError(f"{path}: line {exc.lineno} col {exc.colno}: {exc.msg}") from exc
    try:
        sc = doc["scenario"]
        K, M, N = int(sc["K"]), int(sc["M"]), int(sc["N"])
        chan = doc["channels"]
        h_raw, f_raw, g_raw = chan["H"], chan["F"], chan["G"]
    except (KeyError, TypeError) as exc:
        raise FixtureError(f"{path}: missing field {exc}") from exc
    h = np.zeros((K, K, M), complex)
    if len(h_raw) != K or any(len(row) != K for row in h_raw):
        raise FixtureError(f"{path}: channels.H must be a {K}x{K} nested list")
    for j in range(K):
        for i in range(K):
            h[j, i] = _dec(h_raw[j][i], f"channels.H[{j}][{i}]", (M,))
    f = _dec(f_raw, "channels.F", (K, M, N))
    g = _dec(g_raw, "channels.G", (K, M, N))
    scenario = Scenario.from_db(K, M, N, sc["P_tx_db"], sc["P_relay_db"], sc.get("streams"))
    precoders = None
    if doc.get("precoders") is not None:
        precoders = Precoders(tuple(
            _dec(p, f"precoders[{i}]", (M, M)) for i, p in enumerate(doc["precoders"])))
        if len(precoders) != K:
            raise FixtureError(f"{path}: expected {K} precoders")
    relays = {name: _dec(r, f"relays.{name}", (M * N, M * N))
              for name, r in (doc.get("relays") or {}).items()}
    return Fixture(scenario, ChannelSet(h, f, g, doc.get("distribution", "fixture")),
                   precoders, relays, dict(doc.get("expected") or {}))


def load_channels(path):
    fx = read_fixture(path)
    return fx.scenario, fx.channels, fx.precoders


def save_channels(path, scenario, ch, precoders=None, relays=None, expected=None):
    doc = {
        "scenario": {
            "K": scenario.K, "M": scenario.M, "N": scenario.N,
            "P_tx_db": [float(x) for x in linear_to_db(scenario.tx_power)],
            "P_relay_db": float(linear_to_db(scenario.relay_power)),
            "streams": list(scenario.streams),
        },
        "distribution": ch.distribution,
        "channels": {
            "H": [[_enc(ch.h[j, i]) for i in range(ch.K)] for j in range(ch.K)],
            "F": _enc(ch.f),
            "G": _enc(ch.g),
        },
    }
    if precoders is not None:
        doc["precoders"] = [_enc(p) for p in precoders.matrices]
    if relays:
        doc["relays"] = {k: _enc(np.asarray(v)) for k, v in relays.items()}
    if expected:
        doc["expected"] = expected
    Path(path).write_text(json.dumps(doc, indent=1))
