"""Leakage-neutralizing relay matrices as solutions of a stacked linear system.

The constraints ``(H_ji + G_j^H R F_i) P_i = 0`` for all ``j != i`` are
written as ``A vec(R) = b`` with row blocks
``((F_i P_i)^T kron G_{-i}^H) vec(R) = -vec(H_{-i} P_i)`` (only the active
precoder columns take part).  Every neutralizing relay is ``A^+ b + z`` with
``z`` in the null space of ``A``.
"""

from dataclasses import dataclass

import numpy as np

from .channel import RelayMatrix
from .numerics import DEFAULT_RANK_TOL, herm, pinv, svd_full, unvec, vec
from .rates import relay_input_covariance

CONSISTENCY_TOL = 1e-8


class InfeasibleError(RuntimeError):
    """The neutralization constraints cannot be met exactly."""

    def __init__(self, message, residual=float("nan"), subcarrier=None):
        super().__init__(message)
        self.residual = residual
        self.subcarrier = subcarrier


class UnreachableTargetError(ValueError):
    """A target ``T`` is not attainable by any relay matrix."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


def min_antennas(K, M, S):
    """Fewest relay antennas allowing full neutralization.

    Smallest integer ``N`` with ``M^2 N^2 >= (K-1) M sum(S)``, computed in
    exact integer arithmetic.
    """
    S = list(S)
    if K < 2 or len(S) != K or any(s < 1 or s > M for s in S):
        raise ValueError("need K >= 2 and 1 <= S_i <= M for every user")
    need = (K - 1) * sum(S)  # N^2 M >= need
    n = 1
    while n * n * M < need:
        n += 1
    return n


@dataclass(frozen=True, eq=False)
class NeutralizationSystem:
    A: np.ndarray
    b: np.ndarray
    svd: object
    min_norm_solution: np.ndarray
    residual: float
    num_subcarriers: int
    relay_antennas: int

    @property
    def consistent(self):
        return self.residual <= CONSISTENCY_TOL * (1.0 + float(np.linalg.norm(self.b)))

    @property
    def null_dim(self):
        return self.A.shape[1] - self.svd.rank

    @property
    def size(self):
        return self.num_subcarriers * self.relay_antennas


def _others(K, i):
    return [j for j in range(K) if j != i]


def system_blocks(ch, p):
    """Per-user row blocks ``(A_i, b_i)`` of the stacked system."""
    blocks = []
    for i in range(ch.K):
        ph = p.compact(i)
        if ph.shape[1] == 0:
            continue
        others = _others(ch.K, i)
        gh_minus = np.vstack([herm(ch.G(j)) for j in others])
        h_minus = np.vstack([ch.H(j, i) for j in others])
        a_i = np.kron((ch.F(i) @ ph).T, gh_minus)
        b_i = -vec(h_minus @ ph)
        blocks.append((a_i, b_i))
    return blocks


def build_system(ch, p, rank_tol=DEFAULT_RANK_TOL):
    MN2 = (ch.M * ch.N) ** 2
    blocks = system_blocks(ch, p)
    if blocks:
        A = np.vstack([a for a, _ in blocks])
        b = np.concatenate([v for _, v in blocks])
    else:
        A = np.zeros((0, MN2), complex)
        b = np.zeros(0, complex)
    svd = svd_full(A, rank_tol)
    x = svd.pinv() @ b if A.shape[0] else np.zeros(MN2, complex)
    residual = float(np.linalg.norm(A @ x - b)) if A.shape[0] else 0.0
    return NeutralizationSystem(A, b, svd, x, residual, ch.M, ch.N)


def _require_consistent(sys):
    if not sys.consistent:
        raise InfeasibleError(
            f"neutralization system is inconsistent (residual {sys.residual:.3e}); "
            "the relay has too few antennas", residual=sys.residual)


def solve_min_norm(sys):
    """Minimum-Frobenius-norm neutralizing relay ``unvec(A^+ b)``."""
    _require_consistent(sys)
    return RelayMatrix(unvec(sys.min_norm_solution, sys.size, sys.size), sys.num_subcarriers)


def neutralized_family(sys, y):
    """Member ``unvec(A^+ b + V2 y)`` of the neutralizing family."""
    _require_consistent(sys)
    y = np.asarray(y, dtype=complex).reshape(-1)
    if y.size != sys.null_dim:
        raise ValueError(f"y must have length {sys.null_dim}, got {y.size}")
    v = sys.min_norm_solution + sys.svd.right_null @ y
    return RelayMatrix(unvec(v, sys.size, sys.size), sys.num_subcarriers)


def family_coordinates(sys, relay):
    """Least-squares ``y`` with ``A^+ b + V2 y`` closest to ``vec(relay)``."""
    R = relay.matrix if isinstance(relay, RelayMatrix) else np.asarray(relay)
    return herm(sys.svd.right_null) @ (vec(R) - sys.min_norm_solution)


def min_neutralization_power(ch, p, sys=None):
    """Relay power of the minimum-norm neutralizing relay.

    ``(A^+ b)^H ((sum_i F_i P_i P_i^H F_i^H + I)^T kron I)(A^+ b)``.
    """
    sys = build_system(ch, p) if sys is None else sys
    _require_consistent(sys)
    x = sys.min_norm_solution
    q = relay_input_covariance(ch, p)
    big = np.kron(q.T, np.eye(sys.size))
    return float(np.real(np.vdot(x, big @ x)))


def weighted_min_power(ch, p, sys=None):
    """Exact minimum relay power over the whole neutralizing family.

    Minimizes the power quadratic over ``z = V2 y``.  Returned alongside the
    ``z = 0`` value so the two can be compared; the min-norm point need not
    minimize the weighted power.
    """
    sys = build_system(ch, p) if sys is None else sys
    _require_consistent(sys)
    x = sys.min_norm_solution
    q = relay_input_covariance(ch, p)
    big = np.kron(q.T, np.eye(sys.size))
    v2 = sys.svd.right_null
    at_zero = float(np.real(np.vdot(x, big @ x)))
    if v2.shape[1] == 0:
        return at_zero, at_zero
    hess = herm(v2) @ big @ v2
    lin = herm(v2) @ (big @ x)
    y = -np.linalg.solve(hess, lin)
    z = x + v2 @ y
    return at_zero, float(np.real(np.vdot(z, big @ z)))


def relay_from_target(ch, p, T, tol=1e-8, check=True):
    """Relay ``G^{H+} (T - H P) (F P)^+`` realizing a block-diagonal target.

    When ``check`` is set the identity ``(H + G^H R F) P = T`` is verified and
    an :class:`UnreachableTargetError` raised if it fails by more than
    ``tol`` (relative to ``1 + ||T||``).
    """
    H = ch.H_stacked()
    GH = ch.GH_stacked()
    F = ch.F_stacked()
    P = p.stacked()
    R = pinv(GH) @ (T - H @ P) @ pinv(F @ P)
    if check:
        resid = float(np.linalg.norm((H + GH @ R @ F) @ P - T))
        if resid > tol * (1.0 + float(np.linalg.norm(T))):
            raise UnreachableTargetError(
                f"target not reachable (residual {resid:.3e})", resid)
    return RelayMatrix(R, ch.M)
