"""Efficient neutralization: per-subcarrier min-norm relay blocks + precoder program.

The precoder program maximizes ``sum_i log2 det(I + Q_i W_i)`` over PSD
``Q_i`` subject to ``tr(Q_i) <= P_i`` and ``sum_i tr(Q_i X_i) <= Pbar``.  It
is solved through its Lagrange dual: for fixed multipliers the problem splits
per user and has a generalized water-filling solution, and the multipliers
are located by bracketing root searches on the (monotone) constraint values.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .channel import Precoders, RelayMatrix, equivalent_channel
from .neutralize import CONSISTENCY_TOL, InfeasibleError
from .numerics import block_diag, eigh, herm, pinv, unvec, whiten
from .rates import amplified_noise, secrecy_report

LN2 = math.log(2.0)
LAMBDA_FLOOR = 1e-12


def effin_relay(ch):
    """Block-diagonal relay whose blocks are per-subcarrier min-norm solutions.

    Raises :class:`InfeasibleError` naming the first subcarrier whose
    constraints cannot all be met.
    """
    K, M, N = ch.K, ch.M, ch.N
    blocks = []
    for m in range(M):
        rows, rhs = [], []
        for i in range(K):
            others = [j for j in range(K) if j != i]
            g_minus = np.stack([ch.g[j, m] for j in others], axis=1)  # N x (K-1)
            rows.append(np.kron(ch.f[i, m].reshape(1, -1), herm(g_minus)))
            rhs.append(-np.array([ch.h[j, i, m] for j in others]))
        a = np.vstack(rows)
        b = np.concatenate(rhs)
        x = pinv(a) @ b
        resid = float(np.linalg.norm(a @ x - b))
        if resid > CONSISTENCY_TOL * (1.0 + float(np.linalg.norm(b))):
            raise InfeasibleError(
                f"subcarrier {m}: neutralization infeasible with N={N} "
                f"(residual {resid:.3e})", residual=resid, subcarrier=m)
        blocks.append(unvec(x, N, N))
    return RelayMatrix(block_diag(blocks), M, "block-diagonal")


@dataclass(frozen=True, eq=False)
class Q1Problem:
    W: tuple
    X: tuple
    residual_budget: float
    tx_budgets: tuple
    # optional orthonormal bases; Q_i is then U_i Qr_i U_i^H
    bases: tuple = None

    @property
    def feasible(self):
        return self.residual_budget >= 0.0


@dataclass(frozen=True, eq=False)
class Q1Solution:
    Q: tuple
    tx_duals: tuple
    relay_dual: float
    objective: float
    kkt_residual: float
    iterations: int = 0
    info: dict = field(default_factory=dict)


def _null_basis(m, tol):
    """Orthonormal basis of the (numerical) null space of ``m``."""
    cols = m.shape[1]
    if m.shape[0] == 0:
        return np.eye(cols, dtype=complex)
    _, s, vh = np.linalg.svd(m)
    scale = max(1.0, float(s[0])) if s.size else 1.0
    rank = int(np.sum(s > tol * scale))
    return herm(vh)[:, rank:]


def build_q1(ch, r, scenario, restrict=False, null_tol=1e-9):
    """Assemble the precoder program for a fixed relay.

    With ``restrict`` each ``Q_i`` is confined to the directions that the relay
    neutralizes (null space of the stacked leakage channel), so any solution
    keeps the leakage at zero even for non-fully-neutralizing relays.
    """
    R = r.matrix if isinstance(r, RelayMatrix) else np.asarray(r)
    W, X, bases = [], [], []
    for i in range(ch.K):
        hbar = equivalent_channel(ch, R, i, i)
        noise = amplified_noise(ch, R, i) + np.eye(ch.M)
        y = whiten(noise, hbar)
        w = herm(y) @ y
        rf = R @ ch.F(i)
        x = herm(rf) @ rf
        if restrict:
            leak = np.vstack([equivalent_channel(ch, R, i, j) for j in range(ch.K) if j != i])
            u = _null_basis(leak, null_tol)
            bases.append(u)
            w = herm(u) @ w @ u
            x = herm(u) @ x @ u
        W.append(0.5 * (w + herm(w)))
        X.append(0.5 * (x + herm(x)))
    residual = scenario.relay_power - float(np.real(np.trace(R @ herm(R))))
    return Q1Problem(tuple(W), tuple(X), residual, tuple(scenario.tx_power),
                     tuple(bases) if restrict else None)


def _is_diag(a):
    return np.all(np.abs(a - np.diag(np.diag(a))) <= 1e-13 * max(1.0, float(np.max(np.abs(a)))))


class _User:
    """Per-user inner maximizer of ``log2det(I+QW) - tr(Q(lam I + mu X))``."""

    def __init__(self, w, x):
        self.w = w
        self.x = x
        self.dim = w.shape[0]
        self.diag = self.dim == 0 or (_is_diag(w) and _is_diag(x))
        if self.diag:
            self.wd = np.clip(np.real(np.diag(w)), 0.0, None)
            self.xd = np.clip(np.real(np.diag(x)), 0.0, None)
        else:
            xe, xu = np.linalg.eigh(x)
            self.xe = np.clip(xe, 0.0, None)
            self.xu = xu
            self.w_rot = herm(xu) @ w @ xu
        wmax = float(np.max(np.real(np.linalg.eigvalsh(w)))) if self.dim else 0.0
        self.wmax = max(wmax, 0.0)

    def solve(self, lam, mu):
        """Maximizer ``Q`` for multipliers ``(lam, mu)``; ``None`` when unbounded."""
        if self.dim == 0:
            return np.zeros((0, 0), complex)
        if self.diag:
            b = lam + mu * self.xd
            q = np.zeros(self.dim)
            on = self.wd > 0
            if np.any(on & (b <= 0)):
                return None
            on &= self.wd > LN2 * b
            q[on] = 1.0 / (LN2 * b[on]) - 1.0 / self.wd[on]
            return np.diag(q).astype(complex)
        b = lam + mu * self.xe
        if np.any(b <= 0):
            return None
        s = 1.0 / np.sqrt(b)
        wt = (s[:, None] * self.w_rot) * s[None, :]
        ev, ev_u = np.linalg.eigh(0.5 * (wt + herm(wt)))
        on = ev > LN2
        if not np.any(on):
            return np.zeros((self.dim, self.dim), complex)
        pw = np.zeros_like(ev)
        pw[on] = 1.0 / LN2 - 1.0 / ev[on]
        qp = (ev_u * pw) @ herm(ev_u)
        t = self.xu * s[None, :]
        return t @ qp @ herm(t)

    def tx_power(self, q):
        return float(np.real(np.trace(q)))

    def relay_power(self, q):
        return float(np.real(np.sum(q * self.x.T)))

    def objective(self, q):
        return float(np.real(np.linalg.slogdet(np.eye(self.dim) + q @ self.w)[1])) / LN2

    def best_response(self, mu, budget, tol):
        """Optimal ``(Q, lam)`` for fixed ``mu`` under ``tr(Q) <= budget``."""
        if self.dim == 0 or self.wmax <= 0:
            return np.zeros((self.dim, self.dim), complex), 0.0
        q0 = self.solve(0.0, mu) if mu > 0 else None
        if q0 is not None and self.tx_power(q0) <= budget * (1 + 1e-12):
            return q0, 0.0
        hi = self.wmax / LN2 * (1.0 + 1e-9) + LAMBDA_FLOOR
        g = lambda lam: self.tx_power(self.solve(lam, mu)) - budget
        lo = LAMBDA_FLOOR
        if g(lo) <= 0:
            return self.solve(lo, mu), lo
        lam = brentq(g, lo, hi, xtol=tol * LAMBDA_FLOOR, rtol=4 * np.finfo(float).eps,
                     maxiter=500)
        q = self.solve(lam, mu)
        # land exactly on the budget from below
        tp = self.tx_power(q)
        if tp > budget:
            q = q * (budget / tp)
        return q, lam


def solve_q1(q, tol=1e-10, max_doublings=200):
    """Solve the precoder program by dual decomposition.

    Returns covariances in the original coordinates (``U_i Q_i U_i^H`` when the
    problem was restricted).
    """
    if not q.feasible:
        raise InfeasibleError(
            f"relay budget exhausted by neutralization (residual budget "
            f"{q.residual_budget:.4g} < 0)", residual=q.residual_budget)
    users = [_User(w, x) for w, x in zip(q.W, q.X)]
    budgets = q.tx_budgets
    pbar = q.residual_budget

    def responses(mu):
        return [u.best_response(mu, b, tol) for u, b in zip(users, budgets)]

    def relay_load(resp):
        return sum(u.relay_power(qq) for u, (qq, _) in zip(users, resp))

    resp = responses(0.0)
    mu = 0.0
    evals = 1
    if relay_load(resp) > pbar * (1 + 1e-12):
        lo, hi = 0.0, 1.0
        for _ in range(max_doublings):
            r_hi = responses(hi)
            evals += 1
            if relay_load(r_hi) <= pbar:
                break
            lo, hi = hi, 2.0 * hi
        else:
            raise RuntimeError("could not bracket the relay multiplier")
        if pbar > 0:
            mu = brentq(lambda m: relay_load(responses(m)) - pbar, lo, hi,
                        xtol=tol * max(1.0, lo) * 1e-2, rtol=4 * np.finfo(float).eps,
                        maxiter=500)
            evals += 1
        else:
            mu = hi
        resp = responses(mu)
        load = relay_load(resp)
        if load > pbar:
            shrink = pbar / load if load > 0 else 0.0
            resp = [(qq * shrink, lam) for qq, lam in resp]
    Qr = [qq for qq, _ in resp]
    lams = [lam for _, lam in resp]
    obj = sum(u.objective(qq) for u, qq in zip(users, Qr))
    kkt = 0.0
    for u, qq, lam, b in zip(users, Qr, lams, budgets):
        tp = u.tx_power(qq)
        kkt = max(kkt, abs(lam * (b - tp)), max(0.0, tp - b))
    load = sum(u.relay_power(qq) for u, qq in zip(users, Qr))
    kkt = max(kkt, abs(mu * (pbar - load)), max(0.0, load - pbar))
    if q.bases is not None:
        Qfull = [u @ qq @ herm(u) for u, qq in zip(q.bases, Qr)]
    else:
        Qfull = Qr
    Qfull = tuple(0.5 * (x + herm(x)) for x in Qfull)
    return Q1Solution(Qfull, tuple(lams), mu, obj, kkt, evals,
                      {"relay_load": load, "residual_budget": pbar})


def q1_objective(q, Q):
    """Objective of the program at covariances ``Q`` given in problem coordinates."""
    total = 0.0
    for w, qq in zip(q.W, Q):
        total += float(np.real(np.linalg.slogdet(np.eye(w.shape[0]) + qq @ w)[1])) / LN2
    return total


def precoders_from_covariances(Q, zero_tol=1e-12):
    """``P_i = U_i D_i^{1/2}`` from ``Q_i = U_i D_i U_i^H``; null modes become zero columns."""
    mats = []
    for q in Q:
        if q.shape[0] == 0:
            mats.append(q)
            continue
        d, u = eigh(q)
        scale = max(float(d[0]), 0.0)
        d = np.where(d > zero_tol * max(scale, 1.0), d, 0.0)
        p = u * np.sqrt(d)[None, :]
        p[:, d == 0] = 0.0
        mats.append(p)
    return Precoders(tuple(mats))


@dataclass(frozen=True, eq=False)
class DesignResult:
    """Outcome of one relay/precoder design algorithm."""

    relay: RelayMatrix
    precoders: Precoders
    report: object
    feasible: bool
    reason: str = ""
    trace: tuple = ()
    info: dict = field(default_factory=dict)

    @property
    def sum_secrecy(self):
        return self.report.sum_secrecy if self.feasible else 0.0


def infeasible_result(ch, reason, relay=None, info=None):
    from .rates import RateReport
    K = ch.K
    relay = relay if relay is not None else RelayMatrix.zero(ch.M, ch.N)
    rep = RateReport((0.0,) * K, (0.0,) * K, (0.0,) * K, 0.0, 0.0, (0.0,) * K)
    return DesignResult(relay, Precoders.zeros(K, ch.M), rep, False, reason, (), info or {})


def effin(ch, scenario, tol=1e-10):
    """Block-diagonal min-norm relay with optimal precoders.

    Infeasibility (too few antennas, or a relay budget below the power the
    relay spends forwarding its own noise) is returned as a flagged result
    with zero secrecy.
    """
    try:
        relay = effin_relay(ch)
    except InfeasibleError as exc:
        return infeasible_result(ch, str(exc))
    floor = float(np.real(np.vdot(relay.matrix, relay.matrix)))
    q = build_q1(ch, relay, scenario)
    if not q.feasible:
        return infeasible_result(
            ch, f"relay budget {scenario.relay_power:.4g} below neutralization "
                f"power {floor:.4g}", relay, {"min_power": floor})
    sol = solve_q1(q, tol)
    p = precoders_from_covariances(sol.Q)
    rep = secrecy_report(ch, relay, p, assume_neutralized=True)
    return DesignResult(relay, p, rep, True, "", (rep.sum_secrecy,),
                        {"min_power": floor, "q1": sol})
