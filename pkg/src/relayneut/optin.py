"""Optimized neutralization: alternate a relay-side ascent and the precoder program.

The relay is parameterized through the block-diagonal end-to-end target
``T = diag(T_1, ..., T_K) = (H + G^H R F) P`` and recovered as
``R = G^{H+} (T - H P) (F P)^+``.  For fixed precoders the sum secrecy rate
becomes

    sum_i log2det(X_i + Tbar_i Z_i Tbar_i^H) - log2det(X_i + Tbar_i Y_i Tbar_i^H)

with ``Tbar_i = [T_i, I]``, and the relay power is a convex quadratic in ``T``.
The ascent runs in orthonormal coordinates of the targets the relay can
actually realize, with exact projection onto the power ellipsoid.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .channel import Precoders
from .effin import (DesignResult, build_q1, effin, infeasible_result,
                    precoders_from_covariances, solve_q1)
from .neutralize import UnreachableTargetError, relay_from_target
from .numerics import herm, logdet_psd, pinv
from .rates import secrecy_report

LN2 = math.log(2.0)


@dataclass(frozen=True)
class OptinOptions:
    threshold: float = 1e-4        # stop when a step or an alternation gains less
    max_outer: int = 30
    max_inner: int = 200
    armijo: float = 1e-4
    shrink: float = 0.5
    initial_step: float = 1.0
    max_backtracks: int = 60


@dataclass(frozen=True, eq=False)
class Q2Instance:
    K: int
    M: int
    Ftil: np.ndarray      # (FP)^+ (FP)^{H+}
    X: tuple              # sum_m sum_l H_im P_m Ftil_ml P_l^H H_il^H
    Y: tuple
    Z: tuple
    C: tuple              # sum_m H_im P_m Ftil_mi
    pinv_GH: np.ndarray   # G^{H+}
    HP: np.ndarray
    GG: np.ndarray        # G^+ G^{H+}
    proj_F: np.ndarray    # (FP)^+ (FP)
    proj_G: np.ndarray    # G^H G^{H+}
    rank_deficient: bool
    X_stack: np.ndarray = None
    F_diag: np.ndarray = None
    C_stack: np.ndarray = None

    def block(self, a, i, j=None):
        M = self.M
        j = i if j is None else j
        return a[i * M:(i + 1) * M, j * M:(j + 1) * M]


def build_q2(ch, p):
    K, M = ch.K, ch.M
    H, GH, F = ch.H_stacked(), ch.GH_stacked(), ch.F_stacked()
    P = p.stacked()
    FP = F @ P
    FPp = pinv(FP)
    GHp = pinv(GH)
    Ftil = FPp @ herm(FPp)
    Ftil = 0.5 * (Ftil + herm(Ftil))
    HP = H @ P
    X, Y, Z, C = [], [], [], []
    for i in range(K):
        row = HP[i * M:(i + 1) * M, :]
        x = row @ Ftil @ herm(row)
        c = row @ Ftil[:, i * M:(i + 1) * M]
        fii = Ftil[i * M:(i + 1) * M, i * M:(i + 1) * M]
        y = np.block([[fii, -herm(c)], [-c, np.eye(M)]])
        z = y.copy()
        z[:M, :M] += np.eye(M)
        X.append(0.5 * (x + herm(x)))
        Y.append(y)
        Z.append(z)
        C.append(c)
    proj_F = FPp @ FP
    proj_G = GH @ GHp
    eye = np.eye(K * M)
    deficient = bool(np.linalg.norm(proj_F - eye) > 1e-9 or np.linalg.norm(proj_G - eye) > 1e-9)
    return Q2Instance(K, M, Ftil, tuple(X), tuple(Y), tuple(Z), tuple(C), GHp, HP,
                      herm(GHp) @ GHp, proj_F, proj_G, deficient,
                      np.stack(X), _diag_blocks(Ftil, K, M), np.stack(C))


def _hb(a):
    return np.conj(np.swapaxes(a, -1, -2))


def _diag_blocks(a, K, M):
    idx = np.arange(K)
    return a.reshape(K, M, K, M)[idx, :, idx, :]


def _terms(q2, T):
    """Stacked ``(A_i, B_i)`` = (X_i + Tbar Y Tbar^H, X_i + Tbar Z Tbar^H)."""
    t = _diag_blocks(T, q2.K, q2.M)
    th = _hb(t)
    a = q2.X_stack + np.eye(q2.M) + t @ q2.F_diag @ th - t @ _hb(q2.C_stack) - q2.C_stack @ th
    a = 0.5 * (a + _hb(a))
    b = a + t @ th
    return t, a, 0.5 * (b + _hb(b))


def _logdet2(a):
    L = np.linalg.cholesky(a)
    return 2.0 * np.sum(np.log(np.real(np.diagonal(L, axis1=-2, axis2=-1))), axis=-1) / LN2


def user_objectives(q2, T):
    _, a, b = _terms(q2, T)
    return _logdet2(b) - _logdet2(a)


def q2_objective(q2, T):
    return float(np.sum(user_objectives(q2, T)))


def q2_power(q2, T):
    d = T - q2.HP
    m = q2.pinv_GH @ d
    s = q2.Ftil + np.eye(q2.Ftil.shape[0])
    return float(np.real(np.trace(m @ s @ herm(m))))


def objective_gradient(q2, T):
    """Block-diagonal ``d f / d T^*`` of the log2 objective."""
    K, M = q2.K, q2.M
    t, a, b = _terms(q2, T)
    gb = np.linalg.solve(b, t @ (np.eye(M) + q2.F_diag) - q2.C_stack)
    ga = np.linalg.solve(a, t @ q2.F_diag - q2.C_stack)
    g = (gb - ga) / LN2
    out = np.zeros((K, M, K, M), dtype=complex)
    idx = np.arange(K)
    out[idx, :, idx, :] = g
    return out.reshape(K * M, K * M)


def power_gradient(q2, T):
    """Dense ``d g / d T^*`` of the relay power."""
    return q2.GG @ (T - q2.HP) @ (q2.Ftil + np.eye(q2.Ftil.shape[0]))


def q2_gradient(q2, T, lam):
    """Block-diagonal part of the Lagrangian gradient ``d L / d T^*``."""
    g = objective_gradient(q2, T) - lam * power_gradient(q2, T)
    return block_diagonal_part(g, q2.K, q2.M)


def block_diagonal_part(a, K, M):
    out = np.zeros_like(a)
    for i in range(K):
        s = slice(i * M, (i + 1) * M)
        out[s, s] = a[s, s]
    return out


def rate_from_target(ch, p, T):
    """Leakage-free sum rate of the relay realizing ``T`` (direct evaluation)."""
    relay = relay_from_target(ch, p, T, check=False)
    return secrecy_report(ch, relay, p, assume_neutralized=True, tol=np.inf).sum_secrecy


class _Coordinates:
    """Orthonormal coordinates ``w`` of the realizable block-diagonal targets.

    ``T(w) = T0 + sum_k w_k E_k`` with ``{E_k}`` Frobenius-orthonormal, so the
    Euclidean geometry of ``w`` is the Frobenius geometry of ``T``.
    """

    def __init__(self, q2, T0):
        K, M = q2.K, q2.M
        KM = K * M
        rows, cols = [], []
        for i in range(K):
            for b in range(M):
                for a in range(M):
                    rows.append(i * M + a)
                    cols.append(i * M + b)
        self.rows = np.array(rows)
        self.cols = np.array(cols)
        self.shape = (KM, KM)
        self.T0 = T0
        self.basis = None
        if not q2.rank_deficient:
            return
        eye = np.eye(KM)
        pf = np.real(np.diag(q2.proj_F))
        coordinate = (np.linalg.norm(q2.proj_G - eye) <= 1e-9
                      and np.linalg.norm(q2.proj_F - np.diag(pf)) <= 1e-9
                      and np.all(np.minimum(np.abs(pf), np.abs(pf - 1.0)) <= 1e-9))
        if coordinate:
            # proj_F selects the active streams: inactive target columns stay zero
            keep = pf[self.cols] > 0.5
            self.rows, self.cols = self.rows[keep], self.cols[keep]
        else:
            # (T - HP) must equal proj_G (T - HP) proj_F
            big = np.eye(KM * KM) - np.kron(q2.proj_F.T, q2.proj_G)
            con = big[:, self.cols * KM + self.rows]
            _, s, vh = np.linalg.svd(con)
            rank = int(np.sum(s > 1e-9 * max(1.0, s[0] if s.size else 1.0)))
            self.basis = herm(vh)[:, rank:]

    @property
    def dim(self):
        return self.rows.size if self.basis is None else self.basis.shape[1]

    def entries(self, T):
        return T[self.rows, self.cols]

    def to_target(self, w):
        u = w if self.basis is None else self.basis @ w
        T = self.T0.copy()
        T[self.rows, self.cols] += u
        return T

    def pull(self, G):
        """Coordinates of the projection of a matrix gradient."""
        u = G[self.rows, self.cols]
        return u if self.basis is None else herm(self.basis) @ u


class _PowerEllipsoid:
    """``g(w) = w^H Q w + 2 Re(q^H w) + c`` and projection onto ``g <= budget``."""

    def __init__(self, q2, coords, budget):
        S = q2.Ftil + np.eye(q2.Ftil.shape[0])
        rows, cols = coords.rows, coords.cols
        quu = S.T[np.ix_(cols, cols)] * q2.GG[np.ix_(rows, rows)]
        d0 = coords.T0 - q2.HP
        lin = (q2.GG @ d0 @ S)[rows, cols]
        c = q2_power(q2, coords.T0)
        if coords.basis is not None:
            B = coords.basis
            quu = herm(B) @ quu @ B
            lin = herm(B) @ lin
        self.Q = 0.5 * (quu + herm(quu))
        self.q = lin
        self.c = c
        e, V = np.linalg.eigh(self.Q)
        floor = 1e-14 * max(1.0, float(e[-1]))
        self.e = np.clip(e, floor, None)
        self.V = V
        qv = herm(V) @ lin
        self.center = -(V @ (qv / self.e))
        self.min_power = float(c - np.real(np.sum(np.abs(qv) ** 2 / self.e)))
        self.budget = budget

    def value(self, w):
        return float(np.real(np.vdot(w, self.Q @ w)) + 2 * np.real(np.vdot(self.q, w)) + self.c)

    def gradient(self, w):
        return self.Q @ w + self.q

    @property
    def radius(self):
        return self.budget - self.min_power

    def project(self, v):
        if self.value(v) <= self.budget:
            return v
        r = self.radius
        z = herm(self.V) @ (v - self.center)
        ez = self.e * np.abs(z) ** 2

        def excess(mu):
            return float(np.sum(ez / (1.0 + mu * self.e) ** 2)) - r

        hi = 1.0 / self.e.max()
        while excess(hi) > 0:
            hi *= 4.0
        mu = brentq(excess, 0.0, hi, xtol=1e-14 * hi, rtol=4 * np.finfo(float).eps, maxiter=500)
        zz = z / (1.0 + mu * self.e)
        cur = float(np.sum(self.e * np.abs(zz) ** 2))
        if cur > r:
            zz = zz * math.sqrt(r / cur)
        return self.center + self.V @ zz


@dataclass(frozen=True, eq=False)
class OptinState:
    T: np.ndarray
    lam: float
    objective: float
    power: float
    power_residual: float
    iteration: int
    history: tuple = ()
    line_search_failed: bool = False
    slackness: float = 0.0


class InfeasibleTargetError(RuntimeError):
    pass


def solve_q2(q2, T_init, relay_budget, opts=None):
    """Projected gradient ascent over realizable targets within the power budget."""
    opts = opts or OptinOptions()
    coords = _Coordinates(q2, T_init.copy())
    ell = _PowerEllipsoid(q2, coords, relay_budget)
    if ell.min_power > relay_budget * (1 + 1e-9):
        raise InfeasibleTargetError(
            f"no realizable target within the relay budget (needs {ell.min_power:.4g})")
    w = np.zeros(coords.dim, dtype=complex)
    if ell.value(w) > relay_budget * (1 + 1e-9) + 1e-9:
        raise InfeasibleTargetError(
            f"initial target needs relay power {ell.value(w):.4g} > {relay_budget:.4g}")

    def f(w_):
        return q2_objective(q2, coords.to_target(w_))

    fw = f(w)
    history = [fw]
    step = opts.initial_step
    failed = False
    it = 0
    for it in range(1, opts.max_inner + 1):
        T = coords.to_target(w)
        grad = coords.pull(objective_gradient(q2, T))
        gnorm = float(np.linalg.norm(grad))
        if gnorm == 0.0:
            break
        accepted = False
        for _ in range(opts.max_backtracks):
            w_new = ell.project(w + step * grad)
            dw = w_new - w
            pred = 2.0 * float(np.real(np.vdot(grad, dw)))
            if pred <= 0.0:
                step *= opts.shrink
                continue
            f_new = f(w_new)
            if f_new >= fw + opts.armijo * pred:
                accepted = True
                break
            step *= opts.shrink
        if not accepted:
            failed = True
            break
        gain = f_new - fw
        w, fw = w_new, f_new
        history.append(fw)
        step = min(step * 2.0, 1e12)
        if gain < opts.threshold:
            break
    T = coords.to_target(w)
    power = ell.value(w)
    resid = relay_budget - power
    lam = 0.0
    if resid <= 1e-6 * max(1.0, relay_budget):
        gg = ell.gradient(w)
        gf = coords.pull(objective_gradient(q2, T))
        denom = float(np.real(np.vdot(gg, gg)))
        lam = max(0.0, float(np.real(np.vdot(gg, gf))) / denom) if denom > 0 else 0.0
    return OptinState(T, lam, fw, power, resid, it, tuple(history), failed,
                      abs(lam * resid))


def _target(ch, relay, p):
    H, GH, F = ch.H_stacked(), ch.GH_stacked(), ch.F_stacked()
    T = (H + GH @ relay.matrix @ F) @ p.stacked()
    return block_diagonal_part(T, ch.K, ch.M)


def optin(ch, scenario, opts=None, start=None):
    """Alternating relay/precoder optimization seeded at the EFFIN design.

    ``start`` may supply an already computed EFFIN result.  Returns a
    :class:`DesignResult` whose ``trace`` holds the sum secrecy after the seed
    and after every relay and precoder update; ``info["iterates"]`` keeps the
    matching ``(relay, precoders)`` pairs.
    """
    opts = opts or OptinOptions()
    seed = start if start is not None else effin(ch, scenario)
    if not seed.feasible:
        return infeasible_result(ch, "seed design infeasible: " + seed.reason, seed.relay)
    relay, p = seed.relay, seed.precoders
    best = seed.report.sum_secrecy
    trace = [best]
    iterates = [(relay, p)]
    flags = []
    for outer in range(opts.max_outer):
        q2 = build_q2(ch, p)
        try:
            state = solve_q2(q2, _target(ch, relay, p), scenario.relay_power, opts)
            new_relay = relay_from_target(ch, p, state.T)
        except (InfeasibleTargetError, UnreachableTargetError) as exc:
            flags.append(f"outer {outer}: relay update rejected ({exc})")
            break
        if state.line_search_failed:
            flags.append(f"outer {outer}: line search stalled")
        after_relay = secrecy_report(ch, new_relay, p, assume_neutralized=True).sum_secrecy
        if after_relay < best - 1e-9:
            flags.append(f"outer {outer}: relay update decreased the objective")
            break
        relay = new_relay
        iterates.append((relay, p))
        trace.append(after_relay)

        q1 = build_q1(ch, relay, scenario, restrict=True)
        new_p = precoders_from_covariances(solve_q1(q1).Q)
        rep = secrecy_report(ch, relay, new_p, assume_neutralized=True)
        if rep.sum_secrecy >= after_relay - 1e-9:
            p = new_p
            current = rep.sum_secrecy
        else:
            flags.append(f"outer {outer}: precoder update decreased the objective; kept")
            current = after_relay
        iterates.append((relay, p))
        trace.append(current)
        gain = current - best
        best = max(best, current)
        if gain < opts.threshold:
            break
    report = secrecy_report(ch, relay, p, assume_neutralized=True)
    return DesignResult(relay, p, report, True, "", tuple(trace),
                        {"iterates": iterates, "flags": flags, "effin": seed,
                         "min_power": seed.info.get("min_power")})
