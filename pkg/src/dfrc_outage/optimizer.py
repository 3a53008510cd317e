"""Radar-centric and communication-centric DFRC designs.

Both designs work on lifted matrices ``W_k = w_k w_k^H`` and push them to rank
one with the convex-concave penalty ``sum_k ||W_k||_* - v_k^H W_k v_k``,
where ``v_k`` is the top eigenvector of the previous iterate.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet, ErrorModel
from .conic import ConicBuilder, SolveReport, SolverSettings, Workspace
from .layout import VariableLayout
from .linalg import hermitian_part, hmat, hvec
from .outage import (
    OutageEstimate,
    UserQoS,
    build_B,
    empirical_outage,
    epsilon_of,
    outage_margin,
    soc_rows,
    sum_rate,
    variance_quadratic_factor,
)
from .radar_loss import LossBreakdown, RadarLossConfig, combined_loss, loss_as_conic

log = logging.getLogger(__name__)

ALPHA_MIN = 1e-6


class RelaxationInfeasible(RuntimeError):
    """The penalty-free relaxation has no feasible point (QoS too aggressive)."""


@dataclass(frozen=True)
class RadarCentricConfig:
    qos: tuple[UserQoS, ...]
    power_budget: float
    loss: RadarLossConfig
    zeta_1: float | None = None  # None: 100 x relaxed loss
    mu: float = 0.8  # slower than halving; lands in better local optima
    rank_tol: float = 1e-4
    max_outer_iters: int = 30
    outage_trials: int = 1000
    solver: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        if not 0 < self.mu < 1:
            raise ValueError(f"mu must lie in (0, 1), got {self.mu}")
        if not self.rank_tol > 0:
            raise ValueError("rank_tol must be positive")
        if not self.power_budget > 0:
            raise ValueError("power budget must be positive")


@dataclass(frozen=True)
class CommCentricConfig:
    gammas: tuple[float, ...]
    power_budget: float
    loss: RadarLossConfig
    c1: float = 0.3
    c2: float = 5.0
    bisection_tol: float = 1e-3
    rank_tol: float = 1e-4
    inner_penalty_iters: int = 10
    outage_trials: int = 1000
    solver: SolverSettings = field(default_factory=lambda: SolverSettings(max_iters=20_000))

    def __post_init__(self):
        if self.c1 < 0 or self.c2 < 0:
            raise ValueError("loss thresholds must be nonnegative")
        if not self.bisection_tol > 0:
            raise ValueError("bisection tolerance must be positive")
        if not self.power_budget > 0:
            raise ValueError("power budget must be positive")


# ----------------------------------------------------------------------------
# penalty and rank-one extraction


def top_eigvec(W) -> np.ndarray:
    w, V = np.linalg.eigh(hermitian_part(W))
    return V[:, -1]


def penalty(Ws, anchors) -> float:
    """``sum_k ||W_k||_* - ||A_k||_2 - v_k^H (W_k - A_k) v_k`` with ``v_k`` the top eigenvector of ``A_k``."""
    Ws, anchors = list(Ws), list(anchors)
    if len(Ws) != len(anchors):
        raise ValueError("need one anchor per matrix")
    total = 0.0
    for W, Aj in zip(Ws, anchors):
        W, Aj = np.asarray(W), np.asarray(Aj)
        if W.shape != Aj.shape:
            raise ValueError(f"anchor shape {Aj.shape} does not match {W.shape}")
        lam, V = np.linalg.eigh(hermitian_part(Aj))
        v = V[:, -1]
        nuclear = np.sum(np.linalg.svd(W, compute_uv=False))
        taylor = -lam[-1] - np.real(v.conj() @ (W - Aj) @ v)
        total += nuclear + taylor
    return float(total)


def penalty_coefficients(anchors, layout: VariableLayout) -> np.ndarray:
    """Linear objective ``c`` with ``c @ x == penalty`` for PSD blocks (nuclear norm == trace)."""
    c = np.zeros(layout.size)
    N = layout.num_antennas
    for k, Aj in enumerate(anchors):
        v = top_eigvec(Aj)
        c[layout.w_slice(k)] = hvec(np.eye(N) - np.outer(v, v.conj()))
    return c


def extract_rank1(W):
    """``(sqrt(lam_1) v_1, lam_2 / lam_1)``; the largest-magnitude entry of ``v_1`` is made real positive."""
    W = hermitian_part(W)
    lam, V = np.linalg.eigh(W)
    l1 = lam[-1]
    if l1 <= 0:
        warnings.warn("matrix has no positive eigenvalue; returning a zero beamformer")
        return np.zeros(W.shape[0], complex), 0.0
    v = V[:, -1]
    i = np.argmax(np.abs(v))
    v = v * np.exp(-1j * np.angle(v[i]))
    ratio = float(max(lam[-2], 0.0) / l1) if lam.size > 1 else 0.0
    return np.sqrt(l1) * v, ratio


def rank_ratio(W) -> float:
    lam = np.linalg.eigvalsh(hermitian_part(W))
    if lam[-1] <= 0:
        return 0.0
    return float(max(lam[-2], 0.0) / lam[-1]) if lam.size > 1 else 0.0


def equalize_antenna_power(Ws, power_budget: float):
    """Congruence ``D W_k D`` with diagonal ``D`` so that ``[sum_k W_k]_nn == P_T / N`` exactly.

    Keeps every block PSD and its rank; returns ``(Ws, d)``.
    """
    Ws = np.asarray(Ws)
    N = Ws.shape[-1]
    diag = np.real(np.einsum("knn->n", Ws))
    d = np.sqrt(power_budget / N / np.maximum(diag, 1e-300))
    return Ws * d[None, :, None] * d[None, None, :], d


def best_alpha(R, cfg: RadarLossConfig) -> float:
    """Closed-form minimiser of the matching loss over the scale ``alpha`` (floored at ``ALPHA_MIN``)."""
    from .array import beampattern

    phi = cfg.spec.desired
    den = float(phi @ phi)
    if den == 0:
        return 1.0
    p = beampattern(R, cfg.spec.grid, cfg.array)
    return max(float(phi @ p) / den, ALPHA_MIN)


def loss_at_best_alpha(R, cfg: RadarLossConfig) -> LossBreakdown:
    return combined_loss(R, best_alpha(R, cfg), cfg)


# ----------------------------------------------------------------------------
# problem assembly


@dataclass
class LiftedProblem:
    """A lifted design problem plus the handles needed to read the solution back."""

    layout: VariableLayout
    builder: ConicBuilder
    psd_rows: list[slice]
    loss_F: np.ndarray
    loss_g: np.ndarray
    loss_const: float
    conic_loss: object
    soc_slices: list[slice] = field(default_factory=list)

    def blocks(self, report: SolveReport) -> np.ndarray:
        return np.array([hmat(report.s[sl], self.layout.num_antennas) for sl in self.psd_rows])

    def alpha(self, report: SolveReport) -> float:
        return float(report.x[self.layout.alpha_index])


def _variance_factor(model: ErrorModel | None, N: int, gamma_factor=None) -> np.ndarray:
    if gamma_factor is None:
        if model is None or model.is_zero:
            return np.zeros((N * N, 0))
        gamma_factor = model.gamma_factor()
    return variance_quadratic_factor(gamma_factor, N)


def _base_builder(layout: VariableLayout, power_budget: float) -> tuple[ConicBuilder, list[slice]]:
    N, n = layout.num_antennas, layout.size
    b = ConicBuilder(n)
    psd = []
    for k in range(layout.num_blocks):
        F = np.zeros((layout.block_dim, n))
        F[:, layout.w_slice(k)] = np.eye(layout.block_dim)
        psd.append(b.add_hpsd(F, 0.0, N))
    S = layout.sum_selector()[:N]  # hvec starts with the diagonal
    b.add_equality(S, -power_budget / N * np.ones(N))
    e = np.zeros((1, n))
    e[0, layout.alpha_index] = 1.0
    b.add_nonneg(e, -ALPHA_MIN)
    return b, psd


def build_radar_centric(channels: ChannelSet, model: ErrorModel | None, qos, power_budget: float,
                        loss_cfg: RadarLossConfig, gamma_factor=None) -> LiftedProblem:
    K, N = channels.num_users, channels.num_antennas
    if len(qos) != K:
        raise ValueError(f"need one QoS entry per user ({K}), got {len(qos)}")
    layout = VariableLayout(N, max(K, 1))
    b, psd = _base_builder(layout, power_budget)
    U = _variance_factor(model, N, gamma_factor) if K else None
    socs = []
    for k in range(K):
        r = soc_rows(k, qos[k], channels.c_hat[k], channels.noise_power, U, layout)
        socs.append(b.add_soc(r.G, r.g, r.f, r.f0))
    cl = loss_as_conic(loss_cfg, layout)
    F, g = cl.stacked()
    return LiftedProblem(layout, b, psd, F, g, float(g @ g), cl, socs)


def build_comm_centric(channels: ChannelSet, model: ErrorModel | None, gammas, t: float, power_budget: float,
                       loss_cfg: RadarLossConfig, c1: float, c2: float, gamma_factor=None) -> LiftedProblem:
    K, N = channels.num_users, channels.num_antennas
    layout = VariableLayout(N, max(K, 1))
    b, psd = _base_builder(layout, power_budget)
    cl = loss_as_conic(loss_cfg, layout)
    F1, g1 = cl.epigraph_soc("l1")
    b.add_soc(F1, g1, np.zeros(layout.size), np.sqrt(c1))
    if cl.l2_A.shape[0]:
        F2, g2 = cl.epigraph_soc("l2")
        b.add_soc(F2, g2, np.zeros(layout.size), np.sqrt(c2))
    U = _variance_factor(model, N, gamma_factor)
    eps = epsilon_of(t)
    socs = []
    for k in range(K):
        r = soc_rows(k, UserQoS(gammas[k], t), channels.c_hat[k], channels.noise_power, U, layout, epsilon=eps)
        socs.append(b.add_soc(r.G, r.g, r.f, r.f0))
    F, g = cl.stacked()
    return LiftedProblem(layout, b, psd, F, g, float(g @ g), cl, socs)


def _quadratic(lp: LiftedProblem):
    return 2 * lp.loss_F.T @ lp.loss_F, 2 * lp.loss_F.T @ lp.loss_g


# ----------------------------------------------------------------------------
# radar-centric design


@dataclass
class DesignResult:
    beamformers: np.ndarray | None
    lifted: np.ndarray
    loss: LossBreakdown
    rank_ratios: list[float]
    rank_one: bool
    outage: list[OutageEstimate]
    sum_rate: float
    relaxed_loss: float
    status: str
    trace: list[dict]
    solver_iterations: int
    max_outage: float | None = None
    bisection_steps: tuple[int, int] = (0, 0)
    relaxed_blocks: np.ndarray | None = field(default=None, repr=False)

    @property
    def covariance(self) -> np.ndarray:
        if self.beamformers is not None and self.beamformers.size:
            return self.beamformers.T @ self.beamformers.conj()
        return self.lifted.sum(axis=0)


def seed_words(seed, *extra) -> list[int]:
    """Flatten ``seed`` (int or sequence) plus ``extra`` into a ``SeedSequence`` entropy list."""
    return [int(v) for v in np.atleast_1d(seed)] + [int(v) for v in extra]


def _evaluate_outage(ws, channels, model, qos_list, trials, seed):
    if model is None or not len(ws) or trials <= 0:
        return []
    out = []
    for k, q in enumerate(qos_list):
        out.append(empirical_outage(ws, channels.c_hat[k], model, q, k, channels.noise_power,
                                    trials=trials, seed=seed_words(seed, k)))
    return out


def solve_radar_centric(channels: ChannelSet, model: ErrorModel | None, cfg: RadarCentricConfig,
                        gamma_factor=None, seed: int = 0) -> DesignResult:
    """Penalty-driven rank-one SDR for the radar-centric design.

    Raises
    ------
    RelaxationInfeasible
        If the penalty-free relaxation is infeasible.
    """
    K = channels.num_users
    lp = build_radar_centric(channels, model, cfg.qos, cfg.power_budget, cfg.loss, gamma_factor)
    P, q_loss = _quadratic(lp)
    ws = Workspace(lp.builder.build(q_loss, P), cfg.solver)
    rep = ws.solve()
    total_iters = rep.iterations
    trace = [{"pass": 0, "zeta": math.inf, "objective": rep.objective + lp.loss_const,
              "max_rank_ratio": float("nan"), "status": rep.status, "iterations": rep.iterations}]
    if rep.status == "infeasible_suspected":
        raise RelaxationInfeasible("relaxation of the radar-centric problem is infeasible")
    Ws = lp.blocks(rep)
    relaxed_Ws = Ws.copy()
    relaxed = rep.objective + lp.loss_const
    ratios = [rank_ratio(W) for W in Ws]
    trace[0]["max_rank_ratio"] = max(ratios)

    if K == 0:
        R = Ws[0]
        R, _ = equalize_antenna_power(R[None], cfg.power_budget)
        loss = loss_at_best_alpha(R[0], cfg.loss)
        return DesignResult(None, R, loss, [], True, [], 0.0, relaxed, rep.status, trace, total_iters,
                            relaxed_blocks=relaxed_Ws)

    zeta = cfg.zeta_1 if cfg.zeta_1 is not None else 100.0 * max(relaxed, 1e-3)
    anchors = Ws
    best = (Ws, rep, ratios)
    j = 0
    while max(ratios) >= cfg.rank_tol and j < cfg.max_outer_iters:
        j += 1
        q = q_loss + penalty_coefficients(anchors, lp.layout) / zeta
        rep = ws.solve(q=q, warm=rep)
        total_iters += rep.iterations
        Ws = lp.blocks(rep)
        ratios = [rank_ratio(W) for W in Ws]
        trace.append({"pass": j, "zeta": zeta, "objective": rep.objective + lp.loss_const,
                      "max_rank_ratio": max(ratios), "status": rep.status, "iterations": rep.iterations})
        log.debug("pass %d zeta=%.3g ratio=%.2e status=%s", j, zeta, max(ratios), rep.status)
        anchors = Ws
        if rep.status == "optimal" or max(ratios) < max(best[2]):
            best = (Ws, rep, ratios)
        zeta *= cfg.mu
    rank_one = max(ratios) < cfg.rank_tol
    if not rank_one:
        Ws, rep, ratios = best

    Ws, _ = equalize_antenna_power(Ws, cfg.power_budget)
    wk = np.array([extract_rank1(W)[0] for W in Ws])
    # rank-one polish: rebuild W_k = w_k w_k^H and fix antenna power exactly
    W1 = np.einsum("kn,km->knm", wk, wk.conj())
    W1, d = equalize_antenna_power(W1, cfg.power_budget)
    wk = wk * d[None, :]
    R = wk.T @ wk.conj()
    loss = loss_at_best_alpha(R, cfg.loss)
    status = rep.status if rank_one else "not_rank_one"
    outage = _evaluate_outage(wk, channels, model, cfg.qos, cfg.outage_trials, seed)
    rate = sum_rate(wk, channels)
    return DesignResult(wk, W1, loss, ratios, rank_one, outage, rate, relaxed, status, trace, total_iters,
                        relaxed_blocks=relaxed_Ws)


def outage_margins(ws, channels: ChannelSet, qos, gamma_factor, epsilon=None) -> np.ndarray:
    W = np.einsum("kn,km->knm", ws, np.conj(ws))
    return np.array([outage_margin(W, k, qos[k], channels.c_hat[k], channels.noise_power, gamma_factor, epsilon)
                     for k in range(channels.num_users)])


# ----------------------------------------------------------------------------
# communication-centric design


def _feasible(rep: SolveReport) -> bool:
    return rep.status == "optimal"


def solve_comm_centric(channels: ChannelSet, model: ErrorModel | None, cfg: CommCentricConfig,
                       gamma_factor=None, seed: int = 0) -> DesignResult:
    """Bisection on the max outage level with a feasibility-and-rank-one oracle."""
    K, N = channels.num_users, channels.num_antennas
    if K == 0:
        raise ValueError("the communication-centric design needs at least one user")
    if gamma_factor is None and model is not None and not model.is_zero:
        gamma_factor = model.gamma_factor()
    trace: list[dict] = []
    total_iters = 0

    def make(t):
        lp = build_comm_centric(channels, model, cfg.gammas, t, cfg.power_budget, cfg.loss,
                                cfg.c1, cfg.c2, gamma_factor)
        return lp, Workspace(lp.builder.build(np.zeros(lp.layout.size)), cfg.solver)

    # phase 1: pure feasibility
    lo, hi = 0.0, 0.5
    anchors = None
    steps1 = 0
    while hi - lo > cfg.bisection_tol:
        t = (hi + lo) / 2
        lp, ws = make(t)
        rep = ws.solve()
        total_iters += rep.iterations
        steps1 += 1
        ok = _feasible(rep)
        trace.append({"phase": 1, "t": t, "feasible": ok, "max_rank_ratio": float("nan"), "status": rep.status,
                      "iterations": rep.iterations})
        if ok:
            hi = t
            anchors = lp.blocks(rep)
        else:
            lo = t
    if anchors is None:
        return _comm_result(None, None, channels, model, cfg, 0.5, "infeasible", trace, total_iters, (steps1, 0), seed)

    # phase 2: penalised bisection with rank-one gate
    lo, hi = 0.0, 0.5
    best_W = None
    steps2 = 0
    while hi - lo > cfg.bisection_tol:
        t = (hi + lo) / 2
        lp, ws = make(t)
        steps2 += 1
        rep = None
        cur = anchors
        ratios = [1.0]
        ok = False
        for _ in range(max(cfg.inner_penalty_iters, 1)):
            q = penalty_coefficients(cur, lp.layout)
            rep = ws.solve(q=q, warm=rep)
            total_iters += rep.iterations
            if not _feasible(rep):
                break
            cur = lp.blocks(rep)
            ratios = [rank_ratio(W) for W in cur]
            if max(ratios) < cfg.rank_tol:
                ok = True
                break
        trace.append({"phase": 2, "t": t, "feasible": _feasible(rep), "max_rank_ratio": max(ratios),
                      "status": rep.status, "iterations": rep.iterations})
        if _feasible(rep):
            anchors = cur
        if ok:
            hi = t
            best_W = cur
        else:
            lo = t
    status = "optimal" if best_W is not None else "infeasible"
    return _comm_result(best_W, anchors, channels, model, cfg, hi, status, trace, total_iters, (steps1, steps2), seed)


def _comm_result(best_W, anchors, channels, model, cfg, t_star, status, trace, iters, steps, seed):
    K, N = channels.num_users, channels.num_antennas
    qos = [UserQoS(g, min(max(t_star, 1e-9), 0.5 - 1e-9)) for g in cfg.gammas]
    if best_W is None:
        W = anchors if anchors is not None else np.zeros((K, N, N), complex)
        loss = loss_at_best_alpha(W.sum(axis=0), cfg.loss) if anchors is not None else LossBreakdown(np.nan, np.nan, cfg.loss.delta, np.nan)
        return DesignResult(None, W, loss, [rank_ratio(x) for x in W] if anchors is not None else [], False, [],
                            0.0, float("nan"), status, trace, iters, max_outage=t_star, bisection_steps=steps)
    Ws, _ = equalize_antenna_power(best_W, cfg.power_budget)
    ratios = [rank_ratio(W) for W in Ws]
    wk = np.array([extract_rank1(W)[0] for W in Ws])
    W1 = np.einsum("kn,km->knm", wk, wk.conj())
    W1, d = equalize_antenna_power(W1, cfg.power_budget)
    wk = wk * d[None, :]
    R = wk.T @ wk.conj()
    loss = loss_at_best_alpha(R, cfg.loss)
    outage = _evaluate_outage(wk, channels, model, qos, cfg.outage_trials, seed)
    return DesignResult(wk, W1, loss, ratios, True, outage, sum_rate(wk, channels), float("nan"), status, trace,
                        iters, max_outage=t_star, bisection_steps=steps)


# ----------------------------------------------------------------------------
# Gaussian randomisation baseline


@dataclass
class BaselineResult:
    beamformers: np.ndarray | None
    loss: LossBreakdown | None
    num_feasible: int
    num_candidates: int


def randomization_baseline(relaxed_Ws, channels: ChannelSet, model: ErrorModel | None, qos, power_budget: float,
                           loss_cfg: RadarLossConfig, num_candidates: int, seed=0, gamma_factor=None,
                           row_norm: str = "squared", batch: int = 2000) -> BaselineResult:
    """Draw ``w_k ~ CN(0, W~_k)``, equalise antenna rows, keep cone-feasible sets, return the best loss.

    ``row_norm="squared"`` scales each antenna row to squared norm ``P_T / N``
    (meets the per-antenna constraint exactly); ``"norm"`` scales it to norm ``P_T / N``.
    """
    from .array import steering_matrix

    K, N = channels.num_users, channels.num_antennas
    if num_candidates <= 0 or K == 0:
        return BaselineResult(None, None, 0, max(num_candidates, 0))
    if row_norm not in ("squared", "norm"):
        raise ValueError(f"row_norm must be 'squared' or 'norm', got {row_norm!r}")
    target = power_budget / N if row_norm == "squared" else (power_budget / N) ** 2
    relaxed_Ws = np.asarray(relaxed_Ws)
    factors = []
    for W in relaxed_Ws:
        lam, V = np.linalg.eigh(hermitian_part(W))
        factors.append(V * np.sqrt(np.maximum(lam, 0.0)))
    factors = np.array(factors)  # (K, N, N)
    if gamma_factor is None and model is not None and not model.is_zero:
        gamma_factor = model.gamma_factor()
    U = _variance_factor(None if gamma_factor is None else model, N, gamma_factor)
    A = steering_matrix(loss_cfg.array, loss_cfg.spec.grid.points)
    D = steering_matrix(loss_cfg.array, loss_cfg.spec.dois)
    phi = loss_cfg.spec.desired
    M = D.shape[0]
    iu = np.triu_indices(M, 1)
    gammas = np.array([q.gamma for q in qos])
    eps = np.array([epsilon_of(q.p_out) for q in qos])
    sigma2 = channels.noise_power

    rng = np.random.default_rng(seed)
    best_loss, best_w, feasible = np.inf, None, 0
    done = 0
    while done < num_candidates:
        n = min(batch, num_candidates - done)
        z = (rng.standard_normal((n, K, N)) + 1j * rng.standard_normal((n, K, N))) / np.sqrt(2)
        w = np.einsum("kij,ckj->cki", factors, z)
        rows = np.sum(np.abs(w) ** 2, axis=1)  # (n, N)
        w = w * np.sqrt(target / np.maximum(rows, 1e-300))[:, None, :]
        # per-user cone test
        gains = np.real(np.einsum("ckn,jnm,ckm->cjk", w.conj(), channels.c_hat, w))  # user j, beam k
        ok = np.ones(n, bool)
        Wk = np.einsum("ckn,ckm->cknm", w, w.conj())
        Wsum = Wk.sum(axis=1)
        for j in range(K):
            mean = gains[:, j, j] / gammas[j] - (gains[:, j].sum(axis=1) - gains[:, j, j]) - sigma2
            if U.shape[1]:
                Bj = Wk[:, j] / gammas[j] - (Wsum - Wk[:, j])
                sd = np.linalg.norm(hvec(Bj) @ U, axis=1)
            else:
                sd = 0.0
            ok &= eps[j] * mean - sd >= 0
        done += n
        if not np.any(ok):
            continue
        feasible += int(ok.sum())
        wf = w[ok]
        p = np.sum(np.abs(np.einsum("ln,ckn->ckl", A.conj(), wf)) ** 2, axis=1)
        den = phi @ phi
        alpha = np.maximum((p @ phi) / den, ALPHA_MIN) if den > 0 else np.ones(len(wf))
        l1 = np.mean((alpha[:, None] * phi[None, :] - p) ** 2, axis=1)
        if M >= 2:
            proj = np.einsum("mn,ckn->ckm", D.conj(), wf)  # a_m^H w_k
            C = np.einsum("ckm,ckp->cmp", proj, proj.conj())  # a_m^H R a_p
            l2 = 2.0 / (M * M - M) * np.sum(np.abs(C[:, iu[0], iu[1]]) ** 2, axis=1)
        else:
            l2 = np.zeros(len(wf))
        total = l1 + loss_cfg.delta * l2
        i = int(np.argmin(total))
        if total[i] < best_loss:
            best_loss = float(total[i])
            best_w = wf[i]
    if best_w is None:
        return BaselineResult(None, None, 0, num_candidates)
    R = best_w.T @ best_w.conj()
    return BaselineResult(best_w, loss_at_best_alpha(R, loss_cfg), feasible, num_candidates)
