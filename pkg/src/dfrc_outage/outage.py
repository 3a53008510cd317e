"""SINR, trace reformulation of the outage constraint, its SOC/LMI forms and Monte-Carlo checks."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

from .channel import ChannelSet, ErrorModel
from .layout import VariableLayout
from .linalg import hermitian_basis_map, hvec


@dataclass(frozen=True)
class UserQoS:
    gamma: float
    p_out: float = 0.1

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"SINR threshold must be positive, got {self.gamma}")
        if not 0 < self.p_out < 0.5:
            raise ValueError(f"outage budget must lie in (0, 0.5), got {self.p_out}")

    @classmethod
    def from_db(cls, gamma_db: float, p_out: float = 0.1) -> "UserQoS":
        return cls(10 ** (gamma_db / 10), p_out)


def sinr_from_covariance(C, ws, sigma2: float, k: int) -> float:
    """``w_k^H C w_k / (sum_{j != k} w_j^H C w_j + sigma2)`` for beamformers ``ws`` (K x N)."""
    if not sigma2 > 0:
        raise ValueError(f"noise power must be positive, got {sigma2}")
    ws = np.atleast_2d(ws)
    q = np.real(np.einsum("kn,nm,km->k", ws.conj(), C, ws))
    return float(q[k] / (q.sum() - q[k] + sigma2))


def build_B(Ws, k: int, gamma_k: float) -> np.ndarray:
    """``W_k / gamma_k - sum_{j != k} W_j``."""
    if not gamma_k > 0:
        raise ValueError(f"SINR threshold must be positive, got {gamma_k}")
    Ws = np.asarray(Ws)
    return Ws[k] / gamma_k - (Ws.sum(axis=0) - Ws[k])


def epsilon_of(p: float) -> float:
    """Cone slope ``1 / (sqrt(2) erfinv(1 - 2p))`` for an outage budget ``p``."""
    if not 0 < p < 0.5:
        raise ValueError(f"outage budget must lie in (0, 0.5), got {p}")
    return float(1.0 / (np.sqrt(2) * special.erfinv(1 - 2 * p)))


def gaussian_outage(mean_margin: float, std: float) -> float:
    """``Pr[Tr(B C_hat) - sigma^2 + Z < 0]`` for ``Z ~ N(0, std^2)``; the closed form behind the cone."""
    if std == 0:
        return float(mean_margin < 0)
    return float(0.5 * special.erfc(mean_margin / (np.sqrt(2) * std)))


def variance_independent(B, Sigma) -> float:
    """``sum_ij |b_ij|^2 sigma_ij^2``: variance of ``-Tr[B E]`` for independent entries."""
    B, Sigma = np.asarray(B), np.asarray(Sigma, dtype=float)
    if B.shape != Sigma.shape:
        raise ValueError(f"B {B.shape} and Sigma {Sigma.shape} differ in shape")
    return float(np.linalg.norm(np.abs(B) * Sigma) ** 2)


def variance_dependent(B, gamma_factor) -> float:
    """``||Gamma~^H vec(B)||^2`` with column-stacked ``vec``."""
    b = np.asarray(B).ravel(order="F")
    G = np.asarray(gamma_factor)
    if G.shape[0] != b.size:
        raise ValueError(f"gamma factor has {G.shape[0]} rows, vec(B) has {b.size} entries")
    return float(np.linalg.norm(G.conj().T @ b) ** 2)


def hermitian_vec_map(N: int) -> np.ndarray:
    """Complex ``N^2 x N^2`` matrix ``T`` with ``vec(X) == T @ hvec(X)``."""
    return hermitian_basis_map(N, lambda X: X.ravel(order="F"))


def variance_quadratic_factor(gamma_factor: np.ndarray, N: int, tol: float = 1e-12) -> np.ndarray:
    """Real ``U`` with ``||U^T hvec(B)||^2 == ||Gamma~^H vec(B)||^2`` for Hermitian ``B``.

    Columns belonging to zero eigenvalues are dropped, so an error-free model
    gives an empty factor.
    """
    T = hermitian_vec_map(N)
    GT = np.asarray(gamma_factor).conj().T @ T
    Q = np.real(GT.conj().T @ GT)
    Q = (Q + Q.T) / 2
    w, V = np.linalg.eigh(Q)
    keep = w > tol * max(1.0, np.abs(w).max())
    return V[:, keep] * np.sqrt(w[keep])


@dataclass
class SocRows:
    """One cone ``||G x + g|| <= f @ x + f0`` in solver variables."""

    G: np.ndarray
    g: np.ndarray
    f: np.ndarray
    f0: float

    def lhs(self, x) -> float:
        if self.G.shape[0] == 0:
            return 0.0
        return float(np.linalg.norm(self.G @ x + self.g))

    def rhs(self, x) -> float:
        return float(self.f @ x + self.f0)

    def margin(self, x) -> float:
        return self.rhs(x) - self.lhs(x)


def b_selector(layout: VariableLayout, k: int, gamma_k: float) -> np.ndarray:
    """Matrix ``S`` with ``S @ x == hvec(B_k)``."""
    d = layout.block_dim
    S = np.zeros((d, layout.size))
    for j in range(layout.num_blocks):
        S[:, layout.w_slice(j)] = np.eye(d) * (1.0 / gamma_k if j == k else -1.0)
    return S


def soc_rows(k: int, qos: UserQoS, c_hat_k, sigma2: float, variance_factor: np.ndarray,
             layout: VariableLayout, epsilon: float | None = None) -> SocRows:
    """Deterministic outage constraint ``sd(-Tr[B_k E_k]) <= eps_k (Tr[B_k C_hat_k] - sigma2)``.

    ``variance_factor`` is the output of :func:`variance_quadratic_factor`.
    ``epsilon`` overrides ``epsilon_of(qos.p_out)`` (the bisection sets it from ``t``).
    """
    eps = epsilon_of(qos.p_out) if epsilon is None else epsilon
    S = b_selector(layout, k, qos.gamma)
    G = variance_factor.T @ S
    f = eps * (hvec(np.asarray(c_hat_k)) @ S)
    return SocRows(G=G, g=np.zeros(G.shape[0]), f=f, f0=-eps * sigma2)


def outage_margin(Ws, k: int, qos: UserQoS, c_hat_k, sigma2: float, gamma_factor,
                  epsilon: float | None = None) -> float:
    """``eps (Tr[B C_hat] - sigma2) - sd``; nonnegative iff the cone holds at ``Ws``."""
    eps = epsilon_of(qos.p_out) if epsilon is None else epsilon
    B = build_B(Ws, k, qos.gamma)
    mean = np.real(np.trace(B @ c_hat_k)) - sigma2
    return float(eps * mean - np.sqrt(variance_dependent(B, gamma_factor)))


def lmi_block(Ws, k: int, qos: UserQoS, c_hat_k, sigma2: float, gamma_factor,
              epsilon: float | None = None) -> np.ndarray:
    """``[[s I, g], [g^H, s]]`` with ``s = eps (Tr[B C_hat] - sigma2)`` and ``g = Gamma~^H vec(B)``."""
    eps = epsilon_of(qos.p_out) if epsilon is None else epsilon
    B = build_B(Ws, k, qos.gamma)
    s = eps * (np.real(np.trace(B @ c_hat_k)) - sigma2)
    g = np.asarray(gamma_factor).conj().T @ B.ravel(order="F")
    n = g.size
    D = np.zeros((n + 1, n + 1), complex)
    D[:n, :n] = s * np.eye(n)
    D[:n, n] = g
    D[n, :n] = g.conj()
    D[n, n] = s
    return D


@dataclass(frozen=True)
class OutageEstimate:
    fraction: float
    trials: int

    @property
    def stderr(self) -> float:
        p = self.fraction
        return float(np.sqrt(max(p * (1 - p), 0.0) / self.trials))


def _user_gains(ws, C):
    """``w_j^H C w_j`` for every beamformer ``j`` and every matrix in the stack ``C``."""
    return np.real(np.einsum("jn,...nm,jm->...j", ws.conj(), C, ws))


def empirical_outage(ws, c_hat_k, model: ErrorModel, qos: UserQoS, k: int, sigma2: float,
                     trials: int = 1000, seed=0, batch: int = 10_000) -> OutageEstimate:
    """Fraction of error draws with ``SINR_k < gamma_k`` at ``C_hat_k + E``."""
    if trials < 100:
        raise ValueError("empirical_outage needs at least 100 trials for a meaningful estimate")
    ws = np.atleast_2d(np.asarray(ws, dtype=complex))
    rng = np.random.default_rng(seed)
    base = _user_gains(ws, c_hat_k)
    fails = 0
    done = 0
    while done < trials:
        n = min(batch, trials - done)
        q = base + _user_gains(ws, model.sample(rng, n))
        signal = q[:, k]
        interference = q.sum(axis=1) - signal
        fails += int(np.count_nonzero(signal < qos.gamma * (interference + sigma2)))
        done += n
    return OutageEstimate(fails / trials, trials)


def sum_rate(ws, channels: ChannelSet, duty_ratio: float = 1.0, model: ErrorModel | None = None,
             trials: int = 0, seed=0) -> float:
    """``duty_ratio * sum_k log2(1 + SINR_k)``.

    SINR is evaluated at the estimates ``C_hat_k``; with ``model`` and
    ``trials > 0`` it is instead averaged over ``C_hat_k + E`` draws.
    """
    if duty_ratio < 1:
        warnings.warn("duty_ratio below 1 shrinks rates; expected (transmit + listen) / transmit")
    ws = np.atleast_2d(np.asarray(ws, dtype=complex))
    K = channels.num_users
    sigma2 = channels.noise_power
    if K == 0:
        return 0.0
    if model is None or trials <= 0:
        total = sum(np.log2(1 + sinr_from_covariance(channels.c_hat[k], ws, sigma2, k)) for k in range(K))
        return float(duty_ratio * total)
    rng = np.random.default_rng(seed)
    total = 0.0
    for k in range(K):
        q = _user_gains(ws, channels.c_hat[k] + model.sample(rng, trials))
        sig = q[:, k]
        sinr = sig / (q.sum(axis=1) - sig + sigma2)
        total += np.mean(np.log2(1 + np.maximum(sinr, 0.0)))
    return float(duty_ratio * total)
