"""Beampattern-matching MSE, DOI cross-correlation loss and their conic form."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .array import ArrayConfig, BeampatternSpec, steering_matrix
from .layout import VariableLayout
from .linalg import hermitian_part, hvec


@dataclass(frozen=True)
class RadarLossConfig:
    spec: BeampatternSpec
    array: ArrayConfig
    delta: float = 1.0

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError(f"delta must be nonnegative, got {self.delta}")


@dataclass(frozen=True)
class LossBreakdown:
    l1: float
    l2: float
    delta: float
    alpha: float

    @property
    def combined(self) -> float:
        return self.l1 + self.delta * self.l2


def _check_dims(R, cfg: ArrayConfig):
    R = hermitian_part(R)
    if R.shape[0] != cfg.num_antennas:
        raise ValueError(f"R is {R.shape[0]}x{R.shape[0]} but the array has {cfg.num_antennas} elements")
    return R


def l1_loss(R, alpha: float, spec: BeampatternSpec, cfg: ArrayConfig) -> float:
    """Grid-averaged squared mismatch between ``alpha * desired`` and the beampattern."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    R = _check_dims(R, cfg)
    A = steering_matrix(cfg, spec.grid.points)
    achieved = np.real(np.einsum("ln,nm,lm->l", A.conj(), R, A))
    return float(np.mean((alpha * spec.desired - achieved) ** 2))


def l2_loss(R, dois, cfg: ArrayConfig) -> float:
    """Mean squared cross-correlation ``|a^H(t_m) R a(t_n)|^2`` over DOI pairs; 0 for one DOI."""
    R = _check_dims(R, cfg)
    dois = np.atleast_1d(dois)
    M = dois.size
    if M < 1:
        raise ValueError("at least one direction of interest is required")
    if M == 1:
        return 0.0
    A = steering_matrix(cfg, dois)
    C = A.conj() @ R @ A.T
    iu = np.triu_indices(M, 1)
    return float(2.0 / (M * M - M) * np.sum(np.abs(C[iu]) ** 2))


def combined_loss(R, alpha: float, cfg: RadarLossConfig) -> LossBreakdown:
    l1 = l1_loss(R, alpha, cfg.spec, cfg.array)
    l2 = l2_loss(R, cfg.spec.dois, cfg.array)
    return LossBreakdown(l1=l1, l2=l2, delta=cfg.delta, alpha=float(alpha))


@dataclass
class ConicLoss:
    """Affine residual blocks ``r_i(x) = A_i x + b_i`` with ``L_i = w_i * ||r_i||^2``.

    ``combined = L_l1 + delta * L_l2``; ``delta`` is already folded into
    :meth:`stacked` but not into ``l2_weight``.
    """

    l1_A: np.ndarray
    l1_b: np.ndarray
    l1_weight: float
    l2_A: np.ndarray
    l2_b: np.ndarray
    l2_weight: float
    delta: float
    layout: VariableLayout = field(repr=False)

    def l1_value(self, x) -> float:
        r = self.l1_A @ x + self.l1_b
        return float(self.l1_weight * r @ r)

    def l2_value(self, x) -> float:
        if self.l2_A.shape[0] == 0:
            return 0.0
        r = self.l2_A @ x + self.l2_b
        return float(self.l2_weight * r @ r)

    def value(self, x) -> float:
        return self.l1_value(x) + self.delta * self.l2_value(x)

    def stacked(self) -> tuple[np.ndarray, np.ndarray]:
        """Single weighted map ``(F, g)`` with ``||F x + g||^2 == combined``."""
        s1 = np.sqrt(self.l1_weight)
        s2 = np.sqrt(self.delta * self.l2_weight)
        F = np.vstack([s1 * self.l1_A, s2 * self.l2_A])
        g = np.concatenate([s1 * self.l1_b, s2 * self.l2_b])
        return F, g

    def epigraph_soc(self, which: str = "combined"):
        """Rows ``(F, g)`` of the cone ``||F x + g|| <= sqrt(bound)`` for a loss bound."""
        if which == "combined":
            return self.stacked()
        if which == "l1":
            s = np.sqrt(self.l1_weight)
            return s * self.l1_A, s * self.l1_b
        if which == "l2":
            s = np.sqrt(self.l2_weight)
            return s * self.l2_A, s * self.l2_b
        raise ValueError(f"unknown loss block {which!r}")


def loss_as_conic(cfg: RadarLossConfig, layout: VariableLayout) -> ConicLoss:
    """Express the combined loss of ``R = sum_k W_k`` and ``alpha`` as affine residuals."""
    N = cfg.array.num_antennas
    if layout.num_antennas != N:
        raise ValueError(f"layout is for {layout.num_antennas} antennas, loss for {N}")
    spec = cfg.spec
    S = layout.sum_selector()
    n = layout.size

    A = steering_matrix(cfg.array, spec.grid.points)
    outer = np.einsum("ln,lm->lnm", A, A.conj())
    l1_A = -hvec(outer) @ S
    l1_A[:, layout.alpha_index] = spec.desired
    L = len(spec.grid)

    M = spec.num_dois
    rows = []
    if M >= 2:
        D = steering_matrix(cfg.array, spec.dois)
        for m in range(M - 1):
            for k in range(m + 1, M):
                G = np.outer(D[k], D[m].conj())  # a_m^H R a_n == Tr(R G)
                rows.append(hvec((G + G.conj().T) / 2))
                rows.append(hvec((G - G.conj().T) / 2j))
        l2_A = np.array(rows) @ S
        l2_w = 2.0 / (M * M - M)
    else:
        l2_A = np.zeros((0, n))
        l2_w = 0.0
    return ConicLoss(
        l1_A=l1_A, l1_b=np.zeros(L), l1_weight=1.0 / L,
        l2_A=l2_A, l2_b=np.zeros(l2_A.shape[0]), l2_weight=l2_w,
        delta=cfg.delta, layout=layout,
    )
