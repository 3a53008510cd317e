"""Ordering of the real solver variables for the lifted beamforming problems."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import hmat, hvec, hvec_dim


@dataclass(frozen=True)
class VariableLayout:
    """``x = [hvec(W_1), ..., hvec(W_B), alpha, extras...]``.

    ``num_blocks`` is the number of lifted PSD blocks: one per user, or a
    single free covariance when there are no users (radar-only design).
    """

    num_antennas: int
    num_blocks: int
    num_extra: int = 0

    @property
    def block_dim(self) -> int:
        return hvec_dim(self.num_antennas)

    def w_slice(self, k: int) -> slice:
        if not 0 <= k < self.num_blocks:
            raise IndexError(f"block {k} out of range for {self.num_blocks} blocks")
        d = self.block_dim
        return slice(k * d, (k + 1) * d)

    @property
    def alpha_index(self) -> int:
        return self.num_blocks * self.block_dim

    def extra_index(self, i: int) -> int:
        if not 0 <= i < self.num_extra:
            raise IndexError(i)
        return self.alpha_index + 1 + i

    @property
    def size(self) -> int:
        return self.alpha_index + 1 + self.num_extra

    def pack(self, Ws, alpha: float, extras=()) -> np.ndarray:
        Ws = list(Ws)
        if len(Ws) != self.num_blocks:
            raise ValueError(f"expected {self.num_blocks} blocks, got {len(Ws)}")
        extras = list(extras)
        if len(extras) != self.num_extra:
            raise ValueError(f"expected {self.num_extra} extra scalars, got {len(extras)}")
        parts = [hvec(W) for W in Ws] + [np.array([alpha], dtype=float), np.asarray(extras, dtype=float)]
        return np.concatenate(parts)

    def unpack(self, x: np.ndarray):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.size,):
            raise ValueError(f"expected a vector of length {self.size}, got shape {x.shape}")
        Ws = [hmat(x[self.w_slice(k)], self.num_antennas) for k in range(self.num_blocks)]
        return Ws, float(x[self.alpha_index])

    def sum_selector(self) -> np.ndarray:
        """Matrix ``S`` with ``S @ x == hvec(sum_k W_k)``."""
        d = self.block_dim
        S = np.zeros((d, self.size))
        for k in range(self.num_blocks):
            S[:, self.w_slice(k)] = np.eye(d)
        return S
