"""Downlink channels, covariance estimates and covariance-error models.

Two error families are provided.  :class:`IndependentError` draws every
upper-triangle entry independently (complex Gaussian, real Gaussian
diagonal).  :class:`DependentError` draws the off-diagonal entries as one
correlated vector ordered diagonal by diagonal, with correlation
``exp(-lambda |a - b|)`` between latent positions ``a`` and ``b``, and then
applies one of three marginal laws.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
from scipy import special, stats

from .linalg import upper_diagonalwise


@dataclass
class ChannelSet:
    h: np.ndarray | None
    c_hat: np.ndarray
    noise_power: float

    def __post_init__(self):
        self.c_hat = np.asarray(self.c_hat, dtype=complex)
        if self.c_hat.ndim != 3 or self.c_hat.shape[1] != self.c_hat.shape[2]:
            raise ValueError("c_hat must have shape (K, N, N)")
        if self.h is not None:
            self.h = np.asarray(self.h, dtype=complex).reshape(self.c_hat.shape[0], self.c_hat.shape[1])
        if not self.noise_power > 0:
            raise ValueError(f"noise power must be positive, got {self.noise_power}")

    @property
    def num_users(self) -> int:
        return self.c_hat.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.c_hat.shape[1]

    @classmethod
    def from_channels(cls, h: np.ndarray, noise_power: float) -> "ChannelSet":
        h = np.asarray(h, dtype=complex)
        c_hat = np.zeros((h.shape[0], h.shape[1], h.shape[1]), complex)
        for k, hk in enumerate(h):
            c_hat[k] = estimate_covariance(hk)
        return cls(h, c_hat, noise_power)


def generate_rayleigh(K: int, N: int, seed, noise_power: float = 0.01) -> ChannelSet:
    """K Rayleigh channels with i.i.d. CN(0, 1) entries and rank-1 estimates ``h h^H``."""
    if K < 0 or N < 1:
        raise ValueError(f"need K >= 0 and N >= 1, got K={K}, N={N}")
    rng = np.random.default_rng(seed)
    h = (rng.standard_normal((K, N)) + 1j * rng.standard_normal((K, N))) / np.sqrt(2)
    return ChannelSet.from_channels(h, noise_power)


def estimate_covariance(h) -> np.ndarray:
    h = np.asarray(h, dtype=complex).ravel()
    if not np.any(h):
        raise ValueError("cannot form a covariance estimate from an all-zero channel")
    return np.outer(h, h.conj())


def diagonalwise_index(N: int) -> list[tuple[int, int]]:
    """1-based ``(i, j)`` pairs: the diagonal, then upper diagonals by increasing offset."""
    if N < 1:
        raise ValueError("N must be positive")
    r, c = upper_diagonalwise(N)
    return [(i, i) for i in range(1, N + 1)] + [(int(a) + 1, int(b) + 1) for a, b in zip(r, c)]


def diagonalwise_position(i: int, j: int, N: int) -> int:
    """1-based position of ``(i, j)`` (``i <= j``) in :func:`diagonalwise_index`."""
    if i == j:
        return i
    return N + sum(N - p for p in range(1, j - i)) + i


def _vec_index(i, j, N):
    # column-stacking vec()
    return i + j * N


def _gamma_factor(G: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    w, V = np.linalg.eigh(G)
    scale = max(np.max(np.abs(w)), 1.0)
    w = np.where(w < tol * scale, 0.0, w)
    return V * np.sqrt(w)


@dataclass(frozen=True)
class IndependentError:
    """Independent entries; ``sigma[i, j]`` is the standard deviation of ``E[i, j]``."""

    sigma: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.sigma, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise ValueError("sigma must be a square matrix")
        if np.any(s < 0) or not np.allclose(s, s.T):
            raise ValueError("sigma must be symmetric and nonnegative")
        object.__setattr__(self, "sigma", (s + s.T) / 2)

    @classmethod
    def uniform(cls, N: int, variance: float) -> "IndependentError":
        return cls(np.full((N, N), np.sqrt(variance)))

    @property
    def num_antennas(self) -> int:
        return self.sigma.shape[0]

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        N = self.num_antennas
        r, c = upper_diagonalwise(N)
        s_up = self.sigma[r, c] / np.sqrt(2)
        up = rng.standard_normal((size, r.size)) * s_up + 1j * rng.standard_normal((size, r.size)) * s_up
        diag = rng.standard_normal((size, N)) * np.diag(self.sigma)
        return _assemble(diag, up, N)

    def gamma(self) -> np.ndarray:
        return np.diag((self.sigma**2).ravel(order="F")).astype(complex)

    def gamma_factor(self) -> np.ndarray:
        return np.diag(self.sigma.ravel(order="F")).astype(complex)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.sigma)


EntryLaw = Literal["uniform", "gaussian", "sum_of_uniforms"]


@dataclass(frozen=True)
class DependentError:
    """Correlated off-diagonal entries with non-Gaussian marginals.

    ``uniform``: correlated standard normals pushed through the normal CDF and
    centred (``-0.5 - 0.5j``).  ``sum_of_uniforms``: i.i.d. uniform latents on
    ``[-0.5, 0.5]`` mixed by the Cholesky factor, which preserves the
    correlation exactly.  ``gaussian``: the correlated normals themselves.

    With ``sigma_e2=None`` the raw scale above is used (diagonal uniform on
    ``[-0.5, 0.5]``); otherwise every entry is rescaled to ``E|e_ij|^2 = sigma_e2``.
    """

    num_antennas: int
    lambda_decay: float
    entry_law: EntryLaw = "uniform"
    sigma_e2: float | None = None

    def __post_init__(self):
        if not self.lambda_decay > 0:
            raise ValueError(f"lambda_decay must be positive for a positive-definite correlation, got {self.lambda_decay}")
        if self.entry_law not in ("uniform", "gaussian", "sum_of_uniforms"):
            raise ValueError(f"unknown entry law {self.entry_law!r}")
        if self.sigma_e2 is not None and self.sigma_e2 < 0:
            raise ValueError("sigma_e2 must be nonnegative")

    @property
    def latent_size(self) -> int:
        N = self.num_antennas
        return N * (N - 1) // 2

    def correlation(self) -> np.ndarray:
        m = np.arange(self.latent_size)
        return np.exp(-self.lambda_decay * np.abs(m[:, None] - m[None, :]))

    def _cholesky(self) -> np.ndarray:
        try:
            return np.linalg.cholesky(self.correlation())
        except np.linalg.LinAlgError as exc:
            raise ValueError("latent correlation matrix is not positive definite") from exc

    def _raw_component_variance(self) -> float:
        return 1.0 if self.entry_law == "gaussian" else 1.0 / 12.0

    def _scales(self) -> tuple[float, float]:
        """(off-diagonal component scale, diagonal variance)."""
        v = self._raw_component_variance()
        if self.sigma_e2 is None:
            off = 1.0
            diag_var = v
        else:
            off = np.sqrt(self.sigma_e2 / (2 * v))
            diag_var = self.sigma_e2
        return off, diag_var

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        N, m = self.num_antennas, self.latent_size
        off, diag_var = self._scales()
        if m:
            L = self._cholesky()
            if self.entry_law == "sum_of_uniforms":
                xr = rng.uniform(-0.5, 0.5, (size, m))
                xi = rng.uniform(-0.5, 0.5, (size, m))
            else:
                xr = rng.standard_normal((size, m))
                xi = rng.standard_normal((size, m))
            yr, yi = xr @ L.T, xi @ L.T
            if self.entry_law == "uniform":
                yr, yi = special.ndtr(yr) - 0.5, special.ndtr(yi) - 0.5
            up = off * (yr + 1j * yi)
        else:
            up = np.zeros((size, 0), complex)
        if self.entry_law == "gaussian":
            diag = rng.standard_normal((size, N)) * np.sqrt(diag_var)
        else:
            half = np.sqrt(3 * diag_var)
            diag = rng.uniform(-half, half, (size, N))
        return _assemble(diag, up, N)

    def component_covariance(self) -> np.ndarray:
        """Covariance of the real (equivalently imaginary) parts of the latent entries."""
        P = self.correlation()
        off, _ = self._scales()
        if self.entry_law == "uniform":
            # Gaussian-copula covariance of centred uniforms
            C = np.arcsin(P / 2) / (2 * np.pi)
        elif self.entry_law == "sum_of_uniforms":
            C = P / 12.0
        else:
            C = P
        return off**2 * C

    def gamma(self) -> np.ndarray:
        """Exact ``E[vec(E) vec(E)^H]`` for this model."""
        N = self.num_antennas
        _, diag_var = self._scales()
        G = np.zeros((N * N, N * N), complex)
        d = [_vec_index(i, i, N) for i in range(N)]
        G[d, d] = diag_var
        r, c = upper_diagonalwise(N)
        if r.size:
            C2 = 2 * self.component_covariance()
            up = _vec_index(r, c, N)
            lo = _vec_index(c, r, N)
            G[np.ix_(up, up)] = C2
            G[np.ix_(lo, lo)] = C2
        return G

    def gamma_factor(self) -> np.ndarray:
        return _gamma_factor(self.gamma())

    @property
    def is_zero(self) -> bool:
        return self.sigma_e2 == 0


ErrorModel = IndependentError | DependentError


def _assemble(diag: np.ndarray, up: np.ndarray, N: int) -> np.ndarray:
    size = diag.shape[0]
    E = np.zeros((size, N, N), complex)
    idx = np.arange(N)
    E[:, idx, idx] = diag
    r, c = upper_diagonalwise(N)
    E[:, r, c] = up
    E[:, c, r] = np.conj(up)
    return E


def sample_error_matrix(model: ErrorModel, N: int, seed, size: int | None = None) -> np.ndarray:
    """Draw one Hermitian error matrix (or ``size`` of them) from ``model``."""
    if model.num_antennas != N:
        raise ValueError(f"model is for N={model.num_antennas}, requested N={N}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    E = model.sample(rng, 1 if size is None else size)
    return E[0] if size is None else E


def empirical_gamma(model: ErrorModel, trials: int, seed, batch: int = 20_000) -> np.ndarray:
    """Monte-Carlo estimate of ``E[vec(E) vec(E)^H]``."""
    N = model.num_antennas
    rng = np.random.default_rng(seed)
    acc = np.zeros((N * N, N * N), complex)
    done = 0
    while done < trials:
        n = min(batch, trials - done)
        V = model.sample(rng, n).transpose(0, 2, 1).reshape(n, N * N)  # column-stacked vec
        acc += V.T @ V.conj()
        done += n
    return acc / trials


def empirical_gamma_factor(model: ErrorModel, trials: int, seed) -> np.ndarray:
    return _gamma_factor(empirical_gamma(model, trials, seed))


def trace_statistic(B: np.ndarray, E: np.ndarray) -> np.ndarray:
    """``-Tr[B E]`` for one or a stack of error matrices; imaginary residue is checked."""
    s = -np.einsum("ij,...ji->...", B, E)
    scale = np.maximum(np.abs(s.real), 1.0)
    if np.any(np.abs(s.imag) > 1e-12 * scale * max(1.0, np.abs(B).max())):
        raise ValueError("trace statistic is not real; is B Hermitian?")
    return s.real


@dataclass
class CltReport:
    samples: np.ndarray
    fitted_mean: float
    fitted_std: float
    kl_divergence: float
    bin_edges: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)
    label: str = ""

    @property
    def trials(self) -> int:
        return self.samples.size

    def histogram_rows(self):
        width = np.diff(self.bin_edges)
        centers = (self.bin_edges[:-1] + self.bin_edges[1:]) / 2
        emp = self.counts / (self.trials * width)
        fit = stats.norm.pdf(centers, self.fitted_mean, self.fitted_std)
        return centers, emp, fit

    def to_csv(self, path) -> Path:
        path = Path(path)
        centers, emp, fit = self.histogram_rows()
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_center", "empirical_density", "fitted_density"])
            for row in zip(centers, emp, fit):
                w.writerow([repr(float(v)) for v in row])
        return path

    def summary_row(self, N: int, model: str) -> dict:
        return {"N": N, "model": model, "trials": self.trials, "kl": self.kl_divergence}


def histogram_kl(samples: np.ndarray, bins: int = 100, width_stds: float = 5.0):
    """KL(empirical || fitted Gaussian) from a fixed-width histogram.

    Bins span ``mean +- width_stds * std``; empty bins contribute nothing.
    Returns ``(kl, mean, std, edges, counts)``.
    """
    x = np.asarray(samples, dtype=float)
    mu, sd = float(x.mean()), float(x.std(ddof=1))
    if not sd > 0:
        raise ValueError("statistic has zero variance; nothing to validate")
    edges = np.linspace(mu - width_stds * sd, mu + width_stds * sd, bins + 1)
    counts, _ = np.histogram(x, edges)
    p = counts / x.size
    q = np.diff(stats.norm.cdf(edges, mu, sd))
    nz = p > 0
    kl = float(np.sum(p[nz] * np.log(p[nz] / q[nz])))
    return kl, mu, sd, edges, counts


def clt_validate(model: ErrorModel, B: np.ndarray, trials: int = 100_000, bins: int = 100,
                 seed=0, batch: int = 10_000) -> CltReport:
    """Sample ``-Tr[B E]``, fit a Gaussian by moments and score it with histogram KL."""
    if trials < 1000:
        raise ValueError("clt_validate needs at least 1000 trials")
    B = np.asarray(B, dtype=complex)
    N = model.num_antennas
    if B.shape != (N, N):
        raise ValueError(f"B must be {N}x{N}")
    if not np.allclose(B, B.conj().T, atol=1e-12 * max(1.0, np.abs(B).max())):
        raise ValueError("B must be Hermitian")
    rng = np.random.default_rng(seed)
    out = np.empty(trials)
    done = 0
    while done < trials:
        n = min(batch, trials - done)
        out[done:done + n] = trace_statistic(B, model.sample(rng, n))
        done += n
    kl, mu, sd, edges, counts = histogram_kl(out, bins)
    return CltReport(out, mu, sd, kl, edges, counts)


def gaussian_kl_floor(trials: int, bins: int = 100, seed=0, repeats: int = 5) -> float:
    """Mean histogram-KL of exactly Gaussian samples: the estimator's noise floor."""
    rng = np.random.default_rng(seed)
    return float(np.mean([histogram_kl(rng.standard_normal(trials), bins)[0] for _ in range(repeats)]))
