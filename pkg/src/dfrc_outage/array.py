"""Uniform linear array geometry, angle grids and transmit beampatterns."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import hermitian_part

HALF_PI = np.pi / 2
_ANGLE_SLACK = 1e-12


@dataclass(frozen=True)
class ArrayConfig:
    """ULA with ``num_antennas`` elements spaced ``spacing`` metres apart.

    ``spacing`` defaults to half a wavelength.
    """

    num_antennas: int
    wavelength: float = 3e8 / 5e9
    spacing: float | None = None
    carrier_hz: float = 5e9

    def __post_init__(self):
        if int(self.num_antennas) != self.num_antennas or self.num_antennas < 1:
            raise ValueError(f"num_antennas must be a positive integer, got {self.num_antennas}")
        if not self.wavelength > 0:
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")
        if self.spacing is None:
            object.__setattr__(self, "spacing", self.wavelength / 2)
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")

    @classmethod
    def from_carrier(cls, num_antennas: int, carrier_hz: float = 5e9, spacing_wavelengths: float = 0.5):
        lam = 299_792_458.0 / carrier_hz
        return cls(num_antennas, wavelength=lam, spacing=spacing_wavelengths * lam, carrier_hz=carrier_hz)


@dataclass(frozen=True)
class AngleGrid:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("an angle grid needs at least two points")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("grid angles must be strictly increasing")
        if pts[0] < -HALF_PI - _ANGLE_SLACK or pts[-1] > HALF_PI + _ANGLE_SLACK:
            raise ValueError("grid angles must lie in [-pi/2, pi/2]")
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, num_points: int = 181) -> "AngleGrid":
        return cls(np.linspace(-HALF_PI, HALF_PI, num_points))

    def __len__(self):
        return self.points.size

    @property
    def degrees(self) -> np.ndarray:
        return np.degrees(self.points)


@dataclass(frozen=True)
class BeampatternSpec:
    """Desired beampattern ``desired`` on ``grid`` plus the directions of interest."""

    grid: AngleGrid
    desired: np.ndarray
    dois: np.ndarray
    mainlobe_halfwidth: float = np.radians(5.0)

    def __post_init__(self):
        desired = np.asarray(self.desired, dtype=float)
        dois = np.atleast_1d(np.asarray(self.dois, dtype=float))
        if desired.shape != (len(self.grid),):
            raise ValueError("desired pattern must have one value per grid point")
        if np.any(desired < 0):
            raise ValueError("desired pattern must be nonnegative")
        if dois.size < 1:
            raise ValueError("at least one direction of interest is required")
        lo, hi = self.grid.points[0], self.grid.points[-1]
        if np.any(dois < lo - _ANGLE_SLACK) or np.any(dois > hi + _ANGLE_SLACK):
            raise ValueError("directions of interest must lie inside the grid span")
        object.__setattr__(self, "desired", desired)
        object.__setattr__(self, "dois", dois)

    @classmethod
    def rectangular(cls, dois, halfwidth: float = np.radians(5.0), grid: AngleGrid | None = None):
        """Unit plateaus of half-width ``halfwidth`` (radians) around each DOI."""
        grid = AngleGrid.uniform() if grid is None else grid
        return cls(grid, ideal_beampattern(dois, halfwidth, grid), np.atleast_1d(dois), halfwidth)

    @property
    def num_dois(self) -> int:
        return self.dois.size


def _check_angles(theta):
    theta = np.asarray(theta, dtype=float)
    if np.any(np.abs(theta) > HALF_PI + _ANGLE_SLACK):
        raise ValueError("steering angles must lie in [-pi/2, pi/2]")
    return theta


def steering_vector(cfg: ArrayConfig, theta) -> np.ndarray:
    """Steering vector ``a(theta)``; entry ``n`` is ``exp(j 2 pi n spacing sin(theta) / wavelength)``.

    Vectorised over ``theta``: an array of angles gives shape ``theta.shape + (N,)``.
    """
    theta = _check_angles(theta)
    n = np.arange(cfg.num_antennas)
    phase = 2 * np.pi / cfg.wavelength * cfg.spacing * np.sin(theta)[..., None] * n
    return np.exp(1j * phase)


def steering_matrix(cfg: ArrayConfig, thetas) -> np.ndarray:
    """``L x N`` matrix whose rows are ``a(theta_l)`` for each grid angle."""
    return steering_vector(cfg, np.atleast_1d(thetas))


def ideal_beampattern(dois, halfwidth: float, grid: AngleGrid) -> np.ndarray:
    """Indicator of grid points within ``halfwidth`` of some DOI."""
    dois = np.atleast_1d(np.asarray(dois, dtype=float))
    if dois.size == 0:
        raise ValueError("at least one direction of interest is required")
    if halfwidth < 0:
        raise ValueError("halfwidth must be nonnegative")
    dist = np.min(np.abs(grid.points[:, None] - dois[None, :]), axis=1)
    # 1e-9 slack keeps plateaus symmetric when grid and DOIs come from degree conversions
    return (dist <= halfwidth + 1e-9).astype(float)


def beampattern(R: np.ndarray, grid: AngleGrid, cfg: ArrayConfig | None = None) -> np.ndarray:
    """Transmit power ``a^H(theta) R a(theta)`` at every grid angle."""
    R = hermitian_part(R)
    if cfg is None:
        cfg = ArrayConfig(R.shape[0])
    elif cfg.num_antennas != R.shape[0]:
        raise ValueError(f"R is {R.shape[0]}x{R.shape[0]} but the array has {cfg.num_antennas} elements")
    A = steering_matrix(cfg, grid.points)
    return np.real(np.einsum("ln,nm,lm->l", A.conj(), R, A))


def find_peaks_deg(pattern: np.ndarray, grid: AngleGrid, count: int) -> np.ndarray:
    """Angles (degrees) of the ``count`` largest interior local maxima of ``pattern``."""
    p = np.asarray(pattern)
    interior = np.flatnonzero((p[1:-1] >= p[:-2]) & (p[1:-1] > p[2:])) + 1
    # endpoints count as maxima when they dominate their single neighbour
    cand = list(interior)
    if p[0] > p[1]:
        cand.append(0)
    if p[-1] > p[-2]:
        cand.append(p.size - 1)
    cand = np.array(sorted(cand, key=lambda i: -p[i])[:count], dtype=int)
    return np.sort(grid.degrees[cand])
