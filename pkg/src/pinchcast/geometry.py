"""Antenna layouts, candidate grids, and user sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig

_GRID_TOL = 1e-9


def candidate_grid(config: SystemConfig) -> np.ndarray:
    """Uniform grid of L candidate x-positions spanning [0, D_x]."""
    return np.linspace(0.0, config.region_x, config.grid_size)


def waveguide_y_coords(config: SystemConfig) -> np.ndarray:
    """y-coordinates of the M waveguides, evenly spread over [0, D_y]."""
    m = config.num_waveguides
    if m == 1:
        return np.array([config.region_y / 2.0])
    return np.linspace(0.0, config.region_y, m)


def snap_to_grid(x, grid: np.ndarray) -> np.ndarray:
    """Map positions to the nearest grid point."""
    idx = np.clip(np.searchsorted(grid, np.asarray(x, dtype=float)), 1, len(grid) - 1)
    left = grid[idx - 1]
    right = grid[idx]
    return np.where(np.abs(np.asarray(x) - left) <= np.abs(right - np.asarray(x)), left, right)


@dataclass(frozen=True)
class PinchLayout:
    """Positions of the pinching antennas.

    ``x`` is the (M, N) matrix of x-coordinates, strictly increasing along
    each row with at least the minimum spacing between neighbours, every
    entry on the candidate grid.  ``waveguide_y`` holds the M waveguide
    y-coordinates and ``height`` the common mounting height.
    """

    x: np.ndarray
    waveguide_y: np.ndarray
    height: float

    @property
    def num_waveguides(self) -> int:
        return self.x.shape[0]

    @property
    def num_pas(self) -> int:
        return self.x.shape[1]

    def pa_positions(self) -> np.ndarray:
        """All antenna coordinates as an (M, N, 3) array."""
        m, n = self.x.shape
        pos = np.empty((m, n, 3))
        pos[:, :, 0] = self.x
        pos[:, :, 1] = self.waveguide_y[:, None]
        pos[:, :, 2] = self.height
        return pos

    def with_position(self, m: int, n: int, value: float) -> "PinchLayout":
        x = self.x.copy()
        x[m, n] = value
        return PinchLayout(x=x, waveguide_y=self.waveguide_y, height=self.height)

    def validate(self, config: SystemConfig) -> None:
        m, n = self.x.shape
        if m != config.num_waveguides or n != config.num_pas_per_waveguide:
            raise ValueError(
                f"layout is {m}x{n}, config expects "
                f"{config.num_waveguides}x{config.num_pas_per_waveguide}")
        if np.any(self.x < -_GRID_TOL) or np.any(self.x > config.region_x + _GRID_TOL):
            raise ValueError("antenna positions must lie within [0, D_x]")
        if n > 1:
            gaps = np.diff(self.x, axis=1)
            if np.any(gaps <= 0):
                raise ValueError("antenna positions must be strictly increasing per waveguide")
            if np.any(gaps < config.min_spacing - _GRID_TOL):
                raise ValueError("antenna spacing below the minimum")
        grid = candidate_grid(config)
        snapped = snap_to_grid(self.x.ravel(), grid)
        if np.any(np.abs(snapped - self.x.ravel()) > _GRID_TOL):
            raise ValueError("antenna positions must lie on the candidate grid")


def uniform_layout(config: SystemConfig) -> PinchLayout:
    """Deterministic default: N antennas evenly spread over [0, D_x] per waveguide."""
    grid = candidate_grid(config)
    n = config.num_pas_per_waveguide
    if n == 1:
        spread = np.array([config.region_x / 2.0])
    else:
        spread = np.linspace(0.0, config.region_x, n)
    row = np.asarray(snap_to_grid(spread, grid), dtype=float)
    if n > 1 and np.any(np.diff(row) < config.min_spacing):
        raise ValueError("grid too coarse for a uniform layout at the minimum spacing")
    x = np.tile(row, (config.num_waveguides, 1))
    return PinchLayout(x=x, waveguide_y=waveguide_y_coords(config), height=config.waveguide_height)


def random_layout(config: SystemConfig, rng: np.random.Generator,
                  max_tries: int = 1000) -> PinchLayout:
    """Seeded random layout: sorted grid points honouring the minimum spacing."""
    grid = candidate_grid(config)
    n = config.num_pas_per_waveguide
    rows = []
    for _ in range(config.num_waveguides):
        for _ in range(max_tries):
            picks = np.sort(rng.choice(len(grid), size=n, replace=False))
            xs = grid[picks]
            if n == 1 or np.all(np.diff(xs) >= config.min_spacing):
                rows.append(xs)
                break
        else:
            rows.append(uniform_layout(config).x[0])
    x = np.vstack(rows)
    return PinchLayout(x=x, waveguide_y=waveguide_y_coords(config), height=config.waveguide_height)


@dataclass(frozen=True)
class UserSet:
    """User positions on the ground plane with group labels and noise powers.

    ``positions`` is (K, 3) with z = 0, ``group_of`` maps each user to its
    group index, and ``noise_power`` holds per-user noise in watts.
    """

    positions: np.ndarray
    group_of: np.ndarray
    noise_power: np.ndarray

    @property
    def num_users(self) -> int:
        return self.positions.shape[0]

    def group_members(self, g: int) -> np.ndarray:
        return np.flatnonzero(self.group_of == g)

    def validate(self, config: SystemConfig) -> None:
        k = self.num_users
        if self.group_of.shape != (k,) or self.noise_power.shape != (k,):
            raise ValueError("group and noise arrays must match the user count")
        if k != config.num_users:
            raise ValueError(f"expected {config.num_users} users, got {k}")
        counts = np.bincount(self.group_of, minlength=config.num_groups)
        if len(counts) > config.num_groups or np.any(
                counts != np.asarray(config.users_per_group)):
            raise ValueError("group membership does not match users_per_group")
        if np.any(self.positions[:, 2] != 0.0):
            raise ValueError("users must lie on the ground plane z = 0")
        x, y = self.positions[:, 0], self.positions[:, 1]
        if np.any(x < 0) or np.any(x > config.region_x) or np.any(y < 0) or np.any(y > config.region_y):
            raise ValueError("users must lie inside the service region")
        if np.any(self.noise_power <= 0):
            raise ValueError("noise powers must be positive")


def make_users(positions, group_of, noise_power) -> UserSet:
    """Assemble a UserSet from array-likes, broadcasting scalar noise."""
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    if positions.shape[1] == 2:
        positions = np.hstack([positions, np.zeros((positions.shape[0], 1))])
    group_of = np.asarray(group_of, dtype=int)
    noise = np.broadcast_to(np.asarray(noise_power, dtype=float),
                            (positions.shape[0],)).copy()
    return UserSet(positions=positions, group_of=group_of, noise_power=noise)
