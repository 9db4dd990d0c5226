"""Shared helpers for building small random test instances."""

import numpy as np
import pytest

from pinchcast.config import SystemConfig
from pinchcast.geometry import make_users


def small_config(**overrides) -> SystemConfig:
    """A light configuration for fast integration tests."""
    defaults = dict(num_waveguides=2, num_pas_per_waveguide=2, num_groups=2,
                    users_per_group=(2, 2), grid_size=64, region_x=10.0,
                    region_y=6.0, max_power_iterations=600,
                    max_dual_iterations=300, max_outer_iterations=60)
    defaults.update(overrides)
    return SystemConfig(**defaults)


def random_channels(rng, num_users, num_waveguides, scale=1.0):
    """Complex Gaussian effective-channel rows."""
    shape = (num_users, num_waveguides)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_groups(rng, num_groups, users_per_group):
    return np.repeat(np.arange(num_groups), users_per_group)


def random_users_in(config: SystemConfig, rng):
    k = config.num_users
    pos = np.column_stack([rng.uniform(0, config.region_x, k),
                           rng.uniform(0, config.region_y, k),
                           np.zeros(k)])
    groups = np.repeat(np.arange(config.num_groups), config.users_per_group)
    return make_users(pos, groups, config.noise_power)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
