"""Fixed-location MIMO baselines sharing the multicast beamforming solver."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import EffectiveChannels, free_space_channel
from .config import SystemConfig
from .geometry import UserSet
from .rates import Beamformer, RateReport, WM, sinr_all
from .wm import beamformer_rounds, power_balanced_beamformer

CONVENTIONAL = "conventional"
MASSIVE = "massive"


@dataclass(frozen=True)
class FixedArray:
    """A fully digital fixed antenna array at the region edge.

    Conventional: N elements at x = D_x/2, spread along y with the
    waveguide spacing.  Massive: M*N elements on a half-wavelength
    uniform linear array.  Both are centered at [D_x/2, 0, h].
    """

    element_positions: np.ndarray   # (R, 3)
    num_rf: int
    kind: str


def conventional_array(config: SystemConfig) -> FixedArray:
    n = config.num_pas_per_waveguide
    return FixedArray(element_positions=_linear_array(config, n, config.waveguide_spacing),
                      num_rf=n, kind=CONVENTIONAL)


def massive_array(config: SystemConfig) -> FixedArray:
    count = config.num_waveguides * config.num_pas_per_waveguide
    spacing = config.wavelength / 2.0
    return FixedArray(element_positions=_linear_array(config, count, spacing),
                      num_rf=count, kind=MASSIVE)


def _linear_array(config: SystemConfig, count: int, spacing: float) -> np.ndarray:
    offsets = (np.arange(count) - (count - 1) / 2.0) * spacing
    pos = np.zeros((count, 3))
    pos[:, 0] = config.region_x / 2.0
    pos[:, 1] = offsets
    pos[:, 2] = config.waveguide_height
    return pos


def fixed_array_channels(array: FixedArray, users: UserSet,
                         config: SystemConfig) -> EffectiveChannels:
    """Per-user line-of-sight channels; no waveguide feed, unit weighting."""
    hhat = free_space_channel(users.positions[:, None, :],
                              array.element_positions[None, :, :],
                              config.wavelength)
    return EffectiveChannels(hhat=hhat)


def baseline_multicast_solve(hhat: np.ndarray, group_of: np.ndarray,
                             noise: np.ndarray, budget: float,
                             config: SystemConfig, num_groups: int,
                             ) -> tuple[Beamformer, RateReport, dict]:
    """Max-min multicast beamforming over fixed channels.

    Runs the surrogate/dual rounds of the multiplexing solver with the
    antenna geometry frozen, on the budget- and noise-normalized problem.
    """
    scale = np.sqrt(budget) / np.sqrt(noise)
    hh = hhat * scale[:, None]
    w0 = power_balanced_beamformer(hh, group_of, num_groups, 1.0, config)
    w, trace, gmins, rounds, converged = beamformer_rounds(
        hh, group_of, num_groups, config, w0, delta_scale=np.sqrt(budget))
    beam = Beamformer(w=w * np.sqrt(budget), mode=WM)
    report = sinr_all(beam, hhat, group_of, noise, num_groups)
    info = {"objective_trace": trace, "group_min_trace": gmins,
            "iterations": rounds, "converged": converged}
    return beam, report, info
