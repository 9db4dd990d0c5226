"""In-waveguide responses, free-space channels, and their composition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .geometry import PinchLayout, UserSet
from .radiation import RadiationProfile, build_profile, row_powers


def waveguide_response(positions, per_pa_power, guided_wavenumber: float) -> np.ndarray:
    """Complex response sqrt(P_n) * exp(-j k_g x_n) of one waveguide's antennas.

    ``positions`` and ``per_pa_power`` may carry leading batch dimensions.
    """
    positions = np.asarray(positions, dtype=float)
    per_pa_power = np.asarray(per_pa_power, dtype=float)
    if per_pa_power.shape != positions.shape:
        raise ValueError("power entries must match positions")
    if np.any(per_pa_power < 0):
        raise ValueError("per-antenna powers must be non-negative")
    return np.sqrt(per_pa_power) * np.exp(-1j * guided_wavenumber * positions)


def free_space_channel(user_pos, pa_positions, wavelength: float) -> np.ndarray:
    """Line-of-sight channel sqrt(eta) * exp(-j k0 d) / d to each antenna.

    ``pa_positions`` is (..., 3); the result drops the coordinate axis.
    """
    user_pos = np.asarray(user_pos, dtype=float)
    pa_positions = np.asarray(pa_positions, dtype=float)
    d = np.linalg.norm(pa_positions - user_pos, axis=-1)
    if np.any(d <= 0.0):
        raise ValueError("user coincides with an antenna position")
    k0 = 2.0 * np.pi / wavelength
    amplitude = wavelength / (4.0 * np.pi)
    return amplitude * np.exp(-1j * k0 * d) / d


@dataclass(frozen=True)
class EffectiveChannels:
    """Per-user effective channel row vectors.

    ``hhat`` is (K, M): entry (u, m) composes the free-space channel from
    waveguide m's antennas to user u with that waveguide's in-guide
    response.  ``raw`` optionally caches the (K, M, N) free-space factors.
    """

    hhat: np.ndarray
    raw: np.ndarray | None = None

    @property
    def num_users(self) -> int:
        return self.hhat.shape[0]

    @property
    def num_waveguides(self) -> int:
        return self.hhat.shape[1]


def effective_channels(layout: PinchLayout, profile: RadiationProfile,
                       users: UserSet, config: SystemConfig,
                       keep_raw: bool = False) -> EffectiveChannels:
    """Compose geometry, radiation profile, and user positions into hhat."""
    if profile.per_pa_power.shape != layout.x.shape:
        raise ValueError("radiation profile does not match the layout")
    pa = layout.pa_positions()                                     # (M, N, 3)
    raw = free_space_channel(users.positions[:, None, None, :], pa[None, :, :, :],
                             config.wavelength)                    # (K, M, N)
    psi = waveguide_response(layout.x, profile.per_pa_power,
                             config.guided_wavenumber)             # (M, N)
    hhat = np.einsum("kmn,mn->km", raw, psi)
    return EffectiveChannels(hhat=hhat, raw=raw if keep_raw else None)


def channels_for(layout: PinchLayout, users: UserSet, config: SystemConfig,
                 model: str) -> EffectiveChannels:
    """Shorthand building the radiation profile and channels in one step."""
    return effective_channels(layout, build_profile(layout, config, model), users, config)


def waveguide_column(x_row: np.ndarray, y_m: float, users: UserSet,
                     config: SystemConfig, model: str) -> np.ndarray:
    """Effective-channel entries of a single waveguide for every user.

    Equivalent to one column of ``hhat`` after replacing waveguide m's
    positions with ``x_row``; used by the placement search.
    """
    x_row = np.asarray(x_row, dtype=float)
    pa = np.stack([x_row, np.full_like(x_row, y_m),
                   np.full_like(x_row, config.waveguide_height)], axis=-1)
    raw = free_space_channel(users.positions[:, None, :], pa[None, :, :],
                             config.wavelength)                    # (K, N)
    power = row_powers(x_row[None, :], config, model)[0]
    psi = waveguide_response(x_row, power, config.guided_wavenumber)
    return raw @ psi


def waveguide_column_candidates(x_row: np.ndarray, slot: int, candidates: np.ndarray,
                                y_m: float, users: UserSet, config: SystemConfig,
                                model: str) -> np.ndarray:
    """Waveguide-m effective channel for every candidate position of one antenna.

    Returns a (K, C) array whose column c equals ``waveguide_column`` with
    ``x_row[slot]`` replaced by ``candidates[c]``.  The radiation profile
    of the waveguide is refreshed per candidate, which matters under the
    proportional model where amplitudes depend on the spacings.
    """
    candidates = np.asarray(candidates, dtype=float)
    c = candidates.size
    rows = np.tile(np.asarray(x_row, dtype=float), (c, 1))         # (C, N)
    rows[:, slot] = candidates
    power = row_powers(rows, config, model)                        # (C, N)
    psi = waveguide_response(rows, power, config.guided_wavenumber)  # (C, N)

    pa_fixed = np.stack([x_row, np.full_like(x_row, y_m),
                         np.full_like(x_row, config.waveguide_height)], axis=-1)
    raw_fixed = free_space_channel(users.positions[:, None, :],
                                   pa_fixed[None, :, :], config.wavelength)  # (K, N)
    cand_pa = np.stack([candidates, np.full_like(candidates, y_m),
                        np.full_like(candidates, config.waveguide_height)], axis=-1)
    raw_cand = free_space_channel(users.positions[:, None, :],
                                  cand_pa[None, :, :], config.wavelength)    # (K, C)

    # Split the inner product into the fixed slots and the moving slot.
    psi_fixed = np.delete(psi, slot, axis=1)                       # (C, N-1)
    raw_other = np.delete(raw_fixed, slot, axis=1)                 # (K, N-1)
    column = raw_other @ psi_fixed.T                               # (K, C)
    column += raw_cand * psi[:, slot][None, :]
    return column
