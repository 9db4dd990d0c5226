"""Power radiation models along a dielectric waveguide.

A waveguide carrying power ``P_m`` feeds its antennas in sequence.  The
signal loses a factor ``kappa`` to dielectric attenuation between
consecutive elements, and each element radiates a fraction ``a`` of the
power still travelling in the guide.  Two ways of choosing the fractions
are supported: ``equal`` forces identical radiated powers at every
element, ``proportional`` uses one common fraction per waveguide whose
value is solved numerically so the waveguide radiates its target total.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .geometry import PinchLayout

EQUAL = "equal"
PROPORTIONAL = "proportional"
RADIATION_MODELS = (EQUAL, PROPORTIONAL)

_NEWTON_STEPS = 12  # monotone from the left; converges to machine precision


def in_waveguide_loss(x_prev, x_curr, attenuation_db_per_m: float):
    """Attenuation factor kappa = 10^(-eps * d / 10) over a span of d metres.

    Accepts scalars or arrays; spans must be non-negative.
    """
    x_prev = np.asarray(x_prev, dtype=float)
    x_curr = np.asarray(x_curr, dtype=float)
    if np.any(x_prev < 0):
        raise ValueError("positions along the waveguide must be non-negative")
    if np.any(x_curr < x_prev):
        raise ValueError("negative spacing between consecutive antennas")
    kappa = 10.0 ** (-attenuation_db_per_m * (x_curr - x_prev) / 10.0)
    if kappa.ndim == 0:
        return float(kappa)
    return kappa


def segment_losses(positions: np.ndarray, attenuation_db_per_m: float) -> np.ndarray:
    """Per-element kappa for a row of positions, first span measured from the feed at x=0."""
    positions = np.asarray(positions, dtype=float)
    prev = np.concatenate([np.zeros(positions.shape[:-1] + (1,)), positions[..., :-1]], axis=-1)
    return in_waveguide_loss(prev, positions, attenuation_db_per_m)


@dataclass(frozen=True)
class RadiationProfile:
    """Radiated power split across the antennas of every waveguide.

    ``per_pa_power`` holds P_{m,n} in the same unit as the waveguide power
    used to build the profile (the channel code uses unit waveguide power,
    so entries are fractions).  ``infeasible`` flags waveguides whose
    coefficients left (0, 1] or whose radiated total fell short.
    """

    per_pa_power: np.ndarray   # (M, N)
    coefficients: np.ndarray   # (M, N) radiation fractions a_{m,n}
    loss_factors: np.ndarray   # (M, N) kappa_{m,n}
    model: str
    infeasible: np.ndarray     # (M,) bool

    def total_radiated(self) -> np.ndarray:
        return self.per_pa_power.sum(axis=1)


def _equal_rows(waveguide_power, radiated_power, kappa):
    """Equal-power model for a batch of rows; kappa has shape (..., N)."""
    n = kappa.shape[-1]
    idx = np.arange(n)
    per_pa = np.broadcast_to(radiated_power / n, kappa.shape).copy()
    residual_scale = n * waveguide_power - idx * radiated_power
    coeff = radiated_power / (residual_scale * kappa)
    infeasible = np.any((coeff > 1.0) | (coeff <= 0.0), axis=-1)
    return per_pa, coeff, infeasible


def _proportional_fraction(waveguide_power, radiated_power, kappa,
                           steps: int = _NEWTON_STEPS):
    """Solve 1 - prod(1 - kappa_n a) = radiated/waveguide for a in (0, 1].

    ``f(a) = prod(1 - kappa_n a) - (1 - target)`` is convex and strictly
    decreasing on [0, 1], so Newton iterations started at the uniform-loss
    root 1 - (1 - target)^(1/N), which never exceeds the true root, climb
    to it monotonically and cannot diverge.  Rows where even a = 1 falls
    short are clamped to 1 and flagged.  ``kappa`` may carry leading batch
    dimensions.
    """
    target = np.broadcast_to(np.asarray(radiated_power / waveguide_power),
                             kappa.shape[:-1])
    n = kappa.shape[-1]
    remainder = 1.0 - target
    factors = np.empty_like(kappa)

    a = 1.0 - remainder ** (1.0 / n)
    if np.ndim(a) == 0:
        a = np.full(kappa.shape[:-1], a)
    for _ in range(steps):
        np.multiply(kappa, a[..., None], out=factors)
        np.subtract(1.0, factors, out=factors)
        product = np.multiply.reduce(factors, axis=-1)
        slope = product * np.sum(kappa / np.maximum(factors, 1e-300), axis=-1)
        a = a + (product - remainder) / np.maximum(slope, 1e-300)
    short = np.multiply.reduce(1.0 - kappa, axis=-1) > remainder
    a = np.where(short, 1.0, np.minimum(a, 1.0))
    return a, short


def _proportional_rows(waveguide_power, radiated_power, kappa,
                       steps: int = _NEWTON_STEPS):
    a, short = _proportional_fraction(waveguide_power, radiated_power, kappa, steps)
    # P_{m,n} = residual * kappa_n * a with residual decaying by (1 - kappa_j a).
    decay = 1.0 - kappa * a[..., None]
    residual = np.concatenate([
        np.ones(kappa.shape[:-1] + (1,)),
        np.cumprod(decay[..., :-1], axis=-1),
    ], axis=-1) * waveguide_power
    per_pa = residual * kappa * a[..., None]
    coeff = np.broadcast_to(a[..., None], kappa.shape).copy()
    return per_pa, coeff, short


def radiation_equal(waveguide_power: float, radiated_power: float,
                    positions, attenuation_db_per_m: float) -> RadiationProfile:
    """Equal-power profile for a single waveguide."""
    _check_row(waveguide_power, radiated_power, positions)
    kappa = segment_losses(np.asarray(positions, float)[None, :], attenuation_db_per_m)
    per_pa, coeff, infeasible = _equal_rows(waveguide_power, radiated_power, kappa)
    return RadiationProfile(per_pa_power=per_pa, coefficients=coeff,
                            loss_factors=kappa, model=EQUAL,
                            infeasible=np.atleast_1d(infeasible))


def radiation_proportional(waveguide_power: float, radiated_power: float,
                           positions, attenuation_db_per_m: float) -> RadiationProfile:
    """Proportionally decaying profile for a single waveguide."""
    _check_row(waveguide_power, radiated_power, positions)
    kappa = segment_losses(np.asarray(positions, float)[None, :], attenuation_db_per_m)
    per_pa, coeff, short = _proportional_rows(waveguide_power, radiated_power, kappa)
    return RadiationProfile(per_pa_power=per_pa, coefficients=coeff,
                            loss_factors=kappa, model=PROPORTIONAL,
                            infeasible=np.atleast_1d(short))


def _check_row(waveguide_power, radiated_power, positions):
    if not 0.0 < radiated_power <= waveguide_power:
        raise ValueError("radiated power must lie in (0, waveguide power]")
    positions = np.asarray(positions, dtype=float)
    if positions.ndim != 1 or positions.size < 1:
        raise ValueError("positions must be a non-empty 1-D sequence")
    if positions.size > 1 and np.any(np.diff(positions) <= 0):
        raise ValueError("positions must be strictly increasing")


def build_profile(layout: PinchLayout, config: SystemConfig, model: str) -> RadiationProfile:
    """Profile for every waveguide at unit waveguide power.

    The in-waveguide response uses power fractions, with the transmit
    beamformer carrying the actual wattage, so the waveguide power is 1
    and the radiated target is ``config.radiated_fraction``.
    """
    kappa = segment_losses(layout.x, config.attenuation_db_per_m)
    if model == EQUAL:
        per_pa, coeff, flags = _equal_rows(1.0, config.radiated_fraction, kappa)
    elif model == PROPORTIONAL:
        per_pa, coeff, flags = _proportional_rows(1.0, config.radiated_fraction, kappa)
    else:
        raise ValueError(f"unknown radiation model {model!r}")
    return RadiationProfile(per_pa_power=per_pa, coefficients=coeff,
                            loss_factors=kappa, model=model, infeasible=flags)


def row_powers(positions_rows: np.ndarray, config: SystemConfig, model: str) -> np.ndarray:
    """Per-antenna power fractions for a batch of position rows (..., N).

    Used by the placement search to refresh a single waveguide's profile
    for many candidate positions at once.
    """
    kappa = segment_losses(positions_rows, config.attenuation_db_per_m)
    if model == EQUAL:
        per_pa, _, _ = _equal_rows(1.0, config.radiated_fraction, kappa)
    elif model == PROPORTIONAL:
        per_pa, _, _ = _proportional_rows(1.0, config.radiated_fraction, kappa)
    else:
        raise ValueError(f"unknown radiation model {model!r}")
    return per_pa
