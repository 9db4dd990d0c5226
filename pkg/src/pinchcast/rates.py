"""SINRs, per-user and per-group rates, and the smoothed max-min objective."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LN2 = float(np.log(2.0))

WD = "wd"
WM = "wm"


class SolverError(RuntimeError):
    """Raised when an optimizer hits a non-finite or degenerate state."""


@dataclass(frozen=True)
class Beamformer:
    """Transmit beamforming matrix, one column per group.

    In waveguide-division mode the matrix is diagonal with real
    non-negative entries (per-group amplitudes); in waveguide-multiplexing
    mode it is dense complex.
    """

    w: np.ndarray   # (M, G) complex
    mode: str       # WD or WM

    @classmethod
    def from_powers(cls, powers) -> "Beamformer":
        """Diagonal beamformer carrying sqrt(P_g) on the diagonal, zero phase."""
        powers = np.asarray(powers, dtype=float)
        if np.any(powers < 0):
            raise ValueError("group powers must be non-negative")
        return cls(w=np.diag(np.sqrt(powers)).astype(complex), mode=WD)

    def total_power(self) -> float:
        return float(np.sum(np.abs(self.w) ** 2))

    def validate(self, budget: float) -> None:
        if self.total_power() > budget + 1e-9:
            raise ValueError("beamformer exceeds the transmit power budget")
        if self.mode == WD:
            off = self.w - np.diag(np.diag(self.w))
            if np.any(off != 0):
                raise ValueError("division-mode beamformer must be diagonal")
            diag = np.diag(self.w)
            if np.any(diag.imag != 0) or np.any(diag.real < 0):
                raise ValueError("division-mode amplitudes must be real non-negative")


@dataclass(frozen=True)
class RateReport:
    """Per-user link quality plus the group minima and their sum."""

    sinr: np.ndarray                # (K,)
    rate: np.ndarray                # (K,) bits/s/Hz
    group_min: np.ndarray           # (G,) bits/s/Hz
    objective: float                # sum of group minima
    desired_amplitude: np.ndarray   # (K,) complex
    interference: np.ndarray        # (K,) watts


def group_minima(values: np.ndarray, group_of: np.ndarray, num_groups: int) -> np.ndarray:
    """Minimum of ``values`` within each group."""
    out = np.full(num_groups, np.inf)
    np.minimum.at(out, group_of, values)
    return out


def sinr_all(w, hhat: np.ndarray, group_of: np.ndarray, noise: np.ndarray,
             num_groups: int) -> RateReport:
    """Evaluate SINR, rate, and the max-min objective for a beamformer.

    ``w`` may be a Beamformer or a bare (M, G) matrix.  Noise is per-user;
    a zero denominator (no noise, no interference) is refused rather than
    silently mapped to infinity.
    """
    matrix = w.w if isinstance(w, Beamformer) else np.asarray(w)
    amps = hhat @ matrix                                   # (K, G)
    k = hhat.shape[0]
    users = np.arange(k)
    desired = amps[users, group_of]
    powers = np.abs(amps) ** 2
    interference = powers.sum(axis=1) - powers[users, group_of]
    denom = interference + noise
    if np.any(denom <= 0):
        raise SolverError("zero interference-plus-noise denominator")
    sinr = np.abs(desired) ** 2 / denom
    rate = np.log2(1.0 + sinr)
    gmin = group_minima(rate, group_of, num_groups)
    return RateReport(sinr=sinr, rate=rate, group_min=gmin,
                      objective=float(gmin.sum()), desired_amplitude=desired,
                      interference=interference)


def objective(w, hhat: np.ndarray, group_of: np.ndarray, noise: np.ndarray,
              num_groups: int) -> float:
    """Sum over groups of the minimum user rate."""
    return sinr_all(w, hhat, group_of, noise, num_groups).objective


# --- waveguide-division rates as a function of the power split --------------

def wd_rates(p: np.ndarray, gains: np.ndarray, group_of: np.ndarray,
             noise: np.ndarray) -> np.ndarray:
    """Per-user rates for a diagonal beamformer with group powers ``p``.

    ``gains`` is the (K, G) matrix of squared effective-channel magnitudes
    |hhat_{u,(j)}|^2.
    """
    received = gains * p[None, :]
    total = received.sum(axis=1)
    users = np.arange(gains.shape[0])
    signal = received[users, group_of]
    denom = total - signal + noise
    return np.log2(1.0 + signal / denom)


def _group_lse(rates: np.ndarray, group_of: np.ndarray, num_groups: int,
               tau: float) -> tuple[np.ndarray, np.ndarray]:
    """Soft-minimum terms and softmin weights, computed with a max shift.

    Per group the term is min_k R_k - (1/tau) ln sum_k exp(-tau (R_k - min)),
    which never underflows even at tau = 100.
    """
    gmin = group_minima(rates, group_of, num_groups)
    shifted = np.exp(-tau * (rates - gmin[group_of]))
    sums = np.zeros(num_groups)
    np.add.at(sums, group_of, shifted)
    terms = gmin - np.log(sums) / tau
    weights = shifted / sums[group_of]
    return terms, weights


def lse_value(p: np.ndarray, gains: np.ndarray, group_of: np.ndarray,
              noise: np.ndarray, num_groups: int, tau: float) -> float:
    """Smoothed objective: sum over groups of the log-sum-exp soft minimum."""
    if tau <= 0:
        raise ValueError("smoothing parameter must be positive")
    rates = wd_rates(np.asarray(p, dtype=float), gains, group_of, noise)
    terms, _ = _group_lse(rates, group_of, num_groups, tau)
    return float(terms.sum())


def lse_gradient(p: np.ndarray, gains: np.ndarray, group_of: np.ndarray,
                 noise: np.ndarray, num_groups: int, tau: float) -> np.ndarray:
    """Gradient of the smoothed objective with respect to the group powers.

    Combines the softmin weights with the per-user rate derivatives: the
    own-power derivative is S / (ln2 (1+SINR) I') and the cross terms are
    -S G_j P_g / (ln2 (1+SINR) I'^2), where S is the desired gain, G_j the
    interfering gain, and I' the interference-plus-noise at the user.
    """
    p = np.asarray(p, dtype=float)
    k, g = gains.shape
    users = np.arange(k)
    received = gains * p[None, :]
    signal = received[users, group_of]
    iprime = received.sum(axis=1) - signal + noise
    sinr = signal / iprime
    rates = np.log2(1.0 + sinr)
    _, weights = _group_lse(rates, group_of, num_groups, tau)

    own_gain = gains[users, group_of]
    common = weights / (LN2 * (1.0 + sinr))
    # d R_u / d P_j for all j at once; overwrite the own-group column after.
    deriv = -(own_gain * p[group_of] / iprime ** 2)[:, None] * gains
    deriv[users, group_of] = own_gain / iprime
    return deriv.T @ common
