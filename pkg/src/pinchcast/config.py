"""System configuration: physical constants, geometry, and algorithm knobs.

All quantities are SI (Hz, m, W) unless a name says otherwise.  Powers
cross the CLI boundary in dBm and are converted once, here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

LIGHT_SPEED = 299792458.0  # m/s


class ConfigError(ValueError):
    """Raised when a configuration value or file is invalid."""


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    if watts <= 0:
        raise ValueError(f"power must be positive, got {watts}")
    return 10.0 * math.log10(watts) + 30.0


@dataclass(frozen=True)
class SystemConfig:
    """Physical and algorithmic constants for one system instance.

    Defaults follow the standard 28 GHz setup: a 10 m x 6 m service
    region, four waveguides at 5 m height with eight pinching antennas
    each, four user groups of three, 0 dBm transmit budget and -90 dBm
    per-user noise.
    """

    carrier_frequency: float = 28e9           # f_c [Hz]
    light_speed: float = LIGHT_SPEED           # c [m/s]
    effective_refractive_index: float = 1.44   # n_eff
    waveguide_height: float = 5.0              # h [m]
    region_x: float = 10.0                     # D_x [m]
    region_y: float = 6.0                      # D_y [m]
    num_waveguides: int = 4                    # M
    num_pas_per_waveguide: int = 8             # N
    num_groups: int = 4                        # G
    users_per_group: tuple[int, ...] = (3, 3, 3, 3)     # K_g
    total_power: float = dbm_to_watts(0.0)     # P_t [W]
    radiated_fraction: float = 0.9             # radiated share of waveguide power
    attenuation_db_per_m: float = 0.1          # in-waveguide loss [dB/m]
    grid_size: int = 1000                      # L, candidate positions per waveguide
    noise_power: float = dbm_to_watts(-90.0)   # sigma^2 [W], uniform default
    smoothing: float = 100.0                   # tau, log-sum-exp sharpness
    rho_c: float = 1.0                         # dual step constants
    rho_mu: float = 0.02
    rho_p: float = 1.0
    rho_t: float = 10.0
    rho_eta: float = 0.01
    tolerance: float = 1e-4                    # stopping tolerance, all loops
    max_outer_iterations: int = 200            # alternating-optimization rounds
    max_power_iterations: int = 2000           # projected-gradient iterations
    max_dual_iterations: int = 500             # dual-update iterations

    def __post_init__(self):
        self.validate()

    # --- derived quantities -------------------------------------------------

    @property
    def wavelength(self) -> float:
        """Free-space wavelength lambda = c / f_c."""
        return self.light_speed / self.carrier_frequency

    @property
    def guided_wavelength(self) -> float:
        """In-waveguide wavelength lambda / n_eff."""
        return self.wavelength / self.effective_refractive_index

    @property
    def free_space_wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def guided_wavenumber(self) -> float:
        return 2.0 * math.pi / self.guided_wavelength

    @property
    def path_gain(self) -> float:
        """eta = c^2 / (16 pi^2 f_c^2) = (lambda / 4 pi)^2."""
        return (self.wavelength / (4.0 * math.pi)) ** 2

    @property
    def min_spacing(self) -> float:
        """Minimum inter-antenna spacing, half a free-space wavelength."""
        return self.wavelength / 2.0

    @property
    def waveguide_spacing(self) -> float:
        """Uniform waveguide separation along y."""
        if self.num_waveguides == 1:
            return 0.0
        return self.region_y / (self.num_waveguides - 1)

    @property
    def num_users(self) -> int:
        return sum(self.users_per_group)

    def validate(self) -> None:
        if self.num_waveguides < 1 or self.num_pas_per_waveguide < 1:
            raise ConfigError("need at least one waveguide and one antenna per waveguide")
        if self.num_groups < 1:
            raise ConfigError("need at least one group")
        if self.num_waveguides < self.num_groups:
            raise ConfigError("need at least as many waveguides as groups")
        if len(self.users_per_group) != self.num_groups:
            raise ConfigError(
                f"users_per_group has {len(self.users_per_group)} entries "
                f"for {self.num_groups} groups")
        if any(k < 1 for k in self.users_per_group):
            raise ConfigError("every group needs at least one user")
        if self.region_x <= 0 or self.region_y <= 0:
            raise ConfigError("region dimensions must be positive")
        if self.grid_size < 2:
            raise ConfigError("grid_size must be at least 2")
        if self.carrier_frequency <= 0 or self.light_speed <= 0:
            raise ConfigError("carrier frequency and light speed must be positive")
        if self.effective_refractive_index <= 0:
            raise ConfigError("effective refractive index must be positive")
        if not 0.0 < self.radiated_fraction <= 1.0:
            raise ConfigError("radiated_fraction must lie in (0, 1]")
        if self.total_power <= 0 or self.noise_power <= 0:
            raise ConfigError("total power and noise power must be positive")
        if self.smoothing <= 0:
            raise ConfigError("smoothing parameter must be positive")
        if self.tolerance <= 0:
            raise ConfigError("tolerance must be positive")

    def with_updates(self, **kwargs) -> "SystemConfig":
        """Return a copy with the given fields replaced."""
        return replace(self, **kwargs)


# Keys accepted in configuration files, mapped onto SystemConfig fields.
_FLOAT_KEYS = {
    "carrier_frequency", "light_speed", "effective_refractive_index",
    "waveguide_height", "region_x", "region_y", "total_power",
    "radiated_fraction", "attenuation_db_per_m", "noise_power", "smoothing",
    "rho_c", "rho_mu", "rho_p", "rho_t", "rho_eta", "tolerance",
}
_INT_KEYS = {
    "num_waveguides", "num_pas_per_waveguide", "num_groups", "grid_size",
    "max_outer_iterations", "max_power_iterations", "max_dual_iterations",
}
_DBM_ALIASES = {"total_power_dbm": "total_power", "noise_power_dbm": "noise_power"}


def parse_config_text(text: str) -> tuple[SystemConfig, dict[str, str]]:
    """Parse a flat ``key = value`` document.

    Unknown system keys raise :class:`ConfigError`.  Keys prefixed with
    ``scenario.`` are returned verbatim for the experiment layer to
    interpret.  Every key is optional; omitted values keep their defaults.
    """
    values: dict[str, object] = {}
    scenario: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key.startswith("scenario."):
            scenario[key[len("scenario."):]] = value
            continue
        if key in _DBM_ALIASES:
            try:
                values[_DBM_ALIASES[key]] = dbm_to_watts(float(value))
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad dBm value {value!r}") from exc
        elif key == "users_per_group":
            try:
                values[key] = tuple(int(v) for v in value.split(",") if v.strip())
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad user counts {value!r}") from exc
        elif key in _FLOAT_KEYS:
            try:
                values[key] = float(value)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad number {value!r}") from exc
        elif key in _INT_KEYS:
            try:
                values[key] = int(value)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad integer {value!r}") from exc
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    try:
        config = SystemConfig(**values)  # type: ignore[arg-type]
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return config, scenario


def load_config(path: str) -> tuple[SystemConfig, dict[str, str]]:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config_text(handle.read())
