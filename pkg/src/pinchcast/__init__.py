"""Multigroup multicast simulation and optimization for pinching-antenna systems."""

from .baselines import (FixedArray, baseline_multicast_solve, conventional_array,
                        fixed_array_channels, massive_array)
from .channels import (EffectiveChannels, channels_for, effective_channels,
                       free_space_channel, waveguide_response)
from .config import ConfigError, SystemConfig, dbm_to_watts, watts_to_dbm
from .experiments import (ResultRow, Scenario, read_csv, run_scenario,
                          sample_users, scenario_presets, write_csv)
from .geometry import PinchLayout, UserSet, candidate_grid, make_users, uniform_layout
from .projections import project_power, project_simplex
from .radiation import (EQUAL, PROPORTIONAL, RadiationProfile, build_profile,
                        in_waveguide_loss, radiation_equal, radiation_proportional)
from .rates import (Beamformer, RateReport, SolverError, lse_gradient, lse_value,
                    objective, sinr_all)
from .wd import (WdState, optimize_power, wd_alternating_optimize,
                 wd_candidate_set, wd_element_update)
from .wm import (DualState, SurrogateCoeffs, WmState, delta_step, nu_step,
                 optimal_beamformer, pagd_solve, surrogate_coeffs,
                 surrogate_rates, wm_alternating_optimize, wm_element_update)

__version__ = "0.1.0"
