"""Waveguide-division design: power allocation plus sequential antenna placement.

Each waveguide carries exactly one group's stream, so the transmit side
reduces to a power split across groups, optimized by projected gradient
ascent on the smoothed max-min objective.  Antenna positions are then
improved one at a time by an exact grid scan of the per-element
objective, and the two steps alternate until neither moves.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import channels_for, waveguide_column, waveguide_column_candidates
from .config import SystemConfig
from .geometry import PinchLayout, UserSet, candidate_grid, random_layout, uniform_layout
from .projections import project_power
from .rates import Beamformer, RateReport, SolverError, lse_gradient, lse_value, sinr_all

_MONOTONE_SLACK = 1e-12


@dataclass
class WdState:
    """Outcome of the division-architecture optimization."""

    p: np.ndarray                      # (G,) group powers [W]
    layout: PinchLayout
    iterations: int                    # alternating rounds performed
    converged: bool
    objective_trace: list[float] = field(default_factory=list)
    group_min_trace: list[np.ndarray] = field(default_factory=list)
    candidate_evaluations: int = 0     # grid points scored across all element updates


def optimize_power(p0: np.ndarray, gains: np.ndarray, group_of: np.ndarray,
                   noise: np.ndarray, budget: float, tau: float,
                   max_iter: int, tol: float,
                   step_offset: int = 0) -> tuple[np.ndarray, int]:
    """Maximize the smoothed objective over {p >= 0, sum p <= budget}.

    Runs projected gradient ascent with the diminishing step 1/sqrt(t+1)
    on the budget-normalized problem (powers in units of the budget,
    noise scaled to one per user), which keeps the step size meaningful
    across power levels.  ``step_offset`` shifts the step-size index so a
    caller doling out a few iterations at a time keeps the schedule
    decaying.  Returns the best iterate seen and the iterations used.
    """
    p0 = np.asarray(p0, dtype=float)
    norm_gains = gains * (budget / noise[:, None])
    unit_noise = np.ones_like(noise)
    p_hat = np.clip(p0 / budget, 0.0, None)
    if p_hat.sum() > 1.0:
        p_hat = p_hat / p_hat.sum()

    def value(ph):
        return lse_value(ph, norm_gains, group_of, unit_noise, len(p0), tau)

    best_p = p_hat.copy()
    best_val = value(p_hat)
    used = 0
    for t in range(max_iter):
        grad = lse_gradient(p_hat, norm_gains, group_of, unit_noise, len(p0), tau)
        if not np.all(np.isfinite(grad)):
            raise SolverError(f"non-finite power gradient at iteration {t}: {grad}")
        step = 1.0 / np.sqrt(t + step_offset + 1.0)
        p_next = project_power(p_hat + step * grad, 1.0)
        used = t + 1
        val = value(p_next)
        if val > best_val:
            best_val, best_p = val, p_next
        delta = np.linalg.norm(p_next - p_hat)
        p_hat = p_next
        if delta <= tol:
            break
    return best_p * budget, used


def wd_candidate_set(layout: PinchLayout, m: int, n: int,
                     config: SystemConfig) -> np.ndarray:
    """Grid points available to antenna (m, n) given its fixed neighbours.

    Candidates lie strictly between the left neighbour plus the minimum
    spacing and the right neighbour minus it; missing neighbours impose
    no bound on that side.
    """
    grid = candidate_grid(config)
    lo = layout.x[m, n - 1] + config.min_spacing if n > 0 else -np.inf
    hi = (layout.x[m, n + 1] - config.min_spacing
          if n + 1 < layout.num_pas else np.inf)
    return grid[(grid > lo) & (grid < hi)]


@dataclass(frozen=True)
class ElementUpdate:
    """Result of scoring one antenna against its candidate grid points."""

    x: float                 # best candidate (current position if none exist)
    moved: bool
    sinr_objective: float    # sum over groups of the minimum SINR at x
    rate_objective: float    # true objective (bits) at x
    candidates: int


def _received_matrix(layout: PinchLayout, p: np.ndarray, users: UserSet,
                     config: SystemConfig, model: str) -> np.ndarray:
    hhat = channels_for(layout, users, config, model).hhat
    return np.abs(hhat) ** 2 * p[None, :]


def wd_element_update(layout: PinchLayout, m: int, n: int, p: np.ndarray,
                      users: UserSet, config: SystemConfig, model: str,
                      received: np.ndarray | None = None) -> ElementUpdate:
    """Exact one-dimensional search for antenna (m, n) under division mode.

    Scores every admissible grid point by the sum over groups of the
    minimum user SINR, holding every other antenna fixed.  Only waveguide
    m's channel column is recomputed per candidate; the waveguide's
    radiation profile is refreshed alongside.  Ties keep the lowest
    candidate index.

    ``received`` may cache the (K, M) per-user powers from each waveguide
    at the current layout; it is recomputed when absent.
    """
    if received is None:
        received = _received_matrix(layout, p, users, config, model)
    cand = wd_candidate_set(layout, m, n, config)
    current_x = float(layout.x[m, n])
    if cand.size == 0:
        sinr_obj, rate_obj = _objectives_from_received(received, users, config)
        return ElementUpdate(x=current_x, moved=False, sinr_objective=sinr_obj,
                             rate_objective=rate_obj, candidates=0)

    col = waveguide_column_candidates(layout.x[m], n, cand, layout.waveguide_y[m],
                                      users, config, model)          # (K, C)
    a = np.abs(col) ** 2 * p[m]                                      # (K, C)
    noise = users.noise_power
    totals = received.sum(axis=1)

    sinr_obj = np.zeros(cand.size)
    rate_obj = np.zeros(cand.size)
    for g in range(config.num_groups):
        members = users.group_members(g)
        if g == m:
            denom = totals[members] - received[members, m] + noise[members]
            sinr = a[members, :] / denom[:, None]
        else:
            own = received[members, g]
            other = (totals[members] - received[members, g]
                     - received[members, m] + noise[members])
            sinr = own[:, None] / (a[members, :] + other[:, None])
        gmin = sinr.min(axis=0)
        sinr_obj += gmin
        rate_obj += np.log2(1.0 + gmin)

    best = int(np.argmax(sinr_obj))
    new_x = float(cand[best])
    return ElementUpdate(x=new_x, moved=new_x != current_x,
                         sinr_objective=float(sinr_obj[best]),
                         rate_objective=float(rate_obj[best]),
                         candidates=int(cand.size))


def _objectives_from_received(received: np.ndarray, users: UserSet,
                              config: SystemConfig) -> tuple[float, float]:
    """Sum-of-minimum-SINR and true objective at the current state."""
    noise = users.noise_power
    totals = received.sum(axis=1)
    sinr_obj = 0.0
    rate_obj = 0.0
    for g in range(config.num_groups):
        members = users.group_members(g)
        own = received[members, g]
        sinr = own / (totals[members] - own + noise[members])
        gmin = float(sinr.min())
        sinr_obj += gmin
        rate_obj += float(np.log2(1.0 + gmin))
    return sinr_obj, rate_obj


def wd_alternating_optimize(config: SystemConfig, users: UserSet, model: str,
                            seed_layout: PinchLayout | None = None,
                            seed_powers: np.ndarray | None = None,
                            rng: np.random.Generator | None = None,
                            random_init: bool = False,
                            power_steps_per_round: int = 1,
                            ) -> tuple[WdState, RateReport]:
    """Alternate power allocation and antenna placement until both settle.

    Requires one waveguide per group.  Each round takes a projected
    gradient step on the power split (the step-size schedule 1/sqrt(t+1)
    runs over the round counter, so power moves gently while the
    placement sweep decouples the groups; solving the power subproblem to
    stationarity each round instead collapses onto single-group vertices
    on strongly coupled layouts) and then a waveguide-major sweep of
    element updates.  A move is accepted only if the true objective does
    not decrease, which keeps the reported trace monotone.  Stops once
    neither the power vector nor the layout changed more than the
    configured tolerance, or at the round cap (flagged as non-converged).
    """
    if config.num_waveguides != config.num_groups:
        raise ValueError("division mode needs exactly one waveguide per group")
    users.validate(config)
    if seed_layout is not None:
        layout = seed_layout
    elif random_init:
        layout = random_layout(config, rng or np.random.default_rng())
    else:
        layout = uniform_layout(config)
    layout.validate(config)
    p = (np.asarray(seed_powers, dtype=float) if seed_powers is not None
         else np.full(config.num_groups, config.total_power / config.num_groups))

    noise = users.noise_power
    group_of = users.group_of
    state = WdState(p=p, layout=layout, iterations=0, converged=False)
    power_steps = 0

    for round_idx in range(config.max_outer_iterations):
        hhat = channels_for(layout, users, config, model).hhat
        gains = np.abs(hhat) ** 2

        def true_value(powers):
            rates = np.log2(1.0 + _wd_sinr(powers, gains, group_of, noise))
            return _group_min_sum(rates, group_of, config.num_groups)

        p_new, used = optimize_power(p, gains, group_of, noise, config.total_power,
                                     config.smoothing, power_steps_per_round,
                                     0.0, step_offset=power_steps)
        power_steps += used
        # The smoothed objective can improve while the true one slips; keep
        # the old split in that case so the round trace stays monotone.
        if true_value(p_new) < true_value(p) - _MONOTONE_SLACK:
            p_new = p

        received = gains * p_new[None, :]
        x_before = layout.x.copy()
        for m in range(config.num_waveguides):
            for n in range(config.num_pas_per_waveguide):
                _, current_rate = _objectives_from_received(received, users, config)
                update = wd_element_update(layout, m, n, p_new, users, config,
                                           model, received=received)
                state.candidate_evaluations += update.candidates
                if update.moved and update.rate_objective >= current_rate - _MONOTONE_SLACK:
                    layout = layout.with_position(m, n, update.x)
                    col = waveguide_column(layout.x[m], layout.waveguide_y[m],
                                           users, config, model)
                    received[:, m] = np.abs(col) ** 2 * p_new[m]

        rates = np.log2(1.0 + _wd_sinr_from_received(received, group_of, noise))
        gmin = _group_minima(rates, group_of, config.num_groups)
        state.objective_trace.append(float(gmin.sum()))
        state.group_min_trace.append(gmin)
        state.iterations = round_idx + 1

        power_delta = float(np.linalg.norm(p_new - p))
        layout_delta = float(np.linalg.norm(layout.x - x_before))
        p = p_new
        if power_delta <= config.tolerance and layout_delta <= config.tolerance:
            state.converged = True
            break

    state.p = p
    state.layout = layout
    hhat = channels_for(layout, users, config, model).hhat
    report = sinr_all(Beamformer.from_powers(p), hhat, group_of, noise,
                      config.num_groups)
    return state, report


def _wd_sinr(p, gains, group_of, noise):
    received = gains * np.asarray(p, dtype=float)[None, :]
    return _wd_sinr_from_received(received, group_of, noise)


def _wd_sinr_from_received(received, group_of, noise):
    users = np.arange(received.shape[0])
    own = received[users, group_of]
    return own / (received.sum(axis=1) - own + noise)


def _group_minima(values, group_of, num_groups):
    out = np.full(num_groups, np.inf)
    np.minimum.at(out, group_of, values)
    return out


def _group_min_sum(values, group_of, num_groups):
    return float(_group_minima(values, group_of, num_groups).sum())
