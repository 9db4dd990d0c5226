"""Waveguide-multiplexing design: surrogate-based joint beamforming.

The non-smooth max-min objective is handled by a
majorization-minimization loop: at each anchor the per-user rate is
replaced by a tight concave quadratic lower bound, the antenna positions
are improved by an exact per-element grid scan of the surrogate, and the
transmit beamformer is recovered from the surrogate's Lagrangian dual,
whose weights are driven by projected adaptive (sub)gradient steps.

The beamforming routines are scale-covariant; the outer loops normalize
powers to the transmit budget and noise to one per user so that the dual
step constants behave identically across power levels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import channels_for, waveguide_column, waveguide_column_candidates
from .config import SystemConfig
from .geometry import PinchLayout, UserSet, random_layout, uniform_layout
from .groups import GroupIndex
from .projections import project_simplex, project_simplex_rows
from .rates import LN2, Beamformer, RateReport, WM, sinr_all
from .wd import wd_candidate_set

_MONOTONE_SLACK = 1e-12
_REGULARIZATION = 1e-12


@dataclass(frozen=True)
class SurrogateCoeffs:
    """Per-user coefficients of the concave quadratic rate bound.

    The bound reads const + 2 Re{a A} - b (I + |A|^2) in terms of the
    desired amplitude A and interference power I, is tight at the anchor,
    and never exceeds the true rate in bits.
    """

    a: np.ndarray       # (K,) complex
    b: np.ndarray       # (K,) >= 0
    const: np.ndarray   # (K,)


def surrogate_coeffs(report: RateReport, noise: np.ndarray) -> SurrogateCoeffs:
    """Expand the rate around the anchor state captured in ``report``.

    The natural-log form of the bound is scaled by 1/ln2 so the surrogate
    minorizes the rate measured in bits.
    """
    amp = report.desired_amplitude
    power = np.abs(amp) ** 2
    denom1 = report.interference + noise
    denom2 = report.interference + power + noise
    a = np.conj(amp) / denom1 / LN2
    b = power / (denom1 * denom2) / LN2
    const = report.rate - 2.0 * b * noise - b * (report.interference + power)
    return SurrogateCoeffs(a=a, b=b, const=const)


def surrogate_rates_from_amps(amps: np.ndarray, coeffs: SurrogateCoeffs,
                              group_of: np.ndarray) -> np.ndarray:
    users = np.arange(amps.shape[0])
    desired = amps[users, group_of]
    total = (np.abs(amps) ** 2).sum(axis=1)
    return coeffs.const + 2.0 * np.real(coeffs.a * desired) - coeffs.b * total


def surrogate_rates(w, coeffs: SurrogateCoeffs, hhat: np.ndarray,
                    group_of: np.ndarray) -> np.ndarray:
    """Surrogate rate of every user for beamformer ``w`` on channels ``hhat``."""
    matrix = w.w if isinstance(w, Beamformer) else np.asarray(w)
    return surrogate_rates_from_amps(hhat @ matrix, coeffs, group_of)


def surrogate_objective(w, coeffs: SurrogateCoeffs, hhat: np.ndarray,
                        group_of: np.ndarray, num_groups: int) -> float:
    values = surrogate_rates(w, coeffs, hhat, group_of)
    return _group_min_sum(values, group_of, num_groups)


@dataclass
class DualState:
    """Dual variables of the surrogate max-min problem."""

    delta: np.ndarray   # (K,) simplex weights per group
    nu: float           # power-constraint multiplier, >= 0
    iteration: int = 0


def uniform_dual(group_of: np.ndarray, num_groups: int) -> DualState:
    counts = np.bincount(group_of, minlength=num_groups)
    return DualState(delta=1.0 / counts[group_of], nu=1.0)


def optimal_beamformer(dual: DualState, coeffs: SurrogateCoeffs, hhat: np.ndarray,
                       group_of: np.ndarray, num_groups: int,
                       index: GroupIndex | None = None,
                       ) -> tuple[np.ndarray, bool]:
    """Closed-form stationary beamformer for fixed dual variables.

    Solves (sum_u delta_u b_u v_u v_u^H + nu I) w_g = sum_{u in g}
    delta_u conj(a_u) v_u with v_u the conjugated effective channel, one
    Hermitian factorization shared by all groups.  A singular system at
    nu = 0 is ridge-regularized and flagged.
    """
    k, m = hhat.shape
    if index is None:
        index = GroupIndex.build(group_of, num_groups)
    v = np.conj(hhat)                                       # rows are v_u^T
    weights = dual.delta * coeffs.b
    gram = (v * weights[:, None]).T @ hhat + dual.nu * np.eye(m)
    lead = dual.delta * np.conj(coeffs.a)
    rhs = (v * lead[:, None]).T @ index.selector
    regularized = False
    try:
        w = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        w = None
    if w is None or not np.all(np.isfinite(w)):
        regularized = True
        w = np.linalg.solve(gram + _REGULARIZATION * np.eye(m), rhs)
    return w, regularized


def delta_step(dual: DualState, srates: np.ndarray, group_of: np.ndarray,
               num_groups: int, rho_c: float, rho_mu: float,
               index: GroupIndex | None = None) -> np.ndarray:
    """One projected subgradient step on the per-group simplex weights.

    The subgradient of each weight is the gap between the user's
    surrogate rate and the group minimum; the adaptive step scales by the
    current weight so mass drains multiplicatively from non-bottleneck
    users.  Exact simplex projection restores feasibility (the hyperplane
    shift alone can leave the simplex, the Euclidean projection cannot).
    """
    if index is None:
        index = GroupIndex.build(group_of, num_groups)
    gmin = index.minima(srates)
    gap = srates - gmin[group_of]
    mu = dual.delta / (gap + rho_c + dual.iteration * rho_mu)
    raw = dual.delta - mu * gap
    out = np.empty_like(raw)
    if index.matrix is not None:
        out[index.matrix] = project_simplex_rows(raw[index.matrix])
        return out
    for g in range(num_groups):
        members = np.flatnonzero(group_of == g)
        out[members] = project_simplex(raw[members], 1.0)
    return out


def nu_step(dual: DualState, total_power: float, budget: float,
            rho_p: float, rho_t: float, rho_eta: float) -> float:
    """Projected diminishing-step update of the power multiplier.

    The multiplier grows when the beamformer overshoots the budget and
    shrinks (down to zero) when under it, which is the stabilizing
    direction for the dual descent.
    """
    xi = rho_p / (rho_t + dual.iteration * rho_eta)
    return max(0.0, dual.nu + xi * (total_power - budget))


@dataclass
class PagdResult:
    w: np.ndarray            # (M, G), feasible
    dual: DualState
    iterations: int
    converged: bool
    regularized: bool
    objective: float         # surrogate max-min value of w


def pagd_solve(coeffs: SurrogateCoeffs, hhat: np.ndarray, group_of: np.ndarray,
               num_groups: int, budget: float, config: SystemConfig,
               initial_dual: DualState | None = None) -> PagdResult:
    """Optimize the beamformer for fixed surrogate coefficients.

    Alternates the closed-form beamformer with dual steps on the group
    weights and the power multiplier, keeping the best feasible primal
    iterate by surrogate objective (iterates that overshoot the budget
    are evaluated rescaled onto it).  Stops when the dual variables move
    less than the tolerance or at the iteration cap.  The dual state
    starts uniform unless a warm start is supplied.
    """
    index = GroupIndex.build(group_of, num_groups)
    users = np.arange(hhat.shape[0])
    dual = initial_dual if initial_dual is not None else uniform_dual(group_of, num_groups)
    dual = DualState(delta=dual.delta.copy(), nu=dual.nu)
    best_w = None
    best_val = -np.inf
    regularized = False
    converged = False
    used = 0

    def score(w):
        """Surrogate rates of w plus the value of its budget-rescaled copy."""
        amps = hhat @ w
        desired = amps[users, group_of]
        linear = 2.0 * np.real(coeffs.a * desired)
        quad = coeffs.b * (np.abs(amps) ** 2).sum(axis=1)
        srates = coeffs.const + linear - quad
        power = float(np.sum(np.abs(w) ** 2))
        if power > budget:
            s = np.sqrt(budget / power)
            feasible_rates = coeffs.const + linear * s - quad * s * s
            return srates, power, index.min_sum(feasible_rates), w * s
        return srates, power, index.min_sum(srates), w

    for q in range(config.max_dual_iterations):
        dual.iteration = q
        w, flag = optimal_beamformer(dual, coeffs, hhat, group_of, num_groups, index)
        regularized = regularized or flag
        srates, power, val, candidate = score(w)
        if val > best_val:
            best_val, best_w = val, candidate
        new_delta = delta_step(dual, srates, group_of, num_groups,
                               config.rho_c, config.rho_mu, index)
        new_nu = nu_step(dual, power, budget,
                         config.rho_p, config.rho_t, config.rho_eta)
        change = float(np.linalg.norm(new_delta - dual.delta)) + abs(new_nu - dual.nu)
        dual = DualState(delta=new_delta, nu=new_nu, iteration=q + 1)
        used = q + 1
        if change <= config.tolerance:
            converged = True
            break
    w, flag = optimal_beamformer(dual, coeffs, hhat, group_of, num_groups, index)
    regularized = regularized or flag
    _, _, val, candidate = score(w)
    if val > best_val:
        best_val, best_w = val, candidate
    return PagdResult(w=best_w, dual=dual, iterations=used, converged=converged,
                      regularized=regularized, objective=best_val)


def _rescale_to_budget(w: np.ndarray, budget: float) -> np.ndarray:
    power = float(np.sum(np.abs(w) ** 2))
    if power > budget:
        return w * np.sqrt(budget / power)
    return w


@dataclass(frozen=True)
class WmElementUpdate:
    x: float
    moved: bool
    surrogate_objective: float
    candidates: int


def wm_element_update(layout: PinchLayout, m: int, n: int, w: np.ndarray,
                      coeffs: SurrogateCoeffs, users: UserSet,
                      config: SystemConfig, model: str,
                      hhat: np.ndarray | None = None,
                      channel_scale: np.ndarray | None = None) -> WmElementUpdate:
    """Exact grid search for antenna (m, n) on the surrogate objective.

    Only waveguide m's channel column varies across candidates; the
    contribution of every other waveguide is folded into per-user
    constants beforehand, which reproduces a from-scratch evaluation of
    the surrogate at every candidate.  ``channel_scale`` applies a
    per-user factor to freshly computed columns so cached normalized
    channels stay consistent.
    """
    group_of = users.group_of
    num_groups = config.num_groups
    if hhat is None:
        hhat = channels_for(layout, users, config, model).hhat
        if channel_scale is not None:
            hhat = hhat * channel_scale[:, None]
    cand = wd_candidate_set(layout, m, n, config)
    amps = hhat @ w                                         # (K, G)
    current = _group_min_sum(surrogate_rates_from_amps(amps, coeffs, group_of),
                             group_of, num_groups)
    if cand.size == 0:
        return WmElementUpdate(x=float(layout.x[m, n]), moved=False,
                               surrogate_objective=current, candidates=0)

    col = waveguide_column_candidates(layout.x[m], n, cand, layout.waveguide_y[m],
                                      users, config, model)  # (K, C)
    if channel_scale is not None:
        col = col * channel_scale[:, None]
    partial = amps - np.outer(hhat[:, m], w[m, :])          # contribution of waveguides != m
    amps_c = partial[:, None, :] + col[:, :, None] * w[m, :][None, None, :]  # (K, C, G)
    users_idx = np.arange(hhat.shape[0])
    desired = amps_c[users_idx, :, group_of]                # (K, C)
    total = (np.abs(amps_c) ** 2).sum(axis=2)
    values = (coeffs.const[:, None] + 2.0 * np.real(coeffs.a[:, None] * desired)
              - coeffs.b[:, None] * total)                  # (K, C)

    index = GroupIndex.build(group_of, num_groups)
    if index.matrix is not None:
        objective = values[index.matrix].min(axis=1).sum(axis=0)
    else:
        objective = np.zeros(cand.size)
        for g in range(num_groups):
            objective += values[users.group_members(g), :].min(axis=0)
    best = int(np.argmax(objective))
    new_x = float(cand[best])
    return WmElementUpdate(x=new_x, moved=new_x != float(layout.x[m, n]),
                           surrogate_objective=float(objective[best]),
                           candidates=int(cand.size))


@dataclass
class WmState:
    """Outcome of the multiplexing-architecture optimization."""

    w: np.ndarray                      # (M, G) complex [sqrt(W)]
    layout: PinchLayout
    iterations: int
    converged: bool
    objective_trace: list[float] = field(default_factory=list)
    group_min_trace: list[np.ndarray] = field(default_factory=list)
    candidate_evaluations: int = 0
    pagd_iterations: int = 0


def beamformer_rounds(hhat: np.ndarray, group_of: np.ndarray, num_groups: int,
                      config: SystemConfig, w0: np.ndarray,
                      noise: np.ndarray | None = None, delta_scale: float = 1.0,
                      ) -> tuple[np.ndarray, list[float], list[np.ndarray], int, bool]:
    """Surrogate rounds over a fixed channel matrix (no antenna moves).

    Works on already-normalized channels (unit noise, unit budget) unless
    ``noise`` says otherwise.  Per round the surrogate anchors at the
    incumbent, the dual solver proposes a beamformer, and the proposal is
    kept only if it improves the surrogate, so the true objective trace is
    non-decreasing.  ``delta_scale`` converts beamformer changes back to
    physical units before the tolerance check.  Returns the incumbent,
    traces, round count, and a convergence flag.
    """
    if noise is None:
        noise = np.ones(hhat.shape[0])
    w = w0
    trace: list[float] = []
    gmins: list[np.ndarray] = []
    converged = False
    rounds = 0
    dual = None
    for rounds in range(1, config.max_outer_iterations + 1):
        report = sinr_all(w, hhat, group_of, noise, num_groups)
        coeffs = surrogate_coeffs(report, noise)
        result = pagd_solve(coeffs, hhat, group_of, num_groups, 1.0, config,
                            initial_dual=dual)
        dual = result.dual
        anchor_val = surrogate_objective(w, coeffs, hhat, group_of, num_groups)
        w_new = result.w if result.objective >= anchor_val - _MONOTONE_SLACK else w
        after = sinr_all(w_new, hhat, group_of, noise, num_groups)
        trace.append(after.objective)
        gmins.append(after.group_min)
        delta = float(np.linalg.norm(w_new - w)) * delta_scale
        w = w_new
        if delta <= config.tolerance:
            converged = True
            break
    return w, trace, gmins, rounds, converged


def matched_mean_beamformer(hhat: np.ndarray, group_of: np.ndarray,
                            num_groups: int, budget: float) -> np.ndarray:
    """Deterministic start: per group, a matched filter to its mean channel.

    Anchoring the surrogate at channel-aligned amplitudes matters: the
    bound's curvature pins amplitudes near the anchor, so a misaligned
    start needs many rounds to grow them.  Groups whose user channels
    cancel fall back to feeding their own row.
    """
    m = hhat.shape[1]
    w = np.zeros((m, num_groups), dtype=complex)
    for g in range(num_groups):
        mean = np.conj(hhat[group_of == g]).mean(axis=0)
        norm = np.linalg.norm(mean)
        if norm > 0:
            w[:, g] = mean / norm
        else:
            w[min(g, m - 1), g] = 1.0
    return w * np.sqrt(budget / num_groups)


def power_balanced_beamformer(hhat: np.ndarray, group_of: np.ndarray,
                              num_groups: int, budget: float,
                              config: SystemConfig) -> np.ndarray:
    """Matched-mean directions with a max-min-aware power split.

    Holding the matched directions fixed, the cross-group power split is
    exactly the division-mode allocation problem over the effective gains
    and is solved by the same smoothed projected-gradient routine.  This
    pins the surrogate anchor at balanced amplitudes, which the
    surrogate rounds cannot rebalance on their own at high SINR.  The
    split is floored away from zero: a zero-amplitude group anchors zero
    surrogate coefficients and could never be revived.
    """
    from .wd import optimize_power

    w = matched_mean_beamformer(hhat, group_of, num_groups, budget)
    directions = w / np.linalg.norm(w, axis=0, keepdims=True)
    gains = np.abs(hhat @ directions) ** 2
    powers, _ = optimize_power(np.full(num_groups, budget / num_groups),
                               gains, group_of, np.ones(hhat.shape[0]), budget,
                               config.smoothing, config.max_power_iterations,
                               1e-8)
    powers = np.maximum(powers, 0.05 * budget / num_groups)
    total = powers.sum()
    if total > budget:
        powers = powers * (budget / total)
    return directions * np.sqrt(powers)[None, :]


def wm_alternating_optimize(config: SystemConfig, users: UserSet, model: str,
                            seed_layout: PinchLayout | None = None,
                            seed_w: np.ndarray | None = None,
                            rng: np.random.Generator | None = None,
                            random_init: bool = False,
                            optimize_layout: bool = True,
                            ) -> tuple[WmState, RateReport]:
    """Alternate antenna placement and beamforming under multiplexing.

    Per round: anchor the surrogate at the incumbent, sweep every antenna
    position (exact surrogate argmax per element), then refresh the
    beamformer through the dual solver, keeping the anchor whenever the
    proposal does not improve the surrogate.  The true objective trace is
    therefore non-decreasing up to floating-point slack.  Stops when both
    the layout and the beamformer move less than the tolerance.
    """
    users.validate(config)
    if seed_layout is not None:
        layout = seed_layout
    elif random_init:
        layout = random_layout(config, rng or np.random.default_rng())
    else:
        layout = uniform_layout(config)
    layout.validate(config)

    budget = config.total_power
    scale = np.sqrt(budget) / np.sqrt(users.noise_power)
    group_of = users.group_of
    num_groups = config.num_groups
    unit_noise = np.ones(users.num_users)

    hh = channels_for(layout, users, config, model).hhat * scale[:, None]
    if seed_w is not None:
        w = np.asarray(seed_w, dtype=complex) / np.sqrt(budget)
    elif random_init:
        gen = rng or np.random.default_rng()
        raw = gen.standard_normal((config.num_waveguides, num_groups)) \
            + 1j * gen.standard_normal((config.num_waveguides, num_groups))
        w = raw / np.linalg.norm(raw)
    elif optimize_layout:
        # With the placement sweep active, the equal-power matched start is
        # more robust: the initial layout couples the groups strongly and a
        # smoothed power split over it tends to collapse onto vertices,
        # anchoring some groups at amplitudes the surrogate cannot regrow.
        w = matched_mean_beamformer(hh, group_of, num_groups, 1.0)
    else:
        w = power_balanced_beamformer(hh, group_of, num_groups, 1.0, config)

    state = WmState(w=w, layout=layout, iterations=0, converged=False)
    dual = None

    for round_idx in range(config.max_outer_iterations):
        report = sinr_all(w, hh, group_of, unit_noise, num_groups)
        coeffs = surrogate_coeffs(report, unit_noise)

        x_before = layout.x.copy()
        if optimize_layout:
            for m in range(config.num_waveguides):
                for n in range(config.num_pas_per_waveguide):
                    amps = hh @ w
                    current = _group_min_sum(
                        surrogate_rates_from_amps(amps, coeffs, group_of),
                        group_of, num_groups)
                    update = wm_element_update(layout, m, n, w, coeffs, users,
                                               config, model, hhat=hh,
                                               channel_scale=scale)
                    state.candidate_evaluations += update.candidates
                    if update.moved and update.surrogate_objective >= current - _MONOTONE_SLACK:
                        layout = layout.with_position(m, n, update.x)
                        col = waveguide_column(layout.x[m], layout.waveguide_y[m],
                                               users, config, model)
                        hh[:, m] = col * scale

        result = pagd_solve(coeffs, hh, group_of, num_groups, 1.0, config,
                            initial_dual=dual)
        dual = result.dual
        state.pagd_iterations += result.iterations
        anchor_val = surrogate_objective(w, coeffs, hh, group_of, num_groups)
        w_new = result.w if result.objective >= anchor_val - _MONOTONE_SLACK else w

        after = sinr_all(w_new, hh, group_of, unit_noise, num_groups)
        state.objective_trace.append(after.objective)
        state.group_min_trace.append(after.group_min)
        state.iterations = round_idx + 1

        w_delta = float(np.linalg.norm(w_new - w)) * np.sqrt(budget)
        x_delta = float(np.linalg.norm(layout.x - x_before))
        w = w_new
        if w_delta <= config.tolerance and x_delta <= config.tolerance:
            state.converged = True
            break

    state.w = w * np.sqrt(budget)
    state.layout = layout
    raw = channels_for(layout, users, config, model).hhat
    report = sinr_all(Beamformer(w=state.w, mode=WM), raw, group_of,
                      users.noise_power, num_groups)
    return state, report


def _group_minima(values, group_of, num_groups):
    out = np.full(num_groups, np.inf)
    np.minimum.at(out, group_of, values)
    return out


def _group_min_sum(values, group_of, num_groups):
    return float(_group_minima(values, group_of, num_groups).sum())
