import numpy as np
import pytest

from conftest import random_channels, random_groups, random_users_in, small_config
from pinchcast.channels import channels_for
from pinchcast.geometry import uniform_layout
from pinchcast.rates import sinr_all
from pinchcast.wd import wd_alternating_optimize, wd_candidate_set
from pinchcast.wm import (DualState, delta_step, nu_step, optimal_beamformer,
                          pagd_solve, surrogate_coeffs, surrogate_objective,
                          surrogate_rates, uniform_dual, wm_alternating_optimize,
                          wm_element_update)


def random_anchor(rng, k, m, g, users_per_group):
    group_of = random_groups(rng, g, users_per_group)
    hhat = random_channels(rng, k, m)
    noise = rng.uniform(0.5, 2.0, k)
    w = random_channels(rng, m, g)
    report = sinr_all(w, hhat, group_of, noise, g)
    return hhat, group_of, noise, w, report


class TestSurrogate:
    def test_zero_anchor(self, rng):
        hhat = random_channels(rng, 2, 2)
        group_of = np.array([0, 1])
        report = sinr_all(np.zeros((2, 2), complex), hhat, group_of, np.ones(2), 2)
        coeffs = surrogate_coeffs(report, np.ones(2))
        assert np.all(coeffs.a == 0) and np.all(coeffs.b == 0)
        assert np.all(coeffs.const == 0)

    def test_scalar_hand_expansion(self):
        # one group, one user, one waveguide: no interference
        hhat = np.array([[0.8 - 0.6j]])
        w = np.array([[1.2 + 0.5j]])
        noise = np.array([2.0])
        report = sinr_all(w, hhat, np.array([0]), noise, 1)
        coeffs = surrogate_coeffs(report, noise)
        amp = hhat[0, 0] * w[0, 0]
        ln2 = np.log(2.0)
        a_hand = np.conj(amp) / noise[0] / ln2
        b_hand = abs(amp) ** 2 / (noise[0] * (abs(amp) ** 2 + noise[0])) / ln2
        const_hand = (np.log2(1 + abs(amp) ** 2 / noise[0])
                      - 2 * b_hand * noise[0] - b_hand * abs(amp) ** 2)
        assert coeffs.a[0] == pytest.approx(a_hand, rel=1e-12)
        assert coeffs.b[0] == pytest.approx(b_hand, rel=1e-12)
        assert coeffs.const[0] == pytest.approx(const_hand, rel=1e-12)

    def test_tight_at_anchor(self, rng):
        for _ in range(20):
            hhat, group_of, noise, w, report = random_anchor(rng, 8, 4, 4, (2,) * 4)
            coeffs = surrogate_coeffs(report, noise)
            values = surrogate_rates(w, coeffs, hhat, group_of)
            assert np.max(np.abs(values - report.rate)) <= 1e-8

    def test_minorizes_true_rate(self, rng):
        hhat, group_of, noise, w0, report = random_anchor(rng, 8, 4, 4, (2,) * 4)
        coeffs = surrogate_coeffs(report, noise)
        for _ in range(100):
            w = w0 + rng.uniform(0.1, 3.0) * random_channels(rng, 4, 4)
            true = sinr_all(w, hhat, group_of, noise, 4).rate
            assert np.all(surrogate_rates(w, coeffs, hhat, group_of) <= true + 1e-10)

    def test_quadratic_structure_under_scaling(self, rng):
        hhat, group_of, noise, w, report = random_anchor(rng, 1, 1, 1, (1,))
        coeffs = surrogate_coeffs(report, noise)
        base = surrogate_rates(w, coeffs, hhat, group_of)[0] - coeffs.const[0]
        doubled = surrogate_rates(2 * w, coeffs, hhat, group_of)[0] - coeffs.const[0]
        amp = (hhat @ w)[0, 0]
        linear = 2 * np.real(coeffs.a[0] * amp)
        quad = coeffs.b[0] * abs(amp) ** 2
        assert base == pytest.approx(linear - quad, rel=1e-12)
        assert doubled == pytest.approx(2 * linear - 4 * quad, rel=1e-12)

    def test_nonnegative_curvature(self, rng):
        for _ in range(10):
            *_, noise, w, report = random_anchor(rng, 6, 3, 3, (2, 2, 2))
            coeffs = surrogate_coeffs(report, noise)
            assert np.all(coeffs.b >= 0)


class TestOptimalBeamformer:
    def test_rank_one_identity(self, rng):
        hhat, group_of, noise, w, report = random_anchor(rng, 1, 3, 1, (1,))
        coeffs = surrogate_coeffs(report, noise)
        dual = DualState(delta=np.array([1.0]), nu=0.7)
        got, flagged = optimal_beamformer(dual, coeffs, hhat, group_of, 1)
        assert not flagged
        v = np.conj(hhat[0])
        expected = (np.conj(coeffs.a[0]) * v
                    / (coeffs.b[0] * np.linalg.norm(v) ** 2 + dual.nu))
        assert np.allclose(got[:, 0], expected, rtol=1e-10)

    def test_zero_curvature_reduces_to_scaled_sum(self, rng):
        hhat, group_of, noise, w, report = random_anchor(rng, 4, 3, 2, (2, 2))
        coeffs = surrogate_coeffs(report, noise)
        coeffs = type(coeffs)(a=coeffs.a, b=np.zeros(4), const=coeffs.const)
        dual = uniform_dual(group_of, 2)
        dual.nu = 2.5
        got, _ = optimal_beamformer(dual, coeffs, hhat, group_of, 2)
        for g in range(2):
            members = np.flatnonzero(group_of == g)
            expected = sum(dual.delta[u] * np.conj(coeffs.a[u]) * np.conj(hhat[u])
                           for u in members) / dual.nu
            assert np.allclose(got[:, g], expected, rtol=1e-12)

    def test_stationarity_residual(self, rng):
        for _ in range(100):
            k, m, g = 8, 4, 4
            hhat, group_of, noise, w, report = random_anchor(rng, k, m, g, (2,) * 4)
            coeffs = surrogate_coeffs(report, noise)
            delta = np.zeros(k)
            for gg in range(g):
                members = np.flatnonzero(group_of == gg)
                raw = rng.uniform(0.01, 1.0, members.size)
                delta[members] = raw / raw.sum()
            dual = DualState(delta=delta, nu=float(rng.uniform(0.05, 5.0)))
            got, _ = optimal_beamformer(dual, coeffs, hhat, group_of, g)
            v = np.conj(hhat)
            gram = (v * (delta * coeffs.b)[:, None]).T @ hhat + dual.nu * np.eye(m)
            for gg in range(g):
                members = np.flatnonzero(group_of == gg)
                rhs = (v[members] * (delta[members] * np.conj(coeffs.a[members]))[:, None]).sum(axis=0)
                residual = np.linalg.norm(rhs - gram @ got[:, gg])
                assert residual <= 1e-9 * np.linalg.norm(got[:, gg])

    def test_singular_system_regularized(self, rng):
        hhat = np.array([[1.0 + 0j, 0.0]])   # rank-one channel sum
        group_of = np.array([0])
        report = sinr_all(np.ones((2, 1), complex), hhat, group_of, np.ones(1), 1)
        coeffs = surrogate_coeffs(report, np.ones(1))
        dual = DualState(delta=np.array([1.0]), nu=0.0)
        got, flagged = optimal_beamformer(dual, coeffs, hhat, group_of, 1)
        assert flagged
        assert np.all(np.isfinite(got))


class TestDualSteps:
    def test_equal_rates_fixed_point(self):
        dual = DualState(delta=np.array([0.5, 0.5]), nu=1.0)
        out = delta_step(dual, np.array([1.3, 1.3]), np.zeros(2, int), 1, 1.0, 0.02)
        assert np.allclose(out, [0.5, 0.5])

    def test_hyperplane_projection_case(self):
        dual = DualState(delta=np.array([0.6, 0.6]), nu=1.0)
        out = delta_step(dual, np.array([2.0, 2.0]), np.zeros(2, int), 1, 1.0, 0.02)
        assert np.allclose(out, [0.5, 0.5])

    def test_negative_coordinate_projected_exactly(self):
        from test_projections import project_simplex_bisection, simplex_grid

        dual = DualState(delta=np.array([0.01, 0.39, 0.6]), nu=1.0)
        srates = np.array([9.0, 0.5, 0.0])
        out = delta_step(dual, srates, np.zeros(3, int), 1, 0.1, 0.02)
        gap = srates - srates.min()
        raw = dual.delta - dual.delta / (gap + 0.1) * gap
        ref = project_simplex_bisection(raw)
        assert np.allclose(out, ref, atol=1e-10)
        grid = simplex_grid(3, 120)
        assert np.sum((out - raw) ** 2) <= np.min(np.sum((grid - raw) ** 2, axis=1)) + 1e-4
        assert np.all(out >= 0) and out.sum() == pytest.approx(1.0, abs=1e-12)

    def test_weights_drain_toward_bottleneck(self, rng):
        group_of = np.zeros(4, int)
        dual = uniform_dual(group_of, 1)
        srates = np.array([0.2, 1.0, 2.0, 3.0])
        for q in range(50):
            dual = DualState(delta=delta_step(dual, srates, group_of, 1, 1.0, 0.02),
                             nu=1.0, iteration=q + 1)
        assert dual.delta[0] > 0.9

    def test_nu_zero_subgradient(self):
        dual = DualState(delta=np.array([1.0]), nu=0.8)
        assert nu_step(dual, 1.0, 1.0, 1.0, 10.0, 0.01) == 0.8

    def test_nu_floor_at_zero(self):
        dual = DualState(delta=np.array([1.0]), nu=0.0)
        assert nu_step(dual, 0.5, 1.0, 1.0, 10.0, 0.01) == 0.0

    def test_nu_rises_on_overshoot(self):
        # 0.5 W over budget with step 1/(10 + 0) moves the multiplier up
        dual = DualState(delta=np.array([1.0]), nu=1.0)
        assert nu_step(dual, 1.5, 1.0, 1.0, 10.0, 0.01) == pytest.approx(1.05)


class TestPagd:
    def test_single_user_closed_form(self, rng):
        cfg = small_config(max_dual_iterations=500)
        hhat = random_channels(rng, 1, 3, scale=3.0)
        group_of = np.array([0])
        anchor = 0.6 * np.sqrt(1.0 / np.linalg.norm(hhat[0])) * np.conj(hhat).T
        report = sinr_all(anchor, hhat, group_of, np.ones(1), 1)
        coeffs = surrogate_coeffs(report, np.ones(1))
        result = pagd_solve(coeffs, hhat, group_of, 1, 1.0, cfg)
        v = np.conj(hhat[0])
        norm_v = np.linalg.norm(v)
        c = min(1.0, abs(coeffs.a[0]) / (coeffs.b[0] * norm_v))
        best = (coeffs.const[0] + 2 * abs(coeffs.a[0]) * norm_v * c
                - coeffs.b[0] * norm_v ** 2 * c ** 2)
        assert result.objective == pytest.approx(best, abs=1e-4)
        assert result.w.shape == (3, 1)
        assert np.sum(np.abs(result.w) ** 2) <= 1.0 + 1e-9

    def test_symmetric_groups_balance(self):
        cfg = small_config()
        hhat = np.array([[2.0 + 0j, 0.4 + 0j], [0.4 + 0j, 2.0 + 0j]])
        group_of = np.array([0, 1])
        anchor = np.sqrt(0.5) * np.eye(2, dtype=complex)
        report = sinr_all(anchor, hhat, group_of, np.ones(2), 2)
        coeffs = surrogate_coeffs(report, np.ones(2))
        result = pagd_solve(coeffs, hhat, group_of, 2, 1.0, cfg)
        norms = np.linalg.norm(result.w, axis=0)
        assert abs(norms[0] - norms[1]) <= 1e-3

    def test_dual_grid_oracle_micro(self, rng):
        cfg = small_config(max_dual_iterations=500)
        hhat = random_channels(rng, 4, 2, scale=2.0)
        group_of = np.array([0, 0, 1, 1])
        anchor = np.sqrt(0.25) * np.eye(2, dtype=complex)
        report = sinr_all(anchor, hhat, group_of, np.ones(4), 2)
        coeffs = surrogate_coeffs(report, np.ones(4))
        result = pagd_solve(coeffs, hhat, group_of, 2, 1.0, cfg)
        best = _dual_grid_search(coeffs, hhat, group_of, 2, 1.0)
        assert result.objective >= best - 0.01 * abs(best)

    def test_improves_on_uniform_start_and_respects_budget(self, rng):
        cfg = small_config()
        for _ in range(5):
            hhat, group_of, noise, w, report = random_anchor(rng, 6, 3, 3, (2, 2, 2))
            coeffs = surrogate_coeffs(report, noise)
            result = pagd_solve(coeffs, hhat, group_of, 3, 1.0, cfg)
            start, _ = optimal_beamformer(uniform_dual(group_of, 3), coeffs,
                                          hhat, group_of, 3)
            power = np.sum(np.abs(start) ** 2)
            if power > 1.0:
                start = start / np.sqrt(power)
            assert result.objective >= surrogate_objective(
                start, coeffs, hhat, group_of, 3) - 1e-12
            assert np.sum(np.abs(result.w) ** 2) <= 1.0 + 1e-6
            # dual feasibility after the run
            for g in range(3):
                members = group_of == g
                assert result.dual.delta[members].sum() == pytest.approx(1.0, abs=1e-12)
                assert np.all(result.dual.delta[members] >= 0)
            assert result.dual.nu >= 0


def _dual_grid_search(coeffs, hhat, group_of, num_groups, budget):
    """Score closed-form beamformers over a fine dual grid (independent path)."""
    best = -np.inf
    deltas = np.linspace(0.0, 1.0, 21)
    nus = np.concatenate([[0.0], np.logspace(-3, 3, 40)])
    for d1 in deltas:
        for d2 in deltas:
            delta = np.array([d1, 1 - d1, d2, 1 - d2])
            for nu in nus:
                dual = DualState(delta=delta, nu=float(nu))
                w, _ = optimal_beamformer(dual, coeffs, hhat, group_of, num_groups)
                if not np.all(np.isfinite(w)):
                    continue
                power = np.sum(np.abs(w) ** 2)
                for cand in (w, w * np.sqrt(budget / power)) if power > 0 else (w,):
                    if np.sum(np.abs(cand) ** 2) <= budget + 1e-12:
                        val = surrogate_objective(cand, coeffs, hhat, group_of,
                                                  num_groups)
                        best = max(best, val)
    return best


class TestElementUpdate:
    def test_matches_full_recompute_scan(self, rng):
        cfg = small_config(num_pas_per_waveguide=1, grid_size=16)
        layout = uniform_layout(cfg)
        users = random_users_in(cfg, rng)
        scale = np.sqrt(cfg.total_power) / np.sqrt(users.noise_power)
        hh = channels_for(layout, users, cfg, "proportional").hhat * scale[:, None]
        w = np.sqrt(0.5) * np.eye(2, dtype=complex)
        report = sinr_all(w, hh, users.group_of, np.ones(4), 2)
        coeffs = surrogate_coeffs(report, np.ones(4))
        for m in range(2):
            update = wm_element_update(layout, m, 0, w, coeffs, users, cfg,
                                       "proportional", hhat=hh, channel_scale=scale)
            cand = wd_candidate_set(layout, m, 0, cfg)
            scores = []
            for x in cand:
                trial = layout.with_position(m, 0, float(x))
                hh_trial = channels_for(trial, users, cfg, "proportional").hhat \
                    * scale[:, None]
                values = surrogate_rates(w, coeffs, hh_trial, users.group_of)
                scores.append(sum(values[users.group_of == g].min()
                                  for g in range(2)))
            best = int(np.argmax(scores))
            assert update.x == cand[best]
            assert update.surrogate_objective == pytest.approx(scores[best],
                                                               rel=1e-10)

    def test_interference_free_reduction_matches_linear_scan(self, rng):
        cfg = small_config(num_waveguides=1, num_groups=1, users_per_group=(2,),
                           num_pas_per_waveguide=1, grid_size=32)
        layout = uniform_layout(cfg)
        users = random_users_in(cfg, rng)
        hh = channels_for(layout, users, cfg, "equal").hhat
        w = np.array([[np.sqrt(cfg.total_power)]], dtype=complex)
        report = sinr_all(w, hh, users.group_of, users.noise_power, 1)
        coeffs = surrogate_coeffs(report, users.noise_power)
        coeffs = type(coeffs)(a=coeffs.a, b=np.zeros(2), const=coeffs.const)
        update = wm_element_update(layout, 0, 0, w, coeffs, users, cfg, "equal")
        from pinchcast.channels import waveguide_column_candidates

        cand = wd_candidate_set(layout, 0, 0, cfg)
        col = waveguide_column_candidates(layout.x[0], 0, cand,
                                          layout.waveguide_y[0], users, cfg, "equal")
        linear = coeffs.const[:, None] + 2 * np.real(
            coeffs.a[:, None] * col * w[0, 0])
        assert update.x == cand[int(np.argmax(linear.min(axis=0)))]


class TestAlternatingOptimize:
    def test_monotone_budget_and_report(self, rng):
        cfg = small_config(grid_size=48)
        users = random_users_in(cfg, rng)
        state, report = wm_alternating_optimize(cfg, users, "proportional")
        trace = state.objective_trace
        assert all(b >= a - 1e-6 for a, b in zip(trace, trace[1:]))
        assert np.sum(np.abs(state.w) ** 2) <= cfg.total_power + 1e-9
        state.layout.validate(cfg)
        assert report.objective == pytest.approx(trace[-1], rel=1e-9)

    def test_fixed_point_stops_quickly(self, rng):
        cfg = small_config(grid_size=32)
        users = random_users_in(cfg, rng)
        state, _ = wm_alternating_optimize(cfg, users, "proportional")
        assert state.converged
        again, rep2 = wm_alternating_optimize(cfg, users, "proportional",
                                              seed_layout=state.layout,
                                              seed_w=state.w)
        assert again.iterations <= 2
        assert np.array_equal(again.layout.x, state.layout.x)
        assert rep2.objective >= state.objective_trace[-1] - 1e-6

    def test_single_group_matches_division_architecture(self):
        # With one group the architectures coincide up to phase.  The check
        # runs on a phase-resolved grid with a single antenna, where both
        # placement searches provably land on the same gain-maximizing
        # point; with several antennas per waveguide the surrogate-based
        # placement is anchored to the expansion phases and can settle
        # below the direct SINR scan.
        base = small_config()
        cfg = small_config(num_waveguides=1, num_groups=1, users_per_group=(1,),
                           num_pas_per_waveguide=1, grid_size=48,
                           region_x=5 * base.wavelength)
        for seed in range(3):
            users = random_users_in(cfg, np.random.default_rng(seed))
            _, wd_report = wd_alternating_optimize(cfg, users, "proportional")
            _, wm_report = wm_alternating_optimize(cfg, users, "proportional")
            assert wm_report.objective == pytest.approx(wd_report.objective,
                                                        abs=1e-3)
