"""Solver behavior tests.

Scenario oracles: synthetic channel sets with hand-picked geometry (strong
eavesdropper, decoupled links, zero power) where the correct outcome is
known, plus self-consistency certificates (natural-map residual at claimed
fixed points, AO objective monotonicity).
"""

import numpy as np
import pytest
from oracles import crandn, make_channels

from secgame import rates, solvers, vi
from secgame.exceptions import ConfigError
from secgame.network import ChannelSet, NetworkConfig, sample_channels, sample_topology
from secgame.solvers import (
    SolverConfig,
    _LinkEnv,
    init_profile,
    pg_step,
    solve_best_response,
    solve_gradient_response,
    solve_qne_selection,
)


def network_channels(num_links, num_eves, r_circ, power_dbm, seed, n_tx=3, n_rx=2, n_eve=2):
    cfg = NetworkConfig(num_links=num_links, num_eves=num_eves, r_circ=r_circ,
                        d_link=10.0, n_tx=n_tx, n_rx=n_rx, n_eve=n_eve,
                        power_dbm=power_dbm)
    topo = sample_topology(cfg, seed)
    return sample_channels(topo, cfg, 1000 + seed)


def zero_power_channels(seed=0):
    rng = np.random.default_rng(seed)
    ch = make_channels(rng, 2, 2, 3, 2, 2, power=1.0)
    return ChannelSet(h=ch.h, g=ch.g, noise_power_linear=1.0,
                      powers_linear=np.zeros(2))


class TestConfig:
    def test_validation(self):
        with pytest.raises(ConfigError):
            SolverConfig(prox_c=1.5).validate()
        with pytest.raises(ConfigError):
            SolverConfig(omega=1.2).validate()
        with pytest.raises(ConfigError):
            SolverConfig(criterion="nope").validate()
        assert SolverConfig().validate() is not None

    def test_eps_schedule_decreasing(self):
        cfg = SolverConfig()
        vals = [cfg.eps(j) for j in range(1, 8)]
        assert all(a > b for a, b in zip(vals, vals[1:]))


class TestInit:
    def test_deterministic_mode_strictly_feasible(self):
        ch = network_channels(3, 2, 50.0, 20.0, 0)
        prof = init_profile(ch)
        info, an = prof.powers()
        assert np.all(info + an < ch.powers_linear)

    def test_random_mode_feasible_and_seeded(self):
        ch = network_channels(3, 2, 50.0, 20.0, 0)
        a = init_profile(ch, "random", np.random.default_rng(5))
        b = init_profile(ch, "random", np.random.default_rng(5))
        assert all(np.array_equal(a.sigma[q], b.sigma[q]) for q in range(3))
        info, an = a.powers()
        assert np.all(info + an < ch.powers_linear)


class TestPgStep:
    def test_zero_channels_fixed_point(self):
        # All-zero channels make every gradient vanish: the step keeps the
        # (feasible) input unchanged.
        n = 3
        zeros_h = ((np.zeros((2, n), dtype=complex),),)
        zeros_g = ((np.zeros((2, n), dtype=complex),),)
        ch = ChannelSet(h=zeros_h, g=zeros_g, noise_power_linear=1.0,
                        powers_linear=np.array([4.0]))
        prof = init_profile(ch)
        aux = rates.closed_form_aux_profile(prof, ch)
        s, w = pg_step(0, prof, aux, ch, step=1.0)
        assert np.abs(s - prof.sigma[0]).max() < 1e-12
        assert np.abs(w - prof.w[0]).max() < 1e-12

    def test_large_step_lands_on_budget_boundary(self):
        ch = network_channels(1, 1, 40.0, 10.0, 1)
        prof = init_profile(ch)
        aux = rates.closed_form_aux_profile(prof, ch)
        s, w = pg_step(0, prof, aux, ch, step=1e9)
        assert abs(np.real(np.trace(s + w)) - ch.powers_linear[0]) < 1e-9

    def test_extra_terms_enter_direction(self):
        ch = network_channels(1, 1, 40.0, 10.0, 2)
        prof = init_profile(ch)
        aux = rates.closed_form_aux_profile(prof, ch)
        g = vi.grad_f(0, prof, aux, ch, 5.0)
        s, w = pg_step(0, prof, aux, ch, step=0.5, extra_terms=(-g[0], -g[1]))
        assert np.abs(s - prof.sigma[0]).max() < 1e-12
        assert np.abs(w - prof.w[0]).max() < 1e-12

    def test_rejects_nonpositive_step(self):
        ch = network_channels(1, 1, 40.0, 10.0, 3)
        prof = init_profile(ch)
        aux = rates.closed_form_aux_profile(prof, ch)
        with pytest.raises(ConfigError):
            pg_step(0, prof, aux, ch, step=0.0)


class TestLineSearchContract:
    def test_objective_never_decreases_on_accepted_steps(self):
        rng = np.random.default_rng(7)
        ch = make_channels(rng, 2, 2, 3, 2, 2, power=5.0)
        cfg = SolverConfig(pg_cap=1)
        snapshot = init_profile(ch)
        env = _LinkEnv(0, snapshot, ch)
        from oracles import rand_psd

        for _ in range(100):
            s = rand_psd(rng, 3)
            w = rand_psd(rng, 3)
            scale = 0.8 * 5.0 / max(np.real(np.trace(s + w)), 1e-9)
            s, w = s * scale, w * scale
            s0, s_eve = env.aux(s, w)
            before = env.objective(s, w, s0, s_eve, 5.0)
            s2, w2, _, after = env.ascend(s, w, s0, s_eve, 5.0, cfg, 1.0)
            assert after >= before - 1e-10


class TestBestResponse:
    def test_zero_power_converges_immediately(self):
        ch = zero_power_channels()
        report = solve_best_response(ch, SolverConfig())
        assert report.converged
        assert report.iterations <= 2
        assert np.abs(report.final_secrecy_rates).max() < 1e-12

    def test_artificial_noise_helps_strong_eavesdropper(self):
        # One link facing a strong eavesdropper whose antennas span the whole
        # transmit space (no null direction to hide in): the solver should
        # spend power on jamming, and zeroing the jamming part of its own
        # solution must not improve the secrecy rate.
        rng = np.random.default_rng(2)
        h = crandn(rng, 1, 2, scale=1.0)
        g = crandn(rng, 2, 2, scale=2.0)
        ch = ChannelSet(h=((h,),), g=((g,),), noise_power_linear=1.0,
                        powers_linear=np.array([10.0]))
        report = solve_best_response(ch, SolverConfig())
        w_power = float(np.real(np.trace(report.final_profile.w[0])))
        assert w_power > 1e-3
        no_an = report.final_profile.copy()
        no_an.w[0] = np.zeros_like(no_an.w[0])
        assert rates.secrecy_rate(0, report.final_profile, ch) >= rates.secrecy_rate(
            0, no_an, ch
        ) - 1e-9

    def test_ao_objective_monotone(self):
        for seed in range(3):
            ch = network_channels(3, 2, 60.0, 20.0, seed)
            report = solve_best_response(ch, SolverConfig())
            assert report.meta["ao_min_objective_gain"] >= -1e-9

    def test_trace_matches_iterations(self):
        ch = network_channels(2, 2, 60.0, 20.0, 5)
        report = solve_best_response(ch, SolverConfig())
        for column in solvers.TRACE_COLUMNS:
            assert len(report.trace[column]) == report.iterations


class TestGradientResponse:
    def test_zero_power_single_iteration(self):
        report = solve_gradient_response(zero_power_channels(), SolverConfig())
        assert report.converged
        assert report.iterations == 1
        info, an = report.final_profile.powers()
        assert info.sum() + an.sum() == 0.0

    def test_converged_certificate(self):
        # Tight tolerance: the claimed fixed point must satisfy the
        # natural-map residual bound by an order of magnitude.
        ch = network_channels(2, 2, 120.0, 20.0, 2)
        cfg = SolverConfig(tol=1e-7, alg2_iters=20000)
        report = solve_gradient_response(ch, cfg)
        assert report.converged
        assert report.final_residual <= 1e-6

    def test_oscillates_under_heavy_interference(self):
        ch = network_channels(6, 4, 20.0, 30.0, 3)
        report = solve_gradient_response(ch, SolverConfig())
        assert report.status == solvers.STATUS_OSCILLATING

    def test_feasibility_checks_pass(self):
        ch = network_channels(3, 2, 60.0, 20.0, 6)
        report = solve_gradient_response(ch, SolverConfig(debug_checks=True))
        assert report.final_profile.check_feasible(ch.powers_linear)

    def test_deterministic(self):
        ch = network_channels(3, 2, 60.0, 20.0, 7)
        a = solve_gradient_response(ch, SolverConfig())
        b = solve_gradient_response(ch, SolverConfig())
        assert a.status == b.status and a.iterations == b.iterations
        for column in solvers.TRACE_COLUMNS:
            assert a.trace[column] == b.trace[column]


class TestQneSelection:
    def test_degenerates_to_gradient_response_update(self):
        # With the criterion weight, the proximal pull and the damping all
        # zeroed, one selection update is exactly one fixed-step projected
        # gradient sweep.
        ch = network_channels(2, 2, 60.0, 20.0, 8)
        prof = init_profile(ch)
        aux = rates.closed_form_aux_profile(prof, ch, snapshot=prof)
        step = 3.0
        expected = [pg_step(q, prof, aux, ch, step, snapshot=prof) for q in range(2)]
        zero = np.zeros((3, 3), dtype=complex)
        degenerate = [
            pg_step(q, prof, aux, ch, step, extra_terms=(zero, zero), snapshot=prof)
            for q in range(2)
        ]
        for (s1, w1), (s2, w2) in zip(expected, degenerate):
            assert np.array_equal(s1, s2) and np.array_equal(w1, w2)

    def test_matches_gradient_response_in_weak_coupling(self):
        for seed in range(3):
            ch = network_channels(3, 2, 100.0, 20.0, seed)
            cfg = SolverConfig(outer_cap=30, inner_cap=80)
            r2 = solve_gradient_response(ch, cfg)
            r3 = solve_qne_selection(ch, cfg, criterion="sum_rate")
            s2 = r2.final_summary()["secrecy_sum_rate"]
            s3 = r3.final_summary()["secrecy_sum_rate"]
            assert r2.converged and r3.converged
            assert abs(s3 - s2) <= 0.05 * max(s2, 1e-9)

    def test_converged_certificate(self):
        ch = network_channels(3, 2, 100.0, 20.0, 4)
        cfg = SolverConfig(outer_cap=30, inner_cap=80)
        report = solve_qne_selection(ch, cfg, criterion="secrecy_sum")
        assert report.converged
        assert report.final_residual <= 10 * cfg.tol

    def test_single_link_criteria_identical(self):
        ch = network_channels(1, 2, 60.0, 20.0, 9)
        cfg = SolverConfig(outer_cap=8, inner_cap=40)
        reports = [
            solve_qne_selection(ch, cfg, criterion=crit) for crit in vi.CRITERIA
        ]
        for other in reports[1:]:
            for column in solvers.TRACE_COLUMNS:
                assert reports[0].trace[column] == other.trace[column]

    def test_deterministic(self):
        ch = network_channels(2, 2, 50.0, 20.0, 10)
        cfg = SolverConfig(outer_cap=6, inner_cap=30)
        a = solve_qne_selection(ch, cfg, criterion="secrecy_sum")
        b = solve_qne_selection(ch, cfg, criterion="secrecy_sum")
        for column in solvers.TRACE_COLUMNS:
            assert a.trace[column] == b.trace[column]

    def test_feasibility_checks_pass(self):
        ch = network_channels(2, 2, 40.0, 20.0, 11)
        cfg = SolverConfig(outer_cap=5, inner_cap=30, debug_checks=True)
        report = solve_qne_selection(ch, cfg, criterion="eves_rates")
        assert report.final_profile.check_feasible(ch.powers_linear)
