"""Centralized-benchmark tests.

Oracles: term-by-term recomputation of the augmented Lagrangian, central
finite differences of its value for the gradients, and natural-map residual
certificates for stationarity claims.
"""

import numpy as np
import pytest
from oracles import fd_grad_herm, make_channels, random_feasible_profile

from secgame import rates, vi
from secgame.cssm import (
    CssmState,
    lagrangian_grads,
    lagrangian_value,
    solve_cssm,
    stationarity_residual,
)
from secgame.network import ChannelSet, NetworkConfig, sample_channels, sample_topology
from secgame.solvers import SolverConfig, solve_best_response


def make_state(rng, num_links=2, num_eves=2, power=6.0, multipliers=None, penalty=1.0,
               form="printed"):
    ch = make_channels(rng, num_links, num_eves, 3, 2, 2, power=power)
    prof = random_feasible_profile(rng, ch)
    aux = rates.closed_form_aux_profile(prof, ch)
    a = np.zeros(num_links) if multipliers is None else np.asarray(multipliers, float)
    return ch, CssmState(profile=prof, aux=aux, multipliers=a, penalty=penalty,
                         penalty_form=form)


class TestLagrangianValue:
    def test_slack_constraints_zero_penalty(self):
        rng = np.random.default_rng(0)
        ch, state = make_state(rng, power=50.0)  # profile uses far less power
        expected = -sum(
            rates.reformulated_objective(q, state.profile, state.aux, ch, 5.0)
            for q in range(2)
        )
        assert abs(lagrangian_value(state, ch, 5.0) - expected) < 1e-12

    def test_zero_profile_single_link(self):
        rng = np.random.default_rng(1)
        ch = make_channels(rng, 1, 1, 3, 2, 2, power=4.0)
        prof = rates.zero_profile(ch)
        aux = rates.closed_form_aux_profile(prof, ch)
        a = np.array([2.0])
        state = CssmState(prof, aux, a, penalty=1.5)
        # objective part is zero; penalty reproduces the printed formula
        c = -4.0
        clamped = max(a[0] + 1.5 * c, 0.0)
        expected = (clamped**2 + a[0] ** 2) / (2 * 1.5)
        assert abs(lagrangian_value(state, ch, 5.0) - expected) < 1e-12

    def test_term_by_term_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            ch, state = make_state(
                rng, power=3.0, multipliers=rng.uniform(0, 2, 2),
                penalty=rng.uniform(0.5, 4.0),
            )
            obj = 0.0
            for q in range(2):
                pe = np.array([
                    rates.phi_e(q, k, state.profile, state.aux.s_eve[q][k], ch)
                    for k in range(2)
                ])
                obj += rates.phi_q(q, state.profile, state.aux.s0[q], ch)
                obj -= rates.log_sum_exp(pe, 5.0)
            info, an = state.profile.powers()
            c = info + an - ch.powers_linear
            pen = sum(
                (max(state.multipliers[q] + state.penalty * c[q], 0.0) ** 2
                 + state.multipliers[q] ** 2)
                for q in range(2)
            ) / (2 * state.penalty)
            assert abs(lagrangian_value(state, ch, 5.0) - (-obj + pen)) < 1e-12

    def test_conventional_form_differs_only_by_constant(self):
        rng = np.random.default_rng(3)
        ch, printed = make_state(rng, multipliers=[1.0, 0.5], penalty=2.0)
        conventional = CssmState(printed.profile, printed.aux, printed.multipliers,
                                 printed.penalty, penalty_form="conventional")
        gap = lagrangian_value(printed, ch, 5.0) - lagrangian_value(conventional, ch, 5.0)
        expected = (printed.multipliers**2).sum() / printed.penalty
        assert abs(gap - expected) < 1e-12


class TestLagrangianGrads:
    def test_single_link_reduces_to_own_gradient(self):
        rng = np.random.default_rng(4)
        ch = make_channels(rng, 1, 2, 3, 2, 2, power=50.0)
        prof = random_feasible_profile(rng, ch)
        aux = rates.closed_form_aux_profile(prof, ch)
        state = CssmState(prof, aux, np.zeros(1), penalty=1.0)
        (gs, gw), = lagrangian_grads(state, ch, 5.0)
        own_s, own_w = vi.grad_f(0, prof, aux, ch, 5.0)
        assert np.abs(gs + own_s).max() < 1e-12
        assert np.abs(gw + own_w).max() < 1e-12

    def test_slack_constraints_no_penalty_term(self):
        rng = np.random.default_rng(5)
        ch, state = make_state(rng, power=100.0)
        grads = lagrangian_grads(state, ch, 5.0)
        own = vi.grad_f(0, state.profile, state.aux, ch, 5.0)
        cross = vi.criterion_grad("secrecy_sum", 0, state.profile, state.aux, ch, 5.0)
        assert np.abs(grads[0][0] + own[0] + cross[0]).max() < 1e-12

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(6)
        for trial in range(3):
            ch, state = make_state(
                rng, power=4.0, multipliers=rng.uniform(0, 1.5, 2),
                penalty=rng.uniform(0.5, 3.0),
            )
            grads = lagrangian_grads(state, ch, 5.0)
            for q in range(2):
                def l_of_sigma(x, q=q):
                    p2 = state.profile.copy()
                    p2.sigma[q] = x
                    s2 = CssmState(p2, state.aux, state.multipliers, state.penalty,
                                   state.penalty_form)
                    return lagrangian_value(s2, ch, 5.0)

                def l_of_w(x, q=q):
                    p2 = state.profile.copy()
                    p2.w[q] = x
                    s2 = CssmState(p2, state.aux, state.multipliers, state.penalty,
                                   state.penalty_form)
                    return lagrangian_value(s2, ch, 5.0)

                fd_s = fd_grad_herm(l_of_sigma, state.profile.sigma[q])
                fd_w = fd_grad_herm(l_of_w, state.profile.w[q])
                assert np.linalg.norm(grads[q][0] - fd_s) / max(1, np.linalg.norm(fd_s)) < 1e-5
                assert np.linalg.norm(grads[q][1] - fd_w) / max(1, np.linalg.norm(fd_w)) < 1e-5

    def test_gradients_identical_across_penalty_forms(self):
        rng = np.random.default_rng(7)
        ch, printed = make_state(rng, multipliers=[0.7, 0.2], penalty=2.0)
        conventional = CssmState(printed.profile, printed.aux, printed.multipliers,
                                 printed.penalty, penalty_form="conventional")
        for (a1, b1), (a2, b2) in zip(
            lagrangian_grads(printed, ch, 5.0), lagrangian_grads(conventional, ch, 5.0)
        ):
            assert np.array_equal(a1, a2) and np.array_equal(b1, b2)


def network_channels(num_links, num_eves, r_circ, power_dbm, seed):
    cfg = NetworkConfig(num_links=num_links, num_eves=num_eves, r_circ=r_circ,
                        d_link=10.0, n_tx=3, n_rx=2, n_eve=2, power_dbm=power_dbm)
    topo = sample_topology(cfg, seed)
    return sample_channels(topo, cfg, 1000 + seed)


class TestSolve:
    def test_zero_power(self):
        rng = np.random.default_rng(8)
        base = make_channels(rng, 2, 1, 3, 2, 2)
        ch = ChannelSet(h=base.h, g=base.g, noise_power_linear=1.0,
                        powers_linear=np.zeros(2))
        report = solve_cssm(ch, SolverConfig())
        assert report.final_summary()["secrecy_sum_rate"] == 0.0
        info, an = report.final_profile.powers()
        assert info.sum() + an.sum() == 0.0

    def test_invariants_and_feasibility(self):
        ch = network_channels(2, 2, 50.0, 20.0, 0)
        report = solve_cssm(ch, SolverConfig())
        assert report.meta["armijo_strict_decrease"]
        assert report.meta["min_multiplier"] >= 0.0
        assert report.meta["penalty_monotone"]
        assert report.meta["max_constraint_violation"] <= 1e-9
        assert report.final_profile.check_feasible(ch.powers_linear)

    def test_single_link_stationarity_of_both_solvers(self):
        # Centralized and best-response solve the same problem at Q=1; both
        # limit points must be stationary for the true objective.
        ch = network_channels(1, 2, 50.0, 20.0, 1)
        cfg = SolverConfig(tol=1e-6, cssm_outer_cap=20, cssm_inner_cap=200,
                           max_rounds=80, ao_cap=60, pg_cap=200)
        rc = solve_cssm(ch, cfg)
        rb = solve_best_response(ch, cfg)
        assert rc.meta["stationarity_residual"] <= 1e-4
        assert stationarity_residual(rb.final_profile, ch, cfg.beta) <= 1e-4

    def test_beats_selection_on_average(self):
        # Social optimum should dominate the selected equilibria on average.
        from secgame.solvers import solve_qne_selection

        cssm_vals, sel_vals = [], []
        for seed in range(3):
            ch = network_channels(4, 3, 40.0, 30.0, seed)
            cssm_vals.append(
                solve_cssm(ch, SolverConfig()).final_summary()["secrecy_sum_rate"]
            )
            cfg = SolverConfig(outer_cap=20, inner_cap=60)
            sel_vals.append(
                solve_qne_selection(ch, cfg, criterion="secrecy_sum")
                .final_summary()["secrecy_sum_rate"]
            )
        assert np.mean(cssm_vals) >= np.mean(sel_vals)

    def test_deterministic(self):
        ch = network_channels(2, 2, 50.0, 20.0, 2)
        a = solve_cssm(ch, SolverConfig())
        b = solve_cssm(ch, SolverConfig())
        for column in a.trace:
            assert a.trace[column] == b.trace[column]
