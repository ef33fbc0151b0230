"""Centralized secrecy-sum-rate maximization (the social-welfare benchmark).

Maximizes the sum of the links' smoothed secrecy objectives over all
strategies jointly, using an augmented-Lagrangian treatment of the per-link
power constraints: an outer refresh of the closed-form auxiliaries, a
multiplier/penalty loop driving the trace constraints feasible, and an inner
positive-semidefinite-projected descent with an Armijo line search.

The printed penalty form (1/2p) [max(a + p c, 0)^2 + a^2] is the default;
the conventional multiplier form with -a^2 is available for sensitivity
checks (the two differ by a constant in the strategies, so gradients and
iterates coincide; only reported L values differ).
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels, rates, vi
from .solvers import (
    STATUS_CONVERGED,
    STATUS_ITERATION_CAP,
    SolverConfig,
    _finalize,
    _Trace,
    init_profile,
)


@dataclass
class CssmState:
    """Mutable solver state: strategies, auxiliaries, multipliers, penalty."""

    profile: rates.StrategyProfile
    aux: rates.AuxProfile
    multipliers: np.ndarray
    penalty: float
    penalty_form: str = "printed"

    def constraint_values(self, powers):
        info, an = self.profile.powers()
        return info + an - np.asarray(powers)


def _sum_objectives(profile, aux, channels, beta):
    return sum(
        rates.reformulated_objective(q, profile, aux, channels, beta)
        for q in range(profile.num_links)
    )


def lagrangian_value(state: CssmState, channels, beta):
    """Augmented Lagrangian of the (negated) secrecy-sum objective."""
    c = state.constraint_values(channels.powers_linear)
    clamped = np.maximum(state.multipliers + state.penalty * c, 0.0)
    sign = 1.0 if state.penalty_form == "printed" else -1.0
    penalty = (clamped**2 + sign * state.multipliers**2).sum() / (2.0 * state.penalty)
    return -_sum_objectives(state.profile, state.aux, channels, beta) + penalty


def lagrangian_grads(state: CssmState, channels, beta, workspace=None):
    """Per-link (d/dSigma_q, d/dW_q) of the augmented Lagrangian.

    The cross-link sums are exactly the secrecy-sum criterion building
    blocks; the constraint part contributes (a_q + p c_q)_+ I on the active
    side of the clamp.
    """
    profile, aux = state.profile, state.aux
    ws = workspace or rates.build_workspace(profile, aux, channels, beta)
    c = state.constraint_values(channels.powers_linear)
    active = np.maximum(state.multipliers + state.penalty * c, 0.0)
    out = []
    for q in range(profile.num_links):
        own_s, own_w = vi.grad_f(q, profile, aux, channels, beta, workspace=ws)
        cross_s, cross_w = vi.criterion_grad(
            "secrecy_sum", q, profile, aux, channels, beta, workspace=ws
        )
        eye = np.eye(profile.sigma[q].shape[0], dtype=complex)
        out.append((
            -(own_s + cross_s) + active[q] * eye,
            -(own_w + cross_w) + active[q] * eye,
        ))
    return out


def solve_cssm(channels, cfg: SolverConfig, profile=None):
    """Run the centralized benchmark from one starting point."""
    cfg.validate()
    beta = cfg.beta
    powers = channels.powers_linear
    profile = init_profile(channels) if profile is None else profile.copy()
    trace = _Trace()
    status = STATUS_ITERATION_CAP
    prev_l = None
    strict_decrease = True
    min_multiplier = 0.0
    penalty_monotone = True
    best = None  # (clipped secrecy sum rate, feasible profile)
    scale = max(1.0, float(np.sqrt(np.sum(powers**2))))
    for outer in range(1, cfg.cssm_outer_cap + 1):
        aux = rates.closed_form_aux_profile(profile, channels)
        state = CssmState(
            profile=profile,
            aux=aux,
            multipliers=np.zeros(profile.num_links),
            penalty=1.0,
            penalty_form=cfg.cssm_penalty_form,
        )
        step_seed = None  # sized against the first gradient of this outer pass
        for _middle in range(cfg.cssm_middle_cap):
            for _inner in range(cfg.cssm_inner_cap):
                grads = lagrangian_grads(state, channels, beta)
                cur = lagrangian_value(state, channels, beta)
                gnorm2 = sum(
                    np.linalg.norm(gs) ** 2 + np.linalg.norm(gw) ** 2
                    for gs, gw in grads
                )
                if step_seed is None:
                    step_seed = 0.25 * scale / max(np.sqrt(gnorm2), 1e-12)
                accepted = False
                step = step_seed
                while step > 1e-16 * step_seed:
                    cand = state.profile.copy()
                    move = 0.0
                    for q, (gs, gw) in enumerate(grads):
                        s = kernels.psd_project(cand.sigma[q] - step * gs)
                        w = kernels.psd_project(cand.w[q] - step * gw)
                        move += float(np.real(
                            np.trace(gs @ (s - cand.sigma[q]))
                            + np.trace(gw @ (w - cand.w[q]))
                        ))
                        cand.set_pair(q, s, w)
                    cand_state = CssmState(cand, aux, state.multipliers,
                                           state.penalty, state.penalty_form)
                    cand_val = lagrangian_value(cand_state, channels, beta)
                    if cand_val <= cur + cfg.armijo_c1 * min(move, 0.0) and cand_val < cur:
                        displacement = float(np.sqrt(sum(
                            np.linalg.norm(cand.sigma[q] - state.profile.sigma[q]) ** 2
                            + np.linalg.norm(cand.w[q] - state.profile.w[q]) ** 2
                            for q in range(cand.num_links)
                        )))
                        strict_decrease &= cand_val < cur
                        state.profile = cand
                        accepted = True
                        break
                    step *= cfg.armijo_shrink
                if not accepted:
                    break
                step_seed = step * 4.0
                if displacement <= 0.1 * cfg.tol * scale and gnorm2 * step <= 0.1 * cfg.tol:
                    break
            c = state.constraint_values(powers)
            state.multipliers = np.maximum(state.multipliers + state.penalty * c, 0.0)
            min_multiplier = min(min_multiplier, float(state.multipliers.min()))
            penalty_monotone &= cfg.cssm_penalty_growth >= 1.0
            state.penalty *= cfg.cssm_penalty_growth
            if c.max() <= 0.0:
                break
        profile = state.profile
        feasible = vi.project_state(profile, powers)
        l_now = lagrangian_value(
            CssmState(feasible, aux, state.multipliers, state.penalty,
                      state.penalty_form),
            channels, beta,
        )
        secrecy = trace.append(
            outer, feasible, channels, vi.vi_residual(feasible, channels, beta)
        )
        ssr = float(np.clip(secrecy, 0.0, None).sum())
        if best is None or ssr > best[0]:
            best = (ssr, feasible.copy())
        if (
            outer >= 3
            and prev_l is not None
            and abs(l_now - prev_l) <= cfg.tol * max(1.0, abs(prev_l))
        ):
            status = STATUS_CONVERGED
            break
        prev_l = l_now
    final = best[1] if best is not None else vi.project_state(profile, powers)
    final = _polish(final, channels, cfg)
    info, an = final.powers()
    report = _finalize("cssm", status, trace, final, channels, cfg,
                       {"armijo_strict_decrease": bool(strict_decrease),
                        "min_multiplier": float(min_multiplier),
                        "penalty_monotone": bool(penalty_monotone),
                        "max_constraint_violation": float((info + an - powers).max())})
    report.meta["stationarity_residual"] = stationarity_residual(final, channels, beta)
    return report


def _social_objective(profile, channels, beta):
    return sum(
        rates.smooth_secrecy_rate(q, profile, channels, beta)
        for q in range(profile.num_links)
    )


def _social_gradients(profile, channels, beta):
    aux = rates.closed_form_aux_profile(profile, channels)
    ws = rates.build_workspace(profile, aux, channels, beta)
    grads = []
    for q in range(profile.num_links):
        own_s, own_w = vi.grad_f(q, profile, aux, channels, beta, workspace=ws)
        cross_s, cross_w = vi.criterion_grad(
            "secrecy_sum", q, profile, aux, channels, beta, workspace=ws
        )
        grads.append((own_s + cross_s, own_w + cross_w))
    return grads


def _polish(profile, channels, cfg):
    """Projected ascent on the composed objective until near-stationarity.

    The multiplier machinery gets close; this final pass drives the
    projected-gradient residual of the true social objective toward zero
    (with the auxiliaries re-derived at every point, the formula gradients
    are exact total derivatives of the smoothed secrecy sum-rate).
    """
    beta = cfg.beta
    powers = channels.powers_linear
    cur = _social_objective(profile, channels, beta)
    step_seed = None
    scale = max(1.0, float(np.sqrt(np.sum(powers**2))))
    for _ in range(cfg.cssm_polish_cap):
        grads = _social_gradients(profile, channels, beta)
        gnorm = np.sqrt(sum(
            np.linalg.norm(gs) ** 2 + np.linalg.norm(gw) ** 2 for gs, gw in grads
        ))
        if step_seed is None:
            step_seed = 0.25 * scale / max(gnorm, 1e-12)
        accepted = False
        step = step_seed
        while step > 1e-16 * step_seed:
            cand = profile.copy()
            move = 0.0
            for q, (gs, gw) in enumerate(grads):
                s, w = kernels.project_feasible(
                    cand.sigma[q] + step * gs, cand.w[q] + step * gw, powers[q]
                )
                move += float(np.real(
                    np.trace(gs @ (s - cand.sigma[q])) + np.trace(gw @ (w - cand.w[q]))
                ))
                cand.set_pair(q, s, w)
            val = _social_objective(cand, channels, beta)
            if val >= cur + cfg.armijo_c1 * max(move, 0.0) and val >= cur:
                displacement = float(np.sqrt(sum(
                    np.linalg.norm(cand.sigma[q] - profile.sigma[q]) ** 2
                    + np.linalg.norm(cand.w[q] - profile.w[q]) ** 2
                    for q in range(cand.num_links)
                )))
                profile, cur = cand, val
                accepted = True
                break
            step *= cfg.armijo_shrink
        if not accepted:
            break
        step_seed = step * 4.0
        if displacement <= 1e-3 * cfg.tol * scale:
            break
    return profile


def stationarity_residual(profile, channels, beta):
    """Projected-gradient residual of the true social objective.

    With the auxiliaries at their closed form, the gradient of the smoothed
    secrecy sum-rate w.r.t. link q is the own-link gradient plus the
    secrecy-sum cross terms; the residual is the natural-map norm under a
    unit step.
    """
    aux = rates.closed_form_aux_profile(profile, channels)
    ws = rates.build_workspace(profile, aux, channels, beta)
    shifted = profile.copy()
    for q in range(profile.num_links):
        own_s, own_w = vi.grad_f(q, profile, aux, channels, beta, workspace=ws)
        cross_s, cross_w = vi.criterion_grad(
            "secrecy_sum", q, profile, aux, channels, beta, workspace=ws
        )
        shifted.set_pair(q, profile.sigma[q] + own_s + cross_s,
                         profile.w[q] + own_w + cross_w)
    projected = vi.project_state(shifted, channels.powers_linear)
    return float(np.sqrt(sum(
        np.linalg.norm(projected.sigma[q] - profile.sigma[q]) ** 2
        + np.linalg.norm(projected.w[q] - profile.w[q]) ** 2
        for q in range(profile.num_links)
    )))
