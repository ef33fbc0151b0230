"""Exact and smoothed secrecy-rate functions.

Every rate here is expressed in nats/s/Hz. The smoothed objective replaces
the max over eavesdroppers with a log-sum-exp at inverse temperature
``beta``; all exponentials are max-shifted so large beta*rate products do
not overflow.

Two interference conventions coexist and are always explicit: the cross-link
covariance terms may be evaluated at a separate ``snapshot`` profile (the
value links last observed) while own-link terms follow the current profile.
Passing ``snapshot=None`` evaluates everything at the current profile.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .exceptions import DimensionError, DomainError


@dataclass
class StrategyProfile:
    """Per-link transmit covariances: information signal and artificial noise."""

    sigma: list
    w: list

    @property
    def num_links(self):
        return len(self.sigma)

    def copy(self):
        return StrategyProfile([s.copy() for s in self.sigma], [w.copy() for w in self.w])

    def pair(self, q):
        return self.sigma[q], self.w[q]

    def set_pair(self, q, sigma, w):
        self.sigma[q] = sigma
        self.w[q] = w

    def powers(self):
        """(info, an) trace pairs per link."""
        info = np.array([float(np.real(np.trace(s))) for s in self.sigma])
        an = np.array([float(np.real(np.trace(w))) for w in self.w])
        return info, an

    def check_feasible(self, powers, atol=1e-9):
        info, an = self.powers()
        if np.any(info + an > np.asarray(powers) + atol):
            return False
        for m in (*self.sigma, *self.w):
            if kernels.min_eig_herm(m) < -atol:
                return False
        return True


def zero_profile(channels):
    n_tx = channels.n_tx
    return StrategyProfile(
        [np.zeros((n, n), dtype=complex) for n in n_tx],
        [np.zeros((n, n), dtype=complex) for n in n_tx],
    )


@dataclass
class AuxProfile:
    """Per-link auxiliary matrices: s0[q] (receiver side) and s_eve[q][k]."""

    s0: list
    s_eve: list

    @property
    def num_links(self):
        return len(self.s0)


@dataclass(frozen=True)
class GameConfig:
    """Smoothing parameter and per-link linear power budgets."""

    beta: float
    powers: np.ndarray

    def __post_init__(self):
        if self.beta <= 0:
            raise DomainError(f"beta must be positive, got {self.beta}")


def log_sum_exp(values, beta):
    """(1/beta) * ln(sum exp(beta * v)), evaluated in max-shifted form."""
    v = np.asarray(values, dtype=float)
    m = v.max()
    return m + np.log(np.exp(beta * (v - m)).sum()) / beta


def softmax(values, beta):
    v = np.asarray(values, dtype=float)
    e = np.exp(beta * (v - v.max()))
    return e / e.sum()


def interference_cov(q, profile, channels, snapshot=None):
    """Interference-plus-noise covariance at receiver q.

    Own-link artificial noise follows `profile`; the other links' totals come
    from `snapshot` when given (the interference last measured).
    """
    cross = snapshot if snapshot is not None else profile
    hqq = channels.h[q][q]
    if hqq.shape[1] != profile.sigma[q].shape[0]:
        raise DimensionError(
            f"link {q}: channel expects {hqq.shape[1]} tx antennas, "
            f"profile has {profile.sigma[q].shape[0]}"
        )
    m = channels.noise_power_linear * np.eye(hqq.shape[0], dtype=complex)
    m = m + hqq @ profile.w[q] @ hqq.conj().T
    for r in range(profile.num_links):
        if r == q:
            continue
        hrq = channels.h[r][q]
        m = m + hrq @ (cross.sigma[r] + cross.w[r]) @ hrq.conj().T
    return kernels.hermitize(m)


def eve_interference_cov(q, k, profile, channels, snapshot=None):
    """Interference-plus-noise covariance at eavesdropper k tuned to link q."""
    cross = snapshot if snapshot is not None else profile
    gqk = channels.g[q][k]
    m = channels.noise_power_linear * np.eye(gqk.shape[0], dtype=complex)
    m = m + gqk @ profile.w[q] @ gqk.conj().T
    for r in range(profile.num_links):
        if r == q:
            continue
        grk = channels.g[r][k]
        m = m + grk @ (cross.sigma[r] + cross.w[r]) @ grk.conj().T
    return kernels.hermitize(m)


def info_rate(q, profile, channels, snapshot=None):
    """Information rate of link q (log-det difference form)."""
    m = interference_cov(q, profile, channels, snapshot)
    hqq = channels.h[q][q]
    a = kernels.hermitize(m + hqq @ profile.sigma[q] @ hqq.conj().T)
    return kernels.logdet(a) - kernels.logdet(m)


def eve_rate(q, k, profile, channels, snapshot=None):
    """Rate of eavesdropper k listening to link q."""
    m = eve_interference_cov(q, k, profile, channels, snapshot)
    gqk = channels.g[q][k]
    b = kernels.hermitize(m + gqk @ profile.sigma[q] @ gqk.conj().T)
    return kernels.logdet(b) - kernels.logdet(m)


def eve_rates(q, profile, channels, snapshot=None):
    return np.array([
        eve_rate(q, k, profile, channels, snapshot) for k in range(channels.num_eves)
    ])


def secrecy_rate(q, profile, channels, snapshot=None):
    """Information rate minus the strongest eavesdropper's rate (may be < 0).

    Ties in the max break toward the lowest eavesdropper index.
    """
    return info_rate(q, profile, channels, snapshot) - eve_rates(q, profile, channels, snapshot).max()


def smooth_secrecy_rate(q, profile, channels, beta, snapshot=None):
    """Secrecy rate with the eavesdropper max replaced by a log-sum-exp.

    Lies within [secrecy_rate - ln(K)/beta, secrecy_rate].
    """
    return info_rate(q, profile, channels, snapshot) - log_sum_exp(
        eve_rates(q, profile, channels, snapshot), beta
    )


def phi_q(q, profile, s0, channels, snapshot=None):
    """Reformulated information rate; equals info_rate at s0 = M_q^{-1}."""
    m = interference_cov(q, profile, channels, snapshot)
    hqq = channels.h[q][q]
    a = kernels.hermitize(m + hqq @ profile.sigma[q] @ hqq.conj().T)
    return (
        -float(np.real(np.trace(s0 @ m)))
        + kernels.logdet(s0)
        + m.shape[0]
        + kernels.logdet(a)
    )


def phi_e(q, k, profile, s_k, channels, snapshot=None):
    """Reformulated eavesdropper rate; equals eve_rate at the inverse optimum."""
    m = eve_interference_cov(q, k, profile, channels, snapshot)
    gqk = channels.g[q][k]
    b = kernels.hermitize(m + gqk @ profile.sigma[q] @ gqk.conj().T)
    return (
        float(np.real(np.trace(s_k @ b)))
        - kernels.logdet(s_k)
        - m.shape[0]
        - kernels.logdet(m)
    )


def closed_form_aux(q, profile, channels, snapshot=None):
    """Block-optimal auxiliaries for link q: inverses of the interference
    covariance and of the eavesdroppers' received covariances."""
    m = interference_cov(q, profile, channels, snapshot)
    s0 = kernels.hermitize(np.linalg.inv(m))
    s_eve = []
    for k in range(channels.num_eves):
        me = eve_interference_cov(q, k, profile, channels, snapshot)
        gqk = channels.g[q][k]
        b = kernels.hermitize(me + gqk @ profile.sigma[q] @ gqk.conj().T)
        s_eve.append(kernels.hermitize(np.linalg.inv(b)))
    return s0, s_eve


def closed_form_aux_profile(profile, channels, snapshot=None) -> AuxProfile:
    s0_all, se_all = [], []
    for q in range(profile.num_links):
        s0, se = closed_form_aux(q, profile, channels, snapshot)
        s0_all.append(s0)
        se_all.append(se)
    return AuxProfile(s0=s0_all, s_eve=se_all)


def phi_e_all(q, profile, aux, channels, snapshot=None):
    return np.array([
        phi_e(q, k, profile, aux.s_eve[q][k], channels, snapshot)
        for k in range(channels.num_eves)
    ])


def rho_weights(q, profile, aux, channels, beta, snapshot=None):
    """Softmax weights over the reformulated eavesdropper rates."""
    return softmax(phi_e_all(q, profile, aux, channels, snapshot), beta)


def reformulated_objective(q, profile, aux, channels, beta, snapshot=None):
    """Smooth per-link objective: phi_q minus the log-sum-exp of phi_e."""
    pe = phi_e_all(q, profile, aux, channels, snapshot)
    return phi_q(q, profile, aux.s0[q], channels, snapshot) - log_sum_exp(pe, beta)


@dataclass
class GradientWorkspace:
    """Per-sweep cache shared by the gradient and criterion computations.

    All quantities follow the (profile, snapshot) convention of the module;
    ``a`` is interference plus the own signal covariance at the receiver,
    ``b_eve`` its eavesdropper analogue, and ``rho`` the softmax weights.
    """

    m: list = field(default_factory=list)
    a: list = field(default_factory=list)
    a_inv: list = field(default_factory=list)
    m_eve: list = field(default_factory=list)
    m_eve_inv: list = field(default_factory=list)
    phi_eve: list = field(default_factory=list)
    rho: list = field(default_factory=list)


def build_workspace(profile, aux, channels, beta, snapshot=None) -> GradientWorkspace:
    ws = GradientWorkspace()
    for q in range(profile.num_links):
        m = interference_cov(q, profile, channels, snapshot)
        hqq = channels.h[q][q]
        a = kernels.hermitize(m + hqq @ profile.sigma[q] @ hqq.conj().T)
        ws.m.append(m)
        ws.a.append(a)
        ws.a_inv.append(kernels.hermitize(np.linalg.inv(a)))
        me_row, meinv_row, pe_row = [], [], []
        for k in range(channels.num_eves):
            me = eve_interference_cov(q, k, profile, channels, snapshot)
            me_row.append(me)
            meinv_row.append(kernels.hermitize(np.linalg.inv(me)))
            gqk = channels.g[q][k]
            b = kernels.hermitize(me + gqk @ profile.sigma[q] @ gqk.conj().T)
            s_k = aux.s_eve[q][k]
            pe_row.append(
                float(np.real(np.trace(s_k @ b)))
                - kernels.logdet(s_k)
                - me.shape[0]
                - kernels.logdet(me)
            )
        ws.m_eve.append(me_row)
        ws.m_eve_inv.append(meinv_row)
        ws.phi_eve.append(np.array(pe_row))
        ws.rho.append(softmax(np.array(pe_row), beta))
    return ws
