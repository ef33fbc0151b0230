"""Variational-inequality machinery for the strategy game.

The stacked map F collects every link's negated smoothed-objective gradients.
Solutions of VI(F, feasible set) are exactly the points where no link's
first-order conditions can be improved; the natural-map residual
``|x - proj(x - F(x))|`` is the operational certificate used throughout.

Hermitian matrices are vectorized by their real degrees of freedom
(diagonal, then sqrt(2)-scaled real/imaginary upper-triangle entries), an
isometry between the Frobenius and Euclidean geometries, so projections,
norms and Jacobians agree between matrix and vector forms.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels, rates
from .exceptions import CoordinationDataError, DimensionError

CRITERIA = ("sum_rate", "eves_rates", "secrecy_sum")


# ---------------------------------------------------------------------------
# Real-degree-of-freedom vectorization of Hermitian matrices
# ---------------------------------------------------------------------------

_SQRT2 = np.sqrt(2.0)


def herm_to_vec(m):
    """Isometric real vector (length n^2) of a Hermitian matrix."""
    n = m.shape[0]
    out = np.empty(n * n)
    out[:n] = np.real(np.diag(m))
    pos = n
    for i in range(n):
        for j in range(i + 1, n):
            out[pos] = _SQRT2 * m[i, j].real
            out[pos + 1] = _SQRT2 * m[i, j].imag
            pos += 2
    return out


def vec_to_herm(v, n):
    """Inverse of herm_to_vec."""
    m = np.zeros((n, n), dtype=complex)
    np.fill_diagonal(m, v[:n])
    pos = n
    for i in range(n):
        for j in range(i + 1, n):
            m[i, j] = (v[pos] + 1j * v[pos + 1]) / _SQRT2
            m[j, i] = np.conj(m[i, j])
            pos += 2
    return m


def dof_basis(n):
    """Orthonormal Hermitian basis matrices matching the vector layout."""
    basis = []
    for i in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[i, i] = 1.0
        basis.append(e)
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = e[j, i] = 1.0 / _SQRT2
            basis.append(e)
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = 1j / _SQRT2
            e[j, i] = -1j / _SQRT2
            basis.append(e)
    return basis


@dataclass(frozen=True)
class VectorizedState:
    """Real-vectorized strategy profile plus its per-link layout."""

    x: np.ndarray
    dims: tuple

    @property
    def m(self):
        return int(sum(2 * n * n for n in self.dims))


def state_slices(dims):
    """Per-(link, matrix) slices into the stacked vector."""
    slices = []
    pos = 0
    for n in dims:
        slices.append((slice(pos, pos + n * n), slice(pos + n * n, pos + 2 * n * n)))
        pos += 2 * n * n
    return slices


def profile_to_state(profile) -> VectorizedState:
    dims = tuple(s.shape[0] for s in profile.sigma)
    parts = []
    for q in range(profile.num_links):
        parts.append(herm_to_vec(profile.sigma[q]))
        parts.append(herm_to_vec(profile.w[q]))
    return VectorizedState(x=np.concatenate(parts), dims=dims)


def state_to_profile(state: VectorizedState):
    sigma, w = [], []
    for (sl_s, sl_w), n in zip(state_slices(state.dims), state.dims):
        sigma.append(vec_to_herm(state.x[sl_s], n))
        w.append(vec_to_herm(state.x[sl_w], n))
    return rates.StrategyProfile(sigma, w)


# ---------------------------------------------------------------------------
# Gradients
# ---------------------------------------------------------------------------


def grad_f(q, profile, aux, channels, beta, snapshot=None, workspace=None):
    """Gradients of the smoothed per-link objective at fixed auxiliaries.

    Returns Hermitian (d/dSigma_q, d/dW_q); the softmax weights are evaluated
    at the current point, the auxiliary matrices are taken from `aux` as-is.
    """
    ws = workspace or rates.build_workspace(profile, aux, channels, beta, snapshot)
    hqq = channels.h[q][q]
    a_inv = ws.a_inv[q]
    rho = ws.rho[q]
    g_sigma = hqq.conj().T @ a_inv @ hqq
    g_w = hqq.conj().T @ (a_inv - aux.s0[q]) @ hqq
    for k in range(channels.num_eves):
        gqk = channels.g[q][k]
        s_k = aux.s_eve[q][k]
        g_sigma = g_sigma - rho[k] * gqk.conj().T @ s_k @ gqk
        g_w = g_w + rho[k] * gqk.conj().T @ (ws.m_eve_inv[q][k] - s_k) @ gqk
    return kernels.hermitize(g_sigma), kernels.hermitize(g_w)


def stacked_gradients(profile, aux, channels, beta, snapshot=None, workspace=None):
    """grad_f for every link, sharing one workspace."""
    ws = workspace or rates.build_workspace(profile, aux, channels, beta, snapshot)
    return [
        grad_f(q, profile, aux, channels, beta, snapshot, workspace=ws)
        for q in range(profile.num_links)
    ]


def F_map(profile, aux, channels, beta, snapshot=None, workspace=None) -> VectorizedState:
    """Stacked negated gradients, real-vectorized."""
    grads = stacked_gradients(profile, aux, channels, beta, snapshot, workspace)
    parts = []
    for g_sigma, g_w in grads:
        parts.append(herm_to_vec(-g_sigma))
        parts.append(herm_to_vec(-g_w))
    dims = tuple(s.shape[0] for s in profile.sigma)
    return VectorizedState(x=np.concatenate(parts), dims=dims)


def project_state(profile, powers):
    """Per-link joint feasibility projection of a whole profile."""
    out = profile.copy()
    for q in range(profile.num_links):
        s, w = kernels.project_feasible(profile.sigma[q], profile.w[q], powers[q])
        out.set_pair(q, s, w)
    return out


def vi_residual(profile, channels, beta, powers=None):
    """Natural-map residual |x - proj(x - F(x))| with closed-form auxiliaries.

    Zero exactly at VI solutions; the auxiliaries and softmax weights are
    evaluated consistently at the given profile.
    """
    powers = channels.powers_linear if powers is None else powers
    aux = rates.closed_form_aux_profile(profile, channels)
    fx = F_map(profile, aux, channels, beta)
    x = profile_to_state(profile)
    shifted = state_to_profile(VectorizedState(x=x.x - fx.x, dims=x.dims))
    projected = project_state(shifted, powers)
    return float(np.linalg.norm(x.x - profile_to_state(projected).x))


# ---------------------------------------------------------------------------
# Jacobian blocks
# ---------------------------------------------------------------------------


@dataclass
class JacobianBlocks:
    """Real Jacobian of the stacked map in the degree-of-freedom basis.

    ``blocks[q][l]`` is the (2 n_q^2) x (2 n_l^2) derivative of link q's
    stacked negated gradients along link l's strategies, auxiliaries held
    fixed at their closed form (softmax weights differentiated).
    """

    blocks: list
    dims: tuple

    def full(self):
        return np.block(self.blocks)


def jacobian_blocks(profile, aux, channels, beta, snapshot=None) -> JacobianBlocks:
    """Assemble the analytic Jacobian one basis direction at a time.

    Building blocks per (q, l, k): the whitened direct-channel sandwich
    Psi = H_qq^H A_q^{-1} H_lq, the leakage responses
    Y = G_qk^H S_k G_qk and Ytil = G_qk^H (S_k - M_e^{-1}) G_qk, the
    cross-eavesdropper map pi = G_qk^H M_e^{-1} G_lk, and the softmax
    sensitivities (the Lambda/Omega weights).
    """
    num_links = profile.num_links
    num_eves = channels.num_eves
    ws = rates.build_workspace(profile, aux, channels, beta, snapshot)
    dims = tuple(s.shape[0] for s in profile.sigma)

    psi = [[None] * num_links for _ in range(num_links)]
    pi = [[[None] * num_eves for _ in range(num_links)] for _ in range(num_links)]
    y = [[None] * num_eves for _ in range(num_links)]
    ytil = [[None] * num_eves for _ in range(num_links)]
    for q in range(num_links):
        for l in range(num_links):
            psi[q][l] = channels.h[q][q].conj().T @ ws.a_inv[q] @ channels.h[l][q]
        for k in range(num_eves):
            gqk = channels.g[q][k]
            s_k = aux.s_eve[q][k]
            y[q][k] = gqk.conj().T @ s_k @ gqk
            ytil[q][k] = gqk.conj().T @ (s_k - ws.m_eve_inv[q][k]) @ gqk
            for l in range(num_links):
                pi[q][l][k] = gqk.conj().T @ ws.m_eve_inv[q][k] @ channels.g[l][k]

    blocks = [[None] * num_links for _ in range(num_links)]
    for l in range(num_links):
        basis = dof_basis(dims[l])
        n_l = dims[l]
        for q in range(num_links):
            n_q = dims[q]
            block = np.empty((2 * n_q * n_q, 2 * n_l * n_l))
            rho = ws.rho[q]
            # phi_e sensitivities to link l's matrices (Hermitian, traced
            # against the direction): sigma differs from w only at l == q.
            sens_w = [
                channels.g[l][k].conj().T
                @ (aux.s_eve[q][k] - ws.m_eve_inv[q][k])
                @ channels.g[l][k]
                for k in range(num_eves)
            ]
            sens_sigma = [y[q][k] for k in range(num_eves)] if l == q else sens_w
            for col, direction in enumerate(basis):
                for is_w in (False, True):
                    sens = sens_w if is_w else sens_sigma
                    dphi = np.array([
                        float(np.real(np.trace(sens[k] @ direction)))
                        for k in range(num_eves)
                    ])
                    drho = beta * rho * (dphi - float(rho @ dphi))
                    base = psi[q][l] @ direction @ psi[q][l].conj().T
                    df_sigma = base + sum(drho[k] * y[q][k] for k in range(num_eves))
                    df_w = base + sum(drho[k] * ytil[q][k] for k in range(num_eves))
                    if is_w or l != q:
                        for k in range(num_eves):
                            df_w = df_w + rho[k] * (
                                pi[q][l][k] @ direction @ pi[q][l][k].conj().T
                            )
                    col_idx = col + (n_l * n_l if is_w else 0)
                    block[: n_q * n_q, col_idx] = herm_to_vec(kernels.hermitize(df_sigma))
                    block[n_q * n_q:, col_idx] = herm_to_vec(kernels.hermitize(df_w))
            blocks[q][l] = block
    return JacobianBlocks(blocks=blocks, dims=dims)


# ---------------------------------------------------------------------------
# Uniqueness condition and monotonization
# ---------------------------------------------------------------------------


@dataclass
class LinkUniqueness:
    lam_min: float
    offdiag_norm_sum: float
    satisfied: bool


@dataclass
class UniquenessReport:
    """Block-dominance test: the game map is strongly monotone (unique
    solution) when every diagonal block's smallest symmetric-part eigenvalue
    strictly exceeds the summed spectral norms of its row's off-diagonal
    blocks."""

    per_link: list
    unique: bool
    tau: np.ndarray

    def to_dict(self):
        return {
            "unique": self.unique,
            "per_link": [
                {
                    "lam_min": p.lam_min,
                    "offdiag_norm_sum": p.offdiag_norm_sum,
                    "satisfied": p.satisfied,
                }
                for p in self.per_link
            ],
        }


def compute_tau(blocks):
    """Per-coordinate diagonal shift making the symmetrized Jacobian PSD.

    Row-dominance shifts on the symmetric part: tau_i = max(0, d_i - J_ii)
    with d_i the off-diagonal absolute row sum. By Gerschgorin the shifted
    symmetric part is then diagonally dominant with nonnegative diagonal,
    hence PSD. Accepts a JacobianBlocks or a raw square matrix.
    """
    j = blocks.full() if isinstance(blocks, JacobianBlocks) else np.asarray(blocks, dtype=float)
    if j.shape[0] != j.shape[1]:
        raise DimensionError("tau computation needs a square Jacobian")
    sym = 0.5 * (j + j.T)
    d = np.abs(sym).sum(axis=1) - np.abs(np.diag(sym))
    return np.maximum(0.0, d - np.diag(sym))


def uniqueness_check(blocks: JacobianBlocks) -> UniquenessReport:
    per_link = []
    num_links = len(blocks.blocks)
    for q in range(num_links):
        diag = blocks.blocks[q][q]
        lam_min = kernels.min_eig_herm(0.5 * (diag + diag.T))
        off = sum(
            kernels.spectral_norm(blocks.blocks[q][l])
            for l in range(num_links)
            if l != q
        )
        per_link.append(LinkUniqueness(lam_min=lam_min, offdiag_norm_sum=float(off),
                                       satisfied=bool(lam_min > off)))
    return UniquenessReport(
        per_link=per_link,
        unique=all(p.satisfied for p in per_link),
        tau=compute_tau(blocks),
    )


# ---------------------------------------------------------------------------
# Selection-criterion gradients
# ---------------------------------------------------------------------------


def criterion_grad(kind, q, profile, aux, channels, beta, snapshot=None, workspace=None):
    """Gradient of the selection criterion w.r.t. link q's strategies.

    sum_rate rewards the other links' information rates, eves_rates rewards
    lowering every eavesdropper's rate on the other links, secrecy_sum adds
    the two. All cross-link quantities come from `aux`/the shared workspace;
    for a single link every criterion gradient is zero.
    """
    if kind not in CRITERIA:
        raise CoordinationDataError(f"unknown criterion {kind!r}; expected one of {CRITERIA}")
    if aux.num_links != profile.num_links or len(aux.s_eve) != profile.num_links:
        raise CoordinationDataError(
            "criterion gradients need auxiliary data from every link"
        )
    ws = workspace or rates.build_workspace(profile, aux, channels, beta, snapshot)
    n = profile.sigma[q].shape[0]
    out = np.zeros((n, n), dtype=complex)
    if kind in ("sum_rate", "secrecy_sum"):
        for r in range(profile.num_links):
            if r == q:
                continue
            hqr = channels.h[q][r]
            out = out + hqr.conj().T @ (ws.a_inv[r] - aux.s0[r]) @ hqr
    if kind in ("eves_rates", "secrecy_sum"):
        for r in range(profile.num_links):
            if r == q:
                continue
            for k in range(channels.num_eves):
                gqk = channels.g[q][k]
                out = out + ws.rho[r][k] * gqk.conj().T @ (
                    ws.m_eve_inv[r][k] - aux.s_eve[r][k]
                ) @ gqk
    out = kernels.hermitize(out)
    return out, out.copy()
