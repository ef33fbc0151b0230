"""Shared test oracles, independent of the package's computation paths.

- finite differences for gradients of scalar functions of Hermitian matrices
  (perturbs real and imaginary parts entrywise, mirrored to stay Hermitian),
- a projected-ascent inner maximizer for the auxiliary-matrix subproblem,
- random feasible instances built directly from numpy primitives.
"""

import numpy as np

from secgame.network import ChannelSet
from secgame.rates import StrategyProfile


def crandn(rng, m, n, scale=1.0):
    return scale * (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))) / np.sqrt(2)


def rand_herm(rng, n, scale=1.0):
    a = crandn(rng, n, n)
    return scale * 0.5 * (a + a.conj().T)


def rand_psd(rng, n, scale=1.0):
    a = crandn(rng, n, n)
    return scale * (a @ a.conj().T) / n


def make_channels(rng, num_links, num_eves, n_tx, n_rx, n_eve, power=10.0, gain=0.5):
    """Random synthetic channel set with unit noise."""
    n_tx = [n_tx] * num_links if np.isscalar(n_tx) else list(n_tx)
    n_rx = [n_rx] * num_links if np.isscalar(n_rx) else list(n_rx)
    n_eve = [n_eve] * num_eves if np.isscalar(n_eve) else list(n_eve)
    h = tuple(
        tuple(crandn(rng, n_rx[q], n_tx[r], gain) for q in range(num_links))
        for r in range(num_links)
    )
    g = tuple(
        tuple(crandn(rng, n_eve[k], n_tx[q], gain) for k in range(num_eves))
        for q in range(num_links)
    )
    powers = np.full(num_links, float(power))
    return ChannelSet(h=h, g=g, noise_power_linear=1.0, powers_linear=powers)


def random_feasible_profile(rng, channels, frac=0.9):
    """Random strictly feasible profile using up `frac` of each budget."""
    sigma, w = [], []
    for q, n in enumerate(channels.n_tx):
        s = rand_psd(rng, n)
        t = rand_psd(rng, n)
        total = np.real(np.trace(s + t))
        scale = frac * channels.powers_linear[q] * rng.uniform(0.3, 1.0) / total
        sigma.append(s * scale)
        w.append(t * scale)
    return StrategyProfile(sigma, w)


def fd_grad_herm(func, x, h=1e-6):
    """Central-difference gradient of a real function of one Hermitian matrix.

    Returns the Hermitian G with d/dt func(X + tE) = Re tr(G E) for all
    Hermitian E.
    """
    n = x.shape[0]
    g = np.zeros((n, n), dtype=complex)
    step = h * max(1.0, np.linalg.norm(x))
    for i in range(n):
        for j in range(i, n):
            if i == j:
                e = np.zeros((n, n), dtype=complex)
                e[i, i] = 1.0
                g[i, i] = (func(x + step * e) - func(x - step * e)) / (2 * step)
            else:
                ere = np.zeros((n, n), dtype=complex)
                ere[i, j] = ere[j, i] = 1.0
                dre = (func(x + step * ere) - func(x - step * ere)) / (2 * step)
                eim = np.zeros((n, n), dtype=complex)
                eim[i, j] = 1j
                eim[j, i] = -1j
                dim = (func(x + step * eim) - func(x - step * eim)) / (2 * step)
                g[i, j] = 0.5 * (dre + 1j * dim)
                g[j, i] = np.conj(g[i, j])
    return g


def _is_pd(m):
    try:
        np.linalg.cholesky(m)
        return True
    except np.linalg.LinAlgError:
        return False


def maximize_phi_aux(m, sense, tol=1e-8, max_iters=5000):
    """Numerically optimize the auxiliary subproblem by backtracking ascent.

    sense=+1: maximize -tr(S M) + ln|S|  (receiver-side auxiliary);
    sense=-1: minimize  tr(S M) - ln|S|  (eavesdropper-side, same optimum).
    Both have gradient +/-(S^{-1} - M); the log-det barrier keeps iterates PD.
    Returns the optimizing S. Independent of the closed-form inverse path.
    """
    n = m.shape[0]
    s = np.eye(n, dtype=complex) / (1.0 + np.linalg.eigvalsh(m).max())

    def herm(mat):
        return 0.5 * (mat + mat.conj().T)

    def value(mat):
        sign, ld = np.linalg.slogdet(mat)
        return -np.real(np.trace(mat @ m)) + ld

    cur = value(s)
    for _ in range(max_iters):
        # Hermitian drift from inv() amplifies on ill-conditioned iterates;
        # re-hermitize both iterate and ascent direction every step.
        grad = herm(np.linalg.inv(s) - m)
        gnorm = np.linalg.norm(grad)
        if gnorm <= tol * max(1.0, np.linalg.norm(m)):
            break
        step = 1.0
        while step > 1e-18:
            cand = herm(s + step * grad)
            if _is_pd(cand):
                cand_val = value(cand)
                if cand_val >= cur + 1e-4 * step * gnorm**2:
                    s = cand
                    cur = cand_val
                    break
            step *= 0.5
        else:
            break
    return herm(s)
