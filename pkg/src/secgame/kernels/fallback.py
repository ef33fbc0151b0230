"""Pure-numpy implementations of the hot kernels.

Same signatures as the compiled module; LAPACK (``numpy.linalg``) replaces
the hand-rolled Jacobi/Cholesky routines.
"""

import numpy as np


def eigh(a):
    """Hermitian eigendecomposition, eigenvalues ascending."""
    return np.linalg.eigh(a)


def logdet_chol(a):
    """ln det of a Hermitian PD matrix via Cholesky; NaN when not PD."""
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        return float("nan")
    return 2.0 * float(np.sum(np.log(np.real(np.diag(chol)))))


def simplex_cap_project(v, cap):
    """Project a real vector onto {x >= 0, sum(x) <= cap} in Euclidean norm."""
    x = np.asarray(v, dtype=float)
    if cap <= 0.0:
        return np.zeros_like(x)
    clipped = np.maximum(x, 0.0)
    if clipped.sum() <= cap:
        return clipped
    # Water level: largest k with u_k > (sum of top-k - cap)/k gives the shift.
    u = np.sort(x)[::-1]
    levels = (np.cumsum(u) - cap) / np.arange(1, x.size + 1)
    k = np.nonzero(u > levels)[0][-1]
    return np.maximum(x - levels[k], 0.0)


def _herm(a):
    return 0.5 * (a + a.conj().T)


def psd_clip(a):
    """Frobenius-nearest PSD matrix (hermitize, clip eigenvalues at 0)."""
    w, v = np.linalg.eigh(_herm(np.asarray(a, dtype=complex)))
    return _herm((v * np.maximum(w, 0.0)) @ v.conj().T)


def project_pair(sigma, w_mat, power):
    """Joint projection of a covariance pair onto
    {S >= 0, W >= 0, tr(S + W) <= power} via per-matrix eigendecomposition
    and a capped-simplex projection of the stacked eigenvalues."""
    s = _herm(np.asarray(sigma, dtype=complex))
    t = _herm(np.asarray(w_mat, dtype=complex))
    ws, vs = np.linalg.eigh(s)
    wt, vt = np.linalg.eigh(t)
    proj = simplex_cap_project(np.concatenate([ws, wt]), power)
    n = s.shape[0]
    return (
        _herm((vs * proj[:n]) @ vs.conj().T),
        _herm((vt * proj[n:]) @ vt.conj().T),
    )
