"""Hermitian matrix kernels underpinning every solver.

Two interchangeable backends provide the primitive routines (eigensolver,
Cholesky log-determinant, capped-simplex projection):

* ``secgame.kernels._core`` -- Cython cyclic-Jacobi implementation,
* ``secgame.kernels.fallback`` -- numpy/LAPACK.

The compiled module is preferred when importable. Set ``SECGAME_KERNELS``
to ``python`` or ``compiled`` to force a backend (the benchmark uses this).
"""

import os

import numpy as np

from ..exceptions import DimensionError, DomainError
from . import fallback as _fallback

_requested = os.environ.get("SECGAME_KERNELS", "").strip().lower()
_impl = None
if _requested in ("", "compiled"):
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = None
        if _requested == "compiled":
            raise
if _impl is None:
    _impl = _fallback

BACKEND = "compiled" if _impl is not _fallback else "python"

HERMITIAN_ATOL = 1e-12  # drift tolerance re-imposed after every arithmetic op


def get_backend(name=None):
    """Return the primitive module for `name` ('compiled'|'python'|None=active)."""
    if name in (None, BACKEND):
        return _impl
    if name == "python":
        return _fallback
    if name == "compiled":
        from . import _core

        return _core
    raise ValueError(f"unknown kernel backend {name!r}")


def _as_square_complex(m):
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return a


def hermitize(m):
    """Hermitian part (M + M^H)/2 of a square matrix."""
    a = _as_square_complex(m)
    return 0.5 * (a + a.conj().T)


def eigh(m, backend=None):
    """Eigendecomposition of a Hermitian matrix: (eigenvalues ascending, unitary V)."""
    return get_backend(backend).eigh(np.ascontiguousarray(_as_square_complex(m)))


def logdet(m, backend=None):
    """ln det(M) for Hermitian positive-definite M, via Cholesky factorization.

    Raises DomainError (reporting the minimum eigenvalue) when M is not PD.
    """
    a = np.ascontiguousarray(_as_square_complex(m))
    val = get_backend(backend).logdet_chol(a)
    if val != val:  # NaN: factorization hit a non-positive pivot
        wmin = float(eigh(a, backend=backend)[0][0])
        raise DomainError(f"logdet requires a positive-definite matrix; min eigenvalue = {wmin:.3e}")
    return float(val)


def psd_project(m, backend=None):
    """Frobenius-nearest positive-semidefinite matrix (eigenvalues clipped at 0)."""
    return get_backend(backend).psd_clip(_as_square_complex(m))


def simplex_cap_project(v, cap, backend=None):
    """Project a real vector onto {x >= 0, sum(x) <= cap}."""
    return get_backend(backend).simplex_cap_project(np.ascontiguousarray(v, dtype=float), float(cap))


def project_feasible(sigma, w, power, backend=None):
    """Joint projection of a covariance pair onto {S>=0, W>=0, tr(S+W) <= P}.

    Eigendecomposes each matrix separately, projects the concatenated
    eigenvalue vector onto the capped simplex, and rebuilds with the original
    eigenvectors. Valid because the Frobenius norm is unitarily invariant and
    the nearest feasible pair shares eigenvectors with its target.
    """
    if power < 0:
        raise DomainError(f"power budget must be nonnegative, got {power}")
    s = _as_square_complex(sigma)
    t = _as_square_complex(w)
    if s.shape != t.shape:
        raise DimensionError(f"covariance pair shapes differ: {s.shape} vs {t.shape}")
    return get_backend(backend).project_pair(s, t, float(power))


def spectral_norm(a, backend=None):
    """Largest singular value, computed as sqrt(lambda_max(A^H A))."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {m.shape}")
    gram = hermitize(m.conj().T @ m)
    w, _ = eigh(gram, backend=backend)
    return float(np.sqrt(max(w[-1], 0.0)))


def min_eig_herm(m, backend=None):
    """Smallest eigenvalue of a Hermitian matrix."""
    w, _ = eigh(hermitize(m), backend=backend)
    return float(w[0])
