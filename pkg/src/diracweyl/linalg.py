"""Dense complex linear-algebra substrate shared by every other module."""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, NegativeEigenvalue, NotHermitian


def as_cmatrix(M, name="matrix"):
    """Coerce ``M`` to a 2-D contiguous complex128 array with finite entries."""
    A = np.ascontiguousarray(np.asarray(M, dtype=np.complex128))
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def _square(M, name):
    A = as_cmatrix(M, name)
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got {A.shape}")
    return A


def opnorm(M):
    """Operator 2-norm (0 for empty matrices)."""
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


@dataclass(frozen=True)
class HermitianCheck:
    residual: float
    tolerance: float

    @property
    def ok(self):
        return self.residual <= self.tolerance


def hermitian_check(M, tol=None):
    M = np.asarray(M)
    res = opnorm(M - M.conj().T)
    if tol is None:
        tol = 1e-10 * max(opnorm(M), 1.0)
    return HermitianCheck(res, tol)


def hermitize(M):
    return 0.5 * (M + M.conj().T)


def expm(M):
    """Matrix exponential by scaling and squaring with Pade approximants."""
    return _kernels.expm_kernel(_square(M, "M"))


def sqrtm_psd(M, tol=None):
    """Principal square root of a Hermitian positive semidefinite matrix.

    Eigenvalues in ``[-tol, 0)`` are clamped to zero; ``tol`` defaults to
    ``1e-10 * ||M||``.
    """
    A = _square(M, "M")
    if A.shape[0] == 0:
        return A.copy()
    scale = opnorm(A)
    if tol is None:
        tol = 1e-10 * scale
    chk = hermitian_check(A, max(tol, 1e-12 * scale))
    if not chk.ok:
        raise NotHermitian(f"||M - M^*|| = {chk.residual:.3e} exceeds {chk.tolerance:.3e}")
    w, Q = np.linalg.eigh(hermitize(A))
    if w.min() < -tol:
        raise NegativeEigenvalue(f"eigenvalue {w.min():.3e} below -{tol:.3e}")
    w = np.clip(w, 0.0, None)
    S = (Q * np.sqrt(w)) @ Q.conj().T
    return hermitize(S)


def inv_sqrtm_pd(M):
    """Inverse square root of a Hermitian positive definite matrix."""
    A = hermitize(_square(M, "M"))
    w, Q = np.linalg.eigh(A)
    if w.min() <= 0:
        raise NegativeEigenvalue(f"matrix not positive definite (min eig {w.min():.3e})")
    return hermitize((Q / np.sqrt(w)) @ Q.conj().T)


def vanloan_integral(A1, B, A2, x):
    """Return the integral of ``expm(A1 t) @ B @ expm(A2 t)`` over ``[0, x]``.

    Computed from the top-right block of ``expm(x [[-A1, B], [0, A2]])``,
    left-multiplied by ``expm(A1 x)``.
    """
    A1 = _square(A1, "A1")
    A2 = _square(A2, "A2")
    B = as_cmatrix(B, "B")
    if B.shape != (A1.shape[0], A2.shape[0]):
        raise DimensionMismatch(
            f"B has shape {B.shape}, expected {(A1.shape[0], A2.shape[0])}")
    return _kernels.vanloan_kernel(A1, B, A2, float(x))


def rank_tol(M, tol=1e-9):
    """Number of singular values above ``tol * sigma_max``."""
    M = np.asarray(M, dtype=np.complex128)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def psd_slack(M):
    """Smallest eigenvalue of the Hermitian part of ``M`` (PSD iff >= 0)."""
    M = np.asarray(M)
    if M.size == 0:
        return np.inf
    return float(np.linalg.eigvalsh(hermitize(M)).min())


def min_singular(M):
    M = np.asarray(M)
    if M.size == 0:
        return np.inf
    return float(np.linalg.svd(M, compute_uv=False)[-1])
