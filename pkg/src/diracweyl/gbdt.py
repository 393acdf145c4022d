"""Explicit (generalized pseudo-exponential) potentials and their solutions.

A potential is generated by parameter matrices ``alpha`` (n x n), ``sigma0``
(n x n, positive definite), ``theta1`` (n x m1) and ``theta2`` (n x m2) tied
together by

    alpha @ sigma0 - sigma0 @ alpha^* == 1j * (theta1 theta1^* - theta2 theta2^*).

From these, with ``Lambda(x) = [expm(-i x alpha) theta1, expm(i x alpha) theta2]``
and ``Sigma(x) = sigma0 + int_0^x Lambda Lambda^*``, the potential is

    v(x) = -2i theta1^* expm(i x alpha^*) Sigma(x)^{-1} expm(i x alpha) theta2

and the fundamental solution has the closed form ``w(x, z) e^{ixzj} w(0, z)^{-1}``.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import _kernels
from .core import SampledPotential, SignatureLayout, uniform_grid
from .errors import (DimensionMismatch, IdentityViolated, SigmaNotPositive,
                     SingularNormalization, ZNearSpectrum)
from .linalg import as_cmatrix, expm, hermitize, min_singular, opnorm, vanloan_integral


@dataclass(frozen=True, eq=False)
class GBDTParams:
    layout: SignatureLayout
    alpha: np.ndarray = field(repr=False)
    sigma0: np.ndarray = field(repr=False)
    theta1: np.ndarray = field(repr=False)
    theta2: np.ndarray = field(repr=False)

    @property
    def n(self):
        return self.alpha.shape[0]

    def identity_residual(self):
        return identity_residual(self.alpha, self.sigma0, self.theta1, self.theta2)


@dataclass(frozen=True, eq=False)
class GBDTState:
    x: float
    Lambda: np.ndarray
    Sigma: np.ndarray


def identity_residual(alpha, sigma0, theta1, theta2):
    """2-norm residual of the defining identity for the parameter matrices."""
    lhs = alpha @ sigma0 - sigma0 @ alpha.conj().T
    rhs = 1j * (theta1 @ theta1.conj().T - theta2 @ theta2.conj().T)
    return opnorm(lhs - rhs)


def alpha_from_identity(sigma0, theta1, theta2, hermitian=None):
    """Solve the defining identity for ``alpha``.

    Every solution has the form ``(K/2 + H) sigma0^{-1}`` with
    ``K = i (theta1 theta1^* - theta2 theta2^*)`` and ``H`` Hermitian; ``H``
    defaults to zero.
    """
    sigma0 = as_cmatrix(sigma0, "sigma0")
    theta1 = as_cmatrix(theta1, "theta1")
    theta2 = as_cmatrix(theta2, "theta2")
    K = 1j * (theta1 @ theta1.conj().T - theta2 @ theta2.conj().T)
    H = np.zeros_like(K) if hermitian is None else hermitize(as_cmatrix(hermitian))
    return np.linalg.solve(sigma0.T, (0.5 * K + H).T).T


def make_gbdt(layout, alpha, sigma0, theta1, theta2, tol_identity=None):
    """Validate parameter matrices and bundle them as :class:`GBDTParams`.

    ``tol_identity`` defaults to ``1e-10 * (1 + ||alpha|| ||sigma0||)``.
    """
    if not isinstance(layout, SignatureLayout):
        layout = SignatureLayout(*layout)
    if np.size(alpha) == 0:
        alpha = np.zeros((0, 0), dtype=complex)
    alpha = as_cmatrix(alpha, "alpha")
    n = alpha.shape[0]
    if n:
        sigma0 = as_cmatrix(sigma0, "sigma0")
        theta1 = as_cmatrix(np.reshape(np.asarray(theta1, dtype=complex), (n, -1)), "theta1")
        theta2 = as_cmatrix(np.reshape(np.asarray(theta2, dtype=complex), (n, -1)), "theta2")
    else:
        sigma0 = np.zeros((0, 0), dtype=complex)
        theta1 = np.zeros((0, layout.m1), dtype=complex)
        theta2 = np.zeros((0, layout.m2), dtype=complex)
    expected = {"alpha": (n, n), "sigma0": (n, n),
                "theta1": (n, layout.m1), "theta2": (n, layout.m2)}
    for name, arr in zip(expected, (alpha, sigma0, theta1, theta2)):
        if arr.shape != expected[name]:
            raise DimensionMismatch(f"{name} has shape {arr.shape}, expected {expected[name]}")
    if n:
        if opnorm(sigma0 - sigma0.conj().T) > 1e-10 * max(1.0, opnorm(sigma0)):
            raise SigmaNotPositive("sigma0 is not Hermitian")
        sigma0 = hermitize(sigma0)
        lam_min = np.linalg.eigvalsh(sigma0).min()
        if lam_min <= 0:
            raise SigmaNotPositive(f"sigma0 has eigenvalue {lam_min:.3e} <= 0")
    if tol_identity is None:
        tol_identity = 1e-10 * (1.0 + opnorm(alpha) * opnorm(sigma0))
    res = identity_residual(alpha, sigma0, theta1, theta2)
    if res > tol_identity:
        raise IdentityViolated(f"identity residual {res:.3e} exceeds {tol_identity:.3e}")
    return GBDTParams(layout, alpha, sigma0, theta1, theta2)


def _lambda(params, x):
    a = params.alpha
    return np.hstack([expm(-1j * x * a) @ params.theta1, expm(1j * x * a) @ params.theta2])


def state_at(params, x):
    """Lambda(x) and Sigma(x); Sigma is evaluated in closed form, not by quadrature."""
    if x < 0:
        raise ValueError("x must be nonnegative")
    a, aH = params.alpha, params.alpha.conj().T
    t1, t2 = params.theta1, params.theta2
    Lam = _lambda(params, x)
    if params.n == 0:
        return GBDTState(float(x), Lam, params.sigma0.copy())
    S = (params.sigma0
         + vanloan_integral(-1j * a, t1 @ t1.conj().T, 1j * aH, x)
         + vanloan_integral(1j * a, t2 @ t2.conj().T, -1j * aH, x))
    S = hermitize(S)
    try:
        np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        raise SigmaNotPositive(f"Sigma({x}) lost positive definiteness") from None
    return GBDTState(float(x), Lam, S)


def potential_at(params, x):
    if x < 0:
        raise ValueError("x must be nonnegative")
    return potential_on_grid(params, np.array([float(x)]))[0]


def sample_potential(params, x_max, step):
    """Potential on the uniform grid 0, step, ..., floor(x_max/step)*step."""
    xs = uniform_grid(x_max, step)
    return SampledPotential(params.layout, xs, potential_on_grid(params, xs))


def split_frame(params):
    """Block-diagonalize alpha = S diag(a_-, a_+) S^{-1}, eigenvalues of a_- below the real axis.

    Returns ``(a_hat, n_minus, S^{-1} theta1, S^{-1} theta2, S^{-1} sigma0 S^{-*})``.
    S is a unitary Schur basis times a unit block-triangular factor from
    one Sylvester solve.
    """
    n = params.n
    T, Q, k = scipy.linalg.schur(params.alpha, output="complex", sort=lambda ev: ev.imag < 0)
    Sinv = Q.conj().T
    if 0 < k < n:
        Y = scipy.linalg.solve_sylvester(T[:k, :k], -T[k:, k:], -T[:k, k:])
        T = T.copy()
        T[:k, k:] = 0.0
        M_inv = np.eye(n, dtype=complex)
        M_inv[:k, k:] = -Y
        Sinv = M_inv @ Sinv
    c = np.ascontiguousarray
    return (c(T), int(k), c(Sinv @ params.theta1), c(Sinv @ params.theta2),
            c(hermitize(Sinv @ params.sigma0 @ Sinv.conj().T)))


def potential_on_grid(params, xs):
    """v on arbitrary nonnegative points (evaluated in sorted order, returned in input order)."""
    xs = np.asarray(xs, dtype=np.float64)
    if xs.size and xs.min() < 0:
        raise ValueError("x must be nonnegative")
    if params.n == 0:
        return np.zeros((xs.size, params.layout.m1, params.layout.m2), dtype=np.complex128)
    order = np.argsort(xs, kind="stable")
    a_hat, k, t1, t2, s0 = split_frame(params)
    h_max = 0.5 / (1.0 + opnorm(params.alpha))
    vs = _kernels.gbdt_potential_kernel(np.ascontiguousarray(xs[order]), a_hat, k, t1, t2, s0, h_max)
    out = np.empty_like(vs)
    out[order] = vs
    return out


def resolvent(M, z):
    """``(z I - M)^{-1}``, refusing points within roughly 1e-12 of the spectrum."""
    n = M.shape[0]
    R = z * np.eye(n) - M
    if n and min_singular(R) < 1e-12 * (abs(z) + opnorm(M)):
        raise ZNearSpectrum(f"z = {z} is numerically in the spectrum")
    return np.linalg.inv(R) if n else R


def transfer_w(params, x, z):
    """w(x, z) = I + i j Lambda^* Sigma^{-1} (z I - alpha)^{-1} Lambda."""
    st = state_at(params, x)
    j = params.layout.j
    if params.n == 0:
        return np.eye(params.layout.m, dtype=np.complex128)
    R = resolvent(params.alpha, z)
    Lam = st.Lambda
    return np.eye(params.layout.m) + 1j * j @ Lam.conj().T @ np.linalg.solve(st.Sigma, R @ Lam)


def _exp_j(layout, x, z):
    d = np.r_[np.full(layout.m1, np.exp(1j * x * z)), np.full(layout.m2, np.exp(-1j * x * z))]
    return np.diag(d)


def fundamental_closed(params, x, z):
    """Normalized fundamental solution u(x, z) from the closed form."""
    w0 = transfer_w(params, 0.0, z)
    if np.linalg.cond(w0) > 1e12:
        raise SingularNormalization(f"w(0, {z}) is numerically singular")
    return transfer_w(params, x, z) @ _exp_j(params.layout, x, z) @ np.linalg.inv(w0)


def identity_residual_at(params, x):
    """Residual of alpha Sigma(x) - Sigma(x) alpha^* = i Lambda(x) j Lambda(x)^*."""
    st = state_at(params, x)
    a = params.alpha
    lhs = a @ st.Sigma - st.Sigma @ a.conj().T
    return opnorm(lhs - 1j * st.Lambda @ params.layout.j @ st.Lambda.conj().T)


def theta_matrix(params):
    """theta = alpha - i theta1 theta1^* sigma0^{-1}."""
    if params.n == 0:
        return params.alpha.copy()
    t1 = params.theta1
    return params.alpha - 1j * np.linalg.solve(params.sigma0.T, (t1 @ t1.conj().T).T).T
