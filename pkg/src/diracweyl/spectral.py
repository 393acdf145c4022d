"""Spectral data of explicit potentials: theta, its spectrum, bound states."""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .core import uniform_grid
from .errors import ConsequenceViolated
from .gbdt import potential_at, state_at, theta_matrix
from .linalg import opnorm


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    eigenvalues: np.ndarray
    ok: bool
    max_imag: float


@dataclass(frozen=True, eq=False)
class BoundState:
    """Eigenfunction g(x) = j Lambda(x)^* Sigma(x)^{-1} f for a real eigenvalue of theta.

    ``l2_bound`` is f^* sigma0^{-1} f, which dominates the full L2 norm;
    ``tail`` is the trapezoid integral of ||g||^2 over the second half of
    the grid.
    """

    lam: float
    f: np.ndarray
    xs: np.ndarray = field(repr=False)
    g_samples: np.ndarray = field(repr=False)
    l2_norm_estimate: float = 0.0
    l2_bound: float = 0.0
    tail: float = 0.0
    ode_residual: float = 0.0
    consequence_residual: float = 0.0

    @property
    def g0_norm(self):
        return float(np.linalg.norm(self.g_samples[0]))

    @property
    def g_max(self):
        return float(np.max(np.linalg.norm(self.g_samples, axis=1)))


def theta_identity_residual(params, theta=None):
    """||S^{-1} theta - theta^* S^{-1} + i S^{-1}(t1 t1^* + t2 t2^*) S^{-1}||, S = sigma0."""
    if params.n == 0:
        return 0.0
    th = theta_matrix(params) if theta is None else theta
    Si = np.linalg.inv(params.sigma0)
    t1, t2 = params.theta1, params.theta2
    G = t1 @ t1.conj().T + t2 @ t2.conj().T
    return opnorm(Si @ th - th.conj().T @ Si + 1j * Si @ G @ Si)


def theta_of(params, tol=1e-10):
    th = theta_matrix(params)
    res = theta_identity_residual(params, th)
    scale = opnorm(th) * opnorm(np.linalg.inv(params.sigma0)) if params.n else 0.0
    if res > tol * max(1.0, scale):
        warnings.warn(f"theta identity residual {res:.3e} exceeds tolerance", RuntimeWarning)
    return th


def spectrum_check(params, tol=None):
    """All eigenvalues of theta must lie in the closed lower half-plane."""
    th = theta_matrix(params)
    if params.n == 0:
        return SpectrumReport(np.zeros(0, dtype=complex), True, -np.inf)
    if tol is None:
        tol = 1e-8 * (1.0 + opnorm(th))
    ev = np.linalg.eigvals(th)
    top = float(ev.imag.max())
    return SpectrumReport(ev, top <= tol, top)


def _g_factor(params, x):
    """j Lambda(x)^* Sigma(x)^{-1}, an m x n matrix."""
    st = state_at(params, x)
    return params.layout.j @ st.Lambda.conj().T @ np.linalg.inv(st.Sigma)


def derivative_identity_residual(params, x, h=1e-5):
    """Central-difference residual of the derivative formula for j Lambda^* Sigma^{-1}.

    Checks P' = i Lambda^* Sigma^{-1} alpha + (K - j K j) P with
    P = j Lambda^* Sigma^{-1} and K = Lambda^* Sigma^{-1} Lambda.
    """
    j = params.layout.j
    dP = (_g_factor(params, x + h) - _g_factor(params, x - h)) / (2 * h)
    st = state_at(params, x)
    LS = st.Lambda.conj().T @ np.linalg.inv(st.Sigma)
    K = LS @ st.Lambda
    rhs = 1j * LS @ params.alpha + (K - j @ K @ j) @ j @ LS
    return opnorm(dP - rhs)


def potential_identity_residual(params, x):
    """||K - j K j - i j V(x)|| with K = Lambda^* Sigma^{-1} Lambda."""
    j = params.layout.j
    st = state_at(params, x)
    K = st.Lambda.conj().T @ np.linalg.solve(st.Sigma, st.Lambda)
    V = params.layout.big_v(potential_at(params, x))
    return opnorm(K - j @ K @ j - 1j * j @ V)


def _real_eigenspaces(th, tol):
    """(lambda, orthonormal eigenvector basis) for each almost-real eigenvalue cluster."""
    ev = np.linalg.eigvals(th)
    reals = np.sort(ev[np.abs(ev.imag) <= tol].real)
    clusters = []
    for lam in reals:
        if clusters and abs(lam - clusters[-1][-1]) <= 1e3 * tol:
            clusters[-1].append(lam)
        else:
            clusters.append([lam])
    out = []
    n = th.shape[0]
    for cl in clusters:
        lam = float(np.mean(cl))
        null = scipy.linalg.null_space(th - lam * np.eye(n), rcond=1e-7)
        if null.shape[1] == 0:
            # defective or ill-conditioned: fall back to the smallest right singular vector
            _, _, Vh = np.linalg.svd(th - lam * np.eye(n))
            null = Vh[-1:].conj().T
        out.append((lam, null))
    return out


def bound_states(params, x_max, step, tol=None, fd_step=1e-4, check_points=40):
    """Bound states generated by real eigenvalues of theta.

    For each eigenvector f of a real eigenvalue the orthogonality relations
    theta1^* sigma0^{-1} f = theta2^* sigma0^{-1} f = 0 and alpha f = lambda f are
    verified (``ConsequenceViolated`` otherwise), g is sampled on the grid,
    the eigen-equation g' = i lambda g + i j V j g is checked by central
    differences at up to ``check_points`` nodes, and ||g||_{L2} is estimated
    by the trapezoid rule.
    """
    if params.n == 0:
        return []
    th = theta_matrix(params)
    if tol is None:
        tol = 1e-8 * (1.0 + opnorm(th))
    lay = params.layout
    j = lay.j
    Si = np.linalg.inv(params.sigma0)
    xs = uniform_grid(x_max, step)
    factors = None
    states = []
    for lam, basis in _real_eigenspaces(th, tol):
        for f in basis.T:
            f = f / np.linalg.norm(f)
            h = Si @ f
            cons = max(np.linalg.norm(params.theta1.conj().T @ h),
                       np.linalg.norm(params.theta2.conj().T @ h),
                       np.linalg.norm(params.alpha @ f - lam * f))
            if cons > 1e3 * tol * (1.0 + opnorm(Si)):
                raise ConsequenceViolated(
                    f"eigenvalue {lam:.6g}: orthogonality relations fail by {cons:.3e}")
            if factors is None:
                factors = np.array([_g_factor(params, x) for x in xs])
            g = factors @ f
            sq = np.sum(np.abs(g) ** 2, axis=1)
            l2 = float(np.sum(0.5 * np.diff(xs) * (sq[:-1] + sq[1:]))) if xs.size > 1 else 0.0
            half = xs.size // 2
            tail = float(np.sum(0.5 * np.diff(xs[half:]) * (sq[half:-1] + sq[half + 1:]))) \
                if xs.size - half > 1 else 0.0
            picks = np.unique(np.linspace(0, xs.size - 1, min(check_points, xs.size)).astype(int))
            ode = 0.0
            for k in picks:
                x = max(xs[k], fd_step)
                dg = (_g_factor(params, x + fd_step) @ f - _g_factor(params, x - fd_step) @ f) / (2 * fd_step)
                gx = _g_factor(params, x) @ f
                V = lay.big_v(potential_at(params, x))
                ode = max(ode, float(np.linalg.norm(dg - 1j * lam * gx - 1j * j @ V @ j @ gx)))
            states.append(BoundState(lam, f, xs, g, l2, float(np.real(f.conj() @ h)),
                                     tail, ode, float(cons)))
    return states
