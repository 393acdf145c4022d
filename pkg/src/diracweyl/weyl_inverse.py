"""Inverse problem: from a rational Weyl function to generating parameters.

The Weyl function is given as a state-space triple ``phi(z) = C (zI - A)^{-1} B``.
After reduction to a minimal realization, a Hermitian solution ``X`` of

    X C^* C X + i (X A^* - A X) + B B^* = 0

yields the parameters ``alpha = A + i B B^* X^{-1}``, ``sigma0 = X``,
``theta1 = B``, ``theta2 = -i X C^*`` of a potential whose Weyl function is phi.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .core import SignatureLayout
from .errors import (DimensionMismatch, ExpansiveOnRealAxis, NoHermitianSolution,
                     PoleInUpperHalfPlane, ResidualTooLarge, ZNearSpectrum)
from .gbdt import make_gbdt, resolvent, theta_matrix
from .linalg import hermitize, opnorm

DEFAULT_RANK_TOL = 1e-9
DEFAULT_RICCATI_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Realization:
    C: np.ndarray = field(repr=False)
    A: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)

    def __post_init__(self):
        C, A, B = (np.atleast_2d(np.asarray(M, dtype=complex)) for M in (self.C, self.A, self.B))
        if A.size == 0:
            A = np.zeros((0, 0), dtype=complex)
        N = A.shape[0]
        if A.shape != (N, N) or C.shape[1] != N or B.shape[0] != N:
            raise DimensionMismatch(f"nonconforming realization: C {C.shape}, A {A.shape}, B {B.shape}")
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def N(self):
        return self.A.shape[0]

    @property
    def m1(self):
        return self.B.shape[1]

    @property
    def m2(self):
        return self.C.shape[0]

    @property
    def layout(self):
        return SignatureLayout(self.m1, self.m2)


@dataclass(frozen=True, eq=False)
class RiccatiSolution:
    X: np.ndarray
    residual: float
    min_eigenvalue: float


@dataclass(frozen=True)
class AdmissibilityReport:
    max_pole_imag: float
    max_gain: float
    argmax_t: float


def eval_transfer(R, z):
    if R.N == 0:
        return np.zeros((R.m2, R.m1), dtype=complex)
    return R.C @ resolvent(R.A, z) @ R.B


def _reachable_basis(A, B, tol):
    """Orthonormal basis of span{B, AB, A^2 B, ...} built block by block.

    Each new block is orthogonalized against the basis so far and its rank
    decided by singular values above ``tol * max(||A||, ||B||)``.
    """
    N = A.shape[0]
    scale = max(opnorm(A), opnorm(B), np.finfo(float).tiny)
    Q = np.zeros((N, 0), dtype=complex)
    W = B
    while Q.shape[1] < N and W.shape[1]:
        for _ in range(2):
            W = W - Q @ (Q.conj().T @ W)
        U, s, _ = np.linalg.svd(W, full_matrices=False)
        r = int(np.sum(s > tol * scale))
        if r == 0:
            break
        block = U[:, :r]
        Q = np.hstack([Q, block])
        W = A @ block
    return Q


def mcmillan_reduce(R, tol=DEFAULT_RANK_TOL):
    """Minimal realization: drop unreachable, then unobservable, states.

    A realization that is already minimal is returned unchanged, so the
    state coordinates (and hence the recovered parameters) are not rotated.
    """
    if R.N == 0:
        return R
    Qc = _reachable_basis(R.A, R.B, tol)
    if Qc.shape[1] == R.N and _reachable_basis(R.A.conj().T, R.C.conj().T, tol).shape[1] == R.N:
        return R
    A1 = Qc.conj().T @ R.A @ Qc
    B1 = Qc.conj().T @ R.B
    C1 = R.C @ Qc
    if A1.shape[0] == 0:
        return Realization(np.zeros((R.m2, 0)), np.zeros((0, 0)), np.zeros((0, R.m1)))
    Qo = _reachable_basis(A1.conj().T, C1.conj().T, tol)
    A2 = Qo.conj().T @ A1 @ Qo
    B2 = Qo.conj().T @ B1
    C2 = C1 @ Qo
    if A2.shape[0] == 0:
        return Realization(np.zeros((R.m2, 0)), np.zeros((0, 0)), np.zeros((0, R.m1)))
    return Realization(C2, A2, B2)


def chebyshev_grid(half_width=100.0, count=201):
    k = np.arange(count)
    return np.sort(half_width * np.cos(np.pi * k / (count - 1)))


def check_admissible(R, grid=None, tol=1e-9):
    """Grid test for: no poles in Im z > 0 and ||phi(t)|| <= 1 on the real line.

    This is a necessary-condition screen only; the decisive test is whether
    the Riccati equation has a Hermitian solution.
    """
    if grid is None:
        grid = chebyshev_grid()
    if R.N == 0:
        return AdmissibilityReport(-np.inf, 0.0, 0.0)
    ev = np.linalg.eigvals(R.A)
    top = float(ev.imag.max())
    if top > tol * (1.0 + opnorm(R.A)):
        raise PoleInUpperHalfPlane(f"pole at {ev[np.argmax(ev.imag)]:.6g}")
    gains = []
    for t in grid:
        try:
            gains.append(opnorm(eval_transfer(R, t)))
        except ZNearSpectrum:
            raise ExpansiveOnRealAxis(f"pole on the real axis near t = {t:.6g}") from None
    gains = np.asarray(gains)
    k = int(np.argmax(gains))
    if gains[k] > 1.0 + tol:
        raise ExpansiveOnRealAxis(f"||phi({grid[k]:.6g})|| = {gains[k]:.6g} > 1")
    return AdmissibilityReport(top, float(gains[k]), float(grid[k]))


def riccati_residual(R, X):
    """2-norm of X C^* C X + i (X A^* - A X) + B B^*."""
    C, A, B = R.C, R.A, R.B
    M = X @ C.conj().T @ C @ X + 1j * (X @ A.conj().T - A @ X) + B @ B.conj().T
    return opnorm(M)


def _hamiltonian(R):
    # Writing F = -iA the equation reads X Q X + F X + X F^* + G = 0, whose
    # solutions are the graph subspaces [I; X] invariant under this matrix.
    F = -1j * R.A
    Q = R.C.conj().T @ R.C
    G = R.B @ R.B.conj().T
    return np.block([[-F.conj().T, -Q], [G, F]]), F, Q, G


def _graph_solution(H, N, antistable):
    ev = np.linalg.eigvals(H)
    re = np.sort(ev.real)
    if antistable:
        re = re[::-1]
    cut = 0.5 * (re[N - 1] + re[N])
    if antistable:
        select = lambda lam: lam.real > cut  # noqa: E731
    else:
        select = lambda lam: lam.real < cut  # noqa: E731
    _, Z, sdim = scipy.linalg.schur(H, output="complex", sort=select)
    if sdim != N:
        return None
    U1, U2 = Z[:N, :N], Z[N:, :N]
    if np.linalg.cond(U1) > 1e12:
        return None
    X = U2 @ np.linalg.inv(U1)
    if opnorm(X - X.conj().T) > 1e-6 * max(opnorm(X), 1.0):
        return None
    return hermitize(X)


def _newton_refine(X, F, Q, G, max_iter=30):
    def res(Y):
        return Y @ Q @ Y + F @ Y + Y @ F.conj().T + G

    r = opnorm(res(X))
    for _ in range(max_iter):
        if r == 0.0:
            break
        Acl = F + X @ Q
        try:
            dX = scipy.linalg.solve_continuous_lyapunov(Acl, -res(X))
        except (np.linalg.LinAlgError, ValueError):
            break
        if not np.all(np.isfinite(dX)):
            break
        Xn = hermitize(X + dX)
        rn = opnorm(res(Xn))
        if not rn < r:
            break
        X, r = Xn, rn
    return X


def riccati_solutions(R):
    """Hermitian solutions from the stable and antistable invariant subspaces.

    Either may be missing (returned as None) when the subspace is not a
    graph; both are Newton-refined.
    """
    N = R.N
    if N == 0:
        return [np.zeros((0, 0), dtype=complex)]
    H, F, Q, G = _hamiltonian(R)
    out = []
    for antistable in (False, True):
        X = _graph_solution(H, N, antistable)
        out.append(None if X is None else _newton_refine(X, F, Q, G))
    return out


def _finish(R, X, tol):
    res = riccati_residual(R, X)
    scale = (opnorm(X) ** 2 * opnorm(R.C) ** 2 + 2 * opnorm(R.A) * opnorm(X)
             + opnorm(R.B) ** 2)
    if res > tol * max(scale, 1.0):
        raise ResidualTooLarge(f"Riccati residual {res:.3e} (scale {scale:.3e})")
    lam = float(np.linalg.eigvalsh(X).min())
    if lam <= 0:
        raise NoHermitianSolution(
            f"Hermitian solution is not positive (min eigenvalue {lam:.3e}); input is not admissible")
    return RiccatiSolution(X, res, lam)


def solve_riccati(R, tol=DEFAULT_RICCATI_TOL):
    """Hermitian (hence positive) solution of the Riccati equation for a minimal R.

    Tries the stable invariant subspace of the associated Hamiltonian-type
    matrix first, then the antistable one.
    """
    if R.N == 0:
        return RiccatiSolution(np.zeros((0, 0), dtype=complex), 0.0, np.inf)
    candidates = [X for X in riccati_solutions(R) if X is not None]
    if not candidates:
        raise NoHermitianSolution("no invariant subspace of the Hamiltonian is a Hermitian graph")
    err = None
    for X in candidates:
        try:
            return _finish(R, X, tol)
        except (ResidualTooLarge, NoHermitianSolution) as exc:
            err = exc
    raise err


def params_from_riccati(R, X, tol_identity=None):
    """Map a Riccati solution to generating parameters (validated)."""
    layout = R.layout
    if R.N == 0:
        empty = np.zeros((0, 0))
        return make_gbdt(layout, empty, empty, np.zeros((0, R.m1)), np.zeros((0, R.m2)))
    BB = R.B @ R.B.conj().T
    alpha = R.A + 1j * np.linalg.solve(X.T, BB.T).T
    theta2 = -1j * X @ R.C.conj().T
    if tol_identity is None:
        tol_identity = 2 * riccati_residual(R, X) + 1e-10 * (1 + opnorm(alpha) * opnorm(X))
    return make_gbdt(layout, alpha, X, R.B, theta2, tol_identity=tol_identity)


def inverse_problem(R, tol=DEFAULT_RICCATI_TOL, rank_tol=DEFAULT_RANK_TOL, grid=None):
    """Generating parameters of the potential whose Weyl function is ``R``'s transfer function."""
    Rm = mcmillan_reduce(R, rank_tol)
    if Rm.N == 0:
        return params_from_riccati(Rm, None)
    check_admissible(Rm, grid)
    sol = solve_riccati(Rm, tol)
    return params_from_riccati(Rm, sol.X)


def weyl_closed_form(params, z):
    """phi(z) = -i theta2^* sigma0^{-1} (z I - theta)^{-1} theta1."""
    lay = params.layout
    if params.n == 0:
        return np.zeros((lay.m2, lay.m1), dtype=complex)
    th = theta_matrix(params)
    left = np.linalg.solve(params.sigma0.T, params.theta2.conj()).T  # theta2^* sigma0^{-1}
    return -1j * left @ resolvent(th, z) @ params.theta1
