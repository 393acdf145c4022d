"""Direct problem: Weyl function of a given potential via nested matrix balls.

For Im z > 0 the set of admissible Weyl values at x is the matrix ball

    { rho_l @ omega @ rho_r + center : ||omega|| <= 1 },

with ``center = -A22^{-1} A21``, ``rho_l = (-A22)^{-1/2}`` and ``rho_r`` the
square root of the Schur complement ``A11 - A12 A22^{-1} A21``, where
``A = u(x, z)^* j u(x, z)``. The balls shrink as x grows and the Weyl
function is their intersection.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import SampledPotential, uniform_grid
from .errors import BlockNotPositive, OmegaNotContractive
from .gbdt import GBDTParams, fundamental_closed, potential_on_grid, resolvent, transfer_w
from .linalg import as_cmatrix, hermitize, inv_sqrtm_pd, opnorm, psd_slack, sqrtm_psd
from .propagator import a_matrix, a_matrix_inverse, gram_integral, propagate
from .weyl_inverse import weyl_closed_form

_EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class MatrixBall:
    center: np.ndarray
    rho_l: np.ndarray
    rho_r: np.ndarray

    @property
    def radius(self):
        """Operator-norm radius ||rho_l|| * ||rho_r||."""
        return opnorm(self.rho_l) * opnorm(self.rho_r)


@dataclass(frozen=True, eq=False)
class WeylEstimate:
    """Ball center at ``x_used`` as an estimate of phi(z).

    ``ball_radius`` is the geometric radius of the ball. ``grid_error`` is a
    step-doubling estimate of how far the center moved because the potential
    is only known on a grid. ``radius_bound`` is their sum and is what the
    error of ``phi`` should be compared against.
    """

    z: complex
    phi: np.ndarray
    radius_bound: float
    x_used: float
    ball_radius: float = 0.0
    grid_error: float = 0.0


@dataclass(frozen=True)
class PsiBoundReport:
    sup_norm: float
    bound: float
    ok: bool
    worst_ratio: float = field(default=0.0)


def ball_at(A, layout, a_inv=None):
    """Matrix ball of admissible Weyl values for ``A = u^* j u``.

    The Schur complement that defines ``rho_r`` suffers cancellation once
    ``A`` is large; pass ``a_inv`` (= ``A^{-1}``, e.g. from
    :func:`propagator.a_matrix_inverse`) to use ``((A^{-1})_11)^{-1}`` instead.
    """
    A = hermitize(as_cmatrix(A, "A"))
    A11, A12, A21, A22 = layout.blocks(A)
    neg22 = hermitize(-A22)
    try:
        np.linalg.cholesky(neg22)
    except np.linalg.LinAlgError:
        raise BlockNotPositive("-A22 is not positive definite (is Im z > 0?)") from None
    center = -np.linalg.solve(A22, A21)
    rho_l = inv_sqrtm_pd(neg22)
    if a_inv is None:
        schur = hermitize(A11 + A12 @ np.linalg.solve(neg22, A21))
    else:
        schur = hermitize(np.linalg.inv(hermitize(np.asarray(a_inv)[: layout.m1, : layout.m1])))
    rho_r = sqrtm_psd(schur, tol=1e-8 * max(opnorm(schur), opnorm(A11), 1.0))
    return MatrixBall(center, rho_l, rho_r)


def ball_from_result(result, k):
    return ball_at(a_matrix(result, k), result.layout, a_matrix_inverse(result, k))


def membership_form(A, candidate, layout):
    """[I, c^*] A [I; c] for an m2 x m1 candidate c."""
    c = np.asarray(candidate, dtype=complex).reshape(layout.m2, layout.m1)
    P = np.vstack([np.eye(layout.m1), c])
    return hermitize(P.conj().T @ A @ P)


def contains(ball, A, candidate, tol=None):
    """Is ``candidate`` in the ball, i.e. is [I, c^*] A [I; c] >= 0?

    The form is evaluated as ``rho_r^2 - D^* (-A22) D`` with
    ``D = candidate - center``, which is algebraically the same matrix but
    avoids cancelling two huge terms at large x. ``tol`` is an absolute
    eigenvalue tolerance and defaults to ``1e-9 * ||A||``, the roundoff
    level of the form. Once the ball radius drops below the resolution of
    the center (roughly ``eps * ||center||``) the test can no longer tell
    points apart and accepts everything near the center.
    """
    if tol is None:
        tol = 1e-9 * opnorm(A)
    return membership_slack(ball, A, candidate) >= -tol


def membership_slack(ball, A, candidate):
    """Smallest eigenvalue of the membership form (see :func:`contains`)."""
    m2, m1 = ball.center.shape
    A = np.asarray(A)
    D = np.asarray(candidate, dtype=complex).reshape(m2, m1) - ball.center
    form = hermitize(ball.rho_r @ ball.rho_r + D.conj().T @ A[m1:, m1:] @ D)
    return psd_slack(form)


def sample_point(ball, omega):
    """The ball member ``rho_l @ omega @ rho_r + center`` for a contraction omega."""
    omega = np.asarray(omega, dtype=complex).reshape(ball.center.shape)
    if opnorm(omega) > 1.0 + 1e-12:
        raise OmegaNotContractive(f"||omega|| = {opnorm(omega):.6g} > 1")
    return ball.rho_l @ omega @ ball.rho_r + ball.center


def _coarse_grid(pot):
    xs = pot.xs
    idx = np.arange(0, xs.size, 2)
    if idx[-1] != xs.size - 1:
        idx = np.r_[idx, xs.size - 1]
    return SampledPotential(pot.layout, xs[idx], pot.vs[idx])


def _check_upper(z):
    z = complex(z)
    if z.imag <= 0:
        raise ValueError(f"need Im z > 0, got {z}")
    return z


def estimate_weyl(potential, z, x_max=None):
    """Estimate phi(z) by the center of the matrix ball at ``x_max``.

    The grid contribution to the error is estimated by repeating the
    propagation on every other grid node; for a second-order scheme the
    difference of the two centers is about three times the fine-grid error,
    so using the full difference is conservative.
    """
    z = _check_upper(z)
    if x_max is None:
        x_max = potential.xs[-1]
    if x_max > potential.xs[-1] * (1 + 1e-12):
        raise ValueError(f"x_max = {x_max} beyond sampled range {potential.xs[-1]}")
    pot = potential.truncate(x_max)
    res = propagate(pot, z)
    ball = ball_from_result(res, len(res) - 1)
    grid_error = 0.0
    if len(pot) >= 3:
        coarse = propagate(_coarse_grid(pot), z)
        cb = ball_from_result(coarse, len(coarse) - 1)
        grid_error = opnorm(ball.center - cb.center)
    grid_error += 64 * _EPS * (1.0 + opnorm(ball.center))
    rad = ball.radius
    return WeylEstimate(z, ball.center, rad + grid_error, float(pot.xs[-1]), rad, grid_error)


def _closed_form_columns(params, phi, z, xs):
    """u(x, z) [I; phi] on ``xs`` via the closed form, without cancellation.

    Splits [I; phi] = [I; phi_w] + [0; phi - phi_w] where phi_w is the Weyl
    function; the first part is e^{ixz} w(x, z) [I; 0] W11^{-1} exactly.
    """
    lay = params.layout
    m1 = lay.m1
    phi_w = weyl_closed_form(params, z)
    w0 = transfer_w(params, 0.0, z)
    W11_inv = np.linalg.inv(w0[:m1, :m1])
    D = phi - phi_w
    if np.any(D):
        fundamental_closed(params, 0.0, z)  # raises on a singular normalization
    tail = np.ascontiguousarray(np.vstack([np.zeros((m1, m1)), D]), dtype=complex)
    res = resolvent(params.alpha, z) if params.n else np.zeros((0, 0), dtype=complex)
    c = lambda M: np.ascontiguousarray(M, dtype=complex)  # noqa: E731
    return _kernels.closed_columns_kernel(
        np.ascontiguousarray(xs, dtype=float), c(params.alpha), c(params.sigma0),
        c(params.theta1), c(params.theta2), complex(z), c(res), c(W11_inv),
        c(np.linalg.inv(w0)), tail)


def _trapezoid_gram(xs, Y):
    G = np.einsum("kab,kac->kbc", Y.conj(), Y)
    if xs.size < 2:
        return np.zeros(G.shape[1:], dtype=complex)
    h = np.diff(xs)
    return hermitize(np.einsum("k,kab->ab", 0.5 * h, G[:-1] + G[1:]))


def l2_weyl_functional(source, phi, z, r, step=None):
    """Trapezoid value of int_0^r [I, phi^*] u^* u [I; phi] dx (an m1 x m1 matrix).

    ``source`` is either a :class:`SampledPotential` (u by numerical
    propagation on its grid) or :class:`GBDTParams` (u from the closed form
    on a uniform grid of spacing ``step``, default 1e-2). It stays bounded
    in r exactly when phi is the Weyl function.
    """
    z = _check_upper(z)
    lay = source.layout
    phi = np.asarray(phi, dtype=complex).reshape(lay.m2, lay.m1)
    cols = np.vstack([np.eye(lay.m1), phi])
    if isinstance(source, GBDTParams):
        xs = uniform_grid(r, step or 1e-2)
        return _trapezoid_gram(xs, _closed_form_columns(source, phi, z, xs)).real
    res = propagate(source.truncate(r), z)
    return gram_integral(res, cols).real


def psi_bound_check(source, phi, z, l, step=None, eps=1e-6):
    """Check ||Psi(x)||^2 <= 2 exp(2 x M) on [0, l], Psi = e^{-ixz} u(x, z) [I; phi].

    M is the sup of ||V|| over the grid. ``sup_norm`` is max ||Psi(x)||^2,
    ``bound`` is 2 exp(2 l M), and ``ok`` holds when the inequality is met at
    every node up to the relative slack ``eps``.
    """
    z = _check_upper(z)
    lay = source.layout
    phi = np.asarray(phi, dtype=complex).reshape(lay.m2, lay.m1)
    if isinstance(source, GBDTParams):
        xs = uniform_grid(l, step or 1e-2)
        Y = _closed_form_columns(source, phi, z, xs)
        vs = potential_on_grid(source, xs)
        M = float(max(np.linalg.norm(v, 2) for v in vs))
    else:
        pot = source.truncate(l)
        xs = pot.xs
        res = propagate(pot, z)
        Y = res.us @ np.vstack([np.eye(lay.m1), phi])
        M = pot.sup_norm()
    Psi = np.exp(-1j * xs * z)[:, None, None] * Y
    sq = np.array([np.linalg.norm(P, 2) ** 2 for P in Psi])
    allowed = 2.0 * np.exp(2.0 * xs * M)
    ratio = float(np.max(sq / allowed))
    return PsiBoundReport(float(sq.max()), float(2.0 * np.exp(2.0 * xs[-1] * M)),
                          bool(ratio <= 1.0 + eps), ratio)
