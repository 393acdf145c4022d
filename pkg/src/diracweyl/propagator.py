"""Numerical fundamental solution for arbitrary sampled potentials.

This is deliberately independent of the closed forms in :mod:`gbdt`: it only
sees potential samples, so it can cross-check them.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import SampledPotential
from .errors import PropagationOverflow
from .linalg import hermitize


@dataclass(frozen=True, eq=False)
class PropagatorResult:
    """u(x_k, z) on the potential grid, plus the inverses u(x_k, z)^{-1}."""

    potential: SampledPotential = field(repr=False)
    z: complex
    us: np.ndarray = field(repr=False)
    us_inv: np.ndarray = field(repr=False)

    @property
    def xs(self):
        return self.potential.xs

    @property
    def layout(self):
        return self.potential.layout

    def __len__(self):
        return self.us.shape[0]


def propagate(potential, z):
    """Exponential-midpoint integration of u' = i (z j + j V) u with u(0) = I.

    On each grid interval V is replaced by the average of its endpoint
    samples (linear interpolation evaluated at the midpoint), and the step is
    the exact exponential of the resulting constant coefficient matrix. The
    scheme is second order and exact for piecewise-constant potentials.
    """
    lay = potential.layout
    us, uis = _kernels.propagate_kernel(potential.xs, potential.vs, complex(z), lay.m1, lay.m2)
    if not (np.all(np.isfinite(us)) and np.all(np.isfinite(uis))):
        raise PropagationOverflow(
            f"fundamental solution overflowed (Im z * x_max = {complex(z).imag * potential.xs[-1]:.1f})")
    return PropagatorResult(potential, complex(z), us, uis)


def a_matrix(result, k):
    """u(x_k, z)^* j u(x_k, z), symmetrized."""
    u = result.us[k]
    return hermitize(u.conj().T @ result.layout.j @ u)


def a_matrix_inverse(result, k):
    """u^{-1} j u^{-*}: the inverse of :func:`a_matrix`, formed without inverting it."""
    ui = result.us_inv[k]
    return hermitize(ui @ result.layout.j @ ui.conj().T)


def a_matrices(result):
    j = result.layout.j
    us = result.us
    A = np.einsum("kba,bc,kcd->kad", us.conj(), j, us)
    return 0.5 * (A + np.conj(np.swapaxes(A, 1, 2)))


def gram_integral(result, cols, r=None):
    """Trapezoid value of int_0^r Y^* Y dx where Y = u(x, z) @ cols.

    ``cols`` is an m x p matrix; the integral runs over grid nodes with
    x <= r (the whole grid when ``r`` is None).
    """
    xs = result.xs
    k = xs.size if r is None else int(np.searchsorted(xs, r * (1 + 1e-12), side="right"))
    Y = result.us[:k] @ cols
    G = np.einsum("kab,kac->kbc", Y.conj(), Y)
    if k < 2:
        return np.zeros(G.shape[1:], dtype=complex)
    h = np.diff(xs[:k])
    total = np.einsum("k,kab->ab", 0.5 * h, G[:-1] + G[1:])
    return hermitize(total)
