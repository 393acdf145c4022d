"""Weyl functions of Dirac systems with rectangular matrix potentials.

Explicit potentials are generated from parameter matrices (:mod:`gbdt`),
solutions are propagated on grids (:mod:`propagator`), Weyl functions are
recovered from nested matrix balls (:mod:`weyl_direct`) and potentials are
rebuilt from rational Weyl functions (:mod:`weyl_inverse`).
"""

__version__ = "0.1.0"

from ._accel import backend
from .core import SampledPotential, SignatureLayout, uniform_grid
from .errors import *  # noqa: F401,F403
from .gbdt import (GBDTParams, alpha_from_identity, fundamental_closed, make_gbdt,
                   potential_at, sample_potential, state_at, theta_matrix, transfer_w)
from .pipeline import roundtrip
from .propagator import a_matrix, propagate
from .spectral import bound_states, spectrum_check
from .weyl_direct import (MatrixBall, WeylEstimate, ball_at, contains, estimate_weyl,
                          l2_weyl_functional, psi_bound_check, sample_point)
from .weyl_inverse import (Realization, eval_transfer, inverse_problem, mcmillan_reduce,
                           solve_riccati, weyl_closed_form)
