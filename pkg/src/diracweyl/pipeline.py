"""End-to-end checks that chain the inverse and direct solvers."""

from dataclasses import dataclass

import numpy as np

from .gbdt import sample_potential
from .linalg import opnorm
from .weyl_direct import estimate_weyl
from .weyl_inverse import eval_transfer, inverse_problem, mcmillan_reduce

ROUNDTRIP_SLACK = 1e-6


@dataclass(frozen=True, eq=False)
class RoundTripRow:
    z: complex
    phi_exact: np.ndarray
    phi_estimate: np.ndarray
    deviation: float
    radius_bound: float
    passed: bool


def roundtrip(realization, zs, x_max, step, params=None, slack=ROUNDTRIP_SLACK, mapper=map):
    """Realization -> parameters -> sampled potential -> Weyl estimate, per z.

    Each row passes when the estimate is within ``radius_bound + slack`` of
    the realization's transfer function. ``mapper`` lets callers fan the
    z-values out to a pool (it must preserve order).
    """
    if params is None:
        params = inverse_problem(realization)
    reduced = mcmillan_reduce(realization)
    pot = sample_potential(params, x_max, step)

    def one(z):
        exact = eval_transfer(reduced, z)
        est = estimate_weyl(pot, z, x_max)
        dev = opnorm(est.phi - exact)
        return RoundTripRow(complex(z), exact, est.phi, dev, est.radius_bound,
                            bool(dev <= est.radius_bound + slack))

    return list(mapper(one, zs))
