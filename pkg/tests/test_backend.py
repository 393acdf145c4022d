import json
import os
import subprocess
import sys

import numpy as np

from diracweyl import backend
from diracweyl._accel import HAVE_NUMBA

SCRIPT = r"""
import json, numpy as np
from diracweyl import backend
from diracweyl.core import SignatureLayout
from diracweyl.gbdt import alpha_from_identity, make_gbdt, sample_potential
from diracweyl.propagator import propagate
from diracweyl.weyl_direct import estimate_weyl, l2_weyl_functional
rng = np.random.default_rng(11)
S = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
s0 = S @ S.conj().T + 3 * np.eye(3)
t1 = 0.5 * (rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2)))
t2 = 0.5 * (rng.normal(size=(3, 1)) + 1j * rng.normal(size=(3, 1)))
p = make_gbdt(SignatureLayout(2, 1), alpha_from_identity(s0, t1, t2), s0, t1, t2)
pot = sample_potential(p, 6.0, 0.02)
u = propagate(pot, 0.3 + 0.8j).us[-1]
est = estimate_weyl(pot, 0.3 + 0.8j)
l2 = l2_weyl_functional(p, est.phi, 0.3 + 0.8j, 2.0, step=0.05)
c = lambda a: [[z.real, z.imag] for z in np.ravel(a).astype(complex)]
print(json.dumps({"backend": backend(), "v": c(pot.vs), "u": c(u), "phi": c(est.phi), "l2": c(l2)}))
"""


def run(disable):
    env = dict(os.environ)
    env.pop("DIRACWEYL_DISABLE_NUMBA", None)
    if disable:
        env["DIRACWEYL_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True,
                         text=True, check=True).stdout
    return json.loads(out)


def test_backend_name():
    assert backend() == ("numba" if HAVE_NUMBA else "numpy")


def test_numpy_fallback_matches_numba():
    fast, slow = run(False), run(True)
    assert slow["backend"] == "numpy"
    for key in ("v", "u", "phi", "l2"):
        a, b = np.asarray(fast[key]), np.asarray(slow[key])
        assert np.max(np.abs(a - b)) <= 1e-12 * max(1.0, np.max(np.abs(a))), key
