import numpy as np
import pytest
from hypothesis import given, strategies as st

from diracweyl.errors import ExpansiveOnRealAxis, PoleInUpperHalfPlane
from diracweyl.gbdt import make_gbdt, potential_at, state_at
from diracweyl.linalg import opnorm
from diracweyl.weyl_inverse import (Realization, check_admissible, eval_transfer,
                                    inverse_problem, mcmillan_reduce, params_from_riccati,
                                    riccati_residual, riccati_solutions, solve_riccati,
                                    weyl_closed_form)

from _instances import random_admissible, random_params, real_axis_sup, scalar_params

seeds = st.integers(0, 2**31 - 1)
SCALAR = Realization([[-1j]], [[-1j]], [[1]])


def upper_points(rng, k=10):
    return rng.uniform(-3, 3, k) + 1j * rng.uniform(0.1, 3, k)


class TestTransfer:
    def test_scalar(self):
        assert eval_transfer(SCALAR, 1j)[0, 0] == pytest.approx(-0.5, abs=1e-15)
        z = 0.3 + 0.2j
        assert eval_transfer(SCALAR, z)[0, 0] == pytest.approx(-1j / (z + 1j), abs=1e-15)

    def test_empty(self):
        R = Realization(np.zeros((2, 0)), np.zeros((0, 0)), np.zeros((0, 1)))
        assert np.array_equal(eval_transfer(R, 1j), np.zeros((2, 1)))

    def test_strictly_proper(self, rng):
        R = random_admissible(rng)
        assert opnorm(eval_transfer(R, 1e6j)) <= 2 * opnorm(R.C) * opnorm(R.B) / 1e6


class TestReduce:
    def test_drops_hidden_state(self):
        R = Realization([[-1j, 0]], np.diag([-1j, -5]), [[1], [0]])
        Rm = mcmillan_reduce(R)
        assert Rm.N == 1
        for z in (1j, 2j, 1 + 1j):
            assert np.allclose(eval_transfer(Rm, z), eval_transfer(R, z), atol=1e-10)

    def test_minimal_unchanged(self):
        Rm = mcmillan_reduce(SCALAR)
        assert Rm.N == 1
        assert np.array_equal(Rm.A, SCALAR.A) and np.array_equal(Rm.B, SCALAR.B)

    def test_unreachable(self):
        assert mcmillan_reduce(Realization([[1, 2]], np.eye(2), [[0], [0]])).N == 0

    @given(seeds)
    def test_padded_realization(self, seed):
        # append unobservable and unreachable states to a minimal one
        rng = np.random.default_rng(seed)
        R = random_admissible(rng, N=2, m1=1, m2=2)
        N = R.N
        A = np.zeros((N + 2, N + 2), dtype=complex)
        A[:N, :N] = R.A
        A[N, N], A[N + 1, N + 1] = -1j, -2j
        A[N, :N] = rng.normal(size=N)  # driven but invisible
        B = np.vstack([R.B, rng.normal(size=(1, 1)), np.zeros((1, 1))])
        C = np.hstack([R.C, np.zeros((2, 1)), rng.normal(size=(2, 1))])
        big = Realization(C, A, B)
        Rm = mcmillan_reduce(big)
        assert Rm.N == N
        assert mcmillan_reduce(Rm).N == Rm.N
        for z in upper_points(rng, 4):
            assert np.allclose(eval_transfer(Rm, z), eval_transfer(big, z), atol=1e-9)


class TestAdmissible:
    def test_scalar(self):
        rep = check_admissible(SCALAR)
        assert rep.max_gain == pytest.approx(1.0, abs=1e-12)

    def test_expansive(self):
        with pytest.raises(ExpansiveOnRealAxis):
            check_admissible(Realization([[-2j]], [[-1j]], [[1]]))

    def test_pole(self):
        with pytest.raises(PoleInUpperHalfPlane):
            check_admissible(Realization([[1]], [[1j]], [[1]]))

    def test_random_instances_scaled(self, rng):
        R = random_admissible(rng, N=3, m1=2, m2=2)
        assert real_axis_sup(R) == pytest.approx(0.9, rel=1e-6)
        assert check_admissible(R).max_gain <= 0.9 + 1e-9


class TestRiccati:
    def test_scalar(self):
        sol = solve_riccati(SCALAR)
        assert sol.X[0, 0] == pytest.approx(1.0, abs=1e-12)
        assert sol.residual <= 1e-12

    def test_empty(self):
        R = Realization(np.zeros((1, 0)), np.zeros((0, 0)), np.zeros((0, 1)))
        assert solve_riccati(R).X.shape == (0, 0)

    @given(seeds)
    def test_random_two_state(self, seed):
        R = random_admissible(np.random.default_rng(seed), N=2)
        sol = solve_riccati(R)
        assert sol.residual <= 1e-10 * max(1.0, opnorm(sol.X) ** 2)
        assert sol.min_eigenvalue > 0
        assert riccati_residual(R, sol.X) == pytest.approx(sol.residual)

    @given(seeds)
    def test_identity_equivalence(self, seed):
        rng = np.random.default_rng(seed)
        R = random_admissible(rng)
        X = solve_riccati(R).X
        Xp = X + 1e-7 * np.diag(rng.uniform(0, 1, R.N))  # Hermitian, small residual
        p = params_from_riccati(R, Xp, tol_identity=np.inf)
        assert p.identity_residual() <= 2 * riccati_residual(R, Xp) + 1e-12 * (1 + opnorm(p.alpha) * opnorm(Xp))

    @given(seeds)
    def test_all_hermitian_solutions_give_one_potential(self, seed):
        R = random_admissible(np.random.default_rng(seed))
        sols = [X for X in riccati_solutions(R) if X is not None]
        assert sols
        params = []
        for X in sols:
            if riccati_residual(R, X) > 1e-8 * max(1.0, opnorm(X) ** 2):
                continue
            assert np.linalg.eigvalsh(X).min() > 0
            params.append(params_from_riccati(R, X))
        # evaluating v(x) loses about cond(Sigma(x)) * eps, which for the
        # antistable branch can reach 1e-5
        for x in np.linspace(0, 5, 11):
            vals = [potential_at(p, x) for p in params]
            cond = max(np.linalg.cond(state_at(p, x).Sigma) for p in params)
            tol = 1e-8 + 100 * np.finfo(float).eps * cond
            assert all(opnorm(v - vals[0]) <= tol for v in vals)


class TestInverse:
    def test_scalar(self):
        p = inverse_problem(SCALAR)
        ref = scalar_params()
        for name in ("alpha", "sigma0", "theta1", "theta2"):
            assert np.allclose(getattr(p, name), getattr(ref, name), atol=1e-12), name
        assert potential_at(p, 0.0)[0, 0] == pytest.approx(-2j, abs=1e-12)

    def test_zero_input(self):
        p = inverse_problem(Realization(np.zeros((1, 2)), np.eye(2) * -1j, np.zeros((2, 1))))
        assert p.n == 0
        assert np.array_equal(potential_at(p, 2.0), np.zeros((1, 1)))

    @given(seeds)
    def test_closed_form_roundtrip(self, seed):
        rng = np.random.default_rng(seed)
        R = random_admissible(rng)
        p = inverse_problem(R)
        Rm = mcmillan_reduce(R)
        for z in [1j, 2j, 1 + 3j, *upper_points(rng)]:
            assert opnorm(weyl_closed_form(p, z) - eval_transfer(Rm, z)) <= 1e-9


class TestClosedFormWeyl:
    def test_scalar(self):
        p = scalar_params()
        assert weyl_closed_form(p, 1j)[0, 0] == pytest.approx(-0.5, abs=1e-15)
        assert weyl_closed_form(p, 2j)[0, 0] == pytest.approx(-1 / 3, abs=1e-15)

    def test_zero_theta2(self):
        p = make_gbdt((1, 1), [[0.5j]], [[1]], [[1]], [[0]])
        assert weyl_closed_form(p, 1 + 1j)[0, 0] == 0

    @given(seeds)
    def test_non_expansive_on_real_line(self, seed):
        p = random_params(np.random.default_rng(seed))
        worst = 0.0
        for t in np.linspace(-20, 20, 401):
            try:
                worst = max(worst, opnorm(weyl_closed_form(p, t)))
            except Exception:
                continue
        assert worst <= 1 + 1e-9
