"""Damped nonnegative least squares solver."""

import numpy as np
import pytest
import scipy.optimize
from hypothesis import given, settings
from hypothesis import strategies as st

from exoneck.nnls import NnlsProblem, NnlsSolution, solve


def _kkt_violation(A, b, omega, x):
    """Max violation of stationarity/complementarity at x (0 is optimal)."""
    g = A.T @ (A @ x - b) + omega ** 2 * x
    primal = max(0.0, float(np.max(-x)))
    dual = max(0.0, float(np.max(-g)))
    comp = float(np.max(np.abs(g * x)))
    return max(primal, dual, comp)


def test_identity_selects_positive_part():
    sol = solve(NnlsProblem(A=np.eye(3), b=np.array([1.0, -2.0, 3.0])))
    assert sol.converged
    assert np.allclose(sol.x, [1.0, 0.0, 3.0], atol=1e-12)


def test_ridge_shrinks_identity_solution():
    sol = solve(NnlsProblem(A=np.eye(2), b=np.array([1.0, 1.0]), omega=1.0))
    assert np.allclose(sol.x, [0.5, 0.5], atol=1e-9)


def test_exact_interior_solution(rng):
    A = rng.normal(size=(5, 3))
    x_true = np.array([0.5, 1.2, 0.3])
    sol = solve(NnlsProblem(A=A, b=A @ x_true))
    assert np.allclose(sol.x, x_true, atol=1e-9)
    assert np.linalg.norm(sol.residual) < 1e-9


def test_random_instances_satisfy_kkt(rng):
    for _ in range(25):
        A = rng.normal(size=(3, 5))
        b = rng.normal(size=3)
        omega = float(rng.uniform(0.0, 0.5))
        sol = solve(NnlsProblem(A=A, b=b, omega=omega))
        assert sol.converged
        assert np.all(sol.x >= 0.0)
        assert _kkt_violation(A, b, omega, sol.x) < 1e-10


def test_matches_scipy_residual(rng):
    for _ in range(25):
        A = rng.normal(size=(4, 6))
        b = rng.normal(size=4)
        sol = solve(NnlsProblem(A=A, b=b))
        _, ref = scipy.optimize.nnls(A, b)
        assert np.linalg.norm(sol.residual) <= ref + 1e-9


def test_residual_norm_definition(rng):
    A = rng.normal(size=(3, 4))
    b = rng.normal(size=3)
    sol = solve(NnlsProblem(A=A, b=b, omega=0.3))
    want = np.sqrt(np.linalg.norm(b - A @ sol.x) ** 2
                   + 0.3 ** 2 * np.linalg.norm(sol.x) ** 2)
    assert np.isclose(sol.residual_norm, want, atol=1e-12)
    assert np.allclose(sol.residual, b - A @ sol.x, atol=1e-12)


@given(scale=st.floats(0.01, 100.0))
@settings(max_examples=40, deadline=None)
def test_scale_equivariance(scale):
    rng = np.random.default_rng(7)
    A = rng.normal(size=(3, 5))
    b = rng.normal(size=3)
    base = solve(NnlsProblem(A=A, b=b, omega=0.2))
    scaled = solve(NnlsProblem(A=A, b=scale * b, omega=0.2))
    assert np.allclose(scaled.x, scale * base.x,
                       rtol=1e-8, atol=1e-10 * scale)


def test_omega_monotonically_shrinks(rng):
    A = rng.normal(size=(3, 5))
    b = rng.normal(size=3) * 5.0
    norms = [np.linalg.norm(solve(NnlsProblem(A=A, b=b, omega=w)).x)
             for w in (0.0, 0.1, 0.5, 2.0, 10.0)]
    for lo, hi in zip(norms[1:], norms):
        assert lo <= hi + 1e-12


def test_upper_bounds_respected(rng):
    A = rng.normal(size=(3, 5))
    b = rng.normal(size=3) * 10.0
    ub = np.full(5, 0.4)
    sol = solve(NnlsProblem(A=A, b=b, upper_bounds=ub))
    assert np.all(sol.x <= ub + 1e-12)
    assert np.all(sol.x >= 0.0)
    pinned = solve(NnlsProblem(A=A, b=b, upper_bounds=np.zeros(5)))
    assert np.allclose(pinned.x, 0.0)


def test_validation():
    with pytest.raises(ValueError):
        NnlsProblem(A=np.eye(3), b=np.ones(2))
    with pytest.raises(ValueError):
        NnlsProblem(A=np.eye(2), b=np.ones(2), omega=-1.0)
    with pytest.raises(ValueError):
        NnlsProblem(A=np.array([[1.0, np.nan]]), b=np.ones(1))
    with pytest.raises(ValueError):
        NnlsProblem(A=np.eye(2), b=np.ones(2), upper_bounds=np.ones(3))
    with pytest.raises(ValueError):
        NnlsProblem(A=np.eye(2), b=np.ones(2),
                    upper_bounds=np.array([-1.0, 1.0]))


def test_solution_is_frozen():
    sol = solve(NnlsProblem(A=np.eye(2), b=np.ones(2)))
    assert isinstance(sol, NnlsSolution)
    with pytest.raises(AttributeError):
        sol.x = np.zeros(2)
