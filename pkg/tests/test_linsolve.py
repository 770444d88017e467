import numpy as np
import pytest
import scipy.sparse as sp

from fixedstress.biot import BiotProblem
from fixedstress.cases import make_case
from fixedstress.linsolve import Factorization, SingularMatrixError, factorize, solve


def residual(A, x, b):
    return np.linalg.norm(A @ x - b) / max(np.linalg.norm(b), np.finfo(float).tiny)


def test_identity():
    b = np.array([1.0, -2.0, 3.5])
    assert np.array_equal(solve(factorize(sp.identity(3)), b), b)


def test_two_by_two_by_hand():
    x = solve(factorize(sp.csr_matrix([[2.0, 1.0], [1.0, 2.0]])), np.array([3.0, 3.0]))
    np.testing.assert_allclose(x, [1.0, 1.0], rtol=1e-15)


def test_zero_row_names_pivot():
    A = sp.csr_matrix([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 2.0]])
    with pytest.raises(SingularMatrixError) as exc:
        factorize(A)
    assert exc.value.pivot == 1
    assert "1" in str(exc.value)


def test_rank_deficient_matrix_is_singular():
    with pytest.raises(SingularMatrixError):
        factorize(sp.csr_matrix([[1.0, 2.0], [2.0, 4.0]]))


def test_zero_rhs_gives_zero():
    F = factorize(sp.csr_matrix([[4.0, 1.0], [1.0, 3.0]]))
    assert np.array_equal(solve(F, np.zeros(2)), np.zeros(2))


def test_random_spd_residual():
    rng = np.random.default_rng(2024)
    G = rng.normal(size=(10, 10))
    A = sp.csr_matrix(G.T @ G + np.eye(10))
    b = rng.normal(size=10)
    F = factorize(A)
    x = solve(F, b)
    assert residual(A, x, b) <= 1e-12
    assert F.last_report.relative_residual <= 1e-12


@pytest.mark.parametrize("case_id", ["1a", "1b", "1c", "2"])
def test_flow_saddle_system_n2(case_id):
    prob = BiotProblem.from_case(make_case(case_id), 2)
    solver = prob.splitting(3e10)
    A = solver.flow_factor.A
    b = np.random.default_rng(7).normal(size=A.shape[0])
    x = solver.flow_factor.solve(b)
    assert residual(A, x, b) <= 1e-12


def test_badly_scaled_saddle_system_default_mesh():
    prob = BiotProblem.from_case(make_case("1c", k=0.1), 16)
    F = prob.splitting(1e9).flow_factor
    b = np.random.default_rng(3).normal(size=F.n) * np.logspace(-12, 12, F.n)
    x = F.solve(b)
    assert residual(F.A, x, b) <= 1e-12


def test_repeated_solves_bit_identical_and_reuse_flag():
    rng = np.random.default_rng(5)
    G = rng.normal(size=(30, 30))
    F = factorize(sp.csr_matrix(G @ G.T + 30 * np.eye(30)))
    b = rng.normal(size=30)
    x1 = F.solve(b)
    assert F.last_report.factor_reused is False
    x2 = F.solve(b)
    assert F.last_report.factor_reused is True
    assert x1.tobytes() == x2.tobytes()


def test_dimension_mismatch():
    F = factorize(sp.identity(3, format="csr"))
    with pytest.raises(ValueError):
        F.solve(np.ones(4))
    with pytest.raises(ValueError):
        Factorization(sp.csr_matrix(np.ones((2, 3))))


def test_empty_system():
    F = factorize(sp.csr_matrix((0, 0)))
    assert F.solve(np.zeros(0)).shape == (0,)
