import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from kinfsi.linalg import (
    Factorization,
    LinearSystem,
    SingularMatrixError,
    eliminate_constraints,
    factor_and_solve,
)


def test_elimination_without_constraints_is_identity_op():
    A = sp.csr_matrix([[2.0, 1.0], [1.0, 2.0]])
    out = eliminate_constraints(LinearSystem(A, [3.0, 3.0]))
    assert np.array_equal(out.matrix.toarray(), A.toarray())
    assert np.array_equal(out.rhs, [3.0, 3.0])


def test_elimination_all_constrained():
    A = sp.csr_matrix([[2.0, 1.0], [1.0, 2.0]])
    out = eliminate_constraints(LinearSystem(A, [3.0, 3.0], {0: 4.0, 1: -2.0}))
    assert np.array_equal(out.matrix.toarray(), np.eye(2))
    assert np.array_equal(factor_and_solve(out), [4.0, -2.0])


def test_elimination_hand_example():
    system = LinearSystem([[2.0, 1.0], [1.0, 2.0]], [3.0, 3.0], {0: 1.0})
    reduced = eliminate_constraints(system)
    assert np.array_equal(reduced.matrix.toarray(), [[1.0, 0.0], [0.0, 2.0]])
    assert np.allclose(factor_and_solve(system), [1.0, 1.0], rtol=0, atol=1e-15)


def test_elimination_out_of_range():
    with pytest.raises(ValueError):
        eliminate_constraints(LinearSystem(np.eye(2), [1.0, 1.0], {2: 0.0}))
    with pytest.raises(ValueError):
        Factorization(np.eye(2), {-1: 0.0})


def test_inconsistent_shapes():
    with pytest.raises(ValueError):
        LinearSystem(np.eye(2), [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        Factorization(sp.csr_matrix((2, 3)))


def test_solve_examples():
    b = np.array([0.3, -2.0, 7.0])
    assert np.array_equal(factor_and_solve(LinearSystem(sp.identity(3), b)), b)
    x = factor_and_solve(LinearSystem([[4.0, 1.0], [1.0, 3.0]], [1.0, 2.0]))
    assert np.allclose(x, [1 / 11, 7 / 11], rtol=0, atol=1e-15)
    x = factor_and_solve(LinearSystem([[2.0, 0, 1], [0, 2, 1], [1, 1, 0]], [1.0, 1.0, 1.0]))
    assert np.allclose(x, [0.5, 0.5, 0.0], rtol=0, atol=1e-15)


def test_empty_system():
    assert factor_and_solve(LinearSystem(sp.csr_matrix((0, 0)), np.zeros(0))).shape == (0,)


def test_structurally_singular_names_row():
    A = sp.csr_matrix([[1.0, 0, 0], [0, 0, 0], [0, 0, 2.0]])
    with pytest.raises(SingularMatrixError) as info:
        Factorization(A)
    assert info.value.row == 1
    assert "1" in str(info.value)


def test_numerically_singular():
    with pytest.raises(SingularMatrixError) as info:
        Factorization(sp.csr_matrix([[1.0, 2.0], [2.0, 4.0]]))
    assert info.value.row is not None


def test_constraint_cures_singularity():
    A = sp.csr_matrix([[1.0, -1.0], [-1.0, 1.0]])
    x = Factorization(A, {0: 2.0}).solve(np.zeros(2))
    assert np.allclose(x, [2.0, 2.0])


def test_zero_rhs_returns_zero():
    assert not np.any(Factorization(sp.identity(4)).solve(np.zeros(4)))


def test_canonical_storage():
    A = sp.coo_matrix(([1.0, 1.0, 3.0], ([0, 0, 1], [0, 0, 1])), shape=(2, 2))
    s = LinearSystem(A, [1.0, 1.0])
    assert sp.isspmatrix_csr(s.matrix) and s.matrix.has_canonical_format
    assert s.matrix[0, 0] == 2.0


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 12), seed=st.integers(0, 2**31 - 1), k=st.integers(0, 3))
def test_factorization_reuse_matches_fresh(n, seed, k):
    rng = np.random.default_rng(seed)
    R = rng.standard_normal((n, n))
    A = sp.csr_matrix(R @ R.T + n * np.eye(n))
    cons = {int(i): float(rng.standard_normal()) for i in rng.choice(n, size=min(k, n - 1), replace=False)}
    fac = Factorization(A, cons)
    b1, b2 = rng.standard_normal(n), rng.standard_normal(n)
    x1, x2 = fac.solve(b1), fac.solve(b2)
    for b, x in ((b1, x1), (b2, x2)):
        fresh = Factorization(A, cons).solve(b)
        assert np.max(np.abs(x - fresh)) <= 1e-14 * max(1.0, np.max(np.abs(fresh)))
        for i, v in cons.items():
            assert x[i] == v
        free = [i for i in range(n) if i not in cons]
        r = (A @ x - b)[free]
        assert np.linalg.norm(r) <= 1e-10 * max(np.linalg.norm(b), np.linalg.norm(A @ x))


@settings(max_examples=20, deadline=None)
@given(n=st.integers(2, 10), seed=st.integers(0, 2**31 - 1))
def test_elimination_preserves_symmetry(n, seed):
    rng = np.random.default_rng(seed)
    R = rng.standard_normal((n, n))
    cons = {int(i): 1.0 for i in rng.choice(n, size=n // 2, replace=False)}
    out = eliminate_constraints(LinearSystem(R + R.T, np.ones(n), cons))
    M = out.matrix.toarray()
    assert np.array_equal(M, M.T)


def test_deterministic():
    rng = np.random.default_rng(3)
    R = rng.standard_normal((20, 20))
    A = sp.csr_matrix(R @ R.T + np.eye(20))
    b = rng.standard_normal(20)
    assert np.array_equal(factor_and_solve(LinearSystem(A, b)), factor_and_solve(LinearSystem(A, b)))
