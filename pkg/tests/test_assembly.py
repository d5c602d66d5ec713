import numpy as np
import pytest
import scipy.sparse

from reggeshell.assembly import SolverError, assemble, factor_solve


def laplace_1d(n):
    """Local stiffness pairs of a 1D P1 Laplacian on n elements."""
    k = np.array([[1.0, -1.0], [-1.0, 1.0]]) * n
    return [((i, i + 1), k) for i in range(n)]


class TestAssemble:
    def test_matches_dense_sum(self):
        n = 6
        mat = assemble(n + 1, laplace_1d(n))
        dense = np.zeros((n + 1, n + 1))
        for (i, j), k in laplace_1d(n):
            dense[np.ix_([i, j], [i, j])] += k
        assert np.allclose(mat.matrix.toarray(), dense, atol=1e-14)

    def test_row_sums_vanish_for_translation_invariant_operator(self):
        mat = assemble(7, laplace_1d(6))
        assert np.allclose(mat.matrix @ np.ones(7), 0.0, atol=1e-12)

    def test_out_of_range_dof_rejected(self):
        with pytest.raises(IndexError):
            assemble(3, [((0, 5), np.eye(2))])

    def test_empty_contributions(self):
        mat = assemble(4, [])
        assert mat.matrix.nnz == 0


class TestFactorSolve:
    def test_against_dense_oracle(self):
        rng = np.random.default_rng(7)
        n = 20
        A = rng.standard_normal((n, n))
        A = A @ A.T + n * np.eye(n)
        b = rng.standard_normal(n)
        x = factor_solve(scipy.sparse.csr_matrix(A), b)
        assert np.allclose(x, np.linalg.solve(A, b), atol=1e-10)

    def test_constrained_dofs_stay_zero(self):
        n = 8
        mat = assemble(n + 1, laplace_1d(n),
                       free=np.array([False] + [True] * (n - 1) + [False]))
        b = np.ones(n + 1)
        x = factor_solve(mat, b)
        assert x[0] == 0.0 and x[-1] == 0.0
        # interior rows satisfy the equations exactly
        full = mat.matrix.toarray()
        res = full[1:-1] @ x - b[1:-1]
        assert np.max(np.abs(res)) < 1e-10

    def test_singular_matrix_raises(self):
        # pure Neumann Laplacian without constraints is singular
        mat = assemble(5, laplace_1d(4))
        with pytest.raises(SolverError):
            factor_solve(mat, np.ones(5))
