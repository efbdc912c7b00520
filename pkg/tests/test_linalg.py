import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp

from chcross.errors import ArgumentError, SolverError
from chcross.linalg import BlockSystem, matvec, residual_norm, solve, solve_sparse, write_matrix_market


def test_matvec_examples():
    x = np.array([1.5, -2.0, 0.25])
    np.testing.assert_array_equal(matvec(sp.identity(3, format="csr"), x), x)
    np.testing.assert_array_equal(matvec(sp.csr_matrix((3, 3)), x), 0.0)
    np.testing.assert_array_equal(matvec(sp.csr_matrix([[2.0, 1.0], [1.0, 2.0]]), np.ones(2)), [3.0, 3.0])


def test_matvec_shape_check():
    with pytest.raises(ArgumentError):
        matvec(sp.identity(3), np.ones(2))


def test_diagonal_solve():
    x, res = solve_sparse(sp.diags([2.0, 3.0, 4.0]), np.array([2.0, 3.0, 4.0]))
    np.testing.assert_allclose(x, 1.0, rtol=1e-15)
    assert res <= 1e-15


@pytest.mark.parametrize("use_ordering", [False, True])
def test_random_spd_matches_dense_lu(rng, use_ordering):
    B = rng.normal(size=(10, 10))
    A = B @ B.T + 10 * np.eye(10)
    b = rng.normal(size=10)
    oracle = sla.lu_solve(sla.lu_factor(A), b)
    ordering = rng.permutation(10) if use_ordering else None
    x, _ = solve_sparse(sp.csc_matrix(A), b, ordering=ordering)
    np.testing.assert_allclose(x, oracle, atol=1e-10)


def test_solver_is_deterministic(rng):
    A = sp.random(200, 200, density=0.03, random_state=1) + 5 * sp.identity(200)
    b = rng.normal(size=200)
    x1, _ = solve_sparse(A, b)
    x2, _ = solve_sparse(A, b)
    assert x1.tobytes() == x2.tobytes()


def test_reported_residual_matches_recomputation(rng):
    A = sp.random(80, 80, density=0.1, random_state=2) + 3 * sp.identity(80)
    b = rng.normal(size=80)
    x, res = solve_sparse(A, b)
    direct = np.linalg.norm(A.toarray() @ x - b) / max(1.0, np.linalg.norm(b))
    assert abs(res - direct) <= 1e-14
    assert res == residual_norm(A, x, b)


def test_singular_matrix_raises():
    A = sp.csc_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(SolverError):
        solve_sparse(A, np.array([1.0, 0.0]))


def test_bad_ordering_rejected():
    with pytest.raises(ArgumentError):
        solve_sparse(sp.identity(3), np.ones(3), ordering=np.array([0, 0, 1]))


def test_block_system_layout_and_solve(rng):
    n = 4
    D = [sp.diags(rng.uniform(1, 2, n)) for _ in range(3)]
    C = sp.csr_matrix(0.1 * rng.normal(size=(n, n)))
    blocks = [[D[0], C, None], [None, D[1], C], [C, None, D[2]]]
    rhs = rng.normal(size=3 * n)
    system = BlockSystem(blocks, rhs, node_order=np.arange(n)[::-1])
    assert system.matrix.shape == (3 * n, 3 * n)
    dense = np.block([[b.toarray() if b is not None else np.zeros((n, n)) for b in row] for row in blocks])
    np.testing.assert_array_equal(system.matrix.toarray(), dense)
    order = system.elimination_order
    np.testing.assert_array_equal(np.sort(order), np.arange(3 * n))
    x = solve(system)
    np.testing.assert_allclose(x, np.linalg.solve(dense, rhs), atol=1e-12)
    phi, c, mu = system.split(x)
    assert len(phi) == len(c) == len(mu) == n


def test_block_system_validation():
    I = sp.identity(2)
    with pytest.raises(ArgumentError):
        BlockSystem([[I, I], [I, I]], np.zeros(4))
    with pytest.raises(ArgumentError):
        BlockSystem([[I, None, None], [None, sp.identity(3), None], [None, None, I]], np.zeros(6))
    with pytest.raises(ArgumentError):
        BlockSystem([[I, None, None], [None, I, None], [None, None, I]], np.zeros(5))


def test_matrix_market_output(tmp_path):
    A = sp.csr_matrix([[2.0, 0.0], [-1.0, 0.5]])
    path = tmp_path / "a.mtx"
    write_matrix_market(A, path)
    text = path.read_text().splitlines()
    assert text[0] == "%%MatrixMarket matrix coordinate real general"
    import scipy.io

    np.testing.assert_array_equal(scipy.io.mmread(str(path)).toarray(), A.toarray())
