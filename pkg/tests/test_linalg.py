"""Linear algebra kernel: solve contracts, singularity diagnostics, and the
generalized eigensolver against a random-search oracle."""

import numpy as np
import pytest

from hypercircle.linalg import (DenseSymMatrix, FactorizationError,
                                NumericalError, ResidualError, SparseSymMatrix,
                                SpdFactor, SymIndefFactor, max_generalized_eig,
                                solve_spd, solve_sym_indefinite)
from hypercircle.mesh import generate
from hypercircle.p1 import assemble_bilinear
from hypercircle.rt0 import assemble_mixed


def _sparse_from_dense(a):
    n = a.shape[0]
    rows, cols = np.nonzero(a)
    return SparseSymMatrix(n, rows, cols, a[rows, cols])


class TestSparseSymMatrix:
    def test_accumulates_duplicates(self):
        s = SparseSymMatrix(2, [0, 0, 1], [0, 0, 1], [1.0, 1.0, 3.0])
        np.testing.assert_allclose(s.toarray(), [[2.0, 0.0], [0.0, 3.0]])

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            SparseSymMatrix(2, [0], [1], [1.0])

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError, match="finite"):
            SparseSymMatrix(1, [0], [0], [np.nan])


class TestDenseSymMatrix:
    def test_round_trip(self):
        a = np.array([[2.0, 1.0], [1.0, 5.0]])
        d = DenseSymMatrix.from_full(a)
        np.testing.assert_array_equal(d.full(), a)
        assert d.full().flags.writeable

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            DenseSymMatrix.from_full(np.array([[1.0, 2.0], [0.0, 1.0]]))


class TestSolveSpd:
    def test_identity(self):
        s = _sparse_from_dense(np.eye(3))
        rhs = np.array([1.0, -2.0, 0.5])
        np.testing.assert_allclose(solve_spd(s, rhs), rhs)

    def test_diagonal(self):
        s = _sparse_from_dense(np.diag([2.0, 4.0]))
        np.testing.assert_allclose(solve_spd(s, np.array([2.0, 8.0])), [1.0, 2.0])

    def test_p1_system_residual(self):
        mesh = generate("square", 1)
        system = assemble_bilinear(mesh)
        rng = np.random.default_rng(3)
        rhs = rng.standard_normal(system.n)
        x = solve_spd(system, rhs)
        resid = np.linalg.norm(system.matvec(x) - rhs)
        assert resid <= 1e-10 * (system.fro_norm * np.linalg.norm(x) + np.linalg.norm(rhs))

    def test_factor_once_many_solves(self):
        mesh = generate("equi-tri", 1)
        factor = SpdFactor(assemble_bilinear(mesh))
        rng = np.random.default_rng(5)
        for _ in range(3):
            rhs = rng.standard_normal(factor.S.n)
            factor.solve(rhs)

    def test_indefinite_detected(self):
        with pytest.raises(FactorizationError, match="positive definite"):
            SpdFactor(_sparse_from_dense(np.diag([1.0, -1.0])))


class TestSolveSymIndefinite:
    def test_swap_matrix(self):
        s = _sparse_from_dense(np.array([[0.0, 1.0], [1.0, 0.0]]))
        np.testing.assert_allclose(solve_sym_indefinite(s, np.array([1.0, 2.0])),
                                   [2.0, 1.0])

    def test_small_saddle_block(self):
        # [[I, B^T], [B, 0]] with B = [1, 1]; solved by hand:
        # x1 + x3 = 1, x2 + x3 = 2, x1 + x2 = 3  =>  (1, 2, 0)
        a = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [1.0, 1.0, 0.0]])
        x = solve_sym_indefinite(_sparse_from_dense(a), np.array([1.0, 2.0, 3.0]))
        np.testing.assert_allclose(x, [1.0, 2.0, 0.0], atol=1e-12)

    def test_saddle_without_gauge_row_is_singular(self):
        # dropping the (c, d) row/column of the boundary-eliminated system
        # leaves the constant multiplier field in the null space
        from hypercircle.rt0 import MixedSolver
        mesh = generate("square", 1)
        reduced = MixedSolver(mesh).system.csr
        n = reduced.shape[0] - 1
        trimmed = SparseSymMatrix.from_csr(reduced[:n, :n].tocsr())
        with pytest.raises(NumericalError):
            factor = SymIndefFactor(trimmed)
            factor.solve(np.full(n, 1e-3))

    def test_null_direction_reported(self):
        s = _sparse_from_dense(np.diag([1.0, 0.0, 2.0]))
        with pytest.raises(NumericalError, match="null direction|singular"):
            solve_sym_indefinite(s, np.array([1.0, 1.0, 1.0]))


def _rayleigh_oracle(a, b_diag, samples=1_000_000, iters=200, seed=0):
    """Random-search maximum Rayleigh quotient, sharpened by an independent
    power iteration seeded with the best random direction."""
    rng = np.random.default_rng(seed)
    n = a.shape[0]
    d = 1.0 / np.sqrt(b_diag)
    s = d[:, None] * a * d[None, :]
    best = -np.inf
    best_x = None
    for chunk in range(0, samples, 200_000):
        x = rng.standard_normal((min(200_000, samples - chunk), n))
        num = np.einsum("ij,jk,ik->i", x, s, x)
        den = (x ** 2).sum(axis=1)
        q = num / den
        i = int(np.argmax(q))
        if q[i] > best:
            best, best_x = q[i], x[i]
    x = best_x / np.linalg.norm(best_x)
    shift = np.abs(s).sum()  # Gershgorin-style bound keeps the shift positive
    for _ in range(iters):
        x = s @ x + shift * x
        x /= np.linalg.norm(x)
    return float(x @ s @ x)


class TestMaxGeneralizedEig:
    def test_identity(self):
        lam, x = max_generalized_eig(np.eye(3), np.ones(3))
        assert lam == pytest.approx(1.0)
        assert x @ x == pytest.approx(1.0)

    def test_diagonal(self):
        lam, x = max_generalized_eig(np.diag([1.0, 4.0]), np.ones(2))
        assert lam == pytest.approx(4.0)
        np.testing.assert_allclose(np.abs(x), [0.0, 1.0], atol=1e-14)

    def test_random_psd_against_rayleigh_search(self):
        rng = np.random.default_rng(42)
        g = rng.standard_normal((5, 5))
        a = g @ g.T
        b = rng.uniform(0.5, 2.0, size=5)
        lam, _ = max_generalized_eig(a, b)
        oracle = _rayleigh_oracle(a, b)
        assert lam == pytest.approx(oracle, rel=1e-6)

    def test_rayleigh_lower_bound(self):
        rng = np.random.default_rng(1)
        g = rng.standard_normal((6, 6))
        a = g @ g.T
        b = rng.uniform(0.1, 3.0, size=6)
        lam, _ = max_generalized_eig(a, b)
        for i in range(6):
            assert lam >= a[i, i] / b[i] - 1e-12 * lam

    def test_normalization_and_residual(self):
        rng = np.random.default_rng(9)
        g = rng.standard_normal((8, 8))
        a = g @ g.T
        b = rng.uniform(0.5, 2.0, size=8)
        lam, x = max_generalized_eig(a, b)
        assert x @ (b * x) == pytest.approx(1.0, rel=1e-12)
        resid = np.linalg.norm(a @ x - lam * b * x)
        assert resid <= 1e-10 * np.linalg.norm(a)

    def test_rejects_nonpositive_b(self):
        with pytest.raises(ValueError, match="positive"):
            max_generalized_eig(np.eye(2), np.array([1.0, 0.0]))

    def test_rejects_asymmetric_a(self):
        with pytest.raises(ValueError, match="symmetric"):
            max_generalized_eig(np.array([[1.0, 2.0], [0.0, 1.0]]), np.ones(2))
