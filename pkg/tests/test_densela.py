import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helmscat.densela import PinvOperator, column_id, cond2, gmres, lsq_solve, pinv_factor
from helmscat.selftest import check_gmres, check_id_planted_rank


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def id_residual(M, f):
    return np.linalg.norm(M - M[:, f.skeleton] @ f.coefficients) / np.linalg.norm(M)


# -- column_id ------------------------------------------------------------------


def test_id_rank_one(rng):
    M = np.outer(crandn(rng, 6), crandn(rng, 5))
    f = column_id(M, 1e-10)
    assert f.rank == 1
    assert id_residual(M, f) <= 1e-12


def test_id_small_exact_example():
    M = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 5.0]])
    f = column_id(M, 1e-12)
    assert f.rank == 2
    assert id_residual(M, f) <= 1e-14
    # brute force: some pair of columns spans exactly, and it must include column 2
    spanning = [c for c in itertools.combinations(range(3), 2) if np.linalg.matrix_rank(M[:, c]) == 2]
    assert tuple(sorted(f.skeleton)) in spanning


def test_id_full_rank(rng):
    M = crandn(rng, 10, 8)
    f = column_id(M, 1e-13)
    assert f.rank == 8
    assert id_residual(M, f) <= 1e-12


def test_id_errors():
    with pytest.raises(ValueError):
        column_id(np.zeros((3, 3)), 1e-8)
    with pytest.raises(ValueError):
        column_id(np.eye(3), 0.0)
    with pytest.raises(ValueError):
        column_id(np.eye(3), 1.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 30), st.integers(2, 30), st.data(), st.sampled_from([1e-4, 1e-8, 1e-12]))
def test_id_properties(p, m, data, eps):
    rng = np.random.default_rng(data.draw(st.integers(0, 2**31)))
    r = data.draw(st.integers(1, min(p, m)))
    M = crandn(rng, p, r) @ crandn(rng, r, m)
    f = column_id(M, eps)
    assert 1 <= f.rank <= min(p, m)
    assert np.array_equal(f.interp[f.skeleton], np.eye(f.rank))
    assert len(set(f.skeleton.tolist())) == f.rank
    assert id_residual(M, f) <= 10 * eps
    assert f.achieved_residual == pytest.approx(id_residual(M, f), rel=1e-6, abs=1e-16)
    # transpose identity: the same points interpolate the rows of M^T
    assert np.linalg.norm(M.T - f.interp.conj() @ M.T[f.skeleton]) <= 10 * eps * np.linalg.norm(M)


def test_id_decaying_spectrum(rng):
    Q1, _ = np.linalg.qr(crandn(rng, 40, 40))
    Q2, _ = np.linalg.qr(crandn(rng, 30, 30))
    s = 10.0 ** -np.arange(30)
    M = Q1[:, :30] @ np.diag(s) @ Q2.conj().T
    for eps in (1e-3, 1e-6, 1e-10):
        f = column_id(M, eps)
        assert id_residual(M, f) <= 10 * eps
        assert f.rank <= 30


def test_id_planted_rank_suite(rng):
    ok, detail = check_id_planted_rank(rng)
    assert ok, detail


# -- pseudo-inverse and least squares -------------------------------------------


def test_pinv_identity(rng):
    b = crandn(rng, 3)
    assert np.allclose(pinv_factor(np.eye(3), 1e-13).apply(b), b, rtol=0, atol=1e-15)


def test_pinv_truncates_small_singular_value():
    x = pinv_factor(np.diag([1.0, 1e-16]), 1e-13) @ np.array([1.0, 1.0])
    assert np.allclose(x, [1.0, 0.0], rtol=0, atol=1e-15)


def test_pinv_column_vector():
    x = pinv_factor(np.array([[1.0], [1.0]])) @ np.array([1.0, 3.0])
    assert x == pytest.approx([2.0])


def test_pinv_matrix_rhs_and_rank(rng):
    A = crandn(rng, 12, 5)
    P = PinvOperator(A)
    assert P.rank == 5
    B = crandn(rng, 12, 3)
    assert np.allclose(P.apply(B), np.linalg.pinv(A) @ B, rtol=1e-12, atol=1e-12)
    with pytest.raises(ValueError):
        P.apply(np.ones(4))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 20), st.integers(0, 20), st.integers(0, 2**31))
def test_pinv_left_inverse(n, extra, seed):
    rng = np.random.default_rng(seed)
    m = n + extra
    Q1, _ = np.linalg.qr(crandn(rng, m, n))
    Q2, _ = np.linalg.qr(crandn(rng, n, n))
    A = Q1 @ np.diag(np.logspace(0, -5, n)) @ Q2  # cond 1e5 < 1e6
    P = PinvOperator(A)
    assert np.linalg.norm(P.apply(A) - np.eye(n)) <= 1e-9 * np.sqrt(n)


def test_pinv_errors():
    with pytest.raises(ValueError):
        PinvOperator(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        PinvOperator(np.eye(2), 0.0)
    with pytest.raises(ValueError):
        PinvOperator(np.array([[np.nan]]))


def test_lsq_identity(rng):
    D = crandn(rng, 4, 3)
    assert np.allclose(lsq_solve(np.eye(4), D), D, rtol=0, atol=1e-15)


def test_lsq_orthonormal_columns(rng):
    B, _ = np.linalg.qr(crandn(rng, 9, 4))
    assert np.allclose(lsq_solve(B, B), np.eye(4), rtol=0, atol=1e-13)


def test_lsq_normal_equations_oracle(rng):
    Q1, _ = np.linalg.qr(crandn(rng, 8, 5))
    B = Q1 @ np.diag([1.0, 0.5, 0.1, 0.05, 0.01]) @ np.linalg.qr(crandn(rng, 5, 5))[0]
    assert np.linalg.cond(B) < 1e3
    D = crandn(rng, 8, 3)
    ref = np.linalg.solve(B.conj().T @ B, B.conj().T @ D)
    C = lsq_solve(B, D)
    assert np.linalg.norm(C - ref) <= 1e-10 * np.linalg.norm(ref)


def test_lsq_shape_mismatch():
    with pytest.raises(ValueError):
        lsq_solve(np.eye(3), np.ones((4, 2)))


# -- GMRES ----------------------------------------------------------------------


def test_gmres_identity(rng):
    b = crandn(rng, 7)
    res = gmres(lambda v: v, b, tol=1e-12)
    assert res.iterations == 1
    assert np.allclose(res.x, b, rtol=0, atol=1e-14)


def test_gmres_diag():
    res = gmres(lambda v: np.array([1.0, 2.0]) * v, np.array([1.0, 1.0]), tol=1e-12)
    assert res.iterations <= 2
    assert np.allclose(res.x, [1.0, 0.5], rtol=0, atol=1e-13)


def test_gmres_against_lu(rng):
    A = np.eye(20) + 0.1 * crandn(rng, 20, 20)
    b = crandn(rng, 20)
    res = gmres(lambda v: A @ v, b, tol=1e-10)
    assert res.converged
    x = np.linalg.solve(A, b)
    assert np.linalg.norm(res.x - x) <= 1e-8 * np.linalg.norm(x)


def test_gmres_history_and_final_residual(rng):
    A = np.eye(40) + 0.3 * crandn(rng, 40, 40) / np.sqrt(40)
    b = crandn(rng, 40)
    res = gmres(lambda v: A @ v, b, tol=1e-11)
    h = res.residual_history
    assert h[0] == 1.0
    assert all(x >= y for x, y in zip(h, h[1:]))
    true = np.linalg.norm(b - A @ res.x) / np.linalg.norm(b)
    assert res.final_residual == pytest.approx(true, rel=1e-10)
    assert abs(h[-1] - true) <= 1e-12


def test_gmres_stagnation_is_flagged(rng):
    n = 30
    shift = np.roll(np.eye(n), 1, axis=0)  # cyclic shift: GMRES stalls until step n
    b = np.zeros(n, dtype=complex)
    b[0] = 1
    res = gmres(lambda v: shift @ v, b, tol=1e-10, max_iter=5)
    assert not res.converged
    assert res.iterations == 5
    assert res.final_residual > 0.5


def test_gmres_input_errors():
    with pytest.raises(ValueError):
        gmres(lambda v: v, np.zeros(3))
    with pytest.raises(ValueError):
        gmres(lambda v: v, np.ones(3), tol=0)
    with pytest.raises(ValueError):
        gmres(lambda v: v, np.ones(3), max_iter=0)


def test_gmres_distinct_eigenvalue_bound(rng):
    ok, detail = check_gmres(rng)
    assert ok, detail


# -- cond2 ----------------------------------------------------------------------


def test_cond2_examples(rng):
    assert cond2(np.diag([4.0, 2.0, 1.0])) == pytest.approx(4.0, rel=1e-15)
    assert cond2(np.eye(5)) == pytest.approx(1.0, rel=1e-15)
    Q, _ = np.linalg.qr(crandn(rng, 10, 10))
    M = Q @ np.diag(np.arange(10, 0, -1.0)) @ Q.conj().T
    assert cond2(M) == pytest.approx(10.0, rel=1e-10)
    assert cond2(np.diag([1.0, 0.0])) == np.inf
    with pytest.raises(ValueError):
        cond2(np.ones((2, 3)))
