import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from relaxlab.densemat import (
    expm,
    is_psd,
    jacobi_eigh,
    lu_factor,
    lu_solve,
    read_matrix,
    sym_eigen,
    write_matrix,
)
from relaxlab.errors import NotSymmetric, Overflow, ShapeMismatch, SingularMatrix


def test_lu_solve_examples():
    np.testing.assert_allclose(lu_solve(np.eye(2), [3, -1]), [3, -1])
    np.testing.assert_allclose(lu_solve(np.diag([2.0, 4.0]), [2, 8]), [1, 2])
    with pytest.raises(SingularMatrix):
        lu_solve([[1, 1], [1, 1]], [1, 2])


def test_lu_solve_shape_errors():
    with pytest.raises(ShapeMismatch):
        lu_solve(np.ones((2, 3)), [1, 2])
    with pytest.raises(ShapeMismatch):
        lu_solve(np.eye(2), [1, 2, 3])


def test_lu_needs_pivoting():
    # zero leading entry: unpivoted elimination breaks down immediately
    a = np.array([[0.0, 1.0], [1.0, 1.0]])
    np.testing.assert_allclose(lu_solve(a, [2.0, 3.0]), [1.0, 2.0])


def test_lu_reconstruct_and_matrix_rhs(rng):
    a = rng.normal(size=(5, 5))
    f = lu_factor(a)
    np.testing.assert_allclose(f.reconstruct(), a, atol=1e-13)
    B = rng.normal(size=(5, 3))
    np.testing.assert_allclose(a @ f.solve(B), B, atol=1e-11)


def test_lu_complex_matches_numpy(rng):
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    b = rng.normal(size=4) + 1j * rng.normal(size=4)
    np.testing.assert_allclose(lu_solve(a, b), np.linalg.solve(a, b), atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(n=st.integers(1, 8), seed=st.integers(0, 2**32 - 1))
def test_lu_residual_property(n, seed):
    r = np.random.default_rng(seed)
    a = r.normal(size=(n, n)) + n * np.eye(n)
    if np.linalg.cond(a) > 1e6:
        return
    b = r.normal(size=n)
    x = lu_solve(a, b)
    assert np.max(np.abs(a @ x - b)) <= 1e-10 * np.max(np.abs(b))


def test_sym_eigen_examples():
    np.testing.assert_allclose(sym_eigen(np.diag([3.0, 1.0, 2.0])).eigenvalues, [1, 2, 3])
    np.testing.assert_allclose(sym_eigen([[0, 1], [1, 0]]).eigenvalues, [-1, 1], atol=1e-15)
    rep = sym_eigen([[2, -1], [-1, 0]])
    np.testing.assert_allclose(rep.eigenvalues, [1 - math.sqrt(2), 1 + math.sqrt(2)], atol=1e-14)
    assert rep.positive_rank == 1 and rep.negative_count == 1


def test_sym_eigen_rejects_asymmetric():
    with pytest.raises(NotSymmetric):
        sym_eigen([[1.0, 2.0], [0.0, 1.0]])


symmetric = st.integers(1, 8).flatmap(
    lambda n: arrays(np.float64, (n, n), elements=st.floats(-10, 10, allow_nan=False, allow_subnormal=False))
).map(lambda a: 0.5 * (a + a.T))


@settings(max_examples=200, deadline=None)
@given(symmetric)
def test_jacobi_against_lapack(s):
    w, v = jacobi_eigh(s)
    scale = max(1.0, np.max(np.abs(s)))
    assert np.all(np.diff(w) >= 0)
    np.testing.assert_allclose(w, np.linalg.eigvalsh(s), atol=1e-10 * scale)
    assert np.max(np.abs(v @ np.diag(w) @ v.T - s)) <= 1e-10 * scale
    assert abs(np.sum(w) - np.trace(s)) <= 1e-10 * scale
    if s.shape[0] <= 4:
        det = np.linalg.det(s)
        assert abs(np.prod(w) - det) <= 1e-8 * max(1.0, abs(det), scale ** s.shape[0] * 1e-4)


def test_is_psd_examples():
    assert is_psd(np.eye(3)) == (True, 3)
    assert is_psd(np.zeros((2, 2))) == (True, 0)
    assert is_psd([[2, -1], [-1, 0]]) == (False, 1)


def test_is_psd_scale_invariant(rng):
    x = rng.normal(size=(4, 3))
    s = x @ x.T
    for alpha in (1e-6, 1.0, 1e6):
        assert is_psd(alpha * s) == (True, 3)


def test_expm_examples():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(expm(a, 0.0), np.eye(2))
    np.testing.assert_allclose(expm(np.diag([0.0, -2.0])), np.diag([1.0, math.exp(-2)]), rtol=1e-14)
    c, s = math.cos(1), math.sin(1)
    np.testing.assert_allclose(expm([[0, 1], [-1, 0]]), [[c, s], [-s, c]], atol=1e-15)


def test_expm_against_scipy(rng):
    for _ in range(50):
        n = int(rng.integers(1, 7))
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        a *= 10.0 / np.linalg.norm(a, 2) * rng.random()
        ref = scipy.linalg.expm(a)
        assert np.max(np.abs(expm(a) - ref)) <= 1e-12 * max(1.0, np.max(np.abs(ref)))


def test_expm_overflow():
    with pytest.raises(Overflow):
        expm([[1000.0]], 10.0)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), t1=st.floats(0, 2), t2=st.floats(0, 2))
def test_expm_semigroup_and_inverse(seed, t1, t2):
    r = np.random.default_rng(seed)
    n = int(r.integers(1, 7))
    a = r.normal(size=(n, n))
    a /= max(1.0, np.linalg.norm(a, 2))
    assert np.max(np.abs(expm(a, t1) @ expm(a, t2) - expm(a, t1 + t2))) <= 1e-11
    assert np.max(np.abs(expm(a, t1) @ expm(a, -t1) - np.eye(n))) <= 1e-10


def test_matrix_file_round_trip(tmp_path, rng):
    a = rng.normal(size=(3, 4))
    path = tmp_path / "a.txt"
    write_matrix(path, a)
    np.testing.assert_array_equal(read_matrix(path), a)
    assert path.read_text().splitlines()[0] == "3 4"


def test_read_matrix_rejects_bad_counts(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2 2\n1 2\n3\n")
    with pytest.raises(ShapeMismatch):
        read_matrix(path)
