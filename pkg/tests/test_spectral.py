import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relaxlab.errors import ShapeMismatch
from relaxlab.spectral import (
    ModalState,
    derivative,
    grid,
    l2_norm,
    modal_error,
    project,
    synthesize,
    weighted_norm,
    write_grid_csv,
)


def test_grid():
    x = grid(3)
    assert len(x) == 8 and x[0] == -math.pi and x[-1] < math.pi
    with pytest.raises(ValueError):
        grid(3, 7)
    with pytest.raises(ValueError):
        grid(3, 6)


def test_project_examples():
    u = project([lambda x: np.sin(2 * x)], 5)
    expect = np.zeros(6, dtype=complex)
    expect[2] = -0.5j
    np.testing.assert_allclose(u.coeffs[0], expect, atol=1e-15)
    u = project([lambda x: np.ones_like(x)], 4)
    np.testing.assert_allclose(u.coeffs[0], [1, 0, 0, 0, 0], atol=1e-15)
    u = project([lambda x: 0.5 + 0.3 * np.sin(2 * x)], 40)
    assert u.coeffs[0, 0] == pytest.approx(0.5, abs=1e-15)
    assert u.coeffs[0, 2] == pytest.approx(-0.15j, abs=1e-15)


def test_project_matches_fft_oracle(rng):
    N = 12
    x = grid(N)
    vals = rng.normal(size=x.size)
    u = project([lambda _: vals], N)
    # x starts at -pi: shift the DFT phase by e^{ik pi}
    ref = np.fft.fft(vals)[: N + 1] / x.size * np.exp(1j * np.pi * np.arange(N + 1))
    np.testing.assert_allclose(u.coeffs[0], ref, atol=1e-14)


def test_synthesize_examples():
    field = synthesize(ModalState(np.array([[1.0, 0, 0]])))
    np.testing.assert_allclose(field.values, 1.0)
    u = project([lambda x: np.sin(2 * x)], 6)
    field = synthesize(u)
    assert np.max(np.abs(field.values[0] - np.sin(2 * field.x))) < 1e-13
    assert np.all(synthesize(ModalState.zeros(2, 3)).values == 0)


def test_l2_norm_examples():
    assert l2_norm(project([lambda x: np.sin(2 * x)], 4)) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    assert l2_norm(project([lambda x: np.ones_like(x)], 4)) == pytest.approx(math.sqrt(2 * math.pi), rel=1e-14)
    assert l2_norm(ModalState.zeros(1, 4)) == 0.0


def test_modal_error_examples(rng):
    a = project([lambda x: np.sin(2 * x)], 4)
    assert modal_error(a, a) == 0.0
    assert modal_error(a, ModalState.zeros(1, 4)) == pytest.approx(math.sqrt(math.pi))
    b = ModalState(rng.normal(size=(2, 5)) + 1j * rng.normal(size=(2, 5)))
    c = ModalState(rng.normal(size=(2, 5)) + 1j * rng.normal(size=(2, 5)))
    assert modal_error(b, c) == l2_norm(ModalState(b.coeffs - c.coeffs))
    with pytest.raises(ShapeMismatch):
        modal_error(b, ModalState.zeros(2, 6))


def test_weighted_norm_identity_matches_l2(rng):
    u = ModalState(rng.normal(size=(3, 6)) + 1j * rng.normal(size=(3, 6)))
    assert weighted_norm(u, np.eye(3)) == pytest.approx(l2_norm(u), rel=1e-14)


def test_state_arithmetic():
    a = ModalState(np.ones((2, 3)))
    assert np.all((a + a).coeffs == 2) and np.all((a - a).coeffs == 0) and np.all((3 * a).coeffs == 3)
    with pytest.raises(ShapeMismatch):
        a + ModalState.zeros(2, 4)
    with pytest.raises(ValueError):
        ModalState(np.array([[np.nan]]))


def random_band_limited(r, m, N, degree):
    c = np.zeros((m, N + 1), dtype=complex)
    c[:, : degree + 1] = r.normal(size=(m, degree + 1)) + 1j * r.normal(size=(m, degree + 1))
    c[:, 0] = c[:, 0].real
    return ModalState(c)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), N=st.integers(0, 40), m=st.integers(1, 4))
def test_round_trip_parseval_derivative(seed, N, m):
    r = np.random.default_rng(seed)
    u = random_band_limited(r, m, N, N)
    field = synthesize(u)
    back = project(lambda x: field.values, N)
    scale = max(1.0, float(np.max(np.abs(u.coeffs))))
    assert np.max(np.abs(back.coeffs - u.coeffs)) <= 1e-12 * scale
    quad = math.sqrt(2 * math.pi * np.mean(np.sum(field.values**2, axis=0)))
    assert abs(l2_norm(u) - quad) <= 1e-12 * max(1.0, quad)
    assert l2_norm(derivative(u)) <= N * l2_norm(u) * (1 + 1e-14)
    assert abs(back.coeffs[:, 0].imag).max() <= 1e-13 * scale


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), alpha=st.floats(-3, 3), beta=st.floats(-3, 3))
def test_project_linear(seed, alpha, beta):
    r = np.random.default_rng(seed)
    N = 8
    f = r.normal(size=2 * N + 2)
    g = r.normal(size=2 * N + 2)
    lhs = project([lambda _: alpha * f + beta * g], N)
    rhs = alpha * project([lambda _: f], N) + beta * project([lambda _: g], N)
    np.testing.assert_allclose(lhs.coeffs, rhs.coeffs, atol=1e-13)


def test_grid_csv(tmp_path):
    u = project([lambda x: np.sin(x), lambda x: np.cos(x)], 2)
    path = tmp_path / "g.csv"
    write_grid_csv(synthesize(u), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,comp1,comp2" and len(lines) == 7
