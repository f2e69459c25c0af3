import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shadowpac import linalg
from shadowpac.errors import DimensionError, NotHermitianError, NumericalError
from shadowpac.linalg import I2, H, X, Z


def ket(*amps):
    return np.array(amps, dtype=complex)


def test_kron_identity():
    np.testing.assert_array_equal(linalg.tensor_product(I2, I2), np.eye(4))


def test_kron_big_endian_order():
    # hand expansion: Z (x) |0><0| = diag(1, 0, -1, 0)
    out = linalg.tensor_product(Z, linalg.basis_projector(2, 0))
    np.testing.assert_array_equal(out, np.diag([1, 0, -1, 0]))


def test_mixed_product_property():
    rng = np.random.default_rng(1)
    a, b, u, v = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)) for _ in range(4))
    lhs = linalg.tensor_product(a, b) @ linalg.tensor_product(u, v)
    np.testing.assert_allclose(lhs, linalg.tensor_product(a @ u, b @ v), atol=1e-12)


def test_tensor_product_is_a_fixed_left_fold():
    rng = np.random.default_rng(2)
    a, b, c = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)) for _ in range(3))
    np.testing.assert_array_equal(
        linalg.tensor_product(a, b, c), linalg.tensor_product(linalg.tensor_product(a, b), c)
    )


def test_tensor_product_associative_exactly_on_dyadic_entries():
    # products of dyadic rationals are exact, so grouping cannot matter
    rng = np.random.default_rng(3)
    a, b, c = (rng.integers(-8, 8, (2, 2)) / 4 for _ in range(3))
    left = linalg.tensor_product(linalg.tensor_product(a, b), c)
    right = linalg.tensor_product(a, linalg.tensor_product(b, c))
    np.testing.assert_array_equal(left, right)


def test_trace_product_examples():
    assert linalg.trace_product(np.eye(4), np.eye(4)) == pytest.approx(4)
    assert abs(linalg.trace_product(Z, X)) < 1e-15
    plus = linalg.projector(ket(1, 1) / np.sqrt(2))
    assert linalg.trace_product(linalg.basis_projector(2, 0), plus).real == pytest.approx(0.5, abs=1e-15)


def test_trace_product_dimension_mismatch():
    with pytest.raises(DimensionError):
        linalg.trace_product(np.eye(2), np.eye(4))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_trace_product_symmetric(q, seed):
    rng = np.random.default_rng(seed)
    d = 2**q
    a, b = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)) for _ in range(2))
    ab, ba = linalg.trace_product(a, b), linalg.trace_product(b, a)
    assert abs(ab - ba) <= 1e-12 * max(1.0, abs(ab))


def test_max_eigenvalue_examples():
    assert linalg.max_eigenvalue(I2) == pytest.approx(1)
    assert linalg.max_eigenvalue(Z) == pytest.approx(1)
    assert linalg.max_eigenvalue(np.diag([0.3, 0.7, -2.0])) == pytest.approx(0.7)


def test_max_eigenvalue_rejects_nonfinite():
    with pytest.raises(NumericalError):
        linalg.max_eigenvalue(np.array([[np.nan, 0], [0, 1]]))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_max_eigenvalue_unitarily_invariant(q, seed):
    rng = np.random.default_rng(seed)
    d = 2**q
    h = linalg.random_hermitian(d, rng)
    u = linalg.random_unitary(d, rng)
    assert linalg.max_eigenvalue(u @ h @ u.conj().T) == pytest.approx(linalg.max_eigenvalue(h), abs=1e-9)


def test_as_hermitian_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        linalg.as_hermitian(np.array([[0, 1], [0, 0]]))


def test_hadamard_is_unitary():
    np.testing.assert_allclose(H @ H.conj().T, I2, atol=1e-15)


def test_hermitian_coordinates_of_identity():
    np.testing.assert_array_equal(linalg.hermitian_coordinates(I2), [1, 1, 0, 0])
