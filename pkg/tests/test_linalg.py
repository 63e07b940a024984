"""Tests for the dense matrix kernel and half-plane certification."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from projects.free_spectra.errors import (
    DimensionMismatchError,
    HalfPlaneError,
    NotHermitianError,
    SingularMatrixError,
)
from projects.free_spectra.models.linalg import (
    HalfPlanePoint,
    as_cmatrix,
    hermitian_part,
    imag_part,
    in_upper_half_plane,
    invert,
    invert_with_condition,
    is_hermitian,
    min_eig_herm,
    opnorm,
)

entries = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)
square = st.integers(min_value=1, max_value=5).flatmap(
    lambda n: st.tuples(arrays(np.float64, (n, n), elements=entries), arrays(np.float64, (n, n), elements=entries))
).map(lambda pair: pair[0] + 1j * pair[1])


@settings(max_examples=50, deadline=None)
@given(square)
def test_real_and_imaginary_parts_recompose(b):
    assert is_hermitian(hermitian_part(b), tol=0.0)
    assert is_hermitian(imag_part(b), tol=0.0)
    np.testing.assert_allclose(hermitian_part(b) + 1j * imag_part(b), b, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(square)
def test_shift_by_identity_enters_half_plane(b):
    shift = opnorm(b) + 1.0
    inside, lam = in_upper_half_plane(b + 1j * shift * np.eye(b.shape[0]))
    assert inside
    assert lam >= 1.0 - 1e-9


def test_as_cmatrix_validates():
    assert as_cmatrix(2.0).shape == (1, 1)
    with pytest.raises(DimensionMismatchError):
        as_cmatrix(np.ones((2, 3)))
    with pytest.raises(ValueError):
        as_cmatrix([[np.nan]])


def test_min_eig_herm():
    assert min_eig_herm(np.diag([3.0, -1.5, 2.0])) == pytest.approx(-1.5)
    with pytest.raises(NotHermitianError):
        min_eig_herm(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_in_upper_half_plane():
    inside, lam = in_upper_half_plane(2j * np.eye(3) + np.ones((3, 3)))
    assert inside and lam == pytest.approx(2.0)
    inside, lam = in_upper_half_plane(np.diag([1j, -1j]))
    assert not inside and lam == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        in_upper_half_plane(np.eye(2), margin=-1.0)


def test_half_plane_point_certification():
    point = HalfPlanePoint.certify(np.diag([1 + 2j, 3j]))
    assert point.margin == pytest.approx(2.0)
    assert point.dim == 2
    assert point.shifted(1.0).margin == pytest.approx(3.0)
    assert HalfPlanePoint.scalar(0.5 + 1j).margin == pytest.approx(1.0)
    with pytest.raises(ValueError):
        point.m[0, 0] = 0.0


@pytest.mark.parametrize("matrix", [np.eye(2), np.diag([1j, -1j]), np.diag([1j, 0.5j])])
def test_half_plane_point_rejects(matrix):
    with pytest.raises(HalfPlaneError) as info:
        HalfPlanePoint.certify(matrix, required=0.75)
    assert info.value.margin is not None


def test_invert_with_condition():
    b = np.array([[2.0, 1.0], [1.0, 3.0]], dtype=complex)
    inv, condition = invert_with_condition(b)
    np.testing.assert_allclose(inv @ b, np.eye(2), atol=1e-14)
    assert 1.0 <= condition < 10.0
    np.testing.assert_allclose(invert(1j * np.eye(2)), -1j * np.eye(2))


@pytest.mark.parametrize("matrix", [np.zeros((2, 2)), np.array([[1.0, 1.0], [1.0, 1.0]])])
def test_singular_matrices(matrix):
    with pytest.raises(SingularMatrixError):
        invert_with_condition(matrix)
