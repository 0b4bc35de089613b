import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vibron2d.basis import (
    BasisState,
    block_dim,
    enumerate_block,
    fix_signs,
    so3_labels,
    so3_transform,
)
from vibron2d.errors import DegenerateSpectrumError, InvalidArgumentError
from vibron2d.operators import matrix


def test_block_dimension_and_labels():
    b = enumerate_block(6, 2)
    assert b.dim == block_dim(6, 2) == 3
    assert list(b.n_values) == [2, 4, 6]
    assert enumerate_block(5, 0).dim == 3
    assert enumerate_block(5, 5).dim == 1


@pytest.mark.parametrize("N,l", [(0, 0), (3, 4), (3, -1), (2.5, 0)])
def test_invalid_blocks(N, l):
    with pytest.raises(InvalidArgumentError):
        enumerate_block(N, l)


def test_basis_state_validation():
    BasisState(4, 2, -2)
    with pytest.raises(InvalidArgumentError):
        BasisState(4, 3, 0)  # parity
    with pytest.raises(InvalidArgumentError):
        BasisState(4, 6, 0)


def test_so3_labels_ordered_by_nu_b():
    labels = so3_labels(7, 1)
    assert [x.nu_b for x in labels] == [0, 1, 2, 3]
    assert [x.omega for x in labels] == [7, 5, 3, 1]


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 60).flatmap(lambda N: st.tuples(st.just(N), st.integers(0, N))))
def test_w2_spectrum_is_casimir(Nl):
    # SO(3) Casimir eigenvalues omega(omega+1), omega = N, N-2, ..., >= l
    N, l = Nl
    b = enumerate_block(N, l)
    vals = np.sort(np.linalg.eigvalsh(matrix("W2", b)))
    omegas = np.array([N - 2 * k for k in range(b.dim)])
    assert np.all(omegas >= l)
    np.testing.assert_allclose(vals, np.sort(omegas * (omegas + 1.0)), atol=1e-8 * N * N)


def test_so3_transform_orthogonal_and_diagonalizes():
    b = enumerate_block(20, 3)
    w2 = matrix("W2", b)
    T = so3_transform(b, w2)
    np.testing.assert_allclose(T.T @ T, np.eye(b.dim), atol=1e-12)
    d = T.T @ w2 @ T
    omegas = np.array([x.omega for x in so3_labels(20, 3)], dtype=float)
    np.testing.assert_allclose(np.diag(d), omegas * (omegas + 1), atol=1e-9)
    assert np.all(T[np.argmax(np.abs(T) > 1e-12, axis=0), range(b.dim)] > 0)


def test_so3_transform_rejects_degenerate_matrix():
    b = enumerate_block(4, 0)
    with pytest.raises(DegenerateSpectrumError):
        so3_transform(b, np.eye(b.dim))
    with pytest.raises(InvalidArgumentError):
        so3_transform(b, np.eye(2))


def test_fix_signs():
    v = np.array([[0.0, -0.6], [-1.0, 0.8]])
    out = fix_signs(v)
    np.testing.assert_array_equal(out, [[0.0, 0.6], [1.0, -0.8]])
    assert v[1, 0] == -1.0  # input untouched
