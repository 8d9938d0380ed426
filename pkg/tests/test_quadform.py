import numpy as np
import pytest

from app.core.exceptions import DimensionMismatchError
from app.services.quadform import kernel_basis, restrict, signature


@pytest.mark.parametrize(
    "matrix, expected",
    [
        (np.eye(3), (3, 0, 0)),
        (np.diag([1.0, -1.0, 0.0]), (1, 1, 1)),
        (np.zeros((3, 3)), (0, 0, 3)),
        (np.ones((3, 3)), (1, 0, 2)),
        (np.array([[0.0, 1.0], [1.0, 0.0]]), (1, 1, 0)),
    ],
)
def test_signature_counts(matrix, expected):
    sig = signature(matrix)
    assert (sig.p, sig.q, sig.z) == expected


def test_signature_reports_margins():
    sig = signature(np.diag([2.0, 1e-12, -1.0]))
    assert sig.inertia == (1, 1)
    assert sig.nonzero_margin == pytest.approx(1.0)
    assert sig.zero_margin == pytest.approx(1e-12)
    assert not sig.fragile


def test_signature_flags_fragile_margin():
    sig = signature(np.diag([1.0, 5e-8]), tol=1e-8)
    assert sig.inertia == (2, 0)
    assert sig.fragile


def test_external_scale_zeroes_small_form():
    small = np.diag([1e-12, -1e-12])
    assert signature(small).inertia == (1, 1)
    assert signature(small, scale=1.0).inertia == (0, 0)


def test_signature_symmetrizes_input():
    m = np.array([[1.0, 2.0], [0.0, 1.0]])
    assert signature(m).inertia == signature(np.array([[1.0, 1.0], [1.0, 1.0]])).inertia


@pytest.mark.parametrize("tol", [0.0, -1e-8, 0.5])
def test_signature_tolerance_range(tol):
    with pytest.raises(ValueError):
        signature(np.eye(2), tol=tol)


def test_signature_shape_checks():
    with pytest.raises(DimensionMismatchError):
        signature(np.ones((2, 3)))
    with pytest.raises(DimensionMismatchError):
        signature(np.eye(4))
    with pytest.raises(ValueError):
        signature(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_kernel_basis_of_degenerate_form():
    basis = kernel_basis(np.diag([1.0, 1.0, 0.0]))
    assert basis.shape == (3, 1)
    assert np.allclose(np.abs(basis[:, 0]), [0.0, 0.0, 1.0])
    assert kernel_basis(np.eye(3)).shape == (3, 0)


def test_restrict_to_full_basis_is_identity_map():
    m = np.array([[2.0, 0.5, 0.0], [0.5, 1.0, 0.0], [0.0, 0.0, -1.0]])
    assert np.allclose(restrict(m, np.eye(3)), m)
    assert restrict(m, np.zeros((3, 0))).shape == (0, 0)
    with pytest.raises(DimensionMismatchError):
        restrict(m, np.eye(2))


def test_restrict_to_kernel_of_sum():
    s_form = np.ones((3, 3))
    kernel = kernel_basis(s_form)
    restricted = restrict(np.diag([1.0, -1.0, 0.0]), kernel)
    assert restricted.shape == (2, 2)
    assert signature(restricted, scale=1.0).inertia == (1, 1)


def test_congruence_preserves_inertia(rng):
    for _ in range(100):
        n = int(rng.integers(1, 4))
        eig = rng.choice([-2.0, -1.0, 0.0, 1.0, 3.0], size=n)
        q, _ = np.linalg.qr(rng.normal(size=(n, n)))
        m = q @ np.diag(eig) @ q.T
        u, _ = np.linalg.qr(rng.normal(size=(n, n)))
        v, _ = np.linalg.qr(rng.normal(size=(n, n)))
        transform = u @ np.diag(rng.uniform(0.5, 2.0, size=n)) @ v
        before = signature(m)
        after = signature(transform.T @ m @ transform)
        assert (after.p, after.q, after.z) == (before.p, before.q, before.z)
        expected = (int(np.sum(eig > 0)), int(np.sum(eig < 0)), int(np.sum(eig == 0)))
        assert (before.p, before.q, before.z) == expected
