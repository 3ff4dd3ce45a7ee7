import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from geoduio import matlin
from geoduio.errors import DimensionError, ValidationError
from geoduio.matlin import Subspace, Tolerances

from conftest import random_low_rank


def test_tolerances_validated():
    with pytest.raises(ValidationError):
        Tolerances(tol_rank=0.0)
    with pytest.raises(ValidationError):
        Tolerances(tol_orth=1.5)


def test_env_override(monkeypatch):
    monkeypatch.setenv("GEO_DUIO_TOL", "1e-6")
    assert matlin.default_tolerances().tol_rank == 1e-6
    monkeypatch.setenv("GEO_DUIO_TOL", "abc")
    with pytest.raises(ValidationError):
        matlin.default_tolerances()


def test_as_mat_rejects_nan():
    with pytest.raises(ValidationError):
        matlin.as_mat([[1.0, np.nan]])
    assert matlin.as_mat([1.0, 2.0]).shape == (2, 1)


def test_kernel_nilpotent():
    K = matlin.kernel([[0.0, 1.0], [0.0, 0.0]])
    assert K.equals(Subspace.span([[1.0], [0.0]]))


def test_kernel_of_empty_is_full():
    assert matlin.kernel(np.zeros((0, 3))).dim == 3


def test_intersection_example():
    S1 = Subspace.span(np.eye(3)[:, :2])
    S2 = Subspace.span(np.eye(3)[:, 1:])
    assert matlin.intersect(S1, S2).equals(Subspace.span(np.eye(3)[:, [1]]))


def test_orthocomplement_involution(rng):
    S = matlin.image(rng.standard_normal((5, 2)))
    C = matlin.orthocomplement(S)
    assert C.dim == 3
    assert np.allclose(S.basis.T @ C.basis, 0.0, atol=1e-12)
    assert matlin.orthocomplement(C).equals(S)


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        matlin.subspace_sum(Subspace.full(2), Subspace.full(3))
    with pytest.raises(DimensionError):
        matlin.eigvals(np.ones((2, 3)))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 7), st.integers(1, 7), st.integers(0, 7), st.integers(0, 2**31 - 1))
def test_image_kernel_against_scipy(rows, cols, r, seed):
    rng = np.random.default_rng(seed)
    r = min(r, rows, cols)
    M = random_low_rank(rng, rows, cols, r)
    assert matlin.rank(M) == np.linalg.matrix_rank(M) == r
    im, ker = matlin.image(M), matlin.kernel(M)
    assert im.equals(Subspace.span(scipy.linalg.orth(M)) if r else Subspace.zero(rows))
    assert ker.dim == cols - r
    assert np.allclose(M @ ker.basis, 0.0, atol=1e-9 * max(1.0, np.linalg.norm(M)))
    B = im.basis
    assert np.allclose(B.T @ B, np.eye(im.dim), atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 7), st.integers(0, 2**31 - 1))
def test_sum_intersection_dimension_formula(n, seed):
    rng = np.random.default_rng(seed)
    S1 = matlin.image(rng.standard_normal((n, rng.integers(0, n + 1))))
    S2 = matlin.image(rng.standard_normal((n, rng.integers(0, n + 1))))
    inter = matlin.intersect(S1, S2)
    assert matlin.subspace_sum(S1, S2).dim + inter.dim == S1.dim + S2.dim
    assert S1.contains(inter) and S2.contains(inter)


def test_preimage_rectangular(rng):
    M = rng.standard_normal((3, 5))
    S = matlin.image(rng.standard_normal((3, 1)))
    P = matlin.preimage(M, S)
    assert P.dim == 3  # kernel (2) plus one direction
    assert S.contains(matlin.image(M @ P.basis))


def test_map_subspace(rng):
    M = rng.standard_normal((4, 4))
    S = matlin.image(rng.standard_normal((4, 2)))
    assert matlin.map_subspace(M, S).equals(matlin.image(M @ S.basis))


def test_norms():
    M = np.array([[1.0, -2.0], [3.0, 4.0]])
    nm = matlin.norms(M)
    assert nm.one == 6.0 and nm.inf == 7.0
    s = np.linalg.svd(M, compute_uv=False)
    assert np.isclose(nm.two, s[0]) and np.isclose(nm.sigma_min, s[-1])


def test_polyval_matrix_horner(rng):
    M = rng.standard_normal((3, 3))
    c = [2.0, -1.0, 0.5]
    assert np.allclose(matlin.polyval_matrix(c, M), 2 * M @ M - M + 0.5 * np.eye(3))


def test_minpoly_examples():
    assert np.allclose(matlin.minpoly(np.diag([1.0, 2.0, 2.0])), [1.0, -3.0, 2.0])
    assert np.allclose(matlin.minpoly(np.zeros((0, 0))), [1.0])
    assert np.allclose(matlin.minpoly(np.zeros((3, 3))), [1.0, 0.0])
    J = np.array([[2.0, 1.0], [0.0, 2.0]])
    assert np.allclose(matlin.minpoly(J), [1.0, -4.0, 4.0])


def test_pinv_matches_numpy(rng):
    M = rng.standard_normal((5, 3))
    assert np.allclose(matlin.pinv(M), np.linalg.pinv(M))
    assert matlin.pinv(np.zeros((4, 0))).shape == (0, 4)


def brute_force_minpoly(M, rtol=1e-8):
    """Smallest d with M^d in span{I, ..., M^(d-1)}, by least squares."""
    n = M.shape[0]
    scale = max(np.linalg.norm(M, 2), 1.0)
    Ms = M / scale
    powers = [np.eye(n).ravel()]
    P = np.eye(n)
    for d in range(1, n + 1):
        P = P @ Ms
        basis = np.column_stack(powers)
        coef, *_ = np.linalg.lstsq(basis, P.ravel(), rcond=None)
        if np.linalg.norm(basis @ coef - P.ravel()) <= rtol * max(1.0, np.linalg.norm(P)):
            monic = np.concatenate([[1.0], -coef[::-1]])
            return monic * scale ** np.arange(d + 1)
        powers.append(P.ravel())
    raise AssertionError("no annihilating polynomial up to degree n")


def _random_structured(rng, n):
    """Random matrix with repeated eigenvalues in a random basis."""
    kind = rng.integers(3)
    if kind == 0:
        return rng.standard_normal((n, n))
    vals = rng.integers(-3, 4, size=n).astype(float)
    D = np.diag(vals)
    if kind == 2:
        for k in range(n - 1):
            if vals[k] == vals[k + 1] and rng.random() < 0.5:
                D[k, k + 1] = 1.0
    T = rng.standard_normal((n, n)) + n * np.eye(n)
    return T @ D @ np.linalg.inv(T)


def test_minpoly_brute_force_oracle():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(1, 6))
        M = _random_structured(rng, n)
        got = matlin.minpoly(M)
        ref = brute_force_minpoly(M)
        assert len(got) == len(ref)
        assert np.allclose(got, ref, rtol=1e-6, atol=1e-6)
        res = matlin.polyval_matrix(got, M)
        assert np.linalg.norm(res) <= 1e-8 * max(1.0, np.linalg.norm(M)) ** (len(got) - 1) * 10
