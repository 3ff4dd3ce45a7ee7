import time

import numpy as np
import pytest

from geoduio import geomctl, matlin
from geoduio.errors import NotInvariant
from geoduio.geomctl import GoodRegion
from geoduio.matlin import Subspace

ATOL = 1e-7


def random_system(rng):
    """A random (A, C, Bbar) with n <= 6, occasionally with sparse structure."""
    n = int(rng.integers(1, 7))
    p = int(rng.integers(1, n + 1))
    q = int(rng.integers(0, n + 1))
    A = rng.standard_normal((n, n))
    C = rng.standard_normal((p, n))
    Bbar = rng.standard_normal((n, q))
    if rng.random() < 0.4:
        A *= rng.random((n, n)) < 0.5
        C = np.eye(n)[rng.choice(n, size=p, replace=False)]
        Bbar = np.eye(n)[:, rng.choice(n, size=q, replace=False)]
    return A, C, Bbar


def test_vstar_example():
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    B = matlin.image([[0.0], [1.0]])
    K = matlin.kernel([[0.0, 1.0]])
    V = geomctl.vstar(A, B, K)
    assert V.equals(Subspace.span([[1.0], [0.0]]))


def test_rstar_and_friend_example():
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    B = np.array([[0.0], [1.0]])
    V = geomctl.vstar(A, matlin.image(B), Subspace.full(2))
    assert V.dim == 2
    assert geomctl.rstar(A, matlin.image(B), V).dim == 2
    K = matlin.kernel([[0.0, 1.0]])
    Vk = geomctl.vstar(A, matlin.image(B), K)
    F = geomctl.friend(A, B, Vk)
    assert np.allclose(F, 0.0)


def test_friend_missing_raises():
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(NotInvariant):
        geomctl.friend(A, np.zeros((2, 1)), Subspace.span([[1.0], [1.0]]))


def test_decompose_spectrum_split(rng):
    A = np.triu(rng.standard_normal((4, 4)))
    W = Subspace.span(np.eye(4)[:, :2])
    q = geomctl.decompose(A, W)
    both = np.sort_complex(np.concatenate([np.linalg.eigvals(q.restricted),
                                           np.linalg.eigvals(q.induced)]))
    assert np.allclose(both, np.sort_complex(np.linalg.eigvals(A)))
    assert np.allclose(q.induced @ q.projection, q.projection @ A)
    with pytest.raises(NotInvariant):
        geomctl.decompose(A, Subspace.span(np.eye(4)[:, 2:]))


def test_split_spectrum_keeps_conjugates():
    beta = np.poly([-1 + 2j, -1 - 2j, 3.0, -0.1])
    s = geomctl.split_spectrum(beta, GoodRegion(0.5))
    assert np.allclose(np.polymul(s.beta_g, s.beta_b), beta)
    assert len(s.beta_g) == 3 and np.all(np.isreal(s.beta_g))


def test_wstar_trivial_output():
    ws = geomctl.wstar_g(np.diag([-1.0, -2.0]), np.zeros((1, 2)), np.array([[1.0], [0.0]]))
    assert ws.Wg.equals(Subspace.span([[1.0], [0.0]]))


def test_injection_example():
    A = np.diag([-1.0, -2.0])
    C = np.array([[1.0, 0.0]])
    Bbar = np.array([[0.0], [1.0]])
    ws = geomctl.wstar_g(A, C, Bbar)
    L = geomctl.stabilizing_injection(A, C, ws, pole_targets=[-2.0])
    q = geomctl.decompose(A + L @ C, ws.Wg)
    assert np.allclose(np.linalg.eigvals(q.induced), [-2.0])


def _check_system(A, C, Bbar, rng):
    n = A.shape[0]
    At, Ct = A.T, C.T
    C_img = matlin.image(Ct)
    K = matlin.kernel(Bbar.T) if Bbar.shape[1] else Subspace.full(n)
    Vp = geomctl.vstar(At, C_img, K)
    Rp = geomctl.rstar(At, C_img, Vp)
    # fixed-point postconditions
    assert K.contains(Vp, ATOL)
    assert geomctl.is_controlled_invariant(At, Ct, Vp, atol=ATOL)
    assert Vp.contains(Rp, ATOL)
    step = matlin.intersect(Vp, matlin.subspace_sum(matlin.map_subspace(At, Rp), C_img))
    assert step.equals(Rp, ATOL)
    step_v = matlin.intersect(K, matlin.preimage(At, matlin.subspace_sum(Vp, C_img)))
    assert step_v.equals(Vp, ATOL)

    ws = geomctl.wstar_g(A, C, Bbar)
    W = ws.Wg
    # duality round trip
    assert matlin.orthocomplement(W).equals(ws.Vg, ATOL)
    assert matlin.orthocomplement(matlin.orthocomplement(W)).equals(W, ATOL)
    assert W.contains(matlin.image(Bbar), ATOL)
    assert geomctl.is_conditioned_invariant(A, C, W, atol=ATOL)

    # canonicity under another friend of V'*
    Z = rng.standard_normal((C.shape[0], n))
    L0b = ws.L0_dual + Z @ (np.eye(n) - Vp.projector())
    ws2 = geomctl.wstar_g(A, C, Bbar, L0_dual=L0b)
    assert ws2.Wg.contains(W, ATOL) and W.contains(ws2.Wg, ATOL)


def test_geometric_property_suite():
    rng = np.random.default_rng(314)
    start = time.perf_counter()
    for _ in range(200):
        _check_system(*random_system(rng), rng)
    assert time.perf_counter() - start < 30.0


def test_injection_places_quotient_in_good_region():
    rng = np.random.default_rng(99)
    region = GoodRegion(0.5)
    done = 0
    for _ in range(60):
        A, C, Bbar = random_system(rng)
        ws = geomctl.wstar_g(A, C, Bbar, region)
        try:
            L = geomctl.stabilizing_injection(A, C, ws, region)
        except geomctl.StabilizationFailed:
            continue
        q = geomctl.decompose(A + L @ C, ws.Wg)
        assert all(region(z) for z in np.linalg.eigvals(q.induced))
        done += 1
    assert done > 30
