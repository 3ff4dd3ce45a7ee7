"""Invariant-subspace algorithms of geometric control.

The central routine is :func:`wstar_g`, which computes for one sensor node
the smallest conditioned-invariant subspace containing the unknown-input
image whose quotient dynamics can be made good by output injection.  It
works on the dual side: the largest controlled-invariant subspace of
``(A', C')`` inside ``Ker Bbar'`` is trimmed to its good part, and the
orthogonal complement of the result is returned.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
import scipy.signal

from . import matlin
from .errors import DimensionError, NotInvariant, StabilizationFailed
from .matlin import Subspace, Tolerances

__all__ = [
    "GoodRegion", "vstar", "rstar", "friend", "QuotientDecomposition",
    "decompose", "SpectralSplit", "split_spectrum", "WstarResult", "wstar_g",
    "default_pole_targets", "stabilizing_injection", "is_conditioned_invariant",
    "is_controlled_invariant",
]


@dataclass(frozen=True)
class GoodRegion:
    """Open half-plane ``Re(lambda) < -margin``."""

    margin: float = 0.5

    def __call__(self, lam) -> bool:
        return bool(np.real(lam) < -self.margin)


def _tol(tol):
    return matlin.default_tolerances() if tol is None else tol


def _scale(M) -> float:
    return max(matlin.norms(M).two, 1.0) if np.size(M) else 1.0


def _check_square(A, name="A"):
    A = matlin.as_mat(A, name)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got {A.shape}")
    return A


def _same_subspace(S1: Subspace, S2: Subspace, atol: float) -> bool:
    return S1.dim == S2.dim and S1.contains(S2, atol) and S2.contains(S1, atol)


def vstar(A, B_img: Subspace, K: Subspace, tol: Tolerances | None = None) -> Subspace:
    """Largest subspace V ⊆ K with A·V ⊆ V + B_img.

    Iterates V <- K ∩ A^{-1}(V + B_img) from V = K.
    """
    A = _check_square(A)
    n = A.shape[0]
    if B_img.ambient_dim != n or K.ambient_dim != n:
        raise DimensionError("A, B_img and K must share the ambient dimension")
    tol = _tol(tol)
    V = K
    for _ in range(n + 1):
        V_next = matlin.intersect(K, matlin.preimage(A, matlin.subspace_sum(V, B_img, tol), tol), tol)
        if V_next.dim > V.dim:
            raise AssertionError("controlled-invariant iteration increased dimension")
        if V_next.dim == V.dim and _same_subspace(V_next, V, 1e-7):
            return V_next
        V = V_next
    return V


def rstar(A, B_img: Subspace, vstar_K: Subspace, tol: Tolerances | None = None) -> Subspace:
    """Largest controllability subspace inside the ``vstar`` output.

    Iterates R <- V* ∩ (A·R + B_img) from R = 0.
    """
    A = _check_square(A)
    n = A.shape[0]
    if B_img.ambient_dim != n or vstar_K.ambient_dim != n:
        raise DimensionError("A, B_img and vstar_K must share the ambient dimension")
    tol = _tol(tol)
    R = Subspace.zero(n)
    for _ in range(n + 1):
        AR = matlin.map_subspace(A, R, tol)
        R_next = matlin.intersect(vstar_K, matlin.subspace_sum(AR, B_img, tol), tol)
        if R_next.dim < R.dim:
            raise AssertionError("controllability-subspace iteration decreased dimension")
        if R_next.dim == R.dim and _same_subspace(R_next, R, 1e-7):
            return R_next
        R = R_next
    return R


def friend(A, B, V: Subspace, tol: Tolerances | None = None, *, atol: float = 1e-7) -> np.ndarray:
    """Minimum-norm F with (A + B F) V ⊆ V.

    F acts only on V (it vanishes on the orthogonal complement).

    Raises
    ------
    NotInvariant
        If A·V is not contained in V + Im B.
    """
    A = _check_square(A)
    B = matlin.as_mat(B, "B")
    n = A.shape[0]
    if B.shape[0] != n or V.ambient_dim != n:
        raise DimensionError("A, B and V are not conformable")
    m = B.shape[1]
    Vb = V.basis
    if V.dim == 0:
        return np.zeros((m, n))
    away = np.eye(n) - V.projector()
    rhs = -away @ A @ Vb
    lhs = away @ B
    if m == 0:
        X = np.zeros((0, V.dim))
    else:
        X, *_ = np.linalg.lstsq(lhs, rhs, rcond=_tol(tol).tol_rank)
    defect = np.linalg.norm(lhs @ X - rhs, 2) if rhs.size else 0.0
    scale = max(np.linalg.norm(A, 2), 1.0)
    if defect > atol * scale:
        raise NotInvariant(
            f"A·V ⊄ V + Im B (defect {defect:.3g}); no friend exists")
    return X @ Vb.T


class QuotientDecomposition(NamedTuple):
    """Adapted split of a map with invariant subspace W.

    ``insertion`` holds an orthonormal basis of W as columns, ``projection``
    an orthonormal basis of the complement as rows; ``restricted`` and
    ``induced`` are the matrices of the restriction to W and of the map
    induced on the quotient.
    """

    W: Subspace
    insertion: np.ndarray
    projection: np.ndarray
    restricted: np.ndarray
    induced: np.ndarray


def decompose(A_L, W: Subspace, *, atol: float = 1e-7) -> QuotientDecomposition:
    """Restriction to W and induced quotient map of ``A_L``.

    Raises
    ------
    NotInvariant
        If A_L·W ⊄ W.
    """
    A_L = _check_square(A_L, "A_L")
    if W.ambient_dim != A_L.shape[0]:
        raise DimensionError("W and A_L are not conformable")
    Wb = W.basis
    if matlin.residual_outside(A_L @ Wb, W) > atol * _scale(A_L):
        raise NotInvariant("W is not invariant under A_L")
    P = matlin.orthocomplement(W).basis.T
    return QuotientDecomposition(
        W=W,
        insertion=Wb,
        projection=P,
        restricted=Wb.T @ A_L @ Wb,
        induced=P @ A_L @ P.T,
    )


class SpectralSplit(NamedTuple):
    beta_g: np.ndarray
    beta_b: np.ndarray
    good_region: Callable


def _pair_conjugates(roots: np.ndarray, tol: float) -> list[list[complex]]:
    """Group roots into real singletons and conjugate pairs."""
    remaining = list(roots)
    groups = []
    while remaining:
        r = remaining.pop(0)
        if abs(r.imag) <= tol * max(1.0, abs(r)):
            groups.append([complex(r.real, 0.0)])
            continue
        partner = int(np.argmin([abs(q - np.conj(r)) for q in remaining]))
        q = remaining.pop(partner)
        re = 0.5 * (r.real + q.real)
        im = 0.5 * (abs(r.imag) + abs(q.imag))
        groups.append([complex(re, im), complex(re, -im)])
    return groups


def split_spectrum(beta, good_region: Callable = GoodRegion(), tol: float = 1e-9) -> SpectralSplit:
    """Factor a monic real polynomial into good and bad real factors.

    Conjugate pairs stay together, so both factors keep real coefficients.
    Coefficients are ordered highest degree first.
    """
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    if beta.size <= 1:
        one = np.array([1.0])
        return SpectralSplit(one, one.copy(), good_region)
    roots = np.roots(beta)
    good, bad = [], []
    for group in _pair_conjugates(roots, tol):
        (good if good_region(group[0]) else bad).extend(group)
    beta_g = np.real(np.poly(good)) if good else np.array([1.0])
    beta_b = np.real(np.poly(bad)) if bad else np.array([1.0])
    return SpectralSplit(np.atleast_1d(beta_g), np.atleast_1d(beta_b), good_region)


class WstarResult(NamedTuple):
    """Output of :func:`wstar_g`.

    ``Wg`` is the node subspace; ``Pg`` its canonical projection (rows are an
    orthonormal basis of the dual subspace ``Vg``).  The remaining fields are
    the dual-side intermediates, kept for diagnostics and for
    :func:`stabilizing_injection`.
    """

    Wg: Subspace
    Pg: np.ndarray
    Vg: Subspace
    Vp_star: Subspace
    Rp_star: Subspace
    L0_dual: np.ndarray
    beta: np.ndarray
    beta_split: SpectralSplit


def wstar_g(A, C_i, Bbar_i, good_region: Callable = GoodRegion(),
            tol: Tolerances | None = None, *, L0_dual=None) -> WstarResult:
    """Smallest good conditioned-invariant subspace containing Im Bbar_i.

    Parameters
    ----------
    A : (n, n) array
    C_i : (p, n) array
        Output map of the node.
    Bbar_i : (n, q) array
        Unknown-input channel of the node (q may be zero).
    good_region : callable
        Predicate on complex numbers selecting acceptable eigenvalues.
    L0_dual : (p, n) array, optional
        A friend of the dual controlled-invariant subspace to use instead of
        the minimum-norm one.  The result does not depend on this choice.

    Returns
    -------
    WstarResult
    """
    tol = _tol(tol)
    A = _check_square(A)
    n = A.shape[0]
    C_i = matlin.as_mat(C_i, "C_i")
    Bbar_i = matlin.as_mat(Bbar_i, "Bbar_i")
    if C_i.shape[1] != n or Bbar_i.shape[0] != n:
        raise DimensionError("A, C_i, Bbar_i are not conformable")
    At, Ct = A.T, C_i.T

    C_img = matlin.image(Ct, tol)
    Vp = vstar(At, C_img, matlin.kernel(Bbar_i.T, tol), tol)
    Rp = rstar(At, C_img, Vp, tol)
    if L0_dual is None:
        L0 = friend(At, Ct, Vp, tol)
    else:
        L0 = matlin.as_mat(L0_dual, "L0_dual")
        if L0.shape != (C_i.shape[0], n):
            raise DimensionError(f"L0_dual must have shape {(C_i.shape[0], n)}")
        A0_check = At + Ct @ L0
        if matlin.residual_outside(A0_check @ Vp.basis, Vp) > 1e-7 * _scale(A0_check):
            raise NotInvariant("supplied L0_dual is not a friend of V'*")
    A0 = At + Ct @ L0

    # quotient by R'*: induced map and the image of V'* there
    quot = decompose(A0, Rp)
    P_R, A0_bar = quot.projection, quot.induced
    V_bar = matlin.image(P_R @ Vp.basis, tol, scale=1.0)
    if V_bar.dim:
        beta = matlin.minpoly(V_bar.basis.T @ A0_bar @ V_bar.basis, tol)
    else:
        beta = np.array([1.0])
    split = split_spectrum(beta, good_region)

    good_kernel = matlin.kernel(matlin.polyval_matrix(split.beta_g, A0_bar), tol)
    X_good = matlin.intersect(V_bar, good_kernel, tol)
    Vg = matlin.preimage(P_R, X_good, tol)
    Wg = matlin.orthocomplement(Vg)
    return WstarResult(Wg=Wg, Pg=Vg.basis.T.copy(), Vg=Vg, Vp_star=Vp, Rp_star=Rp,
                       L0_dual=L0, beta=beta, beta_split=split)


def default_pole_targets(count: int, n: int, margin: float) -> np.ndarray:
    """Evenly spaced real poles in [-2*margin*n, -2*margin]."""
    if count == 0:
        return np.zeros(0)
    lo, hi = -2.0 * margin * n, -2.0 * margin
    if count == 1:
        return np.array([0.5 * (lo + hi)])
    return np.linspace(lo, hi, count)


def stabilizing_injection(A, C_i, wstar: WstarResult, good_region: Callable = GoodRegion(),
                          pole_targets=None, tol: Tolerances | None = None) -> np.ndarray:
    """Output injection L_i making W*_g invariant and its quotient map good.

    The dual map ``A' + C_i' F`` is built from the friend ``L0_dual`` plus a
    correction that only acts through ``Im C_i' ∩ V'*`` into R'*; the
    correction assigns the R'* part of the spectrum to ``pole_targets``,
    while the remaining quotient modes are the good roots kept by
    :func:`wstar_g`.  Returns ``L_i = F'``.

    Raises
    ------
    StabilizationFailed
        When the quotient spectrum still has eigenvalues outside the good
        region after placement.
    """
    tol = _tol(tol)
    A = _check_square(A)
    n = A.shape[0]
    C_i = matlin.as_mat(C_i, "C_i")
    At, Ct = A.T, C_i.T
    Rp, Vp, Vg = wstar.Rp_star, wstar.Vp_star, wstar.Vg
    F = wstar.L0_dual.copy()
    A0 = At + Ct @ F
    r = Rp.dim
    margin = getattr(good_region, "margin", 0.5)

    candidates = []
    if pole_targets is not None:
        candidates.append(np.asarray(pole_targets, dtype=float))
    candidates.append(default_pole_targets(r, n, margin))
    # extra spread if placement is ill-conditioned for the first sets
    candidates.append(default_pole_targets(r, n, 2.0 * margin) - margin)

    last_error = None
    for targets in candidates:
        if r and targets.size != r:
            last_error = f"need {r} pole targets, got {targets.size}"
            continue
        F_try = F
        if r:
            QR = Rp.basis
            G = matlin.intersect(matlin.image(Ct, tol), Vp, tol).basis
            if G.shape[1] == 0:
                last_error = "controllability subspace has no input directions"
                break
            g, *_ = np.linalg.lstsq(Ct, G, rcond=None)
            A_r = QR.T @ A0 @ QR
            B_r = QR.T @ G
            try:
                placed = scipy.signal.place_poles(A_r, B_r, targets)
            except ValueError as exc:
                last_error = str(exc)
                continue
            K_r = -placed.gain_matrix
            F_try = F + g @ K_r @ QR.T
        L = F_try.T
        try:
            quot = decompose(A + L @ C_i, wstar.Wg)
        except NotInvariant as exc:
            last_error = str(exc)
            continue
        spectrum = matlin.eigvals(quot.induced)
        if all(good_region(lam) for lam in spectrum):
            return L
        last_error = f"quotient spectrum {np.round(spectrum, 6)} not in the good region"
    raise StabilizationFailed(last_error or "stabilization failed")


def is_conditioned_invariant(A, C, W: Subspace, tol: Tolerances | None = None,
                             atol: float = 1e-7) -> bool:
    """Friend-free test A(W ∩ Ker C) ⊆ W."""
    A = _check_square(A)
    WK = matlin.intersect(W, matlin.kernel(C, tol), tol)
    if WK.dim == 0:
        return True
    return matlin.residual_outside(A @ WK.basis, W) <= atol * _scale(A)


def is_controlled_invariant(A, B, V: Subspace, tol: Tolerances | None = None,
                            atol: float = 1e-7) -> bool:
    """Test A·V ⊆ V + Im B."""
    A = _check_square(A)
    if V.dim == 0:
        return True
    target = matlin.subspace_sum(V, matlin.image(B, tol), tol)
    return matlin.residual_outside(A @ V.basis, target) <= atol * _scale(A)
