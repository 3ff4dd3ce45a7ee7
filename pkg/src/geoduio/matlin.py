"""Dense linear-algebra kernel: subspaces, rank decisions, spectra, polynomials.

Every subspace is carried as an orthonormal basis.  Rank is decided from
singular values; the basis itself comes from a column-pivoted QR of a
spanning set, so coordinate-aligned subspaces get coordinate-aligned bases
and repeated runs give identical columns.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import DimensionError, ValidationError

__all__ = [
    "Tolerances", "default_tolerances", "as_mat", "Subspace",
    "rank", "image", "kernel", "subspace_sum", "intersect", "preimage",
    "map_subspace", "orthocomplement", "eigvals", "Norms", "norms",
    "minpoly", "polyval_matrix", "pinv", "residual_outside",
]

TOL_ENV_VAR = "GEO_DUIO_TOL"


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds.

    Parameters
    ----------
    tol_rank : float
        Singular values at or below ``tol_rank * reference`` count as zero.
        The reference is the largest singular value unless a caller passes
        an explicit scale.
    tol_orth : float
        Allowed deviation of ``basis.T @ basis`` from the identity.
    tol_eig : float
        Matching tolerance for eigenvalue multisets.
    """

    tol_rank: float = 1e-9
    tol_orth: float = 1e-10
    tol_eig: float = 1e-6

    def __post_init__(self):
        for name in ("tol_rank", "tol_orth", "tol_eig"):
            value = getattr(self, name)
            if not (0.0 < value < 1.0):
                raise ValidationError(f"{name} must lie in (0, 1), got {value!r}")


def default_tolerances() -> Tolerances:
    """Default tolerances, with ``tol_rank`` overridable from the environment."""
    raw = os.environ.get(TOL_ENV_VAR)
    if raw is None or raw.strip() == "":
        return Tolerances()
    try:
        value = float(raw)
    except ValueError as exc:
        raise ValidationError(f"{TOL_ENV_VAR}={raw!r} is not a number") from exc
    return Tolerances(tol_rank=value)


def _tol(tol: Tolerances | None) -> Tolerances:
    return default_tolerances() if tol is None else tol


def as_mat(M, name: str = "matrix") -> np.ndarray:
    """Return ``M`` as a finite 2-D float array (1-D input becomes a column)."""
    arr = np.asarray(M, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} has non-finite entries")
    return arr


def _spectral_norm(M: np.ndarray) -> float:
    if M.size == 0:
        return 0.0
    return float(scipy.linalg.svdvals(M)[0])


def _count_rank(s: np.ndarray, tol_rank: float, scale: float | None) -> int:
    if s.size == 0:
        return 0
    ref = float(s[0]) if scale is None else float(scale)
    if ref <= 0.0:
        return 0
    return int(np.count_nonzero(s > tol_rank * ref))


def _orthonormal_span(M: np.ndarray, r: int) -> np.ndarray:
    """Orthonormal basis (n x r) for the column span of ``M`` of known rank r."""
    n = M.shape[0]
    if r == 0:
        return np.zeros((n, 0))
    Q, _, _ = scipy.linalg.qr(M, mode="economic", pivoting=True)
    Q = Q[:, :r]
    # pivoted QR is rank-revealing in practice; fall back to the SVD when not
    mnorm = np.linalg.norm(M)
    if np.linalg.norm(M - Q @ (Q.T @ M)) > 1e-8 * max(mnorm, 1e-300):
        U, _, _ = np.linalg.svd(M, full_matrices=False)
        Q = U[:, :r]
    return Q


class Subspace:
    """Linear subspace of R^n stored as an orthonormal basis (n x d).

    Instances are immutable.  Use :func:`image`, :func:`kernel` or
    :meth:`span` to build one from arbitrary spanning vectors; the plain
    constructor expects orthonormal columns already.
    """

    __slots__ = ("_basis",)

    def __init__(self, basis, *, tol: Tolerances | None = None):
        B = as_mat(basis, "basis")
        if B.shape[1] > B.shape[0]:
            raise DimensionError(f"basis has more columns than rows: {B.shape}")
        if B.shape[1] > 0:
            t = _tol(tol)
            err = np.max(np.abs(B.T @ B - np.eye(B.shape[1])))
            if err > max(t.tol_orth, 1e-12) * 1e3:
                raise ValidationError(f"basis columns are not orthonormal (deviation {err:.3g})")
        B = B.copy()
        B.flags.writeable = False
        self._basis = B

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(np.zeros((n, 0)))

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(np.eye(n))

    @classmethod
    def span(cls, vectors, tol: Tolerances | None = None) -> "Subspace":
        """Subspace spanned by the columns of ``vectors``."""
        return image(vectors, tol)

    @property
    def basis(self) -> np.ndarray:
        return self._basis

    @property
    def ambient_dim(self) -> int:
        return self._basis.shape[0]

    @property
    def dim(self) -> int:
        return self._basis.shape[1]

    def projector(self) -> np.ndarray:
        """Orthogonal projector onto the subspace."""
        return self._basis @ self._basis.T

    def contains(self, other, atol: float = 1e-7) -> bool:
        """True when every column of ``other`` (a Subspace or a matrix)
        lies in this subspace, up to ``atol`` relative to its norm."""
        V = other.basis if isinstance(other, Subspace) else as_mat(other)
        if V.shape[0] != self.ambient_dim:
            raise DimensionError("ambient dimensions differ")
        return residual_outside(V, self) <= atol * max(1.0, _spectral_norm(V))

    def equals(self, other: "Subspace", atol: float = 1e-7) -> bool:
        """Mutual containment within ``atol``."""
        return self.dim == other.dim and self.contains(other, atol) and other.contains(self, atol)

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient_dim={self.ambient_dim})"


def residual_outside(V, S: Subspace) -> float:
    """Spectral norm of the component of the columns of V orthogonal to S."""
    V = np.asarray(V, dtype=float)
    if V.size == 0:
        return 0.0
    Q = S.basis
    return _spectral_norm(V - Q @ (Q.T @ V))


def rank(M, tol: Tolerances | None = None, *, scale: float | None = None) -> int:
    """Numerical rank: singular values above ``tol_rank`` times the largest one.

    ``scale`` replaces the largest singular value as reference; pass the norm
    of the operands a product came from so that round-off of an exactly zero
    product is not mistaken for rank.
    """
    M = as_mat(M)
    if M.size == 0:
        return 0
    return _count_rank(scipy.linalg.svdvals(M), _tol(tol).tol_rank, scale)


def image(M, tol: Tolerances | None = None, *, scale: float | None = None) -> Subspace:
    """Column span of M."""
    M = as_mat(M)
    r = rank(M, tol, scale=scale)
    return Subspace(_orthonormal_span(M, r))


def kernel(M, tol: Tolerances | None = None, *, scale: float | None = None) -> Subspace:
    """Null space of M (a subspace of R^cols)."""
    M = as_mat(M)
    n = M.shape[1]
    if M.shape[0] == 0 or n == 0:
        return Subspace.full(n)
    _, s, Vh = np.linalg.svd(M, full_matrices=True)
    r = _count_rank(s, _tol(tol).tol_rank, scale)
    N = Vh[r:].T
    # re-derive the basis from the projector so it is canonical
    return Subspace(_orthonormal_span(N @ N.T, n - r))


def _check_same_ambient(S1: Subspace, S2: Subspace):
    if S1.ambient_dim != S2.ambient_dim:
        raise DimensionError(
            f"subspaces live in R^{S1.ambient_dim} and R^{S2.ambient_dim}")


def subspace_sum(S1: Subspace, S2: Subspace, tol: Tolerances | None = None) -> Subspace:
    """S1 + S2."""
    _check_same_ambient(S1, S2)
    return image(np.hstack([S1.basis, S2.basis]), tol, scale=1.0)


def orthocomplement(S: Subspace) -> Subspace:
    """Orthogonal complement of S in its ambient space."""
    n = S.ambient_dim
    return Subspace(_orthonormal_span(np.eye(n) - S.projector(), n - S.dim))


def intersect(S1: Subspace, S2: Subspace, tol: Tolerances | None = None) -> Subspace:
    """S1 ∩ S2, computed as the complement of the sum of complements."""
    _check_same_ambient(S1, S2)
    return orthocomplement(subspace_sum(orthocomplement(S1), orthocomplement(S2), tol))


def preimage(M, S: Subspace, tol: Tolerances | None = None) -> Subspace:
    """Inverse image {x : M x ∈ S} of S under M (M may be rectangular)."""
    M = as_mat(M)
    if M.shape[0] != S.ambient_dim:
        raise DimensionError(
            f"map has {M.shape[0]} rows but subspace lives in R^{S.ambient_dim}")
    Q = S.basis
    defect = M - Q @ (Q.T @ M)
    return kernel(defect, tol, scale=max(_spectral_norm(M), 1.0))


def map_subspace(M, S: Subspace, tol: Tolerances | None = None) -> Subspace:
    """Forward image M·S."""
    M = as_mat(M)
    if M.shape[1] != S.ambient_dim:
        raise DimensionError(
            f"map has {M.shape[1]} columns but subspace lives in R^{S.ambient_dim}")
    return image(M @ S.basis, tol, scale=max(_spectral_norm(M), 1.0))


def eigvals(M) -> np.ndarray:
    """Eigenvalues of a square matrix (complex dtype, conjugates adjacent)."""
    M = as_mat(M)
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"eigvals needs a square matrix, got {M.shape}")
    if M.size == 0:
        return np.zeros(0, dtype=complex)
    return np.linalg.eigvals(M).astype(complex)


class Norms(NamedTuple):
    one: float
    two: float
    inf: float
    sigma_min: float


def norms(M) -> Norms:
    """Induced 1-, 2-, inf-norms and the smallest singular value.

    A 1-D input is treated as a column, which makes the induced norms agree
    with the vector norms.
    """
    M = as_mat(M)
    if M.size == 0:
        return Norms(0.0, 0.0, 0.0, 0.0)
    s = scipy.linalg.svdvals(M)
    return Norms(
        one=float(np.max(np.sum(np.abs(M), axis=0))),
        two=float(s[0]),
        inf=float(np.max(np.sum(np.abs(M), axis=1))),
        sigma_min=float(s[-1]),
    )


def polyval_matrix(coeffs, M) -> np.ndarray:
    """Evaluate the polynomial ``coeffs`` (highest degree first) at matrix M
    by Horner's rule."""
    M = as_mat(M)
    n = M.shape[0]
    coeffs = np.atleast_1d(np.asarray(coeffs, dtype=float))
    eye = np.eye(n)
    out = coeffs[0] * eye
    for c in coeffs[1:]:
        out = out @ M + c * eye
    return out


def minpoly(M, tol: Tolerances | None = None, *, rtol: float = 1e-8) -> np.ndarray:
    """Minimal polynomial of a square matrix.

    Returns monic real coefficients, highest degree first (``[1.0]`` for a
    0 x 0 matrix).  The flattened powers I, M, M^2, ... are scanned until the
    next power lies in the span of the previous ones (least-squares residual
    at most ``rtol`` after normalising M to unit spectral norm).
    """
    M = as_mat(M)
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"minpoly needs a square matrix, got {M.shape}")
    n = M.shape[0]
    if n == 0:
        return np.array([1.0])
    s = _spectral_norm(M)
    if s == 0.0:
        return np.array([1.0, 0.0])
    Ms = M / s
    krylov = [np.eye(n).ravel()]
    P = np.eye(n)
    for k in range(1, n + 1):
        P = P @ Ms
        target = P.ravel()
        K = np.column_stack(krylov)
        c, *_ = np.linalg.lstsq(K, target, rcond=None)
        resid = np.linalg.norm(K @ c - target)
        if resid <= rtol * max(1.0, np.linalg.norm(target)) or k == n:
            if k == n and resid > rtol * max(1.0, np.linalg.norm(target)):
                # tolerance too tight for this matrix; Cayley-Hamilton bound
                c = -np.poly(Ms)[1:][::-1]
            # Ms^k = sum_j c_j Ms^j  ->  lambda^k - sum_j c_j s^(k-j) lambda^j
            scaled = np.array([1.0] + [-c[j] * s ** (k - j) for j in range(k - 1, -1, -1)])
            return scaled
        krylov.append(target)
    raise AssertionError("unreachable")


def pinv(M, tol: Tolerances | None = None) -> np.ndarray:
    """Moore-Penrose pseudo-inverse with relative cutoff ``tol_rank``."""
    M = as_mat(M)
    if M.size == 0:
        return np.zeros((M.shape[1], M.shape[0]))
    return np.linalg.pinv(M, rcond=_tol(tol).tol_rank)
