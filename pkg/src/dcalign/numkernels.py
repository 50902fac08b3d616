"""Dense linear-algebra kernels.

Matrices are plain float64 ``numpy.ndarray`` objects; :func:`as_matrix`
enforces the shape/finiteness contract at module boundaries. Factorizations
are backed by LAPACK through numpy/scipy.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import DimensionError, NumericalError, RankError, SingularError, ValidationError

# Relative cutoff for every numerical-rank decision in the package.
RANK_RTOL = 1e-12

# truncated_svd switches to the Gram/partial-eigensolver route only for
# large matrices with a small requested rank.
GRAM_MIN_DIM = 256
GRAM_MAX_FRACTION = 4


class SvdFactors(NamedTuple):
    u: np.ndarray
    sigma: np.ndarray
    vt: np.ndarray


class QrFactors(NamedTuple):
    q: np.ndarray
    r: np.ndarray


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Validate and coerce ``m`` to a non-empty, finite, 2-D float64 array."""
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DimensionError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains NaN or Inf")
    return np.ascontiguousarray(arr)


def thin_svd(m) -> SvdFactors:
    """Thin SVD ``m = u @ diag(sigma) @ vt`` with ``k = min(p, q)``.

    Singular values come back in descending order. Within clusters of equal
    singular values the basis is whatever LAPACK returns.
    """
    m = as_matrix(m)
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    return SvdFactors(u, s, vt)


def svd_backend(shape: tuple[int, int], k: int) -> str:
    """Name of the route :func:`truncated_svd` takes for ``shape`` and rank ``k``."""
    small = min(shape)
    if small >= GRAM_MIN_DIM and k * GRAM_MAX_FRACTION <= small:
        return "gram-evr"
    return "gesdd"


def truncated_svd(m, k: int, method: str = "auto") -> SvdFactors:
    """Leading ``k`` singular triplets of ``m``.

    ``method="full"`` truncates a thin SVD. ``method="gram"`` forms the
    smaller Gram matrix and extracts only its top ``k`` eigenpairs with
    LAPACK ``syevr``; it is exact (not randomized) but loses accuracy for
    singular values below ``sqrt(eps) * sigma_max``, so it falls back to the
    full route when any retained singular value is under the rank cutoff.
    ``method="auto"`` picks via :func:`svd_backend`.
    """
    m = as_matrix(m)
    p, q = m.shape
    if not 1 <= k <= min(p, q):
        raise DimensionError(f"rank {k} out of range for shape {m.shape}")
    if method == "auto":
        method = "gram" if svd_backend(m.shape, k) == "gram-evr" else "full"
    if method == "full":
        u, s, vt = thin_svd(m)
        return SvdFactors(u[:, :k], s[:k], vt[:k])
    if method != "gram":
        raise ValidationError(f"unknown truncated_svd method {method!r}")

    n = min(p, q)
    wide = p <= q
    gram = m @ m.T if wide else m.T @ m
    try:
        w, vecs = scipy.linalg.eigh(
            gram, subset_by_index=[n - k, n - 1], driver="evr", check_finite=False
        )
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    w = w[::-1]
    vecs = vecs[:, ::-1]
    s = np.sqrt(np.clip(w, 0.0, None))
    if s[0] == 0.0 or s[-1] <= RANK_RTOL * s[0]:
        return truncated_svd(m, k, method="full")
    if wide:
        u = np.ascontiguousarray(vecs)
        vt = (u.T @ m) / s[:, None]
    else:
        v = vecs
        u = (m @ v) / s
        vt = np.ascontiguousarray(v.T)
    return SvdFactors(u, s, vt)


def thin_qr(m) -> QrFactors:
    """Householder thin QR with non-negative diagonal of ``r``.

    The sign convention makes the factorization unique for full column
    rank input. Raises :class:`RankError` if any ``|r_kk|`` falls below
    ``1e-12 * ||m||_F``.
    """
    m = as_matrix(m)
    rows, cols = m.shape
    if rows < cols:
        raise DimensionError(f"thin_qr needs rows >= cols, got {m.shape}")
    q, r = np.linalg.qr(m, mode="reduced")
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    q = q * signs
    r = np.triu(r * signs[:, None])
    norm = np.linalg.norm(m)
    if norm == 0.0 or np.min(np.abs(np.diag(r))) < RANK_RTOL * norm:
        raise RankError(f"matrix of shape {m.shape} is numerically rank deficient")
    return QrFactors(q, r)


def pinv(m) -> np.ndarray:
    """Moore-Penrose pseudoinverse via SVD, cutoff ``1e-12 * sigma_max``."""
    u, s, vt = thin_svd(m)
    keep = s > RANK_RTOL * s[0] if s[0] > 0 else np.zeros_like(s, dtype=bool)
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (vt.T * inv) @ u.T


def numerical_rank(m) -> int:
    s = np.linalg.svd(as_matrix(m), compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > RANK_RTOL * s[0]))


def haar_orthogonal(dim: int, seed: int) -> np.ndarray:
    """Haar-distributed orthogonal matrix of size ``dim``.

    QR of a standard Gaussian matrix; :func:`thin_qr` already flips column
    signs so that ``diag(R) >= 0``, which is exactly the correction that
    makes ``Q`` Haar distributed.
    """
    if dim < 1:
        raise ValidationError(f"dim must be >= 1, got {dim}")
    rng = np.random.default_rng(seed)
    return thin_qr(rng.standard_normal((dim, dim))).q


def solve_upper_triangular(r, b) -> np.ndarray:
    """Back substitution for ``r @ x = b``; ``b`` may be a vector or a matrix of columns."""
    r = as_matrix(r, "r")
    if r.shape[0] != r.shape[1]:
        raise DimensionError(f"r must be square, got {r.shape}")
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != r.shape[0]:
        raise DimensionError(f"rhs has {b.shape[0]} rows, r has {r.shape[0]}")
    diag = np.abs(np.diag(r))
    if diag.max() == 0.0 or diag.min() <= RANK_RTOL * diag.max():
        raise SingularError("upper-triangular matrix has a (numerically) zero diagonal entry")
    return scipy.linalg.solve_triangular(r, b, lower=False, check_finite=False)


def polar_factor(m) -> np.ndarray:
    """Orthogonal polar factor ``u @ vt``; the nearest orthogonal matrix to a square ``m``."""
    u, _, vt = thin_svd(m)
    return u @ vt


def is_orthogonal(m, atol: float = 1e-10) -> bool:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(np.linalg.norm(m.T @ m - np.eye(m.shape[0])) <= atol)
