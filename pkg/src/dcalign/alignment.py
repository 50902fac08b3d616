"""Change-of-basis constructions and concordance diagnostics.

Three ways for the analyst to turn the released anchor projections
``A_i = A F_i`` into ``l x l`` matrices ``G_i`` such that every ``F_i G_i``
lands in one shared basis:

* :func:`align_imakura` -- least-squares fit to a target ``Z = U R`` built
  from the concatenated anchors.
* :func:`align_kawakami` -- QR of each anchor, SVD of the stacked Q
  factors, triangular solves.
* :func:`align_odc` -- per-user orthogonal Procrustes against ``A_1 O``.
"""

from __future__ import annotations

import enum
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, SingularError, ValidationError
from .numkernels import (
    RANK_RTOL,
    as_matrix,
    haar_orthogonal,
    is_orthogonal,
    pinv,
    polar_factor,
    solve_upper_triangular,
    thin_qr,
    truncated_svd,
)
from .protocol import UserPrivate

CONCORDANCE_TOL = 1e-8


class Method(str, enum.Enum):
    IMAKURA = "Imakura"
    KAWAKAMI = "Kawakami"
    ODC = "ODC"


@dataclass
class AlignmentResult:
    g: list[np.ndarray]
    method: Method
    target: np.ndarray | None = None
    target_seed: int | None = None
    anchor_residual: float = float("nan")
    flags: list[str] = field(default_factory=list)


@dataclass
class ConcordanceReport:
    basis_residual: float
    theoretical_check: float | None
    satisfied: bool

    def to_dict(self) -> dict:
        return {
            "basis_residual": self.basis_residual,
            "theoretical_check": self.theoretical_check,
            "satisfied": self.satisfied,
        }


def _check_anchors(anchors) -> list[np.ndarray]:
    if isinstance(anchors, np.ndarray) and anchors.ndim == 3:
        anchors = list(anchors)
    anchors = [as_matrix(a, f"anchor {i}") for i, a in enumerate(anchors)]
    if not anchors:
        raise DimensionError("need at least one anchor representation")
    shape = anchors[0].shape
    for i, a in enumerate(anchors):
        if a.shape != shape:
            raise DimensionError(f"anchor {i} has shape {a.shape}, expected {shape}")
    if shape[0] < shape[1]:
        raise DimensionError(f"anchor representations need a >= l, got {shape}")
    return anchors


def anchor_residual(anchors: Sequence[np.ndarray], g: Sequence[np.ndarray]) -> float:
    """``max_{i,j} ||A_i G_i - A_j G_j||_F / max(1, ||A_1 G_1||_F)``."""
    aligned = [a @ gi for a, gi in zip(anchors, g)]
    worst = 0.0
    for i in range(len(aligned)):
        for j in range(i + 1, len(aligned)):
            worst = max(worst, float(np.linalg.norm(aligned[i] - aligned[j])))
    return worst / max(1.0, float(np.linalg.norm(aligned[0])))


def _singular_flags(g: Sequence[np.ndarray]) -> list[str]:
    flags = []
    for i, gi in enumerate(g):
        s = np.linalg.svd(gi, compute_uv=False)
        if s[0] == 0.0 or s[-1] <= RANK_RTOL * s[0]:
            flags.append(f"G_{i} not invertible")
    return flags


def align_imakura(anchors, r=None, *, diagnostics: bool = True) -> AlignmentResult:
    """``G_i = pinv(A_i) @ U @ r`` with ``U`` the top-l left singular vectors of ``[A_1 ... A_c]``.

    ``r`` defaults to the identity. Non-invertible ``G_i`` (possible when the
    shared-span assumption fails) are flagged rather than raised.
    """
    anchors = _check_anchors(anchors)
    ell = anchors[0].shape[1]
    r = np.eye(ell) if r is None else as_matrix(r, "r")
    if r.shape != (ell, ell):
        raise DimensionError(f"r must be {ell}x{ell}, got {r.shape}")
    s = np.linalg.svd(r, compute_uv=False)
    if s[0] == 0.0 or s[-1] <= RANK_RTOL * s[0]:
        raise SingularError("target factor r is singular")

    u = truncated_svd(np.hstack(anchors), ell).u
    z = u @ r
    g = [pinv(a) @ z for a in anchors]
    result = AlignmentResult(g=g, method=Method.IMAKURA, target=r)
    if diagnostics:
        result.anchor_residual = anchor_residual(anchors, g)
        result.flags = _singular_flags(g)
    return result


def align_kawakami(anchors, *, diagnostics: bool = True) -> AlignmentResult:
    """QR-SVD alignment under the column-wise normalization constraint.

    Every column ``k`` satisfies ``sum_i ||A_i g_{i,k}||^2 = 1`` because
    ``A_i g_{i,k} = Q_i ghat_{i,k}`` and the stacked blocks form a unit
    right singular vector of ``[Q_1 ... Q_c]``.
    """
    anchors = _check_anchors(anchors)
    ell = anchors[0].shape[1]
    factors = [thin_qr(a) for a in anchors]
    w_q = np.hstack([f.q for f in factors])
    v_top = truncated_svd(w_q, ell).vt.T
    g = [
        solve_upper_triangular(f.r, v_top[i * ell:(i + 1) * ell])
        for i, f in enumerate(factors)
    ]
    result = AlignmentResult(g=g, method=Method.KAWAKAMI)
    if diagnostics:
        result.anchor_residual = anchor_residual(anchors, g)
        result.flags = _singular_flags(g)
    return result


def align_odc(anchors, target=None, *, diagnostics: bool = True) -> AlignmentResult:
    """Orthogonal Procrustes alignment: ``G_i = U_i V_i^T`` from the SVD of ``A_i^T A_1 O``.

    ``target`` is an orthogonal ``O``, an integer seed for a Haar draw, or
    ``None`` for the identity. All users are solved in one batched
    matmul/SVD; each ``G_i`` depends only on ``A_i``, ``A_1`` and ``O``.
    """
    anchors = _check_anchors(anchors)
    ell = anchors[0].shape[1]
    seed = None
    if target is None:
        o = np.eye(ell)
    elif isinstance(target, (int, np.integer)):
        seed = int(target)
        o = haar_orthogonal(ell, seed)
    else:
        o = as_matrix(target, "target")
        if o.shape != (ell, ell) or not is_orthogonal(o, 1e-10):
            raise ValidationError("ODC target must be an orthogonal l x l matrix")

    stacked = np.stack(anchors)
    cross = np.matmul(stacked.transpose(0, 2, 1), anchors[0] @ o)
    u, s, vt = np.linalg.svd(cross)
    g = list(np.matmul(u, vt))
    result = AlignmentResult(g=g, method=Method.ODC, target=o, target_seed=seed)
    if diagnostics:
        result.anchor_residual = anchor_residual(anchors, g)
        degenerate = np.flatnonzero((s[:, 0] == 0.0) | (s[:, -1] <= RANK_RTOL * s[:, 0]))
        result.flags = [f"A_{i}^T A_1 O rank deficient; polar factor not unique" for i in degenerate]
    return result


def align(method, anchors, target=None, *, diagnostics: bool = True) -> AlignmentResult:
    method = Method(method)
    if method is Method.IMAKURA:
        return align_imakura(anchors, target, diagnostics=diagnostics)
    if method is Method.KAWAKAMI:
        return align_kawakami(anchors, diagnostics=diagnostics)
    return align_odc(anchors, target, diagnostics=diagnostics)


def _relative(diff: float, scale: float) -> float:
    return diff / scale if scale > 0.0 else diff


def concordance_report(
    users: Sequence[UserPrivate], result: AlignmentResult, o_used=None
) -> ConcordanceReport:
    """Check ``F_1 G_1 = ... = F_c G_c`` using the private bases.

    Diagnostic only: an analyst never holds ``F_i``. For ODC the closed
    form ``G_i = E_i^T O`` with ``E_i = pinv(F_1) F_i`` is also checked;
    ``o_used`` defaults to the target recorded in ``result``.
    """
    if len(users) != len(result.g):
        raise DimensionError(f"{len(users)} users but {len(result.g)} G matrices")
    ref = users[0].f @ result.g[0]
    ref_norm = float(np.linalg.norm(ref))
    basis = max(
        _relative(float(np.linalg.norm(u.f @ g - ref)), ref_norm)
        for u, g in zip(users, result.g)
    )
    theoretical = None
    if result.method is Method.ODC:
        o = result.target if o_used is None else as_matrix(o_used, "o_used")
        if o is not None:
            f1_pinv = pinv(users[0].f)
            theoretical = max(
                float(np.linalg.norm(g - (f1_pinv @ u.f).T @ o))
                for u, g in zip(users, result.g)
            )
    satisfied = basis <= CONCORDANCE_TOL and (theoretical is None or theoretical <= CONCORDANCE_TOL)
    return ConcordanceReport(basis_residual=basis, theoretical_check=theoretical, satisfied=satisfied)


def common_rotation_residual(left: Sequence[np.ndarray], right: Sequence[np.ndarray]) -> float:
    """Relative residual of the best single orthogonal map from stacked ``left`` to stacked ``right``.

    Near zero iff the two collections differ by one common orthogonal
    transform applied on the right.
    """
    if len(left) != len(right) or not left:
        raise DimensionError("left and right must be non-empty and equally long")
    for i, (lm, rm) in enumerate(zip(left, right)):
        if np.shape(lm) != np.shape(rm):
            raise DimensionError(f"entry {i}: shapes {np.shape(lm)} and {np.shape(rm)} differ")
    lhs = np.vstack(left)
    rhs = np.vstack(right)
    o = polar_factor(lhs.T @ rhs)
    return _relative(float(np.linalg.norm(lhs @ o - rhs)), float(np.linalg.norm(rhs)))


def aligned_representations(x_tildes: Sequence[np.ndarray], g: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Per-user ``X~_i G_i``."""
    if len(x_tildes) != len(g):
        raise DimensionError(f"{len(x_tildes)} representations but {len(g)} G matrices")
    return [x @ gi for x, gi in zip(x_tildes, g)]
