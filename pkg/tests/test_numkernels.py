import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from dcalign.errors import DimensionError, IoError, NumericalError, RankError, SingularError, ValidationError
from dcalign.matio import from_dcm_bytes, read_csv, read_dcm, read_matrix, to_dcm_bytes, write_csv, write_dcm
from dcalign.numkernels import (
    as_matrix,
    haar_orthogonal,
    is_orthogonal,
    numerical_rank,
    pinv,
    polar_factor,
    solve_upper_triangular,
    svd_backend,
    thin_qr,
    thin_svd,
    truncated_svd,
)


def eig2_sym(s):
    """Eigenvalues of a symmetric 2x2 matrix from its characteristic polynomial."""
    tr, det = s[0, 0] + s[1, 1], s[0, 0] * s[1, 1] - s[0, 1] * s[1, 0]
    disc = math.sqrt(max(tr * tr / 4 - det, 0.0))
    return tr / 2 + disc, tr / 2 - disc


# -- thin_svd ---------------------------------------------------------------------

def test_svd_identity():
    np.testing.assert_array_equal(thin_svd(np.eye(3)).sigma, [1, 1, 1])


def test_svd_diagonal():
    u, s, vt = thin_svd(np.diag([3.0, 2.0, 1.0]))
    np.testing.assert_allclose(s, [3, 2, 1])
    np.testing.assert_allclose(np.abs(u), np.eye(3), atol=1e-14)
    np.testing.assert_allclose(np.abs(vt), np.eye(3), atol=1e-14)


def test_svd_matches_quadratic_oracle():
    m = np.random.default_rng(3).standard_normal((4, 2))
    lam = eig2_sym(m.T @ m)
    np.testing.assert_allclose(thin_svd(m).sigma, np.sqrt(lam), rtol=1e-12)


def test_svd_contracts_on_1000_seeded_matrices():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        r, c = rng.integers(1, 51, size=2)
        m = rng.standard_normal((r, c))
        u, s, vt = thin_svd(m)
        k = min(r, c)
        assert u.shape == (r, k) and vt.shape == (k, c)
        scale = max(1.0, s[0])
        assert np.linalg.norm(u * s @ vt - m) <= 1e-10 * scale * math.sqrt(r * c)
        assert np.linalg.norm(u.T @ u - np.eye(k)) <= 1e-10
        assert np.linalg.norm(vt @ vt.T - np.eye(k)) <= 1e-10
        assert np.all(np.diff(s) <= 0)


def test_svd_rejects_nonfinite():
    with pytest.raises(ValidationError):
        thin_svd(np.array([[1.0, np.nan]]))
    with pytest.raises(ValidationError):
        as_matrix(np.zeros((0, 3)))


@pytest.mark.parametrize("shape,k", [((300, 600), 50), ((600, 300), 40), ((50, 20), 5)])
def test_truncated_svd_routes_agree(shape, k):
    m = np.random.default_rng(1).random(shape)
    full = truncated_svd(m, k, method="full")
    gram = truncated_svd(m, k, method="gram")
    np.testing.assert_allclose(gram.sigma, full.sigma, rtol=1e-9)
    # compare subspaces, not factor signs
    p_full = full.u @ full.u.T
    p_gram = gram.u @ gram.u.T
    assert np.linalg.norm(p_full - p_gram) <= 1e-8
    assert np.linalg.norm(gram.u.T @ gram.u - np.eye(k)) <= 1e-9


def test_svd_backend_choice():
    assert svd_backend((5000, 2500), 50) == "gram-evr"
    assert svd_backend((100, 100), 50) == "gesdd"
    assert svd_backend((1000, 1000), 400) == "gesdd"


def test_truncated_svd_bad_rank():
    with pytest.raises(ValidationError):
        truncated_svd(np.eye(3), 4)


# -- thin_qr ----------------------------------------------------------------------

def test_qr_identity():
    q, r = thin_qr(np.eye(3))
    np.testing.assert_array_equal(q, np.eye(3))
    np.testing.assert_array_equal(r, np.eye(3))


def test_qr_single_column():
    q, r = thin_qr(np.array([[3.0], [4.0]]))
    np.testing.assert_allclose(q, [[0.6], [0.8]])
    np.testing.assert_allclose(r, [[5.0]])


def test_qr_reconstruction_and_determinism():
    m = np.random.default_rng(5).standard_normal((5, 3))
    q, r = thin_qr(m)
    assert np.linalg.norm(q.T @ q - np.eye(3)) <= 1e-10
    assert np.linalg.norm(q @ r - m) <= 1e-10
    assert np.all(np.diag(r) >= 0)
    assert np.array_equal(np.tril(r, -1), np.zeros_like(r))
    q2, r2 = thin_qr(m)
    assert np.array_equal(q, q2) and np.array_equal(r, r2)


def test_qr_rank_deficient():
    m = np.ones((4, 2))
    with pytest.raises(RankError):
        thin_qr(m)
    with pytest.raises(DimensionError):
        thin_qr(np.ones((2, 3)))


# -- pinv -------------------------------------------------------------------------

def test_pinv_diagonal():
    np.testing.assert_allclose(pinv(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]))


def test_pinv_orthonormal_columns():
    q = thin_qr(np.random.default_rng(2).standard_normal((4, 2))).q
    np.testing.assert_allclose(pinv(q), q.T, atol=1e-14)


def test_pinv_left_inverse():
    m = np.random.default_rng(4).standard_normal((6, 3))
    assert np.linalg.norm(pinv(m) @ m - np.eye(3)) <= 1e-9


def _mp_residuals(m):
    p = pinv(m)
    scale = max(1.0, np.linalg.norm(m)) * max(1.0, np.linalg.norm(p))
    return [
        np.linalg.norm(m @ p @ m - m) / max(1.0, np.linalg.norm(m)),
        np.linalg.norm(p @ m @ p - p) / max(1.0, np.linalg.norm(p)),
        np.linalg.norm((m @ p).T - m @ p) / scale,
        np.linalg.norm((p @ m).T - p @ m) / scale,
    ]


def test_pinv_moore_penrose_including_rank_deficient():
    rng = np.random.default_rng(7)
    for trial in range(200):
        r, c = rng.integers(1, 20, size=2)
        rank = int(rng.integers(1, min(r, c) + 1))
        m = rng.standard_normal((r, rank)) @ rng.standard_normal((rank, c))
        assert max(_mp_residuals(m)) <= 1e-9, trial
        assert numerical_rank(m) == rank


# -- haar_orthogonal ----------------------------------------------------------------

def test_haar_dim_one():
    values = {float(haar_orthogonal(1, s)[0, 0]) for s in range(50)}
    assert values == {1.0, -1.0}


def test_haar_orthogonal_and_deterministic():
    for seed in range(20):
        o = haar_orthogonal(6, seed)
        assert np.linalg.norm(o.T @ o - np.eye(6)) <= 1e-12
        assert np.linalg.norm(o @ o.T - np.eye(6)) <= 1e-12
        assert abs(abs(np.linalg.det(o)) - 1) <= 1e-10
    assert np.array_equal(haar_orthogonal(3, 99), haar_orthogonal(3, 99))


def test_haar_first_column_angle_uniform():
    angles = np.array([np.arctan2(*haar_orthogonal(2, s)[::-1, 0]) for s in range(10_000)])
    counts, _ = np.histogram(angles, bins=8, range=(-np.pi, np.pi))
    assert stats.chisquare(counts).pvalue > 0.001


# -- triangular solve ----------------------------------------------------------------

def test_solve_identity_and_hand_case():
    b = np.array([3.0, -1.0, 2.0])
    np.testing.assert_array_equal(solve_upper_triangular(np.eye(3), b), b)
    np.testing.assert_allclose(solve_upper_triangular(np.array([[2.0, 1.0], [0.0, 4.0]]), [4.0, 8.0]), [1.0, 2.0])


def test_solve_residual():
    rng = np.random.default_rng(8)
    r = np.triu(rng.standard_normal((5, 5))) + 5 * np.eye(5)
    b = rng.standard_normal(5)
    x = solve_upper_triangular(r, b)
    assert np.linalg.norm(r @ x - b) / np.linalg.norm(b) <= 1e-10


def test_solve_zero_diagonal():
    with pytest.raises(SingularError):
        solve_upper_triangular(np.array([[1.0, 2.0], [0.0, 0.0]]), [1.0, 1.0])
    assert issubclass(SingularError, NumericalError)


# -- polar factor -----------------------------------------------------------------

@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_polar_factor_is_orthogonal_and_fixes_orthogonal(dim, seed):
    o = haar_orthogonal(dim, seed)
    assert np.linalg.norm(polar_factor(o) - o) <= 1e-10
    m = np.random.default_rng(seed).standard_normal((dim, dim))
    assert is_orthogonal(polar_factor(m))


# -- matrix files ----------------------------------------------------------------

def test_dcm_layout_by_hand():
    data = to_dcm_bytes(np.array([[1.0, 2.0]]))
    assert data[:4] == b"DCM1"
    assert data[4:12] == (1).to_bytes(8, "little") and data[12:20] == (2).to_bytes(8, "little")
    assert np.frombuffer(data[20:], "<f8").tolist() == [1.0, 2.0]


@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 1000))
def test_dcm_roundtrip_exact(r, c, seed):
    m = np.random.default_rng(seed).standard_normal((r, c))
    assert np.array_equal(from_dcm_bytes(to_dcm_bytes(m)), m)


def test_file_roundtrips(tmp_path):
    m = np.random.default_rng(0).standard_normal((3, 4))
    write_dcm(tmp_path / "m.dcm", m)
    write_csv(tmp_path / "m.csv", m)
    assert np.array_equal(read_dcm(tmp_path / "m.dcm"), m)
    assert np.array_equal(read_csv(tmp_path / "m.csv"), m)
    assert np.array_equal(read_matrix(tmp_path / "m.csv"), m)


def test_dcm_corrupt(tmp_path):
    with pytest.raises(IoError):
        from_dcm_bytes(b"XXXX" + bytes(16))
    with pytest.raises(IoError):
        from_dcm_bytes(to_dcm_bytes(np.eye(2))[:-8])
    with pytest.raises(IoError):
        read_dcm(tmp_path / "missing.dcm")
