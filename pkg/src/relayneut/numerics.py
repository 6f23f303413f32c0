"""Dense complex linear-algebra kernel.

Everything here is a thin, checked layer over numpy/scipy.  Vectors are
plain 1-D arrays; ``vec`` stacks columns (Fortran order) so that
``vec(A @ X @ B) == kron(B.T, A) @ vec(X)``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

DEFAULT_RANK_TOL = 1e-10
HERMITIAN_TOL = 1e-8


class LinAlgFailure(RuntimeError):
    """An underlying LAPACK routine did not converge."""


class NotPositiveDefinite(ValueError):
    """Raised when a matrix expected to be Hermitian PD is not."""


def herm(a):
    """Conjugate transpose."""
    return np.conj(np.swapaxes(a, -1, -2))


def vec(m):
    m = np.asarray(m)
    return m.reshape(-1, order="F")


def unvec(v, rows, cols):
    v = np.asarray(v)
    if v.size != rows * cols:
        raise ValueError(
            f"cannot reshape vector of length {v.size} into {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def kron(a, b):
    return np.kron(a, b)


def block_diag(blocks):
    if len(blocks) == 0:
        return np.zeros((0, 0), dtype=complex)
    return scipy.linalg.block_diag(*blocks)


@dataclass(frozen=True)
class SvdFactors:
    """Signal/null split of a full SVD ``A = U1 diag(s) V1^H``."""

    left_signal: np.ndarray
    left_null: np.ndarray
    right_signal: np.ndarray
    right_null: np.ndarray
    singular_values: np.ndarray
    rank: int

    def pinv(self):
        return (self.right_signal / self.singular_values) @ herm(self.left_signal)


def _svd(a):
    try:
        return np.linalg.svd(a, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise LinAlgFailure(f"SVD did not converge: {exc}") from exc


def svd_full(a, rank_tol=DEFAULT_RANK_TOL):
    """Full SVD split into signal and null parts.

    The numerical rank counts singular values above ``rank_tol * s_max``.
    Empty matrices (zero rows) have rank 0 and an identity right null basis.
    """
    a = np.asarray(a, dtype=complex)
    rows, cols = a.shape
    if rows == 0 or cols == 0:
        return SvdFactors(
            left_signal=np.zeros((rows, 0), complex),
            left_null=np.eye(rows, dtype=complex),
            right_signal=np.zeros((cols, 0), complex),
            right_null=np.eye(cols, dtype=complex),
            singular_values=np.zeros(0),
            rank=0,
        )
    u, s, vh = _svd(a)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > rank_tol * smax)) if smax > 0 else 0
    v = herm(vh)
    return SvdFactors(
        left_signal=u[:, :rank],
        left_null=u[:, rank:],
        right_signal=v[:, :rank],
        right_null=v[:, rank:],
        singular_values=s[:rank].copy(),
        rank=rank,
    )


def pinv(a, rank_tol=DEFAULT_RANK_TOL):
    """Moore-Penrose inverse through a thresholded SVD."""
    a = np.asarray(a, dtype=complex)
    if a.size == 0:
        return np.zeros(a.shape[::-1], dtype=complex)
    return svd_full(a, rank_tol).pinv()


def _check_hermitian(a, what):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{what}: expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    asym = float(np.max(np.abs(a - herm(a)))) if a.size else 0.0
    if asym > HERMITIAN_TOL * scale:
        raise ValueError(f"{what}: matrix is not Hermitian (asymmetry {asym:.3e})")
    return 0.5 * (a + herm(a))


def logdet_psd(a):
    """``log2 det(a)`` for Hermitian positive definite ``a`` via Cholesky."""
    a = _check_hermitian(a, "logdet_psd")
    if a.shape[0] == 0:
        return 0.0
    try:
        c = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("logdet_psd: matrix is not positive definite") from exc
    return float(2.0 * np.sum(np.log2(np.abs(np.diag(c)))))


def eigh(a):
    """Hermitian eigendecomposition with eigenvalues in descending order."""
    a = _check_hermitian(a, "eigh")
    try:
        w, u = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise LinAlgFailure(f"eigh did not converge: {exc}") from exc
    return w[::-1].copy(), u[:, ::-1].copy()


def whiten(noise_cov, m):
    """Return ``L^{-1} m`` where ``noise_cov = L L^H`` (Cholesky).

    ``herm(out) @ out`` equals ``m^H noise_cov^{-1} m`` without forming an inverse.
    """
    noise_cov = _check_hermitian(noise_cov, "whiten")
    try:
        c = np.linalg.cholesky(noise_cov)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("noise covariance is not positive definite") from exc
    return scipy.linalg.solve_triangular(c, m, lower=True)


def capacity(signal, noise_cov):
    """``log2 det(I + signal signal^H noise_cov^{-1})``.

    ``signal`` is the effective channel times precoder (rows = receive
    dimensions).  Evaluated as ``log2 det(I + Y^H Y)`` with the whitened
    ``Y``, so the argument is always I + PSD.
    """
    y = whiten(noise_cov, signal)
    gram = herm(y) @ y
    return logdet_psd(np.eye(gram.shape[0]) + gram)
