"""Small dense linear-algebra and transform kernels used across the package.

Thin contracts around numpy's LAPACK/FFT routines: inputs are validated,
outputs are ordered the way the recovery code expects.
"""

import numpy as np


class RankDeficientError(np.linalg.LinAlgError):
    """Raised when a least-squares system lacks full column rank."""

    def __init__(self, message, rank):
        super().__init__(message)
        self.rank = rank


def hermitian_eig(Q, atol=1e-8):
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(eigvals, eigvecs)`` with eigenvalues sorted in descending
    order and orthonormal eigenvectors in the matching columns.
    """
    Q = np.asarray(Q)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {Q.shape}")
    if not np.all(np.isfinite(Q)):
        raise ValueError("matrix has non-finite entries")
    scale = max(np.max(np.abs(Q)), 1.0) if Q.size else 1.0
    if np.max(np.abs(Q - Q.conj().T), initial=0.0) > atol * scale:
        raise ValueError("matrix is not Hermitian")
    Q = 0.5 * (Q + Q.conj().T)
    w, V = np.linalg.eigh(Q)
    order = np.argsort(w)[::-1]
    return w[order], V[:, order]


def lstsq_apply(A_S, y, rcond=None):
    """Minimise ``||A_S z - y||`` for full-column-rank ``A_S``.

    Uses a reduced QR factorisation. ``y`` may be a vector or a matrix of
    right-hand sides. Raises :class:`RankDeficientError` carrying the
    estimated rank when ``A_S`` is numerically rank deficient.
    """
    A_S = np.asarray(A_S)
    y = np.asarray(y)
    if A_S.ndim != 2:
        raise ValueError("A_S must be two-dimensional")
    rows, cols = A_S.shape
    if cols == 0:
        return np.zeros((0,) + y.shape[1:], dtype=np.result_type(A_S, y))
    s = np.linalg.svd(A_S, compute_uv=False)
    if rcond is None:
        rcond = max(rows, cols) * np.finfo(float).eps
    rank = int(np.sum(s > rcond * s[0])) if s[0] > 0 else 0
    if rank < cols:
        raise RankDeficientError(
            f"matrix of shape {A_S.shape} has rank {rank} < {cols}", rank
        )
    q, r = np.linalg.qr(A_S)
    return np.linalg.solve(r, q.conj().T @ y)


def condition_number(A_S):
    s = np.linalg.svd(np.asarray(A_S), compute_uv=False)
    if s.size == 0:
        return 1.0
    return np.inf if s[-1] == 0 else float(s[0] / s[-1])


def dft(x):
    """Unnormalised forward DFT, ``X[k] = sum_n x[n] exp(-2j*pi*k*n/N)``."""
    x = np.asarray(x)
    if x.size == 0:
        raise ValueError("empty sequence")
    return np.fft.fft(x, axis=-1)


def idft(X):
    X = np.asarray(X)
    if X.size == 0:
        raise ValueError("empty sequence")
    return np.fft.ifft(X, axis=-1)


def convolve(signal, taps):
    """Full linear convolution (zero padded), length ``len(signal)+len(taps)-1``."""
    signal = np.asarray(signal)
    taps = np.asarray(taps)
    if signal.size == 0 or taps.size == 0:
        raise ValueError("empty input")
    return np.convolve(signal, taps, mode="full")
