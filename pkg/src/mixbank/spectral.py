"""Frequency-domain algebra linking the mixing bank to the IMV system.

Slice ``s`` (1-based, ``s = 1..M``) of a spectrum is ``X(f + (s - n0 - 1)/T)``
for ``f`` in ``F0 = [-1/(2T), 1/(2T))``. Channel ``i`` sees harmonic ``n`` of
its mixing function acting on ``X(f - n/T)``, so slice ``s`` enters with
harmonic ``n = n0 + 1 - s``.
"""

import io
from dataclasses import dataclass

import numpy as np

from .model import slice_offset


def _harmonic_factor(n, M):
    """``d_n = (1 - exp(-j w0 n)) / (j 2 pi n)`` with ``d_0 = 1/M``."""
    n = np.asarray(n)
    w0 = 2 * np.pi / M
    safe = np.where(n == 0, 1, n)
    d = (1 - np.exp(-1j * w0 * safe)) / (2j * np.pi * safe)
    return np.where(n == 0, 1.0 / M, d)


def fourier_coeff(signs, channel, n, M=None):
    """Fourier coefficient ``c_in`` of mixing function ``channel`` (1-based).

    ``n`` may be an integer or an array of integers. ``M`` defaults to the
    number of sign columns and must match it when given.
    """
    if M is None:
        M = signs.M
    if M < 1 or M != signs.M:
        raise ValueError(f"M={M} does not match the sign matrix (M={signs.M})")
    if not 1 <= channel <= signs.m:
        raise IndexError(f"channel {channel} outside 1..{signs.m}")
    n_arr = np.asarray(n)
    k = np.arange(M)
    alpha = signs.entries[channel - 1]
    phase = np.exp(-2j * np.pi / M * np.multiply.outer(n_arr, k))
    c = (phase @ alpha) * _harmonic_factor(n_arr, M)
    return complex(c) if c.ndim == 0 else c


@dataclass(frozen=True)
class FourierCoeffs:
    """``values[i, n + n_max]`` holds ``c_{i+1, n}`` for ``|n| <= n_max``."""

    values: np.ndarray
    n_max: int

    def coeff(self, channel, n):
        if abs(n) > self.n_max:
            raise IndexError(f"|n|={abs(n)} exceeds n_max={self.n_max}")
        return self.values[channel - 1, n + self.n_max]

    @property
    def harmonics(self):
        return np.arange(-self.n_max, self.n_max + 1)


def fourier_coeffs(signs, n_max):
    """All coefficients ``c_in`` for ``|n| <= n_max`` at once."""
    M = signs.M
    n = np.arange(-n_max, n_max + 1)
    k = np.arange(M)
    F = np.exp(-2j * np.pi / M * np.outer(k, n))
    return FourierCoeffs((signs.entries @ F) * _harmonic_factor(n, M), n_max)


@dataclass(frozen=True)
class MeasurementMatrix:
    """``A = S F`` (m x M), the diagonal ``d`` and slice bookkeeping.

    Column ``s - 1`` belongs to slice ``s`` and harmonic ``n0 + 1 - s``, so
    ``A[i, s-1] * d[s-1] == c_{i+1, n0+1-s}``.
    """

    A: np.ndarray
    d: np.ndarray
    n0: int
    T: float = None

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def M(self):
        return self.A.shape[1]

    def harmonic(self, s):
        return self.n0 + 1 - s

    def slice_of(self, n):
        return self.n0 + 1 - n

    def column(self, n):
        """0-based column index holding harmonic ``n``."""
        return self.n0 - n

    def slice_center(self, s):
        if self.T is None:
            raise ValueError("period T is not set")
        return (s - self.n0 - 1) / self.T

    def rows(self, count):
        return MeasurementMatrix(self.A[:count], self.d, self.n0, self.T)

    def to_csv(self):
        buf = io.StringIO()
        buf.write(f"# m = {self.m}\n# M = {self.M}\n# n0 = {self.n0}\n# T = {self.T!r}\n")

        def pairs(z):
            return ",".join(f"{float(v.real)!r},{float(v.imag)!r}" for v in z)

        for i, row in enumerate(self.A):
            buf.write(f"A,{i + 1},{pairs(row)}\n")
        buf.write(f"d,0,{pairs(self.d)}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        meta, rows, d = {}, [], None
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                meta[key.strip()] = value.strip()
                continue
            if not line.strip():
                continue
            kind, _, *vals = line.split(",")
            v = np.array([float(x) for x in vals])
            z = v[0::2] + 1j * v[1::2]
            if kind == "A":
                rows.append(z)
            elif kind == "d":
                d = z
            else:
                raise ValueError(f"unknown record kind {kind!r}")
        T = None if meta.get("T", "None") == "None" else float(meta["T"])
        A = np.array(rows)
        if d is None or A.shape != (int(meta["m"]), int(meta["M"])):
            raise ValueError("incomplete measurement matrix record")
        return cls(A, d, int(meta["n0"]), T)


def dft_columns(M):
    """``F[k, s-1] = exp(-j w0 n k)`` with ``n = n0 + 1 - s``."""
    n0 = slice_offset(M)
    n = n0 + 1 - np.arange(1, M + 1)
    return np.exp(-2j * np.pi / M * np.outer(np.arange(M), n))


def build_measurement_matrix(signs, M=None, T=None):
    if M is None:
        M = signs.M
    if M != signs.M:
        raise ValueError(f"M={M} does not match the sign matrix (M={signs.M})")
    if M % 2 == 0:
        raise ValueError("even M is not supported")
    n0 = slice_offset(M)
    n = n0 + 1 - np.arange(1, M + 1)
    A = signs.entries @ dft_columns(M)
    return MeasurementMatrix(A, _harmonic_factor(n, M), n0, T)


def _bins_per_slice(freqs, T):
    freqs = np.asarray(freqs, dtype=float)
    if freqs.ndim != 1 or freqs.size < 2:
        raise ValueError("need a 1-D frequency grid with at least two bins")
    df = freqs[1] - freqs[0]
    if df <= 0 or not np.allclose(np.diff(freqs), df, rtol=1e-9, atol=0):
        raise ValueError("frequency grid must be uniform and increasing")
    P = 1.0 / (T * df)
    first = freqs[0] / df
    if abs(P - round(P)) > 1e-6 * P or abs(first - round(first)) > 1e-6 * max(1, abs(first)):
        raise ValueError("bin spacing does not divide the slice width 1/T on a zero-aligned grid")
    return int(round(P)), int(round(first)), df


def in_band_bins(P):
    """Bin offsets (in units of the bin spacing) covering ``[-1/(2T), 1/(2T))``."""
    return np.arange(-(P // 2), P - P // 2)


def slice_spectrum(X, freqs, M, T, n0=None):
    """Cut ``X`` (sampled on ``freqs``) into the M slice vectors.

    Returns ``(f_in, x)`` where ``x[s-1, j] = X(f_in[j] + (s - n0 - 1)/T)``.
    Slices or bins that fall outside the supplied grid are zero, and grid
    bins outside all M slices are ignored.
    """
    if n0 is None:
        n0 = slice_offset(M)
    if 2 * n0 + 1 < M:
        raise ValueError("need 2*n0 + 1 >= M")
    X = np.asarray(X)
    P, first, df = _bins_per_slice(freqs, T)
    j = in_band_bins(P)
    shifts = (np.arange(1, M + 1) - n0 - 1) * P
    idx = shifts[:, None] + j[None, :] - first
    valid = (idx >= 0) & (idx < X.size)
    out = np.zeros((M, j.size), dtype=np.result_type(X, complex))
    out[valid] = X[idx[valid]]
    return j * df, out


def unslice_spectrum(slices, freqs, T, n0=None):
    """Inverse of :func:`slice_spectrum` onto the grid ``freqs``."""
    M = slices.shape[0]
    if n0 is None:
        n0 = slice_offset(M)
    P, first, _ = _bins_per_slice(freqs, T)
    j = in_band_bins(P)
    if slices.shape[1] != j.size:
        raise ValueError("slice length does not match the bin spacing")
    shifts = (np.arange(1, M + 1) - n0 - 1) * P
    idx = shifts[:, None] + j[None, :] - first
    valid = (idx >= 0) & (idx < len(freqs))
    X = np.zeros(len(freqs), dtype=slices.dtype)
    X[idx[valid]] = slices[valid]
    return X


def imv_apply(mm, slices):
    """Right-hand side of the IMV system: ``A (D x(f))`` for every bin."""
    return mm.A @ (mm.d[:, None] * slices)


def predict_dtft(spectrum, signs, freqs, T):
    """Per-channel in-band spectra ``sum_{|n|<=n0} c_in X(f - n/T)``.

    ``spectrum`` is a vectorised callable returning ``X`` at arbitrary
    frequencies. Computed straight from the Fourier coefficients, so it is
    independent of the matrix path in :func:`imv_apply`.
    """
    n0 = slice_offset(signs.M)
    coeffs = fourier_coeffs(signs, n0)
    freqs = np.asarray(freqs, dtype=float)
    shifted = np.array([spectrum(freqs - n / T) for n in coeffs.harmonics])
    return coeffs.values @ shifted


def grid_spectrum(x, stream_period, bins_per_slice=None):
    """Continuous-time Fourier transform estimate of a grid signal.

    ``X(f) = dt * sum_k x[k] exp(-j 2 pi f t_k)`` on a zero-padded FFT grid
    whose spacing divides ``1/stream_period``. Returns ``(freqs, X)`` with
    ``freqs`` increasing.
    """
    D = stream_period / x.dt
    if abs(D - round(D)) > 1e-6 * D:
        raise ValueError("stream period is not a whole number of grid steps")
    D = int(round(D))
    if bins_per_slice is None:
        bins_per_slice = 1 << int(np.ceil(np.log2(max(2, -(-x.n_points // D)))))
        bins_per_slice *= 2
    n_fft = bins_per_slice * D
    if n_fft < x.n_points:
        raise ValueError("bins_per_slice too small for the grid length")
    X = np.fft.fftshift(np.fft.fft(x.values, n_fft))
    freqs = np.fft.fftshift(np.fft.fftfreq(n_fft, x.dt))
    X = X * x.dt * np.exp(-2j * np.pi * freqs * x.t_start)
    return freqs, X


def predict_samples(f_in, Y, times):
    """Real samples ``Re sum_f Y(f) exp(j 2 pi f t) df`` of in-band spectra."""
    df = f_in[1] - f_in[0]
    E = np.exp(2j * np.pi * np.outer(f_in, times))
    return np.real(Y @ E) * df


def predicted_streams(x, mm, times):
    """Noise-free stream samples implied by the IMV relation for ``x``."""
    freqs, X = grid_spectrum(x, mm.T)
    f_in, slices = slice_spectrum(X, freqs, mm.M, mm.T, mm.n0)
    return predict_samples(f_in, imv_apply(mm, slices), times)


def stream_spectrum(streams):
    """FFT of each stream (rows), orthonormal scaling."""
    return np.fft.fft(streams, axis=-1, norm="ortho")
