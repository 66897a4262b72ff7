"""Analog acquisition chain: per-channel +-1 mixing, lowpass filtering and
decimation of a dense-grid signal to the low-rate sample streams."""

import io
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

# Auto filter length, in multiples of the grid length. At this length the
# Hamming taper stays above 0.96 over every lag that touches the data.
AUTO_TAPS_FACTOR = 16


@dataclass(frozen=True)
class SignMatrix:
    entries: np.ndarray = field(repr=False)
    seed: object = None

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if e.ndim != 2 or e.shape[0] < 1 or e.shape[1] < 1:
            raise ValueError("sign matrix must be a non-empty 2-D array")
        if not np.all(np.abs(e) == 1):
            raise ValueError("sign matrix entries must be +1 or -1")
        object.__setattr__(self, "entries", e)

    @property
    def m(self):
        return self.entries.shape[0]

    @property
    def M(self):
        return self.entries.shape[1]

    def rows(self, channels):
        return SignMatrix(self.entries[list(channels)], self.seed)


def generate_signs(m, M, seed):
    if m < 1 or M < 1:
        raise ValueError("m and M must be positive")
    rng = np.random.default_rng(seed)
    return SignMatrix(rng.choice([-1.0, 1.0], size=(m, M)), seed)


def _chip_position(t, chip):
    u = np.asarray(t, dtype=float) / chip
    r = np.round(u)
    # points within roundoff of a chip boundary belong to the chip that starts there
    return np.where(np.abs(u - r) < 1e-9 * np.maximum(1.0, np.abs(u)), r, u)


def mixing_waveform(signs, channel, t, period):
    """Value of mixing function ``channel`` (1-based) at time(s) ``t``.

    The function holds ``signs[channel, k]`` on ``[k*period/M, (k+1)*period/M)``
    and repeats with ``period``.
    """
    if not 1 <= channel <= signs.m:
        raise IndexError(f"channel {channel} outside 1..{signs.m}")
    chip = period / signs.M
    k = np.floor(_chip_position(t, chip)).astype(np.int64) % signs.M
    return signs.entries[channel - 1, k]


def cell_mixing(signs, grid, period):
    """Mixing functions averaged over each grid cell ``[t - dt/2, t + dt/2]``.

    Returns an ``m x n_points`` array. Cells that straddle a sign change get
    the length-weighted mean of the two levels; all other entries are +-1.
    """
    M = signs.M
    chip = period / M
    dt = grid.dt
    if dt > chip:
        raise ValueError("grid step longer than one mixing chip")
    t = grid.times()
    a = _chip_position(t - dt / 2, chip)
    b = _chip_position(t + dt / 2, chip)
    ka = np.floor(a)
    kb = np.floor(b)
    # fraction of the cell lying in chip ka
    wa = np.where(ka == kb, 1.0, (ka + 1 - a) / (b - a))
    ka = ka.astype(np.int64) % M
    kb = kb.astype(np.int64) % M
    S = signs.entries
    return S[:, ka] * wa + S[:, kb] * (1.0 - wa)


def _window(taps):
    k = np.arange(taps + 1)
    return 0.54 - 0.46 * np.cos(2 * np.pi * k / taps)


def design_lowpass(taps, physical_cutoff, grid_rate):
    """Hamming-windowed sinc lowpass of order ``taps`` (``taps + 1`` coefficients).

    The cutoff is given in Hz and converted to the grid's normalised
    frequency. Coefficients are scaled to unit DC gain.
    """
    if taps < 2:
        raise ValueError("need taps >= 2")
    if not 0 < physical_cutoff < grid_rate / 2:
        raise ValueError("cutoff must lie strictly between 0 and the grid Nyquist frequency")
    fc = physical_cutoff / grid_rate
    k = np.arange(taps + 1) - taps / 2
    h = 2 * fc * np.sinc(2 * fc * k) * _window(taps)
    return h / h.sum()


@lru_cache(maxsize=16)
def _dc_sum(taps, fc):
    k = np.arange(taps + 1) - taps / 2
    return float(np.sum(2 * fc * np.sinc(2 * fc * k) * _window(taps)))


def lowpass_at_lags(lags, taps, physical_cutoff, grid_rate):
    """Coefficients of :func:`design_lowpass` at integer lags from the centre tap.

    Equivalent to ``design_lowpass(...)[taps//2 + lags]`` (zero outside the
    filter) without materialising the full filter. ``taps`` must be even.
    """
    if taps % 2:
        raise ValueError("centred evaluation needs an even filter order")
    if not 0 < physical_cutoff < grid_rate / 2:
        raise ValueError("cutoff must lie strictly between 0 and the grid Nyquist frequency")
    fc = physical_cutoff / grid_rate
    lags = np.asarray(lags)
    half = taps // 2
    w = 0.54 + 0.46 * np.cos(np.pi * lags / half)
    h = 2 * fc * np.sinc(2 * fc * lags) * w
    h = np.where(np.abs(lags) <= half, h, 0.0)
    return h / _dc_sum(taps, fc)


@dataclass(frozen=True)
class FrontEndParams:
    """Acquisition settings with ``T_p = T_s = T = M/f_nyq``.

    ``fir_taps=None`` picks a filter long enough to act as an ideal lowpass
    over the whole observation window. ``fir_cutoff`` is in units of the
    output rate ``1/T_s`` (0.5 puts the cutoff at ``1/(2 T_s)``).
    ``decimation_offset`` is the first retained grid index after delay
    compensation.
    """

    m: int
    M: int
    f_nyq: float
    fir_taps: object = None
    fir_cutoff: float = 0.5
    decimation_offset: int = 0

    def __post_init__(self):
        if self.m < 1 or self.M < 1:
            raise ValueError("m and M must be positive")
        if not self.f_nyq > 0:
            raise ValueError("f_nyq must be positive")
        if self.fir_taps is not None and self.fir_taps < 2:
            raise ValueError("fir_taps must be >= 2")
        if not 0 < self.fir_cutoff < 1:
            raise ValueError("fir_cutoff must lie in (0, 1)")
        if self.decimation_offset < 0:
            raise ValueError("decimation_offset must be >= 0")

    @property
    def T(self):
        return self.M / self.f_nyq

    T_p = T
    T_s = T

    def cutoff_hz(self):
        return self.fir_cutoff / self.T_s

    def resolved_taps(self, n_points):
        if self.fir_taps is not None:
            return int(self.fir_taps)
        return AUTO_TAPS_FACTOR * n_points

    def decimation_factor(self, grid):
        ratio = self.T_s / grid.dt
        D = round(ratio)
        if D < 1 or abs(ratio - D) > 1e-6 * ratio:
            raise ValueError(f"T_s/dt = {ratio:.9g} is not a positive integer")
        return D


@dataclass
class SampleStreams:
    """``values[i, n]`` is sample n of channel i, taken at ``t0 + n*T_s``."""

    values: np.ndarray = field(repr=False)
    T_s: float
    t0: float
    seed: object = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("streams must be a 2-D array (channels x samples)")

    @property
    def m(self):
        return self.values.shape[0]

    @property
    def length(self):
        return self.values.shape[1]

    @property
    def rate(self):
        return 1.0 / self.T_s

    def times(self):
        return self.t0 + self.T_s * np.arange(self.length)

    def channels(self, idx):
        return SampleStreams(self.values[list(idx)], self.T_s, self.t0, self.seed)

    def __add__(self, other):
        if (other.T_s, other.t0, other.values.shape) != (self.T_s, self.t0, self.values.shape):
            raise ValueError("streams are not aligned")
        return SampleStreams(self.values + other.values, self.T_s, self.t0, self.seed)

    def to_csv(self):
        buf = io.StringIO()
        buf.write(f"# rate = {self.rate!r}\n")
        buf.write(f"# t0 = {self.t0!r}\n")
        buf.write(f"# seed = {self.seed}\n")
        buf.write(",".join(f"ch{i + 1}" for i in range(self.m)) + "\n")
        for row in self.values.T:
            buf.write(",".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        meta = {}
        rows = []
        header_seen = False
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                meta[key.strip()] = value.strip()
            elif not header_seen:
                header_seen = True
            elif line.strip():
                rows.append([float(v) for v in line.split(",")])
        seed = meta.get("seed")
        seed = None if seed in (None, "None") else int(seed) if seed.lstrip("-").isdigit() else seed
        values = np.array(rows, dtype=float).T if rows else np.zeros((0, 0))
        return cls(values, 1.0 / float(meta["rate"]), float(meta["t0"]), seed)


@lru_cache(maxsize=8)
def _filter_decimate_matrix(n_points, dt, D, offset, taps, cutoff_hz):
    idx = offset + D * np.arange((n_points - offset) // D)
    lags = idx[:, None] - np.arange(n_points)[None, :]
    H = lowpass_at_lags(lags, taps, cutoff_hz, 1.0 / dt)
    H.setflags(write=False)
    return H, idx


def filter_decimate_matrix(grid, params):
    """Matrix mapping a grid sequence to the retained filtered samples.

    Row n holds the (delay-compensated) filter taps producing output grid
    index ``offset + n*D``; input outside the grid is taken as zero.
    """
    D = params.decimation_factor(grid)
    taps = params.resolved_taps(grid.n_points)
    if taps % 2:
        taps += 1
    if params.decimation_offset >= grid.n_points:
        raise ValueError("decimation offset lies beyond the grid")
    return _filter_decimate_matrix(
        grid.n_points, grid.dt, D, params.decimation_offset, taps, params.cutoff_hz()
    )


def simulate(x, signs, params):
    """Mix, lowpass and decimate ``x`` in every channel.

    Channel i sees ``x(t) p_i(t)``; the product is filtered with the
    group-delay-compensated FIR and sampled every ``T_s``. All channels share
    the sample instants.
    """
    grid = x.grid
    if signs.M != params.M:
        raise ValueError(f"sign matrix has M={signs.M}, params have M={params.M}")
    grid.check_oversampled(params.f_nyq)
    H, idx = filter_decimate_matrix(grid, params)
    mixed = cell_mixing(signs, grid, params.T_p) * x.values
    streams = mixed @ H.T
    t0 = grid.t_start + grid.dt * params.decimation_offset
    return SampleStreams(streams, params.T_s, t0, signs.seed)


def stream_length(grid, params):
    return (grid.n_points - params.decimation_offset) // params.decimation_factor(grid)


def hamming_stopband_db(h, freq, grid_rate):
    """Magnitude response of FIR ``h`` at ``freq`` Hz, in dB."""
    k = np.arange(len(h))
    r = np.abs(np.sum(h * np.exp(-2j * np.pi * freq / grid_rate * k)))
    return 20 * math.log10(max(r, 1e-300))
