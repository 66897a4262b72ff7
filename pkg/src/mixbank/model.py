"""Multiband signal class: parameters, random draws, dense-grid rendering,
noise injection and ground-truth spectrum-slice support."""

import math
from dataclasses import dataclass, field

import numpy as np

# Explicit "no noise" marker accepted wherever an SNR is expected.
NOISELESS = math.inf


@dataclass(frozen=True)
class ModelParams:
    f_nyq: float
    n_bands: int
    band_width: float
    energies: tuple

    def __post_init__(self):
        object.__setattr__(self, "energies", tuple(float(e) for e in self.energies))
        if not self.f_nyq > 0:
            raise ValueError("f_nyq must be positive")
        if not self.band_width > 0:
            raise ValueError("band_width must be positive")
        if self.n_bands < 1:
            raise ValueError("need at least one band pair")
        if len(self.energies) != self.n_bands:
            raise ValueError(
                f"expected {self.n_bands} energies, got {len(self.energies)}"
            )
        if any(e <= 0 for e in self.energies):
            raise ValueError("band energies must be positive")
        if 2 * self.n_bands * self.band_width > self.f_nyq:
            raise ValueError("occupied bandwidth 2*N*B exceeds f_nyq")


def paper_params():
    """N=3 band pairs of 40 MHz, energies 1, 2, 3, Nyquist rate 10 GHz."""
    return ModelParams(f_nyq=10e9, n_bands=3, band_width=40e6, energies=(1.0, 2.0, 3.0))


@dataclass(frozen=True)
class MultibandSignal:
    params: ModelParams
    carriers: tuple

    def __post_init__(self):
        object.__setattr__(self, "carriers", tuple(float(f) for f in self.carriers))
        p = self.params
        if len(self.carriers) != p.n_bands:
            raise ValueError(f"expected {p.n_bands} carriers, got {len(self.carriers)}")
        for f in self.carriers:
            if abs(f) + p.band_width / 2 > p.f_nyq / 2:
                raise ValueError(f"band around {f:g} Hz leaves [-f_nyq/2, f_nyq/2]")


@dataclass(frozen=True)
class GridSpec:
    """Equispaced grid ``t_start + k*dt``, ``k = 0..n_points-1``."""

    t_start: float
    t_end: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 2:
            raise ValueError("grid needs at least two points")
        if not self.t_end > self.t_start:
            raise ValueError("t_end must exceed t_start")

    @property
    def dt(self):
        return (self.t_end - self.t_start) / self.n_points

    def times(self):
        return self.t_start + self.dt * np.arange(self.n_points)

    def check_oversampled(self, f_nyq):
        # small slack so that dt computed as (t_end - t_start)/n is not rejected by roundoff
        if self.dt > (1 + 1e-9) / (2 * f_nyq):
            raise ValueError(
                f"grid step {self.dt:g} s is coarser than 1/(2 f_nyq) = {1 / (2 * f_nyq):g} s"
            )


def paper_grid(f_nyq):
    """4000 points on [-200/f_nyq, 200/f_nyq]."""
    return GridSpec(-200 / f_nyq, 200 / f_nyq, 4000)


def default_grid(f_nyq):
    """Same step as :func:`paper_grid` over a 20x wider window (80000 points)."""
    return GridSpec(-4000 / f_nyq, 4000 / f_nyq, 80000)


@dataclass
class DenseGrid:
    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_points,):
            raise ValueError("values do not match the grid length")

    @property
    def t_start(self):
        return self.grid.t_start

    @property
    def t_end(self):
        return self.grid.t_end

    @property
    def n_points(self):
        return self.grid.n_points

    @property
    def dt(self):
        return self.grid.dt

    def times(self):
        return self.grid.times()

    def __add__(self, other):
        if other.grid != self.grid:
            raise ValueError("grids differ")
        return DenseGrid(self.grid, self.values + other.values)


def draw_signal(params, rng):
    """Carriers uniform on [-f_nyq/2, f_nyq/2]; draws whose band would cross
    +-f_nyq/2 are rejected and redrawn one carrier at a time."""
    rng = np.random.default_rng(rng)
    half = params.f_nyq / 2
    carriers = []
    while len(carriers) < params.n_bands:
        f = rng.uniform(-half, half)
        if abs(f) + params.band_width / 2 <= half:
            carriers.append(f)
    return MultibandSignal(params, tuple(carriers))


def synthesize(sig, grid):
    """Render ``sum_i sqrt(E_i B) sinc(B t) cos(2 pi f_i t)`` on ``grid``."""
    p = sig.params
    grid.check_oversampled(p.f_nyq)
    t = grid.times()
    envelope = np.sinc(p.band_width * t)
    x = np.zeros_like(t)
    for energy, f in zip(p.energies, sig.carriers):
        x += math.sqrt(energy * p.band_width) * envelope * np.cos(2 * np.pi * f * t)
    return DenseGrid(grid, x)


def add_noise(x, snr_db, seed, convention="paper"):
    """Add white Gaussian noise scaled to a target SNR.

    ``convention="paper"`` uses ``10*log10(|x|/|w|)``; ``"power"`` uses the
    usual ``20*log10(|x|/|w|)``. Returns ``(x + w, w)``.
    """
    norm_x = np.linalg.norm(x.values)
    if norm_x == 0:
        raise ValueError("SNR is undefined for an all-zero signal")
    if snr_db == NOISELESS:
        return DenseGrid(x.grid, x.values.copy()), DenseGrid(x.grid, np.zeros(x.n_points))
    if convention == "paper":
        ratio = 10 ** (snr_db / 10)
    elif convention == "power":
        ratio = 10 ** (snr_db / 20)
    else:
        raise ValueError(f"unknown SNR convention {convention!r}")
    w = np.random.default_rng(seed).standard_normal(x.n_points)
    w *= norm_x / (ratio * np.linalg.norm(w))
    return DenseGrid(x.grid, x.values + w), DenseGrid(x.grid, w)


def measured_snr_db(x, w, convention="paper"):
    r = np.linalg.norm(x.values) / np.linalg.norm(w.values)
    return (10 if convention == "paper" else 20) * math.log10(r)


def slice_offset(M):
    """Smallest n0 with 2*n0 + 1 >= M; equals (M - 1)/2 for odd M."""
    return M // 2


def slice_edges(M, f_nyq):
    """Lower and upper frequency edge of slices 1..M (period T = M/f_nyq)."""
    T = M / f_nyq
    n0 = slice_offset(M)
    centers = (np.arange(1, M + 1) - n0 - 1) / T
    return centers - 1 / (2 * T), centers + 1 / (2 * T)


def true_support(sig, M):
    """Sorted slice indices (1-based) touched by any band or its mirror.

    A band touches a slice when the open intervals overlap, so a band edge
    lying exactly on a slice boundary does not claim the neighbour.
    """
    p = sig.params
    if M > p.f_nyq / p.band_width:
        raise ValueError(f"M={M} exceeds f_nyq/B={p.f_nyq / p.band_width:g}")
    lo_edges, hi_edges = slice_edges(M, p.f_nyq)
    hit = np.zeros(M, dtype=bool)
    for f in sig.carriers:
        for c in (f, -f):
            lo, hi = c - p.band_width / 2, c + p.band_width / 2
            hit |= (lo < hi_edges) & (hi > lo_edges)
    return tuple(int(i) + 1 for i in np.flatnonzero(hit))


def mirror_slice(i, M):
    return M + 1 - i


@dataclass
class ValidationReport:
    checks: list
    average_rate: float
    minimal_rate: float

    @property
    def ok(self):
        return all(passed for _, passed, _ in self.checks)

    def lines(self):
        out = [f"{'PASS' if ok else 'FAIL'}  {name}: {detail}" for name, ok, detail in self.checks]
        out.append(f"average sampling rate m/T = {self.average_rate:.6g} samples/s")
        out.append(f"minimal blind rate 4NB = {self.minimal_rate:.6g} samples/s")
        return out


def validate_parameters(params, M, m, blind=True):
    """Check the uniqueness conditions on (M, m) for the given signal class."""
    limit = params.f_nyq / params.band_width
    need = (4 if blind else 2) * params.n_bands
    checks = [
        ("M <= f_nyq/B", M <= limit, f"M={M}, f_nyq/B={limit:g}"),
        (
            f"m >= {'4N' if blind else '2N'}",
            m >= need,
            f"m={m}, {'4N' if blind else '2N'}={need}",
        ),
    ]
    T = M / params.f_nyq
    return ValidationReport(
        checks=checks,
        average_rate=m / T,
        minimal_rate=4 * params.n_bands * params.band_width,
    )


def signal_to_record(sig):
    p = sig.params
    lines = [
        f"f_nyq = {p.f_nyq!r}",
        f"n_bands = {p.n_bands}",
        f"band_width = {p.band_width!r}",
        "energies = " + ", ".join(repr(e) for e in p.energies),
        "carriers = " + ", ".join(repr(f) for f in sig.carriers),
    ]
    return "\n".join(lines) + "\n"


def parse_record(text):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed line: {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def signal_from_record(text):
    rec = parse_record(text)

    def floats(s):
        return tuple(float(v) for v in s.split(",") if v.strip())

    params = ModelParams(
        f_nyq=float(rec["f_nyq"]),
        n_bands=int(rec["n_bands"]),
        band_width=float(rec["band_width"]),
        energies=floats(rec["energies"]),
    )
    return MultibandSignal(params, floats(rec["carriers"]))
