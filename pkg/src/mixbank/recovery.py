"""Blind recovery: correlation frame, simultaneous OMP, support estimate and
pseudoinverse reconstruction from the low-rate streams."""

from dataclasses import dataclass, field

import numpy as np

from .model import DenseGrid
from .numerics import RankDeficientError, hermitian_eig, lstsq_apply

DEFAULT_TAU = 1e-3
DEFAULT_KAPPA = 4.0
DEFAULT_TOL = 1e-9


@dataclass
class CorrelationFrame:
    """``Q = sum_n a[n] a[n]^T`` and the kept frame ``V`` with ``V V^H ~ Q``.

    ``cut`` is the absolute eigenvalue level below which directions were
    treated as noise; ``threshold`` is the relative factor ``tau``.
    """

    Q: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)
    eigvals: np.ndarray
    threshold: float
    cut: float = 0.0

    @property
    def rank(self):
        return self.V.shape[1]

    @property
    def empty(self):
        return self.rank == 0


def build_frame(streams, tau=DEFAULT_TAU, noise_rank=None, kappa=DEFAULT_KAPPA):
    """Correlation matrix of the streams and its signal-space frame.

    Keeps eigenpairs with ``lambda > tau * lambda_max``. When ``noise_rank``
    (the expected signal-space dimension) is given and smaller than the
    number of channels, the cut is raised to ``kappa * lambda[noise_rank]``
    (0-based), i.e. a multiple of the largest eigenvalue that must belong to
    the noise space. All-zero streams give an empty frame.
    """
    a = streams.values if hasattr(streams, "values") else np.asarray(streams, dtype=float)
    if a.size == 0:
        raise ValueError("streams are empty")
    Q = a @ a.T
    lam, U = hermitian_eig(Q)
    lam = np.maximum(lam, 0.0)
    m = Q.shape[0]
    if lam[0] == 0:
        return CorrelationFrame(Q, np.zeros((m, 0), dtype=complex), lam, tau, 0.0)
    cut = tau * lam[0]
    if noise_rank is not None and noise_rank < m and kappa > 0:
        cut = max(cut, kappa * lam[noise_rank])
    keep = lam > cut
    V = (U[:, keep] * np.sqrt(lam[keep])).astype(complex)
    return CorrelationFrame(Q, V, lam, tau, float(cut))


@dataclass
class SompReport:
    iterations: int
    stop_reason: str
    residual_norms: list
    rank_deficient: bool = False


def _project_out(A_S, V):
    try:
        coef = lstsq_apply(A_S, V)
        deficient = False
    except RankDeficientError:
        coef = np.linalg.pinv(A_S) @ V
        deficient = True
    return V - A_S @ coef, deficient


def somp(A, V, K, tol=DEFAULT_TOL, floor=0.0):
    """Simultaneous orthogonal matching pursuit on ``V = A U``.

    Each step picks the column maximising ``||A_j^H R||_2 / ||A_j||``
    (lowest index on ties) and re-projects ``V`` onto the selected span.
    Stops after ``K`` picks, when ``||R||_F <= tol * ||V||_F``, or when the
    largest squared singular value of ``R`` is at most ``floor``.

    Returns ``(support, residual, report)`` with a sorted 1-based support.
    """
    A = np.asarray(A, dtype=complex)
    V = np.asarray(V, dtype=complex)
    if K < 1:
        raise ValueError("K must be >= 1")
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0):
        raise ValueError("A has zero columns")
    if V.ndim == 1:
        V = V[:, None]
    v_norm = np.linalg.norm(V)
    R = V.copy()
    selected = []
    history = [float(v_norm)]
    reason = "budget"
    deficient = False
    for _ in range(min(K, A.shape[1])):
        r_norm = np.linalg.norm(R)
        if V.shape[1] == 0 or r_norm <= tol * v_norm:
            reason = "residual"
            break
        if floor > 0 and np.linalg.norm(R, 2) ** 2 <= floor:
            reason = "floor"
            break
        score = np.linalg.norm(A.conj().T @ R, axis=1) / norms
        score[selected] = -np.inf
        best = np.flatnonzero(score == score.max())[0]
        selected.append(int(best))
        R, bad = _project_out(A[:, selected], V)
        deficient |= bad
        history.append(float(np.linalg.norm(R)))
    if reason == "budget" and np.linalg.norm(R) <= tol * v_norm:
        reason = "residual"
    report = SompReport(len(selected), reason, history, deficient)
    return tuple(sorted(s + 1 for s in selected)), float(np.linalg.norm(R)), report


@dataclass
class SupportEstimate:
    support: tuple
    residual: float
    frame: CorrelationFrame = field(repr=False)
    report: SompReport = field(repr=False)


def recover_support(streams, mm, K, tau=DEFAULT_TAU, kappa=DEFAULT_KAPPA, tol=DEFAULT_TOL):
    """Frame construction followed by SOMP with budget ``min(K, m)``.

    The frame's noise cut doubles as the SOMP floor, so a residual that
    looks like the discarded noise directions ends the search.
    """
    m = streams.values.shape[0]
    A = mm.A[:m]
    budget = min(K, m)
    frame = build_frame(streams, tau, noise_rank=budget, kappa=kappa)
    if frame.empty:
        return SupportEstimate((), 0.0, frame, SompReport(0, "empty frame", [0.0]))
    support, residual, report = somp(A, frame.V, budget, tol, floor=frame.cut)
    return SupportEstimate(support, residual, frame, report)


@dataclass
class Reconstruction:
    support: tuple
    baseband: np.ndarray = field(repr=False)
    sample_times: np.ndarray = field(repr=False)
    signal: DenseGrid = field(repr=False)


def reconstruct(streams, mm, S, grid):
    """Known-support recovery and resynthesis on ``grid``.

    ``u[n] = pinv(A_S) a[n]`` gives one baseband sequence per slice in
    ``S``. Each is sinc-interpolated at rate ``1/T_s``, divided by its
    ``d`` factor, shifted to the slice centre and summed; the real part is
    returned.
    """
    S = tuple(sorted(S))
    a = streams.values
    m = a.shape[0]
    t = grid.times()
    if not S:
        return Reconstruction((), np.zeros((0, a.shape[1]), complex), streams.times(),
                              DenseGrid(grid, np.zeros(grid.n_points)))
    if mm.T is None:
        raise ValueError("measurement matrix has no period T")
    cols = [s - 1 for s in S]
    A_S = mm.A[:m, cols]
    try:
        u = lstsq_apply(A_S, a.astype(complex))
    except RankDeficientError as exc:
        raise RankDeficientError(
            f"A restricted to support {S} has rank {exc.rank} < {len(S)}", exc.rank
        ) from exc
    tk = streams.times()
    kernel = np.sinc((t[:, None] - tk[None, :]) / streams.T_s)
    centres = np.array([mm.slice_center(s) for s in S])
    scaled = u / mm.d[cols][:, None]
    base = kernel @ scaled.T
    x = np.real(np.sum(base * np.exp(2j * np.pi * np.outer(t, centres)), axis=1))
    return Reconstruction(S, u, tk, DenseGrid(grid, x))


def central_error(x_hat, x, fraction=0.5):
    """Relative l2 error over the central ``fraction`` of the window."""
    t = x.times()
    mid = 0.5 * (x.t_start + x.t_end)
    half = 0.5 * fraction * (x.t_end - x.t_start)
    c = np.abs(t - mid) <= half
    ref = np.linalg.norm(x.values[c])
    if ref == 0:
        raise ValueError("reference is zero over the central window")
    return float(np.linalg.norm(x_hat.values[c] - x.values[c]) / ref)


SUPPORT_FIELDS = ("trial", "support", "residual", "frame_rank", "iterations", "stop_reason")


def support_row(trial, est):
    return {
        "trial": trial,
        "support": format_support(est.support),
        "residual": repr(est.residual),
        "frame_rank": est.frame.rank,
        "iterations": est.report.iterations,
        "stop_reason": est.report.stop_reason,
    }


def format_support(S):
    return " ".join(str(s) for s in S)


def parse_support(text):
    return tuple(int(v) for v in text.split())
