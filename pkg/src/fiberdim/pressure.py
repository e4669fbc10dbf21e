"""Finite-depth pressure curves and Bowen-zero dimension estimates.

a_n(t) = (1/n) log L^n 1(anchor) is strictly decreasing and convex in t, equals
log 2 at t = 0, and its slope lies between -(max leaf log_deriv)/n and
-(min leaf log_deriv)/n.  The limsup/liminf over n are approximated by the max
and min of a_n over a window of depths; the unique zero of each windowed curve
estimates the packing (upper) and Hausdorff (lower) dimension of the fiber
Julia set.  Zeros are found by bisection from an analytic bracket, with the
slope floor log(80/3) converting the residual tolerance into a t-uncertainty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BracketFailure
from .family import EXPANSION_FLOOR
from .orbits import PLANAR, leaf_log_derivs
from .parallel import run_jobs
from .sequences import SequenceSpec, format_sequence

LOG2 = math.log(2.0)
_SLOPE_FLOOR = math.log(EXPANSION_FLOOR)


def _lse_neg_t(lds: np.ndarray, t: float) -> float:
    x = lds * (-t)
    m = float(np.max(x))
    return m + math.log(float(np.sum(np.exp(x - m))))


@dataclass(frozen=True)
class PressureCurve:
    """Matrix a_n(t) over a depth range and t grid, plus windowed envelopes."""

    seq_id: str
    t_grid: np.ndarray
    n_values: np.ndarray
    values: np.ndarray  # shape (len(n_values), len(t_grid))
    anchor: complex
    metric: str
    window: tuple[int, int]
    lower: np.ndarray  # min over window depths, per t
    upper: np.ndarray  # max over window depths, per t
    leaf_log_min: np.ndarray  # per n
    leaf_log_max: np.ndarray  # per n

    def row(self, n: int) -> np.ndarray:
        return self.values[int(np.where(self.n_values == n)[0][0])]


def default_window(n_min: int, n_max: int) -> tuple[int, int]:
    return max(n_min, n_max // 2), n_max


def _curve_row(args):
    seq, j, n, t_grid, anchor, metric = args
    lds, stats = leaf_log_derivs(seq, j, n, anchor, metric)
    row = np.array([_lse_neg_t(lds, t) / n for t in t_grid])
    return row, stats.leaf_log_min, stats.leaf_log_max


def pressure_curve(
    seq: SequenceSpec,
    t_grid,
    n_range: tuple[int, int],
    j: int = 0,
    anchor: complex = 1.0 + 0.0j,
    metric: str = PLANAR,
    window: tuple[int, int] | None = None,
    workers: int = 1,
) -> PressureCurve:
    """a_n(t) for every n in n_range (inclusive) and t in the sorted grid."""
    t_grid = np.asarray(sorted(float(t) for t in t_grid))
    if t_grid.size and t_grid[0] < 0:
        raise ValueError("t grid must be nonnegative")
    n_min, n_max = int(n_range[0]), int(n_range[1])
    if not 1 <= n_min <= n_max:
        raise ValueError("need 1 <= n_min <= n_max")
    n_values = np.arange(n_min, n_max + 1)
    jobs = [(seq, j, int(n), tuple(t_grid), anchor, metric) for n in n_values]
    results = run_jobs(_curve_row, jobs, workers)
    values = np.array([row for row, _, _ in results])
    if window is None:
        window = default_window(n_min, n_max)
    w_lo, w_hi = window
    if not (n_min <= w_lo <= w_hi <= n_max):
        raise ValueError(f"window {window} not contained in n range [{n_min}, {n_max}]")
    mask = (n_values >= w_lo) & (n_values <= w_hi)
    return PressureCurve(
        seq_id=format_sequence(seq),
        t_grid=t_grid,
        n_values=n_values,
        values=values,
        anchor=complex(anchor),
        metric=metric,
        window=(w_lo, w_hi),
        lower=values[mask].min(axis=0),
        upper=values[mask].max(axis=0),
        leaf_log_min=np.array([lo for _, lo, _ in results]),
        leaf_log_max=np.array([hi for _, _, hi in results]),
    )


@dataclass(frozen=True)
class BowenZero:
    """Root of a windowed pressure estimate, with its certified bracket."""

    t_star: float
    which: str  # "lower" or "upper"
    window: tuple[int, int]
    residual: float
    bracket: tuple[float, float]
    uncertainty: float
    evaluations: int


class _WindowPressure:
    """Cached leaf data for one window of depths; evaluates min/max of a_n(t)."""

    def __init__(self, seq, window, j, anchor, metric):
        w_lo, w_hi = int(window[0]), int(window[1])
        if not 1 <= w_lo <= w_hi:
            raise ValueError(f"bad window {window}")
        self.n_values = list(range(w_lo, w_hi + 1))
        self.lds = []
        self.stats = []
        for n in self.n_values:
            lds, stats = leaf_log_derivs(seq, j, n, anchor, metric)
            self.lds.append(lds)
            self.stats.append(stats)
        self.evaluations = 0

    def rows(self, t: float) -> np.ndarray:
        self.evaluations += 1
        return np.array(
            [_lse_neg_t(lds, t) / n for n, lds in zip(self.n_values, self.lds)]
        )

    def bracket(self) -> tuple[float, float]:
        # a_n is >= log2 - t*maxL/n and <= log2 - t*minL/n, so every row is
        # nonnegative left of n log2 / maxL and nonpositive right of n log2 / minL.
        left = min(n * LOG2 / s.leaf_log_max for n, s in zip(self.n_values, self.stats))
        right = max(n * LOG2 / s.leaf_log_min for n, s in zip(self.n_values, self.stats))
        return left, right


def bowen_zero(
    seq: SequenceSpec,
    which: str,
    window: int | tuple[int, int],
    tol: float = 1e-4,
    j: int = 0,
    anchor: complex = 1.0 + 0.0j,
    metric: str = PLANAR,
    _cache: "_WindowPressure | None" = None,
) -> BowenZero:
    """Bisect the windowed pressure estimate to residual <= tol.

    which="lower" roots min_n a_n (Hausdorff side), which="upper" roots
    max_n a_n (packing side).  The starting bracket [n log2/maxL, n log2/minL]
    straddles zero by the operator-value bracket; the reported t-uncertainty
    is tol divided by the slope floor log(80/3).
    """
    if which not in ("lower", "upper"):
        raise ValueError("which must be 'lower' or 'upper'")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    if isinstance(window, int):
        window = (window, window)
    wp = _cache if _cache is not None else _WindowPressure(seq, window, j, anchor, metric)
    reduce = np.min if which == "lower" else np.max

    lo, hi = wp.bracket()
    f_lo = float(reduce(wp.rows(lo)))
    f_hi = float(reduce(wp.rows(hi)))
    if not (f_lo >= 0.0 >= f_hi):
        raise BracketFailure(
            f"bracket [{lo:.6g}, {hi:.6g}] values ({f_lo:.3g}, {f_hi:.3g}) do not straddle 0"
        )
    t_mid, f_mid = lo, f_lo
    for _ in range(200):
        t_mid = 0.5 * (lo + hi)
        f_mid = float(reduce(wp.rows(t_mid)))
        if abs(f_mid) <= tol:
            break
        if f_mid > 0.0:
            lo = t_mid
        else:
            hi = t_mid
    else:
        raise BracketFailure("bisection failed to reach tolerance in 200 iterations")
    return BowenZero(
        t_star=t_mid,
        which=which,
        window=(int(window[0]), int(window[1])),
        residual=f_mid,
        bracket=wp.bracket(),
        uncertainty=tol / _SLOPE_FLOOR,
        evaluations=wp.evaluations,
    )


def dimension_pair(
    seq: SequenceSpec,
    window: int | tuple[int, int],
    tol: float = 1e-4,
    j: int = 0,
    anchor: complex = 1.0 + 0.0j,
    metric: str = PLANAR,
) -> tuple[BowenZero, BowenZero]:
    """(lower, upper) windowed Bowen zeros; lower.t_star <= upper.t_star always."""
    if isinstance(window, int):
        window = (window, window)
    cache = _WindowPressure(seq, window, j, anchor, metric)
    lower = bowen_zero(seq, "lower", window, tol, j, anchor, metric, _cache=cache)
    upper = bowen_zero(seq, "upper", window, tol, j, anchor, metric, _cache=cache)
    return lower, upper


def write_pressure_csv(curve: PressureCurve, stream) -> None:
    """Long-format rows `n,t,a_n`."""
    stream.write("n,t,a_n\n")
    for i, n in enumerate(curve.n_values):
        for k, t in enumerate(curve.t_grid):
            stream.write(f"{n},{t:.17g},{curve.values[i, k]:.17g}\n")


def write_roots_csv(roots: list[BowenZero], stream) -> None:
    """Rows `which,t_star,uncertainty,n_window`."""
    stream.write("which,t_star,uncertainty,n_window\n")
    for r in roots:
        stream.write(
            f"{r.which},{r.t_star:.17g},{r.uncertainty:.17g},{r.window[0]}:{r.window[1]}\n"
        )
