"""Smoothing-free ratio estimator for regression on coarsened predictors.

With the error density known, the regression of Y on the coarsened
predictor at x is estimated by the ratio of two sample averages weighted by
the error density at the offsets x - w_i. No bandwidth is involved and the
estimator converges at the parametric root-n rate.

Grid points where the denominator average falls below
``DEGENERACY_THRESHOLD`` are flagged as undefined (NaN in curves) rather
than returned as garbage ratios.
"""

from __future__ import annotations

import numpy as np

from .data import EvalGrid, RegressionCurve, TrainingSample
from .densities import ErrorDensity
from .errors import DegenerateDenominatorError

# Absolute floor under which the denominator average is treated as zero.
DEGENERACY_THRESHOLD = 1e-12

# Coarse-scan resolution used by the extremum and zero finders.
SCAN_POINTS = 512

_GOLDEN = (5.0**0.5 - 1.0) / 2.0


def predictor_density(sample: TrainingSample, err: ErrorDensity, x):
    """Average of err.pdf(x - w_i): the estimated density of the coarsened
    predictor at ``x`` (the ratio denominator). Vectorized over ``x``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    # numpy reductions over the sample axis accumulate pairwise, keeping
    # long replication studies deterministic and well-conditioned
    out = np.mean(err.pdf(x[:, None] - sample.w[None, :]), axis=1)
    return out if out.size > 1 else float(out[0])


def response_weighted_density(sample: TrainingSample, err: ErrorDensity, x):
    """Average of y_i * err.pdf(x - w_i): the ratio numerator."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    k = err.pdf(x[:, None] - sample.w[None, :])
    out = k @ sample.y / sample.n
    return out if out.size > 1 else float(out[0])


def regression_at(sample: TrainingSample, err: ErrorDensity, x: float) -> float:
    """Point estimate of the regression at ``x``.

    Raises
    ------
    DegenerateDenominatorError
        If the denominator average at ``x`` is below the threshold.
    """
    den = predictor_density(sample, err, x)
    if den < DEGENERACY_THRESHOLD:
        raise DegenerateDenominatorError(
            f"denominator {den:.3e} below {DEGENERACY_THRESHOLD:.0e} at x={x}"
        )
    return response_weighted_density(sample, err, x) / den


def fit_known(sample: TrainingSample, err: ErrorDensity, grid: EvalGrid) -> RegressionCurve:
    """Fit the ratio estimator on a grid.

    Undefined grid points (degenerate denominator) carry NaN and are
    reported in the curve's ``meta["undefined"]`` count.

    Raises
    ------
    DegenerateDenominatorError
        If every grid point is undefined.
    """
    x = grid.points
    k = err.pdf(x[:, None] - sample.w[None, :])
    den = np.mean(k, axis=1)
    num = k @ sample.y / sample.n
    defined = den >= DEGENERACY_THRESHOLD
    if not np.any(defined):
        raise DegenerateDenominatorError("estimate undefined on the whole grid")
    values = np.full_like(den, np.nan)
    values[defined] = num[defined] / den[defined]
    meta = {
        "estimator": "known-error ratio",
        "density": err.describe(),
        "undefined": int(np.sum(~defined)),
    }
    return RegressionCurve(grid=grid, values=values, meta=meta)


def regression_derivative_at(sample: TrainingSample, err: ErrorDensity, x: float) -> float:
    """First derivative of the ratio estimate at ``x`` (quotient rule with
    the density-derivative plug-ins).

    Raises
    ------
    UnsupportedDerivativeError
        If the density has no first derivative (uniform kind).
    DegenerateDenominatorError
        As in :func:`regression_at`.
    """
    offsets = x - sample.w
    k = err.pdf(offsets)
    den = float(np.mean(k))
    if den < DEGENERACY_THRESHOLD:
        raise DegenerateDenominatorError(
            f"denominator {den:.3e} below {DEGENERACY_THRESHOLD:.0e} at x={x}"
        )
    num = float(np.mean(sample.y * k))
    dk = err.pdf_derivative(offsets, 1)
    num_d = float(np.mean(sample.y * dk))
    den_d = float(np.mean(dk))
    return (num_d * den - num * den_d) / den**2


def _golden_section(f, lo: float, hi: float, xtol: float) -> float:
    """Golden-section minimizer of ``f`` on [lo, hi] to absolute ``xtol``."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _scan_values(sample, err, lo, hi, scan_points):
    xs = np.linspace(lo, hi, scan_points)
    k = err.pdf(xs[:, None] - sample.w[None, :])
    den = np.mean(k, axis=1)
    if np.any(den < DEGENERACY_THRESHOLD):
        bad = xs[den < DEGENERACY_THRESHOLD][0]
        raise DegenerateDenominatorError(
            f"denominator degenerate inside [{lo}, {hi}] (e.g. near x={bad:.6g})"
        )
    num = k @ sample.y / sample.n
    return xs, num / den


def find_extremum(
    sample: TrainingSample,
    err: ErrorDensity,
    lo: float,
    hi: float,
    kind: str = "max",
    scan_points: int = SCAN_POINTS,
):
    """Locate an extremum of the fitted curve on [lo, hi].

    Coarse scan on ``scan_points`` locations, then golden-section
    refinement around the best bracket to 1e-8 in x. The interval must stay
    clear of the degeneracy threshold throughout.

    Returns
    -------
    (location, value)
    """
    if kind not in ("max", "min"):
        raise ValueError(f"kind must be 'max' or 'min', got {kind!r}")
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    xs, vals = _scan_values(sample, err, lo, hi, scan_points)
    sign = -1.0 if kind == "max" else 1.0
    best = int(np.argmin(sign * vals))
    bracket_lo = xs[max(best - 1, 0)]
    bracket_hi = xs[min(best + 1, len(xs) - 1)]
    loc = _golden_section(
        lambda x: sign * regression_at(sample, err, x), bracket_lo, bracket_hi, 1e-8
    )
    return loc, regression_at(sample, err, loc)


def find_zeros(
    sample: TrainingSample,
    err: ErrorDensity,
    lo: float,
    hi: float,
    level: float = 0.0,
    scan_points: int = SCAN_POINTS,
) -> np.ndarray:
    """All crossings of the fitted curve through ``level`` on [lo, hi].

    Sign changes on a ``scan_points`` scan, each refined by bisection to
    1e-10. A scan point sitting exactly on the level counts only when its
    neighbors straddle the level. The returned array may be empty.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    xs, vals = _scan_values(sample, err, lo, hi, scan_points)
    f = vals - level
    # strict sign changes only; a scan point sitting exactly on the level
    # counts only when its neighbors straddle the level (so constant
    # sections do not spray spurious roots)
    roots = [
        float(xs[i])
        for i in range(1, len(xs) - 1)
        if f[i] == 0.0 and f[i - 1] * f[i + 1] < 0
    ]
    for i in range(len(xs) - 1):
        if f[i] * f[i + 1] < 0:
            a, b = xs[i], xs[i + 1]
            fa = f[i]
            while b - a > 1e-10:
                mid = 0.5 * (a + b)
                fm = regression_at(sample, err, mid) - level
                if fm == 0.0:
                    a = b = mid
                elif fa * fm < 0:
                    b = mid
                else:
                    a, fa = mid, fm
            roots.append(0.5 * (a + b))
    return np.array(sorted(roots))
