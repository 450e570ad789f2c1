"""Fourier-inversion estimator for the case of an unknown error density.

Replicated contaminated measurements identify the error characteristic
function through within-group differences. Combining that estimate with the
empirical CFs of the training sample and inverting over a truncated
frequency range reproduces the known-error ratio estimator up to terms that
vanish faster than root-n, given a cutoff inside the admissible rate
bracket.

All integrals use the composite trapezoid rule on a uniform symmetric
frequency grid; the symmetric grid makes the inversions real up to roundoff,
which is checked.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Optional, Union

import numpy as np

from .data import EvalGrid, RegressionCurve, ReplicatedSample, TrainingSample
from .densities import ErrorDensity
from .errors import (
    DegenerateDenominatorError,
    MissingDecayError,
    ResolutionError,
)
from .known import DEGENERACY_THRESHOLD

# Minimum number of positive-frequency nodes between 0 and the cutoff.
MIN_NODES = 16

# Default spacing resolves phase oscillations up to the largest |x| on the
# evaluation grid, with an absolute floor.
_SPACING_OSCILLATION_FACTOR = 8.0
_SPACING_FLOOR = 1e-3

# Allowed imaginary residue of the inversions, relative to 1 + |real part|.
_IMAG_TOL = 1e-8


@dataclass(frozen=True)
class CfTable:
    """A characteristic function tabulated on a uniform symmetric grid.

    ``values`` are complex for empirical CFs and nonnegative real for the
    replicate-based error-CF estimate.
    """

    t: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.array(self.t, dtype=float)
        v = np.asarray(self.values)
        if t.ndim != 1 or v.shape != t.shape:
            raise ValueError("t and values must be aligned 1-d arrays")
        if len(t) < 3 or len(t) % 2 == 0:
            raise ValueError("grid must have odd length >= 3 (symmetric around 0)")
        steps = np.diff(t)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ValueError("grid must be uniform")
        if abs(t[0] + t[-1]) > 1e-9 * max(abs(t[0]), 1.0):
            raise ValueError("grid must be symmetric about 0")
        t.flags.writeable = False
        v = np.array(v)
        v.flags.writeable = False
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", v)

    @property
    def step(self) -> float:
        return float(self.t[1] - self.t[0])


def symmetric_tgrid(cutoff: float, step: float) -> np.ndarray:
    """Uniform grid -K*step .. K*step with K = round(cutoff/step)."""
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    k = int(round(cutoff / step))
    if k < 1:
        raise ResolutionError(f"cutoff {cutoff} too small for step {step}")
    return step * np.arange(-k, k + 1, dtype=float)


def _mean_exp(t: np.ndarray, points: np.ndarray, weights=None, chunk: int = 128):
    """mean over points of weights * exp(i * t * point), per t (chunked)."""
    out = np.empty(len(t), dtype=complex)
    scale = 1.0 / len(points)
    for start in range(0, len(t), chunk):
        block = t[start : start + chunk]
        e = np.exp(1j * block[:, None] * points[None, :])
        if weights is None:
            out[start : start + chunk] = e.sum(axis=1) * scale
        else:
            out[start : start + chunk] = e @ weights * scale
    return out


def error_cf_from_replicates(rep: ReplicatedSample, t) -> CfTable:
    """Estimate the error CF from within-group pair differences.

    The estimate is the square root of the modulus of the average of
    exp(i t (u_jk1 - u_jk2)) over all within-group pairs; the value at
    t == 0 is exactly 1 and every value lies in [0, 1].
    """
    t = np.asarray(t, dtype=float)
    diffs = rep.pair_differences()
    vals = np.sqrt(np.abs(_mean_exp(t, diffs)))
    return CfTable(t=t, values=vals)


def empirical_cfs(sample: TrainingSample, t) -> tuple:
    """Empirical CF of the predictors and its response-weighted companion.

    Returns
    -------
    (CfTable, CfTable)
        mean of exp(i t w_j), and mean of y_j * exp(i t w_j).
    """
    t = np.asarray(t, dtype=float)
    plain = _mean_exp(t, sample.w)
    weighted = _mean_exp(t, sample.w, weights=sample.y)
    return CfTable(t=t, values=plain), CfTable(t=t, values=weighted)


def select_cutoff(
    rep: ReplicatedSample,
    n: int,
    *,
    error_decay: Optional[float] = None,
    signal_decay: Optional[float] = None,
    density: Optional[ErrorDensity] = None,
    override: Optional[float] = None,
    floor_exponent: float = 0.25,
    probe_points: int = 512,
) -> float:
    """Pick the inversion cutoff frequency.

    Policy: cap the cutoff at N**(1/(2*(1+error_decay))) / log(max(N, 3))
    (N = replicate group count, natural log), cut earlier where the
    estimated error CF first drops to the noise floor N**(-floor_exponent),
    and never go below the lower-rate guard
    n**(1/(2*(signal_decay+error_decay-1))) / log(max(n, 3)) unless the
    guard exceeds the cap, in which case the cap wins with a warning.

    ``signal_decay`` defaults to ``error_decay + 2``, which always satisfies
    the smoothness ordering the rate bracket assumes. An explicit
    ``override`` is returned unchanged.

    Raises
    ------
    MissingDecayError
        When no error-CF decay exponent is available from arguments or
        density metadata.
    """
    if override is not None:
        if not override > 0:
            raise ValueError(f"cutoff override must be positive, got {override}")
        return float(override)
    if error_decay is None and density is not None:
        if density.kind == "uniform":
            raise ValueError(
                "uniform error CF oscillates through zero; it cannot drive cutoff selection"
            )
        error_decay = density.cf_decay
    if error_decay is None:
        raise MissingDecayError(
            "cutoff selection needs an error-CF decay exponent (none supplied and "
            "none in the density metadata)"
        )
    if signal_decay is None:
        signal_decay = error_decay + 2.0
    big_n = rep.n_groups
    if big_n < 2:
        raise ValueError("cutoff selection needs at least 2 replicate groups")

    cap = big_n ** (1.0 / (2.0 * (1.0 + error_decay))) / math.log(max(big_n, 3))
    tau = cap
    probe_t = np.linspace(0.0, cap, probe_points + 1)[1:]
    probe_vals = error_cf_from_replicates(rep, _pad_symmetric(probe_t)).values
    probe_vals = probe_vals[len(probe_t) + 1 :]  # positive-t half
    floor = big_n ** (-floor_exponent)
    below = np.nonzero(probe_vals <= floor)[0]
    if len(below):
        tau = min(tau, float(probe_t[below[0]]))

    guard = n ** (1.0 / (2.0 * (signal_decay + error_decay - 1.0))) / math.log(
        max(n, 3)
    )
    if guard <= cap:
        tau = max(tau, guard)
    else:
        warnings.warn(
            f"lower-rate guard {guard:.4g} exceeds the cap {cap:.4g}; "
            "the rate bracket is empty at these sample sizes, using the cap",
            stacklevel=2,
        )
        tau = cap
    return float(tau)


def _pad_symmetric(positive_t: np.ndarray) -> np.ndarray:
    """Symmetric grid containing 0 and +-positive_t (for CfTable probing)."""
    return np.concatenate([-positive_t[::-1], [0.0], positive_t])


@dataclass(frozen=True)
class FourierConfig:
    """Inversion configuration.

    ``cutoff`` is the truncation frequency; ``t_step`` the quadrature
    spacing (derived from the evaluation grid when None); the decay
    exponents describe the polynomial CF decay of the predictor density
    (``signal_decay``) and of the error density (``error_decay``) and feed
    cutoff selection.

    ``cutoff == 0`` is the documented degenerate case: the integration
    range is empty and the inversions are identically zero.
    """

    cutoff: float
    t_step: Optional[float] = None
    signal_decay: Optional[float] = None
    error_decay: Optional[float] = None

    def __post_init__(self):
        if self.cutoff < 0:
            raise ValueError(f"cutoff must be nonnegative, got {self.cutoff}")
        if self.t_step is not None:
            if not self.t_step > 0:
                raise ValueError(f"t_step must be positive, got {self.t_step}")
            if self.cutoff > 0 and self.cutoff / self.t_step < MIN_NODES:
                raise ResolutionError(
                    f"cutoff/t_step = {self.cutoff / self.t_step:.2f} < {MIN_NODES}: "
                    "frequency grid too coarse"
                )

    def resolved(self, grid: EvalGrid) -> "FourierConfig":
        """Fill in the default spacing for an evaluation grid."""
        if self.t_step is not None or self.cutoff == 0.0:
            return self
        max_x = float(np.max(np.abs(grid.points)))
        step = self.cutoff / (2 * MIN_NODES)
        if max_x > 0:
            step = min(step, math.pi / (_SPACING_OSCILLATION_FACTOR * max_x))
        step = max(step, _SPACING_FLOOR)
        return replace(self, t_step=step)


CfSource = Union[CfTable, ErrorDensity, Callable]


def _error_cf_values(cf_source: CfSource, t: np.ndarray) -> np.ndarray:
    if isinstance(cf_source, CfTable):
        step = t[1] - t[0]
        if not math.isclose(cf_source.step, step, rel_tol=1e-9):
            raise ValueError(
                f"CF table spacing {cf_source.step:.6g} does not match the "
                f"requested spacing {step:.6g}"
            )
        offset = int(round((t[0] - cf_source.t[0]) / step))
        if offset < 0 or offset + len(t) > len(cf_source.t):
            raise ValueError("CF table does not cover the requested frequency range")
        if not np.allclose(cf_source.t[offset : offset + len(t)], t, rtol=0, atol=1e-9 * max(step, 1.0)):
            raise ValueError("CF table grid is not aligned with the requested grid")
        return np.asarray(cf_source.values[offset : offset + len(t)], dtype=float)
    if isinstance(cf_source, ErrorDensity):
        return np.asarray(cf_source.cf(t), dtype=float)
    return np.asarray(cf_source(t), dtype=float)


def invert_cf(
    sample: TrainingSample,
    cf_source: CfSource,
    cfg: FourierConfig,
    grid: EvalGrid,
) -> tuple:
    """Truncated Fourier inversions of the two empirical CFs.

    Returns the real parts of

        (2 pi)^-1  integral over |t| <= cutoff of  cf_hat(t) * err_cf(t) * exp(-i t x) dt

    for the plain empirical CF (denominator path) and its response-weighted
    companion (numerator path), as two arrays aligned with the grid. The
    imaginary residue must stay below 1e-8 * (1 + |real part|), which a
    symmetric grid guarantees up to roundoff.

    Raises
    ------
    ResolutionError
        If the frequency grid has fewer than the minimum node count.
    """
    cfg = cfg.resolved(grid)
    x = grid.points
    if cfg.cutoff == 0.0:
        zero = np.zeros(len(x))
        return zero, zero.copy()
    t = symmetric_tgrid(cfg.cutoff, cfg.t_step)
    if (len(t) - 1) // 2 < MIN_NODES:
        raise ResolutionError(
            f"{(len(t) - 1) // 2} positive-frequency nodes < {MIN_NODES}"
        )
    err_vals = _error_cf_values(cf_source, t)
    plain, weighted = empirical_cfs(sample, t)

    h = cfg.t_step
    w = np.full(len(t), h)
    w[0] = w[-1] = h / 2.0
    phase = np.exp(-1j * x[:, None] * t[None, :])
    den = phase @ (plain.values * err_vals * w) / (2.0 * math.pi)
    num = phase @ (weighted.values * err_vals * w) / (2.0 * math.pi)

    for name, arr in (("denominator", den), ("numerator", num)):
        residue = np.abs(arr.imag)
        limit = _IMAG_TOL * (1.0 + np.abs(arr.real))
        if np.any(residue > limit):
            raise ValueError(
                f"{name} inversion has imaginary residue {residue.max():.3e} "
                "beyond tolerance; frequency grid is not symmetric enough"
            )
    return den.real, num.real


def fit_fourier(
    sample: TrainingSample,
    cf_source: Union[ReplicatedSample, CfSource],
    cfg: FourierConfig,
    grid: EvalGrid,
) -> RegressionCurve:
    """Fit the Fourier-inversion ratio estimator on a grid.

    ``cf_source`` may be a replicated sample (the error CF is then
    estimated from pair differences), a prebuilt CF table, an ErrorDensity
    with a closed-form CF, or a bare callable.

    Raises
    ------
    DegenerateDenominatorError
        If the inverted denominator is below the degeneracy threshold on
        the whole grid.
    """
    cfg = cfg.resolved(grid)
    meta = {"estimator": "fourier ratio", "cutoff": cfg.cutoff, "t_step": cfg.t_step}
    if isinstance(cf_source, ReplicatedSample):
        if cfg.cutoff > 0:
            t = symmetric_tgrid(cfg.cutoff, cfg.t_step)
            cf_source = error_cf_from_replicates(cf_source, t)
        meta["error_cf"] = "replicates"
    elif isinstance(cf_source, ErrorDensity):
        meta["error_cf"] = cf_source.describe()
        if cf_source.kind == "gaussian":
            # Supersmooth error: outside the polynomial-decay theory backing
            # the cutoff rates, flagged rather than rejected.
            meta["warning"] = "gaussian error CF decays faster than any polynomial"

    den, num = invert_cf(sample, cf_source, cfg, grid)
    defined = den >= DEGENERACY_THRESHOLD
    if not np.any(defined):
        raise DegenerateDenominatorError("estimate undefined on the whole grid")
    values = np.full(len(grid), np.nan)
    values[defined] = num[defined] / den[defined]
    meta["undefined"] = int(np.sum(~defined))
    return RegressionCurve(grid=grid, values=values, meta=meta)
