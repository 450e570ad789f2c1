"""Simulation scenarios, the quadrature oracle for the true target curve,
loss summaries, and the replication-study harness.

Scenario catalogue
------------------
``m1``        continuous response: g(w) = 3w + 20 (2 pi)^-1/2 exp(-200 (w - 1/2)^2)
              on [0, 1], predictors uniform on [0, 1], Gaussian response noise.
``logistic``  Bernoulli response with success probability exp(6w)/(1+exp(6w)),
              predictors uniform on [-1/2, 1/2].
``sine2``/``sine4``  Bernoulli with probability 0.45 sin(a pi w) + 0.5 (a = 2, 4),
              predictors uniform on [0, 1].
``constant``  synthetic sanity kind: g identically CONSTANT_LEVEL on [0, 1],
              continuous response (degenerate-noise checks use it).

Noise levels are calibrated from ratios: the predictor-noise ratio is
var(contamination)/var(predictor) and the response-noise ratio is
var(response error)/sup|g| (the latter follows the literal ratio definition
despite its unusual units).
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .data import EvalGrid, RegressionCurve, TrainingSample
from .densities import ErrorDensity
from .errors import CoarseRegError, DegenerateDenominatorError
from .inference import pointwise_ci
from .known import DEGENERACY_THRESHOLD, fit_known, regression_at
from .nw import NwConfig, cv_bandwidth, fit_nw, nw_estimate

logger = logging.getLogger(__name__)

CONSTANT_LEVEL = 0.7

_MODELS = ("m1", "logistic", "sine2", "sine4", "constant")
_BERNOULLI = ("logistic", "sine2", "sine4")

# Predictor supports; every model draws W uniformly, so var(W) = 1/12.
_SUPPORT = {
    "m1": (0.0, 1.0),
    "logistic": (-0.5, 0.5),
    "sine2": (0.0, 1.0),
    "sine4": (0.0, 1.0),
    "constant": (0.0, 1.0),
}
_PREDICTOR_VAR = 1.0 / 12.0


def regression_function(model: str, w):
    """The data-generating regression g for a model, vectorized."""
    w = np.asarray(w, dtype=float)
    if model == "m1":
        out = 3.0 * w + 20.0 / math.sqrt(2.0 * math.pi) * np.exp(
            -200.0 * (w - 0.5) ** 2
        )
    elif model == "logistic":
        out = 1.0 / (1.0 + np.exp(-6.0 * w))
    elif model in ("sine2", "sine4"):
        a = 2.0 if model == "sine2" else 4.0
        out = 0.45 * np.sin(a * math.pi * w) + 0.5
    elif model == "constant":
        out = np.full_like(w, CONSTANT_LEVEL)
    else:
        raise ValueError(f"unknown model {model!r}")
    return out if out.ndim else float(out)


@lru_cache(maxsize=None)
def regression_bound(model: str) -> float:
    """sup of |g| over the predictor support (coarse scan + golden refine)."""
    lo, hi = _SUPPORT[model]
    xs = np.linspace(lo, hi, 100_001)
    vals = np.abs(regression_function(model, xs))
    i = int(np.argmax(vals))
    a, b = xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)]
    phi = (5.0**0.5 - 1.0) / 2.0
    c, d = b - phi * (b - a), a + phi * (b - a)
    fc = abs(regression_function(model, c))
    fd = abs(regression_function(model, d))
    while b - a > 1e-12:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = abs(regression_function(model, c))
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = abs(regression_function(model, d))
    x = 0.5 * (a + b)
    return float(max(vals[i], abs(regression_function(model, x))))


@dataclass(frozen=True)
class ScenarioConfig:
    """A fully seeded simulation scenario.

    ``predictor_noise`` is var(contamination)/var(predictor);
    ``response_noise`` is var(response error)/sup|g| and must be None for
    the Bernoulli models (their response noise is intrinsic).
    """

    model: str
    n: int
    predictor_noise: float
    response_noise: Optional[float] = None
    error_kind: str = "gaussian"
    seed: int = 0

    def __post_init__(self):
        if self.model not in _MODELS:
            raise ValueError(f"model must be one of {_MODELS}, got {self.model!r}")
        if self.n < 2:
            raise ValueError(f"need n >= 2, got {self.n}")
        if self.predictor_noise < 0:
            raise ValueError("predictor_noise must be nonnegative")
        if self.error_kind not in ("gaussian", "uniform"):
            raise ValueError(f"error_kind must be gaussian or uniform, got {self.error_kind!r}")
        if self.model in _BERNOULLI:
            if self.response_noise is not None:
                raise ValueError(f"{self.model} has a Bernoulli response; response_noise must be None")
        else:
            if self.response_noise is None or self.response_noise < 0:
                raise ValueError(f"{self.model} needs a nonnegative response_noise")

    @property
    def support(self) -> tuple:
        return _SUPPORT[self.model]

    def as_dict(self) -> dict:
        return {
            "model": self.model,
            "n": self.n,
            "predictor_noise": self.predictor_noise,
            "response_noise": self.response_noise,
            "error_kind": self.error_kind,
            "seed": self.seed,
        }


def calibrate(scn: ScenarioConfig) -> tuple:
    """Noise variances implied by the scenario's ratios.

    Returns (contamination variance, response-error variance or None).
    The predictor variance is the analytic 1/12 of the uniform laws; for a
    uniform contamination the half-width is sqrt(3 * variance).
    """
    delta_var = scn.predictor_noise * _PREDICTOR_VAR
    if scn.model in _BERNOULLI:
        return delta_var, None
    return delta_var, scn.response_noise * regression_bound(scn.model)


def make_density(scn: ScenarioConfig) -> ErrorDensity:
    """The scenario's true contamination density.

    Raises
    ------
    ValueError
        For a degenerate (zero-variance) contamination, which has no
        density representation.
    """
    delta_var, _ = calibrate(scn)
    if delta_var <= 0:
        raise ValueError("degenerate contamination has no density representation")
    if scn.error_kind == "gaussian":
        return ErrorDensity.gaussian(math.sqrt(delta_var))
    return ErrorDensity.uniform(math.sqrt(3.0 * delta_var))


@dataclass(frozen=True)
class SimulatedDataset:
    """One simulated draw: precise predictors, contaminated versions, and
    responses, plus the scenario handle for oracle queries."""

    w: np.ndarray
    x: np.ndarray
    y: np.ndarray
    scenario: ScenarioConfig

    def training(self) -> TrainingSample:
        """(precise predictor, response) pairs."""
        return TrainingSample(self.w, self.y)

    def noisy_training(self) -> TrainingSample:
        """(contaminated predictor, response) pairs, for baselines."""
        return TrainingSample(self.x, self.y)


def generate(scn: ScenarioConfig, rng: Optional[np.random.Generator] = None) -> SimulatedDataset:
    """Draw one dataset. Deterministic given the generator state.

    Draw order is fixed (predictors, contamination, response noise) so a
    seeded generator reproduces the dataset bit for bit.
    """
    if rng is None:
        rng = np.random.default_rng(scn.seed)
    delta_var, eps_var = calibrate(scn)
    lo, hi = scn.support
    w = rng.uniform(lo, hi, scn.n)
    if scn.error_kind == "gaussian":
        delta = rng.normal(0.0, math.sqrt(delta_var), scn.n) if delta_var > 0 else np.zeros(scn.n)
    else:
        half = math.sqrt(3.0 * delta_var)
        delta = rng.uniform(-half, half, scn.n) if delta_var > 0 else np.zeros(scn.n)
    gw = regression_function(scn.model, w)
    if scn.model in _BERNOULLI:
        y = (rng.random(scn.n) < gw).astype(float)
    else:
        noise = rng.normal(0.0, math.sqrt(eps_var), scn.n) if eps_var > 0 else np.zeros(scn.n)
        y = gw + noise
    return SimulatedDataset(w=w, x=w + delta, y=y, scenario=scn)


# -- oracle --------------------------------------------------------------

_SIMPSON_TOL = 1e-8
_SIMPSON_START = 256
_SIMPSON_MAX = 2**20


def _simpson_adaptive(f, lo: float, hi: float, tol: float = _SIMPSON_TOL) -> float:
    """Composite Simpson with interval doubling to absolute tolerance."""
    if hi <= lo:
        return 0.0
    m = _SIMPSON_START

    def simpson(m):
        xs = np.linspace(lo, hi, m + 1)
        ys = f(xs)
        h = (hi - lo) / m
        return h / 3.0 * (ys[0] + ys[-1] + 4.0 * ys[1:-1:2].sum() + 2.0 * ys[2:-1:2].sum())

    prev = simpson(m)
    while m < _SIMPSON_MAX:
        m *= 2
        cur = simpson(m)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    return prev


@lru_cache(maxsize=200_000)
def true_regression(scn: ScenarioConfig, x: float) -> float:
    """The true target curve at ``x``: the ratio of the contamination-
    smeared response moment to the smeared predictor density, both by
    adaptive composite Simpson quadrature over the predictor support.

    Raises
    ------
    DegenerateDenominatorError
        Where the smeared predictor density vanishes (x outside the
        reachable range).
    """
    delta_var, _ = calibrate(scn)
    lo, hi = scn.support
    if delta_var == 0.0:
        if lo <= x <= hi:
            return float(regression_function(scn.model, x))
        raise DegenerateDenominatorError(f"x={x} outside the predictor support")

    if scn.error_kind == "uniform":
        half = math.sqrt(3.0 * delta_var)
        a, b = max(lo, x - half), min(hi, x + half)
        if b <= a:
            raise DegenerateDenominatorError(f"x={x} outside the contaminated support")
        num = _simpson_adaptive(lambda w: regression_function(scn.model, w), a, b)
        return num / (b - a)

    sigma = math.sqrt(delta_var)

    def kernel(w):
        return np.exp(-0.5 * ((x - w) / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))

    den = _simpson_adaptive(kernel, lo, hi)
    if den < DEGENERACY_THRESHOLD:
        raise DegenerateDenominatorError(f"smeared density below threshold at x={x}")
    num = _simpson_adaptive(lambda w: regression_function(scn.model, w) * kernel(w), lo, hi)
    return num / den


def default_grid(scn: ScenarioConfig, count: int = 101) -> EvalGrid:
    """Evaluation grid over the contaminated predictor's high-density range:
    the predictor support expanded by twice the contamination sd (Gaussian)
    or by the half-width (uniform), trimmed one spacing inside so the
    endpoints stay clear of the exact support boundary."""
    delta_var, _ = calibrate(scn)
    lo, hi = scn.support
    if scn.error_kind == "gaussian":
        e = 2.0 * math.sqrt(delta_var)
    else:
        e = math.sqrt(3.0 * delta_var)
    pts = np.linspace(lo - e, hi + e, count + 2)[1:-1]
    return EvalGrid(pts)


def integrated_squared_error(curve: RegressionCurve, scn: ScenarioConfig) -> float:
    """Trapezoid rule of (estimate - truth)^2 over the curve's grid.

    Subintervals touching an undefined point (of the curve or of the truth)
    are excluded and logged.
    """
    x = curve.grid.points
    truth = np.empty(len(x))
    for i, xi in enumerate(x):
        try:
            truth[i] = true_regression(scn, float(xi))
        except DegenerateDenominatorError:
            truth[i] = np.nan
    sq = (curve.values - truth) ** 2
    ok = np.isfinite(sq)
    both = ok[:-1] & ok[1:]
    skipped = int(np.sum(~both))
    if skipped:
        logger.info(
            "excluded %d undefined subintervals from the squared-error integral", skipped
        )
    dx = np.diff(x)[both]
    return float(np.sum(0.5 * (sq[:-1][both] + sq[1:][both]) * dx))


# -- replication studies ---------------------------------------------------


@dataclass(frozen=True)
class EstimatorSpec:
    """Which estimator a study runs on each replicate.

    ``known`` fits the ratio estimator on (precise predictor, response)
    using the scenario's true contamination density, or ``density`` when an
    explicit override is given (misspecification studies). ``nw`` fits the
    kernel baseline on (contaminated predictor, response) with an explicit
    bandwidth or leave-one-out CV.
    """

    method: str = "known"
    density: object = "true"
    bandwidth: object = "cv"

    def __post_init__(self):
        if self.method not in ("known", "nw"):
            raise ValueError(f"method must be 'known' or 'nw', got {self.method!r}")
        if self.method == "known":
            if not (self.density == "true" or isinstance(self.density, ErrorDensity)):
                raise ValueError("density must be 'true' or an ErrorDensity")

    def as_dict(self) -> dict:
        density = self.density if isinstance(self.density, str) else self.density.describe()
        out = {"method": self.method}
        if self.method == "known":
            out["density"] = density
        else:
            out["bandwidth"] = self.bandwidth if isinstance(self.bandwidth, str) else float(self.bandwidth)
        return out


@dataclass(frozen=True)
class StudyReport:
    """Deterministic summary of a replication study.

    ``ise`` is replicate-ordered (None where a replicate failed); decile
    curves are the fitted curves whose integrated-squared-error ranks sit
    at the nearest-rank first, fifth and ninth deciles.
    """

    scenario: dict
    estimator: dict
    replications: int
    master_seed: int
    grid: list
    failures: int
    ise: list
    decile_curves: dict
    coverage: dict
    rmse: dict

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "estimator": self.estimator,
            "replications": self.replications,
            "master_seed": self.master_seed,
            "grid": self.grid,
            "failures": self.failures,
            "ise": self.ise,
            "decile_curves": self.decile_curves,
            "coverage": self.coverage,
            "rmse": self.rmse,
        }

    def to_json(self) -> str:
        """Canonical JSON: sorted keys, no whitespace, NaN encoded as null."""
        return json.dumps(_jsonable(self.to_dict()), sort_keys=True, separators=(",", ":"))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def _fit_replicate(scn, spec, grid, rng, points):
    data = generate(scn, rng)
    if spec.method == "known":
        density = make_density(scn) if spec.density == "true" else spec.density
        sample = data.training()
        curve = fit_known(sample, density, grid)
        at = {p: regression_at(sample, density, p) for p in points}
    else:
        sample = data.noisy_training()
        h = cv_bandwidth(sample, NwConfig(bandwidth=spec.bandwidth))
        curve = fit_nw(sample, h, grid)
        at = {p: nw_estimate(sample, h, p) for p in points}
    return sample, curve, at


def run_replications(
    scn: ScenarioConfig,
    spec: EstimatorSpec,
    reps: int,
    grid: Optional[EvalGrid] = None,
    master_seed: int = 0,
    *,
    coverage_points: tuple = (),
    alpha: float = 0.05,
    rmse_points: tuple = (),
    threads: int = 1,
) -> StudyReport:
    """Run ``reps`` independent replicates and summarize.

    Per-replicate generators derive from (master_seed, replicate index), so
    the report is byte-identical for a given seed regardless of the thread
    count. Estimator failures are tallied, not fatal.

    Confidence-interval coverage is only defined for the known-error
    estimator.
    """
    if reps < 1:
        raise ValueError("need at least one replicate")
    if coverage_points and spec.method != "known":
        raise ValueError("coverage is only defined for the known-error estimator")
    grid = grid or default_grid(scn)
    coverage_points = tuple(float(p) for p in coverage_points)
    rmse_points = tuple(float(p) for p in rmse_points)
    points = tuple(sorted(set(coverage_points) | set(rmse_points)))
    truth_at = {p: true_regression(scn, p) for p in points}

    density_for_ci = None
    if spec.method == "known":
        density_for_ci = make_density(scn) if spec.density == "true" else spec.density

    def one(idx):
        rng = np.random.default_rng((master_seed, idx))
        try:
            sample, curve, at = _fit_replicate(scn, spec, grid, rng, points)
            out = {
                "ise": integrated_squared_error(curve, scn),
                "values": curve.values,
                "at": at,
            }
            if coverage_points:
                out["ci"] = {
                    p: pointwise_ci(sample, density_for_ci, p, alpha)
                    for p in coverage_points
                }
            return out
        except CoarseRegError as exc:
            logger.warning("replicate %d failed: %s", idx, exc)
            return None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(reps)))
    else:
        results = [one(i) for i in range(reps)]

    ok = [r for r in results if r is not None]
    failures = reps - len(ok)
    if not ok:
        raise CoarseRegError("every replicate failed")

    ise_ordered = [r["ise"] if r is not None else None for r in results]
    order = np.argsort([r["ise"] for r in ok], kind="stable")
    n_ok = len(ok)
    deciles = {}
    for label, tenth in (("d1", 1), ("d5", 5), ("d9", 9)):
        rank = math.ceil(tenth * n_ok / 10.0)
        chosen = ok[order[rank - 1]]
        deciles[label] = {
            "rank": rank,
            "ise": chosen["ise"],
            "values": [float(v) for v in chosen["values"]],
        }

    coverage = {}
    if coverage_points:
        per_point = {}
        for p in coverage_points:
            hits = sum(1 for r in ok if r["ci"][p][0] <= truth_at[p] <= r["ci"][p][1])
            per_point[repr(p)] = {
                "covered": hits,
                "total": n_ok,
                "rate": hits / n_ok,
            }
        coverage = {"alpha": alpha, "points": per_point}

    rmse = {}
    for p in rmse_points:
        errs = np.array([r["at"][p] - truth_at[p] for r in ok])
        rmse[repr(p)] = float(np.sqrt(np.mean(errs**2)))

    return StudyReport(
        scenario=scn.as_dict(),
        estimator=spec.as_dict(),
        replications=reps,
        master_seed=master_seed,
        grid=list(grid.points),
        failures=failures,
        ise=ise_ordered,
        decile_curves=deciles,
        coverage=coverage,
        rmse=rmse,
    )
