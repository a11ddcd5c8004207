"""Damped least-squares fitting and the two problem adapters built on it.

The driver is a bounded Levenberg-Marquardt loop with forward
finite-difference Jacobians: solve (J'J + lambda diag(J'J)) step = -J'r,
grow lambda tenfold on a rejected step, shrink it tenfold on an accepted
one, and project iterates back into the bounds box after every step. The
two adapters are:

* fit_sensitivity: power-law coefficients (a, b, c) of a sensitivity table.
* estimate_channel_params: channel parameters (k1, k2, gamma) from a
  measured voltage trace, seeded by a coarse log-spaced grid search and
  refined from the best grid cells.

The adhesion/detachment model is exactly degenerate under swapping k1 and
k2 while rescaling gamma (B(t; C0 g, k1, k2) = B(t; C0 g k1/k2, k2, k1)),
so channel estimates are canonicalized to k1 >= k2.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import channel as channel_mod
from .channel import TransmitterSpec
from .errors import (
    AlignmentError,
    InsufficientDataError,
    NoSignalError,
    ValidationError,
)
from .kinetics import KineticsParams
from .sensor import SensitivityCoeffs, SensitivityTable, SensorSpec
from .traceio import Trace

MAX_ITERATIONS = 200
GRADIENT_TOL = 1e-10
STEP_TOL = 1e-12
LAMBDA_INIT = 1e-3
FD_RELATIVE_STEP = 1e-6

# Jacobian condition estimate above this is reported as rank-deficient.
RANK_DEFICIENT_COND = 1e8


@dataclass
class FitProblem:
    """A bounded nonlinear least-squares problem.

    residual maps a parameter vector to a residual vector; bounds is a
    sequence of finite (lo, hi) pairs; x0 must lie inside the bounds;
    scaling holds per-parameter characteristic magnitudes used for the
    finite-difference steps (defaults to |x0| with zeros replaced by 1).
    """

    residual: callable
    bounds: tuple
    x0: np.ndarray
    scaling: np.ndarray | None = None

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float)
        lo, hi = self._bounds_arrays()
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValidationError("bounds must be finite")
        if np.any(lo >= hi):
            raise ValidationError("each bound interval must satisfy lo < hi")
        if lo.shape != self.x0.shape:
            raise ValidationError("bounds and x0 must have matching length")
        if np.any(self.x0 < lo) or np.any(self.x0 > hi):
            raise ValidationError("initial guess must lie inside the bounds")
        if self.scaling is None:
            s = np.abs(self.x0)
            s[s == 0.0] = 1.0
            self.scaling = s
        else:
            self.scaling = np.asarray(self.scaling, dtype=float)
            if np.any(self.scaling <= 0.0):
                raise ValidationError("scaling entries must be > 0")

    def _bounds_arrays(self):
        b = np.asarray(self.bounds, dtype=float)
        return b[:, 0], b[:, 1]


@dataclass(frozen=True)
class FitResult:
    """Outcome of a least-squares fit.

    mse is the mean squared residual (V^2 for trace problems), rmse its
    square root, iterations the number of accepted steps, and
    jac_condition the 2-norm condition estimate of the final Jacobian.
    """

    params: np.ndarray
    mse: float
    rmse: float
    iterations: int
    converged: bool
    jac_condition: float


@dataclass(frozen=True)
class ChannelEstimate:
    """Estimated channel parameters for one trace.

    canonical is True when the k1 >= k2 convention is in force; it is False
    only when enforcing it would push gamma below 1, in which case the
    non-canonical branch is kept. low_confidence marks a best MSE above the
    configured threshold.
    """

    k1: float
    k2: float
    gamma: float
    canonical: bool
    mse: float
    low_confidence: bool = False
    fit: FitResult | None = None

    def __post_init__(self):
        for name in ("k1", "k2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise ValidationError(f"{name} must be finite and > 0, got {v!r}")
        if not self.gamma >= 1.0 - 1e-9:
            raise ValidationError(f"gamma must be >= 1, got {self.gamma!r}")
        if self.canonical and self.k1 < self.k2:
            raise ValidationError(
                f"canonical estimate requires k1 >= k2, got ({self.k1!r}, {self.k2!r})"
            )


@dataclass(frozen=True)
class SearchConfig:
    """Grid and refinement settings for estimate_channel_params.

    The rate-constant box and the gamma ceiling are engineering defaults
    sized for seconds-scale spray signals; tighten gamma_max to the
    geometric bound (tan theta / tan theta_rv)^2 when the inner-cone angle
    has been measured.
    """

    k_min: float = 0.05
    k_max: float = 50.0
    gamma_min: float = 1.0
    gamma_max: float = 25.0
    k_grid: int = 16
    gamma_grid: int = 8
    refine_top: int = 5
    mse_threshold: float = 0.021
    flat_floor_v: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.k_min < self.k_max):
            raise ValidationError("need 0 < k_min < k_max")
        if not (1.0 <= self.gamma_min < self.gamma_max):
            raise ValidationError("need 1 <= gamma_min < gamma_max")
        if self.k_grid < 2 or self.gamma_grid < 2:
            raise ValidationError("grid sizes must be >= 2")
        if self.refine_top < 1:
            raise ValidationError("refine_top must be >= 1")


@dataclass(frozen=True)
class DistanceStats:
    """Per-distance mean and sample std of the three channel parameters."""

    s: float
    n: int
    k1_mean: float
    k1_std: float
    k2_mean: float
    k2_std: float
    gamma_mean: float
    gamma_std: float


@dataclass(frozen=True)
class TrendReport:
    """Distance trend of fitted parameters: per-distance stats plus verdicts."""

    rows: tuple
    verdicts: dict = field(default_factory=dict)


def mse(model: Trace, measured: Trace) -> float:
    """Mean squared voltage difference between two traces on one grid, V^2.

    The traces must have the same sample count and time stamps matching
    within 1e-9 s; otherwise resample one of them onto the other's grid
    first.
    """
    if len(model) != len(measured) or len(model) == 0:
        raise AlignmentError(
            f"sample counts differ ({len(model)} vs {len(measured)}) or are "
            "zero; resample onto a common grid"
        )
    if np.max(np.abs(model.times - measured.times)) > 1e-9:
        raise AlignmentError(
            "time stamps differ by more than 1e-9 s; resample onto a common grid"
        )
    diff = model.volts - measured.volts
    return float(diff @ diff) / diff.size


def _fd_jacobian(fun, p, r0, scaling, hi):
    """Forward finite-difference Jacobian with per-parameter steps.

    Steps are FD_RELATIVE_STEP * scaling; a step that would cross the upper
    bound is flipped backward so the probe stays feasible.
    """
    J = np.empty((r0.size, p.size))
    for j in range(p.size):
        h = FD_RELATIVE_STEP * scaling[j]
        if p[j] + h > hi[j]:
            h = -h
        probe = p.copy()
        probe[j] += h
        J[:, j] = (np.asarray(fun(probe), dtype=float) - r0) / h
    return J


def levenberg_marquardt(problem: FitProblem) -> FitResult:
    """Minimize 0.5 ||r(p)||^2 subject to box bounds.

    Terminates converged when the gradient's largest component drops below
    GRADIENT_TOL or the (proposed) relative step falls below STEP_TOL;
    returns converged=False after MAX_ITERATIONS or when no decreasing step
    exists at any damping (never raises for non-convergence). A non-finite
    residual at the initial guess is an input error.
    """
    lo, hi = problem._bounds_arrays()
    p = problem.x0.copy()
    r = np.asarray(problem.residual(p), dtype=float)
    if not np.all(np.isfinite(r)):
        raise ValidationError("residual is not finite at the initial guess")
    cost = 0.5 * float(r @ r)
    scaling = problem.scaling
    lam = LAMBDA_INIT
    converged = False
    accepted_steps = 0
    J = None
    while True:
        J = _fd_jacobian(problem.residual, p, r, scaling, hi)
        g = J.T @ r
        if np.max(np.abs(g)) < GRADIENT_TOL:
            converged = True
            break
        if accepted_steps >= MAX_ITERATIONS:
            break
        A = J.T @ J
        d = np.diag(A).copy()
        d[d <= 0.0] = 1.0
        step_accepted = False
        while True:
            try:
                step = np.linalg.solve(A + lam * np.diag(d), -g)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(A + lam * np.diag(d), -g, rcond=None)[0]
            if not np.all(np.isfinite(step)):
                lam *= 10.0
                if lam > 1e15:
                    break
                continue
            trial = np.clip(p + step, lo, hi)
            moved = trial - p
            if np.linalg.norm(moved) < STEP_TOL * (np.linalg.norm(p) + STEP_TOL):
                converged = True
                break
            r_trial = np.asarray(problem.residual(trial), dtype=float)
            if np.all(np.isfinite(r_trial)):
                cost_trial = 0.5 * float(r_trial @ r_trial)
            else:
                cost_trial = np.inf
            if cost_trial < cost:
                p, r, cost = trial, r_trial, cost_trial
                lam = max(lam / 10.0, 1e-14)
                accepted_steps += 1
                step_accepted = True
                break
            lam *= 10.0
            if lam > 1e15:
                break
        if converged or not step_accepted:
            break
    n = r.size
    mean_sq = float(r @ r) / n
    try:
        cond = float(np.linalg.cond(J))
    except np.linalg.LinAlgError:
        cond = math.inf
    return FitResult(
        params=p,
        mse=mean_sq,
        rmse=math.sqrt(mean_sq),
        iterations=accepted_steps,
        converged=converged,
        jac_condition=cond,
    )


def fit_sensitivity(table: SensitivityTable) -> tuple[SensitivityCoeffs, FitResult]:
    """Fit a * x^b + c to a sensitivity table by least squares.

    Needs at least 4 points with strictly increasing, positive
    concentrations. The initial guess comes from a log-log slope fit. A
    degenerate table (constant ratio column, or a rank-deficient Jacobian
    at the solution) produces a warning and converged=False.
    """
    x = table.concentration
    y = table.ratio
    if len(table) < 4:
        raise ValidationError(
            f"sensitivity fit is under-determined: need >= 4 points, got {len(table)}"
        )
    if np.any(x <= 0.0) or (x.size > 1 and not np.all(np.diff(x) > 0.0)):
        raise ValidationError("concentrations must be positive and strictly increasing")

    degenerate = float(np.ptp(y)) < 1e-12

    # Log-log slope of the shifted ratios seeds (a, b); c starts at 0.
    shifted = y - y.min() + 1e-3
    b0, log_a0 = np.polyfit(np.log(x), np.log(shifted), 1)
    b0 = float(np.clip(b0, -5.0, -0.01))
    a0 = float(np.clip(math.exp(log_a0), 1e-8, 1e3))

    def residual(p):
        return p[0] * x ** p[1] + p[2] - y

    problem = FitProblem(
        residual=residual,
        bounds=((1e-8, 1e3), (-5.0, -0.01), (-1e3, 1e3)),
        x0=np.array([a0, b0, 0.0]),
        scaling=np.array([max(a0, 1e-3), max(abs(b0), 0.1), 1.0]),
    )
    result = levenberg_marquardt(problem)
    if degenerate or result.jac_condition > RANK_DEFICIENT_COND:
        warnings.warn(
            "sensitivity table is rank-deficient for a power-law fit; "
            "coefficients are not uniquely determined",
            stacklevel=2,
        )
        result = dataclasses.replace(result, converged=False)
    coeffs = SensitivityCoeffs(
        a=float(result.params[0]), b=float(result.params[1]), c=float(result.params[2])
    )
    return coeffs, result


def _swap_scale(k1: float, k2: float, gamma: float) -> tuple[float, float, float]:
    """The parameter triple equivalent under the swap-scale degeneracy."""
    return k2, k1, gamma * k1 / k2


def canonicalize(k1: float, k2: float, gamma: float, gamma_min: float = 1.0):
    """Map an estimate onto the k1 >= k2 branch when gamma allows it.

    Returns (k1, k2, gamma, canonical). The mirror triple is exact, so this
    never changes the modeled voltages.
    """
    if k1 >= k2:
        return k1, k2, gamma, True
    m1, m2, mg = _swap_scale(k1, k2, gamma)
    if mg >= gamma_min * (1.0 - 1e-12):
        return m1, m2, max(mg, gamma_min), True
    return k1, k2, gamma, False


def estimate_channel_params(
    measured: Trace,
    tx: TransmitterSpec,
    sensor: SensorSpec,
    s: float,
    search: SearchConfig | None = None,
) -> ChannelEstimate:
    """Estimate (k1, k2, gamma) of a preprocessed voltage trace.

    Stage 1 scores every cell of a log-spaced (k1, k2, gamma) grid by MSE
    against the trace; stage 2 refines the best refine_top cells with
    levenberg_marquardt and keeps the lowest-MSE result, ties broken by the
    lexicographically smallest triple. The result is canonicalized to
    k1 >= k2. The gamma field of tx is ignored; gamma is estimated.

    Raises NoSignalError for a flat trace. A best MSE above
    search.mse_threshold only sets low_confidence, it is not an error.
    """
    if search is None:
        search = SearchConfig()
    if not (math.isfinite(s) and s > 0.0):
        raise ValidationError(f"distance s must be finite and > 0, got {s!r}")
    if len(measured) == 0:
        raise ValidationError("cannot fit an empty trace")
    if float(np.ptp(measured.volts)) < search.flat_floor_v:
        raise NoSignalError(
            f"trace peak-to-peak span is below {search.flat_floor_v} V; "
            "nothing to fit"
        )

    times = measured.times
    meas_v = measured.volts

    def model(k1, k2, gamma):
        return channel_mod.response_voltages(
            dataclasses.replace(tx, gamma=gamma),
            KineticsParams(k1, k2),
            sensor,
            s,
            times,
        )

    # Extreme corners of the search box can drive the fitted power law past
    # its positive range; such cells are simply not candidates.
    k_nodes = np.geomspace(search.k_min, search.k_max, search.k_grid)
    g_nodes = np.geomspace(search.gamma_min, search.gamma_max, search.gamma_grid)
    cells = []
    for k1 in k_nodes:
        for k2 in k_nodes:
            for gamma in g_nodes:
                try:
                    diff = model(k1, k2, gamma) - meas_v
                except ValidationError:
                    continue
                cells.append(
                    (float(diff @ diff) / diff.size, float(k1), float(k2), float(gamma))
                )
    if not cells:
        raise ValidationError(
            "model is not evaluable anywhere in the search box; check the "
            "transmitter and sensor configuration"
        )
    cells.sort(key=lambda cell: cell)

    bounds = (
        (search.k_min, search.k_max),
        (search.k_min, search.k_max),
        (search.gamma_min, search.gamma_max),
    )

    def residual(p):
        try:
            return model(p[0], p[1], p[2]) - meas_v
        except ValidationError:
            # out of the sensitivity curve's range: infinitely bad, rejected
            return np.full(meas_v.size, np.inf)

    candidates = []
    for _, k1, k2, gamma in cells[: search.refine_top]:
        x0 = np.array([k1, k2, gamma])
        problem = FitProblem(
            residual=residual,
            bounds=bounds,
            x0=x0,
            scaling=np.maximum(np.abs(x0), 1e-3),
        )
        result = levenberg_marquardt(problem)
        candidates.append((result.mse, tuple(result.params), result))
    candidates.sort(key=lambda cand: (cand[0], cand[1]))
    best_mse, (k1, k2, gamma), best_fit = candidates[0]
    k1, k2, gamma, canonical = canonicalize(k1, k2, gamma, search.gamma_min)
    return ChannelEstimate(
        k1=k1,
        k2=k2,
        gamma=gamma,
        canonical=canonical,
        mse=best_mse,
        low_confidence=best_mse > search.mse_threshold,
        fit=best_fit,
    )


def _spread_verdict(values: np.ndarray) -> str:
    """Classify per-distance means: near-constant, monotone, or neither."""
    mean = float(np.mean(values))
    if mean != 0.0 and float(np.max(np.abs(values - mean))) / abs(mean) <= 0.05:
        return "within +/-5% of mean"
    diffs = np.diff(values)
    if np.all(diffs < 0.0):
        return "strictly decreasing"
    if np.all(diffs > 0.0):
        return "strictly increasing"
    return "non-monotonic"


def distance_trend(estimates) -> TrendReport:
    """Aggregate channel estimates by distance and judge their trends.

    estimates is an iterable of (s, ChannelEstimate) pairs; at least two
    distinct distances are required. Duplicate distances are averaged
    (sample std, ddof = 1, reported as 0 for singletons). Verdicts classify
    the per-distance means of k1, k2, and gamma.
    """
    groups: dict[float, list[ChannelEstimate]] = {}
    for s, est in estimates:
        groups.setdefault(float(s), []).append(est)
    if len(groups) < 2:
        raise InsufficientDataError(
            f"need estimates at >= 2 distinct distances, got {len(groups)}"
        )

    def stats(values):
        arr = np.asarray(values, dtype=float)
        std = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
        return float(arr.mean()), std

    rows = []
    for s in sorted(groups):
        ests = groups[s]
        k1_m, k1_s = stats([e.k1 for e in ests])
        k2_m, k2_s = stats([e.k2 for e in ests])
        g_m, g_s = stats([e.gamma for e in ests])
        rows.append(
            DistanceStats(
                s=s,
                n=len(ests),
                k1_mean=k1_m,
                k1_std=k1_s,
                k2_mean=k2_m,
                k2_std=k2_s,
                gamma_mean=g_m,
                gamma_std=g_s,
            )
        )
    verdicts = {
        "k1": _spread_verdict(np.array([r.k1_mean for r in rows])),
        "k2": _spread_verdict(np.array([r.k2_mean for r in rows])),
        "gamma": _spread_verdict(np.array([r.gamma_mean for r in rows])),
    }
    return TrendReport(rows=tuple(rows), verdicts=verdicts)
