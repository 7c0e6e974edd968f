"""Discrimination, calibration, and nonparametric survival estimation.

Concordance follows the rank-statistic convention for right-censored
data: a pair is usable when the earlier observed time is an event (or
the times tie with exactly one event), the score of the earlier-failing
subject should be higher, and tied scores earn half credit. Evaluating
at a horizon first recodes events past the horizon as censored at the
horizon (administrative truncation).

Prediction error over time is the inverse-probability-of-censoring
weighted squared error, with weights from the product-limit estimate of
the censoring distribution.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .cohort import Cohort, Endpoint
from .errors import (
    DegenerateResample,
    DimensionMismatch,
    EmptyGroup,
    EmptyInput,
    GridOutOfRange,
    LengthMismatch,
    NonFiniteInput,
    ZeroCensoringWeight,
)

MAX_RESAMPLE_REDRAWS = 100


def _check_scores(scores, times, events):
    scores = np.asarray(scores, dtype=float)
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=bool)
    if scores.ndim != 1 or scores.shape != times.shape or times.shape != events.shape:
        raise LengthMismatch("scores, times, and events must be equal-length 1-d")
    if scores.size == 0:
        raise EmptyInput("no observations")
    if not np.all(np.isfinite(scores)):
        raise NonFiniteInput("scores must be finite")
    if not np.all(np.isfinite(times)) or np.any(times <= 0):
        raise NonFiniteInput("times must be finite and positive")
    return scores, times, events


def truncate_at_horizon(times, events, horizon: float):
    """Administrative censoring at a fixed horizon.

    Follow-up past the horizon is cut at the horizon and loses event
    status; an event exactly at the horizon is kept.
    """
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=bool)
    if not (math.isfinite(horizon) and horizon > 0):
        raise NonFiniteInput(f"horizon must be finite and positive, got {horizon}")
    t = np.minimum(times, horizon)
    e = events & (times <= horizon)
    return t, e


@dataclass(frozen=True)
class ConcordanceResult:
    """Concordance statistic with pair accounting.

    ``concordant`` already folds in the half credit for tied scores, so
    c = concordant / comparable_pairs whenever pairs exist.
    ``degenerate`` marks the no-usable-pairs case, reported as c = 0.5.
    """

    c: float
    comparable_pairs: int
    concordant: float
    tied_pairs: int
    horizon_years: Optional[float]
    degenerate: bool


def concordance(
    scores, times, events, horizon: Optional[float] = None
) -> ConcordanceResult:
    """Harrell-type concordance of risk scores against observed outcomes.

    Higher scores must predict earlier events. O(n^2) via pairwise
    comparison matrices.
    """
    scores, times, events = _check_scores(scores, times, events)
    if horizon is not None:
        times, events = truncate_at_horizon(times, events, horizon)

    t_i, t_j = times[:, None], times[None, :]
    e_j = events[None, :]
    e_i = events[:, None]
    s_i, s_j = scores[:, None], scores[None, :]

    # i is the pair member whose event defines comparability
    usable = (e_i & (t_i < t_j)) | (e_i & ~e_j & (t_i == t_j))
    n_comp = int(usable.sum())
    if n_comp == 0:
        return ConcordanceResult(
            c=0.5,
            comparable_pairs=0,
            concordant=0.0,
            tied_pairs=0,
            horizon_years=horizon,
            degenerate=True,
        )
    n_higher = int((usable & (s_i > s_j)).sum())
    n_tied = int((usable & (s_i == s_j)).sum())
    concordant = n_higher + 0.5 * n_tied
    return ConcordanceResult(
        c=float(concordant / n_comp),
        comparable_pairs=n_comp,
        concordant=concordant,
        tied_pairs=n_tied,
        horizon_years=horizon,
        degenerate=False,
    )


# --------------------------------------------------------------------------
# Bootstrap
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BootstrapCI:
    point: float
    lo95: float
    hi95: float
    n_boot: int
    redraws: int


def bootstrap_ci(
    metric: Callable,
    data,
    n_boot: int = 200,
    seed: int = 42,
    alpha: float = 0.05,
) -> BootstrapCI:
    """Percentile bootstrap interval for any row-resamplable statistic.

    ``data`` is one array or a sequence of equal-length arrays; each
    resample draws rows with replacement and calls ``metric`` on the
    resampled array(s). Resample b uses its own generator seeded by
    (seed, b), so results do not depend on evaluation order or worker
    count. A resample on which ``metric`` raises
    :class:`DegenerateResample` is redrawn from the same generator and
    counted in ``redraws``.
    """
    if n_boot < 2:
        raise EmptyInput(f"need at least 2 resamples, got {n_boot}")
    if isinstance(data, (tuple, list)):
        arrays = [np.asarray(a) for a in data]
    else:
        arrays = [np.asarray(data)]
    n = arrays[0].shape[0]
    if any(a.shape[0] != n for a in arrays):
        raise LengthMismatch("all data arrays must share their first dimension")
    if n == 0:
        raise EmptyInput("no observations")

    point = float(metric(*arrays))
    stats = np.empty(n_boot)
    redraws = 0
    for b in range(n_boot):
        rng = np.random.default_rng([seed, b])
        for _ in range(MAX_RESAMPLE_REDRAWS + 1):
            idx = rng.integers(0, n, size=n)
            try:
                stats[b] = float(metric(*(a[idx] for a in arrays)))
                break
            except DegenerateResample:
                redraws += 1
        else:
            raise DegenerateResample(
                f"resample {b}: metric undefined after "
                f"{MAX_RESAMPLE_REDRAWS} redraws"
            )
    lo, hi = np.percentile(stats, [100 * alpha / 2, 100 * (1 - alpha / 2)])
    return BootstrapCI(
        point=point,
        lo95=float(lo),
        hi95=float(hi),
        n_boot=n_boot,
        redraws=redraws,
    )


def concordance_ci(
    scores,
    times,
    events,
    horizon: Optional[float] = None,
    n_boot: int = 200,
    seed: int = 42,
) -> BootstrapCI:
    """Bootstrap interval for the concordance statistic at one horizon."""

    def metric(s, t, e):
        res = concordance(s, t, e, horizon)
        if res.degenerate:
            raise DegenerateResample("no usable pairs in resample")
        return res.c

    return bootstrap_ci(metric, (scores, times, events), n_boot=n_boot, seed=seed)


# --------------------------------------------------------------------------
# Product-limit estimation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class KMCurve:
    """Product-limit survival curve.

    Steps occur at ``times`` (unique times with at least one event);
    ``survival[k]`` is the estimate just after ``times[k]``.
    """

    times: np.ndarray
    survival: np.ndarray
    at_risk: np.ndarray
    n_events: np.ndarray

    def survival_at(self, t) -> np.ndarray:
        """Right-continuous lookup: value at the largest step time <= t."""
        t = np.asarray(t, dtype=float)
        if self.times.size == 0:  # no events anywhere: survival stays 1
            return np.ones_like(t)
        idx = np.searchsorted(self.times, t, side="right") - 1
        return np.where(
            idx < 0, 1.0, self.survival[np.clip(idx, 0, self.survival.size - 1)]
        )

    def survival_at_left(self, t) -> np.ndarray:
        """Left limit S(t-): value just before t."""
        t = np.asarray(t, dtype=float)
        if self.times.size == 0:
            return np.ones_like(t)
        idx = np.searchsorted(self.times, t, side="left") - 1
        return np.where(
            idx < 0, 1.0, self.survival[np.clip(idx, 0, self.survival.size - 1)]
        )


def kaplan_meier(times, events) -> KMCurve:
    """Product-limit estimate S(t) = prod_{t_k <= t} (1 - d_k / n_k)."""
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=bool)
    if times.ndim != 1 or times.shape != events.shape:
        raise LengthMismatch("times and events must be equal-length 1-d")
    if times.size == 0:
        raise EmptyInput("no observations")
    if not np.all(np.isfinite(times)) or np.any(times <= 0):
        raise NonFiniteInput("times must be finite and positive")

    order = np.argsort(times, kind="stable")
    ts, evs = times[order], events[order]
    event_times = np.unique(ts[evs])
    at_risk = np.empty(event_times.size, dtype=int)
    n_events = np.empty(event_times.size, dtype=int)
    for k, t_k in enumerate(event_times):
        at_risk[k] = int(np.sum(ts >= t_k))
        n_events[k] = int(np.sum(evs[ts == t_k]))
    survival = np.cumprod(1.0 - n_events / at_risk)
    return KMCurve(
        times=event_times, survival=survival, at_risk=at_risk, n_events=n_events
    )


# --------------------------------------------------------------------------
# Time-dependent prediction error
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BrierCurve:
    grid: np.ndarray
    scores: np.ndarray
    truncated: bool


def _as_prediction_matrix(pred_survival, n: int, grid: np.ndarray) -> np.ndarray:
    if callable(pred_survival):
        S = np.array(
            [[float(pred_survival(i, t)) for t in grid] for i in range(n)]
        )
    else:
        S = np.asarray(pred_survival, dtype=float)
    if S.shape != (n, grid.size):
        raise DimensionMismatch(
            f"predictions must be (n, len(grid)) = ({n}, {grid.size}), "
            f"got {S.shape}"
        )
    return S


def brier_curve(pred_survival, times, events, grid) -> BrierCurve:
    """Censoring-weighted squared prediction error over a time grid.

    ``pred_survival`` gives each subject's predicted survival at each
    grid time, either as a callable (subject_index, t) -> probability
    or as an (n, len(grid)) matrix. At grid time t a subject
    contributes

        observed event by t:  S_hat(t)^2          / G(T_i-)
        still at risk at t:   (1 - S_hat(t))^2    / G(t)
        censored by t:        0

    with G the product-limit estimate of the censoring distribution.
    Grid points where a needed weight is zero are dropped from the
    tail, with a :class:`ZeroCensoringWeight` warning.
    """
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=bool)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise EmptyInput("grid must be a nonempty 1-d array")
    if np.any(np.diff(grid) <= 0) or np.any(grid <= 0) or not np.all(np.isfinite(grid)):
        raise NonFiniteInput("grid must be finite, positive, strictly increasing")
    if times.size == 0:
        raise EmptyInput("no observations")
    if grid[-1] > times.max():
        raise GridOutOfRange(
            f"grid extends to {grid[-1]:g}, past the last observed time "
            f"{times.max():g}"
        )
    S = _as_prediction_matrix(pred_survival, times.size, grid)
    if np.any(S < 0) or np.any(S > 1) or not np.all(np.isfinite(S)):
        raise NonFiniteInput("predicted survival must lie in [0, 1]")

    G = kaplan_meier(times, ~events)
    g_at_event_left = G.survival_at_left(times)
    g_at_grid = G.survival_at(grid)

    n = times.size
    values = np.empty(grid.size)
    valid = np.ones(grid.size, dtype=bool)
    for k, t in enumerate(grid):
        had_event = events & (times <= t)
        at_risk = times > t
        if np.any(had_event & (g_at_event_left <= 0.0)) or (
            np.any(at_risk) and g_at_grid[k] <= 0.0
        ):
            valid[k] = False
            continue
        contrib = np.zeros(n)
        contrib[had_event] = S[had_event, k] ** 2 / g_at_event_left[had_event]
        contrib[at_risk] = (1.0 - S[at_risk, k]) ** 2 / g_at_grid[k]
        values[k] = contrib.mean()

    if valid.all():
        return BrierCurve(grid=grid, scores=values, truncated=False)
    # weights vanish monotonically in t, so the invalid region is a suffix
    keep = int(np.argmin(valid))
    warnings.warn(
        ZeroCensoringWeight(
            f"censoring weight reached zero at t={grid[keep]:g}; "
            f"keeping {keep} of {grid.size} grid points"
        )
    )
    if keep == 0:
        raise EmptyInput("no grid point has positive censoring weight")
    return BrierCurve(grid=grid[:keep], scores=values[:keep], truncated=True)


# --------------------------------------------------------------------------
# Grouped calibration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CalibrationGroup:
    """Observed vs predicted progression for one participant group."""

    group: object
    n: int
    km: KMCurve
    grid: np.ndarray
    observed: np.ndarray
    predicted: np.ndarray


def calibration_by_group(
    cohort: Cohort,
    group_fn: Callable,
    pred_progression,
    grid,
    endpoint: Endpoint,
    expected_groups: Optional[Sequence] = None,
) -> tuple:
    """Per-group observed and mean predicted progression curves.

    ``group_fn`` maps a participant to a group id. ``pred_progression``
    gives each subject's predicted progression probability (1 - S) at
    each grid time, as a callable (subject_index, t) or an (n, m)
    matrix aligned with cohort order. Observed progression is one
    minus the group's product-limit survival. Groups listed in
    ``expected_groups`` but absent from the cohort are skipped with an
    :class:`EmptyGroup` warning; groups are reported in sorted order.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise EmptyInput("grid must be a nonempty 1-d array")
    n = len(cohort)
    if n == 0:
        raise EmptyInput("empty cohort")
    P = _as_prediction_matrix(pred_progression, n, grid)
    if np.any(P < 0) or np.any(P > 1) or not np.all(np.isfinite(P)):
        raise NonFiniteInput("predicted progression must lie in [0, 1]")

    times, events = cohort.outcome_arrays(endpoint)
    labels = [group_fn(p) for p in cohort]
    present: dict = {}
    for i, g in enumerate(labels):
        present.setdefault(g, []).append(i)

    if expected_groups is not None:
        for g in expected_groups:
            if g not in present:
                warnings.warn(EmptyGroup(f"group {g!r} has no members; skipped"))

    out = []
    for g in sorted(present):
        idx = np.asarray(present[g], dtype=int)
        km = kaplan_meier(times[idx], events[idx])
        out.append(
            CalibrationGroup(
                group=g,
                n=int(idx.size),
                km=km,
                grid=grid,
                observed=1.0 - km.survival_at(grid),
                predicted=P[idx].mean(axis=0),
            )
        )
    return tuple(out)
