"""Proportional-hazards core: partial likelihood, Newton solver, baseline.

The estimation target is the regression vector beta of a relative-hazard
model h(t|x) = h0(t) * exp(x'beta), fit by maximizing the partial
likelihood with either Efron or Breslow handling of tied failure times.
Newton iteration with step-halving is used; the observed information
matrix is inverted for standard errors.

Everything here works on plain arrays. The cohort-level wrappers that
assemble covariates and bundle results live in the model module.

Absolute risks come from the Breslow baseline cumulative hazard:
S(t|x) = S0(t) ** exp(x'beta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyInput,
    LengthMismatch,
    MonotoneLikelihood,
    NoEvents,
    Nonconvergence,
    NonFiniteInput,
    SingularInformation,
)

# beta magnitudes beyond this are treated as divergence toward infinity
# (monotone partial likelihood, e.g. a covariate perfectly separating
# events from censorings)
BETA_DIVERGENCE_LIMIT = 50.0

MAX_STEP_HALVINGS = 20

# Phi^{-1}(0.975), used for 95% Wald intervals
Z975 = 1.959963984540054


def _check_arrays(X, times, events):
    X = np.asarray(X, dtype=float)
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=bool)
    if X.ndim != 2:
        raise DimensionMismatch(f"X must be 2-d, got shape {X.shape}")
    if X.shape[0] == 0:
        raise EmptyInput("no observations")
    if X.shape[1] == 0:
        raise EmptyInput("X must have at least one column")
    n = X.shape[0]
    if times.shape != (n,) or events.shape != (n,):
        raise LengthMismatch(
            f"times/events must have length {n}, got {times.shape} / {events.shape}"
        )
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput("X contains non-finite values")
    if not np.all(np.isfinite(times)) or np.any(times <= 0):
        raise NonFiniteInput("times must be finite and positive")
    if not events.any():
        raise NoEvents("no events observed; partial likelihood is constant")
    return X, times, events


@dataclass(frozen=True)
class _SurvData:
    """Observations presorted by descending time, grouped by unique time.

    ``starts[k]:starts[k+1]`` slices the k-th group (one unique time,
    largest first), so a single forward pass grows the risk set by one
    group before handling that group's failures.
    """

    X: np.ndarray
    events: np.ndarray
    starts: np.ndarray
    n_events: int
    ties: str

    @classmethod
    def build(cls, X, times, events, ties: str) -> "_SurvData":
        if ties not in ("efron", "breslow"):
            raise ValueError(f"ties must be 'efron' or 'breslow', got {ties!r}")
        X, times, events = _check_arrays(X, times, events)
        order = np.argsort(-times, kind="stable")
        ts = times[order]
        boundaries = np.flatnonzero(np.diff(ts) != 0) + 1
        starts = np.concatenate(([0], boundaries, [ts.size]))
        return cls(
            X=X[order],
            events=events[order],
            starts=starts,
            n_events=int(events.sum()),
            ties=ties,
        )


def _eval_partial(data: _SurvData, beta: np.ndarray, want_derivs: bool):
    """Log partial likelihood at beta; optionally gradient and hessian.

    One pass over unique times in decreasing order, maintaining the
    risk-set accumulators sum(w), sum(w x), sum(w x x') where
    w = exp(eta). eta is shifted by its max first, which leaves the
    partial likelihood and its derivatives unchanged.
    """
    X, ev, starts = data.X, data.events, data.starts
    p = X.shape[1]
    eta = X @ beta
    eta = eta - eta.max()
    w = np.exp(eta)

    ll = 0.0
    grad = np.zeros(p) if want_derivs else None
    hess = np.zeros((p, p)) if want_derivs else None
    xp0 = 0.0
    xp1 = np.zeros(p)
    xp2 = np.zeros((p, p))

    for k in range(starts.size - 1):
        lo, hi = starts[k], starts[k + 1]
        Xg = X[lo:hi]
        wg = w[lo:hi]
        xp0 += wg.sum()
        xp1 += wg @ Xg
        if want_derivs:
            xp2 += (Xg * wg[:, None]).T @ Xg

        dead = ev[lo:hi]
        m = int(dead.sum())
        if m == 0:
            continue
        Xd = Xg[dead]
        wd = wg[dead]
        ll += eta[lo:hi][dead].sum()
        if want_derivs:
            grad += Xd.sum(axis=0)

        if data.ties == "breslow":
            ll -= m * math.log(xp0)
            if want_derivs:
                v = xp1 / xp0
                grad -= m * v
                hess -= m * (xp2 / xp0 - np.outer(v, v))
        else:
            xp0d = wd.sum()
            xp1d = wd @ Xd
            xp2d = (Xd * wd[:, None]).T @ Xd if want_derivs else None
            for j in range(m):
                f = j / m
                denom = xp0 - f * xp0d
                ll -= math.log(denom)
                if want_derivs:
                    v = (xp1 - f * xp1d) / denom
                    grad -= v
                    hess -= (xp2 - f * xp2d) / denom - np.outer(v, v)

    if want_derivs:
        return ll, grad, hess
    return ll


def partial_loglik(beta, X, times, events, ties: str = "efron"):
    """Log partial likelihood with its exact gradient and hessian.

    Returns (ll, gradient, hessian) under the stated tie convention.
    """
    beta = np.asarray(beta, dtype=float)
    data = _SurvData.build(X, times, events, ties)
    if beta.shape != (data.X.shape[1],):
        raise DimensionMismatch(
            f"beta must have length {data.X.shape[1]}, got {beta.shape}"
        )
    ll, grad, hess = _eval_partial(data, beta, want_derivs=True)
    return float(ll), grad, hess


@dataclass(frozen=True)
class CoxFitResult:
    """Maximum partial-likelihood estimate with curvature diagnostics.

    ``info_inverse`` is the inverse observed information (variance of
    the estimate); ``ll_path`` records the log partial likelihood after
    each accepted Newton step, starting with the initial point.
    """

    beta: np.ndarray
    loglik: float
    info_inverse: np.ndarray
    iterations: int
    gradient_norm: float
    converged: bool
    ties: str
    n: int
    n_events: int
    ll_path: tuple = field(default=())

    @property
    def standard_errors(self) -> np.ndarray:
        return np.sqrt(np.diag(self.info_inverse))


def newton_fit(
    X,
    times,
    events,
    ties: str = "efron",
    tol: float = 1e-8,
    max_iter: int = 100,
    init: Optional[np.ndarray] = None,
) -> CoxFitResult:
    """Maximize the partial likelihood by Newton iteration.

    Each step solves the observed-information system and backtracks by
    halving (at most ``MAX_STEP_HALVINGS`` times) until the likelihood
    improves. Convergence is max-norm of the gradient below ``tol``.

    Raises :class:`MonotoneLikelihood` when an estimate diverges past
    ``BETA_DIVERGENCE_LIMIT``, :class:`SingularInformation` when the
    information matrix cannot be solved, and :class:`Nonconvergence`
    (carrying the partial fit in ``exc.model``) when the iteration or
    the backtracking budget is exhausted.
    """
    data = _SurvData.build(X, times, events, ties)
    p = data.X.shape[1]
    beta = np.zeros(p) if init is None else np.asarray(init, dtype=float).copy()
    if beta.shape != (p,):
        raise DimensionMismatch(f"init must have length {p}, got {beta.shape}")

    ll, grad, hess = _eval_partial(data, beta, want_derivs=True)
    ll_path = [ll]
    iterations = 0

    def result(converged: bool) -> CoxFitResult:
        try:
            info_inv = np.linalg.inv(-hess)
        except np.linalg.LinAlgError:
            raise SingularInformation(
                "observed information matrix is singular"
            ) from None
        return CoxFitResult(
            beta=beta,
            loglik=ll,
            info_inverse=info_inv,
            iterations=iterations,
            gradient_norm=float(np.abs(grad).max()),
            converged=converged,
            ties=ties,
            n=data.X.shape[0],
            n_events=data.n_events,
            ll_path=tuple(ll_path),
        )

    for iterations in range(max_iter + 1):
        if np.abs(grad).max() < tol:
            return result(converged=True)
        if iterations == max_iter:
            break
        try:
            step = np.linalg.solve(-hess, grad)
        except np.linalg.LinAlgError:
            raise SingularInformation(
                "observed information matrix is singular"
            ) from None

        accepted = False
        alpha = 1.0
        for _ in range(MAX_STEP_HALVINGS + 1):
            cand = beta + alpha * step
            ll_new = _eval_partial(data, cand, want_derivs=False)
            if math.isfinite(ll_new) and ll_new > ll - 1e-12 * (abs(ll) + 1.0):
                accepted = True
                break
            alpha *= 0.5

        if not accepted:
            exc = Nonconvergence(
                f"no improving step after {MAX_STEP_HALVINGS} halvings "
                f"at iteration {iterations + 1}"
            )
            exc.model = result(converged=False)
            raise exc

        beta = cand
        if np.abs(beta).max() > BETA_DIVERGENCE_LIMIT:
            raise MonotoneLikelihood(
                "coefficient diverging; the partial likelihood appears "
                "monotone (a covariate may perfectly separate outcomes)"
            )
        ll, grad, hess = _eval_partial(data, beta, want_derivs=True)
        ll_path.append(ll)

    exc = Nonconvergence(f"not converged after {max_iter} iterations")
    exc.model = result(converged=False)
    raise exc


# --------------------------------------------------------------------------
# Baseline survival and prediction
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BaselineSurvival:
    """Step-function baseline survival S0 on the event-time grid.

    ``knots`` are the unique observed event times (ascending) and
    ``s0`` the baseline survival just after each. Lookups are
    right-continuous: S0(t) = s0[k] for the largest knot <= t, and 1
    before the first knot. Queries beyond the last knot clamp to the
    final value and are reported as extrapolated.
    """

    knots: np.ndarray
    s0: np.ndarray

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        s0 = np.asarray(self.s0, dtype=float)
        if knots.ndim != 1 or knots.shape != s0.shape:
            raise DimensionMismatch("knots and s0 must be equal-length 1-d arrays")
        if knots.size == 0:
            raise EmptyInput("baseline needs at least one event time")
        if np.any(np.diff(knots) <= 0):
            raise NonFiniteInput("knots must be strictly increasing")
        if np.any(s0 <= 0) or np.any(s0 > 1) or np.any(np.diff(s0) > 0):
            raise NonFiniteInput("s0 must be nonincreasing within (0, 1]")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "s0", s0)

    @property
    def horizon_limit(self) -> float:
        return float(self.knots[-1])

    def survival_at(self, t) -> np.ndarray:
        """S0 evaluated at times t (scalar or array), clamped past the grid."""
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.knots, t, side="right") - 1
        return np.where(idx < 0, 1.0, self.s0[np.clip(idx, 0, self.s0.size - 1)])

    def extrapolated_at(self, t) -> np.ndarray:
        return np.asarray(t, dtype=float) > self.horizon_limit

    def cumulative_hazard(self) -> np.ndarray:
        return -np.log(self.s0)


def baseline_from_arrays(X, times, events, beta) -> BaselineSurvival:
    """Baseline cumulative hazard via the Breslow estimator.

    H0(t) = sum over event times t_k <= t of d_k / sum_{risk set k}
    exp(eta_i), with S0 = exp(-H0). The linear predictors are centered
    before exponentiating; the centering is undone on each increment.
    """
    X, times, events = _check_arrays(X, times, events)
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (X.shape[1],):
        raise DimensionMismatch(f"beta must have length {X.shape[1]}")
    eta = X @ beta
    shift = eta.max()
    w = np.exp(eta - shift)

    order = np.argsort(times, kind="stable")
    ts, evs = times[order], events[order]
    # risk sum at time t: total weight of subjects with time >= t
    rev_cum = np.cumsum(w[::-1])[::-1]

    event_times = np.unique(ts[evs])
    increments = np.empty(event_times.size)
    for k, t_k in enumerate(event_times):
        i = np.searchsorted(ts, t_k, side="left")
        d_k = int(np.sum(evs[ts == t_k]))
        increments[k] = d_k / rev_cum[i] * math.exp(-shift)
    h0 = np.cumsum(increments)
    return BaselineSurvival(knots=event_times, s0=np.exp(-h0))


@dataclass(frozen=True)
class RiskProfile:
    """Absolute progression risks for one subject at requested horizons.

    ``extrapolated[k]`` marks horizons beyond the training follow-up,
    where the risk is held at the last estimable value.
    """

    horizons: tuple
    absolute_risk: np.ndarray
    linear_predictor: float
    extrapolated: tuple


def survival_matrix(baseline: BaselineSurvival, eta, horizons) -> np.ndarray:
    """S(t|x) = S0(t) ** exp(eta); subjects on rows, horizons on columns."""
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    horizons = np.atleast_1d(np.asarray(horizons, dtype=float))
    if not np.all(np.isfinite(eta)):
        raise NonFiniteInput("linear predictors must be finite")
    if not np.all(np.isfinite(horizons)) or np.any(horizons < 0):
        raise NonFiniteInput("horizons must be finite and nonnegative")
    s0 = baseline.survival_at(horizons)
    return s0[None, :] ** np.exp(eta)[:, None]


def risk_profile(baseline: BaselineSurvival, eta: float, horizons) -> RiskProfile:
    horizons = tuple(float(h) for h in horizons)
    surv = survival_matrix(baseline, [eta], horizons)[0]
    flags = tuple(bool(f) for f in baseline.extrapolated_at(np.asarray(horizons)))
    return RiskProfile(
        horizons=horizons,
        absolute_risk=1.0 - surv,
        linear_predictor=float(eta),
        extrapolated=flags,
    )


# --------------------------------------------------------------------------
# Wald inference
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class WaldRow:
    name: str
    coef: float
    se: float
    z: float
    p: float
    hazard_ratio: float
    hr_lo95: float
    hr_hi95: float


def wald_rows(names, beta, info_inverse) -> tuple:
    """Per-covariate Wald tests: z = coef / se, two-sided normal p-value,
    hazard ratio exp(coef) with 95% interval exp(coef +/- z_.975 * se)."""
    beta = np.asarray(beta, dtype=float)
    names = tuple(names)
    cov = np.asarray(info_inverse, dtype=float)
    if cov.shape != (beta.size, beta.size) or len(names) != beta.size:
        raise DimensionMismatch("names, beta, and info_inverse must align")
    se = np.sqrt(np.diag(cov))
    rows = []
    for j, name in enumerate(names):
        if se[j] > 0:
            z = beta[j] / se[j]
            p = math.erfc(abs(z) / math.sqrt(2.0))
        else:
            z = math.inf if beta[j] > 0 else (-math.inf if beta[j] < 0 else 0.0)
            p = 0.0 if beta[j] != 0 else 1.0
        rows.append(
            WaldRow(
                name=name,
                coef=float(beta[j]),
                se=float(se[j]),
                z=float(z),
                p=float(p),
                hazard_ratio=math.exp(beta[j]),
                hr_lo95=math.exp(beta[j] - Z975 * se[j]),
                hr_hi95=math.exp(beta[j] + Z975 * se[j]),
            )
        )
    return tuple(rows)
