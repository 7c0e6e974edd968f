"""L1-regularized proportional-hazards paths for feature screening.

Fits the penalized partial likelihood

    maximize  ll(beta) - n_events * lambda * P(beta)
    P(beta) = l1_ratio * |beta|_1 + (1 - l1_ratio)/2 * |beta|_2^2

over a descending log-spaced lambda grid with warm starts (pure lasso
at the default l1_ratio = 1). Each path point runs outer reweighting
steps (a diagonal quadratic expansion of the partial likelihood in the
linear predictors) around cyclic coordinate descent with soft
thresholding on the active set, and is accepted only when the exact
subgradient conditions hold:

    active j:    |score_j - lam_e * (l1_ratio * sign(beta_j)
                              + (1 - l1_ratio) * beta_j)| < KKT_TOL * n_events
    inactive j:  |score_j| < lam_e * l1_ratio + KKT_TOL * n_events

with lam_e = n_events * lambda and score the exact partial-likelihood
gradient. Tied failure times use the Breslow form throughout.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .cohort import Cohort, Endpoint
from .cox import _check_arrays
from .errors import EmptyPath, NoFeatures, NotConverged, ValidationError
from .metrics import concordance

KKT_TOL = 1e-5
MAX_OUTER = 100
MAX_SWEEPS = 1000
MAX_BACKTRACKS = 30


@dataclass(frozen=True)
class _LassoData:
    """Static sort/grouping structure reused across path points.

    Rows are sorted by ascending time. ``event_slot[i]`` is the index
    of the last unique event time at or before subject i's time (-1 if
    none), and ``risk_start[k]`` the first sorted row belonging to the
    risk set of event time k.
    """

    X: np.ndarray
    events: np.ndarray
    d: np.ndarray
    event_slot: np.ndarray
    risk_start: np.ndarray
    n_events: int

    @classmethod
    def build(cls, X, times, events) -> "_LassoData":
        X, times, events = _check_arrays(X, times, events)
        order = np.argsort(times, kind="stable")
        ts = times[order]
        evs = events[order]
        event_times, d = np.unique(ts[evs], return_counts=True)
        return cls(
            X=np.ascontiguousarray(X[order]),
            events=evs,
            d=d.astype(float),
            event_slot=np.searchsorted(event_times, ts, side="right") - 1,
            risk_start=np.searchsorted(ts, event_times, side="left"),
            n_events=int(evs.sum()),
        )

    def quantities(self, eta: np.ndarray):
        """Breslow log-likelihood, per-subject gradient, curvature weights.

        eta is shifted by its max before exponentiating; the shift
        cancels in every returned quantity except the likelihood, where
        it is added back explicitly. The curvature weights are the
        diagonal of the negative hessian in eta space, floored at zero.
        """
        shift = eta.max()
        w = np.exp(eta - shift)
        rev_cum = np.cumsum(w[::-1])[::-1]
        xp0 = rev_cum[self.risk_start]
        a1 = np.cumsum(self.d / xp0)
        a2 = np.cumsum(self.d / xp0**2)
        c_i = np.where(self.event_slot >= 0, a1[self.event_slot], 0.0)
        d_i = np.where(self.event_slot >= 0, a2[self.event_slot], 0.0)
        grad_eta = self.events - w * c_i
        weights = np.maximum(w * c_i - w**2 * d_i, 0.0)
        ll = float(eta[self.events].sum() - np.sum(self.d * (np.log(xp0) + shift)))
        return ll, grad_eta, weights


def _kkt_violations(score, beta, lam_e, l1_ratio, tol_abs):
    active = beta != 0.0
    target = lam_e * (l1_ratio * np.sign(beta) + (1.0 - l1_ratio) * beta)
    bad_active = active & (np.abs(score - target) >= tol_abs)
    bad_inactive = ~active & (np.abs(score) >= lam_e * l1_ratio + tol_abs)
    return bad_active | bad_inactive


def _soft(z: float, threshold: float) -> float:
    if z > threshold:
        return z - threshold
    if z < -threshold:
        return z + threshold
    return 0.0


def _cd_solve(X, grad_eta, weights, beta0, active, lam_e, l1_ratio, tol):
    """Coordinate descent on the quadratic expansion around beta0.

    Maximizes g'(X(u - b0)) - 0.5 (X(u - b0))' W (X(u - b0)) minus the
    penalty, sweeping the active coordinates until the largest single
    update falls below tol.
    """
    u = beta0.copy()
    r = grad_eta.copy()  # residual: grad_eta - W X (u - beta0)
    cols = np.flatnonzero(active)
    a = np.array([(weights * X[:, j] ** 2).sum() for j in cols])
    ridge = lam_e * (1.0 - l1_ratio)
    thresh = lam_e * l1_ratio
    for _ in range(MAX_SWEEPS):
        delta_max = 0.0
        for j, a_j in zip(cols, a):
            if a_j + ridge <= 0.0:
                continue
            xj = X[:, j]
            z = xj @ r + a_j * u[j]
            new = _soft(z, thresh) / (a_j + ridge)
            step = new - u[j]
            if step != 0.0:
                r -= weights * xj * step
                u[j] = new
                delta_max = max(delta_max, abs(step))
        if delta_max < tol:
            return u
    raise NotConverged(
        f"coordinate descent did not settle within {MAX_SWEEPS} sweeps"
    )


@dataclass(frozen=True)
class RegularizationPath:
    """Coefficients along a descending lambda grid.

    ``coefficients[k]`` solves the penalized problem at ``lambdas[k]``;
    ``loglik[k]`` is the unpenalized partial likelihood there. The
    first grid point is lambda_max, where the solution is exactly zero.
    """

    lambdas: np.ndarray
    coefficients: np.ndarray
    loglik: np.ndarray
    n_events: int
    l1_ratio: float = 1.0

    @property
    def nonzero_counts(self) -> np.ndarray:
        return (self.coefficients != 0.0).sum(axis=1)


def lasso_cox_path(
    X,
    times,
    events,
    n_lambda: int = 100,
    lambda_min_ratio: float = 0.01,
    tol: float = 1e-7,
    lambdas=None,
    l1_ratio: float = 1.0,
) -> RegularizationPath:
    """Solve the penalized path with warm starts.

    The default grid runs log-spaced from lambda_max (smallest lambda
    with the all-zero solution) down to lambda_max * lambda_min_ratio.
    """
    if not (0.0 < l1_ratio <= 1.0):
        raise ValidationError(f"l1_ratio must be in (0, 1], got {l1_ratio}")
    data = _LassoData.build(X, times, events)
    n, p = data.X.shape
    ne = data.n_events

    _, grad_eta0, _ = data.quantities(np.zeros(n))
    score0 = data.X.T @ grad_eta0
    lam_max = float(np.abs(score0).max()) / (ne * l1_ratio)
    if lambdas is None:
        if lam_max <= 0.0:
            raise EmptyPath("all coordinates have zero score at beta = 0")
        lambdas = lam_max * np.exp(
            np.linspace(0.0, np.log(lambda_min_ratio), n_lambda)
        )
    else:
        lambdas = np.sort(np.asarray(lambdas, dtype=float))[::-1].copy()
        if lambdas.size == 0 or np.any(lambdas <= 0):
            raise EmptyPath("lambda grid must be nonempty and positive")

    coefs = np.zeros((lambdas.size, p))
    logliks = np.empty(lambdas.size)
    beta = np.zeros(p)
    tol_abs = KKT_TOL * ne

    def penalty(b):
        return l1_ratio * np.abs(b).sum() + 0.5 * (1.0 - l1_ratio) * b @ b

    ll, grad_eta, weights = data.quantities(data.X @ beta)
    for k, lam in enumerate(lambdas):
        lam_e = lam * ne
        p_obj = ll - lam_e * penalty(beta)
        for _ in range(MAX_OUTER):
            score = data.X.T @ grad_eta
            violations = _kkt_violations(score, beta, lam_e, l1_ratio, tol_abs)
            if not violations.any():
                break
            active = (beta != 0.0) | violations
            cand = _cd_solve(
                data.X, grad_eta, weights, beta, active, lam_e, l1_ratio, tol
            )
            # the quadratic model can overshoot when curvature changes
            # fast (p >> n, near-separation); halve back toward the
            # current iterate until the penalized objective improves
            for _ in range(MAX_BACKTRACKS):
                ll_c, grad_c, w_c = data.quantities(data.X @ cand)
                cand_obj = ll_c - lam_e * penalty(cand)
                if cand_obj >= p_obj - 1e-12 * (abs(p_obj) + 1.0):
                    break
                cand = 0.5 * (beta + cand)
            else:
                raise NotConverged(
                    f"path point {k} (lambda={lam:.6g}): no improving step"
                )
            beta, ll, grad_eta, weights = cand, ll_c, grad_c, w_c
            p_obj = ll - lam_e * penalty(beta)
        else:
            raise NotConverged(
                f"path point {k} (lambda={lam:.6g}) failed the subgradient "
                f"check after {MAX_OUTER} reweighting steps"
            )
        coefs[k] = beta
        logliks[k] = ll
    return RegularizationPath(
        lambdas=np.asarray(lambdas, dtype=float),
        coefficients=coefs,
        loglik=logliks,
        n_events=ne,
        l1_ratio=l1_ratio,
    )


def lasso_path_for_cohort(
    cohort: Cohort, endpoint: Endpoint, **kwargs
) -> RegularizationPath:
    """Run the path on a cohort's (already standardized) deep features."""
    if not cohort.has_features:
        raise NoFeatures("cohort carries no deep features")
    times, events = cohort.outcome_arrays(endpoint)
    return lasso_cox_path(cohort.feature_matrix(), times, events, **kwargs)


def choose_lambda(path: RegularizationPath, X_dev, times_dev, events_dev) -> int:
    """Index of the path point whose scores discriminate best on held-out
    data (concordance over all follow-up). Ties go to the larger lambda."""
    X_dev = np.asarray(X_dev, dtype=float)
    best_k, best_c = 0, -np.inf
    for k in range(path.lambdas.size):
        c = concordance(X_dev @ path.coefficients[k], times_dev, events_dev).c
        if c > best_c + 1e-12:
            best_k, best_c = k, c
    return best_k


def select_features(path: RegularizationPath, lambda_index: int, k: int = 16) -> tuple:
    """Column indices of the k largest-magnitude nonzero coefficients at
    one path point, in ascending column order (so ranking ties resolve
    to the lower index). Fewer than k are returned when the solution has
    fewer active coordinates; the all-zero solution selects nothing."""
    if path.lambdas.size == 0:
        raise EmptyPath("empty regularization path")
    if not (0 <= lambda_index < path.lambdas.size):
        raise EmptyPath(f"lambda index {lambda_index} outside the path")
    coef = path.coefficients[lambda_index]
    nonzero = np.flatnonzero(coef)
    if nonzero.size == 0:
        return ()
    ranked = nonzero[np.argsort(-np.abs(coef[nonzero]), kind="stable")]
    return tuple(sorted(int(j) for j in ranked[:k]))


def path_to_csv(path: RegularizationPath) -> str:
    """Audit export: one row per path point with all coefficients."""
    p = path.coefficients.shape[1]
    buf = io.StringIO()
    buf.write("lambda,nonzero_count" + "".join(f",beta_{j}" for j in range(p)) + "\n")
    counts = path.nonzero_counts
    for k in range(path.lambdas.size):
        row = [repr(float(path.lambdas[k])), str(int(counts[k]))]
        row += [repr(float(v)) for v in path.coefficients[k]]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()
