import math

import numpy as np
import pytest

import oracles
from prognos.cox import (
    BaselineSurvival,
    Z975,
    baseline_from_arrays,
    newton_fit,
    partial_loglik,
    risk_profile,
    survival_matrix,
    wald_rows,
)
from prognos.errors import (
    DimensionMismatch,
    MonotoneLikelihood,
    NoEvents,
    Nonconvergence,
    NonFiniteInput,
    SingularInformation,
)


def _instance(seed, n=40, p=3, tie_prob=0.0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    times = rng.exponential(4.0, size=n) + 0.1
    if tie_prob > 0:
        times = np.ceil(times * 2) / 2  # force heavy ties on a half-grid
    events = rng.uniform(size=n) < 0.7
    if not events.any():
        events[0] = True
    return X, times, events


@pytest.mark.parametrize("ties", ["efron", "breslow"])
def test_loglik_matches_direct_definition(ties):
    for seed in range(6):
        X, t, e = _instance(seed, tie_prob=0.5 if seed % 2 else 0.0)
        beta = np.random.default_rng(100 + seed).uniform(-0.8, 0.8, size=3)
        ll, _, _ = partial_loglik(beta, X, t, e, ties=ties)
        assert ll == pytest.approx(oracles.partial_loglik(beta, X, t, e, ties), abs=1e-10)


@pytest.mark.parametrize("ties", ["efron", "breslow"])
def test_derivatives_match_finite_differences(ties):
    X, t, e = _instance(3, n=30, p=3, tie_prob=0.5)
    beta = np.array([0.3, -0.2, 0.1])
    _, grad, hess = partial_loglik(beta, X, t, e, ties=ties)
    fd_g = oracles.fd_gradient(beta, X, t, e, ties)
    fd_h = oracles.fd_hessian(beta, X, t, e, ties)
    assert np.allclose(grad, fd_g, rtol=1e-7, atol=1e-8)
    assert np.allclose(hess, fd_h, rtol=1e-5, atol=1e-6)


def test_newton_fit_result_shape():
    X, t, e = _instance(1, n=120, p=3)
    fit = newton_fit(X, t, e)
    assert fit.converged
    assert fit.gradient_norm < 1e-8
    assert fit.n == 120 and fit.n_events == int(e.sum())
    assert fit.info_inverse.shape == (3, 3)
    assert fit.standard_errors.shape == (3,)
    assert np.all(fit.standard_errors > 0)
    # accepted steps never decrease the objective beyond the tolerance
    diffs = np.diff(fit.ll_path)
    assert np.all(diffs > -1e-9)


def test_newton_fit_matches_grid_on_one_covariate():
    X, t, e = _instance(11, n=90, p=1)
    fit = newton_fit(X, t, e)
    bhat = oracles.grid_beta_hat(X[:, 0], t, e)
    assert abs(float(fit.beta[0]) - bhat) < 1e-3


def test_init_is_respected():
    X, t, e = _instance(2, n=80, p=2)
    a = newton_fit(X, t, e)
    b = newton_fit(X, t, e, init=a.beta)
    assert b.iterations <= 1
    assert np.allclose(a.beta, b.beta, atol=1e-8)


def test_efron_breslow_differ_under_ties_agree_without():
    X, t, e = _instance(5, n=60, p=2, tie_prob=0.5)
    fe = newton_fit(X, t, e, ties="efron")
    fb = newton_fit(X, t, e, ties="breslow")
    assert np.abs(fe.beta - fb.beta).max() > 1e-6

    X, t, e = _instance(6, n=60, p=2)
    assert np.unique(t).size == t.size
    fe = newton_fit(X, t, e, ties="efron")
    fb = newton_fit(X, t, e, ties="breslow")
    assert np.abs(fe.beta - fb.beta).max() < 1e-10


def test_no_events_raises():
    X = np.ones((4, 1))
    with pytest.raises(NoEvents):
        newton_fit(X, np.arange(1.0, 5.0), np.zeros(4, dtype=bool))


def test_bad_inputs():
    X, t, e = _instance(0)
    with pytest.raises(ValueError):
        newton_fit(X, t, e, ties="exact")
    with pytest.raises(NonFiniteInput):
        newton_fit(X, -t, e)
    with pytest.raises(DimensionMismatch):
        partial_loglik(np.zeros(5), X, t, e)


def test_monotone_likelihood_detected():
    # event order perfectly follows the covariate, so beta diverges
    n = 30
    x = np.linspace(0.0, 1.0, n)[:, None]
    times = np.linspace(n, 1.0, n)
    events = np.ones(n, dtype=bool)
    with pytest.raises(MonotoneLikelihood):
        newton_fit(x, times, events)


def test_nonconvergence_carries_partial_fit():
    X, t, e = _instance(4, n=100, p=3)
    with pytest.raises(Nonconvergence) as info:
        newton_fit(X, t, e, max_iter=1)
    partial = info.value.model
    assert partial is not None and not partial.converged
    assert partial.iterations == 1
    assert len(partial.ll_path) == 2


def test_singular_information():
    X, t, e = _instance(8, n=50, p=1)
    X2 = np.hstack([X, X])  # duplicated column
    with pytest.raises(SingularInformation):
        newton_fit(X2, t, e)


# --------------------------------------------------------------------------
# baseline and prediction
# --------------------------------------------------------------------------


def test_baseline_hand_example():
    """Cumulative hazard d_k over at-risk count when beta is zero."""
    X = np.zeros((3, 1))
    times = np.array([1.0, 2.0, 3.0])
    events = np.array([True, False, True])
    base = baseline_from_arrays(X, times, events, np.zeros(1))
    assert np.array_equal(base.knots, [1.0, 3.0])
    assert base.s0[0] == pytest.approx(math.exp(-1.0 / 3.0), abs=1e-15)
    assert base.s0[1] == pytest.approx(math.exp(-1.0 / 3.0 - 1.0), abs=1e-15)

    # right-continuous step lookup
    assert base.survival_at([0.5])[0] == 1.0
    assert base.survival_at([1.0])[0] == base.s0[0]
    assert base.survival_at([2.9])[0] == base.s0[0]
    assert base.survival_at([3.0])[0] == base.s0[1]
    assert base.survival_at([50.0])[0] == base.s0[1]  # clamped
    assert list(base.extrapolated_at([2.0, 3.0, 3.1])) == [False, False, True]
    assert base.horizon_limit == 3.0


def test_baseline_matches_km_when_beta_zero():
    X, t, e = _instance(9, n=80, p=2)
    base = baseline_from_arrays(X, t, e, np.zeros(2))
    from prognos.metrics import kaplan_meier

    km = kaplan_meier(t, e)
    # Breslow exp(-H) and the product-limit curve agree closely
    assert np.allclose(base.survival_at(km.times), km.survival, atol=0.02)


def test_survival_matrix_and_risk_profile():
    base = BaselineSurvival(knots=np.array([1.0, 2.0]), s0=np.array([0.9, 0.7]))
    S = survival_matrix(base, [0.0, math.log(2.0)], [0.0, 1.0, 2.0])
    assert S.shape == (2, 3)
    assert S[0, 0] == 1.0 and S[1, 0] == 1.0  # horizon zero
    assert S[0, 1] == pytest.approx(0.9)
    assert S[1, 1] == pytest.approx(0.81)  # doubled hazard squares survival

    prof = risk_profile(base, 0.3, range(0, 5))
    risks = np.asarray(prof.absolute_risk)
    assert np.all(np.diff(risks) >= -1e-15)
    assert prof.extrapolated == (False, False, False, True, True)
    assert prof.horizons == (0.0, 1.0, 2.0, 3.0, 4.0)
    with pytest.raises(NonFiniteInput):
        survival_matrix(base, [0.0], [-1.0])


def test_baseline_validation():
    with pytest.raises(Exception):
        BaselineSurvival(knots=np.array([2.0, 1.0]), s0=np.array([0.9, 0.8]))
    with pytest.raises(Exception):
        BaselineSurvival(knots=np.array([1.0, 2.0]), s0=np.array([0.7, 0.9]))


def test_wald_rows_hand_check():
    rows = wald_rows(
        ("a", "b"),
        np.array([0.5, 0.0]),
        np.array([[0.0625, 0.0], [0.0, 0.04]]),
    )
    a = rows[0]
    assert a.se == pytest.approx(0.25)
    assert a.z == pytest.approx(2.0)
    assert a.p == pytest.approx(math.erfc(2.0 / math.sqrt(2.0)), abs=1e-15)
    assert a.hazard_ratio == pytest.approx(math.exp(0.5))
    assert a.hr_lo95 == pytest.approx(math.exp(0.5 - Z975 * 0.25))
    assert a.hr_hi95 == pytest.approx(math.exp(0.5 + Z975 * 0.25))
    b = rows[1]
    assert b.z == 0.0 and b.p == pytest.approx(1.0)


def test_wald_rows_zero_se_edges():
    cov = np.zeros((2, 2))
    rows = wald_rows(("up", "zero"), np.array([1.0, 0.0]), cov)
    assert rows[0].z == math.inf and rows[0].p == 0.0
    assert rows[1].z == 0.0 and rows[1].p == 1.0
