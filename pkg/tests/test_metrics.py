import warnings

import numpy as np
import pytest

import oracles
from prognos.errors import (
    DegenerateResample,
    DimensionMismatch,
    EmptyGroup,
    EmptyInput,
    GridOutOfRange,
    NonFiniteInput,
    ZeroCensoringWeight,
)
from prognos.metrics import (
    bootstrap_ci,
    brier_curve,
    calibration_by_group,
    concordance,
    concordance_ci,
    kaplan_meier,
    truncate_at_horizon,
)


def _censored(seed, n=80):
    rng = np.random.default_rng(seed)
    scores = rng.standard_normal(n)
    t = oracles.weibull_times(rng, 0.8 * scores)
    c = rng.exponential(30.0, size=n)
    return scores, np.minimum(t, c), t <= c


# --------------------------------------------------------------------------
# concordance
# --------------------------------------------------------------------------


def test_concordance_matches_pair_enumeration():
    for seed in range(8):
        s, t, e = _censored(seed, n=60)
        if seed % 2:  # exercise tied scores and tied times
            s = np.round(s, 1)
            t = np.ceil(t)
        for horizon in (None, 5.0):
            res = concordance(s, t, e, horizon)
            pairs, num2, c = oracles.concordance(s, t, e, horizon)
            assert res.comparable_pairs == pairs
            assert res.concordant * 2 == num2  # exact rational agreement
            assert res.c == c


def test_concordance_analytic_extremes():
    t = np.array([1.0, 2.0, 3.0, 4.0])
    e = np.ones(4, dtype=bool)
    assert concordance([4, 3, 2, 1], t, e).c == 1.0
    assert concordance([1, 2, 3, 4], t, e).c == 0.0
    res = concordance([7, 7, 7, 7], t, e)
    assert res.c == 0.5
    assert res.tied_pairs == res.comparable_pairs == 6
    assert not res.degenerate


def test_concordance_degenerate():
    res = concordance([1, 2], [5.0, 6.0], [False, False])
    assert res.degenerate and res.c == 0.5 and res.comparable_pairs == 0
    # censored-before-event pairs are unusable; single event at the end too
    res = concordance([1, 2], [5.0, 6.0], [False, True])
    assert res.degenerate


def test_concordance_horizon_truncation():
    # event at year 6 vanishes at a 5-year horizon, flipping c to degenerate
    s = np.array([2.0, 1.0])
    t = np.array([6.0, 8.0])
    e = np.array([True, False])
    assert concordance(s, t, e).c == 1.0
    assert concordance(s, t, e, horizon=5.0).degenerate
    # an event exactly at the horizon is kept
    assert concordance(s, t, e, horizon=6.0).c == 1.0
    tt, ee = truncate_at_horizon(t, e, 6.0)
    assert tt.tolist() == [6.0, 6.0]
    assert ee.tolist() == [True, False]
    with pytest.raises(NonFiniteInput):
        truncate_at_horizon(t, e, 0.0)


# --------------------------------------------------------------------------
# bootstrap
# --------------------------------------------------------------------------


def test_bootstrap_mean_reference_case():
    ci = bootstrap_ci(np.mean, np.array([1.0, 2.0, 3.0]), n_boot=200, seed=7)
    assert ci.point == 2.0
    assert 1.0 <= ci.lo95 <= ci.hi95 <= 3.0
    assert ci.lo95 <= ci.point <= ci.hi95


def test_bootstrap_constant_data_zero_width():
    ci = bootstrap_ci(np.mean, np.full(10, 3.25), n_boot=50, seed=1)
    assert ci.lo95 == ci.hi95 == ci.point == 3.25


def test_bootstrap_deterministic_and_stream_indexed():
    data = np.random.default_rng(5).normal(size=40)
    a = bootstrap_ci(np.mean, data, n_boot=64, seed=11)
    b = bootstrap_ci(np.mean, data, n_boot=64, seed=11)
    assert (a.lo95, a.hi95, a.redraws) == (b.lo95, b.hi95, b.redraws)
    assert a != bootstrap_ci(np.mean, data, n_boot=64, seed=12)

    # resample b draws from generator (seed, b) regardless of execution
    # order, so the whole stats vector is reproducible index by index
    stats = np.array(
        [
            data[np.random.default_rng([11, k]).integers(0, 40, size=40)].mean()
            for k in range(64)
        ]
    )
    lo, hi = np.percentile(stats, [2.5, 97.5])
    assert (a.lo95, a.hi95) == (float(lo), float(hi))


def test_bootstrap_redraws_degenerate_resamples():
    data = np.array([0.0, 0.0, 0.0, 1.0])

    def fussy_mean(x):
        if x.sum() == 0.0:  # resample that missed the lone positive row
            raise DegenerateResample("no signal")
        return x.mean()

    ci = bootstrap_ci(fussy_mean, data, n_boot=100, seed=3)
    assert ci.redraws > 0
    assert ci.point == 0.25


def test_bootstrap_input_validation():
    with pytest.raises(EmptyInput):
        bootstrap_ci(np.mean, np.arange(3), n_boot=1)
    with pytest.raises(EmptyInput):
        bootstrap_ci(np.mean, np.array([]))
    ci = bootstrap_ci(lambda s, t: s.sum() + t.sum(), (np.ones(5), np.ones(5)))
    assert ci.point == 10.0


def test_concordance_ci_wraps_metric():
    s, t, e = _censored(3, n=100)
    ci = concordance_ci(s, t, e, horizon=5.0, n_boot=40, seed=9)
    assert ci.point == concordance(s, t, e, 5.0).c
    assert ci.lo95 <= ci.point <= ci.hi95
    assert ci.n_boot == 40


# --------------------------------------------------------------------------
# product-limit curve
# --------------------------------------------------------------------------


def test_km_hand_example():
    km = kaplan_meier([1.0, 3.0, 5.0], [True, True, False])
    assert km.times.tolist() == [1.0, 3.0]
    assert km.survival[0] == pytest.approx(2.0 / 3.0, abs=1e-15)
    assert km.survival[1] == pytest.approx(1.0 / 3.0, abs=1e-15)  # 2/3 * 1/2
    assert km.at_risk.tolist() == [3, 2]
    # right-continuous steps
    assert km.survival_at([0.5])[0] == 1.0
    assert km.survival_at([1.0])[0] == pytest.approx(2.0 / 3.0)
    assert km.survival_at_left([1.0])[0] == 1.0
    assert km.survival_at_left([3.0])[0] == pytest.approx(2.0 / 3.0)
    assert km.survival_at([99.0])[0] == pytest.approx(1.0 / 3.0)


def test_km_all_censored_and_ties():
    km = kaplan_meier([1.0, 2.0], [False, False])
    assert km.times.size == 0
    assert km.survival_at([1.5])[0] == 1.0

    km = kaplan_meier([2.0, 2.0, 2.0, 4.0], [True, True, False, True])
    assert km.survival[0] == pytest.approx(0.5)  # 1 - 2/4
    assert km.survival[1] == pytest.approx(0.0)


def test_km_matches_oracle_product():
    rng = np.random.default_rng(13)
    t = np.ceil(rng.exponential(5.0, size=50) * 2) / 2
    e = rng.uniform(size=50) < 0.6
    km = kaplan_meier(t, e)
    for at in (1.0, 2.5, 4.0, 10.0):
        assert km.survival_at([at])[0] == pytest.approx(
            oracles.km_survival(t, e, at), abs=1e-12
        )


def test_km_validation():
    with pytest.raises(EmptyInput):
        kaplan_meier([], [])
    with pytest.raises(NonFiniteInput):
        kaplan_meier([1.0, -2.0], [True, True])


# --------------------------------------------------------------------------
# prediction error curve
# --------------------------------------------------------------------------


def test_brier_perfect_oracle_is_zero():
    t = np.array([1.0, 2.0, 3.0, 4.0])
    e = np.ones(4, dtype=bool)
    grid = np.array([1.5, 2.5, 3.5])
    S = (t[:, None] > grid[None, :]).astype(float)  # indicator of truth
    bc = brier_curve(S, t, e, grid)
    assert np.all(bc.scores == 0.0)
    assert not bc.truncated


def test_brier_constant_half_is_quarter():
    t = np.linspace(1, 10, 12)
    e = np.ones(12, dtype=bool)
    grid = np.array([2.0, 5.0, 8.0])
    bc = brier_curve(np.full((12, 3), 0.5), t, e, grid)
    assert np.allclose(bc.scores, 0.25, atol=1e-15)


def test_brier_matches_direct_summation():
    rng = np.random.default_rng(21)
    n = 100
    t_ev = oracles.weibull_times(rng, rng.standard_normal(n))
    c = rng.exponential(20.0, size=n)
    t = np.minimum(t_ev, c)
    e = t_ev <= c
    grid = np.array([0.5, 1.0, 2.0, min(4.0, t.max())])
    S = np.clip(rng.uniform(size=(n, grid.size)), 0.0, 1.0)
    S.sort(axis=1)
    S = S[:, ::-1].copy()  # nonincreasing rows, like real survival curves
    bc = brier_curve(S, t, e, grid)
    for k, g in enumerate(grid):
        assert bc.scores[k] == pytest.approx(
            oracles.brier_at(S[:, k], t, e, g), abs=1e-12
        )


def test_brier_callable_equals_matrix():
    t = np.array([1.0, 2.0, 3.0, 5.0])
    e = np.array([True, False, True, True])
    grid = np.array([1.0, 2.5, 4.0])
    S = np.array([[0.9, 0.5, 0.2], [0.8, 0.6, 0.4], [0.95, 0.7, 0.3], [0.9, 0.8, 0.6]])
    a = brier_curve(S, t, e, grid)
    b = brier_curve(lambda i, tt: S[i, list(grid).index(tt)], t, e, grid)
    assert np.array_equal(a.scores, b.scores)


def test_brier_grid_validation():
    t = np.array([1.0, 2.0, 3.0])
    e = np.array([True, True, False])
    S = np.full((3, 2), 0.5)
    with pytest.raises(GridOutOfRange):
        brier_curve(S, t, e, [1.0, 4.0])
    with pytest.raises(NonFiniteInput):
        brier_curve(S, t, e, [2.0, 1.0])
    with pytest.raises(NonFiniteInput):
        brier_curve(S, t, e, [0.0, 1.0])
    with pytest.raises(EmptyInput):
        brier_curve(np.zeros((3, 0)), t, e, [])
    with pytest.raises(NonFiniteInput):
        brier_curve(S + 0.6, t, e, [1.0, 2.0])
    with pytest.raises(DimensionMismatch):
        brier_curve(np.full((3, 3), 0.5), t, e, [1.0, 2.0])
    assert issubclass(ZeroCensoringWeight, Warning)


# --------------------------------------------------------------------------
# grouped calibration
# --------------------------------------------------------------------------


def _grading_cohort():
    from synth import grading_cohort_csv
    from prognos.cohort import parse_cohort

    text, meta = grading_cohort_csv(n=150, seed=3)
    return parse_cohort(text), meta


def test_calibration_groups_observed_and_predicted():
    from prognos.cohort import Endpoint
    from prognos.scales import sss_score

    cohort, _ = _grading_cohort()
    grid = np.array([1.0, 3.0, 5.0])
    times, events = cohort.outcome_arrays(Endpoint.LATE_AMD)
    P = np.tile(np.array([0.1, 0.2, 0.3]), (len(cohort), 1))

    def by_score(p):
        return sss_score(p.left_eye, p.right_eye)

    groups = calibration_by_group(cohort, by_score, P, grid, Endpoint.LATE_AMD)
    assert all(groups[k].group <= groups[k + 1].group for k in range(len(groups) - 1))
    assert sum(g.n for g in groups) == len(cohort)
    for g in groups:
        assert np.allclose(g.predicted, [0.1, 0.2, 0.3])
        # observed curve equals a direct product-limit run on the members
        idx = [
            i for i, p in enumerate(cohort) if by_score(p) == g.group
        ]
        km = kaplan_meier(times[idx], events[idx])
        assert np.array_equal(g.observed, 1.0 - km.survival_at(grid))


def test_calibration_missing_group_warns():
    from prognos.cohort import Endpoint

    cohort, _ = _grading_cohort()
    grid = np.array([2.0])
    P = np.zeros((len(cohort), 1))
    with pytest.warns(EmptyGroup, match="99"):
        groups = calibration_by_group(
            cohort,
            lambda p: 0,
            P,
            grid,
            Endpoint.LATE_AMD,
            expected_groups=(0, 99),
        )
    assert len(groups) == 1 and groups[0].n == len(cohort)


def test_calibration_self_consistent_single_group():
    # predictions equal to the pooled observed curve come back unchanged
    from prognos.cohort import Endpoint

    cohort, _ = _grading_cohort()
    times, events = cohort.outcome_arrays(Endpoint.GA)
    grid = np.array([1.0, 2.0, 4.0])
    km = kaplan_meier(times, events)
    P = np.tile(1.0 - km.survival_at(grid), (len(cohort), 1))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        (g,) = calibration_by_group(cohort, lambda p: "all", P, grid, Endpoint.GA)
    assert np.allclose(g.observed, g.predicted, atol=1e-15)
