import numpy as np
import pytest

import oracles
from prognos.cox import newton_fit
from prognos.errors import EmptyPath, ValidationError
from prognos.featsel import (
    KKT_TOL,
    RegularizationPath,
    choose_lambda,
    lasso_cox_path,
    path_to_csv,
    select_features,
)


def _sim(seed=0, n=250, p=6, beta=None):
    rng = np.random.default_rng(seed)
    if beta is None:
        beta = np.zeros(p)
        beta[0], beta[2] = 0.9, -0.6
    X = rng.standard_normal((n, p))
    t = oracles.weibull_times(rng, X @ beta)
    c = rng.exponential(35.0, size=n)
    return X, np.minimum(t, c), t <= c


def exact_score(beta, X, times, events):
    """Partial-likelihood gradient via central differences of the oracle."""
    return oracles.fd_gradient(beta, X, times, events, "breslow")


def assert_kkt(path, k, X, times, events):
    beta = path.coefficients[k]
    lam_e = path.lambdas[k] * path.n_events
    l1 = path.l1_ratio
    score = exact_score(beta, X, times, events)
    tol = KKT_TOL * path.n_events + 1e-4  # slack for the fd score itself
    for j in range(beta.size):
        if beta[j] != 0.0:
            target = lam_e * (l1 * np.sign(beta[j]) + (1 - l1) * beta[j])
            assert abs(score[j] - target) < tol, (k, j)
        else:
            assert abs(score[j]) <= lam_e * l1 + tol, (k, j)


def test_lambda_max_gives_zero_solution():
    X, t, e = _sim(1)
    path = lasso_cox_path(X, t, e, n_lambda=12)
    assert np.all(path.coefficients[0] == 0.0)
    assert path.nonzero_counts[0] == 0
    # grid is strictly descending, length as requested
    assert path.lambdas.size == 12
    assert np.all(np.diff(path.lambdas) < 0)
    # and the next grid point already activates something
    assert path.nonzero_counts[-1] > 0


def test_kkt_certificate_along_path():
    X, t, e = _sim(2, n=220, p=5)
    path = lasso_cox_path(X, t, e, n_lambda=10, lambda_min_ratio=0.05)
    for k in (0, 3, 6, 9):
        assert_kkt(path, k, X, t, e)


def test_kkt_certificate_elastic_net():
    X, t, e = _sim(3, n=200, p=5)
    path = lasso_cox_path(X, t, e, n_lambda=8, l1_ratio=0.5)
    for k in (0, 4, 7):
        assert_kkt(path, k, X, t, e)


def test_small_lambda_approaches_unpenalized_fit():
    X, t, e = _sim(4, n=300, p=4)
    fit = newton_fit(X, t, e, ties="breslow")
    path = lasso_cox_path(X, t, e, lambdas=[1e-6])
    assert np.abs(path.coefficients[0] - fit.beta).max() < 1e-3


def test_explicit_lambdas_sorted_descending():
    X, t, e = _sim(5, n=150, p=3)
    path = lasso_cox_path(X, t, e, lambdas=[0.01, 0.5, 0.1])
    assert path.lambdas.tolist() == [0.5, 0.1, 0.01]
    with pytest.raises(EmptyPath):
        lasso_cox_path(X, t, e, lambdas=[])
    with pytest.raises(EmptyPath):
        lasso_cox_path(X, t, e, lambdas=[0.1, -0.2])
    with pytest.raises(ValidationError, match="l1_ratio"):
        lasso_cox_path(X, t, e, l1_ratio=0.0)


def test_loglik_increases_as_lambda_shrinks():
    X, t, e = _sim(6, n=200, p=5)
    path = lasso_cox_path(X, t, e, n_lambda=10)
    assert np.all(np.diff(path.loglik) >= -1e-9)


def test_choose_lambda_prefers_larger_on_ties():
    lambdas = np.array([1.0, 0.5, 0.25])
    coefs = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])  # identical rankings
    path = RegularizationPath(
        lambdas=lambdas, coefficients=coefs, loglik=np.zeros(3), n_events=5
    )
    Xd = np.array([[1.0, 0.0], [0.0, 0.0], [-1.0, 0.0]])
    td = np.array([1.0, 2.0, 3.0])
    ed = np.array([True, True, True])
    # rows are scored 1,0,-1 by both nonzero points; index 1 wins the tie
    assert choose_lambda(path, Xd, td, ed) == 1


def test_choose_lambda_finds_informative_point():
    X, t, e = _sim(7, n=400, p=6)
    Xd, td, ed = _sim(8, n=200, p=6)[0:3]
    path = lasso_cox_path(X, t, e, n_lambda=20)
    k = choose_lambda(path, Xd, td, ed)
    assert 0 < k < 20
    assert path.nonzero_counts[k] > 0


def test_select_features():
    coefs = np.array([[0.0, 0.0, 0.0, 0.0], [0.1, -0.9, 0.0, 0.5]])
    path = RegularizationPath(
        lambdas=np.array([1.0, 0.1]),
        coefficients=coefs,
        loglik=np.zeros(2),
        n_events=4,
    )
    assert select_features(path, 0) == ()
    assert select_features(path, 1, k=2) == (1, 3)  # largest |beta| first, then sorted
    assert select_features(path, 1, k=10) == (0, 1, 3)
    with pytest.raises(EmptyPath):
        select_features(path, 2)
    with pytest.raises(EmptyPath):
        select_features(path, -1)


def test_path_csv_round_trip():
    X, t, e = _sim(9, n=120, p=3)
    path = lasso_cox_path(X, t, e, n_lambda=5)
    text = path_to_csv(path)
    lines = text.strip().split("\n")
    assert lines[0] == "lambda,nonzero_count,beta_0,beta_1,beta_2"
    assert len(lines) == 6
    cells = lines[3].split(",")
    k = 2
    assert float(cells[0]) == path.lambdas[k]
    assert int(cells[1]) == path.nonzero_counts[k]
    assert [float(c) for c in cells[2:]] == path.coefficients[k].tolist()
