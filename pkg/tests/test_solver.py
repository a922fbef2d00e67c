import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsereg.errors import IllPosed
from sparsereg.solver import PenaltySpec, SolverConfig, fit_lasso, kkt_residual, objective


def orthonormal_design(n, d, rng, zhat=None):
    """Design with gram matrix exactly the identity; optionally a response
    whose per-feature correlation (1/n) X^T y equals ``zhat``."""
    Q, _ = np.linalg.qr(rng.normal(size=(n, d)))
    X = np.sqrt(n) * Q[:, :d]
    if zhat is None:
        return X
    y = np.sqrt(n) * Q[:, :d] @ np.asarray(zhat, dtype=float)
    return X, y


def soft_threshold(z, t):
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def test_orthonormal_closed_form_example():
    rng = np.random.default_rng(0)
    X, y = orthonormal_design(6, 2, rng, zhat=[3.0, 1.0])
    fit = fit_lasso(X, y, PenaltySpec(lam=1.0))
    assert np.allclose(fit.beta, [2.5, 0.5], atol=1e-10)
    assert fit.converged


def test_orthonormal_zero_solution_at_large_lambda():
    rng = np.random.default_rng(1)
    X, y = orthonormal_design(5, 3, rng, zhat=[0.3, -0.2, 0.1])
    lam = 2 * 0.3
    fit = fit_lasso(X, y, PenaltySpec(lam=lam))
    assert np.all(fit.beta == 0.0)


def test_orthonormal_unpenalized_coordinate():
    rng = np.random.default_rng(2)
    X, y = orthonormal_design(7, 2, rng, zhat=[3.0, 1.0])
    fit = fit_lasso(X, y, PenaltySpec(lam=1.0, unpenalized=frozenset({0})))
    assert np.allclose(fit.beta, [3.0, 0.5], atol=1e-10)


def test_kkt_zero_at_closed_form_solution():
    rng = np.random.default_rng(3)
    zhat = np.array([2.0, -0.7, 0.05])
    X, y = orthonormal_design(8, 3, rng, zhat=zhat)
    lam = 0.5
    beta = soft_threshold(zhat, lam / 2)
    assert kkt_residual(X, y, beta, PenaltySpec(lam=lam)) < 1e-10


def test_kkt_zero_at_origin_for_large_lambda():
    rng = np.random.default_rng(4)
    X, y = orthonormal_design(6, 2, rng, zhat=[1.0, -0.5])
    lam = 2.0 * float(np.abs(X.T @ y / 6).max())
    assert kkt_residual(X, y, np.zeros(2), PenaltySpec(lam=lam)) == 0.0
    fit = fit_lasso(X, y, PenaltySpec(lam=lam))
    assert np.all(fit.beta == 0.0)
    # holds on arbitrary designs too, not just orthonormal ones
    Xg = rng.normal(size=(9, 5))
    yg = rng.normal(size=9)
    lam_g = 2.0 * float(np.abs(Xg.T @ yg / 9).max())
    assert np.all(fit_lasso(Xg, yg, PenaltySpec(lam=lam_g)).beta == 0.0)


def test_kkt_linear_response_to_active_perturbation():
    rng = np.random.default_rng(5)
    zhat = np.array([2.0, -0.7])
    X, y = orthonormal_design(9, 2, rng, zhat=zhat)
    lam = 0.5
    beta = soft_threshold(zhat, lam / 2)
    eps = 1e-4
    beta[0] += eps
    # gram diagonal is 1, so the violation grows as 2 * eps
    assert kkt_residual(X, y, beta, PenaltySpec(lam=lam)) == pytest.approx(2 * eps, rel=1e-8)


def test_objective_at_zero_and_lambda_zero():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(10, 3))
    y = rng.normal(size=10)
    assert objective(X, y, np.zeros(3), PenaltySpec(lam=2.0)) == pytest.approx(float(y @ y) / 10)
    beta = rng.normal(size=3)
    mse = float(((X @ beta - y) ** 2).mean())
    assert objective(X, y, beta, PenaltySpec(lam=0.0, unpenalized=frozenset({1}))) == pytest.approx(mse)


def test_objective_matches_naive_evaluation():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(12, 4))
    y = rng.normal(size=12)
    beta = rng.normal(size=4)
    pen = PenaltySpec(lam=0.3, unpenalized=frozenset({2}))
    naive = 0.0
    for i in range(12):
        naive += (X[i] @ beta - y[i]) ** 2
    naive = naive / 12 + 0.3 * sum(abs(beta[j]) for j in range(4) if j != 2)
    assert objective(X, y, beta, pen) == pytest.approx(naive, abs=1e-12)


def test_lambda_zero_reproduces_least_squares():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(40, 6))
    y = rng.normal(size=40)
    fit = fit_lasso(X, y, PenaltySpec(lam=0.0))
    ls, *_ = np.linalg.lstsq(X, y, rcond=None)
    assert np.abs(fit.beta - ls).max() < 1e-8


def test_lambda_zero_rank_deficient_raises():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(5, 8))
    y = rng.normal(size=5)
    with pytest.raises(IllPosed):
        fit_lasso(X, y, PenaltySpec(lam=0.0))


def test_zero_column_penalized_coefficient_stays_zero():
    rng = np.random.default_rng(10)
    X = rng.normal(size=(10, 3))
    X[:, 1] = 0.0
    y = rng.normal(size=10)
    fit = fit_lasso(X, y, PenaltySpec(lam=0.5))
    assert fit.beta[1] == 0.0
    assert fit.converged


def test_objective_value_field_matches_objective():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(15, 5))
    y = rng.normal(size=15)
    pen = PenaltySpec(lam=0.2, unpenalized=frozenset({0}))
    fit = fit_lasso(X, y, pen)
    assert fit.objective_value == pytest.approx(objective(X, y, fit.beta, pen), abs=1e-10)


def test_objective_history_non_increasing():
    rng = np.random.default_rng(12)
    X = rng.normal(size=(20, 30))
    y = rng.normal(size=20)
    fit = fit_lasso(X, y, PenaltySpec(lam=0.05))
    h = fit.objective_history
    assert np.all(np.diff(h) <= 1e-10 * np.maximum(1.0, np.abs(h[:-1])))


def test_warm_start_objective_invariance():
    rng = np.random.default_rng(13)
    X = rng.normal(size=(25, 10))
    y = rng.normal(size=25)
    pen = PenaltySpec(lam=0.1)
    cfg = SolverConfig()
    f0 = fit_lasso(X, y, pen, cfg, warm_start=None)
    f1 = fit_lasso(X, y, pen, cfg, warm_start=rng.normal(size=10))
    assert abs(f0.objective_value - f1.objective_value) <= 2 * cfg.kkt_tolerance


def test_warm_start_at_optimum_returns_immediately():
    rng = np.random.default_rng(14)
    X = rng.normal(size=(20, 6))
    y = rng.normal(size=20)
    pen = PenaltySpec(lam=0.3)
    f0 = fit_lasso(X, y, pen)
    f1 = fit_lasso(X, y, pen, warm_start=f0.beta)
    assert f1.sweeps_used == 0
    assert np.array_equal(f0.beta, f1.beta)


def test_unpenalized_gradient_vanishes_at_convergence():
    rng = np.random.default_rng(15)
    X = rng.normal(size=(30, 8))
    y = rng.normal(size=30)
    pen = PenaltySpec(lam=0.4, unpenalized=frozenset({1, 5}))
    fit = fit_lasso(X, y, pen)
    g = 2.0 * X.T @ (X @ fit.beta - y) / 30
    assert max(abs(g[1]), abs(g[5])) <= SolverConfig().kkt_tolerance


def test_sweep_budget_exhaustion_reports_not_converged():
    rng = np.random.default_rng(16)
    X = rng.normal(size=(20, 40))
    y = rng.normal(size=20)
    fit = fit_lasso(X, y, PenaltySpec(lam=1e-4), SolverConfig(max_sweeps=2))
    assert not fit.converged
    assert fit.sweeps_used == 2


def test_determinism():
    rng = np.random.default_rng(17)
    X = rng.normal(size=(15, 12))
    y = rng.normal(size=15)
    pen = PenaltySpec(lam=0.05, unpenalized=frozenset({3}))
    f0 = fit_lasso(X, y, pen)
    f1 = fit_lasso(X, y, pen)
    assert np.array_equal(f0.beta, f1.beta)
    assert f0.sweeps_used == f1.sweeps_used


def test_penalty_spec_validation():
    with pytest.raises(ValueError):
        PenaltySpec(lam=-1.0)
    with pytest.raises(ValueError):
        fit_lasso(np.eye(3), np.zeros(3), PenaltySpec(lam=1.0, unpenalized=frozenset({5})))


@given(
    st.integers(min_value=0, max_value=2**32 - 1),
    st.floats(min_value=0.01, max_value=2.0),
    st.integers(min_value=0, max_value=3),
)
@settings(max_examples=25, deadline=None)
def test_random_instances_reach_certificate(seed, lam, n_unpen):
    rng = np.random.default_rng(seed)
    n, d = 18, 7
    X = rng.normal(size=(n, d))
    y = rng.normal(size=n)
    unpen = frozenset(int(j) for j in rng.choice(d, size=n_unpen, replace=False))
    pen = PenaltySpec(lam=lam, unpenalized=unpen)
    cfg = SolverConfig()
    fit = fit_lasso(X, y, pen, cfg)
    assert fit.converged
    assert fit.kkt_residual <= cfg.kkt_tolerance
    assert kkt_residual(X, y, fit.beta, pen) <= cfg.kkt_tolerance
    h = fit.objective_history
    assert np.all(np.diff(h) <= 1e-10 * np.maximum(1.0, np.abs(h[:-1])))
