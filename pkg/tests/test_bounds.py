import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsereg.bounds import (
    BoundInputs,
    QuantitySet,
    corollary41_rhs,
    corollary51_rhs,
    corollary61_rhs,
    corollary71_conditions,
    corollary81_rhs,
    dantzig_constants,
    dantzig_report,
    evaluate_bound,
    lambda_floor,
    theorem41_rhs,
    theorem71_conditions,
    theorem81_rhs,
    with_fields,
)
from sparsereg.diagnostics import SubsetQuantities
from sparsereg.errors import DomainError, MissingQuantity


def quantities(k, ell, p, rho=1.0, mu=1.0, omega=None, theta=0.0, gamma=0.0, pi=0.0, theta_bar=0.0, omega_exact=True):
    q = SubsetQuantities(
        k=k,
        ell=ell,
        p=float(p),
        rho=rho,
        mu=mu,
        theta=theta,
        gamma=gamma,
        omega=mu if omega is None else omega,
        pi=pi,
        pi_lower_estimate=0.0,
        theta_bar=theta_bar,
        exactness={
            "rho": "exact",
            "mu": "exact",
            "theta": "exact",
            "gamma": "exact",
            "omega": "exact" if omega_exact else "bound",
            "pi": "bound",
            "theta_bar": "exact",
        },
    )
    return q


def identity_inputs(k=2, ell=3, p=2.0, d=20, n=50, **kw):
    qs = QuantitySet([quantities(k + ell, ell, p)])
    base = dict(
        n=n,
        d=d,
        k=k,
        ell=ell,
        p=p,
        t=0.5,
        lam=1.0,
        sigma=0.0,
        a=1.0,
        delta=0.05,
        tail1=0.0,
        tailp=0.0,
        quantities=qs,
    )
    base.update(kw)
    return BoundInputs(**base)


# --- lambda floor -----------------------------------------------------------


def test_lambda_floor_zero_when_noise_free():
    inp = identity_inputs(sigma=0.0, approx_noise=0.0)
    assert lambda_floor(inp) == 0.0


def test_lambda_floor_unit_case():
    d, delta = 10, 0.1
    n = 2 * math.log(2 * d / delta)
    inp = BoundInputs(n=n, d=d, t=1.0, sigma=1.0, a=1.0, delta=delta)
    assert lambda_floor(inp) == pytest.approx(4.0, rel=1e-12)


def test_lambda_floor_calculator_oracle():
    inp = BoundInputs(n=25, d=100, t=0.5, sigma=1.0, a=1.0, delta=0.05)
    hand = (4 * (2 - 0.5) / 0.5) * math.sqrt(2 * math.log(2 * 100 / 0.05) / 25)
    assert lambda_floor(inp) == pytest.approx(hand, rel=1e-12)


def test_lambda_floor_rejects_bad_ranges():
    with pytest.raises(ValueError):
        lambda_floor(identity_inputs(t=0.0))
    with pytest.raises(ValueError):
        lambda_floor(identity_inputs(delta=1.5))


# --- general bound ----------------------------------------------------------


def test_theorem41_claim2_sparse_target():
    k, ell, p = 2, 3, 2.0
    inp = identity_inputs(k=k, ell=ell, p=p, lam=0.4)
    rep = theorem41_rhs(inp, claim=2, q_norm=p)
    assert rep.all_hold
    assert rep.rhs == pytest.approx(8.0 / 0.5 * 0.4 * math.sqrt(k + ell))


def test_theorem41_zero_at_zero_inputs():
    inp = identity_inputs(lam=0.0)
    for claim in (1, 2):
        rep = theorem41_rhs(inp, claim=claim)
        assert rep.rhs == 0.0


def test_theorem41_gate_failure_leaves_rhs_undefined():
    k, ell, p = 2, 3, 2.0
    # pi large enough that pi * k^(1-1/p) / ell > 1 - t
    qs = QuantitySet([quantities(k + ell, ell, p, pi=2.0)])
    inp = identity_inputs(k=k, ell=ell, p=p, quantities=qs)
    rep = theorem41_rhs(inp, claim=1)
    assert not rep.all_hold
    assert rep.rhs is None


def test_theorem41_rejects_missing_quantities():
    inp = identity_inputs()
    with pytest.raises(MissingQuantity):
        theorem41_rhs(with_fields(inp, quantities=QuantitySet()), claim=1)


def test_theorem41_rejects_estimate_flag():
    k, ell, p = 2, 3, 2.0
    q = quantities(k + ell, ell, p)
    q.exactness["pi"] = "estimate"
    inp = identity_inputs(k=k, ell=ell, p=p, quantities=QuantitySet([q]))
    with pytest.raises(MissingQuantity):
        theorem41_rhs(inp, claim=1)


def test_theorem41_q_norm_one():
    k, ell, p = 2, 4, 2.0
    inp = identity_inputs(k=k, ell=ell, p=p, lam=0.3)
    rep = theorem41_rhs(inp, claim=2, q_norm=1.0)
    expected = 8.0 * k ** (1 - 0.5) / 0.5 * 0.3 * math.sqrt(k + ell)
    assert rep.rhs == pytest.approx(expected)


# --- coherence bound ---------------------------------------------------------


def test_corollary41_hand_value():
    inp = identity_inputs(k=4, ell=4, p=2.0, d=30, lam=0.1, coherence=0.0)
    rep = corollary41_rhs(inp)
    assert rep.all_hold
    assert rep.rhs == pytest.approx(24.0 * 2.0 * 0.1)  # 8(2-t)/t = 24 at t = 0.5


def test_corollary41_zero_case():
    inp = identity_inputs(lam=0.0, coherence=0.0)
    assert corollary41_rhs(inp).rhs == 0.0


def test_corollary41_p1_tail_term_independent_of_ell():
    base = identity_inputs(k=2, ell=4, p=1.0, d=30, lam=0.0, coherence=0.0, tail1=2.0, tailp=0.0)
    r1 = corollary41_rhs(base)
    r2 = corollary41_rhs(with_fields(base, ell=6))
    # exponent 1/p - 1 = 0 at p = 1, so the tail1 term ignores ell
    assert r1.rhs == pytest.approx(r2.rhs)
    assert r1.rhs == pytest.approx(4 * (8 - 7 * 0.5) / 0.5 * 2.0)


def test_corollary41_coherence_gate():
    inp = identity_inputs(k=4, ell=4, coherence=0.2)  # M(k+ell)=1.6 > 1/3
    rep = corollary41_rhs(inp)
    assert not rep.all_hold and rep.rhs is None


# --- approximation-error bound -------------------------------------------------


def test_corollary51_reduces_to_corollary41_with_doubled_k():
    k, ell, t = 2, 5, 0.5
    tails = dict(tail1=0.7, tailp=0.3)
    c51 = corollary51_rhs(
        identity_inputs(k=k, ell=ell, p=2.0, d=40, lam=0.6, coherence=0.0, approx_err=0.0, **tails)
    )
    c41 = corollary41_rhs(
        identity_inputs(k=2 * k, ell=ell, p=2.0, d=40, lam=0.6, coherence=0.0, **tails)
    )
    assert c51.rhs == pytest.approx(c41.rhs)


def test_corollary51_all_zero():
    inp = identity_inputs(k=2, ell=5, d=40, lam=0.0, coherence=0.0, approx_err=0.0)
    assert corollary51_rhs(inp).rhs == 0.0


def test_corollary51_approx_error_term():
    k, t, eps = 2, 0.5, 0.9
    floor = 4 * (2 - t) / t * eps / math.sqrt(k + 1)
    inp = identity_inputs(k=k, ell=5, d=40, lam=floor, coherence=0.0, approx_err=eps)
    rep = corollary51_rhs(inp)
    assert rep.all_hold
    expected = 8 * (2 - t) / t * math.sqrt(2 * k) * floor + 4 * eps
    assert rep.rhs == pytest.approx(expected)


# --- derived-t 2-norm bound -----------------------------------------------------


def test_corollary61_identity_case():
    k, ell = 3, 4
    qs = QuantitySet([quantities(k + ell, ell, 2.0)])
    inp = identity_inputs(k=k, ell=ell, d=30, lam=0.7, quantities=qs)
    rep = corollary61_rhs(inp)
    assert rep.values["t"] == pytest.approx(1.0)
    assert rep.rhs == pytest.approx(8.0 * math.sqrt(k) * 0.7)


def test_corollary61_zero_case():
    k, ell = 2, 3
    qs = QuantitySet([quantities(k + ell, ell, 2.0)])
    inp = identity_inputs(k=k, ell=ell, lam=0.0, quantities=qs)
    assert corollary61_rhs(inp).rhs == 0.0


def test_corollary61_nonpositive_t_fails():
    k, ell = 2, 3
    qs = QuantitySet([quantities(k + ell, ell, 2.0, pi=5.0)])
    inp = identity_inputs(k=k, ell=ell, quantities=qs)
    rep = corollary61_rhs(inp)
    assert not rep.all_hold and rep.rhs is None


# --- comparison-estimator constants ----------------------------------------------


def test_dantzig_constants_hand_values():
    _, c0, c2 = dantzig_constants(d=50, delta=0.05, t_dantzig=1.0, a_in=0.0, b_in=0.0)
    assert c0 == pytest.approx(4 * math.sqrt(2) + 1 + 1 / math.sqrt(2), abs=1e-10)
    assert c2 == pytest.approx(2 * c0 + 1, abs=1e-10)


def test_dantzig_blowup_near_boundary():
    vals = []
    for b in [0.5, 0.8, 0.95, 0.999]:
        _, _, c2 = dantzig_constants(d=50, delta=0.05, t_dantzig=1e-3, a_in=0.0, b_in=b)
        vals.append(c2)
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert vals[-1] > 1e3


def test_dantzig_lambda_limit():
    d = 100
    lam_d, _, _ = dantzig_constants(d=d, delta=1.0, t_dantzig=1e12, a_in=0.0, b_in=0.0)
    expected = math.sqrt(2 * math.log(d)) * math.sqrt(
        1 - math.log(math.sqrt(math.pi * math.log(d))) / math.log(d)
    )
    assert lam_d == pytest.approx(expected, rel=1e-9)


def test_dantzig_domain_errors():
    with pytest.raises(DomainError):
        dantzig_constants(d=50, delta=0.05, t_dantzig=1.0, a_in=0.6, b_in=0.5)
    with pytest.raises(DomainError):
        dantzig_constants(d=1, delta=0.05, t_dantzig=1.0, a_in=0.0, b_in=0.0)


def test_dantzig_c2_monotone_grid():
    grid = np.linspace(0.0, 0.4, 10)
    c2 = np.array(
        [[dantzig_constants(50, 0.05, 0.1, a, b)[2] for b in grid] for a in grid]
    )
    assert np.all(np.diff(c2, axis=0) > 0)
    assert np.all(np.diff(c2, axis=1) > 0)


def test_dantzig_report_uses_quantities():
    s = 2
    qs = QuantitySet([quantities(2 * s, s, 2.0, rho=1.1, mu=0.9, theta_bar=0.05)])
    inp = identity_inputs(k=2, s=s, t_dantzig=0.5, sigma=1.0, quantities=qs)
    rep = dantzig_report(inp)
    assert rep.all_hold
    assert rep.values["a"] == pytest.approx(0.1, abs=1e-12)
    assert rep.rhs > 0


# --- support-recovery checks -------------------------------------------------------


def test_theorem71_identity_both_routes():
    inp = identity_inputs(k=2, ell=3, lam=0.05, alpha=10.0, epsilon_fs=0.5)
    rep = theorem71_conditions(inp)
    assert rep.all_hold
    assert set(rep.notes) == {"cross-ratio route holds", "inverse-block route holds"}
    assert rep.rhs == pytest.approx(0.5 * 10.0)


def test_theorem71_vanishing_alpha_fails():
    inp = identity_inputs(k=2, ell=3, lam=0.05, alpha=1e-9, epsilon_fs=0.5)
    rep = theorem71_conditions(inp)
    assert not rep.all_hold and rep.rhs is None


def test_corollary71_specialization():
    # gate: k*M <= 0.25, 3k <= d, alpha/32 >= lambda >= 12 sigma sqrt(2 ln(2d/delta)/n)
    n, d, k, sigma, delta = 400, 30, 3, 0.1, 0.05
    floor = 12 * sigma * math.sqrt(2 * math.log(2 * d / delta) / n)
    lam = floor * 1.1
    alpha = 32 * lam * 1.2
    inp = BoundInputs(n=n, d=d, k=k, lam=lam, alpha=alpha, sigma=sigma, delta=delta, coherence=0.05)
    rep = corollary71_conditions(inp)
    assert rep.all_hold
    assert rep.values["epsilon"] == pytest.approx(32 * lam / alpha)


# --- two-stage bound ------------------------------------------------------------------


def two_stage_inputs(**kw):
    k, ell, s, p = 2, 3, 3, 2.0
    qs = QuantitySet([quantities(k + ell, ell, 2.0), quantities(s + ell, ell, p)])
    base = dict(
        n=100,
        d=30,
        k=k,
        ell=ell,
        s=s,
        q=2,
        p=p,
        t=0.5,
        lam=0.12,
        alpha=8.0,
        sigma=0.02,
        a=1.0,
        delta=0.05,
        tailp=0.0,
        quantities=qs,
    )
    base.update(kw)
    return BoundInputs(**base)


def test_theorem81_dimension_free_at_q_equals_k():
    inp = two_stage_inputs(q=2, tailp=0.0)
    rep = theorem81_rhs(inp)
    assert rep.all_hold
    t, mu = 0.5, 1.0
    expected = 8.0 / (t * mu) * 0.02 * (1 + math.sqrt(20 * math.log(1 / 0.05))) * math.sqrt(2 / 100)
    assert rep.rhs == pytest.approx(expected)
    # same lambda, different d: rhs identical (d only moves the floor)
    rep2 = theorem81_rhs(two_stage_inputs(d=300))
    assert rep2.all_hold
    assert rep2.rhs == pytest.approx(rep.rhs)


def test_theorem81_q_zero_recovers_sqrt_k_term():
    rep0 = theorem81_rhs(two_stage_inputs(q=0, sigma=0.0))
    assert rep0.all_hold
    assert rep0.rhs == pytest.approx(8.0 / 0.5 * math.sqrt(2) * 0.12)


def test_theorem81_alpha_window_gate():
    rep = theorem81_rhs(two_stage_inputs(lam=3.0))  # lambda > alpha/2
    assert not rep.all_hold and rep.rhs is None


def test_corollary81_form():
    n, d, s, k, q, sigma, delta = 200, 30, 3, 3, 2, 0.1, 0.05
    floor = 12 * sigma * math.sqrt(2 * math.log(2 * d / delta) / n)
    lam = floor
    alpha = 48 * lam
    inp = BoundInputs(
        n=n, d=d, k=k, s=s, q=q, lam=lam, alpha=alpha, sigma=sigma, delta=delta,
        coherence=0.02, tailp=0.4,
    )
    rep = corollary81_rhs(inp)
    assert rep.all_hold
    expected = (
        24 * math.sqrt(k - q) * lam
        + 24 * sigma * (1 + math.sqrt(20 * q / n * math.log(1 / delta)))
        + 168 * 0.4
    )
    assert rep.rhs == pytest.approx(expected)


# --- shared invariants ------------------------------------------------------------------


@given(
    st.floats(min_value=0.0, max_value=2.0),
    st.floats(min_value=0.0, max_value=2.0),
    st.floats(min_value=0.0, max_value=1.0),
)
@settings(max_examples=40, deadline=None)
def test_monotone_in_lambda_tails_sigma(extra_lam, extra_tail, extra_sigma):
    base = identity_inputs(k=2, ell=3, d=30, n=200, lam=5.0, sigma=0.5, tail1=1.0, tailp=0.5, coherence=0.0)
    rep = corollary41_rhs(base)
    bumped = corollary41_rhs(
        with_fields(
            base,
            lam=base.lam + extra_lam,
            tail1=base.tail1 + extra_tail,
            tailp=base.tailp + extra_tail,
            sigma=base.sigma + extra_sigma,
        )
    )
    assert rep.all_hold and bumped.all_hold
    assert bumped.rhs >= rep.rhs - 1e-12


def test_all_rhs_zero_at_zero_inputs():
    zero41 = identity_inputs(k=2, ell=5, d=40, lam=0.0, coherence=0.0)
    assert corollary41_rhs(zero41).rhs == 0.0
    assert corollary51_rhs(with_fields(zero41, approx_err=0.0)).rhs == 0.0
    qs61 = QuantitySet([quantities(7, 5, 2.0)])
    assert corollary61_rhs(with_fields(zero41, quantities=qs61)).rhs == 0.0
    rep81 = theorem81_rhs(two_stage_inputs(lam=0.0, sigma=0.0, q=0, tailp=0.0))
    assert rep81.all_hold and rep81.rhs == 0.0


@given(st.floats(min_value=0.0, max_value=0.02), st.floats(min_value=0.0, max_value=0.5))
@settings(max_examples=30, deadline=None)
def test_two_stage_bound_monotone(extra_lam, extra_tail):
    base = two_stage_inputs(tailp=0.2)
    rep = theorem81_rhs(base)
    bumped = theorem81_rhs(with_fields(base, lam=base.lam + extra_lam, tailp=base.tailp + extra_tail))
    assert rep.all_hold
    if bumped.all_hold:  # a larger lambda can exit the selection window
        assert bumped.rhs >= rep.rhs - 1e-12


@given(st.floats(min_value=0.0, max_value=2.0), st.floats(min_value=0.0, max_value=1.0))
@settings(max_examples=30, deadline=None)
def test_derived_t_bound_monotone(extra_lam, extra_tail):
    k, ell = 2, 3
    qs = QuantitySet([quantities(k + ell, ell, 2.0, rho=1.2, mu=0.8, omega=0.8, theta=0.1, pi=0.2)])
    base = identity_inputs(k=k, ell=ell, d=30, lam=1.0, tail1=0.5, tailp=0.3, quantities=qs)
    rep = corollary61_rhs(base)
    bumped = corollary61_rhs(
        with_fields(base, lam=base.lam + extra_lam, tail1=base.tail1 + extra_tail, tailp=base.tailp + extra_tail)
    )
    assert rep.all_hold and bumped.all_hold
    assert bumped.rhs >= rep.rhs - 1e-12


def test_gate_soundness_across_registry():
    # every evaluator leaves rhs undefined when a condition fails
    bad = identity_inputs(k=5, ell=2, coherence=0.0, approx_err=0.0, s=3, q=1,
                          alpha=1.0, epsilon_fs=0.5, t_dantzig=0.5)  # k > ell
    for name in ("theorem41_claim1", "theorem41_claim2", "corollary41", "corollary51"):
        rep = evaluate_bound(name, bad)
        assert not rep.all_hold
        assert rep.rhs is None


def test_registry_unknown_name():
    with pytest.raises(KeyError):
        evaluate_bound("nonsense", identity_inputs())
