"""Independence tests: thresholds, decision logic, intervals, multi-mode
family behavior, and the explicit type-II bounds."""

import io
import math

import numpy as np
import pytest

from yule_ou.errors import ParameterError
from yule_ou.estimators import PathPair, YuleStatistics, yule_rho
from yule_ou.hypothesis import (TestVariant, ThetaMode, calibrate_berry_constant,
                                confidence_interval_r, numerator_bound_valid_from,
                                numerator_test, rho_test, rho_test_estimated_theta,
                                sidak_level, spde_multimode_test, spde_type2_bound,
                                type2_bound_numerator, type2_bound_rho,
                                write_outcomes_csv)
from yule_ou.sde import CorrelatedPairConfig, SamplePath, simulate_correlated_pair

Q975 = 1.959963984540054


def _stats(rho=0.2, theta_hat=1.0, T=100.0):
    scale = T / (2.0 * theta_hat)
    return YuleStatistics(y11=scale, y22=scale, y12=rho * scale, rho=rho,
                          theta_hat=theta_hat, horizon_T=T)


# ---------------------------------------------------------------------------
# Thresholds and basic decisions
# ---------------------------------------------------------------------------

def test_rho_test_threshold():
    out = rho_test(_stats(), theta=4.0, alpha=0.05)
    assert out.threshold == pytest.approx(Q975 / 2.0, abs=1e-9)
    assert out.threshold == pytest.approx(0.979982, abs=1e-6)
    assert out.statistic == pytest.approx(math.sqrt(100.0) * 0.2, rel=1e-12)


def test_rho_test_zero_never_rejects():
    for alpha in (0.9, 0.5, 0.05, 1e-6):
        assert not rho_test(_stats(rho=0.0), theta=1.0, alpha=alpha).reject


def test_tie_does_not_reject():
    stats = _stats(rho=0.1, T=100.0)
    out = rho_test(stats, theta=1.0, alpha=0.05)
    tie = YuleStatistics(y11=stats.y11, y22=stats.y22, y12=stats.y12,
                         rho=out.threshold / 10.0, theta_hat=1.0, horizon_T=100.0)
    assert not rho_test(tie, theta=1.0, alpha=0.05).reject


def test_alpha_monotonicity():
    stats = _stats(rho=0.15, T=200.0)
    rejected = False
    for alpha in (0.001, 0.01, 0.05, 0.1, 0.3, 0.6):
        now = rho_test(stats, theta=1.0, alpha=alpha).reject
        assert now or not rejected  # raising alpha never flips reject -> accept
        rejected = rejected or now


def test_estimated_theta_threshold_and_equivalence():
    out = rho_test_estimated_theta(_stats(theta_hat=3.0), alpha=0.05)
    assert out.threshold == pytest.approx(1.959964, abs=1e-6)
    # when theta_hat equals the true theta the two regions agree
    for rho in (-0.4, 0.01, 0.18, 0.6):
        stats = _stats(rho=rho, theta_hat=2.5, T=150.0)
        a = rho_test(stats, theta=2.5, alpha=0.05)
        b = rho_test_estimated_theta(stats, alpha=0.05)
        assert a.reject == b.reject


def test_numerator_test_threshold():
    out = numerator_test(0.1, theta=1.0, alpha=0.05)
    assert out.threshold == pytest.approx(0.979982, abs=1e-6)
    assert not numerator_test(0.0, theta=2.0, alpha=0.05).reject


def test_invalid_alpha():
    for alpha in (0.0, 1.0, -1.0):
        with pytest.raises(ParameterError):
            rho_test(_stats(), theta=1.0, alpha=alpha)
        with pytest.raises(ParameterError):
            numerator_test(0.1, theta=1.0, alpha=alpha)


def test_scale_invariance_of_known_theta_decision():
    cfg = CorrelatedPairConfig(theta=1.0, r=0.5, horizon_T=50.0, dt=0.05, seed=2)
    pair = simulate_correlated_pair(cfg)
    base = rho_test(yule_rho(pair), theta=1.0, alpha=0.05)
    for a, c in ((2.0, 3.0), (0.1, 7.0), (5.0, 0.2)):
        scaled = PathPair(x1=SamplePath(0.0, pair.x1.dt, a * pair.x1.values),
                          x2=SamplePath(0.0, pair.x2.dt, c * pair.x2.values))
        out = rho_test(yule_rho(scaled), theta=1.0, alpha=0.05)
        assert out.reject == base.reject
        assert out.statistic == pytest.approx(base.statistic, rel=1e-10)


# ---------------------------------------------------------------------------
# Confidence intervals
# ---------------------------------------------------------------------------

def test_ci_half_width_known_theta():
    ci = confidence_interval_r(_stats(rho=0.0, T=400.0), alpha=0.05,
                               theta_mode=ThetaMode.KNOWN, theta=1.0)
    half = (ci.upper - ci.lower) / 2.0
    assert half == pytest.approx(Q975 / 20.0, rel=1e-9)
    assert half == pytest.approx(0.097998, abs=1e-6)
    assert (ci.lower + ci.upper) / 2.0 == pytest.approx(0.0, abs=1e-15)


def test_ci_width_scales_with_rho():
    flat = confidence_interval_r(_stats(rho=0.0), 0.05, ThetaMode.KNOWN, theta=1.0)
    peak = confidence_interval_r(_stats(rho=1.0), 0.05, ThetaMode.KNOWN, theta=1.0)
    ratio = (peak.upper - peak.lower) / (flat.upper - flat.lower)
    assert ratio == pytest.approx(math.sqrt(2.0), rel=1e-12)


def test_ci_estimated_theta_uses_theta_hat():
    stats = _stats(rho=0.1, theta_hat=4.0, T=100.0)
    known = confidence_interval_r(stats, 0.05, ThetaMode.KNOWN, theta=4.0)
    est = confidence_interval_r(stats, 0.05, ThetaMode.ESTIMATED)
    assert known.lower == pytest.approx(est.lower, rel=1e-12)
    assert known.upper == pytest.approx(est.upper, rel=1e-12)


def test_ci_requires_theta_in_known_mode():
    with pytest.raises(ParameterError):
        confidence_interval_r(_stats(), 0.05, ThetaMode.KNOWN)


def test_ci_coverage_mc():
    """Empirical coverage of the known-theta interval.

    At r=0 the interval is asymptotically exact (coverage -> 0.95).  Under
    the alternative the sqrt(1+rho^2) width is conservative: the true
    sampling sd of rho is (1-r^2)/sqrt(theta T), so coverage approaches
    2*Phi(q*sqrt(1+r^2)/(1-r^2)) - 1 ~= 0.9965 at r=0.5.
    """
    from yule_ou.mc import pair_sample
    from yule_ou.gaussian import norm_cdf
    reps = 1000
    for r, lo_expect, hi_expect in ((0.0, 0.93, 0.97), (0.5, 0.985, 1.0)):
        s = pair_sample(1.0, r, 500.0, replications=reps, base_seed=101)
        half = Q975 * np.sqrt(1.0 + s.rho ** 2) / math.sqrt(1.0 * s.horizon_T)
        covered = np.mean(np.abs(s.rho - r) <= half)
        assert lo_expect <= covered <= hi_expect, (r, covered)
    # sanity: the r=0.5 prediction itself
    predicted = 2 * norm_cdf(Q975 * math.sqrt(1.25) / 0.75) - 1
    assert predicted == pytest.approx(0.9965, abs=5e-4)


# ---------------------------------------------------------------------------
# Multi-mode test
# ---------------------------------------------------------------------------

def _mode_stats(rhos, T=100.0):
    out = []
    for k, rho in enumerate(rhos, start=1):
        theta_k = float(k * k)
        scale = T / (2.0 * theta_k)
        out.append(YuleStatistics(y11=scale, y22=scale, y12=rho * scale,
                                  rho=rho, theta_hat=theta_k, horizon_T=T))
    return out


def test_multimode_single_mode_reduction():
    stats = _mode_stats([0.3])
    multi = spde_multimode_test(stats, alpha=0.05)
    single = rho_test(stats[0], theta=1.0, alpha=0.05)
    assert multi.n_modes == 1
    assert multi.reject_any == single.reject
    assert multi.per_mode[0].statistic == pytest.approx(single.statistic, rel=1e-14)


def test_multimode_thresholds_scale_as_inverse_k():
    multi = spde_multimode_test(_mode_stats([0.0, 0.0, 0.0]), alpha=0.05)
    got = [o.threshold for o in multi.per_mode]
    np.testing.assert_allclose(got, [Q975, Q975 / 2, Q975 / 3], rtol=1e-9)
    np.testing.assert_allclose(got, [1.959964, 0.979982, 0.653321], atol=1e-6)


def test_multimode_reject_any_logic():
    multi = spde_multimode_test(_mode_stats([0.0, 0.0, 0.9]), alpha=0.05)
    assert [o.reject for o in multi.per_mode] == [False, False, True]
    assert multi.reject_any
    multi0 = spde_multimode_test(_mode_stats([0.0, 0.0, 0.0]), alpha=0.05)
    assert not multi0.reject_any


def test_multimode_sidak_level():
    assert sidak_level(0.05, 3) == pytest.approx(1 - 0.95 ** (1 / 3), rel=1e-12)
    plain = spde_multimode_test(_mode_stats([0.0] * 3), alpha=0.05)
    strict = spde_multimode_test(_mode_stats([0.0] * 3), alpha=0.05, sidak=True)
    assert all(s.threshold > p.threshold
               for s, p in zip(strict.per_mode, plain.per_mode))


def test_multimode_empty_errors():
    with pytest.raises(ParameterError):
        spde_multimode_test([], alpha=0.05)


def test_multimode_numerator_variant():
    stats = _mode_stats([0.0, 0.0])
    multi = spde_multimode_test(stats, alpha=0.05,
                                variant=TestVariant.NUMERATOR_KNOWN_THETA)
    # mode-k threshold q/(2 k^3)
    np.testing.assert_allclose([o.threshold for o in multi.per_mode],
                               [Q975 / 2.0, Q975 / 16.0], rtol=1e-9)


# ---------------------------------------------------------------------------
# Type-II bounds
# ---------------------------------------------------------------------------

def test_type2_rho_tail_term_value():
    # independent recomputation of the implemented half-exponent formula
    theta, r, alpha, T = 1.0, 0.5, 0.05, 100.0
    sigma = math.sqrt((1 + r * r) / (4 * theta ** 3))
    c = Q975 / math.sqrt(theta)
    z = (c - abs(r) * math.sqrt(T)) / sigma
    want = 2 * c / (sigma * math.sqrt(2 * math.pi)) * math.exp(-0.5 * z * z)
    got = type2_bound_rho(theta, r, alpha, T, berry_constant=0.0)
    assert got == pytest.approx(want, rel=1e-12)
    # decomposition: prefactor ~2.797, exponent ~-14.79
    assert 2 * c / (sigma * math.sqrt(2 * math.pi)) == pytest.approx(2.797, abs=2e-3)
    assert -0.5 * z * z == pytest.approx(-14.787, abs=2e-3)


def test_type2_rho_vanishes_in_T():
    vals = [type2_bound_rho(1.0, 0.5, 0.05, T, 0.1) for T in (50, 100, 400, 1600)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 0.02


def test_type2_rho_domain():
    with pytest.raises(ParameterError):
        type2_bound_rho(1.0, 0.0, 0.05, 100.0, 0.0)


def test_type2_numerator_values():
    # validity horizon T > 4 theta^2 c^2 / r^2
    assert numerator_bound_valid_from(1.0, 0.5, 0.05) == pytest.approx(15.37, abs=0.01)
    # berry term ln(1e4)/100
    got = type2_bound_numerator(1.0, 0.5, 0.05, 1e4, berry_constant=1.0)
    tail = type2_bound_numerator(1.0, 0.5, 0.05, 1e4, berry_constant=0.0)
    assert got - tail == pytest.approx(math.log(1e4) / 100.0, rel=1e-12)
    assert got - tail == pytest.approx(0.0921, abs=1e-4)
    with pytest.raises(ParameterError):
        type2_bound_numerator(1.0, 0.5, 0.05, 2.0, 0.0)  # T <= e


def test_type2_bounds_dominate_empirical_beta():
    # calibrate at T=50, check domination at larger horizons (r=0.5 and 0.3)
    from yule_ou.mc import pair_sample, rejections
    theta, alpha, reps = 1.0, 0.05, 2000

    def beta_hat(r, T, variant):
        s = pair_sample(theta, r, T, replications=reps, base_seed=303)
        return 1.0 - rejections(s, variant, alpha).mean()

    for r, variant, kind in ((0.5, "rho_known_theta", "rho"),
                             (0.3, "numerator_known_theta", "numerator")):
        beta50 = beta_hat(r, 50.0, variant)
        berry = calibrate_berry_constant(kind, theta, r, alpha, 50.0, beta50)
        for T in (100.0, 200.0):
            bound = (type2_bound_rho(theta, r, alpha, T, berry) if kind == "rho"
                     else type2_bound_numerator(theta, r, alpha, T, berry))
            emp = beta_hat(r, T, variant)
            assert emp <= bound + 2 * math.sqrt(0.25 / reps), (r, T, emp, bound)


def test_spde_type2_bound_products():
    assert spde_type2_bound([0.42]) == pytest.approx(0.42, rel=1e-15)
    assert spde_type2_bound([0.5, 0.0, 0.9]) == 0.0
    assert spde_type2_bound([0.1, 0.1, 0.1]) == pytest.approx(1e-3, rel=1e-12)
    assert spde_type2_bound([2.5, 0.5]) == pytest.approx(0.5, rel=1e-12)  # clamped
    with pytest.raises(ParameterError):
        spde_type2_bound([])


def test_outcomes_csv_schema():
    out = rho_test(_stats(rho=0.5, T=100.0), theta=1.0, alpha=0.05)
    buf = io.StringIO()
    write_outcomes_csv(buf, [("rho_known_theta", 0.05, 1.0, 0.5, 100.0, out)],
                       header_comment="config: {}")
    lines = buf.getvalue().strip().splitlines()
    assert lines[1] == "variant,alpha,theta,r,T,statistic,threshold,reject"
    fields = lines[2].split(",")
    assert fields[0] == "rho_known_theta"
    assert fields[-1] == "1"
