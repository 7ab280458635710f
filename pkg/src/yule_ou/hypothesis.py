"""Independence tests for the pair, confidence intervals for r, the
multi-mode field test, and explicit type-II error bounds.

All rejection regions are two-sided with the upper normal quantile
q = upper_quantile(alpha/2):

    rho, known theta:      |sqrt(T) rho|     > q / sqrt(theta)
    rho, estimated theta:  |sqrt(T that) rho| > q
    numerator:             |Y12 / sqrt(T)|   > q / (2 theta^{3/2})

Ties never reject (a measure-zero event, resolved deterministically).
"""

import math
from dataclasses import dataclass
from enum import Enum

from .errors import DegenerateStatisticError, ParameterError
from .gaussian import upper_quantile
from .theory import chaos_constants


class TestVariant(str, Enum):
    RHO_KNOWN_THETA = "rho_known_theta"
    RHO_ESTIMATED_THETA = "rho_estimated_theta"
    NUMERATOR_KNOWN_THETA = "numerator_known_theta"


class ThetaMode(str, Enum):
    KNOWN = "known"
    ESTIMATED = "estimated"


@dataclass(frozen=True)
class TestOutcome:
    statistic: float
    threshold: float
    alpha: float
    reject: bool
    variant: TestVariant

    def to_dict(self):
        return {"statistic": self.statistic, "threshold": self.threshold,
                "alpha": self.alpha, "reject": self.reject,
                "variant": self.variant.value}


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    alpha: float
    theta_mode: ThetaMode

    def contains(self, value):
        return self.lower <= value <= self.upper

    def to_dict(self):
        return {"lower": self.lower, "upper": self.upper,
                "alpha": self.alpha, "theta_mode": self.theta_mode.value}


@dataclass(frozen=True)
class MultiModeOutcome:
    per_mode: tuple
    reject_any: bool
    n_modes: int

    def to_dict(self):
        return {"n_modes": self.n_modes, "reject_any": self.reject_any,
                "per_mode": [o.to_dict() for o in self.per_mode]}


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")


def _outcome(statistic, threshold, alpha, variant):
    return TestOutcome(statistic=float(statistic), threshold=float(threshold),
                       alpha=alpha, reject=bool(abs(statistic) > threshold),
                       variant=variant)


# ---------------------------------------------------------------------------
# Single-pair tests
# ---------------------------------------------------------------------------

def rho_test(stats, theta, alpha):
    """Known-rate test on sqrt(T)*rho against q_{alpha/2}/sqrt(theta)."""
    _check_alpha(alpha)
    if theta <= 0:
        raise ParameterError("theta must be positive")
    statistic = math.sqrt(stats.horizon_T) * stats.rho
    threshold = upper_quantile(alpha / 2.0) / math.sqrt(theta)
    return _outcome(statistic, threshold, alpha, TestVariant.RHO_KNOWN_THETA)


def rho_test_estimated_theta(stats, alpha):
    """Plug-in test on sqrt(T*theta_hat)*rho against q_{alpha/2}."""
    _check_alpha(alpha)
    if not stats.theta_hat > 0 or not math.isfinite(stats.theta_hat):
        raise DegenerateStatisticError("degenerate theta estimate")
    statistic = math.sqrt(stats.horizon_T * stats.theta_hat) * stats.rho
    threshold = upper_quantile(alpha / 2.0)
    return _outcome(statistic, threshold, alpha, TestVariant.RHO_ESTIMATED_THETA)


def numerator_test(num_stat, theta, alpha):
    """Test on the scaled cross functional Y12/sqrt(T) itself."""
    _check_alpha(alpha)
    if theta <= 0:
        raise ParameterError("theta must be positive")
    threshold = upper_quantile(alpha / 2.0) / (2.0 * theta ** 1.5)
    return _outcome(num_stat, threshold, alpha, TestVariant.NUMERATOR_KNOWN_THETA)


def confidence_interval_r(stats, alpha, theta_mode=ThetaMode.ESTIMATED, theta=None):
    """Asymptotic level-(1-alpha) interval rho +- q sqrt(1+rho^2)/sqrt(theta T)."""
    _check_alpha(alpha)
    mode = ThetaMode(theta_mode)
    if mode is ThetaMode.KNOWN:
        if theta is None or theta <= 0:
            raise ParameterError("known mode requires a positive theta")
        scale = theta
    else:
        scale = stats.theta_hat
        if not scale > 0 or not math.isfinite(scale):
            raise DegenerateStatisticError("degenerate theta estimate")
    half = upper_quantile(alpha / 2.0) * math.sqrt(1.0 + stats.rho ** 2) \
        / math.sqrt(scale * stats.horizon_T)
    return ConfidenceInterval(lower=stats.rho - half, upper=stats.rho + half,
                              alpha=alpha, theta_mode=mode)


# ---------------------------------------------------------------------------
# Multi-mode field test
# ---------------------------------------------------------------------------

def sidak_level(alpha, n_modes):
    """Per-mode level 1 - (1-alpha)^(1/N) equalizing the family rate to alpha."""
    _check_alpha(alpha)
    return 1.0 - (1.0 - alpha) ** (1.0 / n_modes)


def spde_multimode_test(ensemble_stats, alpha, variant=TestVariant.RHO_KNOWN_THETA,
                        sidak=False):
    """Apply the chosen per-mode test (mode k at theta = k^2); reject on any mode.

    The default tests each mode at level alpha (family rate 1-(1-alpha)^N);
    sidak=True corrects the per-mode level so the family rate is alpha.
    """
    _check_alpha(alpha)
    ensemble_stats = tuple(ensemble_stats)
    if not ensemble_stats:
        raise ParameterError("empty ensemble")
    variant = TestVariant(variant)
    level = sidak_level(alpha, len(ensemble_stats)) if sidak else alpha

    outcomes = []
    for k, stats in enumerate(ensemble_stats, start=1):
        theta_k = float(k * k)
        if variant is TestVariant.RHO_KNOWN_THETA:
            out = rho_test(stats, theta_k, level)
        elif variant is TestVariant.RHO_ESTIMATED_THETA:
            out = rho_test_estimated_theta(stats, level)
        else:
            out = numerator_test(stats.y12 / math.sqrt(stats.horizon_T), theta_k, level)
        outcomes.append(out)
    return MultiModeOutcome(per_mode=tuple(outcomes),
                            reject_any=any(o.reject for o in outcomes),
                            n_modes=len(outcomes))


# ---------------------------------------------------------------------------
# Type-II error bounds
# ---------------------------------------------------------------------------

def type2_bound_rho(theta, r, alpha, horizon_T, berry_constant):
    """Bound on the miss probability of the known-rate rho test.

    Sum of the explicit Gaussian-tail term

        (2 c / (sigma sqrt(2 pi))) * exp(-((c - |r| sqrt(T)) / sigma)^2 / 2),
        c = q_{alpha/2} / sqrt(theta),

    and the caller-calibrated normal-approximation term berry_constant * T^{-1/4}.
    """
    _check_alpha(alpha)
    if r == 0.0:
        raise ParameterError("bound is defined under the alternative (r != 0)")
    if horizon_T <= 0:
        raise ParameterError("horizon_T must be positive")
    if berry_constant < 0:
        raise ParameterError("berry_constant must be nonnegative")
    sigma = chaos_constants(theta, r).sigma
    c = upper_quantile(alpha / 2.0) / math.sqrt(theta)
    z = (c - abs(r) * math.sqrt(horizon_T)) / sigma
    tail = 2.0 * c / (sigma * math.sqrt(2.0 * math.pi)) * math.exp(-0.5 * z * z)
    return tail + berry_constant * horizon_T ** -0.25


def type2_bound_numerator(theta, r, alpha, horizon_T, berry_constant):
    """Bound on the miss probability of the numerator test.

    Gaussian-tail term sqrt(2/pi) * (c/sigma) * exp(-((c - |r| sqrt(T)/(2 theta))/sigma)^2/2)
    with c = q_{alpha/2}/(2 theta^{3/2}), plus berry_constant * ln(T)/sqrt(T).
    Requires T > e so the log factor exceeds one.
    """
    _check_alpha(alpha)
    if r == 0.0:
        raise ParameterError("bound is defined under the alternative (r != 0)")
    if horizon_T <= math.e:
        raise ParameterError("horizon_T must exceed e")
    if berry_constant < 0:
        raise ParameterError("berry_constant must be nonnegative")
    sigma = chaos_constants(theta, r).sigma
    c = upper_quantile(alpha / 2.0) / (2.0 * theta ** 1.5)
    z = (c - abs(r) * math.sqrt(horizon_T) / (2.0 * theta)) / sigma
    tail = math.sqrt(2.0 / math.pi) * (c / sigma) * math.exp(-0.5 * z * z)
    return tail + berry_constant * math.log(horizon_T) / math.sqrt(horizon_T)


def numerator_bound_valid_from(theta, r, alpha):
    """Horizon 4 theta^2 c_alpha^2 / r^2 past which the numerator tail term applies."""
    _check_alpha(alpha)
    if r == 0.0:
        raise ParameterError("undefined at r = 0")
    c = upper_quantile(alpha / 2.0) / (2.0 * theta ** 1.5)
    return 4.0 * theta * theta * c * c / (r * r)


def calibrate_berry_constant(kind, theta, r, alpha, horizon_T, empirical_beta):
    """Fit berry_constant from one empirical miss rate at a small horizon.

    Solves tail(T) + berry * rate(T) = empirical_beta for berry, floored at 0.
    kind is "rho" (rate T^{-1/4}) or "numerator" (rate ln(T)/sqrt(T)).
    """
    if kind == "rho":
        tail = type2_bound_rho(theta, r, alpha, horizon_T, 0.0)
        rate = horizon_T ** -0.25
    elif kind == "numerator":
        tail = type2_bound_numerator(theta, r, alpha, horizon_T, 0.0)
        rate = math.log(horizon_T) / math.sqrt(horizon_T)
    else:
        raise ParameterError(f"unknown bound kind {kind!r}")
    return max(0.0, (empirical_beta - tail) / rate)


def spde_type2_bound(per_mode_bounds):
    """Product of per-mode miss bounds, each clamped to at most one."""
    bounds = [float(b) for b in per_mode_bounds]
    if not bounds:
        raise ParameterError("empty bound sequence")
    if any(b < 0 for b in bounds):
        raise ParameterError("bounds must be nonnegative")
    product = 1.0
    for b in bounds:
        product *= min(b, 1.0)
    return product


def write_outcomes_csv(fileobj, rows, header_comment=None):
    """Write batch test outcomes as `variant,alpha,theta,r,T,statistic,threshold,reject`.

    Each row is (variant, alpha, theta, r, T, outcome).
    """
    if header_comment:
        fileobj.write(f"# {header_comment}\n")
    fileobj.write("variant,alpha,theta,r,T,statistic,threshold,reject\n")
    for variant, alpha, theta, r, horizon_T, out in rows:
        name = TestVariant(variant).value
        fileobj.write(f"{name},{alpha:.17g},{theta:.17g},{r:.17g},{horizon_T:.17g},"
                      f"{out.statistic:.17g},{out.threshold:.17g},{int(out.reject)}\n")
