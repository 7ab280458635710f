"""Closed-form constants and asymptotics of the correlated-pair statistic.

Houses the rotation coefficients c1, c2, the limiting standard deviation
sigma of the scaled cross functional, the limiting variance of the
correlation statistic, cumulant constants and their convolution inner
products, the finite-horizon second moment of the chaos term, kernel
norms, the Edgeworth tail correction, and auxiliary deviation bounds.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import ParameterError
from .sde import _check_positive


@dataclass(frozen=True)
class ChaosConstants:
    """Rotation coefficients and the limit scale of the cross functional.

    c1 = r*sqrt(2)/2 + sqrt(1-r^2)/2,  c2 = r*sqrt(2)/2 - sqrt(1-r^2)/2,
    sigma^2 = (1 + r^2) / (4*theta^3).
    """

    c1: float
    c2: float
    sigma: float
    theta: float
    r: float


@dataclass(frozen=True)
class KernelSpec:
    """Parameters of the exponential second-chaos kernels h_T and g_T."""

    theta: float
    r: float
    horizon_T: float

    def __post_init__(self):
        _check_positive(theta=self.theta, horizon_T=self.horizon_T)
        if abs(self.r) > 1.0:
            raise ParameterError(f"|r| must be <= 1, got {self.r}")


def chaos_constants(theta, r):
    _check_positive(theta=theta)
    if abs(r) > 1.0:
        raise ParameterError(f"|r| must be <= 1, got {r}")
    root = math.sqrt(1.0 - r * r)
    c1 = 0.5 * (r * math.sqrt(2.0) + root)
    c2 = 0.5 * (r * math.sqrt(2.0) - root)
    sigma = math.sqrt((1.0 + r * r) / (4.0 * theta ** 3))
    return ChaosConstants(c1=c1, c2=c2, sigma=sigma, theta=theta, r=r)


def clt_variance_rho(theta, r):
    """Limiting variance (1 + r^2)/theta of sqrt(T)*(rho(T) - r)."""
    _check_positive(theta=theta)
    return (1.0 + r * r) / theta


def cumulant_bound_constants(theta, r):
    """The two cumulant bound constants

    max(16/(9*theta^5) * |c_i|^3, 81/(8*theta^7) * c_i^4),  i = 1, 2,

    which dominate sqrt(T) * max(k3, k4) of the two rotated chaos terms.
    """
    cc = chaos_constants(theta, r)
    out = []
    for c in (cc.c1, cc.c2):
        out.append(max(16.0 / (9.0 * theta ** 5) * abs(c) ** 3,
                       81.0 / (8.0 * theta ** 7) * c ** 4))
    return tuple(out)


# ---------------------------------------------------------------------------
# Convolution inner products of the exponential kernel
# ---------------------------------------------------------------------------

def delta_convolution_inner(p, theta):
    """Inner product <delta^{*(p-1)}, delta> for delta(x) = exp(-theta|x|)/(2*theta).

    Evaluated by adaptive quadrature of the spectral representation
    (1/pi) * int_0^inf (theta^2 + w^2)^{-p} dw, since the Fourier transform
    of delta is 1/(theta^2 + w^2).
    """
    if int(p) != p or p < 2:
        raise ParameterError(f"p must be an integer >= 2, got {p}")
    _check_positive(theta=theta)
    p = int(p)
    value, _ = quad(lambda w: (theta * theta + w * w) ** (-p), 0.0, np.inf,
                    epsabs=1e-14, epsrel=1e-12, limit=200)
    return value / math.pi


def asymptotic_cumulant(p, theta, r, horizon_T):
    """Leading-order cumulant k_p of the standardized chaos variable,

    <delta^{*(p-1)}, delta> * 2^{2p-1} * (p-1)! * (c1^p + c2^p) * theta^{3p/2}
        / (T^{p/2-1} * (1+r^2)^{p/2}).
    """
    if int(p) != p or p < 3:
        raise ParameterError(f"p must be an integer >= 3, got {p}")
    _check_positive(theta=theta, horizon_T=horizon_T)
    p = int(p)
    cc = chaos_constants(theta, r)
    inner = delta_convolution_inner(p, theta)
    num = inner * 2.0 ** (2 * p - 1) * math.factorial(p - 1) \
        * (cc.c1 ** p + cc.c2 ** p) * theta ** (1.5 * p)
    return num / (horizon_T ** (0.5 * p - 1) * (1.0 + r * r) ** (0.5 * p))


# ---------------------------------------------------------------------------
# Finite-horizon second moment of the chaos term
# ---------------------------------------------------------------------------

def chaos_base_variance(theta, horizon_T):
    """V(theta, T) = (2/T) * double integral of the squared covariance kernel.

    Re-derived closed form (validated against 2-d quadrature):

        V = 1/(2 theta^3) + e^{-2 theta T}/theta^3
            - (1 - e^{-2 theta T})/(2 theta^4 T)
            - (1 - e^{-4 theta T})/(8 theta^4 T).
    """
    _check_positive(theta=theta, horizon_T=horizon_T)
    th, T = theta, horizon_T
    e2 = math.exp(-2.0 * th * T)
    return (0.5 / th ** 3 + e2 / th ** 3
            + math.expm1(-2.0 * th * T) / (2.0 * th ** 4 * T)
            + math.expm1(-4.0 * th * T) / (8.0 * th ** 4 * T))


def exact_second_moment_Ar(theta, r, horizon_T, standardized=False):
    """Exact second moment (c1^2 + c2^2) * V(theta, T) of the chaos term.

    With standardized=True the value is divided by sigma^2, so it tends
    to 1 as T grows.
    """
    cc = chaos_constants(theta, r)
    value = (cc.c1 ** 2 + cc.c2 ** 2) * chaos_base_variance(theta, horizon_T)
    if standardized:
        value /= cc.sigma ** 2
    return value


# ---------------------------------------------------------------------------
# Kernel values and norms
# ---------------------------------------------------------------------------

def kernel_h_value(spec, t, s):
    """h_T(t, s): exponential kernel on the two diagonal squares.

    (1/(2 theta sqrt(T))) * [c1 on [0,T]^2 + c2 on [-T,0]^2] * e^{-theta|t-s|}.
    """
    cc = chaos_constants(spec.theta, spec.r)
    T = spec.horizon_T
    base = math.exp(-spec.theta * abs(t - s)) / (2.0 * spec.theta * math.sqrt(T))
    if 0.0 <= t <= T and 0.0 <= s <= T:
        return cc.c1 * base
    if -T <= t <= 0.0 and -T <= s <= 0.0:
        return cc.c2 * base
    return 0.0


def kernel_g_value(spec, t, s):
    """g_T(t, s): the boundary remainder kernel.

    (1/(2 theta sqrt(T))) * [c1 on [0,T]^2 + c2 on [-T,0]^2]
        * e^{-2 theta T} * e^{theta(|t|+|s|)}.
    """
    cc = chaos_constants(spec.theta, spec.r)
    T = spec.horizon_T
    base = math.exp(-2.0 * spec.theta * T + spec.theta * (abs(t) + abs(s)))
    base /= 2.0 * spec.theta * math.sqrt(T)
    if 0.0 <= t <= T and 0.0 <= s <= T:
        return cc.c1 * base
    if -T <= t <= 0.0 and -T <= s <= 0.0:
        return cc.c2 * base
    return 0.0


def kernel_h_norm(spec):
    """L2 norm of h_T; increases to kernel_h_norm_limit as T grows."""
    th, T = spec.theta, spec.horizon_T
    csq = (1.0 + spec.r ** 2) / 2.0
    integral = 1.0 / th + math.expm1(-2.0 * th * T) / (2.0 * th * th * T)
    return math.sqrt(csq / (4.0 * th * th) * integral)


def kernel_h_norm_limit(theta, r):
    """Limit sqrt(1+r^2) / (2 sqrt(2) theta^{3/2}) = sigma / sqrt(2)."""
    _check_positive(theta=theta)
    return math.sqrt(1.0 + r * r) / (2.0 * math.sqrt(2.0) * theta ** 1.5)


def kernel_g_norm(spec):
    """L2 norm sqrt(r^2+1) * (1 - e^{-2 theta T}) / (4 sqrt(2) theta^2 sqrt(T))."""
    th, T = spec.theta, spec.horizon_T
    return (math.sqrt(spec.r ** 2 + 1.0) * -math.expm1(-2.0 * th * T)
            / (4.0 * math.sqrt(2.0) * th * th * math.sqrt(T)))


# ---------------------------------------------------------------------------
# Edgeworth tail and deviation bounds
# ---------------------------------------------------------------------------

def eta_constant(theta, r):
    """Edgeworth coefficient

    eta = (<delta^{*2}, delta> / sqrt(pi)) * 4 * theta^{9/2} * r(3 - r^2) / (1+r^2)^{3/2}.
    """
    _check_positive(theta=theta)
    inner = delta_convolution_inner(3, theta)
    return (inner / math.sqrt(math.pi)) * 4.0 * theta ** 4.5 \
        * r * (3.0 - r * r) / (1.0 + r * r) ** 1.5


def edgeworth_tail(z, theta, r, horizon_T):
    """Leading CDF correction eta * (1 - z^2) * e^{-z^2/2} / sqrt(T) at fixed z."""
    _check_positive(horizon_T=horizon_T)
    return eta_constant(theta, r) * (1.0 - z * z) * math.exp(-0.5 * z * z) \
        / math.sqrt(horizon_T)


def edgeworth_kolmogorov_bound(theta, r, horizon_T):
    """Uniform bound 2|eta| / sqrt(e*T) on the CDF distance to normal.

    This is the supremum of |eta| (1+z^2) e^{-z^2/2} / sqrt(T), the majorant
    form of the tail correction (attained at z = +-1).
    """
    _check_positive(horizon_T=horizon_T)
    return 2.0 * abs(eta_constant(theta, r)) / math.sqrt(math.e * horizon_T)


def major_tail_bound(n, kernel_norm, x, prefactor_C):
    """Deviation bound C * exp(-0.5 * (x / (sqrt(n!) * norm))^{2/n}) for an
    n-th order integral with the given kernel norm."""
    if int(n) != n or n < 1:
        raise ParameterError(f"n must be an integer >= 1, got {n}")
    _check_positive(kernel_norm=kernel_norm, x=x)
    ratio = x / (math.sqrt(math.factorial(int(n))) * kernel_norm)
    return prefactor_C * math.exp(-0.5 * ratio ** (2.0 / n))


def wasserstein_scale_bound(sigma):
    """Bound sqrt(2/pi) * |1 - sigma^2| on the distance of sigma*N to N."""
    _check_positive(sigma=sigma)
    return math.sqrt(2.0 / math.pi) * abs(1.0 - sigma * sigma)


def denominator_lp_bound(p, theta):
    """Constant c(p, theta) bounding sqrt(T) * E|2 theta sqrt(Y11 Y22)/T - 1|^p^{1/p}:

    3 * max(2(2p-1)/theta, (p-1) sqrt(2/theta) sqrt(3 + 7/(4 theta)), 1/(2 theta)).
    """
    if p < 1:
        raise ParameterError(f"p must be >= 1, got {p}")
    _check_positive(theta=theta)
    return 3.0 * max(2.0 * (2.0 * p - 1.0) / theta,
                     (p - 1.0) * math.sqrt(2.0 / theta) * math.sqrt(3.0 + 7.0 / (4.0 * theta)),
                     0.5 / theta)


# ---------------------------------------------------------------------------
# Standardizations used by the Monte Carlo harness
# ---------------------------------------------------------------------------

def standardize_rho(rho, theta, r, horizon_T):
    """sqrt(T) * (rho - r) / sqrt((1+r^2)/theta); standard normal in the limit."""
    return math.sqrt(horizon_T) * (np.asarray(rho) - r) / math.sqrt(clt_variance_rho(theta, r))


def standardize_numerator(num, theta, r, horizon_T):
    """(Y12/sqrt(T) - r sqrt(T)/(2 theta)) / sigma; standard normal in the limit."""
    cc = chaos_constants(theta, r)
    center = r * math.sqrt(horizon_T) / (2.0 * theta)
    return (np.asarray(num) - center) / cc.sigma


def standardize_theta_hat(theta_hat, theta, horizon_T):
    """sqrt(T) * (theta_hat - theta) / sqrt(2 theta)."""
    return math.sqrt(horizon_T) * (np.asarray(theta_hat) - theta) / math.sqrt(2.0 * theta)


def standardize_ybar(ybar, theta, horizon_T):
    """sqrt(T) * (2 theta Y11/T - 1) / sqrt(2/theta)."""
    return math.sqrt(horizon_T) * (np.asarray(ybar) - 1.0) / math.sqrt(2.0 / theta)
