"""Path functionals: empirical covariance integrals, the correlation
statistic, and the mean-reversion-rate estimator.

All time integrals use the trapezoidal rule on the path's uniform grid,
so the functionals stay exactly bilinear in the path values:

    Y_ab = int_0^T a(u) b(u) du - T * abar * bbar,
    abar = (1/T) int_0^T a(u) du.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateStatisticError, GridMismatchError, InsufficientDataError


@dataclass(frozen=True)
class PathPair:
    """Two observed paths on a shared grid (no simulation provenance)."""

    x1: object
    x2: object

    def __post_init__(self):
        _require_same_grid(self.x1, self.x2)


@dataclass(frozen=True)
class YuleStatistics:
    """Functionals of one pair: variances y11/y22, cross term y12,
    correlation rho = y12 / sqrt(y11*y22), and the rate estimate."""

    y11: float
    y22: float
    y12: float
    rho: float
    theta_hat: float
    horizon_T: float

    def to_dict(self):
        return {"y11": self.y11, "y22": self.y22, "y12": self.y12,
                "rho": self.rho, "theta_hat": self.theta_hat, "T": self.horizon_T}


def _require_same_grid(path_a, path_b):
    if (path_a.dt != path_b.dt or path_a.t0 != path_b.t0
            or path_a.values.size != path_b.values.size):
        raise GridMismatchError("paths are not on the same grid")


def trapezoid_weights(n_nodes, dt):
    """Composite trapezoid weights on n_nodes uniform grid points."""
    if n_nodes < 2:
        raise InsufficientDataError("need at least two grid nodes")
    w = np.full(n_nodes, dt)
    w[0] = w[-1] = 0.5 * dt
    return w


def path_time_average(path):
    """Trapezoidal approximation of (1/T) int_0^T X(u) du."""
    w = trapezoid_weights(path.values.size, path.dt)
    return float(np.dot(w, path.values)) / path.horizon


def empirical_cov_functional(path_a, path_b):
    """The centered product functional Y_ab; symmetric and bilinear."""
    _require_same_grid(path_a, path_b)
    w = trapezoid_weights(path_a.values.size, path_a.dt)
    T = path_a.horizon
    prod = float(np.dot(w, path_a.values * path_b.values))
    abar = float(np.dot(w, path_a.values)) / T
    bbar = float(np.dot(w, path_b.values)) / T
    return prod - T * abar * bbar


def _check_not_constant(path):
    if np.ptp(path.values) == 0.0:
        raise DegenerateStatisticError("path is constant; statistic undefined")


def theta_estimator(path):
    """Rate estimate theta_tilde = (1/2) * (Y_xx/T)^{-1}."""
    _check_not_constant(path)
    y = empirical_cov_functional(path, path)
    if y <= 0.0:
        raise DegenerateStatisticError("degenerate variance functional")
    return path.horizon / (2.0 * y)


def yule_rho(pair, pooled_theta=False):
    """All statistics of a pair, including rho and theta_hat.

    theta_hat comes from x1; with pooled_theta=True it is the average of
    the two marginal estimates.
    """
    _check_not_constant(pair.x1)
    _check_not_constant(pair.x2)
    y11 = empirical_cov_functional(pair.x1, pair.x1)
    y22 = empirical_cov_functional(pair.x2, pair.x2)
    y12 = empirical_cov_functional(pair.x1, pair.x2)
    if y11 <= 0.0 or y22 <= 0.0:
        raise DegenerateStatisticError("degenerate variance functional")
    T = pair.x1.horizon
    rho = y12 / (math.sqrt(y11) * math.sqrt(y22))
    theta_hat = T / (2.0 * y11)
    if pooled_theta:
        theta_hat = 0.5 * (theta_hat + T / (2.0 * y22))
    return YuleStatistics(y11=y11, y22=y22, y12=y12, rho=rho,
                          theta_hat=theta_hat, horizon_T=T)


def numerator_statistic(pair):
    """Scaled cross functional Y12(T)/sqrt(T)."""
    y12 = empirical_cov_functional(pair.x1, pair.x2)
    return y12 / math.sqrt(pair.x1.horizon)
