"""Replication engine and empirical-distribution diagnostics.

The engine simulates many independent pairs per grid cell and reduces
each replication to its path functionals on the fly.  Replication j of
cell c draws its two noise processes from streams
(base_seed, c, j, 0) and (base_seed, c, j, 1), so results are
bit-identical for a given grid no matter how many workers run or in
which order blocks complete; blocks are fixed-size slices of the
replication index, never functions of the worker pool.
"""

import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import sde, theory
from .errors import InsufficientDataError, ParameterError
from .gaussian import norm_cdf, upper_quantile

_BLOCK_ELEMS = 4_000_000  # target innovations per simulated block


# ---------------------------------------------------------------------------
# Sample diagnostics
# ---------------------------------------------------------------------------

def k_statistics(samples):
    """Unbiased k-statistics (k2, k3, k4) of a sample.

    k2 = n m2/(n-1),
    k3 = n^2 m3/((n-1)(n-2)),
    k4 = n^2 [(n+1) m4 - 3 (n-1) m2^2] / ((n-1)(n-2)(n-3)),

    with m_j the central sample moments.
    """
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < 4:
        raise InsufficientDataError("k-statistics need at least 4 samples")
    d = x - x.mean()
    m2 = float(np.mean(d ** 2))
    m3 = float(np.mean(d ** 3))
    m4 = float(np.mean(d ** 4))
    k2 = n * m2 / (n - 1)
    k3 = n * n * m3 / ((n - 1) * (n - 2))
    k4 = n * n * ((n + 1) * m4 - 3 * (n - 1) * m2 * m2) / ((n - 1) * (n - 2) * (n - 3))
    return k2, k3, k4


def kolmogorov_distance(samples):
    """Empirical Kolmogorov distance of a sample to the standard normal:
    sup over half-lines of |F_n - Phi|, evaluated at the jump points."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise InsufficientDataError("empty sample")
    cdf = norm_cdf(x)
    i = np.arange(1, n + 1)
    upper = np.abs(i / n - cdf)
    lower = np.abs((i - 1) / n - cdf)
    return float(np.max(np.maximum(upper, lower)))


def wilson_interval(successes, n, level=0.95):
    """Wilson score interval for a binomial proportion."""
    if n < 1:
        raise ParameterError("need at least one trial")
    z = upper_quantile((1.0 - level) / 2.0)
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2.0 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def error_rates(outcomes, truth="H0"):
    """Rejection frequency with a 95% Wilson interval.

    Under truth="H0" the rate is the empirical type-I error; under "Ha"
    it is the empirical power.  Accepts TestOutcome sequences or raw
    booleans.
    """
    if truth not in ("H0", "Ha"):
        raise ParameterError(f"truth must be 'H0' or 'Ha', got {truth!r}")
    flags = [bool(getattr(o, "reject", o)) for o in outcomes]
    if not flags:
        raise ParameterError("empty outcome sequence")
    n = len(flags)
    rate = sum(flags) / n
    lo, hi = wilson_interval(sum(flags), n)
    return rate, lo, hi


def rate_fit(points):
    """Least-squares fit of log(value) = exponent*log(T) + intercept."""
    pts = [(float(t), float(v)) for t, v in points]
    if len(pts) < 3:
        raise InsufficientDataError("rate fit needs at least 3 points")
    if any(v <= 0 for _, v in pts):
        raise ParameterError("rate fit needs positive values")
    logs_t = np.log([t for t, _ in pts])
    logs_v = np.log([v for _, v in pts])
    exponent, intercept = np.polyfit(logs_t, logs_v, 1)
    return float(exponent), float(intercept)


# ---------------------------------------------------------------------------
# Replication engine
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PairSample:
    """Per-replication functionals of one grid cell."""

    theta: float
    r: float
    horizon_T: float
    dt: float
    n: int
    rho: np.ndarray
    numerator: np.ndarray       # Y12 / sqrt(T)
    theta_hat: np.ndarray
    ybar11: np.ndarray          # 2 theta Y11 / T
    y11: np.ndarray
    y22: np.ndarray
    y12: np.ndarray


def _simulate_block(theta, r, horizon_T, dt, base_seed, cell_index, start, stop,
                    process_offset=0):
    """Functionals for replications [start, stop) of one cell."""
    n_steps = sde.grid_size(horizon_T, dt)
    m = stop - start
    z1 = np.empty((m, n_steps))
    z0 = np.empty((m, n_steps))
    for i, rep in enumerate(range(start, stop)):
        z1[i] = sde.stream(base_seed, cell_index, rep, process_offset).standard_normal(n_steps)
        z0[i] = sde.stream(base_seed, cell_index, rep, process_offset + 1).standard_normal(n_steps)

    sd = math.sqrt(sde.innovation_variance(theta, dt))
    xi1 = sd * z1
    xi2 = r * xi1 + math.sqrt(1.0 - r * r) * (sd * z0)
    factor = sde.transition_factor(theta, dt)
    x1 = sde.ar1_paths(factor, xi1)
    x2 = sde.ar1_paths(factor, xi2)

    w = np.full(n_steps + 1, dt)
    w[0] = w[-1] = 0.5 * dt
    T = n_steps * dt
    # row-wise pairwise sums: each replication's reduction depends only on
    # its own row, so results are independent of block shape
    s1 = (x1 * w).sum(axis=1)
    s2 = (x2 * w).sum(axis=1)
    q11 = (x1 * x1 * w).sum(axis=1)
    q22 = (x2 * x2 * w).sum(axis=1)
    q12 = (x1 * x2 * w).sum(axis=1)
    y11 = q11 - s1 * s1 / T
    y22 = q22 - s2 * s2 / T
    y12 = q12 - s1 * s2 / T
    return y11, y22, y12, T


def _cell_blocks(replications, n_steps):
    """Fixed-size replication blocks (independent of the worker pool)."""
    block = max(1, min(replications, _BLOCK_ELEMS // max(1, n_steps)))
    return [(a, min(a + block, replications)) for a in range(0, replications, block)]


def _block_task(args):
    return _simulate_block(*args)


def pair_sample(theta, r, horizon_T, dt=None, replications=1000, base_seed=0,
                cell_index=0, jobs=1, step_cap=sde.STEP_CAP, process_offset=0):
    """Simulate a cell and return all per-replication functionals.

    dt=None resolves to the largest exact divisor of T with theta*dt <=
    step_cap.  The result is invariant to `jobs`; workers only change who
    computes each fixed block.
    """
    if replications < 1:
        raise ParameterError("replications must be >= 1")
    if dt is None:
        dt = sde.default_dt(theta, horizon_T, step_cap)
    # validates every cell parameter, including the step cap
    sde.CorrelatedPairConfig(theta=theta, r=r, horizon_T=horizon_T, dt=dt,
                             seed=base_seed, step_cap=step_cap)
    n_steps = sde.grid_size(horizon_T, dt)
    blocks = _cell_blocks(replications, n_steps)
    tasks = [(theta, r, horizon_T, dt, base_seed, cell_index, a, b, process_offset)
             for a, b in blocks]

    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_block_task, tasks))
    else:
        results = [_block_task(t) for t in tasks]

    y11 = np.concatenate([res[0] for res in results])
    y22 = np.concatenate([res[1] for res in results])
    y12 = np.concatenate([res[2] for res in results])
    T = results[0][3]

    rho = y12 / (np.sqrt(y11) * np.sqrt(y22))
    numerator = y12 / math.sqrt(T)
    theta_hat = T / (2.0 * y11)
    ybar11 = 2.0 * theta * y11 / T
    return PairSample(theta=theta, r=r, horizon_T=T, dt=dt, n=replications,
                      rho=rho, numerator=numerator, theta_hat=theta_hat,
                      ybar11=ybar11, y11=y11, y22=y22, y12=y12)


def rejections(sample, variant, alpha):
    """Boolean rejection array of the chosen test applied to every replication."""
    q = upper_quantile(alpha / 2.0)
    root_T = math.sqrt(sample.horizon_T)
    if variant == "rho_known_theta":
        return np.abs(root_T * sample.rho) > q / math.sqrt(sample.theta)
    if variant == "rho_estimated_theta":
        return np.abs(np.sqrt(sample.horizon_T * sample.theta_hat) * sample.rho) > q
    if variant == "numerator_known_theta":
        return np.abs(sample.numerator) > q / (2.0 * sample.theta ** 1.5)
    raise ParameterError(f"unknown test variant {variant!r}")


# ---------------------------------------------------------------------------
# Experiment grid
# ---------------------------------------------------------------------------

STATISTICS = ("rho_centered", "numerator_centered", "theta_hat_centered", "ybar_centered")

_STAT_TEST = {"rho_centered": "rho_known_theta",
              "numerator_centered": "numerator_known_theta"}


@dataclass(frozen=True)
class ExperimentGrid:
    """Cartesian experiment over (theta, r, T) cells."""

    thetas: tuple
    rs: tuple
    horizons: tuple
    replications: int
    base_seed: int
    statistic: str = "rho_centered"
    dt_policy: float | None = None   # None: dt = T/ceil(theta*T/step_cap)
    alpha: float = 0.05
    step_cap: float = sde.STEP_CAP

    def __post_init__(self):
        for name in ("thetas", "rs", "horizons"):
            seq = tuple(float(v) for v in getattr(self, name))
            if not seq:
                raise ParameterError(f"{name} must be nonempty")
            object.__setattr__(self, name, seq)
        if self.replications < 1:
            raise ParameterError("replications must be >= 1")
        if self.statistic not in STATISTICS:
            raise ParameterError(f"unknown statistic {self.statistic!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError("alpha must lie in (0, 1)")

    def cells(self):
        out = []
        for theta in self.thetas:
            for r in self.rs:
                for T in self.horizons:
                    out.append((theta, r, T))
        return out


@dataclass(frozen=True)
class McReport:
    """Aggregated empirical distribution of one cell's statistic."""

    theta: float
    r: float
    horizon_T: float
    n: int
    mean: float
    variance: float
    k3: float
    k4: float
    d_kol: float
    reject_rate: float
    ci_lo: float
    ci_hi: float

    CSV_HEADER = "theta,r,T,n,mean,var,k3,k4,d_kol,reject_rate,ci_lo,ci_hi"

    def csv_row(self):
        vals = (self.theta, self.r, self.horizon_T)
        stats = (self.mean, self.variance, self.k3, self.k4, self.d_kol,
                 self.reject_rate, self.ci_lo, self.ci_hi)
        return ",".join([f"{v:.17g}" for v in vals] + [str(self.n)]
                        + [f"{v:.17g}" for v in stats])

    def to_dict(self):
        return {"theta": self.theta, "r": self.r, "T": self.horizon_T, "n": self.n,
                "mean": self.mean, "var": self.variance, "k3": self.k3, "k4": self.k4,
                "d_kol": self.d_kol, "reject_rate": self.reject_rate,
                "ci_lo": self.ci_lo, "ci_hi": self.ci_hi}


def standardized_statistic(sample, statistic):
    """Map a cell's raw functionals to the requested standardized statistic."""
    if statistic == "rho_centered":
        return theory.standardize_rho(sample.rho, sample.theta, sample.r, sample.horizon_T)
    if statistic == "numerator_centered":
        return theory.standardize_numerator(sample.numerator, sample.theta, sample.r,
                                            sample.horizon_T)
    if statistic == "theta_hat_centered":
        return theory.standardize_theta_hat(sample.theta_hat, sample.theta, sample.horizon_T)
    if statistic == "ybar_centered":
        return theory.standardize_ybar(sample.ybar11, sample.theta, sample.horizon_T)
    raise ParameterError(f"unknown statistic {statistic!r}")


def summarize_cell(sample, statistic, alpha):
    """Aggregate one cell into an McReport."""
    values = np.asarray(standardized_statistic(sample, statistic))
    n = values.size
    test = _STAT_TEST.get(statistic)
    if test is not None:
        flags = rejections(sample, test, alpha)
    else:
        flags = np.abs(values) > upper_quantile(alpha / 2.0)
    rate, lo, hi = error_rates(flags.tolist())
    if n >= 4:
        k2, k3, k4 = k_statistics(values)
    elif n >= 2:
        k2, k3, k4 = float(np.var(values, ddof=1)), float("nan"), float("nan")
    else:
        k2 = k3 = k4 = float("nan")  # variance-undefined flag
    return McReport(theta=sample.theta, r=sample.r, horizon_T=sample.horizon_T,
                    n=n, mean=float(np.mean(values)), variance=k2, k3=k3, k4=k4,
                    d_kol=kolmogorov_distance(values), reject_rate=rate,
                    ci_lo=lo, ci_hi=hi)


def run_grid(grid, jobs=1, progress=None):
    """Run every cell of the grid and aggregate; deterministic in base_seed.

    Cells failing validation (e.g. a fixed dt violating the step cap for a
    large theta) are reported on stderr and skipped; other cells proceed.
    """
    progress = (lambda msg: print(msg, file=sys.stderr)) if progress is None else progress
    reports = []
    cells = grid.cells()
    for index, (theta, r, T) in enumerate(cells):
        try:
            sample = pair_sample(theta, r, T, dt=grid.dt_policy,
                                 replications=grid.replications,
                                 base_seed=grid.base_seed, cell_index=index,
                                 jobs=jobs, step_cap=grid.step_cap)
        except (ParameterError, MemoryError) as exc:
            progress(f"cell {index + 1}/{len(cells)} theta={theta} r={r} T={T}: "
                     f"skipped ({exc})")
            continue
        reports.append(summarize_cell(sample, grid.statistic, grid.alpha))
        progress(f"cell {index + 1}/{len(cells)} theta={theta} r={r} T={T}: done")
    return reports


def write_reports_csv(fileobj, reports, header_comment=None):
    if header_comment:
        fileobj.write(f"# {header_comment}\n")
    fileobj.write(McReport.CSV_HEADER + "\n")
    for rep in reports:
        fileobj.write(rep.csv_row() + "\n")


# ---------------------------------------------------------------------------
# Multi-mode (field) replications
# ---------------------------------------------------------------------------

def spde_mode_samples(n_modes, r, horizon_T, replications, base_seed,
                      dt_policy=None, jobs=1, step_cap=sde.STEP_CAP):
    """Per-mode PairSamples of the field experiment (mode k at theta = k^2).

    Mode k uses process indices (2(k-1), 2(k-1)+1), mirroring the
    single-shot ensemble simulator.
    """
    if n_modes < 1:
        raise ParameterError("n_modes must be >= 1")
    samples = []
    for k in range(1, n_modes + 1):
        theta_k = float(k * k)
        dt_k = dt_policy(k) if callable(dt_policy) else dt_policy
        samples.append(pair_sample(theta_k, r, horizon_T, dt=dt_k,
                                   replications=replications, base_seed=base_seed,
                                   cell_index=0, jobs=jobs, step_cap=step_cap,
                                   process_offset=2 * (k - 1)))
    return samples


def spde_family_rejections(mode_samples, alpha, variant="rho_known_theta", sidak=False):
    """Per-mode and family rejection flags for the field test."""
    n_modes = len(mode_samples)
    level = 1.0 - (1.0 - alpha) ** (1.0 / n_modes) if sidak else alpha
    per_mode = np.stack([rejections(s, variant, level) for s in mode_samples])
    return per_mode, per_mode.any(axis=0)


def default_jobs():
    """Worker count from YULE_OU_JOBS, defaulting to 1."""
    raw = os.environ.get("YULE_OU_JOBS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ParameterError(f"YULE_OU_JOBS must be an integer, got {raw!r}")
