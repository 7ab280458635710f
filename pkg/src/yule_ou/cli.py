"""Command-line surface: simulate | stat | test | mc | spde | theory.

Every subcommand accepts --config FILE (a flat JSON document whose keys
are flag names); explicit flags override file values, unknown keys are
rejected, and the effective configuration is echoed into each output
artifact (a `# config:` header line in CSV files, a "config" key in JSON
output).  Exit codes: 0 success, 2 configuration error, 1 runtime error.
"""

import argparse
import io
import json
import math
import sys

import numpy as np

from . import hypothesis as hyp
from . import mc, sde, theory
from .errors import YuleOuError
from .estimators import PathPair, yule_rho
from .sde import CorrelatedPairConfig, SamplePath


class ConfigError(Exception):
    """Invalid or missing configuration."""


def _parse_float_list(text):
    try:
        return tuple(float(tok) for tok in str(text).split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"cannot parse number list {text!r}: {exc}")


def _merge_config(args, parser_dests):
    """Overlay config-file values under explicitly passed flags."""
    if not args.config:
        return
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}")
    if not isinstance(payload, dict):
        raise ConfigError("config file must hold a single JSON object")
    for key, value in payload.items():
        dest = key.replace("-", "_")
        if dest not in parser_dests:
            raise ConfigError(f"unknown config key {key!r}")
        if getattr(args, dest) is None:  # flags override file values
            setattr(args, dest, value)


def _require(args, *names):
    missing = [n for n in names if getattr(args, n.replace("-", "_")) is None]
    if missing:
        flags = ", ".join(f"--{n}" for n in missing)
        raise ConfigError(f"missing required flag(s): {flags}")


def _apply_defaults(args, **defaults):
    for dest, value in defaults.items():
        if getattr(args, dest) is None:
            setattr(args, dest, value)


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _emit(fileobj, text, close):
    fileobj.write(text)
    if close:
        fileobj.close()


def _config_echo(pairs):
    return json.dumps({k: v for k, v in pairs.items() if v is not None}, sort_keys=True)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_simulate(args):
    _require(args, "theta", "r", "T", "dt", "seed")
    config = CorrelatedPairConfig(theta=float(args.theta), r=float(args.r),
                                  horizon_T=float(args.T), dt=float(args.dt),
                                  seed=int(args.seed))
    pair = sde.simulate_correlated_pair(config)
    echo = _config_echo({"command": "simulate", "theta": config.theta, "r": config.r,
                         "T": config.horizon_T, "dt": config.dt, "seed": config.seed})
    buf = io.StringIO()
    sde.write_pair_csv(pair, buf, header_comment=f"config: {echo}")
    out, close = _open_out(args.out)
    _emit(out, buf.getvalue(), close)
    return 0


def _load_pair(path, theta_hint=None):
    """Load a `t,x1,x2` CSV as two SamplePaths on the shared grid."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            t, x1, x2 = sde.read_pair_csv(fh)
    except OSError as exc:
        raise RuntimeError(f"cannot read {path}: {exc}")
    except ValueError as exc:
        raise RuntimeError(f"malformed path CSV {path}: {exc}")
    if t.size < 2:
        raise RuntimeError("path CSV must hold at least two rows")
    steps = np.diff(t)
    dt = float(steps[0])
    if dt <= 0 or not np.allclose(steps, dt, rtol=1e-9, atol=1e-12):
        raise RuntimeError("path CSV must be on a uniform increasing grid")
    return (SamplePath(t0=float(t[0]), dt=dt, values=x1),
            SamplePath(t0=float(t[0]), dt=dt, values=x2))


def _cmd_stat(args):
    _require(args, "input")
    p1, p2 = _load_pair(args.input)
    stats = yule_rho(PathPair(x1=p1, x2=p2), pooled_theta=bool(args.pooled_theta))
    payload = stats.to_dict()
    payload["config"] = {"command": "stat", "input": args.input,
                         "pooled_theta": bool(args.pooled_theta)}
    out, close = _open_out(args.out)
    _emit(out, json.dumps(payload, sort_keys=True) + "\n", close)
    return 0


def _cmd_test(args):
    _require(args, "variant", "input")
    _apply_defaults(args, alpha=0.05)
    variant = str(args.variant)
    if variant not in ("rho", "rho-est", "num"):
        raise ConfigError(f"unknown test variant {variant!r}")
    if variant in ("rho", "num"):
        _require(args, "theta")
    p1, p2 = _load_pair(args.input)
    stats = yule_rho(PathPair(x1=p1, x2=p2))
    alpha = float(args.alpha)
    if variant == "rho":
        outcome = hyp.rho_test(stats, float(args.theta), alpha)
    elif variant == "rho-est":
        outcome = hyp.rho_test_estimated_theta(stats, alpha)
    else:
        outcome = hyp.numerator_test(stats.y12 / math.sqrt(stats.horizon_T),
                                     float(args.theta), alpha)
    payload = outcome.to_dict()
    payload["config"] = {"command": "test", "variant": variant, "alpha": alpha,
                         "theta": args.theta, "input": args.input}
    out, close = _open_out(args.out)
    _emit(out, json.dumps(payload, sort_keys=True) + "\n", close)
    return 0


def _cmd_mc(args):
    _require(args, "thetas", "rs", "Ts", "reps", "seed", "statistic")
    _apply_defaults(args, alpha=0.05, jobs=mc.default_jobs())
    grid = mc.ExperimentGrid(thetas=_parse_float_list(args.thetas),
                             rs=_parse_float_list(args.rs),
                             horizons=_parse_float_list(args.Ts),
                             replications=int(args.reps),
                             base_seed=int(args.seed),
                             statistic=str(args.statistic),
                             dt_policy=None if args.dt is None else float(args.dt),
                             alpha=float(args.alpha))
    reports = mc.run_grid(grid, jobs=int(args.jobs))
    echo = _config_echo({"command": "mc", "thetas": list(grid.thetas),
                         "rs": list(grid.rs), "Ts": list(grid.horizons),
                         "reps": grid.replications, "seed": grid.base_seed,
                         "statistic": grid.statistic, "alpha": grid.alpha,
                         "dt": args.dt})
    buf = io.StringIO()
    mc.write_reports_csv(buf, reports, header_comment=f"config: {echo}")
    out, close = _open_out(args.out)
    _emit(out, buf.getvalue(), close)
    if args.jsonl:
        with open(args.jsonl, "w", encoding="utf-8") as fh:
            for rep in reports:
                fh.write(json.dumps(rep.to_dict(), sort_keys=True) + "\n")
    return 0


_VARIANT_ALIASES = {"rho": "rho_known_theta", "rho-est": "rho_estimated_theta",
                    "num": "numerator_known_theta"}


def _cmd_spde(args):
    _require(args, "N", "r", "T", "reps", "seed")
    _apply_defaults(args, alpha=0.05, variant="rho", jobs=mc.default_jobs())
    n_modes = int(args.N)
    variant = _VARIANT_ALIASES.get(str(args.variant), str(args.variant))
    alpha = float(args.alpha)
    sidak = bool(args.sidak)
    samples = mc.spde_mode_samples(n_modes, float(args.r), float(args.T),
                                   replications=int(args.reps),
                                   base_seed=int(args.seed), jobs=int(args.jobs))
    per_mode, family = mc.spde_family_rejections(samples, alpha, variant, sidak=sidak)
    rate, lo, hi = mc.error_rates(family.tolist())
    echo = {"command": "spde", "N": n_modes, "r": float(args.r), "T": float(args.T),
            "reps": int(args.reps), "seed": int(args.seed), "alpha": alpha,
            "variant": variant, "sidak": sidak}
    payload = {"config": echo, "family_reject_rate": rate, "ci_lo": lo, "ci_hi": hi,
               "per_mode": [{"k": k + 1, "theta": float((k + 1) ** 2),
                             "reject_rate": float(per_mode[k].mean())}
                            for k in range(n_modes)]}
    out, close = _open_out(args.out)
    _emit(out, json.dumps(payload, sort_keys=True) + "\n", close)

    if args.csv:
        level = hyp.sidak_level(alpha, n_modes) if sidak else alpha
        rows = []
        for j in range(int(args.reps)):
            stats_j = [_replication_stats(s, j) for s in samples]
            multi = hyp.spde_multimode_test(stats_j, alpha, variant=variant,
                                            sidak=sidak)
            for k, outcome in enumerate(multi.per_mode, start=1):
                rows.append((variant, level, float(k * k), float(args.r),
                             float(args.T), outcome))
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            hyp.write_outcomes_csv(fh, rows, header_comment=f"config: {_config_echo(echo)}")
    return 0


def _replication_stats(sample, j):
    from .estimators import YuleStatistics
    return YuleStatistics(y11=float(sample.y11[j]), y22=float(sample.y22[j]),
                          y12=float(sample.y12[j]), rho=float(sample.rho[j]),
                          theta_hat=float(sample.theta_hat[j]),
                          horizon_T=sample.horizon_T)


# ---------------------------------------------------------------------------
# theory subcommand registry: name -> (param names, evaluator)
# ---------------------------------------------------------------------------

_THEORY = {
    "c1": (("theta", "r"), lambda a: theory.chaos_constants(a["theta"], a["r"]).c1),
    "c2": (("theta", "r"), lambda a: theory.chaos_constants(a["theta"], a["r"]).c2),
    "sigma": (("theta", "r"), lambda a: theory.chaos_constants(a["theta"], a["r"]).sigma),
    "clt_var_rho": (("theta", "r"), lambda a: theory.clt_variance_rho(a["theta"], a["r"])),
    "cumulant_bounds": (("theta", "r"),
                        lambda a: list(theory.cumulant_bound_constants(a["theta"], a["r"]))),
    "delta_inner": (("p", "theta"),
                    lambda a: theory.delta_convolution_inner(int(a["p"]), a["theta"])),
    "asymptotic_cumulant": (("p", "theta", "r", "T"),
                            lambda a: theory.asymptotic_cumulant(int(a["p"]), a["theta"],
                                                                 a["r"], a["T"])),
    "second_moment_Ar": (("theta", "r", "T"),
                         lambda a: theory.exact_second_moment_Ar(a["theta"], a["r"], a["T"])),
    "h_norm": (("theta", "r", "T"),
               lambda a: theory.kernel_h_norm(theory.KernelSpec(a["theta"], a["r"], a["T"]))),
    "h_norm_limit": (("theta", "r"),
                     lambda a: theory.kernel_h_norm_limit(a["theta"], a["r"])),
    "g_norm": (("theta", "r", "T"),
               lambda a: theory.kernel_g_norm(theory.KernelSpec(a["theta"], a["r"], a["T"]))),
    "eta": (("theta", "r"), lambda a: theory.eta_constant(a["theta"], a["r"])),
    "edgeworth_tail": (("z", "theta", "r", "T"),
                       lambda a: theory.edgeworth_tail(a["z"], a["theta"], a["r"], a["T"])),
    "edgeworth_kol_bound": (("theta", "r", "T"),
                            lambda a: theory.edgeworth_kolmogorov_bound(a["theta"], a["r"],
                                                                        a["T"])),
    "major_tail_bound": (("n", "norm", "x", "prefactor"),
                         lambda a: theory.major_tail_bound(int(a["n"]), a["norm"], a["x"],
                                                           a["prefactor"])),
    "wasserstein_scale_bound": (("sigma_scale",),
                                lambda a: theory.wasserstein_scale_bound(a["sigma_scale"])),
    "denominator_lp_bound": (("p", "theta"),
                             lambda a: theory.denominator_lp_bound(a["p"], a["theta"])),
    "ou_covariance": (("theta", "s", "t"),
                      lambda a: sde.ou_covariance(a["theta"], a["s"], a["t"])),
    "mean_functional_variance": (("theta", "T"),
                                 lambda a: sde.mean_functional_variance(a["theta"], a["T"])),
    "type2_bound_rho": (("theta", "r", "alpha", "T", "berry"),
                        lambda a: hyp.type2_bound_rho(a["theta"], a["r"], a["alpha"],
                                                      a["T"], a["berry"])),
    "type2_bound_numerator": (("theta", "r", "alpha", "T", "berry"),
                              lambda a: hyp.type2_bound_numerator(a["theta"], a["r"],
                                                                  a["alpha"], a["T"],
                                                                  a["berry"])),
}


def _cmd_theory(args):
    _require(args, "quantity")
    name = str(args.quantity)
    if name not in _THEORY:
        known = ", ".join(sorted(_THEORY))
        raise ConfigError(f"unknown quantity {name!r}; known: {known}")
    needed, fn = _THEORY[name]
    _require(args, *needed)
    params = {key: float(getattr(args, key)) for key in needed}
    value = fn(params)
    payload = {"quantity": name, "params": params, "value": value}
    out, close = _open_out(args.out)
    _emit(out, json.dumps(payload, sort_keys=True) + "\n", close)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_common(sub):
    sub.add_argument("--config", help="JSON config file; flags override its values")
    sub.add_argument("--out", help="output path ('-' for stdout, the default)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="yule-ou",
        description="Simulation and independence testing for coupled "
                    "mean-reverting paths.")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("simulate", help="simulate one correlated pair to CSV")
    _add_common(p)
    p.add_argument("--theta", type=float, help="mean-reversion rate (> 0)")
    p.add_argument("--r", type=float, help="driving-noise correlation in [-1, 1]")
    p.add_argument("--T", type=float, help="time horizon")
    p.add_argument("--dt", type=float, help="grid step (must divide T)")
    p.add_argument("--seed", type=int, help="64-bit experiment seed")

    p = subs.add_parser("stat", help="compute pair statistics from a path CSV")
    _add_common(p)
    p.add_argument("--input", help="pair CSV with header t,x1,x2")
    p.add_argument("--pooled-theta", action="store_const", const=True, default=None,
                   dest="pooled_theta", help="average the two marginal rate estimates")

    p = subs.add_parser("test", help="run one independence test on a path CSV")
    _add_common(p)
    p.add_argument("--variant", choices=("rho", "rho-est", "num"))
    p.add_argument("--alpha", type=float, help="significance level (default 0.05)")
    p.add_argument("--theta", type=float, help="known rate (rho and num variants)")
    p.add_argument("--input", help="pair CSV with header t,x1,x2")

    p = subs.add_parser("mc", help="run a Monte Carlo experiment grid")
    _add_common(p)
    p.add_argument("--thetas", help="comma list of rates")
    p.add_argument("--rs", help="comma list of correlations")
    p.add_argument("--Ts", "--T", dest="Ts", help="comma list of horizons")
    p.add_argument("--reps", type=int, help="replications per cell")
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--statistic", choices=mc.STATISTICS)
    p.add_argument("--alpha", type=float, help="test level for reject_rate (default 0.05)")
    p.add_argument("--dt", type=float, help="fixed step (default: step-cap rule)")
    p.add_argument("--jobs", type=int, help="worker processes (default YULE_OU_JOBS or 1)")
    p.add_argument("--jsonl", help="also mirror reports to this JSON-lines file")

    p = subs.add_parser("spde", help="multi-mode field independence experiment")
    _add_common(p)
    p.add_argument("--N", type=int, help="number of modes")
    p.add_argument("--r", type=float, help="common correlation")
    p.add_argument("--T", type=float, help="time horizon")
    p.add_argument("--reps", type=int, help="replications")
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--alpha", type=float, help="per-mode level (default 0.05)")
    p.add_argument("--variant", choices=("rho", "rho-est", "num"))
    p.add_argument("--sidak", action="store_const", const=True, default=None,
                   help="correct the per-mode level for the family rate")
    p.add_argument("--jobs", type=int)
    p.add_argument("--csv", help="write per-replication outcome rows to this CSV")

    p = subs.add_parser("theory", help="print one closed-form constant as JSON")
    _add_common(p)
    p.add_argument("--quantity", help="constant name (see docs)")
    for flag in ("theta", "r", "T", "p", "z", "x", "n", "norm", "prefactor",
                 "sigma-scale", "s", "t", "alpha", "berry"):
        p.add_argument(f"--{flag}", type=float, dest=flag.replace("-", "_"))

    return parser


_DISPATCH = {"simulate": _cmd_simulate, "stat": _cmd_stat, "test": _cmd_test,
             "mc": _cmd_mc, "spde": _cmd_spde, "theory": _cmd_theory}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    dests = set(vars(args))
    try:
        _merge_config(args, dests)
        return _DISPATCH[args.command](args)
    except (ConfigError, YuleOuError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
