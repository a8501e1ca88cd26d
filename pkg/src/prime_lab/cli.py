"""Command-line interface: ``prime-lab <subcommand> [flags]``.

Exit codes: 0 success, 1 validation error (bad flag, bad value, domain
error), 2 runtime or I/O error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from decimal import Decimal, InvalidOperation
from pathlib import Path

from . import experiments, report
from .analysis import (
    amplitude_budget,
    coincidence_fraction,
    detect_crossings,
    detect_wells,
    empirical_rms_slope,
    fit_scaling_exponent,
    heuristic_rms_slope,
    rms_window,
)
from .errors import PrimeLabError
from .primes import build_ensemble, default_cache_path, sieve_primes, write_prime_cache
from .signal import (
    PhaseReference,
    SampleGrid,
    eval_derivative_point,
    eval_grid,
    eval_phase_referenced,
    eval_point,
    eval_points_phase_referenced,
)

log = logging.getLogger("prime_lab")


class UsageError(PrimeLabError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# -- value parsing -------------------------------------------------------------

def parse_int(text):
    """Integer flag; scientific notation allowed when the value is exact (1e6)."""
    try:
        d = Decimal(text.strip())
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not d.is_finite() or d != d.to_integral_value():
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(d)


def parse_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"not a finite number: {text!r}")
    return v


def parse_int_list(text):
    return [parse_int(s) for s in text.split(",")]


def parse_float_list(text):
    return [parse_float(s) for s in text.split(",")]


def parse_theta(text):
    try:
        return PhaseReference.parse(text)
    except PrimeLabError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# -- parser --------------------------------------------------------------------

def _common(p):
    p.add_argument("--threads", type=parse_int, default=None,
                   help="worker thread cap; never changes results (default: min(8, cpu count))")
    p.add_argument("--seed", type=parse_int, default=None,
                   help="seed for all random sampling (default: 0)")
    p.add_argument("--quiet", action="store_true", help="suppress timing and progress lines")
    p.add_argument("--cache", default=None,
                   help="prime cache file (default: $PRIME_LAB_CACHE, else no cache)")


def _grid_flags(p, t_start=140.0, t_end=160.0, samples=3000):
    p.add_argument("--t-start", type=parse_float, default=None, help=f"grid start (default: {t_start:g})")
    p.add_argument("--t-end", type=parse_float, default=None, help=f"grid end (default: {t_end:g})")
    p.add_argument("--samples", type=parse_int, default=None,
                   help=f"number of grid points (default: {samples})")


def _out(p, what):
    p.add_argument("--out", default=None, help=f"directory for {what} (default: none, stdout only)")


def build_parser():
    parser = _Parser(prog="prime-lab",
                     description="Finite prime-weighted oscillatory signals: synthesis, "
                                 "crossings, wells and scaling laws.")
    sub = parser.add_subparsers(dest="command", metavar="subcommand", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("primes", help="sieve primes up to a cutoff")
    p.add_argument("--cutoff", type=parse_int, default=100, help="prime cutoff P (default: 100)")
    p.add_argument("--count-only", action="store_true", help="print only the number of primes")
    _out(p, "primes.txt")
    _common(p)

    p = sub.add_parser("eval", help="evaluate S (or W with --theta) at a point or on a grid")
    p.add_argument("--cutoff", type=parse_int, default=100, help="prime cutoff P (default: 100)")
    p.add_argument("--exponent", type=parse_float, default=0.5, help="weight exponent x (default: 0.5)")
    p.add_argument("--t", type=parse_float, default=None,
                   help="evaluate at this single t (default: evaluate on the grid)")
    p.add_argument("--theta", type=parse_theta, default=None,
                   help="phase reference zero|linear:<rate>|rs; selects W (default: none, raw S)")
    p.add_argument("--derivative", action="store_true", help="also evaluate S'")
    _grid_flags(p)
    _out(p, "signal.csv")
    _common(p)

    p = sub.add_parser("budget", help="squared-amplitude budget and regime")
    p.add_argument("--cutoff", type=parse_int_list, default=[100],
                   help="comma-separated cutoffs (default: 100)")
    p.add_argument("--exponent", type=parse_float_list, default=[0.5],
                   help="comma-separated exponents (default: 0.5)")
    _out(p, "budget.csv")
    _common(p)

    p = sub.add_parser("slope", help="heuristic and empirical RMS slope")
    p.add_argument("--cutoff", type=parse_int_list, default=[10**4],
                   help="comma-separated cutoffs; 3+ cutoffs >= 1000 also fit an exponent "
                        "(default: 10000)")
    p.add_argument("--exponent", type=parse_float, default=0.5, help="weight exponent x (default: 0.5)")
    p.add_argument("--t-start", type=parse_float, default=1000.0, help="sampling window start (default: 1000)")
    p.add_argument("--t-end", type=parse_float, default=2000.0, help="sampling window end (default: 2000)")
    p.add_argument("--samples", type=parse_int, default=5000,
                   help="random sample count, 0 skips the empirical estimate (default: 5000)")
    _out(p, "slope.csv")
    _common(p)

    for name, what in (("crossings", "zero-like crossings"), ("wells", "interference wells")):
        p = sub.add_parser(name, help=f"detect {what} of S on a grid")
        p.add_argument("--cutoff", type=parse_int, default=100, help="prime cutoff P (default: 100)")
        p.add_argument("--exponent", type=parse_float, default=0.5, help="weight exponent x (default: 0.5)")
        if name == "wells":
            p.add_argument("--depth-threshold", type=parse_float, default=1.0,
                           help="report minima below -threshold (default: 1.0)")
        _grid_flags(p)
        _out(p, f"{name}.csv")
        _common(p)

    p = sub.add_parser("coincidence", help="fraction of primes in the destructive phase band")
    p.add_argument("--cutoff", type=parse_int, default=100, help="prime cutoff P (default: 100)")
    p.add_argument("--t", type=parse_float, default=0.0, help="ordinate t (default: 0)")
    p.add_argument("--delta", type=parse_float, default=0.5,
                   help="band half-width around pi, in (0, pi) (default: 0.5)")
    _common(p)

    exp_help = {
        "figure1": ("progressive superposition of prime components",
                    "97", "0.5"),
        "figure2": ("weight-exponent comparison of the raw signal",
                    "100,1e6", "0.25,0.5,0.75"),
        "scaling": ("budget and RMS-slope scaling study",
                    "1e3,1e4,1e5,1e6", "0.25,0.5,0.75"),
    }
    for name, (desc, cut, xs) in exp_help.items():
        p = sub.add_parser(name, help=desc)
        p.add_argument("--config", default=None,
                       help="flat key = value config file; flags win (default: none)")
        p.add_argument("--cutoff", type=parse_int_list, default=None,
                       help=f"comma-separated cutoffs (default: {cut})")
        p.add_argument("--exponent", type=parse_float_list, default=None,
                       help=f"comma-separated exponents (default: {xs})")
        p.add_argument("--out", default=None, help=f"output directory (default: ./{name})")
        if name == "scaling":
            p.add_argument("--t-start", type=parse_float, default=None,
                           help="RMS sampling window start (default: 1000)")
            p.add_argument("--t-end", type=parse_float, default=None,
                           help="RMS sampling window end (default: 2000)")
            p.add_argument("--samples", type=parse_int, default=None,
                           help="random samples per cutoff for the empirical RMS (default: 1000)")
        else:
            _grid_flags(p)
            p.add_argument("--depth-threshold", type=parse_float, default=None,
                           help="well depth threshold (default: 1.0)")
            refs_default = "none" if name == "figure1" else "the bundled zeta ordinates for [140,160]"
            p.add_argument("--refs", default=None,
                           help=f"reference ordinate file, or 'none' (default: {refs_default})")
        if name == "figure1":
            p.add_argument("--theta", type=parse_theta, default=None,
                           help="phase reference zero|linear:<rate>|rs (default: zero)")
        _common(p)
    return parser


# -- helpers -------------------------------------------------------------------

def _cache(args):
    return args.cache or default_cache_path()


def _grid(args, t_start=140.0, t_end=160.0, samples=3000):
    return SampleGrid(
        t_start if args.t_start is None else args.t_start,
        t_end if args.t_end is None else args.t_end,
        samples if args.samples is None else args.samples,
    )


def _outdir(args):
    if args.out is None:
        return None
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _fmt(v):
    return f"{v:.12g}"


# -- subcommands ---------------------------------------------------------------

def cmd_primes(args):
    table = sieve_primes(args.cutoff, cache_path=_cache(args))
    if args.count_only:
        print(len(table))
    else:
        print(" ".join(map(str, table.primes.tolist())))
    out = _outdir(args)
    if out:
        write_prime_cache(out / "primes.txt", table)


def cmd_eval(args):
    ens = build_ensemble(sieve_primes(args.cutoff, cache_path=_cache(args)), args.exponent)
    if args.t is not None:
        if args.theta is not None:
            print(_fmt(float(eval_points_phase_referenced(ens, [args.t], args.theta)[0])))
        else:
            print(_fmt(eval_point(ens, args.t)))
            if args.derivative:
                print(_fmt(eval_derivative_point(ens, args.t)))
        return
    grid = _grid(args)
    if args.theta is not None:
        sig = eval_phase_referenced(ens, grid, args.theta, threads=args.threads)
    else:
        sig = eval_grid(ens, grid, with_derivative=args.derivative, threads=args.threads)
    v = sig.values
    rows = [[len(ens), grid.n_samples, float(v.min()), float(v.max()), float(abs(v).max())]]
    print(report.format_table(["primes", "samples", "min", "max", "max_abs"], rows))
    out = _outdir(args)
    if out:
        sig.to_csv(out / "signal.csv")


def cmd_budget(args):
    full = sieve_primes(max(args.cutoff), cache_path=_cache(args))
    reps = [amplitude_budget(full.prefix(c), x) for x in args.exponent for c in args.cutoff]
    rows = report.budget_rows(reps)
    print(report.format_table(report.BUDGET_FIELDS, rows))
    out = _outdir(args)
    if out:
        report.write_rows(out / "budget.csv", report.BUDGET_FIELDS, rows)


def cmd_slope(args):
    cutoffs = args.cutoff
    full = sieve_primes(max(cutoffs), cache_path=_cache(args))
    seed = args.seed or 0
    window = rms_window(args.t_start, args.t_end)
    rows = []
    for c in cutoffs:
        tb = full.prefix(c)
        heur = heuristic_rms_slope(tb, args.exponent)
        emp = None
        if args.samples:
            emp = empirical_rms_slope(build_ensemble(tb, args.exponent), window, args.samples, seed)
        rows.append([args.exponent, c, heur, emp])
    fields = ["exponent", "cutoff", "heuristic_rms", "empirical_rms"]
    print(report.format_table(fields, rows))
    if len(cutoffs) >= 3 and min(cutoffs) >= 1000:
        fit = fit_scaling_exponent(args.exponent, sorted(cutoffs), cache_path=_cache(args))
        print(f"fitted exponent {_fmt(fit.fitted_exponent)}  predicted {_fmt(fit.predicted_exponent)}")
    out = _outdir(args)
    if out:
        report.write_rows(out / "slope.csv", fields, rows)


def cmd_crossings(args):
    ens = build_ensemble(sieve_primes(args.cutoff, cache_path=_cache(args)), args.exponent)
    sig = eval_grid(ens, _grid(args), threads=args.threads)
    rows = [[c.t0, c.slope, c.residual] for c in detect_crossings(sig, ens)]
    fields = ["t0", "slope", "residual"]
    print(report.format_table(fields, rows, digits=10))
    out = _outdir(args)
    if out:
        report.write_rows(out / "crossings.csv", fields, rows)


def cmd_wells(args):
    ens = build_ensemble(sieve_primes(args.cutoff, cache_path=_cache(args)), args.exponent)
    sig = eval_grid(ens, _grid(args), threads=args.threads)
    rows = [[w.t_center, w.depth, w.half_width] for w in detect_wells(sig, args.depth_threshold)]
    fields = ["t_center", "depth", "half_width"]
    print(report.format_table(fields, rows, digits=10))
    out = _outdir(args)
    if out:
        report.write_rows(out / "wells.csv", fields, rows)


def cmd_coincidence(args):
    table = sieve_primes(args.cutoff, cache_path=_cache(args))
    print(_fmt(coincidence_fraction(table, args.t, args.delta)))


_EXPERIMENT_IDS = {"figure1": "progressive", "figure2": "weight_comparison",
                   "scaling": "scaling_study"}


def _config_value(key, file_cfg, parse):
    if key not in file_cfg:
        return None
    try:
        return parse(file_cfg[key])
    except (argparse.ArgumentTypeError, ValueError) as exc:
        raise UsageError(f"config key {key!r}: {exc}") from None


def experiment_config(args):
    """Merge built-in defaults, an optional config file, then flags."""
    exp_id = _EXPERIMENT_IDS[args.command]
    file_cfg = experiments.read_config_file(args.config) if args.config else {}

    def pick(flag_value, key, parse):
        return flag_value if flag_value is not None else _config_value(key, file_cfg, parse)

    kw = {
        "cutoffs": pick(args.cutoff, "cutoffs", parse_int_list),
        "exponents": pick(args.exponent, "exponents", parse_float_list),
        "seed": pick(args.seed, "seed", parse_int),
        "threads": pick(args.threads, "threads", parse_int),
        "output_dir": pick(args.out, "out", str) or args.command,
        "cache_path": _cache(args),
    }
    if exp_id == "scaling_study":
        lo = pick(args.t_start, "t_start", parse_float)
        hi = pick(args.t_end, "t_end", parse_float)
        kw["rms_window"] = (1000.0 if lo is None else lo, 2000.0 if hi is None else hi)
        kw["rms_samples"] = pick(args.samples, "samples", parse_int)
    else:
        lo = pick(args.t_start, "t_start", parse_float)
        hi = pick(args.t_end, "t_end", parse_float)
        n = pick(args.samples, "samples", parse_int)
        kw["grid"] = SampleGrid(140.0 if lo is None else lo, 160.0 if hi is None else hi,
                                3000 if n is None else n)
        kw["depth_threshold"] = pick(args.depth_threshold, "depth_threshold", parse_float)
        refs = pick(args.refs, "refs", str)
        if refs is None and exp_id == "weight_comparison":
            refs = experiments.bundled_ordinates_path()
        kw["reference_ordinates_path"] = None if refs in (None, "none", "") else refs
        if exp_id == "progressive":
            kw["theta"] = pick(args.theta, "theta", parse_theta)
    return experiments.ExperimentConfig.with_defaults(exp_id, **kw)


def cmd_experiment(args):
    cfg = experiment_config(args)
    for path in experiments.run(cfg):
        print(path)


COMMANDS = {
    "primes": cmd_primes,
    "eval": cmd_eval,
    "budget": cmd_budget,
    "slope": cmd_slope,
    "crossings": cmd_crossings,
    "wells": cmd_wells,
    "coincidence": cmd_coincidence,
    "figure1": cmd_experiment,
    "figure2": cmd_experiment,
    "scaling": cmd_experiment,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    start = time.perf_counter()
    try:
        COMMANDS[args.command](args)
    except PrimeLabError as exc:
        print(f"prime-lab {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ArithmeticError, RuntimeError) as exc:
        print(f"prime-lab {args.command}: runtime error: {exc}", file=sys.stderr)
        return 2
    if not args.quiet:
        print(f"elapsed {time.perf_counter() - start:.2f} s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
