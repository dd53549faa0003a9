#!/usr/bin/env python3
"""
gausslimit command line
=======================

Config-driven front end for impulse responses, Stein bounds, Monte-Carlo
W1 estimates and convergence studies.

Usage Examples:
---------------
    # Impulse response and dominant-pole envelope
    gausslimit impulse configs/independent_edge.cfg --horizon 200 --out g.csv

    # Bounds at several t (case picked from the input correlation)
    gausslimit bound configs/poscorr_edge.cfg --t 1000 2000 4000 --alpha-mode edge

    # Normalised outputs at one t, with their W1 estimate
    gausslimit simulate configs/decay_edge.cfg --t 256 --out samples.txt

    # Full convergence study (study.csv, plot_data.csv, variance.csv, manifest.json)
    gausslimit study configs/independent_edge.cfg --out runs/independent

    # Both non-Gaussian limit systems
    gausslimit counterexamples --out runs/counterexamples

    # W1 of a raw sample file (one float per line)
    gausslimit w1 samples.txt

Exit Codes:
-----------
    0  success
    1  a verification check failed (bound dominance, closed-form identity)
    2  usage or configuration error
    3  any other computation error

GAUSSLIMIT_THREADS sets the default for --threads.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from gausslimit import __version__
from gausslimit.config import RunManifest, load_config
from gausslimit.counterexamples import run_counterexamples
from gausslimit.errors import ConfigError, DominanceError, GaussLimitError
from gausslimit.lti_core import char_poly, dominant_envelope, find_roots, impulse_modal, impulse_recursive, impulse_response, modal_form
from gausslimit.reporting import (
    BOUND_COLUMNS,
    IMPULSE_COLUMNS,
    PLOT_COLUMNS,
    STUDY_COLUMNS,
    VARIANCE_COLUMNS,
    W1_COLUMNS,
    impulse_rows,
    write_rows,
)
from gausslimit.sim_harness import run_convergence_study, simulate_normalized_outputs, variance_table
from gausslimit.stein_bound import assemble_bound
from gausslimit.wasserstein import estimate_w1, read_sample_file, write_sample_file

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_ERROR = 3


def _say(message: str = ""):
    print(message, file=sys.stderr)


# =============================================================================
# SUBCOMMANDS
# =============================================================================

def cmd_impulse(args) -> int:
    config = load_config(args.config)
    spec = config.arma_spec()
    eps = args.eps if args.eps is not None else config.study.eps
    poles = find_roots(char_poly(spec))
    edge = config.system.edge_of_stability

    # modal evaluation enforces the stability check
    impulse_modal(poles, spec, args.horizon, edge_of_stability=edge)
    g = impulse_recursive(spec, args.horizon)
    write_rows(args.out, IMPULSE_COLUMNS, impulse_rows(g))

    _say(f"poles: {', '.join(f'{p.value:.10g} (x{p.multiplicity})' for p in poles.poles)}")
    if args.horizon >= 1:
        try:
            env = dominant_envelope(modal_form(poles), g, eps, edge_of_stability=edge)
        except DominanceError as exc:
            _say(f"envelope: {exc}")
            return EXIT_OK
        if env is None:
            _say("envelope: memoryless system")
        else:
            _say(
                f"envelope: alpha={env.alpha:.10g} d={env.d} c_lo={env.c_lo:.10g} "
                f"c_hi={env.c_hi:.10g} eps={env.eps:g} T_eps={env.t_eps}"
                + ("" if env.found else " (not settled within horizon)")
            )
    return EXIT_OK


def cmd_bound(args) -> int:
    config = load_config(args.config)
    noise = config.noise_model()
    case = args.case or config.study.case
    alpha_mode = args.alpha_mode or config.study.alpha_mode
    ir = impulse_response(
        config.arma_spec(), max(args.t), config.study.eps, edge_of_stability=config.system.edge_of_stability
    )
    _say(f"input: {noise.profile.describe()} (D={noise.profile.D}, M={noise.profile.M})")

    reports = [assemble_bound(ir, noise, t, case, alpha_mode=alpha_mode) for t in args.t]
    write_rows(args.out, BOUND_COLUMNS, (r.as_row() for r in reports))
    for r in reports:
        if r.prop1 is not None:
            _say(f"t={r.t}: f={r.f:.6g} prop1={r.prop1:.6g}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    sample = simulate_normalized_outputs(config, args.t, threads=args.threads)
    if args.out:
        write_sample_file(args.out, sample)
        _say(f"Saved {sample.n} normalised outputs to {args.out}")
    estimate = estimate_w1(sample, config.study.bootstrap, config.seed, key=(args.t,), threads=args.threads)
    write_rows(None, W1_COLUMNS, [estimate.as_row()])
    return EXIT_OK


def cmd_study(args) -> int:
    started = datetime.now(timezone.utc)
    config = load_config(args.config)
    table = run_convergence_study(config, threads=args.threads)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = [out / "study.csv", out / "plot_data.csv", out / "variance.csv", out / "manifest.json"]
    write_rows(outputs[0], STUDY_COLUMNS, (row.as_row() for row in table.rows))
    write_rows(outputs[1], PLOT_COLUMNS, (row.as_row() for row in table.rows))
    write_rows(outputs[2], VARIANCE_COLUMNS, (report.as_row() for report in variance_table(config)))
    RunManifest(
        config_hash=table.config_hash,
        tool_version=__version__,
        seed=config.seed,
        command=f"study {args.config}",
        started_at=started,
        finished_at=datetime.now(timezone.utc),
        outputs=[str(p) for p in outputs],
    ).write(outputs[3])
    print(f"Saved study to {out}")

    rate = table.rate()
    if rate is not None:
        print(f"fitted slope {rate.slope:.4f} (R^2 {rate.r_squared:.4f}, {rate.n_points} points)")
    if table.non_vanishing:
        print("W1 does not vanish with t: the output does not approach a Gaussian")

    failures = table.dominance_failures()
    for row in failures:
        print(f"dominance FAILED at t={row.t}: w1_hat={row.w1_hat:.6g} se={row.se:.2g} "
              f"bound={row.bound_f:.6g} prop1={row.prop1:.6g}")
    return EXIT_CHECK_FAILED if failures else EXIT_OK


def cmd_counterexamples(args) -> int:
    report = run_counterexamples(
        n_max=args.n_max,
        identity_replicates=args.identity_replicates,
        t_grid=tuple(args.t_grid),
        replicates=args.replicates,
        seed=args.seed,
        threads=args.threads,
    )
    out = Path(args.out)
    write_rows(
        out / "identities.csv",
        ("name", "n_max", "replicates", "max_abs_error", "holds"),
        (check.as_row() for check in report.identities),
    )
    write_rows(
        out / "variance_limits.csv",
        ("rho", "sigma2_exact", "limit", "quoted_form"),
        (row.as_row() for row in report.variance),
    )
    for name, table in report.studies.items():
        write_rows(out / f"{name}_study.csv", STUDY_COLUMNS, (row.as_row() for row in table.rows))

    for check in report.identities:
        print(f"{check.name}: closed form {'holds' if check.holds else 'FAILS'} "
              f"(n <= {check.n_max}, {check.replicates} replicates)")
    for name, table in report.studies.items():
        lowest = min(row.w1_hat for row in table.rows)
        flag = "non-vanishing" if table.non_vanishing else "vanishing"
        print(f"{name}: min w1_hat {lowest:.4f} over the grid ({flag})")
    for row in report.variance:
        print(f"rho={row.rho}: sigma2 {row.sigma2_exact:.9g}, limit {row.limit:.9g}, "
              f"quoted form {row.quoted_form:.6g}")
    return EXIT_OK if report.ok else EXIT_CHECK_FAILED


def cmd_w1(args) -> int:
    sample = read_sample_file(args.samples)
    estimate = estimate_w1(sample, args.bootstrap, args.seed, threads=args.threads)
    write_rows(None, W1_COLUMNS, [estimate.as_row()])
    return EXIT_OK


# =============================================================================
# CLI INTERFACE
# =============================================================================

def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _default_threads() -> int | None:
    raw = os.environ.get("GAUSSLIMIT_THREADS")
    if not raw:
        return None
    try:
        return _positive_int(raw)
    except (ValueError, argparse.ArgumentTypeError):
        logger.warning("ignoring GAUSSLIMIT_THREADS=%r", raw)
        return None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gausslimit",
        description="Stein bounds and Monte-Carlo checks for ARMA outputs driven by non-Gaussian noise",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s impulse configs/independent_edge.cfg --horizon 100
  %(prog)s bound configs/decay_edge.cfg --t 1000 2000 --case decay
  %(prog)s study configs/counterexample1.cfg --out runs/ce1
  %(prog)s counterexamples --replicates 5000
        """,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="More logging (-v info, -vv debug)")
    parser.add_argument("--threads", type=_positive_int, default=_default_threads(),
                        help="Worker threads (default: $GAUSSLIMIT_THREADS or automatic)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("impulse", help="Impulse response G and envelope summary")
    p.add_argument("config", help="Path to a .cfg file")
    p.add_argument("--horizon", type=int, default=100, help="Last index T (default: 100)")
    p.add_argument("--eps", type=float, help="Envelope band (default: study.eps)")
    p.add_argument("--out", "-o", help="CSV path (default: stdout)")
    p.set_defaults(handler=cmd_impulse)

    p = sub.add_parser("bound", help="Stein bound f(alpha, t) at one or more t")
    p.add_argument("config", help="Path to a .cfg file")
    p.add_argument("--t", type=_positive_int, nargs="+", required=True, help="Output indices")
    p.add_argument("--case", choices=["auto", "independent", "poscorr", "positively_correlated", "decay"],
                   help="Bound case (default: study.case)")
    p.add_argument("--alpha-mode", choices=["literal", "edge", "taylor"],
                   help="Alpha substitution (default: study.alpha_mode)")
    p.add_argument("--out", "-o", help="CSV path (default: stdout)")
    p.set_defaults(handler=cmd_bound)

    p = sub.add_parser("simulate", help="Sample y_t / sigma_t and estimate its W1 distance")
    p.add_argument("config", help="Path to a .cfg file")
    p.add_argument("--t", type=_positive_int, required=True, help="Output index")
    p.add_argument("--out", "-o", help="Save the sorted sample, one float per line")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("study", help="Convergence study over study.t_grid")
    p.add_argument("config", help="Path to a .cfg file")
    p.add_argument("--out", "-o", required=True, help="Output directory (created if missing)")
    p.set_defaults(handler=cmd_study)

    p = sub.add_parser("counterexamples", help="Closed-form checks of the non-Gaussian limit systems")
    p.add_argument("--out", "-o", default="counterexamples", help="Output directory")
    p.add_argument("--n-max", type=_positive_int, default=1000, help="Identity check horizon")
    p.add_argument("--identity-replicates", type=_positive_int, default=1000)
    p.add_argument("--t-grid", type=_positive_int, nargs="+", default=[16, 32, 64, 128, 256, 512])
    p.add_argument("--replicates", type=_positive_int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_counterexamples)

    p = sub.add_parser("w1", help="W1 distance of a sample file to N(0,1)")
    p.add_argument("samples", help="One float per line")
    p.add_argument("--bootstrap", type=int, default=200, help="Bootstrap resamples (default: 200)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_w1)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", force=True)

    try:
        return args.handler(args)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GaussLimitError as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
