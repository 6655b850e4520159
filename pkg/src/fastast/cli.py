"""Command line entry point (``fastast``)."""

import argparse
import logging
import os
import sys

import numpy as np

from . import harness, lse

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORTED = 3


def _int_list(text):
    return [int(v) for v in text.replace(",", " ").split()]


def _float_list(text):
    return [float(v) for v in text.replace(",", " ").split()]


def _k_rule(text):
    if text.lower() in ("n/10", "auto"):
        return None
    return int(text)


def build_parser():
    p = argparse.ArgumentParser(prog="fastast", description="FastAST line spectral estimation experiments")
    p.add_argument("--mode", choices=["solve", "sweep-N", "sweep-SNR", "trace"], default="solve")
    p.add_argument("--n", type=_int_list, default=[64], help="signal length(s), comma separated")
    p.add_argument("--snr-db", type=_float_list, default=[20.0], help="SNR value(s) in dB, comma separated")
    p.add_argument("--k", type=_k_rule, default="n/10",
                   help="number of sinusoids, or 'n/10' for N/10 rounded (default)")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variant", choices=["newton", "lbfgs", "both"], default="lbfgs")
    p.add_argument("--out", help="output file (stdout when omitted)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--trace-ref", help="reference solution JSON for trace mode; created if missing")
    p.add_argument("--tol-abs", type=float)
    p.add_argument("--tol-rel", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--memory", type=int)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args):
    return harness.ExperimentConfig(
        mode=args.mode, n=args.n, snr_db=args.snr_db, k=args.k, trials=args.trials, seed=args.seed,
        variant=args.variant, out=args.out, format=args.format, jobs=args.jobs,
        trace_ref=args.trace_ref, tol_abs=args.tol_abs, tol_rel=args.tol_rel, gamma=args.gamma,
        memory=args.memory)


def _emit(text, path):
    if path:
        harness.write_atomic(path, text)
    else:
        sys.stdout.write(text)


def _trace_path(out, variant, multiple):
    if not out or not multiple:
        return out
    stem, ext = os.path.splitext(out)
    return f"{stem}_{variant}{ext or '.csv'}"


def run_trace_mode(cfg):
    n, snr = cfg.n[0], cfg.snr_db[0]
    reference = None
    if cfg.trace_ref:
        if os.path.exists(cfg.trace_ref):
            reference, _ = harness.load_reference(cfg.trace_ref)
        else:
            problem = harness.generate_problem(n, cfg.k_for(n), snr, cfg.seed)
            tau = lse.select_tau(n, np.sqrt(problem.sigma2))
            result = harness.reference_solution(problem.y, tau)
            harness.save_reference(cfg.trace_ref, result, {"n": n, "snr_db": snr, "seed": cfg.seed})
            reference = result.primal
        if reference.x.size != n:
            raise ValueError(f"reference solution has N={reference.x.size}, expected {n}")
    for variant in cfg.variants:
        text, result = harness.run_trace(cfg, n, snr, variant, reference)
        _emit(text, _trace_path(cfg.out, variant, len(cfg.variants) > 1))
        logging.getLogger(__name__).info("%s: %d iterations, status %s, gap %.3g",
                                         variant, result.iterations, result.status.value, result.gap)
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except ValueError as exc:
        print(f"fastast: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if cfg.mode == "trace":
        try:
            return run_trace_mode(cfg)
        except ValueError as exc:
            print(f"fastast: configuration error: {exc}", file=sys.stderr)
            return EXIT_CONFIG

    records = harness.run_trials(cfg)
    _emit(harness.format_records(records, cfg.format), cfg.out)
    return EXIT_ABORTED if any(r.aborted for r in records) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
