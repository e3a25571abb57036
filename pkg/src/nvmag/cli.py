"""Command-line entry point: ``nvmag <subcommand> [--config PATH] [--out-dir DIR] [--seed N]``.

Exit status 0 on success, 1 on validation/configuration errors, 2 on
numerical failures.  Data go to files; diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, app, config
from .errors import ConfigError, NumericalError, ValidationError
from .reproduce import reproduce

log = logging.getLogger("nvmag")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, default=None,
                        help="INI or JSON run configuration (default: bundled example)")
    common.add_argument("--out-dir", type=Path, default=Path("."))
    common.add_argument("--seed", type=int, default=None, help="override [run] seed")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="nvmag", description="NV-ensemble magnetometry simulation and analysis")
    p.add_argument("--version", action="version", version=f"nvmag {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="CW ODMR spectrum")
    lp = sub.add_parser("lockin", parents=[common], help="lock-in spectrum")
    lp.add_argument("--check-oracle", action="store_true",
                    help="compare against time-domain demodulation and print the max deviation")
    cp = sub.add_parser("cavity", parents=[common], help="cavity power and loss budget")
    cp.add_argument("--convention", choices=["intensity", "amplitude"], default=None)
    sub.add_parser("sweep", parents=[common], help="slope surface over Omega and Gamma_p")
    sub.add_parser("sensitivity", parents=[common], help="projected sensitivity")
    sub.add_parser("trace", parents=[common], help="synthesize a magnetometer trace")
    ap = sub.add_parser("analyze", parents=[common], help="ASD, Allan deviation and summary of a trace")
    ap.add_argument("--input", type=Path, default=None, help="trace CSV (default: OUT_DIR/trace.csv)")
    sub.add_parser("reproduce", parents=[common], help="run the full pipeline into one report")
    return p


def _load(args):
    path = args.config or config.example_config_path()
    cfg = config.load_config(path)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def dispatch(args):
    cfg = _load(args)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    cmd = args.command
    if cmd == "spectrum":
        res = app.run_spectrum(cfg, out)
    elif cmd == "lockin":
        res = app.run_lockin(cfg, out, check_oracle=args.check_oracle)
        if args.check_oracle:
            print(f"max relative deviation: {res['oracle_max_relative_deviation']:.3e}")
    elif cmd == "cavity":
        res = app.run_cavity(cfg, out, args.convention)
    elif cmd == "sweep":
        res = app.run_sweep(cfg, out)
    elif cmd == "sensitivity":
        res = app.run_sensitivity(cfg, out)
    elif cmd == "trace":
        res = app.run_trace(cfg, out)
    elif cmd == "analyze":
        res = app.run_analyze(cfg, out, args.input or out / "trace.csv")
    else:
        res = reproduce(cfg, out)
    log.info("%s done, outputs in %s", cmd, out)
    return res


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        args = build_parser().parse_args(argv)
        if args.verbose:
            log.setLevel(logging.INFO)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            with np.errstate(over="raise", invalid="raise"):
                dispatch(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
