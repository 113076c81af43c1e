"""``nhrotor`` command line: run configs, presets and lambda scans.

Exit codes: 0 ok, 2 configuration error, 3 aliasing abort (partial
artifacts written), 4 fatal numerical error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config, preset, PRESETS
from .experiments import AliasingAbort, lambda_scan, run, verify_artifacts
from .hilbert import NumericalError
from .spectral import SpectralError

log = logging.getLogger("nhrotor")

EXIT_OK, EXIT_CONFIG, EXIT_ALIASING, EXIT_NUMERIC = 0, 2, 3, 4


def _common(p):
    p.add_argument("--out", default=None, help="output directory (default: runs/<name>)")
    p.add_argument("--threads", type=int, default=1, help="FFT / ensemble worker threads")
    p.add_argument("--seed", type=int, default=None, help="override classical.seed (u64)")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override one configuration value (repeatable)")


def build_parser():
    ap = argparse.ArgumentParser(prog="nhrotor", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a configuration file")
    p.add_argument("config")
    _common(p)

    p = sub.add_parser("preset", help="run a named preset")
    p.add_argument("name", help="one of: " + ", ".join(PRESETS))
    p.add_argument("--print", dest="print_only", action="store_true",
                   help="print the resolved configuration and exit")
    _common(p)

    p = sub.add_parser("scan", help="repeat a configuration over several lambda values")
    p.add_argument("config")
    p.add_argument("--lambda", dest="lambdas", required=True,
                   help="comma-separated lambda values")
    p.add_argument("--which", choices=("both", "1", "2"), default="both")
    p.add_argument("--jobs", type=int, default=1, help="scan points run concurrently")
    _common(p)

    p = sub.add_parser("check", help="verify config hashes of an output directory")
    p.add_argument("out")
    return ap


def _resolve(args, cfg):
    overrides = list(args.overrides)
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        overrides.append(f"classical.seed={args.seed}")
    return cfg.override(overrides) if overrides else cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "check":
            print(verify_artifacts(args.out))
            return EXIT_OK
        if args.command == "preset":
            cfg = _resolve(args, preset(args.name))
            if args.print_only:
                print(cfg.to_ini())
                return EXIT_OK
        else:
            cfg = _resolve(args, load_config(args.config))
        out = Path(args.out or Path("runs") / Path(cfg.name).stem)
        progress = (lambda t, s: log.info("step %d log_norm %.6g", t, s.log_norm)) if args.verbose else None
        if args.command == "scan":
            lambdas = [float(x) for x in args.lambdas.replace(",", " ").split()]
            lambda_scan(cfg, lambdas, out, which=args.which, threads=args.threads, jobs=args.jobs)
        else:
            run(cfg, out, threads=args.threads, progress=progress)
        print(out)
        return EXIT_OK
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except AliasingAbort as err:
        print(f"aborted: {err} (partial artifacts in {err.out_dir})", file=sys.stderr)
        return EXIT_ALIASING
    except (NumericalError, SpectralError, np.linalg.LinAlgError, FloatingPointError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
