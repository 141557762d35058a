"""Command-line entry point.

Exit codes: 0 success with at least one detection, 2 invalid input or
configuration, 3 no detections, 4 I/O or parse failure. Log verbosity is read
from ``FEATURE_CURVES_LOG`` (e.g. ``INFO`` or ``DEBUG``).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .curves import describe_catalogue
from .errors import ConfigError, FeatureCurveError, ParseError
from .features import Property
from .pipeline import COMBINERS, RunConfig, run_pipeline, summarize

EXIT_OK, EXIT_INVALID, EXIT_NO_DETECTIONS, EXIT_IO = 0, 2, 3, 4
LOG_ENV = "FEATURE_CURVES_LOG"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _keyed(text: str) -> tuple[str, str]:
    fam, sep, rest = text.rpartition("=")
    if not sep or not fam:
        raise argparse.ArgumentTypeError(f"expected FAMILY=VALUES, got {text!r}")
    return fam, rest


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="feature-curves", description="Detect algebraic feature curves on 3D models.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the full detection pipeline")
    r.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    r.add_argument("--model", help="OBJ, PLY (ASCII) or XYZ file")
    r.add_argument("--property", choices=[x.value for x in Property])
    r.add_argument("--property2", choices=[x.value for x in Property],
                   help="second property for --combine")
    r.add_argument("--combine", choices=COMBINERS)
    r.add_argument("--threshold", type=float, help="filtering threshold p in (0, 1)")
    r.add_argument("--family", action="append",
                   help="curve family, repeatable; constants as name:k=v (e.g. petal:n=50)")
    r.add_argument("--region", action="append", type=_keyed, default=[],
                   help="FAMILY=lo1:hi1,lo2:hi2,... parameter box for one family")
    r.add_argument("--step", action="append", type=_keyed, default=[],
                   help="FAMILY=d1,d2,... discretisation steps (default width/20)")
    r.add_argument("--k", dest="K", type=int, help="neighbour rank for the DBSCAN radius")
    r.add_argument("--minpts", dest="MinPts", type=int)
    r.add_argument("--epsilon", type=float, help="DBSCAN radius (overrides the estimate)")
    r.add_argument("--neighborhood", type=int, help="vertices per curvature fit")
    r.add_argument("--workers", type=int)
    r.add_argument("--out", help="directory for report.json, overlay.obj and SVG plots")
    r.add_argument("--seed", type=int)

    sub.add_parser("families", help="list the curve catalogue")
    return p


def config_from_args(args) -> RunConfig:
    data = {}
    if args.config:
        data = RunConfig.from_file(args.config).to_dict()
    for key in ("model", "property", "property2", "combine", "threshold", "K", "MinPts",
                "epsilon", "neighborhood", "workers", "out", "seed"):
        val = getattr(args, key)
        if val is not None:
            data[key] = val
    if args.family:
        data["families"] = list(args.family)
    regions = dict(data.get("regions") or {})
    for fam, text in args.region:
        try:
            pairs = [iv.split(":") for iv in text.split(",")]
            regions[fam] = {"lo": [float(a) for a, _ in pairs], "hi": [float(b) for _, b in pairs]}
        except ValueError as exc:
            raise ConfigError(f"bad --region for {fam}: {text!r}") from exc
    for fam, text in args.step:
        if fam not in regions:
            raise ConfigError(f"--step for {fam} needs a matching --region")
        try:
            regions[fam]["step"] = _floats(text)
        except ValueError as exc:
            raise ConfigError(f"bad --step for {fam}: {text!r}") from exc
    data["regions"] = regions
    return RunConfig.from_dict(data).validate()


def _setup_logging():
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # usage errors exit 2, --help exits 0
        return int(exc.code or 0)
    if args.command == "families":
        for row in describe_catalogue():
            fixed = ",".join(f"{k}={v}" for k, v in row["fixed"].items())
            print(f"{row['name']:<20} t={row['t']} {row['form']:<9} {fixed:<6} {row['equation']}")
        return EXIT_OK

    try:
        config = config_from_args(args)
    except (ConfigError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        report = run_pipeline(config)
    except (OSError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FeatureCurveError as exc:
        print(f"no detections: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NO_DETECTIONS

    if config.out:
        print("\n".join(summarize(report)))
    else:
        print(json.dumps(report.as_dict(), indent=2))
    return EXIT_OK if report.n_detections else EXIT_NO_DETECTIONS


if __name__ == "__main__":
    sys.exit(main())
