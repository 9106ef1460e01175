"""Command-line entry point.

    christoffel-lsq <subcommand> --config <path> [--out DIR] [--seed U64] [--jobs N]

Each subcommand writes one or more CSV tables plus ``manifest.json`` into
the output directory.  Manifest keys:

``subcommand``, ``config_path``, ``config_sha256``, ``seed``, ``jobs``,
``tables`` (comma-separated file names), ``package_version``, ``python``,
``numpy``, ``scipy``, ``sklearn``, ``platform``, ``wall_time_s``.

Exit status is 0 on success, 2 for a bad configuration or usage and 1 for
any other module error.
"""

import argparse
import csv
import json
import logging
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy
import sklearn

from . import __version__
from .config import load_config
from .exceptions import ChristoffelError, ConfigInvalid
from .experiments import RUNNERS

log = logging.getLogger("christoffel_lsq")


def format_value(value, precision=12):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, f".{precision}g")
    return str(value)


def write_csv(path, table, precision=12):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(table.columns)
        for row in table.rows:
            w.writerow([format_value(v, precision) for v in row])


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        x = float(value)
        return x if math.isfinite(x) else str(x)
    return value


def write_json(path, table):
    records = [{c: _json_value(v) for c, v in zip(table.columns, row)} for row in table.rows]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(records, fh, indent=1)
        fh.write("\n")


def run(subcommand, config_path, out=None, seed=None, jobs=1):
    """Run one subcommand and write its artifacts; returns the output directory."""
    if subcommand not in RUNNERS:
        raise ConfigInvalid("subcommand", f"unknown {subcommand!r}; choose from {sorted(RUNNERS)}")
    cfg = load_config(config_path)
    if seed is not None:
        cfg.seed = seed
    out_dir = Path(out if out is not None else cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    start = time.perf_counter()
    tables = RUNNERS[subcommand](cfg, jobs=jobs)
    wall = time.perf_counter() - start

    written = []
    for name, table in tables.items():
        if "csv" in cfg.formats:
            write_csv(out_dir / f"{name}.csv", table, cfg.precision)
            written.append(f"{name}.csv")
        if "json" in cfg.formats:
            write_json(out_dir / f"{name}.json", table)
            written.append(f"{name}.json")
    manifest = {
        "subcommand": subcommand,
        "config_path": str(config_path),
        "config_sha256": cfg.sha256,
        "seed": cfg.seed,
        "jobs": jobs,
        "tables": ",".join(written),
        "package_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "sklearn": sklearn.__version__,
        "platform": platform.platform(),
        "wall_time_s": round(wall, 3),
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")
    log.info("%s: wrote %s to %s in %.1fs", subcommand, ", ".join(written), out_dir, wall)
    return out_dir


def _u64(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 bits, got {text}")
    return value


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="christoffel-lsq",
        description="Christoffel-sampled least squares experiments.",
    )
    parser.add_argument("subcommand", choices=sorted(RUNNERS))
    parser.add_argument("--config", required=True, help="YAML experiment configuration")
    parser.add_argument("--out", help="output directory (default: outputs.dir from the config)")
    parser.add_argument("--seed", type=_u64, help="override mc.seed")
    parser.add_argument("--jobs", type=_positive, default=1, help="worker threads")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        out = run(args.subcommand, args.config, args.out, args.seed, args.jobs)
    except ConfigInvalid as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return 2
    except ChristoffelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
