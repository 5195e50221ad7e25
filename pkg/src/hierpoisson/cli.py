"""Command-line runner: ``hierpoisson <command> [options]``.

Outputs go to ``--output`` under the prefix ``<name>_<command>``: one CSV
per table, ``_summary.json``, an aligned-column ``_report.txt`` and a
``_manifest.json`` holding the full config, seed schedule and package version.
A manifest can be passed back as ``--config`` to repeat the run.

Exit codes: 0 success (statistical failures included, see the summary's
"verdict"), 2 configuration error, 3 runtime or numerical error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, ExperimentConfig, dumps
from .experiments import COMMANDS, ExperimentResult
from .operator import EigensolverError
from .seeding import SCHEDULE

log = logging.getLogger("hierpoisson")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


# (flag, config field, type, help)
_OPTIONS = [
    ("--name", "name", str, "experiment name used as the output file prefix"),
    ("--n", "n", int, "branching number (>= 2)"),
    ("--k", "k", int, "volume level; the ball B_k holds n**k sites"),
    ("--k-list", "k_list", _ints, "comma-separated volume levels"),
    ("--r", "r", int, "truncation level (defaults: k, or floor(theta k) where blocks are used)"),
    ("--d", "d", float, "spectral dimension of the geometric couplings"),
    ("--p", "p", _floats, "explicit couplings p_1,p_2,... (overrides --d)"),
    ("--gamma", "gamma", float, "disorder growth exponent, a_x = (1+x)**gamma"),
    ("--base", "base", str, "base site law: cauchy or gaussian"),
    ("--theta", "theta", float, "r_k = floor(theta k); default midpoint of ((1+gamma/2)d, 1)"),
    ("--e", "e", float, "center energy"),
    ("--half-width", "half_width", float, "half width of the rescaled window"),
    ("--interval", "interval", _floats, "rescaled interval a,b for block counts"),
    ("--energies", "energies", _floats, "extra energies for the density bound"),
    ("--realizations", "realizations", int, "Monte Carlo realizations"),
    ("--seed", "seed", int, "base seed"),
    ("--workers", "workers", int, "worker processes"),
    ("--output", "output", str, "output directory"),
    ("--epsilon", "epsilon", float, "smoothing width for eta (default 4/A_k)"),
    ("--z-re", "z_re", float, "real part of the spectral parameter"),
    ("--z-im", "z_im", float, "imaginary part of the spectral parameter (> 0)"),
    ("--grid-min", "grid_min", float, "IDS grid start"),
    ("--grid-max", "grid_max", float, "IDS grid end"),
    ("--grid-points", "grid_points", int, "IDS grid size"),
    ("--repetitions", "repetitions", int, "selftest repetitions"),
    ("--max-sites", "max_sites", int, "cap on n**k for dense eigensolves"),
]

_HELP = {
    "spectrum": "one realization: full and truncated spectra",
    "ids": "empirical integrated density of states over a grid",
    "poisson": "Poisson count and gap tests of the rescaled process at energy e",
    "pure-random": "the diagonal model H = V, no eigensolves",
    "grigelionis": "block-count condition sums across --k-list",
    "hypothesis-h": "exact Hypothesis (H) sequences across --k-list",
    "threshold": "Laplacian-vs-disorder sequences and the dimension threshold",
    "trace-variance": "variance of the normalized resolvent trace across --k-list",
    "selftest": "calibration and power of the goodness-of-fit tests",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hierpoisson", description="Hierarchical Anderson model experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=_HELP[name])
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("-v", "--verbose", action="store_true")
        for flag, dest, typ, text in _OPTIONS:
            p.add_argument(flag, dest=dest, type=typ, default=None, help=text)
    return parser


def _load_config(path: str) -> ExperimentConfig:
    """Plain config file, or a manifest written by this tool."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError([f"cannot read config file {path}: {exc}"]) from exc
    if isinstance(data, dict) and "seed_schedule" in data and isinstance(data.get("config"), dict):
        return ExperimentConfig.from_dict(data["config"])
    return ExperimentConfig.load(path)


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = _load_config(args.config) if args.config else ExperimentConfig()
    overrides = {dest: getattr(args, dest) for _, dest, _, _ in _OPTIONS if getattr(args, dest) is not None}
    if overrides:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), **overrides})
    return cfg


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


TEXT_ROW_LIMIT = 200


def _text_report(command: str, result: ExperimentResult) -> str:
    """Aligned-column rendering of the per-k tables, for reading at a terminal."""
    lines = [f"{command}: verdict {result.verdict}"]
    for name, flag in sorted(result.summary.get("checks", {}).items()):
        lines.append(f"  {name}: {flag}")
    for table, (header, rows) in sorted(result.tables.items()):
        if len(rows) > TEXT_ROW_LIMIT:
            lines.append(f"\n[{table}] {len(rows)} rows, see the CSV")
            continue
        cells = [list(map(str, header))] + [[f"{v:.6g}" if isinstance(v, float) else str(v) for v in r] for r in rows]
        widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
        lines.append(f"\n[{table}]")
        lines.extend("  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells)
    return "\n".join(lines) + "\n"


def write_outputs(command: str, cfg: ExperimentConfig, result: ExperimentResult) -> list[Path]:
    """Write CSV tables, the summary and the manifest; returns the paths written."""
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    prefix = f"{cfg.name}_{command}"
    written = []
    for table, (header, rows) in sorted(result.tables.items()):
        path = out / f"{prefix}_{table}.csv"
        path.write_bytes(_csv_text(header, rows).encode("utf-8"))
        written.append(path)
    # Worker count and output location do not affect results, so they stay out
    # of the recorded config and runs differing only in those are byte-identical.
    config = {k: v for k, v in cfg.to_dict().items() if k not in ("workers", "output")}
    rerun = f"hierpoisson {command} --config {prefix}_manifest.json"
    summary = {"command": command, "config": config, "version": __version__, "rerun": rerun, **result.summary}
    path = out / f"{prefix}_summary.json"
    path.write_bytes(dumps(summary).encode("utf-8"))
    written.append(path)
    path = out / f"{prefix}_report.txt"
    path.write_bytes(_text_report(command, result).encode("utf-8"))
    written.append(path)
    manifest = {
        "command": command,
        "config": config,
        "seed": cfg.seed,
        "seed_schedule": SCHEDULE,
        "version": __version__,
        "files": [p.name for p in written],
    }
    path = out / f"{prefix}_manifest.json"
    path.write_bytes(dumps(manifest).encode("utf-8"))
    written.append(path)
    return written


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        run, needs_matrix = COMMANDS[args.command]
        cfg.validate(needs_matrix=needs_matrix)
    except ConfigError as exc:
        for msg in exc.messages:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except (TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        log.info("running %s with %d worker(s)", args.command, cfg.workers)
        result = run(cfg)
        paths = write_outputs(args.command, cfg, result)
    except EigensolverError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, RuntimeError, OSError, MemoryError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"{args.command}: verdict={result.verdict} ({len(paths)} files in {cfg.output})")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
