"""Command-line entry point: ``clickpol {scan,noise-study,sample,oracle-check}``.

Exit codes: 0 success, 2 configuration error, 3 numeric degeneracy,
4 oracle-check failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load
from .exceptions import InvalidArgument, NumericDegeneracy
from .runner import ResultTable, run_noise_study, run_oracle_check, run_sample, run_scan

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_ORACLE = 4

# flag dest -> (section, key)
_OVERRIDES = {
    "lam": ("state", "lambda"),
    "phi_deg": ("state", "phi_deg"),
    "bins": ("detector", "bins"),
    "efficiency": ("detector", "efficiency"),
    "axis": ("scan", "axis"),
    "fixed_deg": ("scan", "fixed_deg"),
    "start": ("scan", "start"),
    "stop": ("scan", "stop"),
    "step": ("scan", "step"),
    "outputs": ("scan", "outputs"),
    "shots": ("sampling", "shots"),
    "seed": ("sampling", "seed"),
    "resamples": ("sampling", "resamples"),
    "qwp_deg": ("sampling", "qwp_deg"),
    "hwp_deg": ("sampling", "hwp_deg"),
    "noise_bins": ("noise", "bins"),
    "cos_points": ("noise", "cos_theta_points"),
    "nbar_max": ("noise", "nbar_max"),
    "nbar_step": ("noise", "nbar_step"),
    "angles_deg": ("oracle", "angles_deg"),
    "oracle_phi_deg": ("oracle", "phi_deg"),
    "tolerance": ("oracle", "tolerance"),
    "cutoff": ("oracle", "cutoff"),
    "jobs": ("run", "jobs"),
}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _jsonable(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def render_csv(table: ResultTable, cfg: RunConfig, command: str) -> str:
    buf = io.StringIO()
    buf.write(f"# clickpol {__version__} {command}\n")
    buf.write("# resolved config:\n")
    for line in cfg.dump().splitlines():
        buf.write(f"#   {line}\n")
    buf.write("# columns:\n")
    for name, definition in table.columns:
        buf.write(f"#   {name}: {definition}\n")
    for key, value in table.summary.items():
        buf.write(f"# {key}: {_fmt(value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.names)
    for row in table.rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def render_json(table: ResultTable, cfg: RunConfig, command: str) -> str:
    doc = {
        "command": command,
        "version": __version__,
        "config": cfg.to_dict(),
        "columns": [{"name": n, "definition": d} for n, d in table.columns],
        "rows": [[_jsonable(v) for v in row] for row in table.rows],
        "summary": {k: _jsonable(v) for k, v in table.summary.items()},
    }
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _emit(table: ResultTable, cfg: RunConfig, args) -> None:
    text = render_csv(table, cfg, args.command)
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(render_json(table, cfg, args.command))


def _number_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _str_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clickpol",
        description="Nonlinear polarization squeezing with click-counting detectors.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="YAML configuration file")
    common.add_argument("-o", "--output", help="CSV output path (default: stdout)")
    common.add_argument("--json", help="also write a JSON mirror of the table to this path")
    common.add_argument("--jobs", type=int, help="worker processes for independent points")

    state = argparse.ArgumentParser(add_help=False)
    state.add_argument("--lambda", dest="lam", type=float, help="squeezing amplitude lambda")
    state.add_argument("--phi-deg", type=float, help="Bell-state phase in degrees")
    state.add_argument("--bins", type=int, help="number of click-detector bins N")
    state.add_argument("--efficiency", type=float, help="detection efficiency eta")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", parents=[common, state], help="wave-plate angle scan")
    p.add_argument("--axis", choices=["qwp", "hwp"], help="scanned plate")
    p.add_argument("--fixed-deg", type=float, help="angle of the other plate (degrees)")
    p.add_argument("--start", type=float, help="first angle (degrees)")
    p.add_argument("--stop", type=float, help="last angle (degrees, inclusive)")
    p.add_argument("--step", type=float, help="angle step (degrees)")
    p.add_argument("--outputs", type=_str_list, help="comma-separated outputs")
    p.add_argument("--shots", type=int, help="sample this many events per point")
    p.add_argument("--seed", type=int, help="run seed")
    p.add_argument("--resamples", type=int, help="bootstrap resamples")

    p = sub.add_parser("noise-study", parents=[common], help="thermal-noise robustness grid")
    p.add_argument("--bins", dest="noise_bins", type=int, help="number of bins N")
    p.add_argument("--cos-points", type=int, help="grid points in cos(theta) over [0, 1]")
    p.add_argument("--nbar-max", type=float, help="largest thermal photon number")
    p.add_argument("--nbar-step", type=float, help="thermal photon number step")

    p = sub.add_parser("sample", parents=[common, state], help="sample one setting and estimate witnesses")
    p.add_argument("--qwp-deg", type=float, help="quarter-wave plate angle (degrees)")
    p.add_argument("--hwp-deg", type=float, help="half-wave plate angle (degrees)")
    p.add_argument("--shots", type=int, help="number of events")
    p.add_argument("--seed", type=int, help="run seed")
    p.add_argument("--resamples", type=int, help="bootstrap resamples")
    p.add_argument("--counts", help="write the sampled count table to this CSV path")

    p = sub.add_parser("oracle-check", parents=[common, state], help="analytic vs Fock-oracle validation")
    p.add_argument("--angles-deg", type=_number_list, help="comma-separated plate angles (degrees)")
    p.add_argument("--oracle-phi-deg", type=_number_list, help="comma-separated phases (degrees)")
    p.add_argument("--tolerance", type=float, help="max entrywise deviation")
    p.add_argument("--cutoff", type=int, help="Fock cutoff (default: from tail bound)")
    # test hook: run the oracle path at a different efficiency
    p.add_argument("--oracle-efficiency", type=float, help=argparse.SUPPRESS)
    return parser


def _overrides(args) -> dict:
    out = {}
    for dest, target in _OVERRIDES.items():
        value = getattr(args, dest, None)
        if value is not None:
            out[target] = value
    return out


def _write_counts(path: str, counts: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k_a", "k_b", "count"])
        for (k, l), n in np.ndenumerate(counts):
            writer.writerow([k, l, int(n)])


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load(args.config, _overrides(args))
        if args.command == "scan":
            _emit(run_scan(cfg), cfg, args)
        elif args.command == "noise-study":
            _emit(run_noise_study(cfg), cfg, args)
        elif args.command == "sample":
            table, counts = run_sample(cfg)
            _emit(table, cfg, args)
            if args.counts:
                _write_counts(args.counts, counts)
        elif args.command == "oracle-check":
            table = run_oracle_check(cfg, args.oracle_efficiency)
            _emit(table, cfg, args)
            s = table.summary
            verdict = "PASS" if s["passed"] else "FAIL"
            print(f"oracle-check {verdict}: max |dc| = {s['max_abs_dev']:.3e} "
                  f"(tolerance {s['tolerance']:.1e})", file=sys.stderr)
            if not s["passed"]:
                return EXIT_ORACLE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericDegeneracy as exc:
        print(f"numeric degeneracy: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InvalidArgument as exc:
        print(f"invalid argument: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
