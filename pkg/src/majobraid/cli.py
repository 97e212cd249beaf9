"""Command-line entry point: ``majobraid {sweep-delta,pflip,readout,validate}``.

Exit codes: 0 success, 1 validation failure, 2 config error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .operators import NumericError, RegisterSizeError
from .propagation import AdiabaticityError, GridTooCoarseError, QuadratureError, StepTooLargeError
from .protocol import BraidSector, BraidSimulation, clean_pflip
from .readout import (
    DispersiveFormulaError,
    IdentificationError,
    ReadoutError,
    TruncationError,
    dispersive_formula,
    dispersive_shift,
    fit_loglog_slope,
    measurement_error,
)
from .schedule import FluxDomainError
from .sweep import FLOAT_FORMAT, report_json, sweep_csv, sweep_delta, sweep_json, write_atomic
from .system import ConfigError
from .validate import FAULTS, run_validation

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
NUMERIC_ERRORS = (
    NumericError,
    AdiabaticityError,
    GridTooCoarseError,
    StepTooLargeError,
    QuadratureError,
    IdentificationError,
    TruncationError,
    np.linalg.LinAlgError,
)
CONFIG_ERRORS = (ConfigError, RegisterSizeError, FluxDomainError)


def _u64(text: str) -> int:
    val = int(text, 0)
    if not 0 <= val < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return val


def _positive(text: str) -> int:
    val = int(text)
    if val < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return val


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI config file (defaults apply when omitted)")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--workers", type=_positive, default=1)
    common.add_argument("--path", choices=("circular", "square"), help="override [path] kind")
    common.add_argument("--seed", type=_u64, default=0)
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    parser = argparse.ArgumentParser(prog="majobraid", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("sweep-delta", parents=[common], help="norm curves ||dU_ki|| versus delta")
    sub.add_parser("pflip", parents=[common], help="parity-flip probabilities over n cycles")
    sub.add_parser("readout", parents=[common], help="dispersive shift and measurement error")
    v = sub.add_parser("validate", parents=[common], help="run the invariant suite")
    v.add_argument("--inject-fault", choices=FAULTS, help="negative control: corrupt an input")
    v.add_argument("--quick", action="store_true", help="skip the propagation-heavy checks")
    v.add_argument(
        "--check-hash",
        action="append",
        default=[],
        metavar="OUTPUT=CONFIG",
        help="verify that OUTPUT embeds the hash of CONFIG (repeatable)",
    )
    return parser


def _config(args) -> RunConfig:
    cfg = load_config(args.config)
    return cfg.with_path(args.path) if args.path else cfg


def cmd_sweep_delta(cfg: RunConfig, args) -> int:
    t0 = time.perf_counter()
    records = sweep_delta(cfg, args.workers)
    if args.format == "csv":
        out = write_atomic(args.out / "sweep_delta.csv", sweep_csv(records, cfg))
    else:
        out = write_atomic(args.out / "sweep_delta.json", sweep_json(records, cfg))
    n_bad = sum(not r.converged for r in records)
    print(f"wrote {out} ({len(records)} rows, {n_bad} unconverged, {time.perf_counter() - t0:.1f} s)")
    return EXIT_OK


def pflip_report(cfg: RunConfig, seed: int) -> dict:
    pf = cfg.pflip
    parities = {isl: dict(pf.parities).get(isl, 1) for isl in cfg.device.n_accidental}
    sector = BraidSector(parities, pf.p_anc)
    rows = []
    try:
        sim = BraidSimulation(cfg.device, cfg.disorder, cfg.path)
        probs = sim.pflip(pf.n_max, sector, pf.shots or None, seed)
        braid = sim.braid(sector)
        braid_info = {"fidelity": braid.fidelity, "chirality": braid.chirality, "leakage": braid.leakage, "failed": braid.failed}
        error = None
    except NUMERIC_ERRORS as exc:
        probs, braid_info, error = [None] * pf.n_max, None, f"{type(exc).__name__}: {exc}"
    for n, p in enumerate(probs, start=1):
        clean = clean_pflip(n)
        rows.append({"n": n, "p_flip": p, "clean": clean, "deviation": None if p is None else p - clean, "error": error})
    return {"sector": {"parities": parities, "p_anc": pf.p_anc}, "shots": pf.shots, "seed": seed, "braid": braid_info, "rows": rows}


def cmd_pflip(cfg: RunConfig, args) -> int:
    rep = pflip_report(cfg, args.seed)
    if args.format == "json":
        out = write_atomic(args.out / "pflip.json", report_json("pflip", cfg, rep))
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "p_flip", "clean", "deviation"])
        for r in rep["rows"]:
            w.writerow([r["n"]] + ["" if r[k] is None else FLOAT_FORMAT % r[k] for k in ("p_flip", "clean", "deviation")])
        out = write_atomic(args.out / "pflip.csv", f"# config_sha256: {cfg.hash}\n" + buf.getvalue())
    failed = [r for r in rep["rows"] if r["error"]]
    print(f"wrote {out}")
    if failed:
        print(failed[0]["error"], file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def readout_points(cfg: RunConfig):
    """Parameter sets along the readout sweep (a single point unless sweeping eps11 or detuning)."""
    base, sw = cfg.readout, cfg.sweep
    if sw.variable == "detuning":
        return [(float(x), base.replace(delta_plus=base.delta_minus + abs(base.delta) + float(x))) for x in sw.values()]
    if sw.variable == "eps11":
        return [(float(x), base.replace(eps11=float(x))) for x in sw.values()]
    return [(base.parity_gap, base)]


def readout_report(cfg: RunConfig) -> dict:
    rows = []
    for x, p in readout_points(cfg):
        row = {"x": x, "parity_gap": p.parity_gap, "dispersive_ok": p.dispersive()}
        for par, tag in ((1, "p"), (-1, "m")):
            try:
                ds = dispersive_shift(p.replace(eps11=0.0), par)
                row[f"omega_eff_closed_{tag}"] = ds.closed_form
                row[f"omega_eff_numeric_{tag}"] = ds.numeric
            except DispersiveFormulaError as exc:
                row[f"omega_eff_closed_{tag}"] = None
                row[f"omega_eff_numeric_{tag}"] = None
                row["flag"] = str(exc)
        me = measurement_error(p)
        row.update(eps_meas=me.amplitude, eps_estimate=me.estimate, near_resonance=me.near_resonance)
        rows.append(row)
    out = {"variable": cfg.sweep.variable if cfg.sweep.variable in ("detuning", "eps11") else None, "rows": rows}
    good = [r for r in rows if not r["near_resonance"] and r["eps_meas"] > 0]
    if out["variable"] == "detuning" and len(good) >= 2:
        out["loglog_slope"] = fit_loglog_slope([r["parity_gap"] for r in good], [r["eps_meas"] for r in good])
    return out


READOUT_COLUMNS = (
    "x",
    "parity_gap",
    "omega_eff_closed_p",
    "omega_eff_numeric_p",
    "omega_eff_closed_m",
    "omega_eff_numeric_m",
    "eps_meas",
    "eps_estimate",
    "near_resonance",
    "dispersive_ok",
)


def cmd_readout(cfg: RunConfig, args) -> int:
    rep = readout_report(cfg)
    if args.format == "json":
        out = write_atomic(args.out / "readout.json", report_json("readout", cfg, rep))
    else:
        buf = io.StringIO()
        buf.write(f"# config_sha256: {cfg.hash}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(READOUT_COLUMNS)
        for r in rep["rows"]:
            cells = []
            for k in READOUT_COLUMNS:
                v = r.get(k)
                cells.append("" if v is None else ("true" if v else "false") if isinstance(v, bool) else FLOAT_FORMAT % v)
            w.writerow(cells)
        out = write_atomic(args.out / "readout.csv", buf.getvalue())
    print(f"wrote {out}")
    if "loglog_slope" in rep:
        print(f"log-log slope of eps_meas versus detuning: {rep['loglog_slope']:.4f}")
    return EXIT_OK


def cmd_validate(cfg: RunConfig, args) -> int:
    pairs = []
    for item in args.check_hash:
        if "=" not in item:
            raise ConfigError(f"--check-hash expects OUTPUT=CONFIG, got {item!r}")
        pairs.append(tuple(Path(x) for x in item.split("=", 1)))
    report = run_validation(cfg, args.inject_fault, args.seed, pairs, args.quick, log=print)
    rep = {"passed": report.passed, "checks": [vars(c) for c in report.checks]}
    write_atomic(args.out / "validate.json", report_json("validate", cfg, rep))
    print("all checks passed" if report.passed else "validation FAILED")
    return EXIT_OK if report.passed else EXIT_VALIDATION


COMMANDS = {"sweep-delta": cmd_sweep_delta, "pflip": cmd_pflip, "readout": cmd_readout, "validate": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        return COMMANDS[args.command](cfg, args)
    except CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ReadoutError as exc:
        print(f"readout error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except NUMERIC_ERRORS as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
