"""Command-line front end: figure data, verification suites, Monte Carlo checks.

Exit codes: 0 success, 1 verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .capacity import capacity, fig5_sweep, nats_to_bits
from .netsim import RNG_FAMILY, compare_mc_analytic
from .protocols import (
    GainPair,
    ProtocolId,
    ab_snl_crossing,
    closed_form_spectra,
    engine_spectra,
    minimize_gain,
    noise_ab_two_controllers,
    noise_ac_two_controllers,
    optimal_gains_ab,
    optimal_gains_ac,
)
from .source import Relation, build_ttpc, correlation_variance

SPECTRUM_TOL = 1e-10

DEFAULT_GRIDS = {
    "verify-correlations": "0:3:0.25",
    "spectra": "0,0.3,0.5,1,2",
    "gains": "0.1,0.5,1,2",
    "fig4": "0:2.5:0.05",
    "fig5": "0:20:0.1",
    "capacity": "0,0.5,1,2,5,10,20",
}

FIG4_COLUMNS = {
    "ab_unassisted": ProtocolId.AB,
    "ab_two_controllers_opt": ProtocolId.AB_CD,
    "ab_one_controller": ProtocolId.AB_D,
    "ac_unassisted": ProtocolId.AC,
    "ac_two_controllers_opt": ProtocolId.AC_BD,
    "ac_one_controller": ProtocolId.AC_D,
}

FIG5_COLUMNS = {
    "C_AB": ProtocolId.AB,
    "C_AB_CD": ProtocolId.AB_CD,
    "C_AB_D": ProtocolId.AB_D,
    "C_AC": ProtocolId.AC,
    "C_AC_BD": ProtocolId.AC_BD,
    "C_AC_D": ProtocolId.AC_D,
}


class UsageError(Exception):
    pass


# ------------------------------------------------------------------ parsing


def parse_values(text: str) -> list[float]:
    """``"a,b,c"`` or an inclusive range ``"start:stop:step"``."""
    text = (text or "").strip()
    if not text:
        raise UsageError("empty grid")
    if ":" in text:
        try:
            start, stop, step = (float(v) for v in text.split(":"))
        except ValueError:
            raise UsageError(f"bad range {text!r}, expected start:stop:step") from None
        if step <= 0 or stop < start:
            raise UsageError(f"bad range {text!r}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        values = [round(start + k * step, 12) for k in range(count)]
    else:
        try:
            values = [float(v) for v in text.split(",") if v.strip()]
        except ValueError:
            raise UsageError(f"bad value list {text!r}") from None
    if not values:
        raise UsageError("empty grid")
    if any(not math.isfinite(v) or v < 0 for v in values):
        raise UsageError("grid values must be finite and >= 0")
    return values


def _grid(args, flag: str) -> list[float]:
    chosen = getattr(args, flag, None)
    if chosen is None:
        chosen = args.grid
    if chosen is None:
        chosen = DEFAULT_GRIDS[args.command]
    return parse_values(chosen)


def _protocols(args) -> list[ProtocolId]:
    if not args.protocol:
        return list(ProtocolId)
    try:
        return [ProtocolId.parse(p) for p in args.protocol.split(",")]
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# ------------------------------------------------------------------- output


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def render(args, columns, units, rows, notes=()) -> str:
    header = not args.no_header
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    if args.format == "json":
        doc = {"command": args.command, "units": units, "rows": rows}
        if notes:
            doc["notes"] = list(notes)
        if header:
            doc = {"generated": stamp, "version": __version__, **doc}
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    if header:
        buf.write(f"# ttpcnet {__version__} {args.command} generated {stamp}\n")
    buf.write("# units: " + ", ".join(f"{c}={units[c]}" for c in columns if c in units) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    for note in notes:
        buf.write(f"# {note}\n")
    return buf.getvalue()


def emit(args, text: str) -> None:
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ----------------------------------------------------------------- commands


def cmd_verify_correlations(args) -> int:
    expected_col = "expected=4*exp(-2r)"
    rows = []
    ok = True
    for r in _grid(args, "r"):
        ttpc = build_ttpc(r)
        expected = 4.0 * math.exp(-2.0 * r)
        for rel in Relation:
            v = correlation_variance(ttpc, rel)
            err = abs(v - expected)
            passed = err <= SPECTRUM_TOL
            ok &= passed
            rows.append(
                {"r": r, "relation": rel.value, "variance": v, expected_col: expected,
                 "abs_error": err, "pass": passed}
            )
    columns = ["r", "relation", "variance", expected_col, "abs_error", "pass"]
    units = {"r": "dimensionless", "variance": "SNU", expected_col: "SNU", "abs_error": "SNU"}
    emit(args, render(args, columns, units, rows))
    return 0 if ok else 1


def cmd_spectra(args) -> int:
    gains = _gain_override(args)
    rows = []
    ok = True
    for r in _grid(args, "r"):
        for pid in _protocols(args):
            g = gains if pid in (ProtocolId.AB_CD, ProtocolId.AC_BD) else None
            closed = closed_form_spectra(pid, r, g)
            eng = engine_spectra(pid, r, g)
            err = max(
                abs(closed.noise_plus - eng.noise_plus),
                abs(closed.noise_minus - eng.noise_minus),
                abs(closed.signal_gain_plus - eng.signal_gain_plus),
                abs(closed.signal_gain_minus - eng.signal_gain_minus),
            )
            passed = err <= SPECTRUM_TOL
            ok &= passed
            rows.append(
                {
                    "r": r,
                    "protocol": pid.value,
                    "noise_plus": closed.noise_plus,
                    "noise_minus": closed.noise_minus,
                    "signal_gain_plus": closed.signal_gain_plus,
                    "signal_gain_minus": closed.signal_gain_minus,
                    "engine_noise_plus": eng.noise_plus,
                    "engine_noise_minus": eng.noise_minus,
                    "g_x": closed.gains.g_x if closed.gains else "",
                    "g_y": closed.gains.g_y if closed.gains else "",
                    "max_abs_error": err,
                    "pass": passed,
                }
            )
    columns = list(rows[0])
    units = {
        "r": "dimensionless",
        "noise_plus": "SNU",
        "noise_minus": "SNU",
        "signal_gain_plus": "dimensionless",
        "signal_gain_minus": "dimensionless",
        "engine_noise_plus": "SNU",
        "engine_noise_minus": "SNU",
        "g_x": "dimensionless",
        "g_y": "dimensionless",
        "max_abs_error": "SNU",
    }
    emit(args, render(args, columns, units, rows))
    return 0 if ok else 1


def cmd_gains(args) -> int:
    rows = []
    for r in _grid(args, "r"):
        g_ab = optimal_gains_ab(r).g_x
        g_ac = optimal_gains_ac(r).g_x
        num_ab = minimize_gain(lambda g: noise_ab_two_controllers(r, GainPair(g, g))[0])
        num_ac = minimize_gain(lambda g: noise_ac_two_controllers(r, GainPair(g, g))[0])
        rows.append(
            {"r": r, "g_ab_opt": g_ab, "g_ab_numeric": num_ab,
             "g_ac_opt": g_ac, "g_ac_numeric": num_ac}
        )
    columns = list(rows[0])
    units = {c: "dimensionless" for c in columns}
    emit(args, render(args, columns, units, rows))
    return 0


def cmd_fig4(args) -> int:
    if args.db is not None:
        db = parse_values(args.db)
        grid = [d * math.log(10.0) / 20.0 for d in db]
    else:
        grid = _grid(args, "r")
    rows = []
    for r in grid:
        row = {"squeezing_dB": -10.0 * math.log10(math.exp(-2.0 * r)) if r else 0.0, "snl": 1.0}
        for col, pid in FIG4_COLUMNS.items():
            row[col] = closed_form_spectra(pid, r).noise_plus
        rows.append(row)
    columns = ["squeezing_dB", "snl", *FIG4_COLUMNS]
    units = {"squeezing_dB": "dB", **{c: "SNU" for c in columns[1:]}}
    s = ab_snl_crossing()
    notes = [
        f"ab_unassisted reaches the shot-noise limit at s = 3-2*sqrt(2) = {s:.12g} "
        f"({-10 * math.log10(s):.4f} dB); the often quoted s < 0.16 (7.96 dB) is approximate"
    ]
    emit(args, render(args, columns, units, rows, notes))
    return 0


def _unit(args) -> str:
    return "bits" if args.bits else "nats"


def cmd_fig5(args) -> int:
    grid = _grid(args, "nbar")
    conv = nats_to_bits if args.bits else float
    reports = fig5_sweep(grid, FIG5_COLUMNS.values())
    rows = []
    per = len(FIG5_COLUMNS)
    for k, nbar in enumerate(grid):
        row = {"nbar": nbar}
        for col, rep in zip(FIG5_COLUMNS, reports[k * per:(k + 1) * per]):
            row[col] = conv(rep.capacity)
        rows.append(row)
    columns = ["nbar", *FIG5_COLUMNS]
    units = {"nbar": "photons", **{c: _unit(args) for c in FIG5_COLUMNS}}
    emit(args, render(args, columns, units, rows))
    return 0


def cmd_capacity(args) -> int:
    conv = nats_to_bits if args.bits else float
    rows = []
    for nbar in _grid(args, "nbar"):
        for pid in _protocols(args):
            rep = capacity(pid, nbar)
            rows.append(
                {"nbar": nbar, "protocol": pid.value, "snr_x": rep.snr_x, "snr_y": rep.snr_y,
                 f"capacity_{_unit(args)}": conv(rep.capacity)}
            )
    columns = list(rows[0])
    units = {"nbar": "photons", "snr_x": "dimensionless", "snr_y": "dimensionless",
             columns[-1]: _unit(args)}
    emit(args, render(args, columns, units, rows))
    return 0


def _gain_override(args):
    if getattr(args, "gain", None) is None:
        return None
    return GainPair(args.gain, args.gain)


def cmd_montecarlo(args) -> int:
    pids = _protocols(args)
    if len(pids) != 1:
        raise UsageError("montecarlo takes exactly one --protocol")
    if args.samples < 2:
        raise UsageError("--samples must be >= 2")
    if args.r < 0 or args.sigma2 < 0:
        raise UsageError("--r and --sigma2 must be >= 0")
    report = compare_mc_analytic(
        pids[0], args.r, args.sigma2, args.samples, args.seed, gains=_gain_override(args)
    )
    est = report.estimate
    rows = [
        {"check": c.name, "estimate": c.estimate, "expected": c.expected,
         "stderr": c.stderr, "z": c.z, "pass": c.passed}
        for c in report.checks
    ]
    notes = [
        f"protocol={est.protocol} r={est.r:g} sigma2={est.sigma2:g} samples={est.n_samples} "
        f"seed={est.seed} rng={RNG_FAMILY} messages={est.messages_consumed}/{est.messages_sent}",
        f"result={'PASS' if report.passed else 'FAIL'} threshold={report.threshold:g} sigma",
    ]
    if report.low_power:
        notes.append("low-power comparison: sample size too small for a meaningful test")
    if args.format == "json":
        text = render(args, [], {}, [report.to_dict()], notes)
    else:
        columns = ["check", "estimate", "expected", "stderr", "z", "pass"]
        units = {"estimate": "SNU or ratio", "expected": "SNU or ratio",
                 "stderr": "SNU or ratio", "z": "sigma"}
        text = render(args, columns, units, rows, notes)
    emit(args, text)
    return 0 if report.passed else 1


COMMANDS = {
    "verify-correlations": cmd_verify_correlations,
    "spectra": cmd_spectra,
    "gains": cmd_gains,
    "fig4": cmd_fig4,
    "fig5": cmd_fig5,
    "capacity": cmd_capacity,
    "montecarlo": cmd_montecarlo,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--output", "-o", help="write to this file instead of stdout")
    common.add_argument("--no-header", action="store_true",
                        help="omit the timestamp header so output is byte-reproducible")
    common.add_argument("--grid", help="values 'a,b,c' or inclusive range 'start:stop:step'")

    parser = argparse.ArgumentParser(
        prog="ttpcnet", description="TTPC dense-coding network simulator"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-correlations", parents=[common],
                       help="check the eight three-party correlation variances")
    p.add_argument("--r", help="squeezing parameters")

    p = sub.add_parser("spectra", parents=[common],
                       help="closed-form and engine noise spectra")
    p.add_argument("--r")
    p.add_argument("--protocol", help="comma-separated protocol ids (default: all)")
    p.add_argument("--gain", type=float, help="use this feedforward gain instead of the optimum")

    p = sub.add_parser("gains", parents=[common], help="optimal feedforward gains")
    p.add_argument("--r")

    p = sub.add_parser("fig4", parents=[common], help="noise level vs squeezing")
    p.add_argument("--r")
    p.add_argument("--db", help="squeezing grid in dB instead of r")

    p = sub.add_parser("fig5", parents=[common], help="capacity vs photon number")
    p.add_argument("--nbar")
    p.add_argument("--bits", action="store_true", help="report bits instead of nats")

    p = sub.add_parser("capacity", parents=[common], help="capacity reports")
    p.add_argument("--nbar")
    p.add_argument("--protocol")
    p.add_argument("--bits", action="store_true")

    p = sub.add_parser("montecarlo", parents=[common],
                       help="Monte Carlo check of one protocol against its closed form")
    p.add_argument("--protocol", required=True)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--sigma2", type=float, default=0.0)
    p.add_argument("--samples", type=lambda v: int(float(v)), default=10**6)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--gain", type=float, help="override the feedforward gain (both quadratures)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.error(str(exc))
    except ValueError as exc:
        parser.error(str(exc))
    return 2


if __name__ == "__main__":
    sys.exit(main())
