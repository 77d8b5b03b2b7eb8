"""Command-line front end: trace, intervals, scan, build-verify, simulate.

Every command is deterministic given its flags and seed, and emits plot-ready
CSV or JSON (floats at 17 significant digits).  Exit codes: 0 success,
1 usage/validation error, 2 verification failure, 3 solver failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from typing import Optional

import numpy as np

from . import geometry, stability
from .stability import format_float as _f

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2
EXIT_SOLVER = 3

DEFAULT_SEED = 1729


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with 2; we reserve that
        raise _UsageError(message)


def _add_phi_flags(p: argparse.ArgumentParser, required: bool = True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--phi-deg", type=float, help="reflection angle in degrees")
    g.add_argument("--phi-rad", type=float, help="reflection angle in radians")


def _phi_of(args) -> Optional[float]:
    if getattr(args, "phi_deg", None) is not None:
        return math.radians(args.phi_deg)
    if getattr(args, "phi_rad", None) is not None:
        return args.phi_rad
    return None


def _write_out(args, text: str):
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_grid(text: str) -> list[float]:
    """Comma list ('0.5,1,1.5') or inclusive linspace ('start:stop:count')."""
    text = text.strip()
    if ":" in text:
        lo_s, hi_s, n_s = text.split(":")
        n = int(n_s)
        if n < 0:
            raise _UsageError(f"grid count must be nonnegative: {text!r}")
        return [float(x) for x in np.linspace(float(lo_s), float(hi_s), n)]
    if not text:
        return []
    return [float(x) for x in text.split(",")]


def build_parser() -> _Parser:
    parser = _Parser(prog="billiard3d",
                     description="stability analysis of spherical-mirror billiard orbits")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trace", help="trace value and classification at (l, phi)")
    p.add_argument("--l", type=float, required=True)
    _add_phi_flags(p)
    p.add_argument("--format", choices=("text", "csv", "json"), default="text")
    p.add_argument("--out")

    p = sub.add_parser("intervals", help="stability intervals and exception points")
    _add_phi_flags(p)
    p.add_argument("--l-max", type=float, required=True)
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.add_argument("--out")
    p.add_argument("--tol", type=float, default=stability.BISECT_TOL,
                   help="bisection tolerance for endpoints")
    p.add_argument("--step", type=float, default=None, help="pre-scan step")

    p = sub.add_parser("scan", help="trace/classification over a (phi, l) grid")
    p.add_argument("--phi-grid", required=True,
                   help="comma list or start:stop:count, degrees")
    p.add_argument("--l-grid", required=True,
                   help="comma list or start:stop:count")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")

    p = sub.add_parser("build-verify", help="build a table, run geometry checks")
    p.add_argument("--table", choices=("cube", "flats"), required=True)
    p.add_argument("--l", type=float, required=True)
    _add_phi_flags(p, required=False)
    p.add_argument("--out", required=True, help="path for the table JSON")
    p.add_argument("--detour", type=float, default=None,
                   help="sphere-to-flat distance (flats table)")
    p.add_argument("--cap-angle", type=float, default=None)
    p.add_argument("--disk-radius", type=float, default=None)
    p.add_argument("--mono-h", type=float, default=1e-6,
                   help="finite-difference step for the monodromy check")

    p = sub.add_parser("simulate", help="perturbation growth on a stored table")
    p.add_argument("--table-file", required=True)
    p.add_argument("--eps", type=float, default=1e-8)
    p.add_argument("--periods", type=int, default=1000)
    p.add_argument("--mode", choices=("linearized", "nonlinear", "both"),
                   default="linearized")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                   help="seed for the perturbation direction")
    p.add_argument("--out")
    return parser


def _classification_payload(l: float, phi: float):
    cls = stability.classify(l, phi)
    return cls


def cmd_trace(args) -> int:
    phi = _phi_of(args)
    if args.l < 0:
        raise _UsageError("--l must be nonnegative")
    cls = _classification_payload(args.l, phi)
    ev = cls.eigenvalues
    if args.format == "text":
        lines = [
            f"l = {_f(args.l)}",
            f"phi = {_f(phi)} rad ({_f(math.degrees(phi))} deg)",
            f"trace = {_f(cls.trace)}",
            f"classification = {cls.kind}",
            f"eigenvalues = {_f(ev[0].real)}{ev[0].imag:+.17g}i, "
            f"{_f(ev[1].real)}{ev[1].imag:+.17g}i",
        ]
        text = "\n".join(lines) + "\n"
    elif args.format == "csv":
        text = (
            "l,phi,trace,class,eig1_re,eig1_im,eig2_re,eig2_im\n"
            + ",".join(
                [_f(args.l), _f(phi), _f(cls.trace), cls.kind,
                 _f(ev[0].real), _f(ev[0].imag), _f(ev[1].real), _f(ev[1].imag)]
            )
            + "\n"
        )
    else:
        doc = {
            "l": float(args.l),
            "phi": float(phi),
            "trace": cls.trace,
            "classification": cls.kind,
            "eigenvalues": [[ev[0].real, ev[0].imag], [ev[1].real, ev[1].imag]],
        }
        text = geometry.format_json(doc)
    _write_out(args, text)
    return EXIT_OK


def _report_doc(report: stability.StabilityReport) -> dict:
    return {
        "phi": report.phi,
        "l_max": report.l_max,
        "intervals": [
            {"lo": iv.lo, "hi": iv.hi, "lo_kind": iv.lo_kind, "hi_kind": iv.hi_kind}
            for iv in report.intervals
        ],
        "exception_points": [
            {
                "l": e.l,
                "trace": e.trace_target,
                "tangency": True,
                "residual": e.residual,
            }
            for e in report.exception_points
        ],
        "window": report.window if report.window is not None else "none",
    }


def cmd_intervals(args) -> int:
    phi = _phi_of(args)
    report = stability.stability_intervals(
        phi, args.l_max, step=args.step, bisect_tol=args.tol
    )
    if args.format == "json":
        text = geometry.format_json(_report_doc(report))
    else:
        lines = ["kind,lo,hi,l,trace,tangency"]
        for iv in report.intervals:
            lines.append(f"interval,{_f(iv.lo)},{_f(iv.hi)},,,")
        for e in report.exception_points:
            lines.append(f"exception,,,{_f(e.l)},{_f(e.trace_target)},true")
        text = "\n".join(lines) + "\n"
    _write_out(args, text)
    return EXIT_OK


def cmd_scan(args) -> int:
    phi_grid = [math.radians(x) for x in _parse_grid(args.phi_grid)]
    l_grid = _parse_grid(args.l_grid)
    rows = stability.sweep(phi_grid, l_grid)
    if args.format == "csv":
        text = stability.sweep_csv(rows)
    else:
        text = geometry.format_json(
            [{"phi": r[0], "l": r[1], "trace": r[2], "class": r[3]} for r in rows]
        )
    _write_out(args, text)
    return EXIT_OK


def cmd_build_verify(args) -> int:
    phi = _phi_of(args)
    if args.l <= 0:
        raise _UsageError("--l must be positive")
    if args.table == "cube":
        if phi is not None and abs(phi - math.pi / 4) > 1e-12:
            raise _UsageError("the cube table has phi = 45 deg; omit the flag "
                              "or pass --phi-deg 45")
        kwargs = {}
        if args.cap_angle is not None:
            kwargs["cap_angular_radius"] = args.cap_angle
        table = geometry.build_cube_table(args.l, **kwargs)
    else:
        if phi is None:
            raise _UsageError("the flats table needs --phi-deg or --phi-rad")
        kwargs = {}
        if args.detour is not None:
            kwargs["detour_length"] = args.detour
        if args.cap_angle is not None:
            kwargs["cap_angular_radius"] = args.cap_angle
        if args.disk_radius is not None:
            kwargs["disk_radius"] = args.disk_radius
        table = geometry.build_flats_table(args.l, phi, **kwargs)
    geometry.save_table(table, args.out)
    verification = geometry.verify_table(table, mono_h=args.mono_h)
    print(f"table written to {args.out}")
    for line in verification.lines():
        print(line)
    if not verification.passed:
        return EXIT_VERIFY
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        table = geometry.load_table(args.table_file)
    except FileNotFoundError:
        raise _UsageError(f"table file not found: {args.table_file}")
    verification = geometry.verify_table(table, with_monodromy=False)
    if not verification.passed:
        for line in verification.lines():
            print(line, file=sys.stderr)
        print("table failed verification", file=sys.stderr)
        return EXIT_VERIFY
    if args.eps <= 0 or args.periods < 1:
        raise _UsageError("--eps must be positive and --periods at least 1")

    rng = np.random.default_rng(args.seed)
    direction = rng.normal(size=4)
    modes = ("linearized", "nonlinear") if args.mode == "both" else (args.mode,)
    records = {
        mode: geometry.perturbation_growth(
            table, args.eps, args.periods, mode, direction=direction
        )
        for mode in modes
    }

    lines = ["period,linearized,nonlinear"]
    for n in range(args.periods):
        cells = [str(n + 1)]
        for mode in ("linearized", "nonlinear"):
            rec = records.get(mode)
            if rec is not None and n < rec.deviations.size:
                cells.append(_f(rec.deviations[n]))
            else:
                cells.append("")
        lines.append(",".join(cells))
    _write_out(args, "\n".join(lines) + "\n")

    for mode, rec in records.items():
        summary = (
            f"summary {mode}: mean_log_growth={_f(rec.mean_log_growth)} "
            f"max_amplification={_f(rec.max_amplification)}"
        )
        if rec.escaped_at is not None:
            summary += f" escaped_at_period={rec.escaped_at}"
        print(summary, file=sys.stderr)
    return EXIT_OK


_COMMANDS = {
    "trace": cmd_trace,
    "intervals": cmd_intervals,
    "scan": cmd_scan,
    "build-verify": cmd_build_verify,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (geometry.ConstructionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except geometry.DifferencingError as exc:
        print(f"verification error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except stability.SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
