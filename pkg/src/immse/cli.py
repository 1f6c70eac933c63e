"""Command-line front end.

Four commands over a JSON problem description: ``rd-curve`` sweeps the
trade-off curve across the distortion grid, ``validate`` designs (or
takes) a sensor and checks it by Monte Carlo, ``zdsc`` runs the
quantize-and-hold coding experiment, and ``care`` solves the stationary
covariance equation for a given gain.

Exit codes: 0 success (all checks PASS), 1 a validation check FAILed,
2 unreadable or unparsable config file, 3 invalid inputs, 4 numerical
pipeline failure.  Every artifact starts with deterministic ``#``
header comments (command echo, config hash, version); the single
volatile line (timestamp and wall-clock timings) is prefixed
``# generated:`` so byte-level comparisons can strip it.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import re
import shlex
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .design import design_sensor, sweep_curve
from .errors import BlowupError, ImmseError, InputValidationError
from .model import SensorGain, SystemModel, check_detectable, load_problem
from .riccati import rates_from_P, solve_care
from .validate import SimConfig, dump_paths, duncan_check, simulate
from .zdsc import ZdscScheme, decode_and_measure

__all__ = ["main", "RunReport"]


def _fmt(value: float) -> str:
    """17 significant digits: lossless float round-trip."""
    return f"{float(value):.17g}"


@dataclass
class RunReport:
    """Provenance attached to every artifact.

    The hash is over the raw config bytes, so identical inputs always
    report the same value.  All wall-clock readings live on the one
    volatile ``# generated:`` line.
    """

    command: str
    config_hash: str
    version: str
    results: list = field(default_factory=list)
    timings_s: list = field(default_factory=list)
    generated: str = ""

    def comment_lines(self) -> list[str]:
        timings = ";".join(f"{t:.3f}" for t in self.timings_s)
        return [
            f"# command: {self.command}",
            f"# config-sha256: {self.config_hash}",
            f"# version: {self.version}",
            f"# generated: {self.generated} timings_s={timings}",
        ]


def _config_hash(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def _echo(args: argparse.Namespace) -> str:
    return shlex.join(["immse"] + list(args._argv))


def _write_text(out_path, text: str) -> None:
    if out_path is None or out_path == "-":
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _parse_gain(text: str, model: SystemModel) -> SensorGain:
    n = model.n
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise InputValidationError(
            [f"--gain-override entries must be numbers, got {text!r}"]
        ) from None
    if len(values) != n * n:
        raise InputValidationError(
            [
                f"--gain-override needs {n * n} row-major entries for an "
                f"n = {n} model, got {len(values)}"
            ]
        )
    return SensorGain(C=np.array(values, dtype=float).reshape(n, n))


def _emit_gnuplot(args, lines: list[str]) -> None:
    if args.out is None or args.out == "-":
        raise InputValidationError(["--gnuplot-stub requires --out FILE"])
    stub = args.out + ".gp"
    content = "\n".join(
        ["# generated plot stub; run: gnuplot " + shlex.quote(stub)]
        + ["set datafile separator ','", "set grid"]
        + lines
    ) + "\n"
    with open(stub, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(content)


def _cmd_rd_curve(args) -> int:
    config_hash = _config_hash(args.config)
    model, params = load_problem(args.config)
    t0 = time.perf_counter()
    curve = sweep_curve(
        model, params.distortion, params.tolerances, max_workers=args.threads
    )
    elapsed = time.perf_counter() - t0
    rows = []
    for point in curve:
        flat = ",".join(_fmt(v) for v in point.C.C.ravel())
        rows.append(
            ",".join(
                [
                    _fmt(point.D),
                    _fmt(point.R),
                    _fmt(np.trace(point.P)),
                    _fmt(point.gap),
                    _fmt(point.are_residual),
                    "true" if point.detectable else "false",
                    f'"{flat}"',
                ]
            )
        )
    report = RunReport(
        command=_echo(args),
        config_hash=config_hash,
        version=__version__,
        results=rows,
        timings_s=[elapsed],
        generated=_now(),
    )
    header = "D,R_nats_per_time,trace_P,gap,are_residual,detectable,C_row_major"
    _write_text(args.out, "\n".join(report.comment_lines() + [header] + rows) + "\n")
    if args.gnuplot_stub:
        _emit_gnuplot(
            args,
            [
                "set xlabel 'D (MMSE budget)'",
                "set ylabel 'R (nats/time)'",
                "set key off",
                f"plot '{args.out}' every ::1 using 1:2 with linespoints",
            ],
        )
    return 0


def _check_line(name: str, ok: bool, detail: str) -> str:
    return f"{'PASS' if ok else 'FAIL'} {name}: {detail}"


def _cmd_validate(args) -> int:
    config_hash = _config_hash(args.config)
    model, params = load_problem(args.config)
    if params.sim is None:
        raise InputValidationError(
            ["the validate command requires the 'sim' block in the config"]
        )
    seed = args.seed if args.seed is not None else params.sim.seed
    cfg = SimConfig(
        dt=params.sim.dt,
        horizon=params.sim.horizon,
        trials=params.sim.trials,
        seed=seed,
    )
    tol = params.tolerances
    t0 = time.perf_counter()

    if args.gain_override is not None:
        gain = _parse_gain(args.gain_override, model)
        label = "gain-override"
        if check_detectable(model, gain):
            are = solve_care(model, gain, tol)
            info_pred, mmse_pred = rates_from_P(are.P, gain)
            predicted = (mmse_pred, info_pred)
        else:
            # Deliberate debugging path: let the divergence surface
            # through the blow-up guard instead of rejecting up front.
            predicted = None
        dunc = duncan_check(model, gain, cfg, tol, check_detectability=False)
        sim = simulate(
            model,
            gain,
            cfg,
            keep_paths=args.dump_paths is not None,
            check_detectability=False,
        )
    else:
        if args.D is not None:
            D = args.D
        elif len(params.distortion) == 1:
            D = params.distortion[0]
        else:
            raise InputValidationError(
                ["the config lists a distortion grid; pick one point with --D"]
            )
        point = design_sensor(model, D, tol)
        gain = point.C
        label = f"designed at D = {D:g}"
        predicted = (float(np.trace(point.P)), point.R)
        dunc = duncan_check(model, gain, cfg, tol)
        sim = simulate(model, gain, cfg, keep_paths=args.dump_paths is not None)
    elapsed = time.perf_counter() - t0

    checks = [
        (
            "duncan-identity",
            dunc.passed,
            f"mc={_fmt(dunc.mc_integral)} det={_fmt(dunc.det_integral)} "
            f"diff={_fmt(dunc.difference)} tol={_fmt(dunc.tolerance)}",
        )
    ]
    if predicted is not None:
        mmse_pred, info_pred = predicted
        mmse_tol = 3.0 * sim.mmse_rate_stderr + 10.0 * cfg.dt * max(1.0, abs(mmse_pred))
        info_tol = 3.0 * sim.info_rate_stderr + 10.0 * cfg.dt * max(1.0, abs(info_pred))
        checks.append(
            (
                "stationary-mmse",
                abs(sim.mmse_rate_hat - mmse_pred) <= mmse_tol,
                f"measured={_fmt(sim.mmse_rate_hat)} predicted={_fmt(mmse_pred)} "
                f"stderr={_fmt(sim.mmse_rate_stderr)} tol={_fmt(mmse_tol)}",
            )
        )
        checks.append(
            (
                "stationary-info",
                abs(sim.info_rate_hat - info_pred) <= info_tol,
                f"measured={_fmt(sim.info_rate_hat)} predicted={_fmt(info_pred)} "
                f"stderr={_fmt(sim.info_rate_stderr)} tol={_fmt(info_tol)}",
            )
        )

    lines = [_check_line(name, ok, detail) for name, ok, detail in checks]
    all_ok = all(ok for _, ok, _ in checks)
    report = RunReport(
        command=_echo(args),
        config_hash=config_hash,
        version=__version__,
        results=lines,
        timings_s=[elapsed],
        generated=_now(),
    )
    body = (
        report.comment_lines()
        + [f"# sensor: {label}"]
        + lines
        + [f"result: {'PASS' if all_ok else 'FAIL'}"]
    )
    _write_text(args.out, "\n".join(body) + "\n")
    if args.dump_paths is not None and sim.paths is not None:
        dump_paths(sim.paths, args.dump_paths)
    return 0 if all_ok else 1


def _cmd_zdsc(args) -> int:
    config_hash = _config_hash(args.config)
    model, params = load_problem(args.config)
    if params.zdsc is None:
        raise InputValidationError(
            ["the zdsc command requires the 'zdsc' block in the config"]
        )
    z = params.zdsc
    K = max(1, int(round(z.horizon / z.tau)))
    dt = params.sim.dt if params.sim is not None else 1e-3
    dt = min(dt, K * z.tau / 10.0)
    if args.seed is not None:
        seed = args.seed
    elif params.sim is not None:
        seed = params.sim.seed
    else:
        seed = 0
    cfg = SimConfig(dt=dt, horizon=K * z.tau, trials=z.trials, seed=seed)

    rows = []
    timings = []
    for setting in z.settings:
        t0 = time.perf_counter()
        scheme = ZdscScheme(tau=z.tau, delta=setting, K=K, seed=seed)
        res = decode_and_measure(model, scheme, cfg)
        point = design_sensor(model, res.distortion_hat, params.tolerances)
        gap = res.rate_hat - point.R
        rows.append(
            ",".join(
                [_fmt(z.tau)]
                + [_fmt(d) for d in setting]
                + [_fmt(res.rate_hat), _fmt(res.distortion_hat), _fmt(point.R), _fmt(gap)]
            )
        )
        timings.append(time.perf_counter() - t0)
    report = RunReport(
        command=_echo(args),
        config_hash=config_hash,
        version=__version__,
        results=rows,
        timings_s=timings,
        generated=_now(),
    )
    header = (
        "tau,"
        + ",".join(f"delta_{i + 1}" for i in range(model.n))
        + ",rate_nats_per_time,distortion,R_of_distortion,gap"
    )
    note = "# gap = rate_nats_per_time - R_of_distortion (unverified bound direction)"
    _write_text(
        args.out, "\n".join(report.comment_lines() + [note, header] + rows) + "\n"
    )
    if args.gnuplot_stub:
        dist_col = model.n + 3
        _emit_gnuplot(
            args,
            [
                "set xlabel 'distortion'",
                "set ylabel 'nats/time'",
                "set key top right",
                f"plot '{args.out}' every ::1 using {dist_col}:{model.n + 2} "
                "with points title 'measured scheme', \\",
                f"     '{args.out}' every ::1 using {dist_col}:{model.n + 4} "
                "with linespoints title 'trade-off curve'",
            ],
        )
    return 0


def _cmd_care(args) -> int:
    config_hash = _config_hash(args.config)
    model, params = load_problem(args.config)
    if args.gain_override is None:
        raise InputValidationError(
            ["the care command requires --gain-override with the sensor gain C"]
        )
    gain = _parse_gain(args.gain_override, model)
    sol = solve_care(model, gain, params.tolerances)
    info_rate, mmse = rates_from_P(sol.P, gain)
    spectrum = sorted(
        ([float(ev.real), float(ev.imag)] for ev in sol.closed_loop_spectrum),
        key=lambda pair: (pair[0], pair[1]),
    )
    payload = {
        "command": _echo(args),
        "config_sha256": config_hash,
        "version": __version__,
        "C_row_major": [float(v) for v in gain.C.ravel()],
        "P": [[float(v) for v in row] for row in sol.P],
        "residual": float(sol.residual),
        "closed_loop_spectrum": spectrum,
        "mmse": float(mmse),
        "info_rate_nats_per_time": float(info_rate),
    }
    _write_text(args.out, json.dumps(payload, indent=2) + "\n")
    return 0


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("config", help="path to the JSON problem description")
    sub.add_argument("--out", default=None, help="output file (default: stdout)")
    sub.add_argument(
        "--seed", type=int, default=None, help="override the seed from the config"
    )
    sub.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker threads for sweeping grid points",
    )
    sub.add_argument(
        "--gain-override",
        default=None,
        metavar="C",
        help="row-major sensor gain entries, comma or space separated",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="immse",
        description="Information-MMSE trade-off curves for Gauss-Markov sources.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("rd-curve", help="sweep R(D) over the config's distortion grid")
    _add_common(p)
    p.add_argument(
        "--gnuplot-stub",
        action="store_true",
        help="also write a gnuplot script next to the CSV",
    )
    p.set_defaults(func=_cmd_rd_curve)

    p = sub.add_parser(
        "validate", help="design a sensor and check it against simulation"
    )
    _add_common(p)
    p.add_argument(
        "--D",
        dest="D",
        type=float,
        default=None,
        help="distortion budget to validate (required when the config has a grid)",
    )
    p.add_argument(
        "--dump-paths",
        default=None,
        metavar="DIR",
        help="write per-trial t,x,xhat,y CSV files into DIR",
    )
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("zdsc", help="run the quantize-and-hold coding experiment")
    _add_common(p)
    p.add_argument(
        "--gnuplot-stub",
        action="store_true",
        help="also write a gnuplot script next to the CSV",
    )
    p.set_defaults(func=_cmd_zdsc)

    p = sub.add_parser(
        "care", help="solve the stationary covariance equation for a given gain"
    )
    _add_common(p)
    p.set_defaults(func=_cmd_care)
    return parser


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args._argv = list(argv)
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InputValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 3
    except BlowupError as exc:
        print(f"simulation divergence: {exc}", file=sys.stderr)
        return 4
    except ImmseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
