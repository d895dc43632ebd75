"""Command-line front end.

Subcommands ``eval``, ``sweep``, ``critical``, ``simulate`` and ``validate``
write CSV to stdout (or atomically to ``--out``). Densities are given per
km^2 and thresholds in dB; both are converted to SI once, here.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 the
``validate`` suite found disagreement.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple

import numpy as np

from . import analytic, density, montecarlo
from .analytic import CpStPoint, NetworkConfig, db_to_linear, dbm_to_watts
from .errors import AccuracyError, DensecellError, ShapeError
from .pathloss import make_mspm

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_VALIDATE = 4

PER_KM2 = 1e-6  # BS/km^2 -> BS/m^2
CSV_HEADER = "lambda_per_km2,delta_h_m,n_antennas,tau_db,method,cp,cp_ci,st_bps_hz_km2"
CRITICAL_HEADER = "source,lambda_unconstrained_per_km2,lambda_constrained_per_km2,feasible,binding,fold_reduction"
VALIDATE_HEADER = "model,lambda_per_km2,n_antennas,cp_analytic,cp_monte_carlo,cp_ci,deviation,agrees"

ANALYTIC_METHODS = ("siso_exact", "miso_exact", "miso_approx", "siso_lower_bound", "siso_upper_bound")
METHOD_CHOICES = ANALYTIC_METHODS + ("bounds", "monte_carlo")
DEFAULT_ALPHAS = {"sspm": [4.0], "dspm": [2.5, 4.0]}


class Row(NamedTuple):
    """One CSV record in user units."""

    lambda_per_km2: float
    delta_h_m: float
    n_antennas: int
    tau_db: float
    method: str
    cp: float
    cp_ci: float | None
    st_bps_hz_km2: float


def _fmt(x: float) -> str:
    return format(x, ".9g")


def row_from_point(point: CpStPoint, cfg: NetworkConfig, tau_db: float) -> Row:
    return Row(
        point.lam / PER_KM2,
        cfg.delta_h,
        cfg.n_antennas,
        tau_db,
        point.method,
        point.cp,
        point.ci_halfwidth,
        point.st / PER_KM2,
    )


def emit_csv(rows) -> bytes:
    """Serialise rows as UTF-8 CSV with LF endings and 9 significant digits."""
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                [
                    _fmt(r.lambda_per_km2),
                    _fmt(r.delta_h_m),
                    str(int(r.n_antennas)),
                    _fmt(r.tau_db),
                    r.method,
                    _fmt(r.cp),
                    "" if r.cp_ci is None else _fmt(r.cp_ci),
                    _fmt(r.st_bps_hz_km2),
                ]
            )
        )
    return ("\n".join(lines) + "\n").encode("utf-8")


def parse_csv(data: bytes) -> list[Row]:
    """Inverse of :func:`emit_csv`."""
    lines = data.decode("utf-8").split("\n")
    if lines[0] != CSV_HEADER:
        raise ValueError("unexpected CSV header")
    rows = []
    for line in lines[1:]:
        if not line:
            continue
        f = line.split(",")
        rows.append(
            Row(float(f[0]), float(f[1]), int(f[2]), float(f[3]), f[4], float(f[5]), float(f[6]) if f[6] else None, float(f[7]))
        )
    return rows


# ---------------------------------------------------------------------------
# argument handling


def _add_common(p: argparse.ArgumentParser):
    g = p.add_argument_group("model and network")
    g.add_argument("--model", choices=("sspm", "dspm", "mspm"), default="sspm")
    g.add_argument("--alpha", type=float, nargs="+", help="path-loss exponents, one per slope")
    g.add_argument("--r1", type=float, default=10.0, help="dual-slope corner distance (m)")
    g.add_argument("--breakpoints", type=float, nargs="+", default=[], help="multi-slope breakpoints (m)")
    g.add_argument("--lambda-per-km2", type=float, default=100.0, help="BS density (BS/km^2)")
    g.add_argument("--delta-h", type=float, default=0.0, help="antenna height difference (m)")
    g.add_argument("--tau-db", type=float, default=10.0, help="SIR threshold (dB)")
    g.add_argument("--na", type=int, default=1, help="antennas per BS")
    g.add_argument("--power-dbm", type=float, default=23.0, help="transmit power (dBm)")
    g.add_argument("--eps", type=float, default=0.0, help="coverage requirement")
    p.add_argument("--workers", type=int, default=1, help="worker threads")
    p.add_argument("--config", help="flat 'key = value' file with defaults for these flags")
    p.add_argument("--out", help="write output to this file instead of stdout")


def _add_methods(p):
    p.add_argument("--method", action="append", choices=METHOD_CHOICES, help="repeatable; 'bounds' adds both SISO bounds")


def _add_mc(p, trials, seed=1):
    g = p.add_argument_group("monte carlo")
    g.add_argument("--trials", type=int, default=trials)
    g.add_argument("--seed", type=int, default=seed)
    g.add_argument("--fading", choices=montecarlo.FADING_KINDS, default="beamforming")
    g.add_argument("--rice-nc", type=float, default=1.0)
    g.add_argument("--rice-dof", type=int, default=12)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="densecell", description="Coverage and throughput of dense small-cell networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="coverage at one density")
    _add_common(p)
    _add_methods(p)
    _add_mc(p, 10000)

    p = sub.add_parser("sweep", help="coverage over a grid of one parameter")
    _add_common(p)
    _add_methods(p)
    _add_mc(p, 10000)
    p.add_argument("--axis", choices=("lambda", "delta_h", "n_antennas"), default="lambda")
    grid = p.add_mutually_exclusive_group()
    grid.add_argument("--grid", type=float, nargs="+", help="explicit grid values")
    grid.add_argument("--log", type=float, nargs=3, metavar=("START", "STOP", "POINTS"))
    grid.add_argument("--linear", type=float, nargs=3, metavar=("START", "STOP", "POINTS"))

    p = sub.add_parser("critical", help="critical densities")
    _add_common(p)
    p.add_argument("--cross-check", action="store_true", help="report closed form and numeric search")
    p.add_argument("--exact", action="store_true", help="numeric search on exact rather than approximate coverage")

    p = sub.add_parser("simulate", help="Monte Carlo coverage")
    _add_common(p)
    _add_mc(p, 10000)

    p = sub.add_parser("validate", help="analytic-versus-simulation agreement grid")
    _add_common(p)
    _add_mc(p, 4000, seed=20240601)
    return parser


def read_config(path: str) -> dict[str, str]:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for n, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{n}: expected 'key = value'")
            out[key.strip().lstrip("-")] = value.strip()
    return out


def _apply_config(parser: argparse.ArgumentParser, values: dict[str, str]):
    """Install config values as parser defaults so explicit flags win."""
    actions = {opt: a for a in parser._actions for opt in a.option_strings}
    defaults = {}
    for key, raw in values.items():
        action = actions.get("--" + key)
        if action is None or key == "config":
            raise ValueError(f"unknown config key {key!r}")
        conv = action.type or str
        if isinstance(action, argparse._StoreTrueAction):
            val = raw.lower() in ("1", "true", "yes", "on")
        elif action.nargs in ("+", "*") or isinstance(action.nargs, int) or isinstance(action, argparse._AppendAction):
            val = [conv(v) for v in raw.replace(",", " ").split()]
        else:
            val = conv(raw)
        if action.choices is not None:
            for v in val if isinstance(val, list) else [val]:
                if v not in action.choices:
                    raise ValueError(f"config {key}: invalid choice {v!r}")
        if isinstance(action, argparse._AppendAction):
            defaults["_config_" + action.dest] = val
        else:
            defaults[action.dest] = val
    parser.set_defaults(**defaults)


def _model(args):
    alphas = args.alpha or DEFAULT_ALPHAS.get(args.model)
    if alphas is None:
        raise ValueError("--alpha is required for --model mspm")
    if args.model == "sspm":
        return make_mspm(alphas)
    if args.model == "dspm":
        return make_mspm(alphas, [args.r1])
    return make_mspm(alphas, args.breakpoints)


def _config(args):
    return NetworkConfig(
        lam=args.lambda_per_km2 * PER_KM2,
        delta_h=args.delta_h,
        power=dbm_to_watts(args.power_dbm),
        tau=db_to_linear(args.tau_db),
        n_antennas=args.na,
        cp_requirement=args.eps,
    )


def _methods(args):
    chosen = args.method or getattr(args, "_config_method", None)
    if not chosen:
        raise ValueError("at least one --method is required")
    out = []
    for m in chosen:
        for name in ("siso_lower_bound", "siso_upper_bound") if m == "bounds" else (m,):
            if name not in out:
                out.append(name)
    return out


def _fading(args):
    return montecarlo.FadingSpec(args.fading, args.rice_nc, args.rice_dof)


def _sim(args):
    return montecarlo.SimSpec(trials=args.trials, seed=args.seed)


def _grid(args):
    if args.grid:
        values = list(args.grid)
    elif args.log or args.linear:
        start, stop, points = args.log or args.linear
        if points != int(points):
            raise ValueError("grid point count must be an integer")
        if args.log:
            if not (start > 0 and stop > 0):
                raise ValueError("log grid needs positive limits")
            values = list(np.geomspace(start, stop, int(points)))
        else:
            values = list(np.linspace(start, stop, int(points)))
    else:
        raise ValueError("sweep needs --grid, --log or --linear")
    if len(values) < 2:
        raise ValueError("grid needs at least two points")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError("grid must be strictly increasing")
    if args.axis == "n_antennas":
        if any(v != int(v) or v < 1 for v in values):
            raise ValueError("n_antennas grid must hold positive integers")
        values = [int(v) for v in values]
    return values


def _points(model, cfg, methods, args, workers):
    rows = []
    for m in methods:
        if m == "monte_carlo":
            rows.append(montecarlo.estimate_st(model, cfg, _fading(args), _sim(args), workers))
        else:
            rows.append(analytic.evaluate(model, cfg, m))
    return rows


# ---------------------------------------------------------------------------
# subcommands


def cmd_eval(args) -> tuple[bytes, int]:
    model, cfg, methods = _model(args), _config(args), _methods(args)
    points = _points(model, cfg, methods, args, args.workers)
    return emit_csv(row_from_point(p, cfg, args.tau_db) for p in points), EXIT_OK


def cmd_sweep(args) -> tuple[bytes, int]:
    model, base, methods = _model(args), _config(args), _methods(args)
    values = _grid(args)
    field = {"lambda": "lam", "delta_h": "delta_h", "n_antennas": "n_antennas"}[args.axis]
    scale = PER_KM2 if args.axis == "lambda" else 1
    cfgs = [base.with_(**{field: v * scale if scale != 1 else v}) for v in values]
    uses_mc = "monte_carlo" in methods

    def work(cfg):
        return [row_from_point(p, cfg, args.tau_db) for p in _points(model, cfg, methods, args, args.workers if uses_mc else 1)]

    if args.workers > 1 and not uses_mc:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            per_point = list(pool.map(work, cfgs))
    else:
        per_point = [work(c) for c in cfgs]
    return emit_csv(r for rows in per_point for r in rows), EXIT_OK


def _critical_line(source, res):
    if not res.feasible:
        return f"{source},,,false,,"
    return ",".join(
        [
            source,
            _fmt(res.lambda_unconstrained / PER_KM2),
            _fmt(res.lambda_constrained / PER_KM2),
            "true",
            res.binding,
            _fmt(res.fold_reduction),
        ]
    )


def cmd_critical(args) -> tuple[bytes, int]:
    model, cfg = _model(args), _config(args)
    lines = [CRITICAL_HEADER]
    closed = density.closed_form_critical_density(model, cfg) if model.n_slopes <= 2 else None
    if closed is not None:
        lines.append(_critical_line("closed_form", closed))
    if closed is None or args.cross_check:
        res = density.critical_density_numeric(model, cfg, use_exact=args.exact, workers=args.workers)
        lines.append(_critical_line("numeric_exact" if args.exact else "numeric_approx", res))
    return ("\n".join(lines) + "\n").encode("utf-8"), EXIT_OK


def cmd_simulate(args) -> tuple[bytes, int]:
    model, cfg = _model(args), _config(args)
    point = montecarlo.estimate_st(model, cfg, _fading(args), _sim(args), args.workers)
    return emit_csv([row_from_point(point, cfg, args.tau_db)]), EXIT_OK


VALIDATE_MODELS = {
    "sspm": make_mspm([4.0]),
    "dspm": make_mspm([2.5, 4.0], [10.0]),
}


def cmd_validate(args) -> tuple[bytes, int]:
    """Fixed reference grid: tau = 10 dB, delta_h = 2 m, both reference models."""
    base = NetworkConfig(lam=1e-4, delta_h=2.0, tau=10.0)
    lines = [VALIDATE_HEADER]
    code = EXIT_OK
    for name, model in VALIDATE_MODELS.items():
        cells = montecarlo.agreement_grid(model, base, sim=_sim(args), workers=args.workers)
        for c in cells:
            lines.append(
                ",".join(
                    [
                        name,
                        _fmt(c.lam / PER_KM2),
                        str(c.n_antennas),
                        _fmt(c.analytic),
                        _fmt(c.estimate.mean),
                        _fmt(c.estimate.ci_halfwidth),
                        _fmt(c.deviation),
                        "true" if c.agrees else "false",
                    ]
                )
            )
        if sum(c.agrees for c in cells) < len(cells) - 1:
            code = EXIT_VALIDATE
    return ("\n".join(lines) + "\n").encode("utf-8"), code


COMMANDS = {
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "critical": cmd_critical,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
}


def _write_atomic(path: str, data: bytes):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".densecell-", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write(stream, data: bytes):
    buf = getattr(stream, "buffer", None)
    if buf is not None:
        buf.write(data)
        buf.flush()
    else:
        stream.write(data.decode("utf-8"))


def run_command(argv, stdout=None, stderr=None) -> int:
    """Run one CLI invocation and return its exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    saved = sys.stdout, sys.stderr
    sys.stdout, sys.stderr = stdout, stderr  # argparse prints usage to these
    try:
        try:
            pre, _ = _config_preparse(argv)
            if pre.config:
                _apply_config(_subparser(parser, pre.command), read_config(pre.config))
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
        except (OSError, ValueError) as exc:
            print(f"densecell: error: {exc}", file=stderr)
            return EXIT_USAGE
        try:
            data, code = COMMANDS[args.command](args)
        except (AccuracyError, ShapeError, ArithmeticError) as exc:
            print(f"densecell: numerical error: {exc}", file=stderr)
            return EXIT_NUMERICAL
        except (DensecellError, ValueError) as exc:
            stderr.write(_subparser(parser, args.command).format_usage())
            print(f"densecell {args.command}: error: {exc}", file=stderr)
            return EXIT_USAGE
        if args.out:
            _write_atomic(args.out, data)
        else:
            _write(stdout, data)
        return code
    finally:
        sys.stdout, sys.stderr = saved


def _subparser(parser, command):
    return parser._subparsers._group_actions[0].choices[command]


def _config_preparse(argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if known.config and known.command not in COMMANDS:
        raise ValueError("--config needs a subcommand before it")
    return known, rest


def main(argv=None) -> int:
    return run_command(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
