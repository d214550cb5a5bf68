"""Command-line front end: ``twistlab <command> [--key value ...]``.

Exit codes: 0 success, 2 configuration error, 3 numeric-domain error,
4 I/O error.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .baselines import ghz_noisy_bound, optimal_squeezing, qcrb_delta_phi, squeezing_curve, squeezing_point
from .config import COMMANDS, ConfigError, SweepSpec, make_grid, parse_config, read_config_file
from .dissipation import (
    CavityParams,
    OptimizationError,
    TrotterConvergenceError,
    cavity_map,
    cavity_sigma_total,
    cavity_variance_growth,
    dephasing_per_twist,
    optimize_cavity,
    plateau_sigma,
)
from .echo import DetectionNoise, gain_db, noisy_sensitivity, optimal_twisting, run_echo
from .oracle import oracle_report
from .rydberg import critical_atom_number, rydberg_gain_curve
from .spin import apply_rotation, apply_twist, make_css
from .table import Column, EmitError, ResultTable, emit
from .wigner import sphere_integral, wigner_grid

__all__ = ["main", "run", "build_parser", "NumericDomainError", "resolve_threads"]

EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


class NumericDomainError(ArithmeticError):
    pass


def resolve_threads(spec: SweepSpec) -> int:
    if spec.threads is not None:
        return spec.threads
    env = os.environ.get("TWISTLAB_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ConfigError("TWISTLAB_THREADS", f"malformed int value {env!r}") from None
        if value < 1:
            raise ConfigError("TWISTLAB_THREADS", f"must be >= 1, got {value}")
        return value
    return os.cpu_count() or 1


def _ordered_map(fn, items, threads):
    # Executor.map yields in submission order, whatever the completion order
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _resolve_q(q, n_atoms):
    if q != "opt":
        if q < 0:
            raise ConfigError("q", f"twisting strength must be >= 0, got {q}")
        return q
    if n_atoms < 2:
        raise NumericDomainError("Q_opt is undefined for N < 2")
    return optimal_twisting(n_atoms)[0]


def _int_grid(spec, prefix):
    g = spec.grid(prefix)
    values = np.rint(make_grid(g.lo, g.hi, g.points, g.scale)).astype(int)
    # rounding a log grid can repeat small integers
    _, first = np.unique(values, return_index=True)
    return [int(v) for v in values[np.sort(first)]]


def _echo_sweep(spec, threads):
    n = spec.params["n"]
    q_max = spec.params["q_max"]
    if q_max is None:
        q_max = n * math.pi / 2
    if q_max < spec.params["q_min"]:
        raise ConfigError("q_max", f"grid upper end {q_max} is below q_min")
    grid = make_grid(spec.params["q_min"], q_max, spec.params["points"], spec.params["scale"])
    results = _ordered_map(lambda q: run_echo(n, float(q)), grid, threads)
    if all(r.delta_phi is None for r in results):
        raise NumericDomainError("echo slope vanishes at every grid point")
    cols = [
        Column("Q", "1"),
        Column("gain_G", "1"),
        Column("var_Sy", "1"),
        Column("delta_phi", "rad"),
        Column("gain_db", "dB"),
    ]
    rows = [[r.Q, r.gain_G, r.var_Sy, r.delta_phi, r.metrological_gain_db] for r in results]
    meta = {"q_max_resolved": q_max}
    if n >= 2:
        meta["Q_opt"] = optimal_twisting(n)[0]
    return ResultTable(cols, rows, meta)


def _baselines(spec, threads):
    n = spec.params["n"]
    q_max = spec.params["q_max"]
    if q_max is None:
        q_max = n * math.pi / 2
    if q_max < spec.params["q_min"]:
        raise ConfigError("q_max", f"grid upper end {q_max} is below q_min")
    grid = make_grid(spec.params["q_min"], q_max, spec.params["points"], spec.params["scale"])

    def point(q):
        q = float(q)
        echo = run_echo(n, q)
        return echo.metrological_gain_db, gain_db(n, qcrb_delta_phi(n, q))

    pts = _ordered_map(point, grid, threads)
    _, angles = squeezing_curve(n, grid)
    sq = _ordered_map(lambda q: gain_db(n, squeezing_point(n, float(q)).delta_phi), grid, threads)
    cols = [
        Column("Q", "1"),
        Column("echo_db", "dB"),
        Column("qcrb_db", "dB"),
        Column("squeezing_db", "dB"),
        Column("squeezing_angle", "rad"),
        Column("sql_db", "dB"),
        Column("heisenberg_db", "dB"),
    ]
    heis = 10 * math.log10(n)
    rows = [[float(q), e, b, s, float(a), 0.0, heis] for q, (e, b), s, a in zip(grid, pts, sq, angles)]
    return ResultTable(cols, rows, {"q_max_resolved": q_max})


def _noise_sweep(spec, threads):
    n = spec.params["n"]
    if n < 2:
        raise NumericDomainError("noise sweep needs N >= 2")
    q = _resolve_q(spec.params["q"], n)
    grid = make_grid(spec.params["dn_min"], spec.params["dn_max"], spec.params["points"], spec.params["scale"])
    q_sq = optimal_squeezing(n).Q

    def point(dn):
        noise = DetectionNoise.from_delta_n(n, float(dn))
        echo = gain_db(n, noisy_sensitivity(n, q, noise))
        sq = gain_db(n, squeezing_point(n, q_sq, noise).delta_phi)
        ghz = ghz_noisy_bound(n, [float(dn)]).points[0][1] if spec.params["ghz"] else None
        return [float(dn), noise.r_det, echo, sq, ghz]

    rows = _ordered_map(point, grid, threads)
    cols = [
        Column("delta_n", "atoms"),
        Column("r_det", "1"),
        Column("echo_db", "dB"),
        Column("squeezing_db", "dB"),
        Column("ghz_db", "dB"),
    ]
    return ResultTable(cols, rows, {"Q_echo": q, "Q_squeezing": q_sq})


def _cavity_gain(spec, threads):
    p = spec.params
    n_grid = _int_grid(spec, "n")
    eta_grid = make_grid(p["eta_min"], p["eta_max"], p["eta_points"], p["eta_scale"])
    r = p["r"]
    cols = [
        Column("N", "atoms"),
        Column("eta", "1"),
        Column("d", "1"),
        Column("Q", "1"),
        Column("sigma0_sq", "1"),
        Column("sigma_dephasing_sq", "1"),
        Column("sigma_scatter_sq", "1"),
        Column("sigma_total_sq", "1"),
        Column("gain_db", "dB"),
        Column("plateau_db", "dB"),
    ]
    if p["d_free"]:
        tasks = [(n, float(eta), None) for n in n_grid for eta in eta_grid]
    else:
        d_grid = make_grid(p["d_min"], p["d_max"], p["d_points"], p["d_scale"])
        tasks = [(n, float(eta), float(d)) for n in n_grid for eta in eta_grid for d in d_grid]

    def point(task):
        n, eta, d = task
        if n < 2:
            raise NumericDomainError("cavity budget needs N >= 2")
        q, d_opt, _ = optimize_cavity(n, eta, r, d)
        b = cavity_sigma_total(CavityParams(n, eta, d_opt, q, r))
        plateau = -10 * math.log10(plateau_sigma(n, eta, r))
        return [n, eta, d_opt, q, b.sigma0_sq, b.sigma_dephasing_sq, b.sigma_scatter_sq, b.sigma_total_sq, b.gain_db, plateau]

    return ResultTable(cols, _ordered_map(point, tasks, threads))


def _cavity_map(spec, threads):
    p = spec.params
    n = p["n"]
    if n < 2:
        raise NumericDomainError("cavity map needs N >= 2")
    grid = make_grid(p["d_min"], p["d_max"], p["d_points"], p["d_scale"])
    rows = []
    for d in grid:
        cm = cavity_map(p["p"], p["phi_cav"], float(d), p["eta"])
        q = n * cm.q_per_2s
        rows.append(
            [
                float(d),
                cm.q_per_2s,
                q,
                cm.gamma_per_chi,
                cm.gamma_sc_per_chi,
                dephasing_per_twist(n, q, float(d)),
                cavity_variance_growth(q, float(d)),
            ]
        )
    cols = [
        Column("d", "1"),
        Column("chi_t", "1"),
        Column("Q", "1"),
        Column("gamma_per_chi", "1"),
        Column("gamma_sc_per_chi", "1"),
        Column("gamma_t_per_stage", "1"),
        Column("variance_growth", "1"),
    ]
    return ResultTable(cols, rows)


def _rydberg_design(spec, threads):
    p = spec.params
    n_grid = [n for n in _int_grid(spec, "n")]
    if n_grid[0] < 2:
        raise NumericDomainError("Rydberg design needs N >= 2")
    band = (p["c_tilde_lo"], p["c_tilde_hi"])
    if band[0] <= 0 or band[1] <= 0 or p["epsilon"] <= 0:
        raise NumericDomainError("epsilon and C_tilde must be > 0")
    chunks = _ordered_map(lambda n: rydberg_gain_curve([n], p["epsilon"], band)[0], n_grid, threads)
    units = {"N": "atoms", "feasible_lo": "bool", "feasible_hi": "bool"}
    units |= {k: "dB" for k in ("gain_ideal_db", "gain_constrained_lo_db", "gain_constrained_hi_db")}
    cols = [Column(k, units.get(k, "1")) for k in chunks[0]]
    meta = {
        "N_cr_lo": critical_atom_number(p["epsilon"], min(band)),
        "N_cr_hi": critical_atom_number(p["epsilon"], max(band)),
    }
    return ResultTable.from_records(cols, chunks, meta)


def _wigner(spec, threads):
    p = spec.params
    n = p["n"]
    q = _resolve_q(p["q"], n) if p["stage"] != "css" else 0.0
    state = make_css(n)
    if p["stage"] != "css":
        state = apply_twist(state, q, +1)
    if p["stage"] in ("rotated", "echo"):
        state = apply_rotation(state, "y", p["phi"])
    if p["stage"] == "echo":
        state = apply_twist(state, q, -1)
    grid = wigner_grid(state, p["n_theta"], p["n_phi"], p["nodes"])
    meta = {"Q_resolved": q, "W_min": grid.min(), "W_max": float(grid.values.max())}
    if grid.theta_weights is not None:
        meta["integral"] = sphere_integral(grid)
    cols = [Column("theta", "rad"), Column("phi", "rad"), Column("W", "1/sr")]
    rows = [
        [float(t), float(f), float(grid.values[i, j])]
        for i, t in enumerate(grid.theta)
        for j, f in enumerate(grid.phi)
    ]
    return ResultTable(cols, rows, meta)


def _oracle_check(spec, threads):
    p = spec.params
    n = p["n"]
    if n > 12:
        raise ConfigError("n", "dense oracle limited to N <= 12")
    q = 1.0 if p["q"] == "opt" and n < 2 else _resolve_q(p["q"], n)
    records = oracle_report(n, q, p["phi"], p["gamma_t"])
    for rec in records:
        rec["pass"] = rec["abs_error"] <= p["tol"]
    cols = [
        Column("case", "-"),
        Column("quantity", "-"),
        Column("pipeline", "1"),
        Column("oracle", "1"),
        Column("abs_error", "1"),
        Column("pass", "bool"),
    ]
    ok = all(rec["pass"] for rec in records)
    worst = max(rec["abs_error"] for rec in records)
    return ResultTable.from_records(cols, records, {"Q_resolved": q, "verdict": "PASS" if ok else "FAIL", "max_abs_error": worst})


RUNNERS = {
    "echo-sweep": _echo_sweep,
    "noise-sweep": _noise_sweep,
    "cavity-gain": _cavity_gain,
    "cavity-map": _cavity_map,
    "rydberg-design": _rydberg_design,
    "baselines": _baselines,
    "wigner": _wigner,
    "oracle-check": _oracle_check,
}


def run(spec: SweepSpec, threads: int | None = None) -> ResultTable:
    """Evaluate a validated spec. Rows follow grid order."""
    if threads is None:
        threads = resolve_threads(spec)
    table = RUNNERS[spec.command](spec, threads)
    table.metadata = {"inputs": spec.resolved(), **table.metadata}
    return table


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twistlab", description="Twisting-echo metrology sweeps.")
    parser.add_argument("--version", action="version", version=f"twistlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, schema in COMMANDS.items():
        sp = sub.add_parser(command, argument_default=argparse.SUPPRESS)
        sp.add_argument("--config", help="JSON object or key=value file; flags override its values")
        sp.add_argument("-o", "--output", help="output path, '-' for stdout (default)")
        sp.add_argument("--format", help="csv (default) or json")
        sp.add_argument("--threads", help="worker threads (default: $TWISTLAB_THREADS or CPU count)")
        sp.add_argument("--no-timestamp", action="store_true", help="omit the timestamp metadata line")
        for key, param in schema.items():
            default = "" if param.default is None else f" (default {param.default})"
            sp.add_argument(f"--{key.replace('_', '-')}", dest=key, metavar=param.kind.upper(), help=param.help + default)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config", None)
    try:
        file_values = read_config_file(config_path) if config_path else {}
        spec = parse_config(command, args, file_values)
        threads = resolve_threads(spec)
    except ConfigError as exc:
        print(f"twistlab {command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        table = run(spec, threads)
    except ConfigError as exc:
        print(f"twistlab {command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericDomainError, ValueError, ArithmeticError, OptimizationError, TrotterConvergenceError) as exc:
        print(f"twistlab {command}: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    stamp = None if spec.no_timestamp else datetime.now(timezone.utc).isoformat(timespec="seconds")
    try:
        emit(table, spec.format, spec.output_path, stamp)
    except EmitError as exc:
        print(f"twistlab {command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    if command == "oracle-check":
        verdict = table.metadata["verdict"]
        print(f"oracle-check N={spec.params['n']}: {verdict} (max abs error {table.metadata['max_abs_error']:.3g})", file=sys.stderr)
        if verdict != "PASS":
            return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
