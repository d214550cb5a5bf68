"""Sweep specifications: per-command parameter schemas, config files and validation.

Every command has a flat set of keys. Values come from three layers, later
layers winning: built-in defaults, a config file (JSON object or ``key=value``
lines) and command-line flags. Unknown keys are an error in every layer.

Grids are written as ``<x>_min``, ``<x>_max``, ``<x>_points`` and
``<x>_scale`` (``lin`` or ``log``); one-dimensional sweeps use the bare
``points``/``scale`` keys for their single axis.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "COMMANDS",
    "ConfigError",
    "Param",
    "SweepSpec",
    "Grid",
    "parse_config",
    "read_config_file",
    "make_grid",
]

FORMATS = ("csv", "json")
SCALES = ("lin", "log")


class ConfigError(ValueError):
    """Invalid sweep configuration. ``key`` names the offending entry."""

    exit_code = 2

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class Param:
    kind: str  # int, float, bool, scale, choice, q
    default: object
    help: str
    choices: tuple = ()


def _grid_params(prefix: str, lo, hi, points: int, scale: str, what: str, kind: str = "float") -> dict[str, Param]:
    p = f"{prefix}_" if prefix else ""
    return {
        f"{prefix}_min" if prefix else "min": Param(kind, lo, f"lower end of the {what} grid"),
        f"{prefix}_max" if prefix else "max": Param(kind, hi, f"upper end of the {what} grid"),
        f"{p}points": Param("int", points, f"number of {what} grid points"),
        f"{p}scale": Param("scale", scale, f"{what} grid spacing (lin or log)"),
    }


_N = {"n": Param("int", 1000, "atom number N")}
_Q_AXIS = {
    "q_min": Param("float", 0.1, "lower end of the Q grid"),
    "q_max": Param("float", None, "upper end of the Q grid (default Q_GHZ = N pi/2)"),
    "points": Param("int", 200, "number of Q grid points"),
    "scale": Param("scale", "log", "Q grid spacing (lin or log)"),
}

COMMANDS: dict[str, dict[str, Param]] = {
    "echo-sweep": _N | _Q_AXIS,
    "baselines": _N | _Q_AXIS,
    "noise-sweep": _N
    | {
        "dn_min": Param("float", 0.1, "lower end of the detection-resolution grid"),
        "dn_max": Param("float", 1000.0, "upper end of the detection-resolution grid"),
        "points": Param("int", 61, "number of detection-resolution grid points"),
        "scale": Param("scale", "log", "detection-resolution grid spacing (lin or log)"),
        "q": Param("q", "opt", "echo twisting strength (number or 'opt')"),
        "ghz": Param("bool", True, "include the noisy GHZ bound column"),
    },
    "cavity-gain": _grid_params("n", 100000, 100000, 1, "log", "atom number", kind="int")
    | _grid_params("eta", 0.1, 10.0, 3, "log", "cooperativity")
    | _grid_params("d", 1.0, 100.0, 41, "log", "detuning d")
    | {
        "d_free": Param("bool", False, "optimise d jointly with Q (ignores the d grid)"),
        "r": Param("float", 0.5, "spin-flip probability per scattered photon"),
    },
    "cavity-map": {
        "p": Param("float", 1e4, "intracavity photon number p"),
        "phi_cav": Param("float", 1e-3, "single-pass phase Phi"),
        "eta": Param("float", 1.0, "cooperativity"),
        "n": Param("int", 1000, "atom number N"),
    }
    | _grid_params("d", 0.1, 100.0, 41, "log", "detuning d"),
    "rydberg-design": _grid_params("n", 10, 10000, 61, "log", "atom number", kind="int")
    | {
        "epsilon": Param("float", 0.1, "Rydberg population epsilon"),
        "c_tilde_lo": Param("float", 1e10, "lower edge of the C_tilde band"),
        "c_tilde_hi": Param("float", 1e11, "upper edge of the C_tilde band"),
    },
    "wigner": {
        "n": Param("int", 30, "atom number N"),
        "q": Param("q", "opt", "twisting strength (number or 'opt')"),
        "stage": Param("choice", "twisted", "state to export", ("css", "twisted", "rotated", "echo")),
        "phi": Param("float", 0.0, "rotation angle for the rotated and echo stages"),
        "n_theta": Param("int", 91, "polar grid points"),
        "n_phi": Param("int", 180, "azimuthal grid points"),
        "nodes": Param("choice", "uniform", "polar nodes", ("uniform", "gauss")),
    },
    "oracle-check": {
        "n": Param("int", 4, "atom number N"),
        "q": Param("q", "opt", "twisting strength (number or 'opt')"),
        "phi": Param("float", 0.01, "rotation angle"),
        "gamma_t": Param("float", 0.05, "dephasing gamma t per twisting stage for the dissipative check"),
        "tol": Param("float", 1e-10, "absolute tolerance"),
    },
}

# keys accepted in a config file besides the command parameters
OUTPUT_KEYS = {"output": "-", "format": "csv", "threads": None, "no_timestamp": False}
# parameters holding atom numbers; N >= 1 is enforced on them
ATOM_KEYS = ("n", "n_min", "n_max")


@dataclass(frozen=True)
class Grid:
    lo: float
    hi: float
    points: int
    scale: str

    def values(self) -> np.ndarray:
        return make_grid(self.lo, self.hi, self.points, self.scale)


def make_grid(lo: float, hi: float, points: int, scale: str) -> np.ndarray:
    if points == 1:
        return np.array([float(lo)])
    if scale == "log":
        return np.geomspace(lo, hi, points)
    return np.linspace(lo, hi, points)


@dataclass
class SweepSpec:
    command: str
    params: dict = field(default_factory=dict)
    output_path: str = "-"
    format: str = "csv"
    threads: int | None = None
    no_timestamp: bool = False

    def grid(self, prefix: str = "") -> Grid:
        p = f"{prefix}_" if prefix else ""
        lo_key = f"{prefix}_min" if prefix else "min"
        hi_key = f"{prefix}_max" if prefix else "max"
        return Grid(self.params[lo_key], self.params[hi_key], self.params[f"{p}points"], self.params[f"{p}scale"])

    def resolved(self) -> dict:
        """Complete input echo for the table metadata (output location excluded)."""
        return {"command": self.command, "format": self.format, **self.params}


def _coerce(key: str, param: Param, raw):
    if raw is None:
        return None
    kind = param.kind
    try:
        if kind == "bool":
            if isinstance(raw, bool):
                return raw
            text = str(raw).strip().lower()
            if text in ("1", "true", "yes", "on"):
                return True
            if text in ("0", "false", "no", "off"):
                return False
            raise ValueError
        if kind == "int":
            if isinstance(raw, bool):
                raise ValueError
            if isinstance(raw, str):
                value = float(raw.strip())
            else:
                value = float(raw)
            if not value.is_integer():
                raise ValueError
            return int(value)
        if kind == "float":
            if isinstance(raw, bool):
                raise ValueError
            value = float(raw.strip()) if isinstance(raw, str) else float(raw)
            if not math.isfinite(value):
                raise ValueError
            return value
        if kind == "q":
            if isinstance(raw, str) and raw.strip().lower() == "opt":
                return "opt"
            return _coerce(key, Param("float", None, ""), raw)
        if kind == "scale":
            if raw not in SCALES:
                raise ValueError
            return raw
        if kind == "choice":
            if raw not in param.choices:
                raise ConfigError(key, f"expected one of {', '.join(param.choices)}, got {raw!r}")
            return raw
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(key, f"malformed {kind} value {raw!r}") from None
    raise AssertionError(kind)


def read_config_file(path: str | Path) -> dict:
    """Read a flat JSON object or ``key = value`` lines (``#`` starts a comment)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror or exc}") from exc
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON in {path}: {exc.msg} (line {exc.lineno})") from None
        for key, value in data.items():
            if isinstance(value, (dict, list)):
                raise ConfigError(key, "config values must be scalars")
        return data
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config", f"line {lineno} of {path} is not key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def parse_config(command: str, flags: dict | None = None, file_values: dict | None = None) -> SweepSpec:
    """Merge defaults, file values and flags into a validated :class:`SweepSpec`.

    ``flags`` holds only options actually given on the command line; a flag
    wins over the same key in ``file_values``.
    """
    if command not in COMMANDS:
        raise ConfigError("command", f"unknown command {command!r}")
    schema = COMMANDS[command]
    merged: dict = {}
    for source in (file_values or {}, flags or {}):
        for key, value in source.items():
            key = key.replace("-", "_")
            if key not in schema and key not in OUTPUT_KEYS:
                raise ConfigError(key, f"unknown key for {command}")
            merged[key] = value

    params = {}
    for key, param in schema.items():
        params[key] = _coerce(key, param, merged[key]) if key in merged else param.default

    for key in ATOM_KEYS:
        if key in params and params[key] is not None and params[key] < 1:
            raise ConfigError(key, f"atom number must be >= 1, got {params[key]}")
    _check_grids(command, params)

    fmt = merged.get("format", OUTPUT_KEYS["format"])
    if fmt not in FORMATS:
        raise ConfigError("format", f"expected csv or json, got {fmt!r}")
    threads = merged.get("threads")
    if threads is not None:
        threads = _coerce("threads", Param("int", None, ""), threads)
        if threads < 1:
            raise ConfigError("threads", f"must be >= 1, got {threads}")
    no_ts = _coerce("no_timestamp", Param("bool", False, ""), merged.get("no_timestamp", False))
    output = str(merged.get("output", OUTPUT_KEYS["output"]))
    return SweepSpec(command, params, output, fmt, threads, no_ts)


def _check_grids(command: str, params: dict) -> None:
    for key, value in params.items():
        if not key.endswith("points"):
            continue
        prefix = key[: -len("points")]
        lo_key = f"{prefix}min" if prefix else next(k for k in params if k.endswith("_min"))
        hi_key = f"{prefix}max" if prefix else next(k for k in params if k.endswith("_max"))
        scale = params[f"{prefix}scale"]
        if value < 1:
            raise ConfigError(key, f"grid must be nonempty, got {value} points")
        lo, hi = params[lo_key], params[hi_key]
        if lo is not None and hi is not None and lo > hi:
            raise ConfigError(lo_key, f"grid lower end {lo} exceeds upper end {hi}")
        if scale == "log" and lo is not None and lo <= 0:
            raise ConfigError(lo_key, f"log-spaced grid needs a positive lower end, got {lo}")
    for key in ("r", "eta", "epsilon", "c_tilde_lo", "c_tilde_hi", "p", "phi_cav", "tol"):
        if key in params and not params[key] >= 0:
            raise ConfigError(key, f"must be >= 0, got {params[key]}")
    if command == "cavity-gain" and not 0 <= params["r"] <= 1:
        raise ConfigError("r", f"spin-flip probability must be in [0, 1], got {params['r']}")
    if command == "wigner" and (params["n_theta"] < 2 or params["n_phi"] < 2):
        bad = "n_theta" if params["n_theta"] < 2 else "n_phi"
        raise ConfigError(bad, "grid needs at least 2 points per axis")
