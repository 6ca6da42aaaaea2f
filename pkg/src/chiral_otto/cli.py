"""Command-line front end.

Resolution order for every parameter: command-line flag, then the flat JSON
config file given with ``--config``, then the built-in default.  Exit codes:
0 success, 1 warnings under ``--strict`` or a failed integration, 2 usage
error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from . import output
from .cycle import (
    DEFAULT_BETA_COLD,
    DEFAULT_BETA_HOT,
    SWEEP_OFFSET,
    SWEEP_POINTS,
    CycleConfig,
    efficiency_vs_phase,
    run_cycle,
    sweep_detuning,
    sweep_phase,
)
from .lindblad import DEFAULT_DT, BasisMode, IntegrationError, thermalization_trace
from .spectral import (
    DEFAULT_GAP_THRESHOLD,
    DEFAULT_PATH_SAMPLES,
    TWO_PI,
    ControlParameter,
    ControlPath,
    DriveParameters,
    build_hamiltonian,
    eigensystem,
    spectrum_along_path,
)
from .thermo import BathSpec, gibbs_state

EXIT_OK, EXIT_STRICT, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(ValueError):
    pass


class Param(NamedTuple):
    kind: str  # float | int | choice | str
    default: Any
    choices: Tuple[str, ...] = ()
    optional: bool = False  # None allowed
    nonneg: bool = False
    help: str = ""


CHOICES = {
    "chirality": ("left", "right"),
    "control": ("phase", "detuning"),
    "mode": ("dressed", "bare"),
    "pairing": ("sorted", "continuity"),
    "population_reference": ("hot-point", "isochore"),
    "layout": ("long", "wide"),
}


def _choice(name, default, help=""):
    return Param("choice", default, CHOICES[name], help=help)


_DRIVES = {
    "omega12": Param("float", 1.0, nonneg=True, help="Rabi amplitude 1-2 (1/tau0)"),
    "omega13": Param("float", 1.0, nonneg=True, help="Rabi amplitude 1-3 (1/tau0)"),
    "omega23": Param("float", 1.0, nonneg=True, help="Rabi amplitude magnitude 2-3 (1/tau0)"),
}
_CYCLE = {
    "beta_hot": Param("float", DEFAULT_BETA_HOT, nonneg=True, help="hot bath inverse temperature (1/E0)"),
    "beta_cold": Param("float", DEFAULT_BETA_COLD, nonneg=True, help="cold bath inverse temperature (1/E0)"),
    "pairing": _choice("pairing", "sorted"),
    "population_reference": _choice("population_reference", "hot-point"),
    "gap_threshold": Param("float", DEFAULT_GAP_THRESHOLD, nonneg=True),
    "samples": Param("int", DEFAULT_PATH_SAMPLES, help="path grid size for gap/continuity scans"),
}

SCHEMA: Dict[str, Dict[str, Param]] = {
    "spectrum": {
        **_DRIVES,
        "chirality": _choice("chirality", "left"),
        "control": _choice("control", "phase", "swept axis"),
        "from": Param("float", None, optional=True),
        "to": Param("float", None, optional=True),
        "phi": Param("float", 0.0),
        "delta": Param("float", 0.0),
        "grid": Param("int", 1, help="1 evaluates the single point (phi, delta)"),
    },
    "thermalize": {
        **_DRIVES,
        "chirality": _choice("chirality", "left"),
        "phi": Param("float", math.pi / 2),
        "delta": Param("float", 0.1),
        "beta": Param("float", DEFAULT_BETA_COLD, nonneg=True, help="bath inverse temperature"),
        "initial_beta": Param("float", DEFAULT_BETA_HOT, nonneg=True, help="initial Gibbs state temperature"),
        "kappa": Param("float", 0.05, nonneg=True),
        "nbar": Param("float", None, optional=True, nonneg=True, help="fixed bath occupation (required for bare)"),
        "mode": _choice("mode", "dressed"),
        "t_end": Param("float", None, optional=True, help="default 50/kappa"),
        "dt": Param("float", DEFAULT_DT),
        "store_every": Param("int", None, optional=True),
    },
    "cycle": {
        **_DRIVES,
        **_CYCLE,
        "chirality": _choice("chirality", "left"),
        "control": _choice("control", "detuning"),
        "from": Param("float", 0.0),
        "to": Param("float", 1.0),
        "phi": Param("float", math.pi, help="fixed phase for detuning control"),
        "delta": Param("float", 0.1, help="fixed detuning for phase control"),
    },
    "sweep-phase": {
        **_DRIVES,
        **_CYCLE,
        "phi1": Param("float", math.pi / 2),
        "delta": Param("float", 0.1),
        "from": Param("float", SWEEP_OFFSET),
        "to": Param("float", TWO_PI - SWEEP_OFFSET),
        "points": Param("int", SWEEP_POINTS),
        "layout": _choice("layout", "long"),
    },
    "sweep-detuning": {
        **_DRIVES,
        **_CYCLE,
        "phi": Param("float", math.pi / 2),
        "delta1": Param("float", 0.0),
        "to": Param("float", 1.0, help="largest delta2; grid is (delta1, to]"),
        "points": Param("int", SWEEP_POINTS),
        "layout": _choice("layout", "long"),
    },
    "efficiency-map": {
        **_DRIVES,
        **_CYCLE,
        "delta_from": Param("float", 0.0),
        "delta_to": Param("float", 1.0),
        "from": Param("float", SWEEP_OFFSET),
        "to": Param("float", TWO_PI - SWEEP_OFFSET),
        "points": Param("int", SWEEP_POINTS),
    },
}

def _angle_keys(command: str, params: Dict[str, Any]) -> Tuple[str, ...]:
    keys = ["phi", "phi1"]
    if command in ("sweep-phase", "efficiency-map") or params.get("control") == "phase":
        keys += ["from", "to"]
    return tuple(keys)


@dataclass
class RunConfig:
    command: str
    params: Dict[str, Any] = field(default_factory=dict)
    output: Optional[str] = None
    format: str = "csv"
    strict: bool = False

    def echo(self) -> Dict[str, Any]:
        """Flat provenance object; feeding it back as ``--config`` reproduces this config."""
        return {"command": self.command, "output": self.output, "format": self.format,
                "strict": self.strict, **self.params}


def _coerce(command: str, key: str, value: Any) -> Any:
    schema = SCHEMA[command]
    if key not in schema:
        raise UsageError(f"unknown parameter {key!r} for command {command!r}")
    spec = schema[key]
    if value is None:
        if spec.optional:
            return None
        raise UsageError(f"parameter {key!r} may not be null")
    try:
        if spec.kind == "float":
            if isinstance(value, bool):
                raise TypeError
            out = float(value)
            if not math.isfinite(out):
                raise UsageError(f"parameter {key!r} must be finite, got {value!r}")
            if spec.nonneg and out < 0:
                raise UsageError(f"parameter {key!r} must be >= 0, got {value!r}")
            return out
        if spec.kind == "int":
            if isinstance(value, bool) or float(value) != int(float(value)):
                raise TypeError
            return int(float(value))
        out = str(value)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"parameter {key!r} has invalid value {value!r}") from None
    if spec.choices and out not in spec.choices:
        raise UsageError(f"parameter {key!r} must be one of {', '.join(spec.choices)}, got {out!r}")
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chiral-otto", description="Chiral-molecule quantum Otto cycle simulator")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    for command, schema in SCHEMA.items():
        p = sub.add_parser(command)
        p.add_argument("--config", help="flat JSON object of parameters")
        p.add_argument("--output", "-o", default=argparse.SUPPRESS, help="output file (data goes to stdout if absent)")
        p.add_argument("--format", default=argparse.SUPPRESS, choices=("csv", "json"))
        p.add_argument("--strict", action="store_const", const=True, default=argparse.SUPPRESS,
                       help="exit 1 when any record carries a gap or pairing warning")
        p.add_argument("--degrees", action="store_true", help="angles given in degrees")
        for key, spec in schema.items():
            flag = "--" + key.replace("_", "-")
            kw: Dict[str, Any] = {"dest": key, "default": argparse.SUPPRESS, "help": spec.help or None}
            if spec.choices:
                kw["choices"] = spec.choices
            p.add_argument(flag, **kw)
    return parser


def _load_config_file(path: str) -> Dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise OSError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a flat JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def parse_config(argv: Sequence[str]) -> RunConfig:
    """Resolve command-line arguments (and an optional config file) into a RunConfig."""
    parser = build_parser()
    ns = vars(parser.parse_args(list(argv)))
    command = ns.pop("command")
    config_path = ns.pop("config", None)
    degrees = ns.pop("degrees", False)
    ns.pop("verbose", None)

    file_values = _load_config_file(config_path) if config_path else {}
    if "command" in file_values and file_values.pop("command") != command:
        raise UsageError("config file is for a different command")
    meta = {"output": None, "format": "csv", "strict": False}
    for key in ("output", "format", "strict"):
        if key in file_values:
            meta[key] = file_values.pop(key)
        if key in ns:
            meta[key] = ns.pop(key)
    if meta["format"] not in ("csv", "json"):
        raise UsageError(f"parameter 'format' must be csv or json, got {meta['format']!r}")
    if not isinstance(meta["strict"], bool):
        raise UsageError("parameter 'strict' must be a boolean")

    given = {k: _coerce(command, k, v) for k, v in file_values.items()}
    given.update({k: _coerce(command, k, v) for k, v in ns.items()})
    params = {k: spec.default for k, spec in SCHEMA[command].items()}
    params.update(given)
    if degrees:
        for key in _angle_keys(command, params):
            if key in given and given[key] is not None:
                params[key] = math.radians(given[key])
    _validate(command, params)
    return RunConfig(command, params, meta["output"], meta["format"], meta["strict"])


def _validate(command: str, p: Dict[str, Any]) -> None:
    if "beta_hot" in p and p["beta_hot"] > p["beta_cold"]:
        raise UsageError("parameter 'beta_hot' must not exceed 'beta_cold'")
    if "samples" in p and p["samples"] < 2:
        raise UsageError("parameter 'samples' must be >= 2")
    for key in ("points", "grid"):
        if key in p and p[key] < 1:
            raise UsageError(f"parameter {key!r} must be >= 1")
    if command == "spectrum" and p["grid"] > 1:
        if p["from"] is None or p["to"] is None:
            raise UsageError("parameters 'from' and 'to' are required when grid > 1")
        if p["from"] == p["to"]:
            raise UsageError("parameters 'from' and 'to' must differ")
    if command == "cycle" and p["from"] == p["to"]:
        raise UsageError("parameters 'from' and 'to' must differ")
    if command == "thermalize":
        if p["dt"] <= 0:
            raise UsageError("parameter 'dt' must be > 0")
        if p["mode"] == "bare" and p["nbar"] is None:
            raise UsageError("parameter 'nbar' is required in bare mode")
        if p["t_end"] is None and p["kappa"] <= 0:
            raise UsageError("parameter 'kappa' must be > 0 when 't_end' is not given")
        if p["store_every"] is not None and p["store_every"] < 1:
            raise UsageError("parameter 'store_every' must be >= 1")


def _drives(p: Dict[str, Any], **extra) -> DriveParameters:
    return DriveParameters(p["omega12"], p["omega13"], p["omega23"], **extra)


def _cycle_template(p: Dict[str, Any]) -> CycleConfig:
    return CycleConfig(
        drives=_drives(p),
        beta_hot=p["beta_hot"],
        beta_cold=p["beta_cold"],
        pairing=p["pairing"],
        gap_threshold=p["gap_threshold"],
        population_reference=p["population_reference"],
    )


class Result(NamedTuple):
    exit_code: int
    columns: Tuple[str, ...]
    rows: List[Dict[str, Any]]
    warnings: List[str]
    summary: str


def _run_spectrum(p):
    drives = _drives(p, chirality=p["chirality"], phi=p["phi"], delta=p["delta"])
    if p["grid"] == 1:
        param = p["phi"] if p["control"] == "phase" else p["delta"]
        points = [(param, eigensystem(build_hamiltonian(drives)))]
    else:
        other = p["delta"] if p["control"] == "phase" else p["phi"]
        path = ControlPath(ControlParameter(p["control"]), p["from"], p["to"], other, p["grid"])
        points = spectrum_along_path(drives, path)
    rows = output.spectrum_rows(points)
    lo = min(r["E1"] for r in rows)
    return output.SPECTRUM_COLUMNS, rows, [], f"{len(rows)} spectra, lowest level {lo:.6g} E0"


def _run_thermalize(p):
    drives = _drives(p, chirality=p["chirality"], phi=p["phi"], delta=p["delta"])
    bath = BathSpec(p["beta"], p["kappa"], p["nbar"])
    rho0 = gibbs_state(eigensystem(build_hamiltonian(drives)), p["initial_beta"])
    trace = thermalization_trace(drives, bath, rho0, p["t_end"], p["dt"], BasisMode(p["mode"]), p["store_every"])
    summary = (f"{trace.mode.value} thermalization: terminal epsilon {trace.epsilon[-1]:.3g}, "
               f"converged={trace.converged}")
    return output.THERMALIZE_COLUMNS, output.thermalize_rows(trace), [], summary


def _collect_warnings(records) -> List[str]:
    return [f"{r.chirality.value} @ {r.param:.6g}: {w}" for r in records for w in r.warnings]


def _run_cycle(p):
    other = p["delta"] if p["control"] == "phase" else p["phi"]
    path = ControlPath(ControlParameter(p["control"]), p["from"], p["to"], other, p["samples"])
    cfg = _cycle_template(p).with_control(path)
    rec = run_cycle(cfg.with_chirality(p["chirality"]))
    summary = f"{rec.chirality.value}: W={rec.work:.6g} E0, Qh={rec.q_hot:.6g}, Qc={rec.q_cold:.6g}, {rec.regime.value}"
    if rec.eta_percent is not None:
        summary += f", eta={rec.eta_percent:.4g}%"
    return output.CYCLE_COLUMNS, [output.cycle_row(rec)], _collect_warnings([rec]), summary


def _pairs_result(pairs, layout, label):
    records = [r for pair in pairs for r in (pair.left, pair.right)]
    if layout == "wide":
        cols, rows = output.WIDE_CYCLE_COLUMNS, output.wide_pair_rows(pairs)
    else:
        cols, rows = output.CYCLE_COLUMNS, output.pair_rows(pairs)
    split = sum(1 for pr in pairs if pr.left.regime != pr.right.regime)
    summary = f"{label}: {len(pairs)} grid points, {split} with differing enantiomer regimes"
    return cols, rows, _collect_warnings(records), summary


def _run_sweep_phase(p):
    grid = np.linspace(p["from"], p["to"], p["points"])
    pairs = sweep_phase(_cycle_template(p), grid, p["phi1"], p["delta"], p["samples"])
    return _pairs_result(pairs, p["layout"], "phase sweep")


def _run_sweep_detuning(p):
    grid = np.linspace(p["delta1"], p["to"], p["points"] + 1)[1:]
    pairs = sweep_detuning(_cycle_template(p), p["phi"], grid, p["delta1"], p["samples"])
    return _pairs_result(pairs, p["layout"], "detuning sweep")


def _run_efficiency_map(p):
    grid = np.linspace(p["from"], p["to"], p["points"])
    pts = efficiency_vs_phase(_cycle_template(p), grid, p["delta_from"], p["delta_to"], p["samples"])
    records = [r for pt in pts for r in (pt.left, pt.right)]
    best = {}
    for side in ("left", "right"):
        vals = [(getattr(pt, f"eta_{side}"), pt.phi) for pt in pts if getattr(pt, f"eta_{side}") is not None]
        best[side] = max(vals) if vals else None
    summary = "; ".join(
        f"max eta_{s}=" + (f"{b[0]:.4g}% at phi={b[1]:.4g}" if b else "n/a") for s, b in best.items()
    )
    return output.EFFICIENCY_COLUMNS, output.efficiency_rows(pts), _collect_warnings(records), summary


RUNNERS: Dict[str, Callable] = {
    "spectrum": _run_spectrum,
    "thermalize": _run_thermalize,
    "cycle": _run_cycle,
    "sweep-phase": _run_sweep_phase,
    "sweep-detuning": _run_sweep_detuning,
    "efficiency-map": _run_efficiency_map,
}


def _spot_check(command: str, columns, rows) -> None:
    if command == "spectrum":
        for r in rows:
            assert r["E1"] <= r["E2"] <= r["E3"], r
    elif command == "thermalize":
        for r in rows:
            assert 0.0 <= r["epsilon"] <= 1.0 and 0.0 <= r["fidelity"] <= 1.0, r
    elif command == "efficiency-map":
        for r in rows:
            assert all(r[k] is None or 0.0 <= r[k] for k in ("eta_left", "eta_right")), r
    elif "W" in columns:
        for r in rows:
            assert abs(r["W"] - (r["Qh"] + r["Qc"])) <= 1e-12 * max(1.0, abs(r["Qh"])), r


def execute(cfg: RunConfig, stdout=None) -> Result:
    """Run one configured command, write its data and return the outcome."""
    stdout = stdout or sys.stdout
    columns, rows, warnings, summary = RUNNERS[cfg.command](cfg.params)
    _spot_check(cfg.command, columns, rows)
    echo = cfg.echo()
    if cfg.format == "json":
        text = output.render_json(columns, rows, echo, warnings)
    else:
        text = output.render_csv(columns, rows, echo)
    code = EXIT_STRICT if (cfg.strict and warnings) else EXIT_OK
    if cfg.output:
        output.write_atomic(cfg.output, text)
        print(summary, file=stdout)
        if warnings:
            print(f"{len(warnings)} warning(s); first: {warnings[0]}", file=stdout)
    else:
        stdout.write(text)
        print(summary, file=sys.stderr)
    return Result(code, tuple(columns), rows, warnings, summary)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    verbose = argv.count("-v") + argv.count("--verbose")
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:  # argparse usage errors
        return EXIT_USAGE if exc.code else EXIT_OK
    except UsageError as exc:
        print(f"chiral-otto: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"chiral-otto: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        return execute(cfg).exit_code
    except OSError as exc:
        print(f"chiral-otto: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except IntegrationError as exc:
        print(f"chiral-otto: integration failed: {exc}", file=sys.stderr)
        return EXIT_STRICT
    except ValueError as exc:
        print(f"chiral-otto: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
