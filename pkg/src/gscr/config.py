"""Study configuration: JSON loading, validation and canonicalization.

A study config is a single UTF-8 JSON object (no comments)::

    {
      "network": {
        "buses":    [{"id": "1", "thevenin_x": 0.6667,
                      "p_rated": 1.0, "t_param": 1.24}, ...],
        "branches": [{"from": "1", "to": "2", "x": 0.6667}, ...]
      },
      "experiment": "analyze" | "sweep" | "contour" | "boundary" | "study",
      "output": "out",
      "formats": ["report", "csv"],
      "tol": 1e-8, "steps": 50, "t_ref": "t_star",
      "sweep":    {"bus": "2", "from": 1.0, "to": 1.6, "steps": 50},
      "boundary": {"bus": "2", "from": 1.0, "to": 3.0},
      "contour":  {"targets": ["singular", "cgscr_star", 2.0],
                   "grid_bus": "2", "solve_bus": "1",
                   "from": 1.0, "to": 1.4, "steps": 21},
      "study":    {"t_rows": [[1.24, 1.5, 1.75]], "from": 1.0, "to": 1.4,
                   "steps": 21}
    }

Buses carrying both ``p_rated`` and ``t_param`` are converter buses;
buses with neither are passive and get eliminated by Kron reduction
before analysis.  ``"bus": "uniform"`` sweeps a multiplier on every
rated power instead of one bus's power.

Loading fills defaults, merges parallel branches and cross-checks every
referenced bus id, so a loaded config re-serializes to an identical
canonical form (the basis of the config hash).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .errors import CrossRefError, ParseError, SchemaError
from .network import AcNetwork, Branch, BusSpec, merge_parallel_branches
from .strength import ConverterSet

__all__ = [
    "StudyConfig",
    "SweepParams",
    "BoundaryParams",
    "ContourParams",
    "StudyParams",
    "load_config",
    "parse_config",
    "canonical_dict",
    "canonical_json",
    "config_hash",
    "DEFAULT_STEPS",
    "DEFAULT_TOL",
    "DEFAULT_T_REF",
    "EXPERIMENTS",
    "FORMATS",
]

DEFAULT_STEPS = 50
DEFAULT_TOL = 1e-8
DEFAULT_T_REF = "t_star"
DEFAULT_OUTPUT = "out"
EXPERIMENTS = ("analyze", "sweep", "contour", "boundary", "study")
FORMATS = ("report", "csv")

_TOP_KEYS = {
    "network", "experiment", "output", "formats", "tol", "steps", "t_ref",
    "sweep", "boundary", "contour", "study",
}
_BUS_KEYS = {"id", "thevenin_x", "p_rated", "t_param"}
_BRANCH_KEYS = {"from", "to", "x"}


@dataclass(frozen=True)
class SweepParams:
    bus: str | None  # None sweeps a uniform multiplier
    lo: float
    hi: float
    steps: int


@dataclass(frozen=True)
class BoundaryParams:
    bus: str | None
    lo: float
    hi: float


@dataclass(frozen=True)
class ContourParams:
    targets: tuple[float | str, ...]
    grid_bus: str
    solve_bus: str
    lo: float
    hi: float
    steps: int


@dataclass(frozen=True)
class StudyParams:
    t_rows: tuple[tuple[float, ...], ...]
    grid_bus: str
    solve_bus: str
    lo: float
    hi: float
    steps: int


@dataclass(frozen=True)
class StudyConfig:
    network: AcNetwork
    converters: ConverterSet
    experiment: str
    output: str
    formats: tuple[str, ...]
    tol: float
    steps: int
    t_ref: str
    sweep: SweepParams | None = None
    boundary: BoundaryParams | None = None
    contour: ContourParams | None = None
    study: StudyParams | None = None


# ---------------------------------------------------------------------------
# typed field access with path-aware errors
# ---------------------------------------------------------------------------

def _get(obj: dict, key: str, path: str, required: bool = True):
    if key not in obj:
        if required:
            raise SchemaError(f"{path}.{key}: missing required field")
        return None
    return obj[key]

def _string(value, path: str) -> str:
    if not isinstance(value, str) or not value:
        raise SchemaError(f"{path}: expected a non-empty string, got {value!r}")
    return value

def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{path}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise SchemaError(f"{path}: must be finite, got {value!r}")
    return value

def _positive(value, path: str) -> float:
    value = _number(value, path)
    if value <= 0:
        raise SchemaError(f"{path}: must be > 0, got {value!r}")
    return value

def _integer(value, path: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"{path}: expected an integer, got {value!r}")
    if value < minimum:
        raise SchemaError(f"{path}: must be >= {minimum}, got {value}")
    return value

def _object(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(f"{path}: expected an object, got {type(value).__name__}")
    return value

def _array(value, path: str) -> list:
    if not isinstance(value, list):
        raise SchemaError(f"{path}: expected an array, got {type(value).__name__}")
    return value

def _reject_unknown(obj: dict, allowed: set[str], path: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise SchemaError(f"{path}: unknown field(s) {', '.join(unknown)}")


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------

def load_config(path, overrides: dict | None = None) -> StudyConfig:
    """Load, override, schema-validate and cross-reference a study config.

    ``overrides`` (typically from CLI flags) are applied onto the raw
    JSON before validation, so bad override values get the same
    path-aware errors as bad file contents.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read config file {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if overrides:
        raw = _apply_overrides(raw, overrides)
    return parse_config(raw)


def _apply_overrides(raw: Any, overrides: dict) -> Any:
    if not isinstance(raw, dict):
        return raw  # parse_config reports the real problem
    raw = dict(raw)
    for key in ("experiment", "output", "tol", "steps", "t_ref"):
        if overrides.get(key) is not None:
            raw[key] = overrides[key]
    section = overrides.get("section") or {}
    section = {k: v for k, v in section.items() if v is not None}
    experiment = raw.get("experiment")
    # --steps controls the active experiment's grid, not just the default
    if overrides.get("steps") is not None and experiment in ("sweep", "contour", "study"):
        section = dict(section, steps=overrides["steps"])
    if section and experiment in ("sweep", "boundary", "contour", "study"):
        merged = dict(raw.get(experiment) or {})
        merged.update(section)
        raw[experiment] = merged
    return raw


def parse_config(raw: Any) -> StudyConfig:
    """Validate a raw JSON object into a StudyConfig."""
    top = _object(raw, "$")
    _reject_unknown(top, _TOP_KEYS, "$")

    net, conv = _parse_network(_object(_get(top, "network", "$"), "$.network"))
    bus_ids = set(net.bus_ids)

    experiment = top.get("experiment", "analyze")
    if experiment not in EXPERIMENTS:
        raise SchemaError(
            f"$.experiment: must be one of {', '.join(EXPERIMENTS)}, got {experiment!r}"
        )
    output = _string(top.get("output", DEFAULT_OUTPUT), "$.output")
    formats = _parse_formats(top.get("formats"))
    tol = _positive(top.get("tol", DEFAULT_TOL), "$.tol")
    steps = _integer(top.get("steps", DEFAULT_STEPS), "$.steps", minimum=2)
    t_ref = top.get("t_ref", DEFAULT_T_REF)
    if t_ref not in ("t_star", "mean"):
        raise SchemaError(f"$.t_ref: must be 't_star' or 'mean', got {t_ref!r}")

    sweep = boundary = contour = study = None
    if "sweep" in top:
        sweep = _parse_sweep(_object(top["sweep"], "$.sweep"), bus_ids, steps)
    if "boundary" in top:
        boundary = _parse_boundary(_object(top["boundary"], "$.boundary"), bus_ids)
    if "contour" in top:
        contour = _parse_contour(
            _object(top["contour"], "$.contour"), net, steps
        )
    if "study" in top:
        study = _parse_study(_object(top["study"], "$.study"), net, conv, steps)

    missing_section = {
        "sweep": sweep, "boundary": boundary, "contour": contour, "study": study,
    }
    if experiment != "analyze" and missing_section[experiment] is None:
        raise SchemaError(
            f"$.{experiment}: missing section for experiment {experiment!r}"
        )

    return StudyConfig(
        network=net,
        converters=conv,
        experiment=experiment,
        output=output,
        formats=formats,
        tol=tol,
        steps=steps,
        t_ref=t_ref,
        sweep=sweep,
        boundary=boundary,
        contour=contour,
        study=study,
    )


def _parse_network(obj: dict) -> tuple[AcNetwork, ConverterSet]:
    _reject_unknown(obj, {"buses", "branches"}, "$.network")
    raw_buses = _array(_get(obj, "buses", "$.network"), "$.network.buses")
    if not raw_buses:
        raise SchemaError("$.network.buses: must not be empty")

    buses: list[BusSpec] = []
    conv_ids: list[str] = []
    conv_p: list[float] = []
    conv_t: list[float] = []
    seen: set[str] = set()
    for i, raw_bus in enumerate(raw_buses):
        path = f"$.network.buses[{i}]"
        bus = _object(raw_bus, path)
        _reject_unknown(bus, _BUS_KEYS, path)
        bus_id = _string(_get(bus, "id", path), f"{path}.id")
        if bus_id in seen:
            raise SchemaError(f"{path}.id: duplicate bus id {bus_id!r}")
        seen.add(bus_id)
        thevenin = bus.get("thevenin_x")
        if thevenin is not None:
            thevenin = _positive(thevenin, f"{path}.thevenin_x")
        has_p = "p_rated" in bus
        has_t = "t_param" in bus
        if has_p != has_t:
            raise SchemaError(
                f"{path}: p_rated and t_param must be given together"
            )
        if has_p:
            conv_ids.append(bus_id)
            conv_p.append(_positive(bus["p_rated"], f"{path}.p_rated"))
            conv_t.append(_number(bus["t_param"], f"{path}.t_param"))
        buses.append(
            BusSpec(id=bus_id, thevenin_x=thevenin, is_converter=has_p)
        )

    branches: list[Branch] = []
    for i, raw_branch in enumerate(_array(obj.get("branches", []), "$.network.branches")):
        path = f"$.network.branches[{i}]"
        br = _object(raw_branch, path)
        _reject_unknown(br, _BRANCH_KEYS, path)
        from_bus = _string(_get(br, "from", path), f"{path}.from")
        to_bus = _string(_get(br, "to", path), f"{path}.to")
        x = _positive(_get(br, "x", path), f"{path}.x")
        for end in (from_bus, to_bus):
            if end not in seen:
                raise CrossRefError(
                    f"{path}: references unknown bus {end!r}"
                )
        if from_bus == to_bus:
            raise SchemaError(f"{path}: from and to must differ")
        branches.append(Branch(from_bus, to_bus, x))

    if not conv_ids:
        raise SchemaError("$.network.buses: at least one converter bus is required")

    net = AcNetwork(buses=tuple(buses), branches=merge_parallel_branches(branches))
    conv = ConverterSet(
        bus_ids=tuple(conv_ids), p_rated=tuple(conv_p), t_param=tuple(conv_t)
    )
    return net, conv


def _parse_formats(value) -> tuple[str, ...]:
    if value is None:
        return FORMATS
    fmts = _array(value, "$.formats")
    if not fmts:
        raise SchemaError("$.formats: must not be empty")
    for f in fmts:
        if f not in FORMATS:
            raise SchemaError(
                f"$.formats: must be a subset of {list(FORMATS)}, got {f!r}"
            )
    # canonical order, duplicates collapsed
    return tuple(f for f in FORMATS if f in fmts)


def _parse_direction_bus(obj: dict, bus_ids: set[str], path: str) -> str | None:
    bus = _string(_get(obj, "bus", path), f"{path}.bus")
    if bus == "uniform":
        return None
    if bus not in bus_ids:
        raise CrossRefError(f"{path}.bus: references unknown bus {bus!r}")
    return bus


def _parse_range(obj: dict, path: str, default_lo=None, default_hi=None) -> tuple[float, float]:
    lo = obj.get("from", default_lo)
    hi = obj.get("to", default_hi)
    if lo is None:
        raise SchemaError(f"{path}.from: missing required field")
    if hi is None:
        raise SchemaError(f"{path}.to: missing required field")
    lo = _number(lo, f"{path}.from")
    hi = _number(hi, f"{path}.to")
    if not lo < hi:
        raise SchemaError(f"{path}: 'from' must be < 'to', got [{lo}, {hi}]")
    return lo, hi


def _parse_sweep(obj: dict, bus_ids: set[str], default_steps: int) -> SweepParams:
    _reject_unknown(obj, {"bus", "from", "to", "steps"}, "$.sweep")
    lo, hi = _parse_range(obj, "$.sweep")
    steps = _integer(obj.get("steps", default_steps), "$.sweep.steps", minimum=2)
    return SweepParams(
        bus=_parse_direction_bus(obj, bus_ids, "$.sweep"), lo=lo, hi=hi, steps=steps
    )


def _parse_boundary(obj: dict, bus_ids: set[str]) -> BoundaryParams:
    _reject_unknown(obj, {"bus", "from", "to"}, "$.boundary")
    lo, hi = _parse_range(obj, "$.boundary")
    return BoundaryParams(
        bus=_parse_direction_bus(obj, bus_ids, "$.boundary"), lo=lo, hi=hi
    )


def _parse_plane(obj: dict, net: AcNetwork, path: str) -> tuple[str, str]:
    converter_ids = net.converter_ids
    if len(converter_ids) < 2:
        raise SchemaError(f"{path}: needs a network with at least 2 converter buses")
    grid_bus = obj.get("grid_bus", converter_ids[1])
    solve_bus = obj.get("solve_bus", converter_ids[0])
    for name, bus in (("grid_bus", grid_bus), ("solve_bus", solve_bus)):
        bus = _string(bus, f"{path}.{name}")
        if bus not in converter_ids:
            raise CrossRefError(
                f"{path}.{name}: references unknown converter bus {bus!r}"
            )
    if grid_bus == solve_bus:
        raise SchemaError(f"{path}: grid_bus and solve_bus must differ")
    return grid_bus, solve_bus


def _parse_contour(obj: dict, net: AcNetwork, default_steps: int) -> ContourParams:
    _reject_unknown(
        obj, {"targets", "grid_bus", "solve_bus", "from", "to", "steps"}, "$.contour"
    )
    raw_targets = _array(_get(obj, "targets", "$.contour"), "$.contour.targets")
    if not raw_targets:
        raise SchemaError("$.contour.targets: must not be empty")
    targets: list[float | str] = []
    for i, t in enumerate(raw_targets):
        path = f"$.contour.targets[{i}]"
        if isinstance(t, str):
            if t not in ("singular", "cgscr_star"):
                raise SchemaError(
                    f"{path}: string targets must be 'singular' or 'cgscr_star', got {t!r}"
                )
            targets.append(t)
        else:
            targets.append(_positive(t, path))
    grid_bus, solve_bus = _parse_plane(obj, net, "$.contour")
    lo, hi = _parse_range(obj, "$.contour", default_lo=1.0, default_hi=1.4)
    steps = _integer(obj.get("steps", default_steps), "$.contour.steps", minimum=2)
    return ContourParams(
        targets=tuple(targets), grid_bus=grid_bus, solve_bus=solve_bus,
        lo=lo, hi=hi, steps=steps,
    )


def _parse_study(
    obj: dict, net: AcNetwork, conv: ConverterSet, default_steps: int
) -> StudyParams:
    _reject_unknown(
        obj, {"t_rows", "grid_bus", "solve_bus", "from", "to", "steps"}, "$.study"
    )
    raw_rows = _array(_get(obj, "t_rows", "$.study"), "$.study.t_rows")
    if not raw_rows:
        raise SchemaError("$.study.t_rows: must not be empty")
    rows: list[tuple[float, ...]] = []
    for i, raw_row in enumerate(raw_rows):
        path = f"$.study.t_rows[{i}]"
        row = _array(raw_row, path)
        if len(row) != conv.n:
            raise SchemaError(
                f"{path}: expected {conv.n} values (one per converter bus), "
                f"got {len(row)}"
            )
        rows.append(tuple(_number(v, f"{path}[{k}]") for k, v in enumerate(row)))
    grid_bus, solve_bus = _parse_plane(obj, net, "$.study")
    lo, hi = _parse_range(obj, "$.study", default_lo=1.0, default_hi=1.4)
    steps = _integer(obj.get("steps", default_steps), "$.study.steps", minimum=2)
    return StudyParams(
        t_rows=tuple(rows), grid_bus=grid_bus, solve_bus=solve_bus,
        lo=lo, hi=hi, steps=steps,
    )


# ---------------------------------------------------------------------------
# canonical form and hashing
# ---------------------------------------------------------------------------

def canonical_dict(config: StudyConfig) -> dict:
    """Plain-dict image of the config with all defaults resolved.

    Loading the serialized canonical form yields an identical canonical
    form (round-trip stability), which makes the config hash meaningful.
    """
    conv = config.converters
    buses = []
    for bus in config.network.buses:
        entry: dict[str, Any] = {"id": bus.id}
        if bus.thevenin_x is not None:
            entry["thevenin_x"] = bus.thevenin_x
        if bus.is_converter:
            i = conv.index_of(bus.id)
            entry["p_rated"] = conv.p_rated[i]
            entry["t_param"] = conv.t_param[i]
        buses.append(entry)
    branches = [
        {"from": br.from_bus, "to": br.to_bus, "x": br.x}
        for br in config.network.branches
    ]
    out: dict[str, Any] = {
        "network": {"buses": buses, "branches": branches},
        "experiment": config.experiment,
        "output": config.output,
        "formats": list(config.formats),
        "tol": config.tol,
        "steps": config.steps,
        "t_ref": config.t_ref,
    }
    if config.sweep is not None:
        out["sweep"] = {
            "bus": config.sweep.bus if config.sweep.bus is not None else "uniform",
            "from": config.sweep.lo,
            "to": config.sweep.hi,
            "steps": config.sweep.steps,
        }
    if config.boundary is not None:
        out["boundary"] = {
            "bus": config.boundary.bus if config.boundary.bus is not None else "uniform",
            "from": config.boundary.lo,
            "to": config.boundary.hi,
        }
    if config.contour is not None:
        out["contour"] = {
            "targets": list(config.contour.targets),
            "grid_bus": config.contour.grid_bus,
            "solve_bus": config.contour.solve_bus,
            "from": config.contour.lo,
            "to": config.contour.hi,
            "steps": config.contour.steps,
        }
    if config.study is not None:
        out["study"] = {
            "t_rows": [list(row) for row in config.study.t_rows],
            "grid_bus": config.study.grid_bus,
            "solve_bus": config.study.solve_bus,
            "from": config.study.lo,
            "to": config.study.hi,
            "steps": config.study.steps,
        }
    return out


def canonical_json(config: StudyConfig) -> str:
    return json.dumps(canonical_dict(config), sort_keys=True, separators=(",", ":"))


def config_hash(config: StudyConfig) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()
