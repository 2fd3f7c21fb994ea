"""Command line interface.

``gscr <analyze|sweep|contour|boundary|study> <config.json> [options]``
loads a study config, dispatches to the matching experiment and writes
its outputs (JSON report, RFC-4180 CSV tables, figures and a run
manifest) into the configured directory.

Exit codes: 0 success, 1 domain error, 2 configuration error.  Errors
are emitted as a single JSON line on stderr.  The ``GSCR_LOG``
environment variable (error|warn|info|debug) controls log verbosity.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .boundary import (
    LoadingDirection,
    compare_boundaries,
    gscr_contour,
    inhomogeneity_study,
    margin_profile,
    sweep,
)
from .config import StudyConfig, config_hash, load_config
from .errors import ConfigError, GscrError, SchemaError
from .network import kron_reduce
from .strength import analyze

__all__ = ["RunManifest", "run", "main"]

logger = logging.getLogger(__name__)

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


@dataclass(frozen=True)
class RunManifest:
    """What a run produced: deterministic except for the timestamp."""

    config_hash: str
    version: str
    timestamp: str
    experiment: str
    outputs: tuple[str, ...]
    warnings: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "version": self.version,
            "timestamp": self.timestamp,
            "experiment": self.experiment,
            "outputs": list(self.outputs),
            "warnings": list(self.warnings),
        }


# ---------------------------------------------------------------------------
# output writers
# ---------------------------------------------------------------------------

def _fmt(value: float) -> str:
    """12 significant digits, '.' decimal separator."""
    return format(float(value), ".12g")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    """RFC-4180 CSV: CRLF line endings, mandatory header row."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [cell if isinstance(cell, str) else _fmt(cell) for cell in row]
            )


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# experiment runners; each returns (output file names, warnings)
# ---------------------------------------------------------------------------

def _run_analyze(config: StudyConfig, net, conv, out_dir: Path, render: bool):
    report = analyze(net, conv, t_ref=config.t_ref)
    files: list[str] = []
    if "report" in config.formats:
        _write_json(out_dir / "report.json", {"experiment": "analyze",
                                              "report": report.to_dict()})
        files.append("report.json")
    if "csv" in config.formats:
        _write_csv(
            out_dir / "analyze.csv",
            ["gscr", "t_star", "cgscr_star", "margin",
             "lambda_crit_approx", "lambda_crit_exact", "verdict"],
            [[report.gscr, report.t_star, report.cgscr_star, report.margin,
              report.lambda_crit_approx, report.lambda_crit_exact, report.verdict]],
        )
        files.append("analyze.csv")
    if render:
        from . import plots

        plots.render_analysis(report, out_dir / "analyze.png")
        files.append("analyze.png")
    return files, list(report.warnings)


def _direction(conv, bus: str | None, lo: float, hi: float) -> LoadingDirection:
    return LoadingDirection(base=conv, scaled_bus=bus, lo=lo, hi=hi)


def _run_sweep(config: StudyConfig, net, conv, out_dir: Path, render: bool):
    params = config.sweep
    direction = _direction(conv, params.bus, params.lo, params.hi)
    result = sweep(net, direction, params.steps)

    ok = [s for s in result.samples if not s.failed]
    failed = [s for s in result.samples if s.failed]
    warnings = [f"sweep sample at P = {s.p:.6g} failed: {s.error}" for s in failed]

    cgscr_values = [s.report.cgscr_star for s in ok]
    cgscr_variation = (max(cgscr_values) - min(cgscr_values)) / min(cgscr_values)
    crossing = _margin_crossing(ok)

    files: list[str] = []
    if "csv" in config.formats:
        _write_csv(
            out_dir / "sweep.csv",
            ["p", "gscr", "cgscr_star", "margin",
             "lambda_crit_exact", "lambda_crit_approx"],
            [[s.p, s.report.gscr, s.report.cgscr_star, s.report.margin,
              s.report.lambda_crit_exact, s.report.lambda_crit_approx]
             for s in ok],
        )
        files.append("sweep.csv")
    if "report" in config.formats:
        _write_json(out_dir / "report.json", {
            "experiment": "sweep",
            "bus": params.bus if params.bus is not None else "uniform",
            "range": [params.lo, params.hi],
            "steps": params.steps,
            "gscr_strictly_decreasing": result.gscr_strictly_decreasing,
            "cgscr_star_relative_variation": cgscr_variation,
            "margin_crossing": crossing,
            "failed_samples": [
                {"p": s.p, "error": s.error} for s in failed
            ],
        })
        files.append("report.json")
    if render:
        from . import plots

        plots.render_sweep(result, out_dir / "sweep.png", crossing=crossing)
        files.append("sweep.png")
    return files, warnings


def _margin_crossing(samples) -> float | None:
    """Linear interpolation of the margin zero crossing between samples."""
    for a, b in zip(samples, samples[1:]):
        ma, mb = a.report.margin, b.report.margin
        if ma > 0 >= mb:
            return a.p + (b.p - a.p) * ma / (ma - mb)
    return None


def _run_boundary(config: StudyConfig, net, conv, out_dir: Path, render: bool):
    params = config.boundary
    direction = _direction(conv, params.bus, params.lo, params.hi)
    comparison = compare_boundaries(net, direction, tol=config.tol)

    files: list[str] = []
    if "csv" in config.formats:
        _write_csv(
            out_dir / "boundary.csv",
            ["p_exact", "p_approx", "rel_error"],
            [[comparison.p_exact, comparison.p_approx, comparison.rel_error]],
        )
        files.append("boundary.csv")
    if "report" in config.formats:
        _write_json(out_dir / "report.json", {
            "experiment": "boundary",
            "bus": params.bus if params.bus is not None else "uniform",
            "range": [params.lo, params.hi],
            "tol": config.tol,
            "p_exact": comparison.p_exact,
            "p_approx": comparison.p_approx,
            "rel_error": comparison.rel_error,
        })
        files.append("report.json")
    if render:
        from . import plots

        profile = margin_profile(net, direction)
        plots.render_boundary(profile, comparison, out_dir / "boundary.png")
        files.append("boundary.png")
    return files, []


def _target_label(target) -> str:
    return target if isinstance(target, str) else _fmt(target)


def _run_contour(config: StudyConfig, net, conv, out_dir: Path, render: bool):
    params = config.contour
    grid = np.linspace(params.lo, params.hi, params.steps)
    curves: dict[str, list] = {}
    warnings: list[str] = []
    for target in params.targets:
        points = gscr_contour(
            net, conv, target, grid,
            grid_bus=params.grid_bus, solve_bus=params.solve_bus, tol=config.tol,
        )
        label = _target_label(target)
        curves[label] = points
        skipped = len(grid) - len(points)
        if skipped:
            warnings.append(
                f"contour target {label}: {skipped} grid point(s) had no bracket"
            )

    files: list[str] = []
    if "csv" in config.formats:
        rows = [
            [label, pt.p_n2, pt.p_n1]
            for label, points in curves.items()
            for pt in points
        ]
        _write_csv(out_dir / "contour.csv", ["target", "p_n2", "p_n1"], rows)
        files.append("contour.csv")
    if "report" in config.formats:
        _write_json(out_dir / "report.json", {
            "experiment": "contour",
            "grid_bus": params.grid_bus,
            "solve_bus": params.solve_bus,
            "range": [params.lo, params.hi],
            "steps": params.steps,
            "curves": {
                label: [{"p_n2": pt.p_n2, "p_n1": pt.p_n1} for pt in points]
                for label, points in curves.items()
            },
            "warnings": warnings,
        })
        files.append("report.json")
    if render:
        from . import plots

        plots.render_contours(curves, out_dir / "contour.png")
        files.append("contour.png")
    return files, warnings


def _run_study(config: StudyConfig, net, conv, out_dir: Path, render: bool):
    params = config.study
    grid = np.linspace(params.lo, params.hi, params.steps)
    rows = inhomogeneity_study(
        net, params.t_rows, p_grid=grid,
        grid_bus=params.grid_bus, solve_bus=params.solve_bus, tol=config.tol,
    )

    files: list[str] = []
    if "csv" in config.formats:
        n = len(rows[0].t_values)
        header = [f"t{i + 1}" for i in range(n)]
        header += ["std_dev", "max_rel_error_pct", "max_p_deviation_pct"]
        _write_csv(
            out_dir / "study.csv",
            header,
            [list(r.t_values) + [r.std_dev, 100 * r.max_rel_error,
                                 100 * r.max_p_deviation]
             for r in rows],
        )
        files.append("study.csv")
    if "report" in config.formats:
        _write_json(out_dir / "report.json", {
            "experiment": "study",
            "grid_bus": params.grid_bus,
            "solve_bus": params.solve_bus,
            "range": [params.lo, params.hi],
            "steps": params.steps,
            "rows": [
                {
                    "t_values": list(r.t_values),
                    "std_dev": r.std_dev,
                    "max_rel_error": r.max_rel_error,
                    "max_p_deviation": r.max_p_deviation,
                }
                for r in rows
            ],
        })
        files.append("report.json")
    if render:
        from . import plots

        plots.render_study(rows, out_dir / "study.png")
        files.append("study.png")
    return files, []


_RUNNERS = {
    "analyze": _run_analyze,
    "sweep": _run_sweep,
    "boundary": _run_boundary,
    "contour": _run_contour,
    "study": _run_study,
}


def run(config: StudyConfig, *, render_plots: bool = True) -> RunManifest:
    """Dispatch a validated config and write its outputs.

    Identical configs produce byte-identical CSV and JSON outputs; only
    the manifest timestamp differs between runs.  Returns the manifest
    (also written as manifest.json).
    """
    out_dir = Path(config.output)
    out_dir.mkdir(parents=True, exist_ok=True)

    net, conv = config.network, config.converters
    if any(not bus.is_converter for bus in net.buses):
        passive = [bus.id for bus in net.buses if not bus.is_converter]
        logger.info("eliminating passive bus(es) %s by Kron reduction", passive)
        net = kron_reduce(net, conv.bus_ids)

    files, warnings = _RUNNERS[config.experiment](
        config, net, conv, out_dir, render_plots
    )

    manifest = RunManifest(
        config_hash=config_hash(config),
        version=__version__,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        experiment=config.experiment,
        outputs=tuple(files),
        warnings=tuple(warnings),
    )
    _write_json(out_dir / "manifest.json", manifest.to_dict())
    for name in manifest.outputs:
        assert (out_dir / name).exists()
    return manifest


# ---------------------------------------------------------------------------
# argument parsing and entry point
# ---------------------------------------------------------------------------

def _parse_targets(text: str) -> list:
    targets: list = []
    for token in text.split(","):
        token = token.strip()
        if token in ("singular", "cgscr_star"):
            targets.append(token)
            continue
        try:
            targets.append(float(token))
        except ValueError:
            raise SchemaError(
                f"--targets: expected numbers, 'singular' or 'cgscr_star', "
                f"got {token!r}"
            ) from None
    return targets


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="path to the study config JSON")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--tol", type=float, metavar="X", help="bisection tolerance")
    common.add_argument("--steps", type=int, metavar="N", help="grid resolution")
    common.add_argument("--bus", metavar="ID",
                        help="swept bus id, or 'uniform' (sweep/boundary)")
    common.add_argument("--from", dest="range_from", type=float, metavar="P",
                        help="range start")
    common.add_argument("--to", dest="range_to", type=float, metavar="P",
                        help="range end")
    common.add_argument("--targets", metavar="a,b,c",
                        help="contour targets (numbers, 'cgscr_star', 'singular')")
    common.add_argument("--t-ref", dest="t_ref", choices=("t_star", "mean"),
                        help="reference point for the perturbation diagnostics")
    common.add_argument("--no-plots", action="store_true",
                        help="skip figure rendering")

    parser = argparse.ArgumentParser(
        prog="gscr",
        description="Grid strength and voltage-stability margin assessment "
                    "for multi-infeed HVDC systems.",
    )
    parser.add_argument("--version", action="version", version=f"gscr {__version__}")
    sub = parser.add_subparsers(dest="experiment", required=True)
    sub.add_parser("analyze", parents=[common],
                   help="single operating point assessment")
    sub.add_parser("sweep", parents=[common],
                   help="gSCR / CgSCR* trajectories along a loading direction")
    sub.add_parser("contour", parents=[common],
                   help="iso-gSCR and boundary curves in the power plane")
    sub.add_parser("boundary", parents=[common],
                   help="exact vs approximate stability boundary")
    sub.add_parser("study", parents=[common],
                   help="boundary error vs control-parameter inhomogeneity")
    return parser


def _setup_logging() -> None:
    raw = os.environ.get("GSCR_LOG", "warn").lower()
    level = _LOG_LEVELS.get(raw)
    if level is None:
        print(
            json.dumps({
                "error": "INVALID_LOG_LEVEL",
                "message": f"GSCR_LOG must be one of {sorted(_LOG_LEVELS)}, "
                           f"got {raw!r}; using 'warn'",
            }),
            file=sys.stderr,
        )
        level = logging.WARNING
    logging.basicConfig(
        level=level, stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _emit_error(exc: GscrError) -> None:
    print(json.dumps({"error": exc.code, "message": str(exc)}), file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    _setup_logging()
    overrides = {
        "experiment": args.experiment,
        "output": args.out,
        "tol": args.tol,
        "steps": args.steps,
        "t_ref": args.t_ref,
        "section": {
            "bus": args.bus,
            "from": args.range_from,
            "to": args.range_to,
        },
    }
    try:
        if args.targets is not None:
            overrides["section"]["targets"] = _parse_targets(args.targets)
        config = load_config(args.config, overrides=overrides)
        manifest = run(config, render_plots=not args.no_plots)
    except ConfigError as exc:
        _emit_error(exc)
        return 2
    except GscrError as exc:
        _emit_error(exc)
        return 1
    out_dir = Path(config.output)
    for name in manifest.outputs:
        print(out_dir / name)
    if manifest.warnings:
        for warning in manifest.warnings:
            logger.warning("%s", warning)
    return 0


if __name__ == "__main__":
    sys.exit(main())
