"""Command-line front end: ``run``, ``sweep`` and ``preset``.

Exit codes: 0 success, 1 configuration error, 2 runtime error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import logging
import os
import sys
import time
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import Any, Dict, List, Optional, Sequence, Tuple

from edgesim.metrics import MetricsReport, fmt, write_report
from edgesim.orchestration import run_scenario
from edgesim.presets import PARAMETERS, PRESETS, preset_document
from edgesim.scenario import ScenarioConfig, ScenarioError, parse_scenario, scenario_from_dict

logger = logging.getLogger("edgesim")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3

AGGREGATE_FILE = "sweep.csv"
AGGREGATE_METRICS = (
    "generated", "delivered", "discarded", "undelivered", "in_flight", "handoffs", "relays",
    "mean_latency", "mean_execution_time", "total_edge_energy", "mean_edge_energy",
    "min_edge_battery_hours", "mean_iot_battery_hours",
)


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    """Usage mistakes are configuration errors (exit 1), not argparse's 2."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


@dataclass
class SweepAxis:
    field: str
    start: Decimal
    stop: Decimal
    step: Decimal

    def points(self) -> List[Any]:
        """Axis values from start to stop inclusive; ints when the axis is integral."""
        count = int((self.stop - self.start) / self.step) + 1
        values = [self.start + k * self.step for k in range(count)]
        integral = all(v == v.to_integral_value() for v in (self.start, self.step))
        return [int(v) if integral else float(v) for v in values]


def parse_axis(text: str) -> SweepAxis:
    """``FIELD=FROM:TO:STEP`` with FROM <= TO and STEP > 0."""
    name, sep, bounds = text.partition("=")
    parts = bounds.split(":")
    if not sep or not name or len(parts) != 3:
        raise ConfigError(f"--sweep expects FIELD=FROM:TO:STEP, got {text!r}")
    try:
        start, stop, step = (Decimal(p) for p in parts)
    except InvalidOperation:
        raise ConfigError(f"--sweep bounds must be numbers, got {bounds!r}") from None
    if step <= 0:
        raise ConfigError("--sweep step must be positive")
    if start > stop:
        raise ConfigError("--sweep bounds must be ordered (FROM <= TO)")
    return SweepAxis(name, start, stop, step)


def set_field(doc: Dict[str, Any], path: str, value: Any) -> None:
    """Assign ``value`` at a dotted path; list items are addressed by index."""
    keys = path.split(".")
    node: Any = doc
    for i, key in enumerate(keys):
        last = i == len(keys) - 1
        if isinstance(node, list):
            try:
                idx = int(key)
                if last:
                    node[idx] = value
                else:
                    node = node[idx]
            except (ValueError, IndexError):
                raise ConfigError(f"sweep field {path!r}: no list item {key!r}") from None
        elif isinstance(node, dict):
            if last:
                node[key] = value
            elif key not in node:
                raise ConfigError(f"sweep field {path!r}: no key {key!r}")
            else:
                node = node[key]
        else:
            raise ConfigError(f"sweep field {path!r}: {key!r} is not inside an object")


# -- building scenario documents --------------------------------------------------

def _preset_params(args: argparse.Namespace) -> Dict[str, Any]:
    wanted = PARAMETERS[args.preset]
    params = {}
    for name in wanted:
        value = getattr(args, name, None)
        if value is not None:
            params[name] = value
    return params


def _base_document(args: argparse.Namespace) -> Tuple[Dict[str, Any], Optional[str]]:
    """The scenario dict plus, for presets, the name of the builder to re-run."""
    if args.preset:
        return preset_document(args.preset, **_preset_params(args)), args.preset
    try:
        with open(args.scenario, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read scenario {args.scenario}: {exc.strerror or exc}") from exc
    return parse_scenario(text).to_dict(), None


def _apply_overrides(doc: Dict[str, Any], args: argparse.Namespace) -> Dict[str, Any]:
    doc = copy.deepcopy(doc)
    run = doc.setdefault("run", {})
    if args.seed is not None:
        run["seed"] = args.seed
    if args.horizon is not None:
        run["horizon"] = args.horizon
    return doc


def _point_document(args: argparse.Namespace, axis: SweepAxis, value: Any) -> Dict[str, Any]:
    if args.preset and axis.field in PARAMETERS[args.preset]:
        params = _preset_params(args)
        params[axis.field] = PARAMETERS[args.preset][axis.field](value)
        doc = preset_document(args.preset, **params)
    else:
        doc, _ = _base_document(args)
        set_field(doc, axis.field, value)
    return _apply_overrides(doc, args)


# -- commands ----------------------------------------------------------------------

def _simulate(doc: Dict[str, Any], out: str) -> MetricsReport:
    cfg: ScenarioConfig = scenario_from_dict(doc)
    report = run_scenario(cfg)
    write_report(report, out)
    return report


def _report_wall_clock(args: argparse.Namespace, started: float) -> None:
    # timing is nondeterministic, so it never goes into report files
    if not args.quiet:
        print(f"wall clock {time.perf_counter() - started:.3f}s", file=sys.stderr)


def _headline(r: MetricsReport) -> str:
    s = r.summary()
    return " ".join(f"{k}={fmt(s[k])}" for k in ("termination", "generated", "delivered", "handoffs", "mean_latency"))


def cmd_run(args: argparse.Namespace) -> int:
    doc, _ = _base_document(args)
    started = time.perf_counter()
    report = _simulate(_apply_overrides(doc, args), args.out)
    if not args.quiet:
        print(f"{report.scenario}: {_headline(report)} -> {args.out}")
    _report_wall_clock(args, started)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    axis = parse_axis(args.sweep)
    points = axis.points()
    rows = []
    started = time.perf_counter()
    for k, value in enumerate(points):
        doc = _point_document(args, axis, value)
        sub = os.path.join(args.out, f"point-{k:03d}")
        report = _simulate(doc, sub)
        summary = report.summary()
        rows.append([value] + [summary[m] for m in AGGREGATE_METRICS])
        if not args.quiet:
            print(f"{axis.field}={value}: {_headline(report)}")
    path = os.path.join(args.out, AGGREGATE_FILE)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([axis.field, *AGGREGATE_METRICS])
            w.writerows([fmt(v) for v in row] for row in rows)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    if not args.quiet:
        print(f"{len(rows)} points -> {path}")
    _report_wall_clock(args, started)
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser, scenario: bool) -> None:
    if scenario:
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--scenario", metavar="PATH", help="scenario JSON file")
        src.add_argument("--preset", choices=PRESETS, help="shipped case study")
    p.add_argument("--out", metavar="DIR", required=True, help="report directory")
    p.add_argument("--seed", type=int, help="override run.seed")
    p.add_argument("--horizon", type=float, metavar="SECONDS", help="stop the clock at this time")
    p.add_argument("--quiet", action="store_true", help="print nothing on success")
    p.add_argument("--cars", type=int, help="case3: number of cars")
    p.add_argument("--devices", type=int, help="case2: number of sensors")
    p.add_argument("--protocol", help="case2: IoT protocol (coap, xmpp, ...)")
    p.add_argument("--shrink", type=float, help="case1: shrinking factor of the first MEL")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="edgesim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario")
    _add_common(p_run, scenario=True)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run one scenario per axis point")
    _add_common(p_sweep, scenario=True)
    p_sweep.add_argument("--sweep", required=True, metavar="FIELD=FROM:TO:STEP",
                         help="preset parameter or dotted path into the scenario document")
    p_sweep.set_defaults(func=cmd_sweep)

    p_preset = sub.add_parser("preset", help="run a shipped case study")
    p_preset.add_argument("preset", choices=PRESETS)
    _add_common(p_preset, scenario=False)
    p_preset.set_defaults(func=cmd_run)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "scenario", None) is None and getattr(args, "preset", None) is None:
        print("error: --scenario or --preset is required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.preset:
            extra = {"cars", "devices", "protocol", "shrink"} - set(PARAMETERS[args.preset])
            given = sorted(n for n in extra if getattr(args, n) is not None)
            if given:
                raise ConfigError(f"preset {args.preset} does not take --{', --'.join(given)}")
        return args.func(args)
    except ScenarioError as exc:
        print(f"config error:\n{exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # noqa: BLE001 - anything else is a simulator fault
        logger.debug("run failed", exc_info=True)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
