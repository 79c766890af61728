"""Command-line front end: estimation runs, oracle queries, relation checks and sweeps.

Every command prints (or writes with ``--out``) a data section plus a run
manifest.  JSON output embeds the manifest; CSV output written to a file gets
a sidecar ``<out>.manifest.json``.

Exit codes: 0 ok, 1 relation failed, 2 unknown or unsupported fixture or
parameters, 3 resolution or precision-budget violation, 4 inconclusive check.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import logging
import math
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Sequence

from . import oracle
from .errors import (
    InsufficientDataError,
    MdimError,
    PrecisionBudgetError,
    ResolutionError,
    UnsupportedParameterError,
)
from .estimate import (
    DEFAULT_NET_FACTOR,
    box_dimension_from_counts,
    chain_violations,
    finite_or_none,
)
from .fixtures import cat_matrix, fixture_ids, get_fixture
from .props import CHECKS, FAIL, INCONCLUSIVE, PASS, EstimationParams, estimate_fixture, run_check

__all__ = [
    "EXIT_OK",
    "EXIT_FAIL",
    "EXIT_UNSUPPORTED",
    "EXIT_RESOLUTION",
    "EXIT_INCONCLUSIVE",
    "SCHEMA_VERSION",
    "TABLE_COLUMNS",
    "SWEEP_COLUMNS",
    "ORACLE_COLUMNS",
    "FIXTURE_COLUMNS",
    "RunManifest",
    "parse_ladder",
    "parse_horizons",
    "parse_grid",
    "oracle_query",
    "build_parser",
    "main",
]

EXIT_OK, EXIT_FAIL, EXIT_UNSUPPORTED, EXIT_RESOLUTION, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4
SCHEMA_VERSION = "1"
TABLE_COLUMNS = ("kind", "n", "eps", "count", "provenance")
SWEEP_COLUMNS = ("fixture", "parameter", "value", "status", "estimate", "lower", "upper",
                 "infinite", "ratio_at_smallest")
ORACLE_COLUMNS = ("fixture", "query", "kind", "quantity", "value", "params")
FIXTURE_COLUMNS = ("id", "template", "known_mdim", "space", "kind")

_VERDICT_EXIT = {PASS: EXIT_OK, FAIL: EXIT_FAIL, INCONCLUSIVE: EXIT_INCONCLUSIVE}
_SHARED_DEFAULTS = {"ladder": None, "horizons": None, "grid": None, "seed": 0, "window": 3,
                    "tol": 0.1, "format": "json", "blocks": None}
_RANGE = re.compile(r"^\s*(?P<base>[0-9.]+)\^(?P<lo>-?\d+)\s*\.\.\s*(?P=base)\^(?P<hi>-?\d+)\s*$")

log = logging.getLogger("mdimkit")


# ---------------------------------------------------------------- parsing


def _number(text: str) -> float:
    text = text.strip()
    if "^" in text:
        base, _, power = text.partition("^")
        return float(Fraction(base)) ** int(power)
    return float(Fraction(text))


def parse_ladder(text: str) -> tuple[float, ...]:
    """Radii from ``2^-2..2^-8``, ``0.1,0.05`` or ``1/72,1/648`` (largest first)."""
    values: list[float] = []
    for item in filter(None, (part.strip() for part in text.split(","))):
        match = _RANGE.match(item)
        if match:
            base = float(Fraction(match["base"]))
            lo, hi = int(match["lo"]), int(match["hi"])
            step = 1 if hi >= lo else -1
            values.extend(base ** power for power in range(lo, hi + step, step))
        else:
            values.append(_number(item))
    if not values or any(not value > 0 for value in values):
        raise ValueError(f"bad ladder {text!r}")
    return tuple(sorted(set(values), reverse=True))


def parse_horizons(text: str) -> tuple[int, ...]:
    """Horizons from ``1..6`` or ``1,2,4``."""
    horizons: set[int] = set()
    for item in filter(None, (part.strip() for part in text.split(","))):
        if ".." in item:
            lo, _, hi = item.partition("..")
            horizons.update(range(int(lo), int(hi) + 1))
        else:
            horizons.add(int(item))
    if not horizons or min(horizons) < 1:
        raise ValueError(f"bad horizons {text!r}")
    return tuple(sorted(horizons))


def parse_grid(text: str) -> tuple[float, ...]:
    """Grid values from a comma list; an empty string is the empty grid."""
    return tuple(_number(item) for item in text.split(",") if item.strip())


def _read_config(path: str) -> dict[str, str]:
    parser = configparser.ConfigParser()
    parser.read_string("[run]\n" + Path(path).read_text(encoding="utf-8"))
    return {key.replace("-", "_"): value for key, value in parser["run"].items()}


_CONFIG_TYPES: dict[str, Callable[[str], Any]] = {
    "ladder": parse_ladder, "horizons": parse_horizons, "grid": parse_grid, "seed": int,
    "window": int, "tol": float, "format": str, "blocks": int, "kind": str, "method": str,
    "statistic": str, "jobs": int, "param": str,
}


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from the config file, then from built-in defaults."""
    config = _read_config(args.config) if args.config else {}
    unknown = set(config) - set(_CONFIG_TYPES)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key, text in config.items():
        if getattr(args, key, None) is None:
            setattr(args, key, _CONFIG_TYPES[key](text))
    for key, default in _SHARED_DEFAULTS.items():
        if getattr(args, key) is None:
            setattr(args, key, default)
    if args.format not in ("json", "csv"):
        raise ValueError(f"format must be json or csv, got {args.format!r}")
    return args


# ---------------------------------------------------------------- manifests and output


@dataclass
class RunManifest:
    """Provenance for one run; the data digest covers the data section only."""

    command: str
    fixtures: list[str]
    ladder: list[float] | None
    horizons: list[int] | None
    grid: list[float] | None
    seed: int
    version: str
    wall_clock: dict[str, Any] = field(default_factory=dict)
    digests: dict[str, str] = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    def to_record(self) -> dict[str, Any]:
        return asdict(self)


def _tool_version() -> str:
    from . import __version__

    return __version__


def _clean(value: Any) -> Any:
    """JSON-safe copy: non-finite floats become None, tuples become lists."""
    if isinstance(value, float):
        return None if math.isnan(value) or math.isinf(value) else value
    if isinstance(value, dict):
        return {str(key): _clean(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(item) for item in value]
    if isinstance(value, Fraction):
        return str(value)
    return value


def _canonical(data: Any) -> str:
    return json.dumps(_clean(data), sort_keys=True, separators=(",", ":"), allow_nan=False)


def _digest(text: str) -> str:
    return "sha256:" + hashlib.sha256(text.encode("utf-8")).hexdigest()


def _csv_text(columns: Sequence[str], rows: Sequence[dict]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(columns), lineterminator="\n",
                            extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: _csv_cell(row.get(key)) for key in columns})
    return buffer.getvalue()


def _csv_cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    if isinstance(value, (dict, list)):
        return json.dumps(_clean(value), sort_keys=True)
    return value


def _manifest(args: argparse.Namespace, fixtures: Sequence[str], started: float) -> RunManifest:
    return RunManifest(
        command=args.command,
        fixtures=list(fixtures),
        ladder=None if args.ladder is None else list(args.ladder),
        horizons=None if args.horizons is None else list(args.horizons),
        grid=None if args.grid is None else list(args.grid),
        seed=args.seed,
        version=_tool_version(),
        wall_clock={"started": datetime.fromtimestamp(started, timezone.utc).isoformat(),
                    "seconds": round(time.time() - started, 3)},
    )


def _emit(args: argparse.Namespace, manifest: RunManifest, data: dict,
          columns: Sequence[str], rows: Sequence[dict]) -> None:
    """Single writer: everything is serialised after computation finished."""
    if args.format == "csv":
        text = _csv_text(columns, rows)
        manifest.digests = {"data": _digest(text)}
        if args.out:
            out = Path(args.out)
            out.write_text(text, encoding="utf-8")
            sidecar = out.with_name(out.name + ".manifest.json")
            record = dict(manifest.to_record(), data_file=out.name)
            sidecar.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n",
                               encoding="utf-8")
        else:
            sys.stdout.write(text)
        return
    manifest.digests = {"data": _digest(_canonical(data))}
    payload = json.dumps({"manifest": _clean(manifest.to_record()), "data": _clean(data)},
                         indent=2, sort_keys=True, allow_nan=False) + "\n"
    if args.out:
        Path(args.out).write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload)


# ---------------------------------------------------------------- oracle routing


def _need(value: Any, flag: str, fid: str, query: str) -> Any:
    if value is None:
        raise UnsupportedParameterError(f"oracle query {query!r} on {fid} needs {flag}")
    return value


def oracle_query(fid: str, query: str, horizon: int | None = None, depth: int | None = None,
                 eps: float | None = None) -> list[oracle.OracleBound]:
    """Route a catalogue id and a count query to the closed-form bounds.

    ``horizon`` (flag ``--n``) doubles as the block index for ``phi_a`` and
    ``example33``; ``depth`` (flag ``--k``) is the depth within a block.
    """
    head, _, arg = fid.partition(":")
    query = query.lower()
    get_fixture(fid)  # unknown ids fail here with the catalogue message
    if head == "cat_power":
        matrix = cat_matrix(int(Fraction(arg)))
        power = _need(horizon, "--n", fid, query)
        if query == "fix":
            return [oracle.toral_fix_count(matrix, power)]
        if query == "sep":
            return [oracle.cat_power_sep_lower(matrix, power)]
    elif head == "phi_a" and query == "cov":
        block = _need(horizon, "--n", fid, query)
        return list(oracle.phi_a_cover_bounds(Fraction(arg), block,
                                              _need(depth, "--k", fid, query)))
    elif fid == "example33" and query == "sep":
        return [oracle.example33_sep_lower(_need(horizon, "--n", fid, query),
                                           _need(depth, "--k", fid, query))]
    elif fid == "shift:interval" and query in ("sep", "cov"):
        radius = _need(eps, "--eps", fid, query)
        steps = _need(horizon, "--n", fid, query)
        if query == "sep":
            base = 1 + math.floor(1 / oracle.exact_fraction(radius))
            bound = oracle.shift_counts(base, steps, 0, "one")[0]
            return [replace(bound, params={**bound.params, "eps": radius})]
        return list(oracle.interval_shift_bounds(radius, steps))
    elif fid == "shift:kakeya_A":
        radius = _need(eps, "--eps", fid, query)
        cover = oracle.kakeya_A_cover(radius)
        if query == "n":
            return [oracle.OracleBound("exact", "N", cover, {"eps": radius})]
        if query in ("sep", "cov"):
            bounds = oracle.shift_counts(cover, _need(horizon, "--n", fid, query), 0, "one")
            return [bounds[0] if query == "sep" else bounds[1]]
    elif fid in ("binary_shift", "binary_power_shift") and query in ("sep", "cov"):
        offsets = (oracle.binary_shift_offsets if fid == "binary_shift"
                   else oracle.binary_power_shift_offsets)
        steps = _need(horizon, "--n", fid, query)
        radius = _need(eps, "--eps", fid, query)
        return [oracle.word_shift_count(offsets(steps), radius, query == "sep")]
    raise UnsupportedParameterError(f"no oracle for query {query!r} on fixture {fid}")


# ---------------------------------------------------------------- commands


def _params(args: argparse.Namespace) -> EstimationParams:
    net_factor = DEFAULT_NET_FACTOR
    if args.grid:
        if len(args.grid) != 1:
            raise ValueError("--grid for estimate and check takes one net factor (delta/eps)")
        net_factor = float(args.grid[0])
    return EstimationParams(
        ladder=args.ladder, horizons=args.horizons, window=args.window, tol=args.tol,
        statistic=getattr(args, "statistic", None) or "ratio",
        method=getattr(args, "method", None) or "tail_slope",
        kind=getattr(args, "kind", None) or "separated", net_factor=net_factor,
        blocks=args.blocks)


def _progress(message: str) -> None:
    log.info(message)


def _estimate_record(fid: str, params: EstimationParams) -> tuple[dict, list[dict]]:
    fixture = get_fixture(fid, blocks=params.blocks)
    est = estimate_fixture(fixture, params, progress=_progress)
    rows = [row for table in est.tables.values() for row in table.rows()]
    violations = [problem for table in est.tables.values()
                  for problem in table.invariant_violations()]
    by_kind = {table.kind: table for table in est.tables.values() if table.bound != "upper"}
    data = {
        "fixture": fid,
        "known_mdim": finite_or_none(fixture.known_mdim)
        if fixture.known_mdim is not None else None,
        "known_infinite": fixture.known_mdim is not None and math.isinf(fixture.known_mdim),
        "horizons": list(est.horizons),
        "report": est.report.to_record(),
        "tables": rows,
        "invariant_violations": violations,
        "chain_violations": chain_violations(by_kind),
    }
    return data, rows


def cmd_estimate(args: argparse.Namespace, started: float) -> int:
    data, rows = _estimate_record(args.fixture, _params(args))
    _emit(args, _manifest(args, [args.fixture], started), data, TABLE_COLUMNS, rows)
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace, started: float) -> int:
    bounds = oracle_query(args.fixture, args.query, args.horizon, args.depth, args.eps)
    records = [dict(bound.as_record(), fixture=args.fixture, query=args.query)
               for bound in bounds]
    data = {"fixture": args.fixture, "query": args.query,
            "arguments": {"n": args.horizon, "k": args.depth, "eps": args.eps},
            "bounds": records}
    _emit(args, _manifest(args, [args.fixture], started), data, ORACLE_COLUMNS, records)
    return EXIT_OK


def cmd_check(args: argparse.Namespace, started: float) -> int:
    options = {"block_length": args.block_length, "split": args.split, "shift_a": args.shift_a,
               "shift_b": args.shift_b}
    check = run_check(args.relation, args.fixtures, _params(args),
                      **{key: value for key, value in options.items() if value is not None})
    record = dict(check.to_record(), fixtures=list(args.fixtures), extras=check.extras)
    rows = [{key: record[key] for key in ("relation", "verdict", "left_value", "right_value",
                                          "tolerance", "detail")}]
    _emit(args, _manifest(args, args.fixtures, started), record,
          ("relation", "verdict", "left_value", "right_value", "tolerance", "detail"), rows)
    return _VERDICT_EXIT[check.verdict]


def _sweep_fixture_id(template: str, value: float) -> str:
    text = f"{value:g}"
    if "{}" in template:
        return template.replace("{}", text)
    return f"{template}:{text}"


def _sweep_ladder(base: Sequence[float], depth: int) -> tuple[float, ...]:
    if depth < 3:
        raise UnsupportedParameterError("ladder depth must be at least 3")
    return tuple(base[0] * 0.5 ** level for level in range(depth))


def _sweep_cell(task: tuple[str, str, float, EstimationParams]) -> dict:
    template, parameter, value, params = task
    row: dict[str, Any] = {"parameter": parameter, "value": value}
    try:
        if parameter == "depth":
            fid = template
            fixture = get_fixture(fid, blocks=params.blocks)
            ladder = _sweep_ladder(params.ladder or fixture.ladder, int(value))
            report = _depth_report(fixture, ladder, params)
        else:
            fid = _sweep_fixture_id(template, value)
            report = estimate_fixture(get_fixture(fid, blocks=params.blocks), params).report
    except MdimError as exc:
        row.update(fixture=_sweep_fixture_id(template, value) if parameter == "value"
                   else template, status=type(exc).__name__)
        return row
    row.update(fixture=fid, status="ok", estimate=report.estimate, lower=report.lower,
               upper=report.upper, infinite=report.infinite,
               ratio_at_smallest=report.ratio_at_smallest)
    return row


def _depth_report(fixture, ladder: tuple[float, ...], params: EstimationParams):
    """Box estimate from the exact harmonic-set count for the kakeya_A shift
    base; the metric mean dimension estimate for every other fixture."""
    if fixture.fid == "shift:kakeya_A":
        counts = [oracle.kakeya_A_cover(radius) for radius in ladder]
        return box_dimension_from_counts(ladder, counts, params.window)
    return estimate_fixture(fixture, replace(params, ladder=ladder)).report


def _status_exit(status: str) -> int:
    if status in ("ResolutionError", "PrecisionBudgetError", "InsufficientDataError"):
        return EXIT_RESOLUTION
    return EXIT_UNSUPPORTED


def cmd_sweep(args: argparse.Namespace, started: float) -> int:
    params = _params(_without_grid(args))
    grid = tuple(args.grid or ())
    tasks = [(args.fixture, args.param, value, params) for value in grid]
    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_cell, tasks))
    else:
        rows = [_sweep_cell(task) for task in tasks]
    data = {"fixture": args.fixture, "parameter": args.param, "rows": rows}
    _emit(args, _manifest(args, [args.fixture], started), data, SWEEP_COLUMNS, rows)
    failed = [row["status"] for row in rows if row["status"] != "ok"]
    return _status_exit(failed[0]) if failed else EXIT_OK


def _without_grid(args: argparse.Namespace) -> argparse.Namespace:
    """Copy of the arguments with the grid cleared (a sweep grid is not a net factor)."""
    copy = argparse.Namespace(**vars(args))
    copy.grid = None
    return copy


def _fixture_rows() -> list[dict]:
    rows = []
    for fid in fixture_ids():
        if "<" in fid:
            rows.append({"id": fid, "template": True, "known_mdim": None, "space": None,
                         "kind": None})
            continue
        fixture = get_fixture(fid)
        known = fixture.known_mdim
        rows.append({"id": fid, "template": False,
                     "known_mdim": "inf" if known is not None and math.isinf(known) else known,
                     "space": fixture.space.name, "kind": fixture.system.kind})
    return rows


def cmd_fixtures(args: argparse.Namespace, started: float) -> int:
    rows = _fixture_rows()
    _emit(args, _manifest(args, [row["id"] for row in rows], started),
          {"fixtures": rows}, FIXTURE_COLUMNS, rows)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _shared(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--ladder", type=parse_ladder, default=None,
                        help="radii, e.g. 2^-2..2^-8 or 1/72,1/648")
    parser.add_argument("--horizons", type=parse_horizons, default=None, help="e.g. 1..6")
    parser.add_argument("--grid", type=parse_grid, default=None,
                        help="sweep values; for estimate/check a single net factor delta/eps")
    parser.add_argument("--seed", type=int, default=None, help="recorded in the manifest")
    parser.add_argument("--window", type=int, default=None, help="regression window")
    parser.add_argument("--tol", type=float, default=None, help="relation tolerance")
    parser.add_argument("--out", default=None, help="output file (stdout by default)")
    parser.add_argument("--format", choices=("json", "csv"), default=None)
    parser.add_argument("--blocks", type=int, default=None, help="block count for block maps")
    parser.add_argument("--config", default=None, help="key=value file; flags win")
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")


def _estimation_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--kind", choices=("separated", "spanning", "cover"), default=None)
    parser.add_argument("--method", choices=("tail_slope", "max_increment"), default=None)
    parser.add_argument("--statistic", choices=("ratio", "slope"), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mdimkit", description="Metric mean dimension estimates, oracles and checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    estimate = sub.add_parser("estimate", help="estimate a fixture")
    estimate.add_argument("fixture")
    _estimation_flags(estimate)
    _shared(estimate)

    oracle_cmd = sub.add_parser("oracle", help="closed-form count bounds")
    oracle_cmd.add_argument("fixture")
    oracle_cmd.add_argument("query", help="fix | sep | cov | N")
    oracle_cmd.add_argument("--n", type=int, default=None, dest="horizon",
                            help="horizon or block index")
    oracle_cmd.add_argument("--k", type=int, default=None, dest="depth",
                            help="depth within a block")
    oracle_cmd.add_argument("--eps", type=_number, default=None, help="radius")
    _shared(oracle_cmd)

    check = sub.add_parser("check", help="run a relation check")
    check.add_argument("relation", choices=sorted(CHECKS))
    check.add_argument("fixtures", nargs="+")
    check.add_argument("--p", type=int, default=None, dest="block_length",
                       help="block length (power_inequality)")
    check.add_argument("--split", type=int, default=None, help="head blocks (invariant_max)")
    check.add_argument("--shift-a", type=int, default=None, dest="shift_a")
    check.add_argument("--shift-b", type=int, default=None, dest="shift_b")
    _estimation_flags(check)
    _shared(check)

    sweep = sub.add_parser("sweep", help="estimates over a parameter grid")
    sweep.add_argument("fixture", help="id template: 'phi_a' or 'phi_a:{}', or an id for depth")
    sweep.add_argument("--param", choices=("value", "depth"), default=None)
    sweep.add_argument("--jobs", type=int, default=None, help="worker processes")
    _estimation_flags(sweep)
    _shared(sweep)

    fixtures = sub.add_parser("fixtures", help="list the fixture catalogue")
    _shared(fixtures)
    return parser


_COMMANDS = {"estimate": cmd_estimate, "oracle": cmd_oracle, "check": cmd_check,
             "sweep": cmd_sweep, "fixtures": cmd_fixtures}


def _exit_code(exc: MdimError) -> int:
    if isinstance(exc, (PrecisionBudgetError, ResolutionError, InsufficientDataError)):
        return EXIT_RESOLUTION
    return EXIT_UNSUPPORTED


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge_config(args)
    except (OSError, ValueError, configparser.Error) as exc:
        parser.error(str(exc))
    if getattr(args, "param", None) is None:
        args.param = "value"
    if getattr(args, "jobs", None) is None:
        args.jobs = 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    started = time.time()
    try:
        return _COMMANDS[args.command](args, started)
    except MdimError as exc:
        message = exc.args[0] if exc.args else type(exc).__name__
        print(f"mdimkit: {type(exc).__name__}: {message}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    raise SystemExit(main())
