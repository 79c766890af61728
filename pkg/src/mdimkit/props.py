"""Relation checks between dimension estimates of related systems.

Each check estimates both sides on shared ladders and horizons and compares
a chosen statistic of the reports with an explicit tolerance.  The
comparisons are finite-scale surrogates for limit statements; a check whose
pass depends on a tolerance above ``MAX_CONCLUSIVE_TOL`` is reported as
inconclusive.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

from .core import (
    MetricSpace,
    SystemSequence,
    autonomous,
    check_net,
    compose_block,
    interval_space,
    shift_sequence,
)
from .errors import (
    InsufficientDataError,
    PrecisionBudgetError,
    PreconditionError,
    ResolutionError,
    UnsupportedParameterError,
)
from .estimate import (
    DEFAULT_NET_FACTOR,
    CountTable,
    DimensionReport,
    box_dimension,
    finite_or_none,
    mmd_estimate,
    numeric_tables,
    rate_curve,
    tables_from_source,
)
from .fixtures import Fixture, get_fixture
from .nets import bowen_net

__all__ = [
    "PASS",
    "FAIL",
    "INCONCLUSIVE",
    "MAX_CONCLUSIVE_TOL",
    "EstimationParams",
    "Estimate",
    "RelationCheck",
    "estimate_fixture",
    "compare",
    "check_power_inequality",
    "check_composition_commute",
    "check_invariant_max",
    "check_nonwandering",
    "check_shift_independence",
    "check_box_bound",
    "block_split",
    "CHECKS",
    "run_check",
]

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"
MAX_CONCLUSIVE_TOL = 0.25
_CHECK_HORIZONS = 4


@dataclass(frozen=True)
class EstimationParams:
    """Shared estimation settings; None fields fall back to fixture defaults."""

    ladder: tuple[float, ...] | None = None
    horizons: tuple[int, ...] | None = None
    window: int = 3
    tol: float = 0.1
    statistic: str = "ratio"
    method: str = "tail_slope"
    kind: str = "separated"
    net_factor: float = DEFAULT_NET_FACTOR
    blocks: int | None = None


@dataclass(frozen=True)
class Estimate:
    """A report together with the tables that produced it."""

    label: str
    report: DimensionReport
    tables: Mapping[str, CountTable]
    horizons: tuple[int, ...]


@dataclass(frozen=True)
class RelationCheck:
    relation: str
    comparison: str
    tolerance: float
    verdict: str
    left: DimensionReport | None
    right: DimensionReport | None
    left_value: float | None
    right_value: float | None
    detail: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_record(self) -> dict:
        return {
            "relation": self.relation,
            "comparison": self.comparison,
            "tolerance": self.tolerance,
            "verdict": self.verdict,
            "left_value": finite_or_none(self.left_value),
            "right_value": finite_or_none(self.right_value),
            "left_infinite": bool(self.left is not None and self.left.infinite),
            "right_infinite": bool(self.right is not None and self.right.infinite),
            "detail": self.detail,
            "left": None if self.left is None else self.left.to_record(),
            "right": None if self.right is None else self.right.to_record(),
            "finite_scale_surrogate": True,
        }


# ---------------------------------------------------------------- estimation


def _feasible_horizons(system: SystemSequence, horizons: Sequence[int]) -> tuple[int, ...]:
    budget = system.horizon_budget
    return tuple(horizon for horizon in sorted(horizons)
                 if budget is None or horizon - 1 <= budget)


def _pick_table(tables: Mapping[str, CountTable], kind: str) -> CountTable:
    for label in (f"{kind}:exact", f"{kind}:lower", kind):
        if label in tables:
            return tables[label]
    for label, table in tables.items():
        if table.kind == kind:
            return table
    return next(iter(tables.values()))


def estimate_fixture(fixture: Fixture, params: EstimationParams | None = None, *,
                     system: SystemSequence | None = None, space: MetricSpace | None = None,
                     table_source: Callable | None = None, label: str | None = None,
                     progress: Callable[[str], None] | None = None) -> Estimate:
    """Estimate mdim for a fixture, optionally with a replacement system or space.

    Oracle table sources are used when the fixture is unmodified (or when a
    replacement source is passed); otherwise counts come from Bowen nets.
    """
    params = params or EstimationParams()
    ladder = tuple(params.ladder or fixture.ladder)
    horizons = tuple(params.horizons or fixture.horizons)
    source = table_source
    if source is None and system is None and space is None:
        source = fixture.table_source
    system = system or fixture.system
    space = space or fixture.space
    if source is not None:
        tables = tables_from_source(source(ladder, horizons))
        used = horizons
    else:
        used = _feasible_horizons(system, horizons)
        if len(used) < 4:
            raise InsufficientDataError(
                f"{len(used)} of {len(horizons)} requested horizons fit the precision budget "
                f"of {system.kind} (budget {system.horizon_budget}); at least 4 are needed")
        def net_builder(horizon: int, delta: float):
            return bowen_net(system, space, horizon, delta)

        tables = numeric_tables(net_builder, space, ladder,
                                used, (params.kind,), net_factor=params.net_factor,
                                progress=progress)
    table = _pick_table(tables, params.kind)
    curve = rate_curve(table, params.method, params.window)
    report = mmd_estimate(curve, params.window, space.box_dim)
    return Estimate(label or fixture.fid, report, tables, tuple(used))


# ---------------------------------------------------------------- verdicts


def compare(left: float, right: float, comparison: str, tol: float,
            left_infinite: bool = False, right_infinite: bool = False) -> tuple[str, str]:
    """Verdict and explanation for ``left <= right`` or ``left = right``.

    Infinite flags: an equality passes when both sides are flagged and fails
    when exactly one is; an inequality passes when the right side is flagged
    and fails when only the left one is.
    """
    if comparison not in ("<=", "="):
        raise PreconditionError(f"unknown comparison {comparison!r}")
    if left_infinite or right_infinite:
        if comparison == "=":
            if left_infinite and right_infinite:
                return PASS, "both sides carry the infinite flag"
            return FAIL, "exactly one side carries the infinite flag"
        if right_infinite:
            return PASS, "right side carries the infinite flag"
        return FAIL, "left side is flagged infinite, right side is finite"
    gap = left - right if comparison == "<=" else abs(left - right)
    needed = max(0.0, gap)
    detail = f"left={left:.4f} right={right:.4f} needs tol {needed:.4f}"
    if needed <= min(tol, MAX_CONCLUSIVE_TOL):
        return PASS, detail
    if needed <= tol:
        return INCONCLUSIVE, detail + f" (passes only with tol above {MAX_CONCLUSIVE_TOL})"
    return FAIL, detail


def _relation(relation: str, comparison: str, left: Estimate, right: Estimate, params,
              scale: float = 1.0, extras: dict | None = None) -> RelationCheck:
    left_value = left.report.statistic(params.statistic)
    right_value = right.report.statistic(params.statistic) * scale
    verdict, detail = compare(left_value, right_value, comparison, params.tol,
                              left.report.infinite, right.report.infinite)
    info = {"left": left.label, "right": right.label, "statistic": params.statistic,
            "left_horizons": list(left.horizons), "right_horizons": list(right.horizons)}
    info.update(extras or {})
    return RelationCheck(relation, comparison, params.tol, verdict, left.report, right.report,
                         left_value, right_value, detail, info)


def _guarded(relation: str, comparison: str, params: EstimationParams,
             body: Callable[[], RelationCheck]) -> RelationCheck:
    """Budget, resolution and data shortfalls become inconclusive verdicts."""
    try:
        return body()
    except (PrecisionBudgetError, ResolutionError, InsufficientDataError) as exc:
        return RelationCheck(relation, comparison, params.tol, INCONCLUSIVE, None, None, None,
                             None, f"{type(exc).__name__}: {exc}")


def _check_horizons(params: EstimationParams, fixture: Fixture,
                    *systems: SystemSequence) -> tuple[int, ...]:
    if params.horizons is not None:
        return tuple(params.horizons)
    pool = tuple(fixture.horizons)
    for system in systems:
        pool = _feasible_horizons(system, pool)
    return pool[:_CHECK_HORIZONS]


# ---------------------------------------------------------------- checks


def check_power_inequality(fixture: Fixture, block_length: int,
                           params: EstimationParams | None = None) -> RelationCheck:
    """Blocked sequence versus ``block_length`` times the original estimate."""
    params = params or EstimationParams()
    if block_length < 1:
        raise PreconditionError("block length must be >= 1")

    def body() -> RelationCheck:
        blocked = compose_block(fixture.system, block_length)
        horizons = _check_horizons(params, fixture, fixture.system, blocked)
        shared = replace(params, horizons=horizons)
        left = estimate_fixture(fixture, shared, system=blocked,
                                label=f"{fixture.fid}^({block_length})")
        right = estimate_fixture(fixture, shared, system=fixture.system, label=fixture.fid)
        return _relation("power_inequality", "<=", left, right, shared,
                         scale=float(block_length), extras={"block_length": block_length})

    return _guarded("power_inequality", "<=", params, body)


def _composed(first: SystemSequence, second: SystemSequence, name: str) -> SystemSequence:
    """Autonomous sequence of ``first`` after ``second``."""
    outer, inner = first.map_at(1), second.map_at(1)
    lip = None
    if first.lipschitz is not None and second.lipschitz is not None:
        lip = first.lipschitz(1) * second.lipschitz(1)
    return autonomous(lambda pts: outer(inner(pts)), lipschitz=lip,
                      invertible=first.invertible and second.invertible, name=name)


def check_composition_commute(first: Fixture, second: Fixture,
                              params: EstimationParams | None = None) -> RelationCheck:
    """Estimates of the two composition orders of a pair of maps agree within tol."""
    params = params or EstimationParams()
    for fx in (first, second):
        if fx.system.kind != "autonomous" or not fx.system.invertible:
            raise PreconditionError(f"{fx.fid} is not an autonomous homeomorphism fixture")
    if first.space.name != second.space.name:
        raise PreconditionError("composition needs both maps on the same space")

    def body() -> RelationCheck:
        forward = _composed(first.system, second.system, f"{first.fid}o{second.fid}")
        backward = _composed(second.system, first.system, f"{second.fid}o{first.fid}")
        shared = replace(params, horizons=_check_horizons(params, first, forward, backward))
        left = estimate_fixture(first, shared, system=forward,
                                label=f"{first.fid} o {second.fid}")
        right = estimate_fixture(first, shared, system=backward,
                                 label=f"{second.fid} o {first.fid}")
        return _relation("composition_commute", "=", left, right, shared)

    return _guarded("composition_commute", "=", params, body)


def _check_invariant(fixture: Fixture, subset: MetricSpace, resolution: float) -> float:
    """Largest distance from an image of a subset sample back to the subset sample."""
    pts = subset.sample(resolution)
    images = fixture.system.map_at(1)(pts)
    return check_net(pts, images, fixture.space)


def block_split(fixture: Fixture, head_blocks: int) -> tuple[MetricSpace, MetricSpace]:
    """Interval subsets made of the first ``head_blocks`` blocks and the rest."""
    blocks = fixture.block_map
    if blocks is None:
        raise UnsupportedParameterError(f"{fixture.fid} has no block structure to split")
    cut = float(blocks.boundaries[head_blocks])
    return interval_space(0.0, cut), interval_space(cut, float(blocks.end))


def check_invariant_max(fixture: Fixture, part_a: MetricSpace, part_b: MetricSpace,
                        params: EstimationParams | None = None) -> RelationCheck:
    """Whole-space estimate equals the larger of the two restricted estimates."""
    params = params or EstimationParams()
    ladder = tuple(params.ladder or fixture.ladder)
    probe = min(ladder) / 4.0
    for part in (part_a, part_b):
        gap = _check_invariant(fixture, part, probe)
        if gap > 2.0 * probe:
            raise PreconditionError(
                f"subset {part.name} is not invariant on samples (image gap {gap:.3g})")

    def body() -> RelationCheck:
        shared = replace(params, horizons=_check_horizons(params, fixture, fixture.system))
        whole = estimate_fixture(fixture, shared, system=fixture.system, label=fixture.fid)
        est_a = estimate_fixture(fixture, shared, space=part_a, label=part_a.name)
        est_b = estimate_fixture(fixture, shared, space=part_b, label=part_b.name)
        best = max((est_a, est_b), key=lambda est: est.report.statistic(shared.statistic))
        parts = {est.label: finite_or_none(est.report.statistic(shared.statistic))
                 for est in (est_a, est_b)}
        check = _relation("invariant_max", "=", whole, best, shared, extras={"parts": parts})
        return replace(check, comparison="max-of")

    return _guarded("invariant_max", "max-of", params, body)


def check_nonwandering(fixture: Fixture, params: EstimationParams | None = None) -> RelationCheck:
    """Whole-space estimate equals the estimate on the declared non-wandering set."""
    params = params or EstimationParams()
    if fixture.nonwandering is None:
        raise UnsupportedParameterError(f"{fixture.fid} declares no non-wandering set")

    def body() -> RelationCheck:
        shared = replace(params, horizons=_check_horizons(params, fixture, fixture.system))
        whole = estimate_fixture(fixture, shared, system=fixture.system, label=fixture.fid)
        omega = estimate_fixture(fixture, shared, space=fixture.nonwandering,
                                 label=f"{fixture.fid}|nonwandering")
        return _relation("nonwandering", "=", whole, omega, shared)

    return _guarded("nonwandering", "=", params, body)


def check_shift_independence(fixture: Fixture, shift_a: int, shift_b: int,
                             params: EstimationParams | None = None) -> RelationCheck:
    """Estimates of the sequence shifted by ``shift_a`` and by ``shift_b`` agree within tol."""
    params = params or EstimationParams()
    if not fixture.system.invertible:
        raise PreconditionError(f"{fixture.fid} is not a sequence of homeomorphisms")

    def shifted_estimate(shift: int) -> Estimate:
        label = f"{fixture.fid}>>{shift}"
        shifted_source = fixture.extras.get("shifted_source")
        if fixture.table_source is not None:
            if shift == 0:
                return estimate_fixture(fixture, params, label=label)
            if shifted_source is None:
                raise UnsupportedParameterError(f"{fixture.fid} has no shifted oracle tables")
            return estimate_fixture(fixture, params, table_source=shifted_source(shift),
                                    label=label)
        shifted = shift_sequence(fixture.system, shift)
        shared = replace(params, horizons=_check_horizons(params, fixture, shifted))
        return estimate_fixture(fixture, shared, system=shifted, label=label)

    def body() -> RelationCheck:
        return _relation("shift_independence", "=", shifted_estimate(shift_a),
                         shifted_estimate(shift_b), params, extras={"shifts": [shift_a, shift_b]})

    return _guarded("shift_independence", "=", params, body)


def check_box_bound(fixture: Fixture, params: EstimationParams | None = None,
                    box_ladder: Sequence[float] | None = None) -> RelationCheck:
    """Estimate of an autonomous map is at most the box dimension of its space."""
    params = params or EstimationParams()
    if fixture.system.kind != "autonomous":
        raise PreconditionError(f"{fixture.fid} is not autonomous")

    def body() -> RelationCheck:
        shared = replace(params, horizons=_check_horizons(params, fixture, fixture.system))
        left = estimate_fixture(fixture, shared, label=fixture.fid)
        ladder = box_ladder or _box_ladder(fixture.space)
        box = box_dimension(fixture.space, ladder, params.window)
        right = Estimate(f"dim_B({fixture.space.name})", box, {}, ())
        # the regression slope is the box estimate whatever statistic the left side uses
        left_value = left.report.statistic(shared.statistic)
        verdict, detail = compare(left_value, box.estimate, "<=", shared.tol,
                                  left.report.infinite, False)
        return RelationCheck("box_bound", "<=", shared.tol, verdict, left.report, box,
                             left_value, box.estimate, detail,
                             {"left": left.label, "right": right.label,
                              "statistic": shared.statistic, "box_ladder": list(ladder)})

    return _guarded("box_bound", "<=", params, body)


def _box_ladder(space: MetricSpace) -> tuple[float, ...]:
    top = space.diameter / 10.0 if space.diameter > 0 else 0.1
    return tuple(top * 0.5 ** level for level in range(4))


# ---------------------------------------------------------------- registry


def _fixtures(ids: Sequence[str], count: int, blocks: int | None) -> list[Fixture]:
    if len(ids) < count:
        raise PreconditionError(f"relation needs {count} fixture id(s), got {len(ids)}")
    return [get_fixture(fid, blocks=blocks) for fid in ids[:count]]


_POWER_FALLBACK_BLOCKS = 2


def _run_power(ids, params, options):
    (fx,) = _fixtures(ids, 1, params.blocks)
    block_length = int(options.get("block_length", 2))
    check = check_power_inequality(fx, block_length, params)
    if (check.verdict != INCONCLUSIVE or params.blocks is not None or fx.block_map is None
            or fx.block_map.block_count <= _POWER_FALLBACK_BLOCKS):
        return check
    # the full fixture exceeds the precision budget or net size; retry on its
    # first blocks with a halving ladder from the top radius
    (fx,) = _fixtures(ids, 1, _POWER_FALLBACK_BLOCKS)
    ladder = params.ladder or tuple(fx.ladder[0] * 0.5 ** level for level in range(3))
    params = replace(params, ladder=ladder, blocks=_POWER_FALLBACK_BLOCKS)
    retry = check_power_inequality(fx, block_length, params)
    extras = {**retry.extras, "fallback_blocks": _POWER_FALLBACK_BLOCKS,
              "full_fixture_detail": check.detail}
    return replace(retry, extras=extras)


def _run_commute(ids, params, options):
    first, second = _fixtures(ids, 2, params.blocks)
    return check_composition_commute(first, second, params)


def _run_invariant(ids, params, options):
    (fx,) = _fixtures(ids, 1, params.blocks)
    part_a, part_b = block_split(fx, int(options.get("split", 2)))
    return check_invariant_max(fx, part_a, part_b, params)


def _run_nonwandering(ids, params, options):
    (fx,) = _fixtures(ids, 1, params.blocks)
    return check_nonwandering(fx, params)


def _run_shift(ids, params, options):
    (fx,) = _fixtures(ids, 1, params.blocks)
    return check_shift_independence(fx, int(options.get("shift_a", 0)),
                                    int(options.get("shift_b", 1)), params)


def _run_box(ids, params, options):
    (fx,) = _fixtures(ids, 1, params.blocks)
    return check_box_bound(fx, params)


CHECKS: dict[str, Callable[..., RelationCheck]] = {
    "power_inequality": _run_power,
    "composition_commute": _run_commute,
    "invariant_max": _run_invariant,
    "nonwandering": _run_nonwandering,
    "shift_independence": _run_shift,
    "box_bound": _run_box,
}


def run_check(relation: str, fixture_ids: Sequence[str], params: EstimationParams | None = None,
              **options) -> RelationCheck:
    """Run a registered relation check by id."""
    try:
        runner = CHECKS[relation]
    except KeyError:
        raise UnsupportedParameterError(
            f"unknown relation {relation!r}; known: {', '.join(CHECKS)}") from None
    return runner(list(fixture_ids), params or EstimationParams(), options)
