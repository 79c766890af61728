"""Count tables, growth rates and dimension estimates.

Counts are produced either numerically (greedy algorithms on a certified
Bowen net) or from closed-form oracle tables.  Growth rates turn a table into
a curve of entropy-like rates over the scale ladder; the regression of those
rates against |log eps| gives the metric mean dimension estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .core import TIE, BowenContext, MetricSpace
from .errors import InsufficientDataError, PreconditionError, ResolutionError
from .kernels import (
    KernelSpec,
    greedy_separated,
    greedy_set_cover,
    neighbor_lists,
    sequential_cover_direct,
)
from .nets import Sample

__all__ = [
    "COUNT_KINDS",
    "DEFAULT_NET_FACTOR",
    "RATE_METHODS",
    "CountTable",
    "RateCurve",
    "DimensionReport",
    "EntropyProfile",
    "max_separated",
    "min_spanning",
    "cover_count",
    "ball_cover_count",
    "count_cell",
    "numeric_tables",
    "tables_from_source",
    "chain_violations",
    "growth_rate",
    "rate_curve",
    "mmd_estimate",
    "box_dimension",
    "box_dimension_from_counts",
    "entropy_rate_profile",
    "lsq_slope",
    "finite_or_none",
]

COUNT_KINDS = ("separated", "spanning", "cover")
RATE_METHODS = ("tail_slope", "max_increment")
# just below eps/4: lattice spacings dividing eps put many pairs at distance
# exactly eps, where open spanning balls and strict separation disagree
DEFAULT_NET_FACTOR = 0.2499
_FINITE_VERDICT = "bounded rates: finite entropy, mdim 0 expected"
_GROWING_VERDICT = "rates grow with |log eps|"


# ---------------------------------------------------------------- tables


@dataclass
class CountTable:
    """Counts indexed by (horizon, scale).

    ``provenance`` is "numeric" or "oracle"; ``bound`` says whether oracle
    entries are exact, lower or upper bounds ("estimate" for numeric tables).
    """

    kind: str
    provenance: str
    entries: dict[tuple[int, float], int]
    metadata: dict = field(default_factory=dict)
    bound: str = "estimate"

    def __post_init__(self) -> None:
        for (horizon, eps), count in self.entries.items():
            if horizon < 1 or not eps > 0:
                raise PreconditionError(f"bad table key ({horizon}, {eps})")
            if int(count) < 1:
                raise PreconditionError(f"count at ({horizon}, {eps}) must be at least 1")

    def radii(self) -> list[float]:
        """Scales, largest first."""
        return sorted({eps for _, eps in self.entries}, reverse=True)

    def horizons(self, eps: float | None = None) -> list[int]:
        return sorted({horizon for horizon, radius in self.entries
                       if eps is None or radius == eps})

    def count(self, horizon: int, eps: float) -> int:
        return int(self.entries[(horizon, eps)])

    def series(self, eps: float) -> list[tuple[int, int]]:
        return [(horizon, self.count(horizon, eps)) for horizon in self.horizons(eps)]

    def invariant_violations(self) -> list[str]:
        """Monotonicity failures: counts must not grow with eps, and separated
        or cover counts must not shrink with the horizon."""
        problems = []
        radii = self.radii()
        for horizon in self.horizons():
            row = [(radius, self.entries[(horizon, radius)]) for radius in radii
                   if (horizon, radius) in self.entries]
            for (eps_big, count_big), (eps_small, count_small) in zip(row, row[1:]):
                if count_big > count_small:
                    problems.append(f"{self.kind}: count({horizon}, {eps_big:.4g})={count_big} > "
                                    f"count({horizon}, {eps_small:.4g})={count_small}")
        if self.kind in ("separated", "cover"):
            for eps in radii:
                seq = self.series(eps)
                for (h_prev, c_prev), (h_next, c_next) in zip(seq, seq[1:]):
                    if c_prev > c_next:
                        problems.append(f"{self.kind}: count({h_prev}, {eps:.4g})={c_prev} > "
                                        f"count({h_next}, {eps:.4g})={c_next}")
        return problems

    def rows(self) -> list[dict]:
        """Flat records; counts are decimal strings so big integers survive."""
        return [
            {"kind": self.kind, "n": horizon, "eps": eps, "count": str(int(count)),
             "provenance": self.provenance if self.bound == "estimate"
             else f"{self.provenance}:{self.bound}"}
            for (horizon, eps), count in sorted(self.entries.items(),
                                                key=lambda item: (-item[0][1], item[0][0]))
        ]


def finite_or_none(value: float | None) -> float | None:
    """JSON-friendly number: infinities and missing values become None."""
    return None if value is None or math.isinf(value) else float(value)


def chain_violations(tables: Mapping[str, CountTable]) -> list[str]:
    """Cross-kind checks: sep(n, 2eps) <= span(n, eps) <= sep(n, eps) and
    span(n, eps) <= cov(n, eps) wherever all quantities are present."""
    problems = []
    sep, span, cov = (tables.get(kind) for kind in COUNT_KINDS)
    if span is None:
        return problems
    doubled = sep.metadata.get("doubled", {}) if sep is not None else {}
    for key, spanning in span.entries.items():
        horizon, eps = key
        if sep is not None:
            wide = doubled.get(key, sep.entries.get((horizon, 2.0 * eps)))
            if wide is not None and wide > spanning:
                problems.append(f"sep({horizon}, 2*{eps:.4g})={wide} > span={spanning}")
            if key in sep.entries and spanning > sep.entries[key]:
                problems.append(f"span({horizon}, {eps:.4g})={spanning} > "
                                f"sep={sep.entries[key]}")
        if cov is not None and key in cov.entries and spanning > cov.entries[key]:
            problems.append(f"span({horizon}, {eps:.4g})={spanning} > cov={cov.entries[key]}")
    return problems


# ---------------------------------------------------------------- counting


def _orbits_for(ctx: BowenContext, sample, eps: float) -> np.ndarray:
    if isinstance(sample, Sample):
        if sample.resolution is not None and sample.resolution > eps / 4.0 * (1 + 1e-12):
            raise ResolutionError(
                f"sample resolution {sample.resolution:.4g} exceeds eps/4 = {eps / 4.0:.4g}")
        if sample.horizon < ctx.horizon:
            raise ResolutionError(
                f"sample certifies horizon {sample.horizon}, counting needs {ctx.horizon}")
        if sample.orbits is not None and sample.orbits.shape[1] >= ctx.horizon:
            return sample.orbits[:, :ctx.horizon, :]
        return ctx.orbits(sample.points)
    return ctx.orbits(np.asarray(sample, dtype=np.float64))


def max_separated(ctx: BowenContext, sample, eps: float) -> int:
    """Size of a greedy maximal (n, eps)-separated subset of the sample.

    A certified Sample must have resolution at most eps/4; raw point arrays
    are counted as given.
    """
    ctx.require_budget()
    orb = _orbits_for(ctx, sample, eps)
    return greedy_separated(orb, eps, KernelSpec.for_space(ctx.space))[0]


def _spanning_from_orbits(orb: np.ndarray, eps: float, spec: KernelSpec,
                          set_cover_limit: int = 200_000, half_cover: int | None = None) -> int:
    """Smallest of three spanning sets: greedy set cover (small samples only),
    a maximal set separated just below eps, and sequential eps/2 cover centres."""
    candidates = []
    if orb.shape[0] <= set_cover_limit:
        indptr, indices = neighbor_lists(orb, eps, spec, closed=False)
        candidates.append(greedy_set_cover(indptr, indices)[0])
    # A maximal set separated at a radius just below eps spans with open balls.
    inner = eps * (1.0 - 1e-9) - 2 * TIE
    _, mask = greedy_separated(orb, inner, spec)
    candidates.append(int(mask.sum()))
    # Centres of a sequential cover by eps/2-balls also span at eps.
    if half_cover is None:
        half_cover = sequential_cover_direct(orb, eps / 2.0, spec)
    candidates.append(half_cover)
    return min(candidates)


def min_spanning(ctx: BowenContext, sample, eps: float) -> int:
    """Smallest (n, eps)-spanning subset found: open Bowen balls of radius eps
    centred at sample points must cover the sample."""
    ctx.require_budget()
    orb = _orbits_for(ctx, sample, eps)
    return _spanning_from_orbits(orb, eps, KernelSpec.for_space(ctx.space))


def cover_count(ctx: BowenContext, sample, eps: float) -> int:
    """Sequential cover by open Bowen balls of radius eps/2 (sets of diameter
    below eps)."""
    ctx.require_budget()
    orb = _orbits_for(ctx, sample, eps)
    return sequential_cover_direct(orb, eps / 2.0, KernelSpec.for_space(ctx.space))


def ball_cover_count(space: MetricSpace, eps: float, sample: np.ndarray | None = None) -> int:
    """Greedy cover of the space by closed eps-balls centred at net points."""
    pts = space.sample(eps / 4.0) if sample is None else np.asarray(sample, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(-1, space.dim)
    order = np.argsort(pts[:, 0], kind="stable")
    orb = np.ascontiguousarray(pts[order][:, None, :])
    indptr, indices = neighbor_lists(orb, eps, KernelSpec.for_space(space), closed=True)
    return greedy_set_cover(indptr, indices)[0]


def count_cell(orbits: np.ndarray, space: MetricSpace, eps: float,
               kinds: Iterable[str] = COUNT_KINDS, span_limit: int = 200_000,
               doubled: bool = False) -> dict[str, int]:
    """All requested counts for one (horizon, eps) cell of a certified net.

    On nets larger than ``span_limit`` the spanning count skips the greedy
    set-cover candidate and uses the cheaper ones only.
    """
    spec = KernelSpec.for_space(space)
    out: dict[str, int] = {}
    kinds = tuple(kinds)
    if "separated" in kinds:
        out["separated"] = greedy_separated(orbits, eps, spec)[0]
        if doubled:
            out["separated@2eps"] = greedy_separated(orbits, 2.0 * eps, spec)[0]
    if "cover" in kinds:
        out["cover"] = sequential_cover_direct(orbits, eps / 2.0, spec)
    if "spanning" in kinds:
        out["spanning"] = _spanning_from_orbits(orbits, eps, spec, set_cover_limit=span_limit,
                                                half_cover=out.get("cover"))
    return out


def numeric_tables(net_builder: Callable[[int, float], Sample], space: MetricSpace,
                   ladder: Sequence[float], horizons: Sequence[int],
                   kinds: Iterable[str] = ("separated",), *, span_limit: int = 200_000,
                   net_factor: float = DEFAULT_NET_FACTOR,
                   progress: Callable[[str], None] | None = None) -> dict[str, CountTable]:
    """Numeric count tables over ``ladder`` x ``horizons``.

    ``net_builder(horizon, delta)`` must return a delta-net in d_h; it is called
    once per cell with delta = net_factor * eps.
    """
    kinds = tuple(kinds)
    unknown = set(kinds) - set(COUNT_KINDS)
    if unknown:
        raise PreconditionError(f"unknown count kinds {sorted(unknown)}")
    if net_factor > 0.25:
        raise ResolutionError("nets coarser than eps/4 do not certify the counts")
    entries: dict[str, dict] = {kind: {} for kind in kinds}
    doubled: dict = {}
    sizes: dict = {}
    want_double = "spanning" in kinds and "separated" in kinds
    for eps in sorted(ladder, reverse=True):
        for horizon in sorted(horizons):
            sample = net_builder(horizon, net_factor * eps)
            counts = count_cell(sample.orbits[:, :horizon, :], space, eps, kinds, span_limit,
                                doubled=want_double)
            sizes[(horizon, eps)] = sample.size
            for kind in kinds:
                if kind in counts:
                    entries[kind][(horizon, eps)] = counts[kind]
            if "separated@2eps" in counts:
                doubled[(horizon, eps)] = counts["separated@2eps"]
            if progress is not None:
                progress(f"horizon={horizon} eps={eps:.4g} net={sample.size} {counts}")
    tables = {}
    for kind in kinds:
        meta = {"net_sizes": sizes, "net_factor": net_factor}
        if kind == "separated" and doubled:
            meta["doubled"] = doubled
        tables[kind] = CountTable(kind, "numeric", entries[kind], meta)
    return tables


def tables_from_source(source: Mapping[str, Mapping[tuple[int, float], int]],
                       provenance: str = "oracle") -> dict[str, CountTable]:
    """Wrap label-keyed oracle tables ("separated:lower", "cover:exact", ...)."""
    out = {}
    for label, entries in source.items():
        kind, _, bound = label.partition(":")
        table = CountTable(kind, provenance, {key: int(count) for key, count in entries.items()},
                           {"label": label}, bound or "exact")
        out[label] = table
    return out


# ---------------------------------------------------------------- rates


def lsq_slope(abscissae: Sequence[float],
              ordinates: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares slope, intercept and residual norm."""
    xs = np.asarray(abscissae, dtype=np.float64)
    ys = np.asarray(ordinates, dtype=np.float64)
    if xs.size < 2 or np.ptp(xs) == 0:
        raise InsufficientDataError("a slope needs at least two distinct abscissae")
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = float(np.linalg.norm(ys - (slope * xs + intercept)))
    return float(slope), float(intercept), resid


def _log_counts(table: CountTable, eps: float) -> tuple[np.ndarray, np.ndarray]:
    seq = table.series(eps)
    ns = np.array([horizon for horizon, _ in seq], dtype=np.float64)
    logs = np.array([math.log(int(count)) for _, count in seq], dtype=np.float64)
    return ns, logs


def _increments(ns: np.ndarray, logs: np.ndarray) -> np.ndarray:
    return np.diff(logs) / np.diff(ns)


def growth_rate(table: CountTable, eps: float, method: str = "tail_slope",
                window: int = 3) -> float:
    """Entropy-like growth rate of log count in n at fixed eps (clipped at 0)."""
    if method not in RATE_METHODS:
        raise PreconditionError(f"unknown rate method {method!r}")
    ns, logs = _log_counts(table, eps)
    if ns.size < 4:
        raise InsufficientDataError(
            f"growth rate at eps={eps:.4g} needs at least 4 horizons, have {ns.size}")
    if method == "tail_slope":
        take = max(2, min(window, ns.size))
        rate = lsq_slope(ns[-take:], logs[-take:])[0]
    else:
        rate = float(np.max(_increments(ns, logs)[-window:]))
    return max(0.0, rate)


@dataclass(frozen=True)
class RateCurve:
    """Growth rates over the ladder, largest scale first."""

    kind: str
    provenance: str
    method: str
    window: int
    points: tuple[tuple[float, float], ...]
    increments: dict = field(default_factory=dict, compare=False)

    @property
    def radii(self) -> list[float]:
        return [eps for eps, _ in self.points]

    @property
    def rates(self) -> list[float]:
        return [rate for _, rate in self.points]


def rate_curve(table: CountTable, method: str = "tail_slope", window: int = 3,
               radii: Sequence[float] | None = None) -> RateCurve:
    chosen = table.radii() if radii is None else sorted(radii, reverse=True)
    points, incs = [], {}
    for eps in chosen:
        points.append((eps, growth_rate(table, eps, method, window)))
        ns, logs = _log_counts(table, eps)
        incs[eps] = tuple(float(step) for step in _increments(ns, logs))
    return RateCurve(table.kind, table.provenance, method, window, tuple(points), incs)


# ---------------------------------------------------------------- reports


@dataclass(frozen=True)
class DimensionReport:
    """Dimension estimate with regression diagnostics.

    When ``infinite`` is set the lower, upper and point estimates are all
    ``math.inf`` and the regression fields keep the raw diagnostics.
    """

    quantity: str
    lower: float
    upper: float
    estimate: float
    slope: float
    ratio_at_smallest: float
    residual: float
    infinite: bool
    window: int
    ladder: tuple[float, ...]
    values: tuple[float, ...]
    divergence: dict = field(default_factory=dict)
    kind: str = ""
    provenance: str = ""
    method: str = ""

    def statistic(self, name: str) -> float:
        """The number compared in relation checks ("ratio" or "slope")."""
        if self.infinite:
            return math.inf
        if name == "ratio":
            return self.ratio_at_smallest
        if name == "slope":
            return max(0.0, self.slope)
        raise PreconditionError(f"unknown statistic {name!r}")

    def to_record(self) -> dict:

        return {
            "quantity": self.quantity,
            "infinite": self.infinite,
            "lower": finite_or_none(self.lower),
            "upper": finite_or_none(self.upper),
            "estimate": finite_or_none(self.estimate),
            "slope": finite_or_none(self.slope),
            "ratio_at_smallest": finite_or_none(self.ratio_at_smallest),
            "residual": finite_or_none(self.residual),
            "window": self.window,
            "ladder": list(self.ladder),
            "values": [finite_or_none(value) for value in self.values],
            "divergence": self.divergence,
            "kind": self.kind,
            "provenance": self.provenance,
            "method": self.method,
        }


def _windowed(xs: np.ndarray, ys: np.ndarray, window: int) -> list[float]:
    if xs.size <= window:
        return [lsq_slope(xs, ys)[0]]
    return [lsq_slope(xs[start:start + window], ys[start:start + window])[0]
            for start in range(xs.size - window + 1)]


def _divergence(curve: RateCurve, ambient: float) -> dict:
    rates = curve.rates
    logs = [-math.log(eps) for eps in curve.radii]
    ratios = [rate / log_scale for rate, log_scale in zip(rates, logs)]
    tail = ratios[-3:]
    ratio_clause = (len(tail) == 3 and tail[0] < tail[1] < tail[2]
                    and tail[-1] > 2.0 * ambient)
    horizon_clause = len(curve.points) >= 3
    for eps in curve.radii[-3:]:
        inc = curve.increments.get(eps, ())[-curve.window:]
        rising = all(before < after for before, after in zip(inc, inc[1:]))
        if not (len(inc) >= 2 and inc[0] > 0 and rising and inc[-1] >= 2.0 * inc[0]):
            horizon_clause = False
    return {"ratio_clause": bool(ratio_clause), "horizon_clause": bool(horizon_clause),
            "ambient_box_dim": ambient, "ratios": ratios}


def mmd_estimate(curve: RateCurve, window: int = 3,
                 ambient_box_dim: float | None = None) -> DimensionReport:
    """Metric mean dimension from rates against |log eps|.

    The infinite flag is raised when the rate-to-|log eps| ratios keep rising
    past twice the ambient box dimension, or when at every one of the three
    smallest scales the per-horizon increments of log count accelerate
    (strictly increasing, last at least twice the first).
    """
    if len(curve.points) < 3:
        raise InsufficientDataError("a dimension estimate needs at least 3 ladder points")
    if any(eps >= 1.0 for eps in curve.radii):
        raise PreconditionError("ladder scales must lie below 1")
    xs = np.array([-math.log(eps) for eps in curve.radii])
    ys = np.array(curve.rates)
    slope, _, resid = lsq_slope(xs, ys)
    ratio = float(ys[-1] / xs[-1])
    windows = _windowed(xs, ys, window)
    ambient = 1.0 if ambient_box_dim is None else float(ambient_box_dim)
    div = _divergence(curve, ambient)
    infinite = div["ratio_clause"] or div["horizon_clause"]
    if infinite:
        lower = upper = estimate = math.inf
    else:
        lower = max(0.0, min(windows))
        upper = max(0.0, max(windows))
        estimate = max(0.0, slope)
    return DimensionReport("mdim", lower, upper, estimate, slope, ratio, resid, infinite,
                           window, tuple(curve.radii), tuple(curve.rates), div,
                           curve.kind, curve.provenance, curve.method)


def box_dimension_from_counts(radii: Sequence[float], counts: Sequence[int],
                              window: int = 3) -> DimensionReport:
    pairs = sorted(zip(radii, counts), reverse=True)
    if len(pairs) < 2:
        raise InsufficientDataError("box dimension needs at least 2 scales")
    xs = np.array([-math.log(eps) for eps, _ in pairs])
    ys = np.array([math.log(count) for _, count in pairs])
    slope, _, resid = lsq_slope(xs, ys)
    windows = _windowed(xs, ys, window)
    return DimensionReport("box", max(0.0, min(windows)), max(0.0, max(windows)),
                           max(0.0, slope), slope, float(ys[-1] / xs[-1]), resid, False,
                           window, tuple(eps for eps, _ in pairs),
                           tuple(float(count) for _, count in pairs),
                           kind="ball_cover", provenance="numeric", method="lsq")


def box_dimension(space: MetricSpace, ladder: Sequence[float], window: int = 3) -> DimensionReport:
    """Box dimension from greedy closed-ball covers along the ladder."""
    counts = [ball_cover_count(space, eps) for eps in ladder]
    return box_dimension_from_counts(ladder, counts, window)


@dataclass(frozen=True)
class EntropyProfile:
    points: tuple[tuple[float, float], ...]
    slope: float
    verdict: str

    @property
    def bounded(self) -> bool:
        return self.verdict == _FINITE_VERDICT


def entropy_rate_profile(table: CountTable, method: str = "tail_slope", window: int = 3,
                         flat_tol: float = 0.1) -> EntropyProfile:
    """Rates against |log eps| with a verdict on whether they stay bounded."""
    curve = rate_curve(table, method, window)
    xs = [-math.log(eps) for eps in curve.radii]
    slope = lsq_slope(xs, curve.rates)[0] if len(xs) >= 2 else 0.0
    verdict = _FINITE_VERDICT if slope <= flat_tol else _GROWING_VERDICT
    return EntropyProfile(curve.points, slope, verdict)
