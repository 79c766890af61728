"""Executable example systems with their known dimension values attached."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import partial
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from . import oracle
from .core import (
    MetricSpace,
    Region,
    SystemSequence,
    autonomous,
    circle_space,
    cumulative_budget,
    finite_subset_space,
    harmonic_set_space,
    interval_space,
    point_space,
    precision_budget,
    torus_space,
    word_space,
)
from .errors import (
    ConstructionError,
    FixtureInputError,
    UnknownFixtureError,
    UnsupportedParameterError,
)
from .nets import Sample, bowen_net

__all__ = [
    "tent_map",
    "tent_power",
    "BlockIntervalMap",
    "build_block_map",
    "build_example33",
    "build_phi_a",
    "ProductShiftSpace",
    "build_product_shift",
    "build_binary_shift",
    "build_binary_power_shift",
    "ToralMapFixture",
    "build_toral_power_sequence",
    "cat_matrix",
    "damp_sequence",
    "truncate_sequence",
    "cumulative_budget",
    "rotation",
    "rotation_sequence",
    "Fixture",
    "get_fixture",
    "fixture_ids",
    "geometric_ladder",
]


def tent_map(value: Any) -> Any:
    """|1 - |3 value - 1|| on [0, 1]."""
    arr = np.asarray(value, dtype=np.float64)
    if np.any((arr < 0.0) | (arr > 1.0)) or np.any(np.isnan(arr)):
        raise FixtureInputError("tent map is defined on [0, 1]")
    out = np.abs(1.0 - np.abs(3.0 * arr - 1.0))
    return float(out) if out.ndim == 0 else out


def tent_power(unit: np.ndarray, iterates: int) -> np.ndarray:
    """The tent map iterated ``iterates`` times on [0, 1]: 3^iterates full
    branches, alternately increasing and decreasing.

    Evaluated in closed form from 3^iterates * unit so the rounding error is a
    single multiplication rather than many compounded ones.
    """
    if iterates == 0:
        return unit
    branches = 3 ** iterates
    scaled = unit * branches
    branch = np.minimum(np.floor(scaled), branches - 1)
    frac = np.clip(scaled - branch, 0.0, 1.0)
    return np.where(np.mod(branch, 2) == 0, frac, 1.0 - frac)


def geometric_ladder(start: float, count: int, ratio: float = 0.5) -> tuple[float, ...]:
    return tuple(start * ratio ** step for step in range(count))


@dataclass(frozen=True, eq=False)
class BlockIntervalMap:
    """A map on [0, end] made of blocks laid end to end.

    On each block the map is the affine conjugate (through the block's chart
    onto [0, 1]) of the tent map iterated ``exponents[block]`` times.  Beyond
    the materialised blocks (the residual interval up to ``end``) the map is
    the identity.
    """

    lengths: tuple[float, ...]
    exponents: tuple[int, ...]
    end: float
    known_mdim: float | None
    name: str
    ladder: tuple[float, ...] = ()
    exact_lengths: tuple[Fraction, ...] | None = None

    def __post_init__(self) -> None:
        bounds = np.concatenate([[0.0], np.cumsum(self.lengths)])
        object.__setattr__(self, "_bounds", bounds)
        object.__setattr__(self, "_starts", bounds[:-1].copy())
        object.__setattr__(self, "_widths", np.asarray(self.lengths, dtype=np.float64))
        object.__setattr__(self, "_exps", np.asarray(self.exponents, dtype=np.int64))

    @property
    def block_count(self) -> int:
        return len(self.lengths)

    @property
    def boundaries(self) -> np.ndarray:
        """Block boundaries, starting at 0."""
        return self._bounds.copy()

    def chart(self, block: int, points: Any) -> np.ndarray:
        """Affine chart of a block (1-based) onto [0, 1]."""
        start = self._bounds[block - 1]
        return (np.asarray(points, dtype=np.float64) - start) / self.lengths[block - 1]

    def chart_inverse(self, block: int, unit: Any) -> np.ndarray:
        start = self._bounds[block - 1]
        return start + np.asarray(unit, dtype=np.float64) * self.lengths[block - 1]

    def block_index(self, points: Any) -> np.ndarray:
        """1-based block containing each point; 0 for the residual interval."""
        arr = np.asarray(points, dtype=np.float64)
        idx = np.searchsorted(self._bounds, arr, side="right")
        return np.where(idx > self.block_count, 0, idx)

    def __call__(self, points: Any) -> Any:
        arr = np.asarray(points, dtype=np.float64)
        if np.any((arr < -1e-15) | (arr > self.end + 1e-15)):
            raise FixtureInputError(f"{self.name} is defined on [0, {self.end:g}]")
        out = self._evaluate(arr)
        return float(out) if out.ndim == 0 else out

    def _evaluate(self, arr: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self._bounds, arr, side="right") - 1
        inside = (idx >= 0) & (idx < self.block_count)
        safe = np.clip(idx, 0, self.block_count - 1)
        start = self._starts[safe]
        width = self._widths[safe]
        unit = np.clip((arr - start) / width, 0.0, 1.0)
        exps = self._exps[safe]
        out = np.array(arr, dtype=np.float64, copy=True)
        for iterates in np.unique(exps[inside]):
            sel = inside & (exps == iterates)
            out[sel] = start[sel] + width[sel] * tent_power(unit[sel], int(iterates))
        return out

    def as_map(self) -> Callable[[np.ndarray], np.ndarray]:
        def fn(points: np.ndarray) -> np.ndarray:
            return self._evaluate(points[:, 0]).reshape(-1, 1)

        return fn

    def regions(self) -> tuple[Region, ...]:
        out = []
        blocks = zip(self._starts, self.lengths, self.exponents)
        for number, (start, width, iterates) in enumerate(blocks, start=1):
            slope = float(3 ** iterates)
            out.append(Region(float(start), float(start + width),
                              lambda index, _slope=slope: _slope,
                              lambda index, _count=3 ** iterates: _count, f"J{number}"))
        top = float(self._bounds[-1])
        if self.end > top:
            out.append(Region(top, float(self.end), lambda index: 1.0, lambda index: 1, "tail"))
        return tuple(out)

    def system(self) -> SystemSequence:
        lip = float(3 ** max(self.exponents))
        return SystemSequence(lambda index: self.as_map(), "autonomous", precision_budget(lip),
                              lambda index: lip, self.regions(), False,
                              {"fixture": self.name, "blocks": self.block_count})

    def space(self) -> MetricSpace:
        return interval_space(0.0, self.end, name=f"[0,{self.end:.6g}]")


def _materialize(schedule: Sequence | Callable[[int], Any], count: int) -> list:
    if callable(schedule):
        return [schedule(index) for index in range(1, count + 1)]
    values = list(schedule)
    if len(values) < count:
        raise ConstructionError(f"schedule has {len(values)} entries, {count} needed")
    return values[:count]


def build_block_map(lengths: Sequence | Callable[[int], float],
                    exponents: Sequence | Callable[[int], int], block_count: int = 8, *,
                    end: float = 1.0, known_mdim: float | None = None, name: str = "block_map",
                    ladder: Sequence[float] = (), strictly_increasing: bool = False,
                    exact_lengths: Sequence[Fraction] | None = None) -> BlockIntervalMap:
    """Materialise the first ``block_count`` blocks of a block interval map."""
    if block_count < 1:
        raise ConstructionError("block_count must be >= 1")
    lens = [float(value) for value in _materialize(lengths, block_count)]
    exps = [int(value) for value in _materialize(exponents, block_count)]
    if any(value <= 0 for value in lens):
        raise ConstructionError("block lengths must be positive")
    if any(value < 0 for value in exps):
        raise ConstructionError("branch exponents must be non-negative")
    if strictly_increasing and any(later <= earlier for earlier, later in zip(exps, exps[1:])):
        raise ConstructionError("exponents must be strictly increasing")
    total = math.fsum(lens)
    if total > end * (1 + 1e-12):
        raise ConstructionError(f"block lengths sum to {total:.6g} > {end:g}")
    return BlockIntervalMap(tuple(lens), tuple(exps), float(end), known_mdim, name,
                            tuple(ladder),
                            None if exact_lengths is None else tuple(exact_lengths))


def build_example33(block_count: int = 8) -> BlockIntervalMap:
    """Block k has length 6/(pi^2 k^2) and exponent k on [0, 1]; the ladder
    divides each block length by 3^k."""

    def length(block: int) -> float:
        return 6.0 / (math.pi ** 2 * block * block)

    ladder = [length(block) / 3 ** block for block in range(1, block_count + 1)]
    return build_block_map(length, lambda block: block, block_count, end=1.0, known_mdim=1.0,
                           name="example33", ladder=ladder, strictly_increasing=True)


def build_phi_a(target_dim: float, block_count: int = 8) -> BlockIntervalMap:
    """Block k has length scale * 3^(-k/target_dim) with
    scale = 1/(3^(1/target_dim) - 1) and exponent k; the ladder is the block
    lengths themselves.

    The blocks fill [0, scale/(3^(1/target_dim) - 1)]; that interval is the
    invariant space the map acts on (identity on the residual tail).
    """
    if not 0.0 < float(target_dim) < 1.0:
        raise FixtureInputError(
            "target dimension must lie in (0, 1); use 'constant' or 'example33' for the ends")
    exponent = 1.0 / float(target_dim)
    scale = 1.0 / (3.0 ** exponent - 1.0)

    def length(block: int) -> float:
        return scale * 3.0 ** (-exponent * block)

    end = scale / (3.0 ** exponent - 1.0)
    try:
        exact = [oracle.phi_a_block_length(target_dim, block)
                 for block in range(1, block_count + 1)]
    except UnsupportedParameterError:
        exact = None
    ladder = [length(block) for block in range(1, block_count + 1)]
    return build_block_map(length, lambda block: block, block_count, end=end,
                           known_mdim=float(target_dim), name=f"phi_a:{float(target_dim):g}",
                           ladder=ladder, exact_lengths=exact)


def _shift_words(points: np.ndarray, by: int) -> np.ndarray:
    out = np.zeros_like(points)
    if by < points.shape[1]:
        out[:, : points.shape[1] - by] = points[:, by:]
    return out


@dataclass(frozen=True, eq=False)
class ProductShiftSpace:
    """Sequences over a base space with the weighted metric: coordinate
    index ``idx`` contributes 2^-|idx| times the base distance, and indices
    beyond ``window`` are dropped.

    Words are stored as arrays of positions; for the two-sided case position
    ``pos`` stands for index pos - window.  The stored length leaves room for
    ``capacity`` shifts, beyond which shifted-in coordinates are padded with 0.
    """

    base: MetricSpace
    sided: str
    window: int
    capacity: int = 8
    known_mdim: float | None = None

    @property
    def length(self) -> int:
        core = self.window + 1 if self.sided == "one" else 2 * self.window + 1
        return core + self.capacity

    def weights(self) -> np.ndarray:
        pos = np.arange(self.length)
        idx = pos if self.sided == "one" else pos - self.window
        weights = np.ldexp(1.0, -np.abs(idx))
        weights[np.abs(idx) > self.window] = 0.0
        return weights

    def truncation_error(self) -> float:
        tail = 2.0 ** (-self.window)
        return tail * self.base.diameter * (1 if self.sided == "one" else 2)

    def metric_space(self, letters: Sequence[float]) -> MetricSpace:
        return word_space(self.length, "weighted", self.weights(), letters,
                          name=f"{self.base.name}^{self.sided}", box_dim=None)

    def system(self) -> SystemSequence:
        return autonomous(lambda words: _shift_words(words, 1), lipschitz=2.0, kind="shift",
                          sided=self.sided, window=self.window)

    def dist(self, first: np.ndarray, second: np.ndarray) -> np.ndarray:
        return np.abs(np.asarray(first) - np.asarray(second)) @ self.weights()


def build_product_shift(base: MetricSpace, sided: str = "one", window: int = 1,
                        capacity: int = 8) -> ProductShiftSpace:
    if window < 1:
        raise FixtureInputError("window must be >= 1")
    if sided not in ("one", "two"):
        raise FixtureInputError("sided must be 'one' or 'two'")
    return ProductShiftSpace(base, sided, int(window), int(capacity), base.box_dim)


def _power_shift_system(offsets: Callable[[int], int], kind: str) -> SystemSequence:
    """Map ``index`` shifts binary words by ``offsets(index)`` symbols."""

    def factory(index: int) -> Callable[[np.ndarray], np.ndarray]:
        step = offsets(index)
        return lambda words: _shift_words(words, step)

    # shifting by s symbols is 2^s-Lipschitz for the first-difference metric
    lip = lambda index: 2.0 ** offsets(index)  # noqa: E731
    return SystemSequence(factory, kind, None, lip, (), False,
                          {"offsets": kind})


def build_binary_shift() -> SystemSequence:
    return _power_shift_system(lambda index: 1, "autonomous")


def build_binary_power_shift() -> SystemSequence:
    """Map ``index`` shifts by 2^index symbols, so the first ``count`` maps
    together shift by 2^(count+1) - 2."""
    return _power_shift_system(lambda index: 2 ** index, "power_schedule(2^n)")


def cat_matrix(trace: int) -> tuple[tuple[int, int], tuple[int, int]]:
    """The unimodular matrix [[trace-1, 1], [trace-2, 1]]; trace 3 gives [[2,1],[1,1]]."""
    return ((trace - 1, 1), (trace - 2, 1))


@dataclass(frozen=True, eq=False)
class ToralMapFixture:
    matrix: tuple[tuple[int, int], tuple[int, int]]
    schedule: Callable[[int], int]
    eigenvalue: float

    def fix_count(self, power: int) -> int:
        return oracle.toral_fix_count(self.matrix, power).value

    def fix_formula(self, power: int) -> int:
        lam = self.eigenvalue
        return int(round(lam ** power + lam ** (-power) - 2))

    def power(self, exponent: int) -> np.ndarray:
        result = np.array([[1, 0], [0, 1]], dtype=object)
        base = np.array(self.matrix, dtype=object)
        while exponent:
            if exponent & 1:
                result = result.dot(base)
            base = base.dot(base)
            exponent >>= 1
        return result

    def system(self) -> SystemSequence:
        def factory(index: int) -> Callable[[np.ndarray], np.ndarray]:
            exact = self.power(self.schedule(index))
            mat = np.array([[float(entry) for entry in row] for row in exact])
            return lambda points: np.mod(points @ mat.T, 1.0)

        lip = lambda index: self.eigenvalue ** self.schedule(index)  # noqa: E731
        return SystemSequence(factory, "power_schedule", cumulative_budget(lip, cap=64), lip,
                              (), True, {"matrix": self.matrix})


def build_toral_power_sequence(matrix: Sequence[Sequence[int]],
                               schedule: Callable[[int], int] | None = None) -> ToralMapFixture:
    rows = ((int(matrix[0][0]), int(matrix[0][1])), (int(matrix[1][0]), int(matrix[1][1])))
    det = rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    if abs(det) != 1:
        raise FixtureInputError(f"determinant {det}; a toral automorphism needs |det| = 1")
    trace = rows[0][0] + rows[1][1]
    if abs(trace) <= 2:
        raise FixtureInputError(f"trace {trace}; hyperbolicity needs |trace| > 2")
    disc = trace * trace - 4 * det
    lam = (abs(trace) + math.sqrt(disc)) / 2.0
    return ToralMapFixture(rows, schedule or (lambda index: 2 ** index), lam)


def damp_sequence(system: SystemSequence, schedule: Callable[[int], float], offset: int = 0,
                  check_prefix: int = 64) -> SystemSequence:
    """Map ``index`` becomes schedule(offset + index) times the original map,
    pulling orbits towards 0."""
    prefix = [float(schedule(offset + index)) for index in range(1, check_prefix + 1)]
    if any(not 0.0 <= factor <= 1.0 for factor in prefix):
        raise FixtureInputError("damping factors must lie in [0, 1]")
    products_vanish = math.prod(prefix) < 0.1
    base_lip = system.lipschitz

    def factory(index: int) -> Callable[[np.ndarray], np.ndarray]:
        factor = float(schedule(offset + index))
        fn = system.map_at(index)
        return lambda points: factor * fn(points)

    lip = None
    budget = system.horizon_budget
    if base_lip is not None:
        lip = lambda index: float(schedule(offset + index)) * base_lip(index)  # noqa: E731
        budget = cumulative_budget(lip)
    params = dict(system.params)
    params.update({"damped": True, "offset": offset, "products_vanish": products_vanish})
    return SystemSequence(factory, "damped", budget, lip, (), False, params)


def truncate_sequence(base_map: Callable[[np.ndarray], np.ndarray],
                      levels: Callable[[int], float], lipschitz: float | None = None,
                      beyond: str = "constant") -> SystemSequence:
    """Map ``index`` follows ``base_map`` up to levels(index + 1) and is the
    constant levels(index + 1) (or the identity) above it."""
    if beyond not in ("constant", "identity"):
        raise FixtureInputError("beyond must be 'constant' or 'identity'")
    prefix = [float(levels(index)) for index in range(1, 34)]
    increasing = all(later >= earlier for earlier, later in zip(prefix, prefix[1:]))
    if not increasing or not all(0 <= level <= 1 for level in prefix):
        raise FixtureInputError("truncation levels must be increasing in [0, 1]")

    def factory(index: int) -> Callable[[np.ndarray], np.ndarray]:
        level = float(levels(index + 1))

        def fn(points: np.ndarray) -> np.ndarray:
            low = points <= level
            above = np.full_like(points, level) if beyond == "constant" else points
            return np.where(low, base_map(np.minimum(points, level)), above)

        return fn

    lip = None if lipschitz is None else (lambda index, _lip=float(lipschitz): _lip)
    budget = None if lipschitz is None else precision_budget(float(lipschitz))
    return SystemSequence(factory, "truncated", budget, lip, (), False, {"beyond": beyond})


def rotation(alpha: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda points: np.mod(points + alpha, 1.0)


def rotation_sequence(angles: Callable[[int], float]) -> SystemSequence:
    return SystemSequence(lambda index: rotation(float(angles(index))), "explicit", None,
                          lambda index: 1.0, (), True, {"rotation": True})


@dataclass(frozen=True, eq=False)
class Fixture:
    """A named system on a space with defaults for estimation.

    ``known_mdim`` is the attached ground-truth value (``math.inf`` for the
    infinite flag, None when unknown).  ``table_source`` builds exact count
    tables for fixtures that are counted combinatorially rather than on nets.
    """

    fid: str
    system: SystemSequence
    space: MetricSpace
    known_mdim: float | None
    ladder: tuple[float, ...]
    horizons: tuple[int, ...]
    nonwandering: MetricSpace | None = None
    block_map: BlockIntervalMap | None = None
    table_source: Callable[..., Any] | None = None
    extras: Mapping[str, Any] = field(default_factory=dict)

    def net(self, horizon: int, delta: float, system: SystemSequence | None = None,
            space: MetricSpace | None = None) -> Sample:
        return bowen_net(system or self.system, space or self.space, horizon, delta)

    def with_system(self, system: SystemSequence, fid: str | None = None) -> "Fixture":
        return replace(self, system=system, fid=fid or self.fid)

    def restricted(self, space: MetricSpace, fid: str | None = None) -> "Fixture":
        return replace(self, space=space, fid=fid or f"{self.fid}|{space.name}")


_INTERVAL_LADDER = geometric_ladder(0.25, 4)


def _interval_fixture(fid: str, fn: Callable[[np.ndarray], np.ndarray], lip: float,
                      known: float | None, nonwandering: MetricSpace | None = None,
                      regions: tuple[Region, ...] = (), invertible: bool = False) -> Fixture:
    system = autonomous(fn, lipschitz=lip, regions=regions, invertible=invertible, name=fid)
    return Fixture(fid, system, interval_space(), known, _INTERVAL_LADDER, (1, 2, 3, 4, 5),
                   nonwandering)


def _block_fixture(bm: BlockIntervalMap, ladder_count: int, nonwandering=None,
                   max_horizon: int = 6) -> Fixture:
    system = bm.system()
    top = 1 + (system.horizon_budget or 5)
    horizons = tuple(range(1, min(top, max_horizon) + 1))
    return Fixture(bm.name, system, bm.space(), bm.known_mdim, bm.ladder[:ladder_count],
                   horizons, nonwandering, bm)


def _words_table_source(offsets: Callable[[int], list[int]]):
    """Exact separated and cover counts for shift powers on binary words."""

    def source(ladder: Sequence[float], horizons: Sequence[int]) -> dict[str, dict]:
        sep, cov = {}, {}
        for horizon in horizons:
            for eps in ladder:
                key = (horizon, float(eps))
                sep[key] = oracle.word_shift_count(offsets(horizon), eps, True).value
                cov[key] = oracle.word_shift_count(offsets(horizon), eps, False).value
        return {"separated:exact": sep, "cover:exact": cov}

    return source


def _cat_table_source(matrix, shift: int = 0):
    def source(ladder: Sequence[float], horizons: Sequence[int]) -> dict[str, dict]:
        # the fixed-point bound is stated at radius 1/4 and carries over to
        # smaller radii because separated counts grow as the radius shrinks
        if any(eps > 0.25 for eps in ladder):
            raise FixtureInputError("the fixed-point bound needs radii <= 1/4")
        counts = {horizon: oracle.cat_power_sep_lower(matrix, horizon + shift).value
                  for horizon in horizons}
        return {"separated:lower": {(horizon, float(eps)): counts[horizon]
                                    for horizon in horizons for eps in ladder}}

    return source


def _shift_table_source(base_name: str):
    """Oracle bounds for the one-sided shift over an interval-type base."""

    def source(ladder: Sequence[float], horizons: Sequence[int]) -> dict[str, dict]:
        lower, upper = {}, {}
        for horizon in horizons:
            for eps in ladder:
                key = (horizon, float(eps))
                if base_name == "interval":
                    low, high = oracle.interval_shift_bounds(eps, horizon)
                    lower[key], upper[key] = low.value, high.value
                else:
                    count = 1 if base_name == "point" else oracle.kakeya_A_cover(eps)
                    # a maximal eps-separated set of the base has at least N(eps)
                    # points and its words stay eps-separated
                    lower[key] = oracle.shift_counts(count, horizon, 0, "one")[0].value
        tables = {"cover:lower": lower}
        if upper:
            tables["cover:upper"] = upper
        return tables

    return source


def _parse_float(text: str, fid: str) -> float:
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise UnknownFixtureError(f"bad parameter in fixture id {fid!r}") from None


_DAMPED_LADDER = geometric_ladder(1.0 / 40.0, 3)
_DAMPED_PRESETS = ("phi_a_<a>", "tent", "identity", "example33", "constant")


def _preset(name: str, blocks: int | None) -> Fixture:
    if name.startswith("phi_a_"):
        return get_fixture("phi_a:" + name[len("phi_a_"):], blocks=blocks)
    return get_fixture(name, blocks=blocks)


def get_fixture(fid: str, blocks: int | None = None) -> Fixture:
    """Look up a fixture by catalogue id (see ``fixture_ids``)."""
    head, _, arg = fid.partition(":")
    if fid == "constant":
        return _interval_fixture(fid, lambda pts: np.full_like(pts, 0.5), 0.0, 0.0,
                                 finite_subset_space([0.5]))
    if fid == "identity":
        space = interval_space()
        fx = _interval_fixture(fid, lambda pts: pts.copy(), 1.0, 0.0, space, invertible=True)
        return fx
    if fid == "tent":
        region = Region(0.0, 1.0, lambda index: 3.0, lambda index: 3, "tent")
        fn = lambda pts: tent_power(pts, 1)  # noqa: E731
        return _interval_fixture(fid, fn, 3.0, 0.0, None, (region,))
    if fid == "square":
        return _interval_fixture(fid, lambda pts: pts * pts, 2.0, 0.0,
                                 finite_subset_space([0.0, 1.0]))
    if fid == "example33":
        bm = build_example33(blocks or 3)
        return _block_fixture(bm, min(3, bm.block_count), max_horizon=4)
    if head == "phi_a" and arg:
        target = _parse_float(arg, fid)
        bm = build_phi_a(target, blocks or 4)
        return _block_fixture(bm, min(4, bm.block_count), max_horizon=4)
    if head == "rotation" and arg:
        alpha = _parse_float(arg, fid)
        system = SystemSequence(lambda index: rotation(alpha), "autonomous", None,
                                lambda index: 1.0,
                                (), True, {"alpha": alpha})
        return Fixture(fid, system, circle_space(), 0.0, geometric_ladder(0.125, 4),
                       (1, 2, 3, 4), circle_space())
    if fid == "rotations":
        golden = (math.sqrt(5.0) - 1.0) / 2.0
        system = rotation_sequence(lambda index: math.fmod(golden * index * index, 1.0))
        return Fixture(fid, system, circle_space(), 0.0, geometric_ladder(0.125, 4),
                       (1, 2, 3, 4), circle_space())
    if head == "shift":
        return _shift_fixture(fid, arg)
    if fid == "binary_shift":
        system = build_binary_shift()
        return Fixture(fid, system, word_space(16, "first_diff"), 0.0,
                       geometric_ladder(0.25, 7), (1, 2, 3, 4, 5, 6),
                       table_source=_words_table_source(oracle.binary_shift_offsets))
    if fid == "binary_power_shift":
        system = build_binary_power_shift()
        return Fixture(fid, system, word_space(16, "first_diff"), math.inf,
                       geometric_ladder(0.25, 7), (1, 2, 3, 4, 5, 6, 7, 8),
                       table_source=_words_table_source(oracle.binary_power_shift_offsets))
    if head == "cat_power" and arg:
        trace = int(_parse_float(arg, fid))
        tor = build_toral_power_sequence(cat_matrix(trace))
        return Fixture(fid, tor.system(), torus_space(), math.inf,
                       geometric_ladder(0.25, 4), (1, 2, 3, 4, 5, 6),
                       table_source=_cat_table_source(tor.matrix),
                       extras={"toral": tor, "shifted_source": partial(_cat_table_source,
                                                                        tor.matrix)})
    if head == "damped" and arg:
        # two blocks keep the damped Lipschitz growth small enough for lattice nets
        base = _preset(arg, blocks or (2 if arg.startswith("phi_a_") else None))
        system = damp_sequence(base.system, lambda index: index / (index + 1.0))
        # damping shrinks images, so the informative scales are coarse ones
        ladder = base.ladder if len(base.ladder) >= 3 else _DAMPED_LADDER
        return replace(base, fid=fid, system=system, known_mdim=0.0, ladder=ladder,
                       nonwandering=point_space(0.0), table_source=None)
    if head == "truncated" and arg:
        base = _preset(arg, blocks)
        if base.block_map is None:
            raise UnknownFixtureError(f"truncated fixtures need a block map preset, got {arg!r}")
        bm = base.block_map
        bounds = bm.boundaries

        def level(index: int) -> float:
            return float(bounds[min(index, bm.block_count)])

        system = truncate_sequence(bm.as_map(), level, float(3 ** max(bm.exponents)))
        return replace(base, fid=fid, system=system, known_mdim=0.0)
    raise UnknownFixtureError(f"unknown fixture {fid!r}; known ids: {', '.join(fixture_ids())}")


def _shift_fixture(fid: str, arg: str) -> Fixture:
    if arg == "interval":
        base = interval_space()
    elif arg == "kakeya_A":
        base = harmonic_set_space()
    elif arg == "point":
        base = point_space()
    else:
        raise UnknownFixtureError(f"unknown shift base {arg!r}")
    ladder = tuple(2.0 ** -power for power in range(3, 8))
    window = oracle.interval_shift_window(ladder[-1])
    shift = build_product_shift(base, "one", window)
    return Fixture(fid, shift.system(), shift.metric_space((0.0, 1.0)), base.box_dim, ladder,
                   (1, 2, 3, 4, 5, 6), table_source=_shift_table_source(arg),
                   extras={"shift": shift, "base": base})


def fixture_ids() -> list[str]:
    return ["constant", "identity", "tent", "square", "example33", "phi_a:<a>",
            "rotation:<alpha>", "rotations", "shift:interval", "shift:kakeya_A", "shift:point",
            "binary_shift", "binary_power_shift", "cat_power:<trace>",
            "damped:<preset>", "truncated:<preset>"]
