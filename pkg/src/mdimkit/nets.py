"""Finite samples that are delta-nets for a Bowen metric.

A sample at resolution delta and horizon h guarantees that every point of the
space lies within delta of some sample point in the metric d_h.  Interval
systems that declare forward-invariant regions get per-region nets:

* a region shorter than delta contributes a single point;
* a tent-power region whose branches are narrow compared with the cell size
  gets one point per cell sequence (every sequence is realised);
* otherwise a lattice whose spacing absorbs the region's Lipschitz growth is
  thinned to one representative per cell of side delta/2 in orbit space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import MetricSpace, Region, SystemSequence
from .errors import ResolutionError

__all__ = ["Sample", "space_net", "bowen_net", "thin_by_cells", "DEFAULT_LATTICE_LIMIT"]

DEFAULT_LATTICE_LIMIT = 40_000_000
# cap on points a net may keep; orbit caches beyond this exhaust memory
KEEP_LIMIT = 6_000_000
_CHUNK = 1_000_000


@dataclass(frozen=True, eq=False)
class Sample:
    """Sample points with the resolution and horizon they certify.

    ``resolution`` is None when the caller supplied raw points without a net
    guarantee.  ``orbits`` caches the first ``horizon`` iterates.
    """

    points: np.ndarray
    resolution: float | None
    horizon: int
    orbits: np.ndarray | None = None
    method: str = "lattice"

    @property
    def size(self) -> int:
        return int(self.points.shape[0])


def space_net(space: MetricSpace, delta: float) -> Sample:
    """A plain delta-net of the space (horizon 1)."""
    pts = space.sample(delta)
    return Sample(pts, float(delta), 1, pts[:, None, :].copy(), "lattice")


def thin_by_cells(orbits: np.ndarray, cell: float, origin: float = 0.0) -> np.ndarray:
    """Indices of the first sample in each occupied orbit-space cell (sorted)."""
    codes = np.floor((orbits.reshape(orbits.shape[0], -1) - origin) / cell).astype(np.int64)
    codes = np.ascontiguousarray(codes)
    view = codes.view(np.dtype((np.void, codes.dtype.itemsize * codes.shape[1])))
    _, first = np.unique(view.ravel(), return_index=True)
    return np.sort(first)


def _all_points(space: MetricSpace) -> np.ndarray:
    """Every point of a finite space (its sampler at resolution zero)."""
    return space.sampler(0.0)


def _lattice_net(system: SystemSequence, lo: float, hi: float, lipschitz: float, horizon: int,
                 delta: float, cell: float, limit: int) -> tuple[np.ndarray, np.ndarray]:
    spacing = delta / lipschitz
    steps = max(1, math.ceil((hi - lo) / spacing))
    if steps + 1 > limit:
        raise ResolutionError(
            f"Bowen net on [{lo:.3g},{hi:.3g}] at horizon {horizon} needs {steps + 1} lattice "
            f"points (limit {limit})"
        )
    keep_pts, keep_orb = [], []
    kept = 0
    for first in range(0, steps + 1, _CHUNK):
        idx = np.arange(first, min(steps + 1, first + _CHUNK), dtype=np.float64)
        pts = np.minimum(lo + idx * ((hi - lo) / steps), hi).reshape(-1, 1)
        orb = system.orbit(pts, horizon)
        sel = thin_by_cells(orb, cell, lo)
        keep_pts.append(pts[sel])
        keep_orb.append(orb[sel])
        kept += sel.size
        if kept > KEEP_LIMIT:
            raise ResolutionError(
                f"Bowen net on [{lo:.3g},{hi:.3g}] at horizon {horizon} keeps over "
                f"{KEEP_LIMIT} points")
    pts = np.concatenate(keep_pts)
    orb = np.concatenate(keep_orb)
    if len(keep_pts) > 1:
        sel = thin_by_cells(orb, cell, lo)
        pts, orb = pts[sel], orb[sel]
    return pts, orb


def _sequence_net(system: SystemSequence, region: Region, horizon: int, cells: int,
                  branch_counts: list[int]) -> tuple[np.ndarray, np.ndarray]:
    """One witness per cell sequence of a tent-power region (all are realised)."""
    grids = np.meshgrid(*([np.arange(cells)] * horizon), indexing="ij")
    seq = np.column_stack([grid.ravel() for grid in grids])
    unit = (seq[:, horizon - 1] + 0.5) / cells
    # walk backwards choosing, at each step, a branch whose image covers the next cell
    for step in range(horizon - 2, -1, -1):
        branches = branch_counts[step]
        branch = np.ceil(seq[:, step] * branches / cells)
        unit = (branch + np.where(branch % 2 == 0, unit, 1.0 - unit)) / branches
    pts = np.sort(region.lo + region.length * unit).reshape(-1, 1)
    return pts, system.orbit(pts, horizon)


def _region_net(system: SystemSequence, region: Region, horizon: int, delta: float,
                limit: int) -> tuple[np.ndarray, np.ndarray, str]:
    if region.length <= delta:
        pts = np.array([[region.lo]])
        return pts, system.orbit(pts, horizon), "point"
    cell = delta / 2.0
    if region.branches is not None and horizon > 1:
        branch_counts = [int(region.branches(index)) for index in range(1, horizon)]
        cells = math.ceil(region.length / cell)
        if 2 * cells <= min(branch_counts) and cells ** horizon <= min(limit, KEEP_LIMIT):
            pts, orb = _sequence_net(system, region, horizon, cells, branch_counts)
            return pts, orb, "sequences"
    lip = max(1.0, math.prod(region.lipschitz(index) for index in range(1, horizon)))
    pts, orb = _lattice_net(system, region.lo, region.hi, lip, horizon, delta, cell, limit)
    return pts, orb, "lattice"


def bowen_net(system: SystemSequence, space: MetricSpace, horizon: int, delta: float,
              limit: int = DEFAULT_LATTICE_LIMIT) -> Sample:
    """A delta-net of the space in the Bowen metric d_horizon, with cached orbits."""
    system.require_horizon(horizon)
    if space.finite:
        pts = _all_points(space)
        return Sample(pts, 0.0, horizon, system.orbit(pts, horizon), "enumeration")
    if space.metric in ("weighted", "first_diff"):
        pts = space.sample(delta)
        return Sample(pts, 0.0, horizon, system.orbit(pts, horizon), "enumeration")
    if horizon == 1:
        pts = space.sample(delta)
        return Sample(pts, float(delta), 1, pts[:, None, :].copy(), "lattice")
    regions = [region for region in system.regions
               if region.lo >= space.bounds[0] - 1e-15 and region.hi <= space.bounds[1] + 1e-15]
    if regions and space.dim == 1 and space.metric == "euclid":
        parts = [_region_net(system, region, horizon, delta, limit)
                 for region in sorted(regions, key=lambda region: region.lo)]
        pts = np.concatenate([part[0] for part in parts])
        orb = np.concatenate([part[1] for part in parts])
        order = np.argsort(pts[:, 0], kind="stable")
        methods = sorted({part[2] for part in parts})
        return Sample(pts[order], float(delta), horizon, orb[order], "+".join(methods))
    if system.lipschitz is None:
        raise ResolutionError(f"{system.kind} sequence has no Lipschitz bound for a Bowen net")
    lip = max(1.0, system.lipschitz_product(horizon - 1))
    factor = math.sqrt(space.dim)
    spacing = delta / (lip * factor)
    total = math.ceil(space.diameter / spacing + 1) ** space.dim if space.diameter > 0 else 1
    if total > limit:
        raise ResolutionError(f"Bowen net at horizon {horizon} needs about {total} lattice points")
    pts = space.sample(spacing)
    orb = system.orbit(pts, horizon)
    cell = delta / (2.0 * factor)
    sel = thin_by_cells(orb, cell, 0.0)
    return Sample(pts[sel], float(delta), horizon, orb[sel], "lattice")
