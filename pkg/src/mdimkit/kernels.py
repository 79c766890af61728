"""Compiled counting kernels over cached orbit segments.

All kernels take ``orbits`` of shape (N, H, M): N sample points, H iterates,
M coordinates.  The Bowen distance of two sample points is the maximum of the
ground distance over the H iterates.  Candidate pairs are pruned with buckets
on coordinate 0 of a chosen key iterate and, when the sample is sorted, a
window on coordinate 0 of the starting point; both prunings rely on
``dist >= key_scale * |coordinate-0 difference|``.
"""

from __future__ import annotations

import heapq
import math

import numpy as np
from numba import njit

__all__ = [
    "KernelSpec",
    "greedy_separated",
    "neighbor_lists",
    "sequential_cover",
    "sequential_cover_direct",
    "greedy_set_cover",
    "pair_bowen_distance",
]

_TIE = 1e-12


class KernelSpec:
    """Metric parameters passed to the kernels."""

    __slots__ = ("code", "weights", "period", "wrap", "key_scale")

    def __init__(self, code: int, weights: np.ndarray, period: float, wrap: bool,
                 key_scale: float) -> None:
        self.code = code
        self.weights = np.ascontiguousarray(weights, dtype=np.float64)
        self.period = float(period)
        self.wrap = bool(wrap)
        self.key_scale = float(key_scale)

    @classmethod
    def for_space(cls, space) -> "KernelSpec":
        weights = space.weight_array
        scale = float(weights[0]) if space.metric == "weighted" else 1.0
        return cls(space.metric_code, weights, space.period, space.metric == "circle", scale)


@njit(cache=True)
def _ground(orb, row, other, step, code, weights, period):
    coords = orb.shape[2]
    if code == 0:
        if coords == 1:
            return abs(orb[row, step, 0] - orb[other, step, 0])
        total = 0.0
        for coord in range(coords):
            diff = orb[row, step, coord] - orb[other, step, coord]
            total += diff * diff
        return math.sqrt(total)
    if code == 1:
        total = 0.0
        for coord in range(coords):
            diff = abs(orb[row, step, coord] - orb[other, step, coord]) % period
            if period - diff < diff:
                diff = period - diff
            total += diff * diff
        return math.sqrt(total)
    if code == 2:
        total = 0.0
        for coord in range(coords):
            total += weights[coord] * abs(orb[row, step, coord] - orb[other, step, coord])
        return total
    for coord in range(coords):
        if orb[row, step, coord] != orb[other, step, coord]:
            return 0.5 ** coord
    return 0.0


@njit(cache=True)
def _bowen(orb, row, other, code, weights, period, stop):
    """Bowen distance, returning early once it exceeds ``stop``."""
    best = 0.0
    for step in range(orb.shape[1] - 1, -1, -1):
        dist = _ground(orb, row, other, step, code, weights, period)
        if dist > best:
            best = dist
            if best > stop:
                return best
    return best


@njit(cache=True)
def _key_diff(first, second, wrap, period):
    diff = abs(first - second)
    if wrap:
        diff = diff % period
        if period - diff < diff:
            diff = period - diff
    return diff


@njit(cache=True)
def _bucket_layout(key, width, wrap, period, n_cap):
    if wrap:
        lo = 0.0
        span = period
    else:
        lo = key.min()
        span = key.max() - lo
    if width <= 0.0 or span <= 0.0:
        return lo, span + 1.0, 1
    count = int(span / width) + 1
    if count > n_cap:
        count = n_cap
    if wrap:
        # every bucket must be at least `width` wide so neighbours suffice
        while count > 1 and period / count < width:
            count -= 1
        return lo, period / count, count
    return lo, max(width, span / count) * (1.0 + 1e-12), count


@njit(cache=True)
def _bucket_of(value, lo, bucket_width, count, wrap, period):
    if wrap:
        value = value % period
    bucket = int((value - lo) / bucket_width)
    if bucket < 0:
        bucket = 0
    if bucket >= count:
        bucket = count - 1
    return bucket


@njit(cache=True)
def _neighbour_bucket(bucket, offset, count, wrap):
    """Bucket ``bucket + offset`` or -1 when it does not exist (or repeats)."""
    probe = bucket + offset
    if wrap:
        if count < 3 and offset != 0:
            if count == 1 or offset == 1:
                return -1
        return probe % count
    if probe < 0 or probe >= count:
        return -1
    return probe


@njit(cache=True)
def _greedy_scan(orb, thr, closed, code, weights, period, wrap, kscale, use_xwin, key_step):
    """Accept a point unless an accepted one is within ``thr`` (closed or open)."""
    size = orb.shape[0]
    accepted = np.zeros(size, dtype=np.bool_)
    if size == 0:
        return 0, accepted
    key = orb[:, key_step, 0].copy()
    width = thr / kscale if kscale > 0 else np.inf
    lo, bucket_width, count = _bucket_layout(key, width, wrap, period, max(size, 1))
    head = np.full(count, -1, dtype=np.int64)
    prev = np.full(size, -1, dtype=np.int64)
    total = 0
    for row in range(size):
        bucket = _bucket_of(key[row], lo, bucket_width, count, wrap, period)
        ok = True
        for offset in range(-1, 2):
            probe = _neighbour_bucket(bucket, offset, count, wrap)
            if probe < 0:
                continue
            node = head[probe]
            while node >= 0:
                if use_xwin and kscale * (orb[row, 0, 0] - orb[node, 0, 0]) > thr:
                    break
                if kscale * _key_diff(key[row], key[node], wrap, period) <= thr:
                    dist = _bowen(orb, row, node, code, weights, period, thr)
                    if dist < thr or (closed and dist == thr):
                        ok = False
                        break
                node = prev[node]
            if not ok:
                break
        if ok:
            prev[row] = head[bucket]
            head[bucket] = row
            accepted[row] = True
            total += 1
    return total, accepted


def greedy_separated(orbits: np.ndarray, eps: float, spec: KernelSpec,
                     sorted_start: bool | None = None) -> tuple[int, np.ndarray]:
    """Greedy maximal eps-separated subset in sample order.

    A point is accepted iff its Bowen distance to every accepted point
    exceeds ``eps``.  Returns the count and the acceptance mask.
    """
    return _greedy_accept(orbits, float(eps) + _TIE, True, spec, sorted_start)


def _greedy_accept(orbits: np.ndarray, thr: float, closed: bool, spec: KernelSpec,
                   sorted_start: bool | None = None) -> tuple[int, np.ndarray]:
    orb = np.ascontiguousarray(orbits, dtype=np.float64)
    if sorted_start is None:
        sorted_start = bool(orb.shape[0] < 2 or np.all(np.diff(orb[:, 0, 0]) >= 0))
    use_xwin = bool(sorted_start and not spec.wrap)
    key_step = _key_iterate(orb, thr / max(spec.key_scale, 1e-300))
    total, mask = _greedy_scan(orb, thr, closed, spec.code, spec.weights, spec.period,
                               spec.wrap, spec.key_scale, use_xwin, key_step)
    return int(total), mask


def _key_iterate(orb: np.ndarray, width: float) -> int:
    """The iterate whose coordinate 0 occupies the most buckets of the given width."""
    if orb.shape[0] < 2 or orb.shape[1] == 1 or not np.isfinite(width) or width <= 0:
        return orb.shape[1] - 1
    best_step, best = orb.shape[1] - 1, -1
    for step in range(orb.shape[1] - 1, -1, -1):
        occupied = np.unique(np.floor(orb[:, step, 0] / width)).size
        if occupied > best:
            best_step, best = step, occupied
    return best_step


@njit(cache=True)
def _neighbors(orb, radius, closed, code, weights, period, wrap, kscale, use_xwin, key_step,
               fill, indptr, indices):
    size = orb.shape[0]
    if closed:
        thr = radius + _TIE
    else:
        thr = radius - _TIE
    key = orb[:, key_step, 0].copy()
    width = radius / kscale if kscale > 0 else np.inf
    lo, bucket_width, count = _bucket_layout(key, width * (1.0 + 1e-9) + _TIE, wrap, period,
                                             max(size, 1))
    buckets = np.empty(size, dtype=np.int64)
    sizes = np.zeros(count + 1, dtype=np.int64)
    for row in range(size):
        buckets[row] = _bucket_of(key[row], lo, bucket_width, count, wrap, period)
        sizes[buckets[row] + 1] += 1
    for bucket in range(count):
        sizes[bucket + 1] += sizes[bucket]
    # counting sort keeps sample order (hence start-coordinate order) per bucket
    order = np.empty(size, dtype=np.int64)
    cursor = sizes[:-1].copy()
    for row in range(size):
        bucket = buckets[row]
        order[cursor[bucket]] = row
        cursor[bucket] += 1
    start = np.empty(size, dtype=np.float64)
    for slot in range(size):
        start[slot] = orb[order[slot], 0, 0]
    reach = (radius + _TIE) / kscale if kscale > 0 else np.inf
    degree = np.zeros(size, dtype=np.int64)
    for row in range(size):
        pos = indptr[row] if fill else 0
        for offset in range(-1, 2):
            probe = _neighbour_bucket(buckets[row], offset, count, wrap)
            if probe < 0:
                continue
            first = sizes[probe]
            last = sizes[probe + 1]
            if use_xwin:
                first = first + np.searchsorted(start[first:last], orb[row, 0, 0] - reach)
                last = sizes[probe] + np.searchsorted(start[sizes[probe]:last],
                                                      orb[row, 0, 0] + reach, side="right")
            for slot in range(first, last):
                other = order[slot]
                key_gap = kscale * _key_diff(key[row], key[other], wrap, period)
                if (closed and key_gap > thr) or ((not closed) and key_gap >= thr):
                    continue
                dist = _bowen(orb, row, other, code, weights, period, thr)
                if (closed and dist <= thr) or ((not closed) and dist < thr):
                    if fill:
                        indices[pos] = other
                        pos += 1
                    degree[row] += 1
    return degree


def neighbor_lists(orbits: np.ndarray, radius: float, spec: KernelSpec,
                   closed: bool) -> tuple[np.ndarray, np.ndarray]:
    """CSR adjacency of Bowen balls: a point lists every sample point at
    distance below ``radius`` (open) or at most ``radius`` (closed), itself
    included."""
    orb = np.ascontiguousarray(orbits, dtype=np.float64)
    size = orb.shape[0]
    use_xwin = bool(not spec.wrap and (size < 2 or np.all(np.diff(orb[:, 0, 0]) >= 0)))
    key_step = _key_iterate(orb, float(radius) / max(spec.key_scale, 1e-300))
    args = (orb, float(radius), closed, spec.code, spec.weights, spec.period, spec.wrap,
            spec.key_scale, use_xwin, key_step)
    degree = _neighbors(*args, False, np.zeros(size + 1, dtype=np.int64),
                        np.zeros(0, dtype=np.int64))
    indptr = np.zeros(size + 1, dtype=np.int64)
    np.cumsum(degree, out=indptr[1:])
    indices = np.empty(int(indptr[-1]), dtype=np.int64)
    _neighbors(*args, True, indptr, indices)
    _sort_rows(indptr, indices)
    return indptr, indices


@njit(cache=True)
def _sort_rows(indptr, indices):
    for row in range(indptr.shape[0] - 1):
        indices[indptr[row]:indptr[row + 1]].sort()


@njit(cache=True)
def _sequential_cover(indptr, indices):
    size = indptr.shape[0] - 1
    covered = np.zeros(size, dtype=np.bool_)
    total = 0
    for row in range(size):
        if covered[row]:
            continue
        total += 1
        for slot in range(indptr[row], indptr[row + 1]):
            covered[indices[slot]] = True
    return total


def sequential_cover(indptr: np.ndarray, indices: np.ndarray) -> int:
    """Scan in sample order; every still-uncovered point opens a new ball."""
    return int(_sequential_cover(indptr, indices))


def sequential_cover_direct(orbits: np.ndarray, radius: float, spec: KernelSpec) -> int:
    """``sequential_cover`` of open balls without building the neighbour graph.

    A point opens a ball exactly when no earlier centre lies within ``radius``,
    so this is the greedy acceptance scan with an open-ball rejection test.
    """
    return _greedy_accept(orbits, float(radius) - _TIE, False, spec)[0]


def greedy_set_cover(indptr: np.ndarray, indices: np.ndarray) -> tuple[int, list[int]]:
    """Classic greedy set cover: repeatedly take the ball covering the most
    uncovered points, lowest index first on ties (lazy-evaluated heap)."""
    size = indptr.shape[0] - 1
    uncovered = np.ones(size, dtype=bool)
    remaining = size
    heap = [(-int(indptr[row + 1] - indptr[row]), row) for row in range(size)]
    heapq.heapify(heap)
    centers: list[int] = []
    while remaining > 0 and heap:
        neg_gain, row = heapq.heappop(heap)
        members = indices[indptr[row]:indptr[row + 1]]
        gain = int(np.count_nonzero(uncovered[members]))
        if gain == 0:
            continue
        if gain < -neg_gain:
            heapq.heappush(heap, (-gain, row))
            continue
        centers.append(row)
        uncovered[members] = False
        remaining -= gain
    return len(centers), centers


@njit(cache=True)
def _pair(orb, row, other, code, weights, period):
    return _bowen(orb, row, other, code, weights, period, np.inf)


def pair_bowen_distance(orbits: np.ndarray, row: int, other: int, spec: KernelSpec) -> float:
    """Bowen distance between two rows of an orbit array."""
    orb = np.ascontiguousarray(orbits, dtype=np.float64)
    return float(_pair(orb, int(row), int(other), spec.code, spec.weights, spec.period))
