"""Exact closed-form counts for the fixture families.

All counts are Python integers (arbitrary precision); radii that enter the
formulas exactly are converted to ``Fraction`` first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

from .errors import FixtureInputError, UnsupportedParameterError

__all__ = [
    "OracleBound",
    "exact_fraction",
    "phi_a_exponent",
    "phi_a_block_length",
    "phi_a_tail_index",
    "phi_a_cover_bounds",
    "phi_a_rate_ladder",
    "example33_sep_lower",
    "shift_counts",
    "interval_shift_window",
    "interval_shift_bounds",
    "toral_fix_count",
    "toral_fix_recurrence_holds",
    "kakeya_A_cover",
    "visible_depth",
    "word_shift_count",
    "binary_shift_offsets",
    "binary_power_shift_offsets",
    "binary_power_shift_claimed_lower",
    "cat_power_sep_lower",
]

_KINDS = ("lower", "upper", "exact")
_QUANTITIES = ("sep", "span", "cov", "N", "Fix")
Matrix = Sequence[Sequence[int]]


@dataclass(frozen=True)
class OracleBound:
    """An exact integer bound on a count, with the parameters it refers to."""

    kind: str
    quantity: str
    value: int
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"bound kind must be one of {_KINDS}")
        if self.quantity not in _QUANTITIES:
            raise ValueError(f"quantity must be one of {_QUANTITIES}")
        if not isinstance(self.value, int) or self.value < 0:
            raise ValueError("bound values are non-negative integers")

    def as_record(self) -> dict[str, Any]:
        params = {key: (str(val) if isinstance(val, (Fraction, int)) and not isinstance(val, bool)
                        else val) for key, val in self.params.items()}
        return {"kind": self.kind, "quantity": self.quantity, "value": str(self.value),
                "params": params}


def exact_fraction(value: float | Fraction | str) -> Fraction:
    """Exact rational for a decimal-looking float (0.1 -> 1/10)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value)
    return Fraction(repr(float(value)))


def phi_a_exponent(target_dim: float | Fraction) -> int:
    """The integer reciprocal of the target dimension; other targets have no oracle."""
    frac = exact_fraction(target_dim)
    if not 0 < frac < 1:
        raise FixtureInputError("the target dimension must lie in (0, 1)")
    recip = 1 / frac
    if recip.denominator != 1:
        rounded = round(recip)
        if abs(float(recip) - rounded) > 1e-9:
            raise UnsupportedParameterError(
                f"reciprocal {float(recip):.6g} of the target dimension is not an integer")
        return int(rounded)
    return int(recip)


def phi_a_block_length(target_dim: float | Fraction, block: int) -> Fraction:
    """Length of block ``block``: 3^(-exponent*block) / (3^exponent - 1)."""
    exponent = phi_a_exponent(target_dim)
    return Fraction(1, (3 ** exponent - 1) * 3 ** (exponent * block))


def phi_a_tail_index(target_dim: float | Fraction, block: int) -> int:
    """First block index whose tail (total length from there on) is below the
    length of ``block``.

    Closed form: the tail from index t equals length(t) * 3^e / (3^e - 1), so
    the condition reads 3^(e (block - t)) * 3^e < 3^e - 1 with e the exponent.
    Cross-checked by direct summation.
    """
    exponent = phi_a_exponent(target_dim)
    base = 3 ** exponent
    tail = block
    while Fraction(base, 3 ** (exponent * (tail - block))) >= base - 1:
        tail += 1
    radius = phi_a_block_length(target_dim, block)

    def tail_sum(first: int) -> Fraction:
        total = sum((phi_a_block_length(target_dim, idx) for idx in range(first, first + 200)),
                    Fraction(0))
        return total + phi_a_block_length(target_dim, first + 200) * Fraction(base, base - 1)

    if not tail_sum(tail) < radius:
        raise AssertionError("tail index closed form disagrees with summation")
    if tail > block and tail_sum(tail - 1) < radius:
        raise AssertionError("tail index is not the first admissible index")
    return tail


def phi_a_cover_bounds(target_dim: float | Fraction, block: int,
                       depth: int) -> tuple[OracleBound, OracleBound]:
    """Bounds on the cover count at horizon depth+1 and radius equal to the
    length of ``block``.

    lower = 3^(block*depth): the depth-level subintervals of the block, one
    per symbol word.  upper = (pieces before the block + blocks up to the tail
    index + 1) * 3^(block*(depth+1)): earlier blocks split into pieces of the
    radius, later blocks cost one each, the tail one more, all refined by the
    worst subdivision count.
    """
    if block < 1 or depth < 1:
        raise FixtureInputError("block and depth must be positive")
    exponent = phi_a_exponent(target_dim)
    tail = phi_a_tail_index(target_dim, block)
    radius = phi_a_block_length(target_dim, block)
    head = sum(math.ceil(phi_a_block_length(target_dim, idx) / radius) for idx in range(1, block))
    lower = 3 ** (block * depth)
    upper = (head + tail - block + 1) * 3 ** (block * (depth + 1))
    params = {"target_dim": str(exact_fraction(target_dim)), "exponent": exponent,
              "block": block, "depth": depth, "horizon": depth + 1, "eps": float(radius),
              "eps_exact": str(radius), "tail_index": tail}
    return (OracleBound("lower", "cov", lower, dict(params)),
            OracleBound("upper", "cov", upper, dict(params)))


def phi_a_rate_ladder(target_dim: float | Fraction,
                      blocks: Sequence[int]) -> list[tuple[float, float]]:
    """(radius, block * log 3) pairs: the exact growth rate of the cover bounds."""
    return [(float(phi_a_block_length(target_dim, block)), block * math.log(3.0))
            for block in blocks]


def example33_sep_lower(block: int, depth: int) -> OracleBound:
    """ceil((3^block / 2)^depth) separated points at horizon block + depth and
    radius length(block) / 3^block."""
    if block < 1 or depth < 1:
        raise FixtureInputError("block and depth must be positive")
    value = -(-(3 ** (block * depth)) // (2 ** depth))
    log_value = math.log(value)
    params = {"block": block, "depth": depth, "horizon": block + depth,
              "rate_per_depth": log_value / depth, "rate_per_horizon": log_value / (block + depth),
              "limit_rate": math.log(3 ** block / 2)}
    return OracleBound("lower", "sep", value, params)


def shift_counts(base_count: int, horizon: int, window: int,
                 sided: str = "two") -> tuple[OracleBound, OracleBound]:
    """Product-structure bounds for the shift from a base count.

    Two-sided: separated count at eps >= base_count^(horizon + 2 window + 1)
    with base_count = N(eps), and the cover count at 4 eps is at most the same
    power.  One-sided uses the exponent horizon + window.
    """
    if base_count < 1 or horizon < 1 or window < 0:
        raise FixtureInputError("need base_count >= 1, horizon >= 1, window >= 0")
    if sided not in ("one", "two"):
        raise FixtureInputError("sided must be 'one' or 'two'")
    exponent = horizon + 2 * window + 1 if sided == "two" else horizon + window
    params = {"base_count": base_count, "horizon": horizon, "window": window, "sided": sided,
              "exponent": exponent}
    return (OracleBound("lower", "sep", base_count ** exponent, dict(params)),
            OracleBound("upper", "cov", base_count ** exponent, dict(params)))


def interval_shift_window(eps: float | Fraction) -> int:
    """Window ceil(log2(4/eps)); the weight tail beyond it is <= eps/4."""
    radius = exact_fraction(eps)
    if radius <= 0:
        raise FixtureInputError("eps must be positive")
    window = 0
    while Fraction(2) ** window < 4 / radius:
        window += 1
    return window


def interval_shift_bounds(eps: float | Fraction,
                          horizon: int) -> tuple[OracleBound, OracleBound]:
    """One-sided shift over [0,1]: (1 + floor(1/eps))^horizon from below and
    (1 + floor(12/eps))^(horizon + window) from above."""
    radius = exact_fraction(eps)
    window = interval_shift_window(radius)
    low_base = 1 + math.floor(1 / radius)
    high_base = 1 + math.floor(12 / radius)
    params = {"eps": float(radius), "horizon": horizon, "window": window}
    return (OracleBound("lower", "cov", low_base ** horizon, dict(params, base=low_base)),
            OracleBound("upper", "cov", high_base ** (horizon + window),
                        dict(params, base=high_base)))


Flat = tuple[int, int, int, int]


def _check_hyperbolic(matrix: Matrix) -> Flat:
    top_left, top_right = int(matrix[0][0]), int(matrix[0][1])
    bottom_left, bottom_right = int(matrix[1][0]), int(matrix[1][1])
    det = top_left * bottom_right - top_right * bottom_left
    if abs(det) != 1:
        raise FixtureInputError(f"matrix has determinant {det}, expected +-1")
    if abs(top_left + bottom_right) <= 2:
        raise FixtureInputError(
            f"matrix has trace {top_left + bottom_right}; |trace| > 2 is required")
    return top_left, top_right, bottom_left, bottom_right


def _mat_mul(left: Flat, right: Flat) -> Flat:
    return (left[0] * right[0] + left[1] * right[2], left[0] * right[1] + left[1] * right[3],
            left[2] * right[0] + left[3] * right[2], left[2] * right[1] + left[3] * right[3])


def _mat_pow(matrix: Flat, power: int) -> Flat:
    result = (1, 0, 0, 1)
    base = matrix
    while power:
        if power & 1:
            result = _mat_mul(result, base)
        base = _mat_mul(base, base)
        power >>= 1
    return result


def toral_fix_count(matrix: Matrix, power: int) -> OracleBound:
    """Number of fixed points of the power-th iterate of the toral automorphism,
    |det(matrix^power - I)|."""
    if power < 1:
        raise FixtureInputError("power must be positive")
    flat = _check_hyperbolic(matrix)
    powered = _mat_pow(flat, power)
    value = abs((powered[0] - 1) * (powered[3] - 1) - powered[1] * powered[2])
    return OracleBound("exact", "Fix", value,
                       {"power": power, "matrix": [list(row) for row in matrix]})


def toral_fix_recurrence_holds(matrix: Matrix, upto: int = 20) -> bool:
    """Check the counts against the recurrence of the characteristic polynomial.

    |det(M^k - I)| = |det(M)^k - tr(M^k) + 1| and the traces obey
    tr(M^k) = tr(M) tr(M^(k-1)) - det(M) tr(M^(k-2)).  For det(M) = 1 the
    counts F satisfy F(k) = tr F(k-1) - F(k-2) + 2 tr - 4, checked as well.
    """
    top_left, top_right, bottom_left, bottom_right = _check_hyperbolic(matrix)
    trace = top_left + bottom_right
    det = top_left * bottom_right - top_right * bottom_left
    traces = [2, trace]
    for _ in range(2, upto + 1):
        traces.append(trace * traces[-1] - det * traces[-2])
    counts = [toral_fix_count(matrix, power).value for power in range(1, upto + 1)]
    for power in range(1, upto + 1):
        if counts[power - 1] != abs(det ** power - traces[power] + 1):
            return False
    if det == 1 and trace > 2:
        for power in range(3, upto + 1):
            expected = trace * counts[power - 2] - counts[power - 3] + 2 * trace - 4
            if counts[power - 1] != expected:
                return False
    return True


def kakeya_A_cover(eps: float | Fraction) -> int:
    """Minimal number of closed eps-balls covering {0} U {1/k : k >= 1}.

    Sweep from the top: an interval [top - 2 eps, top] is placed at the
    largest uncovered point, which is optimal for covering a subset of the
    line.
    """
    radius = exact_fraction(eps)
    if radius <= 0:
        raise FixtureInputError("eps must be positive")
    count = 0
    denominator = 1
    while True:
        count += 1
        low = Fraction(1, denominator) - 2 * radius
        if low <= 0:
            return count
        # largest point of the set strictly below `low`
        denominator = math.floor(1 / low) + 1


def visible_depth(eps: float | Fraction, strict: bool = True) -> int:
    """Number of leading symbols that the first-difference metric resolves at eps.

    strict=True counts positions with 2^-position > eps (separation);
    strict=False counts 2^-position >= eps (open balls and sets of diameter
    below eps).
    """
    radius = exact_fraction(eps)
    if radius <= 0:
        raise FixtureInputError("eps must be positive")
    count = 0
    while (Fraction(1, 2 ** count) > radius) if strict else (Fraction(1, 2 ** count) >= radius):
        count += 1
    return count


def word_shift_count(offsets: Sequence[int], eps: float | Fraction, strict: bool = True,
                     alphabet: int = 2) -> OracleBound:
    """Exact separated (strict) or cover (non-strict) count for shift powers.

    With orbit offsets (the total shift applied before each iterate) and the
    first-difference metric, two words are Bowen-separated at eps iff they
    differ on the union of the windows [offset, offset + depth - 1]; the count
    is alphabet^(size of that union).
    """
    depth = visible_depth(eps, strict)
    visible: set[int] = set()
    for offset in offsets:
        visible.update(range(int(offset), int(offset) + depth))
    quantity = "sep" if strict else "cov"
    return OracleBound("exact", quantity, alphabet ** len(visible),
                       {"eps": float(exact_fraction(eps)), "horizon": len(offsets),
                        "visible": len(visible), "depth": depth})


def binary_shift_offsets(horizon: int) -> list[int]:
    """Offsets of the autonomous shift: iterate j applies the shift j times."""
    return list(range(horizon))


def binary_power_shift_offsets(horizon: int) -> list[int]:
    """Offsets when the j-th map shifts by 2^j: iterate j has shifted 2^(j+1) - 2."""
    return [2 ** (step + 1) - 2 for step in range(horizon)]


def binary_power_shift_claimed_lower(horizon: int, eps: float | Fraction) -> int:
    """Claimed lower bound 2^(2^(horizon+1) - 2 + level) for
    2^-(level+1) <= eps < 2^-level; it exceeds the exact count."""
    radius = exact_fraction(eps)
    level = 0
    while not (Fraction(1, 2 ** (level + 1)) <= radius < Fraction(1, 2 ** level)):
        level += 1
        if level > 4096:
            raise FixtureInputError("eps too small")
    return 2 ** (2 ** (horizon + 1) - 2 + level)


def cat_power_sep_lower(matrix: Matrix, horizon: int) -> OracleBound:
    """Fixed-point count of the 2^horizon-th iterate, used as the separated-count
    lower bound for the doubling power sequence at radius 1/4."""
    fix = toral_fix_count(matrix, 2 ** horizon)
    return OracleBound("lower", "sep", fix.value, {"horizon": horizon, "eps": 0.25,
                                                  "fix_power": 2 ** horizon})
