from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from mdimkit.core import (
    explicit_sequence,
    harmonic_set_space,
    interval_space,
    point_space,
)
from mdimkit.errors import ConstructionError, FixtureInputError, UnknownFixtureError
from mdimkit.fixtures import (
    build_binary_power_shift,
    build_block_map,
    build_example33,
    build_phi_a,
    build_product_shift,
    build_toral_power_sequence,
    damp_sequence,
    fixture_ids,
    get_fixture,
    tent_map,
    tent_power,
    truncate_sequence,
)

# ---------------------------------------------------------------- tent map


@pytest.mark.parametrize("point,image", [(0, 0), (1, 1), (1 / 3, 1), (2 / 3, 0), (0.1, 0.3)])
def test_tent_map_values(point, image):
    assert tent_map(point) == pytest.approx(image, abs=1e-15)


def test_tent_map_domain():
    with pytest.raises(FixtureInputError):
        tent_map(1.5)


def test_tent_power_matches_iteration():
    grid = np.linspace(0, 1, 1001)
    stepwise = grid
    for iterates in range(1, 5):
        stepwise = tent_map(stepwise)
        np.testing.assert_allclose(tent_power(grid, iterates), stepwise, atol=1e-12)


# ---------------------------------------------------------------- block maps


def test_example33_first_boundary_and_truth():
    bm = build_example33(4)
    assert bm.boundaries[1] == pytest.approx(6 / math.pi ** 2)
    assert bm.known_mdim == 1.0
    assert bm.exponents == (1, 2, 3, 4)


@pytest.mark.parametrize("bm", [build_example33(4), build_phi_a(0.5, 3), build_phi_a(1 / 3, 3)])
def test_block_boundaries_fixed_and_blocks_invariant(bm):
    bounds = bm.boundaries
    np.testing.assert_allclose(bm(bounds), bounds, atol=1e-15)
    for block in range(1, bm.block_count + 1):
        probes = np.linspace(bounds[block - 1], bounds[block], 997)
        images = bm(probes)
        tol = 1e-12 * bm.lengths[block - 1] * 3 ** bm.exponents[block - 1]
        assert images.min() >= bounds[block - 1] - tol
        assert images.max() <= bounds[block] + tol


@pytest.mark.parametrize("bm", [build_example33(3), build_phi_a(0.5, 3)])
def test_block_map_is_conjugated_tent_power(bm):
    for block in range(1, bm.block_count + 1):
        unit = np.linspace(0, 1, 513)
        direct = bm(bm.chart_inverse(block, unit))
        conj = bm.chart_inverse(block, tent_power(unit, bm.exponents[block - 1]))
        np.testing.assert_allclose(direct, conj, atol=1e-12)


def test_single_block_map_is_conjugate_of_tent():
    bm = build_block_map([0.5], [1], 1, end=1.0)
    assert bm(0.0) == 0.0
    assert bm(0.25) == pytest.approx(0.5 * tent_map(0.5))
    assert bm(0.75) == 0.75  # identity on the residual interval


def test_block_lengths_exceeding_unit_measure():
    with pytest.raises(ConstructionError):
        build_block_map([0.6, 0.6], [1, 2], 2)


def test_phi_a_half_parameters():
    bm = build_phi_a(0.5, 4)
    assert bm.lengths[0] == pytest.approx(1 / 72)
    assert bm.ladder[0] == pytest.approx(1 / 72)
    assert bm.exact_lengths[0] == Fraction(1, 72)
    assert bm.known_mdim == 0.5


@pytest.mark.parametrize("target", [0.0, 1.0, -0.5, 1.5])
def test_phi_a_rejects_target(target):
    with pytest.raises(FixtureInputError):
        build_phi_a(target)


@pytest.mark.parametrize("block", [1, 2, 3])
@pytest.mark.parametrize("depth", [1, 2, 3])
def test_phi_a_level_subintervals_map_onto_block(block, depth):
    bm = build_phi_a(0.5, 3)
    exact = bm.exact_lengths[block - 1]
    start = sum(bm.exact_lengths[:block - 1], Fraction(0))
    pieces = 3 ** (block * depth)
    sub = exact / pieces
    system = bm.system()
    for index in (0, 1, pieces // 2, pieces - 1):
        # endpoints of a level-depth subinterval land on the two block ends
        ends = np.array([[float(start + index * sub)], [float(start + (index + 1) * sub)]])
        images = np.sort(system.compose(depth, ends)[:, 0])
        np.testing.assert_allclose(images, [float(start), float(start + exact)],
                                   atol=float(exact) * 1e-6)


# ---------------------------------------------------------------- shifts


def test_product_shift_ground_truths():
    assert build_product_shift(interval_space(), "one", 3).known_mdim == 1.0
    assert build_product_shift(harmonic_set_space(), "one", 3).known_mdim == 0.5
    assert build_product_shift(point_space(), "one", 3).known_mdim == 0.0


def test_product_shift_truncation_small():
    fx = get_fixture("shift:interval")
    shift = fx.extras["shift"]
    assert shift.truncation_error() < min(fx.ladder) / 2


def test_product_shift_moves_indices_down():
    shift = build_product_shift(interval_space(), "one", 2, capacity=2)
    words = np.arange(shift.length, dtype=float)[None, :] / 10
    moved = shift.system().map_at(1)(words)
    np.testing.assert_array_equal(moved[0, :-1], words[0, 1:])


def test_two_sided_shift_is_two_lipschitz():
    shift = build_product_shift(interval_space(), "two", 3)
    rng = np.random.default_rng(2)
    first, second = rng.random((2, 200, shift.length))
    # letters beyond the stored window are equal, as for finitely supported words
    first[:, -shift.capacity:] = second[:, -shift.capacity:] = 0.0
    step = shift.system().map_at(1)
    ratio = shift.dist(step(first), step(second)) / shift.dist(first, second)
    assert np.all(ratio <= 2.0 + 1e-12)


def test_binary_power_shift_composition():
    system = build_binary_power_shift()
    words = np.random.default_rng(3).integers(0, 2, (5, 20)).astype(float)
    np.testing.assert_array_equal(system.compose(1, words)[:, :18], words[:, 2:])
    np.testing.assert_array_equal(system.compose(2, words)[:, :14], words[:, 6:])


# ---------------------------------------------------------------- torus


def test_toral_fix_counts():
    tor = build_toral_power_sequence(((2, 1), (1, 1)))
    assert tor.fix_count(1) == 1
    assert tor.fix_count(2) == 5
    for power in range(1, 11):
        assert tor.fix_count(power) == tor.fix_formula(power)


def test_toral_rejects_non_hyperbolic():
    with pytest.raises(FixtureInputError):
        build_toral_power_sequence(((1, 1), (0, 1)))
    with pytest.raises(FixtureInputError):
        build_toral_power_sequence(((2, 1), (2, 1)))


def test_cat_power_truth_is_infinite():
    assert get_fixture("cat_power:3").known_mdim == math.inf


# ---------------------------------------------------------------- damping, truncation


def test_damping_by_one_is_original():
    base = get_fixture("tent").system
    damped = damp_sequence(base, lambda index: 1.0)
    grid = np.linspace(0, 1, 65)[:, None]
    np.testing.assert_array_equal(damped.compose(3, grid), base.compose(3, grid))
    assert damped.params["products_vanish"] is False


def test_damped_orbits_go_to_zero():
    damped = damp_sequence(get_fixture("identity").system, lambda index: index / (index + 1.0))
    grid = np.linspace(0, 1, 11)[:, None]
    assert np.max(damped.compose(200, grid)) < 0.01
    assert damped.params["products_vanish"] is True


def test_damped_constant_map():
    damped = damp_sequence(get_fixture("constant").system, lambda index: 0.5)
    assert damped.map_at(1)(np.array([[0.9]]))[0, 0] == pytest.approx(0.25)


def test_damping_schedule_outside_unit_interval():
    with pytest.raises(FixtureInputError):
        damp_sequence(get_fixture("tent").system, lambda index: 1.5)


def test_truncated_sequence():
    def levels(index):
        return 1 - 0.5 ** index

    system = truncate_sequence(lambda pts: pts * pts, levels)
    fn = system.map_at(1)  # truncation level 0.75
    assert fn(np.array([[0.5]]))[0, 0] == pytest.approx(0.25)
    assert fn(np.array([[1.0]]))[0, 0] == pytest.approx(0.75)
    grid = np.linspace(0.75, 1, 101)[:, None]
    assert np.max(np.abs(fn(grid) - 0.75)) <= np.max(np.abs(grid ** 2 - 0.75)) + 1e-15


def test_truncation_levels_must_increase():
    with pytest.raises(FixtureInputError):
        truncate_sequence(lambda pts: pts, lambda index: 1.0 / index)


# ---------------------------------------------------------------- catalogue


@pytest.mark.parametrize("fid", ["constant", "identity", "tent", "square", "example33",
                                 "phi_a:0.5", "phi_a:1/3", "rotation:0.3", "rotations",
                                 "shift:interval", "shift:kakeya_A", "shift:point",
                                 "binary_shift", "binary_power_shift", "cat_power:3",
                                 "damped:tent", "damped:phi_a_0.5", "truncated:example33"])
def test_catalogue_entries_build(fid):
    fx = get_fixture(fid)
    assert fx.fid == fid or fid.startswith("phi_a")
    assert len(fx.ladder) >= 3
    assert list(fx.ladder) == sorted(fx.ladder, reverse=True)


def test_unknown_fixture():
    with pytest.raises(UnknownFixtureError):
        get_fixture("no_such_system")


def test_catalogue_listing():
    ids = fixture_ids()
    assert "example33" in ids and "damped:<preset>" in ids


def test_explicit_sequence_bounds():
    system = explicit_sequence([lambda pts: pts])
    with pytest.raises(FixtureInputError):
        system.map_at(2)
