from __future__ import annotations

import math

import numpy as np
import pytest

from mdimkit.core import (
    BowenContext,
    autonomous,
    bowen_distance,
    check_metric_axioms,
    check_net,
    circle_space,
    compose_block,
    explicit_sequence,
    harmonic_set_space,
    interval_space,
    point_space,
    precision_budget,
    shift_sequence,
    torus_space,
    word_space,
)
from mdimkit.errors import FixtureInputError, PrecisionBudgetError
from mdimkit.fixtures import damp_sequence, get_fixture, tent_map, tent_power


def identity(points):
    return np.asarray(points, dtype=np.float64).copy()


def scaled(factor):
    return lambda points: np.asarray(points) * factor


def test_bowen_distance_identity_is_plain_distance():
    ctx = BowenContext(autonomous(identity, lipschitz=1.0), interval_space(), 5)
    assert bowen_distance(ctx, 0.2, 0.7) == pytest.approx(0.5)


def test_bowen_distance_tent_two_steps():
    ctx = BowenContext(autonomous(tent_map, lipschitz=3.0), interval_space(), 2)
    assert bowen_distance(ctx, 0.0, 0.1) == pytest.approx(0.3)


def test_horizon_one_equals_ground_distance():
    space = circle_space()
    ctx = BowenContext(autonomous(tent_map, lipschitz=3.0), space, 1)
    assert bowen_distance(ctx, 0.05, 0.95) == space.dist(0.05, 0.95) == pytest.approx(0.1)


def test_bowen_distance_beyond_budget_names_horizon():
    system = autonomous(tent_map, lipschitz=3.0)
    budget = system.horizon_budget
    ctx = BowenContext(system, interval_space(), budget + 2)
    with pytest.raises(PrecisionBudgetError, match=str(budget + 2)):
        bowen_distance(ctx, 0.1, 0.2)


def test_precision_budget_rule():
    budget = precision_budget(3.0)
    assert budget * math.log(3.0) <= 0.8 * 53 * math.log(2.0)
    assert (budget + 1) * math.log(3.0) > 0.8 * 53 * math.log(2.0)
    assert precision_budget(1.0) is None


def test_bowen_distance_uses_cache():
    system = autonomous(tent_map, lipschitz=3.0)
    ctx = BowenContext(system, interval_space(), 3)
    points = np.array([[0.1], [0.4]])
    ctx.attach(points)
    assert bowen_distance(ctx, 0.1, 0.4) == pytest.approx(
        float(np.max(np.abs(system.orbit(points, 3)[0] - system.orbit(points, 3)[1]))))


def test_compose_block_of_autonomous_is_square():
    blocked = compose_block(autonomous(tent_map, lipschitz=3.0), 2)
    grid = np.linspace(0, 1, 41)[:, None]
    assert blocked.kind == "autonomous"
    np.testing.assert_allclose(blocked.map_at(3)(grid), tent_power(grid, 2), atol=1e-12)


def test_compose_block_pairs_consecutive_maps():
    maps = [scaled(0.9), scaled(0.8), scaled(0.7), scaled(0.6)]
    blocked = compose_block(explicit_sequence(maps), 2)
    point = np.array([[1.0]])
    assert blocked.map_at(1)(point)[0, 0] == pytest.approx(0.72)
    assert blocked.map_at(2)(point)[0, 0] == pytest.approx(0.42)


def test_compose_block_one_is_original():
    system = autonomous(tent_map, lipschitz=3.0)
    assert compose_block(system, 1) is system


def test_compose_block_divides_budget():
    system = autonomous(tent_map, lipschitz=3.0)
    assert compose_block(system, 3).horizon_budget == system.horizon_budget // 3


def test_composition_consistency_with_blocks():
    fx = get_fixture("phi_a:0.5", blocks=2)
    grid = np.linspace(0, 1, 257)[:, None]
    blocked = compose_block(fx.system, 2)
    direct = fx.system.compose(4, grid)
    np.testing.assert_allclose(blocked.compose(2, grid), direct, atol=1e-12)


def test_shift_sequence_drops_leading_maps():
    maps = [scaled(0.9), scaled(0.8), scaled(0.7), scaled(0.6)]
    shifted = shift_sequence(explicit_sequence(maps), 2)
    assert shifted.map_at(1)(np.array([[1.0]]))[0, 0] == pytest.approx(0.7)
    assert shifted.params["shift"] == 2


def test_shift_zero_is_identical():
    system = autonomous(tent_map, lipschitz=3.0)
    assert shift_sequence(system, 0) is system


def test_shifted_damping_schedule():
    base = autonomous(tent_map, lipschitz=3.0)
    damped = damp_sequence(base, lambda index: index / (index + 1.0))
    ahead = damp_sequence(base, lambda index: (index + 1) / (index + 2.0))
    grid = np.linspace(0, 1, 33)[:, None]
    for index in range(1, 5):
        np.testing.assert_allclose(shift_sequence(damped, 1).map_at(index)(grid),
                                   ahead.map_at(index)(grid), atol=1e-15)


def test_composition_law_stepwise():
    system = get_fixture("tent").system
    grid = np.linspace(0, 1, 65)[:, None]
    np.testing.assert_array_equal(system.compose(0, grid), grid)
    current = grid
    for count in range(1, 9):
        current = system.map_at(count)(current)
        np.testing.assert_array_equal(system.compose(count, grid), current)


def test_autonomous_maps_repeat():
    system = autonomous(tent_map, lipschitz=3.0)
    assert system.map_at(1) is system.map_at(7)


@pytest.mark.parametrize("space", [interval_space(), circle_space(), torus_space(),
                                   harmonic_set_space(), point_space(),
                                   word_space(8, "first_diff")])
def test_metric_axioms(space):
    assert check_metric_axioms(space, triples=2000) <= 1e-12


@pytest.mark.parametrize("space,delta", [(interval_space(), 0.01), (circle_space(), 0.02),
                                         (torus_space(), 0.05)])
def test_sampler_is_net(space, delta):
    points = space.sample(delta)
    probes = np.random.default_rng(1).random((500, space.dim))
    assert check_net(points, probes, space) <= delta


def test_sampler_is_deterministic():
    space = torus_space()
    np.testing.assert_array_equal(space.sample(0.1), space.sample(0.1))


def test_circle_distance_wraps():
    assert circle_space().dist(0.9, 0.1) == pytest.approx(0.2)


def test_sampler_rejects_nonpositive_resolution():
    with pytest.raises(FixtureInputError):
        interval_space().sample(0.0)
