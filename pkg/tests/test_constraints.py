import dataclasses
import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from builders import planning_instances, scenario, world_of
from constraints import (ConstraintSet, PathContext, PathState, accumulate_hole_length, check_leg, check_turn,
                         close_path_state, extend_path_state, storage_violated, validate_path)
from errors import InvalidConstraints, MalformedPath, OracleBoundExceeded
from grid_world import corridor_mask
from oracle import exhaustive_optimum
from planner import PlannedPath, theta_star


@pytest.fixture
def storage_world():
    """10x3 world with a 5-cell hole in the middle row"""
    return world_of(scenario(10, 3, start=(0, 2), goal=(10, 2), uncovered=[(x, 1) for x in range(2, 7)]))


def test_constraint_set_defaults_are_trivial():
    cs = ConstraintSet()
    assert cs.is_trivial
    assert not cs.storage_active
    assert cs.to_dict() == {'l_min_m': 0.0, 'theta_bmax_deg': 180.0, 'd_row_m': 0.0,
                            'd_cfod_m': None, 'd_zero_m': None}


def test_constraint_set_from_dict_treats_null_as_unbounded():
    cs = ConstraintSet.from_dict({'d_zero_m': None, 'l_min_m': 9, 'theta_bmax_deg': 20})
    assert math.isinf(cs.d_zero_m)
    assert cs.l_min_m == 9.0
    assert not cs.is_trivial
    assert cs.relaxed(theta_bmax_deg=90.0).theta_bmax_deg == 90.0


@pytest.mark.parametrize('values', [
    {'d_row_m': 50.0, 'd_cfod_m': 30.0},
    {'theta_bmax_deg': 0.0},
    {'theta_bmax_deg': 200.0},
    {'l_min_m': -1.0},
    {'d_zero_m': math.nan},
])
def test_constraint_set_rejects_invalid_values(values):
    with pytest.raises(InvalidConstraints):
        ConstraintSet(**values)


def test_check_turn_is_inclusive():
    cs = ConstraintSet(theta_bmax_deg=90.0)
    assert check_turn((0, 0), (1, 0), (1, 1), cs)
    assert not check_turn((0, 0), (1, 0), (0, 1), cs)
    assert check_turn((0, 0), (1, 0), (2, 0), ConstraintSet(theta_bmax_deg=1.0))


def test_check_leg_is_inclusive_and_scaled():
    cs = ConstraintSet(l_min_m=9.0)
    assert check_leg((0, 0), (3, 0), cs, cell_size=3.0)
    assert not check_leg((0, 0), (2, 0), cs, cell_size=3.0)


def test_validate_clean_path():
    world, holes = world_of(scenario(10, 10))
    report = validate_path([(0, 0), (9, 9)], world, holes, ConstraintSet(), (0, 0), (9, 9))
    assert report.passed
    assert report.failing() == []
    assert report.min_leg_m is None


def test_validate_turn_angle_violation():
    world, holes = world_of(scenario(10, 10))
    report = validate_path([(0, 0), (4, 0), (4, 4)], world, holes, ConstraintSet(theta_bmax_deg=45.0))
    assert report.failing() == ['turn_angle']
    assert report.checks['turn_angle'].index == 1
    assert report.max_turn_deg == pytest.approx(90.0)


def test_validate_leg_length_only_with_turns():
    world, holes = world_of(scenario(10, 10))
    cs = ConstraintSet(l_min_m=2.0)
    report = validate_path([(0, 0), (4, 0), (4, 1)], world, holes, cs)
    assert report.failing() == ['leg_length']
    assert report.checks['leg_length'].index == 1
    assert report.min_leg_m == pytest.approx(1.0)
    assert validate_path([(0, 0), (1, 0)], world, holes, ConstraintSet(l_min_m=100.0)).passed


def test_validate_storage_violation(storage_world):
    world, holes = storage_world
    report = validate_path([(0, 2), (10, 2)], world, holes, ConstraintSet(d_zero_m=3.0))
    assert report.failing() == ['storage']
    check = report.checks['storage']
    assert check.detail == {'hole_id': 0, 'leg_index': 0, 'run_start_leg': 0}
    assert report.hole_lengths[0] == pytest.approx(5.0)
    assert validate_path([(0, 2), (10, 2)], world, holes, ConstraintSet(d_zero_m=5.0)).passed


def test_validate_storage_ignores_edge_pieces_owned_by_covered_cells(storage_world):
    world, holes = storage_world
    # Grid line y=1 belongs to row 0, which is covered
    report = validate_path([(0, 1), (10, 1)], world, holes, ConstraintSet(d_zero_m=0.0))
    assert report.passed
    assert report.hole_lengths == {}


def test_validate_corridor_violation():
    cs = ConstraintSet(d_row_m=1.0, d_cfod_m=5.0)
    world, holes = world_of(scenario(10, 8, infrastructure=[(0, 0), (10, 0)], constraints=cs))
    report = validate_path([(0, 0), (5, 2)], world, holes, cs)
    assert report.failing() == ['corridor']
    assert report.checks['corridor'].index == 0
    assert report.corridor_audit


def test_validate_obstacle_and_pinch():
    world, holes = world_of(scenario(2, 2, blocked=[(0, 1), (1, 0)]))
    report = validate_path([(0, 0), (1, 1), (2, 2)], world, holes, ConstraintSet())
    assert 'obstacle' in report.failing()


def test_validate_axis_leg_through_pinch():
    world, holes = world_of(scenario(4, 3, blocked=[(1, 0), (2, 1)]))
    report = validate_path([(0, 1), (4, 1)], world, holes, ConstraintSet())
    assert report.failing() == ['obstacle']
    assert report.checks['obstacle'].index == 0


def test_theta_star_routes_around_axis_pinch():
    world, holes = world_of(scenario(4, 3, blocked=[(1, 0), (2, 1)]))
    result = theta_star(world, (0, 1), (4, 1))
    assert isinstance(result, PlannedPath)
    assert result.turning_points != [(0, 1), (4, 1)]
    assert 'obstacle' not in validate_path(result, world, holes, ConstraintSet()).failing()


@pytest.mark.parametrize('path', [[(0, 0)], [(0, 0), (0, 0), (1, 1)], [(0, 0), (20, 0)], [(0, 0), ('a', 1)]])
def test_validate_rejects_malformed_paths(path):
    world, holes = world_of(scenario(5, 5))
    with pytest.raises(MalformedPath):
        validate_path(path, world, holes, ConstraintSet())


def test_validate_rejects_wrong_endpoints():
    world, holes = world_of(scenario(5, 5))
    with pytest.raises(MalformedPath):
        validate_path([(0, 0), (3, 3)], world, holes, ConstraintSet(), start=(0, 0), goal=(4, 4))


def test_report_to_dict():
    world, holes = world_of(scenario(10, 10))
    payload = validate_path([(0, 0), (4, 0), (4, 4)], world, holes, ConstraintSet(theta_bmax_deg=45.0)).to_dict()
    assert payload['passed'] is False
    assert payload['failing'] == ['turn_angle']
    assert payload['checks']['turn_angle']['index'] == 1


def test_extend_path_state_tracks_turns():
    world, holes = world_of(scenario(10, 10))
    ctx = PathContext(world, holes, ConstraintSet())
    state = PathState.at((0, 0))
    state = extend_path_state(state, (2, 0), ctx)
    assert state.origin == (0, 0) and state.turns == 0
    state = extend_path_state(state, (4, 0), ctx)
    assert state.origin == (0, 0) and state.turns == 0
    state = extend_path_state(state, (4, 3), ctx)
    assert state.origin == (4, 0) and state.turns == 1

    strict = PathContext(world, holes, ConstraintSet(theta_bmax_deg=45.0))
    assert extend_path_state(extend_path_state(PathState.at((0, 0)), (4, 0), strict), (4, 3), strict) is None


def test_extend_path_state_hole_policies(storage_world):
    world, holes = storage_world
    ctx = PathContext(world, holes, ConstraintSet(d_zero_m=10.0))
    start = PathState.at((0, 2))
    assert extend_path_state(start, (4, 2), ctx, hole_policy=-1) is None
    assert extend_path_state(start, (4, 2), ctx, hole_policy=0) is None
    inside = extend_path_state(PathState.at((3, 2)), (5, 2), ctx, hole_policy=0)
    assert inside.run_hole == 0
    assert inside.run_acc == pytest.approx(2.0)
    left = extend_path_state(inside, (9, 2), ctx)
    assert left.run_hole == -1 and left.run_acc == 0.0


def test_close_path_state_checks_final_leg():
    world, holes = world_of(scenario(10, 10))
    ctx = PathContext(world, holes, ConstraintSet(l_min_m=3.0))
    state = extend_path_state(extend_path_state(PathState.at((0, 0)), (5, 0), ctx), (5, 2), ctx)
    assert state is not None
    assert not close_path_state(state, ctx)
    assert close_path_state(extend_path_state(PathState.at((0, 0)), (1, 0), ctx), ctx)


@st.composite
def incremental_paths(draw):
    world, holes, cs, start, goal = draw(planning_instances(max_side=6))
    vertex = st.tuples(st.integers(0, world.width), st.integers(0, world.height))
    middle = draw(st.lists(vertex, max_size=4))
    return world, holes, cs, [start] + middle + [goal]


@settings(settings.get_profile('laws'))
@given(incremental_paths())
def test_incremental_acceptance_matches_validator(case):
    world, holes, cs, points = case
    if len(set(points)) != len(points):
        return
    ctx = PathContext(world, holes, cs)
    ctx.set_endpoints(points[0], points[-1])
    state = PathState.at(points[0])
    for v in points[1:]:
        state = extend_path_state(state, v, ctx)
        if state is None:
            return
    if not close_path_state(state, ctx):
        return
    assert validate_path(points, world, holes, cs, points[0], points[-1]).passed


def test_accumulate_hole_length():
    world, holes = world_of(scenario(6, 3, uncovered=[(x, 1) for x in range(1, 4)]))
    hole = holes[0]
    cs = ConstraintSet(d_zero_m=2.0)
    assert accumulate_hole_length(0.5, ((0, 0), (5, 0)), hole) == 0.5
    crossing = accumulate_hole_length(0.0, ((0, 1.5), (5, 1.5)), hole)
    assert crossing == pytest.approx(3.0)
    assert storage_violated(crossing, cs)
    assert not storage_violated(2.0, cs)
    assert accumulate_hole_length(1.0, ((1, 1.5), (2, 1.5)), hole, cell_size=3.0) == pytest.approx(4.0)


def _relax_world(world, cs):
    """World with the corridor mask rebuilt for ``cs``"""
    corridor = corridor_mask(world.width, world.height, world.cell_size_m, world.polyline, cs.d_row_m, cs.d_cfod_m)
    return dataclasses.replace(world, corridor=corridor)


@st.composite
def relaxations(draw, cs):
    """A constraint set no tighter than ``cs`` in turn angle, storage and band"""
    theta = draw(st.floats(cs.theta_bmax_deg, 180.0))
    d_zero = cs.d_zero_m if math.isinf(cs.d_zero_m) else cs.d_zero_m + draw(st.sampled_from([0.0, 0.5, 2.0, math.inf]))
    d_row = draw(st.sampled_from([0.0, cs.d_row_m]))
    d_cfod = cs.d_cfod_m + draw(st.sampled_from([0.0, 1.0, math.inf]))
    return cs.relaxed(theta_bmax_deg=theta, d_zero_m=d_zero, d_row_m=d_row, d_cfod_m=d_cfod)


@settings(settings.get_profile('laws'))
@given(st.data())
def test_relaxing_constraints_keeps_valid_paths_valid(data):
    world, holes, cs, points = data.draw(incremental_paths())
    assume(all(a != b for a, b in zip(points, points[1:])))
    if not validate_path(points, world, holes, cs).passed:
        return
    relaxed = data.draw(relaxations(cs))
    assert validate_path(points, _relax_world(world, relaxed), holes, relaxed).passed


@settings(settings.get_profile('laws'))
@given(st.data())
def test_relaxing_constraints_never_raises_the_optimum(data):
    world, holes, cs, start, goal = data.draw(planning_instances(max_side=4))
    try:
        tight = exhaustive_optimum(world, holes, cs, start, goal)
    except OracleBoundExceeded:
        return
    if not tight.found:
        return
    relaxed = data.draw(relaxations(cs))
    loose = exhaustive_optimum(_relax_world(world, relaxed), holes, relaxed, start, goal)
    assert loose.found
    assert loose.cost_m <= tight.cost_m + 1e-9


@settings(settings.get_profile('laws'))
@given(incremental_paths())
def test_constraint_failures_compose(case):
    world, holes, cs, points = case
    assume(all(a != b for a, b in zip(points, points[1:])))
    combined = set(validate_path(points, world, holes, cs).failing())
    singles = (ConstraintSet(theta_bmax_deg=cs.theta_bmax_deg), ConstraintSet(l_min_m=cs.l_min_m),
               ConstraintSet(d_zero_m=cs.d_zero_m))
    separate = set().union(*(validate_path(points, world, holes, single).failing() for single in singles))
    assert combined == separate


@pytest.fixture
def mutation_world():
    """12x12 world with a two-cell hole just below grid line y=6"""
    return world_of(scenario(12, 12, uncovered=[(2, 6), (3, 6)], blocked=[(6, 4)]))


@pytest.mark.parametrize('middle, failing', [
    ((6, 6), []),
    ((10, 6), ['turn_angle']),
    ((1, 6), ['leg_length']),
    ((6, 7), ['storage']),
    ((5, 6), ['obstacle']),
])
def test_single_vertex_mutation_flips_one_check(mutation_world, middle, failing):
    world, holes = mutation_world
    cs = ConstraintSet(theta_bmax_deg=60.0, l_min_m=2.0, d_zero_m=1.0)
    report = validate_path([(0, 6), middle, (12, 0)], world, holes, cs)
    assert report.failing() == failing


def test_single_vertex_mutation_leaves_corridor():
    cs = ConstraintSet(theta_bmax_deg=60.0, d_cfod_m=6.5)
    world, holes = world_of(scenario(12, 12, infrastructure=[(0, 0), (12, 0)], constraints=cs))
    assert validate_path([(0, 6), (6, 6), (12, 0)], world, holes, cs).passed
    report = validate_path([(0, 6), (6, 7), (12, 0)], world, holes, cs)
    assert report.failing() == ['corridor']
    assert report.checks['corridor'].index == 1
