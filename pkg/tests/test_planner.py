import math

import pytest
from hypothesis import given, settings

from builders import planning_instances, scenario, seeded_instances, world_of
from constraints import ConstraintSet, PathState, validate_path
from oracle import exhaustive_optimum
from planner import (ConstrainedThetaStarPlanner, HoleExplorer, NoPath, OpenList, PlannedPath, SearchNode, SearchState,
                     ThetaStarPlanner, astar_8, constrained_theta_star, theta_star)

RING = [(x, 3) for x in range(3, 7)] + [(x, 6) for x in range(3, 7)] + [(3, 4), (3, 5), (6, 4), (6, 5)]


def _node(vertex, g, h=0.0):
    return SearchNode(vertex, g, h)


def test_open_list_orders_by_f_then_larger_g():
    open_list = OpenList()
    open_list.push(_node((2, 0), 1.0, 3.0))
    open_list.push(_node((1, 0), 3.0, 1.0))
    open_list.push(_node((0, 0), 0.5, 2.0))
    assert [open_list.pop().vertex for _ in range(3)] == [(0, 0), (1, 0), (2, 0)]
    assert not open_list
    with pytest.raises(IndexError):
        open_list.pop()


def test_open_list_restore_replays_pop_order():
    open_list = OpenList()
    for i, g in enumerate([5.0, 1.0, 3.0, 2.0]):
        open_list.push(_node((i, 0), g))
    open_list.pop()
    token = open_list.checkpoint()
    first = [open_list.pop().vertex for _ in range(2)]
    open_list.push(_node((9, 9), 0.0))
    open_list.restore(token)
    assert len(open_list) == 3
    assert [open_list.pop().vertex for _ in range(2)] == first


def test_search_state_restore_undoes_best_and_closed():
    search = SearchState(journaling=True)
    a = _node((0, 0), 0.0)
    search.set_best(a.vertex, a)
    search.open.push(a)
    token = search.checkpoint()
    search.open.pop()
    search.close(a.vertex)
    b = _node((1, 0), 1.0)
    search.set_best(b.vertex, b)
    search.restore(token)
    assert search.closed == set()
    assert search.best == {(0, 0): a}
    assert search.open.pop() is a


def test_search_node_path_and_accessors():
    root = SearchNode((0, 0), 0.0, 1.0)
    child = SearchNode((1, 1), math.sqrt(2), 0.0, parent=root, via=root)
    assert child.path() == [(0, 0), (1, 1)]
    assert child.parent_vertex == (0, 0)
    assert child.via_neighbor == (0, 0)
    assert child.f == pytest.approx(math.sqrt(2))
    assert child.hole_acc == 0.0
    assert not child.forced_parent


def test_theta_star_empty_grid_is_a_single_leg():
    world, _ = world_of(scenario(10, 10))
    result = theta_star(world, (0, 0), (9, 9))
    assert isinstance(result, PlannedPath)
    assert result.turning_points == [(0, 0), (9, 9)]
    assert result.cost_m == pytest.approx(9 * math.sqrt(2))
    assert result.turns == 0
    assert result.visited_trace[0] == (0, 0)


def test_theta_star_cost_scales_with_cell_size():
    world, _ = world_of(scenario(10, 10, cell_size_m=3.0))
    assert theta_star(world, (0, 0), (9, 0)).cost_m == pytest.approx(27.0)


def test_walled_in_goal_has_no_path():
    world, holes = world_of(scenario(10, 10, blocked=RING, goal=(5, 5)))
    for result in (theta_star(world, (0, 0), (5, 5)), astar_8(world, (0, 0), (5, 5)),
                   constrained_theta_star(world, holes, ConstraintSet(theta_bmax_deg=45.0), (0, 0), (5, 5))):
        assert isinstance(result, NoPath)
        assert not result.found
        assert result.expansions > 0


def test_theta_star_goes_around_a_wall():
    world, _ = world_of(scenario(6, 6, blocked=[(2, y) for y in range(4)]))
    result = theta_star(world, (0, 0), (5, 0))
    optimum = 2 * math.sqrt(20) + 1
    assert result.found
    assert optimum - 1e-9 <= result.cost_m <= 1.08 * optimum
    assert validate_path(result.turning_points, world, [], ConstraintSet(), (0, 0), (5, 0)).checks['obstacle'].passed


def test_astar_8_moves_on_grid_steps():
    world, _ = world_of(scenario(10, 10))
    result = astar_8(world, (0, 0), (9, 4))
    assert result.planner == 'astar'
    assert result.cost_m == pytest.approx(4 * math.sqrt(2) + 5)


def test_planner_is_deterministic():
    world, holes = world_of(scenario(12, 12, blocked=[(5, y) for y in range(9)] + [(8, y) for y in range(3, 12)]))
    cs = ConstraintSet(theta_bmax_deg=60.0, l_min_m=2.0)
    first = constrained_theta_star(world, holes, cs, (0, 0), (12, 12))
    second = constrained_theta_star(world, holes, cs, (0, 0), (12, 12))
    assert first.found == second.found
    if first.found:
        assert first.turning_points == second.turning_points
        assert first.cost_m == second.cost_m
    assert first.visited_trace == second.visited_trace


def test_aligned_endpoints_need_no_turn_under_tight_angle():
    world, holes = world_of(scenario(20, 10))
    result = constrained_theta_star(world, holes, ConstraintSet(theta_bmax_deg=20.0), (0, 5), (20, 5))
    assert result.turning_points == [(0, 5), (20, 5)]
    assert result.turns == 0


def test_constrained_crosses_a_hole_within_storage():
    uncovered = [(x, y) for x in (4, 5) for y in range(5)]
    world, holes = world_of(scenario(10, 5, start=(0, 2), goal=(10, 2), uncovered=uncovered))
    result = constrained_theta_star(world, holes, ConstraintSet(d_zero_m=3.0), (0, 2), (10, 2))
    assert result.found
    assert result.turning_points == [(0, 2), (10, 2)]
    assert result.cost_m == pytest.approx(10.0)
    assert validate_path(result.turning_points, world, holes, ConstraintSet(d_zero_m=3.0)).passed


def test_main_search_leg_may_clip_a_hole_within_storage():
    world, holes = world_of(scenario(5, 3, blocked=[(2, 0)], uncovered=[(3, 0)]))
    cs = ConstraintSet(l_min_m=2.0, theta_bmax_deg=30.0, d_zero_m=2.0)
    planner = ConstrainedThetaStarPlanner(world, holes, cs, settings={'certify_max_vertices': 0})
    result = planner.plan((5, 0), (1, 2))
    assert not planner.certified
    assert result.turning_points == [(5, 0), (1, 2)]
    assert result.cost_m == pytest.approx(math.sqrt(20))
    report = validate_path(result.turning_points, world, holes, cs, (5, 0), (1, 2))
    assert report.passed
    assert 0 < report.hole_lengths[0] <= 2.0

    # The straight leg clips sqrt(5)/2 m of the hole
    tight = ConstraintSet(l_min_m=2.0, theta_bmax_deg=30.0, d_zero_m=1.0)
    result = ConstrainedThetaStarPlanner(world, holes, tight, settings={'certify_max_vertices': 0}).plan((5, 0), (1, 2))
    if result.found:
        assert result.turning_points != [(5, 0), (1, 2)]
        assert validate_path(result.turning_points, world, holes, tight, (5, 0), (1, 2)).passed


def test_certification_confirms_no_path_and_bounds_cost():
    uncovered = [(x, y) for x in (4, 5) for y in range(5)]
    world, holes = world_of(scenario(10, 5, start=(0, 2), goal=(10, 2), uncovered=uncovered))
    planner = ConstrainedThetaStarPlanner(world, holes, ConstraintSet(d_zero_m=1.5))
    assert not planner.plan((0, 2), (10, 2)).found
    assert planner.certified

    world, holes = world_of(scenario(6, 6, blocked=[(2, y) for y in range(4)]))
    cs = ConstraintSet(theta_bmax_deg=60.0)
    planner = ConstrainedThetaStarPlanner(world, holes, cs)
    result = planner.plan((0, 0), (5, 0))
    optimum = exhaustive_optimum(world, holes, cs, (0, 0), (5, 0))
    assert planner.certified
    assert optimum.cost_m - 1e-9 <= result.cost_m <= 1.15 * optimum.cost_m + 1e-9


def test_constrained_reports_no_path_when_storage_is_too_small():
    uncovered = [(x, y) for x in (4, 5) for y in range(5)]
    world, holes = world_of(scenario(10, 5, start=(0, 2), goal=(10, 2), uncovered=uncovered))
    planner = ConstrainedThetaStarPlanner(world, holes, ConstraintSet(d_zero_m=1.5))
    result = planner.plan((0, 2), (10, 2))
    assert not result.found
    assert planner.hole_explorations > 0


def test_hole_explorations_are_capped_per_hole():
    uncovered = [(x, y) for x in range(3, 9) for y in range(1, 7)]
    world, holes = world_of(scenario(12, 8, start=(0, 4), goal=(12, 4), uncovered=uncovered))
    cs = ConstraintSet(d_zero_m=4.0, theta_bmax_deg=60.0)
    planner = ConstrainedThetaStarPlanner(world, holes, cs, settings={'max_hole_entries': 1, 'certify_max_vertices': 0})
    result = planner.plan((0, 4), (12, 4))
    assert planner.hole_explorations == 1
    if result.found:
        assert validate_path(result.turning_points, world, holes, cs, (0, 4), (12, 4)).passed


def test_hole_exploration_stops_at_expansion_cap():
    uncovered = [(x, y) for x in range(2, 10) for y in range(8)]
    world, holes = world_of(scenario(12, 8, start=(0, 4), goal=(12, 4), uncovered=uncovered))
    cs = ConstraintSet(d_zero_m=30.0)
    planner = ConstrainedThetaStarPlanner(world, holes, cs, settings={'max_hole_expansions': 5})
    planner.begin((0, 4), (12, 4))
    root = SearchNode((2, 4), 0.0, 10.0, state=PathState.at((2, 4)))
    explorer = HoleExplorer(planner, holes[0], root)
    explorer.run()
    assert explorer.expansions == 5


def test_constrained_respects_corridor_band():
    cs = ConstraintSet(d_row_m=2.0, d_cfod_m=6.0)
    world, holes = world_of(scenario(12, 10, infrastructure=[(0, 0), (12, 0)], constraints=cs,
                                     blocked=[(5, y) for y in range(2, 7)]))
    result = constrained_theta_star(world, holes, cs, (0, 4), (12, 4))
    assert result.found
    assert all(2 <= y <= 6 for _, y in result.turning_points)
    assert validate_path(result.turning_points, world, holes, cs, (0, 4), (12, 4)).passed


@settings(settings.get_profile('laws'))
@given(planning_instances(max_side=8, constrained=False))
def test_theta_star_never_longer_than_astar(case):
    world, _, _, start, goal = case
    any_angle = theta_star(world, start, goal)
    grid = astar_8(world, start, goal)
    assert any_angle.found == grid.found
    if grid.found:
        assert any_angle.cost_m <= grid.cost_m + 1e-9


@settings(settings.get_profile('laws'))
@given(planning_instances(max_side=8, constrained=False))
def test_trivial_constraints_reproduce_theta_star(case):
    world, holes, cs, start, goal = case
    baseline = theta_star(world, start, goal)
    constrained = constrained_theta_star(world, holes, cs, start, goal)
    assert constrained.found == baseline.found
    if baseline.found:
        assert constrained.turning_points == baseline.turning_points
        assert constrained.cost_m == baseline.cost_m


@settings(settings.get_profile('laws'))
@given(planning_instances(max_side=8))
def test_constrained_paths_always_validate(case):
    world, holes, cs, start, goal = case
    result = constrained_theta_star(world, holes, cs, start, goal)
    if result.found:
        report = validate_path(result.turning_points, world, holes, cs, start, goal)
        assert report.passed, report.failing()
        assert result.turning_points[0] == start and result.turning_points[-1] == goal


def test_heuristic_is_scaled_euclidean_and_zero_without_goal():
    world, _ = world_of(scenario(3, 1))
    planner = ThetaStarPlanner(world, any_angle=False)
    planner.begin((0, 0), (3, 0))
    assert planner.heuristic((0, 0)) == pytest.approx(3.0)
    planner.begin((0, 0), None)
    assert planner.heuristic((2, 0)) == 0.0


@pytest.mark.slow
def test_seeded_constrained_paths_always_validate():
    found = 0
    for case_id, world, holes, cs, start, goal in seeded_instances(200, seed=1, max_side=64, max_obstacles=6,
                                                                   max_holes=3):
        result = constrained_theta_star(world, holes, cs, start, goal)
        if result.found:
            found += 1
            report = validate_path(result.turning_points, world, holes, cs, start, goal)
            assert report.passed, (case_id, report.failing())
    assert found > 0
