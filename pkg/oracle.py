"""
Reference planners used for verification and benchmarking

``brute_force_plan`` repeatedly runs plain Theta* and repairs or blocks the
first failing constraint of each candidate. ``exhaustive_optimum`` is a
label-setting search over turning-point sequences that returns the global
minimum-cost feasible vertex path on small grids.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from config import PLANNER_SETTINGS
from constraints import PathContext, validate_path
from errors import MalformedPath, OracleBoundExceeded, OracleExhausted
from geometry import merge_collinear, polyline_length
from planner import NEIGHBOR_STEPS, NoPath, PlannedPath, ThetaStarPlanner, label_search

logger = logging.getLogger(__name__)


class BlockList:
    """Vertices and segments excluded from later brute-force iterations"""

    def __init__(self):
        self.vertices: Set[Tuple[int, int]] = set()
        self.segments: Set[frozenset] = set()

    def block_vertex(self, v):
        self.vertices.add(tuple(v))

    def block_segment(self, a, b):
        self.segments.add(frozenset((tuple(a), tuple(b))))

    def blocks_segment(self, a, b):
        return frozenset((a, b)) in self.segments

    def __len__(self):
        return len(self.vertices) + len(self.segments)


@dataclass
class IterationEntry:
    index: int
    candidate: List[Tuple[int, int]]
    failing_constraint: Optional[str]
    failing_index: Optional[int]
    action: str
    detail: Dict = field(default_factory=dict)

    def to_dict(self):
        return {
            'index': self.index,
            'candidate': [list(p) for p in self.candidate],
            'failing_constraint': self.failing_constraint,
            'failing_index': self.failing_index,
            'action': self.action,
            'detail': {key: _jsonable(value) for key, value in self.detail.items()}
        }


def _jsonable(value):
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


@dataclass
class IterationLog:
    entries: List[IterationEntry] = field(default_factory=list)

    def record(self, candidate, failing, index, action, **detail):
        entry = IterationEntry(len(self.entries), list(candidate), failing, index, action, detail)
        self.entries.append(entry)
        return entry

    @property
    def iterations(self):
        return len(self.entries)

    @property
    def final(self):
        return self.entries[-1] if self.entries else None

    def __len__(self):
        return len(self.entries)

    def to_list(self):
        return [entry.to_dict() for entry in self.entries]


class BruteForcePlanner:
    """Iterative Theta* with validation, local repair and segment blocking"""

    name = 'brute'

    def __init__(self, world, holes, constraints, settings=None):
        self.world = world
        self.holes = list(holes)
        self.constraints = constraints
        self.settings = dict(PLANNER_SETTINGS, **(settings or {}))
        self.logger = logging.getLogger(f"{__name__}.brute")

    def plan(self, start, goal, iteration_cap=None):
        start, goal = tuple(start), tuple(goal)
        cap = iteration_cap or self.settings['brute_iteration_cap']
        self.start, self.goal = start, goal
        self.blocks = BlockList()
        log = IterationLog()
        expansions = 0

        for _ in range(cap):
            # Each re-run starts from scratch against the grown block list
            result = ThetaStarPlanner(self.world, self.holes, blocks=self.blocks,
                                      respect_corridor=True).plan(start, goal)
            expansions += result.expansions
            if not result.found:
                log.record([], None, None, 'exhausted', blocked=len(self.blocks))
                self.logger.debug(f"Brute force exhausted after {log.iterations} iterations")
                return NoPath("block list exhausted every candidate", expansions, len(self.blocks),
                              result.visited_trace, self.name), log

            points = result.turning_points
            report = validate_path(points, self.world, self.holes, self.constraints, start, goal)
            failing = report.first_failure()
            if failing is None:
                log.record(points, None, None, 'accept')
                return self._accept(points, result, expansions), log

            check = report.checks[failing]
            repaired = self._repair(points, failing, check, log)
            if repaired is not None:
                return self._accept(repaired, result, expansions), log

        self.logger.warning(f"Brute force hit the iteration cap ({cap})")
        raise OracleExhausted(iterations=cap)

    def _accept(self, points, result, expansions):
        points = merge_collinear(points)
        cost = polyline_length(points, self.world.cell_size_m)
        self.logger.debug(f"Brute force accepted {len(points)} turning points, {cost:.3f} m")
        return PlannedPath(points, cost, result.visited_trace, expansions, len(self.blocks), self.name)

    def _repair(self, points, failing, check, log):
        """Apply the repair for the first failing constraint; a path if it validates"""
        index = check.index
        if failing == 'storage':
            leg = check.detail['leg_index']
            run_start = check.detail['run_start_leg']
            if leg > run_start:
                # an in-hole turn precedes the failure: rescind to it
                a, b = points[leg - 1], points[leg]
                action = 'rescind_previous_turn'
            else:
                a, b = points[leg], points[leg + 1]
                action = 'rescind_entry'
            self.blocks.block_segment(a, b)
            log.record(points, failing, index, action, segment=[a, b], hole_id=check.detail['hole_id'])
            return None

        if failing == 'turn_angle':
            t1_index, t2_index = index - 1, index
        elif failing == 'leg_length':
            t1_index, t2_index = index, index + 1
            if points[t2_index] == self.goal:
                t1_index, t2_index = index - 1, index
        else:
            t1_index = max(0, index - 1)
            t2_index = t1_index + 1

        for moved in (t2_index, t1_index):
            candidate = self._ring_repair(points, moved)
            if candidate is not None:
                log.record(points, failing, index, f"repair_t{1 if moved == t1_index else 2}",
                           moved=points[moved], to=candidate[moved])
                return candidate

        t1, t2 = points[t1_index], points[t2_index]
        self.blocks.block_segment(t1, t2)
        if t2 not in (self.start, self.goal):
            self.blocks.block_vertex(t2)
        log.record(points, failing, index, 'block_segment', segment=[t1, t2])
        return None

    def _ring_repair(self, points, index):
        """Replace points[index] by a neighbour on its 8-ring that validates"""
        if index <= 0 or index >= len(points) - 1:
            return None
        x, y = points[index]
        for dx, dy in NEIGHBOR_STEPS:
            candidate = list(points)
            candidate[index] = (x + dx, y + dy)
            if candidate[index] in (candidate[index - 1], candidate[index + 1]):
                continue
            try:
                report = validate_path(candidate, self.world, self.holes, self.constraints, self.start, self.goal)
            except MalformedPath:
                continue
            if report.passed:
                return candidate
        return None


def brute_force_plan(world, holes, cs, start, goal, iteration_cap=None, settings=None):
    """(PlannedPath or NoPath, IterationLog); OracleExhausted at the cap"""
    return BruteForcePlanner(world, holes, cs, settings).plan(start, goal, iteration_cap)


def exhaustive_optimum(world, holes, cs, start, goal, max_vertices=None, settings=None):
    """Minimum-cost feasible turning-point path by label-setting search

    Raises OracleBoundExceeded on oversized grids, and when no path exists
    within ``max_vertices`` turning points but some label was cut.
    """
    settings = dict(PLANNER_SETTINGS, **(settings or {}))
    max_vertices = max_vertices or settings['exhaustive_max_vertices']
    limit = settings['exhaustive_max_grid']
    if world.width > limit or world.height > limit:
        raise OracleBoundExceeded(reason=f"grid {world.width}x{world.height} exceeds {limit}x{limit}")

    start, goal = tuple(start), tuple(goal)
    cell = world.cell_size_m
    ctx = PathContext(world, holes, cs, enforce=True, respect_corridor=True)
    ctx.set_endpoints(start, goal)
    found = label_search(ctx, start, goal, max_vertices)
    if found.points is not None:
        cost = polyline_length(found.points, cell)
        logger.debug(f"Exhaustive optimum {cost:.3f} m after {found.expansions} expansions")
        return PlannedPath(found.points, cost, found.trace, found.expansions, 0, 'exhaustive')
    if found.truncated:
        raise OracleBoundExceeded(reason=f"no path within {max_vertices} turning points")
    return NoPath("no feasible vertex path", found.expansions, 0, found.trace, 'exhaustive')
