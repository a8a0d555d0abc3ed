"""
Predicates and accounting for the five route constraints

The same incremental routine (``extend_path_state``) drives every planner, and
``validate_path`` re-derives every check from scratch on a finished path, so a
planner that only keeps feasible extensions always produces validator-clean
output.
"""

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional

import numpy as np

from config import DEFAULT_CONSTRAINTS, PLANNER_SETTINGS
from errors import InvalidConstraints, MalformedPath
from geometry import (clip_length_in_cells, continues_straight, distances_to_polyline, euclid,
                      sample_segment, segment_pieces, traverse_arrays, vertex_turn)
from grid_world import hole_cell_labels, line_of_sight

logger = logging.getLogger(__name__)

TOLERANCE = PLANNER_SETTINGS['tolerance']

CONSTRAINT_NAMES = ('obstacle', 'corridor', 'turn_angle', 'leg_length', 'storage')

# Order in which the brute-force planner repairs failures
REPAIR_PRIORITY = ('storage', 'turn_angle', 'leg_length', 'corridor', 'obstacle')


@dataclass(frozen=True)
class ConstraintSet:
    """Minimum leg, maximum turn, corridor band and in-hole storage bound"""
    l_min_m: float = DEFAULT_CONSTRAINTS['l_min_m']
    theta_bmax_deg: float = DEFAULT_CONSTRAINTS['theta_bmax_deg']
    d_row_m: float = DEFAULT_CONSTRAINTS['d_row_m']
    d_cfod_m: float = DEFAULT_CONSTRAINTS['d_cfod_m']
    d_zero_m: float = DEFAULT_CONSTRAINTS['d_zero_m']

    def __post_init__(self):
        for name in ('l_min_m', 'theta_bmax_deg', 'd_row_m', 'd_cfod_m', 'd_zero_m'):
            value = getattr(self, name)
            if value is None or math.isnan(value) or value < 0:
                raise InvalidConstraints(reason=f"{name} must be a non-negative number, got {value}")
        if not 0 < self.theta_bmax_deg <= 180:
            raise InvalidConstraints(reason=f"theta_bmax_deg must be in (0, 180], got {self.theta_bmax_deg}")
        if not self.d_row_m < self.d_cfod_m:
            raise InvalidConstraints(reason=f"d_row_m ({self.d_row_m}) must be below d_cfod_m ({self.d_cfod_m})")

    @classmethod
    def from_dict(cls, data):
        values = dict(DEFAULT_CONSTRAINTS)
        for key, value in (data or {}).items():
            if key in values:
                values[key] = math.inf if value is None else float(value)
        return cls(**values)

    def to_dict(self):
        return {key: (None if math.isinf(value) else value) for key, value in asdict(self).items()}

    @property
    def storage_active(self):
        return math.isfinite(self.d_zero_m)

    @property
    def is_trivial(self):
        return (self.l_min_m == 0 and self.theta_bmax_deg >= 180 and not self.storage_active
                and self.d_row_m == 0 and math.isinf(self.d_cfod_m))

    def relaxed(self, **changes):
        return replace(self, **changes)


def check_leg(parent, child, cs, cell_size=1.0):
    """Leg length at least l_min (inclusive)"""
    return euclid(parent, child, cell_size) >= cs.l_min_m - TOLERANCE


def check_turn(grand, parent, child, cs):
    """Turn at parent at most theta_bmax (inclusive)"""
    if continues_straight(grand, parent, child):
        return True
    return vertex_turn(grand, parent, child) <= cs.theta_bmax_deg + TOLERANCE


def accumulate_hole_length(acc, leg, hole, cell_size=1.0):
    return acc + clip_length_in_cells(leg, hole.cells, cell_size)


def storage_violated(acc, cs):
    return acc > cs.d_zero_m + TOLERANCE


@dataclass(frozen=True)
class PathState:
    """Constraint state at the end of a path prefix"""
    vertex: tuple
    origin: tuple           # start of the current straight leg
    turns: int = 0
    run_hole: int = -1      # hole of the current in-hole run, -1 outside
    run_acc: float = 0.0    # meters since entering run_hole

    @classmethod
    def at(cls, vertex):
        return cls(vertex, vertex)

    @property
    def in_hole(self):
        return self.run_hole >= 0


class PathContext:
    """Run-local evaluation context: world lookups, caches and active checks"""

    def __init__(self, world, holes, constraints, enforce=True, respect_corridor=True,
                 blocks=None, endpoints=()):
        self.world = world
        self.holes = list(holes)
        self.constraints = constraints
        self.enforce = enforce
        self.respect_corridor = respect_corridor
        self.blocks = blocks
        self.endpoints = set(endpoints)
        self.cell_size = world.cell_size_m
        self.storage_active = enforce and constraints.storage_active
        self.hole_labels = hole_cell_labels(world, self.holes)
        self._clear = {}
        self._pieces = {}

    def set_endpoints(self, *endpoints):
        self.endpoints = set(endpoints)

    def vertex_ok(self, v):
        world = self.world
        if not world.in_grid(v):
            return False
        if v not in self.endpoints:
            if world.is_pinch(v):
                return False
            if self.blocks is not None and v in self.blocks.vertices:
                return False
        if self.respect_corridor and not world.in_corridor(v):
            return False
        return True

    def clear(self, a, b):
        key = (a, b) if a <= b else (b, a)
        hit = self._clear.get(key)
        if hit is None:
            hit = line_of_sight(self.world, a, b)
            self._clear[key] = hit
        return hit

    def hole_pieces(self, a, b):
        """Per-piece (hole id, meters) along a->b, consecutive ids merged"""
        key = (a, b)
        hit = self._pieces.get(key)
        if hit is None:
            trav = traverse_arrays(tuple(a), tuple(b))
            if not len(trav.cells):
                hit = ()
            else:
                ids = self.hole_labels[trav.cells[:, 1], trav.cells[:, 0]]
                starts = np.flatnonzero(np.r_[True, ids[1:] != ids[:-1]])
                lengths = np.add.reduceat(trav.fractions, starts) * euclid(a, b, self.cell_size)
                hit = tuple(zip(ids[starts].tolist(), lengths.tolist()))
            self._pieces[key] = hit
        return hit


def extend_path_state(state, nxt, ctx, hole_policy=None):
    """State after appending ``nxt``, or None when any active check fails

    ``hole_policy`` restricts the new leg: -1 forbids hole pieces, a hole id
    requires every piece to lie in that hole.
    """
    cur = state.vertex
    if nxt == cur or not ctx.vertex_ok(nxt) or not ctx.clear(cur, nxt):
        return None

    cs = ctx.constraints
    if state.origin == cur or continues_straight(state.origin, cur, nxt):
        origin, turns = state.origin, state.turns
    else:
        if ctx.enforce:
            if not check_turn(state.origin, cur, nxt, cs):
                return None
            if not check_leg(state.origin, cur, cs, ctx.cell_size):
                return None
        origin, turns = cur, state.turns + 1

    if ctx.blocks is not None and ctx.blocks.blocks_segment(origin, nxt):
        return None

    run_hole, run_acc = state.run_hole, state.run_acc
    if ctx.storage_active or hole_policy is not None:
        for hid, length in ctx.hole_pieces(cur, nxt):
            if hole_policy is not None and hid != hole_policy:
                return None
            if hid < 0:
                run_hole, run_acc = -1, 0.0
            elif hid == run_hole:
                run_acc += length
            else:
                run_hole, run_acc = hid, length
            if ctx.storage_active and storage_violated(run_acc, cs):
                return None

    return PathState(nxt, origin, turns, run_hole, run_acc)


def close_path_state(state, ctx):
    """Final-leg check once the goal is reached"""
    if not ctx.enforce or state.turns == 0:
        return True
    return check_leg(state.origin, state.vertex, ctx.constraints, ctx.cell_size)


@dataclass
class ConstraintCheck:
    name: str
    index: Optional[int] = None
    measured: Optional[float] = None
    detail: Dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.index is None

    def fail(self, index, **detail):
        if self.index is None:
            self.index = index
            self.detail.update(detail)


@dataclass
class ConstraintReport:
    """Per-constraint audit of a finished path"""
    checks: Dict[str, ConstraintCheck] = field(
        default_factory=lambda: {name: ConstraintCheck(name) for name in CONSTRAINT_NAMES})
    min_leg_m: Optional[float] = None
    max_turn_deg: float = 0.0
    hole_lengths: Dict[int, float] = field(default_factory=dict)
    corridor_audit: List = field(default_factory=list)

    @property
    def passed(self):
        return all(check.passed for check in self.checks.values())

    def failing(self):
        return [name for name in CONSTRAINT_NAMES if not self.checks[name].passed]

    def first_failure(self, order=REPAIR_PRIORITY):
        for name in order:
            if not self.checks[name].passed:
                return name
        return None

    def to_dict(self):
        return {
            'passed': self.passed,
            'failing': self.failing(),
            'checks': {
                name: {'passed': check.passed, 'index': check.index, 'measured': check.measured}
                for name, check in self.checks.items()
            },
            'min_leg_m': self.min_leg_m,
            'max_turn_deg': self.max_turn_deg,
            'hole_lengths_m': {str(hid): value for hid, value in sorted(self.hole_lengths.items())},
            'corridor_audit': {
                'samples_outside': len(self.corridor_audit),
                'points': self.corridor_audit[:50]
            }
        }


def _as_vertices(path):
    points = getattr(path, 'turning_points', path)
    try:
        return [(int(p[0]), int(p[1])) for p in points]
    except (TypeError, ValueError, IndexError) as e:
        raise MalformedPath(reason=f"vertices must be integer pairs ({e})")


def _merged_indices(points):
    """Indices of the points that survive collinear merging"""
    kept = [0]
    for i in range(1, len(points) - 1):
        if continues_straight(points[kept[-1]], points[i], points[i + 1]):
            continue
        kept.append(i)
    kept.append(len(points) - 1)
    return kept


def validate_path(path, world, holes, cs, start=None, goal=None):
    """Full audit of a path against obstacles and the five constraints"""
    points = _as_vertices(path)
    if len(points) < 2:
        raise MalformedPath(reason=f"needs at least 2 vertices, got {len(points)}")
    for i in range(len(points) - 1):
        if points[i] == points[i + 1]:
            raise MalformedPath(reason=f"duplicate consecutive vertex {points[i]} at index {i}")
    for i, p in enumerate(points):
        if not world.in_grid(p):
            raise MalformedPath(reason=f"vertex {p} at index {i} is outside the grid")
    if start is not None and points[0] != tuple(start):
        raise MalformedPath(reason=f"path starts at {points[0]}, expected {tuple(start)}")
    if goal is not None and points[-1] != tuple(goal):
        raise MalformedPath(reason=f"path ends at {points[-1]}, expected {tuple(goal)}")

    report = ConstraintReport()
    checks = report.checks
    cell = world.cell_size_m
    kept = _merged_indices(points)
    legs = list(zip(kept, kept[1:]))

    # Obstacles: line of sight on merged legs, no interior pinch vertices
    for a, b in legs:
        if not line_of_sight(world, points[a], points[b]):
            checks['obstacle'].fail(a, leg=(points[a], points[b]))
            break
    for i in range(1, len(points) - 1):
        if world.is_pinch(points[i]):
            if checks['obstacle'].index is None or i < checks['obstacle'].index:
                checks['obstacle'].index = i
            break

    for i, p in enumerate(points):
        if not world.in_corridor(p):
            checks['corridor'].fail(i)
            break

    for j in range(1, len(kept) - 1):
        angle = vertex_turn(points[kept[j - 1]], points[kept[j]], points[kept[j + 1]])
        report.max_turn_deg = max(report.max_turn_deg, angle)
        if angle > cs.theta_bmax_deg + TOLERANCE:
            checks['turn_angle'].fail(kept[j])
    checks['turn_angle'].measured = report.max_turn_deg

    if len(legs) >= 2:
        for a, b in legs:
            length = euclid(points[a], points[b], cell)
            report.min_leg_m = length if report.min_leg_m is None else min(report.min_leg_m, length)
            if length < cs.l_min_m - TOLERANCE:
                checks['leg_length'].fail(a)
        checks['leg_length'].measured = report.min_leg_m

    labels = hole_cell_labels(world, holes)
    run_hole, run_acc, run_start = -1, 0.0, None
    for leg_index, (a, b) in enumerate(legs):
        for (cx, cy), length in segment_pieces(points[a], points[b], cell):
            hid = int(labels[cy, cx])
            if hid < 0:
                run_hole, run_acc = -1, 0.0
                continue
            if hid == run_hole:
                run_acc += length
            else:
                run_hole, run_acc, run_start = hid, length, leg_index
            report.hole_lengths[hid] = max(report.hole_lengths.get(hid, 0.0), run_acc)
            if storage_violated(run_acc, cs):
                checks['storage'].fail(a, hole_id=hid, leg_index=leg_index, run_start_leg=run_start)
    if report.hole_lengths:
        checks['storage'].measured = max(report.hole_lengths.values())

    if world.polyline:
        step = PLANNER_SETTINGS['audit_step_cells']
        for a, b in legs:
            samples = sample_segment(points[a], points[b], step)
            dist = distances_to_polyline(samples, world.polyline) * cell
            outside = (dist < cs.d_row_m - TOLERANCE) | (dist > cs.d_cfod_m + TOLERANCE)
            report.corridor_audit.extend([round(float(x), 3), round(float(y), 3)] for x, y in samples[outside])

    if not report.passed:
        logger.debug(f"Path failed: {', '.join(report.failing())}")
    return report
