"""
The discretized planning space: obstacle, coverage and corridor masks,
coverage-hole extraction and line of sight.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import FrozenSet, Optional, Tuple

import numpy as np
from scipy import ndimage

from config import PLANNER_SETTINGS
from errors import InfeasibleEndpoints, ParseError
from geometry import distances_to_polyline, traverse_arrays

logger = logging.getLogger(__name__)

MOVINGAI_BLOCKED = frozenset('@OTW')


@dataclass(frozen=True)
class AccessPoint:
    center: Tuple[float, float]  # meters
    radius_m: float

    def __post_init__(self):
        if not self.radius_m > 0:
            raise ValueError(f"Access point radius must be positive, got {self.radius_m}")


@dataclass(frozen=True)
class CoverageHole:
    """8-connected zero-coverage component"""
    id: int
    cells: FrozenSet[Tuple[int, int]]
    boundary_vertices: FrozenSet[Tuple[int, int]]
    vertices: FrozenSet[Tuple[int, int]] = field(default=frozenset(), repr=False, compare=False)

    @property
    def interior_vertices(self):
        return self.vertices - self.boundary_vertices


@dataclass(frozen=True, eq=False)
class GridWorld:
    """Immutable planning space; arrays are indexed [y, x]"""
    width: int
    height: int
    cell_size_m: float
    blocked: np.ndarray            # (H, W) cells
    covered: np.ndarray            # (H, W) cells
    corridor: np.ndarray           # (H + 1, W + 1) vertices
    polyline: Optional[Tuple[Tuple[float, float], ...]] = None
    access_points: Tuple[AccessPoint, ...] = ()
    padded_blocked: np.ndarray = field(default=None, repr=False)
    pinch: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"Grid must be at least 1x1, got {self.width}x{self.height}")
        for name in ('blocked', 'covered', 'corridor'):
            object.__setattr__(self, name, np.array(getattr(self, name), dtype=bool))
        padded = np.ones((self.height + 2, self.width + 2), dtype=bool)
        padded[1:-1, 1:-1] = self.blocked
        # cell (cx, cy) -> padded[cy + 1, cx + 1]; vertex (x, y) touches padded[y:y+2, x:x+2]
        nw = padded[:-1, :-1]
        ne = padded[:-1, 1:]
        sw = padded[1:, :-1]
        se = padded[1:, 1:]
        pinch = (nw & se & ~ne & ~sw) | (ne & sw & ~nw & ~se)
        for name, value in (('padded_blocked', padded), ('pinch', pinch)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        for name in ('blocked', 'covered', 'corridor'):
            getattr(self, name).setflags(write=False)

    def in_grid(self, v):
        return 0 <= v[0] <= self.width and 0 <= v[1] <= self.height

    def cell_blocked(self, cell):
        """Blocked test that treats every cell outside the grid as blocked"""
        cx, cy = cell
        if cx < 0 or cy < 0 or cx >= self.width or cy >= self.height:
            return True
        return bool(self.blocked[cy, cx])

    def vertex_enclosed(self, v):
        """All four incident cells blocked"""
        x, y = v
        return bool(self.padded_blocked[y:y + 2, x:x + 2].all())

    def is_pinch(self, v):
        """Exactly two diagonally opposite incident cells blocked"""
        return bool(self.pinch[v[1], v[0]])

    def in_corridor(self, v):
        return bool(self.corridor[v[1], v[0]])


def cell_centers_m(width, height, cell_size):
    ys, xs = np.mgrid[0:height, 0:width]
    return (xs + 0.5) * cell_size, (ys + 0.5) * cell_size


def coverage_mask(width, height, cell_size, access_points, uncovered_cells=()):
    """Covered cells: center within an AP radius; explicit uncovered cells override"""
    if access_points:
        cx, cy = cell_centers_m(width, height, cell_size)
        covered = np.zeros((height, width), dtype=bool)
        for ap in access_points:
            covered |= np.hypot(cx - ap.center[0], cy - ap.center[1]) <= ap.radius_m
    elif uncovered_cells:
        covered = np.ones((height, width), dtype=bool)
    else:
        covered = np.zeros((height, width), dtype=bool)
    for x, y in uncovered_cells:
        covered[y, x] = False
    return covered


def corridor_mask(width, height, cell_size, polyline, d_row_m, d_cfod_m):
    """Vertices whose distance to the polyline lies in [d_row, d_cfod]"""
    if not polyline:
        return np.ones((height + 1, width + 1), dtype=bool)
    ys, xs = np.mgrid[0:height + 1, 0:width + 1]
    points = np.column_stack((xs.ravel(), ys.ravel()))
    dist = distances_to_polyline(points, polyline).reshape(height + 1, width + 1) * cell_size
    tol = PLANNER_SETTINGS['tolerance']
    return (dist >= d_row_m - tol) & (dist <= d_cfod_m + tol)


def obstacle_mask(width, height, rectangles=(), base=None):
    """Blocked cells from [x, y, w, h] cell rectangles over an optional map"""
    blocked = np.zeros((height, width), dtype=bool) if base is None else np.array(base, dtype=bool)
    for x, y, w, h in rectangles:
        blocked[max(0, y):max(0, y + h), max(0, x):max(0, x + w)] = True
    return blocked


def build_world(scenario, check_endpoints=True):
    """Assemble the masks of a parsed scenario into a GridWorld"""
    try:
        cs = scenario.constraints
        base = load_movingai_map(scenario.map_path) if scenario.map_path else None
        if base is not None and base.shape != (scenario.height, scenario.width):
            raise ParseError('obstacles.map_file', f"map is {base.shape[1]}x{base.shape[0]}, "
                                                   f"grid is {scenario.width}x{scenario.height}")
        blocked = obstacle_mask(scenario.width, scenario.height, scenario.rectangles, base)
        covered = coverage_mask(scenario.width, scenario.height, scenario.cell_size_m,
                                scenario.access_points, scenario.uncovered_cells)
        polyline = tuple(tuple(p) for p in scenario.infrastructure) if scenario.infrastructure else None
        corridor = corridor_mask(scenario.width, scenario.height, scenario.cell_size_m,
                                 polyline, cs.d_row_m, cs.d_cfod_m)
        world = GridWorld(scenario.width, scenario.height, scenario.cell_size_m,
                          blocked, covered, corridor, polyline, tuple(scenario.access_points))
    except ParseError:
        raise
    except Exception as e:
        logger.error(f"Failed to build world for scenario '{scenario.id}': {e}")
        raise

    if check_endpoints:
        check_endpoints_feasible(world, scenario.start, scenario.goal)
    logger.debug(f"Built {world.width}x{world.height} world: {int(world.blocked.sum())} blocked, "
                 f"{int((~world.covered).sum())} uncovered, {int(world.corridor.sum())} corridor vertices")
    return world


def check_endpoints_feasible(world, start, goal):
    for which, v in (('start', start), ('goal', goal)):
        if not world.in_grid(v):
            raise InfeasibleEndpoints(which=which, vertex=v, reason='outside the grid')
        if world.vertex_enclosed(v):
            raise InfeasibleEndpoints(which=which, vertex=v, reason='inside an obstacle')
        if not world.in_corridor(v):
            raise InfeasibleEndpoints(which=which, vertex=v, reason='outside the corridor')


def _incident_masks(cell_mask):
    """(any, all) incidence of a (H, W) cell mask on the (H+1, W+1) vertices"""
    h, w = cell_mask.shape
    padded = np.zeros((h + 2, w + 2), dtype=bool)
    padded[1:-1, 1:-1] = cell_mask
    quads = (padded[:-1, :-1], padded[:-1, 1:], padded[1:, :-1], padded[1:, 1:])
    return quads[0] | quads[1] | quads[2] | quads[3], quads[0] & quads[1] & quads[2] & quads[3]


def label_uncovered(covered):
    """Label image of 8-connected uncovered components, 0 where covered"""
    labels, count = ndimage.label(~np.asarray(covered, dtype=bool), structure=np.ones((3, 3), dtype=int))
    return labels, count


def label_holes(world):
    return label_uncovered(world.covered)


def find_holes(world):
    """Coverage holes with ids in scanline order of their first cell"""
    labels, count = label_holes(world)
    holes = []
    for label in range(1, count + 1):
        mask = labels == label
        ys, xs = np.nonzero(mask)
        any_in, all_in = _incident_masks(mask)
        vy, vx = np.nonzero(any_in)
        by, bx = np.nonzero(any_in & ~all_in)
        holes.append(CoverageHole(
            id=label - 1,
            cells=frozenset(zip(xs.tolist(), ys.tolist())),
            boundary_vertices=frozenset(zip(bx.tolist(), by.tolist())),
            vertices=frozenset(zip(vx.tolist(), vy.tolist()))
        ))
    logger.debug(f"Found {len(holes)} coverage holes")
    return holes


def hole_cell_labels(world, holes):
    """(H, W) array of hole ids, -1 for covered cells"""
    labels = np.full((world.height, world.width), -1, dtype=np.int64)
    for hole in holes:
        for x, y in hole.cells:
            labels[y, x] = hole.id
    return labels


def hole_at(world, holes, v):
    """Id of the hole with a cell incident to v, or None"""
    x, y = v
    for hole in holes:
        for cell in ((x - 1, y - 1), (x, y - 1), (x - 1, y), (x, y)):
            if cell in hole.cells:
                return hole.id
    return None


def line_of_sight(world, a, b):
    """True iff the open segment a-b touches no blocked cell

    Edge pieces are blocked only when both adjacent cells are blocked; passing
    exactly between two diagonally adjacent blocked cells is rejected, for
    diagonal legs through a crossing and for axis legs through a pinch vertex.
    """
    if a == b:
        return True
    if a[1] == b[1]:
        lo, hi = sorted((a[0], b[0]))
        if world.pinch[a[1], lo + 1:hi].any():
            return False
    elif a[0] == b[0]:
        lo, hi = sorted((a[1], b[1]))
        if world.pinch[lo + 1:hi, a[0]].any():
            return False
    trav = traverse_arrays(tuple(a), tuple(b))
    # padded_blocked is offset by one cell and blocked outside the grid
    padded = world.padded_blocked
    if trav.sides is None:
        if padded[trav.cells[:, 1] + 1, trav.cells[:, 0] + 1].any():
            return False
    else:
        near = padded[trav.sides[:, 0, 1] + 1, trav.sides[:, 0, 0] + 1]
        far = padded[trav.sides[:, 1, 1] + 1, trav.sides[:, 1, 0] + 1]
        if (near & far).any():
            return False
    squeeze = trav.squeeze
    if len(squeeze):
        first = padded[squeeze[:, 0, 1] + 1, squeeze[:, 0, 0] + 1]
        second = padded[squeeze[:, 1, 1] + 1, squeeze[:, 1, 0] + 1]
        if (first & second).any():
            return False
    return True


def load_movingai_map(path):
    """Read an octile MovingAI .map file into a (H, W) blocked mask"""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as e:
        raise ParseError('obstacles.map_file', f"cannot read {path}: {e}")

    header = {}
    idx = 0
    while idx < len(lines) and lines[idx].strip().lower() != 'map':
        parts = lines[idx].split()
        if len(parts) == 2:
            header[parts[0].lower()] = parts[1]
        idx += 1
    try:
        height = int(header['height'])
        width = int(header['width'])
    except (KeyError, ValueError):
        raise ParseError('obstacles.map_file', f"{path} has no valid width/height header")

    rows = lines[idx + 1: idx + 1 + height]
    if len(rows) != height or any(len(row) < width for row in rows):
        raise ParseError('obstacles.map_file', f"{path} body does not match {width}x{height}")

    blocked = np.array([[ch in MOVINGAI_BLOCKED for ch in row[:width]] for row in rows], dtype=bool)
    logger.info(f"Loaded MovingAI map {path.name}: {width}x{height}, {int(blocked.sum())} blocked cells")
    return blocked
