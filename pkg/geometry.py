"""
Exact 2D primitives shared by the planners and the validator

Vertices are integer grid corners ``(x, y)`` with ``y`` pointing down; points
are real coordinates in the same frame. Lengths are returned in meters when a
``cell_size`` is given.
"""

import math
from functools import lru_cache
from typing import NamedTuple, Optional, Tuple

import numpy as np

from config import PLANNER_SETTINGS
from errors import DegenerateSegment, InvalidPolyline

Vertex = Tuple[int, int]
Point = Tuple[float, float]


class Segment(NamedTuple):
    a: Point
    b: Point


class Piece(NamedTuple):
    """Maximal sub-segment of a traversal that stays in one cell or on one cell edge"""
    cell: Tuple[int, int]
    sides: Optional[Tuple[Tuple[int, int], Tuple[int, int]]]  # set only for edge pieces
    fraction: float


class Crossing(NamedTuple):
    """Open segment passes exactly through a grid vertex between two diagonal cells"""
    vertex: Vertex
    squeeze: Tuple[Tuple[int, int], Tuple[int, int]]


class Traversal(NamedTuple):
    pieces: Tuple[Piece, ...]
    crossings: Tuple[Crossing, ...]


def euclid(a, b, cell_size=1.0):
    """Euclidean distance, scaled by cell_size"""
    return math.hypot(b[0] - a[0], b[1] - a[1]) * cell_size


def turn_angle(dir_in, dir_out):
    """Absolute heading change in degrees, in [0, 180]"""
    (ax, ay), (bx, by) = dir_in
    (cx, cy), (dx, dy) = dir_out
    ux, uy = bx - ax, by - ay
    vx, vy = dx - cx, dy - cy
    if ux == 0 and uy == 0:
        raise DegenerateSegment(a=dir_in[0], b=dir_in[1])
    if vx == 0 and vy == 0:
        raise DegenerateSegment(a=dir_out[0], b=dir_out[1])
    cross = ux * vy - uy * vx
    dot = ux * vx + uy * vy
    return math.degrees(math.atan2(abs(cross), dot))


def vertex_turn(a, b, c):
    """Turn angle at b for the polyline a -> b -> c"""
    return turn_angle((a, b), (b, c))


def is_collinear(a, b, c):
    """Exact cross product test on integer vertices"""
    return (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]) == 0


def continues_straight(a, b, c):
    """True when a -> b -> c is collinear and keeps its direction"""
    if a == b or b == c:
        return False
    if not is_collinear(a, b, c):
        return False
    return (b[0] - a[0]) * (c[0] - b[0]) + (b[1] - a[1]) * (c[1] - b[1]) > 0


def merge_collinear(points):
    """Drop interior points where the path continues straight"""
    if len(points) < 3:
        return list(points)
    merged = [points[0]]
    for i in range(1, len(points) - 1):
        if continues_straight(merged[-1], points[i], points[i + 1]):
            continue
        merged.append(points[i])
    merged.append(points[-1])
    return merged


def polyline_length(points, cell_size=1.0):
    return sum(euclid(points[i], points[i + 1], cell_size) for i in range(len(points) - 1))


def distances_to_polyline(points, poly):
    """Vectorized point-to-polyline distance for an (N, 2) array of points"""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    line = np.asarray(poly, dtype=float).reshape(-1, 2)
    if len(line) < 2:
        raise InvalidPolyline(count=len(line))

    start = line[:-1]
    seg = line[1:] - start
    seg_len2 = (seg ** 2).sum(axis=1)
    rel = pts[:, None, :] - start[None, :, :]
    with np.errstate(invalid='ignore', divide='ignore'):
        t = np.where(seg_len2 > 0, (rel * seg[None, :, :]).sum(axis=2) / seg_len2, 0.0)
    t = np.clip(t, 0.0, 1.0)
    foot = start[None, :, :] + t[:, :, None] * seg[None, :, :]
    dist = np.hypot(pts[:, None, 0] - foot[:, :, 0], pts[:, None, 1] - foot[:, :, 1])
    return dist.min(axis=1)


def distance_to_polyline(p, poly):
    """Minimum distance from p to any segment of poly"""
    if len(poly) < 2:
        raise InvalidPolyline(count=len(poly))
    return float(distances_to_polyline([p], poly)[0])


def edge_owner(line_index):
    """Cell index that owns a piece lying on grid line ``line_index``"""
    return line_index - 1 if line_index >= 1 else 0


def _clip_parameters(a, b, box):
    """Liang-Barsky parameter interval of a->b inside a closed box, or None"""
    x0, y0 = a
    dx, dy = b[0] - x0, b[1] - y0
    xmin, ymin, xmax, ymax = box
    t0, t1 = 0.0, 1.0
    for p, q in ((-dx, x0 - xmin), (dx, xmax - x0), (-dy, y0 - ymin), (dy, ymax - y0)):
        if p == 0:
            if q < 0:
                return None
            continue
        r = q / p
        if p < 0:
            if r > t1:
                return None
            if r > t0:
                t0 = r
        else:
            if r < t0:
                return None
            if r < t1:
                t1 = r
    if t1 <= t0:
        return None
    return t0, t1


def clip_length_in_cells(segment, cells, cell_size=1.0):
    """Length of ``segment`` inside the union of unit ``cells``

    A piece lying exactly on a grid line is counted once, for the cell on the
    lower-coordinate side of that line (row/column 0 on the first line).
    """
    a, b = segment
    length = math.hypot(b[0] - a[0], b[1] - a[1])
    if length == 0:
        return 0.0

    on_row_line = a[1] == b[1] and float(a[1]).is_integer()
    on_col_line = a[0] == b[0] and float(a[0]).is_integer()
    lo_x, hi_x = min(a[0], b[0]), max(a[0], b[0])
    lo_y, hi_y = min(a[1], b[1]), max(a[1], b[1])

    intervals = []
    for cx, cy in cells:
        if cx + 1 < lo_x or cx > hi_x or cy + 1 < lo_y or cy > hi_y:
            continue
        if on_row_line and cy != edge_owner(int(a[1])):
            continue
        if on_col_line and cx != edge_owner(int(a[0])):
            continue
        interval = _clip_parameters(a, b, (cx, cy, cx + 1, cy + 1))
        if interval is not None:
            intervals.append(interval)

    if not intervals:
        return 0.0
    intervals.sort()
    covered = 0.0
    cur_start, cur_end = intervals[0]
    for start, end in intervals[1:]:
        if start > cur_end:
            covered += cur_end - cur_start
            cur_start, cur_end = start, end
        elif end > cur_end:
            cur_end = end
    covered += cur_end - cur_start
    return covered * length * cell_size


class TraversalArrays(NamedTuple):
    """Array form of a traversal for vectorized lookups"""
    cells: np.ndarray               # (N, 2) attributed (x, y) cells
    fractions: np.ndarray           # (N,)
    sides: Optional[np.ndarray]     # (N, 2, 2) for legs along a grid line
    squeeze: np.ndarray             # (K, 2, 2) diagonal cells of vertex crossings


@lru_cache(maxsize=PLANNER_SETTINGS['los_cache_size'])
def traverse_arrays(a, b):
    """Decompose the vertex segment a->b into cell pieces and vertex crossings

    Exact integer arithmetic: with N = |dx| and M = |dy| every grid-line
    crossing sits at a multiple of 1/N or 1/M of the segment, so all
    breakpoints are integers over the common denominator T = N * M.
    """
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    n, m = abs(dx), abs(dy)
    no_squeeze = np.zeros((0, 2, 2), dtype=np.int64)
    if n == 0 and m == 0:
        return TraversalArrays(np.zeros((0, 2), dtype=np.int64), np.zeros(0), None, no_squeeze)

    total = max(n, 1) * max(m, 1)
    stops = np.zeros(0, dtype=np.int64)
    if n:
        stops = np.union1d(stops, np.arange(n + 1, dtype=np.int64) * (total // n))
    if m:
        stops = np.union1d(stops, np.arange(m + 1, dtype=np.int64) * (total // m))
    mid = stops[:-1] + stops[1:]
    fractions = np.diff(stops) / total
    denom = 2 * total

    sides = None
    if dx == 0:
        rows = (2 * ay * total + dy * mid) // denom
        cols = np.full_like(rows, edge_owner(ax))
        sides = np.stack([np.stack([np.full_like(rows, ax - 1), rows], axis=1),
                          np.stack([np.full_like(rows, ax), rows], axis=1)], axis=1)
    elif dy == 0:
        cols = (2 * ax * total + dx * mid) // denom
        rows = np.full_like(cols, edge_owner(ay))
        sides = np.stack([np.stack([cols, np.full_like(cols, ay - 1)], axis=1),
                          np.stack([cols, np.full_like(cols, ay)], axis=1)], axis=1)
    else:
        cols = (2 * ax * total + dx * mid) // denom
        rows = (2 * ay * total + dy * mid) // denom
    cells = np.stack([cols, rows], axis=1)

    squeeze = no_squeeze
    if n and m:
        s = np.arange(total // math.gcd(n, m), total, total // math.gcd(n, m), dtype=np.int64)
        k = ax + dx * s // total
        row = ay + dy * s // total
        if dx * dy > 0:
            squeeze = np.stack([np.stack([k - 1, row], axis=1), np.stack([k, row - 1], axis=1)], axis=1)
        else:
            squeeze = np.stack([np.stack([k - 1, row - 1], axis=1), np.stack([k, row], axis=1)], axis=1)

    for array in (cells, fractions, squeeze) + ((sides,) if sides is not None else ()):
        array.setflags(write=False)
    return TraversalArrays(cells, fractions, sides, squeeze)


@lru_cache(maxsize=PLANNER_SETTINGS['los_cache_size'])
def traverse(a, b):
    """Pieces and crossings of a->b as tuples of cell coordinates"""
    arrays = traverse_arrays(a, b)

    def cell(row):
        return int(row[0]), int(row[1])

    pieces = tuple(
        Piece(cell(arrays.cells[i]),
              None if arrays.sides is None else (cell(arrays.sides[i, 0]), cell(arrays.sides[i, 1])),
              float(arrays.fractions[i]))
        for i in range(len(arrays.cells))
    )
    # The crossed vertex is the corner shared by the two squeezed cells
    crossings = tuple(
        Crossing((int(max(sq[0, 0], sq[1, 0])), int(max(sq[0, 1], sq[1, 1]))), (cell(sq[0]), cell(sq[1])))
        for sq in arrays.squeeze
    )
    return Traversal(pieces, crossings)


def segment_pieces(a, b, cell_size=1.0):
    """(attributed cell, length in meters) for each piece of a->b"""
    length = euclid(a, b, cell_size)
    return [(piece.cell, piece.fraction * length) for piece in traverse(tuple(a), tuple(b)).pieces]


def sample_segment(a, b, step):
    """Points every ``step`` grid units along a->b, endpoints included"""
    length = euclid(a, b)
    count = max(1, int(math.ceil(length / step)))
    t = np.linspace(0.0, 1.0, count + 1)
    return np.column_stack((a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t))
