"""
Seeded synthetic corridor corpus

Each fragment is a rectangular strip along a straight infrastructure line on
its top edge, with random rectangular obstacles and access points placed so
that at least one coverage hole remains and no hole cuts the corridor band
for longer than the storage budget.
"""

import logging
import math
from dataclasses import dataclass, fields
from typing import Tuple

import numpy as np

from config import CORPUS_DEFAULTS
from constraints import ConstraintSet
from data_handler import ScenarioConfig
from errors import ParseError
from grid_world import AccessPoint, coverage_mask, label_uncovered

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CorpusParams:
    fragments: int = CORPUS_DEFAULTS['fragments']
    width: int = CORPUS_DEFAULTS['width']
    height: int = CORPUS_DEFAULTS['height']
    cell_size_m: float = CORPUS_DEFAULTS['cell_size_m']
    min_los_cells: int = CORPUS_DEFAULTS['min_los_cells']
    theta_bmax_deg: float = CORPUS_DEFAULTS['theta_bmax_deg']
    l_min_m: float = CORPUS_DEFAULTS['l_min_m']
    d_row_m: float = CORPUS_DEFAULTS['d_row_m']
    d_cfod_m: float = CORPUS_DEFAULTS['d_cfod_m']
    d_zero_m: float = CORPUS_DEFAULTS['d_zero_m']
    obstacle_count: Tuple[int, int] = CORPUS_DEFAULTS['obstacle_count']
    obstacle_size: Tuple[int, int] = CORPUS_DEFAULTS['obstacle_size']
    ap_count: Tuple[int, int] = CORPUS_DEFAULTS['ap_count']
    ap_radius_m: Tuple[float, float] = CORPUS_DEFAULTS['ap_radius_m']
    require_hole: bool = CORPUS_DEFAULTS['require_hole']
    max_attempts: int = CORPUS_DEFAULTS['max_attempts']

    @classmethod
    def from_overrides(cls, **overrides):
        known = {f.name for f in fields(cls)}
        return cls(**{key: value for key, value in overrides.items() if key in known and value is not None})

    def band(self):
        """Vertex rows inside the corridor band below the top-edge line"""
        low = math.ceil(self.d_row_m / self.cell_size_m - 1e-9)
        high = min(self.height, math.floor(self.d_cfod_m / self.cell_size_m + 1e-9))
        return low, high

    def validate(self):
        """Check parameter consistency"""
        if self.fragments < 0:
            return False, "fragments must be >= 0"
        if self.width < 2 or self.height < 1:
            return False, f"grid {self.width}x{self.height} is too small"
        if self.min_los_cells > self.width:
            return False, f"min_los_cells {self.min_los_cells} exceeds width {self.width}"
        for name in ('obstacle_count', 'obstacle_size', 'ap_count', 'ap_radius_m'):
            lo, hi = getattr(self, name)
            if lo < 0 or lo > hi:
                return False, f"{name} range ({lo}, {hi}) is invalid"
        if self.obstacle_size[0] < 1:
            return False, "obstacle_size must start at 1"
        low, high = self.band()
        if low > high:
            return False, f"corridor band [{self.d_row_m}, {self.d_cfod_m}] m holds no vertex row"
        return True, "OK"


def _endpoints(rng, params):
    slack = (params.width - params.min_los_cells) // 2
    s_hi = min(40, slack)
    s_lo = min(10, s_hi)
    low, high = params.band()
    start = (int(rng.integers(s_lo, s_hi + 1)), int(rng.integers(low, high + 1)))
    goal = (params.width - int(rng.integers(s_lo, s_hi + 1)), int(rng.integers(low, high + 1)))
    return start, goal


def _clear_of(rect, vertex, margin=2):
    x, y, w, h = rect
    vx, vy = vertex
    return x + w < vx - margin or x > vx + margin or y + h < vy - margin or y > vy + margin


def _rectangles(rng, params, endpoints):
    count = int(rng.integers(params.obstacle_count[0], params.obstacle_count[1] + 1))
    rects = []
    for _ in range(count):
        for _ in range(params.max_attempts):
            w = int(rng.integers(params.obstacle_size[0], params.obstacle_size[1] + 1))
            h = int(rng.integers(params.obstacle_size[0], params.obstacle_size[1] + 1))
            w, h = min(w, params.width), min(h, params.height)
            rect = (int(rng.integers(0, params.width - w + 1)), int(rng.integers(0, params.height - h + 1)), w, h)
            if all(_clear_of(rect, v) for v in endpoints):
                rects.append(rect)
                break
    return rects


def _access_points(rng, params):
    count = int(rng.integers(params.ap_count[0], params.ap_count[1] + 1))
    extent_x = params.width * params.cell_size_m
    extent_y = params.height * params.cell_size_m
    return [
        AccessPoint(
            (round(float(rng.uniform(0, extent_x)), 3), round(float(rng.uniform(0, extent_y)), 3)),
            round(float(rng.uniform(params.ap_radius_m[0], params.ap_radius_m[1])), 3)
        )
        for _ in range(count)
    ]


def _hole_count(params, access_points):
    covered = coverage_mask(params.width, params.height, params.cell_size_m, access_points)
    return label_uncovered(covered)[1]


def band_blocking_run(params, access_points):
    """Longest run of columns whose band cells are all uncovered, in cells"""
    low, high = params.band()
    if high <= low:
        return 0
    covered = coverage_mask(params.width, params.height, params.cell_size_m, access_points)
    blocking = (~covered[low:high]).all(axis=0)
    edges = np.diff(np.r_[0, blocking.astype(np.int8), 0])
    starts, ends = np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)
    return int((ends - starts).max()) if len(starts) else 0


def _acceptable(params, access_points):
    """A required hole exists and no hole spans the band for longer than storage allows"""
    if params.require_hole and _hole_count(params, access_points) == 0:
        return False
    return band_blocking_run(params, access_points) * params.cell_size_m <= params.d_zero_m


def generate_fragment(params, seed, index):
    """One corridor fragment from its own child generator"""
    rng = np.random.default_rng([seed, index])
    start, goal = _endpoints(rng, params)
    rectangles = _rectangles(rng, params, (start, goal))

    access_points = _access_points(rng, params)
    attempts = 1
    while not _acceptable(params, access_points) and attempts < params.max_attempts:
        access_points = _access_points(rng, params)
        attempts += 1
    if not _acceptable(params, access_points):
        logger.warning(f"Fragment {index}: no acceptable access point layout after {attempts} draws")

    return ScenarioConfig(
        width=params.width,
        height=params.height,
        start=start,
        goal=goal,
        id=f"fragment_{index:03d}",
        cell_size_m=float(params.cell_size_m),
        rectangles=tuple(rectangles),
        access_points=tuple(access_points),
        infrastructure=((0.0, 0.0), (float(params.width), 0.0)),
        constraints=ConstraintSet(l_min_m=params.l_min_m, theta_bmax_deg=params.theta_bmax_deg,
                                  d_row_m=params.d_row_m, d_cfod_m=params.d_cfod_m, d_zero_m=params.d_zero_m),
        seed=int(seed)
    )


def generate_corpus(params=None, seed=0):
    """Deterministic list of corridor scenarios"""
    params = params or CorpusParams()
    ok, message = params.validate()
    if not ok:
        raise ParseError('corpus', message)
    scenarios = [generate_fragment(params, seed, i) for i in range(params.fragments)]
    logger.info(f"Generated {len(scenarios)} fragments of {params.width}x{params.height} cells (seed {seed})")
    return scenarios
