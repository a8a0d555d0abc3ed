"""
Scenario and result JSON for CorridorTheta

Scenario schema (version 1)::

    {"schema": 1, "id": "...",
     "grid": {"width": W, "height": H, "cell_size_m": 3.0},
     "obstacles": {"rectangles": [[x, y, w, h], ...], "map_file": "maps/a.map"},
     "coverage": {"access_points": [{"center": [x_m, y_m], "radius_m": r}],
                  "uncovered_cells": [[x, y], ...]},
     "infrastructure": [[x, y], ...],
     "constraints": {"l_min_m": .., "theta_bmax_deg": .., "d_row_m": ..,
                     "d_cfod_m": .., "d_zero_m": ..},
     "start": [x, y], "goal": [x, y], "seed": 0}

Every block except grid, start and goal is optional. A null constraint value
means unbounded.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

from config import SETTINGS
from constraints import ConstraintSet
from errors import ParseError
from grid_world import AccessPoint

DIGITS = SETTINGS['float_digits']


@dataclass
class ScenarioConfig:
    """One planning instance"""
    width: int
    height: int
    start: Tuple[int, int]
    goal: Tuple[int, int]
    id: str = 'scenario'
    cell_size_m: float = 1.0
    rectangles: Tuple[Tuple[int, int, int, int], ...] = ()
    map_file: Optional[str] = None
    map_path: Optional[Path] = field(default=None, compare=False)
    access_points: Tuple[AccessPoint, ...] = ()
    uncovered_cells: Tuple[Tuple[int, int], ...] = ()
    infrastructure: Tuple[Tuple[float, float], ...] = ()
    constraints: ConstraintSet = field(default_factory=ConstraintSet)
    seed: int = 0


def _is_int(value):
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _int(value, path, minimum=None):
    if not _is_int(value):
        raise ParseError(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ParseError(path, f"must be >= {minimum}, got {value}")
    return value


def _number(value, path, positive=False):
    if not _is_number(value) or not math.isfinite(value):
        raise ParseError(path, f"expected a finite number, got {value!r}")
    if positive and value <= 0:
        raise ParseError(path, f"must be positive, got {value}")
    return float(value)


def _pair(value, path, integer=True):
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ParseError(path, f"expected a pair [x, y], got {value!r}")
    if integer:
        return _int(value[0], f"{path}[0]"), _int(value[1], f"{path}[1]")
    return _number(value[0], f"{path}[0]"), _number(value[1], f"{path}[1]")


def _block(data, key):
    value = data.get(key)
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ParseError(key, f"expected an object, got {type(value).__name__}")
    return value


def _list(data, key, path):
    value = data.get(key)
    if value is None:
        return []
    if not isinstance(value, list):
        raise ParseError(path, f"expected a list, got {type(value).__name__}")
    return value


def parse_scenario(data, base_dir=None):
    """Validate a scenario document (bytes, str or dict) into a ScenarioConfig"""
    if isinstance(data, (bytes, bytearray)):
        try:
            data = data.decode('utf-8')
        except UnicodeDecodeError as e:
            raise ParseError('$', f"not UTF-8: {e}")
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as e:
            raise ParseError('$', f"invalid JSON: {e}")
    if not isinstance(data, dict):
        raise ParseError('$', "scenario must be a JSON object")

    schema = data.get('schema', SETTINGS['schema_version'])
    if schema != SETTINGS['schema_version']:
        raise ParseError('schema', f"unsupported version {schema!r}")

    if 'grid' not in data:
        raise ParseError('grid', "missing")
    grid = _block(data, 'grid')
    width = _int(grid.get('width'), 'grid.width', 1)
    height = _int(grid.get('height'), 'grid.height', 1)
    cell_size = _number(grid.get('cell_size_m', 1.0), 'grid.cell_size_m', positive=True)

    obstacles = _block(data, 'obstacles')
    rectangles = []
    for i, rect in enumerate(_list(obstacles, 'rectangles', 'obstacles.rectangles')):
        path = f"obstacles.rectangles[{i}]"
        if not isinstance(rect, list) or len(rect) != 4:
            raise ParseError(path, f"expected [x, y, w, h], got {rect!r}")
        x, y = _int(rect[0], f"{path}[0]"), _int(rect[1], f"{path}[1]")
        w, h = _int(rect[2], f"{path}[2]", 1), _int(rect[3], f"{path}[3]", 1)
        rectangles.append((x, y, w, h))

    map_file = obstacles.get('map_file')
    map_path = None
    if map_file is not None:
        if not isinstance(map_file, str):
            raise ParseError('obstacles.map_file', f"expected a path string, got {map_file!r}")
        map_path = Path(map_file)
        if not map_path.is_absolute() and base_dir is not None:
            map_path = Path(base_dir) / map_path
        if not map_path.is_file():
            raise ParseError('obstacles.map_file', f"file not found: {map_path}")

    coverage = _block(data, 'coverage')
    access_points = []
    for i, ap in enumerate(_list(coverage, 'access_points', 'coverage.access_points')):
        path = f"coverage.access_points[{i}]"
        if not isinstance(ap, dict):
            raise ParseError(path, "expected an object")
        center = _pair(ap.get('center'), f"{path}.center", integer=False)
        radius = _number(ap.get('radius_m'), f"{path}.radius_m", positive=True)
        access_points.append(AccessPoint(center, radius))

    uncovered = []
    for i, cell in enumerate(_list(coverage, 'uncovered_cells', 'coverage.uncovered_cells')):
        path = f"coverage.uncovered_cells[{i}]"
        x, y = _pair(cell, path)
        if not (0 <= x < width and 0 <= y < height):
            raise ParseError(path, f"cell {(x, y)} outside the {width}x{height} grid")
        uncovered.append((x, y))

    infrastructure = [_pair(p, f"infrastructure[{i}]", integer=False)
                      for i, p in enumerate(_list(data, 'infrastructure', 'infrastructure'))]
    if len(infrastructure) == 1:
        raise ParseError('infrastructure', "polyline needs at least 2 points")

    raw_constraints = _block(data, 'constraints')
    for key, value in raw_constraints.items():
        if key not in ConstraintSet.__dataclass_fields__:
            raise ParseError(f"constraints.{key}", "unknown constraint")
        if value is not None and not _is_number(value):
            raise ParseError(f"constraints.{key}", f"expected a number or null, got {value!r}")
    constraints = ConstraintSet.from_dict(raw_constraints)

    if 'start' not in data:
        raise ParseError('start', "missing")
    if 'goal' not in data:
        raise ParseError('goal', "missing")
    start = _pair(data['start'], 'start')
    goal = _pair(data['goal'], 'goal')
    if start == goal:
        raise ParseError('goal', f"equals start {start}")

    scenario_id = data.get('id', 'scenario')
    if not isinstance(scenario_id, str) or not scenario_id:
        raise ParseError('id', f"expected a non-empty string, got {scenario_id!r}")

    return ScenarioConfig(
        width=width,
        height=height,
        start=start,
        goal=goal,
        id=scenario_id,
        cell_size_m=cell_size,
        rectangles=tuple(rectangles),
        map_file=map_file,
        map_path=map_path,
        access_points=tuple(access_points),
        uncovered_cells=tuple(uncovered),
        infrastructure=tuple(infrastructure),
        constraints=constraints,
        seed=_int(data.get('seed', 0), 'seed')
    )


def _round(value):
    if value is None or (isinstance(value, float) and math.isinf(value)):
        return None
    return round(float(value), DIGITS)


def serialize_scenario(config):
    """ScenarioConfig -> schema-1 dict with 9-digit floats and null for unbounded"""
    obstacles = {'rectangles': [list(rect) for rect in config.rectangles]}
    if config.map_file is not None:
        obstacles['map_file'] = config.map_file
    return {
        'schema': SETTINGS['schema_version'],
        'id': config.id,
        'grid': {'width': config.width, 'height': config.height, 'cell_size_m': _round(config.cell_size_m)},
        'obstacles': obstacles,
        'coverage': {
            'access_points': [
                {'center': [_round(ap.center[0]), _round(ap.center[1])], 'radius_m': _round(ap.radius_m)}
                for ap in config.access_points
            ],
            'uncovered_cells': [list(cell) for cell in config.uncovered_cells]
        },
        'infrastructure': [[_round(x), _round(y)] for x, y in config.infrastructure],
        'constraints': {key: _round(value) for key, value in config.constraints.to_dict().items()},
        'start': list(config.start),
        'goal': list(config.goal),
        'seed': config.seed
    }


def dumps(payload):
    return json.dumps(payload, indent=2) + "\n"


@dataclass
class ResultRecord:
    """Outcome of one planner on one scenario"""
    scenario_id: str
    planner: str
    result: object                      # PlannedPath or NoPath
    report: object = None               # ConstraintReport of a found path
    wall_time_s: float = 0.0
    iterations: Optional[int] = None
    iteration_log: object = None
    status: Optional[str] = None

    def __post_init__(self):
        if self.status is None:
            self.status = 'ok' if self.found else 'no_path'

    @property
    def valid(self):
        return self.found and self.report is not None and self.report.passed

    @property
    def found(self):
        return self.result is not None and self.result.found

    def to_dict(self):
        found = self.found
        payload = {
            'schema': SETTINGS['schema_version'],
            'scenario': self.scenario_id,
            'planner': self.planner,
            'status': self.status,
            'found': found,
            'valid': self.valid,
            'turning_points': [list(p) for p in self.result.turning_points] if found else None,
            'cost_m': _round(self.result.cost_m) if found else None,
            'expansions': self.result.expansions if self.result is not None else 0,
            'backtracks': self.result.backtracks if self.result is not None else 0,
            'iterations': self.iterations,
            'wall_time_s': _round(self.wall_time_s),
            'visited': len(self.result.visited_trace) if self.result is not None else 0,
            'reason': None if found or self.result is None else self.result.reason,
            'report': self.report.to_dict() if self.report is not None else None
        }
        if self.iteration_log is not None:
            payload['iteration_log'] = self.iteration_log.to_list()
        return payload


def parse_path(data):
    """Turning points from a result document or a bare [[x, y], ...] list"""
    if isinstance(data, dict):
        if data.get('turning_points') is None:
            raise ParseError('turning_points', "result has no path")
        data = data['turning_points']
    if not isinstance(data, list):
        raise ParseError('turning_points', "expected a list of [x, y] pairs")
    return [_pair(p, f"turning_points[{i}]") for i, p in enumerate(data)]


class DataHandler:
    """File-level loading and saving of scenarios, corpora, paths and results"""

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def load_scenario(self, path):
        path = Path(path)
        try:
            raw = path.read_bytes()
        except OSError as e:
            raise ParseError('$', f"cannot read {path}: {e}")
        scenario = parse_scenario(raw, base_dir=path.parent)
        self.logger.debug(f"Loaded scenario '{scenario.id}' ({scenario.width}x{scenario.height}) from {path}")
        return scenario

    def save_scenario(self, config, path):
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(dumps(serialize_scenario(config)))
        except OSError as e:
            self.logger.error(f"Failed to save scenario '{config.id}': {e}")
            raise
        return path

    def load_corpus(self, directory):
        """Every *.json scenario in a directory, in filename order"""
        directory = Path(directory)
        if not directory.is_dir():
            raise ParseError('corpus', f"not a directory: {directory}")
        scenarios = [self.load_scenario(p) for p in sorted(directory.glob('*.json'))]
        self.logger.info(f"Loaded {len(scenarios)} scenarios from {directory}")
        return scenarios

    def save_corpus(self, scenarios, directory):
        directory = Path(directory)
        paths = [self.save_scenario(s, directory / f"{s.id}.json") for s in scenarios]
        self.logger.info(f"Wrote {len(paths)} scenarios to {directory}")
        return paths

    def load_path(self, path):
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ParseError('turning_points', f"cannot read path file {path}: {e}")
        return parse_path(data)
