"""
Planner registry and corpus benchmarking for CorridorTheta
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor

import pandas as pd

from config import BENCH_COLUMNS, PLANNER_SETTINGS, SUMMARY_COLUMNS, get_bench_columns, resolve_thread_count
from constraints import validate_path
from data_handler import ResultRecord
from errors import CorridorThetaError, OracleBoundExceeded, OracleExhausted
from geometry import euclid
from grid_world import build_world, find_holes
from oracle import brute_force_plan, exhaustive_optimum
from planner import NoPath, astar_8, constrained_theta_star, theta_star


class PlannerManager:
    """Runs any registered planner on a scenario and audits the result"""

    def __init__(self, settings=None):
        self.logger = logging.getLogger(__name__)
        self.settings = dict(PLANNER_SETTINGS, **(settings or {}))
        self.planners = {
            'theta': self._run_theta,
            'astar': self._run_astar,
            'constrained': self._run_constrained,
            'brute': self._run_brute,
            'exhaustive': self._run_exhaustive
        }

    def get_available_planners(self):
        return list(self.planners)

    def run(self, name, scenario, world=None, holes=None):
        """ResultRecord for one planner; oracle bound errors become statuses"""
        if name not in self.planners:
            raise KeyError(f"Unknown planner '{name}'")
        world = world if world is not None else build_world(scenario)
        holes = holes if holes is not None else find_holes(world)

        status = None
        log = None
        started = time.perf_counter()
        try:
            result, log = self.planners[name](world, holes, scenario)
        except OracleBoundExceeded as e:
            result, status = NoPath(str(e), planner=name), 'bound_exceeded'
        except OracleExhausted as e:
            result, status = NoPath(str(e), planner=name), 'exhausted'
        wall = time.perf_counter() - started

        report = None
        if result.found:
            report = validate_path(result.turning_points, world, holes, scenario.constraints,
                                   scenario.start, scenario.goal)
        iterations = log.iterations if log is not None else None
        record = ResultRecord(scenario.id, name, result, report, wall, iterations, log, status)
        self.logger.debug(f"{scenario.id}/{name}: {record.status} in {wall:.3f}s")
        return record

    def _run_theta(self, world, holes, scenario):
        return theta_star(world, scenario.start, scenario.goal, holes=holes), None

    def _run_astar(self, world, holes, scenario):
        return astar_8(world, scenario.start, scenario.goal), None

    def _run_constrained(self, world, holes, scenario):
        return constrained_theta_star(world, holes, scenario.constraints, scenario.start, scenario.goal,
                                      self.settings), None

    def _run_brute(self, world, holes, scenario):
        return brute_force_plan(world, holes, scenario.constraints, scenario.start, scenario.goal,
                                settings=self.settings)

    def _run_exhaustive(self, world, holes, scenario):
        return exhaustive_optimum(world, holes, scenario.constraints, scenario.start, scenario.goal,
                                  settings=self.settings), None


def record_row(record, scenario):
    """Flat metrics row for one ResultRecord"""
    straight = euclid(scenario.start, scenario.goal, scenario.cell_size_m)
    found = record.found
    cost = record.result.cost_m if found else math.nan
    return {
        'scenario_id': scenario.id,
        'planner': record.planner,
        'status': record.status,
        'success': found,
        'valid': record.valid,
        'cost_m': cost,
        'straight_m': straight,
        'relative_length': cost / straight if found else math.nan,
        'turning_points': len(record.result.turning_points) if found else 0,
        'expansions': record.result.expansions,
        'backtracks': record.result.backtracks,
        'iterations': record.iterations if record.iterations is not None else math.nan,
        'wall_time_s': record.wall_time_s
    }


def error_row(scenario, planner, error):
    row = {key: math.nan for key in get_bench_columns()}
    row.update(scenario_id=scenario.id, planner=planner, status=error.code, success=False, valid=False,
               straight_m=euclid(scenario.start, scenario.goal, scenario.cell_size_m),
               turning_points=0, expansions=0, backtracks=0)
    return row


def run_scenario(scenario, planners, settings=None):
    """Metrics rows for every requested planner on one scenario"""
    manager = PlannerManager(settings)
    try:
        world = build_world(scenario)
        holes = find_holes(world)
    except CorridorThetaError as e:
        manager.logger.warning(f"Skipping scenario '{scenario.id}': {e}")
        return [error_row(scenario, name, e) for name in planners]
    return [record_row(manager.run(name, scenario, world, holes), scenario) for name in planners]


def compare_runs(scenarios, planners=('theta', 'constrained'), workers=None, settings=None):
    """Metrics table with one row per (scenario, planner), in input order"""
    logger = logging.getLogger(__name__)
    scenarios = list(scenarios)
    workers = min(workers or resolve_thread_count(), max(1, len(scenarios)))
    logger.info(f"Benchmarking {len(scenarios)} scenarios x {len(planners)} planners on {workers} workers")

    if workers <= 1:
        batches = [run_scenario(s, planners, settings) for s in scenarios]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(run_scenario, scenarios, [planners] * len(scenarios),
                                    [settings] * len(scenarios)))

    rows = [row for batch in batches for row in batch]
    return pd.DataFrame(rows, columns=get_bench_columns())


def summarize(df):
    """Per-planner success rate and means, in first-seen planner order"""
    rows = []
    for planner, group in df.groupby('planner', sort=False):
        succeeded = group[group['success'].astype(bool)]
        rows.append({
            'planner': planner,
            'runs': len(group),
            'success_rate': float(group['success'].astype(bool).mean()) if len(group) else math.nan,
            'mean_relative_length': float(succeeded['relative_length'].mean()) if len(succeeded) else math.nan,
            'mean_expansions': float(group['expansions'].mean()),
            'mean_iterations': float(group['iterations'].mean()) if group['iterations'].notna().any() else math.nan,
            'mean_wall_time_s': float(group['wall_time_s'].mean())
        })
    return pd.DataFrame(rows, columns=list(SUMMARY_COLUMNS))


def slowdown_ratio(df, planner='constrained', baseline='theta'):
    """Mean wall time of planner over baseline on the scenarios both ran"""
    wide = df.pivot_table(index='scenario_id', columns='planner', values='wall_time_s', aggfunc='first')
    if planner not in wide or baseline not in wide:
        return math.nan
    both = wide[[planner, baseline]].dropna()
    if both.empty or both[baseline].mean() == 0:
        return math.nan
    return float(both[planner].mean() / both[baseline].mean())


def agreement_rate(df, planner='constrained', reference='exhaustive'):
    """Share of scenarios where planner and reference agree on path existence"""
    usable = df[~df['status'].isin(['bound_exceeded', 'exhausted'])]
    usable = usable.assign(success=usable['success'].astype(int))
    wide = usable.pivot_table(index='scenario_id', columns='planner', values='success', aggfunc='first')
    if planner not in wide or reference not in wide:
        return math.nan
    both = wide[[planner, reference]].dropna()
    if both.empty:
        return math.nan
    return float((both[planner].astype(bool) == both[reference].astype(bool)).mean())


def format_table(df, columns=BENCH_COLUMNS):
    """Aligned plain-text table with display headers"""
    return df.rename(columns=columns).to_string(index=False, float_format=lambda v: f"{v:.4f}")


def write_metrics(df, path=None, fmt='csv'):
    """CSV or JSON records to a file, or returned as text when path is None"""
    text = df.to_json(orient='records', indent=2) if fmt == 'json' else df.to_csv(index=False)
    if path is None:
        return text
    with open(path, 'w', newline='') as handle:
        handle.write(text)
    return text
