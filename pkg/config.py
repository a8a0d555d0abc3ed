"""
Configuration and constants for CorridorTheta
Version: 1.0.0
"""

import math
import os

# Version and application info
VERSION = "1.0.0"
APP_NAME = "CorridorTheta"
DESCRIPTION = "Constrained any-angle UAV route planning for corridor surveillance"

# Constraint defaults applied when a scenario omits a field (trivial constraints)
DEFAULT_CONSTRAINTS = {
    'l_min_m': 0.0,
    'theta_bmax_deg': 180.0,
    'd_row_m': 0.0,
    'd_cfod_m': math.inf,
    'd_zero_m': math.inf
}

PLANNER_NAMES = ('theta', 'astar', 'constrained', 'brute', 'exhaustive')

PLANNER_SETTINGS = {
    'max_backtracks': 500,          # via_neighbor steps outside holes per run
    'max_hole_backtracks': 200,     # distance-based rescinds per hole exploration
    'max_hole_entries': 4,          # explorations started per hole per run
    'max_hole_expansions': 4000,    # inner expansions per hole exploration
    'brute_iteration_cap': 10000,
    'exhaustive_max_vertices': 12,  # turning points including start and goal
    'exhaustive_max_grid': 10,      # cells per side
    'certify_max_vertices': 81,     # exact closing search on grids up to 8x8
    'certify_ratio': 1.15,          # replace a found path when the optimum is cheaper by more
    'tolerance': 1e-9,              # meters / degrees at constraint boundaries
    'audit_step_cells': 0.25,       # corridor audit sampling step
    'los_cache_size': 262144
}

# Synthetic corridor corpus (1950m x 315m fragments at 3m cells)
CORPUS_DEFAULTS = {
    'fragments': 30,
    'width': 650,
    'height': 105,
    'cell_size_m': 3.0,
    'min_los_cells': 500,
    'theta_bmax_deg': 20.0,
    'l_min_m': 9.0,
    'd_row_m': 15.0,
    'd_cfod_m': 270.0,
    'd_zero_m': 450.0,
    'obstacle_count': (4, 10),
    'obstacle_size': (3, 18),
    'ap_count': (5, 8),
    'ap_radius_m': (150.0, 260.0),
    'require_hole': True,
    'max_attempts': 25
}

SVG_LAYERS = ('coverage', 'obstacles', 'corridor', 'continuous', 'final', 'visited')

# Figure color key
RENDER_THEME = {
    'coverage': '#FFD700',      # partial yellow circles
    'obstacles': '#808080',     # grey rectangles
    'corridor': '#FF0000',      # red region
    'continuous': '#FFFFFF',    # unconstrained shortest path
    'final': '#00A000',         # constrained path
    'visited': '#1E50FF',       # expansion trace
    'background': '#2B2B2B',
    'frame': '#000000',
    'coverage_opacity': '0.35',
    'corridor_opacity': '0.25',
    'stroke_width': '2',
    'visited_radius': '1',
    'cell_px': 8
}

# Workbook styling themes
THEMES = {
    'results': {
        'header': '2F5597',      # Dark blue header
        'alt_row': 'F8F9FA',     # Light gray alternating rows
        'text_primary': '212529'
    },
    'summary': {
        'header': '0F7B0F',      # Green header for per-planner summary
        'alt_row': 'F0F8F0',
        'text_primary': '212529'
    }
}

# Metrics table columns - maps internal field names to table headers
BENCH_COLUMNS = {
    'scenario_id': 'Scenario',
    'planner': 'Planner',
    'status': 'Status',
    'success': 'Success',
    'valid': 'Valid',
    'cost_m': 'Cost (m)',
    'straight_m': 'Straight Line (m)',
    'relative_length': 'Relative Length',
    'turning_points': 'Turning Points',
    'expansions': 'Expansions',
    'backtracks': 'Backtracks',
    'iterations': 'Iterations',
    'wall_time_s': 'Wall Time (s)'
}

SUMMARY_COLUMNS = {
    'planner': 'Planner',
    'runs': 'Runs',
    'success_rate': 'Success Rate',
    'mean_relative_length': 'Mean Relative Length',
    'mean_expansions': 'Mean Expansions',
    'mean_iterations': 'Mean Iterations',
    'mean_wall_time_s': 'Mean Wall Time (s)'
}

EXIT_CODES = {
    'ok': 0,
    'error': 1,
    'no_path': 2,
    'invalid': 3
}

ERROR_MESSAGES = {
    'degenerate_segment': "Segment has zero length: {a} -> {b}",
    'invalid_polyline': "Polyline needs at least 2 points, got {count}",
    'infeasible_endpoints': "{which} vertex {vertex} is {reason}",
    'malformed_path': "Malformed path: {reason}",
    'oracle_exhausted': "Brute force gave up after {iterations} iterations",
    'oracle_bound_exceeded': "Exhaustive search bound exceeded: {reason}",
    'parse_error': "Invalid scenario field '{field}': {reason}",
    'invalid_constraints': "Invalid constraints: {reason}",
    'error': "{reason}"
}

SETTINGS = {
    'schema_version': 1,
    'float_digits': 9,
    'threads_env': 'CORRIDOR_THETA_THREADS',
    'max_threads': 8,
    'log_level': 'INFO',
    'log_format': '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
}


def get_version_info():
    """Get formatted version information"""
    return f"{APP_NAME} v{VERSION}"


def get_error_message(key, **context):
    """Format an error message template, tolerating missing fields"""
    template = ERROR_MESSAGES.get(key, ERROR_MESSAGES['error'])
    try:
        return template.format(**context)
    except (KeyError, IndexError):
        return template


def get_bench_columns():
    """Get metric field names in table order"""
    return list(BENCH_COLUMNS.keys())


def get_summary_columns():
    """Get summary field names in table order"""
    return list(SUMMARY_COLUMNS.keys())


def resolve_thread_count(environ=None):
    """Worker count for bench fan-out, capped by CORRIDOR_THETA_THREADS"""
    environ = os.environ if environ is None else environ
    default = min(SETTINGS['max_threads'], os.cpu_count() or 1)
    raw = environ.get(SETTINGS['threads_env'])
    if raw is None or str(raw).strip() == '':
        return default
    try:
        value = int(raw)
    except ValueError:
        return default
    return max(1, value)


def validate_planner_names(names):
    """Validate requested planner names"""
    unknown = [name for name in names if name not in PLANNER_NAMES]
    if unknown:
        return False, f"Unknown planners: {', '.join(unknown)}"
    if not names:
        return False, "At least one planner is required"
    return True, "OK"
