#!/usr/bin/env python3
"""
CorridorTheta - Constrained any-angle route planning
Version: 1.0.0

Subcommands: plan, validate, oracle, bench, gen, render. JSON and CSV go to
stdout (or --out); logs and diagnostics go to stderr.
"""

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from bench import (PlannerManager, agreement_rate, compare_runs, format_table, slowdown_ratio, summarize,
                   write_metrics)
from config import (APP_NAME, DESCRIPTION, EXIT_CODES, PLANNER_NAMES, SETTINGS, SUMMARY_COLUMNS,
                    get_version_info, validate_planner_names)
from constraints import validate_path
from corpus import CorpusParams, generate_corpus
from data_handler import DataHandler, dumps
from errors import CorridorThetaError
from excel_formatter import MetricsWorkbookFormatter
from geometry import polyline_length
from grid_world import build_world, find_holes
from planner import PlannedPath
from svg_renderer import render_svg, write_svg


class CorridorTheta:
    """Main application class"""

    def __init__(self, settings=None):
        self.data_handler = DataHandler()
        self.planner_manager = PlannerManager(settings)
        self.workbook_formatter = MetricsWorkbookFormatter()
        self.logger = logging.getLogger(__name__)

    def check_dependencies(self):
        missing = []
        for dep in ('numpy', 'scipy', 'pandas', 'openpyxl', 'lxml'):
            try:
                __import__(dep)
            except ImportError:
                missing.append(dep)
        if missing:
            self.logger.error(f"Missing dependencies: {', '.join(missing)}")
            return False
        return True

    def _load(self, scenario_path):
        scenario = self.data_handler.load_scenario(scenario_path)
        world = build_world(scenario)
        holes = find_holes(world)
        self.logger.info(f"Scenario '{scenario.id}': {world.width}x{world.height} cells, {len(holes)} holes")
        return scenario, world, holes

    def run_plan(self, scenario_path, planner='constrained', out=None, svg=None):
        """Plan one scenario; returns (exit code, result dict)"""
        scenario, world, holes = self._load(scenario_path)
        record = self.planner_manager.run(planner, scenario, world, holes)
        payload = record.to_dict()
        if record.found:
            self.logger.info(f"{planner}: {len(record.result.turning_points)} turning points, "
                             f"{record.result.cost_m:.3f} m in {record.wall_time_s:.3f}s")
        else:
            self.logger.warning(f"{planner}: no path ({record.result.reason})")

        results = [record]
        if svg:
            if planner != 'theta':
                results.insert(0, self.planner_manager.run('theta', scenario, world, holes))
            write_svg(render_svg(world, holes, results), svg)
            self.logger.info(f"SVG written to {svg}")
        self._emit(payload, out)
        return (EXIT_CODES['ok'] if record.found else EXIT_CODES['no_path']), payload

    def run_validate(self, scenario_path, path_file, out=None):
        scenario, world, holes = self._load(scenario_path)
        points = self.data_handler.load_path(path_file)
        report = validate_path(points, world, holes, scenario.constraints, scenario.start, scenario.goal)
        payload = report.to_dict()
        self._emit(payload, out)
        if report.passed:
            self.logger.info("Path satisfies every constraint")
            return EXIT_CODES['ok'], payload
        self.logger.warning(f"Path violates: {', '.join(report.failing())}")
        return EXIT_CODES['invalid'], payload

    def run_oracle(self, scenario_path, planners=('brute', 'exhaustive'), out=None, svg=None):
        scenario, world, holes = self._load(scenario_path)
        records = [self.planner_manager.run(name, scenario, world, holes) for name in planners]
        for record in records:
            self.logger.info(f"{record.planner}: {record.status}"
                             + (f", {record.iterations} iterations" if record.iterations is not None else ""))
        payload = {'schema': SETTINGS['schema_version'], 'scenario': scenario.id,
                   'results': [record.to_dict() for record in records]}
        if svg:
            write_svg(render_svg(world, holes, records), svg)
        self._emit(payload, out)
        code = EXIT_CODES['ok'] if all(r.found for r in records) else EXIT_CODES['no_path']
        return code, payload

    def run_bench(self, corpus_dir, planners=('theta', 'constrained'), out=None, fmt='csv', xlsx=None,
                  summary=None, workers=None):
        scenarios = self.data_handler.load_corpus(corpus_dir)
        started = time.perf_counter()
        runs = compare_runs(scenarios, planners, workers, self.planner_manager.settings)
        table = summarize(runs)
        self.logger.info(f"Bench finished in {time.perf_counter() - started:.1f}s")
        for row in table.itertuples(index=False):
            self.logger.info(f"{row.planner}: success {row.success_rate:.2%}, "
                             f"relative length {row.mean_relative_length:.4f}")
        if 'constrained' in planners and 'theta' in planners:
            self.logger.info(f"Slowdown constrained/theta: {slowdown_ratio(runs):.2f}x")
        if 'constrained' in planners and 'exhaustive' in planners:
            self.logger.info(f"Feasibility agreement with exhaustive: {agreement_rate(runs):.2%}")

        text = write_metrics(runs, out, fmt)
        if out is None:
            sys.stdout.write(text)
        if summary:
            Path(summary).write_text(format_table(table, SUMMARY_COLUMNS) + "\n")
        if xlsx:
            self.workbook_formatter.save_metrics(runs, table, xlsx)
        return EXIT_CODES['ok'], runs

    def run_gen(self, out_dir, seed=0, **overrides):
        params = CorpusParams.from_overrides(**overrides)
        scenarios = generate_corpus(params, seed)
        paths = self.data_handler.save_corpus(scenarios, out_dir)
        return EXIT_CODES['ok'], paths

    def run_render(self, scenario_path, result_files, svg):
        scenario, world, holes = self._load(scenario_path)
        results = []
        for result_file in result_files or ():
            data = json.loads(Path(result_file).read_text())
            entries = data.get('results', [data]) if isinstance(data, dict) else [{'turning_points': data}]
            for entry in entries:
                if not entry.get('turning_points'):
                    continue
                points = [tuple(p) for p in entry['turning_points']]
                results.append(PlannedPath(points, polyline_length(points, world.cell_size_m),
                                           planner=entry.get('planner', 'constrained')))
        write_svg(render_svg(world, holes, results), svg)
        self.logger.info(f"Rendered {len(results)} paths to {svg}")
        return EXIT_CODES['ok'], svg

    def _emit(self, payload, out):
        text = dumps(payload)
        if out:
            Path(out).write_text(text)
        else:
            sys.stdout.write(text)


def setup_logging(level=None, log_dir=None):
    """Log to stderr, plus a timestamped file when log_dir is given"""
    handlers = [logging.StreamHandler(sys.stderr)]
    if log_dir:
        log_dir = Path(log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_dir / f"corridor_theta_{int(time.time())}.log"))
    logging.basicConfig(
        level=getattr(logging, (level or SETTINGS['log_level']).upper(), logging.INFO),
        format=SETTINGS['log_format'],
        handlers=handlers,
        force=True
    )


def _planner_list(text):
    names = [name.strip() for name in text.split(',') if name.strip()]
    ok, message = validate_planner_names(names)
    if not ok:
        raise argparse.ArgumentTypeError(message)
    return tuple(names)


def build_parser():
    parser = argparse.ArgumentParser(prog='corridor_theta', description=DESCRIPTION)
    parser.add_argument('--version', action='version', version=get_version_info())
    parser.add_argument('--log-level', default=SETTINGS['log_level'],
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    parser.add_argument('--log-dir', default=None, help="also write logs to this directory")
    sub = parser.add_subparsers(dest='command', required=True)

    plan = sub.add_parser('plan', help="plan a route for one scenario")
    plan.add_argument('--scenario', required=True)
    plan.add_argument('--planner', choices=PLANNER_NAMES, default='constrained')
    plan.add_argument('--out')
    plan.add_argument('--svg')

    validate = sub.add_parser('validate', help="audit a path against a scenario")
    validate.add_argument('--scenario', required=True)
    validate.add_argument('--path', required=True, help="result JSON or bare [[x, y], ...] list")
    validate.add_argument('--out')

    oracle = sub.add_parser('oracle', help="run the reference planners")
    oracle.add_argument('--scenario', required=True)
    oracle.add_argument('--planner', choices=('brute', 'exhaustive'), default=None,
                        help="run only one reference planner (default: both)")
    oracle.add_argument('--out')
    oracle.add_argument('--svg')

    bench = sub.add_parser('bench', help="metrics table over a scenario corpus")
    bench.add_argument('--corpus', required=True)
    bench.add_argument('--planners', type=_planner_list, default=('theta', 'constrained'))
    bench.add_argument('--format', choices=('csv', 'json'), default='csv')
    bench.add_argument('--out')
    bench.add_argument('--summary', help="write the aligned per-planner summary here")
    bench.add_argument('--xlsx', help="write a styled metrics workbook here")
    bench.add_argument('--workers', type=int, default=None)

    gen = sub.add_parser('gen', help="generate a synthetic corridor corpus")
    gen.add_argument('--corpus', '--out', dest='corpus', required=True)
    gen.add_argument('--seed', type=int, default=0)
    gen.add_argument('--fragments', type=int)
    gen.add_argument('--width', type=int)
    gen.add_argument('--height', type=int)
    gen.add_argument('--min-los', dest='min_los_cells', type=int)
    gen.add_argument('--theta', dest='theta_bmax_deg', type=float)

    render = sub.add_parser('render', help="draw a scenario and planned paths as SVG")
    render.add_argument('--scenario', required=True)
    render.add_argument('--result', action='append', default=[])
    render.add_argument('--svg', required=True)
    return parser


def cli_main(argv=None):
    """Run one subcommand and return its exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CODES['ok'] if e.code in (0, None) else EXIT_CODES['error']

    setup_logging(args.log_level, args.log_dir)
    logger = logging.getLogger(__name__)
    app = CorridorTheta()
    if not app.check_dependencies():
        return EXIT_CODES['error']
    try:
        if args.command == 'plan':
            code, _ = app.run_plan(args.scenario, args.planner, args.out, args.svg)
        elif args.command == 'validate':
            code, _ = app.run_validate(args.scenario, args.path, args.out)
        elif args.command == 'oracle':
            planners = (args.planner,) if args.planner else ('brute', 'exhaustive')
            code, _ = app.run_oracle(args.scenario, planners, args.out, args.svg)
        elif args.command == 'bench':
            code, _ = app.run_bench(args.corpus, args.planners, args.out, args.format, args.xlsx,
                                    args.summary, args.workers)
        elif args.command == 'gen':
            code, _ = app.run_gen(args.corpus, args.seed, fragments=args.fragments, width=args.width,
                                  height=args.height, min_los_cells=args.min_los_cells,
                                  theta_bmax_deg=args.theta_bmax_deg)
        else:
            code, _ = app.run_render(args.scenario, args.result, args.svg)
        return code
    except CorridorThetaError as e:
        logger.error(f"{args.command} failed: {e}")
        print(json.dumps(e.to_dict()), file=sys.stderr)
        return EXIT_CODES['error']
    except (OSError, ValueError, KeyError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(json.dumps({'error': type(e).__name__, 'message': str(e)}), file=sys.stderr)
        return EXIT_CODES['error']


def main():
    """Main entry point"""
    try:
        sys.exit(cli_main())
    except KeyboardInterrupt:
        print(f"\n{APP_NAME} interrupted by user", file=sys.stderr)
        sys.exit(130)
    except Exception as e:
        logging.error(f"Fatal error: {e}")
        print(json.dumps({'error': 'fatal', 'message': str(e)}), file=sys.stderr)
        sys.exit(EXIT_CODES['error'])


if __name__ == "__main__":
    main()
