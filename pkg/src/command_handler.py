"""
command_handler.py

This module runs the RiderQuad subcommands. It turns a parsed command line into a run configuration, calls the
solvers and analysis routines, prints rich summaries and writes CSV artifacts.

Features:
- Command Handling: dispatches 'price', 'fairfee', 'bench', 'validate' and 'greeks' through a dictionary of handlers.
- Benchmark Sweeps: fans the cells of a benchmark table out over a process pool and writes rows in table order
  regardless of completion order.
- Cross-solver Validation: compares the quadrature price with Monte Carlo (static strategies), finite differences
  (any strategy) and, where it applies, the closed-form static GMAB value.
- Error Reporting: any RiderQuadError is printed in red and turned into the exit code it carries.

Classes:
- CommandHandler: holds the console and output options and implements one handle_* method per subcommand.

Functions:
- handle_command(handler, args): run the subcommand named by args.command and return the process exit code.
"""
import logging
from concurrent.futures import ProcessPoolExecutor

from rich.console import Console
from rich.text import Text

from analysis import (closed_form_applies, closed_form_value, fair_fee, greeks_bump, hedge_units, likelihood_report,
                      solve)
from benchmarks import run_cell, table_cells
from config import RunConfig
from errors import ConfigError, RiderQuadError, UnsupportedModelError, UnsupportedStrategyError, ValidationFailure
from reports import (BENCH_COLUMNS, FEE_RESULT_COLUMNS, GREEKS_COLUMNS, PRICE_COLUMNS, VALIDATION_COLUMNS, error_text,
                     fee_row, frame_table, greeks_row, ordered_frame, pricing_row, provenance, write_csv)
from settings import DEFAULT_COLORS, EXIT_OK, MC_STANDARD_ERRORS
from utils import Stopwatch

logger = logging.getLogger(__name__)


def handle_command(handler, args) -> int:
    command_actions = {
        'price': handler.handle_price,
        'fairfee': handler.handle_fairfee,
        'bench': handler.handle_bench,
        'validate': handler.handle_validate,
        'greeks': handler.handle_greeks,
    }
    func = command_actions.get(args.command, handler.handle_unknown_command)
    try:
        return func(args)
    except RiderQuadError as exc:
        handler.console.print(error_text(f"{type(exc).__name__}: {exc}"))
        return exc.exit_code


class CommandHandler:
    def __init__(self, console: Console = None, timings: bool = False):
        self.console = console or Console(stderr=True)
        self.timings = timings

    def load_config(self, args) -> RunConfig:
        overrides = getattr(args, 'set', None) or ()
        if getattr(args, 'config', None):
            return RunConfig.load(args.config, overrides)
        return RunConfig.from_overrides(overrides)

    def emit(self, args, config, command, frame, title, runtime):
        self.console.print(frame_table(frame, title))
        output = config.section('output')
        path = getattr(args, 'out', None) or output['csv']
        if path:
            header = provenance(command, config.canonical(), runtime if self.timings else None)
            write_csv(frame, path, header, output['precision'])

    def handle_price(self, args) -> int:
        config = self.load_config(args)
        bundle = config.to_bundle(args.seed)
        with Stopwatch() as watch:
            result = solve(bundle)
        frame = ordered_frame([pricing_row(result)], PRICE_COLUMNS, self.timings)
        self.emit(args, config, 'price', frame, f"{bundle.rider.name.upper()} price", watch.elapsed)
        return EXIT_OK

    def handle_fairfee(self, args) -> int:
        config = self.load_config(args)
        request = config.fair_fee_request(args.seed)
        with Stopwatch() as watch:
            result = fair_fee(request)
        frame = ordered_frame([fee_row(result, watch.elapsed)], FEE_RESULT_COLUMNS, self.timings)
        self.emit(args, config, 'fairfee', frame, f"{request.bundle.rider.name.upper()} fair fee", watch.elapsed)
        return EXIT_OK

    def handle_bench(self, args) -> int:
        if args.table is None:
            raise ConfigError('--table', "bench needs a table number")
        config = self.load_config(args)
        solver = config.solver(args.seed)
        cells = table_cells(args.table)
        options = (solver, getattr(args, 'mc', False), True, True)
        self.console.print(Text(f"Table {args.table}: {len(cells)} cells, solver {solver.method}",
                                style=DEFAULT_COLORS['title']))
        with Stopwatch() as watch:
            if args.threads and args.threads > 1:
                with ProcessPoolExecutor(max_workers=args.threads) as executor:
                    futures = [executor.submit(run_cell, cell, *options) for cell in cells]
                    rows = [future.result() for future in futures]
            else:
                rows = [run_cell(cell, *options) for cell in cells]
        frame = ordered_frame(rows, BENCH_COLUMNS, self.timings)
        self.emit(args, config, f"bench {args.table}", frame, f"Benchmark table {args.table}", watch.elapsed)
        return EXIT_OK

    def handle_validate(self, args) -> int:
        config = self.load_config(args)
        bundle = config.to_bundle(args.seed)
        settings = config.section('validate')
        threshold = float(settings['threshold'])
        optimal = not bundle.strategy.is_static and bundle.rider.allows_withdrawal
        methods = settings['methods'] or (['fd'] if optimal else ['mc', 'fd'])
        if optimal and 'mc' in methods:
            raise UnsupportedStrategyError(
                "Monte Carlo cannot validate an optimal or threshold strategy: the withdrawal depends on the "
                "continuation value, which only the backward solvers compute; validate against 'fd' instead")

        with Stopwatch() as watch:
            reference = solve(bundle.with_method('ghqc'))
            rows = []
            if closed_form_applies(bundle):
                exact = closed_form_value(bundle)
                rows.append(self._comparison('closed-form', exact, None, reference.value, threshold))
            for method in methods:
                result = solve(bundle.with_method(method))
                rows.append(self._comparison(method, result.value, result.standard_error, reference.value,
                                             threshold, result.runtime))
        frame = ordered_frame(rows, VALIDATION_COLUMNS, self.timings)
        self.emit(args, config, 'validate', frame, "Cross-solver validation", watch.elapsed)
        failed = [row['method'] for row in rows if row['status'] != 'pass']
        if failed:
            raise ValidationFailure(f"validation threshold exceeded for {', '.join(failed)}")
        return EXIT_OK

    @staticmethod
    def _comparison(method, value, standard_error, reference, threshold, runtime=None) -> dict:
        rel_diff = value / reference - 1.0
        tolerance = threshold * abs(reference)
        if standard_error is not None:
            tolerance = max(tolerance, MC_STANDARD_ERRORS * standard_error)
        status = 'pass' if abs(value - reference) <= tolerance else 'fail'
        return {'method': method, 'value': value, 'standard_error': standard_error, 'reference_method': 'ghqc',
                'reference': reference, 'rel_diff': rel_diff, 'tolerance': tolerance, 'status': status,
                'runtime': runtime}

    def handle_greeks(self, args) -> int:
        config = self.load_config(args)
        bundle = config.to_bundle(args.seed)
        settings = config.section('greeks')
        asset = settings['asset_price'] or bundle.w0
        rows = []
        with Stopwatch() as watch:
            try:
                report = likelihood_report(bundle)
                rows.append(greeks_row(report, hedge_units(report.delta, bundle.w0, asset)))
            except UnsupportedModelError as exc:
                logger.warning("likelihood Greeks skipped: %s", exc)
            report = greeks_bump(bundle, settings['wealth_bump'], settings['rate_bump'], settings['vol_bump'])
            rows.append(greeks_row(report, hedge_units(report.delta, bundle.w0, asset)))
        frame = ordered_frame(rows, GREEKS_COLUMNS, self.timings)
        self.emit(args, config, 'greeks', frame, f"{bundle.rider.name.upper()} Greeks", watch.elapsed)
        return EXIT_OK

    def handle_unknown_command(self, args) -> int:
        raise ConfigError('command', f"unknown command {args.command!r}")
