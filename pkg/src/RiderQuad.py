"""
RiderQuad.py

Command line entry point of RiderQuad, a pricing engine for variable annuity guarantee riders (GMAB, GMWB, GLWB,
GMIB, GMDB) under a geometric Brownian motion market with optional mortality.

Features:

-   **Direct integration pricer:** backward induction on a (wealth, benefit base) lattice, integrating
    cubic-spline value slices exactly against the lognormal step (or with Gauss-Hermite quadrature), for static,
    optimal and threshold withdrawal behaviour.
-   **Independent validators:** Crank-Nicolson finite differences and forward Monte Carlo (static strategies).
-   **Fair fees:** root search for the annual fee that makes the contract worth its premium, for continuous fees
    and fees deducted at each event.
-   **Greeks:** likelihood-method Delta/Gamma from the first-period density, plus bump-and-reprice Delta, Gamma,
    Rho and Vega and the asset units that hedge the guarantee.
-   **Benchmarks:** `bench N` reproduces the four embedded GMAB fee tables.

Usage:

    python src/RiderQuad.py price --config run.yaml
    python src/RiderQuad.py fairfee --config run.yaml --set market.rate=0.03 --out fee.csv
    python src/RiderQuad.py bench --table 1 --threads 8 --out table1.csv
    python src/RiderQuad.py validate --config run.yaml
    python src/RiderQuad.py greeks --config run.yaml

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 validation threshold not met.
"""
import argparse
import logging
import sys

from rich.console import Console
from rich.logging import RichHandler

from command_handler import CommandHandler, handle_command
from settings import DEFAULT_COLORS
from utils import banner

COMMANDS = {
    'price': "Price the configured contract at its fee.",
    'fairfee': "Find the fee at which the contract is worth its premium.",
    'bench': "Reproduce one of the embedded benchmark fee tables.",
    'validate': "Compare the quadrature price with the other solvers.",
    'greeks': "Likelihood and bump-and-reprice sensitivities.",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='RiderQuad', description="Variable annuity guarantee pricing.")
    subparsers = parser.add_subparsers(dest='command', required=True)
    for name, help_text in COMMANDS.items():
        sub = subparsers.add_parser(name, help=help_text, description=help_text)
        sub.add_argument('--config', metavar='PATH', help="YAML run configuration")
        sub.add_argument('--set', metavar='KEY=VALUE', action='append', default=[],
                         help="override a configuration value, e.g. market.rate=0.03 (repeatable)")
        sub.add_argument('--out', metavar='PATH', help="CSV output path (overrides output.csv)")
        sub.add_argument('--seed', type=int, help="Monte Carlo seed (overrides solver.seed)")
        sub.add_argument('--threads', type=int, default=1, help="worker processes for bench sweeps")
        sub.add_argument('--timings', action='store_true', help="include runtimes in the CSV output")
        verbosity = sub.add_mutually_exclusive_group()
        verbosity.add_argument('--verbose', '-v', action='store_true', help="debug logging")
        verbosity.add_argument('--quiet', '-q', action='store_true', help="warnings and errors only")
        if name == 'bench':
            sub.add_argument('--table', type=int, choices=(1, 2, 3, 4), help="benchmark table number")
            sub.add_argument('--mc', action='store_true', help="add the Monte Carlo fee column (tables 1 and 2)")
    return parser


def configure_logging(console: Console, verbose: bool = False, quiet: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format="%(message)s", datefmt="[%X]",
                        handlers=[RichHandler(console=console, show_path=verbose)], force=True)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    console = Console(stderr=True)
    configure_logging(console, args.verbose, args.quiet)
    if not args.quiet:
        console.print(banner(DEFAULT_COLORS['title']))
    return handle_command(CommandHandler(console, timings=args.timings), args)


if __name__ == "__main__":
    sys.exit(main())
