"""
reports.py

Output of the RiderQuad commands: CSV artifacts and rich console tables.

CSV files start with `# key: value` provenance lines (command, config hash, library versions and, only when
requested, runtime) followed by one pandas frame with a fixed column order. Fees are in basis points rounded to one
decimal; other floats use the configured number of significant digits. Runtimes stay out of the CSV body unless
timings are requested, so reruns of the same configuration are byte-identical.

Console tables use the colours in settings.DEFAULT_COLORS.
"""
import io
import logging

import pandas as pd
from rich.table import Table
from rich.text import Text

from settings import DEFAULT_COLORS
from utils import config_hash, library_versions

logger = logging.getLogger(__name__)

FEE_COLUMNS = ('fee_bp', 'published_bp', 'mc_bp', 'published_mc_bp', 'fd_bp', 'published_fd_bp',
               'discrete_bp', 'published_discrete_bp', 'continuous_equivalent_bp')
BENCH_COLUMNS = ('table', 'panel', 'r', 'sigma', 'fee_bp', 'published_bp', 'rel_diff', 'uplift',
                 'published_uplift', 'mc_bp', 'published_mc_bp', 'mc_rel_diff', 'fd_bp', 'published_fd_bp',
                 'fd_rel_diff', 'discrete_bp', 'published_discrete_bp', 'discrete_rel_diff', 'runtime')
PRICE_COLUMNS = ('method', 'fee_kind', 'fee_bp', 'premium', 'value', 'excess', 'standard_error', 'delta', 'gamma',
                 'runtime')
FEE_RESULT_COLUMNS = ('method', 'fee_kind', 'fee_bp', 'continuous_equivalent_bp', 'value_at_root', 'iterations',
                      'runtime')
VALIDATION_COLUMNS = ('method', 'value', 'standard_error', 'reference_method', 'reference', 'rel_diff', 'tolerance',
                      'status', 'runtime')
GREEKS_COLUMNS = ('method', 'value', 'delta', 'gamma', 'delta_guarantee', 'gamma_guarantee', 'rho', 'vega',
                  'hedge_units')


def ordered_frame(rows, columns, timings=False) -> pd.DataFrame:
    frame = pd.DataFrame(list(rows))
    keep = [c for c in columns if c in frame.columns and (timings or c != 'runtime')]
    frame = frame.reindex(columns=keep)
    for column in FEE_COLUMNS:
        if column in frame.columns:
            frame[column] = pd.to_numeric(frame[column], errors='coerce').round(1)
    return frame


def pricing_row(result) -> dict:
    return {'method': result.method, 'fee_kind': result.fee_kind, 'fee_bp': result.fee_bp,
            'premium': result.premium, 'value': result.value, 'excess': result.excess_over_premium,
            'standard_error': result.standard_error, 'delta': result.delta, 'gamma': result.gamma,
            'runtime': result.runtime}


def fee_row(result, runtime=None) -> dict:
    equivalent = None if result.continuous_equivalent is None else result.continuous_equivalent * 1e4
    return {'method': result.method, 'fee_kind': result.fee_kind, 'fee_bp': result.rate_bp,
            'continuous_equivalent_bp': equivalent, 'value_at_root': result.value_at_root,
            'iterations': result.iterations, 'runtime': runtime}


def greeks_row(report, hedge=None) -> dict:
    return {'method': report.method, 'value': report.value, 'delta': report.delta, 'gamma': report.gamma,
            'delta_guarantee': report.delta_guarantee, 'gamma_guarantee': report.gamma_guarantee,
            'rho': report.rho, 'vega': report.vega, 'hedge_units': hedge}


def provenance(command: str, config_text: str, runtime=None) -> dict:
    header = {'riderquad': command, 'config': config_hash(config_text), 'libraries': library_versions()}
    if runtime is not None:
        header['runtime_s'] = f"{runtime:.2f}"
    return header


def render_csv(frame: pd.DataFrame, header: dict, precision: int = 6) -> str:
    buffer = io.StringIO()
    for key, value in header.items():
        buffer.write(f"# {key}: {value}\n")
    frame.to_csv(buffer, index=False, float_format=f"%.{precision}g", lineterminator='\n')
    return buffer.getvalue()


def write_csv(frame: pd.DataFrame, path, header: dict, precision: int = 6) -> None:
    text = render_csv(frame, header, precision)
    with open(path, 'w', newline='') as handle:
        handle.write(text)
    logger.info("wrote %d rows to %s", len(frame), path)


def _cell(value, column) -> str:
    if value is None or (isinstance(value, float) and pd.isna(value)):
        return "-"
    if column in FEE_COLUMNS:
        return f"{value:.1f}"
    if column in ('rel_diff', 'uplift', 'published_uplift', 'mc_rel_diff', 'fd_rel_diff', 'discrete_rel_diff',
                  'excess'):
        return f"{value:+.2%}"
    if column == 'runtime':
        return f"{value:.1f}s"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def frame_table(frame: pd.DataFrame, title: str) -> Table:
    table = Table(title=title, style=DEFAULT_COLORS['title'])
    for column in frame.columns:
        style = DEFAULT_COLORS['fee'] if column in FEE_COLUMNS else DEFAULT_COLORS['value']
        if column.startswith('published'):
            style = DEFAULT_COLORS['reference']
        table.add_column(column, justify="left", style=style)
    for record in frame.to_dict('records'):
        cells = []
        for column in frame.columns:
            text = _cell(record[column], column)
            if column == 'status':
                text = Text(text, style=DEFAULT_COLORS['pass' if text == 'pass' else 'fail'])
            cells.append(text)
        table.add_row(*cells)
    return table


def error_text(message: str) -> Text:
    return Text(message, style=DEFAULT_COLORS['error'])
