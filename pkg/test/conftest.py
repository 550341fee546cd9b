"""
conftest.py

Puts src/ on the import path (the modules import each other flat) and registers the `slow` marker. Slow tests
reproduce the full benchmark tables on production lattices and only run with --runslow.
"""
import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help="run benchmark reproductions")


def pytest_configure(config):
    config.addinivalue_line('markers', "slow: full-size benchmark reproductions (enable with --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)
