"""
Module: utils.py

Small helpers shared by the RiderQuad command line.

Functions:
  ascii_logo(): Returns a string containing an ASCII art representation of the RiderQuad logo.
  config_hash(text): Short SHA-256 digest of a canonical configuration, written into CSV provenance headers.
  library_versions(): Versions of the numerical stack, for provenance headers.
  Stopwatch: context manager that records elapsed wall time.
"""
import hashlib
import platform
import time

import numpy
import pandas
import scipy
from rich.text import Text


def ascii_logo() -> str:
    return r"""
        ____  _     __          ____                  __
       / __ \(_)___/ /__  _____/ __ \__  ______ _____/ /
      / /_/ / / __  / _ \/ ___/ / / / / / / __ `/ __  /
     / _, _/ / /_/ /  __/ /  / /_/ / /_/ / /_/ / /_/ /
    /_/ |_/_/\__,_/\___/_/   \___\_\__,_/\__,_/\__,_/
            """


def banner(colour: str) -> Text:
    return Text(ascii_logo(), style=colour)


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode('utf-8')).hexdigest()[:16]


def library_versions() -> str:
    return (f"python {platform.python_version()}, numpy {numpy.__version__}, scipy {scipy.__version__}, "
            f"pandas {pandas.__version__}")


class Stopwatch:
    def __enter__(self):
        self._start = time.perf_counter()
        self.elapsed = 0.0
        return self

    def __exit__(self, *exc_info):
        self.elapsed = time.perf_counter() - self._start
        return False
