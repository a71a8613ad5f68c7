"""Runs the pytest smoke suite when the esrlcm package is importable.

Exits 77 (reported as skipped by ctest) otherwise.
"""

import importlib.util
import sys

if importlib.util.find_spec("esrlcm") is None:
    print("esrlcm Python package not installed; skipping")
    sys.exit(77)

import pytest  # noqa: E402

sys.exit(pytest.main(["-q", sys.argv[1]]))
