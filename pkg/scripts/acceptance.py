"""Run the acceptance suite and print one line per criterion."""
import pathlib
import sys

import pytest

if __name__ == "__main__":
    tests = pathlib.Path(__file__).resolve().parent.parent / "tests"
    sys.exit(pytest.main([str(tests / "test_acceptance.py"), "-q", "-p", "no:cacheprovider"]))
