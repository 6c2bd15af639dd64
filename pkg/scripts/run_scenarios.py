"""Run every catalogued scenario at its default parameters and print a summary."""
import argparse
import sys

from mixedcx.cli import emit
from mixedcx.scenarios import CATALOG, run_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("names", nargs="*", help="scenario names (default: all)")
    ap.add_argument("--verbose", action="store_true", help="print each result table")
    a = ap.parse_args()
    names = a.names or sorted(CATALOG)
    failed = 0
    for name in names:
        t = run_scenario(name)
        status = "PASS" if t.passed else "FAIL"
        failed += not t.passed
        print(f"{name:22s} {status}  {len(t.rows):3d} rows  {len(t.checks):2d} checks  {t.seconds:6.2f}s")
        for c in t.checks:
            if not c.ok:
                print(f"    failed: {c.name} {c.detail}")
        if a.verbose:
            sys.stdout.write(emit(t, "text").decode())
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
