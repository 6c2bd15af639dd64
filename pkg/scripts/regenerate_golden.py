"""Rewrite the golden files under tests/golden from fresh runs.

Review the diff before committing: a golden file is only as good as the run
that produced it.
"""
import pathlib

from mixedcx.cli import write_golden
from mixedcx.scenarios import run_scenario

GOLDEN = {
    "hh-truncated-n2.json": ("hh-truncated", {"n": 2, "window": (0, 7)}),
}


def main():
    out = pathlib.Path(__file__).resolve().parent.parent / "tests" / "golden"
    out.mkdir(parents=True, exist_ok=True)
    for fname, (name, params) in GOLDEN.items():
        t = run_scenario(name, params)
        if not t.passed:
            raise SystemExit(f"{name} {params} failed its own checks; not writing {fname}")
        write_golden(t, str(out / fname))
        print(f"wrote {out / fname}")


if __name__ == "__main__":
    main()
