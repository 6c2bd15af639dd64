import json
import subprocess
import sys
from pathlib import Path

import pytest

from mixedcx.cli import CSV_HEADER, ParseError, emit, main, parse_presentation, table_from_dict
from mixedcx.dgcore import FREE
from mixedcx.scenarios import CATALOG, ResultTable, UnknownScenario, UnsafeParameters, run_scenario

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "data" / "presentations"
GOLDEN = ROOT / "tests" / "golden" / "hh-truncated-n2.json"

C2_TEXT = """name = C2
base = Q[x]
kind = free
gen y1 degree=1 weight=1
gen y2 degree=3 weight=2
d y1 = x
d y2 = y1*y1
"""


def test_parse_c2():
    P = parse_presentation(C2_TEXT)
    assert P.kind == FREE and [g.degree for g in P.gens] == [1, 3]
    assert P.gen("y2").d() == P.gen("y1") * P.gen("y1")


def test_parse_curved_file():
    P = parse_presentation((DATA / "curved_t2.pres").read_text())
    assert str(P.curvature) == "(-x)*t"
    assert P.gens[0].nilpotency == 2


def test_missing_degree_reports_line():
    with pytest.raises(ParseError) as e:
        parse_presentation("base = Q[x]\n\ngen t weight=1\n")
    assert e.value.line == 3


@pytest.mark.parametrize("text,line", [
    ("base = Z\n", 1),
    ("gen a degree=1\nd a = a*b\n", 2),
    ("gen a degree=2\nd a = 1\n", 2),
    ("gen a degree=1\nfoo\n", 2),
    ("gen a degree=1\nrelation b^2 = 0\n", 2),
    ("gen a degree=1 colour=3\n", 1),
])
def test_parse_errors(text, line):
    with pytest.raises(ParseError) as e:
        parse_presentation(text)
    assert e.value.line == line


def test_empty_table_gives_header_only_csv():
    t = ResultTable("empty", {}, "")
    assert emit(t, "csv") == (",".join(CSV_HEADER) + "\n").encode()


def test_json_round_trip():
    t = run_scenario("hh-truncated", {"n": 2, "window": (0, 4)})
    d = json.loads(emit(t, "json"))
    assert d["schema"] == "mixedcx.result/1"
    back = table_from_dict(d)
    assert emit(back, "json") == emit(t, "json")


def test_rows_sorted_and_untrusted_flagged():
    t = run_scenario("hh-truncated", {"n": 3, "window": (0, 5)})
    degs = [r.degree for r in t.rows]
    assert degs == sorted(degs)
    assert [r.trusted for r in t.rows][-1] is False


def test_golden_file():
    t = run_scenario("hh-truncated", {"n": 2})
    want = json.loads(GOLDEN.read_text())["rows"]
    assert [r for r in json.loads(emit(t, "json"))["rows"] if r["trusted"]] == want


def test_unknown_and_unsafe():
    with pytest.raises(UnknownScenario):
        run_scenario("nope", {})
    with pytest.raises(UnsafeParameters):
        run_scenario("hh-truncated", {"n": 9})


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_every_scenario_passes_with_defaults(name):
    t = run_scenario(name, {})
    assert t.passed, [(c.name, c.detail) for c in t.checks if not c.ok]


def test_exit_codes(capsys, tmp_path):
    assert main(["verify", "hh-truncated", "--n", "3", "--window", "0:5"]) == 0
    assert main(["verify", "hh-truncated", "--n", "3", "--golden", str(GOLDEN)]) == 1
    assert main(["verify", "hh-truncated", "--n", "7"]) == 2
    assert main(["verify", "no-such-scenario"]) == 2
    assert main(["verify", "laurent-dual", "--limit-nonzeros", "0"]) == 3
    bad = tmp_path / "bad.pres"
    bad.write_text("gen x weight=1\n")
    assert main(["homology", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "line 1" in err


def test_negative_window_argument(capsys):
    assert main(["verify", "cn-lemma", "--n", "1", "--window", "-8:0", "--u-order", "4",
                 "--format", "json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["parameters"]["window"] == [-8, 0] and out["passed"]


@pytest.mark.parametrize("path", sorted(DATA.glob("*.pres")), ids=lambda p: p.name)
def test_homology_command_on_data_files(path, capsys):
    assert main(["homology", str(path), "--window", "0:3", "--format", "csv"]) == 0
    assert capsys.readouterr().out.startswith(",".join(CSV_HEADER))


def test_witt_command(capsys):
    assert main(["witt", "3,7,15,31,63,127", "--degree-bound", "2"]) == 0
    assert main(["witt", "1,1/2,1/6,1/24,1/120,1/720", "--degree-bound", "2"]) == 1


def test_byte_identical_subprocess_runs():
    cmd = [sys.executable, "-m", "mixedcx", "verify", "hp-point", "--n", "2", "--format", "json"]
    outs = [subprocess.run(cmd, capture_output=True, check=True).stdout for _ in range(2)]
    assert outs[0] == outs[1] and outs[0]
