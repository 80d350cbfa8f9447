from __future__ import annotations

from pathlib import Path

import pytest

from clusterham.cli import main, parse_config, UsageError
from clusterham.quiver import dump_quiver, parse_quiver, quiver_to_matrix
from clusterham.models import somos4_matrix

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_period_check_example(capsys):
    code, out, _ = run(capsys, "period-check", "--model", "kdv-a", "--window", "-12:12")
    assert code == 0
    assert "interior [-6,6] matched" in out


def test_verify_ham_example(capsys):
    code, out, _ = run(capsys, "verify-ham", "--model", "kdv-a", "--bracket", "kdv a0=1 q1=3", "--window", "-12:12")
    assert code == 0 and "OK window=" in out


def test_verify_ham_perturbed_file_reports_witness(capsys, tmp_path):
    f = tmp_path / "perturbed.txt"
    f.write_text("kdv a0=1 q1=3\np s[0,0] s[1,0] 7\n")
    code, out, _ = run(capsys, "verify-ham", "--model", "kdv-a", "--bracket", str(f))
    assert code == 1
    first = out.splitlines()[1]
    assert first.startswith("FAIL site=") and "expected=" in first and "got=" in first


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["verify-ham", "--model", "kdv-a"],
    ["period-check", "--model", "no-such-model"],
    ["solve-ham", "--model", "kdv-a", "--window", "-10:10"],
    ["verify-ham", "--model", "kdv-a", "--bracket", "kdv a0=oops"],
    ["period-check", "--model", "kdv-a", "--window", "12"],
])
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err


def test_window_flag_forms_agree():
    a = parse_config(["period-check", "--model", "kdv-a", "--window", "-12:12"])
    b = parse_config(["period-check", "--model", "kdv-a", "--window=-12:12"])
    assert a.windows == b.windows == [(-12, 12)]


def test_iterate_somos(capsys):
    code, out, _ = run(capsys, "iterate", "--model", "somos4", "--steps", "7")
    assert code == 0
    values = [line.split(" = ")[1] for line in out.splitlines() if " = " in line]
    assert values == ["2", "3", "7", "23", "59", "314", "1529"]
    assert "laurent yes" in out


def test_iterate_with_init_file(capsys, tmp_path):
    f = tmp_path / "init.txt"
    f.write_text("".join(f"init {i} {v}\n" for i, v in zip(range(1, 5), (1, 1, 1, 1))))
    code, out, _ = run(capsys, "iterate", "--model", "somos4", "--steps", "3", "--init", str(f))
    assert code == 0 and "= 7" in out


def test_iterate_symbolic_kdv(capsys):
    code, out, _ = run(capsys, "iterate", "--model", "kdv-a", "--steps", "2", "--symbolic")
    assert code == 0 and "laurent yes" in out and "residuals 0" in out


def test_mutate_quiver_file_is_involutive(capsys, tmp_path):
    f = tmp_path / "somos.quiver"
    f.write_text(dump_quiver(somos4_matrix()))
    code, out, _ = run(capsys, "mutate", str(f), "--at", "x[1]", "--at", "x[1]")
    assert code == 0
    assert quiver_to_matrix(parse_quiver(out)).entries() == somos4_matrix().entries()


def test_pencil(capsys):
    code, out, _ = run(capsys, "pencil", "--model", "kdv-a", "--bracket", "kdv a0=1", "--bracket", "kdv q1=1")
    assert code == 0 and "CERTIFIED pencil" in out


def test_out_flag_writes_file(capsys, tmp_path):
    target = tmp_path / "report.txt"
    code, out, _ = run(capsys, "period-check", "--model", "kdv-b", "--out", str(target))
    assert code == 0 and out == ""
    assert "matched" in target.read_text()


def test_explain_adds_detail(capsys):
    _, plain, _ = run(capsys, "verify-ham", "--model", "kdv-a", "--bracket", "kdv a0=1")
    _, detailed, _ = run(capsys, "verify-ham", "--model", "kdv-a", "--bracket", "kdv a0=1", "--explain")
    assert len(detailed.splitlines()) > len(plain.splitlines())


@pytest.mark.parametrize("name, argv", [
    ("models.txt", ["models"]),
    ("period_check_kdv_a.txt", ["period-check", "--model", "kdv-a", "--window", "-12:12", "--explain"]),
    ("solve_ham_kdv_a.txt", ["solve-ham", "--model", "kdv-a"]),
])
def test_reports_match_golden_files(capsys, name, argv):
    code, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert code == 0
    assert first == second
    assert first == (GOLDEN / name).read_text()
