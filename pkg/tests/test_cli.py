"""Command-line client: exit codes, formats, determinism, error reporting."""
from __future__ import annotations

import json
from fractions import Fraction

import pytest

from recomb.cli import main, parse_t_grid, UserInputError

GOLDEN4 = """n = 4
lattice = interval

[rates]
1|234 = 1/2
12|34 = 1/3
123|4 = 1/5
1|2|34 = 1/7
1|23|4 = 1/11
12|3|4 = 1/13
1|2|3|4 = 1/17
"""

DEGENERATE4 = """n = 4
lattice = interval
1|234 = 1/2
123|4 = 1/5
12|34 = 28/187
1|2|34 = 1/7
1|23|4 = 1/11
12|3|4 = 1/13
1|2|3|4 = 1/17
"""


@pytest.fixture()
def golden_file(tmp_path):
    path = tmp_path / "golden.rates"
    path.write_text(GOLDEN4)
    return str(path)


@pytest.fixture()
def degenerate_file(tmp_path):
    path = tmp_path / "degenerate.rates"
    path.write_text(DEGENERATE4)
    return str(path)


# -- t-grid parsing ---------------------------------------------------------------


def test_t_grid_comma_values():
    assert parse_t_grid("0,0.5,1") == [0.0, 0.5, 1.0]
    assert parse_t_grid("2") == [2.0]


def test_t_grid_linspace():
    assert parse_t_grid("0:2:5") == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert parse_t_grid("1:1:1") == [1.0]


@pytest.mark.parametrize(
    "bad", ["", "1,0.5", "-1,2", "0:2:0", "junk", "0:2", "1,1"]
)
def test_t_grid_rejects_bad_specs(bad):
    with pytest.raises(UserInputError):
        parse_t_grid(bad)


# -- enumerate --------------------------------------------------------------------


def test_enumerate_interval_rows(capsys):
    assert main(["enumerate", "--n", "4"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "index,partition,blocks,covers_above"
    assert len(lines) == 9
    assert lines[1] == "0,1|2|3|4,4,1;2;3"
    assert lines[-1] == "7,1234,1,"


def test_enumerate_full_rows(capsys):
    assert main(["enumerate", "--n", "4", "--lattice", "full"]) == 0
    assert len(capsys.readouterr().out.strip().splitlines()) == 16


def test_enumerate_single_site(capsys):
    assert main(["enumerate", "--n", "1"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines == ["index,partition,blocks,covers_above", "0,1,1,"]


def test_enumerate_json(capsys):
    assert main(["enumerate", "--n", "3", "--format", "json"]) == 0
    body = json.loads(capsys.readouterr().out)
    assert body["elements"] == ["1|2|3", "12|3", "1|23", "123"]


def test_enumerate_rejects_bad_n(capsys):
    assert main(["enumerate", "--n", "0"]) == 2
    assert "n" in capsys.readouterr().err


# -- matrices and tables ------------------------------------------------------------


def test_theta_csv_golden_entries(golden_file, capsys):
    assert main(["theta", "--rates", golden_file]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "partition,1|2|3|4,12|3|4,1|23|4,1|2|34,123|4,12|34,1|234,1234"
    rows = {line.split(",")[0]: line for line in lines[1:]}
    assert rows["12|34"] == "12|34,0,0,0,0,0,187/103,0,-187/103"
    assert rows["1234"] == "1234,0,0,0,0,0,0,0,1"


def test_eta_csv_reciprocal_entry(golden_file, capsys):
    assert main(["eta", "--rates", golden_file]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    rows = {line.split(",")[0]: line.split(",")[1:] for line in lines[1:]}
    assert rows["12|34"][5] == "103/187"


def test_q_csv_columns_sum_to_zero(golden_file, capsys):
    assert main(["q", "--rates", golden_file]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    entries = [line.split(",")[1:] for line in lines[1:]]
    for j in range(len(entries)):
        assert sum(Fraction(row[j]) for row in entries) == 0


def test_rates_table_header(golden_file, capsys):
    assert main(["rates", "--rates", golden_file]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "subsystem,partition,rho,psi,chi,psi_minus_chi"
    assert len(out.strip().splitlines()) == 1 + 40  # header + 40 subsystem rows


def test_rates_json_classification(golden_file, capsys):
    assert main(["rates", "--rates", golden_file, "--format", "json"]) == 0
    body = json.loads(capsys.readouterr().out)
    assert body["classification"] == "STRICTLY_GENERIC"


def test_theta_degenerate_exits_2(degenerate_file, capsys):
    assert main(["theta", "--rates", degenerate_file]) == 2
    assert "12|34" in capsys.readouterr().err


# -- solve ----------------------------------------------------------------------


def test_solve_csv_starts_at_point_mass(golden_file, capsys):
    assert main(["solve", "--rates", golden_file, "--t-grid", "0,1"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("t,1|2|3|4,")
    assert lines[1] == "0,0,0,0,0,0,0,0,1"


def test_solve_json_includes_exppoly(golden_file, capsys):
    assert main(
        ["solve", "--rates", golden_file, "--t-grid", "1", "--format", "json"]
    ) == 0
    body = json.loads(capsys.readouterr().out)
    assert body["max_degree"] == 0
    assert set(body["exppoly"]) == set(body["columns"])


def test_solve_with_tensor_file(golden_file, tmp_path, capsys):
    omega = tmp_path / "omega.json"
    omega.write_text(json.dumps({
        "shape": [2, 2, 2, 2],
        "values": [float(k + 1) for k in range(16)],
    }))
    assert main([
        "solve", "--rates", golden_file, "--t-grid", "0,1",
        "--omega0", str(omega), "--format", "json",
    ]) == 0
    body = json.loads(capsys.readouterr().out)
    assert body["omega_shape"] == [2, 2, 2, 2]
    assert abs(sum(body["omega_rows"][1]) - 136.0) < 1e-9


def test_solve_tensor_shape_mismatch_exits_2(golden_file, tmp_path, capsys):
    omega = tmp_path / "omega.json"
    omega.write_text(json.dumps({"shape": [2, 2], "values": [1, 2, 3, 4]}))
    assert main([
        "solve", "--rates", golden_file, "--t-grid", "1", "--omega0", str(omega),
    ]) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_solve_bad_t_grid_exits_2(golden_file, capsys):
    assert main(["solve", "--rates", golden_file, "--t-grid", "1,0.5"]) == 2
    assert "increasing" in capsys.readouterr().err


def test_solve_out_files_byte_identical(golden_file, tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (first, second):
        assert main([
            "solve", "--rates", golden_file,
            "--t-grid", "0:2:5", "--out", str(out),
        ]) == 0
    assert first.read_bytes() == second.read_bytes()
    assert first.read_text().splitlines()[0].startswith("t,")


# -- verify -----------------------------------------------------------------------


def test_verify_golden_passes(golden_file, capsys):
    assert main(["verify", "--rates", golden_file, "--t-grid", "0.5"]) == 0
    captured = capsys.readouterr()
    body = json.loads(captured.out)
    assert body["status"] == "PASS"
    assert captured.err.startswith("PASS:")


def test_verify_degenerate_prints_classification(degenerate_file, capsys):
    assert main(["verify", "--rates", degenerate_file, "--t-grid", "0.5"]) == 0
    captured = capsys.readouterr()
    assert "DEGENERATE" in captured.err
    assert json.loads(captured.out)["witness"] == "({1,2,3,4}, 12|34)"


def test_verify_csv_format(golden_file, capsys):
    assert main([
        "verify", "--rates", golden_file, "--t-grid", "0.5", "--format", "csv",
    ]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "name,passed,seconds,detail"
    assert all(",true," in line for line in lines[1:])


def test_verify_negative_rate_exits_2(tmp_path, capsys):
    bad = tmp_path / "neg.rates"
    bad.write_text("n = 2\nlattice = interval\n1|2 = -1/3\n")
    assert main(["verify", "--rates", str(bad)]) == 2
    assert "negative" in capsys.readouterr().err


# -- simulate ---------------------------------------------------------------------


def test_simulate_report_and_summary(golden_file, capsys):
    assert main([
        "simulate", "--rates", golden_file, "--t-grid", "1",
        "--samples", "2000", "--seed", "11",
    ]) == 0
    captured = capsys.readouterr()
    lines = captured.out.strip().splitlines()
    assert lines[0] == "t,partition,empirical,analytic,sigma,z"
    assert len(lines) == 9
    assert "samples=2000 seed=11" in captured.err
    assert "within_4_sigma=True" in captured.err


def test_simulate_byte_identical_with_seed(golden_file, tmp_path):
    first, second = tmp_path / "s1.csv", tmp_path / "s2.csv"
    for out in (first, second):
        assert main([
            "simulate", "--rates", golden_file, "--t-grid", "0.5,1",
            "--samples", "400", "--seed", "3", "--out", str(out),
        ]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_simulate_seed_changes_output(golden_file, capsys):
    main(["simulate", "--rates", golden_file, "--t-grid", "1",
          "--samples", "400", "--seed", "1"])
    one = capsys.readouterr().out
    main(["simulate", "--rates", golden_file, "--t-grid", "1",
          "--samples", "400", "--seed", "2"])
    assert capsys.readouterr().out != one


# -- errors and plumbing --------------------------------------------------------


def test_missing_rate_file_exits_2(capsys):
    assert main(["theta", "--rates", "/nonexistent/file.rates"]) == 2
    assert "cannot read" in capsys.readouterr().err


def test_malformed_partition_names_line(tmp_path, capsys):
    bad = tmp_path / "bad.rates"
    bad.write_text("n = 3\nlattice = interval\n13|2 = 1/2\n")
    assert main(["solve", "--rates", str(bad), "--t-grid", "1"]) == 2
    assert "line 3" in capsys.readouterr().err


def test_unreachable_server_exits_2(golden_file, capsys):
    assert main([
        "theta", "--rates", golden_file, "--server", "http://127.0.0.1:1",
    ]) == 2
    assert "cannot reach server" in capsys.readouterr().err


def test_unknown_command_is_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        main(["frobnicate"])
    assert excinfo.value.code == 2


def test_version_flag_prints_and_exits():
    with pytest.raises(SystemExit) as excinfo:
        main(["--version"])
    assert excinfo.value.code == 0
