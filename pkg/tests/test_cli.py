import json

import pytest
from click.testing import CliRunner

from pogen.cli import main
from pogen.pogp import dumps_instance

from conftest import COUNTER2_TEXT, SYS_A_TEXT, SYS_C_TEXT, make_sys_b_instance


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def sys_a_file(tmp_path):
    p = tmp_path / "sys_a.aag"
    p.write_text(SYS_A_TEXT)
    return p


@pytest.fixture
def counter_file(tmp_path):
    p = tmp_path / "counter.aag"
    p.write_text(COUNTER2_TEXT)
    return p


@pytest.fixture
def sys_c_file(tmp_path):
    p = tmp_path / "sys_c.aag"
    p.write_text(SYS_C_TEXT)
    return p


def test_check_safe_exit_zero(runner, sys_a_file, tmp_path):
    report = tmp_path / "report.json"
    result = runner.invoke(
        main,
        ["check", str(sys_a_file), "--strategy", "lifting", "--report", str(report)],
    )
    assert result.exit_code == 0, result.output
    data = json.loads(report.read_text())
    assert data["verdict"] == "safe"
    assert 0.0 <= data["gen_time_share"] <= 1.0
    assert 0.0 <= data["mean_reduction_ratio"] <= 1.0


def test_check_unsafe_exit_one(runner, counter_file, tmp_path):
    witness = tmp_path / "trace.wit"
    result = runner.invoke(
        main,
        ["check", str(counter_file), "--strategy", "ms01x", "--witness", str(witness)],
    )
    assert result.exit_code == 1
    lines = witness.read_text().splitlines()
    assert lines[0] == "1" and lines[-1] == "."


def test_check_refusal_names_capability(runner, sys_c_file):
    result = runner.invoke(
        main,
        ["check", str(sys_c_file), "--strategy", "lifting", "--lifting-variant", "plain"],
    )
    assert result.exit_code == 3
    assert "left-total" in result.output


def test_check_portfolio_agrees(runner, counter_file):
    result = runner.invoke(
        main, ["check", str(counter_file), "--portfolio", "ms01x,igbg"]
    )
    assert result.exit_code == 1


def test_check_invalid_file(runner, tmp_path):
    bogus = tmp_path / "bogus.aag"
    bogus.write_text("aag nope\n")
    result = runner.invoke(main, ["check", str(bogus)])
    assert result.exit_code == 3  # parse errors must not collide with unsafe


def test_extract_and_compare_pipeline(runner, counter_file, tmp_path):
    out_dir = tmp_path / "pogps"
    result = runner.invoke(
        main,
        ["extract", str(counter_file), "--out", str(out_dir), "--strategy", "lifting"],
    )
    assert result.exit_code == 0, result.output
    count = int(result.output.strip().splitlines()[-1])
    assert count >= 1
    assert len(list(out_dir.glob("*.pogp"))) == count

    csv_path = tmp_path / "compare.csv"
    result = runner.invoke(
        main,
        [
            "compare",
            str(out_dir),
            "--strategies",
            "greedy-cover,max-qbf",
            "--out",
            str(csv_path),
            "--json",
            str(tmp_path / "compare.json"),
        ],
    )
    assert result.exit_code == 0, result.output
    text = csv_path.read_text()
    assert text.splitlines()[0].startswith("instance,strategy,")
    assert (tmp_path / "reduction_ratio.png").exists()
    assert (tmp_path / "performance.png").exists()
    data = json.loads((tmp_path / "compare.json").read_text())
    assert data["reference"] == "max-qbf"
    for agg in data["aggregates"]:
        if agg["strategy"] == "max-qbf":
            assert agg["mean_performance"] == 1.0


def test_compare_empty_dir_errors(runner, tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    result = runner.invoke(main, ["compare", str(empty)])
    assert result.exit_code == 3


def test_compare_sys_b_fixture(runner, tmp_path, sys_b):
    inst = make_sys_b_instance(sys_b, m_positive=False)
    pogp_dir = tmp_path / "d"
    pogp_dir.mkdir()
    (pogp_dir / "sys_b.pogp").write_text(dumps_instance(inst))
    csv_path = tmp_path / "cmp.csv"
    result = runner.invoke(
        main,
        [
            "compare",
            str(pogp_dir),
            "--strategies",
            "greedy-cover,greedy-qbf",
            "--out",
            str(csv_path),
            "--no-figures",
        ],
    )
    assert result.exit_code == 0, result.output
    rows = csv_path.read_text().splitlines()[1:]
    got = {}
    for row in rows:
        cols = row.split(",")
        got[cols[1]] = (int(cols[3]), float(cols[6]))
    assert got["greedy-cover"] == (0, 0.0)
    assert got["greedy-qbf"] == (1, 1.0)


def test_extract_deterministic_under_seed(runner, counter_file, tmp_path):
    outs = []
    for name in ("a", "b"):
        out_dir = tmp_path / name
        result = runner.invoke(
            main,
            [
                "extract",
                str(counter_file),
                "--out",
                str(out_dir),
                "--seed",
                "7",
                "--sample",
                "2",
            ],
        )
        assert result.exit_code == 0
        outs.append(
            sorted(p.read_text() for p in out_dir.glob("*.pogp"))
        )
    assert outs[0] == outs[1]


def test_check_dimspec(runner, tmp_path):
    f = tmp_path / "plan.dimspec"
    f.write_text("i cnf 1 1\n1 0\nu cnf 1 0\ng cnf 1 1\n-1 0\nt cnf 2 1\n1 -2 0\n")
    result = runner.invoke(main, ["check", str(f), "--strategy", "greedy-cover"])
    assert result.exit_code == 1  # a one-step plan exists


def test_extract_oracle_filter(runner, counter_file, tmp_path):
    out_dir = tmp_path / "filtered"
    result = runner.invoke(
        main,
        [
            "extract",
            str(counter_file),
            "--out",
            str(out_dir),
            "--filter",
            "oracle",
            "--oracle-bound",
            "8",
        ],
    )
    assert result.exit_code == 0, result.output
    from pogen.pogp import brute_force_oracle, loads_instance

    for p in out_dir.glob("*.pogp"):
        inst = loads_instance(p.read_text())
        assert brute_force_oracle(inst).removed >= 1


def test_safe_witness_is_invariant_dimacs(runner, sys_a_file, tmp_path):
    inv = tmp_path / "invariant.cnf"
    result = runner.invoke(
        main, ["check", str(sys_a_file), "--strategy", "igbg", "--witness", str(inv)]
    )
    assert result.exit_code == 0
    assert inv.read_text().startswith("p cnf")


def test_seed_env_fallback(runner, counter_file, tmp_path, monkeypatch):
    monkeypatch.setenv("POGEN_SEED", "11")
    report = tmp_path / "r.json"
    result = runner.invoke(
        main, ["check", str(counter_file), "--report", str(report)]
    )
    assert result.exit_code == 1
    assert json.loads(report.read_text())["seed"] == 11


def test_dimspec_extract_compare_pipeline(runner, tmp_path):
    # A 2-bit system where the goal needs both bits set and transitions may
    # set one bit per step: obligations arise and general strategies apply.
    spec = (
        "i cnf 2 2\n-1 0\n-2 0\n"
        "u cnf 2 0\n"
        "g cnf 2 2\n1 0\n2 0\n"
        "t cnf 4 2\n-1 3 0\n-2 4 0\n"
    )
    f = tmp_path / "sys.dimspec"
    f.write_text(spec)
    out_dir = tmp_path / "pogps"
    result = runner.invoke(
        main,
        ["extract", str(f), "--out", str(out_dir), "--strategy", "greedy-cover"],
    )
    assert result.exit_code == 0, result.output
    count = int(result.output.strip().splitlines()[-1])
    assert count >= 1
    csv_path = tmp_path / "cmp.csv"
    result = runner.invoke(
        main,
        [
            "compare",
            str(out_dir),
            "--strategies",
            "greedy-cover,gentr,sat-cover,max-qbf",
            "--out",
            str(csv_path),
            "--no-figures",
        ],
    )
    assert result.exit_code == 0, result.output
    lines = csv_path.read_text().splitlines()
    assert len(lines) >= 1 + 4  # header plus one row per strategy at least
