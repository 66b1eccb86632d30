"""CLI subcommands, config handling, CSV schemas, and output determinism."""

import csv

from newton_landweber import cli
from newton_landweber.checks import ALL_CHECKS
from newton_landweber.reporting import (
    ITERATION_COLUMNS,
    SOLUTION_COLUMNS_1D,
    SOLUTION_COLUMNS_2D,
    SUMMARY_COLUMNS,
)

SMALL = ["--override", "n=60", "--override", "max_total_inner=150"]
LABEL = "example1_p1.1_r2_delta0.0001_tau1.02_seed2"


def read_rows(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))


def test_run_writes_csvs(tmp_path, capsys):
    code = cli.main(["run", "--preset", "example1", "--out", str(tmp_path)] + SMALL)
    assert code == 0
    out = capsys.readouterr().out
    assert "example1:" in out and "wrote" in out
    rundir = tmp_path / LABEL
    assert rundir.is_dir()
    assert read_rows(rundir / "iterations.csv")[0] == ITERATION_COLUMNS
    assert read_rows(rundir / "summary.csv")[0] == SUMMARY_COLUMNS
    assert read_rows(rundir / "solution.csv")[0] == SOLUTION_COLUMNS_1D
    summary = read_rows(rundir / "summary.csv")
    assert len(summary) == 2
    row = dict(zip(SUMMARY_COLUMNS, summary[1]))
    assert row["preset"] == "example1"
    assert row["seed"] == "2"
    # one iteration row per recorded inner step
    assert len(read_rows(rundir / "iterations.csv")) == 1 + int(row["N_p"])


def test_run_2d_solution_columns(tmp_path):
    code = cli.main([
        "run", "--preset", "example2d", "--out", str(tmp_path),
        "--override", "n=8", "--override", "m=8",
        "--override", "max_total_inner=40",
    ])
    assert code == 0
    (rundir,) = [d for d in tmp_path.iterdir() if d.is_dir()]
    assert read_rows(rundir / "solution.csv")[0] == SOLUTION_COLUMNS_2D


def test_outdir_env_var(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(cli.ENV_OUT, str(tmp_path / "from_env"))
    assert cli.main(["run", "--preset", "example1"] + SMALL) == 0
    assert (tmp_path / "from_env" / LABEL).is_dir()
    # --out wins over the environment
    assert cli.main(["run", "--preset", "example1", "--out",
                     str(tmp_path / "flag")] + SMALL) == 0
    assert (tmp_path / "flag" / LABEL).is_dir()
    capsys.readouterr()


def test_config_file_with_comments(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# small smoke configuration\n"
        "preset = example1\n"
        "\n"
        "n = 60        # coarse grid\n"
        "max_total_inner = 150\n"
    )
    code = cli.main(["run", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / LABEL).is_dir()


def test_cli_flags_beat_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("preset = example1\nseed = 3\nn = 60\nmax_total_inner = 150\n")
    assert cli.main(["run", "--config", str(cfg), "--seed", "5",
                     "--out", str(tmp_path)]) == 0
    assert (tmp_path / LABEL.replace("seed2", "seed5")).is_dir()
    # --override outranks both the config and the --seed flag
    assert cli.main(["run", "--config", str(cfg), "--seed", "5",
                     "--override", "seed=7", "--out", str(tmp_path)]) == 0
    assert (tmp_path / LABEL.replace("seed2", "seed7")).is_dir()


def test_malformed_config_line(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("preset = example1\nthis line has no equals\n")
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "bad.cfg:2" in err


def test_unknown_override_key(tmp_path, capsys):
    code = cli.main(["run", "--preset", "example1", "--out", str(tmp_path),
                     "--override", "bogus=1"])
    assert code == 2
    assert "unknown override" in capsys.readouterr().err


def test_missing_preset(tmp_path, capsys):
    assert cli.main(["run", "--out", str(tmp_path)]) == 2
    assert "no preset" in capsys.readouterr().err


def test_failed_run_exit_code(tmp_path, capsys):
    # refinement cannot reach the alpha bound inside the inner cap
    code = cli.main([
        "run", "--preset", "example1", "--out", str(tmp_path),
        "--override", "n=60", "--override", "p=2",
        "--override", "delta=1e-2", "--override", "rate_mode=true",
        "--override", "nu=0.5", "--override", "tau=1.1",
        "--override", "tau_tilde=0.01", "--override", "alpha00=0.1",
        "--override", "q=0.5", "--override", "c_alpha=0.012",
        "--override", "max_inner=60",
    ])
    assert code == 1
    assert "run failed" in capsys.readouterr().err


def test_outputs_are_byte_identical_across_reruns(tmp_path):
    for sub in ("a", "b"):
        assert cli.main(["run", "--preset", "example1",
                         "--out", str(tmp_path / sub)] + SMALL) == 0
    dir_a = tmp_path / "a" / LABEL
    dir_b = tmp_path / "b" / LABEL
    for name in ("iterations.csv", "solution.csv"):
        assert (dir_a / name).read_bytes() == (dir_b / name).read_bytes()
    # the summary differs only in wall-clock time
    rows_a = read_rows(dir_a / "summary.csv")
    rows_b = read_rows(dir_b / "summary.csv")
    wall = SUMMARY_COLUMNS.index("wall_ms")
    for ra, rb in zip(rows_a, rows_b):
        masked_a = ra[:wall] + ra[wall + 1:]
        masked_b = rb[:wall] + rb[wall + 1:]
        assert masked_a == masked_b


def test_sweep_merges_summaries(tmp_path, capsys):
    code = cli.main([
        "sweep", "--preset", "example1", "--out", str(tmp_path),
        "--override", "n=60", "--override", "max_total_inner=120",
        "--vary", "seed=2,3", "--vary", "max_inner=40,50",
    ])
    assert code == 0
    merged = read_rows(tmp_path / "sweep_summary.csv")
    assert merged[0] == SUMMARY_COLUMNS
    assert len(merged) == 5  # header + 2x2 combinations
    # unlabeled swept keys are tagged onto the directory name
    dirs = sorted(d.name for d in tmp_path.iterdir() if d.is_dir())
    assert f"{LABEL}_max_inner40" in dirs
    assert LABEL.replace("seed2", "seed3") + "_max_inner50" in dirs
    assert capsys.readouterr().out.count("example1:") == 4


def test_sweep_rejects_empty_axis(tmp_path, capsys):
    code = cli.main(["sweep", "--preset", "example1", "--out", str(tmp_path),
                     "--vary", "seed="])
    assert code == 2
    assert "no values" in capsys.readouterr().err


def test_verify_prints_one_line_per_check(capsys):
    assert cli.main(["verify"]) == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l.strip()]
    assert len(lines) == len(ALL_CHECKS)
    assert all(line.startswith("PASS") for line in lines)


def test_default_outdir_is_runs(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv(cli.ENV_OUT, raising=False)
    assert cli.main(["run", "--preset", "example1"] + SMALL) == 0
    assert (tmp_path / "runs" / LABEL).is_dir()
