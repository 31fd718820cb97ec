import json

from gsde.cli import main

SMALL = ["--trials", "4", "--T", "0.5", "--seed", "5"]


def run_cli(args):
    return main([str(a) for a in args])


def test_simulate_writes_expected_artifacts(tmp_path):
    out = tmp_path / "sim"
    code = run_cli(["simulate", "--case", "example1", *SMALL, "--out", out])
    assert code == 0
    for name in (
        "summary.json",
        "scenario_manifest.json",
        "lognorm_vs_time.csv",
        "trajectory_metrics.csv",
        "fig_lognorm.png",
    ):
        assert (out / name).exists(), name
    metrics_header = (out / "trajectory_metrics.csv").read_text().splitlines()[0]
    assert metrics_header.startswith("scenario_id,trial,tail_oscillation")
    # one trajectory CSV per scenario of the constant grid
    assert len(list(out.glob("trajectories_s*.csv"))) == 6
    summary = json.loads((out / "summary.json").read_text())
    assert summary["schema_version"] == 1
    assert summary["n_trajectories"] == 24
    assert summary["stop_reasons"] == {"completed": 24}
    header = (out / "trajectories_s0.csv").read_text().splitlines()[0]
    assert header == "trial,t,x_1,x_2,x_3,sigma_sq_1"


def test_simulate_summary_is_byte_identical_across_runs(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run_cli(["simulate", "--case", "example1", *SMALL, "--out", out1]) == 0
    assert run_cli(["simulate", "--case", "example1", *SMALL, "--out", out2]) == 0
    assert (out1 / "summary.json").read_bytes() == (out2 / "summary.json").read_bytes()
    assert (out1 / "lognorm_vs_time.csv").read_bytes() == (
        out2 / "lognorm_vs_time.csv"
    ).read_bytes()


def test_simulate_seed_changes_outputs(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    run_cli(["simulate", "--case", "example1", "--trials", "4", "--T", "0.5",
             "--seed", "5", "--out", out1])
    run_cli(["simulate", "--case", "example1", "--trials", "4", "--T", "0.5",
             "--seed", "6", "--out", out2])
    assert (out1 / "summary.json").read_bytes() != (out2 / "summary.json").read_bytes()


def test_no_figures_flag(tmp_path):
    out = tmp_path / "sim"
    run_cli(["simulate", "--case", "example1", *SMALL, "--out", out, "--no-figures"])
    assert not (out / "fig_lognorm.png").exists()
    assert (out / "lognorm_vs_time.csv").exists()


def test_simulate_config_errors_exit_2(tmp_path, capsys):
    assert run_cli(["simulate", "--case", "example1", "--trials", "0"]) == 2
    assert "trials" in capsys.readouterr().err
    assert run_cli(["simulate", "--trials", "4"]) == 2  # no case
    assert run_cli(["simulate", "--case", "nonexistent", "--trials", "4"]) == 2


def test_config_file_drives_simulation(tmp_path):
    cfg = tmp_path / "run.yaml"
    out = tmp_path / "from_config"
    cfg.write_text(
        "case: example1\n"
        "simulation: {T: 0.5, trials: 3, seed: 9}\n"
        f"output: {{dir: {out}, figures: false}}\n"
    )
    assert run_cli(["simulate", "--config", cfg]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["n_trajectories"] == 18
    assert summary["config"]["seed"] == 9


def test_config_file_unknown_key_exit_2(tmp_path, capsys):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("case: example1\nsimulation: {T: 0.5}\nextras: {}\n")
    assert run_cli(["simulate", "--config", cfg]) == 2
    assert "extras" in capsys.readouterr().err


def test_verify_pass_and_artifacts(tmp_path, capsys):
    out = tmp_path / "ver"
    code = run_cli(
        ["verify", "--case", "example1", "--samples", "1500", "--out", out]
    )
    stdout = capsys.readouterr().out
    assert code == 0
    assert "certified rate -0.75" in stdout
    assert "heuristic" in stdout
    doc = json.loads((out / "verify_report.json").read_text())
    assert doc["passed"] is True
    assert doc["generator_bound"]["passed"] is True
    assert doc["exponential_certificate"]["rate"] == -0.75
    assert (out / "margins.csv").exists()
    assert (out / "fig_margins.png").exists()


def test_verify_fails_with_large_lambda(tmp_path):
    out = tmp_path / "ver"
    code = run_cli(
        ["verify", "--case", "example1", "--lambda", "10", "--samples", "500", "--out", out]
    )
    assert code == 1
    doc = json.loads((out / "verify_report.json").read_text())
    assert doc["passed"] is False
    assert doc["exponential_certificate"]["passed"] is False


def test_verify_example3_passes(tmp_path):
    code = run_cli(
        ["verify", "--case", "example3", "--samples", "1500", "--out", tmp_path / "v3"]
    )
    assert code == 0


def test_capacity_command(tmp_path, capsys):
    out = tmp_path / "cap"
    code = run_cli(
        ["capacity", "--case", "example1", "--event", "|x(T)| > 1", *SMALL, "--out", out]
    )
    assert code == 0
    stdout = capsys.readouterr().out
    assert "supremum" in stdout
    doc = json.loads((out / "capacity.json").read_text())
    assert doc["event"] == "|x(T)| > 1"
    assert 0.0 <= doc["supremum"] <= 1.0
    assert doc["family_size"] == 6

    assert run_cli(
        ["capacity", "--case", "example1", "--event", "true", *SMALL, "--out", out]
    ) == 0
    doc = json.loads((out / "capacity.json").read_text())
    assert doc["supremum"] == 1.0


def test_capacity_parse_error_exit_2(tmp_path, capsys):
    code = run_cli(
        ["capacity", "--case", "example1", "--event", "|x(T)| >", *SMALL,
         "--out", tmp_path / "cap"]
    )
    assert code == 2
    assert "position" in capsys.readouterr().err
