"""End-to-end tests of the command-line runner and its exit codes."""

import os

import pytest

from heavytail.cli import EXIT_OK, EXIT_TOLERANCE, EXIT_USAGE, main

FAST_SUBORDINATOR = """\
[experiment]
kind = subordinator
seed = 3
betas = 0.5
samples = 20000
overshoot_samples = 10000
moment_rtol = 0.05
overshoot_ks_tol = 0.05
"""


def _write(tmp_path, text, name="exp.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_run_writes_results_and_plots(tmp_path, capsys):
    cfg = _write(tmp_path, FAST_SUBORDINATOR)
    out = str(tmp_path / "out")
    code = main(["run", cfg, "--out", out])
    assert code == EXIT_OK
    assert os.path.exists(os.path.join(out, "results.csv"))
    assert os.path.exists(os.path.join(out, "summary.txt"))
    plot_dir = os.path.join(out, "plots")
    assert any(f.endswith(".svg") for f in os.listdir(plot_dir))
    captured = capsys.readouterr().out
    assert "PASS" in captured


def test_no_plots_flag(tmp_path):
    cfg = _write(tmp_path, FAST_SUBORDINATOR)
    out = str(tmp_path / "out")
    assert main(["run", cfg, "--out", out, "--no-plots"]) == EXIT_OK
    assert not os.path.isdir(os.path.join(out, "plots"))


def test_tolerance_failure_exit_code(tmp_path):
    # an absurdly tight tolerance must fail with exit code 2, not raise
    text = FAST_SUBORDINATOR.replace("moment_rtol = 0.05", "moment_rtol = 1e-9")
    cfg = _write(tmp_path, text)
    assert main(["run", cfg, "--out", str(tmp_path / "o")]) == EXIT_TOLERANCE


def test_schema_error_exit_code(tmp_path):
    cfg = _write(tmp_path, "[experiment]\nkind = subordinator\nbogus = 1\n")
    assert main(["run", cfg, "--out", str(tmp_path / "o")]) == EXIT_USAGE
    missing = str(tmp_path / "absent.ini")
    assert main(["run", missing]) == EXIT_USAGE


def test_seed_override_changes_results(tmp_path):
    cfg = _write(tmp_path, FAST_SUBORDINATOR)
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    main(["run", cfg, "--out", out1, "--no-plots"])
    main(["run", cfg, "--out", out2, "--no-plots", "--seed", "99"])
    r1 = open(os.path.join(out1, "results.csv"), "rb").read()
    r2 = open(os.path.join(out2, "results.csv"), "rb").read()
    assert r1 != r2


def test_rerun_is_byte_identical(tmp_path):
    cfg = _write(tmp_path, FAST_SUBORDINATOR)
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["run", cfg, "--out", out1, "--no-plots"]) == EXIT_OK
    assert main(["run", cfg, "--out", out2, "--no-plots"]) == EXIT_OK
    r1 = open(os.path.join(out1, "results.csv"), "rb").read()
    r2 = open(os.path.join(out2, "results.csv"), "rb").read()
    assert r1 == r2


def test_list_names_all_kinds(capsys):
    assert main(["list"]) == EXIT_OK
    out = capsys.readouterr().out.split()
    assert set(out) == {
        "subordinator", "chain-fclt", "entrance-fclt", "sssi", "main-fclt",
        "moments",
    }


def test_describe(capsys):
    assert main(["describe", "moments"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "p_pos" in out and "mc_size" in out
    assert main(["describe", "nope"]) == EXIT_USAGE


def test_no_command_prints_help(capsys):
    assert main([]) == EXIT_USAGE
