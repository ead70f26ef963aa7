"""End-to-end checks of the command line front end via subprocess."""

import json
import subprocess
import sys

BASE = [sys.executable, "-m", "fatoulab"]


def run_cli(*args):
    return subprocess.run(
        BASE + list(args), capture_output=True, text=True, timeout=120
    )


def stdout_payload(proc):
    lines = proc.stdout.splitlines()
    assert len(lines) == 1, proc.stdout
    return json.loads(lines[0])


def test_no_subcommand_is_usage_error():
    proc = run_cli()
    assert proc.returncode == 1
    payload = stdout_payload(proc)
    assert payload["error"] == "usage"


def test_bad_map_spec_exits_one():
    proc = run_cli("dw", "--f", "nosuch:1")
    assert proc.returncode == 1
    payload = stdout_payload(proc)
    assert payload["error"] == "MapSpecError"
    assert "nosuch" in payload["message"]


def test_runaway_reports_witness():
    proc = run_cli(
        "runaway",
        "--f", "affine:1,2",
        "--K", "disc:0,0,0.5",
        "--n-max", "10",
        "--mesh", "0.03125",
    )
    assert proc.returncode == 0, proc.stdout + proc.stderr
    payload = stdout_payload(proc)
    assert payload["command"] == "runaway"
    assert payload["N"] == 1
    assert payload["margin"] > 0.5


def test_honest_negative_exits_two():
    proc = run_cli("dw", "--f", "mobius:1j,0,0,1", "--max-iter", "500")
    assert proc.returncode == 2
    payload = stdout_payload(proc)
    assert payload["error"] == "NoConvergence"


def test_out_directory_report(tmp_path):
    out = tmp_path / "reports"
    proc = run_cli(
        "dw",
        "--f", "pow:2:mobius:1,0.5,0.5,1",
        "--out", str(out),
    )
    assert proc.returncode == 0, proc.stdout + proc.stderr
    payload = stdout_payload(proc)
    assert payload["boundary"] is True
    report = json.loads((out / "report.json").read_text())
    assert report["point"] == payload["point"]
    assert abs(complex(*report["point"]) - 1.0) < 1e-6


def test_render_writes_pgm(tmp_path):
    proc = run_cli(
        "render",
        "--f", "poly:0,0,1",
        "--window=-2,-2,2,2",
        "--res", "8",
        "--max-iter", "30",
        "--out", str(tmp_path),
    )
    assert proc.returncode == 0, proc.stdout + proc.stderr
    payload = stdout_payload(proc)
    assert payload["shape"] == [8, 8]
    data = (tmp_path / "escape.pgm").read_bytes()
    assert data.startswith(b"P5\n8 8\n255\n")
    assert len(data) == len(b"P5\n8 8\n255\n") + 64


def test_repeat_runs_are_byte_identical(tmp_path):
    args = (
        "separation",
        "--f", "affine:1,2",
        "--K", "disc:0,0,0.75",
        "--L", "disc:0,0,0.5",
        "--m-max", "10",
        "--mesh", "0.03125",
    )
    first = run_cli(*args, "--out", str(tmp_path / "a"))
    second = run_cli(*args, "--out", str(tmp_path / "b"))
    assert first.returncode == second.returncode == 0
    assert first.stdout == second.stdout
    report_a = (tmp_path / "a" / "report.json").read_bytes()
    report_b = (tmp_path / "b" / "report.json").read_bytes()
    assert report_a == report_b
