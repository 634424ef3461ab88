"""CLI tests: flag parsing, config precedence, exit codes, artifact files."""

import json

import pytest
from fastapi.testclient import TestClient

from lcisim import cli
from lcisim.service import app


def run_cli(args, capsys, **kw):
    code = cli.main(args, **kw)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_ok_exit_zero(capsys):
    code, out, _ = run_cli(["--cmd", "verify", "--n-list", "4,8"], capsys)
    assert code == 0
    report = json.loads(out[out.index("{"):])
    assert report["passed"] is True


def test_verify_self_test_exit_one(capsys):
    code, out, _ = run_cli(["--cmd", "verify", "--n-list", "4", "--self-test"], capsys)
    assert code == 1
    report = json.loads(out[out.index("{"):])
    assert report["passed"] is False


def test_missing_cmd_exit_two(capsys):
    assert run_cli([], capsys)[0] == 2


def test_unknown_cmd_exit_two(capsys):
    assert run_cli(["--cmd", "warp"], capsys)[0] == 2


def test_bad_trials_exit_two(capsys):
    code, _, err = run_cli(
        ["--cmd", "run-once", "--synthetic", "uniform", "--n", "64", "--trials", "0"],
        capsys,
    )
    assert code == 2
    assert "error:" in err


def test_bad_n_list_exit_two(capsys):
    code, _, err = run_cli(["--cmd", "verify", "--n-list", "4,eight"], capsys)
    assert code == 2
    assert "comma separated integers" in err


def test_unreadable_scene_exit_two(tmp_path, capsys):
    code, _, err = run_cli(
        ["--cmd", "pixel-map", "--scene", str(tmp_path / "nope.pgm")], capsys
    )
    assert code == 2
    assert "cannot read scene file" in err


def test_bad_scene_content_exit_two(tmp_path, capsys):
    path = tmp_path / "junk.pgm"
    path.write_bytes(b"definitely not an image")
    code, _, err = run_cli(["--cmd", "pixel-map", "--scene", str(path)], capsys)
    assert code == 2


def test_run_once_writes_artifacts(tmp_path, capsys):
    out_dir = tmp_path / "out"
    code, out, _ = run_cli(
        [
            "--cmd", "run-once", "--synthetic", "uniform", "--n", "64",
            "--x0", "1e6", "--trials", "20", "--out-dir", str(out_dir),
        ],
        capsys,
    )
    assert code == 0
    assert (out_dir / "run_once.csv").is_file()
    assert (out_dir / "run_once.txt").is_file()
    assert f"wrote {out_dir / 'run_once.csv'}" in out


def test_pixel_map_writes_binary_pgm(tmp_path, capsys):
    csv = tmp_path / "scene.csv"
    csv.write_text("9,1\n1,1\n")
    out_dir = tmp_path / "out"
    code, _, _ = run_cli(
        [
            "--cmd", "pixel-map", "--scene", str(csv),
            "--avg-photons", "100", "--out-dir", str(out_dir),
        ],
        capsys,
    )
    assert code == 0
    blob = (out_dir / "pixel_map.pgm").read_bytes()
    assert blob.startswith(b"P5")


def test_percentile_accepts_multiple_scenes(tmp_path, capsys):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    a.write_text("1,2,3,4\n")
    b.write_text("4,3\n2,1\n")
    out_dir = tmp_path / "out"
    code, _, _ = run_cli(
        [
            "--cmd", "percentile-curve", "--scene", str(a), "--scene", str(b),
            "--avg-photons", "10", "--out-dir", str(out_dir),
        ],
        capsys,
    )
    assert code == 0
    assert (out_dir / "percentile_curve_a.csv").is_file()
    assert (out_dir / "percentile_curve_b.csv").is_file()


def test_run_once_rejects_multiple_scenes(tmp_path, capsys):
    a = tmp_path / "a.csv"
    a.write_text("1,2\n")
    code, _, err = run_cli(
        ["--cmd", "run-once", "--scene", str(a), "--scene", str(a)], capsys
    )
    assert code == 2
    assert "exactly one scene" in err


def test_config_fills_and_flags_win(tmp_path, capsys):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("trials=50\nseed=7\nn=32  # inline comment\n")
    out_dir = tmp_path / "out"
    code, _, _ = run_cli(
        [
            "--cmd", "run-once", "--synthetic", "uniform", "--config", str(cfg),
            "--trials", "30", "--out-dir", str(out_dir),
        ],
        capsys,
    )
    assert code == 0
    text = (out_dir / "run_once.txt").read_text()
    assert "trials: 30, seed: 7" in text  # flag beats config, config beats default
    assert "vector length: 32" in text


def test_config_unknown_key_exit_two(tmp_path, capsys):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("frobnicate=1\n")
    code, _, err = run_cli(["--cmd", "verify", "--config", str(cfg)], capsys)
    assert code == 2
    assert "unknown config key" in err


def test_config_bad_value_exit_two(tmp_path, capsys):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("trials=lots\n")
    assert run_cli(["--cmd", "verify", "--config", str(cfg)], capsys)[0] == 2


def test_config_missing_file_exit_two(tmp_path, capsys):
    code, _, err = run_cli(
        ["--cmd", "verify", "--config", str(tmp_path / "none.txt")], capsys
    )
    assert code == 2
    assert "cannot read config file" in err


def test_config_can_set_lists(tmp_path, capsys):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("n-list=4,8\n")
    code, out, _ = run_cli(["--cmd", "verify", "--config", str(cfg)], capsys)
    assert code == 0
    report = json.loads(out[out.index("{"):])
    assert sorted({r["n"] for r in report["rows"]}) == [4, 8]


def test_server_transport_matches_local_bytes(tmp_path, capsys):
    args = [
        "--cmd", "run-once", "--synthetic", "uniform", "--n", "64",
        "--x0", "1e6", "--trials", "20",
    ]
    local_dir = tmp_path / "local"
    server_dir = tmp_path / "server"
    assert cli.main(args + ["--out-dir", str(local_dir)]) == 0
    client = TestClient(app)
    assert cli.main(args + ["--out-dir", str(server_dir)], http_client=client) == 0
    capsys.readouterr()
    for name in ("run_once.csv", "run_once.txt"):
        assert (local_dir / name).read_bytes() == (server_dir / name).read_bytes()


def test_server_rejection_exit_two(capsys):
    client = TestClient(app)
    code, _, err = run_cli(
        ["--cmd", "verify", "--n-list", "48"], capsys, http_client=client
    )
    assert code == 2


def test_no_mc_flag_reaches_request(capsys):
    code, out, _ = run_cli(
        ["--cmd", "ratio-curve", "--abscissas", "0,1", "--n", "64", "--no-mc"],
        capsys,
    )
    assert code == 0
    report = json.loads(out[out.index("{"):])
    assert report["trials"] == 0


def test_sweep_artifact_deterministic_across_processes(tmp_path):
    import subprocess
    import sys

    args = [
        sys.executable, "-m", "lcisim.cli", "--cmd", "sweep-resolution",
        "--n-list", "16,32", "--trials", "20", "--mc-cap", "32",
    ]
    for sub in ("one", "two"):
        subprocess.run(
            args + ["--out-dir", str(tmp_path / sub)],
            check=True,
            capture_output=True,
        )
    one = (tmp_path / "one" / "sweep_resolution.csv").read_bytes()
    two = (tmp_path / "two" / "sweep_resolution.csv").read_bytes()
    assert one == two
