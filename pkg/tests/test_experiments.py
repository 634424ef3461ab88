"""Command layer tests: artifact formats, determinism, report contents."""

import base64

import numpy as np
import pytest

from lcisim import experiments as ex
from lcisim.pgm import read_pgm
from lcisim.schemas import (
    PERCENTILE_CSV_HEADER,
    PercentileCurveRequest,
    PixelMapRequest,
    RATIO_CSV_HEADER,
    RatioCurveRequest,
    RunOnceRequest,
    SWEEP_CSV_HEADER,
    SceneSpec,
    NoiseSpec,
    SweepRequest,
    VerifyRequest,
)


def _csv_scene(values, avg=100.0, name="img.csv"):
    text = "\n".join(",".join(str(v) for v in row) for row in values)
    return SceneSpec(
        kind="file",
        filename=name,
        content_b64=base64.b64encode(text.encode()).decode(),
        avg_photons=avg,
    )


# ---------------------------------------------------------------- verify


def test_verify_default_sizes_pass():
    resp = ex.run_verify(VerifyRequest(n_list=[4, 8, 16, 32]))
    assert resp.status == "ok"
    assert resp.report["passed"] is True
    assert resp.report["reduced_inverse_order_parameter"] == "full"
    assert all(r["status"] in ("pass", "not_applicable") for r in resp.report["rows"])


def test_verify_runs_five_checks_per_small_size():
    resp = ex.run_verify(VerifyRequest(n_list=[16]))
    checks = [r["check"] for r in resp.report["rows"]]
    assert checks == [
        "closed_form_inverse",
        "column_sums",
        "transform_vs_dense",
        "forward_vs_dense",
        "reduced_inverse",
    ]


def test_verify_skips_reduced_check_above_256():
    resp = ex.run_verify(VerifyRequest(n_list=[512]))
    checks = [r["check"] for r in resp.report["rows"]]
    assert "reduced_inverse" not in checks
    assert resp.status == "ok"


def test_verify_self_test_reports_fail():
    resp = ex.run_verify(VerifyRequest(n_list=[4], self_test=True))
    assert resp.status == "fail"
    control = [r for r in resp.report["rows"] if r["check"] == "corruption_control"]
    assert len(control) == 1
    assert control[0]["status"] == "fail"
    assert control[0]["deviation"] >= ex.IDENTITY_TOL


@pytest.mark.parametrize("bad", [3, 12, 8192])
def test_verify_rejects_bad_sizes(bad):
    with pytest.raises(ValueError):
        ex.run_verify(VerifyRequest(n_list=[bad]))


# ---------------------------------------------------------------- sweep


def _small_sweep(**kw):
    base = dict(n_list=[16, 32, 64], trials=30, mc_cap=32)
    base.update(kw)
    return SweepRequest(**base)


def test_sweep_csv_header_and_row_count():
    resp = ex.run_sweep(_small_sweep())
    lines = resp.artifacts[0].text.splitlines()
    assert lines[0] == SWEEP_CSV_HEADER
    assert len(lines) == 4
    assert resp.artifacts[0].name == "sweep_resolution.csv"


def test_sweep_mc_cells_empty_above_cap():
    resp = ex.run_sweep(_small_sweep())
    lines = resp.artifacts[0].text.splitlines()
    row64 = lines[3].split(",")
    assert row64[0] == "64"
    assert row64[1] == "" and row64[2] == ""  # lci mc, lci se
    assert row64[5] == "" and row64[6] == ""  # pai mc, pai se
    assert row64[3] != "" and row64[7] != ""
    row16 = lines[1].split(",")
    assert all(cell != "" for cell in row16)


def test_sweep_bound_column_is_resolution_free():
    # closed-form lower bound depends only on x0 and sigma
    resp = ex.run_sweep(_small_sweep(n_list=[16, 64, 256], mc_cap=2))
    lines = resp.artifacts[0].text.splitlines()[1:]
    bounds = {line.split(",")[4] for line in lines}
    assert len(bounds) == 1


def test_sweep_exact_decreases_toward_bound():
    resp = ex.run_sweep(_small_sweep(n_list=[16, 64, 256, 1024], mc_cap=2))
    rows = resp.report["rows"]
    exact = [r["snr_lci_exact_db"] for r in rows]
    bound = [r["snr_lci_bound_db"] for r in rows]
    assert all(e > b for e, b in zip(exact, bound))
    assert all(a > b for a, b in zip(exact, exact[1:]))


def test_sweep_sorts_and_dedupes_sizes():
    resp = ex.run_sweep(_small_sweep(n_list=[64, 16, 64, 32]))
    assert [r["n"] for r in resp.report["rows"]] == [16, 32, 64]


def test_sweep_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        ex.run_sweep(_small_sweep(n_list=[48]))


def test_sweep_deterministic_across_runs_and_workers():
    a = ex.run_sweep(_small_sweep()).artifacts[0].text
    b = ex.run_sweep(_small_sweep()).artifacts[0].text
    c = ex.run_sweep(_small_sweep(workers=2)).artifacts[0].text
    assert a == b == c


def test_sweep_seed_changes_mc_but_not_analytic():
    a = ex.run_sweep(_small_sweep()).report["rows"][0]
    b = ex.run_sweep(_small_sweep(seed=99)).report["rows"][0]
    assert a["snr_lci_mc_db"] != b["snr_lci_mc_db"]
    assert a["snr_lci_exact_db"] == b["snr_lci_exact_db"]


# ---------------------------------------------------------------- ratio curve


def test_ratio_curve_header_and_columns():
    resp = ex.run_ratio_curve(
        RatioCurveRequest(abscissas=[0.0, 1.0], n=64, trials=40)
    )
    lines = resp.artifacts[0].text.splitlines()
    assert lines[0] == RATIO_CSV_HEADER
    assert len(lines) == 3
    assert resp.artifacts[0].name == "ratio_curve.csv"


def test_ratio_curve_known_ordinates():
    resp = ex.run_ratio_curve(
        RatioCurveRequest(abscissas=[0.0, 1.0, 2.0], n=64, trials=40)
    )
    rows = resp.report["rows"]
    assert rows[0]["ratio_approx"] == pytest.approx(1.0 / np.sqrt(2.0), abs=1e-9)
    assert rows[1]["ratio_approx"] == pytest.approx(1.0, abs=1e-9)
    assert rows[2]["ratio_approx"] == pytest.approx(np.sqrt(2.5), abs=1e-9)
    for row in rows:
        assert row["ratio_exact"] == pytest.approx(row["ratio_approx"], rel=5e-4)


def test_ratio_curve_no_mc_leaves_empty_cells():
    resp = ex.run_ratio_curve(RatioCurveRequest(abscissas=[0.0, 0.5], n=64, mc=False))
    lines = resp.artifacts[0].text.splitlines()
    assert lines[1].endswith(",")
    assert resp.report["trials"] == 0
    assert "ratio_mc" not in resp.report["rows"][0]


def test_ratio_curve_deterministic_across_workers():
    req = dict(abscissas=[0.0, 1.0], n=64, trials=40)
    a = ex.run_ratio_curve(RatioCurveRequest(**req)).artifacts[0].text
    b = ex.run_ratio_curve(RatioCurveRequest(**req, workers=2)).artifacts[0].text
    assert a == b


# ---------------------------------------------------------------- pixel map


def test_pixel_map_flat_scene_is_all_black():
    # every pixel exactly at threshold: 0 dB everywhere, black image
    spec = _csv_scene([[1, 1, 1, 1]] * 4)
    resp = ex.run_pixel_map(PixelMapRequest(scene=spec))
    assert resp.report["percent_above_0db"] == 0.0
    assert resp.report["max_db"] == pytest.approx(0.0, abs=1e-12)
    raw = base64.b64decode(resp.artifacts[1].content_b64)
    img = read_pgm(raw)
    assert img.shape == (4, 4)
    assert np.all(img == 0)


def test_pixel_map_csv_grid_matches_scene():
    spec = _csv_scene([[4, 1], [1, 1]])
    resp = ex.run_pixel_map(PixelMapRequest(scene=spec))
    lines = resp.artifacts[0].text.splitlines()
    assert lines[0] == "col_0,col_1"
    assert len(lines) == 3
    # 2x2 image lands in n=8: threshold 2*7/8 = 1.75 photon units
    db = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    x = np.array([[4.0, 1.0], [1.0, 1.0]]) * 100.0
    expect = 10.0 * np.log10(x / (2.0 * 700.0 / 8.0))
    assert db == pytest.approx(expect, abs=5e-4)


def test_pixel_map_bright_pixel_is_white():
    spec = _csv_scene([[4, 1], [1, 1]])
    resp = ex.run_pixel_map(PixelMapRequest(scene=spec))
    img = read_pgm(base64.b64decode(resp.artifacts[1].content_b64))
    assert img[0, 0] == 65535  # brightest pixel defines white
    assert np.all(img.reshape(-1)[1:] == 0)  # the rest sit below 0 dB


def test_pixel_map_artifact_names():
    resp = ex.run_pixel_map(PixelMapRequest(scene=_csv_scene([[1, 2], [3, 4]])))
    assert [a.name for a in resp.artifacts] == ["pixel_map.csv", "pixel_map.pgm"]
    assert resp.artifacts[1].media_type == "image/x-portable-graymap"


# ---------------------------------------------------------------- percentile


def test_percentile_crossing_at_half():
    # 4 of 8 pixels sit above the advantage threshold
    spec = _csv_scene([[8, 8, 8, 8, 1, 1, 1, 1]])
    resp = ex.run_percentile_curve(PercentileCurveRequest(scenes=[spec]))
    assert resp.report["scenes"][0]["crossing_percent"] == pytest.approx(50.0)
    lines = resp.artifacts[0].text.splitlines()
    assert lines[0] == PERCENTILE_CSV_HEADER
    assert len(lines) == 9


def test_percentile_curve_is_sorted_descending():
    spec = _csv_scene([[5, 1, 9, 2, 7, 3, 8, 4]])
    resp = ex.run_percentile_curve(PercentileCurveRequest(scenes=[spec]))
    db = [float(line.split(",")[1]) for line in resp.artifacts[0].text.splitlines()[1:]]
    assert db == sorted(db, reverse=True)


def test_percentile_multiple_scenes_unique_names():
    scenes = [
        SceneSpec(kind="uniform", n=64, x0=1e5),
        SceneSpec(kind="uniform", n=128, x0=1e5),
        SceneSpec(kind="uniform", n=64, x0=2e5),
    ]
    resp = ex.run_percentile_curve(PercentileCurveRequest(scenes=scenes))
    names = [a.name for a in resp.artifacts]
    assert len(set(names)) == 3
    assert names[0] == "percentile_curve_uniform_64.csv"
    assert names[2] == "percentile_curve_uniform_64_2.csv"


# ---------------------------------------------------------------- run once


def _run_once(**kw):
    base = dict(
        architecture="lci",
        scene=SceneSpec(kind="uniform", n=64, x0=1e6),
        noise=NoiseSpec(sigma=5.0, rho=5.0),
        trials=40,
    )
    base.update(kw)
    return ex.run_once(RunOnceRequest(**base))


def test_run_once_artifacts_and_report():
    resp = _run_once()
    assert [a.name for a in resp.artifacts] == ["run_once.csv", "run_once.txt"]
    lines = resp.artifacts[0].text.splitlines()
    assert lines[0].startswith("architecture,n,usable_pixels")
    cells = lines[1].split(",")
    assert cells[0] == "lci" and cells[1] == "64" and cells[2] == "63"
    assert resp.report["snr_analytic_db"] is not None
    assert resp.report["saturated"] is False


def test_run_once_mc_tracks_analytic_loosely():
    resp = _run_once(trials=200)
    ratio = resp.report["snr_mc_linear"] / resp.report["snr_analytic_linear"]
    assert 0.8 < ratio < 1.2


def test_run_once_text_states_conventions_and_budget():
    resp = _run_once(delta_t=0.5)
    text = resp.artifacts[1].text
    assert "20*log10" in text and "10*log10" in text
    assert "identical for all architectures" in text
    assert resp.report["total_sensor_time"] == pytest.approx(64 * 0.5)


@pytest.mark.parametrize("arch,sensors,slots", [("lci", 1, 64), ("pai", 64, 1), ("lai", 64, 1)])
def test_run_once_sensor_accounting(arch, sensors, slots):
    resp = _run_once(architecture=arch)
    assert resp.report["sensors"] == sensors
    assert resp.report["exposure_slots"] == slots


def test_run_once_deterministic():
    a = _run_once().artifacts[0].text
    b = _run_once().artifacts[0].text
    assert a == b


# ---------------------------------------------------------------- helpers


def test_jsonable_sanitizes_nonfinite():
    raw = {"a": float("inf"), "b": [float("-inf"), float("nan"), 1.5], "c": "x"}
    assert ex._jsonable(raw) == {"a": "inf", "b": ["-inf", None, 1.5], "c": "x"}


def test_build_scene_file_roundtrip():
    spec = _csv_scene([[1, 2], [3, 4]], avg=10.0)
    scene = ex.build_scene(spec, seed=0)
    assert scene.brightness == pytest.approx(40.0)  # avg 10 x 4 pixels
    assert scene.usable_image().tolist() == [[4.0, 8.0], [12.0, 16.0]]
