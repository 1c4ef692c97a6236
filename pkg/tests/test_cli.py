import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from dctrecover import GrayImage, forward_dct, load_image, make_layout, psnr, save_image
from dctrecover.cli import RunConfig, compare_table, main, run_sweep
from dctrecover.errors import (
    CorruptFile,
    DimensionMismatch,
    EmptyInput,
    InvalidCount,
    IoFailure,
    NotDcOnlyMask,
)
from dctrecover.samples import load_sample
from dctrecover.sidecar import read_sidecar
from conftest import smooth_image


@pytest.fixture
def camera(tmp_path):
    path = tmp_path / "camera.pgm"
    save_image(load_sample("camera_64"), path)
    return path


@pytest.fixture
def small_images(tmp_path, rng):
    paths = []
    for i in range(5):
        p = tmp_path / f"img{i}.pgm"
        save_image(GrayImage.from_array(smooth_image(rng, 16)), p)
        paths.append(p)
    return paths


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_erase_writes_both_files(camera, tmp_path):
    assert main(["erase", "--dc-only", str(camera)]) == 0
    damaged = tmp_path / "camera_m1.pgm"
    side = tmp_path / "camera.coeffs"
    assert damaged.exists() and side.exists()
    orig = load_image(camera)
    assert not np.array_equal(load_image(damaged).pixels, orig.pixels)
    # the sidecar keeps exactly the known coefficients
    grid, mask, depth = read_sidecar(side)
    full = forward_dct(orig, make_layout(orig))
    keep = ~mask.as_array()
    assert np.array_equal(grid.coeffs[..., keep], full.coeffs[..., keep])


def test_erase_top_u_all_rejected(camera, capsys):
    assert main(["erase", "--top", "64", str(camera)]) == InvalidCount.exit_code
    assert "error:" in capsys.readouterr().err


def test_erase_custom_mask_and_paths(camera, tmp_path):
    out = tmp_path / "sub"
    assert main(["erase", "--mask", "0:1,1:0", "--fill", "zero", "--out-dir", str(out), str(camera)]) == 0
    assert (out / "camera_m2.pgm").exists() and (out / "camera.coeffs").exists()


def test_recover_beats_midpoint(camera, tmp_path):
    main(["erase", "--dc-only", str(camera)])
    out = tmp_path / "rec.pgm"
    report = tmp_path / "rec.json"
    code = main(["recover", str(tmp_path / "camera.coeffs"), "-o", str(out),
                 "--report", str(report), "--original", str(camera)])
    assert code == 0
    info = json.loads(report.read_text())
    for key in ("objective", "shift_applied", "wall_time", "solver", "peak_rss_mb"):
        assert key in info
    assert info["psnr"] >= info["midpoint_psnr"]
    assert info["shift_psnr"] > info["midpoint_psnr"] + 10
    assert psnr(load_image(camera), load_image(out)) == pytest.approx(info["psnr"])


def test_recover_text_report(camera, tmp_path):
    main(["erase", "--top", "2", str(camera)])
    out = tmp_path / "rec.pgm"
    assert main(["recover", str(tmp_path / "camera.coeffs"), "-o", str(out)]) == 0
    lines = (tmp_path / "rec.report.txt").read_text().splitlines()
    assert "mask: 0:0,0:1" in lines
    assert any(l.startswith("solver.iterations: ") for l in lines)


def test_recover_deterministic(camera, tmp_path):
    main(["erase", "--top", "2", str(camera)])
    side = str(tmp_path / "camera.coeffs")
    main(["recover", side, "-o", str(tmp_path / "a.pgm")])
    main(["recover", side, "-o", str(tmp_path / "b.pgm")])
    assert (tmp_path / "a.pgm").read_bytes() == (tmp_path / "b.pgm").read_bytes()


def test_recover_corrupt_sidecar(tmp_path):
    bad = tmp_path / "bad.coeffs"
    bad.write_bytes(b"DCTX" + b"\0" * 40)
    assert main(["recover", str(bad), "-o", str(tmp_path / "x.pgm")]) == CorruptFile.exit_code


def test_recover_missing_sidecar(tmp_path):
    assert main(["recover", str(tmp_path / "none.coeffs"), "-o", str(tmp_path / "x.pgm")]) == IoFailure.exit_code


def test_baseline(camera, tmp_path):
    main(["erase", "--dc-only", str(camera)])
    out = tmp_path / "scan.pgm"
    assert main(["baseline", str(tmp_path / "camera.coeffs"), "-o", str(out)]) == 0
    assert load_image(out).pixels.shape == (64, 64)


def test_baseline_rejects_ac_masks(camera, tmp_path):
    main(["erase", "--top", "3", str(camera)])
    code = main(["baseline", str(tmp_path / "camera.coeffs"), "-o", str(tmp_path / "s.pgm")])
    assert code == NotDcOnlyMask.exit_code


def test_compare_self_and_deltas(camera, tmp_path):
    table = tmp_path / "cmp.csv"
    assert main(["compare", str(camera), str(camera), str(camera), "-o", str(table)]) == 0
    rows = read_csv(table)
    assert [r["candidate"] for r in rows] == ["camera", "camera'", "delta:camera-camera'"]
    assert float(rows[0]["psnr"]) == math.inf and float(rows[0]["ssim"]) == 1.0
    assert float(rows[2]["psnr"]) == 0.0 and float(rows[2]["ssim"]) == 0.0


def test_compare_sign_convention(camera, tmp_path):
    orig = load_image(camera)
    noisy = GrayImage.from_array(np.clip(orig.pixels.astype(int) + 6, 0, 255))
    rows = compare_table(orig, {"good": orig, "bad": noisy})
    delta = rows[-1]
    assert delta["psnr"] > 0 and delta["mae"] > 0 and delta["ssim"] >= 0


def test_compare_mismatch(camera, tmp_path):
    other = tmp_path / "small.pgm"
    save_image(GrayImage.from_array(np.zeros((16, 16), int)), other)
    assert main(["compare", str(camera), str(other)]) == DimensionMismatch.exit_code


def test_crop(tmp_path):
    src = tmp_path / "odd.pgm"
    save_image(GrayImage.from_array(np.full((21, 30), 9)), src)
    out = tmp_path / "even.pgm"
    assert main(["crop", str(src), "-o", str(out)]) == 0
    assert load_image(out).pixels.shape == (16, 24)


def test_sweep_table(small_images, tmp_path):
    out = tmp_path / "sweep"
    code = main(["sweep", *map(str, small_images), "--u-min", "1", "--u-max", "3",
                 "--workers", "1", "--out-dir", str(out)])
    assert code == 0
    rows = read_csv(out / "sweep.csv")
    assert [int(r["u"]) for r in rows] == [1, 2, 3]
    assert all(int(r["images"]) == 5 and int(r["failures"]) == 0 for r in rows)
    assert {"mean_psnr", "mean_ssim", "mean_wall_time"} <= set(rows[0])


def test_sweep_counts_failures(small_images, tmp_path, caplog):
    broken = small_images[2]
    broken.write_bytes(b"not an image")
    rows, results = run_sweep(small_images, [1])
    assert rows[0].images == 4 and rows[0].failures == 1
    assert results[(str(broken), 1)] is None
    assert "failed" in caplog.text


def test_sweep_parallel_matches_serial(small_images):
    serial, _ = run_sweep(small_images[:2], [1, 2], workers=1)
    parallel, _ = run_sweep(small_images[:2], [1, 2], workers=2)
    for a, b in zip(serial, parallel):
        assert a.mean_psnr == b.mean_psnr and a.mean_ssim == b.mean_ssim


def test_sweep_empty(tmp_path):
    with pytest.raises(EmptyInput):
        run_sweep([], [1])
    assert main(["sweep", "--out-dir", str(tmp_path)]) == EmptyInput.exit_code


def test_sweep_bad_range(small_images):
    with pytest.raises(InvalidCount):
        run_sweep(small_images, [0, 1])


class TestRunConfig:
    def test_round_trip(self):
        cfg = RunConfig(block_size=4, mask="top:3", tolerance=1e-8, images=["a.pgm"], workers=2)
        assert RunConfig.from_json(cfg.to_json()) == cfg

    def test_unknown_key(self):
        with pytest.raises(ValueError):
            RunConfig.from_json('{"colour": 1}')

    def test_flags_win(self, camera, tmp_path):
        conf = tmp_path / "run.json"
        conf.write_text(RunConfig(mask="top:3", out_dir=str(tmp_path / "fromconf")).to_json())
        assert main(["erase", "--config", str(conf), "--dc-only", str(camera)]) == 0
        # mask from the flag, output directory from the file
        _, mask, _ = read_sidecar(tmp_path / "fromconf" / "camera.coeffs")
        assert mask.is_dc_only

    def test_bad_config_file(self, camera, tmp_path):
        conf = tmp_path / "run.json"
        conf.write_text('{"nope": 3}')
        assert main(["erase", "--config", str(conf), str(camera)]) == 2


def test_module_entry_point(camera, tmp_path):
    proc = subprocess.run([sys.executable, "-m", "dctrecover", "crop", str(camera), "-o", str(tmp_path / "c.pgm")],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "64x64" in proc.stdout
