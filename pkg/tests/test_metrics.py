import math
import shutil

import numpy as np
import pandas as pd
import pytest

from spadsim.errors import InputError
from spadsim.io.io import write_png
from spadsim.metrics import (
    compare_reports,
    evaluate_dirs,
    gaussian_window,
    psnr,
    ssim,
)


def naive_psnr(ref, test):
    total = 0.0
    for value_ref, value_test in zip(ref.ravel(), test.ravel(), strict=True):
        total += (float(value_ref) - float(value_test)) ** 2
    return 10 * math.log10(255.0**2 / (total / ref.size))


def naive_ssim(ref, test):
    window = gaussian_window(11, 1.5)
    c1, c2 = (0.01 * 255) ** 2, (0.03 * 255) ** 2
    height, width, channels = ref.shape
    scores = []
    for c in range(channels):
        x = ref[:, :, c].astype(float)
        y = test[:, :, c].astype(float)
        for i in range(height - 10):
            for j in range(width - 10):
                px, py = x[i : i + 11, j : j + 11], y[i : i + 11, j : j + 11]
                mx, my = (window * px).sum(), (window * py).sum()
                vx = (window * (px - mx) ** 2).sum()
                vy = (window * (py - my) ** 2).sum()
                cov = (window * (px - mx) * (py - my)).sum()
                scores.append(
                    (2 * mx * my + c1)
                    * (2 * cov + c2)
                    / ((mx**2 + my**2 + c1) * (vx + vy + c2))
                )
    return float(np.mean(scores))


@pytest.fixture()
def noisy_pair(random_image):
    noise = np.random.RandomState(7).randint(-40, 41, random_image.shape)
    test = np.clip(random_image.astype(int) + noise, 0, 255).astype(np.uint8)
    return random_image, test


def test_psnr_matches_reference_loop(noisy_pair):
    ref, test = noisy_pair
    assert psnr(ref, test) == pytest.approx(naive_psnr(ref, test), abs=1e-9)


def test_ssim_matches_reference_loop(noisy_pair):
    ref, test = noisy_pair
    assert ssim(ref, test) == pytest.approx(naive_ssim(ref, test), abs=1e-9)


@pytest.mark.parametrize("index", range(20))
def test_metrics_match_reference_loops_on_random_images(index):
    rng = np.random.RandomState(100 + index)
    ref = rng.randint(0, 256, (32, 32, 3)).astype(np.uint8)
    test = rng.randint(0, 256, (32, 32, 3)).astype(np.uint8)
    assert psnr(ref, test) == pytest.approx(naive_psnr(ref, test), abs=1e-9)
    assert ssim(ref, test) == pytest.approx(naive_ssim(ref, test), abs=1e-9)


def test_identical_images(random_image):
    assert psnr(random_image, random_image) == math.inf
    assert ssim(random_image, random_image) == pytest.approx(1.0, abs=1e-12)


def test_psnr_known_values():
    black = np.zeros((8, 8, 3), dtype=np.uint8)
    white = np.full((8, 8, 3), 255, dtype=np.uint8)
    assert psnr(black, white) == pytest.approx(0.0, abs=1e-12)
    assert psnr(black, black + 1) == pytest.approx(48.1308, abs=1e-4)


def test_negative_image_scores_low(random_image):
    assert ssim(random_image, 255 - random_image) < 0.2


def test_metrics_are_symmetric(noisy_pair):
    ref, test = noisy_pair
    assert psnr(ref, test) == psnr(test, ref)
    assert ssim(ref, test) == pytest.approx(ssim(test, ref), abs=1e-12)


def test_ssim_minimum_size():
    small = np.zeros((10, 16, 3), dtype=np.uint8)
    with pytest.raises(InputError):
        ssim(small, small)
    square = np.random.RandomState(3).randint(0, 256, (16, 16, 3)).astype(np.uint8)
    assert -1.0 <= ssim(square, 255 - square) <= 1.0


def test_dimension_mismatch_raises():
    with pytest.raises(InputError):
        psnr(np.zeros((16, 16, 3)), np.zeros((16, 17, 3)))
    with pytest.raises(InputError):
        ssim(np.zeros((16, 16, 3)), np.zeros((17, 16, 3)))


def test_gaussian_window_is_normalized():
    window = gaussian_window()
    assert window.shape == (11, 11)
    assert window.sum() == pytest.approx(1.0, abs=1e-12)
    assert window[5, 5] == window.max()


@pytest.fixture()
def image_dir(tmp_path):
    rng = np.random.RandomState(0)
    directory = tmp_path / "ref"
    for index in range(10):
        write_png(
            directory / f"img{index:02d}.png",
            rng.randint(0, 256, (16, 16, 3)).astype(np.uint8),
        )
    return directory


def test_evaluate_self_copy(image_dir, tmp_path):
    shutil.copytree(image_dir, tmp_path / "test")
    report = evaluate_dirs(image_dir, tmp_path / "test", jobs=2)
    assert report.n_pairs == 10
    assert report.infinite_psnr == 10
    assert np.all(np.isposinf(report.rows["psnr_db"]))
    np.testing.assert_allclose(report.rows["ssim"], 1.0, atol=1e-12)
    assert math.isnan(report.mean_psnr)
    assert report.rows["image_id"].tolist() == [f"img{i:02d}" for i in range(10)]
    assert report.summary()["mean_psnr_db"] is None
    assert report.summary()["mean_ssim"] == pytest.approx(1.0, abs=1e-12)


def test_corrupt_file_is_flagged(image_dir, tmp_path):
    shutil.copytree(image_dir, tmp_path / "test")
    (tmp_path / "test" / "img04.png").write_bytes(b"truncated")
    report = evaluate_dirs(image_dir, tmp_path / "test")
    assert report.n_pairs == 10
    assert report.flagged == ["img04"]
    assert math.isnan(report.rows.loc[4, "psnr_db"])
    assert "img04: could not be evaluated" in str(report)


def test_unmatched_files_are_listed(image_dir, tmp_path):
    shutil.copytree(image_dir, tmp_path / "test")
    (tmp_path / "test" / "img09.png").unlink()
    shutil.copy(image_dir / "img00.png", tmp_path / "test" / "extra.png")
    report = evaluate_dirs(image_dir, tmp_path / "test")
    assert report.n_pairs == 9
    assert report.unmatched == ["extra.png", "img09.png"]


def test_disjoint_directories_raise(image_dir, tmp_path):
    write_png(tmp_path / "other" / "zzz.png", np.zeros((16, 16, 3), dtype=np.uint8))
    with pytest.raises(InputError):
        evaluate_dirs(image_dir, tmp_path / "other")
    with pytest.raises(InputError):
        evaluate_dirs(image_dir, tmp_path / "missing")


def test_report_csv(image_dir, tmp_path):
    shutil.copytree(image_dir, tmp_path / "test")
    write_png(tmp_path / "test" / "img01.png", np.zeros((16, 16, 3), dtype=np.uint8))
    report = evaluate_dirs(image_dir, tmp_path / "test")
    path = report.to_csv(tmp_path / "metrics.csv")
    text = path.read_bytes().decode("utf-8")
    assert "\r" not in text
    lines = text.splitlines()
    assert lines[0] == "image_id,psnr_db,ssim,lpips"
    assert len(lines) == 11
    assert lines[1].startswith("img00,inf,")
    assert lines[1].endswith(",n/a")
    assert "inf" not in lines[2]
    assert math.isfinite(report.mean_psnr)


def test_merge_lpips(image_dir, tmp_path):
    shutil.copytree(image_dir, tmp_path / "test")
    report = evaluate_dirs(image_dir, tmp_path / "test")
    lpips = tmp_path / "lpips.csv"
    lpips.write_text("image_id,lpips\nimg00,0.10\nimg01,0.30\n")
    report.merge_lpips(lpips)
    assert report.rows.loc[0, "lpips"] == pytest.approx(0.10)
    assert math.isnan(report.rows.loc[2, "lpips"])
    assert report.mean_lpips == pytest.approx(0.20)

    bad = tmp_path / "bad.csv"
    bad.write_text("name,score\nimg00,0.1\n")
    with pytest.raises(InputError):
        report.merge_lpips(bad)


@pytest.mark.parametrize(
    "text",
    [
        "image_id,lpips\nimg00,0.1\nimg00,0.2\n",
        "image_id,lpips\nimg00,low\n",
        "",
    ],
)
def test_merge_lpips_rejects_bad_files(image_dir, tmp_path, text):
    shutil.copytree(image_dir, tmp_path / "test")
    report = evaluate_dirs(image_dir, tmp_path / "test")
    path = tmp_path / "lpips.csv"
    path.write_text(text)
    with pytest.raises(InputError):
        report.merge_lpips(path)


def test_repeated_stems_are_listed(image_dir, tmp_path):
    shutil.copytree(image_dir, tmp_path / "test")
    write_png(tmp_path / "test" / "img05.jpg", np.zeros((16, 16, 3), dtype=np.uint8))
    report = evaluate_dirs(image_dir, tmp_path / "test")
    assert report.n_pairs == 10
    assert report.unmatched == ["img05.png"]
    assert math.isfinite(report.rows.loc[5, "psnr_db"])


def test_summary_and_comparison(image_dir, tmp_path):
    shutil.copytree(image_dir, tmp_path / "test")
    write_png(tmp_path / "test" / "img03.png", np.zeros((16, 16, 3), dtype=np.uint8))
    report = evaluate_dirs(image_dir, tmp_path / "test")
    summary = report.summary()
    assert summary["pairs"] == 10
    assert summary["infinite_psnr"] == 9
    assert summary["ssim"]["window"] == 11
    table = compare_reports({"noisy": report, "clean": report})
    assert isinstance(table, pd.DataFrame)
    assert table.index.tolist() == ["noisy", "clean"]
    assert table.loc["noisy", "psnr_db"] == pytest.approx(report.mean_psnr)
    assert table.loc["clean", "pairs"] == 10
