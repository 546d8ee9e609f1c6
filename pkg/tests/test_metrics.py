"""Metric implementations are checked against slow loop-based reference
code and hand-worked values, plus the refinement laws: splitting a
superpixel can never worsen leakage or explained variance."""

import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssvox.metrics import (
    EvalReport,
    boundary_recall,
    boundary_window_radius,
    evaluate_run,
    explained_variation,
    intensity_image,
    undersegmentation_error,
)
from ssvox.rgbd import UNLABELED, LabelMap2D


def boundary_oracle(labels):
    height, width = labels.shape
    out = np.zeros((height, width), dtype=bool)
    for i in range(height):
        for j in range(width):
            if labels[i, j] == UNLABELED:
                continue
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                ni, nj = i + di, j + dj
                if (
                    0 <= ni < height
                    and 0 <= nj < width
                    and labels[ni, nj] != UNLABELED
                    and labels[ni, nj] != labels[i, j]
                ):
                    out[i, j] = True
    return out


def rec_oracle(seg, gt):
    gt_boundary = boundary_oracle(gt)
    if not gt_boundary.any():
        return 1.0
    seg_boundary = boundary_oracle(seg)
    height, width = gt.shape
    r = boundary_window_radius(height, width)
    hits = 0
    for i, j in zip(*np.nonzero(gt_boundary)):
        window = seg_boundary[
            max(0, i - r) : i + r + 1, max(0, j - r) : j + r + 1
        ]
        hits += bool(window.any())
    return hits / int(gt_boundary.sum())


def ue_oracle(seg, gt):
    mask = (gt != UNLABELED) & (seg != UNLABELED)
    ratios = []
    for g in np.unique(gt[mask]):
        segment = mask & (gt == g)
        covering = 0
        for s in np.unique(seg[segment]):
            covering += int((mask & (seg == s)).sum())
        ratios.append((covering - segment.sum()) / segment.sum())
    return float(np.mean(ratios))


def ev_oracle(seg, image):
    intensity = intensity_image(image)
    mean = intensity.mean()
    denom = ((intensity - mean) ** 2).sum()
    if denom == 0.0:
        return 1.0
    numer = 0.0
    for s in np.unique(seg):
        members = intensity[seg == s]
        numer += members.size * (members.mean() - mean) ** 2
    return float(numer / denom)


def run_strip(run_lengths):
    """1-row label map with one label per run."""
    return np.repeat(np.arange(len(run_lengths)), run_lengths)[None, :]


def test_window_radius_worked_values():
    assert boundary_window_radius(480, 640) == 2  # diagonal 800
    assert boundary_window_radius(96, 128) == 1  # small diagonals floor to 0
    assert boundary_window_radius(1000, 1000) == 4
    assert boundary_window_radius(1, 30) == 1


def test_recall_worked_values():
    # five true edges; matching four exactly and missing the fifth by far
    gt = run_strip([3, 4, 4, 4, 4, 11])
    far = run_strip([3, 4, 4, 4, 10, 5])
    near = run_strip([3, 4, 4, 4, 6, 9])
    assert boundary_recall(gt, gt) == 1.0
    assert boundary_recall(far, gt) == 0.8
    # an edge offset by two pixels still catches one of the two gt pixels
    assert boundary_recall(near, gt) == 0.9
    assert boundary_recall(np.zeros_like(gt), gt) == 0.0


def test_recall_without_true_boundary():
    gt = np.array([[0, UNLABELED], [0, UNLABELED]])
    seg = np.array([[1, 2], [3, 4]])
    assert boundary_recall(seg, gt) == 1.0


def test_ue_worked_value():
    gt = np.array([[0, 0], [1, 1]])
    seg = np.array([[0, 0], [0, 1]])
    assert undersegmentation_error(seg, gt) == 0.75
    assert undersegmentation_error(gt, gt) == 0.0


def test_ue_counts_only_jointly_labeled_pixels():
    gt = np.array([[0, 0, UNLABELED], [1, 1, UNLABELED]])
    seg = np.array([[0, 0, 0], [1, 1, 0]])
    # superpixel 0 leaks only into unlabeled ground truth, which is ignored
    assert undersegmentation_error(seg, gt) == 0.0


def test_ue_error_conditions():
    gt = np.full((2, 2), UNLABELED)
    with pytest.raises(ValueError, match="no labeled"):
        undersegmentation_error(np.zeros((2, 2), dtype=int), gt)
    gt = np.array([[0, 0], [1, 1]])
    with pytest.raises(ValueError, match="both"):
        undersegmentation_error(np.full((2, 2), UNLABELED), gt)
    with pytest.raises(ValueError, match="shape"):
        undersegmentation_error(np.zeros((3, 2), dtype=int), gt)
    with pytest.raises(ValueError, match="shape"):
        boundary_recall(np.zeros((3, 2), dtype=int), gt)
    with pytest.raises(ValueError, match="shape"):
        explained_variation(np.zeros((3, 2), dtype=int), np.zeros((2, 2)))


def test_ev_worked_values():
    image = np.array([[0.0], [2.0]])
    assert explained_variation(np.array([[0], [0]]), image) == 0.0
    assert explained_variation(np.array([[0], [1]]), image) == 1.0
    # channel-mean intensity: different colors, same mean -> constant
    rgb = np.array([[[30, 20, 10], [10, 20, 30]]], dtype=np.uint8)
    assert explained_variation(np.array([[0, 1]]), rgb) == 1.0


def test_ev_per_pixel_and_single_label(suite_scenes):
    _, _, _, rgb = suite_scenes[0]
    height, width = rgb.shape[:2]
    per_pixel = np.arange(height * width).reshape(height, width)
    assert abs(explained_variation(per_pixel, rgb) - 1.0) <= 1e-9
    assert abs(explained_variation(np.zeros((height, width), int), rgb)) <= 1e-9


def random_pair(rng, shape):
    gt = rng.integers(0, 3, size=shape)
    seg = rng.integers(0, 4, size=shape)
    gt[rng.uniform(size=shape) < 0.15] = UNLABELED
    seg[rng.uniform(size=shape) < 0.1] = UNLABELED
    gt[0, 0] = 0
    seg[0, 0] = 0  # keep the joint mask nonempty
    return seg, gt


def test_metrics_match_oracles_on_random_maps():
    rng = np.random.default_rng(91)
    for shape in [(1, 8), (4, 4), (5, 7), (6, 3)]:
        for _ in range(30):
            seg, gt = random_pair(rng, shape)
            image = rng.integers(0, 256, size=shape + (3,)).astype(np.uint8)
            assert boundary_recall(seg, gt) == rec_oracle(seg, gt)
            assert abs(
                undersegmentation_error(seg, gt) - ue_oracle(seg, gt)
            ) <= 1e-12
            assert abs(
                explained_variation(seg, image) - ev_oracle(seg, image)
            ) <= 1e-12


def test_metric_ranges():
    rng = np.random.default_rng(92)
    for _ in range(50):
        seg, gt = random_pair(rng, (5, 6))
        image = rng.integers(0, 256, size=(5, 6, 3)).astype(np.uint8)
        assert 0.0 <= boundary_recall(seg, gt) <= 1.0
        assert undersegmentation_error(seg, gt) >= 0.0
        assert 0.0 <= explained_variation(seg, image) <= 1.0 + 1e-12


def test_label_values_are_irrelevant():
    rng = np.random.default_rng(93)
    seg, gt = random_pair(rng, (6, 7))
    image = rng.integers(0, 256, size=(6, 7, 3)).astype(np.uint8)
    renamed = np.select(
        [seg == 0, seg == 1, seg == 2, seg == 3], [17, 999, 5, 40], seg
    )
    assert boundary_recall(renamed, gt) == boundary_recall(seg, gt)
    assert undersegmentation_error(renamed, gt) == undersegmentation_error(seg, gt)
    assert explained_variation(renamed, image) == explained_variation(seg, image)


def test_label_map_wrapper_accepted():
    gt = np.array([[0, 0], [1, 1]])
    seg = np.array([[0, 0], [0, 1]])
    wrapped = undersegmentation_error(LabelMap2D(seg), LabelMap2D(gt))
    assert wrapped == undersegmentation_error(seg, gt)


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 10_000))
def test_refining_a_segmentation_never_hurts(seed):
    rng = np.random.default_rng(seed)
    gt = rng.integers(0, 3, size=(6, 8))
    coarse = rng.integers(0, 3, size=(6, 8))
    fine = coarse * 2 + rng.integers(0, 2, size=(6, 8))
    image = rng.integers(0, 256, size=(6, 8, 3)).astype(np.uint8)
    assert undersegmentation_error(fine, gt) <= (
        undersegmentation_error(coarse, gt) + 1e-9
    )
    assert explained_variation(fine, image) >= (
        explained_variation(coarse, image) - 1e-9
    )
    assert boundary_recall(fine, gt) >= boundary_recall(coarse, gt)


def make_strip_report():
    gt = run_strip([3, 4, 4, 4, 4, 11])
    segs = [run_strip([3, 4, 4, 4, 10, 5]), run_strip([3, 4, 4, 4, 6, 9])]
    images = [
        np.linspace(0, 1, 30).reshape(1, 30),
        np.linspace(1, 0, 30).reshape(1, 30),
    ]
    return evaluate_run(segs, [gt, gt], images, image_ids=["a", "b"])


def test_confidence_interval_worked_value():
    report = make_strip_report()
    assert [row.rec for row in report.rows] == [0.8, 0.9]
    assert report.mean["rec"] == pytest.approx(0.85)
    # 1.96 * std([0.8, 0.9]) / sqrt(2)
    assert report.ci95["rec"] == pytest.approx(1.96 * 0.05 / np.sqrt(2))
    assert round(report.ci95["rec"], 4) == 0.0693


def test_evaluate_run_counts_and_validation():
    seg = np.array([[0, 2], [7, UNLABELED]])
    gt = np.array([[0, 0], [1, 1]])
    image = np.eye(2)
    report = evaluate_run([seg], [gt], [image])
    assert report.rows[0].num_superpixels == 3
    assert report.rows[0].image_id == "0"
    assert report.ci95["rec"] == 0.0  # single image: no spread
    with pytest.raises(ValueError, match="equal length"):
        evaluate_run([seg], [gt, gt], [image])
    with pytest.raises(ValueError, match="nothing"):
        evaluate_run([], [], [])


def test_report_csv_format(tmp_path):
    report = make_strip_report()
    path = tmp_path / "report.csv"
    report.write_csv(path)
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["image_id", "num_superpixels", "rec", "ue", "ev"]
    assert len(rows) == 1 + 2 + 2  # header, two images, mean, ci95
    assert rows[1][0] == "a"
    assert rows[1][2] == "0.8"
    assert rows[2][2] == "0.9"
    assert rows[3][0] == "mean"
    assert rows[3][2] == "0.85"
    assert rows[4][0] == "ci95"
    assert float(rows[4][2]) == pytest.approx(1.96 * 0.05 / np.sqrt(2), abs=1e-9)
    assert isinstance(report, EvalReport)
