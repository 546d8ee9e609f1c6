"""Acceptance gate: the binding behavioral contract of the package.

Each test pins one externally meaningful guarantee — reduction of the
adaptive method to uniform seeding, connectivity of every supervoxel,
the seed schedule identities, metric correctness against brute force,
the headline benchmark trend, determinism of the sweep outputs, and
global optimality of the scalar clustering — at stated tolerances and
runtime budgets.
"""

import itertools
import os
import time
from dataclasses import replace

import numpy as np
import pytest

from ssvox.cli import main
from ssvox.metrics import (
    boundary_recall,
    explained_variation,
    undersegmentation_error,
)
from ssvox.partition import kmeans_1d, seed_schedule, within_cluster_ss
from ssvox.report import default_grid, matched_pairs, run_sweep
from ssvox.rgbd import UNLABELED
from ssvox.saliency import SaliencyParams, compute_saliency
from ssvox.segmentation import (
    VccsParams,
    feature_distance,
    segment_vccs,
    ssv_segment,
)

from test_metrics import ev_oracle, rec_oracle, ue_oracle

# the bundled scenes are 128x96; two octaves are the largest pyramid whose
# surround kernels fit that image
SUITE_SALIENCY = SaliencyParams(num_octaves=2)

DEFAULT_PARAMS = VccsParams()  # voxel 0.02, weights 0.7/0.15/0.15, m=100


# --- 1. the adaptive method with one cluster IS uniform seeding ---------


def test_single_cluster_adaptive_reduces_to_uniform(suite_scenes):
    start = time.monotonic()
    for stem, cloud, _, _ in suite_scenes[:10]:
        uniform = segment_vccs(cloud, DEFAULT_PARAMS)
        saliency = compute_saliency(cloud, SUITE_SALIENCY)
        adaptive = ssv_segment(cloud, saliency, 1, 0.1, 0.1, DEFAULT_PARAMS)
        # identical labels everywhere: zero mismatched pixel pairs
        assert np.array_equal(uniform.point_labels, adaptive.point_labels), stem
        assert uniform.projected == adaptive.projected, stem
        assert uniform.num_supervoxels == adaptive.num_supervoxels, stem
    assert time.monotonic() - start < 30.0


# --- 2. every supervoxel is a single 26-connected component -------------

_OFFSETS = [
    (dx, dy, dz)
    for dx in (-1, 0, 1)
    for dy in (-1, 0, 1)
    for dz in (-1, 0, 1)
    if (dx, dy, dz) != (0, 0, 0)
]


def flood_fill_holds(grid, labels):
    """Pure-python flood fill over the integer cell keys."""
    keys = [tuple(key) for key in grid.keys.tolist()]
    row_of = {key: row for row, key in enumerate(keys)}
    for label in np.unique(labels):
        members = np.flatnonzero(labels == label)
        member_set = set(members.tolist())
        seen = {int(members[0])}
        stack = [int(members[0])]
        while stack:
            row = stack.pop()
            kx, ky, kz = keys[row]
            for dx, dy, dz in _OFFSETS:
                other = row_of.get((kx + dx, ky + dy, kz + dz))
                if other is not None and other in member_set and other not in seen:
                    seen.add(other)
                    stack.append(other)
        if len(seen) != len(member_set):
            return False
    return True


def test_every_supervoxel_is_connected_across_the_grid(suite_scenes):
    checked = 0
    for stem, cloud, _, _ in suite_scenes:
        saliency = compute_saliency(cloud, SUITE_SALIENCY)
        for entry in default_grid():
            if entry.method == "vccs":
                seg = segment_vccs(
                    cloud,
                    replace(DEFAULT_PARAMS, seed_resolution=entry.seed_resolution),
                )
            else:
                seg = ssv_segment(
                    cloud,
                    saliency,
                    entry.num_clusters,
                    entry.min_resolution,
                    entry.max_resolution,
                    DEFAULT_PARAMS,
                )
            for grid, labels in seg.parts:
                assert flood_fill_holds(grid, labels), (stem, entry.config_id)
                checked += np.unique(labels).size
    assert checked > 0


# --- 3. seed schedule endpoint and ratio identities ----------------------


def test_seed_schedule_identities():
    entries = [entry for entry in default_grid() if entry.method == "ssv"]
    assert entries  # the stock grid carries the adaptive configurations
    for entry in entries:
        schedule = seed_schedule(
            entry.num_clusters, entry.min_resolution, entry.max_resolution
        )
        assert schedule.size == entry.num_clusters
        assert abs(schedule[0] - entry.max_resolution) <= 1e-12 * entry.max_resolution
        assert abs(schedule[-1] - entry.min_resolution) <= 1e-12 * entry.min_resolution
        ratios = schedule[:-1] / schedule[1:]
        assert np.all(np.abs(ratios - ratios[0]) <= 1e-12 * ratios[0])


# --- 4. metrics agree with brute force on small label maps --------------


def all_maps(shape, labels):
    return [
        np.array(combo, dtype=np.int64).reshape(shape)
        for combo in itertools.product(labels, repeat=shape[0] * shape[1])
    ]


def check_triple(seg, gt, image):
    assert boundary_recall(seg, gt) == rec_oracle(seg, gt)
    if (gt != UNLABELED).any():
        assert (
            abs(undersegmentation_error(seg, gt) - ue_oracle(seg, gt)) <= 1e-12
        )
    assert abs(explained_variation(seg, image) - ev_oracle(seg, image)) <= 1e-12


def test_metrics_agree_with_brute_force():
    start = time.monotonic()
    rng = np.random.default_rng(5150)

    # exhaustive: every map pair on every shape with at most four pixels
    for shape in [(1, 1), (1, 2), (2, 1), (1, 3), (3, 1), (2, 2), (1, 4), (4, 1)]:
        image = rng.uniform(0.0, 255.0, size=shape)
        segs = all_maps(shape, (0, 1, 2))
        gts = all_maps(shape, (UNLABELED, 0, 1, 2))
        for seg in segs:
            assert abs(explained_variation(seg, image) - ev_oracle(seg, image)) <= 1e-12
        for gt in gts:
            gt_labeled = (gt != UNLABELED).any()
            for seg in segs:
                assert boundary_recall(seg, gt) == rec_oracle(seg, gt)
                if gt_labeled:
                    assert (
                        abs(undersegmentation_error(seg, gt) - ue_oracle(seg, gt))
                        <= 1e-12
                    )

    # dense seeded sampling up to the full 4x4 size
    for shape in [(2, 3), (3, 3), (3, 4), (4, 4)]:
        for _ in range(800):
            gt = rng.integers(UNLABELED, 3, size=shape)
            seg = rng.integers(0, 3, size=shape)
            image = rng.uniform(0.0, 255.0, size=shape)
            check_triple(seg, gt, image)

    assert time.monotonic() - start < 60.0


# --- 5. metric boundary cases --------------------------------------------


def test_metric_boundary_cases(suite_scenes):
    _, _, gt, rgb = suite_scenes[0]
    assert boundary_recall(gt, gt) == 1.0
    assert undersegmentation_error(gt, gt) == 0.0
    mixed = np.array([[0, 0, 1, 1], [0, UNLABELED, 1, 2], [3, 3, 3, 2]])
    assert boundary_recall(mixed, mixed) == 1.0
    assert undersegmentation_error(mixed, mixed) == 0.0

    height, width = rgb.shape[:2]
    per_pixel = np.arange(height * width).reshape(height, width)
    assert abs(explained_variation(per_pixel, rgb) - 1.0) <= 1e-9
    single = np.zeros((height, width), dtype=np.int64)
    assert abs(explained_variation(single, rgb) - 0.0) <= 1e-9


# --- 6. adaptive seeding wins at matched supervoxel counts ---------------


@pytest.fixture(scope="module")
def trend_sweep(suite_dir):
    start = time.monotonic()
    result = run_sweep(
        suite_dir,
        default_grid(),
        params=VccsParams(seed_resolution=0.3),
        saliency_params=SUITE_SALIENCY,
        workers=1,
    )
    return result, time.monotonic() - start


def test_adaptive_seeding_beats_uniform_at_matched_counts(trend_sweep):
    result, elapsed = trend_sweep
    assert elapsed < 600.0
    pairs = matched_pairs(result, tolerance=0.1)
    assert len(pairs) >= 1
    for i, j in pairs:
        uniform, adaptive = result.reports[i].mean, result.reports[j].mean
        pair_ids = (result.entries[i].config_id, result.entries[j].config_id)
        assert adaptive["rec"] >= uniform["rec"], pair_ids
        assert adaptive["ue"] <= uniform["ue"] + 0.01, pair_ids


# --- 7. expansion distance worked example --------------------------------


def test_distance_formula_worked_example():
    base = np.zeros(39)
    base[0:3] = (0.4, 0.2, 1.1)
    base[3:6] = (52.0, 8.0, -3.0)
    base[6] = 1.0
    other = base.copy()
    other[2] += 0.1  # spatial offset 0.1 m
    other[3] += 10.0  # color offset 10 Lab units
    other[6] = 0.8  # histogram intersection 0.8 -> distance 0.2
    other[8] = 0.2
    got = feature_distance(base, other, DEFAULT_PARAMS)
    assert abs(got - 0.25100) <= 1e-5


# --- 8. saliency: no response to constants, no center bias ---------------


def test_saliency_constant_image_is_all_zero():
    flat = np.full((64, 64, 3), 77, dtype=np.uint8)
    saliency = compute_saliency(flat, SaliencyParams(num_octaves=1))
    assert saliency.shape == (64, 64)
    assert np.all(saliency == 0.0)


def test_saliency_peak_follows_the_blob():
    params = SaliencyParams(num_octaves=1)
    radius = 5
    margin = 16
    hits = 0
    total = 0
    yy, xx = np.mgrid[0:64, 0:64]
    for cy in range(margin, 64 - margin, 3):
        for cx in range(margin, 64 - margin, 3):
            image = np.full((64, 64, 3), 25, dtype=np.uint8)
            disk = (yy - cy) ** 2 + (xx - cx) ** 2 <= radius**2
            image[disk] = 230
            saliency = compute_saliency(image, params)
            peak = np.unravel_index(np.argmax(saliency), saliency.shape)
            hits += bool((peak[0] - cy) ** 2 + (peak[1] - cx) ** 2 <= radius**2)
            total += 1
    assert total >= 100
    assert hits / total >= 0.95


# --- 9. sweep outputs are byte reproducible ------------------------------


@pytest.fixture(scope="module")
def cli_scene_dir(tmp_path_factory):
    directory = tmp_path_factory.mktemp("accept_scenes")
    assert main(["synth", "--out-dir", str(directory), "--num-scenes", "4"]) == 0
    return directory


def test_sweep_outputs_are_byte_reproducible(cli_scene_dir, tmp_path, capsys):
    outs = []
    for name in ("first", "second"):
        out_dir = tmp_path / name
        code = main(
            [
                "sweep",
                "--dataset",
                str(cli_scene_dir),
                "--out-dir",
                str(out_dir),
                "--vccs-rseeds",
                "0.15,0.2",
                "--ssv-rmins",
                "0.1",
                "--k",
                "3",
                "--rng-seed",
                "0",
            ]
        )
        assert code == 0
        outs.append(out_dir)
    capsys.readouterr()
    for name in ("sweep.csv", "pairs.csv", "vccs_curve.dat", "ssv_curve.dat"):
        with open(outs[0] / name, "rb") as fa, open(outs[1] / name, "rb") as fb:
            assert fa.read() == fb.read(), name
        assert os.path.getsize(outs[0] / name) > 0


# --- 10. scalar clustering reaches the global optimum --------------------


def exhaustive_threshold_optimum(values, k):
    """Minimal within-cluster sum of squares over every contiguous split."""
    n = values.size
    k_eff = min(k, np.unique(values).size)
    best = np.inf
    for cuts in itertools.combinations(range(1, n), k_eff - 1):
        bounds = (0, *cuts, n)
        total = 0.0
        for a, b in zip(bounds[:-1], bounds[1:]):
            members = values[a:b]
            total += float(np.sum((members - members.mean()) ** 2))
        best = min(best, total)
    return best


def test_scalar_clustering_reaches_global_optimum():
    rng = np.random.default_rng(1234)
    for case in range(100):
        n = int(rng.integers(1, 13))
        k = int(rng.integers(1, 4))
        values = np.sort(rng.uniform(0.0, 1.0, size=n))
        assignment, _ = kmeans_1d(values, k)
        got = within_cluster_ss(values, assignment)
        best = exhaustive_threshold_optimum(values, k)
        assert got == best, (case, n, k)
