"""Benchmark sweeps: run seeding configurations over a scene directory.

A sweep takes a grid of uniform-seeding and saliency-adaptive
configurations, scores every one on every scene, and writes a CSV with
per-scene and aggregate rows, gnuplot-ready curve data per method,
matplotlib renderings of the same curves, and the list of matched pairs
(configurations of both methods whose mean supervoxel counts agree within
a tolerance) used for head-to-head comparison. All delimited outputs are
byte-reproducible for a given configuration.
"""

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .metrics import evaluate_run
from .rgbd import load_label_map, load_rgbd, read_color_image
from .saliency import SaliencyParams, compute_saliency
from .segmentation import VccsParams, segment_vccs, ssv_segment
from .synth import scene_paths


@dataclass(frozen=True)
class SweepEntry:
    """One configuration of the sweep grid.

    method 'vccs' uses seed_resolution; method 'ssv' uses num_clusters and
    the min/max seed resolutions of the saliency schedule.
    """

    method: str
    seed_resolution: float = 0.0
    num_clusters: int = 0
    min_resolution: float = 0.0
    max_resolution: float = 0.0

    def __post_init__(self):
        if self.method == "vccs":
            if self.seed_resolution <= 0:
                raise ValueError("vccs entry needs a positive seed_resolution")
        elif self.method == "ssv":
            if self.num_clusters < 1:
                raise ValueError("ssv entry needs num_clusters >= 1")
            if not 0 < self.min_resolution <= self.max_resolution:
                raise ValueError(
                    "ssv entry needs 0 < min_resolution <= max_resolution"
                )
        else:
            raise ValueError(f"unknown sweep method {self.method!r}")

    @property
    def config_id(self):
        if self.method == "vccs":
            return f"vccs_rseed{self.seed_resolution:g}"
        return (
            f"ssv_k{self.num_clusters}_rmin{self.min_resolution:g}"
            f"_rmax{self.max_resolution:g}"
        )


@dataclass(frozen=True)
class SweepResult:
    """Evaluation reports per grid entry, in entry order."""

    entries: tuple
    scene_ids: tuple
    reports: tuple


def default_grid(
    vccs_seeds=(0.05, 0.10, 0.15, 0.20, 0.25),
    ssv_clusters=6,
    ssv_mins=(0.05, 0.10, 0.15, 0.20),
    ssv_max=0.3,
):
    """Grid covering both methods at comparable supervoxel counts."""
    entries = [SweepEntry("vccs", seed_resolution=float(r)) for r in vccs_seeds]
    entries += [
        SweepEntry(
            "ssv",
            num_clusters=int(ssv_clusters),
            min_resolution=float(r),
            max_resolution=float(ssv_max),
        )
        for r in ssv_mins
    ]
    return tuple(entries)


def discover_scenes(directory):
    """Sorted scene stems under directory; each stem must have all four files.

    A scene is the quadruple <stem>_color.ppm, _depth.pgm, _intrinsics.txt,
    _gt.pgm.
    """
    if not os.path.isdir(directory):
        raise ValueError(f"scene directory not found: {directory}")
    stems = sorted(
        name[: -len("_color.ppm")]
        for name in os.listdir(directory)
        if name.endswith("_color.ppm")
    )
    if not stems:
        raise ValueError(f"no scenes (*_color.ppm) found in {directory}")
    for stem in stems:
        for kind, path in scene_paths(directory, stem).items():
            if not os.path.isfile(path):
                raise ValueError(f"scene {stem} is missing its {kind} file: {path}")
    return stems


def _load_cloud(directory, stem):
    from .rgbd import CameraIntrinsics

    paths = scene_paths(directory, stem)
    intrinsics = CameraIntrinsics.load(paths["intrinsics"])
    return load_rgbd(paths["color"], paths["depth"], intrinsics)


def _scene_task(directory, stem, entries, params, saliency_params):
    """Segment one scene under every grid entry; returns projected maps."""
    cloud = _load_cloud(directory, stem)
    saliency = None
    if any(entry.method == "ssv" for entry in entries):
        saliency = compute_saliency(cloud, saliency_params)
    maps = []
    for entry in entries:
        if entry.method == "vccs":
            seg = segment_vccs(
                cloud, replace(params, seed_resolution=entry.seed_resolution)
            )
        else:
            seg = ssv_segment(
                cloud,
                saliency,
                entry.num_clusters,
                entry.min_resolution,
                entry.max_resolution,
                params,
            )
        maps.append(seg.projected.labels)
    return maps


def run_sweep(dataset_dir, entries, params=None, saliency_params=None, workers=1):
    """Score every grid entry on every scene in dataset_dir.

    params is the shared weighting configuration; its seed_resolution field
    is a placeholder that each entry overrides. Scenes are processed in
    sorted-stem order regardless of worker count, and any scene failure
    aborts the sweep naming the scene. Returns a SweepResult with one
    evaluation report per entry.
    """
    entries = tuple(entries)
    if not entries:
        raise ValueError("sweep grid is empty")
    if params is None:
        params = VccsParams(seed_resolution=0.3)
    if saliency_params is None:
        saliency_params = SaliencyParams()
    if workers < 1:
        raise ValueError("workers must be at least 1")

    stems = discover_scenes(dataset_dir)
    per_scene = []
    if workers == 1:
        for stem in stems:
            try:
                per_scene.append(
                    _scene_task(dataset_dir, stem, entries, params, saliency_params)
                )
            except Exception as exc:
                raise RuntimeError(f"scene {stem} failed: {exc}") from exc
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(
                    _scene_task, dataset_dir, stem, entries, params, saliency_params
                )
                for stem in stems
            ]
            for stem, future in zip(stems, futures):
                try:
                    per_scene.append(future.result())
                except Exception as exc:
                    raise RuntimeError(f"scene {stem} failed: {exc}") from exc

    gts, rgbs = [], []
    for stem in stems:
        paths = scene_paths(dataset_dir, stem)
        gts.append(load_label_map(paths["gt"]))
        rgbs.append(read_color_image(paths["color"]))

    reports = []
    for index in range(len(entries)):
        segs = [per_scene[s][index] for s in range(len(stems))]
        reports.append(evaluate_run(segs, gts, rgbs, image_ids=stems))
    return SweepResult(entries=entries, scene_ids=tuple(stems), reports=tuple(reports))


def matched_pairs(result, tolerance=0.1):
    """(vccs_index, ssv_index) pairs with mean counts within tolerance.

    Two configurations match when the larger mean supervoxel count exceeds
    the smaller by at most the tolerance fraction.
    """
    pairs = []
    for i, a in enumerate(result.entries):
        if a.method != "vccs":
            continue
        count_a = result.reports[i].mean["num_superpixels"]
        for j, b in enumerate(result.entries):
            if b.method != "ssv":
                continue
            count_b = result.reports[j].mean["num_superpixels"]
            low, high = sorted((count_a, count_b))
            if low > 0 and high / low <= 1.0 + tolerance:
                pairs.append((i, j))
    return tuple(pairs)


_CSV_HEADER = (
    "config_id",
    "method",
    "rseed",
    "k",
    "rmin",
    "rmax",
    "scene",
    "num_superpixels",
    "rec",
    "ue",
    "ev",
    "rec_ci95",
    "ue_ci95",
    "ev_ci95",
)


def _entry_fields(entry):
    if entry.method == "vccs":
        return [f"{entry.seed_resolution:.9g}", "", "", ""]
    return [
        "",
        str(entry.num_clusters),
        f"{entry.min_resolution:.9g}",
        f"{entry.max_resolution:.9g}",
    ]


def write_sweep_csv(result, path):
    """One row per (entry, scene) plus one aggregate row per entry."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(_CSV_HEADER)
        for entry, report in zip(result.entries, result.reports):
            prefix = [entry.config_id, entry.method] + _entry_fields(entry)
            for row in report.rows:
                writer.writerow(
                    prefix
                    + [
                        row.image_id,
                        str(row.num_superpixels),
                        f"{row.rec:.9g}",
                        f"{row.ue:.9g}",
                        f"{row.ev:.9g}",
                        "",
                        "",
                        "",
                    ]
                )
            writer.writerow(
                prefix
                + ["mean", f"{report.mean['num_superpixels']:.9g}"]
                + [f"{report.mean[k]:.9g}" for k in ("rec", "ue", "ev")]
                + [f"{report.ci95[k]:.9g}" for k in ("rec", "ue", "ev")]
            )


def _method_curve(result, method):
    rows = []
    for entry, report in zip(result.entries, result.reports):
        if entry.method != method:
            continue
        rows.append(
            (
                report.mean["num_superpixels"],
                report.mean["rec"],
                report.ci95["rec"],
                report.mean["ue"],
                report.ci95["ue"],
                report.mean["ev"],
                report.ci95["ev"],
            )
        )
    rows.sort(key=lambda r: r[0])
    return rows


def write_curve_data(result, method, path):
    """Gnuplot-ready columns: mean count vs each metric with its CI."""
    rows = _method_curve(result, method)
    with open(path, "w") as handle:
        handle.write("# num_superpixels rec rec_ci95 ue ue_ci95 ev ev_ci95\n")
        for row in rows:
            handle.write(" ".join(f"{v:.9g}" for v in row) + "\n")


def write_pairs_csv(result, pairs, path):
    header = (
        "vccs_config",
        "ssv_config",
        "vccs_num_superpixels",
        "ssv_num_superpixels",
        "vccs_rec",
        "ssv_rec",
        "vccs_ue",
        "ssv_ue",
        "vccs_ev",
        "ssv_ev",
    )
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for i, j in pairs:
            a, b = result.reports[i], result.reports[j]
            writer.writerow(
                [result.entries[i].config_id, result.entries[j].config_id]
                + [
                    f"{value:.9g}"
                    for value in (
                        a.mean["num_superpixels"],
                        b.mean["num_superpixels"],
                        a.mean["rec"],
                        b.mean["rec"],
                        a.mean["ue"],
                        b.mean["ue"],
                        a.mean["ev"],
                        b.mean["ev"],
                    )
                ]
            )


_METHOD_STYLE = {"vccs": ("tab:blue", "o"), "ssv": ("tab:red", "s")}
_FIGURES = (
    ("rec", "boundary recall"),
    ("ue", "undersegmentation error"),
    ("ev", "explained variation"),
)


def render_curves(result, out_dir):
    """Errorbar curves of each metric against mean supervoxel count."""
    paths = {}
    for key, label in _FIGURES:
        column = {"rec": (1, 2), "ue": (3, 4), "ev": (5, 6)}[key]
        fig, ax = plt.subplots(figsize=(5.5, 4.0))
        for method in ("vccs", "ssv"):
            rows = _method_curve(result, method)
            if not rows:
                continue
            counts = [r[0] for r in rows]
            means = [r[column[0]] for r in rows]
            errs = [r[column[1]] for r in rows]
            color, marker = _METHOD_STYLE[method]
            ax.errorbar(
                counts,
                means,
                yerr=errs,
                color=color,
                marker=marker,
                capsize=3,
                label=method,
            )
        ax.set_xlabel("mean supervoxel count")
        ax.set_ylabel(label)
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        path = os.path.join(out_dir, f"{key}_vs_count.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths[key] = path
    return paths


def write_sweep_outputs(result, out_dir, pair_tolerance=0.1):
    """Write CSVs, per-method curve data and figures; returns their paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {"csv": os.path.join(out_dir, "sweep.csv")}
    write_sweep_csv(result, paths["csv"])
    methods = {entry.method for entry in result.entries}
    paths["curves"] = {}
    for method in sorted(methods):
        dat = os.path.join(out_dir, f"{method}_curve.dat")
        write_curve_data(result, method, dat)
        paths["curves"][method] = dat
    pairs = matched_pairs(result, tolerance=pair_tolerance)
    paths["pairs"] = os.path.join(out_dir, "pairs.csv")
    write_pairs_csv(result, pairs, paths["pairs"])
    paths["figures"] = render_curves(result, out_dir)
    return paths
