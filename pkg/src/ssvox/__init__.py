"""Point-cloud oversegmentation with saliency-adaptive supervoxel density.

The package voxelizes organized RGB-D clouds, grows supervoxels from a
seed lattice by iterative feature-space expansion, and optionally varies
the seed density across the scene according to a bottom-up saliency map,
so visually salient regions get finer supervoxels. It ships a synthetic
scene generator, boundary/undersegmentation/variation metrics, and a
benchmark sweep that emits plot-ready comparisons of the two seeding
strategies.
"""

from .colorspace import srgb_to_lab
from .metrics import (
    EvalReport,
    ImageEval,
    boundary_recall,
    boundary_window_radius,
    evaluate_run,
    explained_variation,
    intensity_image,
    undersegmentation_error,
)
from .partition import (
    ClusterPartition,
    build_partition,
    kmeans_1d,
    seed_schedule,
    within_cluster_ss,
)
from .report import (
    SweepEntry,
    SweepResult,
    default_grid,
    discover_scenes,
    matched_pairs,
    run_sweep,
    write_sweep_outputs,
)
from .rgbd import (
    UNLABELED,
    CameraIntrinsics,
    LabelMap2D,
    OrganizedCloud,
    backproject,
    load_label_map,
    load_labeled_cloud,
    load_rgbd,
    load_scalar_map,
    save_label_map,
    save_labeled_cloud,
    save_scalar_map,
)
from .saliency import SaliencyParams, center_surround_contrast, compute_saliency
from .segmentation import (
    Segmentation,
    VccsParams,
    feature_distance,
    place_seeds,
    project_labels,
    segment_vccs,
    ssv_segment,
    vccs_segment,
    verify_connectivity,
)
from .synth import SceneObject, SceneSpec, default_suite, render, scene_paths, write_scene
from .voxels import (
    VoxelGrid,
    adjacency,
    compute_fpfh,
    compute_normals,
    hik_distance,
    voxelize,
)

__version__ = "0.1.0"

__all__ = [
    "CameraIntrinsics",
    "ClusterPartition",
    "EvalReport",
    "ImageEval",
    "LabelMap2D",
    "OrganizedCloud",
    "SaliencyParams",
    "SceneObject",
    "SceneSpec",
    "Segmentation",
    "SweepEntry",
    "SweepResult",
    "UNLABELED",
    "VccsParams",
    "VoxelGrid",
    "adjacency",
    "backproject",
    "boundary_recall",
    "boundary_window_radius",
    "build_partition",
    "center_surround_contrast",
    "compute_fpfh",
    "compute_normals",
    "compute_saliency",
    "default_grid",
    "default_suite",
    "discover_scenes",
    "evaluate_run",
    "explained_variation",
    "feature_distance",
    "hik_distance",
    "intensity_image",
    "kmeans_1d",
    "load_label_map",
    "load_labeled_cloud",
    "load_rgbd",
    "load_scalar_map",
    "matched_pairs",
    "place_seeds",
    "project_labels",
    "render",
    "run_sweep",
    "save_label_map",
    "save_labeled_cloud",
    "save_scalar_map",
    "scene_paths",
    "seed_schedule",
    "segment_vccs",
    "srgb_to_lab",
    "ssv_segment",
    "undersegmentation_error",
    "vccs_segment",
    "verify_connectivity",
    "voxelize",
    "within_cluster_ss",
    "write_scene",
    "write_sweep_outputs",
]
