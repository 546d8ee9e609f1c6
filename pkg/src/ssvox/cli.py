"""Command line front end.

Subcommands: segment one scene (uniform or saliency-adaptive), synthesize
a benchmark scene suite, sweep a configuration grid over a scene
directory, and evaluate stored label maps against ground truth. Options
can come from a key=value config file (--config); explicit flags win.
Exit status: 0 success, 1 runtime failure, 2 configuration error. All
configuration problems are diagnosed before any heavy computation starts.
"""

import argparse
import os
import sys
from dataclasses import dataclass

from .metrics import evaluate_run
from .partition import build_partition
from .report import (
    SweepEntry,
    discover_scenes,
    matched_pairs,
    run_sweep,
    write_sweep_outputs,
)
from .rgbd import (
    CameraIntrinsics,
    load_label_map,
    load_rgbd,
    read_color_image,
    save_label_map,
    save_labeled_cloud,
    save_scalar_map,
)
from .saliency import SaliencyParams, compute_saliency
from .segmentation import VccsParams, segment_vccs, ssv_segment
from .synth import default_suite, scene_paths, write_scene


class ConfigError(Exception):
    """Invalid configuration or unusable inputs; maps to exit status 2."""


@dataclass(frozen=True)
class _Option:
    flag: str
    conv: type
    default: object
    help: str

    @property
    def key(self):
        return self.flag.lstrip("-").replace("-", "_")


def _float_list(text):
    text = text.strip()
    if not text:
        return ()
    return tuple(float(part) for part in text.split(","))


_PARAM_OPTIONS = (
    _Option("--rvoxel", float, 0.02, "voxel grid resolution in meters"),
    _Option("--lambda", float, 0.7, "color weight of the expansion distance"),
    _Option("--mu", float, 0.15, "spatial weight of the expansion distance"),
    _Option("--epsilon", float, 0.15, "geometry weight of the expansion distance"),
    _Option("--m", float, 100.0, "color distance normalization constant"),
    _Option("--max-iters", int, 5, "maximum expansion passes"),
)

_SALIENCY_OPTIONS = (
    _Option("--octaves", int, 2, "saliency pyramid octaves; raise for large images"),
    _Option("--center-sigma", float, 2.0, "center Gaussian sigma at octave 0"),
    _Option("--surround-ratio", float, 5.0, "surround-to-center sigma ratio"),
)

_SEGMENT_OPTIONS = (
    _Option("--mode", str, None, "seeding strategy: vccs or ssv"),
    _Option("--color", str, None, "color image (binary PPM)"),
    _Option("--depth", str, None, "16-bit depth image (binary PGM)"),
    _Option("--intrinsics", str, None, "camera intrinsics key=value file"),
    _Option("--out-dir", str, None, "directory for output artifacts"),
    _Option("--rseed", float, 0.1, "seed resolution in meters (vccs mode)"),
    _Option("--k", int, 6, "number of saliency clusters (ssv mode)"),
    _Option("--rmin", float, 0.1, "finest seed resolution (ssv mode)"),
    _Option("--rmax", float, 0.3, "coarsest seed resolution (ssv mode)"),
    *_PARAM_OPTIONS,
    *_SALIENCY_OPTIONS,
    _Option("--rng-seed", int, 0, "seed recorded in the run manifest"),
)

_SYNTH_OPTIONS = (
    _Option("--out-dir", str, None, "directory for the generated scenes"),
    _Option("--num-scenes", int, 20, "number of scenes to generate"),
    _Option("--rng-seed", int, 7, "generator seed"),
    _Option("--width", int, 128, "image width in pixels"),
    _Option("--height", int, 96, "image height in pixels"),
    _Option("--max-objects", int, 3, "objects per scene cycle upper bound"),
)

_SWEEP_OPTIONS = (
    _Option("--dataset", str, None, "directory of scene quadruples"),
    _Option("--out-dir", str, None, "directory for sweep outputs"),
    _Option(
        "--vccs-rseeds",
        _float_list,
        (0.05, 0.10, 0.15, 0.20, 0.25),
        "comma-separated uniform seed resolutions; empty to skip vccs",
    ),
    _Option(
        "--ssv-rmins",
        _float_list,
        (0.05, 0.10, 0.15, 0.20),
        "comma-separated finest seed resolutions; empty to skip ssv",
    ),
    _Option("--k", int, 6, "saliency cluster count for ssv entries"),
    _Option("--rmax", float, 0.3, "coarsest seed resolution for ssv entries"),
    _Option("--workers", int, 1, "parallel scene workers"),
    *_PARAM_OPTIONS,
    *_SALIENCY_OPTIONS,
    _Option("--rng-seed", int, 0, "seed recorded in the sweep manifest"),
)

_EVALUATE_OPTIONS = (
    _Option("--dataset", str, None, "directory of scene quadruples"),
    _Option("--labels-dir", str, None, "directory of <stem>_labels.pgm maps"),
    _Option("--out", str, None, "output CSV path"),
)


def _read_config_file(path):
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    values = {}
    with open(path) as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    return values


def _resolve(options, args):
    """Merge flag values over config-file values over defaults."""
    file_values = {}
    if getattr(args, "config", None):
        file_values = _read_config_file(args.config)
    known = {option.key for option in options}
    unknown = sorted(set(file_values) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    cfg = {}
    for option in options:
        flag_value = getattr(args, option.key)
        if flag_value is not None:
            cfg[option.key] = flag_value
        elif option.key in file_values:
            try:
                cfg[option.key] = option.conv(file_values[option.key])
            except ValueError as exc:
                raise ConfigError(f"config key {option.key}: {exc}") from exc
        else:
            cfg[option.key] = option.default
    return cfg


def _require(cfg, key, flag):
    if cfg[key] is None:
        raise ConfigError(f"{flag} is required")
    return cfg[key]


def _require_file(cfg, key, flag):
    path = _require(cfg, key, flag)
    if not os.path.isfile(path):
        raise ConfigError(f"{key} file not found: {path}")
    return path


def _vccs_params(cfg, seed_resolution):
    try:
        return VccsParams(
            voxel_resolution=cfg["rvoxel"],
            seed_resolution=seed_resolution,
            color_weight=cfg["lambda"],
            spatial_weight=cfg["mu"],
            geometry_weight=cfg["epsilon"],
            color_scale=cfg["m"],
            max_iters=cfg["max_iters"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _saliency_params(cfg):
    try:
        return SaliencyParams(
            num_octaves=cfg["octaves"],
            center_sigma=cfg["center_sigma"],
            surround_ratio=cfg["surround_ratio"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _write_manifest(path, values):
    with open(path, "w") as handle:
        for key in sorted(values):
            handle.write(f"{key}={values[key]}\n")


def _scene_stem(color_path):
    name = os.path.basename(color_path)
    if name.endswith("_color.ppm"):
        return name[: -len("_color.ppm")]
    return os.path.splitext(name)[0]


def cmd_segment(cfg):
    mode = _require(cfg, "mode", "--mode")
    if mode not in ("vccs", "ssv"):
        raise ConfigError(f"mode must be vccs or ssv, got {mode!r}")
    color_path = _require_file(cfg, "color", "--color")
    depth_path = _require_file(cfg, "depth", "--depth")
    intr_path = _require_file(cfg, "intrinsics", "--intrinsics")
    out_dir = _require(cfg, "out_dir", "--out-dir")

    saliency_params = _saliency_params(cfg)
    if mode == "vccs":
        params = _vccs_params(cfg, seed_resolution=cfg["rseed"])
    else:
        if cfg["k"] < 1:
            raise ConfigError(f"k must be at least 1, got {cfg['k']}")
        if not cfg["rvoxel"] < cfg["rmin"] <= cfg["rmax"]:
            raise ConfigError(
                f"need rvoxel < rmin <= rmax, got {cfg['rvoxel']}, "
                f"{cfg['rmin']}, {cfg['rmax']}"
            )
        params = _vccs_params(cfg, seed_resolution=cfg["rmax"])

    try:
        intrinsics = CameraIntrinsics.load(intr_path)
        cloud = load_rgbd(color_path, depth_path, intrinsics)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    os.makedirs(out_dir, exist_ok=True)
    stem = _scene_stem(color_path)
    manifest = {
        "mode": mode,
        "color": color_path,
        "depth": depth_path,
        "intrinsics": intr_path,
        "rvoxel": cfg["rvoxel"],
        "lambda": cfg["lambda"],
        "mu": cfg["mu"],
        "epsilon": cfg["epsilon"],
        "m": cfg["m"],
        "max_iters": cfg["max_iters"],
        "rng_seed": cfg["rng_seed"],
    }

    if mode == "vccs":
        seg = segment_vccs(cloud, params)
        manifest["rseed"] = cfg["rseed"]
    else:
        try:
            saliency = compute_saliency(cloud, saliency_params)
        except ValueError as exc:
            # the pyramid cannot fit this image: a configuration problem
            raise ConfigError(str(exc)) from exc
        partition = build_partition(
            saliency, cloud, cfg["k"], cfg["rmin"], cfg["rmax"]
        )
        seg = ssv_segment(cloud, saliency, cfg["k"], cfg["rmin"], cfg["rmax"], params)
        save_scalar_map(saliency, os.path.join(out_dir, f"{stem}_saliency.pgm"))
        save_label_map(
            partition.as_label_map(), os.path.join(out_dir, f"{stem}_clusters.pgm")
        )
        manifest.update(
            {
                "k": cfg["k"],
                "rmin": cfg["rmin"],
                "rmax": cfg["rmax"],
                "effective_k": partition.num_clusters,
                "octaves": cfg["octaves"],
                "center_sigma": cfg["center_sigma"],
                "surround_ratio": cfg["surround_ratio"],
            }
        )

    save_label_map(seg.projected, os.path.join(out_dir, f"{stem}_labels.pgm"))
    save_labeled_cloud(
        cloud, seg.point_labels, os.path.join(out_dir, f"{stem}_cloud.txt")
    )
    manifest["num_supervoxels"] = seg.num_supervoxels
    _write_manifest(os.path.join(out_dir, f"{stem}_manifest.txt"), manifest)
    print(seg.num_supervoxels)
    return 0


def cmd_synth(cfg):
    out_dir = _require(cfg, "out_dir", "--out-dir")
    try:
        scenes = default_suite(
            num_scenes=cfg["num_scenes"],
            rng_seed=cfg["rng_seed"],
            width=cfg["width"],
            height=cfg["height"],
            max_objects=cfg["max_objects"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    os.makedirs(out_dir, exist_ok=True)
    pad = max(2, len(str(len(scenes) - 1)))
    for index, spec in enumerate(scenes):
        write_scene(spec, out_dir, f"scene{index:0{pad}d}")
    print(f"wrote {len(scenes)} scenes to {out_dir}")
    return 0


def cmd_sweep(cfg):
    dataset = _require(cfg, "dataset", "--dataset")
    out_dir = _require(cfg, "out_dir", "--out-dir")
    if cfg["workers"] < 1:
        raise ConfigError(f"workers must be at least 1, got {cfg['workers']}")

    entries = []
    try:
        for rseed in cfg["vccs_rseeds"]:
            entries.append(SweepEntry("vccs", seed_resolution=rseed))
        if cfg["ssv_rmins"]:
            if cfg["k"] < 1:
                raise ConfigError(f"k must be at least 1, got {cfg['k']}")
            for rmin in cfg["ssv_rmins"]:
                entries.append(
                    SweepEntry(
                        "ssv",
                        num_clusters=cfg["k"],
                        min_resolution=rmin,
                        max_resolution=cfg["rmax"],
                    )
                )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if not entries:
        raise ConfigError("both grids are empty; nothing to sweep")
    for entry in entries:
        finest = (
            entry.seed_resolution if entry.method == "vccs" else entry.min_resolution
        )
        if finest <= cfg["rvoxel"]:
            raise ConfigError(
                f"{entry.config_id}: seed resolution {finest} must exceed "
                f"the voxel resolution {cfg['rvoxel']}"
            )

    coarsest = max(
        e.seed_resolution if e.method == "vccs" else e.max_resolution for e in entries
    )
    params = _vccs_params(cfg, seed_resolution=coarsest)
    saliency_params = _saliency_params(cfg)
    try:
        discover_scenes(dataset)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    result = run_sweep(
        dataset,
        entries,
        params=params,
        saliency_params=saliency_params,
        workers=cfg["workers"],
    )
    os.makedirs(out_dir, exist_ok=True)
    paths = write_sweep_outputs(result, out_dir)
    manifest = {key: cfg[key] for key in cfg if key not in ("dataset", "out_dir")}
    manifest["vccs_rseeds"] = ",".join(f"{v:g}" for v in cfg["vccs_rseeds"])
    manifest["ssv_rmins"] = ",".join(f"{v:g}" for v in cfg["ssv_rmins"])
    manifest["num_scenes"] = len(result.scene_ids)
    _write_manifest(os.path.join(out_dir, "sweep_manifest.txt"), manifest)

    for entry, rep in zip(result.entries, result.reports):
        print(
            f"{entry.config_id}: num_superpixels={rep.mean['num_superpixels']:.9g} "
            f"rec={rep.mean['rec']:.9g} ue={rep.mean['ue']:.9g} "
            f"ev={rep.mean['ev']:.9g}"
        )
    pairs = matched_pairs(result)
    print(f"matched pairs: {len(pairs)}")
    print(f"wrote {paths['csv']}")
    return 0


def cmd_evaluate(cfg):
    dataset = _require(cfg, "dataset", "--dataset")
    labels_dir = _require(cfg, "labels_dir", "--labels-dir")
    out_path = _require(cfg, "out", "--out")
    try:
        stems = discover_scenes(dataset)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    label_paths = []
    for stem in stems:
        path = os.path.join(labels_dir, f"{stem}_labels.pgm")
        if not os.path.isfile(path):
            raise ConfigError(f"label map not found: {path}")
        label_paths.append(path)

    segs, gts, images = [], [], []
    for stem, label_path in zip(stems, label_paths):
        paths = scene_paths(dataset, stem)
        segs.append(load_label_map(label_path))
        gts.append(load_label_map(paths["gt"]))
        images.append(read_color_image(paths["color"]))
    report = evaluate_run(segs, gts, images, image_ids=stems)
    report.write_csv(out_path)
    print(
        f"mean: rec={report.mean['rec']:.9g} ue={report.mean['ue']:.9g} "
        f"ev={report.mean['ev']:.9g}"
    )
    print(f"wrote {out_path}")
    return 0


def _add_command(subparsers, name, options, func, help_text):
    sub = subparsers.add_parser(name, help=help_text)
    sub.add_argument("--config", default=None, help="key=value config file")
    for option in options:
        sub.add_argument(option.flag, type=option.conv, default=None, help=option.help)
    sub.set_defaults(func=func, options=options)
    return sub


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="ssvox",
        description="Supervoxel oversegmentation with saliency-adaptive seeding.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    _add_command(
        subparsers, "segment", _SEGMENT_OPTIONS, cmd_segment, "segment one RGB-D scene"
    )
    _add_command(
        subparsers, "synth", _SYNTH_OPTIONS, cmd_synth, "generate synthetic scenes"
    )
    _add_command(
        subparsers, "sweep", _SWEEP_OPTIONS, cmd_sweep, "benchmark a parameter grid"
    )
    _add_command(
        subparsers,
        "evaluate",
        _EVALUATE_OPTIONS,
        cmd_evaluate,
        "score stored label maps against ground truth",
    )
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve(args.options, args)
        return args.func(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
