import numpy as np
import pytest

from ssvox import rgbd, synth
from ssvox.report import discover_scenes


@pytest.fixture(scope="session")
def suite_specs():
    return synth.default_suite()


@pytest.fixture(scope="session")
def suite_dir(tmp_path_factory, suite_specs):
    """The bundled 20-scene benchmark suite written to disk."""
    directory = tmp_path_factory.mktemp("suite")
    for index, spec in enumerate(suite_specs):
        synth.write_scene(spec, str(directory), f"scene{index:02d}")
    return directory


@pytest.fixture(scope="session")
def suite_scenes(suite_dir):
    """(stem, cloud, gt, rgb) for every suite scene, loaded from disk so
    tests see exactly what the benchmark harness sees."""
    loaded = []
    for stem in discover_scenes(str(suite_dir)):
        paths = synth.scene_paths(str(suite_dir), stem)
        intrinsics = rgbd.CameraIntrinsics.load(paths["intrinsics"])
        cloud = rgbd.load_rgbd(paths["color"], paths["depth"], intrinsics)
        gt = rgbd.load_label_map(paths["gt"])
        rgb = rgbd.read_color_image(paths["color"])
        loaded.append((stem, cloud, gt, rgb))
    return loaded


def make_cloud(depth_counts, rgb=None, fx=100.0, fy=100.0, cx=None, cy=None):
    """Organized cloud from a raw uint16 depth image, for unit tests."""
    depth_counts = np.asarray(depth_counts, dtype=np.uint16)
    height, width = depth_counts.shape
    if rgb is None:
        rgb = np.full((height, width, 3), 128, dtype=np.uint8)
    intrinsics = rgbd.CameraIntrinsics(
        fx=fx,
        fy=fy,
        cx=(width - 1) / 2.0 if cx is None else cx,
        cy=(height - 1) / 2.0 if cy is None else cy,
    )
    return rgbd.backproject(np.asarray(rgb, dtype=np.uint8), depth_counts, intrinsics)
