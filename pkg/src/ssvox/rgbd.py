"""RGB-D ingestion and bit-defined file formats.

Images travel as binary netpbm: 8-bit P6 for color, 16-bit big-endian P5
for depth, label and scalar maps. Camera intrinsics are a key=value text
file. Labeled clouds are written in a one-header ASCII format
("ssv-cloud v1 <count>", then "x y z r g b label" rows).

All containers are frozen after construction and safe to share across
threads.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

UNLABELED = -1

_INTRINSICS_KEYS = ("fx", "fy", "cx", "cy", "depth_scale")


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole model: focal lengths and principal point in pixels,
    depth_scale in meters per stored depth unit."""

    fx: float
    fy: float
    cx: float
    cy: float
    depth_scale: float = 0.001

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if self.depth_scale <= 0:
            raise ValueError(f"depth_scale must be positive, got {self.depth_scale}")

    @classmethod
    def load(cls, path):
        """Read intrinsics from a key=value text file."""
        values = {}
        for line in Path(path).read_text().splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}: malformed intrinsics line {line!r}")
            key, _, raw = line.partition("=")
            values[key.strip()] = float(raw)
        missing = [k for k in _INTRINSICS_KEYS if k not in values]
        if missing:
            raise ValueError(f"{path}: missing intrinsics keys {missing}")
        return cls(**{k: values[k] for k in _INTRINSICS_KEYS})

    def save(self, path):
        lines = [f"{k}={getattr(self, k):.10g}" for k in _INTRINSICS_KEYS]
        Path(path).write_text("\n".join(lines) + "\n")


def _freeze(arr):
    arr.flags.writeable = False
    return arr


class OrganizedCloud:
    """RGB-D point cloud retaining the 2D pixel lattice.

    Pixel (u, v) corresponds to flat record index v*width + u. Invalid
    pixels (no depth) carry zeroed coordinates and valid=False.
    """

    def __init__(self, xyz, rgb, valid):
        xyz = np.asarray(xyz, dtype=np.float64)
        rgb = np.asarray(rgb, dtype=np.uint8)
        valid = np.asarray(valid, dtype=bool)
        if xyz.ndim != 3 or xyz.shape[2] != 3 or rgb.shape != xyz.shape or valid.shape != xyz.shape[:2]:
            raise ValueError("inconsistent cloud array shapes")
        if valid.any():
            pts = xyz[valid]
            if not np.all(np.isfinite(pts)) or np.any(pts[:, 2] <= 0):
                raise ValueError("valid points must be finite with z > 0")
        self.height, self.width = valid.shape
        self.xyz = _freeze(xyz)
        self.rgb = _freeze(rgb)
        self.valid = _freeze(valid)

    @property
    def num_valid(self):
        return int(self.valid.sum())

    def valid_indices(self):
        """Flat (row-major) indices of valid pixels, ascending."""
        return np.flatnonzero(self.valid.ravel())

    def valid_points(self):
        """(N, 3) coordinates of valid points in flat-index order."""
        return self.xyz.reshape(-1, 3)[self.valid_indices()]

    def valid_colors(self):
        """(N, 3) RGB of valid points in flat-index order."""
        return self.rgb.reshape(-1, 3)[self.valid_indices()]


class LabelMap2D:
    """Per-pixel integer labels on the image lattice; UNLABELED (-1) marks
    pixels with no label."""

    def __init__(self, labels):
        labels = np.asarray(labels, dtype=np.int32)
        if labels.ndim != 2:
            raise ValueError(f"label map must be 2-D, got shape {labels.shape}")
        if labels.min(initial=0) < UNLABELED:
            raise ValueError("labels must be >= -1")
        self.height, self.width = labels.shape
        self.labels = _freeze(labels)

    def __eq__(self, other):
        return isinstance(other, LabelMap2D) and np.array_equal(self.labels, other.labels)

    def num_labels(self):
        """Count of distinct labels, UNLABELED excluded."""
        return int(np.unique(self.labels[self.labels != UNLABELED]).size)


# --- netpbm (binary P5/P6) ---------------------------------------------


def _read_pnm(path):
    data = Path(path).read_bytes()
    if len(data) < 2 or data[:1] != b"P" or data[1:2] not in (b"5", b"6"):
        raise ValueError(f"{path}: not a binary PGM/PPM file")
    magic = data[:2].decode()
    # header: magic, width, height, maxval as whitespace-separated tokens,
    # '#' comments allowed
    tokens = []
    pos = 2
    while len(tokens) < 3:
        if pos >= len(data):
            raise ValueError(f"{path}: truncated header")
        ch = data[pos : pos + 1]
        if ch == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(data) and not data[pos : pos + 1].isspace():
                pos += 1
            tokens.append(data[start:pos])
    pos += 1  # single whitespace byte after maxval
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise ValueError(f"{path}: malformed header") from None
    if width <= 0 or height <= 0 or not 0 < maxval < 65536:
        raise ValueError(f"{path}: bad dimensions or maxval")
    channels = 3 if magic == "P6" else 1
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = width * height * channels
    pixels = np.frombuffer(data, dtype=dtype, count=count, offset=pos)
    if pixels.size != count:
        raise ValueError(f"{path}: truncated pixel data")
    pixels = pixels.astype(np.uint16 if maxval > 255 else np.uint8)
    if channels == 3:
        return pixels.reshape(height, width, 3), maxval
    return pixels.reshape(height, width), maxval


def _write_pnm(path, array, maxval):
    array = np.asarray(array)
    if array.ndim == 3:
        magic, (height, width, _) = "P6", array.shape
    else:
        magic, (height, width) = "P5", array.shape
    header = f"{magic}\n{width} {height}\n{maxval}\n".encode()
    payload = array.astype(">u2" if maxval > 255 else "u1").tobytes()
    Path(path).write_bytes(header + payload)


def read_color_image(path):
    """Read an 8-bit binary PPM as (H, W, 3) uint8."""
    pixels, maxval = _read_pnm(path)
    if pixels.ndim != 3 or maxval != 255:
        raise ValueError(f"{path}: expected 8-bit 3-channel PPM")
    return pixels


def read_gray16(path):
    """Read a 16-bit binary PGM as (H, W) uint16."""
    pixels, maxval = _read_pnm(path)
    if pixels.ndim != 2 or maxval != 65535:
        raise ValueError(f"{path}: expected 16-bit single-channel PGM")
    return pixels


def write_color_image(rgb, path):
    rgb = np.asarray(rgb, dtype=np.uint8)
    _write_pnm(path, rgb, 255)


def write_gray16(values, path):
    values = np.asarray(values)
    if values.min(initial=0) < 0 or values.max(initial=0) > 65535:
        raise ValueError("16-bit image values out of range")
    _write_pnm(path, values.astype(np.uint16), 65535)


# --- loaders / savers ---------------------------------------------------


def load_rgbd(color_path, depth_path, intrinsics):
    """Back-project a color+depth image pair into an organized cloud.

    Depth value d becomes z = d * depth_scale at
    ((u - cx) z / fx, (v - cy) z / fy, z); d == 0 marks the pixel invalid.
    """
    rgb = read_color_image(color_path)
    depth = read_gray16(depth_path)
    if depth.shape != rgb.shape[:2]:
        raise ValueError(
            f"dimension mismatch: color {rgb.shape[1]}x{rgb.shape[0]} vs "
            f"depth {depth.shape[1]}x{depth.shape[0]}"
        )
    return backproject(rgb, depth, intrinsics)


def backproject(rgb, depth, intrinsics):
    """Pinhole back-projection of raw arrays (rgb uint8, depth uint16)."""
    height, width = depth.shape
    valid = depth > 0
    z = depth.astype(np.float64) * intrinsics.depth_scale
    u = np.arange(width, dtype=np.float64)[None, :]
    v = np.arange(height, dtype=np.float64)[:, None]
    xyz = np.zeros((height, width, 3))
    xyz[..., 0] = np.where(valid, (u - intrinsics.cx) * z / intrinsics.fx, 0.0)
    xyz[..., 1] = np.where(valid, (v - intrinsics.cy) * z / intrinsics.fy, 0.0)
    xyz[..., 2] = np.where(valid, z, 0.0)
    return OrganizedCloud(xyz, rgb, valid)


def project_pixel(intrinsics, points):
    """Forward pinhole projection of (N, 3) points to (N, 2) pixel coords."""
    points = np.asarray(points, dtype=np.float64)
    u = points[:, 0] * intrinsics.fx / points[:, 2] + intrinsics.cx
    v = points[:, 1] * intrinsics.fy / points[:, 2] + intrinsics.cy
    return np.stack([u, v], axis=1)


def load_label_map(path):
    """Read a 16-bit PGM label map; stored 0 means UNLABELED, v>0 means v-1."""
    stored = read_gray16(path).astype(np.int32)
    return LabelMap2D(stored - 1)


def save_label_map(label_map, path):
    """Write a label map as 16-bit PGM (round-trips through load_label_map)."""
    labels = label_map.labels
    if labels.max(initial=UNLABELED) > 65534:
        raise ValueError("label overflow: 16-bit label files support labels up to 65534")
    write_gray16((labels + 1).astype(np.uint16), path)


def save_scalar_map(values, path):
    """Write a [0,1] scalar field as 16-bit PGM, stored = floor(v * 65535)."""
    values = np.asarray(values, dtype=np.float64)
    if values.min(initial=0.0) < 0.0 or values.max(initial=0.0) > 1.0:
        raise ValueError("scalar map values must lie in [0, 1]")
    write_gray16(np.floor(values * 65535.0).astype(np.uint16), path)


def load_scalar_map(path):
    """Read a 16-bit PGM back into float values in [0, 1]."""
    return read_gray16(path).astype(np.float64) / 65535.0


def save_labeled_cloud(cloud, point_labels, path):
    """Write valid points with labels in the "ssv-cloud v1" ASCII format."""
    point_labels = np.asarray(point_labels)
    points = cloud.valid_points()
    colors = cloud.valid_colors()
    labels = point_labels[cloud.valid_indices()] if point_labels.size == cloud.width * cloud.height else point_labels
    if labels.shape[0] != points.shape[0]:
        raise ValueError("point_labels must cover all valid points")
    lines = [f"ssv-cloud v1 {points.shape[0]}"]
    for (x, y, z), (r, g, b), label in zip(points, colors, labels):
        lines.append(f"{x:.6f} {y:.6f} {z:.6f} {r} {g} {b} {label}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_labeled_cloud(path):
    """Read an "ssv-cloud v1" file as (points, colors, labels) arrays."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty cloud file")
    header = lines[0].split()
    if header[:2] != ["ssv-cloud", "v1"] or len(header) != 3:
        raise ValueError(f"{path}: bad header {lines[0]!r}")
    count = int(header[2])
    rows = [line.split() for line in lines[1 : count + 1]]
    if len(rows) != count:
        raise ValueError(f"{path}: expected {count} rows, found {len(rows)}")
    data = np.array(rows, dtype=np.float64).reshape(count, 7)
    points = data[:, 0:3]
    colors = data[:, 3:6].astype(np.uint8)
    labels = data[:, 6].astype(np.int64)
    return points, colors, labels
