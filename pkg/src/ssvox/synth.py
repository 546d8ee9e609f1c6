"""Synthetic RGB-D scenes with ground truth, for benchmarking.

A scene is a flat background plane seen by a pinhole camera, plus a few
brightly colored near objects: thin axis-aligned plates sitting one voxel
proud of the plane and sphere caps bulging out of it. The shallow relief
keeps objects voxel-connected to the background, so clusterings can leak
across object boundaries and the boundary metrics stay informative; fully
detached objects would trivially segment as isolated components.
Rendering is a per-pixel z-buffer, so ground-truth labels follow
visibility exactly, and everything is deterministic given the description.
"""

from dataclasses import dataclass

import numpy as np

from .rgbd import CameraIntrinsics, LabelMap2D, save_label_map, write_color_image, write_gray16


@dataclass(frozen=True)
class SceneObject:
    """One foreground object: kind 'box' (flat plate) or 'sphere'.

    center is (x, y, z) in meters; for a box, z is the depth of the visible
    face and extent is its (width, height); for a sphere, center may lie
    behind the background plane (only a cap bulges out) and extent is
    (radius,). color is an RGB triple 0..255.
    """

    kind: str
    center: tuple
    extent: tuple
    color: tuple

    def __post_init__(self):
        if self.kind not in ("box", "sphere"):
            raise ValueError(f"unknown object kind {self.kind!r}")
        if any(v <= 0 for v in self.extent):
            raise ValueError("object extent must be positive")
        if self.nearest_depth() <= 0:
            raise ValueError("object must lie entirely in front of the camera")

    def nearest_depth(self):
        if self.kind == "sphere":
            return self.center[2] - self.extent[0]
        return self.center[2]


@dataclass(frozen=True)
class SceneSpec:
    """Camera, background plane and foreground objects of one scene.

    background_gradient is a luminance ramp (per-unit-x, per-unit-y in
    8-bit levels) added to the background color across the image.
    """

    width: int
    height: int
    intrinsics: CameraIntrinsics
    background_depth: float
    background_color: tuple
    background_gradient: tuple = (0.0, 0.0)
    objects: tuple = ()

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("scene dimensions must be positive")
        if self.background_depth <= 0:
            raise ValueError("background depth must be positive")
        for obj in self.objects:
            if obj.nearest_depth() >= self.background_depth:
                raise ValueError(
                    "objects must poke out in front of the background plane"
                )


def render(spec):
    """Rasterize a scene; returns (rgb uint8, depth meters, gt labels).

    Ground-truth label 0 is the background; object i (1-based) keeps label
    i wherever it is the nearest surface. Sphere caps get a simple
    camera-facing shading so curved surfaces are visible in intensity.
    Raises if any object ends up without a single visible pixel.
    """
    intr = spec.intrinsics
    u = (np.arange(spec.width) - intr.cx) / intr.fx
    v = (np.arange(spec.height) - intr.cy) / intr.fy
    ray_x, ray_y = np.meshgrid(u, v)

    depth = np.full((spec.height, spec.width), float(spec.background_depth))
    gt = np.zeros((spec.height, spec.width), dtype=np.int32)

    gx, gy = spec.background_gradient
    ramp = gx * (np.arange(spec.width) / max(spec.width - 1, 1) - 0.5)[None, :]
    ramp = ramp + gy * (np.arange(spec.height) / max(spec.height - 1, 1) - 0.5)[:, None]
    shade = np.asarray(spec.background_color, dtype=np.float64)[None, None, :] + ramp[:, :, None]
    rgb = np.clip(np.round(shade), 0, 255).astype(np.uint8)

    for index, obj in enumerate(spec.objects, start=1):
        ox, oy, oz = obj.center
        if obj.kind == "box":
            half_w, half_h = obj.extent[0] / 2.0, obj.extent[1] / 2.0
            hit = (
                (np.abs(ray_x * oz - ox) <= half_w)
                & (np.abs(ray_y * oz - oy) <= half_h)
            )
            candidate = np.where(hit, oz, np.inf)
            color = np.asarray(obj.color, dtype=np.float64)
            nearer = candidate < depth
            if not nearer.any():
                raise ValueError(f"object {index} (box) is not visible")
            rgb[nearer] = np.clip(np.round(color), 0, 255).astype(np.uint8)
        else:
            radius = obj.extent[0]
            # ray p(t) = t * (ray_x, ray_y, 1); nearest sphere intersection
            a = ray_x**2 + ray_y**2 + 1.0
            b = -2.0 * (ray_x * ox + ray_y * oy + oz)
            c = ox * ox + oy * oy + oz * oz - radius * radius
            disc = b * b - 4.0 * a * c
            hit = disc >= 0.0
            t = np.full_like(a, np.inf)
            root = np.sqrt(np.maximum(disc, 0.0))
            t[hit] = (-b[hit] - root[hit]) / (2.0 * a[hit])
            candidate = np.where(hit & (t > 0), t, np.inf)
            nearer = candidate < depth
            if not nearer.any():
                raise ValueError(f"object {index} (sphere) is not visible")
            tn = candidate[nearer]
            nz = (tn - oz) / radius
            factor = 0.7 + 0.3 * np.clip(-nz, 0.0, 1.0)
            shaded = np.asarray(obj.color, dtype=np.float64)[None, :] * factor[:, None]
            rgb[nearer] = np.clip(np.round(shaded), 0, 255).astype(np.uint8)

        depth[nearer] = candidate[nearer]
        gt[nearer] = index

    return rgb, depth, LabelMap2D(gt)


def write_scene(spec, directory, stem):
    """Render and write <stem>_color.ppm/_depth.pgm/_intrinsics.txt/_gt.pgm."""
    rgb, depth, gt = render(spec)
    intr = spec.intrinsics
    counts = np.round(depth / intr.depth_scale)
    if counts.max() > 65535:
        raise ValueError("depth exceeds the 16-bit range at this depth_scale")
    paths = scene_paths(directory, stem)
    write_color_image(rgb, paths["color"])
    write_gray16(counts.astype(np.uint16), paths["depth"])
    intr.save(paths["intrinsics"])
    save_label_map(gt, paths["gt"])
    return paths


def scene_paths(directory, stem):
    import os

    return {
        "color": os.path.join(directory, f"{stem}_color.ppm"),
        "depth": os.path.join(directory, f"{stem}_depth.pgm"),
        "intrinsics": os.path.join(directory, f"{stem}_intrinsics.txt"),
        "gt": os.path.join(directory, f"{stem}_gt.pgm"),
    }


_PALETTE = (
    (220, 40, 30),
    (30, 90, 220),
    (240, 200, 30),
    (30, 190, 80),
    (230, 60, 200),
    (250, 140, 20),
)

# the bundled suite snaps depths to this grid so one-voxel relief stays
# one voxel after millimeter quantization
_SUITE_CELL = 0.02


def default_suite(num_scenes=20, rng_seed=7, width=128, height=96, max_objects=3):
    """Deterministic benchmark scenes: small vivid objects, plain background.

    Objects land in distinct view quadrants with jitter, sized around
    12..20 pixels so they stay small against the background plane. The
    background depth sits at a cell center of the 0.02 m voxel grid and
    plates float exactly one cell in front, so object and background stay
    26-adjacent at the silhouette.
    """
    if num_scenes < 1:
        raise ValueError("num_scenes must be at least 1")
    if not 1 <= max_objects <= 4:
        raise ValueError("max_objects must be in 1..4")
    rng = np.random.default_rng(rng_seed)
    intr = CameraIntrinsics(
        fx=110.0, fy=110.0, cx=(width - 1) / 2.0, cy=(height - 1) / 2.0
    )
    quad_u = (0.25 * width, 0.75 * width)
    quad_v = (0.3 * height, 0.7 * height)

    scenes = []
    for i in range(num_scenes):
        bg_depth = (int(rng.integers(70, 92)) + 0.5) * _SUITE_CELL
        gray = int(rng.integers(100, 135))
        tint = rng.integers(-8, 9, size=3)
        bg_color = tuple(int(np.clip(gray + t, 0, 255)) for t in tint)
        gradient = (float(rng.uniform(-18, 18)), float(rng.uniform(-14, 14)))

        count = 1 + i % max_objects
        quads = rng.permutation(4)[:count]
        objects = []
        for q in quads:
            pu = quad_u[q % 2] + float(rng.uniform(-8, 8))
            pv = quad_v[q // 2] + float(rng.uniform(-6, 6))
            color = _PALETTE[int(rng.integers(0, len(_PALETTE)))]
            if rng.uniform() < 0.5:
                z = bg_depth - _SUITE_CELL
                x = (pu - intr.cx) / intr.fx * z
                y = (pv - intr.cy) / intr.fy * z
                side_px = float(rng.uniform(12, 20))
                side = side_px * z / intr.fx
                objects.append(
                    SceneObject("box", (x, y, z), (side, side * 0.8), color)
                )
            else:
                # cap of height h with rim radius a: sphere radius follows
                # from a^2 = 2*rho*h - h^2, center sits behind the plane
                h = float(rng.uniform(0.05, 0.08))
                rim_px = float(rng.uniform(6.5, 10))
                a = rim_px * bg_depth / intr.fx
                rho = (a * a + h * h) / (2.0 * h)
                z = bg_depth + rho - h
                x = (pu - intr.cx) / intr.fx * bg_depth
                y = (pv - intr.cy) / intr.fy * bg_depth
                objects.append(SceneObject("sphere", (x, y, z), (rho,), color))
        scenes.append(
            SceneSpec(
                width=width,
                height=height,
                intrinsics=intr,
                background_depth=bg_depth,
                background_color=bg_color,
                background_gradient=gradient,
                objects=tuple(objects),
            )
        )
    return scenes
