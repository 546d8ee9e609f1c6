"""Regular-grid voxelization and per-voxel features.

Points are binned into cubic cells of edge ``resolution`` by floor division,
so the grid origin is the world origin and two clouds voxelized at the same
resolution share cell boundaries. Each occupied voxel carries the features
the clustering distance needs: centroid, mean color in CIELab, a PCA surface
normal, and a 33-bin FPFH descriptor. Adjacency is 26-connectivity.
"""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .colorspace import srgb_to_lab

# packed signed 21-bit-per-axis integer keys; bounds the grid extent to
# +/- 2^20 cells per axis, ample for metric scenes at centimeter resolution
_KEY_BIAS = 1 << 20
_KEY_SHIFT = 21

_OFFSETS_26 = np.array(
    [
        (dx, dy, dz)
        for dx in (-1, 0, 1)
        for dy in (-1, 0, 1)
        for dz in (-1, 0, 1)
        if (dx, dy, dz) != (0, 0, 0)
    ],
    dtype=np.int64,
)


def _encode_keys(keys):
    keys = np.asarray(keys, dtype=np.int64)
    if keys.size and (keys.min() < -_KEY_BIAS or keys.max() >= _KEY_BIAS):
        raise ValueError("voxel indices exceed the supported +/-2^20 range")
    return (
        ((keys[..., 0] + _KEY_BIAS) << (2 * _KEY_SHIFT))
        | ((keys[..., 1] + _KEY_BIAS) << _KEY_SHIFT)
        | (keys[..., 2] + _KEY_BIAS)
    )


@dataclass
class VoxelGrid:
    """Occupied voxels of a point set, sorted by packed key.

    ``point_voxel`` maps every input point to its row in the voxel arrays.
    ``normals`` and ``fpfh`` start as None and are filled in by
    compute_normals / compute_fpfh; clustering treats missing geometry as
    zero vectors.
    """

    resolution: float
    keys: np.ndarray  # (N, 3) int64 integer cell coordinates
    encoded: np.ndarray  # (N,) packed keys, ascending
    centroids: np.ndarray  # (N, 3) mean member position
    lab: np.ndarray  # (N, 3) CIELab of the mean member color
    counts: np.ndarray  # (N,) member points per voxel
    point_voxel: np.ndarray  # (P,) voxel row of each input point
    normals: np.ndarray | None = None
    fpfh: np.ndarray | None = None
    _adjacency: np.ndarray | None = field(default=None, repr=False)

    @property
    def num_voxels(self):
        return self.encoded.size

    def key_index(self, key):
        """Row of an integer cell key, or -1 if unoccupied."""
        key = np.asarray(key, dtype=np.int64).reshape(1, 3)
        code = _encode_keys(key)[0]
        pos = int(np.searchsorted(self.encoded, code))
        if pos < self.encoded.size and self.encoded[pos] == code:
            return pos
        return -1


def voxelize(points, colors, resolution):
    """Bin points into cells of edge ``resolution`` and aggregate features.

    Cell key of p is floor(p / resolution) per axis. Centroid is the mean
    member position; color is the mean member RGB converted to CIELab.
    """
    if resolution <= 0:
        raise ValueError(f"resolution must be positive, got {resolution}")
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    colors = np.asarray(colors, dtype=np.float64).reshape(-1, 3)
    if points.shape[0] == 0:
        raise ValueError("voxelize requires at least one point")
    if colors.shape[0] != points.shape[0]:
        raise ValueError(
            f"{colors.shape[0]} colors for {points.shape[0]} points"
        )

    cell = np.floor(points / resolution).astype(np.int64)
    encoded = _encode_keys(cell)
    unique, first, point_voxel = np.unique(
        encoded, return_index=True, return_inverse=True
    )
    n = unique.size

    counts = np.bincount(point_voxel, minlength=n)
    centroids = np.empty((n, 3))
    mean_rgb = np.empty((n, 3))
    for axis in range(3):
        centroids[:, axis] = (
            np.bincount(point_voxel, weights=points[:, axis], minlength=n)
            / counts
        )
        mean_rgb[:, axis] = (
            np.bincount(point_voxel, weights=colors[:, axis], minlength=n)
            / counts
        )

    return VoxelGrid(
        resolution=float(resolution),
        keys=cell[first],
        encoded=unique,
        centroids=centroids,
        lab=srgb_to_lab(mean_rgb),
        counts=counts,
        point_voxel=point_voxel,
    )


def adjacency(grid):
    """(N, 26) table of neighbor voxel rows, -1 where the cell is empty.

    Column order follows a fixed offset enumeration, so downstream
    tie-breaking on row order is deterministic.
    """
    if grid._adjacency is None:
        shifted = grid.keys[:, None, :] + _OFFSETS_26[None, :, :]
        codes = _encode_keys(shifted)
        pos = np.searchsorted(grid.encoded, codes)
        pos[pos == grid.encoded.size] = 0
        hit = grid.encoded[pos] == codes
        table = np.where(hit, pos, -1)
        grid._adjacency = table.astype(np.int64)
    return grid._adjacency


def neighbors(grid, key):
    """Occupied cells among the 26 face/edge/corner neighbors of ``key``."""
    row = grid.key_index(key)
    if row < 0:
        raise KeyError(f"voxel key {tuple(np.asarray(key))} is not occupied")
    rows = adjacency(grid)[row]
    return grid.keys[rows[rows >= 0]]


def compute_normals(grid, radius=None):
    """Fill per-voxel PCA normals from centroids within ``radius``.

    The normal is the smallest-eigenvalue eigenvector of the covariance of
    the surrounding centroids (the voxel itself included), oriented to face
    the sensor at the origin. Voxels whose neighborhood is degenerate keep a
    zero normal: fewer than 3 other centroids in range, or a near-collinear
    spread where the perpendicular is not determined. Default radius is two
    cells.
    """
    if radius is None:
        radius = 2.0 * grid.resolution
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")

    n = grid.num_voxels
    # center coordinates before accumulating second moments: scene offsets
    # of a few meters would otherwise eat the millimeter-scale variance
    centered = grid.centroids - grid.centroids.mean(axis=0)

    tree = cKDTree(grid.centroids)
    pairs = tree.query_pairs(radius, output_type="ndarray")

    count = np.ones(n)
    sum_p = centered.copy()
    sum_pp = centered[:, :, None] * centered[:, None, :]
    if pairs.size:
        a, b = pairs[:, 0], pairs[:, 1]
        np.add.at(count, a, 1.0)
        np.add.at(count, b, 1.0)
        np.add.at(sum_p, a, centered[b])
        np.add.at(sum_p, b, centered[a])
        outer = centered[:, :, None] * centered[:, None, :]
        np.add.at(sum_pp, a, outer[b])
        np.add.at(sum_pp, b, outer[a])

    mean = sum_p / count[:, None]
    cov = sum_pp / count[:, None, None] - mean[:, :, None] * mean[:, None, :]

    vals, vecs = np.linalg.eigh(cov)
    normals = vecs[:, :, 0]

    # face the sensor: a surface normal should point against the viewing ray
    flip = np.einsum("ij,ij->i", normals, grid.centroids) > 0
    normals[flip] *= -1.0

    # collinear neighborhoods leave the perpendicular direction arbitrary;
    # 1e-14 m^2 sits far below any genuine surface spread at cm resolution
    normals[(count < 4) | (vals[:, 1] < 1e-14)] = 0.0
    grid.normals = normals
    grid.fpfh = None
    return None


def compute_fpfh(grid, radius=None):
    """Fill per-voxel 33-bin FPFH descriptors from pairs within ``radius``.

    For each centroid pair the Darboux frame u = n_source, v = d x u,
    w = u x v is anchored at the endpoint whose normal is better aligned
    with the connecting direction d; the angles (v.n_t, u.d, atan2(w.n_t,
    u.n_t)) are histogrammed into 3 x 11 bins. A voxel's raw signature over
    its pairs is L1-normalized, augmented with the 1/distance-weighted mean
    of its neighbors' signatures, and L1-normalized again. Voxels with a
    zero normal, or with no usable pair, stay all-zero. Default radius is
    two cells.
    """
    if grid.normals is None:
        raise ValueError("compute_normals must run before compute_fpfh")
    if radius is None:
        radius = 2.0 * grid.resolution
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")

    n = grid.num_voxels
    valid = np.linalg.norm(grid.normals, axis=1) > 0.5

    tree = cKDTree(grid.centroids)
    pairs = tree.query_pairs(radius, output_type="ndarray")
    if pairs.size:
        pairs = pairs[valid[pairs[:, 0]] & valid[pairs[:, 1]]]

    spfh = np.zeros((n, 33))
    if pairs.size:
        a, b = pairs[:, 0], pairs[:, 1]
        delta = grid.centroids[b] - grid.centroids[a]
        dist = np.linalg.norm(delta, axis=1)
        keep = dist > 1e-12
        a, b, delta, dist = a[keep], b[keep], delta[keep], dist[keep]
        direction = delta / dist[:, None]

        na, nb = grid.normals[a], grid.normals[b]
        swap = np.abs(np.einsum("ij,ij->i", na, direction)) < np.abs(
            np.einsum("ij,ij->i", nb, direction)
        )
        u = np.where(swap[:, None], nb, na)
        n_t = np.where(swap[:, None], na, nb)
        d_hat = np.where(swap[:, None], -direction, direction)

        v = np.cross(d_hat, u)
        v_norm = np.linalg.norm(v, axis=1)
        keep = v_norm > 1e-12
        a, b, dist = a[keep], b[keep], dist[keep]
        u, n_t, d_hat = u[keep], n_t[keep], d_hat[keep]
        v = v[keep] / v_norm[keep][:, None]
        w = np.cross(u, v)

        alpha = np.einsum("ij,ij->i", v, n_t)
        phi = np.einsum("ij,ij->i", u, d_hat)
        theta = np.arctan2(
            np.einsum("ij,ij->i", w, n_t), np.einsum("ij,ij->i", u, n_t)
        )

        bin_a = np.clip(((alpha + 1.0) / 2.0 * 11).astype(np.int64), 0, 10)
        bin_p = np.clip(((phi + 1.0) / 2.0 * 11).astype(np.int64), 0, 10)
        bin_t = np.clip(
            ((theta + np.pi) / (2.0 * np.pi) * 11).astype(np.int64), 0, 10
        )
        for rows in (a, b):
            np.add.at(spfh, (rows, bin_a), 1.0)
            np.add.at(spfh, (rows, 11 + bin_p), 1.0)
            np.add.at(spfh, (rows, 22 + bin_t), 1.0)

    totals = spfh.sum(axis=1, keepdims=True)
    np.divide(spfh, totals, out=spfh, where=totals > 0)

    fpfh = spfh.copy()
    if pairs.size and a.size:
        weighted = np.zeros((n, 33))
        neighbor_count = np.zeros(n)
        inv_d = 1.0 / dist
        np.add.at(weighted, a, spfh[b] * inv_d[:, None])
        np.add.at(weighted, b, spfh[a] * inv_d[:, None])
        np.add.at(neighbor_count, a, 1.0)
        np.add.at(neighbor_count, b, 1.0)
        has = neighbor_count > 0
        fpfh[has] += weighted[has] / neighbor_count[has, None]

    totals = fpfh.sum(axis=1, keepdims=True)
    np.divide(fpfh, totals, out=fpfh, where=totals > 0)
    fpfh[~valid] = 0.0
    grid.fpfh = fpfh
    return None


def hik_distance(h1, h2):
    """Histogram intersection distance 1 - sum(min(h1, h2)).

    Zero for identical normalized histograms, one for disjoint support.
    Two all-zero histograms (undefined descriptors) count as identical.
    """
    h1 = np.asarray(h1, dtype=np.float64)
    h2 = np.asarray(h2, dtype=np.float64)
    if h1.shape != h2.shape:
        raise ValueError(f"histogram shapes differ: {h1.shape} vs {h2.shape}")
    overlap = np.minimum(h1, h2).sum()
    if overlap == 0.0 and h1.sum() == 0.0 and h2.sum() == 0.0:
        return 0.0
    return float(1.0 - overlap)


def dump_voxels_csv(grid, path):
    """Write one row per voxel: key, count, centroid, Lab, normal, 33 bins."""
    normals = grid.normals if grid.normals is not None else np.zeros((grid.num_voxels, 3))
    fpfh = grid.fpfh if grid.fpfh is not None else np.zeros((grid.num_voxels, 33))
    header = (
        ["kx", "ky", "kz", "count", "cx", "cy", "cz", "L", "a", "b"]
        + ["nx", "ny", "nz"]
        + [f"fpfh_{i}" for i in range(33)]
    )
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for i in range(grid.num_voxels):
            writer.writerow(
                [*grid.keys[i], grid.counts[i]]
                + [f"{v:.9g}" for v in grid.centroids[i]]
                + [f"{v:.9g}" for v in grid.lab[i]]
                + [f"{v:.9g}" for v in normals[i]]
                + [f"{v:.9g}" for v in fpfh[i]]
            )
