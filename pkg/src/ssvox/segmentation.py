"""Supervoxel clustering: uniform seeding plus a saliency-adaptive variant.

A supervoxel is grown from lattice-placed seed voxels by synchronized
breadth-first waves over 26-adjacency: each wave, every cluster offers its
distance to the unassigned voxels on its frontier and each voxel joins the
closest offering cluster. Expansion restarts from the seeds after every
centroid update, so members stay connected to their seed by construction.
The adaptive variant splits the cloud by saliency cluster, runs the same
clustering per cluster with the scheduled seed spacing, and merges labels.

Distances mix color, space and local geometry in a 39-D feature vector
[x, y, z, L, a, b, fpfh_0..fpfh_32]:

    D = sqrt(lam*Dc^2/m^2 + mu*Ds^2/(3*R_seed^2) + eps*Dhik^2)
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .partition import build_partition
from .rgbd import UNLABELED, LabelMap2D
from .voxels import VoxelGrid, adjacency, compute_fpfh, compute_normals, voxelize


@dataclass(frozen=True)
class VccsParams:
    """Clustering weights and resolutions.

    color_weight/spatial_weight/geometry_weight are the lambda/mu/epsilon
    mix of the distance (must sum to 1); color_scale is the CIELab
    normalization constant m; max_iters bounds the expansion passes.
    """

    voxel_resolution: float = 0.02
    seed_resolution: float = 0.1
    color_weight: float = 0.7
    spatial_weight: float = 0.15
    geometry_weight: float = 0.15
    color_scale: float = 100.0
    max_iters: int = 5

    def __post_init__(self):
        if self.voxel_resolution <= 0:
            raise ValueError("voxel_resolution must be positive")
        if self.seed_resolution <= self.voxel_resolution:
            raise ValueError(
                f"seed_resolution {self.seed_resolution} must exceed "
                f"voxel_resolution {self.voxel_resolution}"
            )
        for name in ("color_weight", "spatial_weight", "geometry_weight"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        total = self.color_weight + self.spatial_weight + self.geometry_weight
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"distance weights must sum to 1, got {total}")
        if self.color_scale <= 0:
            raise ValueError("color_scale must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass
class Segmentation:
    """Labeled voxels of one or more grids plus per-point labels.

    ``parts`` holds (grid, voxel_labels) per underlying clustering run; the
    adaptive path has one part per saliency cluster, with label ids already
    offset into a single namespace. ``features`` row s is the mean member
    feature of supervoxel s in the 39-D space; ``sizes`` its voxel count.
    point_labels/projected are None when clustering ran on a bare grid.
    """

    parts: list
    features: np.ndarray
    sizes: np.ndarray
    point_labels: np.ndarray | None = None
    projected: LabelMap2D | None = None

    @property
    def num_supervoxels(self):
        return self.sizes.size

    def voxel_label_map(self):
        """Dict of integer cell key -> supervoxel id, for inspection.

        Grids of different saliency clusters may occupy the same cell; the
        first part wins there. Per-part labels remain exact in ``parts``.
        """
        out = {}
        for grid, labels in reversed(self.parts):
            out.update(zip(map(tuple, grid.keys.tolist()), labels.tolist()))
        return out


def place_seeds(grid, seed_resolution):
    """Voxel rows seeding the expansion, one per occupied lattice point.

    Lattice points are spaced seed_resolution apart, anchored at the
    minimum corner of the centroid bounding box. Each lattice point adopts
    the nearest voxel centroid within seed_resolution/2 and is discarded if
    none is in range; duplicate adoptions collapse to one seed.
    """
    if seed_resolution <= 0:
        raise ValueError(f"seed_resolution must be positive, got {seed_resolution}")
    if grid.num_voxels == 0:
        raise ValueError("cannot place seeds on an empty grid")

    low = grid.centroids.min(axis=0)
    high = grid.centroids.max(axis=0)
    steps = np.floor((high - low) / seed_resolution).astype(np.int64) + 2
    axes = [low[i] + seed_resolution * np.arange(steps[i]) for i in range(3)]
    mesh = np.meshgrid(*axes, indexing="ij")
    lattice = np.column_stack([m.ravel() for m in mesh])

    tree = cKDTree(grid.centroids)
    _, rows = tree.query(lattice, k=1, distance_upper_bound=seed_resolution / 2.0)
    rows = rows[rows < grid.num_voxels]
    return np.unique(rows)


def _features_39(grid):
    if grid.normals is None:
        compute_normals(grid)
    if grid.fpfh is None:
        compute_fpfh(grid)
    return np.concatenate([grid.centroids, grid.lab, grid.fpfh], axis=1)


def _pair_distances(a, b, params):
    """Row-wise distance between (N, 39) feature arrays."""
    ds2 = np.sum((a[:, 0:3] - b[:, 0:3]) ** 2, axis=1)
    dc2 = np.sum((a[:, 3:6] - b[:, 3:6]) ** 2, axis=1)
    hik = 1.0 - np.minimum(a[:, 6:], b[:, 6:]).sum(axis=1)
    undefined = (a[:, 6:].sum(axis=1) == 0.0) & (b[:, 6:].sum(axis=1) == 0.0)
    hik[undefined] = 0.0
    return np.sqrt(
        params.color_weight * dc2 / params.color_scale**2
        + params.spatial_weight * ds2 / (3.0 * params.seed_resolution**2)
        + params.geometry_weight * hik**2
    )


def feature_distance(a, b, params):
    """Distance between two 39-D feature vectors [x,y,z,L,a,b,fpfh...]."""
    a = np.asarray(a, dtype=np.float64).reshape(1, -1)
    b = np.asarray(b, dtype=np.float64).reshape(1, -1)
    if a.shape[1] != 39 or b.shape[1] != 39:
        raise ValueError("feature vectors must have 39 dimensions")
    return float(_pair_distances(a, b, params)[0])


def _expand_from_seeds(feats, table, seed_rows, sv_feats, params):
    """One full wave expansion; returns fresh labels (-1 where unreached)."""
    labels = np.full(feats.shape[0], -1, dtype=np.int64)
    labels[seed_rows] = np.arange(seed_rows.size)
    frontier = seed_rows
    num_sv = seed_rows.size
    while frontier.size:
        nb = table[frontier]
        src = np.repeat(labels[frontier], table.shape[1])
        flat = nb.ravel()
        ok = flat >= 0
        cand_v, cand_s = flat[ok], src[ok]
        ok = labels[cand_v] == -1
        cand_v, cand_s = cand_v[ok], cand_s[ok]
        if cand_v.size == 0:
            break
        packed = np.unique(cand_v * num_sv + cand_s)
        cand_v, cand_s = packed // num_sv, packed % num_sv
        dist = _pair_distances(sv_feats[cand_s], feats[cand_v], params)
        # per voxel: smallest distance wins, equal distances go to the
        # lower supervoxel id (lexsort: last key is primary)
        order = np.lexsort((cand_s, dist, cand_v))
        v_sorted = cand_v[order]
        first = np.ones(v_sorted.size, dtype=bool)
        first[1:] = v_sorted[1:] != v_sorted[:-1]
        winners_v = v_sorted[first]
        labels[winners_v] = cand_s[order][first]
        frontier = winners_v
    return labels


def _mean_features(feats, labels, num_sv):
    acc = np.zeros((num_sv, feats.shape[1]))
    assigned = labels >= 0
    np.add.at(acc, labels[assigned], feats[assigned])
    counts = np.bincount(labels[assigned], minlength=num_sv).astype(np.float64)
    return acc / np.maximum(counts, 1.0)[:, None], counts


def verify_connectivity(grid, labels):
    """Raise unless every label's voxel set is one 26-connected component."""
    table = adjacency(grid)
    n = grid.num_voxels
    src = np.repeat(np.arange(n), table.shape[1])
    dst = table.ravel()
    ok = dst >= 0
    src, dst = src[ok], dst[ok]
    same = labels[src] == labels[dst]
    src, dst = src[same], dst[same]
    graph = sparse.coo_matrix(
        (np.ones(src.size, dtype=np.int8), (src, dst)), shape=(n, n)
    )
    _, comp = connected_components(graph, directed=False)
    pairs = np.unique(np.column_stack([labels, comp]), axis=0)
    if pairs.shape[0] != np.unique(labels).size:
        raise RuntimeError("supervoxel connectivity violated")


def vccs_segment(grid, params):
    """Cluster a voxel grid into connected supervoxels.

    Seeds come from the lattice, expansion runs in synchronized waves from
    all seeds, and after each pass cluster centroids are recomputed as
    member means in the 39-D space before expansion restarts from the
    seeds, until labels are stable or max_iters passes ran. Voxels that no
    seed can reach through occupied adjacency become their own
    connected-component supervoxels. Returns a Segmentation whose single
    part is (grid, voxel_labels).
    """
    if abs(grid.resolution - params.voxel_resolution) > 1e-9 * max(
        grid.resolution, params.voxel_resolution
    ):
        raise ValueError(
            f"grid resolution {grid.resolution} does not match params "
            f"voxel_resolution {params.voxel_resolution}"
        )
    feats = _features_39(grid)
    table = adjacency(grid)
    seed_rows = place_seeds(grid, params.seed_resolution)
    if seed_rows.size == 0:
        raise ValueError("no seeds could be placed on the grid")

    sv_feats = feats[seed_rows]
    labels = None
    for _ in range(params.max_iters):
        new_labels = _expand_from_seeds(feats, table, seed_rows, sv_feats, params)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        sv_feats, _ = _mean_features(feats, labels, seed_rows.size)

    num_sv = seed_rows.size
    orphan = labels < 0
    if orphan.any():
        rows = np.where(orphan)[0]
        sub = np.full(grid.num_voxels, -1, dtype=np.int64)
        sub[rows] = np.arange(rows.size)
        nb = table[rows]
        src = np.repeat(np.arange(rows.size), table.shape[1])
        dst = nb.ravel()
        ok = (dst >= 0) & orphan[np.maximum(dst, 0)]
        graph = sparse.coo_matrix(
            (np.ones(ok.sum(), dtype=np.int8), (src[ok], sub[dst[ok]])),
            shape=(rows.size, rows.size),
        )
        _, comp = connected_components(graph, directed=False)
        # renumber components stably so orphan ids are reproducible
        uniq, comp = np.unique(comp, return_inverse=True)
        labels[rows] = num_sv + comp
        num_sv += uniq.size

    features, sizes = _mean_features(feats, labels, num_sv)
    verify_connectivity(grid, labels)
    return Segmentation(parts=[(grid, labels)], features=features, sizes=sizes)


def segment_vccs(cloud, params, normal_radius=None, fpfh_radius=None):
    """Uniform-seed clustering of an organized cloud, with 2-D projection."""
    grid = voxelize(cloud.valid_points(), cloud.valid_colors(), params.voxel_resolution)
    compute_normals(grid, normal_radius)
    compute_fpfh(grid, fpfh_radius)
    seg = vccs_segment(grid, params)
    labels = seg.parts[0][1]
    seg.point_labels = labels[grid.point_voxel]
    seg.projected = project_labels(cloud, seg.point_labels)
    return seg


def ssv_segment(
    cloud,
    saliency_map,
    num_clusters,
    min_resolution,
    max_resolution,
    params,
    normal_radius=None,
    fpfh_radius=None,
):
    """Saliency-adaptive clustering: dense seeds where the map is salient.

    The saliency values at valid pixels are split into num_clusters groups,
    each group's points are voxelized alone (same cell boundaries as the
    full cloud, since the grid origin is global) and clustered with its
    scheduled seed spacing: most salient gets min_resolution. Labels merge
    by offsetting each group's ids by the supervoxel count of the groups
    before it, in ascending group order.
    """
    if min_resolution <= params.voxel_resolution:
        raise ValueError(
            f"min_resolution {min_resolution} must exceed voxel_resolution "
            f"{params.voxel_resolution}"
        )
    partition = build_partition(
        saliency_map, cloud, num_clusters, min_resolution, max_resolution
    )
    point_cluster = partition.assignment[cloud.valid]
    points = cloud.valid_points()
    colors = cloud.valid_colors()

    parts = []
    features = []
    sizes = []
    point_labels = np.full(points.shape[0], -1, dtype=np.int64)
    offset = 0
    for k in range(partition.num_clusters):
        mask = point_cluster == k
        if not mask.any():
            continue
        grid = voxelize(points[mask], colors[mask], params.voxel_resolution)
        compute_normals(grid, normal_radius)
        compute_fpfh(grid, fpfh_radius)
        cluster_params = replace(
            params, seed_resolution=float(partition.seed_resolutions[k])
        )
        seg = vccs_segment(grid, cluster_params)
        labels = seg.parts[0][1]
        parts.append((grid, labels + offset))
        features.append(seg.features)
        sizes.append(seg.sizes)
        point_labels[mask] = labels[grid.point_voxel] + offset
        offset += seg.num_supervoxels

    merged = Segmentation(
        parts=parts,
        features=np.concatenate(features, axis=0),
        sizes=np.concatenate(sizes),
        point_labels=point_labels,
        projected=None,
    )
    merged.projected = project_labels(cloud, point_labels)
    return merged


def project_labels(cloud, point_labels):
    """Per-pixel label image of the segmentation.

    Valid pixels copy their point's label; invalid pixels take the label of
    the nearest labeled pixel in Euclidean pixel distance, equal distances
    resolved to the smaller linear (row-major) index.
    """
    point_labels = np.asarray(point_labels)
    if point_labels.shape[0] != int(cloud.valid.sum()):
        raise ValueError(
            f"{point_labels.shape[0]} labels for {int(cloud.valid.sum())} valid points"
        )
    if point_labels.size == 0:
        raise ValueError("cannot project a segmentation with no labeled points")

    out = np.full((cloud.height, cloud.width), UNLABELED, dtype=np.int32)
    out[cloud.valid] = point_labels
    if not cloud.valid.all():
        rows, cols = np.nonzero(cloud.valid)
        labeled = np.column_stack([rows, cols]).astype(np.float64)
        tree = cKDTree(labeled)
        miss_r, miss_c = np.nonzero(~cloud.valid)
        queries = np.column_stack([miss_r, miss_c]).astype(np.float64)
        dist, _ = tree.query(queries, k=1)
        filled = np.empty(queries.shape[0], dtype=np.int64)
        for i, (r, c) in enumerate(zip(miss_r, miss_c)):
            cand = tree.query_ball_point([float(r), float(c)], dist[i] + 1e-6)
            cand = np.asarray(cand)
            dr = rows[cand] - r
            dc = cols[cand] - c
            d2 = dr * dr + dc * dc
            best = d2 == d2.min()
            linear = rows[cand[best]] * cloud.width + cols[cand[best]]
            filled[i] = cand[best][np.argmin(linear)]
        # labeled pixels and point_labels share row-major valid-pixel order
        out[miss_r, miss_c] = point_labels[filled]
    return LabelMap2D(out)
