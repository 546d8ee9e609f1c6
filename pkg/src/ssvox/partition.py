"""Saliency clustering and the per-cluster seed-resolution schedule.

Pixels are grouped by 1-D k-means on their saliency values, clusters are
sorted by ascending mean saliency, and cluster k of K gets seed resolution
r_k = 10**(log10(r_max) - (k-1)*d) with d = (log10(r_max) - log10(r_min))
/ (K-1), so the most salient cluster is seeded at r_min (densest).
"""

from dataclasses import dataclass

import numpy as np

from .rgbd import UNLABELED, LabelMap2D


def kmeans_1d(values, k):
    """Exact 1-D k-means: globally minimal within-cluster sum of squares.

    Optimal scalar clusters are contiguous runs of the sorted values, and
    equal values never gain from being split apart, so the optimum is found
    by dynamic programming over cut positions between distinct values.  The
    per-row argmin is monotone in the interval cost, which admits a
    divide-and-conquer evaluation in O(k n log n).  Cost ties break toward
    the larger left run, and k larger than the number of distinct values
    drops the surplus clusters, reducing the effective k.  Returns
    (assignment, centroids); centroids are strictly ascending.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError("kmeans_1d requires at least one value")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")

    distinct, inverse, counts = np.unique(
        values, return_inverse=True, return_counts=True
    )
    m = distinct.size
    effective_k = min(int(k), m)
    if effective_k == 1:
        return np.zeros(values.size, dtype=np.int64), np.array([values.mean()])

    weight = counts.astype(np.float64)
    pref_w = np.concatenate(([0.0], np.cumsum(weight)))
    pref_s = np.concatenate(([0.0], np.cumsum(weight * distinct)))
    pref_q = np.concatenate(([0.0], np.cumsum(weight * distinct * distinct)))

    def interval_cost(i, j):
        # weighted squared deviation of distinct[i:j] about its mean; j > i
        w = pref_w[j] - pref_w[i]
        s = pref_s[j] - pref_s[i]
        return (pref_q[j] - pref_q[i]) - s * s / w

    # dp[j] = optimal cost of covering distinct[:j] with the current number
    # of clusters; cut_choice[t][j] = start index of the last cluster
    dp = np.empty(m + 1)
    dp[0] = 0.0
    dp[1:] = interval_cost(0, np.arange(1, m + 1))
    cut_choice = []
    for t in range(1, effective_k):
        new_dp = np.full(m + 1, np.inf)
        arg = np.zeros(m + 1, dtype=np.int64)
        # t+1 clusters need j >= t+1 values; the last cluster starts at
        # i in [t, j-1] and the optimal i never decreases as j grows
        stack = [(t + 1, m, t, m - 1)]
        while stack:
            j_lo, j_hi, i_lo, i_hi = stack.pop()
            if j_lo > j_hi:
                continue
            j_mid = (j_lo + j_hi) // 2
            cand = np.arange(i_lo, min(i_hi, j_mid - 1) + 1)
            costs = dp[cand] + interval_cost(cand, j_mid)
            pick = costs.size - 1 - int(np.argmin(costs[::-1]))
            best_i = i_lo + pick
            new_dp[j_mid] = costs[pick]
            arg[j_mid] = best_i
            stack.append((j_lo, j_mid - 1, i_lo, best_i))
            stack.append((j_mid + 1, j_hi, best_i, i_hi))
        dp = new_dp
        cut_choice.append(arg)

    bounds = np.empty(effective_k + 1, dtype=np.int64)
    bounds[0] = 0
    bounds[effective_k] = m
    j = m
    for t in range(effective_k - 1, 0, -1):
        j = cut_choice[t - 1][j]
        bounds[t] = j

    distinct_label = np.searchsorted(bounds, np.arange(m), side="right") - 1
    assignment = distinct_label[inverse]
    centroids = (pref_s[bounds[1:]] - pref_s[bounds[:-1]]) / (
        pref_w[bounds[1:]] - pref_w[bounds[:-1]]
    )
    return assignment, centroids


def within_cluster_ss(values, assignment):
    """Within-cluster sum of squared deviations from cluster means."""
    values = np.asarray(values, dtype=np.float64).ravel()
    assignment = np.asarray(assignment)
    total = 0.0
    for label in np.unique(assignment):
        members = values[assignment == label]
        total += float(np.sum((members - members.mean()) ** 2))
    return total


def seed_schedule(num_clusters, min_resolution, max_resolution):
    """Geometric seed-resolution ladder from max_resolution down to
    min_resolution; num_clusters == 1 bypasses the schedule and returns
    [max_resolution]."""
    if min_resolution <= 0 or max_resolution <= 0:
        raise ValueError("seed resolutions must be positive")
    if min_resolution > max_resolution:
        raise ValueError(
            f"min_resolution {min_resolution} exceeds max_resolution {max_resolution}"
        )
    if num_clusters < 1:
        raise ValueError(f"num_clusters must be >= 1, got {num_clusters}")
    if num_clusters == 1:
        return np.array([max_resolution])
    log_max = np.log10(max_resolution)
    step = (log_max - np.log10(min_resolution)) / (num_clusters - 1)
    return 10.0 ** (log_max - step * np.arange(num_clusters))


@dataclass(frozen=True)
class ClusterPartition:
    """Assignment of valid pixels to saliency clusters plus each cluster's
    seed resolution. Cluster indices are sorted by ascending mean saliency,
    so seed_resolutions is descending whenever min < max."""

    num_clusters: int
    assignment: np.ndarray  # (H, W) int, UNLABELED at invalid pixels
    cluster_mean_saliency: np.ndarray
    seed_resolutions: np.ndarray

    def as_label_map(self):
        """Cluster indices as a LabelMap2D for export / visualization."""
        return LabelMap2D(self.assignment)


def build_partition(saliency_map, cloud, num_clusters, min_resolution, max_resolution):
    """Cluster the saliency values at valid pixels and attach the schedule.

    Only pixels with valid depth participate; clusters are renumbered by
    ascending mean saliency (ties keep the original centroid order). The
    effective cluster count can drop below num_clusters on degenerate maps.
    """
    saliency_map = np.asarray(saliency_map, dtype=np.float64)
    if saliency_map.shape != (cloud.height, cloud.width):
        raise ValueError(
            f"saliency map {saliency_map.shape} does not match cloud "
            f"{(cloud.height, cloud.width)}"
        )
    valid = cloud.valid
    if not valid.any():
        raise ValueError("cloud has no valid points to partition")

    values = saliency_map[valid]
    raw_assignment, centroids = kmeans_1d(values, num_clusters)

    effective_k = centroids.size
    means = np.array([values[raw_assignment == j].mean() for j in range(effective_k)])
    order = np.argsort(means, kind="stable")
    rank = np.empty(effective_k, dtype=np.int64)
    rank[order] = np.arange(effective_k)

    assignment = np.full((cloud.height, cloud.width), UNLABELED, dtype=np.int32)
    assignment[valid] = rank[raw_assignment]

    if effective_k == 1:
        resolutions = np.array([max_resolution])
    else:
        resolutions = seed_schedule(effective_k, min_resolution, max_resolution)
    return ClusterPartition(
        num_clusters=effective_k,
        assignment=assignment,
        cluster_mean_saliency=means[order],
        seed_resolutions=resolutions,
    )
