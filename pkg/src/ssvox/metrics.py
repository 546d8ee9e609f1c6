"""Oversegmentation quality metrics on 2-D label maps.

Boundary recall asks how much of the true boundary the segmentation finds
within a diagonal-scaled window; undersegmentation error measures how badly
superpixels leak across true segment borders; explained variation measures
how much intensity variance the superpixel means capture. Pixels whose
ground truth is unlabeled are left out of the first two.
"""

import csv
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .rgbd import UNLABELED


def _labels_of(label_map):
    labels = getattr(label_map, "labels", label_map)
    return np.asarray(labels)


def _boundary_mask(labels):
    """Pixels having a labeled 4-neighbor with a different label."""
    labeled = labels != UNLABELED
    mask = np.zeros(labels.shape, dtype=bool)
    for axis in (0, 1):
        lo = [slice(None)] * 2
        hi = [slice(None)] * 2
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        differ = (
            (labels[lo] != labels[hi]) & labeled[lo] & labeled[hi]
        )
        mask[lo] |= differ
        mask[hi] |= differ
    return mask


def boundary_window_radius(height, width):
    """Half-width of the match window: 0.0025 x image diagonal, at least 1."""
    diag = float(np.hypot(width, height))
    return max(1, int(np.floor(0.0025 * diag + 0.5)))


def boundary_recall(seg, gt):
    """Fraction of true boundary pixels with a predicted boundary nearby.

    Nearby means within the (2r+1)^2 window of boundary_window_radius.
    A ground truth without any boundary scores 1 by convention.
    """
    seg = _labels_of(seg)
    gt = _labels_of(gt)
    if seg.shape != gt.shape:
        raise ValueError(f"shape mismatch: seg {seg.shape} vs gt {gt.shape}")
    gt_boundary = _boundary_mask(gt)
    total = int(gt_boundary.sum())
    if total == 0:
        return 1.0
    r = boundary_window_radius(*seg.shape)
    seg_near = ndimage.maximum_filter(
        _boundary_mask(seg).astype(np.uint8), size=2 * r + 1, mode="constant"
    )
    hits = int((seg_near.astype(bool) & gt_boundary).sum())
    return hits / total


def undersegmentation_error(seg, gt):
    """Mean normalized leakage of superpixels across true segment borders.

    For each true segment, the sizes of every superpixel touching it are
    summed and the segment's own size subtracted; sizes count only pixels
    with labeled ground truth. Zero when the segmentation refines the
    ground truth exactly.
    """
    seg = _labels_of(seg)
    gt = _labels_of(gt)
    if seg.shape != gt.shape:
        raise ValueError(f"shape mismatch: seg {seg.shape} vs gt {gt.shape}")
    mask = (gt != UNLABELED) & (seg != UNLABELED)
    if not (gt != UNLABELED).any():
        raise ValueError("ground truth has no labeled pixels")
    if not mask.any():
        raise ValueError("no pixel is labeled in both maps")

    g = gt[mask].ravel()
    s = seg[mask].ravel()
    gt_ids, g = np.unique(g, return_inverse=True)
    seg_ids, s = np.unique(s, return_inverse=True)
    gt_sizes = np.bincount(g, minlength=gt_ids.size)
    seg_sizes = np.bincount(s, minlength=seg_ids.size)

    pair = np.unique(g.astype(np.int64) * seg_ids.size + s)
    covering = np.zeros(gt_ids.size)
    np.add.at(covering, pair // seg_ids.size, seg_sizes[pair % seg_ids.size])
    return float(np.mean((covering - gt_sizes) / gt_sizes))


def intensity_image(image):
    """Mean of the color channels, or the array itself if already scalar."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 3:
        return image.sum(axis=2) / image.shape[2]
    return image


def explained_variation(seg, image):
    """Share of intensity variance captured by per-superpixel means.

    A constant image has nothing to explain and scores 1 by convention.
    """
    seg = _labels_of(seg)
    pixels = intensity_image(image)
    if seg.shape != pixels.shape:
        raise ValueError(
            f"shape mismatch: seg {seg.shape} vs image {pixels.shape}"
        )
    flat = pixels.ravel()
    mean = flat.mean()
    denom = float(((flat - mean) ** 2).sum())
    if denom == 0.0:
        return 1.0
    _, inverse = np.unique(seg.ravel(), return_inverse=True)
    sizes = np.bincount(inverse)
    seg_means = np.bincount(inverse, weights=flat) / sizes
    numer = float((sizes * (seg_means - mean) ** 2).sum())
    return numer / denom


@dataclass(frozen=True)
class ImageEval:
    image_id: str
    num_superpixels: int
    rec: float
    ue: float
    ev: float


@dataclass(frozen=True)
class EvalReport:
    """Per-image metric rows plus their mean and 95% confidence half-width."""

    rows: tuple
    mean: dict
    ci95: dict

    def write_csv(self, path):
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["image_id", "num_superpixels", "rec", "ue", "ev"])
            for row in self.rows:
                writer.writerow(
                    [
                        row.image_id,
                        row.num_superpixels,
                        f"{row.rec:.9g}",
                        f"{row.ue:.9g}",
                        f"{row.ev:.9g}",
                    ]
                )
            for name, stats in (("mean", self.mean), ("ci95", self.ci95)):
                writer.writerow(
                    [name]
                    + [f"{stats[k]:.9g}" for k in ("num_superpixels", "rec", "ue", "ev")]
                )


def _aggregate(values):
    values = np.asarray(values, dtype=np.float64)
    mean = float(values.mean())
    half = float(1.96 * values.std(ddof=0) / np.sqrt(values.size))
    return mean, half


def evaluate_run(segs, gts, images, image_ids=None):
    """Score each (segmentation, ground truth, image) triple and aggregate.

    N is the count of distinct labels in the segmentation map. Aggregates
    are the mean and the 1.96 * stderr half-width per metric; a single
    image gets half-width 0.
    """
    if not (len(segs) == len(gts) == len(images)):
        raise ValueError("segs, gts and images must have equal length")
    if len(segs) == 0:
        raise ValueError("nothing to evaluate")
    if image_ids is None:
        image_ids = [str(i) for i in range(len(segs))]

    rows = []
    for image_id, seg, gt, image in zip(image_ids, segs, gts, images):
        labels = _labels_of(seg)
        n = int(np.unique(labels[labels != UNLABELED]).size)
        rows.append(
            ImageEval(
                image_id=str(image_id),
                num_superpixels=n,
                rec=boundary_recall(seg, gt),
                ue=undersegmentation_error(seg, gt),
                ev=explained_variation(seg, image),
            )
        )

    mean, ci95 = {}, {}
    for key in ("num_superpixels", "rec", "ue", "ev"):
        mean[key], ci95[key] = _aggregate([getattr(r, key) for r in rows])
    return EvalReport(rows=tuple(rows), mean=mean, ci95=ci95)
