"""Bottom-up saliency from RGB: opponent channels, multi-scale
center-surround contrast, arithmetic-mean fusion.

The map is computed at full resolution with octave-scaled Gaussian sigmas,
takes absolute difference-of-Gaussians as contrast, and min-max normalizes
the fused result. A constant input yields an identically zero map, so the
output has no spurious structure to cluster on.
"""

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

_TRUNCATE = 4.0  # Gaussian kernel cutoff, in sigmas


@dataclass(frozen=True)
class SaliencyParams:
    num_octaves: int = 4
    center_sigma: float = 2.0
    surround_ratio: float = 5.0

    def __post_init__(self):
        if self.num_octaves < 1:
            raise ValueError("num_octaves must be >= 1")
        if self.center_sigma <= 0:
            raise ValueError("center_sigma must be positive")
        if self.surround_ratio <= 1:
            raise ValueError("surround_ratio must be > 1")


def _as_rgb_array(cloud_or_image):
    rgb = getattr(cloud_or_image, "rgb", cloud_or_image)
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.dtype != np.uint8:
        raise ValueError("expected an 8-bit RGB image of shape (H, W, 3)")
    return rgb


def to_opponent_channels(cloud_or_image):
    """Split RGB into intensity, red-green and blue-yellow channels.

    Each channel is affinely rescaled to [0, 1]: I/255, (R-G+255)/510,
    (B-(R+G)/2+255)/510.
    """
    rgb = _as_rgb_array(cloud_or_image).astype(np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    intensity = (r + g + b) / 3.0 / 255.0
    red_green = (r - g + 255.0) / 510.0
    blue_yellow = (b - (r + g) / 2.0 + 255.0) / 510.0
    return intensity, red_green, blue_yellow


def _kernel_radius(sigma):
    return int(_TRUNCATE * sigma + 0.5)


def center_surround_contrast(channel, octave, params):
    """Absolute DoG response |G(sigma_c)*ch - G(sigma_s)*ch| at one octave.

    sigma_c = center_sigma * 2**octave, sigma_s = surround_ratio * sigma_c;
    borders are reflected. Raises if the surround kernel no longer fits the
    image.
    """
    channel = np.asarray(channel, dtype=np.float64)
    sigma_c = params.center_sigma * 2.0**octave
    sigma_s = params.surround_ratio * sigma_c
    if _kernel_radius(sigma_s) >= min(channel.shape):
        raise ValueError(
            f"octave {octave}: surround kernel radius {_kernel_radius(sigma_s)} "
            f"exceeds image extent {channel.shape[1]}x{channel.shape[0]}"
        )
    center = gaussian_filter(channel, sigma_c, mode="reflect", truncate=_TRUNCATE)
    surround = gaussian_filter(channel, sigma_s, mode="reflect", truncate=_TRUNCATE)
    return np.abs(center - surround)


def compute_saliency(cloud_or_image, params=SaliencyParams()):
    """Fuse per-channel, per-octave contrasts into a [0,1] saliency map.

    Fusion is the arithmetic mean over all 3*num_octaves contrast maps,
    followed by min-max normalization; a constant fused map maps to zeros.
    """
    channels = to_opponent_channels(cloud_or_image)
    fused = np.zeros_like(channels[0])
    for channel in channels:
        for octave in range(params.num_octaves):
            fused += center_surround_contrast(channel, octave, params)
    fused /= 3.0 * params.num_octaves
    lo, hi = fused.min(), fused.max()
    if hi - lo <= 0.0:
        return np.zeros_like(fused)
    return (fused - lo) / (hi - lo)
