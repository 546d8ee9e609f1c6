"""The multi-scale contrast is checked against a from-scratch oracle:
explicit sampled Gaussian kernels, symmetric edge padding, and direct
separable correlation."""

import numpy as np
import pytest

from ssvox.saliency import (
    SaliencyParams,
    center_surround_contrast,
    compute_saliency,
    to_opponent_channels,
)

from conftest import make_cloud


def gaussian_blur_oracle(image, sigma):
    """Separable Gaussian with radius int(4*sigma + 0.5), edges mirrored
    including the border sample."""
    radius = int(4.0 * sigma + 0.5)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (x / sigma) ** 2)
    kernel /= kernel.sum()

    def convolve_rows(arr):
        padded = np.pad(arr, ((0, 0), (radius, radius)), mode="symmetric")
        out = np.zeros_like(arr, dtype=np.float64)
        for j in range(arr.shape[1]):
            out[:, j] = padded[:, j : j + 2 * radius + 1] @ kernel
        return out

    return convolve_rows(convolve_rows(np.asarray(image, dtype=np.float64)).T).T


def saliency_oracle(rgb, params):
    maps = []
    for channel in to_opponent_channels(rgb):
        for octave in range(params.num_octaves):
            sigma_c = params.center_sigma * 2.0**octave
            sigma_s = params.surround_ratio * sigma_c
            blur_c = gaussian_blur_oracle(channel, sigma_c)
            blur_s = gaussian_blur_oracle(channel, sigma_s)
            maps.append(np.abs(blur_c - blur_s))
    fused = np.mean(maps, axis=0)
    lo, hi = fused.min(), fused.max()
    if hi - lo <= 0:
        return np.zeros_like(fused)
    return (fused - lo) / (hi - lo)


def test_contrast_matches_direct_convolution():
    rng = np.random.default_rng(11)
    channel = rng.uniform(0.0, 1.0, size=(24, 30))
    params = SaliencyParams(num_octaves=1, center_sigma=1.0, surround_ratio=3.0)
    got = center_surround_contrast(channel, 0, params)
    expected = np.abs(
        gaussian_blur_oracle(channel, 1.0) - gaussian_blur_oracle(channel, 3.0)
    )
    assert np.allclose(got, expected, atol=1e-12)


def test_full_map_matches_oracle():
    rng = np.random.default_rng(12)
    rgb = rng.integers(0, 256, size=(32, 28, 3), dtype=np.uint8)
    params = SaliencyParams(num_octaves=2, center_sigma=1.0, surround_ratio=3.0)
    got = compute_saliency(rgb, params)
    assert np.allclose(got, saliency_oracle(rgb, params), atol=1e-10)
    assert got.min() == 0.0 and got.max() == 1.0


def test_constant_image_is_all_zero():
    rgb = np.full((44, 48, 3), 77, dtype=np.uint8)
    saliency = compute_saliency(rgb, SaliencyParams(num_octaves=1))
    assert saliency.shape == (44, 48)
    assert np.all(saliency == 0.0)


def test_translation_equivariance_away_from_borders():
    params = SaliencyParams(num_octaves=1, center_sigma=1.0, surround_ratio=3.0)
    base = np.full((64, 64, 3), 90, dtype=np.uint8)
    first, second = base.copy(), base.copy()
    first[28:32, 28:32] = (250, 60, 40)
    dy, dx = 6, -4
    second[28 + dy : 32 + dy, 28 + dx : 32 + dx] = (250, 60, 40)
    a = compute_saliency(first, params)
    b = compute_saliency(second, params)
    assert np.allclose(np.roll(a, (dy, dx), axis=(0, 1)), b, atol=1e-12)


def test_kernel_must_fit_image():
    rgb = np.random.default_rng(13).integers(0, 256, (16, 16, 3), dtype=np.uint8)
    with pytest.raises(ValueError, match="kernel radius"):
        compute_saliency(rgb, SaliencyParams())  # default surround needs > 40 px
    # one octave with a small surround fits
    small = SaliencyParams(num_octaves=1, center_sigma=1.0, surround_ratio=2.0)
    assert compute_saliency(rgb, small).shape == (16, 16)


def test_opponent_channel_definitions():
    rgb = np.zeros((1, 3, 3), dtype=np.uint8)
    rgb[0, 0] = (255, 0, 0)
    rgb[0, 1] = (0, 255, 0)
    rgb[0, 2] = (0, 0, 255)
    intensity, red_green, blue_yellow = to_opponent_channels(rgb)
    assert np.allclose(intensity[0], [1 / 3, 1 / 3, 1 / 3])
    assert np.allclose(red_green[0], [1.0, 0.0, 0.5])
    assert np.allclose(blue_yellow[0], [127.5 / 510, 127.5 / 510, 1.0])
    for channel in (intensity, red_green, blue_yellow):
        assert channel.min() >= 0.0 and channel.max() <= 1.0


def test_accepts_organized_cloud():
    rng = np.random.default_rng(14)
    depth = rng.integers(500, 2000, size=(24, 24)).astype(np.uint16)
    rgb = rng.integers(0, 256, size=(24, 24, 3), dtype=np.uint8)
    cloud = make_cloud(depth, rgb)
    params = SaliencyParams(num_octaves=1, center_sigma=1.0, surround_ratio=3.0)
    assert np.array_equal(
        compute_saliency(cloud, params), compute_saliency(rgb, params)
    )


def test_param_validation():
    with pytest.raises(ValueError):
        SaliencyParams(num_octaves=0)
    with pytest.raises(ValueError):
        SaliencyParams(center_sigma=0.0)
    with pytest.raises(ValueError):
        SaliencyParams(surround_ratio=1.0)


def test_rejects_non_rgb_input():
    with pytest.raises(ValueError):
        compute_saliency(np.zeros((4, 4), dtype=np.uint8))
    with pytest.raises(ValueError):
        compute_saliency(np.zeros((4, 4, 3), dtype=np.float64))
