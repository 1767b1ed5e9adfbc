"""Multi-coil Cartesian MR forward model and synthetic data generation.

The encoding operator maps a complex image (H, W) to multi-coil k-space
(C, H, W): per coil, weight by the sensitivity map, take the centered
orthonormal 2-D FFT, and zero out unsampled phase-encode columns.  Coil
maps are analytic and normalized so that sum_c |S_c|^2 == 1 at every
pixel, which makes the adjoint a left inverse under full sampling.

Undersampling is 1-D Cartesian along the width axis: a mask is a set of
sampled columns applied to every row (see `sampling`).
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter

from .diffcore import fft2c, ifft2c
from .sampling import SamplingMask


def apply_forward(image: np.ndarray, coils: np.ndarray, mask: SamplingMask) -> np.ndarray:
    """Encoding operator: image (H, W) -> masked multi-coil k-space (C, H, W)."""
    if image.shape != coils.shape[1:]:
        raise ValueError(f"apply_forward: image {image.shape} vs coils {coils.shape}")
    if mask.width != image.shape[1]:
        raise ValueError(f"apply_forward: mask width {mask.width} vs image {image.shape}")
    sel = mask.to_bool_array()
    return fft2c(coils * image[None, :, :]) * sel[None, None, :]


def apply_adjoint(kspace: np.ndarray, coils: np.ndarray, mask: SamplingMask) -> np.ndarray:
    """Adjoint of `apply_forward`: (C, H, W) k-space -> (H, W) image."""
    if kspace.shape != coils.shape:
        raise ValueError(f"apply_adjoint: k-space {kspace.shape} vs coils {coils.shape}")
    if mask.width != kspace.shape[2]:
        raise ValueError(f"apply_adjoint: mask width {mask.width} vs k-space {kspace.shape}")
    sel = mask.to_bool_array()
    return np.sum(np.conj(coils) * ifft2c(kspace * sel[None, None, :]), axis=0)


def normal_operator(image: np.ndarray, coils: np.ndarray, mask: SamplingMask) -> np.ndarray:
    """Adjoint-forward composition used by every normal-equations solve."""
    return apply_adjoint(apply_forward(image, coils, mask), coils, mask)


def make_phantom(height: int, width: int, seed: int) -> np.ndarray:
    """Random smooth complex phantom, deterministic in `seed`.

    Superposition of 5..12 ellipses with intensities in [0.2, 1.0], lightly
    blurred, with a low-order polynomial phase.  The global phase is chosen
    so the peak-magnitude pixel is real, making max |image| exactly 1.0.
    """
    if height < 16 or width < 16:
        raise ValueError(f"make_phantom: dimensions must be >= 16, got {height}x{width}")
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    canvas = np.zeros((height, width))
    scale = min(height, width)
    for _ in range(int(rng.integers(5, 13))):
        cy = rng.uniform(0.2, 0.8) * height
        cx = rng.uniform(0.2, 0.8) * width
        a = rng.uniform(0.10, 0.35) * scale
        b = rng.uniform(0.10, 0.35) * scale
        theta = rng.uniform(0.0, np.pi)
        amp = rng.uniform(0.2, 1.0)
        u = (yy - cy) * np.cos(theta) + (xx - cx) * np.sin(theta)
        v = -(yy - cy) * np.sin(theta) + (xx - cx) * np.cos(theta)
        canvas += amp * (((u / a) ** 2 + (v / b) ** 2) <= 1.0)
    mag = gaussian_filter(canvas, sigma=1.0)

    un = 2.0 * yy / (height - 1) - 1.0
    vn = 2.0 * xx / (width - 1) - 1.0
    coef = rng.uniform(-1.5, 1.5, size=6)
    phase = (coef[0] + coef[1] * un + coef[2] * vn
             + coef[3] * un * un + coef[4] * un * vn + coef[5] * vn * vn)

    peak = np.unravel_index(np.argmax(mag), mag.shape)
    mag = mag / mag[peak]
    phase = phase - phase[peak]
    return mag * (np.cos(phase) + 1j * np.sin(phase))


def make_coil_maps(n_coils: int, height: int, width: int, seed: int) -> np.ndarray:
    """Smooth analytic coil sensitivities (C, H, W) with sum_c |S_c|^2 == 1.

    Gaussian magnitude bumps centered at distinct positions around the
    image border, each with a linear phase ramp, normalized per pixel.
    """
    if n_coils < 1:
        raise ValueError(f"make_coil_maps: need at least one coil, got {n_coils}")
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    cy0, cx0 = (height - 1) / 2.0, (width - 1) / 2.0
    radius = 0.55 * min(height, width)
    maps = np.empty((n_coils, height, width), dtype=np.complex128)
    for c in range(n_coils):
        ang = 2.0 * np.pi * (c + rng.uniform(-0.1, 0.1)) / n_coils
        cy = cy0 + radius * np.sin(ang)
        cx = cx0 + radius * np.cos(ang)
        sigma = rng.uniform(0.35, 0.55) * min(height, width)
        bump = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * sigma**2)) + 0.05
        ramp = (rng.uniform(-2.0, 2.0) * (yy - cy0) / height
                + rng.uniform(-2.0, 2.0) * (xx - cx0) / width
                + rng.uniform(0.0, 2.0 * np.pi))
        maps[c] = bump * np.exp(1j * ramp)
    maps /= np.sqrt(np.sum(np.abs(maps) ** 2, axis=0))[None, :, :]
    return maps


def add_noise(kspace: np.ndarray, mask: SamplingMask, sigma: float, seed: int) -> np.ndarray:
    """i.i.d. Gaussian noise on the real/imag parts of sampled entries only."""
    if sigma < 0:
        raise ValueError(f"add_noise: sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return kspace.copy()
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, size=kspace.shape) + 1j * rng.normal(
        0.0, sigma, size=kspace.shape
    )
    sel = mask.to_bool_array()
    return kspace + noise * sel[None, None, :]
