"""Gabor filter bank responses.

Each kernel is a cosine carrier under an anisotropic Gaussian envelope:

    g(x, y) = exp(-(x'^2 + gamma^2 y'^2) / (2 sigma^2)) * cos(2 pi f x')

with (x', y') the coordinates rotated by the kernel orientation.  The feature
vector holds the mean and standard deviation of the response magnitude for
every (scale, orientation) pair; kernels are zero-mean adjusted before
filtering so a constant image responds with (0, 0).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.signal import fftconvolve

from ..core import GrayImage, gray_array
from ..errors import InvalidParameters

DEFAULT_SCALES = ((2.0, 0.25), (4.0, 0.125))  # (sigma, frequency) pairs


def gabor_kernel(
    sigma: float,
    frequency: float,
    theta: float = 0.0,
    gamma: float = 0.5,
    size: int | None = None,
) -> np.ndarray:
    """Kernel sampled on an odd square grid covering +-3 sigma."""
    if sigma <= 0 or frequency <= 0 or gamma <= 0:
        raise InvalidParameters("sigma, frequency, gamma must all be positive")
    if size is None:
        size = 2 * math.ceil(3.0 * sigma) + 1
    if size % 2 == 0:
        raise InvalidParameters(f"kernel size must be odd, got {size}")
    half = size // 2
    y, x = np.mgrid[-half : half + 1, -half : half + 1].astype(np.float64)
    xr = x * math.cos(theta) + y * math.sin(theta)
    yr = -x * math.sin(theta) + y * math.cos(theta)
    envelope = np.exp(-(xr**2 + (gamma * yr) ** 2) / (2.0 * sigma**2))
    return envelope * np.cos(2.0 * np.pi * frequency * xr)


def gabor_bank(
    orientations: int = 4,
    scales: tuple[tuple[float, float], ...] = DEFAULT_SCALES,
    gamma: float = 0.5,
) -> list[tuple[str, np.ndarray]]:
    """(name, kernel) pairs: scales outer, orientations inner."""
    if orientations < 1:
        raise InvalidParameters(f"orientations must be >= 1, got {orientations}")
    bank = []
    for sigma, freq in scales:
        for o in range(orientations):
            theta = np.pi * o / orientations
            name = f"s{sigma:g}_o{int(round(math.degrees(theta))):03d}"
            bank.append((name, gabor_kernel(sigma, freq, theta, gamma)))
    return bank


def gabor_features(
    gray: GrayImage, bank: list[tuple[str, np.ndarray]] | None = None
) -> np.ndarray:
    """[mean, std] of |response| per kernel, concatenated in bank order.

    The image is edge-replicated by the kernel half-width before filtering;
    zero padding would let a constant image leak border response even though
    the zero-mean kernel cancels it everywhere else.
    """
    if bank is None:
        bank = gabor_bank()
    v = gray_array(gray).astype(np.float64)
    out = np.empty(2 * len(bank))
    for i, (_, kernel) in enumerate(bank):
        km = kernel - kernel.mean()
        half = kernel.shape[0] // 2
        padded = np.pad(v, half, mode="edge")
        resp = fftconvolve(padded, km, mode="valid")
        mag = np.abs(resp)
        out[2 * i] = mag.mean()
        out[2 * i + 1] = mag.std()
    return out
