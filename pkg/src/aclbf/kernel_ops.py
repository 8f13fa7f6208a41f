"""Truncated Gaussian kernels and zero-padded convolution."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import correlate1d


@dataclass(frozen=True)
class GaussianKernel:
    """Gaussian ``exp(-|x|^2 / (2 sigma^2)) / (2 pi sigma^2)`` sampled on a square window.

    The truncated window is not renormalized; callers that need a unit-mass
    average divide by :func:`kernel_mass` instead.
    """

    sigma: float
    radius: int
    factor: np.ndarray = field(repr=False)

    @property
    def weights(self):
        return np.outer(self.factor, self.factor)

    @property
    def size(self):
        return 2 * self.radius + 1


def build_kernel(sigma, radius=None):
    """Build the kernel for ``sigma``; the radius defaults to ``ceil(4 sigma)``."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if radius is None:
        radius = max(1, math.ceil(4.0 * sigma))
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    # 1/(2 pi sigma^2) split evenly between the two separable factors
    factor = np.exp(-x * x / (2.0 * sigma * sigma)) / (math.sqrt(2.0 * math.pi) * sigma)
    factor.setflags(write=False)
    return GaussianKernel(float(sigma), int(radius), factor)


def convolve(values, kernel):
    """Zero-padded convolution of a 2-D field with ``kernel``.

    Row pass then column pass; the kernel is symmetric, so correlation and
    convolution coincide.
    """
    values = np.asarray(values, dtype=np.float64)
    out = correlate1d(values, kernel.factor, axis=0, mode="constant", cval=0.0)
    return correlate1d(out, kernel.factor, axis=1, mode="constant", cval=0.0)


def kernel_mass(kernel, shape):
    """``K * 1_Omega``: the in-domain kernel weight seen by each pixel."""
    return convolve(np.ones(shape), kernel)
