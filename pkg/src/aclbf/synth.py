"""Synthetic test images with known ground truth.

Every generator returns ``(image, truth)``: a [0, 1] image already quantized
to 8-bit levels (so writing and re-reading it is lossless) and a boolean
object mask. Noise variance is given on the 0-255 scale.
"""

import numpy as np


def _finish(clean, noise_var, seed):
    rng = np.random.default_rng(seed)
    noisy = clean
    if noise_var > 0:
        noisy = clean + rng.normal(0.0, np.sqrt(noise_var) / 255.0, size=clean.shape)
    return np.rint(np.clip(noisy, 0.0, 1.0) * 255.0) / 255.0


def _check(size, noise_var, **levels):
    if size < 3:
        raise ValueError("size must be >= 3")
    if noise_var < 0:
        raise ValueError("noise variance must be >= 0")
    for name, value in levels.items():
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {value}")


def disk(size=100, radius=25.0, fg=0.3, bg=0.8, noise_var=0.0, seed=0):
    """Centered disk of intensity ``fg`` on a ``bg`` background."""
    _check(size, noise_var, fg=fg, bg=bg)
    rows, cols = np.mgrid[0:size, 0:size]
    c = (size - 1) / 2.0
    truth = (rows - c) ** 2 + (cols - c) ** 2 <= radius ** 2
    clean = np.where(truth, fg, bg)
    return _finish(clean, noise_var, seed), truth


def ramp_disk(size=100, radius=25.0, fg=0.3, bg=0.8, gradient=0.4, noise_var=0.0, seed=0):
    """Disk under a left-to-right linear illumination ramp of total height ``gradient``.

    Both phases are shifted by the same ramp, so the object stays locally
    darker than its surroundings while the global intensity ranges overlap
    once ``gradient`` exceeds ``|bg - fg|``.
    """
    _check(size, noise_var, fg=fg, bg=bg)
    rows, cols = np.mgrid[0:size, 0:size]
    c = (size - 1) / 2.0
    truth = (rows - c) ** 2 + (cols - c) ** 2 <= radius ** 2
    ramp = gradient * (cols / (size - 1) - 0.5)
    clean = np.clip(np.where(truth, fg, bg) + ramp, 0.0, 1.0)
    return _finish(clean, noise_var, seed), truth


def vessel(size=100, half_width=5.0, amplitude=18.0, fg=0.7, bg=0.3, gradient=0.2,
           noise_var=0.0, seed=0):
    """Bright sinuous band crossing the frame, with a vertical illumination ramp."""
    _check(size, noise_var, fg=fg, bg=bg)
    rows, cols = np.mgrid[0:size, 0:size]
    center = (size - 1) / 2.0 + amplitude * np.sin(2.4 * np.pi * cols / (size - 1))
    truth = np.abs(rows - center) <= half_width
    ramp = gradient * (rows / (size - 1) - 0.5)
    clean = np.clip(np.where(truth, fg, bg) + ramp, 0.0, 1.0)
    return _finish(clean, noise_var, seed), truth


GENERATORS = {"disk": disk, "ramp-disk": ramp_disk, "vessel": vessel}


# Run settings calibrated on these fixtures at unit intensity scale.
SUITE_MODEL = {"mu": 5e4, "lambda1": 1.0, "lambda2": 1.0, "sigma": 3.0,
               "eps": 0.5, "eps1": 0.5, "h": 0.01, "dt": 0.1}
SUITE_INIT = {"lam": 50.0, "k1": 0.01, "k2": 0.01, "passes": 3, "side": "auto"}

SUITE = {
    "disk": (disk, {}),
    "ramp-disk": (ramp_disk, {"gradient": 0.4}),
    "noisy-disk": (disk, {"noise_var": 300.0, "seed": 7}),
    "vessel": (vessel, {}),
}


def suite():
    """The bundled fixtures: ``name -> (image, truth)``."""
    return {name: gen(**kwargs) for name, (gen, kwargs) in SUITE.items()}


def suite_config(scheme="etdrk2", **overrides):
    """Run configuration used for the bundled fixtures."""
    from .driver import IglimParams, RunConfig
    from .model import ModelParams
    return RunConfig(model=ModelParams(**SUITE_MODEL), init=IglimParams(**SUITE_INIT),
                     scheme=scheme, **overrides)
