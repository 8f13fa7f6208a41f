"""Raster input/output and grid conventions.

Images are held as float64 arrays of shape ``(M1, M2)`` (rows, columns) with
intensities in [0, 1]. Whenever a field has to be viewed as a vector, pixels
are ordered column by column: the 1-based pixel ``(i, j)`` lands at position
``k = i + M1 * (j - 1)``, which is numpy's Fortran order.
"""

from pathlib import Path

import numpy as np
from PIL import Image

MIN_SIDE = 3


class ImageFormatError(ValueError):
    """Raised for images that cannot be used as segmentation input."""


def check_gray(data):
    """Validate a normalized grayscale array and return it as float64."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ImageFormatError(f"expected a 2-D grayscale array, got shape {data.shape}")
    if min(data.shape) < MIN_SIDE:
        raise ImageFormatError(
            f"image is {data.shape[0]}x{data.shape[1]}; both sides must be >= {MIN_SIDE}")
    if not np.all(np.isfinite(data)):
        raise ImageFormatError("image contains non-finite values")
    if data.min() < 0.0 or data.max() > 1.0:
        raise ImageFormatError("intensities must lie in [0, 1]")
    return data


def load_gray(path):
    """Read an 8-bit grayscale PGM or PNG and scale it to [0, 1].

    Color and 16-bit images are rejected rather than converted.
    """
    path = Path(path)
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            raw = np.asarray(im)
    except (OSError, SyntaxError) as exc:
        raise ImageFormatError(f"cannot read {path}: {exc}") from exc
    if mode == "1":
        raw = raw.astype(np.uint8) * 255
    elif mode != "L":
        raise ImageFormatError(
            f"{path}: unsupported pixel format {mode!r}; need 8-bit grayscale")
    return check_gray(raw.astype(np.float64) / 255.0)


def to_uint8(data):
    """Map [0, 1] intensities to 8-bit values by rounding."""
    return np.clip(np.rint(np.asarray(data, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


def write_gray(data, path):
    """Write a [0, 1] field as an 8-bit grayscale image (format from suffix)."""
    _save(Image.fromarray(to_uint8(data)), path)


def check_mask(mask):
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ImageFormatError(f"mask must be 2-D, got shape {mask.shape}")
    if mask.dtype != bool and not np.all((mask == 0) | (mask == 1)):
        raise ImageFormatError("mask values must be 0 or 1")
    return mask.astype(bool)


def write_mask(mask, path):
    """Write a binary mask as 8-bit PGM: object 255, background 0."""
    mask = check_mask(mask)
    _save(Image.fromarray(np.where(mask, 255, 0).astype(np.uint8)), path)


def load_mask(path):
    """Inverse of :func:`write_mask`: threshold the loaded image at 0.5."""
    return load_gray(path) > 0.5


def contour_pixels(mask):
    """Pixels having at least one 4-neighbor with the opposite label."""
    mask = check_mask(mask)
    edge = np.zeros(mask.shape, dtype=bool)
    diff_rows = mask[1:, :] != mask[:-1, :]
    diff_cols = mask[:, 1:] != mask[:, :-1]
    edge[1:, :] |= diff_rows
    edge[:-1, :] |= diff_rows
    edge[:, 1:] |= diff_cols
    edge[:, :-1] |= diff_cols
    return edge


def overlay_contour(image, mask, path):
    """Write an RGB rendering of ``image`` with the mask contour in pure red."""
    image = np.asarray(image, dtype=np.float64)
    mask = check_mask(mask)
    if image.shape != mask.shape:
        raise ImageFormatError(
            f"image shape {image.shape} does not match mask shape {mask.shape}")
    rgb = np.repeat(to_uint8(image)[:, :, None], 3, axis=2)
    rgb[contour_pixels(mask)] = (255, 0, 0)
    _save(Image.fromarray(rgb), path)
    return rgb


def flatten(field):
    """Column-major vector view of a grid field."""
    return np.asarray(field).ravel(order="F")


def unflatten(vector, shape):
    return np.asarray(vector).reshape(shape, order="F")


def flat_index(i, j, m1):
    """1-based column-wise index of the 1-based pixel ``(i, j)``."""
    return i + m1 * (j - 1)


def _save(im, path):
    path = Path(path)
    fmt = "PNG" if path.suffix.lower() == ".png" else "PPM"
    im.save(path, format=fmt)
