"""Two-phase segmentation with the Allen-Cahn local binary fitting model.

Typical use::

    from aclbf import load_gray, segment, RunConfig
    result = segment(load_gray("cells.pgm"), RunConfig())
    result.mask      # boolean object mask
"""

from .driver import EnergyIncreaseError, IglimParams, NonFiniteFieldError, RunConfig, \
    RunResult, binarize, dice, evolve, segment
from .etd import StabilizerPolicy
from .iglim import NoEdgesError, iglim
from .image_io import ImageFormatError, load_gray, overlay_contour, write_mask
from .model import ModelParams

__all__ = [
    "EnergyIncreaseError", "IglimParams", "ImageFormatError", "ModelParams", "NoEdgesError",
    "NonFiniteFieldError", "RunConfig", "RunResult", "StabilizerPolicy", "binarize", "dice",
    "evolve", "iglim", "load_gray", "overlay_contour", "segment", "write_mask",
]

__version__ = "0.1.0"
