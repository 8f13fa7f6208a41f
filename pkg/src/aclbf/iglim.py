"""Initial phase field from an intensity-weighted graph Laplacian.

Pipeline: Laplacian values -> signed zero-cross edge sets -> diagonal
connectivity denoising -> region extension -> +/-1 field.
"""

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

# Neighbor offsets (di, dj) in the fixed order k = 1..8:
# up-left, up, up-right, right, down-right, down, down-left, left.
NEIGHBORS = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))

POSITIVE = "positive"
NEGATIVE = "negative"
AUTO = "auto"


class NoEdgesError(RuntimeError):
    """The selected edge set is empty, so no initial contour exists."""

    def __init__(self, detail=""):
        msg = "no edges detected"
        super().__init__(f"{msg}: {detail}" if detail else msg)


def shifted(values, di, dj, fill):
    """``out[i, j] = values[i + di, j + dj]``, with ``fill`` outside the grid."""
    m1, m2 = values.shape
    out = np.full(values.shape, fill, dtype=values.dtype)
    rows_dst = slice(max(0, -di), m1 - max(0, di))
    cols_dst = slice(max(0, -dj), m2 - max(0, dj))
    rows_src = slice(max(0, di), m1 - max(0, -di))
    cols_src = slice(max(0, dj), m2 - max(0, -dj))
    out[rows_dst, cols_dst] = values[rows_src, cols_src]
    return out


def graph_laplacian(image, lam):
    """Inhomogeneous graph Laplacian ``L = sum_k c_k I^k - I``.

    ``c_k`` is proportional to ``exp(lam * (I - I^k)^2)`` and normalized over
    the neighbors that exist, so frame pixels use their 5 or 3 in-grid
    neighbors only. ``lam = 0`` gives the plain 8-neighbor average minus the
    center.
    """
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    image = np.asarray(image, dtype=np.float64)
    neigh = [shifted(image, di, dj, np.nan) for di, dj in NEIGHBORS]
    valid = [~np.isnan(v) for v in neigh]
    expo = [np.where(ok, lam * (image - v) ** 2, -np.inf) for v, ok in zip(neigh, valid)]
    # Shift exponents by their per-pixel max; exp(50) overflows nothing but
    # large lambda would.
    top = np.max(expo, axis=0)
    num = np.zeros_like(image)
    den = np.zeros_like(image)
    flat = np.ones(image.shape, dtype=bool)
    for v, ok, e in zip(neigh, valid, expo):
        w = np.where(ok, np.exp(e - top), 0.0)
        num += w * np.where(ok, v, 0.0)
        den += w
        flat &= ~ok | (v == image)
    # 3 c / 3 - c need not round to 0 on the frame
    return np.where(flat, 0.0, num / den - image)


def laplacian_weights(image, lam):
    """Per-pixel neighbor weights ``c_k`` as an array of shape (8, M1, M2)."""
    image = np.asarray(image, dtype=np.float64)
    neigh = np.stack([shifted(image, di, dj, np.nan) for di, dj in NEIGHBORS])
    ok = ~np.isnan(neigh)
    expo = np.where(ok, lam * (image - neigh) ** 2, -np.inf)
    w = np.where(ok, np.exp(expo - expo.max(axis=0)), 0.0)
    return w / w.sum(axis=0)


def sign_classes(lap, k1, k2):
    """+1 where ``L >= k2``, -1 where ``L <= -k1``, 0 in the dead zone.

    An exact zero is never signed, which keeps the two classes disjoint when
    ``k1 = k2 = 0``.
    """
    lap = np.asarray(lap, dtype=np.float64)
    sign = np.zeros(lap.shape, dtype=np.int8)
    sign[(lap >= k2) & (lap > 0)] = 1
    sign[(lap <= -k1) & (lap < 0)] = -1
    return sign


def classify_zero_cross(lap, k1, k2):
    """Split the zero-cross points of ``lap`` into positive and negative edge sets.

    A signed pixel is a zero-cross point when any of its 8 neighbors carries
    the opposite sign. Returns boolean masks ``(s_pos, s_neg)``.
    """
    if k1 < 0 or k2 < 0:
        raise ValueError("k1 and k2 must be nonnegative")
    sign = sign_classes(lap, k1, k2)
    pos_near = np.zeros(sign.shape, dtype=bool)
    neg_near = np.zeros(sign.shape, dtype=bool)
    for di, dj in NEIGHBORS:
        s = shifted(sign, di, dj, 0)
        pos_near |= s > 0
        neg_near |= s < 0
    return (sign > 0) & neg_near, (sign < 0) & pos_near


def denoise_pass(points):
    """One diagonal-connectivity sweep over an edge set.

    A point survives when its upper-left and lower-right corner triples both
    hold an edge point, or its upper-right and lower-left triples do. All
    tests read the input set; removals do not cascade within a pass.
    """
    points = np.asarray(points, dtype=bool)

    def any_of(*offsets):
        hit = np.zeros(points.shape, dtype=bool)
        for di, dj in offsets:
            hit |= shifted(points, di, dj, False)
        return hit

    up, down, left, right = (-1, 0), (1, 0), (0, -1), (0, 1)
    s1 = any_of((-1, -1), left, up)
    s2 = any_of((-1, 1), right, up)
    s3 = any_of((1, -1), left, down)
    s4 = any_of((1, 1), right, down)
    return points & ((s1 & s4) | (s2 & s3))


def denoise(points, passes):
    for _ in range(passes):
        points = denoise_pass(points)
    return points


def dilate8(points):
    out = np.array(points, dtype=bool)
    for di, dj in NEIGHBORS:
        out |= shifted(points, di, dj, False)
    return out


def extend_and_select(s_pos, s_neg, side):
    """Grow the chosen edge set by its 8-neighbors not in the opposite set."""
    if side == POSITIVE:
        chosen, other = np.asarray(s_pos, bool), np.asarray(s_neg, bool)
    elif side == NEGATIVE:
        chosen, other = np.asarray(s_neg, bool), np.asarray(s_pos, bool)
    else:
        raise ValueError(f"side must be {POSITIVE!r} or {NEGATIVE!r}, got {side!r}")
    if not chosen.any():
        raise NoEdgesError(f"{side} edge set is empty")
    return chosen | (dilate8(chosen) & ~other)


def initial_field(region, shape=None):
    region = np.asarray(region, dtype=bool)
    if shape is not None and region.shape != tuple(shape):
        raise ValueError(f"region shape {region.shape} does not match {tuple(shape)}")
    return np.where(region, 1.0, -1.0)


def choose_side(image, s_pos, s_neg):
    """Pick the edge set whose pixels sit farther from the global mean intensity.

    The object is usually the minority phase, so its inner boundary deviates
    more from the image mean than the outer boundary does.
    """
    if not s_pos.any() and not s_neg.any():
        raise NoEdgesError("both edge sets are empty")
    if not s_neg.any():
        return POSITIVE
    if not s_pos.any():
        return NEGATIVE
    mean = image.mean()
    gap_pos = abs(image[s_pos].mean() - mean)
    gap_neg = abs(image[s_neg].mean() - mean)
    return POSITIVE if gap_pos >= gap_neg else NEGATIVE


@dataclass
class IglimResult:
    laplacian: np.ndarray
    s_pos: np.ndarray
    s_neg: np.ndarray
    side: str
    side_auto: bool
    edges: np.ndarray      # chosen set after denoising
    region: np.ndarray
    u0: np.ndarray

    def diagnostics(self):
        return {
            "n_pos": int(self.s_pos.sum()),
            "n_neg": int(self.s_neg.sum()),
            "side": self.side,
            "side_auto": self.side_auto,
            "n_edges_denoised": int(self.edges.sum()),
            "region_size": int(self.region.sum()),
        }


def iglim(image, lam=50.0, k1=0.01, k2=0.01, passes=1, side=AUTO):
    """Run the full initialization and return every intermediate product.

    Only the chosen edge set is denoised; the opposite set is used raw when
    excluding pixels from the extension.
    """
    image = np.asarray(image, dtype=np.float64)
    if passes < 0:
        raise ValueError("number of denoising passes must be >= 0")
    lap = graph_laplacian(image, lam)
    s_pos, s_neg = classify_zero_cross(lap, k1, k2)
    side_auto = side == AUTO
    if side_auto:
        side = choose_side(image, s_pos, s_neg)
        log.info("edge side chosen automatically: %s (|S_p|=%d, |S_n|=%d)",
                 side, s_pos.sum(), s_neg.sum())
    chosen, other = (s_pos, s_neg) if side == POSITIVE else (s_neg, s_pos)
    if not chosen.any():
        raise NoEdgesError(f"{side} edge set is empty")
    edges = denoise(chosen, passes)
    if not edges.any():
        raise NoEdgesError(f"denoising removed every {side} edge point")
    pos, neg = (edges, other) if side == POSITIVE else (other, edges)
    region = extend_and_select(pos, neg, side)
    return IglimResult(lap, s_pos, s_neg, side, side_auto, edges, region,
                       initial_field(region))
