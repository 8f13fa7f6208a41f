"""Exponential time differencing on the Neumann Laplacian.

The stabilized linear operator ``L_h = S I - eps D_h`` is diagonal in the
orthonormal type-II cosine basis, so the matrix exponential and the phi
functions reduce to per-mode scalars.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft

from .model import nonlinear_term

SERIES_SWITCH = 1e-4
SERIES_TERMS = 6

AUTO = "auto"
TABLE = "table"
FIXED = "fixed"


def laplacian_eigenvalues(m1, m2, h):
    """Eigenvalues of ``D_h`` indexed by cosine mode ``(i, j)``; all <= 0."""
    if m1 < 1 or m2 < 1 or not h > 0:
        raise ValueError("grid sizes must be >= 1 and h > 0")
    di = 2.0 * np.cos(np.pi * np.arange(m1) / m1) - 2.0
    dj = 2.0 * np.cos(np.pi * np.arange(m2) / m2) - 2.0
    return (di[:, None] + dj[None, :]) / (h * h)


def dct2(values):
    return fft.dctn(values, type=2, norm="ortho")


def idct2(coeffs):
    return fft.idctn(coeffs, type=2, norm="ortho")


def _phi_series(z):
    # phi0 = sum (-z)^n/(n+1)!, phi1 = sum (-z)^n/(n+2)!
    phi0 = np.zeros_like(z)
    phi1 = np.zeros_like(z)
    term = np.ones_like(z)
    for n in range(SERIES_TERMS):
        phi0 += term / math.factorial(n + 1)
        phi1 += term / math.factorial(n + 2)
        term = term * -z
    return phi0, phi1


def phi_factors(z):
    """Return ``(exp(-z), phi0(z), phi1(z))`` for ``z > 0``.

    ``phi0(z) = (1 - e^-z) / z`` and ``phi1(z) = (z - 1 + e^-z) / z^2``.
    Below ``SERIES_SWITCH`` both come from truncated Taylor series.
    Accepts scalars or arrays.
    """
    z_arr = np.asarray(z, dtype=np.float64)
    if np.any(~(z_arr > 0)):
        raise ValueError("phi functions need z > 0")
    small = z_arr < SERIES_SWITCH
    em1 = np.expm1(-z_arr)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi0 = np.where(small, 0.0, -em1 / z_arr)
        phi1 = np.where(small, 0.0, (z_arr + em1) / (z_arr * z_arr))
    if np.any(small):
        s0, s1 = _phi_series(z_arr[small])
        phi0[small] = s0
        phi1[small] = s1
    decay = np.exp(-z_arr)
    if np.ndim(z) == 0:
        return float(decay), float(phi0), float(phi1)
    return decay, phi0, phi1


@dataclass(frozen=True)
class SpectralOperator:
    """Per-mode factors of ``exp(-L_h dt)``, ``dt phi0(L_h dt)``, ``dt phi1(L_h dt)``."""

    eigenvalues: np.ndarray = field(repr=False)
    stabilizer: float
    eps: float
    dt: float
    decay: np.ndarray = field(repr=False)
    p0: np.ndarray = field(repr=False)
    p1: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, shape, h, eps, stabilizer, dt, eigenvalues=None):
        if not stabilizer > 0:
            raise ValueError(f"stabilizer must be positive, got {stabilizer}")
        if eigenvalues is None:
            eigenvalues = laplacian_eigenvalues(shape[0], shape[1], h)
        ell = stabilizer - eps * eigenvalues
        decay, phi0, phi1 = phi_factors(ell * dt)
        return cls(eigenvalues, float(stabilizer), eps, dt, decay, dt * phi0, dt * phi1)

    @property
    def shape(self):
        return self.eigenvalues.shape


def etd1_step(u, n_u, op):
    """``U+ = exp(-L dt) U + dt phi0(L dt) N``."""
    return idct2(op.decay * dct2(u) + op.p0 * dct2(n_u))


def etdrk2_step(u, n_fn, op):
    """Predictor-corrector step; ``n_fn`` evaluates the nonlinear term at a field."""
    u_hat = dct2(u)
    n0_hat = dct2(n_fn(u))
    base = op.decay * u_hat + op.p0 * n0_hat
    predicted = idct2(base)
    n1_hat = dct2(n_fn(predicted))
    return idct2(base + op.p1 * (n1_hat - n0_hat))


def step(u, n_fn, op, scheme):
    if scheme == "etd1":
        return etd1_step(u, n_fn(u), op)
    if scheme == "etdrk2":
        return etdrk2_step(u, n_fn, op)
    raise ValueError(f"unknown scheme {scheme!r}")


@dataclass(frozen=True)
class StabilizerPolicy:
    """How to pick ``S``.

    ``auto`` bounds the derivative of the nonlinearity, ``table`` uses
    ``multiplier * mu * eps1``, ``fixed`` uses ``value``.
    """

    mode: str = AUTO
    value: float = 0.0
    multiplier: float = 10.0

    def __post_init__(self):
        if self.mode not in (AUTO, TABLE, FIXED):
            raise ValueError(f"unknown stabilizer mode {self.mode!r}")


def derivative_bound(e1, e2, params):
    """``(G1, G2)`` with ``G1 + G2`` bounding the derivative of ``S U - N(U)``.

    ``G1 = pi^2 / (2 eps) + 1`` covers the double well. The fitting part
    ``mu delta'(U) (lambda1 e1 - lambda2 e2)`` peaks in ``|U|`` at
    ``U = eps1 / sqrt(3)``, where ``|delta'| = 3 sqrt(3) / (8 pi eps1^2)``.
    """
    g1 = math.pi ** 2 / (2.0 * params.eps) + 1.0
    spread = float(np.max(np.abs(params.lambda1 * e1 - params.lambda2 * e2))) if np.size(e1) else 0.0
    g2 = 3.0 * math.sqrt(3.0) * params.mu / (8.0 * math.pi * params.eps1 ** 2) * spread
    return g1, g2


def compute_stabilizer(e1, e2, params, policy=StabilizerPolicy()):
    if policy.mode == AUTO:
        g1, g2 = derivative_bound(e1, e2, params)
        s = 0.5 * (g1 + g2) + 1.0
    elif policy.mode == TABLE:
        s = policy.multiplier * params.mu * params.eps1
    else:
        s = policy.value
    if not (math.isfinite(s) and s > 0):
        raise ValueError(f"stabilizer must be positive, got {s} ({policy.mode} mode)")
    return float(s)


def frozen_nonlinearity(e1, e2, stabilizer, params):
    """``N`` as a function of ``U`` alone, with the forces held fixed."""
    def n_fn(u):
        return nonlinear_term(u, e1, e2, stabilizer, params)
    return n_fn

