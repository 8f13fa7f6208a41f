"""Terms of the Allen-Cahn local binary fitting energy.

Fields are 2-D arrays on the image grid. The double-well potential is
``W(u) = sin^2(pi (u + 1) / 2)``, with wells at every odd integer.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from .kernel_ops import build_kernel, convolve, kernel_mass

DENOM_GUARD = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Model and discretization parameters.

    ``eps`` is the diffuse-interface width, ``eps1`` the Heaviside smoothing
    width, ``mu`` the fitting strength, ``lambda1``/``lambda2`` the inside and
    outside weights, ``sigma`` the Gaussian scale in pixels, ``h`` the pixel
    spacing and ``dt`` the time step.
    """

    mu: float = 5e4
    lambda1: float = 1.0
    lambda2: float = 1.0
    sigma: float = 3.0
    eps: float = 0.5
    eps1: float = 0.5
    h: float = 0.01
    dt: float = 0.1

    def __post_init__(self):
        for name in ("sigma", "eps", "eps1", "h", "dt"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive, got {value}")
        for name in ("mu", "lambda1", "lambda2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be nonnegative, got {value}")

    def to_dict(self):
        return asdict(self)


def heaviside(x, eps1):
    return 0.5 * (1.0 + (2.0 / np.pi) * np.arctan(x / eps1))


def delta(x, eps1):
    return (eps1 / np.pi) / (eps1 * eps1 + x * x)


def delta_prime(x, eps1):
    return -(2.0 * eps1 / np.pi) * x / (eps1 * eps1 + x * x) ** 2


def well(u):
    return np.sin(0.5 * np.pi * (u + 1.0)) ** 2


def well_prime(u):
    return 0.5 * np.pi * np.sin(np.pi * (u + 1.0))


def well_second(u):
    return 0.5 * np.pi ** 2 * np.cos(np.pi * (u + 1.0))


@dataclass
class FitPair:
    """Local fits ``f1``/``f2``, their forces ``e1``/``e2`` and guard counts."""

    f1: np.ndarray
    f2: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    guarded: int = 0


class FitContext:
    """Image-dependent convolutions shared by every fitting update.

    ``K * I`` and ``K * 1`` never change during a run, so they are computed
    once here.
    """

    def __init__(self, image, params):
        self.image = np.asarray(image, dtype=np.float64)
        self.params = params
        self.kernel = build_kernel(params.sigma)
        self.mass = kernel_mass(self.kernel, self.image.shape)
        self.k_image = convolve(self.image, self.kernel)

    def fit(self, u):
        """Return ``(f1, f2, n_guarded)`` for the phase field ``u``."""
        hu = heaviside(u, self.params.eps1)
        k_hi = convolve(hu * self.image, self.kernel)
        k_h = convolve(hu, self.kernel)
        # K*((1-H) I) and K*(1-H) by linearity
        k_oi = self.k_image - k_hi
        k_o = self.mass - k_h
        low1 = k_h < DENOM_GUARD
        low2 = k_o < DENOM_GUARD
        f1 = k_hi / np.maximum(k_h, DENOM_GUARD)
        f2 = k_oi / np.maximum(k_o, DENOM_GUARD)
        return f1, f2, int(low1.sum() + low2.sum())

    def forces(self, f1, f2):
        return force_term(self.image, f1, self.kernel, self.mass), \
            force_term(self.image, f2, self.kernel, self.mass)

    def update(self, u):
        f1, f2, guarded = self.fit(u)
        e1, e2 = self.forces(f1, f2)
        return FitPair(f1, f2, e1, e2, guarded)


def fit_functions(image, u, params):
    f1, f2, _ = FitContext(image, params).fit(u)
    return f1, f2


def force_term(image, f, kernel, mass=None):
    """``e(x) = (K*f^2)(x) - 2 I(x) (K*f)(x) + I(x)^2 (K*1)(x)``, clamped at 0."""
    if mass is None:
        mass = kernel_mass(kernel, image.shape)
    e = convolve(f * f, kernel) - 2.0 * image * convolve(f, kernel) + image * image * mass
    return np.maximum(e, 0.0)


def force_fields(image, f1, f2, params):
    kernel = build_kernel(params.sigma)
    mass = kernel_mass(kernel, np.shape(image))
    image = np.asarray(image, dtype=np.float64)
    return force_term(image, f1, kernel, mass), force_term(image, f2, kernel, mass)


def fitting_drive(u, e1, e2, params):
    """``mu * delta(u) * (lambda1 e1 - lambda2 e2)``: the fitting part of the gradient."""
    return params.mu * delta(u, params.eps1) * (params.lambda1 * e1 - params.lambda2 * e2)


def nonlinear_term(u, e1, e2, stabilizer, params):
    """``N(U) = S U - W'(U) / eps - mu delta(U) (lambda1 e1 - lambda2 e2)``."""
    return stabilizer * u - well_prime(u) / params.eps - fitting_drive(u, e1, e2, params)


def gradient_energy(u, h):
    """``-(1/2) U^T D_h U`` for the Neumann Laplacian, via squared differences."""
    du_rows = np.diff(u, axis=0)
    du_cols = np.diff(u, axis=1)
    return 0.5 * (np.sum(du_rows * du_rows) + np.sum(du_cols * du_cols)) / (h * h)


def energy_from_forces(u, e1, e2, params):
    """Discrete energy with precomputed forces ``e1``, ``e2``."""
    hu = heaviside(u, params.eps1)
    bulk = np.sum(well(u)) / params.eps
    fit = params.mu * np.sum(params.lambda1 * hu * e1 + params.lambda2 * (1.0 - hu) * e2)
    return float(bulk + fit + params.eps * gradient_energy(u, params.h))


def discrete_energy(u, image, f1, f2, params):
    """Discrete ACLBF energy of ``u`` for the local fits ``f1``, ``f2``.

    Pixel sums carry no area weight, and the gradient term uses the same
    Neumann Laplacian as the time stepper, so the value is the Lyapunov
    functional of the scheme.
    """
    e1, e2 = force_fields(image, f1, f2, params)
    return energy_from_forces(u, e1, e2, params)
