"""Alternating minimization: refit, rebuild forces and stabilizer, take one ETD step."""

import csv
import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import iglim as _iglim
from .etd import SpectralOperator, StabilizerPolicy, compute_stabilizer, \
    frozen_nonlinearity, laplacian_eigenvalues, step
from .image_io import check_gray
from .model import FitContext, ModelParams, energy_from_forces

log = logging.getLogger(__name__)

SCHEMES = ("etd1", "etdrk2")


class NonFiniteFieldError(RuntimeError):
    pass


class EnergyIncreaseError(RuntimeError):
    pass


@dataclass(frozen=True)
class IglimParams:
    lam: float = 50.0
    k1: float = 0.01
    k2: float = 0.01
    passes: int = 1
    side: str = _iglim.AUTO

    def __post_init__(self):
        if self.lam < 0 or self.k1 < 0 or self.k2 < 0:
            raise ValueError("lambda, k1 and k2 must be nonnegative")
        if self.passes < 0:
            raise ValueError("denoise passes must be >= 0")
        if self.side not in (_iglim.AUTO, _iglim.POSITIVE, _iglim.NEGATIVE):
            raise ValueError(f"unknown side {self.side!r}")


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams = field(default_factory=ModelParams)
    init: IglimParams = field(default_factory=IglimParams)
    scheme: str = "etdrk2"
    stabilizer: StabilizerPolicy = field(default_factory=StabilizerPolicy)
    max_iters: int = 500
    # ETD1 tolerance is relative to |E|; the ETDRK2 slack is absolute.
    etd1_rel_tol: float = 1e-8
    etdrk2_slack: float = 1e-4
    strict_energy: bool = False

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        model = ModelParams(**data.pop("model", {}))
        init = IglimParams(**data.pop("init", {}))
        stab = StabilizerPolicy(**data.pop("stabilizer", {}))
        return cls(model=model, init=init, stabilizer=stab, **data)


@dataclass
class EnergyRecord:
    iteration: int
    energy: float
    wall_ms: float


@dataclass
class RunResult:
    u: np.ndarray
    mask: np.ndarray
    iterations: int
    converged: bool
    trace: list
    init: _iglim.IglimResult
    stabilizers: list = field(default_factory=list)
    energy_violations: int = 0
    guarded_pixels: int = 0
    wall_s: float = 0.0

    def energies(self):
        return np.array([r.energy for r in self.trace])

    def summary(self):
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "energy_initial": self.trace[0].energy,
            "energy_final": self.trace[-1].energy,
            "energy_violations": self.energy_violations,
            "guarded_pixels": self.guarded_pixels,
            "stabilizer_last": self.stabilizers[-1] if self.stabilizers else None,
            "mask_pixels": int(self.mask.sum()),
            "iglim": self.init.diagnostics(),
            "wall_s": self.wall_s,
        }


def binarize(u):
    return np.asarray(u) > 0


def dice(a, b):
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    total = int(a.sum()) + int(b.sum())
    if total == 0:
        return 1.0
    return 2.0 * int(np.logical_and(a, b).sum()) / total


def energy_allowance(previous, cfg):
    if cfg.scheme == "etd1":
        return cfg.etd1_rel_tol * abs(previous)
    return cfg.etdrk2_slack


def evolve(image, u0, cfg, init=None):
    """Run the alternating iteration from ``u0``; see :func:`segment`."""
    start = time.perf_counter()
    params = cfg.model
    ctx = FitContext(image, params)
    eig = laplacian_eigenvalues(image.shape[0], image.shape[1], params.h)

    u = np.array(u0, dtype=np.float64)
    fits = ctx.update(u)
    trace = [EnergyRecord(0, energy_from_forces(u, fits.e1, fits.e2, params),
                          (time.perf_counter() - start) * 1e3)]
    guarded = fits.guarded
    stabilizers = []
    op = None
    violations = 0
    converged = False
    mask = binarize(u)
    n = 0
    while n < cfg.max_iters:
        if n > 0:
            fits = ctx.update(u)
            guarded += fits.guarded
        if op is None or cfg.stabilizer.mode == "auto":
            s = compute_stabilizer(fits.e1, fits.e2, params, cfg.stabilizer)
            if op is None or s != op.stabilizer:
                op = SpectralOperator.build(u.shape, params.h, params.eps, s, params.dt, eig)
        stabilizers.append(op.stabilizer)
        n_fn = frozen_nonlinearity(fits.e1, fits.e2, op.stabilizer, params)
        u_next = step(u, n_fn, op, cfg.scheme)
        n += 1
        if not np.all(np.isfinite(u_next)):
            raise NonFiniteFieldError(
                f"non-finite phase field at iteration {n} (stabilizer {op.stabilizer:g})")
        energy = energy_from_forces(u_next, fits.e1, fits.e2, params)
        previous = trace[-1].energy
        trace.append(EnergyRecord(n, energy, (time.perf_counter() - start) * 1e3))
        if energy > previous + energy_allowance(previous, cfg):
            violations += 1
            msg = (f"energy rose from {previous:.12g} to {energy:.12g} at iteration {n} "
                   f"({cfg.scheme}, S={op.stabilizer:g})")
            if cfg.strict_energy:
                raise EnergyIncreaseError(msg)
            log.warning(msg)
        next_mask = binarize(u_next)
        u = u_next
        if np.array_equal(next_mask, mask):
            converged = True
            break
        mask = next_mask

    return RunResult(u=u, mask=binarize(u), iterations=n, converged=converged, trace=trace,
                     init=init, stabilizers=stabilizers, energy_violations=violations,
                     guarded_pixels=guarded, wall_s=time.perf_counter() - start)


def segment(image, cfg=RunConfig()):
    """Segment ``image`` into object (mask 1) and background.

    The initial field comes from the graph-Laplacian edge sets; the loop then
    stops as soon as two consecutive binarized fields coincide, or after
    ``cfg.max_iters`` steps with ``converged=False``. The energy trace holds
    the initial energy followed by one entry per step, each computed with the
    fits used for that step.
    """
    image = check_gray(image)
    ip = cfg.init
    init = _iglim.iglim(image, lam=ip.lam, k1=ip.k1, k2=ip.k2, passes=ip.passes, side=ip.side)
    return evolve(image, init.u0, cfg, init=init)


def write_trace(trace, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "energy", "wall_ms"])
        for rec in trace:
            writer.writerow([rec.iteration, repr(rec.energy), f"{rec.wall_ms:.3f}"])


def read_trace(path):
    with open(path, newline="") as fh:
        return [EnergyRecord(int(r["iter"]), float(r["energy"]), float(r["wall_ms"]))
                for r in csv.DictReader(fh)]
