"""End-to-end experiment driver.

One :class:`Cell` holds everything that depends on an (activity, attenuation)
pair: the rasterized volumes, the noiseless ray data, the weight harmonics and
the noiseless reconstructions of every method.  Noisy runs reuse all of it and
only redo sampling, reduction and inversion.
"""

import logging
import os
from dataclasses import dataclass, field

import numpy as np

from . import phantoms
from .chang import default_mask, divide_by_w0
from .forward import WeightEvaluator, project_all
from .grids import CartesianGrid, build_plane_grid, build_ray_grid
from .kunyansky import HarmonicWeight, KunyanskyConfig, QOperator, harmonic_weight, sigma_bound, solve
from .metrics import METHODS, ErrorRecord, central_slice, rel_error
from .noise import N_STRONG, N_WEAK, derive_seed, simulate
from .radon_inv import radon2d_inverse, radon3d_inverse
from .reduce import reduce

log = logging.getLogger(__name__)


@dataclass
class ExperimentConfig:
    """Parameters of the reconstruction-error experiment (defaults: full scale)."""

    N: int = 129
    n_phi: int = 128
    n_psi: int = 128
    R: float = 1.0
    activities: tuple = ("f1", "f2")
    attenuations: tuple = ("a1", "a2")
    noise_levels: tuple = (N_STRONG, N_WEAK)
    seeds: tuple = (1, 2, 3)
    methods: tuple = METHODS
    m: int = 1
    max_iter: int = 50
    tol: float = 1e-6
    mask_radius: float = 0.95
    inversion3d: str = "fbp"

    @classmethod
    def ci(cls, **kw):
        """Reduced scale used by the test suite."""
        base = dict(N=65, n_phi=64, n_psi=64)
        base.update(kw)
        return cls(**base)

    def __post_init__(self):
        if self.N % 2 == 0:
            raise ValueError("N must be odd so that z = 0 is a voxel plane")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}")
        if self.inversion3d not in ("fourier", "fbp"):
            raise ValueError(f"unknown 3D inversion {self.inversion3d!r}")
        if self.m < 0:
            raise ValueError("m must be >= 0")


def load_phantom(name_or_path):
    """A named phantom (``a1``, ``a2``, ``f1``, ``f2``) or a phantom text file."""
    if name_or_path in phantoms.NAMED:
        return phantoms.named(name_or_path)
    if os.path.exists(name_or_path):
        with open(name_or_path, encoding="utf-8") as fh:
            return phantoms.loads(fh.read())
    raise ValueError(f"{name_or_path!r} is neither a named phantom nor a file")


@dataclass
class Reconstruction:
    slices: dict
    info: dict = field(default_factory=dict)


class Cell:
    """Noiseless state of one (activity, attenuation) pair."""

    def __init__(self, cfg, activity, attenuation):
        self.cfg = cfg
        self.activity, self.attenuation = activity, attenuation
        grid = CartesianGrid(cfg.N, cfg.R)
        self.iz = cfg.N // 2
        self.f = phantoms.rasterize(load_phantom(activity), grid)
        self.a = phantoms.rasterize(load_phantom(attenuation), grid)
        self.ray_grid = build_ray_grid(cfg.N, cfg.N, cfg.n_phi, cfg.R)
        self.plane_grid = build_plane_grid(cfg.N, cfg.n_phi, cfg.n_psi, cfg.R)
        W = WeightEvaluator(self.a, cfg.R)
        self.rays = project_all(self.f, W, self.ray_grid)
        self.D = default_mask(cfg.N, cfg.R, cfg.mask_radius)
        # a hair beyond the mask so that rounding never leaves a masked voxel unsampled
        hw = harmonic_weight(W, cfg.n_phi, 2 * cfg.m, radius=cfg.mask_radius * cfg.R * (1 + 1e-9))
        self.hw2 = hw.slice(self.iz)
        self.hw3 = HarmonicWeight(hw.coeffs, 3, self.plane_grid)
        self._Q = {}
        self._reference = None

    def _q(self, dim):
        if dim not in self._Q:
            hw, D = (self.hw2, self.D[self.iz]) if dim == 2 else (self.hw3, self.D)
            self._Q[dim] = QOperator(hw, D, self.cfg.m)
        return self._Q[dim]

    def sigma(self, dim):
        hw, D = (self.hw2, self.D[self.iz]) if dim == 2 else (self.hw3, self.D)
        return sigma_bound(hw, D, self.cfg.m)

    def reconstruct(self, rays):
        """z = 0 slices of every configured method from ray data on the cell's grid."""
        cfg, iz = self.cfg, self.iz
        out, info = {}, {}
        D2 = self.D[iz]
        if {"chang2d", "kun2d"} & set(cfg.methods):
            g2 = radon2d_inverse(rays[iz], cfg.R)
            if "chang2d" in cfg.methods:
                out["chang2d"] = divide_by_w0(g2, self.hw2.w0, D2)
            if "kun2d" in cfg.methods:
                kc = KunyanskyConfig(cfg.m, cfg.max_iter, cfg.tol, D2)
                f, _, info["kun2d"] = solve(g2, self.hw2, kc, Q=self._q(2))
                out["kun2d"] = f
        if {"chang3d", "kun3d"} & set(cfg.methods):
            planes = reduce(rays, self.ray_grid, self.plane_grid)
            g3 = radon3d_inverse(planes, self.plane_grid, method=cfg.inversion3d)
            if "chang3d" in cfg.methods:
                out["chang3d"] = central_slice(divide_by_w0(g3, self.hw3.w0, self.D))
            if "kun3d" in cfg.methods:
                kc = KunyanskyConfig(cfg.m, cfg.max_iter, cfg.tol, self.D)
                f, _, info["kun3d"] = solve(g3, self.hw3, kc, Q=self._q(3))
                out["kun3d"] = central_slice(f)
        return Reconstruction(out, info)

    @property
    def reference(self):
        if self._reference is None:
            self._reference = self.reconstruct(self.rays)
        return self._reference

    def noisy(self, n_level, seed):
        """Reconstruction from one Poisson realization; the stream seed is derived from the cell."""
        stream = derive_seed(seed, self.activity, self.attenuation, float(n_level))
        est, _ = simulate(self.rays, n_level, stream)
        return self.reconstruct(est)

    def errors(self, n_level, seed):
        rec = self.noisy(n_level, seed)
        ref = self.reference.slices
        return [
            ErrorRecord(self.activity, self.attenuation, float(n_level), m, int(seed), rel_error(rec.slices[m], ref[m]))
            for m in self.cfg.methods
        ]


def run_experiment(cfg, progress=None):
    """All ``ErrorRecord`` rows for the configured cells, noise levels and seeds."""
    records = []
    for act in cfg.activities:
        for att in cfg.attenuations:
            cell = Cell(cfg, act, att)
            for n in cfg.noise_levels:
                for seed in cfg.seeds:
                    rows = cell.errors(n, seed)
                    records.extend(rows)
                    if progress is not None:
                        for r in rows:
                            progress(r)
            del cell
    return records
