"""Timing harness for the hot kernels (numba versus numpy backends)."""

import contextlib
import hashlib
import os
import statistics
import time
from dataclasses import astuple, dataclass, fields

import numpy as np

from . import _accel, phantoms
from .forward import WeightEvaluator, project_all
from .grids import CartesianGrid, build_plane_grid, build_ray_grid
from .kunyansky import QOperator, harmonic_weight
from .chang import default_mask
from .radon_inv import radon2d_inverse, radon3d_inverse
from .reduce import reduce

KERNELS = ("project", "reduce", "radon2d_inverse", "radon3d_inverse", "kunyansky_iter")
REPEATS = 5


@dataclass(frozen=True)
class BenchReport:
    kernel: str
    size: int
    backend: str
    threads: int
    wall_s: float
    items: int
    rate: float
    unit: str
    checksum: str

    @staticmethod
    def header(sep="\t"):
        return sep.join(f.name for f in fields(BenchReport))

    def row(self, sep="\t"):
        vals = [f"{v:.6g}" if isinstance(v, float) else str(v) for v in astuple(self)]
        return sep.join(vals)


def checksum(arr):
    """Short digest of the exact bytes of ``arr``."""
    return hashlib.sha256(np.ascontiguousarray(arr).tobytes()).hexdigest()[:16]


@contextlib.contextmanager
def use_backend(name):
    """Temporarily force the kernel backend ('numba' or 'numpy')."""
    old = os.environ.get("WRTKIT_NUMBA")
    if name is not None:
        os.environ["WRTKIT_NUMBA"] = "1" if name == "numba" else "0"
    try:
        yield
    finally:
        if old is None:
            os.environ.pop("WRTKIT_NUMBA", None)
        else:
            os.environ["WRTKIT_NUMBA"] = old


def _problem(kernel, N):
    """``(callable, item count, unit)`` for one kernel at grid size ``N``."""
    n_phi = N - 1
    grid = CartesianGrid(N)
    f = phantoms.rasterize(phantoms.named("f1"), grid)
    a = phantoms.rasterize(phantoms.named("a1"), grid)
    W = WeightEvaluator(a)
    rg = build_ray_grid(N, N, n_phi)
    pg = build_plane_grid(N, n_phi, n_phi)
    if kernel == "project":
        return (lambda: project_all(f, W, rg)), N * N * n_phi, "rays/s"
    rays = project_all(f, W, rg)
    if kernel == "reduce":
        return (lambda: reduce(rays, rg, pg)), N * n_phi * n_phi, "planes/s"
    if kernel == "radon2d_inverse":
        return (lambda: radon2d_inverse(rays)), N * N * n_phi, "rays/s"
    planes = reduce(rays, rg, pg)
    if kernel == "radon3d_inverse":
        return (lambda: radon3d_inverse(planes, pg, method="fbp")), N * n_phi * n_phi, "planes/s"
    if kernel == "kunyansky_iter":
        hw = harmonic_weight(W, n_phi, 2, dim=3, plane_grid=pg)
        Q = QOperator(hw, default_mask(N), 1)
        g = radon3d_inverse(planes, pg, method="fbp")
        return (lambda: g - Q(g)), N**3, "voxels/s"
    raise ValueError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")


def bench(kernel, size=65, threads=None, backend=None, repeats=REPEATS):
    """Median wall time of ``repeats`` runs after one warm-up run."""
    n_threads = _accel.set_threads(threads)
    with use_backend(backend):
        name = _accel.backend_name()
        run, items, unit = _problem(kernel, int(size))
        out = run()  # warm-up (and numba compilation)
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            out = run()
            times.append(time.perf_counter() - t0)
    wall = statistics.median(times)
    return BenchReport(kernel, int(size), name, n_threads, wall, items, items / wall, unit, checksum(out))


def compare(kernels=KERNELS, size=65, threads=None, repeats=REPEATS):
    """Reports for both backends on every kernel; numpy rows come second."""
    rows = []
    for k in kernels:
        for b in ("numba", "numpy"):
            rows.append(bench(k, size, threads, b, repeats))
    return rows


def render(reports, sep="\t"):
    return "\n".join([BenchReport.header(sep)] + [r.row(sep) for r in reports]) + "\n"
