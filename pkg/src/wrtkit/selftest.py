"""Quick oracle suite behind ``wrtkit selftest``.

Each check returns ``(passed, detail)``; :func:`run` prints one line per check.
"""

import math
import tempfile
import time

import numpy as np

from . import containers, kernels, noise
from .bench import use_backend
from .chang import default_mask, divide_by_w0
from .forward import WeightEvaluator, plane_transform_direct, project_all
from .grids import CartesianGrid, build_plane_grid, build_ray_grid, direction, gauss_legendre
from .kunyansky import KunyanskyConfig, harmonic_weight, solve
from .radon_inv import radon2d_inverse, radon3d_inverse
from .reduce import reduce, reduce_psi, reduced_w0


def _rms_inside(rec, truth, mask):
    return float(np.sqrt(np.mean((rec[mask] - truth[mask]) ** 2)) / np.sqrt(np.mean(truth[mask] ** 2)))


def check_quadrature(N):
    t, w = gauss_legendre(N - 1)
    err = abs(np.sum(w) - 2.0) + abs(np.sum(w * t * t) - 2.0 / 3.0)
    return err < 1e-12, f"weight/moment error {err:.1e}"


def check_disk_2d(N):
    n_phi = N - 1
    s = np.linspace(-1, 1, N)
    sino = np.tile(2 * np.sqrt(np.clip(1 - s * s, 0, None)), (n_phi, 1))
    img = radon2d_inverse(sino)
    g = CartesianGrid(N)
    inside = g.slice_mask(0.0, 0.8)
    err = _rms_inside(img, np.ones_like(img), inside)
    return err < 0.05, f"rms {err:.4f} (< 0.05)"


def check_gaussian_2d(N, sig=0.2):
    n_phi = N - 1
    s = np.linspace(-1, 1, N)
    sino = np.tile(math.sqrt(2 * math.pi) * sig * np.exp(-(s * s) / (2 * sig * sig)), (n_phi, 1))
    img = radon2d_inverse(sino)
    ax = CartesianGrid(N).axis
    truth = np.exp(-(ax[None, :] ** 2 + ax[:, None] ** 2) / (2 * sig * sig))
    inside = CartesianGrid(N).slice_mask(0.0, 0.8)
    err = float(np.max(np.abs(img - truth)[inside]))
    return err < 0.03, f"max error {err:.4f} of peak (< 0.03)"


def check_ball_3d(N):
    pg = build_plane_grid(N, N - 1, N - 1)
    sino = np.broadcast_to(np.pi * np.clip(1 - pg.s**2, 0, None), pg.shape).copy()
    mask = CartesianGrid(N).ball_mask(0.7)
    errs = {m: _rms_inside(radon3d_inverse(sino, pg, method=m), np.ones((N, N, N)), mask) for m in ("fourier", "fbp")}
    return max(errs.values()) < 0.07, " ".join(f"{k} rms {v:.4f}" for k, v in errs.items()) + " (< 0.07)"


def check_reduce_ball(N):
    rg = build_ray_grid(N, N, N - 1)
    ball = CartesianGrid(N).ball_mask().astype(float)
    rays = project_all(ball, None, rg)
    rng = np.random.default_rng(7)
    psi = rng.uniform(0.3, math.pi - 0.3, 20)
    out = reduce_psi(rays, rg, psi)
    i = rng.integers(N // 4, 3 * N // 4, 20)
    j = rng.integers(0, N - 1, 20)
    s = rg.s[i]
    got = out[np.arange(20), j, i]
    gap = float(np.max(np.abs(got - np.pi * (1 - s * s)) / (np.pi * (1 - s * s))))
    return gap < 0.02, f"max relative gap {gap:.4f} (< 0.02)"


def check_reduce_direct(N):
    g = CartesianGrid(N)
    z, y, x = g.mesh()
    f = np.exp(-((x - 0.15) ** 2 + (y + 0.1) ** 2 + (z - 0.05) ** 2) / (2 * 0.25**2))
    f *= g.ball_mask()
    rg = build_ray_grid(N, N, N - 1)
    pg = build_plane_grid(N, N - 1, N - 1)
    planes = reduce(project_all(f, None, rg), rg, pg)
    rng = np.random.default_rng(11)
    smax = int(np.searchsorted(pg.s, 0.8, side="right"))
    smin = int(np.searchsorted(pg.s, -0.8))
    gaps = []
    for _ in range(50):
        k, j, i = rng.integers(pg.n_psi), rng.integers(pg.n_phi), rng.integers(smin, smax)
        ref = plane_transform_direct(f, pg.s[i], direction(pg.phi[j], pg.psi[k]))
        gaps.append(abs(planes[k, j, i] - ref) / abs(ref))
    gap = float(max(gaps))
    return gap < 0.02, f"max relative gap {gap:.4f} over 50 nodes (< 0.02)"


def check_poisson(N, draws=20000):
    lam = np.array([0.5, 3.0, 25.0, 400.0])
    sino = np.repeat(lam[None, :], draws, axis=0)
    counts = noise.sample_counts(sino, 1.0, 12345)
    z = []
    for c, l in zip(counts.T, lam):
        z.append(abs(c.mean() - l) / math.sqrt(l / draws))
    worst = max(z)
    return worst < 3.0, f"worst mean deviation {worst:.2f} standard errors (< 3)"


def check_reduced_w0(N):
    W = WeightEvaluator(None)
    val = reduced_w0(W, np.zeros(3), build_plane_grid(N, N - 1, 8))
    return abs(val - 1.0) < 1e-12, f"unit weight w0 = {val:.15f}"


def check_kunyansky_m0(N):
    from .phantoms import named, rasterize

    g = CartesianGrid(N)
    a = rasterize(named("a2"), g)
    hw = harmonic_weight(a, N - 1, 0)
    iz = N // 2
    D = default_mask(N)[iz]
    rng = np.random.default_rng(3)
    gimg = rng.standard_normal((N, N))
    hw2 = hw.slice(iz)
    f, _, _ = solve(gimg, hw2, KunyanskyConfig(m=0, D=D))
    diff = float(np.max(np.abs(f - divide_by_w0(gimg, hw2.w0, D))))
    return diff < 1e-10, f"max difference to Chang {diff:.1e}"


def check_container(N):
    rng = np.random.default_rng(5)
    arr = rng.standard_normal((3, 4, 5))
    with tempfile.TemporaryDirectory() as d:
        containers.write(f"{d}/x", arr, "raysino", R=1.0)
        back, _ = containers.read(f"{d}/x")
    return np.array_equal(arr, back), "bit-identical round trip"


def check_backends(N):
    g = CartesianGrid(N)
    rng = np.random.default_rng(9)
    f = rng.random((N, N, N)) * g.ball_mask()
    a = 0.5 * rng.random((N, N, N)) * g.ball_mask()
    rg = build_ray_grid(N, N, 8)
    out = {}
    for b in ("numba", "numpy"):
        with use_backend(b):
            out[b] = project_all(f, WeightEvaluator(a), rg)
    if kernels.numba_impl is None:
        return True, "numba not installed; numpy only"
    diff = float(np.max(np.abs(out["numba"] - out["numpy"])))
    return diff < 1e-10, f"max backend difference {diff:.1e}"


CHECKS = (
    ("gauss-legendre moments", check_quadrature),
    ("2D FBP disk", check_disk_2d),
    ("2D FBP gaussian", check_gaussian_2d),
    ("3D inversion ball", check_ball_3d),
    ("reduce ball plane areas", check_reduce_ball),
    ("reduce vs direct plane integrals", check_reduce_direct),
    ("poisson sampler mean", check_poisson),
    ("reduced w0 of unit weight", check_reduced_w0),
    ("kunyansky m=0 equals chang", check_kunyansky_m0),
    ("container round trip", check_container),
    ("numba/numpy projector agreement", check_backends),
)


def run(N=65, out=print):
    """Run every check at grid size ``N``; returns the number of failures."""
    failed = 0
    for name, fn in CHECKS:
        t0 = time.perf_counter()
        ok, detail = fn(N)
        failed += not ok
        out(f"{'PASS' if ok else 'FAIL'}  {name}: {detail} [{time.perf_counter() - t0:.1f}s]")
    return failed
