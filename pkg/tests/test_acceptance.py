"""Acceptance criteria, one test per criterion (criterion 5 split into ordering and band).

Each test records one ``PASS``/``FAIL`` line, listed again in the terminal
summary; purely informative comparisons are recorded as ``INFO`` lines.
The full-scale criteria (N = 129, 128 x 128 angles) share one pass over the
four (activity, attenuation) cells.
"""

import math
import os
import subprocess
import sys

import numpy as np
import pytest

from conftest import ACCEPTANCE, gaussian_volume
from wrtkit import noise, phantoms
from wrtkit.chang import default_mask, divide_by_w0
from wrtkit.errors import ConvergenceError
from wrtkit.forward import plane_transform_direct, project_all, ray_transform
from wrtkit.grids import CartesianGrid, build_plane_grid, build_ray_grid, direction
from wrtkit.kunyansky import HarmonicWeight, KunyanskyConfig, harmonic_weight, solve
from wrtkit.metrics import COLUMNS, reference_value
from wrtkit.pipeline import Cell, ExperimentConfig
from wrtkit.radon_inv import radon2d_inverse, radon3d_inverse
from wrtkit.reduce import reduce

SEEDS = (1, 2, 3)
NOISE = (50, 500)
PAIRS = (("chang2d", "chang3d"), ("kun2d", "kun3d"))


def record(criterion, ok, detail, status=None):
    status = status or ("PASS" if ok else "FAIL")
    line = f"{status}  criterion {criterion}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def rms_rel(rec, truth, mask):
    return float(np.sqrt(np.mean((rec - truth)[mask] ** 2) / np.mean(truth[mask] ** 2)))


# ---------------------------------------------------------------- full scale


def _probe(Q, D, n=20, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(n):
        u = rng.standard_normal(D.shape)
        if i % 2:
            u = np.cumsum(np.cumsum(u, axis=-1), axis=-2)
        u = u * D
        worst = max(worst, float(np.linalg.norm(Q(u)) / np.linalg.norm(u)))
    return worst


@pytest.fixture(scope="module")
def full():
    """Everything the full-scale criteria need, computed cell by cell to bound memory."""
    cfg = ExperimentConfig()
    out = {"eps": {}, "low": {}, "chang_gap": {}, "sigma": {}, "probe": {}, "m0": {}, "ratios": {}}
    for act in cfg.activities:
        for att in cfg.attenuations:
            cell = Cell(cfg, act, att)
            ref = cell.reference
            sl = ref.slices
            out["chang_gap"][(act, att)] = float(
                np.linalg.norm(sl["chang3d"] - sl["chang2d"]) / np.linalg.norm(sl["chang2d"])
            )
            for n in NOISE:
                for seed in SEEDS:
                    for r in cell.errors(n, seed):
                        out["eps"][(r.method, act, att, n, seed)] = r.eps
            for r in cell.errors(1e6, 1):
                out["low"][(r.method, act, att)] = r.eps
            if act == "f1":
                for dim, key in ((2, "kun2d"), (3, "kun3d")):
                    D = cell.D[cell.iz] if dim == 2 else cell.D
                    out["sigma"][(att, dim)] = cell.sigma(dim)
                    out["probe"][(att, dim)] = _probe(cell._q(dim), D)
                    out["ratios"][(att, dim)] = ref.info[key].ratios[1:]
                # m = 0 solve against Chang on the noiseless z = 0 data
                iz = cell.iz
                g2 = radon2d_inverse(cell.rays[iz])
                f0, _, _ = solve(g2, cell.hw2, KunyanskyConfig(m=0, D=cell.D[iz]))
                out["m0"][att] = float(np.max(np.abs(f0 - divide_by_w0(g2, cell.hw2.w0, cell.D[iz]))))
            del cell
    return out


# ---------------------------------------------------------------- criteria


def test_criterion_1_geometry():
    N = 129
    spec = phantoms.named("a1")
    vol = phantoms.rasterize(spec, CartesianGrid(N))
    exact = phantoms.optical_lengths(spec)
    got = (
        ray_transform(vol, None, 0.0, 0.0, math.pi / 2),
        ray_transform(vol, None, 0.0, 0.0, 0.0),
        float(np.trapezoid(vol[:, N // 2, N // 2], dx=2.0 / (N - 1))),
    )
    gaps = [abs(g - e) / e for g, e in zip(got, exact)]
    ok = max(gaps) < 0.01
    record(1, ok, "a1 axis integrals " + " ".join(f"{g:.4f}/{e:.4f}" for g, e in zip(got, exact)) + f", max gap {max(gaps):.4f} (< 0.01)")
    published = (2.44, 3.89, 4.81)
    soft = [abs(e - p) / p for e, p in zip(exact, published)]
    record(
        "1 (soft)",
        True,
        "optical lengths " + " ".join(f"{e:.2f}" for e in exact) + " vs published 2.44 3.89 4.81, deviations "
        + " ".join(f"{d:.0%}" for d in soft) + " (phantom-geometry caveat)",
        status="INFO",
    )
    assert ok


def test_criterion_2_reduction_oracle():
    N = 65
    f = gaussian_volume(N, 0.25, (0.15, -0.1, 0.05))
    rg = build_ray_grid(N, N, N - 1)
    pg = build_plane_grid(N, N - 1, N - 1)
    planes = reduce(project_all(f, None, rg), rg, pg)
    rng = np.random.default_rng(2)
    inner = np.flatnonzero(np.abs(pg.s) <= 0.8)
    gaps = []
    for _ in range(50):
        k, j, i = rng.integers(pg.n_psi), rng.integers(pg.n_phi), rng.choice(inner)
        ref = plane_transform_direct(f, pg.s[i], direction(pg.phi[j], pg.psi[k]))
        gaps.append(abs(planes[k, j, i] - ref) / abs(ref))
    ok = max(gaps) < 0.02
    record(2, ok, f"max relative gap {max(gaps):.4f} over 50 plane nodes (< 0.02)")
    assert ok


def test_criterion_3_round_trips():
    N, sig = 129, 0.2
    s = np.linspace(-1, 1, N)
    g2 = CartesianGrid(N)
    disk = radon2d_inverse(np.tile(2 * np.sqrt(np.clip(1 - s * s, 0, None)), (N - 1, 1)))
    gauss = radon2d_inverse(np.tile(math.sqrt(2 * math.pi) * sig * np.exp(-s * s / (2 * sig * sig)), (N - 1, 1)))
    ax = g2.axis
    truth2 = np.exp(-(ax[None, :] ** 2 + ax[:, None] ** 2) / (2 * sig * sig))
    m2 = g2.slice_mask(0.0, 0.8)
    e2 = (rms_rel(disk, np.ones_like(disk), m2), rms_rel(gauss, truth2, m2))
    N3 = 65
    pg = build_plane_grid(N3, N3 - 1, N3 - 1)
    ball = radon3d_inverse(np.broadcast_to(np.pi * np.clip(1 - pg.s**2, 0, None), pg.shape), pg, method="fourier")
    gs = radon3d_inverse(
        np.broadcast_to(2 * np.pi * sig * sig * np.exp(-pg.s**2 / (2 * sig * sig)), pg.shape), pg, method="fourier"
    )
    m3 = CartesianGrid(N3).ball_mask(0.7)
    truth3 = gaussian_volume(N3, sig)
    e3 = (rms_rel(ball, np.ones_like(ball), m3), rms_rel(gs, truth3, m3))
    ok = max(e2) < 0.05 and max(e3) < 0.07
    record(
        3,
        ok,
        f"2D disk {e2[0]:.4f} gaussian {e2[1]:.4f} (< 0.05); 3D Fourier-slice ball {e3[0]:.4f} gaussian {e3[1]:.4f} (< 0.07)",
    )
    assert ok


def test_criterion_4_chang_noiseless(full):
    gaps = {k: v for k, v in full["chang_gap"].items() if k[1] == "a1"}
    ok = max(gaps.values()) < 0.10
    record(4, ok, "chang3d vs chang2d on z = 0: " + ", ".join(f"{a}/{f} {v:.4f}" for (f, a), v in gaps.items()) + " (< 0.10)")
    assert ok


def _ordering(full, pair):
    bad = []
    for f, a, n in COLUMNS:
        for seed in SEEDS:
            e2, e3 = (full["eps"][(m, f, a, n, seed)] for m in pair)
            if not e3 < e2:
                bad.append(f"{f},{a},n={n},seed={seed}: {e3:.3f} >= {e2:.3f}")
    return bad


def _band(full, methods):
    rows, misses = [], []
    for m in methods:
        for f, a, n in COLUMNS:
            ref = reference_value(m, f, a, n)
            vals = [full["eps"][(m, f, a, n, s)] for s in SEEDS]
            if any(abs(v - ref) > 0.2 * ref for v in vals):
                misses.append(f"{m} {f},{a},n={n}: {min(vals):.3f}..{max(vals):.3f} vs {ref}")
            rows.append((m, f, a, n, np.median(vals), ref))
    return rows, misses


def test_criterion_5_chang_ordering(full):
    bad = _ordering(full, PAIRS[0])
    ok = not bad
    record("5 (ordering)", ok, "chang3d < chang2d in all 8 columns x 3 seeds" if ok else "; ".join(bad))
    assert ok


def test_criterion_5_chang_band(full):
    rows, misses = _band(full, PAIRS[0])
    ok = not misses
    detail = f"{24 * 2 - 3 * len(misses)}/48 runs inside +-20% of the published values"
    if misses:
        detail += "; outside: " + "; ".join(misses)
    record("5 (band)", ok, detail)
    assert ok, "published-value band missed; see the acceptance summary"


def test_criterion_6_kunyansky_ordering(full):
    bad = _ordering(full, PAIRS[1])
    ok = not bad
    record("6", ok, "kun3d < kun2d in all 8 columns x 3 seeds" if ok else "; ".join(bad))
    _, misses = _band(full, PAIRS[1])
    record(
        "6 (band)",
        True,
        f"{16 - len(misses)}/16 column medians+seeds inside +-20% (informative for this Q construction)"
        + ("; outside: " + "; ".join(misses) if misses else ""),
        status="INFO",
    )
    assert ok


def test_criterion_7_sigma_probe_and_m0(full):
    lines, ok = [], True
    for (att, dim), sig in sorted(full["sigma"].items()):
        probe = full["probe"][(att, dim)]
        ok &= probe <= sig + 0.05
        lines.append(f"{att} d={dim} probe {probe:.3f} <= sigma {sig:.3f} + 0.05")
    m0 = max(full["m0"].values())
    ok &= m0 < 1e-10
    record(7, ok, "; ".join(lines) + f"; m=0 vs Chang max difference {m0:.1e} (< 1e-10)")
    targets = {("a1", 3): 0.89, ("a1", 2): 0.52, ("a2", 3): 0.17, ("a2", 2): 0.11}
    record(
        "7 (sigma targets)",
        True,
        ", ".join(f"{a} d={d} {full['sigma'][(a, d)]:.3f} vs {t}" for (a, d), t in targets.items())
        + " (informative: Q here is a harmonic-truncation construction)",
        status="INFO",
    )
    assert ok


def test_criterion_8_geometric_convergence_and_refusal(full):
    worst = {dim: max(full["ratios"][("a2", dim)]) for dim in (2, 3)}
    ok = all(worst[d] <= full["sigma"][("a2", d)] + 0.05 for d in (2, 3))
    # refusal: a weight whose second harmonic is 60% of the mean gives sigma = 1.2
    rng = np.random.default_rng(0)
    c = np.zeros((3, 33, 33), dtype=complex)
    c[0] = 0.5 + rng.random((33, 33))
    c[2] = 0.6 * c[0]
    try:
        solve(rng.standard_normal((33, 33)), HarmonicWeight(c, 2), KunyanskyConfig(m=1, D=default_mask(33)[16]))
        refused = False
    except ConvergenceError as exc:
        refused = exc.sigma >= 1
    # and a physical one: a1 scaled until sigma exceeds 1
    heavy = phantoms.rasterize(phantoms.scale_attenuation(phantoms.named("a1"), 8.0), CartesianGrid(33))
    hw = harmonic_weight(heavy, 32, 2).slice(16)
    try:
        solve(rng.standard_normal((33, 33)), hw, KunyanskyConfig(m=1, D=default_mask(33)[16]))
        refused_phys = False
    except ConvergenceError as exc:
        refused_phys = exc.sigma >= 1
    ok = ok and refused and refused_phys
    record(
        8,
        ok,
        f"a2 worst update ratio d=2 {worst[2]:.3f} (sigma {full['sigma'][('a2', 2)]:.3f}), "
        f"d=3 {worst[3]:.3f} (sigma {full['sigma'][('a2', 3)]:.3f}); refusal at sigma >= 1: synthetic {refused}, 8 x a1 {refused_phys}",
    )
    assert ok


_COUNTS = r"""
import hashlib, sys
import numpy as np
from wrtkit import _accel, noise
_accel.set_threads(int(sys.argv[1]))
lam = np.random.default_rng(1).random((129, 128, 129)) * 60
print(hashlib.sha256(noise.sample_counts(lam, 1.0, 2**64 - 3).tobytes()).hexdigest())
"""


def test_criterion_9_noise_statistics():
    n_level, draws = 50.0, 20000
    P = np.array([0.05, 0.3, 0.8, 1.6, 2.0])
    est, model = noise.simulate(np.repeat(P[None], draws, axis=0), n_level, 77)
    var = P * P.max() / n_level
    z_mean = np.abs(est.mean(axis=0) - P) / np.sqrt(var / draws)
    # standard error of a sample variance of N/C_n: sqrt((mu4 - var^2) / draws), Poisson mu4 = l + 3 l^2
    C = model.C_n
    lam = C * P
    se_var = np.sqrt((lam + 2 * lam**2) / C**4 / draws)
    z_var = np.abs(est.var(axis=0, ddof=1) - var) / se_var
    env = dict(os.environ, NUMBA_NUM_THREADS="4")
    digests = [
        subprocess.run([sys.executable, "-c", _COUNTS, t], capture_output=True, text=True, env=env, check=True).stdout
        for t in ("1", "4")
    ]
    ok = z_mean.max() < 3 and z_var.max() < 3 and digests[0] == digests[1]
    record(
        9,
        ok,
        f"worst mean deviation {z_mean.max():.2f} SE, worst variance deviation {z_var.max():.2f} SE over {draws} draws (< 3); "
        f"counts bit-identical for 1 and 4 threads: {digests[0] == digests[1]}",
    )
    assert ok


def test_criterion_10_low_noise_limit(full):
    worst = max(full["low"].items(), key=lambda kv: kv[1])
    ok = worst[1] < 0.03
    record(10, ok, f"n = 1e6: all 16 cells below 0.03, worst {worst[1]:.4f} ({' '.join(worst[0])})" if ok else f"worst {worst}")
    assert ok
