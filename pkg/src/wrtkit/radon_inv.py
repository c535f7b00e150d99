"""Classical (unweighted) Radon transforms and their inverses in 2D and 3D.

2D: filtered backprojection with the discrete ramp kernel of Ramachandran and
Lakshminarayanan, zero-padded to four times the profile length.

3D: two interchangeable routes.  ``method="fourier"`` (default) uses the
projection theorem: each plane profile's 1D Fourier transform gives the
volume's transform on a radial line, the radial lines are gridded onto an
oversampled Cartesian lattice with a Kaiser-Bessel kernel and density
compensation ``sigma^2 dsigma dphi lambda_k``, and an inverse 3D FFT with
deapodization returns the volume.  ``method="fbp"`` filters each profile with
the band-limited second-derivative kernel and backprojects over the sphere in
two separable stages.
"""

import math

import numpy as np
from scipy import fft as sfft

from . import kernels
from .forward import plane_integrals
from .grids import CartesianGrid, PlaneGrid, azimuths

KB_WIDTH = 6
OVERSAMPLING = 1.5
_KB_PER_CELL = 2000


def ramp_kernel(P, ds):
    """Circular discrete ramp kernel of length ``P`` (``h[0] = 1/(4 ds^2)``)."""
    n = np.arange(P)
    n = np.where(n > P // 2, n - P, n)
    h = np.zeros(P)
    h[0] = 1.0 / (4.0 * ds * ds)
    odd = n % 2 == 1
    h[odd] = -1.0 / (np.pi * n[odd] * ds) ** 2
    return h


def second_derivative_kernel(P, ds):
    """Band-limited kernel with transfer function ``sigma^2`` (``h[0] = pi^2 / (3 ds^3)``)."""
    n = np.arange(P)
    n = np.where(n > P // 2, n - P, n)
    h = np.empty(P)
    h[0] = np.pi**2 / (3.0 * ds**3)
    nz = n != 0
    h[nz] = 2.0 * np.where(n[nz] % 2 == 0, 1.0, -1.0) / (n[nz] ** 2 * ds**3)
    return h


def _filter_profiles(g, h, ds):
    """``ds * (g (*) h)`` along the last axis, linear (not circular) convolution."""
    P = h.shape[0]
    n = g.shape[-1]
    G = sfft.rfft(g, n=P, axis=-1)
    H = sfft.rfft(h)
    return ds * sfft.irfft(G * H, n=P, axis=-1)[..., :n]


def _disk_mask(N, R):
    ax = -R + 2.0 * R / (N - 1) * np.arange(N)
    return ax[None, :] ** 2 + ax[:, None] ** 2 <= R * R * (1 + 1e-12)


def radon2d_inverse(sino, R=1.0, N=None):
    """Filtered backprojection of ``(n_phi, n_s)`` (or stacked ``(n_l, n_phi, n_s)``) data.

    Angles are ``phi_k = 2 pi k / n_phi`` (full circle) and offsets
    ``s_j = -R + j ds``.  Output images are ``(N, N)`` indexed ``[y, x]``,
    zero outside the support disk.
    """
    sino = np.asarray(sino, dtype=float)
    single = sino.ndim == 2
    if single:
        sino = sino[None]
    n_l, n_phi, n_s = sino.shape
    N = n_s if N is None else int(N)
    ds = 2.0 * R / (n_s - 1)
    P = sfft.next_fast_len(4 * n_s)
    q = _filter_profiles(sino, ramp_kernel(P, ds), ds)
    phis = azimuths(n_phi)
    img = kernels.backproject_2d(np.ascontiguousarray(q), phis, -R, ds, float(R), N)
    img *= 0.5 * (2 * np.pi / n_phi)
    img *= _disk_mask(N, R)[None]
    return img[0] if single else img


def radon2d_forward(image, n_phi, R=1.0):
    """Line integrals of an ``(N, N)`` image on the full-circle ``(n_phi, N)`` grid."""
    image = np.ascontiguousarray(image, dtype=float)
    N = image.shape[0]
    ss = -R + 2.0 * R / (N - 1) * np.arange(N)
    phis = azimuths(n_phi)
    return kernels.line_integrals_2d(image, float(R), ss, phis, 2.0 * R / (N - 1))


def radon3d_forward(vol, plane_grid):
    """Plane integrals of ``vol`` on ``plane_grid``; ``(n_psi, n_phi, n_s)``."""
    if not isinstance(plane_grid, PlaneGrid):
        raise TypeError("plane_grid must be a PlaneGrid")
    nrm = plane_grid.normals().reshape(-1, 3)
    out = plane_integrals(vol, plane_grid.s, nrm, plane_grid.ds, plane_grid.R)
    return out.reshape(plane_grid.shape)


def kb_beta(width=KB_WIDTH, alpha=OVERSAMPLING):
    return math.pi * math.sqrt((width / alpha) ** 2 * (alpha - 0.5) ** 2 - 0.8)


def kb_kernel(t, width=KB_WIDTH, beta=None):
    """Kaiser-Bessel window in cell units, support ``|t| <= width / 2``."""
    beta = kb_beta(width) if beta is None else beta
    t = np.asarray(t, dtype=float)
    r = np.clip(1.0 - (2.0 * t / width) ** 2, 0.0, None)
    return np.where(np.abs(t) <= 0.5 * width, np.i0(beta * np.sqrt(r)), 0.0)


def kb_transform(nu, width=KB_WIDTH, beta=None):
    """Continuous Fourier transform ``int kb(t) exp(-2 pi i nu t) dt``."""
    beta = kb_beta(width) if beta is None else beta
    nu = np.asarray(nu, dtype=float)
    a = beta**2 - (math.pi * width * nu) ** 2
    r = np.sqrt(np.abs(a))
    with np.errstate(invalid="ignore", divide="ignore"):
        pos = width * np.sinh(r) / r
        neg = width * np.sin(r) / r
    return np.where(a > 0, pos, np.where(a < 0, neg, width))


def _kb_table(width, beta):
    t = np.arange(int(0.5 * width * _KB_PER_CELL) + 1) / _KB_PER_CELL
    return kb_kernel(t, width, beta)


def _inverse_fourier(sino, pg, N):
    n_psi, n_phi, n_s = sino.shape
    R, ds = pg.R, pg.ds
    dx = 2.0 * R / (N - 1)
    P = sfft.next_fast_len(2 * n_s)
    gh = sfft.rfft(sino, n=P, axis=-1)  # (n_psi, n_phi, P//2 + 1)
    p = np.arange(gh.shape[-1])
    sig = 2 * np.pi * p / (P * ds)
    dsig = 2 * np.pi / (P * ds)
    # transform relative to s = 0 (first sample sits at s = -R)
    gh = ds * gh * np.exp(1j * sig * R)[None, None, :]
    wr = sig**2 * dsig
    if P % 2 == 0:
        wr[-1] *= 0.5
    wa = pg.direction_weights()  # dphi * lambda_k
    vals = gh * wa[:, :, None] * wr[None, None, :] / (2 * np.pi) ** 3
    nrm = pg.normals()  # (n_psi, n_phi, 3) as (x, y, z)
    keep = p > 0
    xi = sig[None, None, keep, None] * nrm[:, :, None, :]
    vals = vals[:, :, keep]
    G = sfft.next_fast_len(int(math.ceil(OVERSAMPLING * N)))
    beta = kb_beta(KB_WIDTH, G / N)
    # cell coordinates on the periodic fine lattice; the voxel index offset
    # (N - 1) / 2 cancels the phase of the centered frequency variable
    cells = np.mod(xi.reshape(-1, 3) * dx * G / (2 * np.pi), G)
    grid = kernels.nufft_spread(
        np.ascontiguousarray(cells),
        np.ascontiguousarray(vals.reshape(-1)),
        G,
        KB_WIDTH,
        _kb_table(KB_WIDTH, beta),
        float(_KB_PER_CELL),
    )
    F = sfft.ifftn(grid, workers=-1) * G**3  # F[g] = sum_h grid[h] exp(+2 pi i g h / G)
    c = (N - 1) // 2
    idx = (np.arange(N) - c) % G
    deapo = 1.0 / kb_transform((np.arange(N) - c) / G, KB_WIDTH, beta)
    # grid axes are (z, y, x) = cell columns (2, 1, 0) after the spread
    vol = F[np.ix_(idx, idx, idx)].real
    vol *= deapo[:, None, None] * deapo[None, :, None] * deapo[None, None, :]
    return vol


def _inverse_fbp(sino, pg, N):
    n_psi, n_phi, n_s = sino.shape
    R, ds = pg.R, pg.ds
    P = sfft.next_fast_len(4 * n_s)
    q2 = _filter_profiles(sino, second_derivative_kernel(P, ds), ds)
    dx = 2.0 * R / (N - 1)
    du = 0.5 * dx
    n_u = 2 * (N - 1) + 1
    H = kernels.fbp3d_stage1(
        np.ascontiguousarray(q2), pg.psi, pg.weights, -R, ds, -R, du, n_u, float(R), N
    )
    vol = kernels.fbp3d_stage2(H, pg.phi, -R, du, float(R), N)
    return vol * pg.dphi / (8 * np.pi**2)


def radon3d_inverse(sino, plane_grid, N=None, method="fourier"):
    """Invert plane data ``(n_psi, n_phi, n_s)`` onto an ``N^3`` grid (zero outside the ball)."""
    if not isinstance(plane_grid, PlaneGrid):
        raise TypeError("plane_grid must be a PlaneGrid")
    sino = np.asarray(sino, dtype=float)
    if sino.shape != plane_grid.shape:
        raise ValueError(f"plane data shape {sino.shape} does not match grid {plane_grid.shape}")
    N = plane_grid.n_s if N is None else int(N)
    if method == "fourier":
        if N % 2 == 0:
            raise ValueError("the Fourier route needs an odd N (symmetric voxel grid)")
        vol = _inverse_fourier(sino, plane_grid, N)
    elif method == "fbp":
        vol = _inverse_fbp(sino, plane_grid, N)
    else:
        raise ValueError(f"unknown 3D inversion method {method!r}")
    vol *= CartesianGrid(N, plane_grid.R).ball_mask()
    return vol
