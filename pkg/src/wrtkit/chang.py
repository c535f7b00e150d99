"""Chang-type inversion: classical inversion of the weighted data divided by ``w0``."""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateWeightError
from .forward import WeightEvaluator
from .grids import CartesianGrid, PlaneGrid, RayGrid
from .radon_inv import radon2d_inverse, radon3d_inverse

EPS = 1e-6
MASK_RADIUS = 0.95


@dataclass(frozen=True)
class W0Field:
    """Zeroth angular harmonic of a weight on the voxel grid (``[z, y, x]``)."""

    values: np.ndarray
    quadrature: str
    n_directions: int


def default_mask(N, R=1.0, radius=MASK_RADIUS):
    return CartesianGrid(N, R).ball_mask(radius * R)


def w0_2d(W, n_phi, N=None, R=1.0, radius=None):
    """Circular mean ``(1/n_phi) sum_j W(x, theta(phi_j + pi/2, pi/2))`` at every voxel."""
    if W is None or (isinstance(W, WeightEvaluator) and W.attenuation is None):
        if N is None:
            raise ValueError("N is required for the unit weight")
        return W0Field(np.ones((N, N, N)), "circle", n_phi)
    if not isinstance(W, WeightEvaluator):
        W = WeightEvaluator(W, R)
    c = W.harmonics(n_phi, 0, radius)
    return W0Field(np.ascontiguousarray(c[0].real), "circle", n_phi)


def w0_from_harmonics(c0, n_phi):
    return W0Field(np.ascontiguousarray(np.real(c0)), "circle", n_phi)


def w0_3d(w0_circle, plane_grid):
    """Spherical mean of the reduced weight with the product rule of ``plane_grid``.

    The reduced weight does not depend on the polar angle, so the product rule
    collapses to the circular mean times ``sum_k lambda_k / 2``.
    """
    if not isinstance(plane_grid, PlaneGrid):
        raise TypeError("plane_grid must be a PlaneGrid")
    if w0_circle.n_directions != plane_grid.n_phi:
        raise ValueError("w0 was sampled on a different set of azimuths")
    vals = w0_circle.values * (np.sum(plane_grid.weights) / 2.0)
    return W0Field(vals, "sphere", plane_grid.n_phi * plane_grid.n_psi)


def divide_by_w0(g, w0, mask, eps=EPS):
    """``g / w0`` on ``mask`` and 0 elsewhere; refuses ``w0 <= eps`` inside the mask."""
    w = np.asarray(w0.values if isinstance(w0, W0Field) else w0)
    if g.shape != w.shape or mask.shape != w.shape:
        raise ValueError(f"shape mismatch: data {g.shape}, w0 {w.shape}, mask {mask.shape}")
    bad = mask & ~(w > eps)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise DegenerateWeightError(f"w0 = {w[idx]:.3g} <= {eps:g} inside the mask at voxel {idx}")
    out = np.zeros_like(g, dtype=float)
    out[mask] = g[mask] / w[mask]
    return out


def chang2d(sino, w0, mask, R=1.0):
    """Chang inversion of one slice ``(n_phi, n_s)`` or a stack ``(n_l, n_phi, n_s)``.

    ``w0`` and ``mask`` have the matching image shape(s).
    """
    return divide_by_w0(radon2d_inverse(sino, R), w0, mask)


def chang3d(plane_sino, plane_grid, w0, mask, method="fourier", g=None):
    """Chang inversion of reduced plane data; ``g`` may pass a precomputed ``R^-1`` volume."""
    if g is None:
        g = radon3d_inverse(plane_sino, plane_grid, method=method)
    return divide_by_w0(g, w0, mask)


def slice_stack(rays, ray_grid, w0, mask):
    """Slice-by-slice Chang reconstruction; needs ``n_z == n_s`` so slices are voxel planes."""
    if not isinstance(ray_grid, RayGrid):
        raise TypeError("ray_grid must be a RayGrid")
    if ray_grid.n_z != ray_grid.n_s:
        raise ValueError("slice stacking needs n_z == n_s")
    return chang2d(rays, w0, mask, ray_grid.R)
