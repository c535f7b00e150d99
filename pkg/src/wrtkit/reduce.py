"""Rebinning of ray data on horizontal slices into plane data.

A plane ``x . theta(phi, psi) = s`` meets the slice ``z`` along the ray with
offset ``sigma`` and angle ``phi``; in plane coordinates ``(s, tau)``

    z     = s cos(psi) + tau sin(psi)
    sigma = s sin(psi) - tau cos(psi)

and the plane integral is the ``tau``-integral of the ray data along this
curve.  Ray values off the grid are read with a natural cubic spline in
``sigma`` on the three nearest slices, followed by quadratic interpolation in
``z``.  At the chord ends ``tau = +-sqrt(R^2 - s^2)`` the ray is tangent to the
support ball, so the end values are exactly zero and only the shortened end
intervals of the trapezoid rule remain.
"""

import numpy as np
from scipy.linalg import solve_banded

from . import kernels
from .grids import PlaneGrid, RayGrid, azimuths, direction


def spline_second_derivatives(rows, h):
    """Natural cubic spline second derivatives along the last axis (uniform step ``h``)."""
    rows = np.asarray(rows, dtype=float)
    n = rows.shape[-1]
    flat = rows.reshape(-1, n)
    M = np.zeros_like(flat)
    if n > 2:
        rhs = 6.0 * (flat[:, 2:] - 2.0 * flat[:, 1:-1] + flat[:, :-2]) / (h * h)
        ab = np.zeros((3, n - 2))
        ab[0, 1:] = 1.0
        ab[1, :] = 4.0
        ab[2, :-1] = 1.0
        M[:, 1:-1] = solve_banded((1, 1), ab, rhs.T).T
    return M.reshape(rows.shape)


def _check(rays, ray_grid):
    if not isinstance(ray_grid, RayGrid):
        raise TypeError("ray_grid must be a RayGrid")
    rays = np.ascontiguousarray(rays, dtype=float)
    if rays.shape != ray_grid.shape:
        raise ValueError(f"ray data shape {rays.shape} does not match grid {ray_grid.shape}")
    if ray_grid.n_z < 3:
        raise ValueError("quadratic interpolation in z needs at least 3 slices")
    return rays


def reduce_psi(rays, ray_grid, psis):
    """Plane data for the planes ``(s_i, theta(phi_j, psi))`` for arbitrary polar angles.

    Offsets and azimuths are those of ``ray_grid``.  Returns ``(len(psis), n_phi, n_s)``.
    """
    rays = _check(rays, ray_grid)
    M = spline_second_derivatives(rays, ray_grid.ds)
    psis = np.ascontiguousarray(np.atleast_1d(psis), dtype=float)
    return kernels.reduce_planes(rays, M, ray_grid.R, ray_grid.dz, ray_grid.ds, psis)


def reduce(rays, ray_grid, plane_grid):
    """``R_w f`` on ``plane_grid`` from ``P_W f`` on ``ray_grid``."""
    if not isinstance(plane_grid, PlaneGrid):
        raise TypeError("plane_grid must be a PlaneGrid")
    if (plane_grid.n_s, plane_grid.n_phi, plane_grid.R) != (ray_grid.n_s, ray_grid.n_phi, ray_grid.R):
        raise ValueError("ray and plane grids must share n_s, n_phi and R")
    return reduce_psi(rays, ray_grid, plane_grid.psi)


def reduce_weight(W, x, phi, psi):
    """Weight of the reduced problem: ``W(x, theta(phi + pi/2, pi/2))`` for every ``psi``."""
    return W(x, direction(phi + 0.5 * np.pi, 0.5 * np.pi))


def reduced_w0(W, x, plane_grid=None, n_phi=128):
    """Spherical mean of the reduced weight at ``x``.

    With ``plane_grid`` the product rule of the grid is used (weights
    ``dphi * lambda_k / 4 pi``); otherwise the equivalent circular mean over
    ``n_phi`` in-slice directions.
    """
    if plane_grid is None:
        phis = azimuths(n_phi)
        return float(np.mean([reduce_weight(W, x, p, 0.5 * np.pi) for p in phis]))
    vals = np.array([reduce_weight(W, x, p, 0.5 * np.pi) for p in plane_grid.phi])
    wts = plane_grid.direction_weights() / (4 * np.pi)
    # the reduced weight does not depend on psi, but sum the full product rule anyway
    return float(np.sum(wts * vals[None, :]))
