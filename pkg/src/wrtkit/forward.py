"""Attenuated ray transform, divergent beam transform and direct plane integrals.

Volumes are ``(N, N, N)`` arrays indexed ``[z, y, x]`` on a :class:`CartesianGrid`;
ray sinograms are ``(n_z, n_phi, n_s)`` arrays on a :class:`RayGrid`.

Quadrature along a chord of half-length ``L`` uses the lattice nodes
``t = q * ds`` strictly inside ``(-L, L)`` plus both end points, i.e. the
trapezoid rule with step ``ds`` and two shortened end intervals.  ``L`` is the
exact half-chord of the support ball, so no zero samples are wasted.
"""

import math

import numpy as np

from . import kernels
from .grids import CartesianGrid, RayGrid, azimuths, direction


def _grid_for(vol, R=1.0):
    return CartesianGrid(vol.shape[0], R)


def _check_volume(vol):
    vol = np.ascontiguousarray(vol, dtype=float)
    if vol.ndim != 3 or len(set(vol.shape)) != 1:
        raise ValueError(f"volume must be a cubic 3D array, got shape {vol.shape}")
    return vol


def sample_volume(vol, p, R=1.0):
    """Trilinear sample(s) of ``vol`` at point(s) ``p`` (shape ``(3,)`` or ``(M, 3)``)."""
    vol = _check_volume(vol)
    p = np.asarray(p, dtype=float)
    pts = np.atleast_2d(p)
    out = kernels.sample_volume(vol, float(R), np.ascontiguousarray(pts))
    return float(out[0]) if p.ndim == 1 else out


def chord_nodes(L, dt):
    """Lattice nodes strictly inside ``(-L, L)`` plus the end points."""
    q = math.floor(L / dt)
    if q * dt >= L:
        q -= 1
    return np.concatenate([[-L], np.arange(-q, q + 1) * dt, [L]])


def trapezoid_weights(nodes):
    w = np.zeros_like(nodes)
    h = 0.5 * np.diff(nodes)
    w[:-1] += h
    w[1:] += h
    return w


def divergent_beam(a, x, theta, dt=None, R=1.0):
    """``Da(x, theta)``: trapezoid integral of ``a`` along the half-line ``x + t theta``.

    The half-line is truncated at its analytic exit from the support ball;
    nodes are ``0, dt, 2 dt, ...`` plus the exit point.
    """
    a = _check_volume(a)
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if dt is None:
        dt = _grid_for(a, R).spacing
    b = x @ theta
    c = x @ x - R * R
    disc = b * b - c
    if disc <= 0:
        return 0.0
    T = -b + math.sqrt(disc)
    if T <= 0:
        return 0.0
    n = math.floor(T / dt)
    if n * dt >= T:
        n -= 1
    t = np.concatenate([np.arange(n + 1) * dt, [T]])
    vals = sample_volume(a, x[None, :] + t[:, None] * theta[None, :], R)
    return float(np.sum(trapezoid_weights(t) * vals))


class WeightEvaluator:
    """Attenuation weight ``W_a(x, theta) = exp(-Da(x, theta))``.

    ``attenuation=None`` gives the constant weight 1.
    """

    def __init__(self, attenuation=None, R=1.0, dt=None):
        self.attenuation = None if attenuation is None else _check_volume(attenuation)
        self.R = float(R)
        if dt is None and self.attenuation is not None:
            dt = _grid_for(self.attenuation, R).spacing
        self.dt = dt

    @property
    def is_unit(self):
        return self.attenuation is None or not np.any(self.attenuation)

    def __call__(self, x, theta):
        if self.attenuation is None:
            return 1.0
        return math.exp(-divergent_beam(self.attenuation, x, theta, self.dt, self.R))

    def in_slice(self, x, alpha):
        """Weight for the in-slice direction of angle ``alpha``."""
        return self(x, direction(alpha, 0.5 * np.pi))

    def harmonics(self, n_phi, K, radius=None):
        """Fourier coefficients ``c_k(x)``, ``k = 0..K``, of ``alpha -> W(x, theta(alpha, pi/2))``.

        Directions are the ``n_phi`` ray directions of a matching ray grid.
        Returns a complex ``(K + 1, N, N, N)`` array (zero outside ``radius``).
        """
        if self.attenuation is None:
            raise ValueError("unit weight has trivial harmonics; no volume to sample")
        N = self.attenuation.shape[0]
        phis = azimuths(n_phi)
        r = self.R if radius is None else radius
        dt = self.dt if self.dt is not None else 2 * self.R / (N - 1)
        return kernels.weight_harmonics(self.attenuation, self.R, phis, dt, int(K), float(r))


def _as_weight(w, R):
    if w is None or isinstance(w, WeightEvaluator):
        return w if w is not None else WeightEvaluator(None, R)
    return WeightEvaluator(w, R)


def ray_transform(f, w, z, s, phi, dt=None, R=1.0):
    """Single-ray value of ``P_W f``, the reference form of :func:`project_all`.

    ``Da`` at each chord node is the trapezoid sum over the chord nodes that
    follow it, evaluated separately per node.  For lattice nodes this is
    exactly :func:`divergent_beam`; :func:`project_all` obtains the same sums
    with one reverse cumulative pass.
    """
    f = _check_volume(f)
    w = _as_weight(w, R)
    if dt is None:
        dt = _grid_for(f, R).spacing
    rho2 = R * R - z * z - s * s
    if rho2 <= 0:
        return 0.0
    t = chord_nodes(math.sqrt(rho2), dt)
    pts = np.stack(
        [s * math.cos(phi) - t * math.sin(phi), s * math.sin(phi) + t * math.cos(phi), np.full_like(t, z)],
        axis=1,
    )
    fv = sample_volume(f, pts, R)
    if w.attenuation is None:
        wv = np.ones_like(fv)
    else:
        av = sample_volume(w.attenuation, pts, R)
        wv = np.array([math.exp(-np.sum(trapezoid_weights(t[k:]) * av[k:])) for k in range(len(t))])
    return float(np.sum(trapezoid_weights(t) * wv * fv))


def project_all(f, w, ray_grid):
    """``P_W f`` on every ray of ``ray_grid``; returns ``(n_z, n_phi, n_s)``."""
    f = _check_volume(f)
    if not isinstance(ray_grid, RayGrid):
        raise TypeError("ray_grid must be a RayGrid")
    R = ray_grid.R
    w = _as_weight(w, R)
    mu = w.attenuation
    has_mu = mu is not None
    if mu is None:
        mu = np.zeros((2, 2, 2))
    elif mu.shape != f.shape:
        raise ValueError("activity and attenuation volumes must share a grid")
    return kernels.project_rays(
        f, mu, has_mu, R, ray_grid.z, ray_grid.s, ray_grid.phi, ray_grid.ds
    )


def plane_frame(theta):
    """Orthonormal ``(e1, e2)`` spanning the plane orthogonal to ``theta``."""
    th = np.asarray(theta, dtype=float)
    e1 = np.array([-th[1], th[0], 0.0]) if abs(th[2]) < 0.9 else np.array([0.0, -th[2], th[1]])
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(th, e1)


def plane_transform_direct(f, s, theta, weight=None, dt=None, R=1.0):
    """Tensor-trapezoid integral of ``weight * f`` over the plane ``x . theta = s``.

    ``weight`` is an optional callable ``weight(points) -> values`` for points of
    shape ``(M, 3)``; the in-plane weight of the reduced problem.
    """
    f = _check_volume(f)
    theta = np.asarray(theta, dtype=float)
    theta = theta / np.linalg.norm(theta)
    if dt is None:
        dt = _grid_for(f, R).spacing
    if weight is None:
        out = kernels.plane_integrals(f, float(R), np.array([float(s)]), theta[None, :], float(dt))
        return float(out[0, 0])
    rho2 = R * R - s * s
    if rho2 <= 0:
        return 0.0
    u = chord_nodes(math.sqrt(rho2), dt)
    wu = trapezoid_weights(u)
    e1, e2 = plane_frame(theta)
    U, V = np.meshgrid(u, u, indexing="ij")
    inside = U * U + V * V <= rho2
    pts = s * theta[None, :] + U[inside][:, None] * e1[None, :] + V[inside][:, None] * e2[None, :]
    vals = sample_volume(f, pts, R) * np.asarray(weight(pts))
    return float(np.sum((wu[:, None] * wu[None, :])[inside] * vals))


def plane_integrals(f, s, normals, dt=None, R=1.0):
    """Unweighted plane integrals for every normal (rows) and offset; ``(n_dir, n_s)``."""
    f = _check_volume(f)
    if dt is None:
        dt = _grid_for(f, R).spacing
    normals = np.ascontiguousarray(np.atleast_2d(normals), dtype=float)
    return kernels.plane_integrals(f, float(R), np.asarray(s, dtype=float), normals, float(dt))
