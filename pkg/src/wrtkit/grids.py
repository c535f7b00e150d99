"""Sampling grids: Cartesian voxels, rays parallel to the XY plane, oriented planes.

All coordinates are in normalized grid units (support radius ``R``, default 1).
Indices are 0-based everywhere; the affine index -> coordinate maps live here
and nowhere else.
"""

import math
from dataclasses import dataclass, field

import numpy as np


def _legendre_pair(n, x):
    """``(P_n(x), P_{n-1}(x))`` by the three-term recurrence."""
    p0 = np.ones_like(x)
    p1 = x.copy()
    for j in range(2, n + 1):
        p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
    return p1, p0


def gauss_legendre(n, tol=1e-14, max_iter=100):
    """Nodes and weights of the ``n``-point Gauss-Legendre rule on [-1, 1].

    Nodes come from Newton iteration on the Legendre three-term recurrence,
    started from the Tricomi asymptotic guess.  Nodes are returned in
    increasing order.
    """
    n = int(n)
    if n < 1:
        raise ValueError("Gauss-Legendre rule needs n >= 1")
    k = np.arange(1, n + 1)
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(max_iter):
        pn, pm = _legendre_pair(n, x)
        dx = pn / (n * (x * pn - pm) / (x * x - 1.0))
        x = x - dx
        if np.max(np.abs(dx)) < tol:
            break
    pn, pm = _legendre_pair(n, x)
    dp = n * (x * pn - pm) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    x, w = x[order], w[order]
    # symmetrize against round-off
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return x, w


def azimuths(n_phi):
    """Uniform full-circle angles ``2 pi k / n_phi``; every module samples these exact nodes."""
    return (2.0 * math.pi / n_phi) * np.arange(n_phi)


def ray_point(z, s, phi, t):
    """Point at parameter ``t`` on the ray ``(z, s, phi)``.

    The ray lies in the slice at height ``z``, at signed offset ``s`` along
    ``(cos phi, sin phi, 0)`` and runs along ``(-sin phi, cos phi, 0)``.
    """
    c, si = np.cos(phi), np.sin(phi)
    return np.array([s * c - t * si, s * si + t * c, z + 0.0 * t])


def direction(phi, psi):
    """Unit vector with azimuth ``phi`` and polar angle ``psi``."""
    sp = np.sin(psi)
    return np.array([sp * np.cos(phi), sp * np.sin(phi), np.cos(psi) + 0.0 * phi])


@dataclass(frozen=True)
class Direction:
    phi: float
    psi: float
    vector: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vector", direction(self.phi, self.psi))


@dataclass(frozen=True)
class CartesianGrid:
    """``N`` nodes per axis on ``[-R, R]^3``."""

    N: int
    R: float = 1.0

    def __post_init__(self):
        if int(self.N) < 2:
            raise ValueError("CartesianGrid needs N >= 2")
        if not self.R > 0:
            raise ValueError("CartesianGrid needs R > 0")

    @property
    def spacing(self):
        return 2.0 * self.R / (self.N - 1)

    @property
    def axis(self):
        return -self.R + self.spacing * np.arange(self.N)

    @property
    def shape(self):
        return (self.N, self.N, self.N)

    def coord(self, index):
        return -self.R + self.spacing * np.asarray(index, dtype=float)

    def nearest_index(self, x):
        return np.rint((np.asarray(x, dtype=float) + self.R) / self.spacing).astype(int)

    def mesh(self):
        """Coordinate arrays ``(z, y, x)`` broadcastable to ``shape``."""
        ax = self.axis
        return ax[:, None, None], ax[None, :, None], ax[None, None, :]

    def ball_mask(self, radius=None):
        r = self.R if radius is None else radius
        z, y, x = self.mesh()
        return x * x + y * y + z * z <= r * r * (1 + 1e-12)

    def slice_mask(self, z, radius=None):
        r = self.R if radius is None else radius
        ax = self.axis
        return ax[None, :] ** 2 + ax[:, None] ** 2 + z * z <= r * r * (1 + 1e-12)


@dataclass(frozen=True)
class RayGrid:
    """Rays ``gamma(z_i, s_j, phi_k)``; sinogram arrays are shaped ``(n_z, n_phi, n_s)``."""

    n_z: int
    n_s: int
    n_phi: int
    R: float = 1.0

    def __post_init__(self):
        if self.n_z < 2 or self.n_s < 2 or self.n_phi < 1:
            raise ValueError("RayGrid needs n_z, n_s >= 2 and n_phi >= 1")
        if not self.R > 0:
            raise ValueError("RayGrid needs R > 0")

    @property
    def dz(self):
        return 2.0 * self.R / (self.n_z - 1)

    @property
    def ds(self):
        return 2.0 * self.R / (self.n_s - 1)

    @property
    def dphi(self):
        return 2.0 * math.pi / self.n_phi

    @property
    def z(self):
        return -self.R + self.dz * np.arange(self.n_z)

    @property
    def s(self):
        return -self.R + self.ds * np.arange(self.n_s)

    @property
    def phi(self):
        return azimuths(self.n_phi)

    @property
    def shape(self):
        return (self.n_z, self.n_phi, self.n_s)


@dataclass(frozen=True)
class PlaneGrid:
    """Oriented planes ``(s_i, theta(phi_j, psi_k))``; arrays shaped ``(n_psi, n_phi, n_s)``.

    ``psi_k = arccos(t_k)`` with ``t_k`` the Gauss-Legendre nodes on [-1, 1],
    so no plane normal is parallel to the z axis.
    """

    n_s: int
    n_phi: int
    n_psi: int
    R: float = 1.0
    t: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_s < 2 or self.n_phi < 1 or self.n_psi < 1:
            raise ValueError("PlaneGrid needs n_s >= 2, n_phi >= 1, n_psi >= 1")
        if not self.R > 0:
            raise ValueError("PlaneGrid needs R > 0")
        t, w = gauss_legendre(self.n_psi)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "weights", w)

    @property
    def ds(self):
        return 2.0 * self.R / (self.n_s - 1)

    @property
    def dphi(self):
        return 2.0 * math.pi / self.n_phi

    @property
    def s(self):
        return -self.R + self.ds * np.arange(self.n_s)

    @property
    def phi(self):
        return azimuths(self.n_phi)

    @property
    def psi(self):
        return np.arccos(self.t)

    @property
    def shape(self):
        return (self.n_psi, self.n_phi, self.n_s)

    def normals(self):
        """Unit normals shaped ``(n_psi, n_phi, 3)``."""
        phi = self.phi[None, :]
        psi = self.psi[:, None]
        return np.stack(
            [np.sin(psi) * np.cos(phi), np.sin(psi) * np.sin(phi), np.cos(psi) + 0 * phi], axis=-1
        )

    def direction_weights(self):
        """Sphere quadrature weights ``dphi * lambda_k`` shaped ``(n_psi, n_phi)``."""
        return np.broadcast_to(self.weights[:, None] * self.dphi, (self.n_psi, self.n_phi))


def build_ray_grid(n_z, n_s, n_phi, R=1.0):
    return RayGrid(int(n_z), int(n_s), int(n_phi), float(R))


def build_plane_grid(n_s, n_phi, n_psi, R=1.0):
    if n_psi < 2:
        raise ValueError("PlaneGrid needs n_psi >= 2")
    return PlaneGrid(int(n_s), int(n_phi), int(n_psi), float(R))
