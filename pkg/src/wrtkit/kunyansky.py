"""Kunyansky-type iterative inversion.

The weight is expanded in angular harmonics.  In 2D, with ``alpha`` the ray
direction angle,

    W(x, alpha) = sum_k c_k(x) exp(i k alpha),

and the projection theorem gives ``R^-1 R_W f = sum_k i^k T_k[c_k f]`` where
``T_k`` is the Fourier multiplier ``exp(i k phi_xi)``.  Full-circle data make
odd ``k`` vanish.  Writing ``u = c_0 f`` this is ``(I + Q_inf) u = R^-1 R_W f``;
the order-``m`` operator keeps the even harmonics ``0 < |k| <= 2m``:

    Q_m u = P_D sum_{k even, 0 < |k| <= 2m} i^k T_k[(c_k / c_0) u].

In 3D the reduced weight ``w(x, theta) = sum_{l,j} w_lj(x) Y_lj(theta)`` enters
the same way with multipliers ``Y_lj(xi / |xi|)`` and even degrees
``2 <= l <= 2m``.  Each ``T`` is unitary on square-integrable functions, which
gives the bound ``sigma`` computed by :func:`sigma_bound`.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft
from scipy.special import sph_harm_y

from .chang import MASK_RADIUS, divide_by_w0, default_mask
from .errors import ConvergenceError
from .forward import WeightEvaluator
from .grids import PlaneGrid, azimuths
from .radon_inv import radon2d_inverse, radon3d_inverse

log = logging.getLogger(__name__)


def circular_harmonics(samples, K, alphas=None):
    """``c_k = mean_j samples[..., j] exp(-i k alpha_j)`` for ``k = 0..K``.

    ``alphas`` defaults to ``2 pi j / n``.  Returns ``(K + 1, ...)``.
    """
    samples = np.asarray(samples)
    n = samples.shape[-1]
    if n < 2 * K + 2:
        raise ValueError(f"{n} directions cannot resolve harmonics up to order {K}; need >= {2 * K + 2}")
    if alphas is None:
        alphas = azimuths(n)
    k = np.arange(K + 1)
    basis = np.exp(-1j * np.outer(k, alphas)) / n
    return np.moveaxis(samples @ basis.T, -1, 0)


def sphere_factors(plane_grid, L):
    """``A[l, j] = sum_k lambda_k Y_lj(psi_k, 0)`` for ``0 <= j <= l <= L``."""
    A = np.zeros((L + 1, L + 1))
    for l in range(L + 1):
        for j in range(l + 1):
            A[l, j] = np.sum(plane_grid.weights * sph_harm_y(l, j, plane_grid.psi, 0.0).real)
    # entries the quadrature integrates to zero come out as rounding noise; make them exact
    A[np.abs(A) < 1e-12] = 0.0
    return A


def spherical_harmonics(samples, plane_grid, L):
    """Coefficients ``w_lj`` (``j = -l..l``) of samples ``(..., n_psi, n_phi)`` by the product rule.

    Returned as a dict ``{(l, j): array}``.
    """
    pg = plane_grid
    if pg.n_phi < 2 * L + 2 or pg.n_psi < L + 1:
        raise ValueError(f"plane grid {pg.n_psi}x{pg.n_phi} cannot resolve degree {L}")
    samples = np.asarray(samples)
    wts = pg.direction_weights()
    out = {}
    for l in range(L + 1):
        for j in range(-l, l + 1):
            Y = sph_harm_y(l, j, pg.psi[:, None], pg.phi[None, :])
            out[(l, j)] = np.sum(samples * (wts * np.conj(Y)), axis=(-2, -1))
    return out


@dataclass
class HarmonicWeight:
    """Circular harmonics ``c_k``, ``k = 0..K`` of a weight on the voxel grid.

    For ``dim == 3`` the spherical coefficients of the reduced weight follow as
    ``w_lj = 2 pi A_lj i^j c_j`` (``j >= 0``) with ``A`` from :func:`sphere_factors`.
    """

    coeffs: np.ndarray
    dim: int = 2
    plane_grid: PlaneGrid = None
    A: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        if self.dim == 3:
            if self.plane_grid is None:
                raise ValueError("a 3D harmonic weight needs the plane grid")
            if self.A is None:
                self.A = sphere_factors(self.plane_grid, self.K)

    @property
    def K(self):
        return self.coeffs.shape[0] - 1

    @property
    def w0(self):
        c0 = self.coeffs[0].real
        if self.dim == 2:
            return c0
        return c0 * (np.sum(self.plane_grid.weights) / 2.0)

    def c(self, k):
        return self.coeffs[k] if k >= 0 else np.conj(self.coeffs[-k])

    def w(self, l, j):
        """Spherical coefficient ``w_lj`` of the reduced weight (``dim == 3``)."""
        if abs(j) > l or l > self.K:
            raise ValueError("need |j| <= l <= K")
        if j < 0:
            return (-1) ** j * np.conj(self.w(l, -j))
        return 2 * np.pi * self.A[l, j] * (1j**j) * self.coeffs[j]

    def terms(self, m):
        """Nonzero harmonic terms entering ``Q_m``: ``(k,)`` in 2D, ``(l, j >= 0)`` in 3D."""
        if 2 * m > self.K:
            raise ValueError(f"order m={m} needs harmonics up to {2 * m}, stored K={self.K}")
        if self.dim == 2:
            return [(k,) for k in range(2, 2 * m + 1, 2)]
        return [
            (l, j)
            for l in range(2, 2 * m + 1, 2)
            for j in range(0, l + 1)
            if self.A[l, j] != 0
        ]

    def slice(self, iz):
        """2D harmonic weight of one z slice."""
        if self.dim != 2:
            raise ValueError("slicing is defined for the 2D weight")
        return HarmonicWeight(self.coeffs[:, iz], 2)


def harmonic_weight(W, n_phi, K, dim=2, plane_grid=None, N=None, radius=None):
    """Harmonic expansion of the attenuation weight at every voxel.

    ``W`` is a :class:`WeightEvaluator`, an attenuation volume, or None (unit
    weight; ``N`` required).
    """
    if W is not None and not isinstance(W, WeightEvaluator):
        W = WeightEvaluator(W)
    if n_phi < 2 * K + 2:
        raise ValueError(f"{n_phi} directions cannot resolve harmonics up to order {K}")
    if W is None or W.attenuation is None:
        if N is None:
            raise ValueError("N is required for the unit weight")
        c = np.zeros((K + 1, N, N, N), dtype=complex)
        c[0] = 1.0
    else:
        c = W.harmonics(n_phi, K, radius)
    if dim == 3 and plane_grid is not None and plane_grid.n_phi != n_phi:
        raise ValueError("plane grid azimuths differ from the weight's directions")
    return HarmonicWeight(c, dim, plane_grid)


def sigma_bound(hw, D, m):
    """Upper bound for the operator norm of ``Q_m`` on functions supported in ``D``."""
    if m == 0:
        return 0.0
    terms = hw.terms(m)
    w0 = hw.w0[D]
    if hw.dim == 2:
        return float(sum(2.0 * np.max(np.abs(hw.c(k)[D]) / w0) for (k,) in terms))
    total = 0.0
    for l in range(2, 2 * m + 1, 2):
        sq = np.abs(hw.w(l, 0)[D]) ** 2
        for j in range(1, l + 1):
            sq = sq + 2.0 * np.abs(hw.w(l, j)[D]) ** 2
        total += math.sqrt((2 * l + 1) / (4 * np.pi)) * float(np.max(np.sqrt(sq) / w0))
    return total


def _pad_len(N):
    return sfft.next_fast_len(int(math.ceil(1.5 * N)))


def _freqs(G, ndim):
    f = sfft.fftfreq(G)
    return np.meshgrid(*([f] * ndim), indexing="ij")


def multiplier_2d(k, G):
    """``exp(i k phi_xi)`` on a ``G x G`` FFT lattice (axes ``[y, x]``); 0 at the origin."""
    fy, fx = _freqs(G, 2)
    r = np.hypot(fx, fy)
    with np.errstate(invalid="ignore", divide="ignore"):
        m = ((fx + 1j * fy) / r) ** k
    m[0, 0] = 0.0
    return m


def multiplier_3d(l, j, G):
    """``Y_lj(xi / |xi|)`` on a ``G^3`` FFT lattice (axes ``[z, y, x]``); 0 at the origin."""
    fz, fy, fx = _freqs(G, 3)
    r = np.sqrt(fx * fx + fy * fy + fz * fz)
    with np.errstate(invalid="ignore", divide="ignore"):
        pol = np.arccos(np.clip(fz / r, -1.0, 1.0))
    az = np.arctan2(fy, fx)
    m = sph_harm_y(l, j, np.nan_to_num(pol), az)
    m[0, 0, 0] = 0.0
    return m


def apply_multiplier(u, mult, ndim):
    """Apply a Fourier multiplier on the last ``ndim`` axes with zero padding to ``mult.shape``."""
    G = mult.shape[0]
    N = u.shape[-1]
    axes = tuple(range(-ndim, 0))
    U = sfft.fftn(u, s=(G,) * ndim, axes=axes, workers=-1)
    out = sfft.ifftn(U * mult, axes=axes, workers=-1)
    return out[(Ellipsis,) + (slice(0, N),) * ndim]


class QOperator:
    """``Q_m`` for a fixed harmonic weight and domain, with multipliers cached."""

    def __init__(self, hw, D, m):
        self.hw, self.D, self.m = hw, np.asarray(D, dtype=bool), int(m)
        self.terms = hw.terms(self.m) if self.m > 0 else []
        N = D.shape[-1]
        self.G = _pad_len(N)
        w0 = hw.w0
        safe = np.where(self.D, w0, 1.0)
        self._mult = []
        for t in self.terms:
            if hw.dim == 2:
                (k,) = t
                ratio = np.where(self.D, (1j**k) * hw.c(k) / safe, 0.0)
                mult = multiplier_2d(k, self.G)
            else:
                l, j = t
                ratio = np.where(self.D, hw.w(l, j) / safe, 0.0)
                mult = multiplier_3d(l, j, self.G)
            self._mult.append((t, ratio, mult, 1.0 if t[-1] == 0 else 2.0))

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        if not self.terms:
            return out
        ndim = self.hw.dim
        for _t, ratio, mult, fac in self._mult:
            out += fac * apply_multiplier(ratio * u, mult, ndim).real
        out[~np.broadcast_to(self.D, out.shape)] = 0.0
        return out


def apply_Q(u, hw, D, m):
    return QOperator(hw, D, m)(u)


@dataclass
class KunyanskyConfig:
    m: int = 1
    max_iter: int = 50
    tol: float = 1e-6
    D: np.ndarray = None


@dataclass
class SolveInfo:
    sigma: float
    iterations: int
    converged: bool
    updates: list
    ratios: list
    residual: float
    log_lines: list


def solve(g, hw, cfg, Q=None):
    """Successive approximations ``u <- g - Q u`` for ``(I + Q_m) u = g`` on ``D``.

    Returns ``(f, u, info)`` with ``f = u / w0`` on ``D``.
    """
    D = cfg.D
    if D is None:
        D = default_mask(g.shape[-1], 1.0, MASK_RADIUS)
        if hw.dim == 2 and g.ndim == 2:
            raise ValueError("a 2D solve needs an explicit domain mask")
    D = np.broadcast_to(D, g.shape)
    sigma = sigma_bound(hw, D, cfg.m)
    if sigma >= 1.0:
        raise ConvergenceError(
            f"sigma = {sigma:.4f} >= 1: successive approximations are not guaranteed to converge",
            sigma,
        )
    Q = QOperator(hw, D, cfg.m) if Q is None else Q
    g = np.where(D, g, 0.0)
    u = g
    updates, ratios, lines = [], [], []
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        nxt = g - Q(u)
        upd = float(np.linalg.norm(nxt - u))
        ratio = upd / updates[-1] if updates and updates[-1] > 0 else float("nan")
        updates.append(upd)
        ratios.append(ratio)
        line = f"{it} {upd:.6e} {ratio:.6f}"
        lines.append(line)
        log.debug(line)
        base = float(np.linalg.norm(u))
        u = nxt
        if base == 0 or upd / base < cfg.tol:
            converged = True
            break
    gn = float(np.linalg.norm(g))
    residual = float(np.linalg.norm(u + Q(u) - g)) / gn if gn > 0 else 0.0
    if converged and residual > cfg.tol * (1 + sigma) / (1 - sigma):
        raise ConvergenceError(f"residual certificate failed: {residual:.3e}", sigma)
    f = divide_by_w0(u, np.broadcast_to(hw.w0, u.shape), D)
    return f, u, SolveInfo(sigma, it, converged, updates, ratios, residual, lines)


def kun2d(sino, hw, cfg, R=1.0, g=None):
    """Kunyansky inversion of one slice (or a stack) of ray data; ``hw`` matches the slice(s)."""
    if g is None:
        g = radon2d_inverse(sino, R)
    return solve(g, hw, cfg)


def kun3d(plane_sino, plane_grid, hw, cfg, method="fourier", g=None):
    if g is None:
        g = radon3d_inverse(plane_sino, plane_grid, method=method)
    return solve(g, hw, cfg)
