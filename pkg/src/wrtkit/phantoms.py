"""Ellipsoid/shell phantoms with region-override semantics.

Geometry is given in grid units; physical values are per cm and are converted
to per-grid-unit values on rasterization (multiplied by ``scale_cm_per_unit``)
when the spec is an attenuation map.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .grids import CartesianGrid


@dataclass(frozen=True)
class Ellipsoid:
    center: tuple
    semi_axes: tuple
    value: float
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=float)
        if rot.shape != (3, 3) or not np.allclose(rot.T @ rot, np.eye(3), atol=1e-10):
            raise ValueError("ellipsoid rotation must be an orthogonal 3x3 matrix")
        if min(self.semi_axes) <= 0:
            raise ValueError("ellipsoid semi-axes must be positive")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "semi_axes", tuple(float(a) for a in self.semi_axes))

    def contains(self, x, y, z):
        # columns of `rotation` are the ellipsoid axes in world coordinates
        d = (x - self.center[0], y - self.center[1], z - self.center[2])
        q = 0.0
        for k in range(3):
            u = self.rotation[0, k] * d[0] + self.rotation[1, k] * d[1] + self.rotation[2, k] * d[2]
            q = q + (u / self.semi_axes[k]) ** 2
        return q <= 1.0

    def extent(self):
        return math.sqrt(sum(c * c for c in self.center)) + max(self.semi_axes)

    def chord(self, p0, d):
        """Parameter interval ``(t0, t1)`` of the line ``p0 + t d`` inside, or None."""
        p = self.rotation.T @ (np.asarray(p0, float) - np.asarray(self.center))
        v = self.rotation.T @ np.asarray(d, float)
        a = np.asarray(self.semi_axes)
        A = np.sum((v / a) ** 2)
        B = 2 * np.sum(p * v / a**2)
        C = np.sum((p / a) ** 2) - 1
        disc = B * B - 4 * A * C
        if disc <= 0:
            return None
        r = math.sqrt(disc)
        return ((-B - r) / (2 * A), (-B + r) / (2 * A))


@dataclass(frozen=True)
class SphericalShell:
    center: tuple
    r_inner: float
    r_outer: float
    value: float

    def __post_init__(self):
        if not 0 <= self.r_inner < self.r_outer:
            raise ValueError("shell needs 0 <= r_inner < r_outer")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    def contains(self, x, y, z):
        r2 = (x - self.center[0]) ** 2 + (y - self.center[1]) ** 2 + (z - self.center[2]) ** 2
        return (r2 <= self.r_outer**2) & (r2 >= self.r_inner**2)

    def extent(self):
        return math.sqrt(sum(c * c for c in self.center)) + self.r_outer

    def chord(self, p0, d):
        """Union of parameter intervals inside the shell, as a list."""
        out = _ball_chord(self.center, self.r_outer, p0, d)
        if out is None:
            return []
        inn = _ball_chord(self.center, self.r_inner, p0, d) if self.r_inner > 0 else None
        if inn is None:
            return [out]
        return [(out[0], inn[0]), (inn[1], out[1])]


def _ball_chord(center, r, p0, d):
    p = np.asarray(p0, float) - np.asarray(center)
    d = np.asarray(d, float)
    A = d @ d
    B = 2 * (p @ d)
    C = p @ p - r * r
    disc = B * B - 4 * A * C
    if disc <= 0:
        return None
    q = math.sqrt(disc)
    return ((-B - q) / (2 * A), (-B + q) / (2 * A))


@dataclass(frozen=True)
class PhantomSpec:
    """Ordered primitives; later ones overwrite earlier ones inside their support."""

    primitives: tuple
    scale_cm_per_unit: float = 10.0
    attenuation: bool = False
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "primitives", tuple(self.primitives))
        if not self.scale_cm_per_unit > 0:
            raise ValueError("scale_cm_per_unit must be positive")

    @property
    def unit_factor(self):
        """Factor applied to primitive values on rasterization."""
        return self.scale_cm_per_unit if self.attenuation else 1.0

    def evaluate(self, x, y, z):
        """Brute-force point evaluation (grid-unit values)."""
        x, y, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z)))
        out = np.zeros(x.shape)
        for p in self.primitives:
            out = np.where(p.contains(x, y, z), p.value * self.unit_factor, out)
        return out

    def line_integral(self, p0, d, t_range=(-1.0, 1.0)):
        """Exact integral along ``p0 + t d`` (|d| = 1) for ``t`` in ``t_range``.

        Breakpoints are the analytic primitive/line intersections; between
        consecutive breakpoints the region-override value is constant.
        """
        d = np.asarray(d, float)
        d = d / np.linalg.norm(d)
        p0 = np.asarray(p0, float)
        cuts = {t_range[0], t_range[1]}
        for p in self.primitives:
            ivs = p.chord(p0, d)
            if ivs is None:
                continue
            if isinstance(ivs, tuple):
                ivs = [ivs]
            for a, b in ivs:
                cuts.update(t for t in (a, b) if t_range[0] < t < t_range[1])
        ts = np.array(sorted(cuts))
        mids = 0.5 * (ts[1:] + ts[:-1])
        pts = p0[:, None] + d[:, None] * mids[None, :]
        vals = self.evaluate(pts[0], pts[1], pts[2])
        return float(np.sum(vals * np.diff(ts)))


def rasterize(spec, grid):
    """Sample the phantom at the nodes of ``grid``; returns an ``(N, N, N)`` array ``[z, y, x]``."""
    if not isinstance(grid, CartesianGrid):
        grid = CartesianGrid(int(grid))
    for p in spec.primitives:
        if p.extent() > grid.R + 1e-12:
            raise ValueError(f"primitive {p} exceeds the support ball of radius {grid.R}")
    z, y, x = grid.mesh()
    out = spec.evaluate(x, y, z)
    out[~grid.ball_mask()] = 0.0
    return out


def scale_attenuation(spec, factor):
    if not factor > 0:
        raise ValueError("scale factor must be positive")
    prims = tuple(replace(p, value=p.value * factor) for p in spec.primitives)
    return replace(spec, primitives=prims)


# Kak-Slaney 3D head: a, b, c, x0, y0, z0, in-plane angle (deg) about the
# long-axis-free z axis of that table.
_KS_TABLE = [
    (0.6900, 0.920, 0.900, 0.000, 0.000, 0.000, 0.0),
    (0.6624, 0.874, 0.880, 0.000, 0.000, 0.000, 0.0),
    (0.4100, 0.160, 0.210, -0.220, 0.000, -0.250, 108.0),
    (0.3100, 0.110, 0.220, 0.220, 0.000, -0.250, 72.0),
    (0.2100, 0.250, 0.500, 0.000, 0.350, -0.250, 0.0),
    (0.0460, 0.046, 0.046, 0.000, 0.100, -0.250, 0.0),
    (0.0460, 0.023, 0.020, -0.080, -0.650, -0.250, 0.0),
    (0.0460, 0.023, 0.020, 0.060, -0.650, -0.250, 90.0),
    (0.0560, 0.040, 0.100, 0.060, -0.105, 0.625, 90.0),
    (0.0560, 0.056, 0.100, 0.000, 0.100, 0.625, 0.0),
]

# table frame -> phantom frame: x stays, the table's y (long head axis) becomes z,
# the table's z becomes -y (a proper rotation)
_FRAME = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])

BONE, BRAIN, INCLUSION, CAVITY = 0.17, 0.15, 0.10, 0.0


def _ks_ellipsoid(row, value):
    a, b, c, x0, y0, z0, ang = row
    t = math.radians(ang)
    local = np.array(
        [[math.cos(t), -math.sin(t), 0.0], [math.sin(t), math.cos(t), 0.0], [0.0, 0.0, 1.0]]
    )
    rot = _FRAME @ local
    center = _FRAME @ np.array([x0, y0, z0])
    return Ellipsoid(tuple(center), (a, b, c), value, rot)


def shepp_logan_a1():
    """Strong-attenuation head phantom (values in cm^-1, geometry in grid units)."""
    prims = [_ks_ellipsoid(_KS_TABLE[0], BONE), _ks_ellipsoid(_KS_TABLE[1], BRAIN)]
    prims += [_ks_ellipsoid(r, INCLUSION) for r in _KS_TABLE[4:]]
    prims += [_ks_ellipsoid(r, CAVITY) for r in _KS_TABLE[2:4]]
    return PhantomSpec(tuple(prims), 10.0, attenuation=True, name="a1")


def shepp_logan_a2():
    return replace(scale_attenuation(shepp_logan_a1(), 0.1), name="a2")


def activity_f1():
    """Indicator of the brain ellipsoid of the head phantom."""
    brain = _ks_ellipsoid(_KS_TABLE[1], 1.0)
    return PhantomSpec((brain,), 10.0, attenuation=False, name="f1")


F2_CENTER = (0.0, 0.0, 0.1)


def activity_f2(center=F2_CENTER):
    """Spherical layer, outer radius 4 cm, inner radius 2 cm."""
    shell = SphericalShell(center, 0.2, 0.4, 1.0)
    return PhantomSpec((shell,), 10.0, attenuation=False, name="f2")


NAMED = {
    "a1": shepp_logan_a1,
    "a2": shepp_logan_a2,
    "f1": activity_f1,
    "f2": activity_f2,
}


def named(name):
    try:
        return NAMED[name]()
    except KeyError:
        raise ValueError(f"unknown phantom {name!r}; expected one of {sorted(NAMED)}") from None


def optical_lengths(spec):
    """Analytic optical lengths along the X, Y and Z axes through the origin."""
    axes = np.eye(3)
    return tuple(spec.line_integral(np.zeros(3), axes[k]) for k in range(3))


def dumps(spec):
    """Text form: one primitive per line, ``#`` comments, header keys first."""
    lines = [
        f"name = {spec.name}",
        f"scale_cm_per_unit = {spec.scale_cm_per_unit!r}",
        f"attenuation = {int(spec.attenuation)}",
    ]
    for p in spec.primitives:
        if isinstance(p, Ellipsoid):
            nums = [*p.center, *p.semi_axes, *p.rotation.ravel(), p.value]
            lines.append("ellipsoid " + " ".join(repr(float(v)) for v in nums))
        else:
            nums = [*p.center, p.r_inner, p.r_outer, p.value]
            lines.append("shell " + " ".join(repr(float(v)) for v in nums))
    return "\n".join(lines) + "\n"


def loads(text):
    header = {"name": "custom", "scale_cm_per_unit": "10.0", "attenuation": "0"}
    prims = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            k, v = (t.strip() for t in line.split("=", 1))
            if k not in header:
                raise ValueError(f"unknown phantom key {k!r}")
            header[k] = v
            continue
        kind, *nums = line.split()
        vals = [float(v) for v in nums]
        if kind == "ellipsoid" and len(vals) == 16:
            prims.append(
                Ellipsoid(tuple(vals[0:3]), tuple(vals[3:6]), vals[15], np.reshape(vals[6:15], (3, 3)))
            )
        elif kind == "shell" and len(vals) == 6:
            prims.append(SphericalShell(tuple(vals[0:3]), vals[3], vals[4], vals[5]))
        else:
            raise ValueError(f"cannot parse phantom line: {raw!r}")
    return PhantomSpec(
        tuple(prims),
        float(header["scale_cm_per_unit"]),
        attenuation=bool(int(header["attenuation"])),
        name=header["name"],
    )
