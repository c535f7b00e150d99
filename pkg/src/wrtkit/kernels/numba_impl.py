"""numba kernels.  Every function here has a numpy twin with the same signature
in :mod:`wrtkit.kernels.numpy_impl`; the two are checked against each other in
the test suite.

Parallel loops (``prange``) always write disjoint output slices, so results do
not depend on the thread count.
"""

import math

import numpy as np
from numba import njit, prange

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True, inline="always")
def _trilinear(vol, R, h, x, y, z):
    if x * x + y * y + z * z > R * R:
        return 0.0
    n = vol.shape[0]
    fx = (x + R) / h
    fy = (y + R) / h
    fz = (z + R) / h
    ix = int(math.floor(fx))
    iy = int(math.floor(fy))
    iz = int(math.floor(fz))
    if ix < 0 or iy < 0 or iz < 0 or ix > n - 1 or iy > n - 1 or iz > n - 1:
        return 0.0
    if ix == n - 1:
        ix = n - 2
    if iy == n - 1:
        iy = n - 2
    if iz == n - 1:
        iz = n - 2
    tx = fx - ix
    ty = fy - iy
    tz = fz - iz
    c00 = vol[iz, iy, ix] * (1 - tx) + vol[iz, iy, ix + 1] * tx
    c01 = vol[iz, iy + 1, ix] * (1 - tx) + vol[iz, iy + 1, ix + 1] * tx
    c10 = vol[iz + 1, iy, ix] * (1 - tx) + vol[iz + 1, iy, ix + 1] * tx
    c11 = vol[iz + 1, iy + 1, ix] * (1 - tx) + vol[iz + 1, iy + 1, ix + 1] * tx
    c0 = c00 * (1 - ty) + c01 * ty
    c1 = c10 * (1 - ty) + c11 * ty
    return c0 * (1 - tz) + c1 * tz


@njit(cache=True, inline="always")
def _bilinear(img, R, h, x, y):
    if x * x + y * y > R * R:
        return 0.0
    n = img.shape[0]
    fx = (x + R) / h
    fy = (y + R) / h
    ix = int(math.floor(fx))
    iy = int(math.floor(fy))
    if ix < 0 or iy < 0 or ix > n - 1 or iy > n - 1:
        return 0.0
    if ix == n - 1:
        ix = n - 2
    if iy == n - 1:
        iy = n - 2
    tx = fx - ix
    ty = fy - iy
    c0 = img[iy, ix] * (1 - tx) + img[iy, ix + 1] * tx
    c1 = img[iy + 1, ix] * (1 - tx) + img[iy + 1, ix + 1] * tx
    return c0 * (1 - ty) + c1 * ty


@njit(cache=True, inline="always")
def _chord_nodes(L, dt, buf):
    """Fill ``buf`` with ``-L, lattice nodes q*dt strictly inside (-L, L), L``."""
    q = int(math.floor(L / dt))
    if q * dt >= L:
        q -= 1
    m = 0
    buf[m] = -L
    m += 1
    for k in range(-q, q + 1):
        buf[m] = k * dt
        m += 1
    buf[m] = L
    m += 1
    return m


@njit(cache=True)
def sample_volume(vol, R, pts):
    h = 2.0 * R / (vol.shape[0] - 1)
    out = np.empty(pts.shape[0])
    for i in range(pts.shape[0]):
        out[i] = _trilinear(vol, R, h, pts[i, 0], pts[i, 1], pts[i, 2])
    return out


@njit(cache=True, parallel=True)
def project_rays(f, mu, has_mu, R, zs, ss, phis, dt):
    n_z, n_phi, n_s = zs.shape[0], phis.shape[0], ss.shape[0]
    h = 2.0 * R / (f.shape[0] - 1)
    out = np.zeros((n_z, n_phi, n_s))
    nmax = int(2.0 * R / dt) + 4
    for job in prange(n_z * n_phi):
        iz = job // n_phi
        ip = job % n_phi
        z = zs[iz]
        c = math.cos(phis[ip])
        si = math.sin(phis[ip])
        t = np.empty(nmax)
        fv = np.empty(nmax)
        av = np.empty(nmax)
        for js in range(n_s):
            s = ss[js]
            rho2 = R * R - z * z - s * s
            if rho2 <= 0.0:
                continue
            m = _chord_nodes(math.sqrt(rho2), dt, t)
            for k in range(m):
                x = s * c - t[k] * si
                y = s * si + t[k] * c
                fv[k] = _trilinear(f, R, h, x, y, z)
                av[k] = _trilinear(mu, R, h, x, y, z) if has_mu else 0.0
            # reverse cumulative trapezoid gives Da at every node
            acc = 0.0
            da = 0.0
            gprev = 0.0
            for k in range(m - 1, -1, -1):
                if k < m - 1:
                    da += 0.5 * (av[k] + av[k + 1]) * (t[k + 1] - t[k])
                g = fv[k] * math.exp(-da)
                if k < m - 1:
                    acc += 0.5 * (g + gprev) * (t[k + 1] - t[k])
                gprev = g
            out[iz, ip, js] = acc
    return out


@njit(cache=True, parallel=True)
def weight_harmonics(mu, R, phis, dt, K, radius):
    """Fourier coefficients over the in-slice direction angle of ``exp(-Da)``.

    Direction ``j`` is ``(-sin phi_j, cos phi_j, 0)``, i.e. angle
    ``phi_j + pi/2``.  For every slice and direction, ``Da`` is tabulated on
    the rotated lattice ``(s, t) = (q_s dt, q_t dt)`` and read back at the
    voxels by bilinear interpolation.
    """
    N = mu.shape[0]
    h = 2.0 * R / (N - 1)
    n_phi = phis.shape[0]
    out = np.zeros((K + 1, N, N, N), dtype=np.complex128)
    nq = int(math.floor(R / dt + 1e-9))
    nt = 2 * nq + 1
    for iz in prange(N):
        z = -R + iz * h
        table = np.zeros((nt, nt))
        tn = np.empty(nt + 2)
        av = np.empty(nt + 2)
        cum = np.empty(nt + 2)
        for ip in range(n_phi):
            c = math.cos(phis[ip])
            si = math.sin(phis[ip])
            for a in range(nt):
                s = (a - nq) * dt
                rho2 = R * R - z * z - s * s
                if rho2 <= 0.0:
                    for b in range(nt):
                        table[a, b] = 0.0
                    continue
                L = math.sqrt(rho2)
                m = _chord_nodes(L, dt, tn)
                for k in range(m):
                    av[k] = _trilinear(mu, R, h, s * c - tn[k] * si, s * si + tn[k] * c, z)
                cum[m - 1] = 0.0
                for k in range(m - 2, -1, -1):
                    cum[k] = cum[k + 1] + 0.5 * (av[k] + av[k + 1]) * (tn[k + 1] - tn[k])
                # lattice node q sits at buffer index q + half + 1 inside the chord
                half = (m - 3) // 2
                for b in range(nt):
                    q = b - nq
                    if q > half:
                        table[a, b] = 0.0
                    elif q < -half:
                        table[a, b] = cum[0]
                    else:
                        table[a, b] = cum[q + half + 1]
            ang = phis[ip] + 0.5 * math.pi
            ph = np.empty(K + 1, dtype=np.complex128)
            for k in range(K + 1):
                ph[k] = complex(math.cos(k * ang), -math.sin(k * ang)) / n_phi
            for iy in range(N):
                y = -R + iy * h
                for ix in range(N):
                    x = -R + ix * h
                    if x * x + y * y + z * z > radius * radius:
                        continue
                    s = x * c + y * si
                    t = -x * si + y * c
                    fs = s / dt + nq
                    ft = t / dt + nq
                    i0 = min(max(int(math.floor(fs)), 0), nt - 2)
                    j0 = min(max(int(math.floor(ft)), 0), nt - 2)
                    us = fs - i0
                    ut = ft - j0
                    d = (
                        (table[i0, j0] * (1 - ut) + table[i0, j0 + 1] * ut) * (1 - us)
                        + (table[i0 + 1, j0] * (1 - ut) + table[i0 + 1, j0 + 1] * ut) * us
                    )
                    w = math.exp(-d)
                    for k in range(K + 1):
                        out[k, iz, iy, ix] += w * ph[k]
    return out


@njit(cache=True, inline="always")
def _spline_eval(row, M, s0, ds, sig):
    n = row.shape[0]
    f = (sig - s0) / ds
    j = int(math.floor(f))
    if j < 0:
        j = 0
    elif j > n - 2:
        j = n - 2
    b = f - j
    a = 1.0 - b
    return a * row[j] + b * row[j + 1] + ((a * a * a - a) * M[j] + (b * b * b - b) * M[j + 1]) * ds * ds / 6.0


@njit(cache=True, parallel=True)
def reduce_planes(rays, M, R, dz, ds, psis):
    n_z, n_phi, n_s = rays.shape
    n_psi = psis.shape[0]
    out = np.zeros((n_psi, n_phi, n_s))
    z0 = -R
    s0 = -R
    for job in prange(n_psi * n_phi):
        kp = job // n_phi
        ip = job % n_phi
        cp = math.cos(psis[kp])
        sp = math.sin(psis[kp])
        for i in range(n_s):
            s = s0 + i * ds
            rho2 = R * R - s * s
            if rho2 <= 0.0:
                continue
            L = math.sqrt(rho2)
            q = int(math.floor(L / ds))
            if q * ds >= L:
                q -= 1
            acc = 0.0
            for k in range(-q, q + 1):
                tau = k * ds
                # end nodes absorb the partial intervals up to +-L, where the value is 0
                if q == 0:
                    wgt = L
                elif k == -q:
                    wgt = 0.5 * ds + 0.5 * (tau + L)
                elif k == q:
                    wgt = 0.5 * ds + 0.5 * (L - tau)
                else:
                    wgt = ds
                z = s * cp + tau * sp
                sig = s * sp - tau * cp
                if abs(z) > R or abs(sig) > R:
                    continue
                c = int(math.floor((z - z0) / dz + 0.5))
                if c < 1:
                    c = 1
                elif c > n_z - 2:
                    c = n_z - 2
                zc = z0 + c * dz
                u = (z - zc) / dz
                l0 = 0.5 * u * (u - 1.0)
                l1 = 1.0 - u * u
                l2 = 0.5 * u * (u + 1.0)
                v = (
                    l0 * _spline_eval(rays[c - 1, ip], M[c - 1, ip], s0, ds, sig)
                    + l1 * _spline_eval(rays[c, ip], M[c, ip], s0, ds, sig)
                    + l2 * _spline_eval(rays[c + 1, ip], M[c + 1, ip], s0, ds, sig)
                )
                acc += wgt * v
            out[kp, ip, i] = acc
    return out


@njit(cache=True, parallel=True)
def backproject_2d(q, phis, q0, dq, R, N):
    """``out[l, y, x] = sum_k q[l, k](x cos phi_k + y sin phi_k)`` (linear in s)."""
    n_l, n_phi, n_q = q.shape
    h = 2.0 * R / (N - 1)
    out = np.zeros((n_l, N, N))
    cs = np.cos(phis)
    sn = np.sin(phis)
    for job in prange(n_l * N):
        l = job // N
        iy = job % N
        y = -R + iy * h
        for ix in range(N):
            x = -R + ix * h
            acc = 0.0
            for k in range(n_phi):
                f = (x * cs[k] + y * sn[k] - q0) / dq
                j = int(math.floor(f))
                if j < 0 or j >= n_q - 1:
                    continue
                t = f - j
                acc += q[l, k, j] * (1 - t) + q[l, k, j + 1] * t
            out[l, iy, ix] = acc
    return out


@njit(cache=True, parallel=True)
def fbp3d_stage1(q, psis, lam, q0, dq, u0, du, n_u, R, N):
    """``H[j, iu, iz] = sum_k lam_k q[k, j](sin psi_k u + cos psi_k z)``."""
    n_psi, n_phi, n_q = q.shape
    h = 2.0 * R / (N - 1)
    out = np.zeros((n_phi, n_u, N))
    for job in prange(n_phi * n_u):
        j = job // n_u
        iu = job % n_u
        u = u0 + iu * du
        for iz in range(N):
            z = -R + iz * h
            acc = 0.0
            for k in range(n_psi):
                f = (math.sin(psis[k]) * u + math.cos(psis[k]) * z - q0) / dq
                i = int(math.floor(f))
                if i < 0 or i >= n_q - 1:
                    continue
                t = f - i
                acc += lam[k] * (q[k, j, i] * (1 - t) + q[k, j, i + 1] * t)
            out[j, iu, iz] = acc
    return out


@njit(cache=True, parallel=True)
def fbp3d_stage2(H, phis, u0, du, R, N):
    n_phi, n_u, _ = H.shape
    h = 2.0 * R / (N - 1)
    out = np.zeros((N, N, N))
    cs = np.cos(phis)
    sn = np.sin(phis)
    for job in prange(N * N):
        iy = job // N
        ix = job % N
        x = -R + ix * h
        y = -R + iy * h
        for j in range(n_phi):
            f = (x * cs[j] + y * sn[j] - u0) / du
            i = int(math.floor(f))
            if i < 0 or i >= n_u - 1:
                continue
            t = f - i
            for iz in range(N):
                out[iz, iy, ix] += H[j, i, iz] * (1 - t) + H[j, i + 1, iz] * t
    return out


@njit(cache=True, inline="always")
def _kernel_lookup(table, per_cell, d):
    f = abs(d) * per_cell
    i = int(f)
    if i >= table.shape[0] - 1:
        return 0.0
    t = f - i
    return table[i] * (1 - t) + table[i + 1] * t


@njit(cache=True, parallel=True)
def nufft_spread(coords, vals, G, width, table, per_cell):
    """Spread ``vals`` at fractional cell coordinates onto a periodic ``G^3`` lattice.

    The kernel is read from ``table`` (samples of the even kernel at
    ``|d| = i / per_cell``).  Samples are binned by their first z cell so that
    each output plane is written by a single worker, in a fixed sample order.
    """
    M = coords.shape[0]
    half = 0.5 * width
    base = np.empty((M, 3), dtype=np.int64)
    for m in range(M):
        for a in range(3):
            base[m, a] = int(math.floor(coords[m, a] - half)) + 1
    counts = np.zeros(G + 1, dtype=np.int64)
    for m in range(M):
        counts[base[m, 2] % G + 1] += 1
    for g in range(G):
        counts[g + 1] += counts[g]
    order = np.empty(M, dtype=np.int64)
    fill = counts[:G].copy()
    for m in range(M):
        b = base[m, 2] % G
        order[fill[b]] = m
        fill[b] += 1
    grid = np.zeros((G, G, G), dtype=np.complex128)
    for gz in prange(G):
        wy = np.empty(width)
        wx = np.empty(width)
        for k in range(width):
            b = (gz - k) % G
            for p in range(counts[b], counts[b + 1]):
                m = order[p]
                v = vals[m] * _kernel_lookup(table, per_cell, base[m, 2] + k - coords[m, 2])
                for j in range(width):
                    wy[j] = _kernel_lookup(table, per_cell, base[m, 1] + j - coords[m, 1])
                    wx[j] = _kernel_lookup(table, per_cell, base[m, 0] + j - coords[m, 0])
                for ky in range(width):
                    gy = (base[m, 1] + ky) % G
                    vy = v * wy[ky]
                    for kx in range(width):
                        gx = (base[m, 0] + kx) % G
                        grid[gz, gy, gx] += vy * wx[kx]
    return grid


@njit(cache=True, inline="always")
def _mix(x):
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


@njit(cache=True, inline="always")
def _uniform(key, counter):
    x = _mix(key + np.uint64(counter) * _GOLDEN)
    return float(x >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True, inline="always")
def _poisson_one(lam, key):
    if lam <= 0.0:
        return 0
    c = 0
    if lam < 10.0:
        u = _uniform(key, c)
        p = math.exp(-lam)
        F = p
        k = 0
        while u > F and k < 1000:
            k += 1
            p *= lam / k
            F += p
        return k
    slam = math.sqrt(lam)
    loglam = math.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2)
    while True:
        U = _uniform(key, c) - 0.5
        V = _uniform(key, c + 1)
        c += 2
        us = 0.5 - abs(U)
        if us <= 0.0:
            continue
        k = math.floor((2 * a / us + b) * U + lam + 0.43)
        if us >= 0.07 and V <= vr:
            return int(k)
        if k < 0 or (us < 0.013 and V > us):
            continue
        if math.log(V) + math.log(invalpha) - math.log(a / (us * us) + b) <= -lam + k * loglam - math.lgamma(k + 1):
            return int(k)


@njit(cache=True, parallel=True)
def poisson_counts(lam, seed):
    out = np.empty(lam.shape[0], dtype=np.int64)
    skey = _mix(np.uint64(seed) + _GOLDEN)
    for i in prange(lam.shape[0]):
        key = _mix(skey ^ _mix(np.uint64(i) + _M2))
        out[i] = _poisson_one(lam[i], key)
    return out


@njit(cache=True)
def uniforms(seed, index, n):
    """First ``n`` stream variates of cell ``index`` (for tests)."""
    skey = _mix(np.uint64(seed) + _GOLDEN)
    key = _mix(skey ^ _mix(np.uint64(index) + _M2))
    out = np.empty(n)
    for c in range(n):
        out[c] = _uniform(key, c)
    return out


@njit(cache=True, parallel=True)
def line_integrals_2d(img, R, ss, phis, dt):
    n_phi, n_s = phis.shape[0], ss.shape[0]
    h = 2.0 * R / (img.shape[0] - 1)
    out = np.zeros((n_phi, n_s))
    nmax = int(2.0 * R / dt) + 4
    for ip in prange(n_phi):
        c = math.cos(phis[ip])
        si = math.sin(phis[ip])
        t = np.empty(nmax)
        for js in range(n_s):
            s = ss[js]
            rho2 = R * R - s * s
            if rho2 <= 0.0:
                continue
            m = _chord_nodes(math.sqrt(rho2), dt, t)
            acc = 0.0
            prev = _bilinear(img, R, h, s * c - t[0] * si, s * si + t[0] * c)
            for k in range(1, m):
                cur = _bilinear(img, R, h, s * c - t[k] * si, s * si + t[k] * c)
                acc += 0.5 * (prev + cur) * (t[k] - t[k - 1])
                prev = cur
            out[ip, js] = acc
    return out


@njit(cache=True, parallel=True)
def plane_integrals(vol, R, ss, normals, dt):
    """Tensor-trapezoid integrals of ``vol`` over planes ``x . theta = s``.

    ``normals`` has shape ``(n_dir, 3)``; output is ``(n_dir, n_s)``.
    """
    n_dir, n_s = normals.shape[0], ss.shape[0]
    h = 2.0 * R / (vol.shape[0] - 1)
    out = np.zeros((n_dir, n_s))
    nmax = int(2.0 * R / dt) + 4
    for d in prange(n_dir):
        th = normals[d]
        # orthonormal frame of the plane
        if abs(th[2]) < 0.9:
            e1 = np.array([-th[1], th[0], 0.0])
        else:
            e1 = np.array([0.0, -th[2], th[1]])
        e1 /= math.sqrt(e1[0] ** 2 + e1[1] ** 2 + e1[2] ** 2)
        e2 = np.array(
            [th[1] * e1[2] - th[2] * e1[1], th[2] * e1[0] - th[0] * e1[2], th[0] * e1[1] - th[1] * e1[0]]
        )
        u = np.empty(nmax)
        wu = np.empty(nmax)
        for js in range(n_s):
            s = ss[js]
            rho2 = R * R - s * s
            if rho2 <= 0.0:
                continue
            m = _chord_nodes(math.sqrt(rho2), dt, u)
            for k in range(m):
                wu[k] = 0.0
            for k in range(m - 1):
                hk = 0.5 * (u[k + 1] - u[k])
                wu[k] += hk
                wu[k + 1] += hk
            acc = 0.0
            for a in range(m):
                for b in range(m):
                    if u[a] * u[a] + u[b] * u[b] > rho2:
                        continue
                    x = s * th[0] + u[a] * e1[0] + u[b] * e2[0]
                    y = s * th[1] + u[a] * e1[1] + u[b] * e2[1]
                    z = s * th[2] + u[a] * e1[2] + u[b] * e2[2]
                    acc += wu[a] * wu[b] * _trilinear(vol, R, h, x, y, z)
            out[d, js] = acc
    return out
