"""Pure numpy twins of :mod:`wrtkit.kernels.numba_impl`.

Variable-length chords are handled by clamping the fixed lattice ``q * dt``
to ``[-L, L]``: clamped nodes coincide with the chord end points, so the extra
segments have zero length and add exact zeros to every trapezoid sum.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _trilinear(vol, R, x, y, z):
    n = vol.shape[0]
    h = 2.0 * R / (n - 1)
    x, y, z = np.broadcast_arrays(x, y, z)
    fx, fy, fz = (x + R) / h, (y + R) / h, (z + R) / h
    ix, iy, iz = (np.floor(v).astype(np.int64) for v in (fx, fy, fz))
    ok = (x * x + y * y + z * z <= R * R) & (ix >= 0) & (iy >= 0) & (iz >= 0)
    ok &= (ix <= n - 1) & (iy <= n - 1) & (iz <= n - 1)
    ix = np.clip(ix, 0, n - 2)
    iy = np.clip(iy, 0, n - 2)
    iz = np.clip(iz, 0, n - 2)
    tx, ty, tz = fx - ix, fy - iy, fz - iz
    c00 = vol[iz, iy, ix] * (1 - tx) + vol[iz, iy, ix + 1] * tx
    c01 = vol[iz, iy + 1, ix] * (1 - tx) + vol[iz, iy + 1, ix + 1] * tx
    c10 = vol[iz + 1, iy, ix] * (1 - tx) + vol[iz + 1, iy, ix + 1] * tx
    c11 = vol[iz + 1, iy + 1, ix] * (1 - tx) + vol[iz + 1, iy + 1, ix + 1] * tx
    c0 = c00 * (1 - ty) + c01 * ty
    c1 = c10 * (1 - ty) + c11 * ty
    return np.where(ok, c0 * (1 - tz) + c1 * tz, 0.0)


def _bilinear(img, R, x, y):
    n = img.shape[0]
    h = 2.0 * R / (n - 1)
    x, y = np.broadcast_arrays(x, y)
    fx, fy = (x + R) / h, (y + R) / h
    ix, iy = np.floor(fx).astype(np.int64), np.floor(fy).astype(np.int64)
    ok = (x * x + y * y <= R * R) & (ix >= 0) & (iy >= 0) & (ix <= n - 1) & (iy <= n - 1)
    ix = np.clip(ix, 0, n - 2)
    iy = np.clip(iy, 0, n - 2)
    tx, ty = fx - ix, fy - iy
    c0 = img[iy, ix] * (1 - tx) + img[iy, ix + 1] * tx
    c1 = img[iy + 1, ix] * (1 - tx) + img[iy + 1, ix + 1] * tx
    return np.where(ok, c0 * (1 - ty) + c1 * ty, 0.0)


def _lattice(R, dt):
    Q = int(np.floor(R / dt + 1e-9)) + 1
    return np.arange(-Q, Q + 1) * dt


def _chord_nodes(L, dt, R):
    """Nodes ``(..., 2Q + 3)``: ``-L``, clamped lattice, ``L``."""
    L = np.asarray(L, dtype=float)[..., None]
    lat = _lattice(R, dt)
    inner = np.clip(lat, -L, L)
    return np.concatenate([-L, inner, L], axis=-1)


def _rev_cumtrap(vals, t):
    """``out[k] = integral from t[k] to t[-1]`` by the trapezoid rule, summed from the end."""
    seg = 0.5 * (vals[..., 1:] + vals[..., :-1]) * np.diff(t, axis=-1)
    out = np.zeros_like(vals)
    out[..., :-1] = np.cumsum(seg[..., ::-1], axis=-1)[..., ::-1]
    return out


def sample_volume(vol, R, pts):
    pts = np.asarray(pts, dtype=float)
    return _trilinear(vol, R, pts[:, 0], pts[:, 1], pts[:, 2])


def project_rays(f, mu, has_mu, R, zs, ss, phis, dt):
    out = np.zeros((zs.shape[0], phis.shape[0], ss.shape[0]))
    c = np.cos(phis)[:, None, None]
    si = np.sin(phis)[:, None, None]
    for iz, z in enumerate(zs):
        rho2 = R * R - z * z - ss * ss
        live = rho2 > 0
        if not live.any():
            continue
        s = ss[live]
        t = _chord_nodes(np.sqrt(rho2[live]), dt, R)[None, :, :]
        x = s[None, :, None] * c - t * si
        y = s[None, :, None] * si + t * c
        fv = _trilinear(f, R, x, y, z)
        if has_mu:
            da = _rev_cumtrap(_trilinear(mu, R, x, y, z), np.broadcast_to(t, x.shape))
            g = fv * np.exp(-da)
        else:
            g = fv
        seg = 0.5 * (g[..., 1:] + g[..., :-1]) * np.diff(t, axis=-1)
        out[iz][:, live] = seg.sum(axis=-1)
    return out


def weight_harmonics(mu, R, phis, dt, K, radius):
    N = mu.shape[0]
    h = 2.0 * R / (N - 1)
    n_phi = phis.shape[0]
    out = np.zeros((K + 1, N, N, N), dtype=np.complex128)
    nq = int(np.floor(R / dt + 1e-9))
    nt = 2 * nq + 1
    lat_s = (np.arange(nt) - nq) * dt
    ax = -R + h * np.arange(N)
    X, Y = ax[None, :], ax[:, None]
    ks = np.arange(K + 1)
    for iz in range(N):
        z = -R + iz * h
        inside = X * X + Y * Y + z * z <= radius * radius
        if not inside.any():
            continue
        xs, ys = np.broadcast_to(X, inside.shape)[inside], np.broadcast_to(Y, inside.shape)[inside]
        rho2 = R * R - z * z - lat_s * lat_s
        live = rho2 > 0
        L = np.sqrt(np.where(live, rho2, 0.0))
        tn = _chord_nodes(L, dt, R)  # (nt, 2Q+3)
        Q = (tn.shape[1] - 3) // 2
        for ip, phi in enumerate(phis):
            c, si = np.cos(phi), np.sin(phi)
            av = _trilinear(mu, R, lat_s[:, None] * c - tn * si, lat_s[:, None] * si + tn * c, z)
            cum = _rev_cumtrap(av, tn)
            # lattice q in [-nq, nq] sits at column q + Q + 1
            table = cum[:, 1 + Q - nq : 1 + Q + nq + 1]
            table = np.where(live[:, None], table, 0.0)
            s = xs * c + ys * si
            t = -xs * si + ys * c
            fs = s / dt + nq
            ft = t / dt + nq
            i0 = np.clip(np.floor(fs).astype(np.int64), 0, nt - 2)
            j0 = np.clip(np.floor(ft).astype(np.int64), 0, nt - 2)
            us, ut = fs - i0, ft - j0
            d = (table[i0, j0] * (1 - ut) + table[i0, j0 + 1] * ut) * (1 - us) + (
                table[i0 + 1, j0] * (1 - ut) + table[i0 + 1, j0 + 1] * ut
            ) * us
            ang = phi + 0.5 * np.pi
            ph = (np.cos(ks * ang) - 1j * np.sin(ks * ang)) / n_phi
            w = np.exp(-d)
            for k in range(K + 1):
                out[k, iz][inside] += w * ph[k]
    return out


def _spline_eval(flat_y, flat_m, row, n, s0, ds, sig):
    """Natural-spline value at ``sig`` on rows ``row`` of the flattened tables."""
    f = (sig - s0) / ds
    j = np.clip(np.floor(f).astype(np.int64), 0, n - 2)
    b = f - j
    a = 1.0 - b
    i0 = row * n + j
    return a * flat_y[i0] + b * flat_y[i0 + 1] + (
        (a * a * a - a) * flat_m[i0] + (b * b * b - b) * flat_m[i0 + 1]
    ) * ds * ds / 6.0


def _tau_rule(R, ds, n_s):
    """Lattice ``tau`` nodes and per-``s`` trapezoid weights (end nodes absorb ``+-L``)."""
    s = -R + ds * np.arange(n_s)
    Qm = int(np.floor(R / ds + 1e-9))
    tau = np.arange(-Qm, Qm + 1) * ds
    rho2 = R * R - s * s
    L = np.sqrt(np.maximum(rho2, 0.0))
    q = np.floor(L / ds).astype(np.int64)
    q = np.where(q * ds >= L, q - 1, q)
    k = np.arange(-Qm, Qm + 1)[None, :]
    qq = q[:, None]
    Lc = L[:, None]
    w = np.where(np.abs(k) <= qq, ds, 0.0)
    w = np.where((k == -qq) & (qq > 0), 0.5 * ds + 0.5 * (tau[None, :] + Lc), w)
    w = np.where((k == qq) & (qq > 0), 0.5 * ds + 0.5 * (Lc - tau[None, :]), w)
    w = np.where((k == 0) & (qq == 0), Lc, w)
    w = np.where(rho2[:, None] > 0, w, 0.0)
    return s, tau, w


def reduce_planes(rays, M, R, dz, ds, psis):
    n_z, n_phi, n_s = rays.shape
    s, tau, w = _tau_rule(R, ds, n_s)
    flat_y = rays.reshape(-1)
    flat_m = M.reshape(-1)
    out = np.zeros((psis.shape[0], n_phi, n_s))
    ip = np.arange(n_phi)[:, None, None]
    for kp, psi in enumerate(psis):
        cp, sp = np.cos(psi), np.sin(psi)
        z = s[:, None] * cp + tau[None, :] * sp  # (n_s, n_tau)
        sig = s[:, None] * sp - tau[None, :] * cp
        ok = (np.abs(z) <= R) & (np.abs(sig) <= R) & (w > 0)
        c = np.clip(np.floor((z + R) / dz + 0.5).astype(np.int64), 1, n_z - 2)
        u = (z - (-R + c * dz)) / dz
        lag = (0.5 * u * (u - 1.0), 1.0 - u * u, 0.5 * u * (u + 1.0))
        v = 0.0
        for o in range(3):
            row = (c + o - 1)[None] * n_phi + ip
            v = v + lag[o][None] * _spline_eval(flat_y, flat_m, row, n_s, -R, ds, sig[None])
        out[kp] = np.sum(np.where(ok[None], w[None] * v, 0.0), axis=-1)
    return out


def backproject_2d(q, phis, q0, dq, R, N):
    n_l, n_phi, n_q = q.shape
    ax = -R + (2.0 * R / (N - 1)) * np.arange(N)
    X, Y = ax[None, :], ax[:, None]
    out = np.zeros((n_l, N, N))
    for k, phi in enumerate(phis):
        f = (X * np.cos(phi) + Y * np.sin(phi) - q0) / dq
        j = np.floor(f).astype(np.int64)
        ok = (j >= 0) & (j < n_q - 1)
        j = np.clip(j, 0, n_q - 2)
        t = f - j
        out += np.where(ok[None], q[:, k, j] * (1 - t) + q[:, k, j + 1] * t, 0.0)
    return out


def fbp3d_stage1(q, psis, lam, q0, dq, u0, du, n_u, R, N):
    n_psi, n_phi, n_q = q.shape
    u = u0 + du * np.arange(n_u)
    z = -R + (2.0 * R / (N - 1)) * np.arange(N)
    out = np.zeros((n_phi, n_u, N))
    for k in range(n_psi):
        f = (np.sin(psis[k]) * u[:, None] + np.cos(psis[k]) * z[None, :] - q0) / dq
        i = np.floor(f).astype(np.int64)
        ok = (i >= 0) & (i < n_q - 1)
        i = np.clip(i, 0, n_q - 2)
        t = f - i
        out += lam[k] * np.where(ok[None], q[k][:, i] * (1 - t) + q[k][:, i + 1] * t, 0.0)
    return out


def fbp3d_stage2(H, phis, u0, du, R, N):
    n_phi, n_u, _ = H.shape
    ax = -R + (2.0 * R / (N - 1)) * np.arange(N)
    X, Y = ax[None, :], ax[:, None]
    out = np.zeros((N, N, N))
    for j, phi in enumerate(phis):
        f = (X * np.cos(phi) + Y * np.sin(phi) - u0) / du
        i = np.floor(f).astype(np.int64)
        ok = (i >= 0) & (i < n_u - 1)
        i = np.clip(i, 0, n_u - 2)
        t = (f - i)[..., None]
        val = H[j, i] * (1 - t) + H[j, i + 1] * t  # (N, N, N_z)
        out += np.where(ok[..., None], val, 0.0).transpose(2, 0, 1)
    return out


def _kernel_lookup(table, per_cell, d):
    f = np.abs(d) * per_cell
    i = f.astype(np.int64)
    ok = i < table.shape[0] - 1
    i = np.minimum(i, table.shape[0] - 2)
    t = f - i
    return np.where(ok, table[i] * (1 - t) + table[i + 1] * t, 0.0)


def nufft_spread(coords, vals, G, width, table, per_cell):
    half = 0.5 * width
    base = np.floor(coords - half).astype(np.int64) + 1
    grid = np.zeros((G, G, G), dtype=np.complex128)
    wts = [
        [_kernel_lookup(table, per_cell, base[:, a] + k - coords[:, a]) for k in range(width)]
        for a in range(3)
    ]
    for kz in range(width):
        gz = (base[:, 2] + kz) % G
        vz = vals * wts[2][kz]
        for ky in range(width):
            gy = (base[:, 1] + ky) % G
            vy = vz * wts[1][ky]
            for kx in range(width):
                gx = (base[:, 0] + kx) % G
                np.add.at(grid, (gz, gy, gx), vy * wts[0][kx])
    return grid


def _mix(x):
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


def _keys(seed, index):
    index = np.asarray(index, dtype=np.uint64)
    skey = _mix(np.array([seed], dtype=np.uint64) + _GOLDEN)
    return _mix(skey ^ _mix(index + _M2))


def _uniform(key, counter):
    x = _mix(key + np.asarray(counter, dtype=np.uint64) * _GOLDEN)
    return (x >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def uniforms(seed, index, n):
    key = _keys(seed, np.array([index]))
    return _uniform(np.repeat(key, n), np.arange(n))


def poisson_counts(lam, seed):
    from scipy.special import gammaln

    lam = np.asarray(lam, dtype=float)
    out = np.zeros(lam.shape[0], dtype=np.int64)
    keys = _keys(seed, np.arange(lam.shape[0]))

    small = np.flatnonzero((lam > 0) & (lam < 10.0))
    if small.size:
        ls = lam[small]
        u = _uniform(keys[small], np.zeros(small.size, dtype=np.uint64))
        p = np.exp(-ls)
        F = p.copy()
        k = np.zeros(small.size, dtype=np.int64)
        act = u > F
        while act.any():
            idx = np.flatnonzero(act)
            k[idx] += 1
            p[idx] *= ls[idx] / k[idx]
            F[idx] += p[idx]
            act[idx] = (u[idx] > F[idx]) & (k[idx] < 1000)
        out[small] = k

    big = np.flatnonzero(lam >= 10.0)
    if big.size:
        lb = lam[big]
        slam = np.sqrt(lb)
        loglam = np.log(lb)
        b = 0.931 + 2.53 * slam
        a = -0.059 + 0.02483 * b
        invalpha = 1.1239 + 1.1328 / (b - 3.4)
        vr = 0.9277 - 3.6224 / (b - 2)
        c = np.zeros(big.size, dtype=np.uint64)
        res = np.zeros(big.size, dtype=np.int64)
        act = np.ones(big.size, dtype=bool)
        while act.any():
            i = np.flatnonzero(act)
            U = _uniform(keys[big[i]], c[i]) - 0.5
            V = _uniform(keys[big[i]], c[i] + np.uint64(1))
            c[i] += np.uint64(2)
            us = 0.5 - np.abs(U)
            valid = us > 0.0
            usv = np.where(valid, us, 1.0)
            k = np.floor((2 * a[i] / usv + b[i]) * U + lb[i] + 0.43)
            quick = valid & (us >= 0.07) & (V <= vr[i])
            reject = ~valid | (k < 0) | ((us < 0.013) & (V > us))
            with np.errstate(divide="ignore", invalid="ignore"):
                lhs = np.log(V) + np.log(invalpha[i]) - np.log(a[i] / (usv * usv) + b[i])
                rhs = -lb[i] + k * loglam[i] - gammaln(np.maximum(k, 0) + 1)
            accept = quick | (~reject & (lhs <= rhs))
            res[i[accept]] = k[accept].astype(np.int64)
            act[i[accept]] = False
        out[big] = res
    return out


def line_integrals_2d(img, R, ss, phis, dt):
    rho2 = R * R - ss * ss
    live = rho2 > 0
    t = _chord_nodes(np.sqrt(np.maximum(rho2, 0.0)), dt, R)[None]
    c = np.cos(phis)[:, None, None]
    si = np.sin(phis)[:, None, None]
    s = ss[None, :, None]
    g = _bilinear(img, R, s * c - t * si, s * si + t * c)
    seg = 0.5 * (g[..., 1:] + g[..., :-1]) * np.diff(t, axis=-1)
    return np.where(live[None], seg.sum(axis=-1), 0.0)


def _frame(th):
    if abs(th[2]) < 0.9:
        e1 = np.array([-th[1], th[0], 0.0])
    else:
        e1 = np.array([0.0, -th[2], th[1]])
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(th, e1)


def plane_integrals(vol, R, ss, normals, dt):
    out = np.zeros((normals.shape[0], ss.shape[0]))
    for d, th in enumerate(normals):
        e1, e2 = _frame(th)
        for js, s in enumerate(ss):
            rho2 = R * R - s * s
            if rho2 <= 0:
                continue
            u = _chord_nodes(np.sqrt(rho2), dt, R)
            wu = np.zeros_like(u)
            hk = 0.5 * np.diff(u)
            wu[:-1] += hk
            wu[1:] += hk
            U, V = u[:, None], u[None, :]
            p = s * th[:, None, None] + U * e1[:, None, None] + V * e2[:, None, None]
            vals = _trilinear(vol, R, p[0], p[1], p[2])
            vals = np.where(U * U + V * V > rho2, 0.0, vals)
            out[d, js] = np.sum(wu[:, None] * wu[None, :] * vals)
    return out
