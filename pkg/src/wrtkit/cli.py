"""``wrtkit`` command line.

Exit status: 0 ok, 2 usage, 3 data format, 4 numerical failure.
"""

import argparse
import logging
import os
import sys

import numpy as np

from . import _accel, containers, phantoms
from .chang import default_mask, divide_by_w0
from .errors import DataFormatError, WrtkitError
from .forward import WeightEvaluator, project_all
from .grids import CartesianGrid, build_plane_grid, build_ray_grid
from .kunyansky import HarmonicWeight, KunyanskyConfig, harmonic_weight, solve
from .metrics import METHODS, rel_error, render_rows, render_table
from .noise import calibrate, normalize_counts, sample_counts
from .radon_inv import radon2d_inverse, radon3d_inverse
from .reduce import reduce

EXIT_USAGE = 2

log = logging.getLogger("wrtkit")


class UsageError(WrtkitError):
    exit_code = EXIT_USAGE


def _expect(hdr, *kinds):
    if hdr["kind"] not in kinds:
        raise DataFormatError(f"expected a {' or '.join(kinds)} container, got {hdr['kind']}")


def _read_volume(path):
    vol, hdr = containers.read(path)
    _expect(hdr, "volume")
    if vol.ndim != 3 or len(set(vol.shape)) != 1:
        raise DataFormatError(f"volume must be N x N x N, got {vol.shape}")
    return vol, hdr


def _read_rays(path):
    """Ray data as floats; counts are divided by their stored ``C_n``."""
    data, hdr = containers.read(path)
    _expect(hdr, "raysino", "counts")
    if data.ndim != 3:
        raise DataFormatError(f"ray data must be (n_z, n_phi, n_s), got {data.shape}")
    if hdr["kind"] == "counts":
        data = normalize_counts(data, containers.header_float(hdr, "C_n"))
    return data, hdr


def _ray_grid(shape, R):
    n_z, n_phi, n_s = shape
    return build_ray_grid(n_z, n_s, n_phi, R)


def cmd_phantom(args):
    spec = _load_spec(args.spec)
    vol = phantoms.rasterize(spec, CartesianGrid(args.n, args.R))
    containers.write(args.output, vol, "volume", R=args.R, phantom=spec.name)


def _load_spec(name):
    if name in phantoms.NAMED:
        return phantoms.named(name)
    if not os.path.exists(name):
        raise UsageError(f"unknown phantom {name!r}; expected one of {sorted(phantoms.NAMED)} or a file")
    with open(name, encoding="utf-8") as fh:
        try:
            return phantoms.loads(fh.read())
        except ValueError as exc:
            raise DataFormatError(f"{name}: {exc}") from None


def cmd_project(args):
    f, hf = _read_volume(args.activity)
    W = None
    if args.attenuation:
        a, ha = _read_volume(args.attenuation)
        if a.shape != f.shape or ha["R"] != hf["R"]:
            raise DataFormatError("activity and attenuation volumes differ in grid")
        W = WeightEvaluator(a, hf["R"])
    N = f.shape[0]
    rg = build_ray_grid(args.nz or N, args.ns or N, args.nphi, hf["R"])
    rays = project_all(f, W, rg)
    containers.write(args.output, rays, "raysino", R=rg.R)


def cmd_noise(args):
    rays, hdr = containers.read(args.input)
    _expect(hdr, "raysino")
    C_n = calibrate(rays, args.n_level)
    counts = sample_counts(rays, C_n, args.seed)
    containers.write(args.output, counts, "counts", R=hdr["R"], C_n=C_n, seed=args.seed, n_level=float(args.n_level))


def cmd_reduce(args):
    rays, hdr = _read_rays(args.input)
    rg = _ray_grid(rays.shape, hdr["R"])
    pg = build_plane_grid(rg.n_s, rg.n_phi, args.npsi or rg.n_phi, rg.R)
    containers.write(args.output, reduce(rays, rg, pg), "planesino", R=rg.R)


def _planes(path, n_psi):
    """Plane data and grid from a plane container, or by reducing ray data."""
    data, hdr = containers.read(path)
    if hdr["kind"] == "planesino":
        n_psi_, n_phi, n_s = data.shape
        return data, build_plane_grid(n_s, n_phi, n_psi_, hdr["R"])
    rays, hdr = _read_rays(path)
    rg = _ray_grid(rays.shape, hdr["R"])
    pg = build_plane_grid(rg.n_s, rg.n_phi, n_psi or rg.n_phi, rg.R)
    return reduce(rays, rg, pg), pg


def cmd_recon(args):
    a, ha = _read_volume(args.attenuation)
    N, R = a.shape[0], ha["R"]
    W = WeightEvaluator(a, R)
    D = default_mask(N, R, args.mask_radius)
    m = 0 if args.method.startswith("chang") else args.m
    radius = args.mask_radius * R * (1 + 1e-9)
    if args.method.endswith("2d"):
        rays, hdr = _read_rays(args.data)
        if rays.shape[0] != N or rays.shape[2] != N:
            raise DataFormatError(f"slice-by-slice recon needs n_z = n_s = {N}, got {rays.shape}")
        hw = harmonic_weight(W, rays.shape[1], 2 * m, radius=radius)
        g = radon2d_inverse(rays, R)
    else:
        sino, pg = _planes(args.data, args.npsi)
        if pg.n_s != N:
            raise DataFormatError(f"plane data has n_s = {pg.n_s}, attenuation grid has N = {N}")
        hw = HarmonicWeight(harmonic_weight(W, pg.n_phi, 2 * m, radius=radius).coeffs, 3, pg)
        g = radon3d_inverse(sino, pg, method=args.inversion)
    if m == 0:
        vol = divide_by_w0(g, np.broadcast_to(hw.w0, g.shape), D)
    else:
        vol, _, info = solve(g, hw, KunyanskyConfig(m, args.max_iter, args.tol, D))
        for line in info.log_lines:
            log.info("iteration %s", line)
        log.info("sigma %.4f, %d iterations", info.sigma, info.iterations)
    containers.write(args.output, vol, "volume", R=R, method=args.method)


def cmd_invert_radon(args):
    data, hdr = containers.read(args.input)
    R = hdr["R"]
    if args.dim == 2:
        if hdr["kind"] == "counts":
            data = normalize_counts(data, containers.header_float(hdr, "C_n"))
        else:
            _expect(hdr, "raysino")
        img = radon2d_inverse(data, R, args.n)
        containers.write(args.output, img, "volume" if img.ndim == 3 else "slice", R=R)
    else:
        _expect(hdr, "planesino")
        n_psi, n_phi, n_s = data.shape
        vol = radon3d_inverse(data, build_plane_grid(n_s, n_phi, n_psi, R), args.n, args.inversion)
        containers.write(args.output, vol, "volume", R=R)


def _z0(path):
    data, hdr = containers.read(path)
    _expect(hdr, "volume", "slice")
    if hdr["kind"] == "slice":
        return data
    if data.shape[0] % 2 == 0:
        raise DataFormatError("z = 0 is a voxel plane only for odd N")
    return data[data.shape[0] // 2]


def cmd_error(args):
    if args.slice.replace(" ", "") != "z=0":
        raise UsageError("only --slice z=0 is supported")
    a, b = _z0(args.noisy), _z0(args.reference)
    if a.shape != b.shape:
        raise DataFormatError(f"slice shapes differ: {a.shape} vs {b.shape}")
    try:
        print(f"{rel_error(a, b):.6f}")
    except ValueError as exc:
        raise DataFormatError(str(exc)) from None


def cmd_table(args):
    from . import config
    from .pipeline import ExperimentConfig, run_experiment

    if args.config:
        cfg, out = config.load(args.config)
    else:
        cfg, out = ExperimentConfig(), config.OutputConfig()
    target = args.output or out.table
    progress = (lambda r: log.info("%s", r.row(" "))) if args.verbose else None
    records = run_experiment(cfg, progress)
    with open(target, "w", encoding="utf-8") as fh:
        fh.write(render_table(records, [m for m in METHODS if m in cfg.methods]))
    rows = args.rows or out.rows
    if rows:
        with open(rows, "w", encoding="utf-8") as fh:
            fh.write(render_rows(records))


def cmd_export_slice(args):
    data, hdr = containers.read(args.input)
    _expect(hdr, "volume")
    axis = "zyx".index(args.axis)
    if not 0 <= args.index < data.shape[axis]:
        raise UsageError(f"index {args.index} out of range for axis {args.axis} (size {data.shape[axis]})")
    containers.write_pgm(args.output, np.take(data, args.index, axis=axis))


def cmd_selftest(args):
    from . import selftest

    return 1 if selftest.run(args.n) else 0


def cmd_bench(args):
    from . import bench

    backends = ("numba", "numpy") if args.backend == "both" else (args.backend,)
    reports = [bench.bench(k, args.size, args.threads, b, args.repeats) for k in args.kernel for b in backends]
    sys.stdout.write(bench.render(reports))


def build_parser():
    p = argparse.ArgumentParser(prog="wrtkit", description="Weighted ray/Radon transform reconstruction toolkit.")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: WRTKIT_THREADS or all)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("phantom", help="rasterize a phantom")
    s.add_argument("--spec", required=True, help="a1, a2, f1, f2 or a phantom text file")
    s.add_argument("--n", type=int, default=129)
    s.add_argument("--R", type=float, default=1.0)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_phantom)

    s = sub.add_parser("project", help="weighted ray transform on the slice grid")
    s.add_argument("--activity", required=True)
    s.add_argument("--attenuation", default=None)
    s.add_argument("--nz", type=int, default=None)
    s.add_argument("--ns", type=int, default=None)
    s.add_argument("--nphi", type=int, default=128)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_project)

    s = sub.add_parser("noise", help="Poisson counts from ray data")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--n-level", type=float, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_noise)

    s = sub.add_parser("reduce", help="rebin ray data into plane data")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--npsi", type=int, default=None)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_reduce)

    s = sub.add_parser("recon", help="Chang or Kunyansky reconstruction")
    s.add_argument("--method", choices=METHODS, required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--attenuation", required=True)
    s.add_argument("--m", type=int, default=1)
    s.add_argument("--npsi", type=int, default=None)
    s.add_argument("--mask-radius", type=float, default=0.95)
    s.add_argument("--inversion", choices=("fbp", "fourier"), default="fbp")
    s.add_argument("--max-iter", type=int, default=50)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_recon)

    s = sub.add_parser("invert-radon", help="classical Radon inversion")
    s.add_argument("--dim", type=int, choices=(2, 3), required=True)
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--inversion", choices=("fbp", "fourier"), default="fourier")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_invert_radon)

    s = sub.add_parser("error", help="relative error on the z = 0 slice")
    s.add_argument("--noisy", required=True)
    s.add_argument("--reference", required=True)
    s.add_argument("--slice", default="z=0")
    s.set_defaults(func=cmd_error)

    s = sub.add_parser("table", help="run the full error-table experiment")
    s.add_argument("--config", default=None)
    s.add_argument("-o", "--output", default=None)
    s.add_argument("--rows", default=None, help="also write one delimited row per run")
    s.set_defaults(func=cmd_table)

    s = sub.add_parser("export-slice", help="write one slice as a 16-bit PGM")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--axis", choices=("z", "y", "x"), default="z")
    s.add_argument("--index", type=int, required=True)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_export_slice)

    s = sub.add_parser("selftest", help="run the oracle checks")
    s.add_argument("--n", type=int, default=65)
    s.set_defaults(func=cmd_selftest)

    s = sub.add_parser("bench", help="time the hot kernels")
    s.add_argument("--kernel", nargs="+", default=["project", "reduce", "radon2d_inverse", "radon3d_inverse", "kunyansky_iter"])
    s.add_argument("--size", type=int, default=65)
    s.add_argument("--repeats", type=int, default=5)
    s.add_argument("--backend", choices=("numba", "numpy", "both"), default="both")
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    _accel.set_threads(args.threads)
    try:
        rc = args.func(args)
    except WrtkitError as exc:
        print(f"wrtkit {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"wrtkit {args.command}: {exc}", file=sys.stderr)
        return DataFormatError.exit_code
    except ValueError as exc:
        print(f"wrtkit {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return rc or 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
