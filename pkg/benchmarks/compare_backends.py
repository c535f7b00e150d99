"""Time every hot kernel with the numba and the numpy backend.

Usage::

    python benchmarks/compare_backends.py [--size 65] [--repeats 5] [--threads N] [-o report.tsv]

Prints one delimited row per (kernel, backend) followed by the numba/numpy
speed-up per kernel.  Pass ``--check-threads`` to rerun the numba kernels with
one thread and with ``--threads`` threads and compare output checksums.
"""

import argparse
import sys

from wrtkit import bench


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--size", type=int, default=65)
    p.add_argument("--repeats", type=int, default=bench.REPEATS)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--kernel", nargs="+", default=list(bench.KERNELS))
    p.add_argument("--check-threads", action="store_true")
    p.add_argument("-o", "--output", default=None)
    args = p.parse_args(argv)

    rows = bench.compare(args.kernel, args.size, args.threads, args.repeats)
    text = bench.render(rows)
    by = {(r.kernel, r.backend): r for r in rows}
    lines = ["", "kernel\tspeedup(numba/numpy)"]
    for k in args.kernel:
        lines.append(f"{k}\t{by[(k, 'numpy')].wall_s / by[(k, 'numba')].wall_s:.2f}")
    text += "\n".join(lines) + "\n"

    status = 0
    if args.check_threads:
        one = {r.kernel: r.checksum for r in (bench.bench(k, args.size, 1, "numba", 1) for k in args.kernel)}
        many = {r.kernel: r.checksum for r in (bench.bench(k, args.size, args.threads, "numba", 1) for k in args.kernel)}
        text += "\nkernel\tchecksum(1 thread)\tchecksum(n threads)\tequal\n"
        for k in args.kernel:
            text += f"{k}\t{one[k]}\t{many[k]}\t{one[k] == many[k]}\n"
            status |= one[k] != many[k]

    sys.stdout.write(text)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    return int(status)


if __name__ == "__main__":
    sys.exit(main())
