"""Relative reconstruction error and the comparison tables."""

from dataclasses import asdict, dataclass

import numpy as np

METHODS = ("chang2d", "chang3d", "kun2d", "kun3d")

# published relative errors, columns (f, a, n) in this order
COLUMNS = (
    ("f1", "a1", 50),
    ("f1", "a2", 50),
    ("f1", "a1", 500),
    ("f1", "a2", 500),
    ("f2", "a1", 50),
    ("f2", "a2", 50),
    ("f2", "a1", 500),
    ("f2", "a2", 500),
)
REFERENCE = {
    "chang2d": (1.193, 1.340, 0.377, 0.434, 0.644, 0.625, 0.211, 0.202),
    "chang3d": (0.779, 0.942, 0.251, 0.299, 0.438, 0.432, 0.137, 0.135),
    "kun2d": (1.279, 1.415, 0.437, 0.438, 0.714, 0.634, 0.254, 0.205),
    "kun3d": (0.847, 0.952, 0.316, 0.303, 0.494, 0.439, 0.187, 0.138),
}


def reference_value(method, activity, attenuation, n_level):
    return REFERENCE[method][COLUMNS.index((activity, attenuation, int(n_level)))]


@dataclass(frozen=True)
class ErrorRecord:
    activity: str
    attenuation: str
    noise: float
    method: str
    seed: int
    eps: float

    def row(self, sep="\t"):
        return sep.join(str(v) for v in asdict(self).values())


def rel_error(noisy, reference):
    """``||noisy - reference||_F / ||reference||_F`` for two images of equal shape."""
    noisy = np.asarray(noisy, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if noisy.shape != reference.shape:
        raise ValueError(f"shape mismatch {noisy.shape} vs {reference.shape}")
    den = np.linalg.norm(reference)
    if den == 0:
        raise ValueError("reference image is identically zero")
    return float(np.linalg.norm(noisy - reference) / den)


def central_slice(vol):
    """The ``z = 0`` slice of an odd-sized ``[z, y, x]`` volume."""
    n = vol.shape[0]
    if n % 2 == 0:
        raise ValueError("z = 0 is a grid plane only for odd N")
    return vol[n // 2]


def summarize(records):
    """``{(method, activity, attenuation, noise): [eps per seed]}``."""
    out = {}
    for r in records:
        out.setdefault((r.method, r.activity, r.attenuation, r.noise), []).append(r.eps)
    return out


def render_table(records, methods=METHODS):
    """Aligned text table: one row per method, columns in the published order (median over seeds)."""
    summ = summarize(records)
    head = ["method"] + [f"{f},{a},n={n:g}" for f, a, n in COLUMNS]
    rows = [head]
    for m in methods:
        row = [m]
        for f, a, n in COLUMNS:
            vals = summ.get((m, f, a, float(n)))
            row.append("-" if not vals else f"{np.median(vals):.3f}")
        rows.append(row)
        if m in REFERENCE:
            rows.append([f"  ref"] + [f"{v:.3f}" for v in REFERENCE[m]])
    widths = [max(len(r[i]) for r in rows) for i in range(len(head))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in rows) + "\n"


def render_rows(records, sep="\t"):
    head = sep.join(("activity", "attenuation", "noise", "method", "seed", "eps"))
    return "\n".join([head] + [r.row(sep) for r in records]) + "\n"
