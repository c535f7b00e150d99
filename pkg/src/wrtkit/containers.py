"""On-disk container: ``<stem>.hdr`` (``key = value`` text) + ``<stem>.raw`` (little-endian payload)."""

import os

import numpy as np

from .errors import DataFormatError

MAGIC = "wrtkit-v1"
KINDS = ("volume", "raysino", "planesino", "counts", "slice")
DTYPES = {"f64": np.dtype("<f8"), "u32": np.dtype("<u4")}


def _stem(path):
    path = os.fspath(path)
    for ext in (".hdr", ".raw"):
        if path.endswith(ext):
            return path[: -len(ext)]
    return path


def write(path, array, kind, R=1.0, **extra):
    """Write ``array`` (C order, last axis fastest) and return the header path."""
    if kind not in KINDS:
        raise DataFormatError(f"unknown container kind {kind!r}")
    array = np.asarray(array)
    if kind == "counts":
        if np.any(array < 0) or np.any(array > np.iinfo(np.uint32).max):
            raise DataFormatError("counts out of the u32 range")
        dtype = "u32"
    else:
        dtype = "f64"
    stem = _stem(path)
    lines = [
        f"magic = {MAGIC}",
        f"kind = {kind}",
        "dims = " + " ".join(str(d) for d in array.shape),
        f"R = {float(R)!r}",
        f"dtype = {dtype}",
    ]
    for k, v in extra.items():
        if v is None:
            continue
        if isinstance(v, float):
            v = repr(v)
        lines.append(f"{k} = {v}")
    with open(stem + ".hdr", "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    np.ascontiguousarray(array, dtype=DTYPES[dtype]).tofile(stem + ".raw")
    return stem + ".hdr"


def read_header(path):
    stem = _stem(path)
    try:
        with open(stem + ".hdr", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataFormatError(f"cannot read header {stem}.hdr: {exc.strerror}") from None
    hdr = {}
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        if "=" not in line:
            raise DataFormatError(f"{stem}.hdr line {n}: expected 'key = value'")
        k, v = (t.strip() for t in line.split("=", 1))
        hdr[k] = v
    if hdr.get("magic") != MAGIC:
        raise DataFormatError(f"{stem}.hdr: bad magic {hdr.get('magic')!r}")
    if hdr.get("kind") not in KINDS or hdr.get("dtype") not in DTYPES:
        raise DataFormatError(f"{stem}.hdr: bad kind or dtype")
    try:
        hdr["dims"] = tuple(int(d) for d in hdr["dims"].split())
        hdr["R"] = float(hdr["R"])
    except (KeyError, ValueError):
        raise DataFormatError(f"{stem}.hdr: missing or malformed dims/R") from None
    return hdr


def read(path):
    """Return ``(array, header)``; counts come back as ``int64``."""
    hdr = read_header(path)
    stem = _stem(path)
    dt = DTYPES[hdr["dtype"]]
    try:
        data = np.fromfile(stem + ".raw", dtype=dt)
    except OSError as exc:
        raise DataFormatError(f"cannot read payload {stem}.raw: {exc.strerror}") from None
    if data.size != int(np.prod(hdr["dims"])):
        raise DataFormatError(
            f"{stem}.raw holds {data.size} values, header dims {hdr['dims']} need {int(np.prod(hdr['dims']))}"
        )
    data = data.reshape(hdr["dims"])
    data = data.astype(np.int64) if hdr["dtype"] == "u32" else data.astype(np.float64)
    return data, hdr


def header_float(hdr, key, default=None):
    if key not in hdr:
        if default is None:
            raise DataFormatError(f"header lacks {key!r}")
        return default
    try:
        return float(hdr[key])
    except ValueError:
        raise DataFormatError(f"header key {key!r} is not a number") from None


def write_pgm(path, image):
    """16-bit binary PGM with a linear min-max window."""
    img = np.asarray(image, dtype=float)
    lo, hi = float(np.min(img)), float(np.max(img))
    scaled = np.zeros(img.shape) if hi <= lo else (img - lo) / (hi - lo)
    vals = np.rint(scaled * 65535).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n65535\n".encode("ascii"))
        fh.write(vals.tobytes())


def read_pgm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    # header as written by write_pgm: three newline-terminated lines
    magic, size, maxval, payload = data.split(b"\n", 3)
    if magic != b"P5":
        raise DataFormatError("not a binary PGM")
    w, h = (int(v) for v in size.split())
    dt = ">u2" if int(maxval) > 255 else "u1"
    return np.frombuffer(payload[: w * h * np.dtype(dt).itemsize], dtype=dt).reshape(h, w)
