"""Sectioned ``key = value`` experiment configuration with strict key checking."""

import configparser
from dataclasses import dataclass

from .errors import DataFormatError
from .pipeline import ExperimentConfig


def _words(v):
    return tuple(v.replace(",", " ").split())


def _floats(v):
    return tuple(float(t) for t in _words(v))


def _ints(v):
    return tuple(int(t) for t in _words(v))


def _join(v):
    return " ".join(f"{x:g}" if isinstance(x, float) else str(x) for x in v)


# section -> {key: parser}
SCHEMA = {
    "phantom": {"activities": _words, "attenuations": _words},
    "grids": {"N": int, "n_phi": int, "n_psi": int, "R": float},
    "noise": {"noise_levels": _floats, "seeds": _ints},
    "method": {
        "methods": _words,
        "m": int,
        "max_iter": int,
        "tol": float,
        "mask_radius": float,
        "inversion3d": str,
    },
    "output": {"table": str, "rows": str},
}


@dataclass
class OutputConfig:
    table: str = "table.txt"
    rows: str = None


def parse(text, source="<config>"):
    """Return ``(ExperimentConfig, OutputConfig)``; unknown sections or keys raise."""
    cp = configparser.ConfigParser(interpolation=None, strict=True)
    cp.optionxform = str  # keep key case (N)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise DataFormatError(f"{source}: {exc.message.splitlines()[0]}") from None
    exp, out = {}, {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise DataFormatError(f"{source}: unknown section [{sec}]")
        for key, raw in cp.items(sec):
            if key not in SCHEMA[sec]:
                raise DataFormatError(f"{source}: unknown key {key!r} in [{sec}]")
            try:
                val = SCHEMA[sec][key](raw.strip())
            except ValueError:
                raise DataFormatError(f"{source}: bad value for {key!r}: {raw!r}") from None
            (out if sec == "output" else exp)[key] = val
    try:
        return ExperimentConfig(**exp), OutputConfig(**out)
    except ValueError as exc:
        raise DataFormatError(f"{source}: {exc}") from None


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataFormatError(f"cannot read config {path}: {exc.strerror}") from None
    return parse(text, str(path))


def dumps(cfg, out=None):
    """Text form of a configuration, accepted by :func:`parse`."""
    out = out or OutputConfig()
    lines = [
        "[phantom]",
        f"activities = {_join(cfg.activities)}",
        f"attenuations = {_join(cfg.attenuations)}",
        "",
        "[grids]",
        f"N = {cfg.N}",
        f"n_phi = {cfg.n_phi}",
        f"n_psi = {cfg.n_psi}",
        f"R = {cfg.R!r}",
        "",
        "[noise]",
        f"noise_levels = {_join(cfg.noise_levels)}",
        f"seeds = {_join(cfg.seeds)}",
        "",
        "[method]",
        f"methods = {_join(cfg.methods)}",
        f"m = {cfg.m}",
        f"max_iter = {cfg.max_iter}",
        f"tol = {cfg.tol!r}",
        f"mask_radius = {cfg.mask_radius!r}",
        f"inversion3d = {cfg.inversion3d}",
        "",
        "[output]",
        f"table = {out.table}",
    ]
    if out.rows:
        lines.append(f"rows = {out.rows}")
    return "\n".join(lines) + "\n"
