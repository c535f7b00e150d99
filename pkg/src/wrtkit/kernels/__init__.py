"""Hot kernels with a numba path and a pure-numpy fallback.

Calls are dispatched at call time, so flipping ``WRTKIT_NUMBA`` between calls
switches backends without re-importing anything.
"""

from .. import _accel
from . import numpy_impl

if _accel.HAS_NUMBA:
    from . import numba_impl
else:  # pragma: no cover
    numba_impl = None

KERNELS = (
    "sample_volume",
    "project_rays",
    "weight_harmonics",
    "reduce_planes",
    "backproject_2d",
    "fbp3d_stage1",
    "fbp3d_stage2",
    "nufft_spread",
    "poisson_counts",
    "uniforms",
    "line_integrals_2d",
    "plane_integrals",
)


def backend(name=None):
    """Module implementing the kernels for ``name`` ('numba', 'numpy' or None = auto)."""
    if name is None:
        name = _accel.backend_name()
    if name == "numba":
        if numba_impl is None:
            raise RuntimeError("numba backend requested but numba is not installed")
        return numba_impl
    if name == "numpy":
        return numpy_impl
    raise ValueError(f"unknown backend {name!r}")


def _dispatch(name):
    def call(*args, **kwargs):
        return getattr(backend(), name)(*args, **kwargs)

    call.__name__ = name
    call.__doc__ = getattr(numpy_impl, name).__doc__
    return call


for _name in KERNELS:
    globals()[_name] = _dispatch(_name)
del _name
