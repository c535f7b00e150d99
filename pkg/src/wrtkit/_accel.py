"""Backend selection for the hot kernels.

The numba path is used when numba imports cleanly and ``WRTKIT_NUMBA`` is not
set to a false value (``0``, ``false``, ``no``, ``off``).  Otherwise every
kernel falls back to its vectorized numpy twin in :mod:`wrtkit.kernels.numpy_impl`.
Thread count is taken from ``--threads`` (via :func:`set_threads`) or from the
``WRTKIT_THREADS`` environment variable.
"""

import os
import warnings

_FALSE = {"0", "false", "no", "off"}

try:
    if "NUMBA_THREADING_LAYER" not in os.environ:
        # the bundled TBB is too old and only emits a warning
        os.environ["NUMBA_THREADING_LAYER"] = "workqueue"
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False


def numba_enabled():
    """True when the numba kernels should be used."""
    flag = os.environ.get("WRTKIT_NUMBA", "1").strip().lower()
    return HAS_NUMBA and flag not in _FALSE


def backend_name():
    return "numba" if numba_enabled() else "numpy"


def set_threads(n=None):
    """Cap worker threads for numba kernels; returns the effective count.

    ``n=None`` reads ``WRTKIT_THREADS``.  Values above the numba pool size are
    clipped to the pool size.
    """
    if n is None:
        env = os.environ.get("WRTKIT_THREADS")
        n = int(env) if env else None
    if not HAS_NUMBA:
        return 1
    if n is None:
        return numba.get_num_threads()
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


def get_threads():
    return numba.get_num_threads() if HAS_NUMBA else 1
