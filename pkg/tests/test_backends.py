import json
import os
import subprocess
import sys

import numpy as np
import pytest

from wrtkit import _accel, kernels, noise
from wrtkit.bench import use_backend
from wrtkit.forward import WeightEvaluator, project_all, sample_volume
from wrtkit.grids import CartesianGrid, build_plane_grid, build_ray_grid
from wrtkit.radon_inv import radon2d_forward, radon2d_inverse, radon3d_forward, radon3d_inverse
from wrtkit.reduce import reduce

pytestmark = pytest.mark.skipif(kernels.numba_impl is None, reason="numba not installed")

N = 17


@pytest.fixture(scope="module")
def data():
    rng = np.random.default_rng(12)
    # keep the data clear of the support sphere: sample points lying on it within one ulp
    # would otherwise see a jump of the random field and compare meaningless bits
    ball = CartesianGrid(N).ball_mask(0.7)
    return {
        "f": rng.random((N, N, N)) * ball,
        "a": 0.7 * rng.random((N, N, N)) * ball,
        "rg": build_ray_grid(N, N, 16),
        "pg": build_plane_grid(N, 16, 12),
        "rng": rng,
    }


def _cases(d):
    rg, pg = d["rg"], d["pg"]
    W = WeightEvaluator(d["a"])
    rays = project_all(d["f"], W, rg)  # shared input, computed once per backend
    planes = reduce(rays, rg, pg)
    pts = d["rng"].uniform(-1.1, 1.1, (200, 3)) if "pts" not in d else d["pts"]
    d["pts"] = pts
    return {
        "sample_volume": lambda: sample_volume(d["f"], pts),
        "project_rays": lambda: project_all(d["f"], W, rg),
        "weight_harmonics": lambda: W.harmonics(16, 3),
        "reduce_planes": lambda: reduce(rays, rg, pg),
        "backproject_2d": lambda: radon2d_inverse(rays),
        "fbp3d": lambda: radon3d_inverse(planes, pg, method="fbp"),
        "nufft_spread": lambda: radon3d_inverse(planes, pg, method="fourier"),
        "poisson_counts": lambda: noise.sample_counts(rays * 40, 1.0, 2**63 + 11),
        "line_integrals_2d": lambda: radon2d_forward(d["f"][N // 2], 16),
        "plane_integrals": lambda: radon3d_forward(d["f"], pg),
    }


NAMES = (
    "sample_volume",
    "project_rays",
    "weight_harmonics",
    "reduce_planes",
    "backproject_2d",
    "fbp3d",
    "nufft_spread",
    "poisson_counts",
    "line_integrals_2d",
    "plane_integrals",
)


@pytest.mark.parametrize("name", NAMES)
def test_backends_agree(data, name):
    out = {}
    for b in ("numba", "numpy"):
        with use_backend(b):
            assert _accel.backend_name() == b
            out[b] = _cases(data)[name]()
    x, y = np.asarray(out["numba"]), np.asarray(out["numpy"])
    assert x.shape == y.shape
    if name == "poisson_counts":
        np.testing.assert_array_equal(x, y)
    else:
        assert np.max(np.abs(x - y)) <= 1e-10 * max(1.0, np.max(np.abs(y)))


def test_every_dispatched_kernel_exists_in_both_backends():
    for name in kernels.KERNELS:
        assert callable(getattr(kernels.numpy_impl, name))
        assert callable(getattr(kernels.numba_impl, name))


def test_env_flag_selects_backend(monkeypatch):
    for v, want in (("0", "numpy"), ("off", "numpy"), ("1", "numba")):
        monkeypatch.setenv("WRTKIT_NUMBA", v)
        assert _accel.backend_name() == want
        assert kernels.backend() is getattr(kernels, f"{want}_impl")
    with pytest.raises(ValueError):
        kernels.backend("cuda")


_SCRIPT = r"""
import json, sys
import numpy as np
from wrtkit import _accel
from wrtkit.bench import checksum
sys.path.insert(0, {tests!r})
from test_backends import _cases, N
from wrtkit.grids import CartesianGrid, build_plane_grid, build_ray_grid
_accel.set_threads(int(sys.argv[1]))
rng = np.random.default_rng(12)
ball = CartesianGrid(N).ball_mask(0.7)
d = dict(f=rng.random((N, N, N)) * ball, a=0.7 * rng.random((N, N, N)) * ball,
         rg=build_ray_grid(N, N, 16), pg=build_plane_grid(N, 16, 12), rng=rng)
print(json.dumps({{k: checksum(np.asarray(fn())) for k, fn in _cases(d).items()}}))
"""


def test_outputs_independent_of_thread_count():
    script = _SCRIPT.format(tests=os.path.dirname(__file__))
    env = dict(os.environ, NUMBA_NUM_THREADS="4", WRTKIT_NUMBA="1")
    sums = []
    for t in ("1", "4"):
        p = subprocess.run([sys.executable, "-c", script, t], capture_output=True, text=True, env=env)
        assert p.returncode == 0, p.stderr
        sums.append(json.loads(p.stdout.strip().splitlines()[-1]))
    assert sums[0] == sums[1]
