import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "wrtkit",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("wrtkit")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def gaussian_volume(N, sig=0.25, center=(0.0, 0.0, 0.0)):
    from wrtkit.grids import CartesianGrid

    g = CartesianGrid(N)
    z, y, x = g.mesh()
    cx, cy, cz = center
    f = np.exp(-((x - cx) ** 2 + (y - cy) ** 2 + (z - cz) ** 2) / (2 * sig * sig))
    return f * g.ball_mask()


def ball_volume(N, r=1.0):
    from wrtkit.grids import CartesianGrid

    return CartesianGrid(N).ball_mask(r).astype(float)


_CELLS = {}


@pytest.fixture(scope="session")
def ci_cell():
    """Factory for cached CI-scale pipeline cells keyed by (activity, attenuation)."""
    from wrtkit.pipeline import Cell, ExperimentConfig

    def get(activity, attenuation):
        key = (activity, attenuation)
        if key not in _CELLS:
            _CELLS[key] = Cell(ExperimentConfig.ci(), activity, attenuation)
        return _CELLS[key]

    return get


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
