import math
from pathlib import Path

import numpy as np
import pytest

from pdccoupling import BeamGeometry, PhaseMatchConfig, load_config

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


def config_path(name):
    return CONFIGS / f"{name}.json"


@pytest.fixture
def liio3():
    return load_config(config_path("liio3_5mm"))


@pytest.fixture
def weak():
    return load_config(config_path("weak_walkoff_5mm"))


@pytest.fixture
def thin_equal():
    return load_config(config_path("thin_equal_waists"))


def random_bundle(rng, aperture=True):
    """A random validated (config, geom) pair.

    Waists are log-uniform over [20, 2000] um, the walk-off combinations
    a_i, a_s are built positive by construction.
    """
    K_p = rng.uniform(10.0, 60.0)
    K_s = K_p / 2 * rng.uniform(0.9, 1.1)
    K_i = K_p - K_s
    total = math.exp(rng.uniform(math.log(1e-3), math.log(0.3)))
    frac = rng.uniform(0.05, 0.95)
    theta_i = total * rng.uniform(0.0, 1.0)
    theta_s = total - theta_i
    N_s = rng.uniform(-1.0, 1.0)
    N_p = N_s + K_p * (theta_i - frac * total)
    config = PhaseMatchConfig(
        K_p, K_s, K_i, N_p, N_s, rng.uniform(-0.1, 0.1), theta_i, theta_s,
        rng.uniform(1.0, 1e4),
    )
    w = np.exp(rng.uniform(math.log(20.0), math.log(2000.0), size=4))
    geom = BeamGeometry(
        w[0], w[1], w[2],
        w_ap=w[3] if aperture else None,
        k_fresnel=math.exp(rng.uniform(math.log(1e-6), math.log(1e-3))) if aperture else None,
    )
    return config, geom
