import numpy as np
import pytest

from cqedsim.fockalg import SubsystemDims
from cqedsim.model import SystemParams


@pytest.fixture
def fig2_params() -> SystemParams:
    """Low-frequency benchmark configuration (resonator above the atoms)."""
    return SystemParams(f_r=6.0, f_1=3.0, f_2=3.0, alpha_1=0.3, alpha_2=0.3, g_p=0.004)


@pytest.fixture
def fig4_params() -> SystemParams:
    """Gate benchmark configuration (resonator below the atoms)."""
    return SystemParams(f_r=5.190, f_1=6.617, f_2=6.617, alpha_1=0.3, alpha_2=0.3, g_p=0.004)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260809)


def random_params(rng: np.random.Generator, dim: int = 5) -> SystemParams:
    """Dispersive-regime draw with a safe transformation denominator."""
    while True:
        f1, f2 = rng.uniform(3.0, 7.0, 2)
        fr = max(f1, f2) + rng.uniform(1.0, 3.0)
        g1, g2 = rng.uniform(0.02, 0.15, 2)
        gp = rng.uniform(0.0, 0.02)
        a1, a2 = rng.uniform(0.1, 0.4, 2)
        p = SystemParams(
            f_r=fr, f_1=f1, f_2=f2, alpha_1=a1, alpha_2=a2,
            g_1=g1, g_2=g2, g_p=gp, dims=SubsystemDims((dim, dim, dim)),
        )
        d1, d2 = p.detunings()
        if abs(gp**2 - d1 * d2) > 0.1:
            return p
