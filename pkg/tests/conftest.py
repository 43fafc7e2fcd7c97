import math

import numpy as np
import pytest

from eitqc.medium import MediumParams

GAMMA = 2 * math.pi * 3e6
OMEGA_RB = 2 * math.pi * 377e12


def eit_medium(optical_depth=100.0, rabi=GAMMA, gamma_R=1e-3 * GAMMA, length=1e-2, **kw):
    return MediumParams.from_optical_depth(
        optical_depth,
        gamma_ge=GAMMA,
        Gamma_e=2 * GAMMA,
        gamma_R=gamma_R,
        omega=OMEGA_RB,
        rabi_d=rabi,
        length=length,
        **kw,
    )


@pytest.fixture
def fig3_medium():
    """Omega_d = gamma_ge, gamma_R = 1e-3 gamma_ge, 2 kappa0 L = 100."""
    return eit_medium()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
