"""Shared fixtures: the default wave, correction, and expansion, solved once."""

import pytest

from dampwave.correction import ExpansionProfile, solve_correction
from dampwave.diffusion_wave import solve_diffusion_wave
from dampwave.pressure import FarField, PressureLaw


@pytest.fixture(scope="session")
def law():
    return PressureLaw()


@pytest.fixture(scope="session")
def far_field():
    return FarField(1.0, 1.1)


@pytest.fixture(scope="session")
def wave(law, far_field):
    return solve_diffusion_wave(law, far_field)


@pytest.fixture(scope="session")
def corr(wave):
    return solve_correction(wave)


@pytest.fixture(scope="session")
def expansion(wave, corr):
    return ExpansionProfile(wave=wave, correction=corr)


@pytest.fixture(scope="session")
def bare_expansion(wave):
    return ExpansionProfile(wave=wave)


@pytest.fixture(scope="session")
def flat_wave(law):
    # zero-strength wave: the profile is exactly the constant state
    return solve_diffusion_wave(law, FarField(1.05, 1.05))
