import numpy as np
import pytest

from pilotadapt.channel import builtin_profiles
from pilotadapt.core import FadingSpec, Numerology, SystemConfig, build_population, lte_numerology


@pytest.fixture(scope="session")
def num():
    return lte_numerology()


@pytest.fixture(scope="session")
def profiles():
    return builtin_profiles()


@pytest.fixture
def small_cfg():
    return SystemConfig(
        num_rbs=2, num_antennas=4, max_mux=4, ul_power=1.0, dl_power=1.0, noise_power=0.1
    )


@pytest.fixture
def sixteen_user_pop():
    return build_population([4, 4, 4, 4], FadingSpec(), seed=0)


def tiny_numerology(n_s: int, n_sc: int) -> Numerology:
    """Small grid with the standard symbol/SC scales."""
    return Numerology(
        symbol_duration_s=1e-3 / 14,
        subcarrier_spacing_hz=15e3,
        symbols_per_rb=n_s,
        subcarriers_per_rb=n_sc,
    )


def random_channels(rng: np.random.Generator, *shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
