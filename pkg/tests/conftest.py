import functools

import pytest

from twocover.cli import sample_configurations
from twocover.moduli import PointConfiguration, build_quartic

WORKED_MODULI = ((17, 35), (-7, 3), (-9, 9))


@functools.lru_cache(maxsize=None)
def worked_curve():
    return build_quartic(PointConfiguration(WORKED_MODULI))


@functools.lru_cache(maxsize=None)
def sampled_curves(coord_range: int, count: int, seed: int):
    return tuple(build_quartic(cfg) for cfg in sample_configurations(coord_range, count, seed))


@pytest.fixture(scope="session")
def worked():
    return worked_curve()


@pytest.fixture(scope="session")
def small_curves():
    return sampled_curves(6, 4, 2024)
