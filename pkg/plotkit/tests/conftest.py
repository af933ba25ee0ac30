import pathlib

import pytest

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


@pytest.fixture
def rate_region_csv():
    return str(FIXTURES / "rate_region.csv")


@pytest.fixture
def wsr_perfect_csv():
    return str(FIXTURES / "wsr_perfect.csv")


@pytest.fixture
def wsr_mixed_csv():
    return str(FIXTURES / "wsr_mixed.csv")
