import os

import pytest

from hamlab.rng import RngStream


@pytest.fixture
def stream():
    return RngStream(42)


def threads():
    return max(os.cpu_count() or 1, 1)
