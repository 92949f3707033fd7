import pytest

from augmetrics.imagecore import GrayImage
from augmetrics.rng import make_rng


@pytest.fixture
def rng():
    return make_rng(12345)


def random_image(rng, h=16, w=16) -> GrayImage:
    return GrayImage(rng.random((h, w)))
