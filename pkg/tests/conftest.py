import numpy as np
import pytest

from divalign.mapping import BlockMapping, load_mapping
from divalign.protograph import bundled_base_graph, data_path, from_dense, select_rate


@pytest.fixture(scope="session")
def bg1():
    return bundled_base_graph("bg1")


@pytest.fixture(scope="session")
def bg2():
    return bundled_base_graph("bg2")


@pytest.fixture(scope="session")
def bg1_ref(bg1):
    return select_rate(bg1, 26), load_mapping(data_path("bg1_r22_46.map"))


@pytest.fixture(scope="session")
def bg2_ref(bg2):
    return select_rate(bg2, 16), load_mapping(data_path("bg2_r10_24.map"))


def rootcheck_toy():
    """Rate-1/2 code where each CN is a rootcheck for one info VN.

    Info VN 0 sits in block 0 and its CN's other neighbors in block 1;
    info VN 1 mirrors that.
    """
    bg = from_dense([[1, 1, 1, 0], [1, 1, 0, 1]], info_cols=2, name="rootcheck-toy")
    return bg, select_rate(bg, 2), BlockMapping((0, 1, 1, 0), 2)


@pytest.fixture
def toy():
    return rootcheck_toy()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
