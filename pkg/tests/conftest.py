import numpy as np
import pytest

from heatkern import build_space


@pytest.fixture
def two_point():
    """Unit edge on two points with counting measure."""
    return build_space(["a", "b"], None, [("a", "b", 1.0)])


@pytest.fixture
def k3():
    """Unit triangle with counting measure."""
    edges = [("a", "b", 1.0), ("a", "c", 1.0), ("b", "c", 1.0)]
    return build_space(["a", "b", "c"], None, edges)


@pytest.fixture
def path3():
    """Three points in a line, unit weights."""
    return build_space(["a", "b", "c"], None, [("a", "b", 1.0), ("b", "c", 1.0)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
