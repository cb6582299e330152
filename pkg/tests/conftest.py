import numpy as np
import pytest

from treeshift.tree import ALL_RAYS, build_tree


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def tree_T():
    """Root with two rays."""
    return build_tree({"depth": 4, "children": {"0": ["1", "2"]}, "tail": "all_rays"})


@pytest.fixture
def tree_T_tilde():
    """Root, one child, then two rays."""
    return build_tree({"depth": 4, "children": {"0": ["1"], "1": ["2", "3"]}, "tail": "all_rays"})


@pytest.fixture
def all_rays():
    return ALL_RAYS
