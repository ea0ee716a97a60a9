import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "scripts"))

from make_synthetic_corpus import make_corpus  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """60 small synthetic images in 4 classes, shared across the session."""
    root = tmp_path_factory.mktemp("corpus")
    return make_corpus(root, n_images=60, size=64, seed=0)


@pytest.fixture(scope="session")
def tiny_features():
    """A small separable 3-class feature problem shared by model tests."""
    rng = np.random.default_rng(42)
    X = rng.random((150, 10))
    y = (X[:, 0] + X[:, 1] > 1.0).astype(int) + (X[:, 2] > 0.7).astype(int)
    return X, y
