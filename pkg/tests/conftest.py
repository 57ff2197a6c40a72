import numpy as np
import pytest

from exal.data_io import make_synthetic
from exal.learner import Dataset, TrainConfig, build_model, train


@pytest.fixture(scope="session")
def separable_data():
    """Well-separated two-class images, split for train/test use."""
    train_ds = make_synthetic(n_per_class=100, shape=(12, 12), separation=0.9, seed=11)
    test_ds = make_synthetic(n_per_class=40, shape=(12, 12), separation=0.9, seed=12)
    return train_ds, test_ds


@pytest.fixture(scope="session")
def trained_model(separable_data):
    train_ds, _ = separable_data
    model = build_model(train_ds.shape, rng_seed=3)
    weights = train(model, train_ds, TrainConfig(epochs=3, rng_seed=4))
    return model, weights, train_ds


@pytest.fixture
def tiny_dataset():
    rng = np.random.default_rng(0)
    x = rng.uniform(0.0, 1.0, size=(10, 64))
    y = np.array([0, 1] * 5)
    return Dataset(X=x, y=y, shape=(8, 8))
