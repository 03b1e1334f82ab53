import numpy as np
import pytest

from mmattack.datasets import gen_gaussian_blobs
from mmattack.models import build_mlp


@pytest.fixture(scope="session")
def easy_blobs():
    """Well-separated 2-D blobs a small MLP learns to 100%."""
    return gen_gaussian_blobs(2, 2, 100, 0.03, seed=5,
                              centers=[[0.3, 0.3], [0.7, 0.7]])


@pytest.fixture(scope="session")
def easy_teacher(easy_blobs):
    from mmattack.experiments import train_teacher

    spec = {"kind": "mlp", "widths": [2, 16, 16], "epochs": 600, "seed": 3,
            "optimizer": {"learning_rate": 0.1, "momentum": 0.9, "weight_decay": 1e-4}}
    return train_teacher(easy_blobs, spec)


def finite_difference_gradient(f, x, h=1e-4):
    """Central finite differences of a scalar function of an array."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        xp = x.copy()
        xp[idx] += h
        xm = x.copy()
        xm[idx] -= h
        g[idx] = (f(xp) - f(xm)) / (2.0 * h)
        it.iternext()
    return g
