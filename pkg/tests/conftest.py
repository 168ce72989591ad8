import numpy as np
import pytest

from pcarank.store import EmbeddingMatrix, Qrels


@pytest.fixture
def tiny_matrix() -> EmbeddingMatrix:
    data = np.array([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]], dtype=np.float32)
    return EmbeddingMatrix(data=data, ids=("a", "b", "c"))


@pytest.fixture
def tiny_qrels() -> Qrels:
    return Qrels(entries={"q1": {"d1": 1, "d2": 0}, "q2": {"d2": 2}})


def random_matrix(rng, n, d, prefix="item") -> EmbeddingMatrix:
    data = rng.normal(size=(n, d)).astype(np.float32)
    return EmbeddingMatrix(data=data, ids=tuple(f"{prefix}_{i}" for i in range(n)))
