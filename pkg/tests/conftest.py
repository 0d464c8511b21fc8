import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from survbench.textprep import Document, DocTermMatrix


@pytest.fixture
def hand_corpus():
    """Two positive and two negative documents over {a, b, c}."""
    return [
        Document("p1", "a a", 1),
        Document("p2", "a b", 1),
        Document("n1", "b b", 0),
        Document("n2", "b c", 0),
    ]


@pytest.fixture
def hand_count_matrix():
    """Count DTM of the hand corpus over vocab {a:0, b:1, c:2}."""
    return DocTermMatrix(
        4, 3,
        [0, 1, 1, 2, 3, 3],
        [0, 0, 1, 1, 1, 2],
        [2, 1, 1, 2, 1, 1],
        "count",
    )


@pytest.fixture
def hand_labels():
    return np.array([1, 1, 0, 0])


def random_count_matrix(rng, n_docs, n_features, density=0.3,
                        max_count=5, weighting="count"):
    """Small random DTM for property tests."""
    mask = rng.random((n_docs, n_features)) < density
    rows, cols = np.nonzero(mask)
    if weighting == "binary":
        vals = np.ones(rows.size)
    else:
        vals = rng.integers(1, max_count + 1, size=rows.size).astype(float)
    return DocTermMatrix(n_docs, n_features, rows, cols, vals, weighting)
