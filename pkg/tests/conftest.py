import numpy as np
import pytest

from igp.graph import Dataset, Graph, SyntheticSpec, generate_synthetic


@pytest.fixture
def path3() -> Graph:
    """0 - 1 - 2 path: degrees 1, 2, 1."""
    return Graph(3, [[0, 1], [1, 2]])


@pytest.fixture
def small_sbm() -> Dataset:
    return generate_synthetic(
        SyntheticSpec(
            blocks=3,
            block_size=20,
            intra_prob=0.25,
            inter_prob=0.02,
            feature_dim=8,
            noise=1.0,
            seed=11,
        )
    )


def random_graph(rng: np.random.Generator, n: int, p: float = 0.1) -> Graph:
    """Erdos-Renyi graph (possibly with isolated nodes)."""
    mask = np.triu(rng.random((n, n)) < p, k=1)
    ii, jj = np.nonzero(mask)
    return Graph(n, np.stack([ii, jj], axis=1))


def random_soft_label(rng: np.random.Generator, c: int, max_rejected: int | None = None):
    """A generic soft label with a random (possibly empty) rejected set."""
    from igp.infogain import SoftLabel

    limit = c - 2 if max_rejected is None else max_rejected
    k = int(rng.integers(0, limit + 1)) if limit > 0 else 0
    rejected = set(int(x) for x in rng.choice(c, size=k, replace=False)) if k else set()
    probs = np.zeros(c)
    keep = [i for i in range(c) if i not in rejected]
    raw = rng.random(len(keep)) + 1e-3
    probs[keep] = raw / raw.sum()
    return SoftLabel(probs, frozenset(rejected))
