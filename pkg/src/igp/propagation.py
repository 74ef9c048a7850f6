"""Random-walk propagation operator and influence computations.

The operator is the row-stochastic matrix P = D~^-1 A~ with A~ = A + I,
so each node keeps a self-connection and every row sums to one.  The
influence of annotating node i on node j after k steps is the (j, i)
entry of P^k, i.e. column i of P^k, obtained with k sparse applications
of the unit vector e_i (O(k * nnz(P)) time, never materializing P^k).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .graph import Graph


@dataclass
class TransitionMatrix:
    """Row-stochastic walk operator with self-loops."""

    matrix: sparse.csr_matrix

    def __post_init__(self) -> None:
        n = self.matrix.shape[0]
        if self.matrix.shape != (n, n):
            raise ValueError("transition matrix must be square")
        rows = np.asarray(self.matrix.sum(axis=1)).ravel()
        if not np.allclose(rows, 1.0, atol=1e-12):
            raise ValueError("transition matrix rows must sum to 1")
        if self.matrix.nnz and self.matrix.data.min() < 0:
            raise ValueError("transition matrix entries must be non-negative")

    @property
    def node_count(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def nnz(self) -> int:
        return int(self.matrix.nnz)


def build_transition(graph: Graph) -> TransitionMatrix:
    """P = D~^-1 (A + I): normalize each augmented-adjacency row to sum 1."""
    n = graph.node_count
    a_tilde = graph.adjacency() + sparse.identity(n, dtype=np.float64, format="csr")
    inv_deg = 1.0 / np.asarray(a_tilde.sum(axis=1)).ravel()
    p = sparse.diags(inv_deg) @ a_tilde
    return TransitionMatrix(p.tocsr())


@dataclass(frozen=True)
class InfluenceColumn:
    """Sparse column i of P^k: influence of annotating `source` on each node.

    `indices` are the nodes with nonzero influence (sorted ascending) and
    `values` the matching magnitudes.  For depth >= 1 the support equals the
    k-hop ball around the source because of the self-loops.
    """

    source: int
    depth: int
    indices: np.ndarray
    values: np.ndarray

    def dense(self, node_count: int) -> np.ndarray:
        out = np.zeros(node_count, dtype=np.float64)
        out[self.indices] = self.values
        return out


def influence_from(tm: TransitionMatrix, source: int, depth: int) -> InfluenceColumn:
    """Column `source` of P^depth via repeated sparse mat-vec on e_source."""
    n = tm.node_count
    if not 0 <= source < n:
        raise ValueError("source out of range")
    if depth < 0:
        raise ValueError("depth must be non-negative")
    vec = np.zeros(n, dtype=np.float64)
    vec[source] = 1.0
    for _ in range(depth):
        vec = tm.matrix @ vec
    idx = np.nonzero(vec)[0]
    return InfluenceColumn(
        source=int(source), depth=int(depth), indices=idx, values=vec[idx]
    )


def receptive_field(graph: Graph, source: int, depth: int) -> np.ndarray:
    """Sorted node ids within `depth` hops of `source`, including the source."""
    if not 0 <= source < graph.node_count:
        raise ValueError("source out of range")
    seen = {int(source)}
    frontier = [int(source)]
    for _ in range(depth):
        nxt = []
        for v in frontier:
            for u in graph.neighbors(v):
                u = int(u)
                if u not in seen:
                    seen.add(u)
                    nxt.append(u)
        frontier = nxt
        if not frontier:
            break
    return np.asarray(sorted(seen), dtype=np.int64)


def propagate_features(tm: TransitionMatrix, features: np.ndarray, depth: int) -> np.ndarray:
    """Apply P depth times to the feature matrix (the smoothed input P^k X)."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    out = np.asarray(features, dtype=np.float64)
    for _ in range(depth):
        out = tm.matrix @ out
    return out


class InfluenceCache:
    """Influence columns for one (transition, depth) pair, computed lazily.

    Columns for many sources are built in one batched sparse-dense product
    and stored sparsified, so repeated greedy sweeps reuse them.
    """

    def __init__(self, tm: TransitionMatrix, depth: int) -> None:
        if depth < 0:
            raise ValueError("depth must be non-negative")
        self.tm = tm
        self.depth = int(depth)
        self._cols: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def warm(self, sources) -> None:
        todo = [int(s) for s in sources if int(s) not in self._cols]
        if not todo:
            return
        n = self.tm.node_count
        block = np.zeros((n, len(todo)), dtype=np.float64)
        block[todo, np.arange(len(todo))] = 1.0
        for _ in range(self.depth):
            block = self.tm.matrix @ block
        for j, s in enumerate(todo):
            col = block[:, j]
            idx = np.nonzero(col)[0]
            self._cols[s] = (idx, col[idx].copy())

    def column(self, source: int) -> tuple[np.ndarray, np.ndarray]:
        """(indices, values) of the influence column for `source`."""
        s = int(source)
        if s not in self._cols:
            self.warm([s])
        return self._cols[s]

    def __contains__(self, source: int) -> bool:
        return int(source) in self._cols
