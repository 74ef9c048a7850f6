"""Greedy batch selection maximizing propagated information gain.

The objective is the total entropy reduction F = sum_j [H(uniform) - H(q_j)]
where q_j is the influence-weighted belief at node j.  Each greedy step
scores every remaining candidate by the expected drop in propagated entropy
over its receptive field, picks the argmax (ties toward the lower node id),
and tentatively installs the candidate's contribution so later picks see it.

Gains for a step are evaluated against a frozen belief snapshot in one
vectorized pass; only the pick-and-update step mutates the state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph
from .infogain import SoftLabel, entropy_rows, info_gain, normalize_reject, pseudo_label
from .propagation import InfluenceCache


class EmptyFilterError(ValueError):
    """Degree filtering removed every candidate; caller should fall back."""


@dataclass
class SelectionConfig:
    """Knobs for one greedy selection round.

    `degree_threshold=None` lets the caller pick a scale-appropriate default
    (0 for desk-scale graphs, 8 for citation-scale, 15 beyond); 0 disables
    filtering outright.  The ablation flags are independent:

    - disable_propagation: rank by each candidate's own info gain, ignoring
      the graph (no entropy propagation).
    - uniform_influence: weight every node of a receptive field equally
      instead of by walk probability.
    - uniform_reject_label: refusals produce a uniform label over the
      remaining classes instead of the renormalized conditional.
    """

    batch_size: int = 5
    depth: int = 2
    degree_threshold: int | None = None
    mode: str = "approximate"
    disable_propagation: bool = False
    uniform_influence: bool = False
    uniform_reject_label: bool = False

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.depth < 0:
            raise ValueError("depth must be >= 0")
        if self.mode not in ("approximate", "exact"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.degree_threshold is not None and self.degree_threshold < 0:
            raise ValueError("degree_threshold must be >= 0")


def resolve_degree_threshold(threshold: int | None, node_count: int) -> int:
    """Scale-appropriate default: no filtering on desk-scale graphs,
    8 at citation scale, 15 on larger graphs."""
    if threshold is not None:
        return int(threshold)
    if node_count < 1000:
        return 0
    if node_count <= 100_000:
        return 8
    return 15


def filter_candidates(graph: Graph, pool, threshold: int, hard_labeled=()) -> set[int]:
    """Drop low-degree (uninfluential) candidates from the pool.

    Returns {v in pool : degree(v) >= threshold} minus hard-labeled nodes.
    Threshold 0 only removes hard-labeled entries.  Raises EmptyFilterError
    when nothing survives so the caller can warn and fall back.
    """
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    hard = set(int(h) for h in hard_labeled)
    kept = {
        int(v)
        for v in pool
        if int(v) not in hard and graph.degrees[int(v)] >= threshold
    }
    if not kept and pool:
        raise EmptyFilterError(f"degree threshold {threshold} removed all candidates")
    return kept


class _Weights:
    """Influence columns, optionally flattened to uniform over the support."""

    def __init__(self, cache: InfluenceCache, uniform: bool) -> None:
        self._cache = cache
        self._uniform = uniform

    def warm(self, sources) -> None:
        self._cache.warm(sources)

    def col(self, source: int) -> tuple[np.ndarray, np.ndarray]:
        idx, vals = self._cache.column(source)
        if self._uniform:
            vals = np.full(idx.size, 1.0 / idx.size)
        return idx, vals


class BeliefState:
    """Dense per-node belief mixtures with cached entropies.

    Rows start at the uniform completion; installing an annotation adds
    influence * (label - previous contribution).  Entropies are measured on
    the zero-clamped, renormalized rows (a no-op for true walk weights).
    """

    def __init__(self, node_count: int, class_count: int) -> None:
        self.class_count = int(class_count)
        self.raw = np.full((node_count, class_count), 1.0 / class_count)
        self.ent = np.full(node_count, math.log2(class_count))

    def apply(self, idx: np.ndarray, weights: np.ndarray, new_probs, old_probs) -> None:
        delta = np.asarray(new_probs, dtype=np.float64) - np.asarray(
            old_probs, dtype=np.float64
        )
        self.raw[idx] += weights[:, None] * delta[None, :]
        self.ent[idx] = entropy_rows(self.raw[idx])

    @property
    def objective(self) -> float:
        """Total entropy reduction versus the no-annotation state, in bits."""
        n = self.raw.shape[0]
        return float(n * math.log2(self.class_count) - self.ent.sum())


class GreedyState:
    """Mutable working state for one selection round.

    Built from a frozen snapshot of the annotation state: stored annotation
    targets, live soft labels for selectable nodes, and the candidate pool.
    `evaluations` counts candidate gain evaluations for work accounting.
    """

    def __init__(
        self,
        influence: InfluenceCache,
        annotations,
        live_labels,
        pool,
        node_count: int,
        class_count: int,
        cfg: SelectionConfig,
    ) -> None:
        self.class_count = int(class_count)
        self.live = dict(live_labels)
        self.weights = _Weights(influence, cfg.uniform_influence)
        self.pool = set(int(v) for v in pool)
        self.evaluations = 0
        self._uniform = np.full(class_count, 1.0 / class_count)
        self._contrib: dict[int, np.ndarray] = {}
        self.beliefs = BeliefState(node_count, class_count)
        self.weights.warm(sorted(set(annotations) | self.pool))
        for m in sorted(annotations):
            idx, vals = self.weights.col(m)
            probs = annotations[m].probs
            self.beliefs.apply(idx, vals, probs, self._uniform)
            self._contrib[int(m)] = np.asarray(probs, dtype=np.float64)

    @property
    def objective(self) -> float:
        return self.beliefs.objective

    def candidates(self) -> np.ndarray:
        return np.asarray(sorted(self.pool), dtype=np.int64)

    def contribution(self, node: int) -> np.ndarray:
        """The node's current summand in the belief mixture."""
        return self._contrib.get(int(node), self._uniform)

    def apply_tentative(self, node: int, new_contrib: np.ndarray) -> None:
        idx, vals = self.weights.col(node)
        old = self.contribution(node)
        self.beliefs.apply(idx, vals, new_contrib, old)
        self._contrib[int(node)] = np.asarray(new_contrib, dtype=np.float64)
        self.pool.discard(int(node))


def _branch_mixture(label: SoftLabel, uniform_reject: bool) -> np.ndarray:
    """Expectation of the annotation target over both oracle branches."""
    if label.hard:
        return np.array(label.probs)
    guess = pseudo_label(label)
    p_agree = float(label.probs[guess])
    accept = np.zeros(label.class_count)
    accept[guess] = 1.0
    reject = normalize_reject(label, guess, uniform=uniform_reject).probs
    return p_agree * accept + (1.0 - p_agree) * reject


def _propagated_gains(
    state: GreedyState, cands: np.ndarray, cfg: SelectionConfig
) -> np.ndarray:
    """Entropy reduction over each candidate's receptive field, one pass."""
    cols = [state.weights.col(int(i)) for i in cands]
    sizes = np.asarray([idx.size for idx, _ in cols], dtype=np.int64)
    starts = np.zeros(cands.size, dtype=np.int64)
    np.cumsum(sizes[:-1], out=starts[1:])
    flat_idx = np.concatenate([idx for idx, _ in cols])
    flat_w = np.concatenate([vals for _, vals in cols])
    olds = np.stack([state.contribution(int(i)) for i in cands])
    flat_old = np.repeat(olds, sizes, axis=0)
    base_raw = state.beliefs.raw[flat_idx]
    base_ent = state.beliefs.ent[flat_idx]

    def reduction(new_per_cand: np.ndarray) -> np.ndarray:
        flat_new = np.repeat(new_per_cand, sizes, axis=0)
        shifted = base_raw + flat_w[:, None] * (flat_new - flat_old)
        drops = base_ent - entropy_rows(shifted)
        return np.add.reduceat(drops, starts)

    lives = [state.live[int(i)] for i in cands]
    if cfg.mode == "approximate":
        return reduction(np.stack([lab.probs for lab in lives]))
    accepts = np.zeros((cands.size, state.class_count))
    rejects = np.zeros((cands.size, state.class_count))
    p_agree = np.zeros(cands.size)
    for row, lab in enumerate(lives):
        if lab.hard:
            accepts[row] = lab.probs
            rejects[row] = lab.probs
            p_agree[row] = 1.0
            continue
        guess = pseudo_label(lab)
        p_agree[row] = lab.probs[guess]
        accepts[row, guess] = 1.0
        rejects[row] = normalize_reject(
            lab, guess, uniform=cfg.uniform_reject_label
        ).probs
    return p_agree * reduction(accepts) + (1.0 - p_agree) * reduction(rejects)


def marginal_gain(node: int, state: GreedyState, cfg: SelectionConfig) -> float:
    """Score of annotating `node` next, in bits.

    Propagated mode sums expected entropy reductions over the receptive
    field; with disable_propagation it is the candidate's own info gain.
    """
    if cfg.disable_propagation:
        label = state.live[int(node)]
        if label.hard:
            return 0.0
        return info_gain(label, uniform_reject=cfg.uniform_reject_label)
    return float(
        _propagated_gains(state, np.asarray([int(node)], dtype=np.int64), cfg)[0]
    )


def select_batch(
    state: GreedyState, cfg: SelectionConfig, batch_size: int | None = None
) -> list[int]:
    """Pick up to `batch_size` nodes greedily, mutating `state` tentatively.

    Each pick maximizes the marginal gain against the current tentative
    beliefs; the picked candidate's expected contribution (exact mode) or
    live soft label (approximate mode) is installed before the next pick.
    Returns the picked order; shorter than requested iff the pool runs out.
    """
    b = cfg.batch_size if batch_size is None else int(batch_size)
    picked: list[int] = []
    for _ in range(b):
        cands = state.candidates()
        if cands.size == 0:
            break
        if cfg.disable_propagation:
            gains = np.asarray(
                [
                    0.0
                    if state.live[int(i)].hard
                    else info_gain(
                        state.live[int(i)], uniform_reject=cfg.uniform_reject_label
                    )
                    for i in cands
                ]
            )
        else:
            gains = _propagated_gains(state, cands, cfg)
        state.evaluations += int(cands.size)
        best = int(cands[int(np.argmax(gains))])
        label = state.live[best]
        if cfg.mode == "exact":
            contrib = _branch_mixture(label, cfg.uniform_reject_label)
        else:
            contrib = np.array(label.probs)
        state.apply_tentative(best, contrib)
        picked.append(best)
    return picked
