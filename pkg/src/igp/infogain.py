"""Soft labels, entropy accounting, and information-gain primitives.

A soft label is a class distribution plus the set of classes an annotator
has already rejected for that node.  Rejected classes always carry exactly
zero probability.  A label is "hard" when a single class holds all the
mass, which happens on an accepted query or after every other class has
been rejected.

All entropies are in bits (log base 2) with the convention 0*log(0) = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SUM_TOL = 1e-6
_DEGENERATE_EPS = 1e-12

_degenerate_rejections = 0


def degenerate_rejection_count() -> int:
    """How many rejections fell back to a uniform label because the
    remaining probability mass was numerically zero."""
    return _degenerate_rejections


def reset_degenerate_rejection_count() -> None:
    global _degenerate_rejections
    _degenerate_rejections = 0


def _validate_distribution(probs: np.ndarray) -> None:
    if probs.ndim != 1 or probs.size < 2:
        raise ValueError("need a 1-D distribution over at least two classes")
    if not np.all(np.isfinite(probs)):
        raise ValueError("distribution contains non-finite values")
    if probs.min() < -1e-9:
        raise ValueError("distribution contains negative probabilities")
    total = float(probs.sum())
    if abs(total - 1.0) > SUM_TOL:
        raise ValueError(f"distribution sums to {total}, not 1")


def entropy(probs) -> float:
    """Shannon entropy in bits of a probability vector."""
    p = np.asarray(probs, dtype=np.float64)
    _validate_distribution(p)
    pos = p[p > 0]
    return float(-(pos * np.log2(pos)).sum())


def entropy_rows(rows: np.ndarray) -> np.ndarray:
    """Row-wise entropy in bits; rows are clamped at zero and renormalized.

    The clamp is a no-op for true probability rows and keeps mixtures that
    carry non-convex weights (the uniform-influence ablation) inside the
    simplex before measuring them.
    """
    r = np.maximum(np.asarray(rows, dtype=np.float64), 0.0)
    totals = r.sum(axis=-1, keepdims=True)
    if np.any(totals <= 0):
        raise ValueError("belief row has no positive mass")
    p = r / totals
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log2(p, where=p > 0), 0.0)
    return -terms.sum(axis=-1)


@dataclass(frozen=True)
class SoftLabel:
    """Class distribution plus the cumulative set of rejected classes."""

    probs: np.ndarray
    rejected: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        p = np.array(self.probs, dtype=np.float64)
        _validate_distribution(p)
        rej = frozenset(int(r) for r in self.rejected)
        if rej and (min(rej) < 0 or max(rej) >= p.size):
            raise ValueError("rejected class id out of range")
        if len(rej) >= p.size:
            raise ValueError("cannot reject every class")
        if any(p[r] != 0.0 for r in rej):
            raise ValueError("rejected classes must carry zero probability")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "rejected", rej)

    @property
    def class_count(self) -> int:
        return int(self.probs.size)

    @property
    def hard(self) -> bool:
        """True iff a single class holds probability exactly 1."""
        return bool(np.count_nonzero(self.probs == 1.0) == 1)

    @classmethod
    def uniform(cls, class_count: int, rejected=()) -> "SoftLabel":
        rej = frozenset(int(r) for r in rejected)
        p = np.zeros(class_count, dtype=np.float64)
        keep = [i for i in range(class_count) if i not in rej]
        if not keep:
            raise ValueError("cannot reject every class")
        p[keep] = 1.0 / len(keep)
        return cls(p, rej)

    @classmethod
    def one_hot(cls, class_count: int, label: int) -> "SoftLabel":
        p = np.zeros(class_count, dtype=np.float64)
        p[label] = 1.0
        rej = frozenset(i for i in range(class_count) if i != label)
        return cls(p, rej)


def masked_label(probs, rejected=()) -> SoftLabel:
    """Condition a raw prediction on previously rejected classes.

    Rejected entries are zeroed and the rest renormalized.  If no mass
    survives, the result is uniform over the non-rejected classes (counted
    as a degenerate rejection).  A numerically saturated prediction gets a
    1e-9 uniform admixture so it stays queryable: hard labels are reserved
    for oracle-confirmed classes.
    """
    global _degenerate_rejections
    p = np.array(probs, dtype=np.float64)
    rej = frozenset(int(r) for r in rejected)
    keep = np.asarray([i for i in range(p.size) if i not in rej], dtype=np.int64)
    if keep.size == 0:
        raise ValueError("cannot reject every class")
    masked = np.zeros_like(p)
    masked[keep] = np.maximum(p[keep], 0.0)
    total = masked.sum()
    if total <= _DEGENERATE_EPS:
        _degenerate_rejections += 1
        return SoftLabel.uniform(p.size, rej)
    masked /= total
    if keep.size > 1 and masked.max() == 1.0:
        masked[keep] = (1.0 - 1e-9) * masked[keep] + 1e-9 / keep.size
        masked /= masked.sum()
    return SoftLabel(masked, rej)


def pseudo_label(label: SoftLabel) -> int:
    """Most probable non-rejected class; ties break toward the lowest id."""
    return int(np.argmax(label.probs))


def normalize_accept(label: SoftLabel, accepted: int) -> SoftLabel:
    """Annotator confirmed `accepted`: collapse to a hard one-hot label."""
    if accepted in label.rejected:
        raise ValueError(f"class {accepted} was already rejected")
    if not 0 <= accepted < label.class_count:
        raise ValueError("accepted class out of range")
    return SoftLabel.one_hot(label.class_count, accepted)


def normalize_reject(label: SoftLabel, rejected: int, uniform: bool = False) -> SoftLabel:
    """Annotator refused `rejected`: zero it and renormalize the rest.

    The surviving entries become the conditional distribution given the
    enlarged rejected set.  When only one class remains it gets probability
    exactly 1 (the forced hard label after c-1 rejections).  With
    `uniform=True` the remaining classes share mass equally instead, which
    discards the model's ranking (an ablation of the renormalization step).
    """
    global _degenerate_rejections
    if label.hard:
        raise ValueError("cannot reject a class of a hard label")
    if rejected in label.rejected:
        raise ValueError(f"class {rejected} was already rejected")
    if not 0 <= rejected < label.class_count:
        raise ValueError("rejected class out of range")
    rej = label.rejected | {rejected}
    if uniform:
        return SoftLabel.uniform(label.class_count, rej)
    p = np.array(label.probs)
    p[rejected] = 0.0
    total = p.sum()
    if total <= _DEGENERATE_EPS:
        _degenerate_rejections += 1
        return SoftLabel.uniform(label.class_count, rej)
    return SoftLabel(p / total, rej)


def info_gain(label: SoftLabel, uniform_reject: bool = False) -> float:
    """Expected entropy reduction of one binary query on `label`.

    The annotator is asked whether the pseudo label is correct.  Agreement
    (probability = the pseudo-class mass) leaves zero entropy; refusal
    leaves the entropy of the rejection-updated label.  Algebraically this
    equals H(label) - P(refuse) * H(label after rejection).
    """
    if label.hard:
        raise ValueError("a hard label has nothing to gain from a query")
    guess = pseudo_label(label)
    p_agree = float(label.probs[guess])
    branch = normalize_reject(label, guess, uniform=uniform_reject)
    return entropy(label.probs) - (1.0 - p_agree) * entropy(branch.probs)


def aggregated_belief(node, annotations, influences, class_count: int) -> np.ndarray:
    """Propagated class belief at `node` given annotated soft labels.

    `influences` maps annotated node -> influence magnitude at `node`.
    The belief is the influence-weighted mixture of annotation targets,
    completed with a uniform distribution for the non-annotated remainder
    of the walk mass.
    """
    q = np.zeros(class_count, dtype=np.float64)
    total = 0.0
    for m, lab in annotations.items():
        w = float(influences.get(m, 0.0))
        if w == 0.0:
            continue
        if w < 0:
            raise ValueError("influence magnitudes must be non-negative")
        q += w * lab.probs
        total += w
    if total > 1.0 + 1e-9:
        raise ValueError(f"influence mass {total} exceeds 1")
    q += (1.0 - min(total, 1.0)) / class_count
    return q


def expected_igp(
    candidate: SoftLabel,
    influence: float,
    belief,
    prior=None,
    mode: str = "approximate",
    uniform_reject: bool = False,
) -> float:
    """Entropy reduction at one node from annotating a candidate.

    `belief` is the node's current aggregated belief vector and `prior` the
    candidate's current contribution to it (its stored annotation target if
    it already has one, None meaning the uniform completion).  The candidate
    contribution changes from `prior` to the query outcome, scaled by
    `influence`.

    In "exact" mode the outcome is the two-branch expectation: agreement
    (probability = pseudo-class mass) installs a one-hot label, refusal the
    rejection-updated label.  In "approximate" mode (the default) the live
    soft label is installed directly with no expectation.
    """
    q = np.asarray(belief, dtype=np.float64)
    c = candidate.class_count
    if q.shape != (c,):
        raise ValueError("belief length must match the class count")
    w = float(influence)
    if not 0.0 <= w <= 1.0 + 1e-9:
        raise ValueError("influence must lie in [0, 1]")
    old = (
        np.full(c, 1.0 / c)
        if prior is None
        else np.asarray(prior, dtype=np.float64)
    )
    base = float(entropy_rows(q[None, :])[0])

    def gain_for(new_contrib: np.ndarray) -> float:
        shifted = q + w * (new_contrib - old)
        return base - float(entropy_rows(shifted[None, :])[0])

    if mode == "approximate":
        return gain_for(candidate.probs)
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    if candidate.hard:
        return gain_for(candidate.probs)
    guess = pseudo_label(candidate)
    p_agree = float(candidate.probs[guess])
    accept = np.zeros(c, dtype=np.float64)
    accept[guess] = 1.0
    reject = normalize_reject(candidate, guess, uniform=uniform_reject).probs
    return p_agree * gain_for(accept) + (1.0 - p_agree) * gain_for(reject)
