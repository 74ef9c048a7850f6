"""Relaxed-query protocol, budget accounting, and annotation bookkeeping.

A relaxed query shows the annotator one node and one proposed class and
asks a yes/no question; it costs 1 unit.  A conventional query ("which of
the c classes is it?") costs c-1 units and is used by baselines and the
free warm start.  Every query and answer is appended to an event log
(JSON lines) that doubles as the persistence and replay format.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .infogain import (
    SoftLabel,
    masked_label,
    normalize_accept,
    normalize_reject,
    pseudo_label,
)


class BudgetError(RuntimeError):
    """An operation would overspend the annotation budget."""


@dataclass
class RelaxedQuery:
    query_id: int
    node: int
    proposed_class: int
    issued_at: float
    state: str = "pending"  # pending | answered


@dataclass(frozen=True)
class OracleAnswer:
    query_id: int
    correct: bool


def simulated_answer(query: RelaxedQuery, truth: int) -> OracleAnswer:
    """Error-free oracle: agrees iff the proposed class is the true class."""
    if query.state != "pending":
        raise ValueError("query is not pending")
    return OracleAnswer(query.query_id, bool(query.proposed_class == int(truth)))


class BudgetLedger:
    """Tracks annotation spending in cost units.

    Relaxed queries cost 1; conventional hard-label queries cost c-1, or 1
    under the equal-count mode where budgets bound query counts instead of
    cost.  Posing a relaxed query reserves a unit so a batch in flight can
    never overcommit; the charge lands when the answer is applied.
    """

    def __init__(self, total, class_count: int, equal_cost: bool = False) -> None:
        if total < 0:
            raise ValueError("budget must be non-negative")
        if class_count < 2:
            raise ValueError("need at least two classes")
        self.total = float(total)
        self.class_count = int(class_count)
        self.relaxed_cost = 1.0
        self.hard_cost = 1.0 if equal_cost else float(class_count - 1)
        self.equal_cost = bool(equal_cost)
        self.spent = 0.0
        self.reserved = 0.0

    @property
    def remaining(self) -> float:
        return self.total - self.spent - self.reserved

    def can_pose_relaxed(self, count: int = 1) -> bool:
        return self.remaining >= count * self.relaxed_cost

    def can_pose_hard(self, count: int = 1) -> bool:
        return self.remaining >= count * self.hard_cost

    def reserve_relaxed(self) -> None:
        if not self.can_pose_relaxed():
            raise BudgetError(
                f"budget exhausted: {self.remaining} units left, need {self.relaxed_cost}"
            )
        self.reserved += self.relaxed_cost

    def release_relaxed(self) -> None:
        if self.reserved < self.relaxed_cost:
            raise ValueError("nothing reserved to release")
        self.reserved -= self.relaxed_cost

    def charge_relaxed(self) -> float:
        self.release_relaxed()
        self.spent += self.relaxed_cost
        if self.spent > self.total + 1e-9:
            raise BudgetError("ledger overspent on a relaxed query")
        return self.relaxed_cost

    def charge_hard(self) -> float:
        if not self.can_pose_hard():
            raise BudgetError(
                f"budget exhausted: {self.remaining} units left, need {self.hard_cost}"
            )
        self.spent += self.hard_cost
        return self.hard_cost


class AnnotationState:
    """All annotation-side bookkeeping for one episode.

    Tracks stored annotation targets (the labels training consumes), the
    hard-labeled set, the selectable pool, pending queries, live soft labels
    (current model predictions conditioned on each node's rejected classes),
    and the append-only event log.
    """

    def __init__(self, train_nodes, class_count: int, event_sink=None) -> None:
        self.class_count = int(class_count)
        self.train_nodes = [int(v) for v in train_nodes]
        self.selectable: set[int] = set(self.train_nodes)
        self.annotated: dict[int, SoftLabel] = {}
        self.hard_labeled: set[int] = set()
        self.pending: dict[int, RelaxedQuery] = {}
        self._pending_nodes: set[int] = set()
        self.live: dict[int, SoftLabel] = {}
        self.events: list[dict] = []
        self._event_sink = event_sink
        self._next_query_id = 1
        self.accepts = 0
        self.rejects = 0

    # -- event log ---------------------------------------------------------

    def record(self, kind: str, node: int, proposed_class=None, correct=None, cost=0.0) -> dict:
        event = {
            "seq": len(self.events) + 1,
            "time": time.time(),
            "kind": kind,
            "node": int(node),
            "proposed_class": None if proposed_class is None else int(proposed_class),
            "cost": float(cost),
        }
        if correct is not None:
            event["correct"] = bool(correct)
        self.events.append(event)
        if self._event_sink is not None:
            self._event_sink(event)
        return event

    # -- label views -------------------------------------------------------

    def rejected_of(self, node: int) -> frozenset[int]:
        lab = self.annotated.get(int(node))
        return lab.rejected if lab is not None else frozenset()

    def live_label(self, node: int) -> SoftLabel:
        node = int(node)
        if node in self.hard_labeled:
            return self.annotated[node]
        if node in self.live:
            return self.live[node]
        return SoftLabel.uniform(self.class_count, self.rejected_of(node))

    def update_predictions(self, probs: np.ndarray) -> None:
        """Refresh live labels from a full prediction matrix (N x c)."""
        for node in self.train_nodes:
            if node in self.hard_labeled:
                continue
            self.live[node] = masked_label(probs[node], self.rejected_of(node))

    # -- annotation transitions --------------------------------------------

    def _store(self, node: int, label: SoftLabel) -> None:
        node = int(node)
        old = self.annotated.get(node)
        if old is not None and not (old.rejected <= label.rejected):
            raise ValueError("rejected sets may only grow")
        self.annotated[node] = label
        self.live[node] = label
        if label.hard:
            self.hard_labeled.add(node)
            self.selectable.discard(node)

    def warm_start_label(self, node: int, truth: int) -> None:
        """Install a free ground-truth hard label (initial pool seeding)."""
        if int(node) not in self.selectable:
            raise ValueError("node not selectable")
        self._store(node, SoftLabel.one_hot(self.class_count, int(truth)))
        self.record("hard_query", node, proposed_class=int(truth), cost=0.0)


def pose_query(node: int, state: AnnotationState, ledger: BudgetLedger) -> RelaxedQuery:
    """Issue the binary question for `node`'s current pseudo label.

    Reserves one budget unit; the charge happens in apply_answer.
    """
    node = int(node)
    if node not in state.selectable:
        raise ValueError(f"node {node} is not selectable")
    if node in state._pending_nodes:
        raise ValueError(f"node {node} already has a pending query")
    ledger.reserve_relaxed()
    label = state.live_label(node)
    guess = pseudo_label(label)
    if guess in label.rejected:
        raise AssertionError("pseudo label landed on a rejected class")
    query = RelaxedQuery(
        query_id=state._next_query_id,
        node=node,
        proposed_class=guess,
        issued_at=time.time(),
    )
    state._next_query_id += 1
    state.pending[query.query_id] = query
    state._pending_nodes.add(node)
    state.selectable.discard(node)
    state.record("query", node, proposed_class=guess, cost=0.0)
    return query


def apply_answer(
    query: RelaxedQuery,
    answer: OracleAnswer,
    state: AnnotationState,
    ledger: BudgetLedger,
    uniform_reject: bool = False,
) -> AnnotationState:
    """Fold one oracle answer into the annotation state.

    Agreement collapses the node's label to a one-hot and retires it from
    the pool; refusal stores the rejection-normalized label and returns the
    node to the pool unless the rejection forced a one-hot by elimination.
    Exactly one unit is charged either way.
    """
    if query.state != "pending" or query.query_id not in state.pending:
        raise ValueError(f"query {query.query_id} is not pending")
    if answer.query_id != query.query_id:
        raise ValueError("answer does not match query")
    label = state.live_label(query.node)
    if pseudo_label(label) != query.proposed_class:
        raise AssertionError("live label drifted while the query was pending")
    if answer.correct:
        new_label = normalize_accept(label, query.proposed_class)
        state.accepts += 1
    else:
        new_label = normalize_reject(label, query.proposed_class, uniform=uniform_reject)
        state.rejects += 1
    cost = ledger.charge_relaxed()
    query.state = "answered"
    del state.pending[query.query_id]
    state._pending_nodes.discard(query.node)
    state._store(query.node, new_label)
    if not new_label.hard:
        state.selectable.add(query.node)
    state.record(
        "answer",
        query.node,
        proposed_class=query.proposed_class,
        correct=answer.correct,
        cost=cost,
    )
    return state


def hard_label_query(
    node: int, truth: int, ledger: BudgetLedger, state: AnnotationState
) -> SoftLabel:
    """Conventional query used by baselines: buy the true class outright."""
    node = int(node)
    if node not in state.selectable:
        raise ValueError(f"node {node} is not selectable")
    cost = ledger.charge_hard()
    label = SoftLabel.one_hot(state.class_count, int(truth))
    state._store(node, label)
    state.record("hard_query", node, proposed_class=int(truth), cost=cost)
    return label


# -- event log file format ---------------------------------------------------


def append_event(fh, event: dict) -> None:
    fh.write(json.dumps(event, separators=(",", ":")) + "\n")
    fh.flush()


def load_events(path: str | Path) -> list[dict]:
    events = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                events.append(json.loads(line))
            except json.JSONDecodeError:
                raise ValueError(f"{path}:{lineno}: malformed event line") from None
    for seq, event in enumerate(events, start=1):
        if event.get("seq") != seq:
            raise ValueError(f"{path}: event {seq} has seq {event.get('seq')}")
    return events
