"""End-to-end active-learning loop, strategy comparison, and reporting.

An episode alternates: train the surrogate on current annotations, refresh
live soft labels, evaluate, select a batch (strategy-dependent), pose the
queries, fold in the oracle's answers, and charge the budget; it stops when
the ledger cannot afford the next query.  The same Episode driver serves
simulated runs (answers derived from ground truth or replayed from a log)
and interactive sessions (answers arriving over HTTP).

Metrics: test accuracy is refreshed after every retrain and carried
forward between retrains; the total propagated entropy sum_j H(q_j) is
exact after every annotation event.  Curve rows are (spent budget,
accuracy, entropy) with nondecreasing spent budget.
"""

from __future__ import annotations

import json
import time
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .graph import Dataset, SyntheticSpec, generate_synthetic, load_dataset
from .infogain import entropy
from .model import Classifier, TrainConfig, evaluate, predict, train
from .oracle import (
    AnnotationState,
    BudgetLedger,
    OracleAnswer,
    RelaxedQuery,
    append_event,
    hard_label_query,
    load_events,
    pose_query,
    apply_answer,
)
from .propagation import InfluenceCache, build_transition, propagate_features
from .selection import (
    BeliefState,
    EmptyFilterError,
    GreedyState,
    SelectionConfig,
    filter_candidates,
    resolve_degree_threshold,
    select_batch,
)

STRATEGIES = ("igp", "random", "uncertainty")
ABLATIONS = ("igp-no-it", "igp-no-is", "igp-no-im", "igp-no-nl")


class ReplayError(RuntimeError):
    """The event log disagrees with the deterministic re-execution."""


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce a run (strategies aside, see run_suite)."""

    dataset: str | None = None
    synthetic: SyntheticSpec | None = None
    strategy: str = "igp"
    budget: float = 30.0
    batch_size: int = 5
    depth: int = 2
    seeds: list[int] = field(default_factory=lambda: [0])
    train: TrainConfig = field(default_factory=TrainConfig)
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    budget_mode: str = "cost-weighted"
    hard_queries: bool = False
    warm_per_class: int = 2
    evaluate: bool = True
    output_dir: str | None = None

    def __post_init__(self) -> None:
        if self.dataset is None and self.synthetic is None:
            raise ValueError("config needs a dataset path or a synthetic spec")
        if self.budget <= 0:
            raise ValueError("budget must exceed the (free) initial pool cost")
        if not self.seeds:
            raise ValueError("seeds must be nonempty")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.budget_mode not in ("cost-weighted", "equal-count"):
            raise ValueError(f"unknown budget_mode {self.budget_mode!r}")
        if self.strategy not in STRATEGIES + ABLATIONS:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        # batch size and depth at the top level are authoritative
        self.selection = replace(
            self.selection, batch_size=self.batch_size, depth=self.depth
        )

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "synthetic": None if self.synthetic is None else vars(self.synthetic),
            "strategy": self.strategy,
            "budget": self.budget,
            "batch_size": self.batch_size,
            "depth": self.depth,
            "seeds": list(self.seeds),
            "train": vars(self.train),
            "selection": {
                "degree_threshold": self.selection.degree_threshold,
                "mode": self.selection.mode,
                "disable_propagation": self.selection.disable_propagation,
                "uniform_influence": self.selection.uniform_influence,
                "uniform_reject_label": self.selection.uniform_reject_label,
            },
            "budget_mode": self.budget_mode,
            "hard_queries": self.hard_queries,
            "warm_per_class": self.warm_per_class,
            "evaluate": self.evaluate,
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        data = dict(raw)
        data.pop("strategies", None)
        syn = data.get("synthetic")
        if syn is not None:
            data["synthetic"] = SyntheticSpec(**syn)
        tr = data.get("train")
        if tr is not None:
            data["train"] = TrainConfig(**tr)
        sel = data.get("selection")
        if sel is not None:
            data["selection"] = SelectionConfig(
                batch_size=data.get("batch_size", 5),
                depth=data.get("depth", 2),
                **sel,
            )
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def load_config(path: str | Path) -> tuple[ExperimentConfig, list[str]]:
    """Read a JSON config file; returns (config, strategies-to-run)."""
    with open(path) as fh:
        raw = json.load(fh)
    strategies = raw.get("strategies") or [raw.get("strategy", "igp")]
    cfg = ExperimentConfig.from_dict(raw)
    for s in strategies:
        if s not in STRATEGIES + ABLATIONS:
            raise ValueError(f"unknown strategy {s!r}")
    return cfg, list(strategies)


def resolve_dataset(cfg: ExperimentConfig) -> Dataset:
    if cfg.dataset is not None:
        return load_dataset(cfg.dataset)
    return generate_synthetic(cfg.synthetic)


def apply_strategy(cfg: ExperimentConfig, strategy: str) -> ExperimentConfig:
    """Expand an ablation alias into the base config plus its flag."""
    out = replace(cfg, strategy=strategy)
    if strategy == "igp-no-it":
        out = replace(out, strategy=strategy, train=replace(cfg.train, alpha=0.0))
    elif strategy == "igp-no-is":
        out = replace(out, selection=replace(cfg.selection, disable_propagation=True))
    elif strategy == "igp-no-im":
        out = replace(out, selection=replace(cfg.selection, uniform_influence=True))
    elif strategy == "igp-no-nl":
        out = replace(out, selection=replace(cfg.selection, uniform_reject_label=True))
    return out


def uncertainty_baseline_select(predictions, pool, batch_size: int) -> list[int]:
    """Top-`batch_size` pool nodes by predicted-label entropy, ties by id."""
    pool = [int(v) for v in pool]
    if not pool:
        raise ValueError("pool must be nonempty")
    scored = sorted(
        ((-entropy(predictions[v].probs), v) for v in pool),
    )
    return [v for _, v in scored[:batch_size]]


@dataclass
class CurvePoint:
    spent: float
    accuracy: float
    entropy_bits: float


@dataclass
class EpisodeRecord:
    strategy: str
    seed: int
    budget: float
    budget_mode: str
    spent: float
    final_accuracy: float
    rows: list[CurvePoint]
    accepts: int
    rejects: int
    queries: int
    hard_queries: int
    candidate_evaluations: int
    iteration_seconds: list[float]
    events: list[dict]

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "seed": self.seed,
            "budget": self.budget,
            "budget_mode": self.budget_mode,
            "spent": self.spent,
            "final_accuracy": self.final_accuracy,
            "accepts": self.accepts,
            "rejects": self.rejects,
            "queries": self.queries,
            "hard_queries": self.hard_queries,
            "candidate_evaluations": self.candidate_evaluations,
            "iteration_seconds": self.iteration_seconds,
        }


class Episode:
    """One active-learning run, driven to completion or step by step.

    The driver exposes `start`, `pending_queries`, and `submit` so a human
    oracle (via the HTTP service) can answer at its own pace; `run` drives
    the same machinery with a programmatic answer source.  The effective
    training seed is train.seed + episode seed, so paired strategies share
    initializations while distinct seeds vary them.
    """

    def __init__(
        self,
        dataset: Dataset,
        cfg: ExperimentConfig,
        seed: int,
        event_sink=None,
        query_sink=None,
    ) -> None:
        self.dataset = dataset
        self.cfg = apply_strategy(cfg, cfg.strategy)
        self.kind = "igp" if self.cfg.strategy.startswith("igp") else self.cfg.strategy
        self.seed = int(seed)
        self.rng = np.random.default_rng(self.seed)
        ds = dataset
        self.ledger = BudgetLedger(
            cfg.budget, ds.class_count, equal_cost=(cfg.budget_mode == "equal-count")
        )
        self.state = AnnotationState(ds.train_nodes, ds.class_count, event_sink)
        self.tm = build_transition(ds.graph)
        self.features = propagate_features(self.tm, ds.features, cfg.depth)
        self.influence = InfluenceCache(self.tm, cfg.depth)
        self.threshold = resolve_degree_threshold(
            self.cfg.selection.degree_threshold, ds.node_count
        )
        self._train_cfg = replace(
            self.cfg.train, seed=self.cfg.train.seed + self.seed
        )
        self._metric = BeliefState(ds.node_count, ds.class_count)
        self._metric_contrib: dict[int, np.ndarray] = {}
        self._uniform = np.full(ds.class_count, 1.0 / ds.class_count)
        self.classifier: Classifier | None = None
        self.rows: list[CurvePoint] = []
        self.iteration_seconds: list[float] = []
        self.candidate_evaluations = 0
        self.hard_query_count = 0
        self.phase = "created"
        self._query_sink = query_sink
        self._round_started = time.perf_counter()
        self._last_accuracy = float("nan")

    # -- metric bookkeeping --------------------------------------------------

    def _metric_apply(self, node: int, probs: np.ndarray) -> None:
        idx, vals = self.influence.column(node)
        old = self._metric_contrib.get(int(node), self._uniform)
        self._metric.apply(idx, vals, probs, old)
        self._metric_contrib[int(node)] = np.asarray(probs, dtype=np.float64)

    @property
    def total_entropy(self) -> float:
        """sum_j H(q_j) over all nodes, in bits."""
        return float(self._metric.ent.sum())

    def _record_row(self) -> None:
        acc = self._last_accuracy if self.cfg.evaluate else float("nan")
        self.rows.append(CurvePoint(self.ledger.spent, acc, self.total_entropy))

    # -- lifecycle -------------------------------------------------------------

    def start(self) -> None:
        if self.phase != "created":
            raise RuntimeError("episode already started")
        ds = self.dataset
        for cls in range(ds.class_count):
            members = [
                int(v) for v in ds.train_nodes if ds.ground_truth[v] == cls
            ]
            take = min(self.cfg.warm_per_class, len(members))
            picked = self.rng.choice(len(members), size=take, replace=False)
            for pos in np.sort(picked):
                node = members[int(pos)]
                self.state.warm_start_label(node, cls)
                self._metric_apply(node, self.state.annotated[node].probs)
        self._retrain()
        self._record_row()
        self._advance()

    def _retrain(self) -> None:
        ds = self.dataset
        self.classifier = train(self.features, self.state.annotated, self._train_cfg)
        probs = predict(self.classifier, self.features)
        self.state.update_predictions(probs)
        if self.cfg.evaluate:
            self._last_accuracy = evaluate(
                self.classifier, self.features, ds.ground_truth, ds.test_nodes
            )
        else:
            self._last_accuracy = float("nan")

    def _select(self, batch_size: int) -> list[int]:
        pool = set(self.state.selectable)
        if not pool:
            return []
        if self.kind == "random":
            ordered = sorted(pool)
            take = min(batch_size, len(ordered))
            picked = self.rng.choice(len(ordered), size=take, replace=False)
            return [ordered[int(i)] for i in picked]
        if self.kind == "uncertainty":
            return uncertainty_baseline_select(
                self.state.live, pool, min(batch_size, len(pool))
            )
        try:
            filtered = filter_candidates(
                self.dataset.graph, pool, self.threshold, self.state.hard_labeled
            )
        except EmptyFilterError:
            warnings.warn(
                f"degree threshold {self.threshold} removed every candidate; "
                "falling back to the unfiltered pool"
            )
            filtered = pool
        gs = GreedyState(
            self.influence,
            self.state.annotated,
            self.state.live,
            filtered,
            self.dataset.node_count,
            self.dataset.class_count,
            self.cfg.selection,
        )
        batch = select_batch(gs, self.cfg.selection, batch_size)
        self.candidate_evaluations += gs.evaluations
        return batch

    def _advance(self) -> None:
        while True:
            self._round_started = time.perf_counter()
            cost = self.ledger.hard_cost if self.cfg.hard_queries else 1.0
            affordable = int(self.ledger.remaining // cost)
            if affordable < 1:
                self.phase = "done"
                return
            batch = self._select(min(self.cfg.batch_size, affordable))
            if not batch:
                self.phase = "done"
                return
            if self.cfg.hard_queries:
                ds = self.dataset
                for node in batch:
                    label = hard_label_query(
                        node, int(ds.ground_truth[node]), self.ledger, self.state
                    )
                    self.hard_query_count += 1
                    self._metric_apply(node, label.probs)
                    self._record_row()
                self._retrain()
                self._record_row()
                self.iteration_seconds.append(
                    time.perf_counter() - self._round_started
                )
                continue
            self.phase = "awaiting-answers"
            for node in batch:
                query = pose_query(node, self.state, self.ledger)
                if self._query_sink is not None:
                    self._query_sink(query)
            return

    def pending_queries(self) -> list[RelaxedQuery]:
        return sorted(self.state.pending.values(), key=lambda q: q.query_id)

    def submit(self, query_id: int, correct: bool, defer_training: bool = False) -> str:
        """Fold one oracle answer in; retrains when the batch completes.

        With defer_training the episode stops in the "training" phase once
        the batch is complete and the caller runs finish_round (possibly on
        another thread); otherwise training happens inline.  Returns the
        phase after the call.
        """
        if self.phase != "awaiting-answers":
            raise RuntimeError(f"no answers expected in phase {self.phase!r}")
        query = self.state.pending.get(int(query_id))
        if query is None:
            raise KeyError(f"query {query_id} is not pending")
        apply_answer(
            query,
            OracleAnswer(query.query_id, bool(correct)),
            self.state,
            self.ledger,
            uniform_reject=self.cfg.selection.uniform_reject_label,
        )
        self._metric_apply(query.node, self.state.annotated[query.node].probs)
        self._record_row()
        if not self.state.pending:
            self.phase = "training"
            if not defer_training:
                self.finish_round()
        return self.phase

    def finish_round(self) -> None:
        """Retrain on the completed batch and select the next one."""
        if self.phase != "training":
            raise RuntimeError(f"finish_round called in phase {self.phase!r}")
        self._retrain()
        self._record_row()
        self.iteration_seconds.append(time.perf_counter() - self._round_started)
        self._advance()

    def set_event_sink(self, sink) -> None:
        self.state._event_sink = sink

    def run(self, answer_fn=None) -> EpisodeRecord:
        """Drive to completion; answers default to the error-free oracle."""
        ds = self.dataset
        if answer_fn is None:
            def answer_fn(query):
                return bool(
                    int(ds.ground_truth[query.node]) == query.proposed_class
                )

        self.start()
        while self.phase == "awaiting-answers":
            for query in self.pending_queries():
                self.submit(query.query_id, answer_fn(query))
        return self.record()

    def record(self) -> EpisodeRecord:
        return EpisodeRecord(
            strategy=self.cfg.strategy,
            seed=self.seed,
            budget=self.cfg.budget,
            budget_mode=self.cfg.budget_mode,
            spent=self.ledger.spent,
            final_accuracy=self.rows[-1].accuracy if self.rows else float("nan"),
            rows=list(self.rows),
            accepts=self.state.accepts,
            rejects=self.state.rejects,
            queries=sum(1 for e in self.state.events if e["kind"] == "query"),
            hard_queries=self.hard_query_count,
            candidate_evaluations=self.candidate_evaluations,
            iteration_seconds=list(self.iteration_seconds),
            events=list(self.state.events),
        )


def run_episode(
    dataset: Dataset, cfg: ExperimentConfig, seed: int, event_sink=None
) -> EpisodeRecord:
    """One simulated episode with the error-free oracle."""
    return Episode(dataset, cfg, seed, event_sink=event_sink).run()


# -- replay -------------------------------------------------------------------


class _EventVerifier:
    """Asserts the log is a prefix of the re-emitted event sequence.

    Field-by-field comparison ignores timestamps.  Events past the end of
    the log are allowed: a partial log that stops exactly at a batch
    boundary makes the re-execution train and pose the next batch, which is
    the deterministic continuation, not a divergence.
    """

    FIELDS = ("seq", "kind", "node", "proposed_class", "cost")

    def __init__(self, logged: list[dict]) -> None:
        self.logged = logged
        self.cursor = 0

    def __call__(self, event: dict) -> None:
        if self.cursor >= len(self.logged):
            return
        expected = self.logged[self.cursor]
        self.cursor += 1
        for key in self.FIELDS:
            if expected.get(key) != event.get(key):
                raise ReplayError(
                    f"event {event['seq']}: {key}={event.get(key)!r} diverges "
                    f"from logged {expected.get(key)!r}"
                )
        if expected.get("correct") != event.get("correct"):
            raise ReplayError(
                f"event {event['seq']}: answer {event.get('correct')!r} diverges "
                f"from logged {expected.get('correct')!r}"
            )

    def finish(self) -> None:
        if self.cursor != len(self.logged):
            raise ReplayError(
                f"log has {len(self.logged) - self.cursor} unreplayed events"
            )


def replay_episode(
    dataset: Dataset, cfg: ExperimentConfig, seed: int, events: list[dict]
) -> EpisodeRecord:
    """Re-execute an episode, reading oracle answers from its event log.

    Training and selection are recomputed from config + seed + dataset; the
    only external inputs taken from the log are the answers, applied in
    their logged submission order (human annotators may answer a batch out
    of served order).  Every re-emitted event is checked against the log,
    so any drift (different selection, different pseudo label, different
    cost) raises ReplayError.  Partial logs are fine: the replayed episode
    simply stops where the log does, with the same pending queries.
    """
    verifier = _EventVerifier(events)
    episode = Episode(dataset, cfg, seed, event_sink=verifier)
    if episode.cfg.hard_queries:
        record = episode.run()
        verifier.finish()
        return record
    episode.start()
    for event in (e for e in events if e["kind"] == "answer"):
        if episode.phase != "awaiting-answers":
            raise ReplayError("log contains answers after episode completion")
        match = next(
            (
                q
                for q in episode.pending_queries()
                if q.node == event["node"]
                and q.proposed_class == event["proposed_class"]
            ),
            None,
        )
        if match is None:
            raise ReplayError(
                f"logged answer (node {event['node']}, class "
                f"{event['proposed_class']}) matches no re-posed query"
            )
        episode.submit(match.query_id, bool(event["correct"]))
    verifier.finish()
    return episode.record()


# -- suite + reports ----------------------------------------------------------


@dataclass
class StrategySummary:
    strategy: str
    final_accuracy_mean: float
    final_accuracy_std: float
    per_seed: dict[int, float]
    accepts: int
    rejects: int
    queries: int
    spent_mean: float
    candidate_evaluations_mean: float
    iteration_seconds_mean: float

    def to_dict(self) -> dict:
        out = dict(vars(self))
        out["per_seed"] = {str(k): v for k, v in self.per_seed.items()}
        return out


@dataclass
class ExperimentReport:
    dataset: str
    budget: float
    budget_mode: str
    seeds: list[int]
    strategies: dict[str, StrategySummary]
    episodes: list[EpisodeRecord]
    failures: list[dict]

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "budget": self.budget,
            "budget_mode": self.budget_mode,
            "seeds": list(self.seeds),
            "strategies": {k: v.to_dict() for k, v in self.strategies.items()},
            "episodes": [e.to_dict() for e in self.episodes],
            "failures": list(self.failures),
        }


def summarize(episodes: list[EpisodeRecord]) -> dict[str, StrategySummary]:
    budgets = {(e.budget, e.budget_mode) for e in episodes}
    if len(budgets) > 1:
        raise ValueError(f"refusing to aggregate mismatched budgets: {budgets}")
    out: dict[str, StrategySummary] = {}
    for strategy in sorted({e.strategy for e in episodes}):
        recs = [e for e in episodes if e.strategy == strategy]
        finals = np.asarray([e.final_accuracy for e in recs])
        iters = [s for e in recs for s in e.iteration_seconds]
        out[strategy] = StrategySummary(
            strategy=strategy,
            final_accuracy_mean=float(finals.mean()),
            final_accuracy_std=float(finals.std()),
            per_seed={e.seed: e.final_accuracy for e in recs},
            accepts=sum(e.accepts for e in recs),
            rejects=sum(e.rejects for e in recs),
            queries=sum(e.queries for e in recs),
            spent_mean=float(np.mean([e.spent for e in recs])),
            candidate_evaluations_mean=float(
                np.mean([e.candidate_evaluations for e in recs])
            ),
            iteration_seconds_mean=float(np.mean(iters)) if iters else 0.0,
        )
    return out


def run_suite(
    dataset: Dataset,
    cfg: ExperimentConfig,
    strategies: list[str] | None = None,
    out_dir: str | Path | None = None,
) -> ExperimentReport:
    """Run every (strategy x seed) episode, aggregate, and write reports.

    Individual episode failures are recorded in the report and the suite
    continues.  Event logs are written per episode when out_dir is given.
    """
    strategies = list(strategies) if strategies else [cfg.strategy]
    out_path = Path(out_dir) if out_dir else (
        Path(cfg.output_dir) if cfg.output_dir else None
    )
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
    episodes: list[EpisodeRecord] = []
    failures: list[dict] = []
    for strategy in strategies:
        for seed in cfg.seeds:
            scfg = apply_strategy(cfg, strategy)
            try:
                record = run_episode(dataset, scfg, seed)
                episodes.append(record)
                if out_path is not None:
                    log_path = out_path / f"events-{strategy}-{seed}.jsonl"
                    with open(log_path, "w") as fh:
                        for event in record.events:
                            append_event(fh, event)
            except Exception as exc:  # noqa: BLE001 - suite must survive episodes
                failures.append(
                    {"strategy": strategy, "seed": seed, "error": str(exc)}
                )
    report = ExperimentReport(
        dataset=dataset.name,
        budget=cfg.budget,
        budget_mode=cfg.budget_mode,
        seeds=list(cfg.seeds),
        strategies=summarize(episodes) if episodes else {},
        episodes=episodes,
        failures=failures,
    )
    if out_path is not None:
        write_report(report, out_path)
        with open(out_path / "config.json", "w") as fh:
            payload = cfg.to_dict()
            payload["strategies"] = strategies
            json.dump(payload, fh, indent=2)
    return report


def curves_rows(episodes: list[EpisodeRecord]) -> list[tuple]:
    rows = []
    for e in episodes:
        for point in e.rows:
            rows.append(
                (e.strategy, e.seed, point.spent, point.accuracy, point.entropy_bits)
            )
    return rows


def curves_text(episodes: list[EpisodeRecord]) -> str:
    lines = ["strategy,seed,spent_budget,test_accuracy,total_entropy_bits"]
    for strategy, seed, spent, acc, ent in curves_rows(episodes):
        lines.append(
            f"{strategy},{seed},{repr(float(spent))},"
            f"{repr(float(acc))},{repr(float(ent))}"
        )
    return "\n".join(lines) + "\n"


def write_curves(episodes: list[EpisodeRecord], path: Path) -> None:
    with open(path, "w") as fh:
        fh.write(curves_text(episodes))


def write_report(report: ExperimentReport, out_dir: str | Path) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_curves(report.episodes, out_dir / "curves.csv")
    with open(out_dir / "report.json", "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
    lines = [
        f"dataset: {report.dataset}   budget: {report.budget} "
        f"({report.budget_mode})   seeds: {report.seeds}",
        "",
        f"{'strategy':<14} {'final acc':>18} {'queries':>8} "
        f"{'accepts':>8} {'rejects':>8} {'spent':>8}",
    ]
    for name, s in report.strategies.items():
        lines.append(
            f"{name:<14} {s.final_accuracy_mean:>10.4f} ± {s.final_accuracy_std:<5.4f} "
            f"{s.queries:>8} {s.accepts:>8} {s.rejects:>8} {s.spent_mean:>8.1f}"
        )
    for failure in report.failures:
        lines.append(
            f"FAILED {failure['strategy']} seed {failure['seed']}: {failure['error']}"
        )
    with open(out_dir / "summary.txt", "w") as fh:
        fh.write("\n".join(lines) + "\n")
