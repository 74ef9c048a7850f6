"""HTTP session server putting a human oracle in the annotation loop.

Each session wraps one Episode (strategy fixed to the greedy selector)
plus a budget ledger and an append-only event log on disk.  The wire
format is JSON over five endpoints::

    POST /sessions                          create + first batch
    GET  /sessions/{sid}/queries            pending queries with context
    POST /sessions/{sid}/queries/{qid}/answer   fold in one yes/no answer
    GET  /sessions/{sid}/metrics            budget, counts, curves
    GET  /sessions/{sid}/export             report.json + curves.csv payload

Sessions are resumable: on an unknown id the server replays the session's
event log from disk, re-deriving training and selection deterministically,
and re-serves any still-pending queries identically.  Answer submission is
idempotent (same value: no-op; conflicting value: 409) and never
double-charges the ledger.
"""

from __future__ import annotations

import json
import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse

from .graph import Dataset, load_dataset
from .harness import (
    Episode,
    ExperimentConfig,
    ExperimentReport,
    curves_text,
    summarize,
)
from .model import TrainConfig
from .oracle import append_event, load_events
from .selection import SelectionConfig


class _LiveSession:
    def __init__(
        self,
        sid: str,
        episode: Episode,
        dataset: Dataset,
        log_path: Path,
        async_training: bool,
    ) -> None:
        self.sid = sid
        self.episode = episode
        self.dataset = dataset
        self.log_path = log_path
        self.async_training = async_training
        self.lock = threading.Lock()
        self.answered: dict[int, bool] = {}

    def attach_log(self) -> None:
        fh = open(self.log_path, "a")

        def sink(event: dict) -> None:
            append_event(fh, event)

        self.episode.set_event_sink(sink)


def _session_config(payload: dict) -> tuple[ExperimentConfig, int, bool]:
    """Translate a session-creation payload into an ExperimentConfig."""
    if "dataset" not in payload:
        raise ValueError("payload must name a dataset")
    seed = int(payload.get("seed", 0))
    train_raw = dict(payload.get("train", {}))
    if "alpha" in payload:
        train_raw.setdefault("alpha", payload["alpha"])
    selection_raw = dict(payload.get("selection", {}))
    cfg = ExperimentConfig(
        dataset=str(payload["dataset"]),
        strategy="igp",
        budget=float(payload.get("budget", 30)),
        batch_size=int(payload.get("batch_size", 5)),
        depth=int(payload.get("depth", 2)),
        seeds=[seed],
        train=TrainConfig(**train_raw),
        selection=SelectionConfig(**selection_raw),
        budget_mode=str(payload.get("budget_mode", "cost-weighted")),
        warm_per_class=int(payload.get("warm_per_class", 2)),
        evaluate=bool(payload.get("evaluate", True)),
    )
    return cfg, seed, bool(payload.get("async_training", False))


def create_app(sessions_dir: str | Path, dataset_root: str | Path | None = None) -> FastAPI:
    sessions_dir = Path(sessions_dir)
    sessions_dir.mkdir(parents=True, exist_ok=True)
    app = FastAPI(title="relaxed-query annotation service")
    live: dict[str, _LiveSession] = {}
    registry_lock = threading.Lock()

    def resolve_dataset_path(name: str) -> Path:
        direct = Path(name)
        if direct.is_dir():
            return direct
        if dataset_root is not None:
            candidate = Path(dataset_root) / name
            if candidate.is_dir():
                return candidate
        raise HTTPException(status_code=404, detail=f"dataset {name!r} not found")

    def restore_session(sid: str) -> _LiveSession:
        root = sessions_dir / sid
        config_path = root / "config.json"
        log_path = root / "events.jsonl"
        if not config_path.exists():
            raise HTTPException(status_code=404, detail=f"unknown session {sid!r}")
        with open(config_path) as fh:
            stored = json.load(fh)
        cfg = ExperimentConfig.from_dict(stored["config"])
        dataset = load_dataset(resolve_dataset_path(cfg.dataset))
        events = load_events(log_path) if log_path.exists() else []
        episode = Episode(dataset, cfg, stored["seed"])
        session = _LiveSession(
            sid, episode, dataset, log_path, stored.get("async_training", False)
        )
        # Re-execute against the logged answers in submission order; queries
        # posed after the last logged answer stay pending and are re-served
        # identically.  Answers may have arrived out of served order, so each
        # one is matched to its pending query by node and proposed class.
        answers = [e for e in events if e["kind"] == "answer"]
        episode.start()
        for event in answers:
            if episode.phase != "awaiting-answers":
                raise HTTPException(
                    status_code=500,
                    detail=f"session {sid!r} log has answers past completion",
                )
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
                raise HTTPException(
                    status_code=500,
                    detail=f"session {sid!r} log diverges from re-execution",
                )
            episode.submit(match.query_id, bool(event["correct"]))
            session.answered[match.query_id] = bool(event["correct"])
        session.attach_log()
        return session

    def get_session(sid: str) -> _LiveSession:
        with registry_lock:
            session = live.get(sid)
            if session is None:
                session = restore_session(sid)
                live[sid] = session
            return session

    def status_payload(session: _LiveSession) -> dict:
        ep = session.episode
        return {
            "session_id": session.sid,
            "phase": ep.phase,
            "budget": ep.ledger.total,
            "spent": ep.ledger.spent,
            "remaining": ep.ledger.remaining,
            "accepts": ep.state.accepts,
            "rejects": ep.state.rejects,
            "pending_count": len(ep.state.pending),
            "accuracy": _nan_to_none(ep.rows[-1].accuracy) if ep.rows else None,
            "total_entropy_bits": ep.total_entropy,
        }

    def query_payload(session: _LiveSession, query) -> dict:
        ep = session.episode
        ds = session.dataset
        label = ep.state.live_label(query.node)
        neighbors = ds.graph.neighbors(query.node)
        annotated_neighbors = sum(
            1 for v in neighbors if int(v) in ep.state.annotated
        )
        rejected = sorted(label.rejected)
        return {
            "query_id": query.query_id,
            "node": query.node,
            "proposed_class": query.proposed_class,
            "proposed_class_name": ds.class_names[query.proposed_class],
            "confidence": float(label.probs[query.proposed_class]),
            "rejected_classes": rejected,
            "rejected_class_names": [ds.class_names[r] for r in rejected],
            "degree": int(ds.graph.degrees[query.node]),
            "neighbors": {
                "count": int(neighbors.size),
                "sample": [int(v) for v in neighbors[:10]],
                "annotated": int(annotated_neighbors),
            },
        }

    @app.post("/sessions")
    def create_session(payload: dict):
        try:
            cfg, seed, async_training = _session_config(payload)
        except (TypeError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        dataset_path = resolve_dataset_path(cfg.dataset)
        try:
            dataset = load_dataset(dataset_path)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        sid = uuid.uuid4().hex[:12]
        root = sessions_dir / sid
        root.mkdir(parents=True)
        cfg_on_disk = ExperimentConfig.from_dict(
            {**cfg.to_dict(), "dataset": str(dataset_path)}
        )
        with open(root / "config.json", "w") as fh:
            json.dump(
                {
                    "config": cfg_on_disk.to_dict(),
                    "seed": seed,
                    "async_training": async_training,
                },
                fh,
                indent=2,
            )
        session = _LiveSession(
            sid, Episode(dataset, cfg_on_disk, seed), dataset, root / "events.jsonl",
            async_training,
        )
        session.attach_log()
        session.episode.start()
        with registry_lock:
            live[sid] = session
        body = status_payload(session)
        body["pending"] = [
            query_payload(session, q) for q in session.episode.pending_queries()
        ]
        return body

    @app.get("/sessions/{sid}/queries")
    def get_queries(sid: str):
        session = get_session(sid)
        ep = session.episode
        if ep.phase != "awaiting-answers":
            return {"session_id": sid, "phase": ep.phase, "queries": []}
        return {
            "session_id": sid,
            "phase": ep.phase,
            "queries": [query_payload(session, q) for q in ep.pending_queries()],
        }

    @app.post("/sessions/{sid}/queries/{qid}/answer")
    def submit_answer(sid: str, qid: int, payload: dict):
        if "correct" not in payload or not isinstance(payload["correct"], bool):
            raise HTTPException(
                status_code=400, detail="payload must carry boolean 'correct'"
            )
        correct = payload["correct"]
        session = get_session(sid)
        ep = session.episode
        with session.lock:
            if qid in session.answered:
                if session.answered[qid] != correct:
                    raise HTTPException(
                        status_code=409,
                        detail=f"query {qid} already answered {session.answered[qid]}",
                    )
                body = status_payload(session)
                body["duplicate"] = True
                return body
            if ep.phase != "awaiting-answers":
                raise HTTPException(
                    status_code=409,
                    detail=f"no answers accepted in phase {ep.phase!r}",
                )
            if qid not in ep.state.pending:
                raise HTTPException(status_code=404, detail=f"unknown query {qid}")
            phase = ep.submit(qid, correct, defer_training=session.async_training)
            session.answered[qid] = correct
            if phase == "training" and session.async_training:
                def _finish() -> None:
                    with session.lock:
                        ep.finish_round()

                threading.Thread(target=_finish, daemon=True).start()
        return status_payload(session)

    @app.get("/sessions/{sid}/metrics")
    def get_metrics(sid: str):
        session = get_session(sid)
        ep = session.episode
        body = status_payload(session)
        body["accuracy_curve"] = [
            {
                "spent_budget": p.spent,
                "test_accuracy": _nan_to_none(p.accuracy),
                "total_entropy_bits": p.entropy_bits,
            }
            for p in ep.rows
        ]
        return body

    @app.get("/sessions/{sid}/export")
    def export_session(sid: str):
        session = get_session(sid)
        record = session.episode.record()
        report = ExperimentReport(
            dataset=session.dataset.name,
            budget=record.budget,
            budget_mode=record.budget_mode,
            seeds=[record.seed],
            strategies=summarize([record]),
            episodes=[record],
            failures=[],
        )
        return JSONResponse(
            {"report": report.to_dict(), "curves_csv": curves_text([record])}
        )

    return app


def _nan_to_none(value: float):
    return None if value != value else float(value)
