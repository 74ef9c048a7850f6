"""Command-line entry points: run, suite, replay, report, serve."""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from .harness import (
    ExperimentConfig,
    load_config,
    replay_episode,
    resolve_dataset,
    run_suite,
    summarize,
    write_report,
    write_curves,
    ExperimentReport,
    EpisodeRecord,
    CurvePoint,
)
from .oracle import load_events


def _out_dir(cfg: ExperimentConfig, override: str | None) -> Path:
    if override:
        return Path(override)
    if cfg.output_dir:
        return Path(cfg.output_dir)
    return Path("igp-out")


def _cmd_run(args) -> int:
    cfg, _ = load_config(args.config)
    dataset = resolve_dataset(cfg)
    out = _out_dir(cfg, args.output_dir)
    report = run_suite(dataset, cfg, [cfg.strategy], out)
    if report.failures:
        for failure in report.failures:
            print(f"episode failed: {failure}", file=sys.stderr)
        return 1
    print(f"wrote {out / 'report.json'}, {out / 'curves.csv'}, {out / 'summary.txt'}")
    for name, summary in report.strategies.items():
        print(
            f"{name}: final accuracy {summary.final_accuracy_mean:.4f} "
            f"± {summary.final_accuracy_std:.4f} over {len(cfg.seeds)} seeds"
        )
    return 0


def _cmd_suite(args) -> int:
    cfg, strategies = load_config(args.config)
    dataset = resolve_dataset(cfg)
    out = _out_dir(cfg, args.output_dir)
    report = run_suite(dataset, cfg, strategies, out)
    print(f"wrote {out / 'report.json'}, {out / 'curves.csv'}, {out / 'summary.txt'}")
    for name, summary in report.strategies.items():
        print(
            f"{name}: final accuracy {summary.final_accuracy_mean:.4f} "
            f"± {summary.final_accuracy_std:.4f}"
        )
    for failure in report.failures:
        print(f"episode failed: {failure}", file=sys.stderr)
    return 1 if report.failures and not report.episodes else 0


def _replay_identity(log_path: Path, raw: dict, args) -> tuple[str, int]:
    """Figure out which (strategy, seed) a log belongs to."""
    match = re.match(r"events-(.+)-(\d+)\.jsonl$", log_path.name)
    strategy = args.strategy or (match.group(1) if match else None)
    if strategy is None:
        strategy = raw.get("strategy", "igp")
    if args.seed is not None:
        seed = args.seed
    elif match:
        seed = int(match.group(2))
    elif "seed" in raw:
        seed = int(raw["seed"])
    else:
        seed = int(raw.get("seeds", [0])[0])
    return strategy, seed


def _cmd_replay(args) -> int:
    log_path = Path(args.log)
    if not log_path.exists():
        print(f"no such log: {log_path}", file=sys.stderr)
        return 2
    config_path = Path(args.config) if args.config else log_path.parent / "config.json"
    if not config_path.exists():
        print(
            f"no config found at {config_path}; pass --config explicitly",
            file=sys.stderr,
        )
        return 2
    with open(config_path) as fh:
        raw = json.load(fh)
    if "config" in raw:  # service session layout
        stored = raw
        raw = dict(stored["config"])
        raw.setdefault("seed", stored.get("seed", 0))
    strategy, seed = _replay_identity(log_path, raw, args)
    raw.pop("strategies", None)
    raw.pop("seed", None)
    raw["strategy"] = strategy
    cfg = ExperimentConfig.from_dict(raw)
    dataset = resolve_dataset(cfg)
    events = load_events(log_path)
    record = replay_episode(dataset, cfg, seed, events)
    print(
        f"replayed {len(events)} events: strategy={record.strategy} seed={record.seed} "
        f"spent={record.spent} accepts={record.accepts} rejects={record.rejects} "
        f"final_accuracy={record.final_accuracy:.4f}"
    )
    if args.output_dir:
        out = Path(args.output_dir)
        report = ExperimentReport(
            dataset=dataset.name,
            budget=record.budget,
            budget_mode=record.budget_mode,
            seeds=[record.seed],
            strategies=summarize([record]),
            episodes=[record],
            failures=[],
        )
        write_report(report, out)
        print(f"wrote {out / 'report.json'}, {out / 'curves.csv'}")
    return 0


def _cmd_report(args) -> int:
    root = Path(args.dir)
    curves = root / "curves.csv"
    if not curves.exists():
        print(f"no curves.csv under {root}", file=sys.stderr)
        return 2
    budget = None
    budget_mode = "cost-weighted"
    config_path = root / "config.json"
    dataset_name = str(root)
    if config_path.exists():
        with open(config_path) as fh:
            raw = json.load(fh)
        raw = raw.get("config", raw)
        budget = raw.get("budget")
        budget_mode = raw.get("budget_mode", budget_mode)
        dataset_name = raw.get("dataset") or dataset_name
    episodes: dict[tuple[str, int], list[CurvePoint]] = {}
    with open(curves) as fh:
        header = fh.readline().strip()
        expected = "strategy,seed,spent_budget,test_accuracy,total_entropy_bits"
        if header != expected:
            print(f"unexpected curves.csv header: {header}", file=sys.stderr)
            return 2
        for line in fh:
            line = line.strip()
            if not line:
                continue
            strategy, seed, spent, acc, ent = line.split(",")
            episodes.setdefault((strategy, int(seed)), []).append(
                CurvePoint(float(spent), float(acc), float(ent))
            )
    records = []
    for (strategy, seed), rows in sorted(episodes.items()):
        spent = rows[-1].spent
        records.append(
            EpisodeRecord(
                strategy=strategy,
                seed=seed,
                budget=budget if budget is not None else spent,
                budget_mode=budget_mode,
                spent=spent,
                final_accuracy=rows[-1].accuracy,
                rows=rows,
                accepts=0,
                rejects=0,
                queries=0,
                hard_queries=0,
                candidate_evaluations=0,
                iteration_seconds=[],
                events=[],
            )
        )
    report = ExperimentReport(
        dataset=dataset_name,
        budget=records[0].budget if records else 0.0,
        budget_mode=budget_mode,
        seeds=sorted({r.seed for r in records}),
        strategies=summarize(records) if records else {},
        episodes=records,
        failures=[],
    )
    write_report(report, root)
    print(f"rebuilt {root / 'report.json'} and {root / 'summary.txt'}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.sessions_dir, args.dataset_root)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="igp",
        description="Active learning on graphs with relaxed binary queries",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the configured strategy")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--output-dir")
    p_run.set_defaults(fn=_cmd_run)

    p_suite = sub.add_parser("suite", help="run every configured strategy x seed")
    p_suite.add_argument("--config", required=True)
    p_suite.add_argument("--output-dir")
    p_suite.set_defaults(fn=_cmd_suite)

    p_replay = sub.add_parser("replay", help="re-execute an event log and verify it")
    p_replay.add_argument("--log", required=True)
    p_replay.add_argument("--config")
    p_replay.add_argument("--seed", type=int)
    p_replay.add_argument("--strategy")
    p_replay.add_argument("--output-dir")
    p_replay.set_defaults(fn=_cmd_replay)

    p_report = sub.add_parser("report", help="rebuild report files from curves.csv")
    p_report.add_argument("--dir", required=True)
    p_report.set_defaults(fn=_cmd_report)

    p_serve = sub.add_parser("serve", help="start the annotation session server")
    p_serve.add_argument("--sessions-dir", default="igp-sessions")
    p_serve.add_argument("--dataset-root")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8008)
    p_serve.set_defaults(fn=_cmd_serve)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
