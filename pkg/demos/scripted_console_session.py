"""Drive the annotation server end to end, like a very fast human.

Boots the HTTP service in a subprocess, creates a session on a small
generated dataset, then answers every pending yes/no card with the
ground truth until the budget runs out. Afterwards it downloads the
export payload and re-executes the event log locally to show that the
server's story and an offline replay agree number for number.

    python demos/scripted_console_session.py
    python demos/scripted_console_session.py --budget 40 --port 8021
"""

import argparse
import json
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import requests

from igp.graph import SyntheticSpec, generate_synthetic, save_dataset
from igp.harness import ExperimentConfig, replay_episode
from igp.oracle import load_events


def wait_for(url, tries=50):
    for _ in range(tries):
        try:
            requests.get(url, timeout=1)
            return
        except requests.ConnectionError:
            time.sleep(0.2)
    raise RuntimeError(f"server at {url} never came up")


def main():
    parser = argparse.ArgumentParser(
        description="Scripted oracle session against the live HTTP service."
    )
    parser.add_argument("--budget", type=float, default=30.0)
    parser.add_argument("--batch", type=int, default=5)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--port", type=int, default=8019)
    args = parser.parse_args()

    workdir = Path(tempfile.mkdtemp(prefix="igp-console-"))
    spec = SyntheticSpec(seed=3)
    dataset = generate_synthetic(spec)
    dataset_dir = workdir / "dataset"
    save_dataset(dataset, dataset_dir)
    print(f"dataset saved to {dataset_dir}")

    server = subprocess.Popen(
        [sys.executable, "-m", "igp.cli", "serve",
         "--sessions-dir", str(workdir / "sessions"),
         "--port", str(args.port)],
        stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
    )
    base = f"http://127.0.0.1:{args.port}"
    try:
        wait_for(f"{base}/docs")
        created = requests.post(f"{base}/sessions", json={
            "dataset": str(dataset_dir),
            "budget": args.budget,
            "batch_size": args.batch,
            "seed": args.seed,
        }, timeout=30).json()
        sid = created["session_id"]
        print(f"session {sid}: phase {created['phase']}, "
              f"{len(created['pending'])} cards pending")

        answered = 0
        while True:
            state = requests.get(
                f"{base}/sessions/{sid}/queries", timeout=30
            ).json()
            if state["phase"] == "done":
                break
            for card in state["queries"]:
                node = card["node"]
                truth = int(dataset.ground_truth[node])
                answer = card["proposed_class"] == truth
                reply = requests.post(
                    f"{base}/sessions/{sid}/queries/{card['query_id']}/answer",
                    json={"correct": answer}, timeout=30,
                ).json()
                answered += 1
                verdict = "yes" if answer else "no"
                print(f"  card {card['query_id']:>3}: node {node:>3} "
                      f"class {card['proposed_class']}? {verdict:<3} "
                      f"-> phase {reply['phase']}")

        metrics = requests.get(
            f"{base}/sessions/{sid}/metrics", timeout=30
        ).json()
        print(f"\nserver totals: {answered} answers, "
              f"spent {metrics['spent']:.0f}/{metrics['budget']:.0f}, "
              f"accuracy {100 * metrics['accuracy']:.2f}%")

        export = requests.get(
            f"{base}/sessions/{sid}/export", timeout=30
        ).json()
        exported = export["report"]["episodes"][0]
        log_path = workdir / "sessions" / sid / "events.jsonl"
        cfg = ExperimentConfig.from_dict(
            json.loads((workdir / "sessions" / sid / "config.json")
                       .read_text())["config"]
        )
        local = replay_episode(dataset, cfg, args.seed, load_events(log_path))
        drift = abs(local.final_accuracy - exported["final_accuracy"])
        print(f"offline replay of the event log: "
              f"accuracy {100 * local.final_accuracy:.2f}%, "
              f"spent {local.spent:.0f} (drift vs export: {drift:.2e})")
        assert drift == 0.0 and local.spent == metrics["spent"]
        print("server export and offline replay agree exactly")
    finally:
        server.terminate()
        server.wait(timeout=10)


if __name__ == "__main__":
    main()
