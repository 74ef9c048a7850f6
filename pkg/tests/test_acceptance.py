"""End-to-end acceptance bars for the active-learning engine.

One test per numbered bar, so a verbose run prints one pass or fail
line for each.  Bars 01-06 and 10 are deterministic desk-scale checks
against independent oracles and known worked examples.  Bars 07-09
measure strategy orderings at citation scale: they run on a real
citation dataset when IGP_CORA_DIR points at a directory in the
canonical layout (see README), and otherwise on a deterministic
synthetic stand-in generated in-process.

The margins in bars 07 and 08 are calibrated for real citation graphs,
where feature quality and graph structure are coupled.  The bundled
stand-in does not reproduce two of them (the random-baseline margin in
bar 07 and the two selection ablations in bar 08): with Gaussian block
features a linear propagation model saturates on a couple dozen clean
labels, so plain boundary sampling is already near-optimal.  Those
tests are expected to fail on the stand-in and pass on real data; the
README's acceptance section discusses the measurements.
"""

import math
import os
import time
from dataclasses import replace

import numpy as np
import pytest

from igp.graph import SyntheticSpec, generate_synthetic, load_dataset
from igp.harness import ExperimentConfig, apply_strategy, replay_episode, run_episode
from igp.infogain import (
    SoftLabel,
    entropy,
    info_gain,
    normalize_accept,
    normalize_reject,
)
from igp.model import TrainConfig, loss_and_gradients
from igp.propagation import InfluenceCache, build_transition, influence_from
from igp.selection import GreedyState, SelectionConfig, select_batch

from .conftest import random_graph, random_soft_label
from .oracles import brute_force_info_gain, dense_power, naive_select

CITATION_SEEDS = list(range(10))

# Citation-scale stand-in: a degree-corrected 7-block model with
# heavy-tailed degrees, a few strongly cross-linked hub nodes per class
# (survey-paper analogues), and Gaussian class-mean features.
STAND_IN = SyntheticSpec(
    blocks=7,
    block_size=200,
    intra_prob=0.018,
    inter_prob=0.0015,
    feature_dim=256,
    noise=3.5,
    hub_fraction=0.08,
    hub_boost=4.0,
    bridge_fraction=0.05,
    bridge_boost=22.0,
    seed=7,
)


def _citation_config() -> ExperimentConfig:
    """Budget of 20 cost units per class, batch 20, depth-2 influence."""
    cora_dir = os.environ.get("IGP_CORA_DIR")
    return ExperimentConfig(
        dataset=cora_dir,
        synthetic=None if cora_dir else STAND_IN,
        budget=1.0,  # provisional; set to 20 * class_count once loaded
        batch_size=20,
        depth=2,
        train=TrainConfig(alpha=2.0),
        selection=SelectionConfig(batch_size=20, depth=2, degree_threshold=8),
        warm_per_class=2,
    )


@pytest.fixture(scope="module")
def citation_runs():
    """Every (variant x seed) episode needed by bars 07-09, run once.

    Returns (dataset, base config, dict of variant name -> EpisodeRecord
    list over the shared seeds).  Baselines run in conventional
    hard-label mode, paying class_count - 1 units per label out of the
    same budget the relaxed strategy spends one unit at a time.
    """
    base = _citation_config()
    dataset = (
        load_dataset(base.dataset)
        if base.dataset
        else generate_synthetic(base.synthetic)
    )
    base = replace(base, budget=20.0 * dataset.class_count)

    variants = {
        "igp": base,
        "random": replace(base, strategy="random", hard_queries=True),
        "uncertainty": replace(base, strategy="uncertainty", hard_queries=True),
        "igp-no-it": apply_strategy(base, "igp-no-it"),
        "igp-no-is": apply_strategy(base, "igp-no-is"),
        "igp-no-im": apply_strategy(base, "igp-no-im"),
        "igp-no-nl": apply_strategy(base, "igp-no-nl"),
        "igp-thr0": replace(
            base, selection=replace(base.selection, degree_threshold=0)
        ),
    }
    runs = {
        name: [run_episode(dataset, cfg, seed) for seed in CITATION_SEEDS]
        for name, cfg in variants.items()
    }
    for name, recs in runs.items():
        accs = 100.0 * np.array([r.final_accuracy for r in recs])
        print(
            f"{name:<12} acc {accs.mean():6.2f} +- {accs.std():4.2f}  "
            f"evals {np.mean([r.candidate_evaluations for r in recs]):9.0f}"
        )
    return dataset, base, runs


def _mean_acc(records) -> float:
    return 100.0 * float(np.mean([r.final_accuracy for r in records]))


def test_01_worked_entropy_and_gain_values():
    """Known worked examples, within 1e-3; the entropy/gain order flip holds."""
    s1 = SoftLabel(np.array([0.5, 0.25, 0.25]))
    s2 = SoftLabel(np.array([0.4, 0.3, 0.3]))
    assert entropy(s1.probs) == pytest.approx(1.5, abs=1e-3)
    assert entropy(s2.probs) == pytest.approx(1.571, abs=1e-3)
    assert info_gain(s1) == pytest.approx(1.0, abs=1e-3)
    assert info_gain(s2) == pytest.approx(0.971, abs=1e-3)
    # The sharper label has lower entropy yet the larger expected gain.
    assert entropy(s1.probs) < entropy(s2.probs)
    assert info_gain(s1) > info_gain(s2)


def test_02_answer_normalization_is_exact():
    """Accept gives a one-hot; reject renormalizes the survivors, to 1e-12."""
    label = SoftLabel(np.array([0.5, 0.3, 0.2]))
    accepted = normalize_accept(label, 0)
    rejected = normalize_reject(label, 0)
    assert np.max(np.abs(accepted.probs - np.array([1.0, 0.0, 0.0]))) <= 1e-12
    assert np.max(np.abs(rejected.probs - np.array([0.0, 0.6, 0.4]))) <= 1e-12
    assert rejected.rejected == frozenset({0})


def test_03_info_gain_matches_two_branch_expectation():
    """1,000 random soft labels, classes 2..10: gain = expected entropy drop.

    The fast closed form must match a brute-force expectation over the
    two oracle outcomes within 1e-9, with and without the uniform-reject
    ablation flavor.
    """
    rng = np.random.default_rng(20240817)
    for trial in range(1000):
        c = 2 + trial % 9
        label = random_soft_label(rng, c)
        uniform = trial % 3 == 0
        got = info_gain(label, uniform_reject=uniform)
        want = brute_force_info_gain(label, uniform_reject=uniform)
        assert got == pytest.approx(want, abs=1e-9), (trial, c, label)


def test_04_influence_matches_dense_walk_powers():
    """100 random graphs, N <= 50: influence columns equal dense P^k.

    Checked for k in {0, 1, 2, 3} against an independently built dense
    power of the row-normalized self-looped adjacency, within 1e-9.
    Assembling all columns must reproduce row-stochasticity: for every
    node the influences of all sources on it sum to 1 within 1e-9.
    """
    rng = np.random.default_rng(404)
    for _ in range(100):
        n = int(rng.integers(2, 51))
        graph = random_graph(rng, n, p=float(rng.uniform(0.02, 0.3)))
        tm = build_transition(graph)
        for k in range(4):
            want = dense_power(graph, k)
            got = np.zeros((n, n))
            for source in range(n):
                got[:, source] = influence_from(tm, source, k).dense(n)
            assert np.max(np.abs(got - want)) <= 1e-9
            assert np.max(np.abs(got.sum(axis=1) - 1.0)) <= 1e-9


def test_05_incremental_greedy_matches_from_scratch_oracle():
    """20 block-model instances, N <= 200: picks and objectives agree.

    The production selector updates beliefs incrementally; the oracle
    recomputes the whole objective from scratch around every candidate.
    Node sequences must be identical and the running objective must
    telescope to the from-scratch value within 1e-6, in under 30 s.
    """
    started = time.perf_counter()
    for instance in range(20):
        rng = np.random.default_rng(7000 + instance)
        blocks = int(rng.integers(2, 6))
        size = int(rng.integers(20, min(41, 200 // blocks + 1)))
        ds = generate_synthetic(
            SyntheticSpec(
                blocks=blocks,
                block_size=size,
                intra_prob=0.2,
                inter_prob=0.03,
                feature_dim=8,
                seed=9000 + instance,
            )
        )
        c = ds.class_count
        nodes = np.arange(ds.node_count)
        annotated = {
            int(v): random_soft_label(rng, c)
            for v in rng.choice(nodes, size=8, replace=False)
        }
        pool = [int(v) for v in nodes if int(v) not in annotated]
        live = {v: random_soft_label(rng, c, max_rejected=1) for v in pool}
        cfg = SelectionConfig(
            batch_size=int(rng.integers(3, 7)),
            depth=2,
            mode="approximate" if instance % 2 == 0 else "exact",
            uniform_reject_label=instance % 5 == 0,
        )
        cache = InfluenceCache(build_transition(ds.graph), 2)
        state = GreedyState(
            cache, annotated, live, pool, ds.node_count, c, cfg
        )
        picked, objectives = [], []
        for _ in range(cfg.batch_size):
            step = select_batch(state, cfg, 1)
            if not step:
                break
            picked.extend(step)
            objectives.append(state.objective)
        want_picked, want_objectives = naive_select(
            ds.graph, 2, annotated, live, pool, cfg, c
        )
        assert picked == want_picked, f"instance {instance}"
        for got, want in zip(objectives, want_objectives):
            assert abs(got - want) <= 1e-6, f"instance {instance}"
    assert time.perf_counter() - started < 30.0


def test_06_loss_gradients_match_finite_differences():
    """Analytic gradients vs central differences, 64 coordinates each.

    For mixing weights alpha in {0, 1, 2}, every sampled coordinate of
    the weight and bias gradients must match a central finite difference
    within relative error 1e-4 (absolute 1e-7 when both are near zero).
    """
    rng = np.random.default_rng(66)
    n, d, c = 40, 12, 6
    features = rng.normal(size=(n, d))
    annotations = {}
    for v in range(18):
        if v < 12:
            annotations[v] = SoftLabel.one_hot(c, v % c)
        else:
            annotations[v] = random_soft_label(rng, c)
    for alpha in (0.0, 1.0, 2.0):
        weights = 0.1 * rng.normal(size=(d, c))
        bias = 0.1 * rng.normal(size=c)

        def loss_at(w, b):
            return loss_and_gradients(
                features, annotations, w, b, alpha, 5e-6
            )[0]

        _, grad_w, grad_b = loss_and_gradients(
            features, annotations, weights, bias, alpha, 5e-6
        )
        flat = np.concatenate([grad_w.ravel(), grad_b.ravel()])
        h = 1e-6
        for coord in rng.choice(flat.size, size=64, replace=False):
            wp, bp = weights.copy(), bias.copy()
            wm, bm = weights.copy(), bias.copy()
            if coord < d * c:
                wp.ravel()[coord] += h
                wm.ravel()[coord] -= h
            else:
                bp[coord - d * c] += h
                bm[coord - d * c] -= h
            fd = (loss_at(wp, bp) - loss_at(wm, bm)) / (2 * h)
            got = flat[coord]
            denom = max(abs(got), abs(fd))
            if denom < 1e-7:
                assert abs(got - fd) <= 1e-7
            else:
                assert abs(got - fd) / denom <= 1e-4, (alpha, int(coord))


def test_07_selection_beats_baselines_at_citation_scale(citation_runs):
    """Directional ordering over 10 seeds at a 20-units-per-class budget.

    Mean test accuracy of the greedy gain-propagation strategy must
    exceed the random baseline by at least 2 points and the max-entropy
    uncertainty baseline by at least 1 point, both baselines paying the
    conventional class_count - 1 units per full label.
    """
    _, _, runs = citation_runs
    igp = _mean_acc(runs["igp"])
    random_margin = igp - _mean_acc(runs["random"])
    uncertainty_margin = igp - _mean_acc(runs["uncertainty"])
    assert random_margin >= 2.0, (
        f"igp - random = {random_margin:+.2f} points (needs >= +2.00)"
    )
    assert uncertainty_margin >= 1.0, (
        f"igp - uncertainty = {uncertainty_margin:+.2f} points (needs >= +1.00)"
    )


def test_08_each_ablation_hurts_accuracy(citation_runs):
    """Every ablated selector scores at or below the full strategy.

    Paired over the same 10 seeds: disabling soft-label training,
    entropy propagation, walk-probability weighting, or conditional
    rejection labels must not raise mean accuracy, and at least two of
    the four ablations must cost a full point.
    """
    _, _, runs = citation_runs
    igp = _mean_acc(runs["igp"])
    margins = {
        name: igp - _mean_acc(runs[name])
        for name in ("igp-no-it", "igp-no-is", "igp-no-im", "igp-no-nl")
    }
    report = "  ".join(f"{k}={v:+.2f}" for k, v in margins.items())
    for name, margin in margins.items():
        assert margin >= 0.0, f"{name} beats the full strategy: {report}"
    assert sum(margin >= 1.0 for margin in margins.values()) >= 2, report


def test_09_degree_filter_accuracy_neutral_and_cheaper(citation_runs):
    """Threshold 8 vs 0: accuracy moves <= 1 point, evaluations drop >= 30%."""
    _, _, runs = citation_runs
    gap = abs(_mean_acc(runs["igp"]) - _mean_acc(runs["igp-thr0"]))
    evals_filtered = float(
        np.mean([r.candidate_evaluations for r in runs["igp"]])
    )
    evals_full = float(
        np.mean([r.candidate_evaluations for r in runs["igp-thr0"]])
    )
    reduction = 1.0 - evals_filtered / evals_full
    assert gap <= 1.0, f"|thr8 - thr0| = {gap:.2f} points (needs <= 1.00)"
    assert reduction >= 0.30, f"evaluation reduction {reduction:.1%} < 30%"


def _strip_times(events):
    return [{k: v for k, v in e.items() if k != "time"} for e in events]


def test_10_budget_ledger_exact_and_replay_bitexact(citation_runs):
    """Spending equals the event-cost sum exactly; logs replay bit-exact.

    Hard-mode baselines are charged class_count - 1 per label with no
    other paid events.  Re-executing an episode from its event log must
    reproduce the curve rows, final accuracy, and spend with float
    equality, at desk scale and at citation scale.
    """
    dataset, base, runs = citation_runs
    c = dataset.class_count
    for records in runs.values():
        for rec in records:
            assert rec.spent == sum(e["cost"] for e in rec.events)
    for name in ("random", "uncertainty"):
        for rec in runs[name]:
            paid = [e["cost"] for e in rec.events if e["cost"] != 0]
            assert paid and all(cost == c - 1 for cost in paid)
            assert rec.spent == (base.budget // (c - 1)) * (c - 1)

    desk = SyntheticSpec(seed=0)
    desk_cfg = ExperimentConfig(synthetic=desk, budget=30.0, batch_size=5)
    desk_ds = generate_synthetic(desk)
    checks = [
        (desk_ds, desk_cfg, 4),
        (desk_ds, replace(desk_cfg, strategy="random", hard_queries=True), 0),
        (dataset, base, CITATION_SEEDS[0]),
    ]
    for ds, cfg, seed in checks:
        first = (
            runs["igp"][0]
            if ds is dataset
            else run_episode(ds, cfg, seed)
        )
        again = replay_episode(ds, cfg, seed, first.events)
        assert again.rows == first.rows
        assert again.spent == first.spent
        assert again.final_accuracy == first.final_accuracy
        assert _strip_times(again.events) == _strip_times(first.events)
