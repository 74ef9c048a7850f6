"""Linear softmax classifier over pre-propagated features.

The features handed to `train`/`predict` are already smoothed (P^k X), so
the model itself is a single linear layer: the decoupled design keeps the
classifier's receptive field identical to the influence operator used for
selection.

The loss mixes hard and soft supervision::

    L = [ sum_{hard} CE(target, pred) + alpha * sum_{soft} KL(target || pred) ]
        / n_hard  +  l2 * ||W||^2

Per-node weighting matches the mixed objective (soft nodes scaled by
alpha); the 1/n_hard normalization keeps the default step size sane as
annotations accumulate.  Hard and soft gradient terms are accumulated
separately so alpha=0 reproduces hard-only training bit-for-bit.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .infogain import SoftLabel


@dataclass
class TrainConfig:
    alpha: float = 1.0
    learning_rate: float = 0.2
    epochs: int = 300
    l2_penalty: float = 5e-6
    seed: int = 0
    use_validation: bool = False

    def __post_init__(self) -> None:
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")


@dataclass
class Classifier:
    weights: np.ndarray
    bias: np.ndarray
    epochs_run: int = 0
    final_loss: float = float("nan")

    def __post_init__(self) -> None:
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[1],):
            raise ValueError("weights must be d x c with a length-c bias")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ValueError("classifier parameters must be finite")


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def _split_targets(annotations) -> tuple[list[int], list[int]]:
    hard, soft = [], []
    for node in sorted(annotations):
        if annotations[node].hard:
            hard.append(int(node))
        else:
            soft.append(int(node))
    return hard, soft


def loss_and_gradients(
    features: np.ndarray,
    annotations,
    weights: np.ndarray,
    bias: np.ndarray,
    alpha: float,
    l2_penalty: float,
):
    """Mixed-objective loss with analytic gradients wrt weights and bias.

    Cross-entropy over hard-labeled nodes plus alpha times KL divergence
    over soft-labeled ones; entries with target probability 0 contribute 0.
    Gradients wrt logits are (pred - target), scaled by alpha for soft rows.
    """
    hard, soft = _split_targets(annotations)
    if not hard:
        raise ValueError("training requires at least one hard-labeled node")
    d, c = weights.shape
    n_hard = len(hard)

    def forward(nodes):
        phi = features[nodes]
        logp = _log_softmax(phi @ weights + bias)
        targets = np.stack([annotations[v].probs for v in nodes])
        return phi, logp, targets

    phi_h, logp_h, t_h = forward(hard)
    loss = float(-(t_h * logp_h).sum())
    grad_logits_h = np.exp(logp_h) - t_h
    grad_w = phi_h.T @ grad_logits_h
    grad_b = grad_logits_h.sum(axis=0)

    if soft and alpha != 0.0:
        phi_s, logp_s, t_s = forward(soft)
        pos = t_s > 0
        loss += alpha * float(
            (t_s[pos] * (np.log(t_s[pos]) - logp_s[pos])).sum()
        )
        grad_logits_s = np.exp(logp_s) - t_s
        grad_w = grad_w + alpha * (phi_s.T @ grad_logits_s)
        grad_b = grad_b + alpha * grad_logits_s.sum(axis=0)

    loss = loss / n_hard + l2_penalty * float((weights * weights).sum())
    grad_w = grad_w / n_hard + 2.0 * l2_penalty * weights
    grad_b = grad_b / n_hard
    return loss, grad_w, grad_b


def train(
    features: np.ndarray,
    annotations,
    cfg: TrainConfig,
    val_nodes=None,
    val_truth=None,
) -> Classifier:
    """Fit the linear head by plain gradient descent from a seeded init.

    `annotations` maps node id -> SoftLabel (the stored annotation targets).
    Every retrain restarts from the same seed-derived parameters, so runs
    are deterministic and comparable across strategies.  With
    cfg.use_validation and a validation set, the epoch with the best
    validation accuracy wins; otherwise the final epoch does.
    """
    features = np.asarray(features, dtype=np.float64)
    if not np.all(np.isfinite(features)):
        raise ValueError("features must be finite")
    hard, _ = _split_targets(annotations)
    if not hard:
        raise ValueError("training requires at least one hard-labeled node")
    c = annotations[hard[0]].class_count
    d = features.shape[1]
    rng = np.random.default_rng(cfg.seed)
    weights = rng.normal(0.0, 0.01, size=(d, c))
    bias = np.zeros(c, dtype=np.float64)

    best = None
    loss = float("nan")
    for epoch in range(cfg.epochs):
        loss, grad_w, grad_b = loss_and_gradients(
            features, annotations, weights, bias, cfg.alpha, cfg.l2_penalty
        )
        if not np.isfinite(loss):
            raise ValueError(
                f"training diverged at epoch {epoch} (loss={loss}); lower the learning rate"
            )
        weights = weights - cfg.learning_rate * grad_w
        bias = bias - cfg.learning_rate * grad_b
        if cfg.use_validation and val_nodes is not None and len(val_nodes) > 0:
            clf = Classifier(weights, bias, epochs_run=epoch + 1, final_loss=loss)
            acc = evaluate(clf, features, val_truth, val_nodes)
            if best is None or acc > best[0]:
                best = (acc, weights.copy(), bias.copy(), epoch + 1, loss)

    if best is not None:
        _, weights, bias, epochs_run, loss = best
        return Classifier(weights, bias, epochs_run=epochs_run, final_loss=loss)
    return Classifier(weights, bias, epochs_run=cfg.epochs, final_loss=float(loss))


def predict(clf: Classifier, features: np.ndarray) -> np.ndarray:
    """Row-stochastic softmax outputs for every row of `features`."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != clf.weights.shape[0]:
        raise ValueError(
            f"feature dim {features.shape} does not match weights {clf.weights.shape}"
        )
    return np.exp(_log_softmax(features @ clf.weights + clf.bias))


def evaluate(clf: Classifier, features: np.ndarray, truth, nodes) -> float:
    """Fraction of `nodes` whose argmax prediction matches `truth`."""
    nodes = np.asarray(nodes, dtype=np.int64)
    if nodes.size == 0:
        raise ValueError("cannot evaluate on an empty node set")
    probs = predict(clf, np.asarray(features)[nodes])
    guesses = probs.argmax(axis=1)
    return float((guesses == np.asarray(truth)[nodes]).mean())


def save_classifier(clf: Classifier, path: str | Path) -> None:
    """Checkpoint: little-endian u64 d, u64 c, weights row-major f64, bias f64."""
    d, c = clf.weights.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack("<QQ", d, c))
        fh.write(np.ascontiguousarray(clf.weights, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(clf.bias, dtype="<f8").tobytes())


def load_classifier(path: str | Path) -> Classifier:
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16:
            raise ValueError(f"{path}: truncated checkpoint header")
        d, c = struct.unpack("<QQ", header)
        body = fh.read(8 * (d * c + c))
        if len(body) != 8 * (d * c + c):
            raise ValueError(f"{path}: truncated checkpoint payload")
        if fh.read(1):
            raise ValueError(f"{path}: trailing bytes in checkpoint")
    weights = np.frombuffer(body[: 8 * d * c], dtype="<f8").reshape(d, c).copy()
    bias = np.frombuffer(body[8 * d * c :], dtype="<f8").copy()
    return Classifier(weights, bias)
