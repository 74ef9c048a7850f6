"""Graph container, canonical dataset directory IO, and synthetic benchmarks.

Datasets are directories with a fixed layout::

    edges.csv       one undirected edge per line, "u,v" (optional header)
    features.csv    N rows of d comma-separated floats, or
    features.bin    little-endian: uint64 N, uint64 d, then N*d float64 row-major
    labels.csv      "node_id,class_id" per line (optional header)
    split.json      {"train": [...], "val": [...], "test": [...]}
    meta.json       {"name", "num_nodes", "num_features", "num_classes",
                     optional "class_names"}

Node ids must already be dense integers 0..N-1; converters that remap
external ids live in scripts/ and emit a mapping file alongside the output.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DatasetError(ValueError):
    """Raised for malformed or inconsistent dataset directories."""


class Graph:
    """Undirected graph over dense integer node ids 0..N-1.

    Edges are deduplicated and stored once as (u, v) with u < v.
    Self-loops in the input are rejected; the propagation operator adds
    its own self-connections.
    """

    def __init__(self, node_count: int, edges) -> None:
        if node_count <= 0:
            raise ValueError("node_count must be positive")
        self.node_count = int(node_count)
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size:
            if e.min() < 0 or e.max() >= node_count:
                raise ValueError("edge endpoint out of range")
            if np.any(e[:, 0] == e[:, 1]):
                raise ValueError("self-loops are not allowed")
            lo = np.minimum(e[:, 0], e[:, 1])
            hi = np.maximum(e[:, 0], e[:, 1])
            e = np.unique(np.stack([lo, hi], axis=1), axis=0)
        self.edges = e
        self.degrees = np.zeros(self.node_count, dtype=np.int64)
        if e.size:
            np.add.at(self.degrees, e[:, 0], 1)
            np.add.at(self.degrees, e[:, 1], 1)
        # CSR adjacency over both edge directions, neighbor lists sorted.
        self._indptr = np.zeros(self.node_count + 1, dtype=np.int64)
        np.cumsum(self.degrees, out=self._indptr[1:])
        self._indices = np.zeros(int(self._indptr[-1]), dtype=np.int64)
        cursor = self._indptr[:-1].copy()
        for u, v in e:
            self._indices[cursor[u]] = v
            cursor[u] += 1
            self._indices[cursor[v]] = u
            cursor[v] += 1
        for v in range(self.node_count):
            seg = self._indices[self._indptr[v]:self._indptr[v + 1]]
            seg.sort()

    @property
    def edge_count(self) -> int:
        return int(self.edges.shape[0])

    def neighbors(self, v: int) -> np.ndarray:
        return self._indices[self._indptr[v]:self._indptr[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        return bool(np.searchsorted(nb, v) < nb.size and nb[np.searchsorted(nb, v)] == v)

    def adjacency(self):
        """Symmetric adjacency as scipy CSR with unit weights."""
        from scipy import sparse

        e = self.edges
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        data = np.ones(rows.size, dtype=np.float64)
        return sparse.csr_matrix(
            (data, (rows, cols)), shape=(self.node_count, self.node_count)
        )


@dataclass
class Dataset:
    """A graph with node features, ground-truth classes, and a fixed split."""

    name: str
    graph: Graph
    features: np.ndarray
    ground_truth: np.ndarray
    class_count: int
    train_nodes: np.ndarray
    val_nodes: np.ndarray
    test_nodes: np.ndarray
    class_names: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.class_names:
            self.class_names = [f"class-{i}" for i in range(self.class_count)]
        self.validate()

    @property
    def node_count(self) -> int:
        return self.graph.node_count

    @property
    def feature_dim(self) -> int:
        return int(self.features.shape[1])

    def validate(self) -> None:
        n = self.graph.node_count
        if self.features.shape[0] != n:
            raise DatasetError(
                f"features have {self.features.shape[0]} rows for {n} nodes"
            )
        if not np.all(np.isfinite(self.features)):
            raise DatasetError("features contain non-finite values")
        if self.ground_truth.shape != (n,):
            raise DatasetError("ground_truth must have one class per node")
        if self.ground_truth.min() < 0 or self.ground_truth.max() >= self.class_count:
            raise DatasetError("class id out of range in ground truth")
        if len(self.class_names) != self.class_count:
            raise DatasetError("class_names length must equal class_count")
        parts = [self.train_nodes, self.val_nodes, self.test_nodes]
        names = ["train", "val", "test"]
        seen: set[int] = set()
        for part, pname in zip(parts, names):
            if part.size and (part.min() < 0 or part.max() >= n):
                raise DatasetError(f"{pname} split contains out-of-range node id")
            ids = set(int(x) for x in part)
            if len(ids) != part.size:
                raise DatasetError(f"{pname} split contains duplicates")
            if ids & seen:
                raise DatasetError("splits overlap")
            seen |= ids
        train_classes = set(int(c) for c in self.ground_truth[self.train_nodes])
        if train_classes != set(range(self.class_count)):
            raise DatasetError("every class must appear in the train split")


def _data_lines(path: Path):
    """Yield (line_number, stripped_line) skipping blanks and an optional header."""
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if lineno == 1:
                head = line.split(",")[0].strip()
                try:
                    float(head)
                except ValueError:
                    continue  # header row
            yield lineno, line


def _parse_int(token: str, path: Path, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise DatasetError(f"{path}:{lineno}: malformed integer field {token!r}") from None


def _load_features_bin(path: Path, n: int, d: int) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16:
            raise DatasetError(f"{path}: truncated header")
        fn, fd = struct.unpack("<QQ", header)
        if (fn, fd) != (n, d):
            raise DatasetError(
                f"{path}: header says {fn}x{fd}, meta.json says {n}x{d}"
            )
        buf = fh.read(8 * n * d)
        if len(buf) != 8 * n * d:
            raise DatasetError(f"{path}: expected {8 * n * d} payload bytes")
        extra = fh.read(1)
        if extra:
            raise DatasetError(f"{path}: trailing bytes after feature payload")
    return np.frombuffer(buf, dtype="<f8").reshape(n, d).astype(np.float64)


def load_dataset(path: str | Path) -> Dataset:
    """Load a canonical dataset directory.

    Raises DatasetError with file (and line, for CSVs) context for missing
    files, inconsistent sizes, out-of-range ids, and malformed numeric fields.
    """
    root = Path(path)
    if not root.is_dir():
        raise DatasetError(f"{root}: not a directory")
    meta_path = root / "meta.json"
    if not meta_path.exists():
        raise DatasetError(f"{meta_path}: missing file")
    with open(meta_path) as fh:
        meta = json.load(fh)
    for key in ("num_nodes", "num_features", "num_classes"):
        if key not in meta:
            raise DatasetError(f"{meta_path}: missing key {key!r}")
    n = int(meta["num_nodes"])
    d = int(meta["num_features"])
    c = int(meta["num_classes"])
    name = str(meta.get("name", root.name))
    class_names = [str(x) for x in meta.get("class_names", [])]
    if class_names and len(class_names) != c:
        raise DatasetError(f"{meta_path}: class_names length != num_classes")

    edges_path = root / "edges.csv"
    if not edges_path.exists():
        raise DatasetError(f"{edges_path}: missing file")
    edges = []
    for lineno, line in _data_lines(edges_path):
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise DatasetError(f"{edges_path}:{lineno}: expected two fields")
        u = _parse_int(parts[0], edges_path, lineno)
        v = _parse_int(parts[1], edges_path, lineno)
        if not (0 <= u < n and 0 <= v < n):
            raise DatasetError(f"{edges_path}:{lineno}: node id out of range")
        if u == v:
            raise DatasetError(f"{edges_path}:{lineno}: self-loop not allowed")
        edges.append((u, v))
    graph = Graph(n, np.asarray(edges, dtype=np.int64).reshape(-1, 2))

    bin_path = root / "features.bin"
    csv_path = root / "features.csv"
    if bin_path.exists():
        features = _load_features_bin(bin_path, n, d)
    elif csv_path.exists():
        rows = []
        for lineno, line in _data_lines(csv_path):
            parts = line.split(",")
            if len(parts) != d:
                raise DatasetError(
                    f"{csv_path}:{lineno}: expected {d} fields, got {len(parts)}"
                )
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise DatasetError(
                    f"{csv_path}:{lineno}: malformed numeric field"
                ) from None
        if len(rows) != n:
            raise DatasetError(f"{csv_path}: expected {n} rows, got {len(rows)}")
        features = np.asarray(rows, dtype=np.float64)
    else:
        raise DatasetError(f"{csv_path}: missing file (no features.bin either)")
    if not np.all(np.isfinite(features)):
        raise DatasetError(f"{root / 'features'}: non-finite feature value")

    labels_path = root / "labels.csv"
    if not labels_path.exists():
        raise DatasetError(f"{labels_path}: missing file")
    truth = np.full(n, -1, dtype=np.int64)
    for lineno, line in _data_lines(labels_path):
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise DatasetError(f"{labels_path}:{lineno}: expected two fields")
        node = _parse_int(parts[0], labels_path, lineno)
        cls = _parse_int(parts[1], labels_path, lineno)
        if not 0 <= node < n:
            raise DatasetError(f"{labels_path}:{lineno}: node id out of range")
        if not 0 <= cls < c:
            raise DatasetError(f"{labels_path}:{lineno}: class id out of range")
        if truth[node] != -1:
            raise DatasetError(f"{labels_path}:{lineno}: duplicate label for node {node}")
        truth[node] = cls
    if np.any(truth < 0):
        missing = int(np.argmax(truth < 0))
        raise DatasetError(f"{labels_path}: node {missing} has no label")

    split_path = root / "split.json"
    if not split_path.exists():
        raise DatasetError(f"{split_path}: missing file")
    with open(split_path) as fh:
        split = json.load(fh)
    for key in ("train", "val", "test"):
        if key not in split:
            raise DatasetError(f"{split_path}: missing key {key!r}")
    train = np.asarray(sorted(split["train"]), dtype=np.int64)
    val = np.asarray(sorted(split["val"]), dtype=np.int64)
    test = np.asarray(sorted(split["test"]), dtype=np.int64)

    try:
        return Dataset(
            name=name,
            graph=graph,
            features=features,
            ground_truth=truth,
            class_count=c,
            train_nodes=train,
            val_nodes=val,
            test_nodes=test,
            class_names=class_names,
        )
    except DatasetError as exc:
        raise DatasetError(f"{root}: {exc}") from None


def save_dataset(ds: Dataset, path: str | Path, binary_features: bool = True) -> None:
    """Write a Dataset to a canonical directory (creating it if needed)."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    n, d = ds.features.shape
    with open(root / "edges.csv", "w") as fh:
        fh.write("source,target\n")
        for u, v in ds.graph.edges:
            fh.write(f"{u},{v}\n")
    if binary_features:
        with open(root / "features.bin", "wb") as fh:
            fh.write(struct.pack("<QQ", n, d))
            fh.write(np.ascontiguousarray(ds.features, dtype="<f8").tobytes())
    else:
        np.savetxt(root / "features.csv", ds.features, delimiter=",", fmt="%.17g")
    with open(root / "labels.csv", "w") as fh:
        fh.write("node_id,class_id\n")
        for node, cls in enumerate(ds.ground_truth):
            fh.write(f"{node},{int(cls)}\n")
    with open(root / "split.json", "w") as fh:
        json.dump(
            {
                "train": [int(x) for x in ds.train_nodes],
                "val": [int(x) for x in ds.val_nodes],
                "test": [int(x) for x in ds.test_nodes],
            },
            fh,
        )
    with open(root / "meta.json", "w") as fh:
        json.dump(
            {
                "name": ds.name,
                "num_nodes": int(n),
                "num_features": int(d),
                "num_classes": int(ds.class_count),
                "class_names": ds.class_names,
            },
            fh,
            indent=2,
        )


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters for the stochastic block model benchmark generator.

    Blocks double as classes. Features are a per-class Gaussian mean plus
    isotropic noise, so class separability is controlled by `noise`.

    Setting hub_fraction > 0 turns the plain model into a degree-corrected
    one: the first ceil(hub_fraction * block_size) nodes of every block get
    their edge propensity multiplied by hub_boost, giving the heavy-tailed
    degree profile of citation graphs.

    Setting communities > 1 splits every class into that many equally sized
    sub-communities: dense edges (intra_prob) stay within a sub-community,
    everything else (including same-class, different sub-community) uses
    inter_prob, and each sub-community's feature center is displaced from
    its class mean by a Gaussian offset of scale community_scale.  Classes
    then look like topics made of distinct sub-topics, the texture of
    citation networks.  The defaults leave the plain model bit-for-bit
    untouched.

    Setting bridge_fraction > 0 marks a slice of every sub-community (right
    after the hubs) as bridge nodes whose edge probability toward OTHER
    classes is multiplied by bridge_boost.  Heavy cross-class mixing drags a
    bridge's neighborhood-averaged features toward the global mean, so these
    nodes look maximally ambiguous to a classifier while their labels carry
    almost no transferable signal; citation graphs get the same effect from
    survey and cross-field papers.  Defaults leave the model untouched.

    Setting stray_fraction > 0 marks the slice after the bridges as stray
    nodes: their feature center is the global mean of all class means (zero
    class signal, only noise) and their edge propensity is multiplied by
    stray_propensity, making them sparsely connected.  They model papers
    with uninformative text and few citations: annotating one yields a true
    label attached to misleading features.  Defaults are again a no-op.
    """

    blocks: int = 3
    block_size: int = 50
    intra_prob: float = 0.1
    inter_prob: float = 0.01
    feature_dim: int = 16
    noise: float = 1.0
    hub_fraction: float = 0.0
    hub_boost: float = 1.0
    communities: int = 1
    community_scale: float = 0.0
    bridge_fraction: float = 0.0
    bridge_boost: float = 1.0
    stray_fraction: float = 0.0
    stray_propensity: float = 1.0
    seed: int = 0


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Sample a block-model Dataset; identical spec gives an identical dataset.

    The split is stratified per block, 60/20/20, so every class appears in
    the train partition by construction.
    """
    rng = np.random.default_rng(spec.seed)
    c = int(spec.blocks)
    nb = int(spec.block_size)
    n = c * nb
    d = int(spec.feature_dim)
    if c < 2 or nb < 5:
        raise ValueError("need at least 2 blocks of at least 5 nodes")
    if not 0.0 <= spec.hub_fraction <= 1.0:
        raise ValueError("hub_fraction must be in [0, 1]")
    if spec.hub_boost <= 0:
        raise ValueError("hub_boost must be positive")
    comms = int(spec.communities)
    if comms < 1:
        raise ValueError("communities must be >= 1")
    if nb % comms != 0 or nb // comms < 5:
        raise ValueError(
            "block_size must split into communities of at least 5 nodes"
        )
    if spec.community_scale < 0:
        raise ValueError("community_scale must be nonnegative")
    if not 0.0 <= spec.bridge_fraction <= 1.0:
        raise ValueError("bridge_fraction must be in [0, 1]")
    if spec.bridge_boost <= 0:
        raise ValueError("bridge_boost must be positive")
    if not 0.0 <= spec.stray_fraction <= 1.0:
        raise ValueError("stray_fraction must be in [0, 1]")
    if spec.stray_propensity <= 0:
        raise ValueError("stray_propensity must be positive")
    sb = nb // comms  # sub-community size; equals nb when communities == 1
    n_sub = c * comms

    propensity = np.ones(n)
    hubs_per_sub = int(np.ceil(spec.hub_fraction * sb)) if spec.hub_fraction else 0
    bridges_per_sub = (
        int(np.ceil(spec.bridge_fraction * sb)) if spec.bridge_fraction else 0
    )
    strays_per_sub = (
        int(np.ceil(spec.stray_fraction * sb)) if spec.stray_fraction else 0
    )
    if hubs_per_sub + bridges_per_sub + strays_per_sub > sb:
        raise ValueError("hub, bridge and stray fractions exceed the sub-community")
    cross_rate = np.ones(n)
    stray_mask = np.zeros(n, dtype=bool)
    for si in range(n_sub):
        propensity[si * sb : si * sb + hubs_per_sub] = spec.hub_boost
        lo = si * sb + hubs_per_sub
        cross_rate[lo : lo + bridges_per_sub] = spec.bridge_boost
        lo += bridges_per_sub
        propensity[lo : lo + strays_per_sub] = spec.stray_propensity
        stray_mask[lo : lo + strays_per_sub] = True

    truth = np.repeat(np.arange(c, dtype=np.int64), nb)
    edges = []
    for si in range(n_sub):
        for sj in range(si, n_sub):
            p = spec.intra_prob if si == sj else spec.inter_prob
            rows = np.arange(si * sb, (si + 1) * sb)
            cols = np.arange(sj * sb, (sj + 1) * sb)
            probs = p * np.outer(propensity[rows], propensity[cols])
            if si // comms != sj // comms:
                # Different classes: bridge nodes mix across fields.
                probs = probs * np.outer(cross_rate[rows], cross_rate[cols])
            probs = np.minimum(probs, 1.0)
            mask = rng.random((sb, sb)) < probs
            if si == sj:
                mask = np.triu(mask, k=1)
            ii, jj = np.nonzero(mask)
            if ii.size:
                edges.append(np.stack([rows[ii], cols[jj]], axis=1))
    edge_arr = (
        np.concatenate(edges, axis=0) if edges else np.zeros((0, 2), dtype=np.int64)
    )
    graph = Graph(n, edge_arr)

    means = rng.normal(0.0, 1.0, size=(c, d))
    centers = means[truth]
    if comms > 1 and spec.community_scale > 0:
        offsets = rng.normal(0.0, 1.0, size=(n_sub, d))
        centers = centers + spec.community_scale * offsets[np.arange(n) // sb]
    if strays_per_sub:
        centers = np.where(stray_mask[:, None], means.mean(axis=0), centers)
    features = centers + spec.noise * rng.normal(0.0, 1.0, size=(n, d))

    train_parts, val_parts, test_parts = [], [], []
    for bi in range(c):
        ids = np.arange(bi * nb, (bi + 1) * nb)
        rng.shuffle(ids)
        n_train = int(round(0.6 * nb))
        n_val = int(round(0.2 * nb))
        train_parts.append(ids[:n_train])
        val_parts.append(ids[n_train:n_train + n_val])
        test_parts.append(ids[n_train + n_val:])
    kind = "dcsbm" if hubs_per_sub else "sbm"
    shape = f"{c}x{nb}" if comms == 1 else f"{c}x{nb}m{comms}"
    if bridges_per_sub:
        shape = f"{shape}b"
    if strays_per_sub:
        shape = f"{shape}s"
    return Dataset(
        name=f"{kind}_{shape}_seed{spec.seed}",
        graph=graph,
        features=features,
        ground_truth=truth,
        class_count=c,
        train_nodes=np.sort(np.concatenate(train_parts)),
        val_nodes=np.sort(np.concatenate(val_parts)),
        test_nodes=np.sort(np.concatenate(test_parts)),
    )
