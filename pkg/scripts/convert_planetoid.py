"""Convert a Planetoid-style citation dataset to the canonical layout.

The classic citation benchmarks (cora, citeseer, pubmed) circulate as
eight pickled files per graph: ind.<name>.{x,y,tx,ty,allx,ally,graph}
plus ind.<name>.test.index. This script stitches them back into one
node table using the standard reassembly rules (test features live in
a separately shuffled block; citeseer has isolated test ids that must
be re-inserted as zero rows) and writes the directory layout the
loader expects: edges.csv, features.bin, labels.csv, split.json,
meta.json, with the conventional public split (train = the small
labeled block, next 500 nodes = validation, test.index = test).

The output is directly usable by the engine and the acceptance suite:

    python scripts/convert_planetoid.py --input raw/ --name cora --out data/cora
    IGP_CORA_DIR=data/cora pytest tests/test_acceptance.py

This script is a data-preparation utility; it needs the raw files,
which are distributed with the original Planetoid code and by several
graph-learning frameworks, and are not bundled here.
"""

import argparse
import pickle
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp

PARTS = ("x", "y", "tx", "ty", "allx", "ally", "graph")


def read_pickle(path: Path):
    with open(path, "rb") as fh:
        return pickle.load(fh, encoding="latin1")


def load_planetoid(input_dir: Path, name: str):
    blobs = {}
    for part in PARTS:
        path = input_dir / f"ind.{name}.{part}"
        if not path.exists():
            sys.exit(f"missing {path}")
        blobs[part] = read_pickle(path)
    test_idx = np.loadtxt(
        input_dir / f"ind.{name}.test.index", dtype=np.int64
    )
    return blobs, test_idx


def assemble(blobs, test_idx):
    """Stack the train/other/test blocks and undo the test shuffle."""
    full_range = np.arange(test_idx.min(), test_idx.max() + 1)
    tx, ty = blobs["tx"], blobs["ty"]
    if full_range.size > test_idx.size:
        # citeseer: some test ids are isolated and missing from the
        # pickles; give them zero features and a zero label row.
        tx_fixed = sp.lil_matrix((full_range.size, tx.shape[1]))
        tx_fixed[test_idx - full_range.min()] = tx
        ty_fixed = np.zeros((full_range.size, ty.shape[1]))
        ty_fixed[test_idx - full_range.min()] = ty
        tx, ty = tx_fixed.tocsr(), ty_fixed
    features = sp.vstack([blobs["allx"], tx]).tolil()
    features[test_idx] = features[full_range]
    labels_1hot = np.vstack([blobs["ally"], ty])
    labels_1hot[test_idx] = labels_1hot[full_range]
    labels = labels_1hot.argmax(axis=1).astype(np.int64)

    n = features.shape[0]
    edges = set()
    for u, neighbors in blobs["graph"].items():
        for v in neighbors:
            if u == v or not (0 <= u < n and 0 <= v < n):
                continue
            edges.add((min(u, v), max(u, v)))

    n_train = blobs["y"].shape[0]
    split = {
        "train": list(range(n_train)),
        "val": list(range(n_train, n_train + 500)),
        "test": sorted(int(i) for i in test_idx),
    }
    return np.asarray(features.todense()), labels, sorted(edges), split


def main():
    parser = argparse.ArgumentParser(
        description="Planetoid pickles -> canonical dataset directory."
    )
    parser.add_argument("--input", required=True,
                        help="directory holding the ind.<name>.* files")
    parser.add_argument("--name", required=True,
                        choices=["cora", "citeseer", "pubmed"])
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--features-csv", action="store_true",
                        help="write features.csv instead of features.bin")
    args = parser.parse_args()

    blobs, test_idx = load_planetoid(Path(args.input), args.name)
    features, labels, edges, split = assemble(blobs, test_idx)

    # Import here so --help works without the package installed.
    from igp.graph import Dataset, Graph, save_dataset

    n, d = features.shape
    c = int(labels.max()) + 1
    dataset = Dataset(
        name=args.name,
        graph=Graph(n, np.asarray(edges, dtype=np.int64)),
        features=features.astype(np.float64),
        ground_truth=labels,
        class_count=c,
        train_nodes=np.asarray(split["train"], dtype=np.int64),
        val_nodes=np.asarray(split["val"], dtype=np.int64),
        test_nodes=np.asarray(split["test"], dtype=np.int64),
    )
    save_dataset(dataset, args.out, binary_features=not args.features_csv)
    print(f"{args.name}: N={n} d={d} c={c} edges={len(edges)} -> {args.out}")
    print(f"split sizes: train={len(split['train'])} "
          f"val={len(split['val'])} test={len(split['test'])}")


if __name__ == "__main__":
    main()
