#!/usr/bin/env python3
"""Fetch the Planetoid citation benchmarks and convert them to the on-disk
dataset layout used by this toolkit (edges.tsv, features.csv, labels.txt,
splits.json). See docs/dataset_format.md for the format.

Usage:
    python3 scripts/fetch_planetoid.py [--datasets cora citeseer pubmed]
                                       [--out data] [--source-dir DIR]

Downloads go to <out>/_raw/ and converted datasets to <out>/<name>/. If the
raw ind.* files are already present (or provided via --source-dir), no
network access is needed.

The split written to splits.json is the standard Planetoid protocol: the
first len(y) nodes for training, the next 500 for validation, and the held
out test.index nodes for testing.
"""

import argparse
import json
import os
import pickle
import sys
import urllib.request

import numpy as np

BASE_URL = "https://github.com/kimiyoung/planetoid/raw/master/data"
PARTS = ["x", "y", "tx", "ty", "allx", "ally", "graph", "test.index"]


def fetch(dataset, raw_dir):
    os.makedirs(raw_dir, exist_ok=True)
    for part in PARTS:
        name = f"ind.{dataset}.{part}"
        path = os.path.join(raw_dir, name)
        if os.path.exists(path):
            continue
        url = f"{BASE_URL}/{name}"
        print(f"fetching {url}")
        with urllib.request.urlopen(url) as response, open(path, "wb") as out:
            out.write(response.read())


def load_pickle(path):
    with open(path, "rb") as handle:
        return pickle.load(handle, encoding="latin1")


def to_dense(matrix):
    try:
        return np.asarray(matrix.todense())
    except AttributeError:
        return np.asarray(matrix)


def convert(dataset, raw_dir, out_dir):
    def raw(part):
        return os.path.join(raw_dir, f"ind.{dataset}.{part}")

    y = load_pickle(raw("y"))
    tx = to_dense(load_pickle(raw("tx")))
    ty = load_pickle(raw("ty"))
    allx = to_dense(load_pickle(raw("allx")))
    ally = load_pickle(raw("ally"))
    graph = load_pickle(raw("graph"))
    test_idx = np.loadtxt(raw("test.index"), dtype=int)
    test_sorted = np.sort(test_idx)

    # Place each test row at its node index. Citeseer's test index has gaps
    # (isolated nodes absent from tx/ty); those nodes keep zero features and
    # belong to no split, following the usual preprocessing.
    base = int(test_sorted[0])
    span = int(test_sorted[-1]) - base + 1
    tx_full = np.zeros((span, tx.shape[1]), dtype=float)
    ty_full = np.zeros((span, ty.shape[1]), dtype=float)
    for row, idx in enumerate(test_idx):
        tx_full[idx - base, :] = tx[row, :]
        ty_full[idx - base, :] = ty[row, :]
    tx, ty = tx_full, ty_full
    test_positions = test_sorted

    features = np.vstack([allx, tx])
    labels_onehot = np.vstack([ally, ty])
    labels = labels_onehot.argmax(axis=1)
    n = features.shape[0]

    edges = set()
    self_loops = 0
    for src, neighbors in graph.items():
        for dst in neighbors:
            if src == dst:
                self_loops += 1
                continue
            if src < n and dst < n:
                edges.add((min(src, dst), max(src, dst)))
    edges = sorted(edges)

    train = list(range(len(y)))
    valid = list(range(len(y), min(len(y) + 500, allx.shape[0])))
    test = [int(i) for i in test_positions]

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "edges.tsv"), "w", newline="\n") as out:
        for u, v in edges:
            out.write(f"{u}\t{v}\n")
    with open(os.path.join(out_dir, "features.csv"), "w", newline="\n") as out:
        for row in features:
            out.write(",".join(format(v, "g") for v in row))
            out.write("\n")
    with open(os.path.join(out_dir, "labels.txt"), "w", newline="\n") as out:
        for label in labels:
            out.write(f"{label}\n")
    with open(os.path.join(out_dir, "splits.json"), "w", newline="\n") as out:
        json.dump({"train": train, "valid": valid, "test": test}, out, indent=1)
        out.write("\n")

    same = sum(1 for u, v in edges if labels[u] == labels[v])
    print(
        f"{dataset}: {n} nodes, {len(edges)} undirected edges "
        f"({self_loops} self-loops dropped), {labels_onehot.shape[1]} classes, "
        f"homophily {same / len(edges):.3f}, split {len(train)}/{len(valid)}/{len(test)}"
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--datasets", nargs="+", default=["cora", "citeseer"])
    parser.add_argument("--out", default="data")
    parser.add_argument(
        "--source-dir",
        default=None,
        help="directory already containing the ind.* files (skips download)",
    )
    args = parser.parse_args()

    for dataset in args.datasets:
        raw_dir = args.source_dir or os.path.join(args.out, "_raw")
        if args.source_dir is None:
            try:
                fetch(dataset, raw_dir)
            except Exception as error:  # noqa: BLE001
                print(
                    f"download failed ({error}); place the ind.{dataset}.* files "
                    f"in {raw_dir} and re-run",
                    file=sys.stderr,
                )
                return 1
        convert(dataset, raw_dir, os.path.join(args.out, dataset))
    return 0


if __name__ == "__main__":
    sys.exit(main())
