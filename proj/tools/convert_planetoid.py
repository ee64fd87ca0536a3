#!/usr/bin/env python3
"""Convert a Planetoid citation-network distribution into the canonical layout.

Reads the eight ``ind.<dataset>.{x,y,tx,ty,allx,ally,graph,test.index}`` files
published with the Planetoid splits and writes ``meta.json``, ``edges.tsv``,
``features.csr``, ``labels.tsv``, and ``splits.json`` for the aegcn binary:

    python tools/convert_planetoid.py --input raw/ --dataset cora --out data/cora

Test indices with gaps (citeseer ships isolated test documents) are padded
with zero feature rows and class 0, matching the reference preprocessing;
padded nodes never appear in any split.
"""
import argparse
import json
import pickle
import struct
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp

PARTS = ("x", "y", "tx", "ty", "allx", "ally", "graph")


def load_parts(input_dir: Path, dataset: str) -> dict:
    parts = {}
    for part in PARTS:
        path = input_dir / f"ind.{dataset}.{part}"
        if not path.exists():
            sys.exit(f"error: missing {path}")
        with open(path, "rb") as fh:
            parts[part] = pickle.load(fh, encoding="latin1")
    index_path = input_dir / f"ind.{dataset}.test.index"
    if not index_path.exists():
        sys.exit(f"error: missing {index_path}")
    parts["test_index"] = np.array(
        [int(line) for line in index_path.read_text().split()], dtype=np.int64
    )
    return parts


def assemble(parts: dict):
    """Stitch allx/tx into full node order, padding test-range gaps."""
    test_idx = parts["test_index"]
    test_sorted = np.sort(test_idx)
    tx, ty = sp.csr_matrix(parts["tx"]), np.asarray(parts["ty"])
    full_range = np.arange(test_sorted.min(), test_sorted.max() + 1)
    if len(full_range) != len(test_idx):  # isolated documents: pad the range
        tx_ext = sp.lil_matrix((len(full_range), tx.shape[1]))
        tx_ext[test_sorted - test_sorted.min(), :] = tx
        tx = tx_ext.tocsr()
        ty_ext = np.zeros((len(full_range), ty.shape[1]))
        ty_ext[test_sorted - test_sorted.min(), :] = ty
        ty = ty_ext

    features = sp.vstack((sp.csr_matrix(parts["allx"]), tx)).tolil()
    features[test_idx, :] = features[test_sorted, :]
    onehot = np.vstack((np.asarray(parts["ally"]), ty))
    onehot[test_idx, :] = onehot[test_sorted, :]

    n_train = np.asarray(parts["y"]).shape[0]
    splits = {
        "train": list(range(n_train)),
        "val": list(range(n_train, n_train + 500)),
        "test": [int(i) for i in test_sorted],
    }
    return features.tocsr(), onehot, splits


def collect_edges(graph: dict, n: int):
    """Undirected edge set from the adjacency lists; self loops dropped."""
    edges = set()
    dropped = 0
    for src, neighbors in graph.items():
        for dst in neighbors:
            if src == dst:
                dropped += 1
                continue
            if not (0 <= src < n and 0 <= dst < n):
                sys.exit(f"error: edge ({src}, {dst}) outside [0, {n})")
            edges.add((min(src, dst), max(src, dst)))
    return sorted(edges), dropped


def write_fcsr(path: Path, matrix: sp.csr_matrix) -> None:
    matrix = matrix.tocsr().astype(np.float64)
    matrix.sort_indices()
    with open(path, "wb") as fh:
        fh.write(b"FCSR")
        fh.write(struct.pack("<3Q", matrix.shape[0], matrix.shape[1], matrix.nnz))
        fh.write(matrix.indptr.astype("<u8").tobytes())
        fh.write(matrix.indices.astype("<u8").tobytes())
        fh.write(matrix.data.astype("<f8").tobytes())


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--input", required=True, type=Path, help="directory with the ind.* files")
    ap.add_argument("--dataset", required=True, help="file prefix: cora, citeseer, or pubmed")
    ap.add_argument("--out", required=True, type=Path, help="canonical dataset directory to write")
    ap.add_argument("--name", help="dataset name for meta.json (default: --dataset)")
    args = ap.parse_args()
    name = args.name or args.dataset

    parts = load_parts(args.input, args.dataset)
    features, onehot, splits = assemble(parts)
    n, d = features.shape
    f = onehot.shape[1]
    if len(parts["graph"]) != n:
        sys.exit(f"error: graph lists {len(parts['graph'])} nodes, features give {n}")
    edges, dropped = collect_edges(parts["graph"], n)

    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "meta.json").write_text(
        json.dumps({"name": name, "n": n, "d": d, "f": f}) + "\n"
    )
    with open(args.out / "edges.tsv", "w") as fh:
        for src, dst in edges:
            fh.write(f"{src}\t{dst}\n")
    write_fcsr(args.out / "features.csr", features)
    labels = onehot.argmax(axis=1)  # all-zero padded rows fall to class 0
    with open(args.out / "labels.tsv", "w") as fh:
        for node in range(n):
            fh.write(f"{node}\t{int(labels[node])}\n")
    (args.out / "splits.json").write_text(json.dumps(splits) + "\n")

    print(
        f"{name}: n={n} d={d} f={f} edges={len(edges)} "
        f"splits={len(splits['train'])}/{len(splits['val'])}/{len(splits['test'])}"
        + (f" (dropped {dropped} self loops)" if dropped else "")
    )


if __name__ == "__main__":
    main()
