#!/usr/bin/env python3
"""Convert a GTN-style heterogeneous dataset into the canonical layout.

Reads the pickled distribution used by the ACM and IMDB benchmarks
(``node_features.pkl``, ``edges.pkl`` with one directed adjacency per edge
type, ``labels.pkl`` with [node, class] pairs for train/val/test) and writes
the canonical directory for the aegcn binary:

    python tools/convert_gtn.py --input raw/acm --out data/acm --name acm

Edge-type file names default to the conventional relation pairs for the two
published datasets (pa,ap,ps,sp and md,dm,ma,am) and to t0..tK-1 otherwise.
"""
import argparse
import json
import pickle
import struct
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp

DEFAULT_EDGE_NAMES = {
    "acm": ["pa", "ap", "ps", "sp"],
    "imdb": ["md", "dm", "ma", "am"],
}


def load_pickle(path: Path):
    if not path.exists():
        sys.exit(f"error: missing {path}")
    with open(path, "rb") as fh:
        return pickle.load(fh, encoding="latin1")


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
    ap.add_argument("--input", required=True, type=Path,
                    help="directory with node_features.pkl, edges.pkl, labels.pkl")
    ap.add_argument("--out", required=True, type=Path, help="canonical dataset directory to write")
    ap.add_argument("--name", required=True, help="dataset name for meta.json (acm, imdb, ...)")
    ap.add_argument("--edge-names", help="comma-separated edge-type names, one per adjacency")
    args = ap.parse_args()

    features = load_pickle(args.input / "node_features.pkl")
    adjacencies = load_pickle(args.input / "edges.pkl")
    split_pairs = load_pickle(args.input / "labels.pkl")

    features = sp.csr_matrix(np.asarray(features, dtype=np.float64)
                             if not sp.issparse(features) else features)
    n, d = features.shape
    if len(split_pairs) != 3:
        sys.exit(f"error: labels.pkl holds {len(split_pairs)} split tables, expected 3")

    if args.edge_names:
        names = args.edge_names.split(",")
    else:
        names = DEFAULT_EDGE_NAMES.get(args.name.lower(),
                                       [f"t{k}" for k in range(len(adjacencies))])
    if len(names) != len(adjacencies):
        sys.exit(f"error: {len(names)} edge names for {len(adjacencies)} adjacencies")

    # Labeled nodes and the three splits; every split row is "node class".
    labels = {}
    splits = {}
    for key, pairs in zip(("train", "val", "test"), split_pairs):
        pairs = np.asarray(pairs, dtype=np.int64)
        splits[key] = [int(node) for node in pairs[:, 0]]
        for node, cls in pairs:
            node, cls = int(node), int(cls)
            if not 0 <= node < n:
                sys.exit(f"error: {key} node {node} outside [0, {n})")
            if node in labels and labels[node] != cls:
                sys.exit(f"error: node {node} labeled both {labels[node]} and {cls}")
            labels[node] = cls
    f = max(labels.values()) + 1

    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "meta.json").write_text(
        json.dumps({"name": args.name, "n": n, "d": d, "f": f, "edge_types": names}) + "\n"
    )
    dropped = 0
    for name, adj in zip(names, adjacencies):
        adj = sp.coo_matrix(adj)
        if adj.shape != (n, n):
            sys.exit(f"error: adjacency {name} is {adj.shape}, expected ({n}, {n})")
        keep = adj.row != adj.col
        dropped += int((~keep).sum())
        order = np.lexsort((adj.col[keep], adj.row[keep]))
        with open(args.out / f"edges.{name}.tsv", "w") as fh:
            for src, dst in zip(adj.row[keep][order], adj.col[keep][order]):
                fh.write(f"{src}\t{dst}\n")
    write_fcsr(args.out / "features.csr", features)
    with open(args.out / "labels.tsv", "w") as fh:
        for node in sorted(labels):
            fh.write(f"{node}\t{labels[node]}\n")
    (args.out / "splits.json").write_text(json.dumps(splits) + "\n")

    print(
        f"{args.name}: n={n} d={d} f={f} K={len(names)} "
        f"splits={len(splits['train'])}/{len(splits['val'])}/{len(splits['test'])}"
        + (f" (dropped {dropped} self loops)" if dropped else "")
    )


if __name__ == "__main__":
    main()
