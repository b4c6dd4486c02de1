#!/usr/bin/env python3
"""Convert the raw Planetoid files (ind.<name>.*) into a bundle directory.

Usage: planetoid_to_bundle.py RAW_DIR NAME OUT_DIR

RAW_DIR holds ind.NAME.{x,y,tx,ty,allx,ally,graph,test.index}. The bundle
gets edges.csv, features.bin and labels.csv. Without a splits.json the CLI
applies the standard class partition for cora and citeseer.

Needs numpy and scipy.
"""

import argparse
import pickle
import struct
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp


def load(raw: Path, name: str, part: str):
    with open(raw / f"ind.{name}.{part}", "rb") as f:
        return pickle.load(f, encoding="latin1")


def dense(m):
    return m.toarray() if sp.issparse(m) else np.asarray(m)


def convert(raw: Path, name: str, out: Path) -> None:
    allx, ally, tx, ty, graph = (load(raw, name, p) for p in ("allx", "ally", "tx", "ty", "graph"))
    test_index = [int(line) for line in (raw / f"ind.{name}.test.index").read_text().split()]
    allx, tx, ally, ty = dense(allx), dense(tx), np.asarray(ally), np.asarray(ty)

    # Test rows are placed at their node ids. CiteSeer has ids in that range
    # with no features; they keep zero rows and label 0.
    lo, hi = min(test_index), max(test_index)
    tx_full = np.zeros((hi - lo + 1, tx.shape[1]), dtype=tx.dtype)
    ty_full = np.zeros((hi - lo + 1, ty.shape[1]), dtype=ty.dtype)
    tx_full[np.asarray(test_index) - lo] = tx
    ty_full[np.asarray(test_index) - lo] = ty

    features = np.vstack([allx, tx_full]).astype(np.float32)
    onehot = np.vstack([ally, ty_full])
    n = features.shape[0]
    labels = onehot.argmax(axis=1)

    edges = set()
    for u, neighbours in graph.items():
        for v in neighbours:
            if u != v and u < n and v < n:
                edges.add((min(u, v), max(u, v)))

    out.mkdir(parents=True, exist_ok=True)
    with open(out / "edges.csv", "w") as f:
        f.write("src,dst\n")
        f.writelines(f"{u},{v}\n" for u, v in sorted(edges))
    with open(out / "labels.csv", "w") as f:
        f.writelines(f"{y}\n" for y in labels)
    with open(out / "features.bin", "wb") as f:
        f.write(b"FSNB" + struct.pack("<III", n, features.shape[1], 0))
        f.write(features.astype("<f4").tobytes())
    print(f"{name}: {n} nodes, {len(edges)} edges, {features.shape[1]} features, "
          f"{labels.max() + 1} classes -> {out}", file=sys.stderr)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("raw_dir", type=Path)
    ap.add_argument("name")
    ap.add_argument("out_dir", type=Path)
    a = ap.parse_args()
    convert(a.raw_dir, a.name, a.out_dir)


if __name__ == "__main__":
    main()
