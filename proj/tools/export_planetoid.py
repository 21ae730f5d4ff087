#!/usr/bin/env python3
"""Export a Planetoid dump (ind.<name>.x, .y, .tx, .ty, .allx, .ally, .graph,
.test.index) to the nodemixup dataset layout with the public split:
labeled = first 20 per class block (ids 0..len(y)-1), valid = next 500,
test = the listed test indices.

Best effort. Test ids missing from the dump (citeseer) get zero features and
are left out of every split.
"""

import argparse
import json
import pickle
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp


def load(raw: Path, name: str, part: str):
    with open(raw / f"ind.{name}.{part}", "rb") as f:
        return pickle.load(f, encoding="latin1")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--raw", required=True, type=Path, help="directory holding ind.<name>.* files")
    ap.add_argument("--name", default="cora")
    ap.add_argument("--out", required=True, type=Path)
    ap.add_argument("--valid", type=int, default=500)
    args = ap.parse_args()

    x, y, tx, ty, allx, ally, graph = (load(args.raw, args.name, p) for p in ("x", "y", "tx", "ty", "allx", "ally", "graph"))
    test_index = [int(line) for line in (args.raw / f"ind.{args.name}.test.index").read_text().split()]
    test_sorted = sorted(test_index)

    # Pad the test block when ids are missing from the dump.
    lo, hi = test_sorted[0], test_sorted[-1]
    full = hi - lo + 1
    if full != tx.shape[0]:
        tx_ext = sp.lil_matrix((full, tx.shape[1]))
        ty_ext = np.zeros((full, ty.shape[1]))
        tx_ext[np.array(test_sorted) - lo, :] = tx
        ty_ext[np.array(test_sorted) - lo, :] = ty
        tx, ty = tx_ext, ty_ext

    features = sp.vstack((allx, tx)).tolil()
    labels_1h = np.vstack((ally, ty))
    features[test_index, :] = features[test_sorted, :]
    labels_1h[test_index, :] = labels_1h[test_sorted, :]
    features = np.asarray(features.todense())
    n = features.shape[0]

    has_label = labels_1h.sum(axis=1) > 0
    labels = labels_1h.argmax(axis=1)

    edges = set()
    for u, nbrs in graph.items():
        for v in nbrs:
            if u != v and u < n and v < n:
                edges.add((min(u, v), max(u, v)))

    labeled = list(range(len(y)))
    valid = list(range(len(y), len(y) + args.valid))
    test = [i for i in test_sorted if has_label[i]]

    args.out.mkdir(parents=True, exist_ok=False)
    np.savetxt(args.out / "features.tsv", features, fmt="%.17g", delimiter="\t")
    (args.out / "labels.tsv").write_text("".join(f"{int(l)}\n" for l in labels))
    (args.out / "edges.tsv").write_text("".join(f"{u}\t{v}\n" for u, v in sorted(edges)))
    split = {"labeled": labeled, "valid": valid, "test": test, "num_classes": int(labels_1h.shape[1])}
    (args.out / "split.json").write_text(json.dumps(split) + "\n")
    print(f"nodes={n} edges={len(edges)} classes={split['num_classes']} features={features.shape[1]} "
          f"labeled={len(labeled)} valid={len(valid)} test={len(test)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
