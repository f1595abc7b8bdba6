#!/usr/bin/env python3
"""Generate the bundled stand-in datasets.

The experiment suite targets three small web-page datasets (cornell,
wisconsin, texas) that must be fetched from the public internet. This
repository cannot ship those files, so it bundles synthetic stand-ins with
the same node/feature/class shape: sparse binary bag-of-words features that
are weakly class-informative, imbalanced class sizes, and a sparse homophilous
hyperlink graph whose topology carries real signal (so corrupting it hurts a
topology-trusting classifier).

Regenerate with:  python3 tools/make_standin_data.py [--out data]

Fetching the real datasets instead: tools/fetch_webkb.py (needs network).
"""

import argparse
from pathlib import Path

import numpy as np

LABELS = ("course", "faculty", "project", "staff", "student")

SPECS = {
    # name: (nodes, features, seed)
    "cornell": (183, 1703, 20240101),
    "wisconsin": (251, 1703, 20240202),
    "texas": (183, 1703, 20240303),
}

CLASS_WEIGHTS = (0.18, 0.19, 0.09, 0.08, 0.46)
AVG_DEGREE = 3.0
HOMOPHILY = 0.85  # fraction of edges joining same-class nodes
SIGNATURE_WORDS = 40  # per class, disjoint blocks at the front of the vocabulary
P_SIGNATURE = 0.12  # word activation rate inside the node's class block
P_CONFUSER = 0.030  # activation rate inside other class blocks
P_BACKGROUND = 0.010  # activation rate for the unassigned vocabulary


def draw_labels(rng, n):
    counts = np.floor(np.asarray(CLASS_WEIGHTS) * n).astype(int)
    counts[-1] += n - counts.sum()  # remainder to the dominant class
    labels = np.repeat(np.arange(len(LABELS)), counts)
    return labels[rng.permutation(n)]


def draw_features(rng, labels, n_features):
    n = labels.size
    c = len(LABELS)
    feats = (rng.random((n, n_features)) < P_BACKGROUND).astype(np.int8)
    for cls in range(c):
        block = slice(cls * SIGNATURE_WORDS, (cls + 1) * SIGNATURE_WORDS)
        members = labels == cls
        feats[members, block] = rng.random((members.sum(), SIGNATURE_WORDS)) < P_SIGNATURE
        feats[~members, block] = rng.random(((~members).sum(), SIGNATURE_WORDS)) < P_CONFUSER
    return feats


def draw_edges(rng, labels, n_edges):
    n = labels.size
    by_class = [np.flatnonzero(labels == c) for c in range(len(LABELS))]
    edges = set()
    while len(edges) < n_edges:
        if rng.random() < HOMOPHILY:
            members = by_class[int(rng.integers(len(LABELS)))]
            i, j = rng.choice(members, size=2, replace=False)
        else:
            while True:
                i, j = rng.choice(n, size=2, replace=False)
                if labels[i] != labels[j]:
                    break
        a, b = (int(i), int(j)) if i < j else (int(j), int(i))
        edges.add((a, b))
    return sorted(edges)


def write_dataset(out_dir: Path, name: str):
    n, n_features, seed = SPECS[name]
    rng = np.random.default_rng(seed)
    labels = draw_labels(rng, n)
    feats = draw_features(rng, labels, n_features)
    edges = draw_edges(rng, labels, int(round(AVG_DEGREE * n / 2)))

    d = out_dir / name
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "nodes.tsv", "w") as fh:
        for i in range(n):
            row = " ".join(str(int(v)) for v in feats[i])
            fh.write(f"{i}\t{row}\t{LABELS[labels[i]]}\n")
    with open(d / "edges.tsv", "w") as fh:
        for a, b in edges:
            fh.write(f"{a}\t{b}\n")
    return {"nodes": n, "features": n_features, "classes": len(LABELS), "edges": len(edges)}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data", help="output data root")
    args = parser.parse_args()
    out = Path(args.out)
    stats = {}
    for name in SPECS:
        stats[name] = write_dataset(out, name)
        print(f"{name}: {stats[name]}")
    with open(out / "manifest.txt", "w") as fh:
        fh.write("# dataset statistics recorded at generation time;\n")
        fh.write("# loads are checked against these to catch silent drift\n")
        for name, st in stats.items():
            for key, value in st.items():
                fh.write(f"{name}.{key} = {value}\n")


if __name__ == "__main__":
    main()
