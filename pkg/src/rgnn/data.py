"""Loading of the WebKB-style node-classification datasets.

Expected layout under a data root directory:

    <root>/<name>/nodes.tsv   one line per node:
                              node_id <TAB> f_1 ... f_F <TAB> label_string
                              (features may be space- or comma-separated)
    <root>/<name>/edges.tsv   one line per directed edge: src <TAB> dst

The loader drops self-loops, symmetrizes the edge set, binarizes edge
weights to 1 and maps label strings to class indices in sorted order.
`convert_geomgcn_layout` turns the common public distribution of these
datasets (out1_node_feature_label.txt / out1_graph_edges.txt) into this
layout.

The data root is taken from the RGNN_DATA_ROOT environment variable when not
given explicitly; the bundled default is the repository's data/ directory.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .gso import Gso, project_gso
from .model import LabeledTargets

__all__ = [
    "Dataset",
    "data_root",
    "load_webkb",
    "make_splits",
    "normalize_features",
    "dataset_stats",
    "load_manifest",
    "convert_geomgcn_layout",
]

DATA_ROOT_ENV = "RGNN_DATA_ROOT"


@dataclass(frozen=True, eq=False)
class Dataset:
    name: str
    features: np.ndarray  # N x F, float64
    targets: LabeledTargets
    adjacency: Gso

    def __post_init__(self):
        n = self.adjacency.n
        if self.features.shape[0] != n or self.targets.n != n:
            raise ValueError(
                f"inconsistent sizes: {self.features.shape[0]} feature rows, "
                f"{self.targets.n} labels, {n}-node adjacency")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features must be finite")


def data_root(override=None) -> Path:
    """Dataset root directory: explicit override, else $RGNN_DATA_ROOT, else ./data."""
    if override is not None:
        return Path(override)
    return Path(os.environ.get(DATA_ROOT_ENV, "data"))


def _parse_feature_field(text: str) -> list[float]:
    sep = "," if "," in text else None
    return [float(t) for t in text.split(sep)]


def load_webkb(directory, name: str) -> Dataset:
    """Load <directory>/<name>/{nodes.tsv, edges.tsv} into a Dataset.

    All masks start empty; call `make_splits` to assign train/val/test.
    """
    base = Path(directory) / name
    node_path = base / "nodes.tsv"
    edge_path = base / "edges.tsv"
    for p in (node_path, edge_path):
        if not p.exists():
            raise FileNotFoundError(f"missing dataset file {p}")

    rows: dict[int, tuple[list[float], str]] = {}
    with open(node_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{node_path}:{lineno}: expected 3 tab-separated fields, "
                                 f"got {len(parts)}")
            try:
                node_id = int(parts[0])
                feats = _parse_feature_field(parts[1])
            except ValueError as exc:
                raise ValueError(f"{node_path}:{lineno}: {exc}") from None
            label = parts[2].strip()
            if not label:
                raise ValueError(f"{node_path}:{lineno}: empty label")
            if node_id in rows:
                raise ValueError(f"{node_path}:{lineno}: duplicate node id {node_id}")
            rows[node_id] = (feats, label)

    n = len(rows)
    if n == 0:
        raise ValueError(f"{node_path}: no nodes")
    if sorted(rows) != list(range(n)):
        raise ValueError(f"{node_path}: node ids must be exactly 0..{n - 1}")
    width = {len(f) for f, _ in rows.values()}
    if len(width) != 1:
        raise ValueError(f"{node_path}: inconsistent feature lengths {sorted(width)}")

    features = np.array([rows[i][0] for i in range(n)], dtype=np.float64)
    label_names = sorted({lab for _, lab in rows.values()})
    label_index = {lab: c for c, lab in enumerate(label_names)}
    labels = np.array([label_index[rows[i][1]] for i in range(n)], dtype=np.int64)

    adj = np.zeros((n, n))
    edge_lines = 0
    with open(edge_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{edge_path}:{lineno}: expected 'src dst', got {line!r}")
            try:
                src, dst = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise ValueError(f"{edge_path}:{lineno}: {exc}") from None
            if not (0 <= src < n and 0 <= dst < n):
                raise ValueError(f"{edge_path}:{lineno}: node index out of range")
            edge_lines += 1
            if src == dst:
                continue  # self-loops dropped
            adj[src, dst] = 1.0
            adj[dst, src] = 1.0
    if edge_lines == 0:
        warnings.warn(f"{edge_path}: no edges, adjacency is all zero", stacklevel=2)

    empty = np.zeros(n, dtype=bool)
    targets = LabeledTargets(labels=labels, train_mask=empty, val_mask=empty,
                             test_mask=empty, num_classes=len(label_names))
    return Dataset(name=name, features=features, targets=targets, adjacency=Gso(adj))


def make_splits(targets: LabeledTargets, fractions, seed) -> LabeledTargets:
    """Stratified random train/val/test assignment.

    `fractions` is (train, val, test) with positive entries summing to at
    most 1. Within each class, round(f * class_size) nodes go to train and
    val; whatever the rounding leaves goes to test. Deterministic given the
    seed.
    """
    f_train, f_val, f_test = (float(f) for f in fractions)
    if min(f_train, f_val, f_test) < 0 or f_train + f_val + f_test > 1 + 1e-12:
        raise ValueError(f"invalid split fractions {fractions}")
    parts = sum(1 for f in (f_train, f_val, f_test) if f > 0)
    rng = np.random.default_rng(seed)
    n = targets.n
    train = np.zeros(n, dtype=bool)
    val = np.zeros(n, dtype=bool)
    test = np.zeros(n, dtype=bool)
    for c in range(targets.num_classes):
        members = np.flatnonzero(targets.labels == c)
        if members.size < parts:
            raise ValueError(f"class {c} has {members.size} nodes, fewer than {parts} split parts")
        members = members[rng.permutation(members.size)]
        n_train = int(round(f_train * members.size))
        n_val = int(round(f_val * members.size))
        n_train = min(n_train, members.size)
        n_val = min(n_val, members.size - n_train)
        train[members[:n_train]] = True
        val[members[n_train:n_train + n_val]] = True
        if f_test > 0:
            test[members[n_train + n_val:]] = True
    return LabeledTargets(labels=targets.labels, train_mask=train, val_mask=val,
                          test_mask=test, num_classes=targets.num_classes)


def normalize_features(features: np.ndarray) -> np.ndarray:
    """Row-normalize to unit L1 norm; all-zero rows stay zero."""
    feats = np.asarray(features, dtype=np.float64)
    norms = np.abs(feats).sum(axis=1, keepdims=True)
    return np.divide(feats, norms, out=np.array(feats), where=norms != 0)


def dataset_stats(ds: Dataset) -> dict[str, int]:
    return {
        "nodes": ds.adjacency.n,
        "features": ds.features.shape[1],
        "classes": ds.targets.num_classes,
        "edges": ds.adjacency.num_edges(),
    }


def load_manifest(path) -> dict[str, dict[str, int]]:
    """Parse the key-value manifest ("<name>.<stat> = <int>" per line)."""
    out: dict[str, dict[str, int]] = {}
    with open(path, encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            name, _, stat = key.strip().partition(".")
            out.setdefault(name, {})[stat] = int(value)
    return out


def verify_against_manifest(ds: Dataset, manifest: dict[str, dict[str, int]]) -> None:
    """Raise if a freshly loaded dataset drifted from the recorded statistics."""
    if ds.name not in manifest:
        raise ValueError(f"dataset {ds.name!r} not present in manifest")
    recorded = manifest[ds.name]
    actual = dataset_stats(ds)
    if recorded != actual:
        raise ValueError(f"dataset {ds.name!r} drifted: manifest {recorded}, loaded {actual}")


def convert_geomgcn_layout(node_file, edge_file, out_dir) -> None:
    """Convert the common public layout of these datasets to ours.

    The public node file carries "node_id <TAB> comma-separated-features
    <TAB> label" rows (with a header line) and the edge file "src <TAB> dst"
    rows (header line too). Output goes to <out_dir>/{nodes.tsv, edges.tsv}.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def strip_header(lines):
        for lineno, line in enumerate(lines):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if lineno == 0 and not line.split("\t")[0].strip().isdigit():
                continue  # header row
            yield line

    with open(node_file, encoding="utf-8") as src, \
            open(out / "nodes.tsv", "w", encoding="utf-8") as dst:
        for line in strip_header(src):
            node_id, feats, label = line.split("\t")
            dst.write(f"{node_id}\t{feats.replace(',', ' ')}\t{label}\n")
    with open(edge_file, encoding="utf-8") as src, \
            open(out / "edges.tsv", "w", encoding="utf-8") as dst:
        for line in strip_header(src):
            a, b = line.split("\t")
            dst.write(f"{a}\t{b}\n")


def _adjacency_in_feasible_set(ds: Dataset) -> bool:
    """True when the loaded adjacency is a fixed point of the projection."""
    return project_gso(ds.adjacency.entries) == ds.adjacency
