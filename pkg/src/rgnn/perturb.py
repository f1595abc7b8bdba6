"""Topology perturbation generators.

Perturbations rewire existing links: k existing undirected edges are removed
and k new ones are created, so the edge count (sparsity) of the graph never
changes. The subset variant confines both removals and additions to node
pairs inside a given subset, modelling localized corruption.

All sampling goes through numpy's PCG64 generator seeded explicitly, so a
(graph, p, seed) triple always reproduces the same perturbation bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gso import Gso

__all__ = [
    "PerturbationSpec",
    "rewire_edges",
    "subset_rewire",
    "apply_perturbation",
]

KINDS = ("uniform-rewire", "subset-rewire")

# An undirected edge change is recorded once as (i, j, delta) with i < j;
# the implied perturbation matrix has delta at (i, j) and (j, i).
EdgeChange = tuple[int, int, float]


@dataclass(frozen=True)
class PerturbationSpec:
    """Declarative description of a perturbation draw."""

    kind: str
    probability: float
    subset: tuple[int, ...] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown perturbation kind {self.kind!r}, expected one of {KINDS}")
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"probability must be in [0, 1], got {self.probability}")
        if self.kind == "subset-rewire" and not self.subset:
            raise ValueError("subset-rewire requires a nonempty subset")
        if self.kind == "uniform-rewire" and self.subset is not None:
            raise ValueError("uniform-rewire takes no subset")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _pair_arrays(n: int, mask: np.ndarray) -> np.ndarray:
    """(m, 2) array of index pairs i < j where mask is true, lexicographic order."""
    iu = np.triu_indices(n, k=1)
    keep = mask[iu]
    return np.column_stack((iu[0][keep], iu[1][keep]))


def _rewire(s: Gso, candidate: np.ndarray, p: float, seed, empty_msg: str | None):
    """Shared rewiring core; `candidate` marks node pairs eligible for change."""
    mat = s.entries
    n = s.n
    present = _pair_arrays(n, (mat != 0.0) & candidate)
    absent = _pair_arrays(n, (mat == 0.0) & candidate)
    if empty_msg is not None and len(present) == 0 and p > 0.0:
        raise ValueError(empty_msg)
    k = _round_half_up(p * len(present))
    if k > len(absent):
        raise ValueError("graph too dense to rewire")
    rng = np.random.default_rng(seed)
    out = np.array(mat)
    changes: list[EdgeChange] = []
    if k > 0:
        removed = present[rng.choice(len(present), size=k, replace=False)]
        added = absent[rng.choice(len(absent), size=k, replace=False)]
        for i, j in removed:
            changes.append((int(i), int(j), -float(mat[i, j])))
            out[i, j] = out[j, i] = 0.0
        for i, j in added:
            changes.append((int(i), int(j), 1.0))
            out[i, j] = out[j, i] = 1.0
    return Gso(out), changes


def rewire_edges(s: Gso, p: float, seed) -> tuple[Gso, list[EdgeChange]]:
    """Rewire round(p * |E|) undirected edges uniformly at random.

    Exactly k = round(p * |E|) existing edges are removed (sampled without
    replacement) and k new edges are added among the currently absent pairs,
    excluding self-loops; rounding is half-up. The edge count is preserved
    exactly. Returns the perturbed operator and the list of edge changes.

    Raises ValueError("graph too dense to rewire") when fewer than k pairs
    are absent.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    candidate = np.ones((s.n, s.n), dtype=bool)
    return _rewire(s, candidate, p, seed, empty_msg=None)


def subset_rewire(s: Gso, subset, p: float, seed) -> tuple[Gso, list[EdgeChange]]:
    """Rewire only edges with both endpoints in `subset`.

    Same contract as `rewire_edges` with |E| replaced by the number of edges
    induced by the subset; entries outside the subset x subset submatrix are
    untouched. With subset = all nodes this reproduces `rewire_edges` draw
    for draw at equal seeds.

    Raises ValueError("no edges to rewire in subset") when the subset induces
    no edges and p > 0.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    nodes = np.unique(np.asarray(list(subset), dtype=int))
    if nodes.size == 0:
        raise ValueError("subset must be nonempty")
    if nodes.min() < 0 or nodes.max() >= s.n:
        raise ValueError(f"subset indices must lie in [0, {s.n})")
    inside = np.zeros(s.n, dtype=bool)
    inside[nodes] = True
    candidate = np.outer(inside, inside)
    return _rewire(s, candidate, p, seed, empty_msg="no edges to rewire in subset")


def apply_perturbation(s: Gso, spec: PerturbationSpec) -> tuple[Gso, list[EdgeChange]]:
    """Dispatch a PerturbationSpec to the matching generator."""
    if spec.kind == "uniform-rewire":
        return rewire_edges(s, spec.probability, spec.seed)
    return subset_rewire(s, spec.subset, spec.probability, spec.seed)
