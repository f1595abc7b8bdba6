"""Graph shift operator: feasible-set projection, L1 functionals, edge-list IO.

The shift operator is stored dense (the target graphs have a few hundred
nodes at most). A valid operator is symmetric, has a zero diagonal, and has
entries in a box (by default [0, 1]); raw matrices produced by gradient or
prox updates live outside this set until projected back with `project_gso`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConstraintSet",
    "Gso",
    "as_matrix",
    "project_gso",
    "gso_distance_l1",
    "sparsity_penalty",
    "save_edge_list",
    "load_edge_list",
]


@dataclass(frozen=True)
class ConstraintSet:
    """Convex feasible set for shift operators: entrywise box + symmetry + hollow diagonal."""

    lower: float = 0.0
    upper: float = 1.0
    force_symmetric: bool = True
    force_zero_diagonal: bool = True

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")


class Gso:
    """A validated graph shift operator (dense N x N float64, immutable).

    Invariants enforced at construction: square, finite, symmetric,
    zero diagonal, entries in [0, 1].
    """

    __slots__ = ("entries",)

    def __init__(self, entries: np.ndarray):
        mat = np.array(entries, dtype=np.float64)  # defensive copy
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"shift operator must be square, got shape {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise ValueError("shift operator has non-finite entries")
        if not np.array_equal(mat, mat.T):
            raise ValueError("shift operator must be symmetric")
        if np.any(np.diagonal(mat) != 0.0):
            raise ValueError("shift operator must have a zero diagonal")
        if mat.size and (mat.min() < 0.0 or mat.max() > 1.0):
            raise ValueError("shift operator entries must lie in [0, 1]")
        mat.setflags(write=False)
        object.__setattr__(self, "entries", mat)

    def __setattr__(self, name, value):
        raise AttributeError("Gso is immutable")

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def num_edges(self) -> int:
        """Number of undirected edges (nonzero entries above the diagonal)."""
        iu = np.triu_indices(self.n, k=1)
        return int(np.count_nonzero(self.entries[iu]))

    def edge_list(self) -> list[tuple[int, int, float]]:
        """Sorted (i, j, weight) triples with i < j for every nonzero entry."""
        i, j = np.nonzero(np.triu(self.entries, k=1))
        return [(int(a), int(b), float(self.entries[a, b])) for a, b in zip(i, j)]

    def __eq__(self, other):
        return isinstance(other, Gso) and np.array_equal(self.entries, other.entries)

    def __repr__(self):
        return f"Gso(n={self.n}, edges={self.num_edges()})"


def as_matrix(s) -> np.ndarray:
    """Accept a Gso or a plain square array and return the underlying ndarray."""
    if isinstance(s, Gso):
        return s.entries
    return np.asarray(s, dtype=np.float64)


def project_gso(raw: np.ndarray, constraint: ConstraintSet = ConstraintSet()) -> Gso:
    """Euclidean projection of a raw square matrix onto the feasible set.

    Symmetrize by (X + X^T)/2, zero the diagonal, then clamp to the box.
    The composition is the exact projection because the box is entrywise
    separable and invariant under transposition.
    """
    mat = np.array(as_matrix(raw), dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"projection input must be square, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise ValueError("projection input has non-finite entries")
    if constraint.force_symmetric:
        mat = (mat + mat.T) / 2.0
    if constraint.force_zero_diagonal:
        np.fill_diagonal(mat, 0.0)
    off = ~np.eye(mat.shape[0], dtype=bool)
    mat[off] = np.clip(mat[off], constraint.lower, constraint.upper)
    return Gso(mat)


def gso_distance_l1(a, b) -> float:
    """Entrywise L1 distance sum_ij |A_ij - B_ij| over the full matrix."""
    am, bm = as_matrix(a), as_matrix(b)
    if am.shape != bm.shape:
        raise ValueError(f"dimension mismatch: {am.shape} vs {bm.shape}")
    return float(np.abs(am - bm).sum())


def sparsity_penalty(s) -> float:
    """Entrywise L1 norm sum_ij |S_ij| (equals 2|E| for an unweighted graph)."""
    return float(np.abs(as_matrix(s)).sum())


def save_edge_list(s: Gso, path) -> None:
    """Write one "i j w" line per undirected edge (0-based, ASCII decimals).

    A "# nodes: N" comment line is written first so isolated nodes survive a
    round trip.
    """
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# nodes: {s.n}\n")
        for i, j, w in s.edge_list():
            fh.write(f"{i} {j} {w:.17g}\n")


def load_edge_list(path, n: int | None = None) -> Gso:
    """Read an edge-list file written by `save_edge_list` (or any "i j w" file).

    Node count is taken from the "# nodes:" header when present, from `n`
    otherwise, falling back to max index + 1. Entries are symmetrized and the
    result is validated.
    """
    triples = []
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "nodes:" in line and n is None:
                    n = int(line.split("nodes:")[1])
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise ValueError(f"{path}:{lineno}: expected 'i j [w]', got {line!r}")
            i, j = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
            triples.append((i, j, w))
    if n is None:
        n = 1 + max((max(i, j) for i, j, _ in triples), default=-1)
    mat = np.zeros((n, n))
    for i, j, w in triples:
        mat[i, j] = w
        mat[j, i] = w
    return Gso(mat)
