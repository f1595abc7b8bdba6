"""Evaluation metrics and result aggregation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gso import Gso, as_matrix
from .model import LabeledTargets

__all__ = ["accuracy", "graph_recovery_error", "summarize", "SummaryRow"]


def accuracy(logits, targets: LabeledTargets, mask) -> float:
    """Fraction of masked nodes whose argmax class matches the label.

    Ties go to the lowest class index (numpy argmax takes the first maximum).
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("empty mask")
    pred = np.argmax(np.asarray(logits)[mask], axis=1)
    return float(np.mean(pred == targets.labels[mask]))


def graph_recovery_error(s_hat: Gso, s_true: Gso, eps: float = 1e-12) -> float:
    """Relative squared error of the 0.5-binarized estimate:
    ||bin(S_hat) - S||_F^2 / max(||S||_F^2, eps)."""
    hat = as_matrix(s_hat)
    true = as_matrix(s_true)
    if hat.shape != true.shape:
        raise ValueError(f"dimension mismatch: {hat.shape} vs {true.shape}")
    binarized = (hat >= 0.5).astype(np.float64)
    num = float(((binarized - true) ** 2).sum())
    den = max(float((true ** 2).sum()), eps)
    return num / den


@dataclass(frozen=True)
class SummaryRow:
    dataset: str
    method: str
    pert_level: float
    mean_acc: float
    sd_acc: float
    count: int


def summarize(rows) -> list[SummaryRow]:
    """Per-(dataset, method, level) mean and population sd of test accuracy.

    Rows with non-finite accuracy (failed trials) are excluded from the
    statistics but reflected in `count` staying below the realization count.
    """
    groups: dict[tuple[str, str, float], list[float]] = {}
    for row in rows:
        if math.isfinite(row.test_acc):
            key = (row.dataset, row.method, row.pert_level)
            groups.setdefault(key, []).append(row.test_acc)
    out = []
    for (dataset, method, level), vals in sorted(groups.items()):
        arr = np.asarray(vals)
        out.append(SummaryRow(dataset=dataset, method=method, pert_level=level,
                              mean_acc=float(arr.mean()), sd_acc=float(arr.std()),
                              count=len(vals)))
    return out
