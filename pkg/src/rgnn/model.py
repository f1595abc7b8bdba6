"""Filter-bank convolutional GNN with manual reverse-mode gradients.

Each layer applies a bank of polynomial graph filters with learnable matrix
coefficients,

    X_l = sigma_l( sum_{r=0}^{R-1} S^r X_{l-1} W_{l,r} ),

with ReLU on hidden layers and identity at the output (softmax lives in the
loss). Powers of S are never materialized: S is applied repeatedly to the
propagating feature matrix. `backward` returns exact analytic gradients of
the masked cross-entropy with respect to every coefficient matrix and every
entry of S; the S-gradient is returned raw (unsymmetrized) so it can be
checked coordinate-wise against finite differences.

Everything is float64 and full batch: given a seed, results are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gso import as_matrix

__all__ = [
    "GnnParams",
    "ForwardCache",
    "LabeledTargets",
    "init_params",
    "apply_filter",
    "forward",
    "masked_cross_entropy",
    "backward",
    "save_params",
    "load_params",
]


class GnnParams:
    """Learnable filter coefficients: layers[l][r] has shape (F_{l-1}, F_l)."""

    __slots__ = ("layers",)

    def __init__(self, layers, validate: bool = True):
        layers = tuple(tuple(np.asarray(m, dtype=np.float64) for m in layer) for layer in layers)
        if validate:
            if not layers or any(len(layer) == 0 for layer in layers):
                raise ValueError("need at least one layer with at least one filter tap")
            order = len(layers[0])
            prev_out = None
            for l, layer in enumerate(layers, start=1):
                if len(layer) != order:
                    raise ValueError(f"layer {l} has {len(layer)} taps, expected {order}")
                shapes = {m.shape for m in layer}
                if len(shapes) != 1 or any(m.ndim != 2 for m in layer):
                    raise ValueError(f"layer {l} taps must share one 2-d shape, got {shapes}")
                fin, fout = layer[0].shape
                if prev_out is not None and fin != prev_out:
                    raise ValueError(f"layer {l} input dim {fin} != previous output dim {prev_out}")
                prev_out = fout
                if not all(np.all(np.isfinite(m)) for m in layer):
                    raise ValueError(f"layer {l} has non-finite coefficients")
        object.__setattr__(self, "layers", layers)

    def __setattr__(self, name, value):
        raise AttributeError("GnnParams is immutable")

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def order(self) -> int:
        return len(self.layers[0])

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.layers[0][0].shape[0],) + tuple(layer[0].shape[1] for layer in self.layers)

    def __eq__(self, other):
        return (
            isinstance(other, GnnParams)
            and self.dims == other.dims
            and self.order == other.order
            and all(
                np.array_equal(a, b)
                for la, lb in zip(self.layers, other.layers)
                for a, b in zip(la, lb)
            )
        )

    def __repr__(self):
        return f"GnnParams(dims={self.dims}, order={self.order})"


@dataclass
class ForwardCache:
    """Per-layer intermediates kept by `forward` for the backward pass."""

    layer_inputs: list = field(default_factory=list)  # X_0 .. X_{L-1}
    shifted_inputs: list = field(default_factory=list)  # [l][r] = S^r X_{l-1}
    preactivations: list = field(default_factory=list)  # Z_1 .. Z_L
    activations: list = field(default_factory=list)  # X_1 .. X_L


@dataclass(frozen=True, eq=False)
class LabeledTargets:
    """Node labels plus disjoint train/val/test masks."""

    labels: np.ndarray
    train_mask: np.ndarray
    val_mask: np.ndarray
    test_mask: np.ndarray
    num_classes: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        masks = {}
        for name in ("train_mask", "val_mask", "test_mask"):
            m = np.asarray(getattr(self, name), dtype=bool)
            if m.shape != labels.shape:
                raise ValueError(f"{name} shape {m.shape} != labels shape {labels.shape}")
            masks[name] = m
        overlap = (
            masks["train_mask"] & masks["val_mask"]
            | masks["train_mask"] & masks["test_mask"]
            | masks["val_mask"] & masks["test_mask"]
        )
        if overlap.any():
            raise ValueError("train/val/test masks must be disjoint")
        covered = masks["train_mask"] | masks["val_mask"] | masks["test_mask"]
        if covered.any():
            lab = labels[covered]
            if lab.min() < 0 or lab.max() >= self.num_classes:
                raise ValueError(f"masked labels must lie in [0, {self.num_classes})")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        for name, m in masks.items():
            m.setflags(write=False)
            object.__setattr__(self, name, m)

    @property
    def n(self) -> int:
        return self.labels.shape[0]


def init_params(dims, order: int, seed) -> GnnParams:
    """Uniform[-b, b] init with b = sqrt(6 / (F_in + F_out)) / R.

    The 1/R factor keeps the variance of the R-term filter sum comparable to
    a single-matrix layer. Deterministic given the seed (PCG64).
    """
    dims = tuple(int(d) for d in dims)
    if len(dims) < 2 or any(d < 1 for d in dims) or order < 1:
        raise ValueError(f"invalid dims {dims} or order {order}")
    rng = np.random.default_rng(seed)
    layers = []
    for fin, fout in zip(dims[:-1], dims[1:]):
        bound = math.sqrt(6.0 / (fin + fout)) / order
        layers.append([rng.uniform(-bound, bound, size=(fin, fout)) for _ in range(order)])
    return GnnParams(layers)


def apply_filter(h, s, x) -> np.ndarray:
    """Apply the polynomial filter sum_r h_r S^r to a node signal.

    Computed by iterated shifts x, Sx, S^2 x, ...; S^r is never formed.
    """
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 1 or h.size < 1:
        raise ValueError("filter coefficients must be a nonempty vector")
    smat = as_matrix(s)
    x = np.asarray(x, dtype=np.float64)
    if smat.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: S is {smat.shape}, signal has {x.shape[0]} entries")
    out = h[0] * x
    shifted = x
    for coef in h[1:]:
        shifted = smat @ shifted
        out = out + coef * shifted
    return out


def _shift_ladder(smat: np.ndarray, x: np.ndarray, order: int) -> list[np.ndarray]:
    """[x, Sx, ..., S^(order-1) x] by repeated multiplication."""
    ladder = [x]
    for _ in range(order - 1):
        ladder.append(smat @ ladder[-1])
    return ladder


def forward(x, s, params: GnnParams, shifted_first: list[np.ndarray] | None = None):
    """Run the layer recursion; returns (logits, ForwardCache).

    `shifted_first` optionally supplies the precomputed ladder
    [X, SX, ..., S^(R-1) X] for the first layer: while S is held fixed
    (weight-fitting epochs) the ladder does not change, and reusing it
    avoids the dominant N x N x F products.
    """
    smat = as_matrix(s)
    h = np.asarray(x, dtype=np.float64)
    if h.ndim != 2 or smat.shape[0] != smat.shape[1] or smat.shape[1] != h.shape[0]:
        raise ValueError(f"shape mismatch: features {h.shape}, shift operator {smat.shape}")
    if params.dims[0] != h.shape[1]:
        raise ValueError(f"features have {h.shape[1]} columns, params expect {params.dims[0]}")
    depth = params.depth
    cache = ForwardCache()
    for l, taps in enumerate(params.layers, start=1):
        if l == 1 and shifted_first is not None:
            ladder = list(shifted_first)
            if len(ladder) != len(taps) or any(u.shape != h.shape for u in ladder):
                raise ValueError("shifted_first does not match the first layer")
        else:
            ladder = _shift_ladder(smat, h, len(taps))
        z = ladder[0] @ taps[0]
        for u, w in zip(ladder[1:], taps[1:]):
            z += u @ w
        if not np.all(np.isfinite(z)):
            raise FloatingPointError(f"non-finite preactivation at layer {l}")
        a = np.maximum(z, 0.0) if l < depth else z
        cache.layer_inputs.append(h)
        cache.shifted_inputs.append(ladder)
        cache.preactivations.append(z)
        cache.activations.append(a)
        h = a
    return cache.activations[-1], cache


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def masked_cross_entropy(logits, targets: LabeledTargets, mask) -> float:
    """Mean of -log softmax(logits_i)[y_i] over masked nodes (max-subtracted)."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("empty mask")
    z = np.asarray(logits, dtype=np.float64)[mask]
    y = targets.labels[mask]
    z = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    return float(np.mean(log_norm - z[np.arange(z.shape[0]), y]))


def backward(cache: ForwardCache, params: GnnParams, s, targets: LabeledTargets, mask,
             compute_gso_grad: bool = True):
    """Exact gradients of masked_cross_entropy(forward(...)) w.r.t. params and S.

    Returns (grad_theta, grad_gso) where grad_theta mirrors params.layers and
    grad_gso is the raw N x N gradient (None when compute_gso_grad=False).
    For a layer term S^r X W the S-gradient accumulates
    sum_{k=0}^{r-1} (S^T)^k G (S^{r-1-k} X W)^T with G the upstream gradient.
    """
    smat = as_matrix(s)
    if len(cache.activations) != params.depth:
        raise ValueError("cache does not match params")
    logits = cache.activations[-1]
    mask = np.asarray(mask, dtype=bool)
    m = int(mask.sum())
    if m == 0:
        raise ValueError("empty mask")
    probs = _softmax(logits[mask])
    probs[np.arange(m), targets.labels[mask]] -= 1.0
    grad_out = np.zeros_like(logits)
    grad_out[mask] = probs / m

    st = smat.T
    order = params.order
    grad_theta = [list(range(len(taps))) for taps in params.layers]
    grad_s = np.zeros_like(smat) if compute_gso_grad else None

    g = grad_out  # gradient w.r.t. activations of the current layer
    for l in range(params.depth, 0, -1):
        taps = params.layers[l - 1]
        ladder = cache.shifted_inputs[l - 1]
        gz = g if l == params.depth else g * (cache.preactivations[l - 1] > 0)
        for r in range(order):
            grad_theta[l - 1][r] = ladder[r].T @ gz
        need_input_grad = l > 1
        if need_input_grad or compute_gso_grad:
            back_ladder = _shift_ladder(st, gz, order)  # (S^T)^k gz
            if compute_gso_grad:
                for r in range(1, order):
                    for k in range(r):
                        grad_s += back_ladder[k] @ (ladder[r - 1 - k] @ taps[r]).T
            if need_input_grad:
                g = back_ladder[0] @ taps[0].T
                for r in range(1, order):
                    g += back_ladder[r] @ taps[r].T
    return grad_theta, grad_s


def save_params(params: GnnParams, path) -> None:
    """Text checkpoint: header line "L R", dims line, then one row per line of
    each coefficient matrix in (layer, tap) order, row-major, full precision."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{params.depth} {params.order}\n")
        fh.write(" ".join(str(d) for d in params.dims) + "\n")
        for layer in params.layers:
            for mat in layer:
                for row in mat:
                    fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def load_params(path) -> GnnParams:
    with open(path, encoding="ascii") as fh:
        depth, order = (int(t) for t in fh.readline().split())
        dims = [int(t) for t in fh.readline().split()]
        if len(dims) != depth + 1:
            raise ValueError(f"checkpoint header inconsistent: {depth} layers, {len(dims)} dims")
        layers = []
        for l in range(1, depth + 1):
            fin, fout = dims[l - 1], dims[l]
            taps = []
            for _ in range(order):
                rows = [[float(t) for t in fh.readline().split()] for _ in range(fin)]
                mat = np.array(rows)
                if mat.shape != (fin, fout):
                    raise ValueError(f"checkpoint matrix at layer {l} has shape {mat.shape}")
                taps.append(mat)
            layers.append(taps)
    return GnnParams(layers)
