"""Joint weight fitting and graph denoising by alternating minimization.

The training objective couples the node-classification fit with two
nonsmooth graph terms,

    min_{W, S in C}  CE(f_W(X | S), y_train) + alpha * ||S - S_obs||_1
                                             + lam   * ||S||_1,

where S_obs is the observed (possibly corrupted) topology. Each outer
iteration alternates two steps:

  step 1  fit the network weights on the current S by full-batch gradient
          descent with momentum (warm-started across outer iterations);
  step 2  denoise S with the weights frozen: a gradient step on the smooth
          loss, the L1 soft-threshold prox, the shifted soft-threshold prox
          pulling entries back toward S_obs, then projection onto the
          feasible set -- repeated tau_max times.

With tau_max = 0 step 2 disappears and the loop reduces bit for bit to
classical training on S_obs (the non-robust baseline). Prox thresholds scale
with the step size (eta*lam, eta*alpha), the standard proximal-gradient
scaling. An optional boolean mask restricts the shifted prox to a submatrix,
encoding prior knowledge that only those entries may be corrupted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gso import ConstraintSet, Gso, as_matrix, gso_distance_l1, project_gso, sparsity_penalty
from .model import (
    GnnParams,
    LabeledTargets,
    _shift_ladder,
    backward,
    forward,
    init_params,
    masked_cross_entropy,
)

__all__ = [
    "Hyperparams",
    "TraceRow",
    "TrainResult",
    "prox_l1",
    "prox_shifted_l1",
    "fit_theta_step",
    "denoise_gso_step",
    "train_robust",
    "objective",
    "save_trace",
]

MOMENTUM = 0.9


@dataclass(frozen=True, eq=False)
class Hyperparams:
    """Knobs of the alternating minimization.

    alpha/lam default to None, resolved at training time to 1e-3 * N
    (scale-aware default). prox_mask, when given, must be a symmetric boolean
    N x N array marking the entries the shifted prox is applied to.
    """

    alpha: float | None = None
    lam: float | None = None
    eta: float = 1e-2
    t_max: int = 30
    tau_max: int = 5
    step1_epochs: int = 50
    step1_lr: float = 1e-2
    hidden: tuple[int, ...] = (32,)
    order: int = 3
    prox_mask: np.ndarray | None = None
    constraint: ConstraintSet = field(default_factory=ConstraintSet)

    def __post_init__(self):
        if self.alpha is not None and self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.lam is not None and self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        if self.t_max < 1:
            raise ValueError("t_max must be >= 1")
        if self.tau_max < 0:
            raise ValueError("tau_max must be >= 0")
        if self.step1_epochs < 0:
            raise ValueError("step1_epochs must be >= 0")
        if self.step1_lr <= 0:
            raise ValueError("step1_lr must be > 0")
        if self.order < 1 or any(h < 1 for h in self.hidden):
            raise ValueError("order and hidden widths must be >= 1")
        if self.prox_mask is not None:
            m = np.asarray(self.prox_mask, dtype=bool)
            if m.ndim != 2 or m.shape[0] != m.shape[1] or not np.array_equal(m, m.T):
                raise ValueError("prox_mask must be a symmetric square boolean matrix")
            m.setflags(write=False)
            object.__setattr__(self, "prox_mask", m)

    def resolve(self, n: int) -> "Hyperparams":
        """Fill scale-aware defaults for an N-node problem."""
        if self.alpha is not None and self.lam is not None:
            return self
        alpha = 1e-3 * n if self.alpha is None else self.alpha
        lam = 1e-3 * n if self.lam is None else self.lam
        return _replace(self, alpha=alpha, lam=lam)


def _replace(hp: Hyperparams, **kw) -> Hyperparams:
    vals = {f: getattr(hp, f) for f in Hyperparams.__dataclass_fields__}
    vals.update(kw)
    return Hyperparams(**vals)


@dataclass(frozen=True)
class TraceRow:
    t: int
    total: float
    fit: float
    dist: float
    sparsity: float
    train_acc: float
    val_acc: float


@dataclass
class TrainResult:
    theta_hat: GnnParams
    s_hat: Gso
    loss_trace: list[float]  # objective value per outer iteration
    objective_terms: tuple[float, float, float]  # final (fit, alpha*dist, lam*sparsity)
    trace: list[TraceRow]


def prox_l1(raw: np.ndarray, threshold: float) -> np.ndarray:
    """Entrywise soft threshold sign(x) * max(|x| - threshold, 0)."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    x = np.asarray(raw, dtype=np.float64)
    return np.sign(x) * np.maximum(np.abs(x) - threshold, 0.0)


def prox_shifted_l1(raw: np.ndarray, sbar, threshold: float,
                    mask: np.ndarray | None = None) -> np.ndarray:
    """Shifted soft threshold: entries within `threshold` of sbar snap to sbar,
    entries outside move `threshold` toward it.

    Entrywise: x - threshold where x - sbar > threshold, x + threshold where
    x - sbar < -threshold, sbar otherwise; a tie |x - sbar| == threshold lands
    on the sbar branch. Where `mask` is false the input passes through
    unchanged.
    """
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    x = np.asarray(raw, dtype=np.float64)
    sb = as_matrix(sbar)
    if x.shape != sb.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {sb.shape}")
    diff = x - sb
    out = np.where(diff > threshold, x - threshold,
                   np.where(diff < -threshold, x + threshold, sb))
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != x.shape:
            raise ValueError(f"mask shape {mask.shape} does not match {x.shape}")
        out = np.where(mask, out, x)
    return out


def _zeros_like_layers(params: GnnParams):
    return [[np.zeros_like(m) for m in layer] for layer in params.layers]


def fit_theta_step(theta: GnnParams, s_t: Gso, x, targets: LabeledTargets, hp: Hyperparams,
                   velocity=None):
    """One weight-fitting pass: step1_epochs full-batch momentum-GD updates of
    the masked cross-entropy at fixed S, warm-started from theta.

    Returns (updated GnnParams, momentum state). Passing the returned
    velocity back in continues the optimizer trajectory seamlessly, so
    repeated calls are identical to one long run.
    """
    xmat = np.asarray(x, dtype=np.float64)
    smat = as_matrix(s_t)
    layers = [[np.array(m) for m in layer] for layer in theta.layers]
    if velocity is None:
        velocity = _zeros_like_layers(theta)
    # S is fixed for every epoch: build the first-layer shift ladder once.
    ladder = _shift_ladder(smat, xmat, theta.order)
    for epoch in range(hp.step1_epochs):
        params = GnnParams(layers, validate=False)
        try:
            logits, cache = forward(xmat, smat, params, shifted_first=ladder)
            loss = masked_cross_entropy(logits, targets, targets.train_mask)
        except FloatingPointError as exc:
            raise FloatingPointError(f"training diverged at epoch {epoch}: {exc}") from None
        if not np.isfinite(loss):
            raise FloatingPointError(f"training diverged at epoch {epoch}: non-finite loss")
        grads, _ = backward(cache, params, smat, targets, targets.train_mask,
                            compute_gso_grad=False)
        for layer, vlayer, glayer in zip(layers, velocity, grads):
            for r in range(len(layer)):
                vlayer[r] = MOMENTUM * vlayer[r] - hp.step1_lr * glayer[r]
                layer[r] = layer[r] + vlayer[r]
    return GnnParams(layers, validate=False), velocity


def denoise_gso_step(s_t: Gso, sbar: Gso, x, theta: GnnParams, targets: LabeledTargets,
                     hp: Hyperparams) -> Gso:
    """One graph-denoising pass: tau_max projected proximal iterations at
    fixed weights.

    Each inner iteration takes a gradient step on the smooth training loss,
    applies the L1 prox (threshold eta*lam), the shifted prox toward the
    observed operator (threshold eta*alpha, optionally masked), and projects
    onto the feasible set. Projection re-validates the iterate every pass.
    """
    hp = hp.resolve(s_t.n)
    xmat = np.asarray(x, dtype=np.float64)
    current = s_t
    for tau in range(hp.tau_max):
        logits, cache = forward(xmat, current, theta)
        _, grad_s = backward(cache, theta, current, targets, targets.train_mask)
        if not np.all(np.isfinite(grad_s)):
            raise FloatingPointError(f"non-finite graph gradient at inner iteration {tau}")
        stepped = current.entries - hp.eta * grad_s
        thresholded = prox_l1(stepped, hp.eta * hp.lam)
        pulled = prox_shifted_l1(thresholded, sbar, hp.eta * hp.alpha, hp.prox_mask)
        current = project_gso(pulled, hp.constraint)
    return current


def objective(theta: GnnParams, s, sbar, x, targets: LabeledTargets, hp: Hyperparams):
    """Full objective value and its three addends (fit, alpha*dist, lam*sparsity)."""
    hp = hp.resolve(as_matrix(s).shape[0])
    logits, _ = forward(x, s, theta)
    fit = masked_cross_entropy(logits, targets, targets.train_mask)
    dist = hp.alpha * gso_distance_l1(s, sbar)
    spars = hp.lam * sparsity_penalty(s)
    return fit + dist + spars, fit, dist, spars


def _masked_accuracy(logits: np.ndarray, targets: LabeledTargets, mask: np.ndarray) -> float:
    m = np.asarray(mask, dtype=bool)
    if not m.any():
        return float("nan")
    pred = np.argmax(logits[m], axis=1)
    return float(np.mean(pred == targets.labels[m]))


def train_robust(x, targets: LabeledTargets, sbar: Gso, hp: Hyperparams, seed) -> TrainResult:
    """Alternating minimization over (weights, shift operator).

    Initializes S to the projection of the observed operator and the weights
    from `init_params(seed)`, then runs t_max outer iterations of weight
    fitting followed by graph denoising, recording the full objective after
    each outer iteration. hp.tau_max = 0 skips denoising entirely and yields
    classical training on the observed graph.
    """
    xmat = np.asarray(x, dtype=np.float64)
    hp = hp.resolve(sbar.n)
    dims = (xmat.shape[1],) + tuple(hp.hidden) + (targets.num_classes,)
    theta = init_params(dims, hp.order, seed)
    s_cur = project_gso(sbar.entries, hp.constraint)
    velocity = None
    loss_trace: list[float] = []
    trace: list[TraceRow] = []
    terms = (float("nan"),) * 3
    for t in range(hp.t_max):
        theta, velocity = fit_theta_step(theta, s_cur, xmat, targets, hp, velocity)
        if hp.tau_max > 0:
            s_cur = denoise_gso_step(s_cur, sbar, xmat, theta, targets, hp)
        logits, _ = forward(xmat, s_cur, theta)
        fit = masked_cross_entropy(logits, targets, targets.train_mask)
        dist = hp.alpha * gso_distance_l1(s_cur, sbar)
        spars = hp.lam * sparsity_penalty(s_cur)
        total = fit + dist + spars
        trace.append(TraceRow(
            t=t, total=total, fit=fit, dist=dist, sparsity=spars,
            train_acc=_masked_accuracy(logits, targets, targets.train_mask),
            val_acc=_masked_accuracy(logits, targets, targets.val_mask),
        ))
        loss_trace.append(total)
        terms = (fit, dist, spars)
    return TrainResult(theta_hat=theta, s_hat=s_cur, loss_trace=loss_trace,
                       objective_terms=terms, trace=trace)


def save_trace(result: TrainResult, path) -> None:
    """Plain-text trace: one "t total fit dist sparsity train_acc val_acc" line
    per outer iteration."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("# t total fit dist sparsity train_acc val_acc\n")
        for row in result.trace:
            fh.write(f"{row.t} {row.total:.12g} {row.fit:.12g} {row.dist:.12g} "
                     f"{row.sparsity:.12g} {row.train_acc:.12g} {row.val_acc:.12g}\n")
