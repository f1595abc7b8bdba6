"""Multi-seed sweep harness over perturbation levels.

A sweep runs `realizations` independent trials at every perturbation level.
Each trial draws a fresh corrupted operator and a fresh weight
initialization; every method listed in the config is trained on the *same*
corrupted operator with the *same* initialization seed, so comparisons are
paired. The robust method ("rgcnh") runs the full alternating minimization;
the baseline ("gcnh") is the identical code path with denoising disabled
(tau_max = 0), training directly on the corrupted graph.

Seeds are derived from the base seed with numpy's SeedSequence spawn keys:

    split    SeedSequence(base_seed, spawn_key=(0,))
    perturb  SeedSequence(base_seed, spawn_key=(1, level_index, realization))
    init     SeedSequence(base_seed, spawn_key=(2, level_index, realization))

which makes every trial reproducible in isolation and collision-free across
the sweep. Results come back in deterministic (level, realization, method)
order no matter how many worker processes run the trials.
"""

from __future__ import annotations

import concurrent.futures
import configparser
import hashlib
import io
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset, data_root, dataset_stats, load_webkb, make_splits, normalize_features
from .gso import Gso
from .metrics import accuracy, graph_recovery_error
from .model import forward
from .optim import Hyperparams, train_robust
from .perturb import _round_half_up, rewire_edges, subset_rewire

__all__ = [
    "ExperimentConfig",
    "ResultRow",
    "run_experiment",
    "write_results_csv",
    "read_results_csv",
    "CSV_COLUMNS",
]

METHODS = ("rgcnh", "gcnh")
CSV_COLUMNS = ("dataset", "method", "pert_kind", "pert_level", "realization",
               "test_acc", "val_acc", "graph_err", "seconds")


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    dataset: str
    kind: str = "uniform-rewire"
    levels: tuple[float, ...] = (0.0, 0.02, 0.05, 0.1, 0.15)
    realizations: int = 50
    methods: tuple[str, ...] = METHODS
    base_seed: int = 0
    subset_probability: float = 0.5  # rewire probability inside the subset
    use_prox_mask: bool = True  # subset-rewire only: pass the subset as prox prior
    split: tuple[float, float, float] = (0.48, 0.32, 0.20)
    hp: Hyperparams = field(default_factory=Hyperparams)
    out: str | None = None
    raw_text: str | None = None  # verbatim config file text, echoed into results

    def __post_init__(self):
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if not self.methods:
            raise ValueError("methods must be nonempty")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}, expected one of {METHODS}")
        if self.kind not in ("uniform-rewire", "subset-rewire"):
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        if any(not 0.0 <= lv <= 1.0 for lv in self.levels):
            raise ValueError("levels must lie in [0, 1]")
        if not 0.0 <= self.subset_probability <= 1.0:
            raise ValueError("subset_probability must lie in [0, 1]")


def _parse_list(text: str, conv):
    return tuple(conv(t.strip()) for t in text.split(",") if t.strip())


def load_config(path) -> ExperimentConfig:
    """Parse an INI config file (sections [experiment], [model], [optim])."""
    with open(path, encoding="utf-8") as fh:
        raw = fh.read()
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.read_string(raw)
    exp = parser["experiment"]
    model = parser["model"] if parser.has_section("model") else {}
    optim = parser["optim"] if parser.has_section("optim") else {}

    def opt_float(section, key):
        return float(section[key]) if key in section else None

    hp = Hyperparams(
        alpha=opt_float(optim, "alpha"),
        lam=opt_float(optim, "lam"),
        eta=float(optim.get("eta", 1e-2)),
        t_max=int(optim.get("t_max", 30)),
        tau_max=int(optim.get("tau_max", 5)),
        step1_epochs=int(optim.get("step1_epochs", 50)),
        step1_lr=float(optim.get("step1_lr", 1e-2)),
        hidden=_parse_list(model.get("hidden", "32"), int),
        order=int(model.get("order", 3)),
    )
    return ExperimentConfig(
        dataset=exp["dataset"],
        kind=exp.get("kind", "uniform-rewire"),
        levels=_parse_list(exp.get("levels", "0, 0.02, 0.05, 0.1, 0.15"), float),
        realizations=int(exp.get("realizations", 50)),
        methods=_parse_list(exp.get("methods", "rgcnh, gcnh"), str),
        base_seed=int(exp.get("base_seed", 0)),
        subset_probability=float(exp.get("subset_probability", 0.5)),
        use_prox_mask=exp.getboolean("use_prox_mask", fallback=True),
        split=_parse_list(exp.get("split", "0.48, 0.32, 0.20"), float),
        out=exp.get("out", None),
        raw_text=raw,
    )


@dataclass
class ResultRow:
    dataset: str
    method: str
    pert_kind: str
    pert_level: float
    realization: int
    test_acc: float
    val_acc: float
    graph_err: float
    seconds: float
    error: str | None = None


def _perturb_for_trial(adjacency: Gso, config: ExperimentConfig, level: float, rng):
    """Draw the corrupted operator (and prox mask, for subset runs) for one trial."""
    n = adjacency.n
    if config.kind == "uniform-rewire":
        if level == 0.0:
            return adjacency, None
        sbar, _ = rewire_edges(adjacency, level, rng)
        return sbar, None
    # subset-rewire: the level is the fraction of nodes whose edges may move
    size = _round_half_up(level * n)
    subset = np.sort(rng.choice(n, size=size, replace=False)) if size else np.empty(0, int)
    mask = None
    if config.use_prox_mask:
        inside = np.zeros(n, dtype=bool)
        inside[subset] = True
        mask = np.outer(inside, inside)
    if size < 2:
        return adjacency, mask
    sub = adjacency.entries[np.ix_(subset, subset)]
    if not np.count_nonzero(np.triu(sub, k=1)):
        # nothing to rewire inside the drawn subset: the trial is unperturbed
        return adjacency, mask
    sbar, _ = subset_rewire(adjacency, subset, config.subset_probability, rng)
    return sbar, mask


def _method_hyperparams(config: ExperimentConfig, method: str, mask) -> Hyperparams:
    hp = config.hp
    if method == "gcnh":
        return replace(hp, tau_max=0, prox_mask=None)
    if config.kind == "subset-rewire" and config.use_prox_mask:
        return replace(hp, prox_mask=mask)
    return hp


def _run_trial(dataset: Dataset, features: np.ndarray, config: ExperimentConfig,
               level_idx: int, realization: int, timing: bool) -> list[ResultRow]:
    level = config.levels[level_idx]
    perturb_rng = np.random.default_rng(
        np.random.SeedSequence(config.base_seed, spawn_key=(1, level_idx, realization)))
    init_seed = np.random.SeedSequence(config.base_seed, spawn_key=(2, level_idx, realization))
    sbar, mask = _perturb_for_trial(dataset.adjacency, config, level, perturb_rng)
    sbar_digest = hashlib.sha256(sbar.entries.tobytes()).hexdigest()
    rows = []
    for method in config.methods:
        # paired design: every method must see the identical corrupted operator
        assert hashlib.sha256(sbar.entries.tobytes()).hexdigest() == sbar_digest
        hp = _method_hyperparams(config, method, mask)
        start = time.perf_counter()
        try:
            result = train_robust(features, dataset.targets, sbar, hp, seed=init_seed)
            logits, _ = forward(features, result.s_hat, result.theta_hat)
            row = ResultRow(
                dataset=dataset.name, method=method, pert_kind=config.kind,
                pert_level=level, realization=realization,
                test_acc=accuracy(logits, dataset.targets, dataset.targets.test_mask),
                val_acc=accuracy(logits, dataset.targets, dataset.targets.val_mask),
                graph_err=graph_recovery_error(result.s_hat, dataset.adjacency),
                seconds=0.0,
            )
        except Exception as exc:  # harness keeps going; the row records the failure
            row = ResultRow(
                dataset=dataset.name, method=method, pert_kind=config.kind,
                pert_level=level, realization=realization,
                test_acc=float("nan"), val_acc=float("nan"), graph_err=float("nan"),
                seconds=0.0, error=f"{type(exc).__name__}: {exc}")
        if timing:
            row.seconds = time.perf_counter() - start
        rows.append(row)
    return rows


_WORKER: dict = {}


def _worker_init(dataset, features, config, timing):
    try:  # keep worker BLAS single-threaded; trials are the parallel unit
        from threadpoolctl import threadpool_limits
        threadpool_limits(1)
    except Exception:
        pass
    _WORKER.update(dataset=dataset, features=features, config=config, timing=timing)


def _worker_run(task):
    level_idx, realization = task
    return _run_trial(_WORKER["dataset"], _WORKER["features"], _WORKER["config"],
                      level_idx, realization, _WORKER["timing"])


def prepare_dataset(config: ExperimentConfig, root=None) -> tuple[Dataset, np.ndarray]:
    """Load the configured dataset, assign splits, row-normalize features."""
    ds = load_webkb(data_root(root), config.dataset)
    split_seed = np.random.SeedSequence(config.base_seed, spawn_key=(0,))
    targets = make_splits(ds.targets, config.split, split_seed)
    ds = Dataset(name=ds.name, features=ds.features, targets=targets, adjacency=ds.adjacency)
    return ds, normalize_features(ds.features)


def run_experiment(config: ExperimentConfig, jobs: int = 1, timing: bool = True,
                   root=None) -> list[ResultRow]:
    """Run the full sweep; returns rows in (level, realization, method) order."""
    dataset, features = prepare_dataset(config, root)
    tasks = [(li, r) for li in range(len(config.levels)) for r in range(config.realizations)]
    if jobs <= 1:
        batches = [_run_trial(dataset, features, config, li, r, timing) for li, r in tasks]
    else:
        with concurrent.futures.ProcessPoolExecutor(
                max_workers=jobs, initializer=_worker_init,
                initargs=(dataset, features, config, timing)) as pool:
            batches = list(pool.map(_worker_run, tasks, chunksize=1))
    return [row for batch in batches for row in batch]


def _format_float(x: float, fmt: str = ".12g") -> str:
    return format(x, fmt) if math.isfinite(x) else "nan"


def results_header(config: ExperimentConfig, dataset: Dataset, timing: bool) -> list[str]:
    lines = ["# rgnn-results v1", "# config:"]
    raw = config.raw_text if config.raw_text is not None else ""
    for line in raw.splitlines():
        lines.append(f"#   {line}")
    stats = dataset_stats(dataset)
    stat_text = " ".join(f"{k}={v}" for k, v in stats.items())
    lines.append(f"# dataset: name={dataset.name} {stat_text}")
    lines.append(f"# timing: {'wall-clock' if timing else 'disabled'}")
    return lines


def write_results_csv(path, rows: list[ResultRow], header_lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(line + "\n")
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join([
                row.dataset, row.method, row.pert_kind,
                _format_float(row.pert_level, ".6g"), str(row.realization),
                _format_float(row.test_acc), _format_float(row.val_acc),
                _format_float(row.graph_err), f"{row.seconds:.3f}",
            ]) + "\n")
            if row.error:
                fh.write(f"# error: {row.error}\n")


def read_results_csv(path_or_buf) -> list[ResultRow]:
    if isinstance(path_or_buf, io.TextIOBase):
        lines = path_or_buf.read().splitlines()
    else:
        with open(path_or_buf, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    rows = []
    saw_header = False
    for line in lines:
        if not line or line.startswith("#"):
            continue
        if not saw_header:
            if line != ",".join(CSV_COLUMNS):
                raise ValueError(f"unexpected CSV header {line!r}")
            saw_header = True
            continue
        parts = line.split(",")
        if len(parts) != len(CSV_COLUMNS):
            raise ValueError(f"malformed CSV row {line!r}")
        rows.append(ResultRow(
            dataset=parts[0], method=parts[1], pert_kind=parts[2],
            pert_level=float(parts[3]), realization=int(parts[4]),
            test_acc=float(parts[5]), val_acc=float(parts[6]),
            graph_err=float(parts[7]), seconds=float(parts[8])))
    if not saw_header:
        raise ValueError("no CSV header found")
    return rows
