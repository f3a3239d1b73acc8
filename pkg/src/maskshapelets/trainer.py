"""Per-instance AdaGrad training of shapelets, channel masks and the softmax classifier."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Literal

import numpy as np

from . import _kernels
from .dataset import TimeSeriesDataset
from .distance import ACTIVATIONS
from .model import ShapeletModel

log = logging.getLogger(__name__)

MASK_INITS = ("abs_normal", "paper_normal")
RESIDUALS = ("exact", "own_score")


class NumericalError(RuntimeError):
    """Training produced a non-finite loss."""


@dataclass(frozen=True)
class TrainConfig:
    K: int = 20
    L_min: int = 20
    L_max: int = 30
    lam: float = 0.01
    eta: float = 0.1
    max_iter: int = 1000
    activation: Literal["relu", "sigmoid"] = "relu"
    seed: int = 0
    mask_init: Literal["abs_normal", "paper_normal"] = "abs_normal"
    inner_class_updates: bool = False
    adagrad_epsilon: float = 1e-8
    residual: Literal["exact", "own_score"] = "exact"
    masked: bool = True

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if not 1 <= self.L_min <= self.L_max:
            raise ValueError("need 1 <= L_min <= L_max")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")
        if self.adagrad_epsilon <= 0:
            raise ValueError("adagrad_epsilon must be positive")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        if self.mask_init not in MASK_INITS:
            raise ValueError(f"mask_init must be one of {MASK_INITS}")
        if self.residual not in RESIDUALS:
            raise ValueError(f"residual must be one of {RESIDUALS}")


@dataclass
class AdaGradState:
    """Running sums of squared gradients, one per scalar parameter."""

    P: np.ndarray
    mu: np.ndarray
    W: np.ndarray
    W0: np.ndarray

    @classmethod
    def zeros_like(cls, model: ShapeletModel) -> "AdaGradState":
        return cls(np.zeros_like(model.shapelets), np.zeros_like(model.masks),
                   np.zeros_like(model.weights), np.zeros_like(model.bias))


def adagrad_step(G, g, eta: float, eps: float = 1e-8):
    """Return ``(G + g**2, eta / sqrt(G + g**2 + eps))``; the caller moves by ``-step * g``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    G_new = np.asarray(G, dtype=np.float64) + np.square(g)
    return G_new, eta / np.sqrt(G_new + eps)


@dataclass
class IterationRecord:
    iteration: int
    objective: float
    train_error: float
    seconds: float


@dataclass
class MetricsLog:
    """One record per completed iteration.

    ``objective`` and ``train_error`` are accumulated over the iteration, each
    instance contributing the loss and prediction it had just before its own
    update (the usual running estimate for stochastic training).
    """

    records: list[IterationRecord] = field(default_factory=list)
    mask_snapshots: list[tuple[int, np.ndarray]] = field(default_factory=list)

    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.records])

    def write_csv(self, path, wall_time: bool = False) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(CSV_HEADER)
            for r in self.records:
                fh.write(format_record(r, wall_time))


CSV_HEADER = "iter,objective,train_error,seconds\n"


def format_record(r: IterationRecord, wall_time: bool = False) -> str:
    # seconds is left empty unless asked for, so logs from equal seeds are byte-identical
    secs = f"{r.seconds:.3f}" if wall_time else ""
    return f"{r.iteration},{r.objective!r},{r.train_error!r},{secs}\n"


def sample_lengths(cfg: TrainConfig, rng: np.random.Generator, max_allowed: int) -> np.ndarray:
    hi = min(cfg.L_max, max_allowed)
    r = rng.random(cfg.K)
    lengths = cfg.L_min + np.rint(r * (cfg.L_max - cfg.L_min)).astype(np.int64)
    return np.clip(lengths, cfg.L_min, hi)


def init_model(cfg: TrainConfig, ds: TimeSeriesDataset) -> ShapeletModel:
    """Random N(0, 1) initialization from a PCG64 generator seeded with ``cfg.seed``."""
    min_q = int(ds.lengths.min())
    if cfg.L_min > min_q:
        raise ValueError(f"L_min={cfg.L_min} exceeds the shortest series length {min_q}")
    rng = np.random.default_rng(cfg.seed)
    K, V, C = cfg.K, ds.num_channels, ds.num_classes
    lengths = sample_lengths(cfg, rng, min_q)
    P = np.zeros((K, V, int(lengths.max())))
    for k in range(K):
        P[k, :, :lengths[k]] = rng.normal(size=(V, lengths[k]))
    mu = rng.normal(size=(K, V))
    if cfg.mask_init == "abs_normal":
        mu = np.abs(mu)
    W = rng.normal(size=(K, C))
    W0 = rng.normal(size=C)
    return ShapeletModel(P, lengths, mu, W, W0, activation=cfg.activation, masked=cfg.masked,
                         class_labels=ds.class_labels, metadata={"config": asdict(cfg)})


def train(cfg: TrainConfig, ds: TimeSeriesDataset, *, snapshot_every: int = 0,
          on_iteration: Callable[[IterationRecord, ShapeletModel], None] | None = None,
          model: ShapeletModel | None = None) -> tuple[ShapeletModel, MetricsLog]:
    """Run ``cfg.max_iter`` passes over ``ds`` in dataset order.

    ``snapshot_every`` > 0 stores activated masks at iteration 0 and every
    that many iterations.  ``on_iteration(record, model)`` is called after
    each pass with the live (still training) model.
    """
    if model is None:
        model = init_model(cfg, ds)
    else:
        model = model.copy()
    ds = ds.relabel(model.class_labels)
    state = AdaGradState.zeros_like(model)
    metrics = MetricsLog()
    if snapshot_every > 0:
        metrics.mask_snapshots.append((0, model.activated_masks()))

    flat, offsets, lengths, labels = ds.pack()
    P, L, mu, W, W0, act, masked = model.kernel_args()
    mode = _kernels.EXACT if cfg.residual == "exact" else _kernels.OWN_SCORE
    start = time.perf_counter()
    for it in range(1, cfg.max_iter + 1):
        objective, errors, bad = _kernels.train_iteration(
            flat, offsets, lengths, labels, P, L, mu, W, W0,
            state.P, state.mu, state.W, state.W0, act, masked, mode, cfg.inner_class_updates,
            cfg.lam, cfg.eta, cfg.adagrad_epsilon)
        if bad >= 0:
            raise NumericalError(f"non-finite loss at iteration {it}, instance {ds.instances[bad].id!r} "
                                 f"(max |W|={np.abs(W).max():.3g}, max |P|={np.abs(P).max():.3g})")
        rec = IterationRecord(it, float(objective), errors / len(ds), time.perf_counter() - start)
        metrics.records.append(rec)
        if snapshot_every > 0 and it % snapshot_every == 0:
            metrics.mask_snapshots.append((it, model.activated_masks()))
        if on_iteration is not None:
            on_iteration(rec, model)
        if it == 1 or it % 100 == 0:
            log.info("iter %d objective %.6g train error %.4f", it, rec.objective, rec.train_error)
    return model, metrics
