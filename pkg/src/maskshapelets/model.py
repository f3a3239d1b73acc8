"""Shapelet-distance features feeding a softmax linear classifier."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import _kernels
from .dataset import Instance, TimeSeriesDataset
from .distance import ACTIVATIONS, activate, activation_code

FORMAT_VERSION = 1
PROB_FLOOR = _kernels.PROB_FLOOR


class ModelFormatError(ValueError):
    pass


@dataclass(eq=False)
class ShapeletModel:
    """Parameters of the masked shapelet classifier.

    ``shapelets`` is zero-padded to ``(K, V, max(lengths))``; only
    ``shapelets[k, :, :lengths[k]]`` is meaningful.  ``masks`` holds the raw
    (pre-activation) values.  When ``masked`` is False every activated mask
    is treated as exactly 1 and ``masks`` is ignored.
    """

    shapelets: np.ndarray
    lengths: np.ndarray
    masks: np.ndarray
    weights: np.ndarray
    bias: np.ndarray
    activation: str = "relu"
    masked: bool = True
    class_labels: tuple = ()
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.shapelets = np.ascontiguousarray(self.shapelets, dtype=np.float64)
        self.lengths = np.ascontiguousarray(self.lengths, dtype=np.int64)
        self.masks = np.ascontiguousarray(self.masks, dtype=np.float64)
        self.weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        self.bias = np.ascontiguousarray(self.bias, dtype=np.float64)
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        K, V, Lmax = self.shapelets.shape
        C = self.bias.shape[0]
        if self.lengths.shape != (K,) or self.masks.shape != (K, V) or self.weights.shape != (K, C):
            raise ValueError("inconsistent model dimensions")
        if K and (self.lengths.min() < 1 or self.lengths.max() > Lmax):
            raise ValueError("shapelet lengths out of range")
        if not self.class_labels:
            self.class_labels = tuple(range(1, C + 1))
        self.class_labels = tuple(self.class_labels)
        if len(self.class_labels) != C:
            raise ValueError("class_labels must have one entry per class")

    @property
    def num_shapelets(self) -> int:
        return self.shapelets.shape[0]

    @property
    def num_channels(self) -> int:
        return self.shapelets.shape[1]

    @property
    def num_classes(self) -> int:
        return self.bias.shape[0]

    def shapelet(self, k: int) -> np.ndarray:
        return self.shapelets[k, :, :self.lengths[k]]

    def activated_masks(self) -> np.ndarray:
        if not self.masked:
            return np.ones_like(self.masks)
        return activate(self.activation, self.masks)

    def copy(self) -> "ShapeletModel":
        return ShapeletModel(self.shapelets.copy(), self.lengths.copy(), self.masks.copy(),
                             self.weights.copy(), self.bias.copy(), self.activation, self.masked,
                             self.class_labels, json.loads(json.dumps(self.metadata)))

    def kernel_args(self):
        return (self.shapelets, self.lengths, self.masks, self.weights, self.bias,
                activation_code(self.activation), self.masked)

    def __eq__(self, other):
        if not isinstance(other, ShapeletModel):
            return NotImplemented
        return (self.activation == other.activation and self.masked == other.masked
                and self.class_labels == other.class_labels and self.metadata == other.metadata
                and all(np.array_equal(a, b) for a, b in zip(
                    (self.shapelets, self.lengths, self.masks, self.weights, self.bias),
                    (other.shapelets, other.lengths, other.masks, other.weights, other.bias))))


@dataclass(frozen=True)
class ForwardResult:
    distances: np.ndarray
    scores: np.ndarray
    probabilities: np.ndarray
    argmin_indices: np.ndarray  # 0-based window starts


def _check_instance(model: ShapeletModel, instance: Instance):
    if instance.num_channels != model.num_channels:
        raise ValueError(f"instance {instance.id!r} has {instance.num_channels} channels, "
                         f"model expects {model.num_channels}")
    if model.num_shapelets and instance.length < model.lengths.max():
        raise ValueError(f"instance {instance.id!r} (length {instance.length}) is shorter than "
                         f"the longest shapelet ({model.lengths.max()})")


def forward(model: ShapeletModel, instance: Instance) -> ForwardResult:
    _check_instance(model, instance)
    K = model.num_shapelets
    A = np.empty(K)
    jstar = np.empty(K, dtype=np.int64)
    P, lengths, mu, W, W0, act, masked = model.kernel_args()
    flat = instance.channels.ravel()
    Yhat = _kernels.forward_instance(flat, 0, instance.length, P, lengths, mu, W, W0, act, masked,
                                     A, jstar)
    Z = W0 + A @ W
    return ForwardResult(A, Z, Yhat, jstar)


def class_losses(probabilities: np.ndarray, y_onehot: np.ndarray) -> np.ndarray:
    """Two-sided binary cross-entropy of each one-vs-all target against the softmax output."""
    p = np.asarray(probabilities)
    y = np.asarray(y_onehot)
    return -y * np.log(np.maximum(p, PROB_FLOOR)) - (1 - y) * np.log(np.maximum(1 - p, PROB_FLOOR))


def instance_loss(model: ShapeletModel, fwd: ForwardResult, y_onehot, lam: float,
                  n_instances: int) -> float:
    """Per-instance objective: all C class terms, each carrying lam/(2*I*C) * ||W||^2.

    Summed over the ``n_instances`` training instances this reproduces the
    full objective, including the lam/2 * ||W||^2 penalty.
    """
    C = model.num_classes
    reg = lam / (2.0 * n_instances * C) * float(np.sum(model.weights ** 2))
    return float(class_losses(fwd.probabilities, y_onehot).sum() + C * reg)


def total_objective(model: ShapeletModel, ds: TimeSeriesDataset, Y: np.ndarray, lam: float) -> float:
    """Sum of all per-class losses plus lam/2 * ||W||^2; ``Y`` rows follow ``ds`` order."""
    data = sum(float(class_losses(forward(model, inst).probabilities, Y[i]).sum())
               for i, inst in enumerate(ds.instances))
    return data + 0.5 * lam * float(np.sum(model.weights ** 2))


def predict(model: ShapeletModel, instance: Instance) -> int:
    """Class in 1..C with the largest probability; ties go to the smaller class."""
    return int(np.argmax(forward(model, instance).probabilities)) + 1


def predict_dataset(model: ShapeletModel, ds: TimeSeriesDataset) -> np.ndarray:
    """Predicted labels (1..C, in the model's label order) for every instance."""
    for inst in ds.instances:
        _check_instance(model, inst)
    flat, offsets, lengths, _ = ds.pack()
    return _kernels.predict_all(flat, offsets, lengths, *model.kernel_args()) + 1


def model_to_dict(model: ShapeletModel) -> dict[str, Any]:
    return {
        "version": FORMAT_VERSION,
        "activation": model.activation,
        "masked": model.masked,
        "class_labels": list(model.class_labels),
        "lengths": model.lengths.tolist(),
        "P": [model.shapelet(k).tolist() for k in range(model.num_shapelets)],
        "mu": model.masks.tolist(),
        "W": model.weights.tolist(),
        "W0": model.bias.tolist(),
        "metadata": model.metadata,
    }


def model_from_dict(doc: dict[str, Any]) -> ShapeletModel:
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    if doc.get("version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model version {doc.get('version')!r} "
                               f"(expected {FORMAT_VERSION})")
    required = {"activation", "masked", "class_labels", "lengths", "P", "mu", "W", "W0"}
    missing = required - doc.keys()
    if missing:
        raise ModelFormatError(f"model document missing fields: {sorted(missing)}")
    try:
        lengths = np.array(doc["lengths"], dtype=np.int64)
        mu = np.array(doc["mu"], dtype=np.float64)
        W = np.array(doc["W"], dtype=np.float64)
        W0 = np.array(doc["W0"], dtype=np.float64)
        K = lengths.size
        if len(doc["P"]) != K or mu.ndim != 2 or mu.shape[0] != K:
            raise ModelFormatError("P, mu and lengths disagree on the number of shapelets")
        V = mu.shape[1]
        P = np.zeros((K, V, int(lengths.max()) if K else 0))
        for k, s in enumerate(doc["P"]):
            arr = np.array(s, dtype=np.float64)
            if arr.shape != (V, lengths[k]):
                raise ModelFormatError(f"shapelet {k} has shape {arr.shape}, expected {(V, int(lengths[k]))}")
            P[k, :, :lengths[k]] = arr
        return ShapeletModel(P, lengths, mu, W, W0, doc["activation"], bool(doc["masked"]),
                             tuple(doc["class_labels"]), doc.get("metadata", {}))
    except ModelFormatError:
        raise
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"invalid model document: {exc}") from None


def save_model(model: ShapeletModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model)) + "\n", encoding="utf-8")


def load_model(path) -> ShapeletModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not valid JSON ({exc.msg})") from None
    return model_from_dict(doc)
