"""Masked, channel-averaged minimal sliding-window distance between a shapelet and a series."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import _kernels

Activation = Literal["relu", "sigmoid"]
ACTIVATIONS = ("relu", "sigmoid")
_ACT_CODES = {"relu": _kernels.RELU, "sigmoid": _kernels.SIGMOID}


def activation_code(act: str) -> int:
    try:
        return _ACT_CODES[act]
    except KeyError:
        raise ValueError(f"unknown activation {act!r}; expected one of {ACTIVATIONS}") from None


def activate(act: Activation, x):
    x = np.asarray(x, dtype=np.float64)
    if act == "relu":
        return np.maximum(x, 0.0)
    if act == "sigmoid":
        return 1.0 / (1.0 + np.exp(-x))
    raise ValueError(f"unknown activation {act!r}")


def activate_derivative(act: Activation, x):
    """Derivative of :func:`activate`; the relu derivative at 0 is taken as 0."""
    x = np.asarray(x, dtype=np.float64)
    if act == "relu":
        return (x > 0).astype(np.float64)
    if act == "sigmoid":
        s = activate("sigmoid", x)
        return s * (1.0 - s)
    raise ValueError(f"unknown activation {act!r}")


@dataclass(frozen=True)
class DistanceResult:
    value: float
    argmin_index: int  # 0-based window start


def window_distances(series: np.ndarray, shapelet: np.ndarray, mask_weights: np.ndarray) -> np.ndarray:
    """Masked distance for every window start; ``mask_weights`` are already activated.

    series: (V, Q), shapelet: (V, L), mask_weights: (V,).  Returns shape (Q - L + 1,).
    """
    V, L = shapelet.shape
    if series.shape[0] != V:
        raise ValueError(f"series has {series.shape[0]} channels, shapelet has {V}")
    if L > series.shape[1]:
        raise ValueError(f"shapelet length {L} exceeds series length {series.shape[1]}")
    windows = sliding_window_view(series, L, axis=1)  # (V, J, L)
    per_channel = ((windows - shapelet[:, None, :]) ** 2).sum(axis=2)  # (V, J)
    return (mask_weights[:, None] * per_channel).sum(axis=0) / (V * L)


def masked_min_distance(series: np.ndarray, shapelet: np.ndarray, raw_masks: np.ndarray,
                        act: Activation = "relu") -> DistanceResult:
    """Minimum over windows of the mask-weighted mean squared difference.

    Ties go to the earliest window.  ``series`` may be an :class:`Instance`.
    """
    series = np.asarray(getattr(series, "channels", series), dtype=np.float64)
    shapelet = np.asarray(shapelet, dtype=np.float64)
    d = window_distances(series, shapelet, activate(act, raw_masks))
    j = int(np.argmin(d))
    return DistanceResult(float(d[j]), j)
