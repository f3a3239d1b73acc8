"""Analytic gradients of the per-instance objective and a finite-difference oracle."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .dataset import Instance
from .distance import activate_derivative, window_distances
from .model import PROB_FLOOR, ForwardResult, ShapeletModel, forward, instance_loss

Residual = Literal["exact", "own_score"]


@dataclass
class GradientSet:
    dP: np.ndarray  # same padded shape as model.shapelets; zero beyond each length
    dMu: np.ndarray
    dW: np.ndarray
    dW0: np.ndarray

    def items(self):
        return (("P", self.dP), ("mu", self.dMu), ("W", self.dW), ("W0", self.dW0))


def residual_matrix(probabilities: np.ndarray, y_onehot: np.ndarray, mode: Residual = "exact") -> np.ndarray:
    """``R[c, c2]`` = derivative of the class-``c`` loss term with respect to score ``c2``.

    ``"exact"`` differentiates the two-sided cross-entropy through the softmax,
    including the cross-class terms.  ``"own_score"`` keeps only the own-score
    partial ``Yhat_c - Y_c`` on the diagonal.
    """
    p = np.asarray(probabilities, dtype=np.float64)
    y = np.asarray(y_onehot, dtype=np.float64)
    C = p.size
    if mode == "own_score":
        return np.diag(p - y)
    if mode != "exact":
        raise ValueError(f"unknown residual mode {mode!r}")
    # 1 - p_c computed as the mass of the other classes
    rest = p.sum() - p
    h = np.where(y > 0, np.where(p > PROB_FLOOR, -1.0, 0.0),
                 np.where(rest > PROB_FLOOR, p / np.where(rest > PROB_FLOOR, rest, 1.0), 0.0))
    return h[:, None] * (np.eye(C) - p[None, :])


def instance_gradients(model: ShapeletModel, instance: Instance, fwd: ForwardResult, y_onehot,
                       lam: float, n_instances: int, residual: Residual = "exact") -> GradientSet:
    """Gradient of :func:`maskshapelets.model.instance_loss`, reusing the forward pass's argmins."""
    T = instance.channels
    K, V = model.masks.shape
    C = model.num_classes
    if T.shape[0] != V or fwd.distances.shape != (K,) or np.asarray(y_onehot).shape != (C,):
        raise ValueError("shape mismatch between model, instance, forward result and targets")
    R = residual_matrix(fwd.probabilities, y_onehot, residual)
    dZ = R.sum(axis=0)
    W = model.weights
    if residual == "exact":
        dW = np.outer(fwd.distances, dZ) + lam / n_instances * W
    else:
        dW = np.outer(fwd.distances, dZ) + lam / (n_instances * C) * W
    dW0 = dZ.copy()
    dA = W @ dZ  # (K,)

    fm = model.activated_masks()
    if model.masked:
        fprime = activate_derivative(model.activation, model.masks)
    else:
        fprime = np.zeros_like(model.masks)
    dP = np.zeros_like(model.shapelets)
    dMu = np.zeros_like(model.masks)
    for k in range(K):
        L = model.lengths[k]
        j = fwd.argmin_indices[k]
        diff = T[:, j:j + L] - model.shapelet(k)  # (V, L)
        scale = dA[k] / (V * L)
        dP[k, :, :L] = -2.0 * scale * fm[k][:, None] * diff
        dMu[k] = scale * fprime[k] * (diff ** 2).sum(axis=1)
    return GradientSet(dP, dMu, dW, dW0)


def _parameter_views(model: ShapeletModel):
    """(name, array, index-iterable) for every free scalar parameter."""
    yield "P", model.shapelets, [(k, v, l) for k in range(model.num_shapelets)
                                 for v in range(model.num_channels) for l in range(model.lengths[k])]
    if model.masked:
        yield "mu", model.masks, list(np.ndindex(model.masks.shape))
    yield "W", model.weights, list(np.ndindex(model.weights.shape))
    yield "W0", model.bias, list(np.ndindex(model.bias.shape))


def finite_difference_oracle(model: ShapeletModel, instance: Instance, y_onehot, lam: float,
                             n_instances: int, step: float = 1e-5) -> GradientSet:
    """Central differences of ``instance_loss``; each probe reruns the whole forward pass."""
    if step <= 0:
        raise ValueError("step must be positive")
    probe = model.copy()
    out = {"P": np.zeros_like(model.shapelets), "mu": np.zeros_like(model.masks),
           "W": np.zeros_like(model.weights), "W0": np.zeros_like(model.bias)}

    def loss():
        return instance_loss(probe, forward(probe, instance), y_onehot, lam, n_instances)

    for name, arr, indices in _parameter_views(probe):
        for idx in indices:
            orig = arr[idx]
            arr[idx] = orig + step
            up = loss()
            arr[idx] = orig - step
            down = loss()
            arr[idx] = orig
            out[name][idx] = (up - down) / (2.0 * step)
    return GradientSet(out["P"], out["mu"], out["W"], out["W0"])


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-6) -> np.ndarray:
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def argmin_margin(model: ShapeletModel, instance: Instance) -> float:
    """Smallest gap between the best and second-best window over all shapelets."""
    fm = model.activated_masks()
    gaps = []
    for k in range(model.num_shapelets):
        d = np.sort(window_distances(instance.channels, model.shapelet(k), fm[k]))
        gaps.append(d[1] - d[0] if d.size > 1 else np.inf)
    return float(min(gaps))


@dataclass
class GradcheckReport:
    trials: int
    tolerance: float
    max_relative_error: float
    worst: tuple  # (trial, parameter name, index, analytic, numeric)
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def random_problem(rng: np.random.Generator, K=2, V=3, C=3, Q=12, L_range=(3, 5),
                   activation="relu", min_abs_mask=1e-2, min_margin=1e-3, masked=True):
    """A random small model, instance and one-hot target away from nondifferentiable points."""
    while True:
        lengths = rng.integers(L_range[0], L_range[1] + 1, size=K)
        P = np.zeros((K, V, lengths.max()))
        for k in range(K):
            P[k, :, :lengths[k]] = rng.normal(size=(V, lengths[k]))
        mu = rng.normal(size=(K, V))
        # keep relu masks away from the kink at 0
        mu = np.where(np.abs(mu) < min_abs_mask, np.where(mu < 0, -10.0, 10.0) * min_abs_mask, mu)
        model = ShapeletModel(P, lengths, mu, rng.normal(size=(K, C)), rng.normal(size=C),
                              activation=activation, masked=masked)
        instance = Instance("probe", 1, rng.normal(size=(V, Q)))
        y = np.zeros(C)
        y[rng.integers(C)] = 1.0
        if argmin_margin(model, instance) > min_margin:
            return model, instance, y


def gradcheck(trials: int = 100, seed: int = 1, tolerance: float = 1e-4, step: float = 1e-5,
              lam: float = 0.01, n_instances: int = 10, residual: Residual = "exact") -> GradcheckReport:
    rng = np.random.default_rng(seed)
    worst_err, worst = -1.0, None
    failures = []
    for t in range(trials):
        activation = "relu" if t % 2 == 0 else "sigmoid"
        model, inst, y = random_problem(rng, activation=activation)
        fwd = forward(model, inst)
        analytic = instance_gradients(model, inst, fwd, y, lam, n_instances, residual)
        numeric = finite_difference_oracle(model, inst, y, lam, n_instances, step)
        for (name, a), (_, b) in zip(analytic.items(), numeric.items()):
            err = relative_error(a, b)
            idx = np.unravel_index(int(np.argmax(err)), err.shape)
            if err[idx] > worst_err:
                worst_err = float(err[idx])
                worst = (t, name, tuple(int(i) for i in idx), float(a[idx]), float(b[idx]))
            for bad in zip(*np.nonzero(err > tolerance)):
                failures.append((t, name, tuple(int(i) for i in bad), float(a[bad]), float(b[bad])))
    return GradcheckReport(trials, tolerance, worst_err, worst, failures)
