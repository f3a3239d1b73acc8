"""Compiled inner loops for distance evaluation and the per-instance AdaGrad step.

Shapelets are packed into a zero-padded ``(K, V, L_max)`` array with a
separate ``lengths`` vector.  A dataset is packed into one flat float array
in which instance ``i`` occupies ``V * Q_i`` contiguous values (channel-major)
starting at ``offsets[i]``; variable-length series need no padding.  No
``fastmath``: results must be bitwise reproducible.
"""

import numpy as np
from numba import njit

RELU = 0
SIGMOID = 1

EXACT = 0
OWN_SCORE = 1

PROB_FLOOR = 1e-12


@njit(cache=True)
def activate_array(mu, act):
    out = np.empty_like(mu)
    flat_in = mu.ravel()
    flat_out = out.ravel()
    for i in range(flat_in.size):
        x = flat_in[i]
        if act == RELU:
            flat_out[i] = x if x > 0.0 else 0.0
        else:
            flat_out[i] = 1.0 / (1.0 + np.exp(-x))
    return out


@njit(cache=True)
def activate_derivative_array(mu, act):
    out = np.empty_like(mu)
    flat_in = mu.ravel()
    flat_out = out.ravel()
    for i in range(flat_in.size):
        x = flat_in[i]
        if act == RELU:
            flat_out[i] = 1.0 if x > 0.0 else 0.0
        else:
            s = 1.0 / (1.0 + np.exp(-x))
            flat_out[i] = s * (1.0 - s)
    return out


@njit(cache=True)
def min_distances(flat, base, Q, P, lengths, fmask, A, jstar):
    """Fill ``A[k]`` and ``jstar[k]`` (0-based) for the instance at ``flat[base:]``."""
    K, V, _ = P.shape
    for k in range(K):
        L = lengths[k]
        J = Q - L + 1
        acc = np.zeros(J)
        part = np.empty(J)
        for v in range(V):
            w = fmask[k, v]
            # exact skip: a zero weight contributes exactly zero
            if w == 0.0:
                continue
            part[:] = 0.0
            row = base + v * Q
            for l in range(L):
                p = P[k, v, l]
                seg = flat[row + l:row + l + J]
                for j in range(J):
                    d = seg[j] - p
                    part[j] += d * d
            for j in range(J):
                acc[j] += w * part[j]
        best = acc[0]
        arg = 0
        for j in range(1, J):
            if acc[j] < best:
                best = acc[j]
                arg = j
        A[k] = best / (V * L)
        jstar[k] = arg


@njit(cache=True)
def softmax(Z):
    m = Z.max()
    e = np.exp(Z - m)
    return e / e.sum()


@njit(cache=True)
def class_loss_terms(Yhat, label):
    """Two-sided cross-entropy summed over the one-vs-all targets."""
    C = Yhat.size
    total = 0.0
    for c in range(C):
        if c == label:
            total -= np.log(max(Yhat[c], PROB_FLOOR))
        else:
            total -= np.log(max(1.0 - Yhat[c], PROB_FLOOR))
    return total


@njit(cache=True)
def residual_matrix(Yhat, label, mode):
    """``R[c, c2]`` is the derivative of the class-``c`` loss term w.r.t. ``Z[c2]``."""
    C = Yhat.size
    R = np.zeros((C, C))
    if mode == OWN_SCORE:
        for c in range(C):
            R[c, c] = Yhat[c] - (1.0 if c == label else 0.0)
        return R
    for c in range(C):
        # h = dL_c/dYhat_c * Yhat_c; 1 - Yhat_c taken as the sum of the other probabilities
        if c == label:
            h = -1.0 if Yhat[c] > PROB_FLOOR else 0.0
        else:
            rest = 0.0
            for c2 in range(C):
                if c2 != c:
                    rest += Yhat[c2]
            h = Yhat[c] / rest if rest > PROB_FLOOR else 0.0
        for c2 in range(C):
            R[c, c2] = h * ((1.0 if c == c2 else 0.0) - Yhat[c2])
    return R


@njit(cache=True)
def forward_instance(flat, base, Q, P, lengths, mu, W, W0, act, masked, A, jstar):
    K, V = mu.shape
    if masked:
        fmask = activate_array(mu, act)
    else:
        fmask = np.ones((K, V))
    min_distances(flat, base, Q, P, lengths, fmask, A, jstar)
    Z = W0.copy()
    for k in range(K):
        for c in range(W.shape[1]):
            Z[c] += A[k] * W[k, c]
    return softmax(Z)


@njit(cache=True)
def class_gradients(flat, base, Q, P, lengths, mu, W, A, jstar, dZ, reg, reg_col, act, masked,
                    dP, dMu, dW, dW0):
    """Accumulate gradients for a residual vector ``dZ`` into the output buffers.

    ``reg`` is the coefficient on ``W`` in the weight gradient; ``reg_col`` < 0
    applies it to every column, otherwise only to that column.
    """
    K, V = mu.shape
    C = W.shape[1]
    if masked:
        fmask = activate_array(mu, act)
        fprime = activate_derivative_array(mu, act)
    else:
        fmask = np.ones((K, V))
        fprime = np.zeros((K, V))
    for k in range(K):
        L = lengths[k]
        j0 = jstar[k]
        dA = 0.0
        for c in range(C):
            dA += dZ[c] * W[k, c]
            dW[k, c] += A[k] * dZ[c]
        if reg_col < 0:
            for c in range(C):
                dW[k, c] += reg * W[k, c]
        else:
            dW[k, reg_col] += reg * W[k, reg_col]
        if dA == 0.0:
            continue
        scale = dA / (V * L)
        for v in range(V):
            w = fmask[k, v]
            row = base + v * Q + j0
            sq = 0.0
            for l in range(L):
                d = flat[row + l] - P[k, v, l]
                sq += d * d
                dP[k, v, l] += -2.0 * scale * w * d
            if masked:
                dMu[k, v] += scale * fprime[k, v] * sq
    for c in range(C):
        dW0[c] += dZ[c]


@njit(cache=True)
def summed_gradients(flat, base, Q, P, lengths, mu, W, A, jstar, R, lam, n_instances, act,
                     masked, mode, dP, dMu, dW, dW0):
    """Gradient of the per-instance objective (all class terms) into zeroed buffers."""
    C = W.shape[1]
    dZ = np.zeros(C)
    for c in range(C):
        for c2 in range(C):
            dZ[c2] += R[c, c2]
    if mode == OWN_SCORE:
        # each class term regularizes only its own weight column
        reg = lam / (n_instances * C)
        for c in range(C):
            col = np.zeros(C)
            col[c] = dZ[c]
            class_gradients(flat, base, Q, P, lengths, mu, W, A, jstar, col, reg, c, act,
                            masked, dP, dMu, dW, dW0)
    else:
        class_gradients(flat, base, Q, P, lengths, mu, W, A, jstar, dZ, lam / n_instances, -1,
                        act, masked, dP, dMu, dW, dW0)


@njit(cache=True)
def instance_gradients(flat, base, Q, P, lengths, mu, W, W0, label, lam, n_instances, act,
                       masked, mode):
    K = mu.shape[0]
    A = np.empty(K)
    jstar = np.empty(K, dtype=np.int64)
    Yhat = forward_instance(flat, base, Q, P, lengths, mu, W, W0, act, masked, A, jstar)
    R = residual_matrix(Yhat, label, mode)
    dP = np.zeros_like(P)
    dMu = np.zeros_like(mu)
    dW = np.zeros_like(W)
    dW0 = np.zeros_like(W0)
    summed_gradients(flat, base, Q, P, lengths, mu, W, A, jstar, R, lam, n_instances, act,
                     masked, mode, dP, dMu, dW, dW0)
    return dP, dMu, dW, dW0, A, jstar, Yhat


@njit(cache=True)
def _adagrad_apply(theta, G, g, eta, eps):
    t = theta.ravel()
    gg = G.ravel()
    gr = g.ravel()
    for i in range(t.size):
        gi = gr[i]
        gg[i] += gi * gi
        t[i] -= eta / np.sqrt(gg[i] + eps) * gi


@njit(cache=True)
def train_iteration(flat, offsets, series_len, labels, P, lengths, mu, W, W0,
                    GP, Gmu, GW, GW0, act, masked, mode, inner, lam, eta, eps):
    """One pass over all instances in dataset order, updating parameters in place.

    Returns ``(objective, n_errors, bad_index)`` where the objective and error
    count are accumulated from each instance's forward pass before its update,
    and ``bad_index`` is the first instance with a non-finite loss (-1 if none).
    """
    K, V = mu.shape
    C = W.shape[1]
    n = offsets.size
    A = np.empty(K)
    jstar = np.empty(K, dtype=np.int64)
    dP = np.zeros_like(P)
    dMu = np.zeros_like(mu)
    dW = np.zeros_like(W)
    dW0 = np.zeros_like(W0)
    objective = 0.0
    errors = 0
    for i in range(n):
        base = offsets[i]
        Q = series_len[i]
        label = labels[i]
        Yhat = forward_instance(flat, base, Q, P, lengths, mu, W, W0, act, masked, A, jstar)
        wsq = 0.0
        for k in range(K):
            for c in range(C):
                wsq += W[k, c] * W[k, c]
        loss = class_loss_terms(Yhat, label) + lam / (2.0 * n) * wsq
        if not np.isfinite(loss):
            return objective, errors, i
        objective += loss
        if np.argmax(Yhat) != label:
            errors += 1
        R = residual_matrix(Yhat, label, mode)
        if inner:
            for c in range(C):
                dP[:] = 0.0
                dMu[:] = 0.0
                dW[:] = 0.0
                dW0[:] = 0.0
                if mode == OWN_SCORE:
                    col = np.zeros(C)
                    col[c] = R[c, c]
                    class_gradients(flat, base, Q, P, lengths, mu, W, A, jstar, col,
                                    lam / (n * C), c, act, masked, dP, dMu, dW, dW0)
                else:
                    class_gradients(flat, base, Q, P, lengths, mu, W, A, jstar, R[c].copy(),
                                    lam / (n * C), -1, act, masked, dP, dMu, dW, dW0)
                _adagrad_apply(P, GP, dP, eta, eps)
                if masked:
                    _adagrad_apply(mu, Gmu, dMu, eta, eps)
                _adagrad_apply(W, GW, dW, eta, eps)
                _adagrad_apply(W0, GW0, dW0, eta, eps)
        else:
            dP[:] = 0.0
            dMu[:] = 0.0
            dW[:] = 0.0
            dW0[:] = 0.0
            summed_gradients(flat, base, Q, P, lengths, mu, W, A, jstar, R, lam, n, act, masked,
                             mode, dP, dMu, dW, dW0)
            _adagrad_apply(P, GP, dP, eta, eps)
            if masked:
                _adagrad_apply(mu, Gmu, dMu, eta, eps)
            _adagrad_apply(W, GW, dW, eta, eps)
            _adagrad_apply(W0, GW0, dW0, eta, eps)
    return objective, errors, -1


@njit(cache=True)
def predict_all(flat, offsets, series_len, P, lengths, mu, W, W0, act, masked):
    K = mu.shape[0]
    n = offsets.size
    out = np.empty(n, dtype=np.int64)
    A = np.empty(K)
    jstar = np.empty(K, dtype=np.int64)
    for i in range(n):
        base = offsets[i]
        Q = series_len[i]
        Yhat = forward_instance(flat, base, Q, P, lengths, mu, W, W0, act, masked, A, jstar)
        out[i] = np.argmax(Yhat)
    return out


@njit(cache=True)
def dtw(a, b):
    """Dependent DTW: one warping path shared by all channels, squared-error cell cost."""
    V, n = a.shape
    m = b.shape[1]
    D = np.full((n + 1, m + 1), np.inf)
    D[0, 0] = 0.0
    for s in range(1, n + 1):
        for t in range(1, m + 1):
            cost = 0.0
            for v in range(V):
                d = a[v, s - 1] - b[v, t - 1]
                cost += d * d
            best = D[s - 1, t - 1]
            if D[s - 1, t] < best:
                best = D[s - 1, t]
            if D[s, t - 1] < best:
                best = D[s, t - 1]
            D[s, t] = cost + best
    return D[n, m]
