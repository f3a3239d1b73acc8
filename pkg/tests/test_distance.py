import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from maskshapelets import _kernels
from maskshapelets.distance import activate, activate_derivative, masked_min_distance, window_distances

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


def brute_force(T, S, mu, act):
    """Literal triple loop over windows, channels and offsets."""
    V, Q = T.shape
    L = S.shape[1]
    f = [max(m, 0.0) if act == "relu" else 1.0 / (1.0 + np.exp(-m)) for m in mu]
    best, arg = None, None
    for j in range(Q - L + 1):
        total = 0.0
        for v in range(V):
            total += f[v] * sum((T[v][j + l] - S[v][l]) ** 2 for l in range(L))
        total /= V * L
        if best is None or total < best:
            best, arg = total, j
    return best, arg


@st.composite
def problems(draw):
    V = draw(st.integers(1, 4))
    Q = draw(st.integers(1, 20))
    L = draw(st.integers(1, min(8, Q)))
    T = draw(arrays(np.float64, (V, Q), elements=finite))
    S = draw(arrays(np.float64, (V, L), elements=finite))
    mu = draw(arrays(np.float64, (V,), elements=finite))
    return T, S, mu, draw(st.sampled_from(["relu", "sigmoid"]))


@given(problems())
def test_matches_brute_force(prob):
    T, S, mu, act = prob
    res = masked_min_distance(T, S, mu, act)
    value, arg = brute_force(T, S, mu, act)
    assert res.value == pytest.approx(value, abs=1e-12, rel=1e-12)
    assert res.argmin_index == arg


@given(problems())
def test_kernel_agrees_with_numpy(prob):
    T, S, mu, act = prob
    code = _kernels.RELU if act == "relu" else _kernels.SIGMOID
    fmask = activate(act, mu)[None, :]
    A, jstar = np.empty(1), np.empty(1, dtype=np.int64)
    _kernels.min_distances(T.ravel(), 0, T.shape[1], S[None], np.array([S.shape[1]]), fmask, A, jstar)
    res = masked_min_distance(T, S, mu, act)
    assert A[0] == pytest.approx(res.value, abs=1e-12)
    assert jstar[0] == res.argmin_index


@given(problems())
def test_nonnegative_and_zero_when_shapelet_is_a_window(prob):
    T, S, mu, act = prob
    assert masked_min_distance(T, S, mu, act).value >= 0
    j = T.shape[1] - S.shape[1]
    exact = T[:, j:j + S.shape[1]].copy()
    assert masked_min_distance(T, exact, mu, act).value == 0.0


@given(problems(), st.floats(0.1, 10))
def test_relu_distance_scales_with_masks(prob, scale):
    T, S, mu, _ = prob
    a = masked_min_distance(T, S, mu, "relu")
    b = masked_min_distance(T, S, scale * mu, "relu")
    assert b.value == pytest.approx(scale * a.value, rel=1e-9, abs=1e-12)


def test_all_zero_relu_masks_give_zero_and_first_window():
    rng = np.random.default_rng(0)
    res = masked_min_distance(rng.normal(size=(3, 10)), rng.normal(size=(3, 4)), -np.ones(3))
    assert res.value == 0.0 and res.argmin_index == 0


def test_tie_goes_to_earliest_window():
    T = np.array([[0.0, 1.0, 0.0, 1.0, 0.0]])
    res = masked_min_distance(T, np.array([[0.0, 1.0]]), np.ones(1))
    assert res.argmin_index == 0


def test_single_channel_hand_example():
    # windows [1,2], [2,3], [3,4] against [2,3]: distances 1, 0, 1 (/L=2)
    T = np.array([[1.0, 2.0, 3.0, 4.0]])
    d = window_distances(T, np.array([[2.0, 3.0]]), np.array([1.0]))
    np.testing.assert_allclose(d, [1.0, 0.0, 1.0])


def test_masked_channel_is_ignored():
    T = np.array([[0.0, 0.0, 0.0], [9.0, 9.0, 9.0]])
    S = np.zeros((2, 2))
    assert masked_min_distance(T, S, np.array([1.0, 0.0])).value == 0.0
    assert masked_min_distance(T, S, np.array([1.0, 1.0])).value == pytest.approx(81 * 2 / 4)


def test_shape_errors():
    with pytest.raises(ValueError):
        masked_min_distance(np.zeros((2, 5)), np.zeros((3, 2)), np.ones(3))
    with pytest.raises(ValueError):
        masked_min_distance(np.zeros((2, 3)), np.zeros((2, 4)), np.ones(2))
    with pytest.raises(ValueError):
        activate("tanh", 1.0)


def test_activation_derivatives_match_differences():
    x = np.linspace(-3, 3, 13) + 0.05
    h = 1e-6
    for act in ("relu", "sigmoid"):
        fd = (activate(act, x + h) - activate(act, x - h)) / (2 * h)
        np.testing.assert_allclose(activate_derivative(act, x), fd, atol=1e-6)
    assert activate_derivative("relu", 0.0) == 0.0


def test_every_window_is_considered():
    # exhaustive: plant the exact shapelet at each position in turn
    S = np.array([[5.0, -5.0, 5.0]])
    for j in range(8):
        T = np.zeros((1, 10))
        T[0, j:j + 3] = S[0]
        res = masked_min_distance(T, S, np.ones(1))
        assert (res.value, res.argmin_index) == (0.0, j)
