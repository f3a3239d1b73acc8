import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from maskshapelets.dataset import Instance, TimeSeriesDataset, one_hot
from maskshapelets.distance import masked_min_distance
from maskshapelets.gradients import random_problem
from maskshapelets.model import (FORMAT_VERSION, ModelFormatError, ShapeletModel, class_losses, forward,
                                 instance_loss, load_model, model_to_dict, predict, predict_dataset,
                                 save_model, total_objective)

from conftest import random_dataset


def small_model(rng, K=3, V=3, C=3, L=(3, 5), activation="relu", masked=True):
    model, _, _ = random_problem(rng, K=K, V=V, C=C, L_range=L, activation=activation,
                                 min_margin=0.0, masked=masked)
    return model


@given(st.integers(0, 2**32 - 1), st.sampled_from(["relu", "sigmoid"]))
def test_forward_matches_definition(seed, act):
    rng = np.random.default_rng(seed)
    model = small_model(rng, activation=act)
    inst = Instance("x", 1, rng.normal(size=(3, 12)))
    fwd = forward(model, inst)
    for k in range(model.num_shapelets):
        d = masked_min_distance(inst, model.shapelet(k), model.masks[k], act)
        assert fwd.distances[k] == pytest.approx(d.value, abs=1e-12)
        assert fwd.argmin_indices[k] == d.argmin_index
    Z = model.bias + fwd.distances @ model.weights
    np.testing.assert_allclose(fwd.scores, Z, atol=1e-12)
    e = np.exp(Z - Z.max())
    np.testing.assert_allclose(fwd.probabilities, e / e.sum(), atol=1e-15)


def test_probabilities_sum_to_one_with_extreme_scores(rng):
    model = small_model(rng)
    model.weights *= 1e4
    inst = Instance("x", 1, 50 * rng.normal(size=(3, 12)))
    p = forward(model, inst).probabilities
    assert np.all(np.isfinite(p)) and abs(p.sum() - 1) <= 1e-12


def test_unmasked_model_ignores_mask_values(rng):
    model = small_model(rng, masked=False)
    inst = Instance("x", 1, rng.normal(size=(3, 12)))
    before = forward(model, inst)
    model.masks[:] = rng.normal(size=model.masks.shape) * 100
    after = forward(model, inst)
    assert np.array_equal(before.distances, after.distances)
    for k in range(model.num_shapelets):
        assert after.distances[k] == pytest.approx(
            masked_min_distance(inst, model.shapelet(k), np.ones(3)).value, abs=1e-12)


def test_class_losses_hand_values():
    p = np.array([0.7, 0.2, 0.1])
    y = np.array([1.0, 0.0, 0.0])
    np.testing.assert_allclose(class_losses(p, y), -np.log([0.7, 0.8, 0.9]))
    assert np.isfinite(class_losses(np.array([1.0, 0.0]), np.array([0.0, 1.0]))).all()


@given(st.integers(0, 2**32 - 1), st.floats(0, 1))
def test_per_instance_losses_add_up_to_the_objective(seed, lam):
    rng = np.random.default_rng(seed)
    model = small_model(rng)
    ds = random_dataset(rng, n=7, Q=10)
    Y = one_hot(ds)
    parts = sum(instance_loss(model, forward(model, inst), Y[i], lam, len(ds))
                for i, inst in enumerate(ds.instances))
    assert parts == pytest.approx(total_objective(model, ds, Y, lam), abs=1e-9)


def test_predict_tie_goes_to_smaller_class(rng):
    model = small_model(rng)
    model.weights[:] = 0.0
    model.bias[:] = [0.5, 2.0, 2.0]
    assert predict(model, Instance("x", 1, rng.normal(size=(3, 12)))) == 2


def test_predict_dataset_agrees_with_predict(rng):
    model = small_model(rng)
    ds = random_dataset(rng, n=20, Q=14)
    assert predict_dataset(model, ds).tolist() == [predict(model, i) for i in ds.instances]


def test_variable_length_instances(rng):
    model = small_model(rng)
    ds = TimeSeriesDataset.from_records([("a", 1, rng.normal(size=(3, 6))), ("b", 2, rng.normal(size=(3, 20)))])
    assert predict_dataset(model, ds).tolist() == [predict(model, i) for i in ds.instances]


def test_shape_checks(rng):
    model = small_model(rng)
    with pytest.raises(ValueError, match="channels"):
        forward(model, Instance("x", 1, np.zeros((2, 12))))
    with pytest.raises(ValueError, match="shorter"):
        forward(model, Instance("x", 1, np.zeros((3, 2))))
    with pytest.raises(ValueError):
        ShapeletModel(np.zeros((2, 3, 4)), [4, 4], np.zeros((2, 2)), np.zeros((2, 3)), np.zeros(3))


def test_save_load_round_trip(tmp_path, rng):
    model = small_model(rng)
    model.class_labels = ("run", "walk", "sit")
    model.metadata = {"config": {"K": 3}}
    save_model(model, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    assert back == model
    save_model(back, tmp_path / "n.json")
    assert (tmp_path / "m.json").read_bytes() == (tmp_path / "n.json").read_bytes()


@pytest.mark.parametrize("mutate, message", [
    (lambda d: d.update(version=FORMAT_VERSION + 1), "version"),
    (lambda d: d.pop("W"), "missing"),
    (lambda d: d["P"].pop(), "disagree"),
    (lambda d: d["P"][0].pop(), "shape"),
    (lambda d: d.update(activation="tanh"), "activation"),
])
def test_corrupt_model_documents(tmp_path, rng, mutate, message):
    doc = model_to_dict(small_model(rng))
    mutate(doc)
    (tmp_path / "m.json").write_text(json.dumps(doc))
    with pytest.raises(ModelFormatError, match=message):
        load_model(tmp_path / "m.json")


def test_non_json_model(tmp_path):
    (tmp_path / "m.json").write_text("nope")
    with pytest.raises(ModelFormatError):
        load_model(tmp_path / "m.json")
