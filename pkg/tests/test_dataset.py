import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from maskshapelets.dataset import (DatasetError, Instance, TimeSeriesDataset, load_dataset, one_hot,
                                   save_dataset, stratified_kfold, znormalize_channels)

from conftest import random_dataset


def write_lines(path, objs):
    path.write_text("".join(json.dumps(o) + "\n" for o in objs))
    return path


def test_round_trip_is_exact(tmp_path, rng):
    ds = random_dataset(rng, labels=["b", "a", "b", "c"] * 3)
    save_dataset(ds, tmp_path / "d.jsonl")
    back = load_dataset(tmp_path / "d.jsonl")
    assert back == ds
    save_dataset(back, tmp_path / "e.jsonl")
    assert (tmp_path / "d.jsonl").read_bytes() == (tmp_path / "e.jsonl").read_bytes()


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=10))
def test_float_values_survive_serialization(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("rt") / "x.jsonl"
    ds = TimeSeriesDataset.from_records([("x", 1, [values])])
    save_dataset(ds, path)
    assert np.array_equal(load_dataset(path).instances[0].channels[0], values)


def test_labels_follow_first_appearance(tmp_path):
    path = write_lines(tmp_path / "d.jsonl", [
        {"id": "p", "label": "walk", "channels": [[1, 2]]},
        {"id": "q", "label": "run", "channels": [[3, 4, 5]]},
        {"id": "r", "label": "walk", "channels": [[6]]},
    ])
    ds = load_dataset(path)
    assert ds.class_labels == ("walk", "run")
    assert ds.labels.tolist() == [1, 2, 1]
    assert ds.lengths.tolist() == [2, 3, 1]


def test_relabel_aligns_to_given_order(rng):
    ds = random_dataset(rng, labels=["x", "y", "z"] * 4)
    re = ds.relabel(("z", "x", "y"))
    assert [re.original_label(i.label) for i in re.instances] == [ds.original_label(i.label) for i in ds.instances]
    assert re.labels[:3].tolist() == [2, 3, 1]
    with pytest.raises(DatasetError):
        ds.relabel(("x", "y"))


@pytest.mark.parametrize("obj, message", [
    ({"id": "a", "label": 1, "channels": [[1, 2], [3]]}, "ragged"),
    ({"id": "a", "label": 1, "channels": [[1, "x"]]}, "non-numeric"),
    ({"id": "a", "label": 1, "channels": [[1, None]]}, "non-numeric"),
    ({"id": "a", "label": 1}, "expected an object"),
    ({"id": "a", "label": 1, "channels": []}, "non-empty"),
    ({"id": "a", "label": 1, "channels": [[]]}, "empty channels"),
    ({"id": "a", "label": [1], "channels": [[1]]}, "label must be"),
])
def test_malformed_records_name_the_line(tmp_path, obj, message):
    path = write_lines(tmp_path / "d.jsonl", [{"id": "ok", "label": 1, "channels": [[0.0, 1.0]]}, obj])
    with pytest.raises(DatasetError, match=message) as err:
        load_dataset(path)
    assert ":2:" in str(err.value)


def test_non_finite_and_channel_mismatch(tmp_path):
    path = tmp_path / "d.jsonl"
    path.write_text('{"id": "a", "label": 1, "channels": [[1.0, NaN]]}\n')
    with pytest.raises(DatasetError, match="non-finite"):
        load_dataset(path)
    write_lines(path, [{"id": "a", "label": 1, "channels": [[1]]},
                       {"id": "b", "label": 1, "channels": [[1], [2]]}])
    with pytest.raises(DatasetError, match="2 channels, expected 1"):
        load_dataset(path)


def test_empty_and_missing_files(tmp_path):
    (tmp_path / "e.jsonl").write_text("\n\n")
    with pytest.raises(DatasetError, match="empty"):
        load_dataset(tmp_path / "e.jsonl")
    with pytest.raises(OSError):
        load_dataset(tmp_path / "missing.jsonl")
    (tmp_path / "bad.jsonl").write_text("{not json\n")
    with pytest.raises(DatasetError, match="malformed"):
        load_dataset(tmp_path / "bad.jsonl")


def test_instances_are_immutable(rng):
    inst = Instance("a", 1, rng.normal(size=(2, 4)))
    with pytest.raises(ValueError):
        inst.channels[0, 0] = 1.0


def test_one_hot_rows(rng):
    ds = random_dataset(rng)
    Y = one_hot(ds)
    assert np.all(Y.sum(axis=1) == 1)
    assert (Y.argmax(axis=1) + 1).tolist() == ds.labels.tolist()


def test_znormalize(rng):
    ds = TimeSeriesDataset.from_records([("a", 1, np.vstack([rng.normal(3, 2, 30), np.full(30, 7.0)]))])
    z = znormalize_channels(ds).instances[0].channels
    assert z[0].mean() == pytest.approx(0, abs=1e-12) and z[0].std() == pytest.approx(1)
    assert np.all(z[1] == 0)


@given(st.integers(2, 6), st.integers(0, 2**31))
def test_folds_partition_and_stratify(folds, seed):
    rng = np.random.default_rng(seed)
    ds = random_dataset(rng, n=30, Q=3)
    splits = stratified_kfold(ds, folds, seed)
    assert len(splits) == folds
    val = np.concatenate([va for _, va in splits])
    assert sorted(val.tolist()) == list(range(30))
    for tr, va in splits:
        assert set(tr).isdisjoint(va) and len(tr) + len(va) == 30
        counts = np.bincount(ds.labels[va], minlength=4)[1:]
        assert counts.max() - counts.min() <= 1
    assert [v.tolist() for _, v in stratified_kfold(ds, folds, seed)] == [v.tolist() for _, v in splits]


def test_fold_errors_and_fallback(rng, caplog):
    ds = random_dataset(rng, n=6)
    with pytest.raises(ValueError):
        stratified_kfold(ds, 1, 0)
    with pytest.raises(ValueError):
        stratified_kfold(ds, 7, 0)
    splits = stratified_kfold(ds, 3, 0)  # each class has only 2 members
    assert "unstratified" in caplog.text and len(splits) == 3
