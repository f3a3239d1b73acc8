"""Regenerate the bundled miniature dataset in data/.

Twenty accelerometer-like recordings (12 train, 8 test) with string labels and
lengths between 40 and 60: "walk" oscillates around a raised level on the
first axis, "sit" drifts slowly around a lowered one.  The other two axes are
noise.  Used as an end-to-end smoke test of ingestion, training and evaluation.
"""

import argparse
from pathlib import Path

import numpy as np

from maskshapelets.dataset import TimeSeriesDataset, save_dataset


def recording(rng, label, length):
    t = np.arange(length)
    x = rng.normal(0.0, 0.2, size=(3, length))
    if label == "walk":
        x[0] += 0.5 + np.sin(2 * np.pi * t / rng.uniform(7, 9) + rng.uniform(0, 2 * np.pi))
    else:
        x[0] += -0.5 + 0.3 * np.sin(2 * np.pi * t / 40 + rng.uniform(0, 2 * np.pi))
    return x


def build(n, prefix, rng):
    labels = ["walk", "sit"] * (n // 2)
    rng.shuffle(labels)
    return TimeSeriesDataset.from_records(
        (f"{prefix}-{i:02d}", lab, recording(rng, lab, int(rng.integers(40, 61))))
        for i, lab in enumerate(labels))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", default=Path(__file__).resolve().parent.parent / "data", type=Path)
    parser.add_argument("--seed", type=int, default=2024)
    args = parser.parse_args()
    rng = np.random.default_rng(args.seed)
    save_dataset(build(12, "mini-train", rng), args.out_dir / "mini_train.jsonl")
    save_dataset(build(8, "mini-test", rng), args.out_dir / "mini_test.jsonl")


if __name__ == "__main__":
    main()
