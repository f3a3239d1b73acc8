"""Synthetic benchmark with class-conditional pattern pairs in the first two channels.

Every channel of every instance holds one of six shapes (A..F) at a random
offset over a Gaussian noise floor.  Channels 1 and 2 carry a pattern pair whose
joint distribution depends on the class; all other channels draw their
pattern uniformly and independently of the class.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .dataset import TimeSeriesDataset, save_dataset

PATTERN_NAMES = ("A", "B", "C", "D", "E", "F")
# aligned: one offset per instance shared by all channels; independent: one per channel
PLACEMENTS = ("aligned", "independent")

# (channel-1 pattern, channel-2 pattern) pairs per class, each with probability 1/2
CLASS_PAIRS = {
    1: (("A", "D"), ("B", "F")),
    2: (("B", "E"), ("C", "D")),
    3: (("C", "F"), ("A", "E")),
}


@dataclass(frozen=True)
class PatternBank:
    patterns: dict

    @property
    def length(self) -> int:
        return len(next(iter(self.patterns.values())))

    def as_array(self) -> np.ndarray:
        return np.stack([self.patterns[name] for name in PATTERN_NAMES])


@dataclass(frozen=True)
class SynthConfig:
    train_size: int = 500
    test_size: int = 200
    num_channels: int = 40
    series_length: int = 202
    pattern_length: int = 25
    noise_sd: float = 0.1
    seed: int = 0
    placement: str = "independent"

    def __post_init__(self):
        if self.train_size < 1 or self.test_size < 1:
            raise ValueError("train_size and test_size must be at least 1")
        if self.num_channels < 2:
            raise ValueError("num_channels must be at least 2 (two informative channels)")
        if self.pattern_length < 4:
            raise ValueError("pattern_length must be at least 4")
        if self.pattern_length > self.series_length:
            raise ValueError("pattern_length cannot exceed series_length")
        if not self.noise_sd >= 0:
            raise ValueError("noise_sd must be nonnegative")
        if self.placement not in PLACEMENTS:
            raise ValueError(f"placement must be one of {PLACEMENTS}")


def _rescale(x: np.ndarray) -> np.ndarray:
    lo, hi = x.min(), x.max()
    return 2.0 * (x - lo) / (hi - lo) - 1.0


def default_pattern_bank(pattern_length: int) -> PatternBank:
    if pattern_length < 4:
        raise ValueError("pattern_length must be at least 4")
    t = np.linspace(0.0, 1.0, pattern_length)
    # step position, sine phase and bump width keep every pair >= 0.6*sqrt(L) apart
    rise = int(round(0.75 * pattern_length))
    patterns = {
        "A": _rescale(t),
        "B": _rescale(-t),
        "C": _rescale(-np.abs(t - 0.5)),
        "D": np.where(np.arange(pattern_length) < rise, -1.0, 1.0),
        "E": np.sin(2.0 * np.pi * t + np.pi / 4),
        "F": _rescale(-np.exp(-0.5 * ((t - 0.5) / 0.1) ** 2)),
    }
    return PatternBank(patterns)


@dataclass(frozen=True)
class SynthLayout:
    """What was planted: class labels (1..3), pattern indices and 0-based offsets per channel."""

    labels: np.ndarray
    patterns: np.ndarray
    offsets: np.ndarray


def sample_layout(cfg: SynthConfig, n: int, rng: np.random.Generator) -> SynthLayout:
    index = {name: i for i, name in enumerate(PATTERN_NAMES)}
    pair_table = np.array([[[index[a], index[b]] for a, b in CLASS_PAIRS[c]] for c in (1, 2, 3)])
    labels = rng.integers(1, 4, size=n)
    choice = rng.integers(0, 2, size=n)
    patterns = rng.integers(0, len(PATTERN_NAMES), size=(n, cfg.num_channels))
    patterns[:, :2] = pair_table[labels - 1, choice]
    high = cfg.series_length - cfg.pattern_length + 1
    if cfg.placement == "aligned":
        offsets = np.repeat(rng.integers(0, high, size=(n, 1)), cfg.num_channels, axis=1)
    else:
        offsets = rng.integers(0, high, size=(n, cfg.num_channels))
    return SynthLayout(labels, patterns, offsets)


def render(layout: SynthLayout, bank: PatternBank, cfg: SynthConfig, rng: np.random.Generator,
           prefix: str) -> TimeSeriesDataset:
    shapes = bank.as_array()
    n = layout.labels.size
    L = cfg.pattern_length
    data = rng.normal(0.0, cfg.noise_sd, size=(n, cfg.num_channels, cfg.series_length))
    for i in range(n):
        for v in range(cfg.num_channels):
            o = layout.offsets[i, v]
            data[i, v, o:o + L] += shapes[layout.patterns[i, v]]
    width = len(str(n - 1))
    records = ((f"{prefix}-{i:0{width}d}", int(layout.labels[i]), data[i]) for i in range(n))
    return TimeSeriesDataset.from_records(records)


def generate_with_layout(cfg: SynthConfig):
    bank = default_pattern_bank(cfg.pattern_length)
    train_ss, test_ss = np.random.SeedSequence(cfg.seed).spawn(2)
    out = []
    for ss, n, prefix in ((train_ss, cfg.train_size, "train"), (test_ss, cfg.test_size, "test")):
        rng = np.random.default_rng(ss)
        layout = sample_layout(cfg, n, rng)
        out.append((render(layout, bank, cfg, rng, prefix), layout))
    return out[0], out[1]


def generate(cfg: SynthConfig) -> tuple[TimeSeriesDataset, TimeSeriesDataset]:
    (train, _), (test, _) = generate_with_layout(cfg)
    return train, test


def write_synthetic(cfg: SynthConfig, train_path, test_path, manifest_path=None) -> tuple[TimeSeriesDataset, TimeSeriesDataset]:
    """Generate and write both splits plus a JSON manifest (default: next to the train file)."""
    train, test = generate(cfg)
    save_dataset(train, train_path)
    save_dataset(test, test_path)
    if manifest_path is None:
        manifest_path = Path(train_path).with_suffix(".manifest.json")
    manifest = {
        "generator": "maskshapelets.synthgen",
        "config": asdict(cfg),
        "seed": cfg.seed,
        # relative to the manifest so moved or re-created directories compare equal
        "train_file": os.path.relpath(train_path, Path(manifest_path).parent),
        "test_file": os.path.relpath(test_path, Path(manifest_path).parent),
        "class_pairs": {str(c): [list(p) for p in pairs] for c, pairs in CLASS_PAIRS.items()},
    }
    Path(manifest_path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return train, test
