"""Masked vs unmasked (and sigmoid, optionally 1-NN DTW) on the synthetic benchmark.

Writes per-model metrics, final masks, mask snapshots and a summary JSON into
--out-dir.  The defaults are the full-size run; --reduced switches to
200/100 instances and 300 iterations.
"""

import argparse
import json
import logging
import time
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from maskshapelets.baselines import NearestNeighborDTW
from maskshapelets.evaluation import error_rate, export_mask_snapshots, export_masks
from maskshapelets.model import save_model
from maskshapelets.synthgen import SynthConfig, generate
from maskshapelets.trainer import TrainConfig, train


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out-dir", type=Path, default=Path("runs/synthetic"))
    p.add_argument("--seed", type=int, default=7, help="data seed")
    p.add_argument("--train-seed", type=int, default=0)
    p.add_argument("--reduced", action="store_true")
    p.add_argument("--iters", type=int)
    p.add_argument("--lmin", type=int, default=TrainConfig.L_min)
    p.add_argument("--lmax", type=int, default=TrainConfig.L_max)
    p.add_argument("--skip-sigmoid", action="store_true")
    p.add_argument("--nn-dtw", action="store_true", help="also evaluate 1-NN DTW (slow)")
    p.add_argument("--snapshot-every", type=int, default=50)
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    if args.reduced:
        synth = SynthConfig(train_size=200, test_size=100, seed=args.seed)
        iters = 300
    else:
        synth = SynthConfig(seed=args.seed)
        iters = 1000
    iters = args.iters if args.iters is not None else iters
    train_ds, test_ds = generate(synth)
    base = TrainConfig(K=20, L_min=args.lmin, L_max=args.lmax, lam=0.01, eta=0.1, max_iter=iters,
                       seed=args.train_seed)
    runs = {"masked": base, "unmasked": replace(base, masked=False)}
    if not args.skip_sigmoid:
        runs["sigmoid"] = replace(base, activation="sigmoid")

    args.out_dir.mkdir(parents=True, exist_ok=True)
    summary = {"synth": asdict(synth), "runs": {}}
    for name, cfg in runs.items():
        start = time.perf_counter()
        model, metrics = train(cfg, train_ds, snapshot_every=args.snapshot_every)
        secs = time.perf_counter() - start
        save_model(model, args.out_dir / f"{name}.model.json")
        metrics.write_csv(args.out_dir / f"{name}.metrics.csv", wall_time=True)
        export_masks(model, args.out_dir / f"{name}.masks.csv")
        export_mask_snapshots(metrics, args.out_dir / f"{name}.mask_snapshots.csv")
        fm = model.activated_masks()
        summary["runs"][name] = {
            "config": asdict(cfg),
            "train_error": metrics.records[-1].train_error if metrics.records else None,
            "test_error": error_rate(model, test_ds),
            "localized_fraction": float(np.mean(fm[:, :2].mean(axis=1) > fm[:, 2:].mean(axis=1))),
            "seconds": secs,
        }
        print(name, json.dumps({k: v for k, v in summary["runs"][name].items() if k != "config"}), flush=True)
    if args.nn_dtw:
        summary["runs"]["nn_dtw"] = {"test_error": error_rate(NearestNeighborDTW(train_ds), test_ds)}
        print("nn_dtw", summary["runs"]["nn_dtw"], flush=True)
    (args.out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")


if __name__ == "__main__":
    main()
