#!/usr/bin/env python3
"""Housing-data holdout protocol: 100 random 20-point training splits,
with and without 20 appended random features.

The dataset is not shipped; supply a numeric CSV with 13 feature columns plus
the price target (506 rows in the classic file).  Record the file's SHA-256
alongside any results you keep.

Usage: python scripts/run_boston_holdout.py --data housing.csv [--target-col 14]
"""

import argparse
from pathlib import Path

from sparsereg.experiments import (
    augment_random_features,
    default_lambda_grid,
    emit_outputs,
    load_tabular_dataset,
    run_holdout,
)


def summarize(table, label):
    test = {(r.lam, r.q): r.mean for r in table.rows if r.metric == "test_mse"}
    best = min(test, key=test.get)
    best_q0 = min(v for (lam, q), v in test.items() if q == 0)
    print(f"{label}: best test MSE {test[best]:.2f} at lambda={best[0]:.4g}, q={best[1]}; q=0 best {best_q0:.2f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", required=True)
    ap.add_argument("--target-col", type=int, default=14)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--train", type=int, default=20)
    ap.add_argument("--augment", type=int, default=20)
    ap.add_argument("--seed", type=int, default=20240401)
    ap.add_argument("--outdir", default="results")
    args = ap.parse_args()

    X, y = load_tabular_dataset(args.data, target_column=args.target_col, add_intercept=True)
    print(f"loaded {X.shape[0]} rows, {X.shape[1]} features (intercept appended)")
    qs = tuple(range(4))
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    grid = default_lambda_grid(X, y, points=16, low_fraction=1e-2)
    plain = run_holdout(X, y, args.train, args.trials, grid, qs, args.seed)
    emit_outputs(plain, outdir / "holdout_plain.csv", outdir / "holdout_plain.svg")
    summarize(plain, "plain")

    X_aug = augment_random_features(X, args.augment, seed=args.seed)
    grid_aug = default_lambda_grid(X_aug, y, points=16, low_fraction=1e-2)
    augmented = run_holdout(X_aug, y, args.train, args.trials, grid_aug, qs, args.seed)
    augmented.metadata["augmented_features"] = str(args.augment)
    emit_outputs(augmented, outdir / "holdout_augmented.csv", outdir / "holdout_augmented.svg")
    summarize(augmented, f"augmented (+{args.augment} random features)")


if __name__ == "__main__":
    main()
