"""Two-stage L1 fitting: select large first-stage coefficients, then refit
with the selected coordinates exempted from the penalty.

Stage 1 is the plain L1 fit.  Selection is either magnitude thresholding or
top-q by magnitude (ties toward the lower index).  Stage 2 re-solves the same
objective with the selected set unpenalized, warm-started at the stage-1
solution, so an empty selection reproduces stage 1 exactly.
"""

from __future__ import annotations


from dataclasses import dataclass

import numpy as np

from .core import as_design, as_vector, gram, support_threshold
from .errors import EmptyFold
from .solver import LassoFit, PenaltySpec, SolverConfig, fit_lasso


@dataclass(frozen=True)
class SelectionRule:
    """Feature selection rule: magnitude threshold or fixed-size top-q."""

    mode: str
    alpha: float | None = None
    q: int | None = None

    def __post_init__(self):
        if self.mode == "threshold":
            if self.alpha is None or self.alpha <= 0:
                raise ValueError("threshold mode needs alpha > 0")
        elif self.mode == "top_q":
            if self.q is None or self.q < 0:
                raise ValueError("top_q mode needs q >= 0")
        else:
            raise ValueError(f"unknown selection mode {self.mode!r}")

    @staticmethod
    def threshold(alpha: float) -> "SelectionRule":
        return SelectionRule(mode="threshold", alpha=float(alpha))

    @staticmethod
    def top_q(q: int) -> "SelectionRule":
        return SelectionRule(mode="top_q", q=int(q))


@dataclass(frozen=True, eq=False)
class TwoStageResult:
    stage1: LassoFit
    selected: frozenset[int]
    stage2: LassoFit


@dataclass(frozen=True)
class CvRecord:
    stage: int
    parameter: float
    mean_validation_mse: float
    folds: int


@dataclass(frozen=True, eq=False)
class TuningResult:
    lambda_star: float
    q_star: int
    cv_table: tuple[CvRecord, ...]


def select_features(beta, rule: SelectionRule) -> frozenset[int]:
    """Apply a selection rule to a coefficient vector.

    top_q always returns exactly q indices: ranking is by magnitude with ties
    (including exact zeros) broken toward the lower index.
    """
    beta = as_vector(beta, name="coefficients")
    if rule.mode == "threshold":
        return support_threshold(beta, rule.alpha)
    if rule.q > beta.shape[0]:
        raise ValueError(f"q={rule.q} exceeds dimension {beta.shape[0]}")
    order = np.argsort(-np.abs(beta), kind="stable")
    return frozenset(int(j) for j in order[: rule.q])


def run_two_stage(
    X,
    y,
    lam: float,
    rule: SelectionRule,
    config: SolverConfig = SolverConfig(),
    precomputed_gram=None,
) -> TwoStageResult:
    """Run both stages with a shared regularization level."""
    X = as_design(X)
    y = as_vector(y, X.shape[0], "response")
    G = precomputed_gram if precomputed_gram is not None else gram(X)
    stage1 = fit_lasso(X, y, PenaltySpec(lam=lam), config, precomputed_gram=G)
    selected = select_features(stage1.beta, rule)
    stage2 = fit_lasso(
        X,
        y,
        PenaltySpec(lam=lam, unpenalized=selected),
        config,
        warm_start=stage1.beta,
        precomputed_gram=G,
    )
    return TwoStageResult(stage1=stage1, selected=selected, stage2=stage2)


def cv_fold_indices(n: int, folds: int, seed: int) -> list[np.ndarray]:
    """Deterministic k-fold partition: seeded shuffle, contiguous blocks."""
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if folds > n:
        raise EmptyFold(f"cannot split {n} samples into {folds} folds")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed)))
    perm = rng.permutation(n)
    sizes = np.full(folds, n // folds)
    sizes[: n % folds] += 1
    out, start = [], 0
    for s in sizes:
        out.append(np.sort(perm[start : start + s]))
        start += s
    return out


def _validation_mse(X_val, y_val, beta) -> float:
    resid = X_val @ beta - y_val
    return float(resid @ resid) / len(y_val)


def tune_sequential(
    X,
    y,
    lambda_grid,
    q_grid,
    folds: int,
    seed: int,
    config: SolverConfig = SolverConfig(),
    fold_indices=None,
) -> TuningResult:
    """Sequential cross-validation: pick lambda on stage-1 validation error,
    then pick q on stage-2 validation error at the chosen lambda.

    Ties resolve toward the larger lambda and the smaller q.  ``fold_indices``
    overrides the seeded partition (used for split-invariance checks).
    """
    X = as_design(X)
    n = X.shape[0]
    y = as_vector(y, n, "response")
    lambdas = sorted({float(l) for l in lambda_grid}, reverse=True)
    qs = sorted({int(q) for q in q_grid})
    if not lambdas or not qs:
        raise ValueError("lambda and q grids must be nonempty")
    if any(l <= 0 for l in lambdas):
        raise ValueError("lambda grid entries must be positive")

    if fold_indices is None:
        fold_indices = cv_fold_indices(n, folds, seed)
    else:
        fold_indices = [np.asarray(f, dtype=int) for f in fold_indices]
        if len(fold_indices) != folds:
            raise ValueError("fold_indices length does not match folds")

    splits = []
    for val_idx in fold_indices:
        mask = np.ones(n, dtype=bool)
        mask[val_idx] = False
        train_idx = np.flatnonzero(mask)
        splits.append((train_idx, val_idx))

    stage1_fits = {}  # (fold, lam) -> LassoFit
    records = []
    lam_scores = []
    for lam in lambdas:
        fold_mse = []
        for f, (tr, va) in enumerate(splits):
            fit = fit_lasso(X[tr], y[tr], PenaltySpec(lam=lam), config)
            stage1_fits[(f, lam)] = fit
            fold_mse.append(_validation_mse(X[va], y[va], fit.beta))
        mean_mse = float(np.mean(fold_mse))
        lam_scores.append((mean_mse, lam))
        records.append(CvRecord(stage=1, parameter=lam, mean_validation_mse=mean_mse, folds=folds))
    best_mse = min(s for s, _ in lam_scores)
    lambda_star = max(l for s, l in lam_scores if s == best_mse)

    q_scores = []
    for q in qs:
        fold_mse = []
        for f, (tr, va) in enumerate(splits):
            s1 = stage1_fits[(f, lambda_star)]
            selected = select_features(s1.beta, SelectionRule.top_q(q))
            fit = fit_lasso(
                X[tr],
                y[tr],
                PenaltySpec(lam=lambda_star, unpenalized=selected),
                config,
                warm_start=s1.beta,
            )
            fold_mse.append(_validation_mse(X[va], y[va], fit.beta))
        mean_mse = float(np.mean(fold_mse))
        q_scores.append((mean_mse, q))
        records.append(CvRecord(stage=2, parameter=float(q), mean_validation_mse=mean_mse, folds=folds))
    best_q_mse = min(s for s, _ in q_scores)
    q_star = min(q for s, q in q_scores if s == best_q_mse)

    return TuningResult(lambda_star=lambda_star, q_star=q_star, cv_table=tuple(records))
