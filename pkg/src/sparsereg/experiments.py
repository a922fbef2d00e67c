"""Desk-scale experiment harness: synthetic generation, lambda/q sweeps,
holdout evaluation on tabular data, and Monte Carlo validation of the
estimation-error bounds.

Reproducibility contract: all randomness flows through Philox counter-based
generators keyed by ``SeedSequence(entropy=seed, spawn_key=(trial,))``, so
per-trial streams are independent of execution order and identical across
runs of the same build.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .bounds import BoundInputs, QuantitySet, evaluate_bound
from .core import as_design, as_vector, gram
from .diagnostics import subset_quantities
from .errors import EmptyDataset, ParseError, SparseRegError
from .solver import PenaltySpec, SolverConfig, fit_lasso
from .two_stage import SelectionRule, run_two_stage, select_features

METRICS_SYNTHETIC = ("train_mse", "estimation_error", "selected_size")
METRICS_HOLDOUT = ("train_mse", "test_mse", "selected_size")


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-based per-trial stream; independent of evaluation order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(trial,))))


@dataclass(frozen=True)
class SimConfig:
    n: int
    d: int
    k_true: int
    sigma: float
    trials: int
    lambda_grid: tuple[float, ...]
    q_grid: tuple[int, ...]
    seed: int
    coef_low: float = -10.0
    coef_high: float = 10.0

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be positive")
        if not 0 <= self.k_true <= self.d:
            raise ValueError("k_true must lie in [0, d]")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if not self.lambda_grid or not self.q_grid:
            raise ValueError("lambda and q grids must be nonempty")
        if any(l <= 0 for l in self.lambda_grid):
            raise ValueError("lambda grid entries must be positive")
        if any(q < 0 or q > self.d for q in self.q_grid):
            raise ValueError("q grid entries must lie in [0, d]")
        if self.coef_low >= self.coef_high:
            raise ValueError("coef_low must be below coef_high")
        object.__setattr__(self, "lambda_grid", tuple(float(l) for l in self.lambda_grid))
        object.__setattr__(self, "q_grid", tuple(int(q) for q in self.q_grid))


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    lam: float
    q: int
    train_error: float | None
    test_error: float | None
    estimation_error: float | None
    selected_size: int | None
    seed: int
    failed: bool = False


@dataclass(frozen=True)
class AggregateRow:
    lam: float
    q: int
    metric: str
    mean: float
    stderr: float
    trials: int
    failed: int


@dataclass(frozen=True, eq=False)
class AggregateTable:
    rows: tuple[AggregateRow, ...]
    metadata: dict[str, str] = field(default_factory=dict)
    records: tuple[TrialRecord, ...] = ()


def _normalize_columns(X: np.ndarray) -> np.ndarray:
    """Rescale columns so each squared column sum equals the row count."""
    n = X.shape[0]
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0.0):
        raise ValueError("cannot normalize a zero column")
    return X * (math.sqrt(n) / norms)


def generate_synthetic(config: SimConfig, trial: int):
    """One synthetic instance: normalized Gaussian design, exactly sparse
    target with uniform coefficients, Gaussian noise.  Returns
    (X, y, beta_true, mean_response)."""
    rng = trial_rng(config.seed, trial)
    X = _normalize_columns(rng.standard_normal((config.n, config.d)))
    beta_true = np.zeros(config.d)
    support = rng.choice(config.d, size=config.k_true, replace=False)
    beta_true[support] = rng.uniform(config.coef_low, config.coef_high, size=config.k_true)
    mean_response = X @ beta_true
    y = mean_response + rng.normal(0.0, config.sigma, size=config.n)
    return X, y, beta_true, mean_response


def default_lambda_grid(X, y, points: int = 32, low_fraction: float = 1e-3) -> tuple[float, ...]:
    """Log-spaced grid from low_fraction * lambda_max up to lambda_max, where
    lambda_max is the smallest level with an all-zero solution."""
    X = as_design(X)
    y = as_vector(y, X.shape[0], "response")
    lam_max = 2.0 * float(np.abs(X.T @ y / X.shape[0]).max())
    if lam_max <= 0.0:
        raise ValueError("response is orthogonal to every feature; no usable grid")
    return tuple(float(v) for v in np.geomspace(lam_max, low_fraction * lam_max, points))


def _sweep_cells(X_train, y_train, lambdas, qs, config: SolverConfig):
    """Yield (lam, q, stage2_fit_or_None, selected) over the grid; a None fit
    marks a failed cell."""
    G = gram(X_train)
    for lam in lambdas:
        try:
            stage1 = fit_lasso(X_train, y_train, PenaltySpec(lam=lam), config, precomputed_gram=G)
        except SparseRegError:
            for q in qs:
                yield lam, q, None, None
            continue
        for q in qs:
            try:
                selected = select_features(stage1.beta, SelectionRule.top_q(q))
                fit = fit_lasso(
                    X_train,
                    y_train,
                    PenaltySpec(lam=lam, unpenalized=selected),
                    config,
                    warm_start=stage1.beta,
                    precomputed_gram=G,
                )
            except SparseRegError:
                yield lam, q, None, None
                continue
            yield lam, q, (fit if fit.converged else None), selected


def _aggregate(records, metrics, total_trials, metadata) -> AggregateTable:
    by_cell: dict[tuple[float, int], list[TrialRecord]] = {}
    for rec in records:
        by_cell.setdefault((rec.lam, rec.q), []).append(rec)
    rows = []
    getter = {
        "train_mse": lambda r: r.train_error,
        "test_mse": lambda r: r.test_error,
        "estimation_error": lambda r: r.estimation_error,
        "selected_size": lambda r: r.selected_size,
    }
    for (lam, q) in sorted(by_cell, key=lambda c: (-c[0], c[1])):
        cell = by_cell[(lam, q)]
        ok = [r for r in cell if not r.failed]
        failed = len(cell) - len(ok)
        if len(cell) != total_trials:
            raise AssertionError("cell is missing trials")
        for metric in metrics:
            vals = np.array([getter[metric](r) for r in ok], dtype=float)
            mean = float(vals.mean()) if vals.size else math.nan
            stderr = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
            rows.append(
                AggregateRow(lam=lam, q=q, metric=metric, mean=mean, stderr=stderr, trials=len(ok), failed=failed)
            )
    return AggregateTable(rows=tuple(rows), metadata=dict(metadata), records=tuple(records))


def run_simulation(config: SimConfig, solver_config: SolverConfig = SolverConfig()) -> AggregateTable:
    """Full synthetic sweep: per trial and (lambda, q) cell, fit both stages
    and record training error and coefficient estimation error."""
    lambdas = tuple(sorted(set(config.lambda_grid), reverse=True))
    qs = tuple(sorted(set(config.q_grid)))
    records = []
    for trial in range(config.trials):
        X, y, beta_true, _ = generate_synthetic(config, trial)
        for lam, q, fit, selected in _sweep_cells(X, y, lambdas, qs, solver_config):
            if fit is None:
                records.append(
                    TrialRecord(trial, lam, q, None, None, None, None, config.seed, failed=True)
                )
                continue
            resid = X @ fit.beta - y
            records.append(
                TrialRecord(
                    trial=trial,
                    lam=lam,
                    q=q,
                    train_error=float(resid @ resid) / config.n,
                    test_error=None,
                    estimation_error=float(np.linalg.norm(fit.beta - beta_true)),
                    selected_size=len(selected),
                    seed=config.seed,
                )
            )
    metadata = {
        "kind": "simulation",
        "n": str(config.n),
        "d": str(config.d),
        "k_true": str(config.k_true),
        "sigma": repr(config.sigma),
        "trials": str(config.trials),
        "seed": str(config.seed),
        "rng": "philox seedsequence(entropy=seed, spawn_key=(trial,))",
        "lambda_grid": ",".join(f"{l:.12g}" for l in lambdas),
    }
    return _aggregate(records, METRICS_SYNTHETIC, config.trials, metadata)


def load_tabular_dataset(path, target_column: int, add_intercept: bool = False):
    """Numeric CSV loader; a non-numeric first row is treated as a header.

    ``target_column`` is 1-based.  Returns (X, y) with the target column
    removed from X and an optional trailing intercept column of ones.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = [line.strip() for line in fh]
    rows = [line for line in raw if line]
    if not rows:
        raise EmptyDataset(f"{path} contains no rows")

    def parse_row(line, number):
        cells = line.split(",")
        out = []
        for col, cell in enumerate(cells, start=1):
            try:
                out.append(float(cell))
            except ValueError:
                raise ParseError(f"non-numeric value {cell!r}", row=number, column=col) from None
        return out

    start = 0
    try:
        first = parse_row(rows[0], 1)
    except ParseError:
        start = 1
        if len(rows) == 1:
            raise EmptyDataset(f"{path} has a header but no data rows") from None
        first = parse_row(rows[1], 2)
    width = len(first)
    if not 1 <= target_column <= width:
        raise ValueError(f"target column {target_column} out of range for {width} columns")
    data = [first]
    for i, line in enumerate(rows[start + 1 :], start=start + 2):
        vals = parse_row(line, i)
        if len(vals) != width:
            raise ParseError(f"expected {width} columns, found {len(vals)}", row=i)
        data.append(vals)
    M = np.array(data, dtype=float)
    y = M[:, target_column - 1]
    X = np.delete(M, target_column - 1, axis=1)
    if add_intercept:
        X = np.hstack([X, np.ones((X.shape[0], 1))])
    return X, y


def augment_random_features(X, m: int, seed: int) -> np.ndarray:
    """Append m normalized standard-Gaussian columns, deterministic in seed."""
    X = as_design(X)
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m == 0:
        return X
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed)))
    extra = _normalize_columns(rng.standard_normal((X.shape[0], m)))
    return np.hstack([X, extra])


def run_holdout(
    X,
    y,
    train_size: int,
    trials: int,
    lambda_grid,
    q_grid,
    seed: int,
    solver_config: SolverConfig = SolverConfig(),
) -> AggregateTable:
    """Repeated random-split evaluation: fit the sweep on ``train_size``
    points, score mean squared error on the held-out remainder."""
    X = as_design(X)
    n = X.shape[0]
    y = as_vector(y, n, "response")
    if not 1 <= train_size < n:
        raise ValueError(f"train_size must lie in [1, {n - 1}], got {train_size}")
    lambdas = tuple(sorted({float(l) for l in lambda_grid}, reverse=True))
    qs = tuple(sorted({int(q) for q in q_grid}))
    if not lambdas or not qs:
        raise ValueError("lambda and q grids must be nonempty")
    records = []
    for trial in range(trials):
        rng = trial_rng(seed, trial)
        perm = rng.permutation(n)
        tr, te = perm[:train_size], perm[train_size:]
        X_tr, y_tr, X_te, y_te = X[tr], y[tr], X[te], y[te]
        for lam, q, fit, selected in _sweep_cells(X_tr, y_tr, lambdas, qs, solver_config):
            if fit is None:
                records.append(TrialRecord(trial, lam, q, None, None, None, None, seed, failed=True))
                continue
            rtr = X_tr @ fit.beta - y_tr
            rte = X_te @ fit.beta - y_te
            records.append(
                TrialRecord(
                    trial=trial,
                    lam=lam,
                    q=q,
                    train_error=float(rtr @ rtr) / train_size,
                    test_error=float(rte @ rte) / len(te),
                    estimation_error=None,
                    selected_size=len(selected),
                    seed=seed,
                )
            )
    metadata = {
        "kind": "holdout",
        "n": str(n),
        "d": str(X.shape[1]),
        "train_size": str(train_size),
        "trials": str(trials),
        "seed": str(seed),
        "rng": "philox seedsequence(entropy=seed, spawn_key=(trial,))",
        "lambda_grid": ",".join(f"{l:.12g}" for l in lambdas),
    }
    return _aggregate(records, METRICS_HOLDOUT, trials, metadata)


# --- bound validation -------------------------------------------------------


@dataclass(frozen=True)
class McRow:
    trial: int
    conditions_hold: bool
    measured: float | None
    rhs: float | None
    violated: bool


@dataclass(frozen=True, eq=False)
class BoundValidation:
    bound_name: str
    trials: int
    evaluable: int
    violations: int
    rows: tuple[McRow, ...]

    @property
    def violation_rate(self) -> float:
        if self.evaluable == 0:
            return math.nan
        return self.violations / self.evaluable


def _near_orthogonal_design(rng, n, d, mix):
    """Orthogonalized Gaussian design blended with a small Gaussian
    perturbation, columns renormalized; mix = 0 is exactly orthonormal."""
    raw = rng.standard_normal((n, d))
    Q, _ = np.linalg.qr(raw)
    X = math.sqrt(n) * Q[:, :d]
    if mix > 0.0:
        X = X + mix * rng.standard_normal((n, d))
    return _normalize_columns(X)


def validate_bound_montecarlo(
    config: SimConfig,
    bound_name: str,
    delta: float,
    ell: int = 3,
    t: float = 0.5,
    mix: float = 0.05,
    mc_n: int | None = None,
    alpha: float = 3.0,
    big_low: float = 6.5,
    big_high: float = 10.0,
    small_mag: float = 0.02,
    n_small: int = 1,
    solver_config: SolverConfig = SolverConfig(),
    numerical_slack: float = 1e-6,
) -> tuple[float, BoundValidation]:
    """Monte Carlo check that measured estimation errors respect a bound.

    Per trial: draw a near-orthogonal instance, compute the exact quantities,
    evaluate the bound's conditions and right-hand side, fit, and compare.
    Trials whose conditions fail are excluded from the rate (reported in the
    table).  The k used for tails is the exact support size of the planted
    target, so tails vanish for the sparse protocols.

    ``numerical_slack`` is added to the right-hand side before declaring a
    violation: the solver certifies optimality only to its KKT tolerance, so
    the measured error carries that much numerical fuzz.  It only matters in
    the deterministic noise-free regime where the right-hand side is exactly
    zero.
    """
    if bound_name not in ("corollary41", "corollary61", "theorem81"):
        raise ValueError(f"no Monte Carlo protocol for bound {bound_name!r}")
    n = mc_n if mc_n is not None else config.n
    d, k, sigma = config.d, config.k_true, config.sigma
    rows = []
    violations = 0
    evaluable = 0
    for trial in range(config.trials):
        rng = trial_rng(config.seed, trial)
        X = _near_orthogonal_design(rng, n, d, mix)
        G = gram(X)
        coherence = float(np.abs(G.values - np.diag(np.diag(G.values))).max())

        if bound_name == "theorem81":
            beta_true = np.zeros(d)
            idx = rng.choice(d, size=k + n_small, replace=False)
            big, small = idx[:k], idx[k:]
            beta_true[big] = rng.uniform(big_low, big_high, size=k) * rng.choice([-1.0, 1.0], size=k)
            beta_true[small] = small_mag * rng.choice([-1.0, 1.0], size=n_small)
            s = k + n_small
        else:
            beta_true = np.zeros(d)
            support = rng.choice(d, size=k, replace=False)
            beta_true[support] = rng.uniform(config.coef_low, config.coef_high, size=k)
            s = k
        noise = rng.normal(0.0, sigma, size=n)
        y = X @ beta_true + noise

        base = BoundInputs(
            n=n, d=d, k=k, ell=ell, s=s, p=2.0, t=t, sigma=sigma,
            a=G.column_scale, delta=delta, coherence=coherence, lam=0.0,
        )

        if bound_name == "corollary41":
            floor = evaluate_bound("corollary41", base).values["lambda_floor"]
            lam = floor
            inputs = replace(base, lam=lam)
            report = evaluate_bound("corollary41", inputs)
            fit = fit_lasso(X, y, PenaltySpec(lam=lam), solver_config, precomputed_gram=G)
            measured = float(np.linalg.norm(fit.beta - beta_true, 2))
        elif bound_name == "corollary61":
            qs = QuantitySet([subset_quantities(G.values, k + ell, ell, 2.0)])
            probe = evaluate_bound("corollary61", replace(base, quantities=qs))
            lam = probe.values["lambda_floor"]
            inputs = replace(base, lam=lam, quantities=qs)
            report = evaluate_bound("corollary61", inputs)
            fit = fit_lasso(X, y, PenaltySpec(lam=lam), solver_config, precomputed_gram=G)
            measured = float(np.linalg.norm(fit.beta - beta_true, 2))
        else:
            qs = QuantitySet(
                [
                    subset_quantities(G.values, k + ell, ell, 2.0),
                    subset_quantities(G.values, s + ell, ell, 2.0),
                ]
            )
            floor = evaluate_bound("theorem81", replace(base, q=0, alpha=alpha, quantities=qs)).values[
                "lambda_floor"
            ]
            lam = floor
            k_lam = int((np.abs(beta_true) > lam).sum())
            q_big = int((np.abs(beta_true) > 1.5 * alpha).sum())
            order = np.sort(np.abs(beta_true))[::-1]
            tailp = float(np.linalg.norm(order[k_lam:], 2))
            tail1 = float(np.abs(order[k_lam:]).sum())
            inputs = replace(
                base,
                lam=lam,
                k=k_lam,
                q=q_big,
                alpha=alpha,
                tailp=tailp,
                tail1=tail1,
                quantities=qs,
            )
            report = evaluate_bound("theorem81", inputs)
            result = run_two_stage(X, y, lam, SelectionRule.threshold(alpha), solver_config, precomputed_gram=G)
            measured = float(np.linalg.norm(result.stage2.beta - beta_true, 2))

        if report.rhs is None:
            rows.append(McRow(trial=trial, conditions_hold=False, measured=None, rhs=None, violated=False))
            continue
        evaluable += 1
        violated = measured > report.rhs + numerical_slack
        violations += int(violated)
        rows.append(
            McRow(trial=trial, conditions_hold=True, measured=measured, rhs=report.rhs, violated=violated)
        )

    result = BoundValidation(
        bound_name=bound_name,
        trials=config.trials,
        evaluable=evaluable,
        violations=violations,
        rows=tuple(rows),
    )
    return result.violation_rate, result


# --- output -----------------------------------------------------------------


def _fmt(x) -> str:
    return f"{float(x):.12g}"


def emit_outputs(table: AggregateTable, csv_path, chart_path=None):
    """Write the aggregate table as CSV (12 significant digits, metadata in
    leading comment lines) and optionally an SVG chart, one curve per q."""
    if not table.rows:
        raise ValueError("aggregate table is empty; nothing to write")
    lines = [f"# {key}={table.metadata[key]}" for key in sorted(table.metadata)]
    lines.append("lambda,q,metric,mean,stderr,trials,failed")
    for r in table.rows:
        lines.append(
            f"{_fmt(r.lam)},{r.q},{r.metric},{_fmt(r.mean)},{_fmt(r.stderr)},{r.trials},{r.failed}"
        )
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    if chart_path is not None:
        _write_chart(table, chart_path)


def read_aggregate_csv(csv_path) -> AggregateTable:
    """Parse a CSV written by emit_outputs back into an AggregateTable."""
    metadata = {}
    rows = []
    with open(csv_path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                metadata[key] = value
                continue
            if line.startswith("lambda,"):
                continue
            lam, q, metric, mean, stderr, trials, failed = line.split(",")
            rows.append(
                AggregateRow(
                    lam=float(lam),
                    q=int(q),
                    metric=metric,
                    mean=float(mean),
                    stderr=float(stderr),
                    trials=int(trials),
                    failed=int(failed),
                )
            )
    return AggregateTable(rows=tuple(rows), metadata=metadata)


def _write_chart(table: AggregateTable, chart_path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    metrics = [m for m in dict.fromkeys(r.metric for r in table.rows) if m != "selected_size"]
    qs = sorted({r.q for r in table.rows})
    fig, axes = plt.subplots(1, max(len(metrics), 1), figsize=(6 * max(len(metrics), 1), 4.5))
    if len(metrics) <= 1:
        axes = [axes]
    for ax, metric in zip(axes, metrics):
        for q in qs:
            pts = sorted(
                [(r.lam, r.mean) for r in table.rows if r.metric == metric and r.q == q and not math.isnan(r.mean)]
            )
            if pts:
                ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", markersize=3, label=f"q={q}")
        ax.set_xscale("log")
        ax.set_xlabel("lambda")
        ax.set_ylabel(metric)
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(chart_path, format="svg")
    plt.close(fig)
