"""Command-line interface.

Subcommands: fit, two-stage, tune, diagnose, bounds, greedy, simulate,
holdout, validate-bound.  Feature and sample indices are reported 1-based on
this surface; numeric output uses 12 significant digits.  Failures print a
single machine-readable line ``error: <Type>: <message>`` on stderr and exit
nonzero.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .bounds import BOUND_EVALUATORS, BoundInputs, QuantitySet, evaluate_bound
from .core import gram
from .diagnostics import DEFAULT_BUDGET, SubsetQuantities, subset_quantities
from .errors import ParseError, SparseRegError
from .experiments import (
    SimConfig,
    augment_random_features,
    default_lambda_grid,
    emit_outputs,
    generate_synthetic,
    load_tabular_dataset,
    run_holdout,
    run_simulation,
    validate_bound_montecarlo,
)
from .greedy import greedy_correct, prop51_certificate
from .solver import PenaltySpec, SolverConfig, fit_lasso
from .two_stage import SelectionRule, run_two_stage, tune_sequential


def _fmt(x) -> str:
    return f"{float(x):.12g}"


def _fmt_p(p: float) -> str:
    return "inf" if math.isinf(p) else _fmt(p)


def read_matrix_csv(path) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(c) for c in line.split(",")])
            except ValueError:
                raise ParseError(f"non-numeric entry in {path}", row=i) from None
    if not rows:
        raise ParseError(f"{path} is empty")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ParseError(f"ragged rows in {path}")
    return np.array(rows, dtype=float)


def read_vector_csv(path) -> np.ndarray:
    vals = []
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                vals.append(float(line))
            except ValueError:
                raise ParseError(f"non-numeric entry in {path}", row=i) from None
    if not vals:
        raise ParseError(f"{path} is empty")
    return np.array(vals, dtype=float)


def _parse_float_list(text) -> tuple[float, ...]:
    return tuple(float(v) for v in str(text).split(",") if v != "")


def _parse_int_list(text) -> tuple[int, ...]:
    return tuple(int(v) for v in str(text).split(",") if v != "")


def _parse_norm_index(text) -> float:
    return math.inf if str(text).lower() == "inf" else float(text)


def _parse_unpenalized(text) -> frozenset[int]:
    if not text:
        return frozenset()
    one_based = _parse_int_list(text)
    if any(j < 1 for j in one_based):
        raise ValueError("unpenalized indices are 1-based and must be >= 1")
    return frozenset(j - 1 for j in one_based)


def _emit(lines, out_path):
    text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --- subcommand implementations ----------------------------------------------


def _cmd_fit(args) -> int:
    X = read_matrix_csv(args.design)
    y = read_vector_csv(args.response)
    penalty = PenaltySpec(lam=args.lam, unpenalized=_parse_unpenalized(args.unpenalized))
    config = SolverConfig(kkt_tolerance=args.tol)
    fit = fit_lasso(X, y, penalty, config)
    lines = [
        f"# kkt_residual={_fmt(fit.kkt_residual)}",
        f"# objective={_fmt(fit.objective_value)}",
        f"# sweeps={fit.sweeps_used}",
        f"# converged={str(fit.converged).lower()}",
        "index,coefficient",
    ]
    lines += [f"{j + 1},{_fmt(b)}" for j, b in enumerate(fit.beta)]
    _emit(lines, args.out)
    return 0


def _cmd_two_stage(args) -> int:
    X = read_matrix_csv(args.design)
    y = read_vector_csv(args.response)
    rule = SelectionRule.top_q(args.q) if args.q is not None else SelectionRule.threshold(args.alpha)
    result = run_two_stage(X, y, args.lam, rule, SolverConfig(kkt_tolerance=args.tol))
    selected = ",".join(str(j + 1) for j in sorted(result.selected))
    lines = [
        f"# selected={selected}",
        f"# stage1_objective={_fmt(result.stage1.objective_value)}",
        f"# stage2_objective={_fmt(result.stage2.objective_value)}",
        f"# stage2_kkt_residual={_fmt(result.stage2.kkt_residual)}",
        f"# stage2_converged={str(result.stage2.converged).lower()}",
        "index,stage1_coefficient,stage2_coefficient",
    ]
    lines += [
        f"{j + 1},{_fmt(b1)},{_fmt(b2)}"
        for j, (b1, b2) in enumerate(zip(result.stage1.beta, result.stage2.beta))
    ]
    _emit(lines, args.out)
    return 0


def _cmd_tune(args) -> int:
    X = read_matrix_csv(args.design)
    y = read_vector_csv(args.response)
    result = tune_sequential(
        X,
        y,
        _parse_float_list(args.lambda_grid),
        _parse_int_list(args.q_grid),
        folds=args.folds,
        seed=args.seed,
    )
    lines = [
        f"# lambda_star={_fmt(result.lambda_star)}",
        f"# q_star={result.q_star}",
        "stage,parameter,mean_validation_mse,folds",
    ]
    lines += [
        f"{r.stage},{_fmt(r.parameter)},{_fmt(r.mean_validation_mse)},{r.folds}"
        for r in result.cv_table
    ]
    _emit(lines, args.out)
    return 0


def _quantities_csv_lines(quants: list[SubsetQuantities]) -> list[str]:
    lines = ["k,ell,p,quantity,value,exactness"]
    for q in quants:
        p_txt = _fmt_p(q.p)
        for name in ("rho", "mu", "theta", "gamma", "omega", "pi", "pi_lower_estimate", "theta_bar"):
            value = getattr(q, name)
            lines.append(f"{q.k},{q.ell},{p_txt},{name},{_fmt(value)},{q.exactness[name]}")
    return lines


def _cmd_diagnose(args) -> int:
    A = read_matrix_csv(args.gram)
    quants = [subset_quantities(A, args.k, args.ell, _parse_norm_index(args.p), budget=args.budget)]
    _emit(_quantities_csv_lines(quants), args.out)
    return 0


def load_quantities_csv(path) -> QuantitySet:
    groups: dict[tuple[int, int, float], dict[str, tuple[float, str]]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("k,ell,p"):
                continue
            parts = line.split(",")
            if len(parts) != 6:
                raise ParseError(f"expected 6 columns in {path}", row=i)
            k, ell, p_txt, name, value, flag = parts
            key = (int(k), int(ell), _parse_norm_index(p_txt))
            groups.setdefault(key, {})[name] = (float(value), flag)
    qset = QuantitySet()
    required = ("rho", "mu", "theta", "gamma", "omega", "pi", "theta_bar")
    for (k, ell, p), entries in groups.items():
        missing = [name for name in required if name not in entries]
        if missing:
            raise ParseError(f"quantities at (k={k}, ell={ell}, p={_fmt_p(p)}) missing {missing}")
        exactness = {name: entries[name][1] for name in entries}
        qset.add(
            SubsetQuantities(
                k=k,
                ell=ell,
                p=p,
                rho=entries["rho"][0],
                mu=entries["mu"][0],
                theta=entries["theta"][0],
                gamma=entries["gamma"][0],
                omega=entries["omega"][0],
                pi=entries["pi"][0],
                pi_lower_estimate=entries.get("pi_lower_estimate", (0.0, "estimate"))[0],
                theta_bar=entries["theta_bar"][0],
                exactness=exactness,
            )
        )
    return qset


_PARAM_ALIASES = {"lambda": "lam", "t_d": "t_dantzig", "epsilon": "epsilon_fs"}
_INT_PARAMS = {"n", "d", "k", "ell", "s", "q"}


def load_params_kv(path) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment."""
    params = {}
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"expected 'key = value' in {path}", row=i)
            key, _, value = line.partition("=")
            key = key.strip().lower()
            key = _PARAM_ALIASES.get(key, key)
            value = value.strip()
            if key in ("p", "q_norm"):
                params[key] = _parse_norm_index(value)
            elif key in _INT_PARAMS:
                params[key] = int(value)
            else:
                params[key] = float(value)
    return params


def _cmd_bounds(args) -> int:
    params = load_params_kv(args.params)
    quantities = load_quantities_csv(args.quantities) if args.quantities else None
    inputs = BoundInputs(quantities=quantities, **params)
    report = evaluate_bound(args.bound, inputs)
    lines = ["bound,kind,item,value,holds,margin"]
    for cond in report.conditions:
        lines.append(
            f"{report.bound_name},condition,\"{cond.text}\",,{str(cond.holds).lower()},{_fmt(cond.margin)}"
        )
    for key in sorted(report.values):
        lines.append(f"{report.bound_name},value,{key},{_fmt(report.values[key])},,")
    rhs_txt = "undefined" if report.rhs is None else _fmt(report.rhs)
    lines.append(f"{report.bound_name},rhs,rhs,{rhs_txt},{str(report.all_hold).lower()},")
    for note in report.notes:
        lines.append(f"{report.bound_name},note,\"{note}\",,,")
    _emit(lines, args.out)
    return 0


def _cmd_greedy(args) -> int:
    X = read_matrix_csv(args.design)
    ey = read_vector_csv(args.mean_response)
    beta_bar = read_vector_csv(args.beta_bar)
    trace = greedy_correct(X, ey, beta_bar, k_max=args.k)
    cert = prop51_certificate(trace, X, ey, beta_bar, k=args.k)
    lines = [
        f"# column_scale={_fmt(trace.column_scale)}",
        f"# certificate_k_star={cert.k_star}",
        f"# certificate_threshold={_fmt(cert.threshold)}",
        f"# certificate_holds={str(cert.bound_holds).lower()}",
        "step,j,alpha,residual_inf,energy",
        f"0,,,{_fmt(trace.residual_corr_inf[0])},{_fmt(trace.energies[0])}",
    ]
    for step in range(1, len(trace.iterates)):
        lines.append(
            f"{step},{trace.picked_indices[step - 1] + 1},{_fmt(trace.step_sizes[step - 1])},"
            f"{_fmt(trace.residual_corr_inf[step])},{_fmt(trace.energies[step])}"
        )
    _emit(lines, args.out)
    return 0


def _cmd_simulate(args) -> int:
    if args.lambda_grid:
        lambda_grid = _parse_float_list(args.lambda_grid)
        grid_source = "explicit"
    else:
        probe = SimConfig(
            n=args.n, d=args.d, k_true=args.k, sigma=args.sigma, trials=1,
            lambda_grid=(1.0,), q_grid=(0,), seed=args.seed,
        )
        X0, y0, _, _ = generate_synthetic(probe, trial=0)
        lambda_grid = default_lambda_grid(X0, y0)
        grid_source = "auto:32 log points over [1e-3, 1] * lambda_max(trial 0)"
    config = SimConfig(
        n=args.n,
        d=args.d,
        k_true=args.k,
        sigma=args.sigma,
        trials=args.trials,
        lambda_grid=lambda_grid,
        q_grid=_parse_int_list(args.q_grid),
        seed=args.seed,
    )
    table = run_simulation(config)
    table.metadata["lambda_grid_source"] = grid_source
    emit_outputs(table, args.out, args.chart)
    return 0


def _cmd_holdout(args) -> int:
    X, y = load_tabular_dataset(args.data, target_column=args.target_col, add_intercept=args.intercept)
    if args.augment:
        X = augment_random_features(X, args.augment, seed=args.seed)
    if args.lambda_grid:
        lambda_grid = _parse_float_list(args.lambda_grid)
    else:
        lambda_grid = default_lambda_grid(X, y)
    table = run_holdout(
        X,
        y,
        train_size=args.train,
        trials=args.trials,
        lambda_grid=lambda_grid,
        q_grid=_parse_int_list(args.q_grid),
        seed=args.seed,
    )
    table.metadata["augmented_features"] = str(args.augment)
    emit_outputs(table, args.out, args.chart)
    return 0


def _cmd_validate_bound(args) -> int:
    config = SimConfig(
        n=args.n,
        d=args.d,
        k_true=args.k,
        sigma=args.sigma,
        trials=args.trials,
        lambda_grid=(1.0,),  # unused by the protocol
        q_grid=(0,),
        seed=args.seed,
    )
    rate, result = validate_bound_montecarlo(
        config, args.bound, delta=args.delta, ell=args.ell, t=args.t, mix=args.mix
    )
    lines = [
        f"# bound={result.bound_name}",
        f"# trials={result.trials}",
        f"# evaluable={result.evaluable}",
        f"# violations={result.violations}",
        f"# violation_rate={'nan' if math.isnan(rate) else _fmt(rate)}",
        "trial,conditions_hold,measured,rhs,violated",
    ]
    for row in result.rows:
        measured = "" if row.measured is None else _fmt(row.measured)
        rhs = "" if row.rhs is None else _fmt(row.rhs)
        lines.append(
            f"{row.trial},{str(row.conditions_hold).lower()},{measured},{rhs},{str(row.violated).lower()}"
        )
    _emit(lines, args.out)
    return 0


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsereg",
        description="Sparse regression with selective L1 penalization: solver, "
        "design diagnostics, bound evaluation, and experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="solve one selectively penalized L1 problem")
    p.add_argument("--design", required=True)
    p.add_argument("--response", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--unpenalized", default="", help="1-based comma-separated indices")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("two-stage", help="fit, select features, refit with selection unpenalized")
    p.add_argument("--design", required=True)
    p.add_argument("--response", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--q", type=int)
    group.add_argument("--alpha", type=float)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_two_stage)

    p = sub.add_parser("tune", help="sequential cross-validation over lambda then q")
    p.add_argument("--design", required=True)
    p.add_argument("--response", required=True)
    p.add_argument("--lambda-grid", required=True)
    p.add_argument("--q-grid", required=True)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_tune)

    p = sub.add_parser("diagnose", help="compute design-matrix quantities at one (k, ell, p)")
    p.add_argument("--gram", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--p", default="2", help="1, 2, or inf")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_diagnose)

    p = sub.add_parser("bounds", help="evaluate a bound's conditions and right-hand side")
    p.add_argument("--params", required=True, help="key = value parameter file")
    p.add_argument("--quantities", help="CSV from the diagnose subcommand")
    p.add_argument("--bound", required=True, choices=sorted(BOUND_EVALUATORS))
    p.add_argument("--out")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("greedy", help="greedy residual-correlation correction trace")
    p.add_argument("--design", required=True)
    p.add_argument("--mean-response", required=True)
    p.add_argument("--beta-bar", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_greedy)

    p = sub.add_parser("simulate", help="synthetic lambda/q sweep")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--lambda-grid", default="", help="comma list; omit for an automatic grid")
    p.add_argument("--q-grid", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--chart")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("holdout", help="random-split evaluation on a tabular dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--target-col", type=int, required=True, help="1-based target column")
    p.add_argument("--train", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--augment", type=int, default=0, help="append this many random features")
    p.add_argument("--intercept", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--lambda-grid", default="")
    p.add_argument("--q-grid", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--chart")
    p.set_defaults(func=_cmd_holdout)

    p = sub.add_parser("validate-bound", help="Monte Carlo validation of a bound")
    p.add_argument("--bound", required=True, choices=["corollary41", "corollary61", "theorem81"])
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--d", type=int, default=10)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--ell", type=int, default=3)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--t", type=float, default=0.5)
    p.add_argument("--mix", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_validate_bound)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SparseRegError as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, TypeError, OSError) as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
