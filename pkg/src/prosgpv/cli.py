"""Command-line front end: fit, select, simulate, and the spine case study.

Exit codes: 0 success, 2 usage/configuration/parse problems, 3 numerical
failure during fitting.  All randomized commands honor --seed; equal seeds
give byte-identical output files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from collections import Counter
from importlib import resources
from pathlib import Path

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from .data import DataError, Dataset, make_dataset
from .families import get_family
from .fitting import FitOptions, RankDeficiencyError, fit_mle
from .lasso import PathError, select_lambda_cv, solve_path
from .screen import ProSGPVConfig, prosgpv
from .simulate import PRESETS, ScenarioError, Scenario, get_preset, run_grid
from . import simulate as _simulate
from .simulate import auc_score

SCHEMA_VERSION = 1
EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3

SPINE_SHA256 = "c970c7302ba6a3bb92318a2c35ec7dcfbe569b531bbb9ad2dd39b3e1f126e1f1"


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- ingestion

def load_csv(path, family, response=None, time=None, status=None) -> Dataset:
    """Read and validate a CSV into a Dataset for the given family.

    Binary responses are coerced from {0,1} or from two-level strings (the
    lexicographically smaller level maps to 0).  Rows with missing values
    are rejected with their (1-based data) row numbers.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"input file not found: {path}")
    try:
        df = pd.read_csv(path, float_precision="round_trip")
    except Exception as exc:
        raise ConfigError(f"cannot parse {path}: {exc}")
    if df.empty or df.shape[1] == 0:
        raise ConfigError(f"{path} has no data rows")

    kind = get_family(family).kind
    needed = [response] if kind != "cox" else [time, status]
    for col in needed:
        if col is None:
            raise ConfigError(
                "logistic/poisson need --response; cox needs --time and --status"
            )
        if col not in df.columns:
            raise ConfigError(f"column {col!r} not in {path.name} (has {list(df.columns)})")

    missing = df.index[df.isna().any(axis=1)]
    if len(missing):
        rows = [int(i) + 1 for i in missing[:20]]
        raise ConfigError(f"missing values in rows {rows}")

    feature_cols = [c for c in df.columns if c not in needed]
    try:
        X = df[feature_cols].to_numpy(dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"non-numeric predictor values: {exc}")

    try:
        if kind == "cox":
            st = df[status].to_numpy(dtype=float)
            if not np.isin(st, (0.0, 1.0)).all():
                raise ConfigError(f"status column {status!r} must be 0/1")
            return make_dataset(
                X, time=df[time].to_numpy(dtype=float), status=st, names=feature_cols
            )
        y = _coerce_response(df[response], kind)
        return make_dataset(X, y=y, names=feature_cols)
    except DataError as exc:
        raise ConfigError(str(exc))


def _coerce_response(col, kind):
    if kind == "logistic":
        vals = col.to_numpy()
        uniq = sorted(pd.unique(col).tolist(), key=str)
        if set(map(str, uniq)) <= {"0", "1", "0.0", "1.0"}:
            return col.to_numpy(dtype=float)
        if len(uniq) != 2:
            raise ConfigError(f"binary response must have two levels, got {uniq}")
        return (col.astype(str) != str(uniq[0])).to_numpy(dtype=float)
    y = col.to_numpy(dtype=float)
    if kind == "poisson" and (np.any(y < 0) or np.any(y != np.round(y))):
        raise ConfigError("poisson response must be nonnegative integers")
    return y


def save_csv(data: Dataset, path):
    """Full-precision writer; re-loading reproduces the dataset exactly."""
    cols = {name: data.X[:, j] for j, name in enumerate(data.column_names())}
    if data.is_survival:
        cols["time"] = data.time
        cols["status"] = data.status
    else:
        cols["y"] = data.y
    pd.DataFrame(cols).to_csv(path, index=False, float_format="%.17g")


def spine_path() -> Path:
    return Path(resources.files("prosgpv").joinpath("datasets/spine.csv"))


def load_spine() -> Dataset:
    path = spine_path()
    digest = hashlib.sha256(path.read_bytes()).hexdigest()
    if digest != SPINE_SHA256:
        raise ConfigError(f"bundled spine data checksum mismatch: {digest}")
    return load_csv(path, "logistic", response="class")


# ---------------------------------------------------------------- reporting

def _sig4(x):
    return "." if not np.isfinite(x) else f"{x:.4g}"


def _coef_table(data, result):
    names = data.column_names()
    rows = []
    fam = result.family
    fit = result.final_fit
    if fam != "cox":
        rows.append(("intercept", fit.coef[0], fit.se[0], fit.ci_lower[0],
                     fit.ci_upper[0], None))
    beta = fit.beta()
    se = fit.beta_se()
    lo = fit.ci_lower if fam == "cox" else fit.ci_lower[1:]
    hi = fit.ci_upper if fam == "cox" else fit.ci_upper[1:]
    for k in result.candidate_set:
        rows.append((names[k], beta[k], se[k], lo[k], hi[k], result.sgpvs.get(k)))
    return rows


def _select_report_json(data, result):
    names = data.column_names()
    coefficients = []
    for name, est, se, lo, hi, pdel in _coef_table(data, result):
        coefficients.append(
            {
                "name": name,
                "estimate": None if not np.isfinite(est) else est,
                "se": None if not np.isfinite(se) else se,
                "ci_lower": None if not np.isfinite(lo) else lo,
                "ci_upper": None if not np.isfinite(hi) else hi,
                "sgpv": pdel,
            }
        )
    return {
        "schema_version": SCHEMA_VERSION,
        "family": result.family,
        "candidate_set": [names[k] for k in result.candidate_set],
        "final_set": [names[k] for k in result.final_set],
        "coefficients": coefficients,
        "null_bound": None if result.null_bound is None else result.null_bound.delta,
        "lambda_gic": result.stage1.lambda_gic,
    }


def _print_select_report(data, result, stream=sys.stdout):
    names = data.column_names()
    print(f"family: {result.family}", file=stream)
    print(f"candidate set: {', '.join(names[k] for k in result.candidate_set) or '(empty)'}",
          file=stream)
    print(f"final set: {', '.join(names[k] for k in result.final_set) or '(empty)'}",
          file=stream)
    if result.null_bound is not None:
        print(f"null bound: {_sig4(result.null_bound.delta)}", file=stream)
    print(f"lambda_gic: {_sig4(result.stage1.lambda_gic)}", file=stream)
    header = f"{'variable':<28}{'estimate':>10}{'se':>10}{'ci_lower':>10}{'ci_upper':>10}{'sgpv':>8}"
    print(header, file=stream)
    for name, est, se, lo, hi, pdel in _coef_table(data, result):
        sg = "" if pdel is None else _sig4(pdel)
        print(f"{name:<28}{_sig4(est):>10}{_sig4(se):>10}{_sig4(lo):>10}{_sig4(hi):>10}{sg:>8}",
              file=stream)


# ---------------------------------------------------------------- commands

def cmd_fit(args) -> int:
    data = load_csv(args.input, args.family, args.response, args.time, args.status)
    fit = fit_mle(args.family, data, options=FitOptions(jeffreys=args.jeffreys))
    names = data.column_names()
    labels = (["intercept"] if args.family != "cox" else []) + list(names)
    print(f"{'variable':<28}{'estimate':>12}{'se':>12}{'ci_lower':>12}{'ci_upper':>12}")
    for lbl, est, se, lo, hi in zip(labels, fit.coef, fit.se, fit.ci_lower, fit.ci_upper):
        print(f"{lbl:<28}{_sig4(est):>12}{_sig4(se):>12}{_sig4(lo):>12}{_sig4(hi):>12}")
    if not fit.converged:
        print("warning: fit did not converge", file=sys.stderr)
    for w in fit.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def cmd_select(args) -> int:
    data = load_csv(args.input, args.family, args.response, args.time, args.status)
    config = ProSGPVConfig(bound=args.bound, jeffreys=args.jeffreys)
    result = prosgpv(args.family, data, config)
    _print_select_report(data, result)
    if args.out:
        payload = _select_report_json(data, result)
        out = Path(args.out)
        if args.format == "json":
            out.write_text(json.dumps(payload, indent=2) + "\n")
        else:
            rows = _coef_table(data, result)
            pd.DataFrame(
                rows,
                columns=["name", "estimate", "se", "ci_lower", "ci_upper", "sgpv"],
            ).to_csv(out, index=False, float_format="%.17g")
    return EXIT_OK


def _scenarios_from_args(args):
    if args.preset:
        sc = get_preset(args.preset, n=args.n, p=args.p, s=args.s)
        return [sc]
    required = (args.family, args.n, args.p, args.s)
    if any(v is None for v in required):
        raise ConfigError("need --preset or all of --family/--n/--p/--s")
    name = f"custom-{args.family}-n{args.n}-p{args.p}-s{args.s}"
    defaults = {
        "logistic": (0.5, 1.5, 0.0),
        "poisson": (0.1, 0.4, 2.0),
        "cox": (0.2, 0.8, 0.0),
    }[get_family(args.family).kind]
    return [
        Scenario(name, get_family(args.family).kind, args.n, args.p, args.s,
                 defaults[0], defaults[1], intercept=defaults[2])
    ]


def cmd_simulate(args) -> int:
    if args.list_presets:
        for name, sc in sorted(PRESETS.items()):
            print(f"{name:<18} family={sc.family:<9} n={sc.n:<4} p={sc.p:<4} "
                  f"s={sc.s:<3} beta=[{sc.beta_l}, {sc.beta_u}]")
        return EXIT_OK
    scenarios = _scenarios_from_args(args)
    reps_df, agg_df, failures = run_grid(
        scenarios,
        methods=tuple(args.methods.split(",")),
        replications=args.reps,
        seed=args.seed,
        n_jobs=args.jobs,
        timing=args.timing,
    )
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        reps_df.to_csv(f"{out}_replications.csv", index=False, float_format="%.17g")
        agg_df.to_csv(f"{out}_aggregate.csv", index=False, float_format="%.17g")
    for _, row in agg_df.iterrows():
        print(
            f"{row['scenario']} {row['method']}: capture={row['capture_rate']:.3f} "
            f"mae_median={row['mae_median']:.4g} score_median={row['score_median']:.4g}"
        )
    if failures:
        print(f"{len(failures)} replication failures (excluded)", file=sys.stderr)
    return EXIT_OK


def _spine_split(data: Dataset, names, n_train: int, seed: int, split: int):
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(split,)))
    perm = rng.permutation(data.n)
    tr_idx, te_idx = perm[:n_train], perm[n_train:]
    if len(np.unique(data.y[tr_idx])) < 2:
        return []
    tr = make_dataset(data.X[tr_idx], y=data.y[tr_idx], names=names)
    te_X, te_y = data.X[te_idx], data.y[te_idx]
    rows = []

    res = prosgpv("logistic", tr)
    eta = res.coef[0] + te_X @ res.coef[1:]
    rows.append(
        {
            "method": "prosgpv",
            "split": split,
            "size": len(res.final_set),
            "model": ",".join(names[k] for k in res.final_set),
            "auc": auc_score(eta, te_y),
        }
    )

    path = solve_path("logistic", tr)
    select_lambda_cv("logistic", tr, path, rng=rng)
    k = path._cv_index
    coef = path.coefs[k]
    sel = tuple(int(j) for j in np.nonzero(coef[1:])[0])
    eta = coef[0] + te_X @ coef[1:]
    rows.append(
        {
            "method": "lasso_min",
            "split": split,
            "size": len(sel),
            "model": ",".join(names[j] for j in sel),
            "auc": auc_score(eta, te_y),
        }
    )
    return rows


def spine_study(splits=1000, seed=0, train_frac=0.7, data: Dataset | None = None,
                n_jobs: int = 1):
    """Repeated train/test splits of the bundled spine data.

    Returns a per-split DataFrame (method, split, model size, selected
    variables, test AUC) and a summary dict with the most frequent model and
    mean/median AUC per method.  Deterministic given ``seed`` regardless of
    ``n_jobs``.
    """
    data = data if data is not None else load_spine()
    names = data.column_names()
    n_train = int(round(train_frac * data.n))
    chunks = Parallel(n_jobs=n_jobs)(
        delayed(_spine_split)(data, names, n_train, seed, split)
        for split in range(splits)
    )
    rows = [row for chunk in chunks for row in chunk]
    df = pd.DataFrame(rows)
    summary = {}
    for method, g in df.groupby("method"):
        most_common = Counter(g["model"]).most_common(1)[0]
        summary[method] = {
            "median_size": float(g["size"].median()),
            "most_frequent_model": most_common[0].split(",") if most_common[0] else [],
            "most_frequent_count": most_common[1],
            "mean_auc": float(g["auc"].mean()),
            "median_auc": float(g["auc"].median()),
        }
    return df, summary


def cmd_spine(args) -> int:
    df, summary = spine_study(splits=args.reps, seed=args.seed, n_jobs=args.jobs)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        df.to_csv(f"{out}_splits.csv", index=False, float_format="%.17g")
        Path(f"{out}_summary.json").write_text(
            json.dumps({"schema_version": SCHEMA_VERSION, **summary}, indent=2) + "\n"
        )
    for method, s in sorted(summary.items()):
        print(
            f"{method}: median size={s['median_size']:.0f} "
            f"median AUC={s['median_auc']:.4g} mean AUC={s['mean_auc']:.4g} "
            f"most frequent model={s['most_frequent_model']}"
        )
    return EXIT_OK


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prosgpv",
        description="Two-stage variable selection with second-generation p-values",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_data_args(p):
        p.add_argument("--family", required=True, choices=["logistic", "poisson", "cox"])
        p.add_argument("--input", required=True)
        p.add_argument("--response")
        p.add_argument("--time")
        p.add_argument("--status")

    p_fit = sub.add_parser("fit", help="unpenalized maximum-likelihood fit")
    add_data_args(p_fit)
    p_fit.add_argument("--jeffreys", action="store_true")
    p_fit.set_defaults(func=cmd_fit)

    p_sel = sub.add_parser("select", help="two-stage SGPV variable selection")
    add_data_args(p_sel)
    p_sel.add_argument("--bound", choices=["constant", "gvif"], default="constant")
    p_sel.add_argument("--jeffreys", action="store_true")
    p_sel.add_argument("--out")
    p_sel.add_argument("--format", choices=["csv", "json"], default="json")
    p_sel.set_defaults(func=cmd_select)

    p_sim = sub.add_parser("simulate", help="Monte Carlo comparison grid")
    p_sim.add_argument("--preset")
    p_sim.add_argument("--list-presets", action="store_true")
    p_sim.add_argument("--family")
    p_sim.add_argument("--n", type=int)
    p_sim.add_argument("--p", type=int)
    p_sim.add_argument("--s", type=int)
    p_sim.add_argument("--reps", type=int, default=100)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--jobs", type=int, default=1)
    p_sim.add_argument("--methods", default="prosgpv,lasso_min")
    p_sim.add_argument("--timing", action="store_true",
                       help="record wall-clock runtimes (breaks byte-identical reruns)")
    p_sim.add_argument("--out")
    p_sim.set_defaults(func=cmd_simulate)

    p_sp = sub.add_parser("spine", help="repeated-split study on the bundled spine data")
    p_sp.add_argument("--reps", type=int, default=1000)
    p_sp.add_argument("--seed", type=int, default=0)
    p_sp.add_argument("--jobs", type=int, default=1)
    p_sp.add_argument("--out")
    p_sp.set_defaults(func=cmd_spine)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ScenarioError, DataError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RankDeficiencyError, PathError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
