"""Command-line interface.

Subcommands: ``fit``, ``forecast``, ``screen``, ``eval``, ``simulate``,
``mc`` and ``normality``.  Every output is CSV whose first line records the
resolved configuration.  Settings come from built-in defaults, then an
optional ``--config`` file of ``key = value`` lines, then command-line
flags.  Failures print one line ``error: type=<Name> message=<text>`` to
stderr and exit with a nonzero status.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import alpha_pca, bilinear_lse, evaluate, io, simulate
from .benchmarks import BENCHMARK_KINDS, BenchmarkKind
from .core_types import FactorKind, LoadingEstimate, NoiseKind, ValidationError, project_factors
from .linalg import LinalgError
from .pipeline import PipelineConfig, fit_pipeline
from .screening import screen as run_screen

EXIT_USAGE = 2
EXIT_FAILURE = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(s: str) -> list:
    return [float(v) for v in str(s).split(",") if v.strip()]


def _ints(s: str) -> list:
    return [int(v) for v in str(s).split(",") if v.strip()]


def _bool(s) -> bool:
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


# name -> (type, default, help); flags are ``--name-with-dashes``
DATA_OPTS = {
    "panel": (str, None, "long-format panel CSV (time,row_id,col_id,value)"),
    "target": (str, None, "target CSV (time,value)"),
    "transform": (str, "none", "default per-series rule: none, diff1, diff2, log, log_diff1"),
    "col_transform": (str, "", "per-column rules, e.g. 'gdp=log_diff1,cpi=diff1'"),
    "target_transform": (str, "none", "rule for the target series"),
    "center": (_bool, False, "subtract sample means after transforming"),
}
MODEL_OPTS = {
    "alpha": (_floats, [0.0], "alpha weight(s); comma-separated in eval"),
    "k": (_ints, None, "row factor count(s)"),
    "r": (_ints, None, "column factor count(s)"),
    "estimate_dims": (_bool, False, "choose (k, r) with the eigenvalue-ratio estimator"),
    "row_threshold": (float, None, "screening threshold for rows"),
    "col_threshold": (float, None, "screening threshold for columns (default: row threshold)"),
    "horizon": (int, 1, "forecast horizon h"),
    "max_iterations": (int, 200, "LSE sweep cap"),
    "rel_tol": (float, 1e-10, "LSE relative objective tolerance"),
}
RUN_OPTS = {
    "seed": (int, 0, "master seed"),
    "threads": (int, 1, "worker processes for Monte Carlo runs"),
}

COMMANDS = {
    "fit": ({**DATA_OPTS, **MODEL_OPTS, **RUN_OPTS, "out": (str, "fit_out", "output directory")},
            "estimate loadings and factors and write a CSV model bundle"),
    "forecast": ({**{k: DATA_OPTS[k] for k in ("panel", "target")}, "model": (str, None, "directory written by fit"),
                  "out": (str, "predictions.csv", "output CSV")},
                 "apply a saved fit to a panel"),
    "screen": ({**DATA_OPTS, "row_threshold": (float, 0.0, "row threshold"),
                "col_threshold": (float, None, "column threshold (default: row threshold)"),
                "out": (str, "screen_out", "output directory")},
               "correlation screening diagnostics and refined panel"),
    "eval": ({**DATA_OPTS, **MODEL_OPTS, **RUN_OPTS, "folds": (int, 10, "rolling CV folds"),
              "test_fraction": (float, 0.2, "share of the sample used as the test span"),
              "benchmarks": (str, ",".join(BENCHMARK_KINDS), "comma-separated benchmarks, or 'none'"),
              "out": (str, "eval.csv", "output CSV")},
             "rolling-CV MSFE for the pipeline and benchmarks, with DM tests"),
    "simulate": ({"fixture": (str, "none", "'planted' for the 14x10x107 screening fixture, else a DGP draw"),
                  "p": (int, 10, ""), "q": (int, 10, ""), "k": (int, 3, ""), "r": (int, 2, ""), "T": (int, 100, ""),
                  "horizon": (int, 1, ""), "factor_kind": (str, "matrix_normal", "matrix_normal or mar1"),
                  "noise_kind": (str, "iid", "iid, mar1_noise or row_col_corr"),
                  "noise_scale": (float, 1.0, "multiplier on the noise matrices"),
                  "rep": (int, 0, "replication index"), **RUN_OPTS,
                  "out": (str, "sim_out", "output directory")},
                 "write one simulated draw (panel, target, truth)"),
    "mc": ({"table": (int, 1, "1, 2 or 3"), "reps": (int, 200, "replications per cell"), **RUN_OPTS,
            "alpha": (float, 0.0, "alpha weight for tables 1 and 2"),
            "normalize_loadings": (_bool, True, "rescale drawn loadings so that L'L/n = I"),
            "out": (str, "mc.csv", "output CSV")},
           "Monte Carlo loss and screening tables"),
    "normality": ({"reps": (int, 1000, "replications"), "alphas": (_floats, [-1.0, 0.0, 1.0], "alpha values"),
                   "T": (int, 400, ""), **RUN_OPTS, "out": (str, "normality_out", "output directory")},
                  "sampling distributions of the loading estimates and QQ data"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="matrix-di", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (opts, help_) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.add_argument("--config", default=argparse.SUPPRESS, help="key = value file; flags override it")
        for key, (_, default, h) in opts.items():
            flag = "--" + key.replace("_", "-")
            dflt = f" (default: {default})" if default not in (None, "") else ""
            sp.add_argument(flag, dest=key, default=argparse.SUPPRESS, help=h + dflt, metavar=key.upper())
    return parser


def resolve(command: str, ns: argparse.Namespace) -> dict:
    """Merge defaults, the config file and flags, converting every value."""
    opts = COMMANDS[command][0]
    raw = {}
    given = vars(ns)
    if "config" in given:
        file_vals = io.read_kv(given["config"])
        unknown = sorted(set(file_vals) - set(opts))
        if unknown:
            raise UsageError(f"unknown keys in {given['config']}: {', '.join(unknown)}")
        raw.update(file_vals)
    raw.update({k: v for k, v in given.items() if k in opts})
    cfg = {}
    for key, (conv, default, _) in opts.items():
        if key in raw:
            try:
                cfg[key] = conv(raw[key])
            except ValueError as exc:
                raise UsageError(f"bad value for --{key.replace('_', '-')}: {exc}") from None
        else:
            cfg[key] = default
    return cfg


def _require(cfg: dict, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))


def _header(cfg: dict, command: str) -> dict:
    out = {"command": command}
    for k, v in cfg.items():
        if isinstance(v, list):
            v = ",".join(io.fmt(x) for x in v)
        out[k] = "" if v is None else v
    return out


def _transform(cfg: dict) -> io.TransformSpec:
    per_col = {}
    for item in filter(None, (s.strip() for s in cfg.get("col_transform", "").split(","))):
        col, _, rule = item.partition("=")
        if not rule:
            raise UsageError(f"bad --col-transform entry {item!r}; expected col=rule")
        per_col[col.strip()] = rule.strip()
    return io.TransformSpec(cfg["transform"], per_col, {}, cfg["target_transform"], cfg["center"])


def _lse(cfg: dict) -> bilinear_lse.LseConfig:
    return bilinear_lse.LseConfig(max_iterations=cfg["max_iterations"], rel_tol=cfg["rel_tol"], seed=cfg["seed"])


def _pipeline_configs(cfg: dict) -> list:
    fixed = cfg["k"] is not None or cfg["r"] is not None
    if fixed and cfg["estimate_dims"]:
        raise UsageError("--k/--r and --estimate-dims are mutually exclusive")
    if not fixed and not cfg["estimate_dims"]:
        raise UsageError("give --k and --r, or --estimate-dims")
    if fixed:
        if cfg["k"] is None or cfg["r"] is None:
            raise UsageError("--k and --r must be given together")
        if len(cfg["k"]) != len(cfg["r"]):
            raise UsageError("--k and --r lists must have equal length")
        dims = list(zip(cfg["k"], cfg["r"]))
    else:
        dims = [(None, None)]
    return [
        PipelineConfig(alpha_weight=a, k=k, r=r, estimate_dims=cfg["estimate_dims"],
                       row_threshold=cfg["row_threshold"], col_threshold=cfg["col_threshold"], lse=_lse(cfg))
        for a in cfg["alpha"] for (k, r) in dims
    ]


# --- fit / forecast -------------------------------------------------------------------


@dataclass(frozen=True)
class SavedModel:
    R_hat: np.ndarray
    C_hat: np.ndarray
    alpha_vec: np.ndarray
    beta_vec: np.ndarray
    rows: tuple
    cols: tuple
    horizon: int
    transform: io.TransformSpec
    panel_mean: np.ndarray | None
    target_mean: float | None

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)[:, list(self.rows)][:, :, list(self.cols)]
        F = project_factors(self.R_hat, self.C_hat, X)
        load = LoadingEstimate(self.alpha_vec, self.beta_vec, (0.0,), True, 0)
        return bilinear_lse.forecast(F, load)


def _write_vector(path, name, v, cfg):
    io.write_csv(path, ["index", name], enumerate(v), cfg)


def cmd_fit(cfg: dict) -> dict:
    _require(cfg, "panel", "target")
    pcfgs = _pipeline_configs(cfg)
    if len(pcfgs) != 1:
        raise UsageError("fit takes a single alpha and a single (k, r)")
    spec = _transform(cfg)
    data = io.ingest(cfg["panel"], cfg["target"], spec)
    fit = fit_pipeline(data.series, data.target, cfg["horizon"], pcfgs[0])
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    head = _header(cfg, "fit")
    est, load = fit.factors, fit.loadings
    rows = [data.row_ids[i] for i in fit.rows]
    cols = [data.col_ids[j] for j in fit.cols]
    io.write_csv(os.path.join(out, "R_hat.csv"), ["row_id"] + [f"f{j}" for j in range(est.k)],
                 ([rid] + list(v) for rid, v in zip(rows, est.R_hat)), head)
    io.write_csv(os.path.join(out, "C_hat.csv"), ["col_id"] + [f"f{j}" for j in range(est.r)],
                 ([cid] + list(v) for cid, v in zip(cols, est.C_hat)), head)
    _write_vector(os.path.join(out, "alpha.csv"), "alpha", load.alpha_vec, head)
    _write_vector(os.path.join(out, "beta.csv"), "beta", load.beta_vec, head)
    io.write_csv(os.path.join(out, "factors.csv"), ["time", "i", "j", "value"],
                 ((t, i, j, est.F_hat[s, i, j]) for s, t in enumerate(data.times)
                  for i in range(est.k) for j in range(est.r)), head)
    fitted = fit.fitted_values()
    io.write_csv(os.path.join(out, "fitted.csv"), ["time", "fitted"], zip(data.times, fitted), head)
    mom = alpha_pca.moment_matrices(data.series.values[:, list(fit.rows)][:, :, list(fit.cols)], pcfgs[0].alpha_weight)
    eR = np.linalg.eigvalsh(mom.M_R)[::-1]
    eC = np.linalg.eigvalsh(mom.M_C)[::-1]
    io.write_csv(os.path.join(out, "scree.csv"), ["side", "index", "eigenvalue"],
                 [("row", i + 1, v) for i, v in enumerate(eR)] + [("col", j + 1, v) for j, v in enumerate(eC)], head)
    if data.panel_mean is not None:
        io.write_csv(os.path.join(out, "panel_mean.csv"), ["row_id", "col_id", "mean"],
                     ((a, b, data.panel_mean[i, j]) for i, a in enumerate(data.row_ids)
                      for j, b in enumerate(data.col_ids)), head)
    meta = {
        "k": est.k, "r": est.r, "alpha_weight": pcfgs[0].alpha_weight, "horizon": cfg["horizon"],
        "rows": json.dumps(rows), "cols": json.dumps(cols), "transform": spec.to_string(),
        "col_transform": cfg["col_transform"], "default_transform": spec.default,
        "target_transform": spec.target, "center": int(spec.center),
        "target_mean": "" if data.target_mean is None else data.target_mean,
        "dims_estimated": int(cfg["estimate_dims"]), "dims_fallback": int(fit.dims_fallback),
        "lse_converged": int(load.converged), "lse_iterations": load.iterations,
    }
    io.write_csv(os.path.join(out, "model.csv"), ["key", "value"], meta.items(), head)
    return {"k": est.k, "r": est.r, "n_rows": len(rows), "n_cols": len(cols), "converged": load.converged}


def load_model(path: str) -> SavedModel:
    _, kv = io.read_csv(os.path.join(path, "model.csv"))
    meta = {k: v for k, v in kv}
    _, rrows = io.read_csv(os.path.join(path, "R_hat.csv"))
    _, crows = io.read_csv(os.path.join(path, "C_hat.csv"))
    R = np.array([[float(v) for v in r[1:]] for r in rrows])
    C = np.array([[float(v) for v in r[1:]] for r in crows])
    a = np.array([float(r[1]) for r in io.read_csv(os.path.join(path, "alpha.csv"))[1]])
    b = np.array([float(r[1]) for r in io.read_csv(os.path.join(path, "beta.csv"))[1]])
    per_col = {}
    for item in filter(None, meta.get("col_transform", "").split(",")):
        col, _, rule = item.partition("=")
        per_col[col.strip()] = rule.strip()
    spec = io.TransformSpec(meta["default_transform"], per_col, {}, meta["target_transform"], bool(int(meta["center"])))
    pm = None
    mean_path = os.path.join(path, "panel_mean.csv")
    if spec.center and os.path.exists(mean_path):
        pm = {(r[0], r[1]): float(r[2]) for r in io.read_csv(mean_path)[1]}
    tm = float(meta["target_mean"]) if meta.get("target_mean") else None
    return SavedModel(R, C, a, b, tuple(json.loads(meta["rows"])), tuple(json.loads(meta["cols"])),
                      int(meta["horizon"]), spec, pm, tm)


def cmd_forecast(cfg: dict) -> dict:
    _require(cfg, "model", "panel")
    model = load_model(cfg["model"])
    panel = io.read_panel(cfg["panel"])
    if cfg["target"] is not None:
        t_times, y = io.read_target(cfg["target"])
        lookup = dict(zip(t_times, y))
        yv = np.array([lookup.get(t, np.nan) for t in panel.times])
    else:
        yv = np.ones(len(panel.times))
    means = None
    if model.transform.center:
        if model.panel_mean is None:
            raise ValidationError("model was centered but panel_mean.csv is missing")
        pm = np.array([[model.panel_mean[(a, b)] for b in panel.col_ids] for a in panel.row_ids])
        means = (pm, model.target_mean if model.target_mean is not None else 0.0)
    data = io.transform_panel(panel, yv, model.transform, means)
    pos_r = {rid: i for i, rid in enumerate(data.row_ids)}
    pos_c = {cid: j for j, cid in enumerate(data.col_ids)}
    missing = [x for x in model.rows if x not in pos_r] + [x for x in model.cols if x not in pos_c]
    if missing:
        raise ValidationError(f"panel lacks ids used by the model: {', '.join(missing)}")
    X = data.series.values[:, [pos_r[x] for x in model.rows]][:, :, [pos_c[x] for x in model.cols]]
    sub = SavedModel(model.R_hat, model.C_hat, model.alpha_vec, model.beta_vec,
                     tuple(range(len(model.rows))), tuple(range(len(model.cols))), model.horizon,
                     model.transform, None, None)
    pred = sub.predict(X)
    io.write_csv(cfg["out"], ["time", "prediction"], zip(data.times, pred), _header(cfg, "forecast"))
    return {"n": int(pred.size)}


# --- screen / eval ---------------------------------------------------------------------


def cmd_screen(cfg: dict) -> dict:
    _require(cfg, "panel", "target")
    data = io.ingest(cfg["panel"], cfg["target"], _transform(cfg))
    res = run_screen(data.series, data.target, cfg["row_threshold"], cfg["col_threshold"])
    out = cfg["out"]
    head = _header(cfg, "screen")
    io.write_csv(os.path.join(out, "correlations.csv"), ["row_id", "col_id", "rho"],
                 ((a, b, res.corr[i, j]) for i, a in enumerate(data.row_ids) for j, b in enumerate(data.col_ids)), head)
    (ri, rv), (ci, cv) = res.scree()
    rows = [("row", data.row_ids[i], v, int(i in res.kept_rows)) for i, v in zip(ri, rv)]
    rows += [("col", data.col_ids[j], v, int(j in res.kept_cols)) for j, v in zip(ci, cv)]
    io.write_csv(os.path.join(out, "scree.csv"), ["side", "id", "mean_abs_corr", "kept"], rows, head)
    X = data.series.values[:, list(res.kept_rows)][:, :, list(res.kept_cols)]
    io.write_panel(os.path.join(out, "refined_panel.csv"), X, data.times,
                   [data.row_ids[i] for i in res.kept_rows], [data.col_ids[j] for j in res.kept_cols], head)
    io.write_target(os.path.join(out, "target.csv"), data.target.values, data.times, head)
    return {"kept_rows": len(res.kept_rows), "kept_cols": len(res.kept_cols)}


def cmd_eval(cfg: dict) -> dict:
    _require(cfg, "panel", "target")
    data = io.ingest(cfg["panel"], cfg["target"], _transform(cfg))
    h, folds, frac = cfg["horizon"], cfg["folds"], cfg["test_fraction"]
    reports = []
    for pc in _pipeline_configs(cfg):
        rep = evaluate.rolling_cv(data.series, data.target, pc, h, folds, frac)
        reports.append(("alpha_pca_lse", pc.alpha_weight, pc.k, pc.r, rep))
    best = min(reports, key=lambda x: x[4].mean_msfe)[4]
    names = [] if cfg["benchmarks"].strip().lower() == "none" else [b.strip() for b in cfg["benchmarks"].split(",") if b.strip()]
    for name in names:
        bk = BenchmarkKind(name, lse=_lse(cfg))
        reports.append((name, None, None, None, evaluate.rolling_cv(data.series, data.target, bk, h, folds, frac)))
    header = ["model", "alpha", "k", "r", "mean_msfe"] + [f"fold_{i + 1}" for i in range(folds)] + ["dm_stat", "dm_p_value"]
    rows = []
    for name, a, k, r, rep in reports:
        dm_s = dm_p = ""
        if a is None:
            dm = evaluate.dm_test(best.squared_errors, rep.squared_errors, h)
            dm_s, dm_p = dm.statistic, dm.p_value
        rows.append([name, "" if a is None else a, "" if k is None else k, "" if r is None else r, rep.mean_msfe,
                     *rep.fold_msfe, dm_s, dm_p])
    io.write_csv(cfg["out"], header, rows, _header(cfg, "eval"))
    return {"rows": len(rows), "best_pipeline_msfe": best.mean_msfe}


# --- simulation commands --------------------------------------------------------------


def cmd_simulate(cfg: dict) -> dict:
    out = cfg["out"]
    head = _header(cfg, "simulate")
    if cfg["fixture"] == "planted":
        fx = simulate.planted_fixture(cfg["seed"])
        io.write_panel(os.path.join(out, "panel.csv"), fx.X, None, fx.row_ids, fx.col_ids, head)
        io.write_target(os.path.join(out, "target.csv"), fx.y, None, head)
        return {"T": fx.X.shape[0], "p": fx.X.shape[1], "q": fx.X.shape[2]}
    if cfg["fixture"] != "none":
        raise UsageError(f"unknown fixture {cfg['fixture']!r}; use 'planted' or 'none'")
    sc = simulate.SimConfig(p=cfg["p"], q=cfg["q"], k=cfg["k"], r=cfg["r"], T=cfg["T"], horizon=cfg["horizon"],
                            factor_kind=FactorKind(cfg["factor_kind"]), noise_kind=NoiseKind(cfg["noise_kind"]),
                            seed=cfg["seed"], noise_scale=cfg["noise_scale"], replications=1)
    truth, X, y = simulate.gen_replication(sc, cfg["rep"])
    io.write_panel(os.path.join(out, "panel.csv"), X.values, None, None, None, head)
    io.write_target(os.path.join(out, "target.csv"), y.values, None, head)
    io.write_matrix(os.path.join(out, "R.csv"), truth.R, head)
    io.write_matrix(os.path.join(out, "C.csv"), truth.C, head)
    _write_vector(os.path.join(out, "alpha.csv"), "alpha", truth.alpha_vec, head)
    _write_vector(os.path.join(out, "beta.csv"), "beta", truth.beta_vec, head)
    return {"T": sc.T, "p": sc.p, "q": sc.q}


def cmd_mc(cfg: dict) -> dict:
    table, reps, seed, jobs = cfg["table"], cfg["reps"], cfg["seed"], cfg["threads"]
    head = _header(cfg, "mc")
    if table in (1, 2):
        kw = dict(replications=reps, seed=seed, alpha_weight=cfg["alpha"], normalize_loadings=cfg["normalize_loadings"])
        grid = simulate.table1_grid(**kw) if table == 1 else simulate.table2_grid(**kw)
        rows = (simulate.run_table1 if table == 1 else simulate.run_table2)(grid, n_jobs=jobs)
    elif table == 3:
        sc = simulate.ScreenStudyConfig(replications=reps, seed=seed, normalize_loadings=cfg["normalize_loadings"])
        rows, _ = simulate.run_table3(sc, n_jobs=jobs)
    else:
        raise UsageError("--table must be 1, 2 or 3")
    keys = list(rows[0])
    io.write_csv(cfg["out"], keys, ([row[k] for k in keys] for row in rows), head)
    return {"cells": len(rows)}


def cmd_normality(cfg: dict) -> dict:
    sc = simulate.SimConfig(p=10, q=10, k=3, r=2, T=cfg["T"], seed=cfg["seed"])
    res = simulate.run_normality(sc, cfg["reps"], tuple(cfg["alphas"]), n_jobs=cfg["threads"])
    out = cfg["out"]
    head = _header(cfg, "normality")
    cols = res.columns
    names = [f"{e}@alpha={a}" for e, a in cols]
    n = len(res.raw[cols[0]])
    io.write_csv(os.path.join(out, "samples.csv"), ["rep"] + names,
                 ([i] + [res.standardized[c][i] for c in cols] for i in range(n)), head)
    io.write_csv(os.path.join(out, "samples_raw.csv"), ["rep"] + names,
                 ([i] + [res.raw[c][i] for c in cols] for i in range(n)), head)
    qq_rows = []
    for e, a in cols:
        theo, z = res.qq(e, a)
        qq_rows += [(e, a, th, zz) for th, zz in zip(theo, z)]
    io.write_csv(os.path.join(out, "qq.csv"), ["estimand", "alpha", "normal_quantile", "sample_quantile"], qq_rows, head)
    summ = [(e, a, res.qq_correlation(e, a), int(res.degenerate[(e, a)])) for e, a in cols]
    io.write_csv(os.path.join(out, "summary.csv"), ["estimand", "alpha", "qq_correlation", "degenerate"], summ, head)
    return {"columns": len(cols), "min_qq_correlation": float(np.nanmin([s[2] for s in summ]))}


HANDLERS = {
    "fit": cmd_fit, "forecast": cmd_forecast, "screen": cmd_screen, "eval": cmd_eval,
    "simulate": cmd_simulate, "mc": cmd_mc, "normality": cmd_normality,
}


def _error_line(kind: str, message: str) -> str:
    return f"error: type={kind} message={json.dumps(str(message))}"


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if ns.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
        cfg = resolve(ns.command, ns)
        result = HANDLERS[ns.command](cfg)
    except UsageError as exc:
        print(_error_line("UsageError", exc), file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, LinalgError, OSError, ValueError, KeyError, StopIteration) as exc:
        print(_error_line(type(exc).__name__, exc), file=sys.stderr)
        return EXIT_FAILURE
    print("ok " + " ".join(f"{k}={io.fmt(v)}" for k, v in result.items()))
    return 0


if __name__ == "__main__":
    sys.exit(main())
