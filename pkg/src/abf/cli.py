"""Configuration-driven experiment harness.

Subcommands:

    abf run <config.toml>        run an experiment, emit artifacts
    abf validate <config.toml>   check a config without running
    abf ingest <csv> <out.csv>   build a daily market-data bundle from a CSV
    abf report <csv>             re-render an emitted CSV as an aligned table

Configs are declarative TOML; every experiment requires an explicit seed (no
wall-clock defaults), and artifacts are byte-identical across re-runs of the
same config.  CSV outputs use '.' decimals, ISO dates and LF line endings.
The ABF_WORKERS environment variable (or [workers].count) bounds the numba
thread pool; results do not depend on it.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

import numpy as np

from . import __version__
from .abc import nearest_neighbor_select, tolerance_schedule
from .core import RngStream
from .data import MarketDataBundle, ingest_intraday_csv, write_bundle_csv
from .errors import ConfigError
from .evaluation import write_merging_reports_csv, write_score_report_csv
from .experiments import (
    hpd_interval,
    make_synthetic_bundle,
    run_inar_table1,
    run_jumpdiff_empirical,
    run_ma2_table2,
    run_merging_fig2,
    run_sv_section4,
)
from .predictive import write_predictive_csv

KINDS = ("inar_table1", "ma2_table2", "merging_fig2", "sv_section4", "jumpdiff_empirical")


def load_config(path: str) -> dict:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, "rb") as f:
        cfg = tomllib.load(f)
    validate_config(cfg, base_dir=os.path.dirname(os.path.abspath(path)))
    return cfg


def validate_config(cfg: dict, base_dir: str = ".") -> None:
    exp = cfg.get("experiment")
    if not isinstance(exp, dict):
        raise ConfigError("missing [experiment] table")
    kind = exp.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"experiment.kind must be one of {KINDS}")
    if "seed" not in exp or not isinstance(exp["seed"], int):
        raise ConfigError("experiment.seed must be an explicit integer")
    if "output_dir" not in exp:
        raise ConfigError("experiment.output_dir is required")
    abc_cfg = cfg.get("abc", {})
    window = cfg.get("window", {})
    if abc_cfg.get("schedule"):
        start_T = window.get("start_T")
        if start_T is not None and ("alpha" in abc_cfg or "n_draws" in abc_cfg):
            alpha_t, n_t = tolerance_schedule(int(start_T))
            if "alpha" in abc_cfg and abs(abc_cfg["alpha"] - alpha_t) > 1e-12:
                raise ConfigError("abc.alpha contradicts the tolerance schedule at start_T")
            if "n_draws" in abc_cfg and int(abc_cfg["n_draws"]) != n_t:
                raise ConfigError("abc.n_draws contradicts the tolerance schedule at start_T")
    data_cfg = cfg.get("data", {})
    path = data_cfg.get("path")
    if path is not None:
        full = path if os.path.isabs(path) else os.path.join(base_dir, path)
        if not os.path.exists(full):
            raise ConfigError(f"data.path does not exist: {full}")


def config_fingerprint(path: str) -> str:
    with open(path, "rb") as f:
        return hashlib.sha256(f.read()).hexdigest()


def _workers(cfg: dict) -> int:
    env = os.environ.get("ABF_WORKERS")
    n = int(env) if env else int(cfg.get("workers", {}).get("count", 0))
    if n > 0:
        try:
            import numba

            numba.set_num_threads(max(1, min(n, numba.config.NUMBA_NUM_THREADS)))
        except Exception:
            pass
        return n
    return 0


def run_experiment(config_path: str) -> int:
    """Run the configured experiment; returns the process exit status."""
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    t0 = time.time()
    exp = cfg["experiment"]
    out_dir = exp["output_dir"]
    os.makedirs(out_dir, exist_ok=True)
    fingerprint = config_fingerprint(config_path)
    workers = _workers(cfg)
    kind = exp["kind"]
    try:
        outputs = _DISPATCH[kind](cfg, out_dir, fingerprint)
    except Exception as exc:  # structured error log, nonzero exit
        with open(os.path.join(out_dir, "error.log"), "w", newline="\n") as f:
            f.write(f"experiment = {kind}\nerror = {type(exc).__name__}: {exc}\n")
        print(f"experiment failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    manifest = {
        "experiment": kind,
        "config_sha256": fingerprint,
        "seed": exp["seed"],
        "version": __version__,
        "wall_clock_s": round(time.time() - t0, 3),
        "workers": workers,
        "outputs": sorted(outputs),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", newline="\n") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"{kind}: wrote {len(outputs)} artifacts to {out_dir}")
    return 0


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", newline="\n") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def _run_inar(cfg, out_dir, fingerprint):
    exp = cfg["experiment"]
    model = cfg.get("model", {})
    abc_cfg = cfg.get("abc", {})
    window = cfg.get("window", {})
    res = run_inar_table1(
        seed=exp["seed"],
        theta0=(model.get("rho", 0.4), model.get("lam", 2.0)),
        start_T=window.get("start_T", 100),
        K=window.get("steps", 100),
        alpha=abc_cfg.get("alpha", 0.01),
        n_draws=abc_cfg.get("n_draws", 20000),
    )
    outputs = []
    summary = {"config_sha256": fingerprint}
    for label in ("abf", "exact"):
        name = f"scores_{label}.csv"
        write_score_report_csv(res[label], os.path.join(out_dir, name))
        outputs.append(name)
        ls, qs, cr = res[label].averages
        summary[label] = {"ls": ls, "qs": qs, "crps": cr}
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    outputs.append("summary.json")
    return outputs


def _run_ma2(cfg, out_dir, fingerprint):
    exp = cfg["experiment"]
    model = cfg.get("model", {})
    window = cfg.get("window", {})
    lags = tuple(cfg.get("abc", {}).get("lags", (1, 2, 3, 4)))
    res = run_ma2_table2(
        seed=exp["seed"],
        theta0=(model.get("theta1", 0.8), model.get("theta2", 0.6), model.get("sigma", 1.0)),
        start_T=window.get("start_T", 500),
        K=window.get("steps", 100),
        lags=lags,
    )
    outputs = []
    summary = {"config_sha256": fingerprint}
    for label in [f"abf_l{l}" for l in lags] + ["exact"]:
        name = f"scores_{label}.csv"
        write_score_report_csv(res[label], os.path.join(out_dir, name))
        outputs.append(name)
        ls, qs, cr = res[label].averages
        summary[label] = {"ls": ls, "qs": qs, "crps": cr}
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    outputs.append("summary.json")
    return outputs


def _run_merging(cfg, out_dir, fingerprint):
    exp = cfg["experiment"]
    model = cfg.get("model", {})
    merging = cfg.get("merging", {})
    reports = run_merging_fig2(
        seed=exp["seed"],
        theta0=(model.get("theta1", 0.8), model.get("theta2", 0.6), model.get("sigma", 1.0)),
        T_list=tuple(merging.get("T_list", (500, 2000, 4000))),
        replications=merging.get("replications", 20),
        lags=tuple(merging.get("lags", (1, 2, 3, 4))),
    )
    write_merging_reports_csv(reports, os.path.join(out_dir, "merging.csv"))
    summary = {"config_sha256": fingerprint}
    for label, rep in reports.items():
        summary[label] = {
            "T": list(rep.T_list),
            "tv": rep.tv.tolist(),
            "hellinger": rep.hellinger.tolist(),
            "ovl": rep.ovl.tolist(),
            "rmse": rep.rmse.tolist(),
        }
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    return ["merging.csv", "summary.json"]


def _run_sv(cfg, out_dir, fingerprint):
    exp = cfg["experiment"]
    model = cfg.get("model", {})
    abc_cfg = cfg.get("abc", {})
    res = run_sv_section4(
        seed=exp["seed"],
        theta0=(model.get("theta1", 0.9), model.get("theta2", 0.1)),
        T=cfg.get("window", {}).get("start_T", 500),
        alpha=abc_cfg.get("alpha", 0.01),
        n_draws=abc_cfg.get("n_draws", 50000),
    )
    outputs = []
    write_predictive_csv(res["exact_pred"], os.path.join(out_dir, "predictive_exact.csv"),
                         {"config": fingerprint})
    outputs.append("predictive_exact.csv")
    for aux, pred in res["abf_preds"].items():
        name = f"predictive_pf_{aux}.csv"
        write_predictive_csv(pred, os.path.join(out_dir, name), {"config": fingerprint})
        outputs.append(name)
    write_predictive_csv(res["fs_pred"], os.path.join(out_dir, "predictive_fs.csv"),
                         {"config": fingerprint})
    outputs.append("predictive_fs.csv")
    summary = {
        "config_sha256": fingerprint,
        "tv_pf": res["tv_pf"],
        "tv_fs": res["tv_fs"],
        "pairwise_tv": res["pairwise_tv"],
        "pmmh_acceptance": res["pmmh_info"]["acceptance_rate"],
    }
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    outputs.append("summary.json")
    return outputs


def _run_jumpdiff(cfg, out_dir, fingerprint):
    exp = cfg["experiment"]
    data_cfg = cfg.get("data", {})
    abc_cfg = cfg.get("abc", {})
    window = cfg.get("window", {})
    if data_cfg.get("path"):
        bundle = ingest_intraday_csv(data_cfg["path"])
    else:
        bundle = make_synthetic_bundle(exp["seed"], length=data_cfg.get("length", 1750))
    res = run_jumpdiff_empirical(
        bundle,
        seed=exp["seed"],
        holdout=window.get("holdout", 250),
        n_draws=abc_cfg.get("n_draws"),
        alpha=abc_cfg.get("alpha"),
        use_schedule=bool(abc_cfg.get("schedule", False)),
        studentize=bool(abc_cfg.get("studentize", True)),
        n_particles=cfg.get("filtering", {}).get("n_particles", 500),
        m_per_draw=cfg.get("filtering", {}).get("m_per_draw", 10),
        n_pred_draws=cfg.get("filtering", {}).get("n_pred_draws"),
        freeze_posterior=bool(window.get("freeze_posterior", False)),
    )
    outputs = []
    names = res["param_names"]
    lines = ["# config = " + fingerprint, "spec,parameter,mpm,hpd_lo,hpd_hi"]
    for label, spec_res in sorted(res["specs"].items()):
        for j, pname in enumerate(names):
            lines.append(
                f"{label},{pname},{spec_res.mpm[j]:.6g},{spec_res.hpd[j][0]:.6g},{spec_res.hpd[j][1]:.6g}"
            )
    with open(os.path.join(out_dir, "posterior_summary.csv"), "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
    outputs.append("posterior_summary.csv")

    lines = ["# config = " + fingerprint, "spec,variable,ls,qs,crps"]
    for label, spec_res in sorted(res["specs"].items()):
        ls, qs, cr = spec_res.scores_r
        lines.append(f"{label},r,{ls:.12g},{qs:.12g},{cr:.12g}")
        ls, qs, cr = spec_res.scores_lnbv
        lines.append(f"{label},lnbv,{ls:.12g},{qs:.12g},{cr:.12g}")
    with open(os.path.join(out_dir, "scores.csv"), "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
    outputs.append("scores.csv")

    summary = {"config_sha256": fingerprint, "start_T": res["start_T"], "holdout": res["holdout"]}
    for label, spec_res in res["specs"].items():
        summary[label] = {
            "scores_r": spec_res.scores_r,
            "scores_lnbv": spec_res.scores_lnbv,
            "n_resimulated": spec_res.n_resimulated,
        }
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    outputs.append("summary.json")
    return outputs


_DISPATCH = {
    "inar_table1": _run_inar,
    "ma2_table2": _run_ma2,
    "merging_fig2": _run_merging,
    "sv_section4": _run_sv,
    "jumpdiff_empirical": _run_jumpdiff,
}


def render_report(path: str) -> str:
    """Re-render an emitted CSV as an aligned text table."""
    with open(path) as f:
        rows = [line.rstrip("\n") for line in f if not line.startswith("#")]
    cells = [row.split(",") for row in rows if row]
    widths = [max(len(c[i]) for c in cells) for i in range(len(cells[0]))]
    out = []
    for row in cells:
        out.append("  ".join(c.rjust(w) for c, w in zip(row, widths)))
    return "\n".join(out)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="abf", description="approximate Bayesian forecasting harness")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_val = sub.add_parser("validate", help="validate a config without running")
    p_val.add_argument("config")
    p_ing = sub.add_parser("ingest", help="build a daily bundle CSV from raw data")
    p_ing.add_argument("csv")
    p_ing.add_argument("out")
    p_rep = sub.add_parser("report", help="render an emitted CSV as aligned text")
    p_rep.add_argument("csv")
    args = parser.parse_args(argv)

    if args.command == "run":
        return run_experiment(args.config)
    if args.command == "validate":
        try:
            load_config(args.config)
        except ConfigError as exc:
            print(f"invalid: {exc}", file=sys.stderr)
            return 2
        print("ok")
        return 0
    if args.command == "ingest":
        try:
            bundle = ingest_intraday_csv(args.csv)
        except Exception as exc:
            print(f"ingest failed: {exc}", file=sys.stderr)
            return 1
        write_bundle_csv(bundle, args.out)
        dropped = f", dropped {len(bundle.dropped_days)} days" if bundle.dropped_days else ""
        print(f"wrote {len(bundle)} days to {args.out}{dropped}")
        return 0
    if args.command == "report":
        print(render_report(args.csv))
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
