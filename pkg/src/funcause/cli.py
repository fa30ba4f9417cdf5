"""Command-line front end: simulate, estimate, benchmark, register.

Exit codes: 0 success, 1 runtime error, 2 usage error.  The env var
FUNCAUSE_THREADS caps benchmark parallelism.  Every command is
deterministic given its config and seed.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import os
import subprocess
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np

from . import classical, elastic, estimators, frechet, plots, simgen
from .errors import FuncauseError
from .fdata import Curve, Dataset, load_dataset, save_dataset
from .frechet import Metric, Weighting
from .inference import effect_ci
from .kernels import KernelFamily, KernelSpec, median_heuristic, output_gram

SCHEMA_VERSION = 1

ESTIMATOR_NAMES = (
    "ipw",
    "dr",
    "frechet-euclid",
    "frechet-fr",
    "kernel",
    "operator-kernel",
    "srvf-operator-kernel",
    "iterative-srvf",
)

_KERNEL_ESTIMATORS = {"kernel", "operator-kernel", "srvf-operator-kernel", "iterative-srvf"}

_LAM_GRID = (1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1)
_SCALE_GRID = (0.5, 1.0, 2.0)


def _thread_count() -> int:
    env = os.environ.get("FUNCAUSE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _git_hash() -> str:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"],
            capture_output=True,
            text=True,
            timeout=10,
            cwd=os.path.dirname(os.path.abspath(__file__)),
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


def _kernel_setup(ds: Dataset, scale: float = 1.0):
    """Default treatment and covariate kernel specs for a dataset."""
    if ds.is_binary():
        kx = KernelSpec(KernelFamily.BINARY_INDICATOR)
    else:
        kx = KernelSpec(
            KernelFamily.SQUARED_EXPONENTIAL, scale * median_heuristic(ds.treatments)
        )
    if ds.covariate_grid is not None:
        med = median_heuristic([s.covariate_curve for s in ds.samples], metric="fisher_rao")
        kv = KernelSpec(KernelFamily.FISHER_RAO_GAUSSIAN, 1.0 / (2.0 * (scale * med) ** 2))
    elif ds.covariate_matrix.shape[1] > 0:
        kv = KernelSpec(
            KernelFamily.SQUARED_EXPONENTIAL, scale * median_heuristic(ds.covariate_matrix)
        )
    else:
        kv = None
    return kx, kv


def _search_hyperparameters(ds: Dataset, k_y=None, seed: int = 0):
    """Grid search over bandwidth scales and lambdas on a 20% holdout."""
    best = (None, None, _LAM_GRID[0], float("inf"))
    for scale in _SCALE_GRID:
        kx, kv = _kernel_setup(ds, scale)
        for lam in _LAM_GRID:
            err = estimators.holdout_error(ds, kx, kv, k_y=k_y, lam=lam, seed=seed)
            if err < best[3]:
                best = (kx, kv, lam, err)
    if best[0] is None:
        kx, kv = _kernel_setup(ds)
        return kx, kv, 1e-2
    return best[0], best[1], best[2]


def _contrast_levels(ds: Dataset):
    if ds.is_binary():
        return 1.0, 0.0
    xbar = float(ds.treatments.mean())
    return xbar + 0.5, xbar - 0.5


def _kernel_delta(model) -> frechet.DynamicEffect:
    x1, x0 = _contrast_levels_from_model(model)
    return frechet.effect_from_means(
        estimators.potential_outcome(model, x1),
        estimators.potential_outcome(model, x0),
        Metric.EUCLIDEAN,
    )


def _contrast_levels_from_model(model):
    x = model.treatments
    if np.all((x == 0.0) | (x == 1.0)):
        return 1.0, 0.0
    xbar = float(x.mean())
    return xbar + 0.5, xbar - 0.5


def run_estimator(
    ds: Dataset,
    name: str,
    lam: Optional[float] = None,
    search: bool = False,
    seed: int = 0,
) -> frechet.DynamicEffect:
    """Run one named estimator and return its dynamic effect."""
    if name not in ESTIMATOR_NAMES:
        raise ValueError(f"unknown estimator: {name}")

    if name == "ipw":
        return classical.ipw_effect(ds, classical.fit_propensity(ds))
    if name == "dr":
        pm = classical.fit_propensity(ds)
        om = classical.fit_outcome_models(ds)
        return classical.dr_effect(ds, pm, om)
    if name == "frechet-euclid":
        f1, f0 = frechet.group_potential_outcomes(ds, Metric.EUCLIDEAN, Weighting.UNIFORM)
        return frechet.dynamic_effect(f1, f0)
    if name == "frechet-fr":
        f1, f0 = frechet.group_potential_outcomes(ds, Metric.FISHER_RAO_SRSF, Weighting.UNIFORM)
        return frechet.dynamic_effect(f1, f0, Metric.EUCLIDEAN)

    if name == "iterative-srvf":
        cfg = estimators.IterativeConfig(lam=lam if lam is not None else 1e-2)
        return estimators.iterative_srvf_estimate(ds, cfg).effect

    work_ds = ds
    if name == "srvf-operator-kernel":
        work_ds, _ = estimators.register_outcomes(ds, per_arm=True, max_iter=5)
    k_y = None
    if name in ("operator-kernel", "srvf-operator-kernel"):
        k_y = output_gram(work_ds.outcome_grid)

    if search:
        kx, kv, chosen = _search_hyperparameters(work_ds, k_y=k_y, seed=seed)
        lam = chosen if lam is None else lam
    else:
        kx, kv = _kernel_setup(work_ds)
        if lam is None:
            lam = 1e-2
    model = estimators.krr_fit(work_ds, kx, kv, k_y=k_y, lam=lam)
    return _kernel_delta(model)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _scenario_config(args) -> simgen.ScenarioConfig:
    return simgen.ScenarioConfig(
        n=args.n,
        t=args.t,
        scenario=simgen.Scenario(args.scenario),
        noise=args.noise,
        shift=args.shift,
        confounding=args.confounding,
        seed=args.seed,
        amplitude=args.amplitude,
        n_covariates=args.n_covariates,
        baseline_offset=args.baseline_offset,
    )


def cmd_simulate(args) -> int:
    cfg = _scenario_config(args)
    ds, truth = simgen.generate(cfg, replicate=args.replicate)
    save_dataset(ds, args.output)
    if args.truth:
        with open(args.truth, "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "schema_version": SCHEMA_VERSION,
                    "scenario": cfg.scenario.value,
                    "beta_x": truth.beta_x.values.tolist(),
                    "true_phi_date": truth.true_phi_date,
                },
                fh,
                indent=2,
            )
    print(f"wrote {args.output} ({len(ds)} samples, T={len(ds.outcome_grid)})")
    return 0


def cmd_estimate(args) -> int:
    ds = load_dataset(args.dataset)
    effect = run_estimator(ds, args.estimator, lam=args.lam, search=args.search, seed=args.seed)
    result = {
        "schema_version": SCHEMA_VERSION,
        "estimator": args.estimator,
        "phi_date": effect.scalar_norm,
        "delta": effect.delta.values.tolist(),
        "n": len(ds),
        "t": len(ds.outcome_grid),
    }
    if args.ci:
        ci = effect_ci(ds, effect.delta, level=args.level)
        result["ci"] = {
            "estimate": ci.estimate,
            "lower": ci.lower,
            "upper": ci.upper,
            "level": ci.level,
            "regime": ci.regime.value,
            "pointwise": ci.pointwise.tolist(),
        }
    text = json.dumps(result, indent=2)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        print(text)
    return 0


def cmd_register(args) -> int:
    ds = load_dataset(args.dataset)
    do_out = args.target in ("outcomes", "both")
    do_cov = args.target in ("covariates", "both")
    if do_cov and ds.covariate_grid is None:
        raise ValueError("dataset has no covariate curves to register")

    # plain elastic registration without the estimator-side smoothing split;
    # with the penalized identity fallback this is a fixed point, so running
    # the command twice leaves the curves unchanged
    current = ds
    if do_cov:
        current, _ = estimators.register_covariate_curves(current, penalty=0.05)
    if do_out:
        current, _ = estimators.register_outcomes(
            current, smooth_window=0, penalty=0.05
        )
    save_dataset(current, args.output)
    print(f"wrote {args.output}")
    return 0


def _load_benchmark_config(args) -> dict:
    cfg = {
        "scenario": args.scenario,
        "estimators": args.estimators.split(","),
        "sizes": [int(x) for x in args.sizes.split(",")],
        "replicates": args.replicates,
        "seed": args.seed,
        "t": args.t,
        "noise": args.noise,
        "shift": args.shift,
        "confounding": args.confounding,
        "search": args.search,
        "output": args.output,
    }
    if args.config:
        parser = configparser.ConfigParser()
        if not parser.read(args.config):
            raise ValueError(f"cannot read config file: {args.config}")
        sec = parser["benchmark"]
        if "scenario" in sec:
            cfg["scenario"] = sec["scenario"]
        if "estimators" in sec:
            cfg["estimators"] = [e.strip() for e in sec["estimators"].split(",")]
        if "sizes" in sec:
            cfg["sizes"] = [int(x) for x in sec["sizes"].split(",")]
        for key in ("replicates", "seed", "t"):
            if key in sec:
                cfg[key] = sec.getint(key)
        for key in ("noise", "shift", "confounding"):
            if key in sec:
                cfg[key] = sec.getfloat(key)
        if "search" in sec:
            cfg["search"] = sec.getboolean("search")
        if "output" in sec:
            cfg["output"] = sec["output"]
    if cfg["replicates"] < 1:
        raise ValueError("replicates must be >= 1")
    for est in cfg["estimators"]:
        if est not in ESTIMATOR_NAMES:
            raise ValueError(f"unknown estimator: {est}")
    return cfg


def _benchmark_task(cfg: dict, n: int, rep: int) -> list:
    scen = simgen.ScenarioConfig(
        n=n,
        t=cfg["t"],
        scenario=simgen.Scenario(cfg["scenario"]),
        noise=cfg["noise"],
        shift=cfg["shift"],
        confounding=cfg["confounding"],
        seed=cfg["seed"],
    )
    ds, truth = simgen.generate(scen, replicate=rep)
    records = []
    for est in cfg["estimators"]:
        t0 = time.perf_counter()
        effect = run_estimator(ds, est, search=cfg["search"], seed=cfg["seed"] + rep)
        wall = time.perf_counter() - t0
        mae, per_t = simgen.effect_error(effect, truth)
        records.append(
            {
                "estimator": est,
                "n": n,
                "replicate": rep,
                "mae": mae,
                "per_t": per_t.values,
                "wall_time_s": wall,
            }
        )
    return records


def cmd_benchmark(args) -> int:
    cfg = _load_benchmark_config(args)
    outdir = cfg["output"]
    os.makedirs(outdir, exist_ok=True)

    tasks = [(n, rep) for n in cfg["sizes"] for rep in range(cfg["replicates"])]
    records = []
    with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        for batch in pool.map(lambda nr: _benchmark_task(cfg, *nr), tasks):
            records.extend(batch)
    # deterministic output order regardless of thread scheduling
    records.sort(key=lambda r: (r["estimator"], r["n"], r["replicate"]))

    with open(os.path.join(outdir, "summary.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["estimator", "n", "mae_mean", "mae_sd", "per_t_std_mean", "wall_time_s"])
        for est in cfg["estimators"]:
            for n in cfg["sizes"]:
                rows = [r for r in records if r["estimator"] == est and r["n"] == n]
                maes = np.array([r["mae"] for r in rows])
                stds = np.array([float(np.std(r["per_t"])) for r in rows])
                wall = sum(r["wall_time_s"] for r in rows)
                writer.writerow(
                    [
                        est,
                        n,
                        f"{maes.mean():.6f}",
                        f"{maes.std(ddof=1) if maes.size > 1 else 0.0:.6f}",
                        f"{stds.mean():.6f}",
                        f"{wall:.3f}",
                    ]
                )

    with open(os.path.join(outdir, "boxplot_data.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["estimator", "n", "replicate", "mae"])
        for r in records:
            writer.writerow([r["estimator"], r["n"], r["replicate"], f"{r['mae']:.6f}"])

    n_max = max(cfg["sizes"])
    tgrid = np.linspace(0.0, 1.0, cfg["t"])
    per_t_curves = {}
    with open(os.path.join(outdir, "per_t_error.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["estimator", "n", "t_index", "t", "abs_error_mean"])
        for est in cfg["estimators"]:
            for n in cfg["sizes"]:
                rows = [r for r in records if r["estimator"] == est and r["n"] == n]
                mean_curve = np.mean([r["per_t"] for r in rows], axis=0)
                if n == n_max:
                    per_t_curves[est] = mean_curve
                for j, (tv, ev) in enumerate(zip(tgrid, mean_curve)):
                    writer.writerow([est, n, j, f"{tv:.6f}", f"{ev:.6f}"])

    plots.line_plot_svg(
        os.path.join(outdir, "per_t_error.svg"),
        tgrid,
        [per_t_curves[e] for e in cfg["estimators"]],
        labels=list(cfg["estimators"]),
        title=f"Mean absolute error over time (n={n_max})",
    )
    groups, labels = [], []
    for est in cfg["estimators"]:
        for n in cfg["sizes"]:
            groups.append([r["mae"] for r in records if r["estimator"] == est and r["n"] == n])
            labels.append(f"{est} n={n}")
    plots.box_plot_svg(
        os.path.join(outdir, "mae_boxplot.svg"),
        groups,
        labels=labels,
        title="MAE by estimator and sample size",
    )

    with open(os.path.join(outdir, "metadata.json"), "w", encoding="utf-8") as fh:
        json.dump(
            {
                "schema_version": SCHEMA_VERSION,
                "git_hash": _git_hash(),
                "config": {k: v for k, v in cfg.items()},
            },
            fh,
            indent=2,
        )
    print(f"wrote benchmark report to {outdir}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_scenario_flags(p):
    p.add_argument("--scenario", default="binary_nonmonotonic",
                   choices=[s.value for s in simgen.Scenario])
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--t", type=int, default=50)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--shift", type=float, default=0.05)
    p.add_argument("--confounding", type=float, default=1.0)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--n-covariates", type=int, default=3)
    p.add_argument("--baseline-offset", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="funcause",
        description="Causal effect estimation for functional outcomes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic dataset")
    _add_scenario_flags(p)
    p.add_argument("--replicate", type=int, default=0)
    p.add_argument("--output", required=True, help="dataset path (.csv or .json)")
    p.add_argument("--truth", help="optional ground-truth JSON path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="run one estimator on a dataset")
    p.add_argument("dataset")
    p.add_argument("--estimator", required=True, choices=ESTIMATOR_NAMES)
    p.add_argument("--lam", type=float, default=None, help="ridge penalty (kernel estimators)")
    p.add_argument("--search", action="store_true", help="holdout hyperparameter search")
    p.add_argument("--ci", action="store_true", help="attach a confidence interval")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="result JSON path (default: stdout)")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("benchmark", help="replicate x size x estimator study")
    _add_scenario_flags(p)
    p.add_argument("--config", help="INI config file with a [benchmark] section")
    p.add_argument("--estimators", default="ipw,kernel")
    p.add_argument("--sizes", default="50,100")
    p.add_argument("--replicates", type=int, default=3)
    p.add_argument("--search", action="store_true")
    p.add_argument("--output", default="benchmark_out")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("register", help="elastic registration of dataset curves")
    p.add_argument("dataset")
    p.add_argument("--target", required=True, choices=("outcomes", "covariates", "both"))
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_register)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FuncauseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
