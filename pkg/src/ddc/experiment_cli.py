"""Experiment orchestration: kappa sweeps, phase queries, CSV emission.

A sweep walks a kappa grid and, per point, computes the asymptotic theory
(maximum-likelihood system below the interpolation threshold, max-margin
system above it) and aggregates Monte Carlo trials of the matching finite-n
trainer.  Each grid point becomes one SweepRow, serialized to CSV with a
JSON sidecar holding the full configuration, so a result file is always
reproducible from itself.

Columns are fixed and 17-significant-digit decimal so that parsing the CSV
back reproduces every float bit-exactly.  Points inside the dead zone
|kappa - kappa*| < margin get empty theory columns and the flag
"near-threshold": both asymptotic systems degenerate at the boundary, while
the simulations remain perfectly well defined there.

Trials are parallelized over (kappa, trial) pairs with a bounded process
pool (DDC_THREADS overrides the worker count); results are keyed by index
and reduced in order, so the emitted CSV is byte-identical no matter the
completion order.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .datagen import generate
from .errors import (
    BracketFailure,
    DdcError,
    NoConvergence,
    NoRoot,
    NotInRegime,
    OutOfDomain,
)
from .feature_map import DataModelSpec, FeatureMap, signal_strength
from .ml_solver import ml_predictions, solve_ml
from .phase_transition import solve_kappa_star, threshold_g
from .svm_solver import solve_svm, svm_predictions
from .trainers import exact_metrics, gd_logistic, svm_train

__all__ = [
    "SweepRow",
    "ExperimentConfig",
    "simulate_point",
    "run_sweep",
    "write_csv",
    "read_sweep_csv",
    "main",
]

# Attribute order defines the CSV column order; lam serializes as "lambda".
_FIELDS = [
    ("kappa", "kappa"),
    ("kappa_star", "kappa_star"),
    ("regime", "regime"),
    ("s", "s"),
    ("risk_theory", "risk_theory"),
    ("excess_theory", "excess_theory"),
    ("cosine_theory", "cosine_theory"),
    ("mu", "mu"),
    ("alpha", "alpha"),
    ("lam", "lambda"),
    ("q_star", "q_star"),
    ("rho_star", "rho_star"),
    ("normalized_margin", "normalized_margin"),
    ("risk_sim_mean", "risk_sim_mean"),
    ("risk_sim_std", "risk_sim_std"),
    ("cosine_sim_mean", "cosine_sim_mean"),
    ("train_error_mean", "train_error_mean"),
    ("sep_fraction", "sep_fraction"),
    ("trials", "trials"),
    ("n", "n"),
    ("seed", "seed"),
    ("solver_flags", "solver_flags"),
]
CSV_COLUMNS = [col for _, col in _FIELDS]


@dataclass(frozen=True)
class SweepRow:
    """One kappa grid point: theory predictions plus simulation aggregates.

    Exactly one of the parameter blocks (mu, alpha, lam) / (q_star,
    rho_star, normalized_margin) is populated, matching the regime; unused
    and unavailable values are None and serialize to empty CSV cells.
    """

    kappa: float
    kappa_star: float = None
    regime: str = None
    s: float = None
    risk_theory: float = None
    excess_theory: float = None
    cosine_theory: float = None
    mu: float = None
    alpha: float = None
    lam: float = None
    q_star: float = None
    rho_star: float = None
    normalized_margin: float = None
    risk_sim_mean: float = None
    risk_sim_std: float = None
    cosine_sim_mean: float = None
    train_error_mean: float = None
    sep_fraction: float = None
    trials: int = 0
    n: int = None
    seed: int = None
    solver_flags: str = ""


@dataclass(frozen=True)
class ExperimentConfig:
    """Reproducible description of a sweep.

    kappa_grid is (start, stop, step) inclusive of the endpoint up to float
    slack.  margin is the half-width of the near-threshold dead zone for
    the theory columns.  method selects the trainer per point: "auto"
    matches the regime (gradient descent below kappa*, SVM above), "gd" or
    "svm" force one.  trials = 0 gives a theory-only sweep.
    """

    model: DataModelSpec
    fmap: FeatureMap
    kappa_grid: tuple
    n: int = 200
    trials: int = 0
    seed: int = 0
    quad_nodes: int = 64
    margin: float = 0.02
    method: str = "auto"

    def __post_init__(self):
        start, stop, step = self.kappa_grid
        if not step > 0:
            raise ValueError("kappa_grid step must be positive")
        if not stop >= start > 0:
            raise ValueError("kappa_grid must satisfy 0 < start <= stop")
        if self.trials < 0:
            raise ValueError("trials must be nonnegative")
        if self.method not in ("auto", "gd", "svm"):
            raise ValueError(f"unknown method: {self.method!r}")

    def kappas(self):
        start, stop, step = self.kappa_grid
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(count)]

    def to_dict(self) -> dict:
        m, f = self.model, self.fmap
        fmap_dict = {"kind": f.kind, "r": f.r}
        if f.kind == "Linear":
            fmap_dict["zeta"] = f.zeta
        else:
            fmap_dict["gamma"] = f.gamma
        return {
            "model": {"kind": m.kind, "r": m.r, "prior_plus": m.prior_plus},
            "map": fmap_dict,
            "kappa_grid": list(self.kappa_grid),
            "n": self.n,
            "trials": self.trials,
            "seed": self.seed,
            "quad_nodes": self.quad_nodes,
            "margin": self.margin,
            "method": self.method,
        }

    @staticmethod
    def from_dict(d: dict) -> "ExperimentConfig":
        m = d["model"]
        f = d["map"]
        model = DataModelSpec(kind=m["kind"], r=float(m["r"]),
                              prior_plus=float(m.get("prior_plus", 0.5)))
        fmap = FeatureMap(kind=f["kind"], r=float(f["r"]),
                          zeta=float(f["zeta"]) if "zeta" in f else None,
                          gamma=float(f["gamma"]) if "gamma" in f else None)
        return ExperimentConfig(
            model=model, fmap=fmap, kappa_grid=tuple(d["kappa_grid"]),
            n=int(d.get("n", 200)), trials=int(d.get("trials", 0)),
            seed=int(d.get("seed", 0)), quad_nodes=int(d.get("quad_nodes", 64)),
            margin=float(d.get("margin", 0.02)),
            method=str(d.get("method", "auto")))


def _theory_cells(model, fmap, kappa, kappa_star, margin, ml_init):
    """Theory columns for one grid point; returns (cells, next_ml_init)."""
    cells = {}
    regime = "ML" if kappa < kappa_star else "SVM"
    cells["regime"] = regime
    if abs(kappa - kappa_star) < margin:
        cells["solver_flags"] = "near-threshold"
        return cells, ml_init
    try:
        s, _ = signal_strength(fmap, kappa)
        if regime == "ML":
            sol = solve_ml(model, fmap, kappa, init=ml_init)
            risk, cosine, excess = ml_predictions(sol, model, s, fmap.r)
            cells.update(mu=sol.mu, alpha=sol.alpha, lam=sol.lam,
                         risk_theory=risk, cosine_theory=cosine,
                         excess_theory=excess)
            if not sol.converged:
                cells["solver_flags"] = "ml-not-converged"
            ml_init = (sol.mu, sol.alpha, sol.lam)
        else:
            sol = solve_svm(model, fmap, kappa)
            risk, cosine, excess, nmargin = svm_predictions(sol, model, s, fmap.r)
            cells.update(q_star=sol.q_star, rho_star=sol.rho_star,
                         normalized_margin=nmargin, risk_theory=risk,
                         cosine_theory=cosine, excess_theory=excess)
    except (NoConvergence, BracketFailure, NotInRegime, OutOfDomain) as exc:
        cells["solver_flags"] = f"theory-failed:{type(exc).__name__}"
    return cells, ml_init


def _sim_trial(model, fmap, kappa, n, seed_pair, method):
    """One Monte Carlo trial; returns (risk, cosine, train_error, separable, valid)."""
    data = generate(model, fmap, n, kappa, seed_pair)
    clf = gd_logistic(data) if method == "gd" else svm_train(data)
    if method == "svm" and not clf.separable:
        return (np.nan, np.nan, np.nan, False, False)
    risk, cosine, _ = exact_metrics(clf.beta, model, data.meta.s, fmap.r)
    return (risk, cosine, clf.train_error, clf.separable, True)


def _aggregate(results):
    arr = np.asarray([r[:3] for r in results], dtype=float)
    valid = np.asarray([r[4] for r in results], dtype=bool)
    sep = float(np.mean([r[3] for r in results]))
    cells = {"sep_fraction": sep}
    if np.any(valid):
        risks = arr[valid, 0]
        cells["risk_sim_mean"] = float(np.mean(risks))
        cells["risk_sim_std"] = float(np.std(risks, ddof=1)) if risks.size > 1 else 0.0
        cells["cosine_sim_mean"] = float(np.mean(arr[valid, 1]))
        cells["train_error_mean"] = float(np.mean(arr[valid, 2]))
    return cells


def _worker_count(threads=None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("DDC_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def simulate_point(model, fmap, kappa, n, trials, seed, method,
                   threads=None) -> dict:
    """Monte Carlo aggregates for one (kappa, method) point."""
    tasks = [(model, fmap, kappa, n, (seed, t), method) for t in range(trials)]
    workers = min(_worker_count(threads), max(len(tasks), 1))
    if workers <= 1 or len(tasks) <= 1:
        results = [_sim_trial(*t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sim_trial, *zip(*tasks), chunksize=8))
    return _aggregate(results) if results else {}


def run_sweep(config: ExperimentConfig, out_dir: str = None,
              threads: int = None):
    """Run the sweep of `config`; returns rows, optionally writing CSV.

    If out_dir is given, writes sweep.csv plus a sweep.json sidecar with
    the full configuration and library version.  Per-row solver failures
    land in solver_flags and never abort the sweep.
    """
    model, fmap = config.model, config.fmap
    kappa_star = solve_kappa_star(model, fmap).kappa_star
    kappas = config.kappas()

    per_row = []
    ml_init = (1.0, 1.0, 1.0)
    for kappa in kappas:
        cells, ml_init = _theory_cells(model, fmap, kappa, kappa_star,
                                       config.margin, ml_init)
        per_row.append(cells)

    if config.trials > 0:
        tasks = []
        for i, kappa in enumerate(kappas):
            if "out-of-domain" in per_row[i].get("solver_flags", ""):
                continue
            method = config.method
            if method == "auto":
                method = "gd" if per_row[i]["regime"] == "ML" else "svm"
            per_row[i]["_method"] = method
            for t in range(config.trials):
                tasks.append((i, (model, fmap, kappa, config.n,
                                  (config.seed, t), method)))
        workers = min(_worker_count(threads), max(len(tasks), 1))
        if workers <= 1:
            outcomes = [(i, _sim_trial(*args)) for i, args in tasks]
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [(i, pool.submit(_sim_trial, *args))
                           for i, args in tasks]
                outcomes = [(i, f.result()) for i, f in futures]
        by_row = {}
        for i, res in outcomes:
            by_row.setdefault(i, []).append(res)
        for i in sorted(by_row):
            per_row[i].update(_aggregate(by_row[i]))

    rows = []
    for kappa, cells in zip(kappas, per_row):
        try:
            s = signal_strength(fmap, kappa)[0]
        except OutOfDomain:
            s = None
            cells.setdefault("solver_flags", "out-of-domain")
        cells.pop("_method", None)
        rows.append(SweepRow(kappa=kappa, kappa_star=kappa_star, s=s,
                             trials=config.trials, n=config.n,
                             seed=config.seed,
                             **{k: v for k, v in cells.items()}))

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        csv_path = os.path.join(out_dir, "sweep.csv")
        write_csv(rows, csv_path)
        sidecar = {"config": config.to_dict(), "version": __version__,
                   "columns": CSV_COLUMNS}
        with open(os.path.join(out_dir, "sweep.json"), "w", encoding="utf-8") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return rows


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def write_csv(rows, path: str) -> None:
    """Serialize rows with the fixed header and 17-significant-digit floats."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in sorted(rows, key=lambda r: r.kappa):
            writer.writerow([_format_cell(getattr(row, attr))
                             for attr, _ in _FIELDS])


def read_sweep_csv(path: str):
    """Parse a sweep CSV back into SweepRow values (exact float round-trip)."""
    int_cols = {"trials", "n", "seed"}
    str_cols = {"regime", "solver_flags"}
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            kwargs = {}
            for attr, col in _FIELDS:
                raw = rec[col]
                if raw == "":
                    kwargs[attr] = None if col not in str_cols else ""
                elif col in int_cols:
                    kwargs[attr] = int(raw)
                elif col in str_cols:
                    kwargs[attr] = raw
                else:
                    kwargs[attr] = float(raw)
            if kwargs["solver_flags"] is None:
                kwargs["solver_flags"] = ""
            rows.append(SweepRow(**kwargs))
    return rows


def _build_model_map(args) -> tuple:
    kind = "Logistic" if args.model == "logistic" else "GaussianMixture"
    model = DataModelSpec(kind=kind, r=args.r,
                          prior_plus=getattr(args, "prior_plus", 0.5))
    if args.map == "linear":
        if args.zeta is None:
            raise ValueError("--map linear requires --zeta")
        fmap = FeatureMap(kind="Linear", r=args.r, zeta=args.zeta)
    else:
        if args.gamma is None:
            raise ValueError("--map poly requires --gamma")
        fmap = FeatureMap(kind="Polynomial", r=args.r, gamma=args.gamma)
    return model, fmap


def _parse_grid(text: str) -> tuple:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError("--kappa-grid expects start:stop:step")
    return tuple(float(x) for x in parts)


def _emit(rows, out: str) -> None:
    if out is not None:
        write_csv(rows, out)
    else:
        writer = csv.writer(sys.stdout)
        writer.writerow(CSV_COLUMNS)
        for row in sorted(rows, key=lambda r: r.kappa):
            writer.writerow([_format_cell(getattr(row, attr))
                             for attr, _ in _FIELDS])


def _cmd_theory(args) -> int:
    model, fmap = _build_model_map(args)
    if args.kappa is None and args.kappa_grid is None:
        raise ValueError("theory needs --kappa or --kappa-grid")
    if args.kappa is not None:
        grid = (args.kappa, args.kappa, 1.0)
    else:
        grid = _parse_grid(args.kappa_grid)
    config = ExperimentConfig(model=model, fmap=fmap, kappa_grid=grid,
                              trials=0, margin=args.margin)
    rows = run_sweep(config)
    if args.kappa is not None:
        flags = rows[0].solver_flags
        if flags.startswith("theory-failed"):
            print(f"solver failure at kappa={args.kappa}: {flags}",
                  file=sys.stderr)
            return 2
    _emit(rows, args.out)
    return 0


def _cmd_phase(args) -> int:
    model, fmap = _build_model_map(args)
    result = solve_kappa_star(model, fmap)
    print(f"kappa_star,{result.kappa_star:.17g}")
    print(f"g_at_star,{result.g_at_star:.17g}")
    lo = 0.01
    hi = min(0.5, fmap.zeta) if fmap.kind == "Linear" else 0.5
    grid = np.linspace(lo, hi, args.points)
    lines = ["kappa,g"]
    for kappa in grid:
        lines.append(f"{kappa:.17g},{threshold_g(model, fmap, float(kappa)):.17g}")
    text = "\n".join(lines) + "\n"
    if args.out is not None:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_simulate(args) -> int:
    model, fmap = _build_model_map(args)
    config = ExperimentConfig(model=model, fmap=fmap,
                              kappa_grid=(args.kappa, args.kappa, 1.0),
                              n=args.n, trials=args.trials, seed=args.seed,
                              method="auto" if args.method == "both" else args.method)
    if args.method == "both":
        rows = []
        for method in ("gd", "svm"):
            cfg = ExperimentConfig(**{**config.__dict__, "method": method})
            row = run_sweep(cfg, threads=args.threads)[0]
            flags = (row.solver_flags + ";" if row.solver_flags else "") + f"method={method}"
            rows.append(SweepRow(**{**row.__dict__, "solver_flags": flags}))
    else:
        rows = run_sweep(config, threads=args.threads)
    for row in rows:
        if "theory-failed" in row.solver_flags:
            print(f"solver failure at kappa={args.kappa}: {row.solver_flags}",
                  file=sys.stderr)
            return 2
    _emit(rows, args.out)
    return 0


def _cmd_sweep(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        config = ExperimentConfig.from_dict(json.load(fh))
    run_sweep(config, out_dir=args.out_dir, threads=args.threads)
    return 0


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", required=True, choices=["logistic", "gm"])
    p.add_argument("--map", required=True, choices=["linear", "poly"])
    p.add_argument("--r", required=True, type=float)
    p.add_argument("--zeta", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--prior-plus", dest="prior_plus", type=float, default=0.5)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ddc",
        description="Asymptotic theory and simulation for binary linear "
                    "classification across the interpolation threshold.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theory", help="theory predictions on a kappa grid")
    _add_model_flags(p)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--kappa-grid", dest="kappa_grid", default=None)
    p.add_argument("--margin", type=float, default=0.02)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_theory)

    p = sub.add_parser("phase", help="interpolation threshold and g curve")
    _add_model_flags(p)
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_phase)

    p = sub.add_parser("simulate", help="Monte Carlo trials at one kappa")
    _add_model_flags(p)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=["gd", "svm", "both"], default="both")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="full sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, json.JSONDecodeError, OutOfDomain) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (NoConvergence, BracketFailure, NoRoot, DdcError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
