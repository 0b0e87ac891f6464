"""Monte Carlo harness: transitions, universality, stability, injectivity,
certificate sweeps.

Every trial is reproducible in isolation: its seed is the first 8 bytes of
sha256("base_seed:experiment:n:ratio_index:trial_index"), and ensembles,
signals, and noise draw from independent tagged substreams of that seed.
Trials are independent jobs; rows are sorted by (n, ratio_index, trial)
before emission so the CSV is bitwise identical regardless of worker count.

Stream tag 3 is claimed here for injectivity probe matrices (the measurement
module reserves tags 0-2).
"""

from __future__ import annotations

import hashlib
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .certificate import build_certificate
from .linalg import phase_distance, project_psd
from .measurement import (
    MODELS,
    NoiseSpec,
    add_noise,
    apply_A,
    gaussian,
    measure,
    random_signal,
    sample_ensemble,
    stream,
)
from .serialize import atomic_write_text
from .solver import solve

EXPERIMENTS = ("transition", "universality", "stability", "injectivity", "cert_sweep")

DEFAULT_N_VALUES = (8, 16, 32)
DEFAULT_RATIOS = (1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0)

# Slack factors for the norm sandwich on A: mean|A(X)| never exceeds
# (9/8) tr(X) on PSD matrices and never drops below 0.94 * (7/8) = 0.8225
# times the spectral norm on rank-2 matrices.
UPPER_FACTOR = 9.0 / 8.0
LOWER_FACTOR = 0.8225

_TAG_PROBE = 3


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    model: str = "real_gaussian"
    n_values: tuple[int, ...] = DEFAULT_N_VALUES
    ratio_values: tuple[float, ...] = DEFAULT_RATIOS
    trials: int = 50
    base_seed: int = 0
    noise: NoiseSpec | None = None
    success_tol: float = 1e-3
    output_path: str | None = None
    # universality only: also probe every standard basis vector.
    include_basis: bool = False

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}, expected one of {EXPERIMENTS}")
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}, expected one of {MODELS}")
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        object.__setattr__(self, "ratio_values", tuple(float(r) for r in self.ratio_values))
        if not self.n_values or any(n < 1 for n in self.n_values):
            raise ValueError(f"n_values must be positive integers, got {self.n_values}")
        if not self.ratio_values or any(r <= 0 for r in self.ratio_values):
            raise ValueError(f"ratio_values must be positive, got {self.ratio_values}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.success_tol <= 0:
            raise ValueError(f"success_tol must be positive, got {self.success_tol}")
        if self.experiment in ("injectivity", "cert_sweep") and "complex" in self.model:
            raise ValueError(f"experiment {self.experiment!r} requires a real model")


def trial_seed(base_seed: int, experiment: str, n: int, ratio_index: int, trial: int) -> int:
    """Stable 64-bit per-trial seed; sha256 keyed, independent of process."""
    key = f"{int(base_seed)}:{experiment}:{int(n)}:{int(ratio_index)}:{int(trial)}"
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "big")


def measurement_count(n: int, ratio: float) -> int:
    return max(1, int(round(ratio * n)))


@dataclass
class ResultTable:
    experiment: str
    columns: tuple[str, ...]
    rows: list[dict]
    agg_columns: tuple[str, ...]
    aggregates: list[dict]

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(_fmt(row[c]) for c in self.columns))
        lines.append("#agg," + ",".join(self.agg_columns))
        for agg in self.aggregates:
            lines.append("#agg," + ",".join(_fmt(agg[c]) for c in self.agg_columns))
        return "\n".join(lines) + "\n"

    def write_csv(self, path: str) -> None:
        atomic_write_text(path, self.to_csv())

    def plot_series(self) -> list[tuple[str, str]]:
        """Per-n whitespace-delimited aggregate files for generic plotters."""
        x_col = "noise_l1_over_m" if self.experiment == "stability" else "ratio"
        y_cols = [c for c in self.agg_columns if c not in ("n", "m", "ratio", "trials", x_col)]
        files = []
        for n in sorted({agg["n"] for agg in self.aggregates}):
            lines = ["# " + " ".join([x_col] + y_cols)]
            for agg in self.aggregates:
                if agg["n"] != n:
                    continue
                lines.append(" ".join(_fmt(agg.get(c, float("nan"))) for c in [x_col] + y_cols))
            files.append((f"{self.experiment}_n{n}.dat", "\n".join(lines) + "\n"))
        return files


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _map_trials(fn, args_list: list, jobs: int | None) -> list:
    if jobs is not None and jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")
    workers = jobs if jobs is not None else (os.cpu_count() or 1)
    if workers <= 1 or len(args_list) <= 1:
        return [fn(a) for a in args_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, len(args_list) // (4 * workers))
        return list(pool.map(fn, args_list, chunksize=chunk))


def _solve_one(model: str, n: int, m: int, seed: int, noise: NoiseSpec | None,
               x0: np.ndarray | None = None) -> tuple[dict, np.ndarray]:
    """Shared per-trial pipeline: sample, measure, (noise), solve, compare."""
    ens = sample_ensemble(model, n, m, seed)
    if x0 is None:
        x0 = random_signal(n, seed, complex_field=ens.is_complex)
    obs = measure(ens, x0)
    if noise is not None and noise.level > 0:
        obs = add_noise(obs, noise, seed)
    res = solve(ens, obs)
    X0 = np.outer(x0, np.conj(x0))
    x0_sq = float(np.vdot(x0, x0).real)
    frob = float(np.linalg.norm(res.X_hat - X0))
    out = {
        "frob_error": frob,
        "rel_frob_error": frob / x0_sq,
        "iterations": res.iterations,
        "converged": res.converged,
        "trace": res.trace,
        "signal_error": phase_distance(res.x_hat, x0),
        "noise_l1": float(np.sum(np.abs(obs.w))) if obs.w is not None else 0.0,
    }
    return out, x0


def _transition_task(args) -> dict:
    model, n, m, ratio, ridx, trial, seed, noise, tol = args
    s, _ = _solve_one(model, n, m, seed, noise)
    return {
        "n": n, "m": m, "ratio": ratio, "trial": trial, "seed": seed,
        "rel_frob_error": s["rel_frob_error"],
        "success": s["rel_frob_error"] <= tol,
        "iterations": s["iterations"], "converged": s["converged"], "trace": s["trace"],
        "_ridx": ridx,
    }


def run_transition(config: ExperimentConfig, jobs: int | None = 1) -> ResultTable:
    """Success-rate grid over (n, ratio): fresh ensemble and signal per trial."""
    cfg = config
    args = [
        (cfg.model, n, measurement_count(n, r), r, ri, t,
         trial_seed(cfg.base_seed, cfg.experiment, n, ri, t), cfg.noise, cfg.success_tol)
        for n in cfg.n_values
        for ri, r in enumerate(cfg.ratio_values)
        for t in range(cfg.trials)
    ]
    rows = _map_trials(_transition_task, args, jobs)
    rows.sort(key=lambda r: (r["n"], r["_ridx"], r["trial"]))
    columns = ("n", "m", "ratio", "trial", "seed", "rel_frob_error", "success",
               "iterations", "converged", "trace")
    aggs = []
    for n in cfg.n_values:
        for ri, r in enumerate(cfg.ratio_values):
            cell = [row for row in rows if row["n"] == n and row["_ridx"] == ri]
            aggs.append({
                "n": n, "m": measurement_count(n, r), "ratio": r, "trials": len(cell),
                "success_rate": float(np.mean([c["success"] for c in cell])),
                "median_rel_frob_error": float(np.median([c["rel_frob_error"] for c in cell])),
                "mean_iterations": float(np.mean([c["iterations"] for c in cell])),
            })
    for row in rows:
        del row["_ridx"]
    return ResultTable(
        experiment=cfg.experiment, columns=columns, rows=rows,
        agg_columns=("n", "m", "ratio", "trials", "success_rate",
                     "median_rel_frob_error", "mean_iterations"),
        aggregates=aggs,
    )


def _universality_task(args) -> dict:
    model, n, m, ratio, ridx, trial, ens_seed, sig_seed, is_basis, basis_k, tol = args
    ens = sample_ensemble(model, n, m, ens_seed)
    if is_basis:
        x0 = np.zeros(n, dtype=complex if ens.is_complex else float)
        x0[basis_k] = 1.0
    else:
        x0 = random_signal(n, sig_seed, complex_field=ens.is_complex)
    obs = measure(ens, x0)
    res = solve(ens, obs)
    X0 = np.outer(x0, np.conj(x0))
    rel = float(np.linalg.norm(res.X_hat - X0))  # ||X0||_F = 1 for unit x0
    return {
        "n": n, "m": m, "ratio": ratio, "trial": trial, "seed": sig_seed,
        "is_basis": bool(is_basis), "rel_frob_error": rel, "success": rel <= tol,
        "iterations": res.iterations, "converged": res.converged, "trace": res.trace,
        "_ridx": ridx,
    }


def run_universality(config: ExperimentConfig, jobs: int | None = 1) -> ResultTable:
    """One fixed ensemble per (n, ratio); many signals solved against it.

    Signals are `trials` unit-sphere draws, plus every standard basis vector
    when include_basis is set. The ensemble seed is the trial-0 seed.
    """
    cfg = config
    args = []
    for n in cfg.n_values:
        for ri, r in enumerate(cfg.ratio_values):
            m = measurement_count(n, r)
            ens_seed = trial_seed(cfg.base_seed, cfg.experiment, n, ri, 0)
            for t in range(cfg.trials):
                sig_seed = trial_seed(cfg.base_seed, cfg.experiment, n, ri, t)
                args.append((cfg.model, n, m, r, ri, t, ens_seed, sig_seed,
                             False, 0, cfg.success_tol))
            if cfg.include_basis:
                for k in range(n):
                    t = cfg.trials + k
                    args.append((cfg.model, n, m, r, ri, t, ens_seed, 0,
                                 True, k, cfg.success_tol))
    rows = _map_trials(_universality_task, args, jobs)
    rows.sort(key=lambda r: (r["n"], r["_ridx"], r["trial"]))
    columns = ("n", "m", "ratio", "trial", "seed", "is_basis", "rel_frob_error",
               "success", "iterations", "converged", "trace")
    aggs = []
    for n in cfg.n_values:
        for ri, r in enumerate(cfg.ratio_values):
            cell = [row for row in rows if row["n"] == n and row["_ridx"] == ri]
            aggs.append({
                "n": n, "m": measurement_count(n, r), "ratio": r, "trials": len(cell),
                "all_recovered": bool(all(c["success"] for c in cell)),
                "success_rate": float(np.mean([c["success"] for c in cell])),
                "max_rel_frob_error": float(np.max([c["rel_frob_error"] for c in cell])),
            })
    for row in rows:
        del row["_ridx"]
    return ResultTable(
        experiment=cfg.experiment, columns=columns, rows=rows,
        agg_columns=("n", "m", "ratio", "trials", "all_recovered", "success_rate",
                     "max_rel_frob_error"),
        aggregates=aggs,
    )


def _stability_task(args) -> dict:
    model, n, m, ratio, ridx, trial, seed, noise, tol = args
    s, x0 = _solve_one(model, n, m, seed, noise)
    noise_l1_over_m = s["noise_l1"] / m
    x0_norm = float(np.linalg.norm(x0))
    if noise_l1_over_m > 0:
        c0_est = s["frob_error"] / noise_l1_over_m
        signal_bound_ratio = s["signal_error"] / min(x0_norm, noise_l1_over_m / x0_norm)
    else:
        c0_est = float("nan")
        signal_bound_ratio = float("nan")
    return {
        "n": n, "m": m, "ratio": ratio, "trial": trial, "seed": seed,
        "noise_l1_over_m": noise_l1_over_m, "frob_error": s["frob_error"],
        "signal_error": s["signal_error"], "c0_est": c0_est,
        "signal_bound_ratio": signal_bound_ratio,
        "iterations": s["iterations"], "converged": s["converged"],
        "_ridx": ridx,
    }


def run_stability(config: ExperimentConfig, jobs: int | None = 1) -> ResultTable:
    """Noise-scaling probe: how the lifted error tracks ||w||_1 / m.

    c0_est = frob_error / (||w||_1/m) per noisy trial; the per-cell fitted_C0
    aggregate is the max over trials, median_c0_est the median. Zero-noise
    rows carry NaN c0_est and are excluded from both.
    """
    cfg = config
    args = [
        (cfg.model, n, measurement_count(n, r), r, ri, t,
         trial_seed(cfg.base_seed, cfg.experiment, n, ri, t), cfg.noise, cfg.success_tol)
        for n in cfg.n_values
        for ri, r in enumerate(cfg.ratio_values)
        for t in range(cfg.trials)
    ]
    rows = _map_trials(_stability_task, args, jobs)
    rows.sort(key=lambda r: (r["n"], r["_ridx"], r["trial"]))
    columns = ("n", "m", "ratio", "trial", "seed", "noise_l1_over_m", "frob_error",
               "signal_error", "c0_est", "signal_bound_ratio", "iterations", "converged")
    aggs = []
    for n in cfg.n_values:
        for ri, r in enumerate(cfg.ratio_values):
            cell = [row for row in rows if row["n"] == n and row["_ridx"] == ri]
            c0s = [c["c0_est"] for c in cell if not math.isnan(c["c0_est"])]
            aggs.append({
                "n": n, "m": measurement_count(n, r), "ratio": r, "trials": len(cell),
                "noise_l1_over_m": float(np.median([c["noise_l1_over_m"] for c in cell])),
                "median_frob_error": float(np.median([c["frob_error"] for c in cell])),
                "median_signal_error": float(np.median([c["signal_error"] for c in cell])),
                "fitted_C0": float(np.max(c0s)) if c0s else float("nan"),
                "median_c0_est": float(np.median(c0s)) if c0s else float("nan"),
            })
    for row in rows:
        del row["_ridx"]
    return ResultTable(
        experiment=cfg.experiment, columns=columns, rows=rows,
        agg_columns=("n", "m", "ratio", "trials", "noise_l1_over_m",
                     "median_frob_error", "median_signal_error", "fitted_C0",
                     "median_c0_est"),
        aggregates=aggs,
    )


def _injectivity_task(args) -> dict:
    model, n, m, ratio, ridx, trial, seed = args
    ens = sample_ensemble(model, n, m, seed)
    rng = stream(seed, _TAG_PROBE, 0)

    # PSD probe: clipped GOE-style matrix, trace normalized to 1.
    G = gaussian(rng, (n, n))
    X_psd = project_psd((G + G.T) / 2.0)
    tr = float(np.trace(X_psd))
    if tr <= 0:  # all eigenvalues clipped; vanishing probability, resample
        X_psd = np.eye(n) / n
        tr = 1.0
    X_psd = X_psd / tr
    upper_slack = UPPER_FACTOR * 1.0 - float(np.mean(np.abs(apply_A(ens, X_psd))))

    # Rank-2 probe: orthonormal pair with unit-modulus weights, ||X|| = 1.
    Q, _ = np.linalg.qr(gaussian(rng, (n, 2)))
    signs = np.where(rng.random(2) < 0.5, -1.0, 1.0)
    X_r2 = signs[0] * np.outer(Q[:, 0], Q[:, 0]) + signs[1] * np.outer(Q[:, 1], Q[:, 1])
    lower_slack = float(np.mean(np.abs(apply_A(ens, X_r2)))) - LOWER_FACTOR * 1.0

    return {
        "n": n, "m": m, "ratio": ratio, "trial": trial, "seed": seed,
        "upper_slack": upper_slack, "lower_slack": lower_slack,
        "both_ok": upper_slack >= 0 and lower_slack >= 0,
        "_ridx": ridx,
    }


def verify_injectivity(config: ExperimentConfig, jobs: int | None = 1) -> ResultTable:
    """Sampled check of the norm sandwich on A at each grid cell."""
    cfg = config
    args = [
        (cfg.model, n, measurement_count(n, r), r, ri, t,
         trial_seed(cfg.base_seed, cfg.experiment, n, ri, t))
        for n in cfg.n_values
        for ri, r in enumerate(cfg.ratio_values)
        for t in range(cfg.trials)
    ]
    rows = _map_trials(_injectivity_task, args, jobs)
    rows.sort(key=lambda r: (r["n"], r["_ridx"], r["trial"]))
    columns = ("n", "m", "ratio", "trial", "seed", "upper_slack", "lower_slack", "both_ok")
    aggs = []
    for n in cfg.n_values:
        for ri, r in enumerate(cfg.ratio_values):
            cell = [row for row in rows if row["n"] == n and row["_ridx"] == ri]
            aggs.append({
                "n": n, "m": measurement_count(n, r), "ratio": r, "trials": len(cell),
                "both_hold_fraction": float(np.mean([c["both_ok"] for c in cell])),
                "min_upper_slack": float(np.min([c["upper_slack"] for c in cell])),
                "min_lower_slack": float(np.min([c["lower_slack"] for c in cell])),
            })
    for row in rows:
        del row["_ridx"]
    return ResultTable(
        experiment=cfg.experiment, columns=columns, rows=rows,
        agg_columns=("n", "m", "ratio", "trials", "both_hold_fraction",
                     "min_upper_slack", "min_lower_slack"),
        aggregates=aggs,
    )


def _cert_task(args) -> dict:
    model, n, m, ratio, ridx, trial, seed = args
    ens = sample_ensemble(model, n, m, seed)
    x0 = random_signal(n, seed, complex_field=False)
    rep = build_certificate(ens, x0).report
    return {
        "n": n, "m": m, "ratio": ratio, "trial": trial, "seed": seed,
        "tperp_shift_norm": rep.tperp_shift_norm, "t_frob": rep.t_frob,
        "restricted_max_eig": rep.restricted_max_eig,
        "lambda_inf_m": rep.lambda_inf * m,
        "core_ok": rep.core_ok, "inexact_ok": rep.inexact_ok,
        "_ridx": ridx,
    }


def run_cert_sweep(config: ExperimentConfig, jobs: int | None = 1) -> ResultTable:
    """Certificate quality across the (n, ratio) grid."""
    cfg = config
    args = [
        (cfg.model, n, measurement_count(n, r), r, ri, t,
         trial_seed(cfg.base_seed, cfg.experiment, n, ri, t))
        for n in cfg.n_values
        for ri, r in enumerate(cfg.ratio_values)
        for t in range(cfg.trials)
    ]
    rows = _map_trials(_cert_task, args, jobs)
    rows.sort(key=lambda r: (r["n"], r["_ridx"], r["trial"]))
    columns = ("n", "m", "ratio", "trial", "seed", "tperp_shift_norm", "t_frob",
               "restricted_max_eig", "lambda_inf_m", "core_ok", "inexact_ok")
    aggs = []
    for n in cfg.n_values:
        for ri, r in enumerate(cfg.ratio_values):
            cell = [row for row in rows if row["n"] == n and row["_ridx"] == ri]
            aggs.append({
                "n": n, "m": measurement_count(n, r), "ratio": r, "trials": len(cell),
                "inexact_rate": float(np.mean([c["inexact_ok"] for c in cell])),
                "core_rate": float(np.mean([c["core_ok"] for c in cell])),
                "median_tperp_shift_norm": float(np.median([c["tperp_shift_norm"] for c in cell])),
            })
    for row in rows:
        del row["_ridx"]
    return ResultTable(
        experiment=cfg.experiment, columns=columns, rows=rows,
        agg_columns=("n", "m", "ratio", "trials", "inexact_rate", "core_rate",
                     "median_tperp_shift_norm"),
        aggregates=aggs,
    )


_RUNNERS = {
    "transition": run_transition,
    "universality": run_universality,
    "stability": run_stability,
    "injectivity": verify_injectivity,
    "cert_sweep": run_cert_sweep,
}


def run_experiment(config: ExperimentConfig, jobs: int | None = 1) -> ResultTable:
    table = _RUNNERS[config.experiment](config, jobs=jobs)
    if config.output_path:
        table.write_csv(config.output_path)
    return table


def config_from_dict(d: dict) -> ExperimentConfig:
    """Build a config from JSON-ish fields, e.g. a parsed config file."""
    d = dict(d)
    unknown = set(d) - {
        "experiment", "model", "n_values", "ratio_values", "trials", "base_seed",
        "noise", "success_tol", "output_path", "include_basis",
    }
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    if "experiment" not in d:
        raise ValueError("config is missing required field 'experiment'")
    noise = d.get("noise")
    if noise is not None and not isinstance(noise, NoiseSpec):
        if not isinstance(noise, dict) or set(noise) != {"kind", "level"}:
            raise ValueError("noise must be an object with fields 'kind' and 'level'")
        d["noise"] = NoiseSpec(kind=noise["kind"], level=float(noise["level"]))
    return ExperimentConfig(**d)
