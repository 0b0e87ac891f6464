"""Command-line front end.

Subcommands: simulate (sample an ensemble, measure a signal, write a problem
file), solve (run the PSD l1 solver on a problem file), certify (build and
check a dual certificate), experiment (run a Monte Carlo config and emit
CSV, plot data, and figures), constants (print truncated-moment constants).
All file outputs are written atomically; errors are a single line on stderr
and a nonzero exit status.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .certificate import TRUNCATION_THRESHOLD, build_certificate, truncation_constants
from .experiments import ExperimentConfig, config_from_dict, run_experiment
from .measurement import (
    MODELS,
    NOISE_KINDS,
    NoiseSpec,
    add_noise,
    measure,
    random_signal,
    sample_ensemble,
)
from .serialize import (
    SCHEMA_VERSION,
    atomic_write_text,
    decode_vector,
    load_problem,
    save_problem,
)
from .solver import SolverOptions, result_to_dict, solve


def parse_x0_spec(spec: str, n: int, seed: int, complex_field: bool) -> np.ndarray:
    """x0 grammar: "unit-random", "basis:k" (0-based), or an inline JSON vector."""
    if spec == "unit-random":
        return random_signal(n, seed, complex_field=complex_field)
    if spec.startswith("basis:"):
        try:
            k = int(spec.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"malformed basis spec {spec!r}, expected basis:<k>") from None
        if not 0 <= k < n:
            raise ValueError(f"basis index {k} out of range for dimension {n}")
        x0 = np.zeros(n, dtype=complex if complex_field else float)
        x0[k] = 1.0
        return x0
    try:
        data = json.loads(spec)
    except json.JSONDecodeError:
        raise ValueError(
            f"x0 spec {spec!r} is not unit-random, basis:<k>, or a JSON vector"
        ) from None
    if not isinstance(data, list):
        raise ValueError("inline x0 must be a JSON array")
    x0 = decode_vector(data)
    if x0.shape[0] != n:
        raise ValueError(f"x0 has length {x0.shape[0]}, expected {n}")
    return x0


def parse_noise_spec(spec: str) -> NoiseSpec:
    """Noise grammar: kind:level, e.g. gaussian:0.05."""
    kind, sep, level = spec.partition(":")
    if not sep:
        raise ValueError(f"malformed noise spec {spec!r}, expected kind:level")
    if kind not in NOISE_KINDS:
        raise ValueError(f"unknown noise kind {kind!r}, expected one of {NOISE_KINDS}")
    try:
        value = float(level)
    except ValueError:
        raise ValueError(f"noise level {level!r} is not a number") from None
    return NoiseSpec(kind=kind, level=value)


def _cmd_simulate(args) -> int:
    ens = sample_ensemble(args.model, args.n, args.m, args.seed)
    x0 = parse_x0_spec(args.x0, args.n, args.seed, ens.is_complex)
    obs = measure(ens, x0)
    if args.noise is not None:
        obs = add_noise(obs, parse_noise_spec(args.noise), args.seed)
    save_problem(args.out, ens, obs, include_vectors=args.include_vectors)
    print(f"wrote {args.out} model={args.model} n={args.n} m={args.m} seed={args.seed}")
    return 0


def _cmd_solve(args) -> int:
    ensemble, obs = load_problem(args.input)
    if obs is None:
        raise ValueError(f"problem file {args.input} has no measurements (missing 'b')")
    options = SolverOptions(
        max_iters=args.max_iters,
        primal_tol=args.primal_tol,
        residual_tol=args.residual_tol,
        step_rho=args.step_rho,
        step_mu=args.step_mu,
    )
    result = solve(ensemble, obs, options)
    payload = result_to_dict(result)
    if args.out:
        atomic_write_text(args.out, json.dumps(payload, indent=2) + "\n")
    summary = " ".join(
        f"{k}={json.dumps(payload[k])}"
        for k in ("converged", "iterations", "l1_residual", "trace")
    )
    if "frob_error_vs_truth" in payload:
        summary += f" frob_error_vs_truth={json.dumps(payload['frob_error_vs_truth'])}"
    print(summary)
    return 0


def _cmd_certify(args) -> int:
    ensemble, obs = load_problem(args.input)
    if args.x0 is not None:
        x0 = parse_x0_spec(args.x0, ensemble.n, ensemble.seed, ensemble.is_complex)
    elif obs is not None and obs.ground_truth is not None:
        x0 = obs.ground_truth
    else:
        raise ValueError("no anchor signal: pass --x0 or use a problem file that stores x0")
    cert = build_certificate(ensemble, x0, threshold=args.t)
    rep = cert.report
    payload = {
        "schema": SCHEMA_VERSION,
        "model": ensemble.model,
        "n": ensemble.n,
        "m": ensemble.m,
        "seed": ensemble.seed,
        "threshold": args.t,
        "tperp_shift_norm": rep.tperp_shift_norm,
        "t_frob": rep.t_frob,
        "restricted_max_eig": rep.restricted_max_eig,
        "lambda_inf": rep.lambda_inf,
        "core_ok": rep.core_ok,
        "inexact_ok": rep.inexact_ok,
    }
    if args.out:
        atomic_write_text(args.out, json.dumps(payload, indent=2) + "\n")
    print(
        f"core_ok={json.dumps(rep.core_ok)} inexact_ok={json.dumps(rep.inexact_ok)} "
        f"tperp_shift_norm={rep.tperp_shift_norm!r} t_frob={rep.t_frob!r} "
        f"lambda_inf_m={rep.lambda_inf * ensemble.m!r}"
    )
    return 0


def _load_experiment_config(args) -> ExperimentConfig:
    fields: dict = {}
    if args.config:
        with open(args.config) as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ValueError(f"config file {args.config} must hold a JSON object")
        fields.update(raw)
    # flags override file values
    for flag, key in (
        ("experiment", "experiment"),
        ("model", "model"),
        ("trials", "trials"),
        ("base_seed", "base_seed"),
        ("success_tol", "success_tol"),
    ):
        value = getattr(args, flag)
        if value is not None:
            fields[key] = value
    if args.n_values is not None:
        fields["n_values"] = [int(v) for v in args.n_values.split(",")]
    if args.ratios is not None:
        fields["ratio_values"] = [float(v) for v in args.ratios.split(",")]
    if args.noise is not None:
        fields["noise"] = parse_noise_spec(args.noise)
    if args.include_basis:
        fields["include_basis"] = True
    return config_from_dict(fields)


def _cmd_experiment(args) -> int:
    config = _load_experiment_config(args)
    table = run_experiment(config, jobs=args.jobs)
    out_dir = args.out_dir
    os.makedirs(out_dir, exist_ok=True)
    csv_path = config.output_path or os.path.join(out_dir, f"{config.experiment}.csv")
    table.write_csv(csv_path)
    written = [csv_path]
    for name, text in table.plot_series():
        path = os.path.join(out_dir, name)
        atomic_write_text(path, text)
        written.append(path)
    if not args.no_figures:
        from .report import render_figures

        written.extend(render_figures(table, out_dir))
    for agg in table.aggregates:
        cell = " ".join(f"{k}={_plain(v)}" for k, v in agg.items())
        print(f"cell {cell}")
    print("wrote " + " ".join(written))
    return 0


def _plain(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _cmd_constants(args) -> int:
    alpha, beta, delta = truncation_constants(args.t)
    print(f"alpha={alpha:.4f} beta={beta:.4f} delta={delta:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phaselift",
        description="Phase retrieval from quadratic measurements: simulate, solve, certify, experiment.",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"phaselift {__version__} (schema {SCHEMA_VERSION})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample an ensemble, measure a signal, write a problem file")
    p.add_argument("--model", required=True, choices=MODELS)
    p.add_argument("--n", required=True, type=int)
    p.add_argument("--m", required=True, type=int)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--x0", default="unit-random", help='"unit-random", "basis:<k>", or a JSON vector')
    p.add_argument("--noise", default=None, help="kind:level, e.g. gaussian:0.05")
    p.add_argument("--include-vectors", action="store_true", help="store sensing vectors in the file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("solve", help="run the PSD l1 solver on a problem file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", default=None, help="write the result JSON here")
    p.add_argument("--max-iters", type=int, default=SolverOptions.max_iters)
    p.add_argument("--primal-tol", type=float, default=SolverOptions.primal_tol)
    p.add_argument("--residual-tol", type=float, default=None)
    p.add_argument("--step-rho", type=float, default=None)
    p.add_argument("--step-mu", type=float, default=None)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("certify", help="build and verify a dual certificate")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--x0", default=None, help="override the anchor; same grammar as simulate")
    p.add_argument("--t", type=float, default=TRUNCATION_THRESHOLD, help="truncation threshold")
    p.add_argument("--out", default=None, help="write the report JSON here")
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("experiment", help="run a Monte Carlo experiment config")
    p.add_argument("--config", default=None, help="JSON file mirroring ExperimentConfig fields")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: cores)")
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p.add_argument("--experiment", default=None)
    p.add_argument("--model", default=None, choices=MODELS)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--base-seed", dest="base_seed", type=int, default=None)
    p.add_argument("--success-tol", dest="success_tol", type=float, default=None)
    p.add_argument("--n-values", dest="n_values", default=None, help="comma list, e.g. 8,16,32")
    p.add_argument("--ratios", default=None, help="comma list, e.g. 1,2,4,8")
    p.add_argument("--noise", default=None, help="kind:level")
    p.add_argument("--include-basis", action="store_true", help="universality: add basis signals")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("constants", help="print truncated-moment constants")
    p.add_argument("--t", type=float, default=TRUNCATION_THRESHOLD)
    p.set_defaults(func=_cmd_constants)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
