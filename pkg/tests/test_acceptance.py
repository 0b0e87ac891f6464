"""Release gate: nine end-to-end criteria covering the moment constants, the
dual-certificate construction, recovery/stability/injectivity Monte Carlo
rates, low-dimension solver oracles, and the kernel algebra. Each test prints
one "ACCEPTANCE k (name): PASS/FAIL" line on the live terminal and then
asserts, so a full run always shows the scorecard."""

import math

import numpy as np
from scipy.integrate import quad

from phaselift.certificate import build_certificate, project_T, project_Tperp, tangent_space, truncation_constants
from phaselift.experiments import ExperimentConfig, run_experiment
from phaselift.linalg import eig_sym, project_psd, symmetrize
from phaselift.measurement import (
    NoiseSpec,
    add_noise,
    apply_A,
    apply_At,
    measure,
    random_signal,
    sample_ensemble,
)
from phaselift.solver import SolverOptions, solve
from test_solver import bare_obs, fit_l1, grid_refine_min, rows_ensemble, weighted_median_min


def report(capsys, num, name, ok, detail=""):
    line = f"ACCEPTANCE {num} ({name}): {'PASS' if ok else 'FAIL'}"
    with capsys.disabled():
        print(line, flush=True)
    assert ok, f"{line} {detail}".strip()


def test_criterion_1_truncated_moment_constants(capsys):
    alpha, beta, delta = truncation_constants(3.0)
    four_dp = (
        round(alpha, 4) == 0.9707
        and round(beta, 4) == 2.6728
        and round(delta, 4) == 4.0663
    )
    pdf = lambda z: math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    quad_ok = True
    for t in (1.5, 3.0, 5.0):
        qa = quad(lambda z: z**2 * pdf(z), -t, t, epsabs=1e-13)[0]
        qb = quad(lambda z: z**4 * pdf(z), -t, t, epsabs=1e-13)[0]
        q6 = quad(lambda z: z**6 * pdf(z), -t, t, epsabs=1e-13)[0]
        mine = truncation_constants(t)
        quad_ok &= all(
            abs(x - y) <= 1e-8 for x, y in zip(mine, (qa, qb, q6 - qb * qb))
        )
    report(capsys, 1, "truncated moment constants", four_dp and quad_ok,
           f"values=({alpha:.6f}, {beta:.6f}, {delta:.6f}) quad_ok={quad_ok}")


def test_criterion_2_certificate_weight_bound(capsys):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 33))
        m = max(1, int(round(float(rng.uniform(2.0, 12.0)) * n)))
        model = "real_gaussian" if rng.random() < 0.5 else "real_sphere"
        ens = sample_ensemble(model, n, m, seed=int(rng.integers(0, 2**32)))
        x0 = random_signal(n, seed=int(rng.integers(0, 2**32)))
        cert = build_certificate(ens, x0)
        worst = max(worst, float(np.max(np.abs(cert.lam))) * m)
    report(capsys, 2, "certificate weight bound", worst <= 7.0,
           f"worst max|lambda|*m = {worst:.4f}")


def test_criterion_3_inexact_duality_rates(capsys):
    cfg = ExperimentConfig(experiment="cert_sweep", n_values=(32,),
                           ratio_values=(16.0, 32.0, 64.0), trials=20, base_seed=0)
    aggs = run_experiment(cfg, jobs=1).aggregates
    rate_64n = aggs[-1]["inexact_rate"]
    medians = [a["median_tperp_shift_norm"] for a in aggs]
    ok = rate_64n >= 0.90 and medians[0] > medians[1] > medians[2]
    report(capsys, 3, "inexact duality certificate success", ok,
           f"inexact rate at m=64n: {rate_64n:.2f}, medians {medians}")


def test_criterion_4_noiseless_exact_recovery(capsys):
    cfg = ExperimentConfig(experiment="transition", n_values=(20,),
                           ratio_values=(1.0, 10.0), trials=50, base_seed=0)
    aggs = run_experiment(cfg, jobs=1).aggregates
    low, high = aggs[0]["success_rate"], aggs[1]["success_rate"]
    report(capsys, 4, "noiseless exact recovery", high >= 0.90 and low <= 0.10,
           f"success at ratio 10: {high:.2f}, at ratio 1: {low:.2f}")


def test_criterion_5_universality_over_signals(capsys):
    recovered = 0
    for seed in range(5):
        cfg = ExperimentConfig(experiment="universality", n_values=(16,),
                               ratio_values=(12.0,), trials=100,
                               include_basis=True, base_seed=seed)
        agg = run_experiment(cfg, jobs=1).aggregates[0]
        recovered += bool(agg["all_recovered"])
    report(capsys, 5, "universality over signals", recovered >= 4,
           f"{recovered}/5 ensembles recovered every signal")


def test_criterion_6_stability_linear_scaling(capsys):
    levels = (0.01, 0.02, 0.04)  # per-measurement magnitudes; mean(b) = 1 for unit signals
    medians, c0_meds, c0_fits = [], [], []
    for level in levels:
        cfg = ExperimentConfig(experiment="stability", n_values=(16,),
                               ratio_values=(12.0,), trials=20, base_seed=0,
                               noise=NoiseSpec("adversarial_sign", level))
        agg = run_experiment(cfg, jobs=1).aggregates[0]
        medians.append(agg["median_frob_error"])
        c0_meds.append(agg["median_c0_est"])
        c0_fits.append(agg["fitted_C0"])
    slope = float(np.polyfit(np.log(levels), np.log(medians), 1)[0])
    control = ExperimentConfig(experiment="stability", n_values=(16,),
                               ratio_values=(12.0,), trials=20, base_seed=0)
    control_errs = [r["frob_error"] for r in run_experiment(control, jobs=1).rows]
    exact = max(control_errs) <= 1e-3  # ground truths are unit norm
    ok = (abs(slope - 1.0) <= 0.35
          and max(c0_meds) <= 10.0 and max(c0_fits) <= 10.0
          and exact)
    report(capsys, 6, "stability linear scaling", ok,
           f"slope={slope:.3f} median C0={max(c0_meds):.3f} "
           f"fitted C0={max(c0_fits):.3f} zero-noise max err={max(control_errs):.2e}")


def test_criterion_7_injectivity_sandwich(capsys):
    cfg = ExperimentConfig(experiment="injectivity", n_values=(16,),
                           ratio_values=(64.0,), trials=200, base_seed=0)
    rows = run_experiment(cfg, jobs=1).rows
    upper = np.mean([r["upper_slack"] >= 0 for r in rows])
    lower = np.mean([r["lower_slack"] >= 0 for r in rows])
    report(capsys, 7, "injectivity sandwich bounds",
           upper >= 0.99 and lower >= 0.99,
           f"upper holds {upper:.3f}, lower holds {lower:.3f} over {len(rows)} samples")


def test_criterion_8_solver_oracle_equivalence(capsys):
    rng = np.random.default_rng(321)
    worst_scalar = 0.0
    for _ in range(200):
        m = int(rng.integers(3, 26))
        a = rng.standard_normal(m)
        a[np.abs(a) < 0.1] = 0.5
        b = rng.normal(0.5, 1.0, m)
        res = solve(rows_ensemble(a.reshape(m, 1)), bare_obs(b),
                    SolverOptions(max_iters=60000, primal_tol=1e-10))
        med = weighted_median_min(a, b)
        err = abs(res.X_hat[0, 0] - max(0.0, med)) / (1.0 + abs(med))
        worst_scalar = max(worst_scalar, err)
    scalar_ok = worst_scalar <= 1e-5

    worst_grid = 0.0
    for t in range(20):
        seed = 8100 + t
        ens = sample_ensemble("real_gaussian", 2, 12, seed=seed)
        obs = add_noise(measure(ens, random_signal(2, seed=seed)),
                        NoiseSpec("uniform", 1.0), seed=seed)
        res = solve(ens, obs, SolverOptions(max_iters=60000, primal_tol=1e-12))
        f_grid = grid_refine_min(ens, obs.b)
        worst_grid = max(worst_grid, abs(fit_l1(ens, res.X_hat, obs.b) - f_grid) / f_grid)
    grid_ok = worst_grid <= 1e-3

    report(capsys, 8, "solver oracle equivalence", scalar_ok and grid_ok,
           f"scalar worst {worst_scalar:.2e} (tol 1e-5), "
           f"grid worst {worst_grid:.2e} (tol 1e-3)")


def test_criterion_9_kernel_properties(capsys):
    rng = np.random.default_rng(99)
    models = ("real_gaussian", "real_sphere", "complex_gaussian", "complex_sphere")

    adjoint_ok = True
    for _ in range(100):
        n = int(rng.integers(1, 9))
        m = int(rng.integers(1, 40))
        ens = sample_ensemble(models[rng.integers(0, 4)], n, m, seed=int(rng.integers(0, 2**32)))
        X = rng.standard_normal((n, n))
        if ens.is_complex:
            X = X + 1j * rng.standard_normal((n, n))
        X = symmetrize(X)
        y = rng.standard_normal(m)
        lhs = float(np.dot(apply_A(ens, X), y))
        rhs = float(np.real(np.sum(np.conj(X) * apply_At(ens, y))))
        adjoint_ok &= abs(lhs - rhs) <= 1e-10

    eig_ok = True
    for _ in range(100):
        n = int(rng.integers(1, 65))
        M = rng.standard_normal((n, n))
        if rng.random() < 0.5:
            M = M + 1j * rng.standard_normal((n, n))
        M = symmetrize(M)
        vals, vecs = eig_sym(M)
        rebuilt = (vecs * vals) @ vecs.conj().T
        eig_ok &= np.linalg.norm(rebuilt - M) <= 1e-10 * max(np.linalg.norm(M), 1.0)

    psd_ok = True
    for _ in range(100):
        n = int(rng.integers(1, 9))
        M = symmetrize(rng.standard_normal((n, n)))
        G = rng.standard_normal((n, n))
        P = G @ G.T
        psd_ok &= (np.linalg.norm(M - project_psd(M))
                   <= np.linalg.norm(M - P) + 1e-8)

    pyth_ok = True
    for _ in range(100):
        n = int(rng.integers(2, 17))
        complex_field = rng.random() < 0.5
        ts = tangent_space(random_signal(n, seed=int(rng.integers(0, 2**32)),
                                         complex_field=complex_field))
        X = rng.standard_normal((n, n))
        if complex_field:
            X = X + 1j * rng.standard_normal((n, n))
        X = symmetrize(X)
        total = np.linalg.norm(X) ** 2
        split = np.linalg.norm(project_T(X, ts)) ** 2 + np.linalg.norm(project_Tperp(X, ts)) ** 2
        pyth_ok &= abs(total - split) <= 1e-10 * max(total, 1.0)

    ok = adjoint_ok and eig_ok and psd_ok and pyth_ok
    report(capsys, 9, "kernel properties", ok,
           f"adjoint={adjoint_ok} eig={eig_ok} psd={psd_ok} pythagoras={pyth_ok}")
