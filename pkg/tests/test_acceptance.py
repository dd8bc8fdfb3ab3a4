"""Acceptance criteria: reproduction of the reference convergence studies.

Every criterion prints one PASS/FAIL line (collected in the terminal summary).
Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import math
import time

import numpy as np
import pytest
from scipy.special import gamma

from fracspec.cli import ExperimentConfig, run_experiment

ALPHAS = (0.2, 0.4, 0.6, 0.8)


def _sweep(**fields):
    cfg = ExperimentConfig(**fields, explicit=set(fields))
    start = time.perf_counter()
    tables, iterations = run_experiment(cfg)
    return tables, iterations, time.perf_counter() - start


def _rate_line(tables, targets):
    return ", ".join(f"a={t.label.split('alpha')[1]} {t.final_rate:.2f} (target {p:.2f})"
                     for t, p in zip(tables, targets))


def test_criterion1_smooth_weighted_direct(report):
    target_rates = (1.62, 2.22, 2.81, 3.39)
    target_errors = {
        0.2: (1.29e-03, 4.70e-04, 1.67e-04, 5.75e-05, 1.87e-05),
        0.4: (2.92e-04, 6.72e-05, 1.50e-05, 3.32e-06, 7.12e-07),
        0.6: (3.49e-05, 5.25e-06, 7.74e-07, 1.13e-07, 1.61e-08),
        0.8: (2.60e-06, 2.63e-07, 2.58e-08, 2.48e-09, 2.36e-10),
    }
    tables, _, _ = _sweep(example="ex1", alpha=ALPHAS, n=(32, 64, 128, 256, 512), nref=1024)
    rates_ok = all(t.within(p, 0.1) for t, p in zip(tables, target_rates))
    worst = max(abs(e / p - 1) for t, a in zip(tables, ALPHAS)
                for e, p in zip(t.errors, target_errors[a]))
    ok = rates_ok and worst <= 0.25
    report("criterion 1 (sin source, weighted norm, direct)", ok,
           _rate_line(tables, target_rates) + f"; worst error deviation {100 * worst:.1f}%")
    assert ok


def test_criterion2_smooth_fast_solver(report):
    target_rates = (1.58, 2.20, 2.80, 3.40)
    tables, iterations, elapsed = _sweep(example="ex1", alpha=ALPHAS, n=(512, 1024, 2048, 4096),
                                         solver="fast", nref=1 << 14)
    max_iter = max(max(its) for its in iterations)
    ok = (all(t.within(p, 0.1) for t, p in zip(tables, target_rates)) and max_iter <= 10
          and elapsed <= 300)
    report("criterion 2 (sin source, fast solver)", ok,
           _rate_line(tables, target_rates) + f"; max iterations {max_iter}; {elapsed:.1f} s")
    assert ok


def test_criterion3_smooth_standard_norm(report):
    target_rates = (1.73, 2.53, 3.24, 3.87)
    tables, _, _ = _sweep(example="ex1", alpha=ALPHAS, n=(32, 64, 128, 256, 512), norm="standard",
                          nref=1024)
    ok = all(t.within(p, 0.1) for t, p in zip(tables, target_rates))
    report("criterion 3 (sin source, standard L2 norm)", ok, _rate_line(tables, target_rates))
    assert ok


def test_criterion4_kinked_source(report):
    # the two smallest orders come out above their targets; see the project notes
    target_rates = (1.27, 1.53, 1.92, 2.11)
    tables, _, _ = _sweep(example="ex2", alpha=(0.1, 0.2, 0.4, 0.6), n=(32, 64, 128, 256, 512),
                          nref=1024)
    ok = all(t.within(p, 0.15) for t, p in zip(tables, target_rates))
    report("criterion 4 (|sin| source)", ok, _rate_line(tables, target_rates))
    assert ok


def test_criterion5_power_exp_source(report):
    sigma1 = (3.44, 4.12, 4.74, 5.32)
    sigma03 = (1.71, 1.95, 2.17, 2.36)
    t1, _, _ = _sweep(example="ex3", alpha=ALPHAS, sigma=1.0, n=(8, 16, 32, 64, 128))
    t03, _, _ = _sweep(example="ex3", alpha=ALPHAS, sigma=0.3, n=(8, 16, 32, 64, 128))
    ok = (all(t.within(p, 0.15) for t, p in zip(t1, sigma1))
          and all(t.within(p, 0.15) for t, p in zip(t03, sigma03)))
    report("criterion 5 (t^sigma e^t source)", ok,
           "sigma=1: " + _rate_line(t1, sigma1) + "; sigma=0.3: " + _rate_line(t03, sigma03))
    assert ok


def _tfde_sweep(sigma, low_n, high_n):
    low, _, e1 = _sweep(example="ex4", alpha=(0.2, 0.4), sigma=sigma, n=low_n, M=1024)
    high, _, e2 = _sweep(example="ex4", alpha=(0.6, 0.8), sigma=sigma, n=high_n, M=1024)
    return low + high, e1 + e2


def test_criterion6_diffusion(report):
    sigma0 = (1.43, 2.19, 2.80, 3.39)
    sigma03 = (1.68, 2.00, 2.17, 2.36)
    t0, e0 = _tfde_sweep(0.0, (256, 512, 1024, 2048, 4096), (32, 64, 128, 256, 512))
    t3, e3 = _tfde_sweep(0.3, (128, 256, 512, 1024, 2048), (32, 64, 128, 256, 512))
    elapsed = e0 + e3
    ok = (all(t.within(p, 0.15) for t, p in zip(t0, sigma0))
          and all(t.within(p, 0.15) for t, p in zip(t3, sigma03)) and elapsed <= 600)
    report("criterion 6 (time-fractional diffusion, M=1024)", ok,
           "sigma=0: " + _rate_line(t0, sigma0) + "; sigma=0.3: " + _rate_line(t3, sigma03)
           + f"; {elapsed:.0f} s")
    assert ok


def _property_checks():
    from fracspec.connection import build_structured, connection_dense_oracle, second_param_matrix
    from fracspec.fast_kernels import ToeplitzOperator
    from fracspec.fractional import frac_deriv_weighted, weighted_jacobi
    from fracspec.jacobi import BasisSpec, eval_shifted, gauss_jacobi, lambda_ratio, weighted_norm_sq
    from fracspec.solver import FivpProblem, assemble, load_vector, solve
    from fracspec.sources import Source, constant_source
    from fracspec.tfde import TfdeProblem, TfdeSource, assemble_tfde

    rng = np.random.default_rng(2024)
    out = {}

    worst = 0.0
    for a in ALPHAS:
        for g, b in ((0.0, a), (a, 0.0), (a, a)):
            spec = BasisSpec(g, b, 1.0)
            rule = gauss_jacobi(g, b, 42, 1.0)
            Q = np.array([eval_shifted(n, spec, rule.nodes) for n in range(41)])
            h = weighted_norm_sq(np.arange(41), spec)
            gram = (Q * rule.weights) @ Q.T / np.sqrt(np.outer(h, h))
            worst = max(worst, np.abs(gram - np.eye(41)).max())
    out["orthogonality/norms"] = (worst, 1e-11)

    worst = 0.0
    t = rng.uniform(0.01, 1.0, 50)
    for a in ALPHAS:
        for n in range(21):
            c = math.exp(math.lgamma(n + a + 1) - math.lgamma(n + 2 * a + 1))
            back = c * frac_deriv_weighted(n, -a, 2 * a, a, 1.0, t)
            target = weighted_jacobi(n, 0.0, a, 1.0, t)
            worst = max(worst, np.abs(back - target).max() / np.abs(target).max())
    out["inverse property"] = (worst, 1e-10)

    worst = 0.0
    for a in ALPHAS:
        for N in (16, 64):
            oracle = connection_dense_oracle(BasisSpec(a, 0, 1, N), BasisSpec(a, a, 1, N)).entries
            rows = np.abs(oracle).max(axis=1, keepdims=True)
            worst = max(worst, np.max(np.abs(second_param_matrix(a, N) - oracle) / rows))
    out["connection closed form vs oracle"] = (worst, 1e-10)

    worst = 0.0
    for n in (16, 64, 256):
        col = rng.standard_normal(n)
        op = ToeplitzOperator(col)
        st = build_structured(0.4, n - 1)
        dense_t, dense_c = op.to_dense(), st.to_dense()
        for _ in range(10):
            v = rng.standard_normal(n)
            for fast, exact in ((op.matvec(v), dense_t @ v), (st.apply(v), dense_c @ v)):
                worst = max(worst, np.abs(fast - exact).max() / np.abs(exact).max())
    out["fast Toeplitz and (T o H) D products"] = (worst, 1e-10)

    worst = 0.0
    for a in (0.3, 0.7):
        from dataclasses import replace
        smooth = Source(lambda s, a=a: lambda_ratio(2, a) * eval_shifted(2, BasisSpec(a, 0.0), s))
        singular = Source(lambda s, a=a: eval_shifted(2, BasisSpec(0.0, a), s), origin_power=a)
        system = assemble(FivpProblem(a, 1.0, 1.0, smooth), 40)
        system = replace(system, F=system.F + load_vector(singular, a, 40)[0])
        from fracspec.solver import solve_direct
        worst = max(worst, np.abs(solve_direct(system).values - np.eye(41)[2]).max())
    out["manufactured solution"] = (worst, 1e-10)

    worst = 0.0
    for a in (0.3, 0.7):
        problem = TfdeProblem(a, 1.0, 1.0, 8, TfdeSource(lambda x, s: np.exp(s) * x * (1 - x)))
        system = assemble_tfde(problem, 8)
        U = rng.standard_normal(system.G.shape)
        dense = system.to_dense() @ U.ravel()
        worst = max(worst, np.abs(system.apply(U).ravel() - dense).max() / np.abs(dense).max())
    out["Kronecker matrix-free vs dense"] = (worst, 1e-12)

    worst = 0.0
    for a in ALPHAS:
        U, _ = solve(FivpProblem(a, 0.0, 1.0, constant_source(1.0)), 32)
        expected = np.eye(33)[0] / gamma(a + 1)
        worst = max(worst, np.abs(U.values - expected).max())
    out["lambda=0, f=1 analytic"] = (worst, 1e-12)
    return out


def test_criterion7_property_suite(report):
    results = _property_checks()
    ok = all(value <= tol for value, tol in results.values())
    report("criterion 7 (property suite)", ok,
           "; ".join(f"{name} {value:.1e} <= {tol:.0e}" for name, (value, tol) in results.items()))
    assert ok


def test_criterion8_complexity(report):
    from fracspec.solver import FivpProblem, solve
    from fracspec.sources import sin_shift

    # best of 7 (the timeit convention): single runs at 2^15 jitter by 50% here
    problem = FivpProblem(0.4, 1.0, 1.0, sin_shift())
    times = []
    for k in range(12, 16):
        samples = []
        for _ in range(7):
            start = time.perf_counter()
            solve(problem, 2 ** k, "fast")
            samples.append(time.perf_counter() - start)
        times.append(min(samples))
    growth = [b / a for a, b in zip(times[:-1], times[1:])]
    ok = max(growth) <= 3.0
    report("criterion 8 (complexity, soft)", ok,
           "fast solve best-of-7 " + ", ".join(f"{t:.3f}s" for t in times)
           + "; growth per doubling " + ", ".join(f"{g:.2f}" for g in growth))
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
