"""Command-line driver: convergence experiments, single solves, self-checks.

    fracspec run --example ex1 --alpha 0.2,0.4,0.6,0.8 --n 32:512 --solver direct --out out/
    fracspec solve --alpha 0.4 --lambda 1 --T 1 --f power-exp:sigma=0.3 --n 64
    fracspec validate
"""

import argparse
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import analysis
from .exceptions import ConfigError, FracspecError
from .solver import FivpProblem, IterationConfig, evaluate, solve
from .sources import abs_sin_shift, parse_source, power_exp, sin_shift
from .tfde import (TfdeProblem, assemble_tfde, power_exp_sine, solve_tfde, solve_tfde_modal,
                   tfde_error)

EXAMPLES = ("ex1", "ex2", "ex3", "ex4", "custom")

_DEFAULTS = {
    "ex1": dict(T=1.0, n=(32, 64, 128, 256, 512)),
    "ex2": dict(T=1.0, n=(32, 64, 128, 256, 512)),
    "ex3": dict(T=2.0, n=(8, 16, 32, 64, 128), sigma=1.0),
    "ex4": dict(T=1.0, n=(32, 64, 128, 256, 512), sigma=0.0, solver="fast", tol=1e-12),
    "custom": dict(T=1.0, n=(8, 16, 32, 64)),
}


@dataclass
class ExperimentConfig:
    example: str = "ex1"
    alpha: tuple = (0.2, 0.4, 0.6, 0.8)
    n: tuple = ()
    lam: float = 1.0
    T: float = math.nan
    sigma: float = math.nan
    solver: str = "direct"
    norm: str = "weighted"
    out: str = "."
    M: int = 1024
    L: float = 1.0
    nref: int = 0
    f: str = "zero"
    tol: float = math.nan
    gnuplot: bool = False
    explicit: set = field(default_factory=set, repr=False)

    def resolved(self):
        """Fill example-specific defaults and validate."""
        if self.example not in EXAMPLES:
            raise ConfigError(f"example: unknown {self.example!r}, expected one of {EXAMPLES}")
        defaults = _DEFAULTS[self.example]
        cfg = replace(self)
        for key, value in defaults.items():
            if key not in self.explicit:
                setattr(cfg, key, value)
        if math.isnan(cfg.T):
            cfg.T = 1.0
        if math.isnan(cfg.tol):
            cfg.tol = IterationConfig().tol
        if cfg.example in ("ex3", "ex4") and math.isnan(cfg.sigma):
            raise ConfigError(f"sigma: required for {cfg.example}")
        for a in cfg.alpha:
            if not 0 < a < 1:
                raise ConfigError(f"alpha: {a} not in (0, 1)")
        ns = list(cfg.n)
        if not ns or any(b != 2 * a for a, b in zip(ns[:-1], ns[1:])):
            raise ConfigError(f"n: values must double from one to the next, got {ns}")
        if cfg.solver not in ("direct", "fast"):
            raise ConfigError(f"solver: expected direct or fast, got {cfg.solver!r}")
        if cfg.norm not in ("weighted", "standard"):
            raise ConfigError(f"norm: expected weighted or standard, got {cfg.norm!r}")
        if cfg.example == "ex4" and cfg.norm != "weighted":
            raise ConfigError("norm: ex4 supports only the weighted norm")
        if not cfg.nref:
            cfg.nref = default_reference(cfg)
        if cfg.nref <= ns[-1]:
            raise ConfigError(f"nref: {cfg.nref} must exceed the largest N {ns[-1]}")
        return cfg


def default_reference(cfg):
    """``1024`` for direct studies, ``2^14`` for fast ones or when ``N`` reaches 1024."""
    top = max(cfg.n)
    if cfg.example == "ex4":
        return 1024 if top < 1024 else 1 << 14
    if cfg.solver == "fast" or top >= 1024:
        return 1 << 14
    return 1024


# -- config parsing -----------------------------------------------------------

def _parse_n(text):
    text = str(text).strip()
    if ":" in text:
        lo, hi = (int(v) for v in text.split(":"))
        if lo < 1 or hi < lo:
            raise ValueError(f"bad range {text!r}")
        out = [lo]
        while out[-1] * 2 <= hi:
            out.append(out[-1] * 2)
        return tuple(out)
    return tuple(int(v) for v in text.split(","))


def _parse_floats(text):
    return tuple(float(v) for v in str(text).split(","))


_PARSERS = {
    "example": str, "alpha": _parse_floats, "n": _parse_n, "lam": float, "lambda": float,
    "T": float, "sigma": float, "solver": str, "norm": str, "out": str, "M": int, "L": float,
    "nref": int, "f": str, "tol": float,
    "gnuplot": lambda v: str(v).lower() in ("1", "true", "yes", "on"),
}


def _set(cfg, key, raw, where):
    if key not in _PARSERS:
        raise ConfigError(f"{where}: unknown key {key!r}")
    try:
        value = _PARSERS[key](raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value {raw!r} for {key}: {exc}") from exc
    name = "lam" if key == "lambda" else key
    setattr(cfg, name, value)
    cfg.explicit.add(name)


def read_config(path, cfg=None):
    """Read ``key = value`` lines (``#`` comments) into an :class:`ExperimentConfig`."""
    cfg = ExperimentConfig() if cfg is None else cfg
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for number, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise ConfigError(f"{path}:{number}: expected key = value, got {line!r}")
        _set(cfg, key.strip(), value.strip(), f"{path}:{number}")
    return cfg


# -- experiments --------------------------------------------------------------

def _source(cfg):
    if cfg.example == "ex1":
        return sin_shift(cfg.T)
    if cfg.example == "ex2":
        return abs_sin_shift(cfg.T)
    if cfg.example == "ex3":
        return power_exp(cfg.sigma)
    return parse_source(cfg.f, cfg.T)


def _scalar_errors(cfg, alpha):
    problem = FivpProblem(alpha, cfg.lam, cfg.T, _source(cfg))
    iteration = IterationConfig(tol=cfg.tol)
    ref_solver = "direct" if cfg.nref <= 2048 and cfg.solver == "direct" else "fast"
    ref, _ = solve(problem, cfg.nref, ref_solver, iteration)
    measure = analysis.weighted_error if cfg.norm == "weighted" else analysis.standard_l2_error
    errors, iterations = [], []
    for N in cfg.n:
        U, report = solve(problem, N, cfg.solver, iteration)
        errors.append(measure(U, ref))
        iterations.append(report.iterations if report else None)
    return errors, iterations


def _tfde_errors(cfg, alpha):
    problem = TfdeProblem(alpha, cfg.T, cfg.L, cfg.M, power_exp_sine(cfg.sigma))
    iteration = IterationConfig(tol=cfg.tol)
    if cfg.nref <= 2048:
        ref, _ = solve_tfde(assemble_tfde(problem, cfg.nref), iteration)
    else:
        ref, _ = solve_tfde_modal(problem, cfg.nref, iteration)
    errors, iterations = [], []
    for N in cfg.n:
        U, report = solve_tfde(assemble_tfde(problem, N), iteration)
        errors.append(tfde_error(U, ref, alpha, problem.h, cfg.T))
        iterations.append(report.iterations)
    return errors, iterations


def run_experiment(cfg):
    """Run every ``alpha`` of a resolved config.

    Returns
    -------
    tables : list of ConvergenceTable
    iterations : list of lists (``None`` entries for the direct solver)
    """
    cfg = cfg.resolved()
    tables, iteration_log = [], []
    for alpha in cfg.alpha:
        if cfg.example == "ex4":
            errors, iterations = _tfde_errors(cfg, alpha)
        else:
            errors, iterations = _scalar_errors(cfg, alpha)
        sigma = None if math.isnan(cfg.sigma) else cfg.sigma
        expected = analysis.expected_order(cfg.example, alpha, sigma, cfg.norm)
        tables.append(analysis.rates(cfg.n, errors, expected, cfg.norm,
                                     label=f"{cfg.example}_alpha{alpha:g}"))
        iteration_log.append(iterations)
    return tables, iteration_log


def _pass_label(table):
    if math.isnan(table.expected_order) and not all(e == 0 for e in table.errors):
        return "n/a"
    return "pass" if table.passed() else "fail"


def write_outputs(cfg, tables, iteration_log):
    cfg = cfg.resolved()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    sigma = None if math.isnan(cfg.sigma) else cfg.sigma
    formula = analysis.expected_order_formula(cfg.example, sigma)
    summary = ["alpha,final_rate,expected_order,formula,status,iterations"]
    for alpha, table, its in zip(cfg.alpha, tables, iteration_log):
        (out / f"{table.label}.csv").write_text(table.to_csv())
        if cfg.gnuplot:
            rows = [f"{N} {e:.6e}" for N, e in zip(table.N, table.errors)]
            (out / f"{table.label}.dat").write_text("# N error\n" + "\n".join(rows) + "\n")
        rate = table.final_rate
        counts = " ".join("-" if i is None else str(i) for i in its)
        summary.append(f"{alpha:g},{'' if math.isnan(rate) else f'{rate:.4f}'},"
                       f"{table.expected_order:.4f},{formula},{_pass_label(table)},{counts}")
    (out / "summary.csv").write_text("\n".join(summary) + "\n")
    return out


# -- validation ---------------------------------------------------------------

def validation_checks():
    """Cross-checks of closed forms and fast paths; yields ``(name, ok, detail)``."""
    from .connection import (build_structured, connection_dense_oracle, second_param_matrix)
    from .fractional import caputo_oracle, frac_deriv_weighted, weighted_jacobi, weighted_jacobi_derivative
    from .jacobi import BasisSpec
    from .solver import assemble, solve_direct, solve_iterative

    rng = np.random.default_rng(7)
    for alpha in (0.2, 0.6):
        worst = 0.0
        for n in range(4):
            for t in (0.3, 0.8):
                exact = frac_deriv_weighted(n, 0.0, alpha, alpha, 1.0, t)
                approx = caputo_oracle(lambda s: weighted_jacobi(n, 0.0, alpha, 1.0, s), alpha, t,
                                       tol=1e-9,
                                       du=lambda s: weighted_jacobi_derivative(n, 0.0, alpha, 1.0, s))
                worst = max(worst, abs(approx - exact))
        yield f"caputo oracle vs closed form, alpha={alpha}", worst < 1e-7, f"{worst:.1e}"
    for alpha in (0.4,):
        N = 24
        oracle = connection_dense_oracle(BasisSpec(alpha, 0, 1, N), BasisSpec(alpha, alpha, 1, N)).entries
        closed = second_param_matrix(alpha, N)
        err = np.abs(oracle - closed).max() / np.abs(closed).max()
        yield f"connection closed form vs oracle, alpha={alpha}", err < 1e-10, f"{err:.1e}"
        structured = build_structured(alpha, N).to_dense()
        err = np.abs(structured - closed).max() / np.abs(closed).max()
        yield f"structured (T o H) D vs closed form, alpha={alpha}", err < 1e-10, f"{err:.1e}"
    problem = FivpProblem(0.4, 1.0, 1.0, sin_shift(1.0))
    dense = assemble(problem, 300, mass="dense")
    fast = assemble(problem, 300, mass="structured")
    v = rng.standard_normal(301)
    err = np.abs(dense.mass.matvec(v) - fast.mass.matvec(v)).max() / np.abs(dense.mass.matvec(v)).max()
    yield "structured vs dense mass product, N=300", err < 1e-10, f"{err:.1e}"
    U_direct = solve_direct(dense)
    U_fast, report = solve_iterative(fast)
    err = analysis.weighted_error(U_fast, U_direct)
    yield "fast vs direct solve, N=300", err < 1e-6 and report.converged, f"{err:.1e} ({report.iterations} it)"


def run_validation(stream=None):
    stream = sys.stdout if stream is None else stream
    ok_all = True
    for name, ok, detail in validation_checks():
        ok_all &= bool(ok)
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}", file=stream)
    return ok_all


# -- entry point --------------------------------------------------------------

def _build_parser():
    parser = argparse.ArgumentParser(prog="fracspec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="convergence study for one example")
    run.add_argument("--config", help="key = value file; flags override it")
    run.add_argument("--example", choices=EXAMPLES)
    run.add_argument("--alpha", help="comma-separated orders")
    run.add_argument("--n", help="doubling range lo:hi or comma list")
    run.add_argument("--lambda", dest="lam", help="reaction coefficient (default 1)")
    run.add_argument("--T")
    run.add_argument("--sigma")
    run.add_argument("--solver", choices=("direct", "fast"))
    run.add_argument("--norm", choices=("weighted", "standard"))
    run.add_argument("--out")
    run.add_argument("--M", help="spatial intervals (ex4)")
    run.add_argument("--nref", help="reference truncation")
    run.add_argument("--f", help="source for the custom example")
    run.add_argument("--tol", help="iteration tolerance")
    run.add_argument("--gnuplot", action="store_true", help="also write N-error .dat files")
    run.add_argument("--validate", action="store_true", help="run self-checks first")

    one = sub.add_parser("solve", help="solve one problem and sample the solution")
    one.add_argument("--alpha", type=float, required=True)
    one.add_argument("--lambda", dest="lam", type=float, default=1.0)
    one.add_argument("--T", type=float, default=1.0)
    one.add_argument("--f", required=True,
                     help="sin-shift | abs-sin-shift | power-exp:sigma=S | const:C | zero | file:PATH")
    one.add_argument("--n", type=int, required=True)
    one.add_argument("--solver", choices=("direct", "fast"), default="direct")
    one.add_argument("--tol", type=float, default=IterationConfig().tol)
    one.add_argument("--out", default=".")

    sub.add_parser("validate", help="oracle cross-checks; nonzero exit on failure")
    return parser


def _config_from_args(args):
    cfg = read_config(args.config) if args.config else ExperimentConfig()
    for key in ("example", "alpha", "n", "lam", "T", "sigma", "solver", "norm", "out", "M",
                "nref", "f", "tol"):
        value = getattr(args, key)
        if value is not None:
            _set(cfg, "lambda" if key == "lam" else key, value, f"--{key}")
    if args.gnuplot:
        cfg.gnuplot = True
    return cfg.resolved()


def _cmd_run(args):
    if args.validate and not run_validation():
        return 1
    cfg = _config_from_args(args)
    tables, iterations = run_experiment(cfg)
    out = write_outputs(cfg, tables, iterations)
    for table in tables:
        print(f"{table.label}: final rate {table.final_rate:.2f}, expected "
              f"{table.expected_order:.2f}, {_pass_label(table)}")
    print(f"wrote {out}")
    return 0


def _cmd_solve(args):
    source = parse_source(args.f, args.T)
    problem = FivpProblem(args.alpha, args.lam, args.T, source)
    U, report = solve(problem, args.n, args.solver, IterationConfig(tol=args.tol))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    coeff_lines = ["n,u_n"] + [f"{n},{u:.17e}" for n, u in enumerate(U.values)]
    (out / "coefficients.csv").write_text("\n".join(coeff_lines) + "\n")
    ts = np.linspace(0.0, args.T, 1001)
    values = evaluate(U, ts)
    grid_lines = ["t,u"] + [f"{t:.17e},{u:.17e}" for t, u in zip(ts, values)]
    (out / "solution.csv").write_text("\n".join(grid_lines) + "\n")
    if report is not None:
        print(f"iterations {report.iterations}, converged {report.converged}, "
              f"last update {report.relative_update_history[-1]:.2e}")
    print(f"wrote {out / 'coefficients.csv'} and {out / 'solution.csv'}")
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "solve":
            return _cmd_solve(args)
        return 0 if run_validation() else 1
    except FracspecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
