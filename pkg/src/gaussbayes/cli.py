"""Command-line driver: ``solve``, ``sweep``, ``oracle`` and ``verify``.

Exit codes: 0 success, 1 configuration error, 2 numerical non-convergence,
3 verification failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from .bayes import QuadratureError, prior_lambda, prior_loss
from .config import ConfigError, ExperimentConfig, load_config
from .experiments import format_csv, run_oracle, run_sweep, verify_problem, _fmt
from .fock import ConvergenceError, TruncationError, write_fock_matrix
from .homodyne import simulate_single_shot, strategy_from_spm
from .solver import single_quadrature_form, solve_projected_spm

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VERIFY = 0, 1, 2, 3
WORKERS_ENV = "GAUSSBAYES_WORKERS"


def _kv(lines: list[str], key: str, value) -> None:
    if isinstance(value, (list, tuple, np.ndarray)):
        value = " ".join(_fmt(v) for v in value)
    elif not isinstance(value, str):
        value = _fmt(value)
    lines.append(f"{key} = {value}")


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_solve(cfg: ExperimentConfig, workers: int) -> tuple[str, int]:
    problem = cfg.problem()
    lines = ["[problem]"]
    _kv(lines, "model", cfg.model.kind)
    _kv(lines, "prior", cfg.prior.kind)
    _kv(lines, "sigma0_sq", problem.prior.variance)
    _kv(lines, "lambda", prior_lambda(problem))
    _kv(lines, "prior_msl", prior_loss(problem))
    for label, basis in cfg.basis_list(problem):
        spm = solve_projected_spm(problem, basis)
        lines.append("")
        lines.append(f"[basis \"{label}\"]")
        _kv(lines, "elements", "; ".join(spm.basis.labels))
        _kv(lines, "alpha", spm.alpha)
        _kv(lines, "symbol", str(spm.symbol))
        _kv(lines, "lambda", spm.lam)
        _kv(lines, "msl", spm.msl)
        _kv(lines, "gram_condition", spm.condition_number)
        _kv(lines, "residual", spm.residual)
        form = single_quadrature_form(spm.symbol)
        if form is not None and spm.symbol.degree() >= 1:
            meas, est = strategy_from_spm(spm, problem.loss)
            _kv(lines, "homodyne_angle", meas.phi)
            _kv(lines, "estimator_coefficients", est.coeffs)
            if cfg.monte_carlo.trials:
                mean, err = simulate_single_shot(problem, meas, est, cfg.monte_carlo.trials, cfg.seed, workers)
                _kv(lines, "msl_monte_carlo", mean)
                _kv(lines, "msl_monte_carlo_stderr", err)
        elif form is None:
            _kv(lines, "homodyne_angle", "none (mixes quadratures)")
        else:
            _kv(lines, "homodyne_angle", "none (constant estimate)")
    return "\n".join(lines) + "\n", EXIT_OK


def cmd_sweep(cfg: ExperimentConfig, workers: int) -> tuple[str, int]:
    rows = run_sweep(cfg, workers)
    return format_csv(rows), EXIT_OK


def cmd_oracle(cfg: ExperimentConfig, workers: int) -> tuple[str, int]:
    problem = cfg.problem()
    sol = run_oracle(problem, cfg.oracle)
    lines = ["[oracle]"]
    _kv(lines, "dimension", sol.dim)
    _kv(lines, "ladder", ", ".join(f"{d}:{_fmt(v)}" for d, v in sol.history))
    _kv(lines, "lambda", sol.lam)
    _kv(lines, "global_msl", sol.msl)
    _kv(lines, "prior_msl", prior_loss(problem))
    _kv(lines, "trace_deficit", sol.rho0.info["trace_deficit"])
    _kv(lines, "lyapunov_residual", sol.lyapunov_residual)
    _kv(lines, "zeroed_pairs", sol.spm.info["zeroed_pairs"])
    if cfg.oracle.dump:
        prefix = cfg.oracle.dump
        for name, op in (("rho0", sol.rho0), ("rhobar", sol.rhobar), ("spm", sol.spm)):
            path = f"{prefix}{name}.bin"
            write_fock_matrix(path, op)
            _kv(lines, f"dump_{name}", path)
    return "\n".join(lines) + "\n", EXIT_OK


def cmd_verify(cfg: ExperimentConfig, workers: int) -> tuple[str, int]:
    problem = cfg.problem()
    results = verify_problem(problem, cfg.basis_list(problem), cfg.verify, cfg.oracle)
    lines = [r.line() for r in results]
    failed = [r.name for r in results if not r.passed]
    lines.append(f"summary = {len(results) - len(failed)}/{len(results)} passed")
    if failed:
        lines.append("failed = " + "; ".join(failed))
    return "\n".join(lines) + "\n", EXIT_VERIFY if failed else EXIT_OK


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "oracle": cmd_oracle, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaussbayes", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML experiment configuration")
        p.add_argument("--out", help="output path (default: config 'output', else stdout)")
        p.add_argument("--workers", type=int, help=f"parallel workers (env {WORKERS_ENV})")
        p.add_argument("--seed", type=int, help="unsigned 64-bit seed, overrides the config")
    return parser


def _workers(arg: Optional[int]) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    return 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg = dataclasses.replace(cfg, seed=args.seed)
        workers = _workers(args.workers)
        text, code = COMMANDS[args.command](cfg, workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, TruncationError, QuadratureError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    _emit(text, args.out or cfg.output or None)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
