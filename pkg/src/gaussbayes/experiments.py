"""Sweeps over the prior width and the verification battery.

These combine the phase-space solver, the Fock-space oracle and the
homodyne pipeline; the CLI and the experiment scripts are thin wrappers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .bayes import EstimationProblem, QuadratureError, prior_loss
from .config import ExperimentConfig, OracleConfig, VerifyConfig
from .fock import (
    ConvergenceError,
    OracleSolution,
    TruncationError,
    jordan_fock,
    pm_msl_operator_pvm,
    poly_to_fock,
    solve_oracle,
    verify_theorem1,
    weighted_norm_sq,
)
from .gaussian import contract
from .homodyne import pm_msl_homodyne, relative_msl
from .phase_space import ONE, P, Q, PhasePolynomial, jordan_product
from .solver import OperatorBasis, ProjectedSPM, single_quadrature_form, solve_projected_spm

NUMERICAL_ERRORS = (QuadratureError, ConvergenceError, TruncationError, np.linalg.LinAlgError, ValueError)

SWEEP_COLUMNS = (
    "sigma0_sq", "basis", "msl_constrained", "msl_pm", "msl_global_oracle",
    "rel_constrained", "rel_pm", "rel_prior", "errors",
)


def run_oracle(problem: EstimationProblem, ocfg: OracleConfig) -> OracleSolution:
    return solve_oracle(problem, ocfg.d, ocfg.conv_tol, ocfg.max_dim, ocfg.trace_tol)


def strategy_pm_msl(problem: EstimationProblem, spm: ProjectedSPM, oracle: Optional[OracleSolution]) -> float:
    """PM MSL of the spectral measurement of ``S_V``.

    A single-quadrature ``S_V`` is measured by homodyne detection (the
    outcome is the quadrature value, which refines its spectral measurement);
    otherwise the truncated spectral PVM is used.
    """
    form = single_quadrature_form(spm.symbol)
    if form is not None and spm.symbol.degree() >= 1:
        return pm_msl_homodyne(problem, form[0])
    if oracle is None:
        raise ValueError("PM MSL of a mixed-quadrature operator needs the Fock oracle")
    op = poly_to_fock(spm.symbol, oracle.dim)
    return pm_msl_operator_pvm(problem, op, states=(oracle.rho0, oracle.rhobar))


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return format(float(x), ".17g")


def sweep_point(cfg: ExperimentConfig, var0: float) -> list[dict]:
    """One row per basis at prior variance ``var0``; failures go to ``errors``."""
    problem = cfg.problem(var0)
    errors_common = []
    oracle = None
    glob = math.nan
    if cfg.oracle.enabled:
        try:
            oracle = run_oracle(problem, cfg.oracle)
            glob = oracle.msl
        except ConvergenceError as exc:
            if exc.best is not None:
                oracle = exc.best
                glob = oracle.msl
                errors_common.append(f"oracle not converged, upper bound at d={oracle.dim}")
            else:
                errors_common.append(f"oracle: {exc}")
        except NUMERICAL_ERRORS as exc:
            errors_common.append(f"oracle: {exc}")
    rows = []
    try:
        prior_val = prior_loss(problem)
    except NUMERICAL_ERRORS as exc:
        prior_val = math.nan
        errors_common.append(f"prior: {exc}")
    try:
        bases = cfg.basis_list(problem)
    except NUMERICAL_ERRORS as exc:
        return [dict(sigma0_sq=var0, basis="", msl_constrained=math.nan, msl_pm=math.nan,
                     msl_global_oracle=glob, rel_constrained=math.nan, rel_pm=math.nan,
                     rel_prior=math.nan, errors="; ".join(errors_common + [f"basis: {exc}"]))]
    for label, basis in bases:
        errs = list(errors_common)
        con = pm = math.nan
        try:
            spm = solve_projected_spm(problem, basis)
            con = spm.msl
            pm = strategy_pm_msl(problem, spm, oracle)
        except NUMERICAL_ERRORS as exc:
            errs.append(f"{type(exc).__name__}: {exc}")

        def rel(v):
            if math.isnan(v) or not glob > 0:
                return math.nan
            return relative_msl(v, glob)

        rows.append(dict(
            sigma0_sq=var0, basis=label, msl_constrained=con, msl_pm=pm, msl_global_oracle=glob,
            rel_constrained=rel(con), rel_pm=rel(pm), rel_prior=rel(prior_val), errors="; ".join(errs),
        ))
    return rows


def run_sweep(cfg: ExperimentConfig, workers: int = 1) -> list[dict]:
    grid = cfg.sweep.grid()
    if workers > 1 and len(grid) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(sweep_point, [cfg] * len(grid), grid))
    else:
        parts = [sweep_point(cfg, v) for v in grid]
    return [row for part in parts for row in part]


def format_csv(rows: Sequence[dict]) -> str:
    import csv
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in SWEEP_COLUMNS])
    return buf.getvalue()


# -- verification battery ---------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"{status} {self.name}: {_fmt(self.value)} vs {_fmt(self.threshold)}{extra}"


def stationarity_residual(problem: EstimationProblem, spm: ProjectedSPM, alpha=None) -> float:
    """``max_i |<X, B_i>_rho0 - Tr(rhobar B_i)|`` for ``X = sum alpha_i B_i``."""
    alpha = spm.alpha if alpha is None else np.asarray(alpha, dtype=float)
    elements = spm.basis.elements
    x = PhasePolynomial.zero()
    for a, e in zip(alpha, elements):
        x = x + float(a) * e
    t0, t1 = problem.moment_tables(2 * spm.basis.degree)
    res = [contract(jordan_product(x, e), t0).real - contract(e, t1).real for e in elements]
    return float(np.max(np.abs(res)))


def symbol_of(spm: ProjectedSPM, alpha) -> PhasePolynomial:
    x = PhasePolynomial.zero()
    for a, e in zip(alpha, spm.basis.elements):
        x = x + float(a) * e
    return x.real()


def orthogonality_residual(spm: ProjectedSPM, oracle: OracleSolution, alpha=None) -> float:
    """``max_i |<S - X, B_i>_rho0|`` on the truncated space."""
    alpha = spm.alpha if alpha is None else alpha
    x = poly_to_fock(symbol_of(spm, alpha), oracle.dim)
    diff = oracle.spm - x
    vals = []
    for e in spm.basis.elements:
        b = poly_to_fock(e, oracle.dim)
        vals.append(abs(np.trace(oracle.rho0.matrix @ jordan_fock(diff, b).matrix).real))
    return float(max(vals))


def excess_identity_residual(spm: ProjectedSPM, oracle: OracleSolution, alpha=None) -> float:
    """``|(L(X) - L(S)) - ||X - S||^2_rho0|`` for ``X = sum alpha_i B_i``."""
    alpha = spm.alpha if alpha is None else alpha
    x = poly_to_fock(symbol_of(spm, alpha), oracle.dim)
    norm = weighted_norm_sq(x - oracle.spm, oracle.rho0)
    return abs((spm.quadratic_msl(alpha) - oracle.msl) - norm)


def verify_problem(problem: EstimationProblem, bases, vcfg: VerifyConfig, ocfg: OracleConfig) -> list[CheckResult]:
    oracle = run_oracle(problem, ocfg)
    results = []
    for label, basis in bases:
        spm = solve_projected_spm(problem, basis)
        test_alpha = spm.alpha + vcfg.perturb
        scale = 1.0 + float(np.max(np.abs(spm.bvec)))
        r = stationarity_residual(problem, spm, test_alpha)
        results.append(CheckResult(f"{label}: stationarity", r < vcfg.stationarity_tol * scale, r,
                                   vcfg.stationarity_tol * scale))
        r = orthogonality_residual(spm, oracle, test_alpha)
        results.append(CheckResult(f"{label}: orthogonality", r < vcfg.orthogonality_tol, r,
                                   vcfg.orthogonality_tol, f"d={oracle.dim}"))
        r = excess_identity_residual(spm, oracle, test_alpha)
        results.append(CheckResult(f"{label}: excess identity", r < vcfg.excess_tol, r, vcfg.excess_tol,
                                   f"d={oracle.dim}"))
        other = spm.quadratic_msl(spm.alpha + vcfg.chain_perturbation)
        pm = strategy_pm_msl(problem, spm, oracle)
        chain = (other, spm.msl, pm, oracle.msl)
        slack = min(chain[i] - chain[i + 1] for i in range(3))
        results.append(CheckResult(
            f"{label}: inequality chain", slack >= -vcfg.chain_slack, slack, -vcfg.chain_slack,
            "perturbed={} constrained={} pm={} global={}".format(*(_fmt(c) for c in chain)),
        ))
    report = verify_theorem1(problem, max_degree=3)
    res1 = report.residual(1)
    lin = solve_projected_spm(problem, OperatorBasis((ONE, Q, P), ("1", "q", "p")))
    gap = lin.msl - oracle.msl
    if res1 < vcfg.theorem1_tol:
        ok = abs(gap) < vcfg.excess_tol
        detail = f"ratio linear; linear-basis gap to global {_fmt(gap)}"
    else:
        ok = True
        detail = f"ratio not linear; linear-basis gap to global {_fmt(gap)}"
    residuals = ", ".join(f"deg{d}={_fmt(r)}" for d, r in zip(report.degrees, report.residuals))
    results.append(CheckResult("theorem-1 consistency", ok, res1, vcfg.theorem1_tol, f"{detail}; {residuals}"))
    return results
