"""Truncated Fock-space oracle for the global optimum.

All operators are dense ``d x d`` blocks of the exact infinite-dimensional
operators (compressions onto the first ``d`` number states). Working with
exact compressions means the oracle's optimum is the optimum of a strategy
that is genuinely realisable, so it can only overestimate the true global
MSL, and it decreases monotonically as ``d`` grows.

Gaussian states are written as ``rho = G rho_th G^dagger`` with ``G`` a
Gaussian unitary and ``rho_th`` thermal. The vectors ``G|n>`` are the number
states of the Bogoliubov mode ``b = G a G^dagger = mu a + nu a^dagger + c``.
Their components follow from ``b G|n> = sqrt(n) G|n-1>`` solved forward in
the Fock index, so every retained entry is exact up to round-off and the
block carries no truncation-edge error.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .bayes import EstimationProblem, GridPrior, QuadratureError, prior_lambda, prior_mean_f, theta_rule
from .gaussian import GaussianState, wigner
from .phase_space import PhasePolynomial

TRACE_TOL = 1e-8
EIG_FLOOR = 1e-12
CLUSTER_TOL = 1e-8
PROB_FLOOR = 1e-12
STATE_ATOL = 1e-12
DEFAULT_DIM = 60
MAGIC = b"GBFOCK01"


class TruncationError(RuntimeError):
    """The retained Fock block misses too much probability; increase ``d``."""

    def __init__(self, message: str, deficit: float):
        super().__init__(message)
        self.deficit = deficit


class ConvergenceError(RuntimeError):
    """Oracle values did not settle along the truncation ladder."""

    def __init__(self, message: str, history: Sequence[tuple[int, float]], best=None):
        super().__init__(message)
        self.history = list(history)
        self.best = best


@dataclass(frozen=True, eq=False)
class FockOperator:
    matrix: np.ndarray
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("Fock operator must be a square matrix")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0))

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return self.hermiticity_error() < tol

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def __sub__(self, other: "FockOperator") -> "FockOperator":
        return FockOperator(self.matrix - other.matrix)

    def __add__(self, other: "FockOperator") -> "FockOperator":
        return FockOperator(self.matrix + other.matrix)


# -- ladder and quadrature matrices -------------------------------------------

def annihilation(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


def quadrature_matrices(n: int) -> tuple[np.ndarray, np.ndarray]:
    a = annihilation(n)
    ad = a.conj().T
    return (a + ad) / math.sqrt(2.0), (a - ad) / (1j * math.sqrt(2.0))


def number_operator(n: int) -> np.ndarray:
    return np.diag(np.arange(n, dtype=float)).astype(complex)


# -- Gaussian states -----------------------------------------------------------

def _williamson(covs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched ``cov = nu * S S^T`` with ``S`` symplectic; returns ``(nu, S)``."""
    det = covs[:, 0, 0] * covs[:, 1, 1] - covs[:, 0, 1] * covs[:, 1, 0]
    if np.any(det <= 0):
        raise ValueError("covariance must be positive definite")
    nu = np.sqrt(det)
    w, o = np.linalg.eigh(covs / nu[:, None, None])
    flip = np.linalg.det(o) < 0
    o[flip, :, 0] *= -1
    return nu, o * np.sqrt(w)[:, None, :]


def _bogoliubov(means: np.ndarray, covs: np.ndarray):
    """Coefficients of ``b = mu a + nu a^dagger + c`` and thermal occupations."""
    nu, s = _williamson(covs)
    if np.any(nu < 0.5 - 1e-12):
        raise ValueError(f"unphysical covariance (symplectic eigenvalue {nu.min():.6g} < 1/2)")
    sinv = np.linalg.inv(s)
    u = sinv[:, 0, 0] + 1j * sinv[:, 1, 0]
    w = sinv[:, 0, 1] + 1j * sinv[:, 1, 1]
    mu = 0.5 * (u - 1j * w)
    nu_c = 0.5 * (u + 1j * w)
    c = -(u * means[:, 0] + w * means[:, 1]) / math.sqrt(2.0)
    nbar = np.maximum(nu - 0.5, 0.0)
    # vacuum probability of the pure state G|0>, whose covariance is S S^T / 2
    vp = 0.5 * s @ np.swapaxes(s, 1, 2) + 0.5 * np.eye(2)
    sol = np.linalg.solve(vp, means[:, :, None])[:, :, 0]
    log_vac = -0.5 * np.sum(means * sol, axis=1) - 0.5 * np.log(np.linalg.det(vp))
    return mu, nu_c, c, nbar, log_vac


def _thermal_cutoff(nbar: float, tail: float = 1e-17) -> int:
    if nbar <= 0:
        return 0
    ratio = nbar / (1.0 + nbar)
    return int(math.ceil(math.log(tail) / math.log(ratio)))


def _vacuum_recursion(mu, nu, c, log_vac, length: int) -> np.ndarray:
    """Amplitudes of ``G|0>`` from ``b G|0> = 0`` (forward in the Fock index)."""
    psi = np.zeros((mu.shape[0], length), dtype=complex)
    psi[:, 0] = np.exp(0.5 * log_vac)
    if length > 1:
        psi[:, 1] = -c * psi[:, 0] / mu
    for m in range(1, length - 1):
        psi[:, m + 1] = -(c * psi[:, m] + nu * math.sqrt(m) * psi[:, m - 1]) / (mu * math.sqrt(m + 1))
    return psi


def gaussian_vectors(means: np.ndarray, covs: np.ndarray, d: int):
    """Vectors ``G|n>`` (first ``d`` amplitudes) and thermal weights for a batch of states.

    Each column solves ``b G|n> = sqrt(n) G|n-1>`` forward in the Fock index,
    started from ``<0|G|n> = conj(<n|G^dagger|0>)``. Repeated application of
    ``b^dagger`` is avoided because it amplifies round-off like
    ``cosh(r)^(2n)`` for squeezing ``r``.

    Returns ``(vecs, probs)`` with ``vecs`` of shape ``(K, n_th, d)`` and
    ``probs`` of shape ``(K, n_th)``.
    """
    means = np.atleast_2d(np.asarray(means, dtype=float))
    covs = np.reshape(np.asarray(covs, dtype=float), (-1, 2, 2))
    mu, nu, c, nbar, log_vac = _bogoliubov(means, covs)
    n_th = max(_thermal_cutoff(x) for x in nbar) + 1
    k = means.shape[0]
    vecs = np.zeros((k, n_th, d), dtype=complex)
    probs = np.zeros((k, n_th))
    if n_th == 1:
        vecs[:, 0, :] = _vacuum_recursion(mu, nu, c, log_vac, d)
        probs[:, 0] = 1.0
        return vecs, probs
    # G^dagger|0> is the pure Gaussian with mean -S^-1 rbar and covariance S^-1 S^-T / 2
    _, s = _williamson(covs)
    sinv = np.linalg.inv(s)
    inv_means = -np.einsum("kij,kj->ki", sinv, means)
    inv_pure = 0.5 * sinv @ np.swapaxes(sinv, 1, 2)
    imu, inu, ic, _, ilog = _bogoliubov(inv_means, inv_pure)
    start = np.conj(_vacuum_recursion(imu, inu, ic, ilog, n_th))
    sq = np.sqrt(np.arange(max(d, n_th) + 1, dtype=float))
    for n in range(n_th):
        psi = vecs[:, n, :]
        psi[:, 0] = start[:, n]
        prev = vecs[:, n - 1, :] if n else None
        for m in range(d - 1):
            rhs = -c * psi[:, m]
            if m:
                rhs = rhs - nu * sq[m] * psi[:, m - 1]
            if n:
                rhs = rhs + sq[n] * prev[:, m]
            psi[:, m + 1] = rhs / (mu * sq[m + 1])
        probs[:, n] = np.where(nbar > 0, nbar**n / (1.0 + nbar) ** (n + 1), 1.0 if n == 0 else 0.0)
    return vecs, probs


def gaussian_to_fock(state: GaussianState, d: int, trace_tol: float = TRACE_TOL) -> FockOperator:
    """Density matrix block of a Gaussian state on the first ``d`` number states."""
    if d < 2:
        raise ValueError("truncation dimension must be at least 2")
    vecs, probs = gaussian_vectors(state.mean[None, :], state.cov[None, :, :], d)
    flat = vecs.reshape(-1, d)
    rho = (flat.T * probs.reshape(-1)) @ flat.conj()
    deficit = 1.0 - float(np.trace(rho).real)
    if deficit > trace_tol:
        raise TruncationError(f"trace deficit {deficit:.3e} exceeds {trace_tol:.1e}; increase d", deficit)
    return FockOperator(rho, {"trace_deficit": deficit})


def _weighted_blocks(problem: EstimationProblem, nodes, weights, d, chunk=256):
    """``sum_k w_k rho(theta_k)`` for both weights, plus the entrywise scale
    ``sum_k |w_k| sum_n p_n |psi_kn| |psi_kn|^T`` used for convergence."""
    f = problem.loss.forward
    rho0 = np.zeros((d, d), dtype=complex)
    rhobar = np.zeros((d, d), dtype=complex)
    scale = np.zeros((d, d))
    for s in range(0, len(nodes), chunk):
        th = nodes[s:s + chunk]
        w = weights[s:s + chunk]
        means, covs = problem.model.moments(th)
        vecs, probs = gaussian_vectors(means, covs, d)
        flat = vecs.reshape(-1, d)
        pw = (probs * w[:, None]).reshape(-1)
        pf = (probs * (w * f(th))[:, None]).reshape(-1)
        rho0 += (flat.T * pw) @ flat.conj()
        rhobar += (flat.T * pf) @ flat.conj()
        mag = np.abs(flat)
        scale += (mag.T * np.abs(pw)) @ mag
    return rho0, rhobar, scale


def averaged_states_fock(problem: EstimationProblem, d: int, trace_tol: float = TRACE_TOL):
    """``(rho0, rhobar)`` blocks built with the problem's parameter quadrature.

    The node rule and order doubling follow the moment quadrature; the
    trace tolerance applies to the prior-averaged state ``rho0``, since prior
    tails may individually leave the block.
    """
    if d < 2:
        raise ValueError("truncation dimension must be at least 2")
    quad = problem.quadrature
    prior = problem.prior
    if isinstance(prior, GridPrior):
        nodes, weights = theta_rule(prior, 0, quad)
        rho0, rhobar, _ = _weighted_blocks(problem, nodes, weights, d)
    else:
        order = quad.order
        prev = None
        while True:
            if order > quad.max_order:
                raise QuadratureError(
                    f"averaged Fock states: no convergence to rtol={quad.rtol} by order {quad.max_order}"
                )
            nodes, weights = theta_rule(prior, order, quad)
            rho0, rhobar, scale = _weighted_blocks(problem, nodes, weights, d)
            if prev is not None:
                # entries of a density matrix are bounded by 1; the absolute
                # floor absorbs round-off in entries that vanish exactly
                bound = quad.rtol * scale + STATE_ATOL
                fb = _f_bound(problem, nodes)
                if np.all(np.abs(rho0 - prev[0]) <= bound) and np.all(np.abs(rhobar - prev[1]) <= bound * fb):
                    break
            prev = (rho0, rhobar)
            order *= 2
    rho0 = 0.5 * (rho0 + rho0.conj().T)
    rhobar = 0.5 * (rhobar + rhobar.conj().T)
    deficit = 1.0 - float(np.trace(rho0).real)
    if deficit > trace_tol:
        raise TruncationError(f"rho0 trace deficit {deficit:.3e} exceeds {trace_tol:.1e}; increase d", deficit)
    return FockOperator(rho0, {"trace_deficit": deficit}), FockOperator(rhobar)


def _f_bound(problem: EstimationProblem, nodes) -> float:
    return max(float(np.max(np.abs(problem.loss.forward(nodes)))), 1e-300)


# -- Lyapunov equation ----------------------------------------------------------

def solve_lyapunov(rho0: FockOperator, rhobar: FockOperator, eig_floor: float = EIG_FLOOR) -> FockOperator:
    """Solve ``S rho0 + rho0 S = 2 rhobar`` on the support of ``rho0``.

    In the eigenbasis of rho0 the solution is ``2 rhobar_ij / (l_i + l_j)``;
    pairs with ``l_i + l_j`` below ``eig_floor * l_max`` are set to zero.
    """
    lam, vec = np.linalg.eigh(rho0.matrix)
    rb = vec.conj().T @ rhobar.matrix @ vec
    denom = lam[:, None] + lam[None, :]
    floor = eig_floor * max(lam[-1], 0.0)
    keep = denom > floor
    s_eig = np.where(keep, 2.0 * rb / np.where(keep, denom, 1.0), 0.0)
    s = vec @ s_eig @ vec.conj().T
    s = 0.5 * (s + s.conj().T)
    # residual measured on the retained support
    resid_eig = (s_eig * denom - 2.0 * rb) * keep
    info = {
        "residual": float(np.max(np.abs(resid_eig), initial=0.0)),
        "zeroed_pairs": int(np.count_nonzero(~keep)),
        "support_rank": int(np.count_nonzero(lam > 0.5 * floor)),
    }
    return FockOperator(s, info)


def lyapunov_residual(s: FockOperator, rho0: FockOperator, rhobar: FockOperator) -> float:
    r = s.matrix @ rho0.matrix + rho0.matrix @ s.matrix - 2.0 * rhobar.matrix
    return float(np.max(np.abs(r)))


def weighted_norm_sq(x: FockOperator, rho0: FockOperator) -> float:
    """``Tr(rho0 x^2)`` for Hermitian ``x``."""
    m = x.matrix
    return float(np.real(np.sum((rho0.matrix @ m) * m.T)))


def jordan_fock(a: FockOperator, b: FockOperator) -> FockOperator:
    return FockOperator(0.5 * (a.matrix @ b.matrix + b.matrix @ a.matrix))


def weighted_inner(a: FockOperator, b: FockOperator, rho0: FockOperator) -> float:
    """``<a, b>_rho0 = Tr(rho0 {a, b}) / 2``."""
    return float(np.real(np.trace(rho0.matrix @ jordan_fock(a, b).matrix)))


# -- Weyl quantisation ----------------------------------------------------------

def poly_to_fock(poly: PhasePolynomial, d: int) -> FockOperator:
    """Weyl-ordered operator of a polynomial symbol, compressed to ``d`` number states.

    Uses ``W(q^m p^n) = 2^-m sum_k C(m, k) q^k p^n q^(m-k)``. Products are
    formed on ``d + degree`` states so the retained block is exact.
    """
    if poly.is_zero():
        return FockOperator(np.zeros((d, d), dtype=complex))
    deg = int(poly.degree())
    big = d + deg + 1
    q, p = quadrature_matrices(big)
    qpow = [np.eye(big, dtype=complex)]
    ppow = [np.eye(big, dtype=complex)]
    for _ in range(deg):
        qpow.append(qpow[-1] @ q)
        ppow.append(ppow[-1] @ p)
    out = np.zeros((big, big), dtype=complex)
    for (m, n), coeff in poly.terms.items():
        term = np.zeros((big, big), dtype=complex)
        for k in range(m + 1):
            term += math.comb(m, k) * (qpow[k] @ ppow[n] @ qpow[m - k])
        out += coeff * term / 2.0**m
    return FockOperator(out[:d, :d])


# -- oracle ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OracleSolution:
    dim: int
    rho0: FockOperator
    rhobar: FockOperator
    spm: FockOperator
    lam: float
    msl: float
    history: tuple[tuple[int, float], ...] = ()

    @property
    def lyapunov_residual(self) -> float:
        return float(self.spm.info.get("residual", math.nan))


def oracle_at(problem: EstimationProblem, d: int, trace_tol: float = TRACE_TOL) -> OracleSolution:
    rho0, rhobar = averaged_states_fock(problem, d, trace_tol)
    spm = solve_lyapunov(rho0, rhobar)
    lam = prior_lambda(problem)
    msl = lam - weighted_norm_sq(spm, rho0)
    return OracleSolution(d, rho0, rhobar, spm, lam, msl, ((d, msl),))


def solve_oracle(problem: EstimationProblem, d: int = DEFAULT_DIM, conv_tol: float = 1e-6,
                 max_dim: int = 960, trace_tol: float = TRACE_TOL) -> OracleSolution:
    """Global optimum with a truncation ladder ``d, 2d, ...``.

    A rung is accepted when its rho0 passes the trace check and its MSL
    differs from the previous rung by at most ``conv_tol``. Every rung is the
    exact MSL of a realisable strategy, so the ladder decreases
    monotonically; on failure the error carries the last rung as ``best``.
    """
    history: list[tuple[int, float]] = []
    prev: Optional[OracleSolution] = None
    dim = d
    while dim <= max_dim:
        sol = oracle_at(problem, dim, trace_tol=math.inf)
        history.append((dim, sol.msl))
        deficit = sol.rho0.info["trace_deficit"]
        if prev is not None and sol.msl > prev.msl + max(conv_tol, 1e-9):
            raise ConvergenceError(
                f"oracle MSL increased from {prev.msl:.12g} (d={prev.dim}) to {sol.msl:.12g} (d={dim})",
                history, sol,
            )
        if prev is not None and deficit <= trace_tol and abs(sol.msl - prev.msl) <= conv_tol:
            return replace(sol, history=tuple(history))
        prev = sol
        dim *= 2
    detail = "; ".join(f"d={k}: {v:.12g}" for k, v in history)
    raise ConvergenceError(
        f"oracle did not converge to {conv_tol:g} by d={max_dim} "
        f"(trace deficit {prev.rho0.info['trace_deficit']:.2e}; {detail})",
        history, replace(prev, history=tuple(history)),
    )


def global_msl(problem: EstimationProblem, d: int = DEFAULT_DIM, conv_tol: float = 1e-6,
               max_dim: int = 960) -> float:
    return solve_oracle(problem, d, conv_tol, max_dim).msl


def pm_msl_operator_pvm(problem: EstimationProblem, op: FockOperator, d: Optional[int] = None,
                        states: Optional[tuple[FockOperator, FockOperator]] = None,
                        cluster_tol: float = CLUSTER_TOL, prob_floor: float = PROB_FLOOR) -> float:
    """MSL of the spectral measurement of ``op`` followed by the posterior mean.

    Degenerate eigenvalues (within ``cluster_tol`` times the spectral range)
    are merged into one projector.
    """
    if states is None:
        states = averaged_states_fock(problem, d or op.dim)
    rho0, rhobar = states
    if not op.is_hermitian(1e-8):
        raise ValueError("operator must be Hermitian")
    herm = 0.5 * (op.matrix + op.matrix.conj().T)
    evals, evecs = np.linalg.eigh(herm)
    spread = evals[-1] - evals[0]
    tol = cluster_tol * spread
    p0 = np.real(np.sum(evecs.conj() * (rho0.matrix @ evecs), axis=0))
    p1 = np.real(np.sum(evecs.conj() * (rhobar.matrix @ evecs), axis=0))
    gain = 0.0
    start = 0
    n = len(evals)
    for i in range(1, n + 1):
        if i == n or evals[i] - evals[i - 1] > tol:
            t0 = p0[start:i].sum()
            t1 = p1[start:i].sum()
            if t0 >= prob_floor:
                gain += t1 * t1 / t0
            start = i
    return float(prior_lambda(problem) - gain)


# -- Theorem-1 check: polynomial degree of W_rhobar / W_rho0 ---------------------

@dataclass(frozen=True)
class FitReport:
    degrees: tuple[int, ...]
    residuals: tuple[float, ...]
    n_points: int
    n_excluded: int

    def residual(self, degree: int) -> float:
        return self.residuals[self.degrees.index(degree)]

    def minimal_degree(self, tol: float = 1e-6) -> Optional[int]:
        for deg, res in zip(self.degrees, self.residuals):
            if res < tol:
                return deg
        return None


def wigner_ratio(problem: EstimationProblem, q: np.ndarray, p: np.ndarray):
    """``W_rho0`` and ``W_rhobar`` at the points ``(q, p)`` via parameter quadrature."""
    f = problem.loss.forward

    def integrand(thetas):
        means, covs = problem.model.moments(thetas)
        w = wigner(means, covs, q, p)
        return np.stack([w, f(thetas).reshape((-1,) + (1,) * q.ndim) * w], axis=1)

    both = problem.integrate(integrand, 0, what="averaged Wigner functions")
    return both[0], both[1]


def _monomial_design(q, p, degree):
    cols = [q**m * p**(tot - m) for tot in range(degree + 1) for m in range(tot, -1, -1)]
    return np.stack(cols, axis=1)


def verify_theorem1(problem: EstimationProblem, max_degree: int = 3, grid=None,
                    wigner_floor: float = 1e-6) -> FitReport:
    """Least-squares polynomial fits of ``W_rhobar / W_rho0`` on a phase-space grid.

    ``grid`` is ``(q_values, p_values)`` or ``None`` for a 41x41 grid over
    ``rho0``'s mean +- 3 standard deviations. Points with ``W_rho0`` below
    ``wigner_floor`` times its maximum are excluded. Residuals are RMS misfit
    over RMS of the ratio, for degrees 0..max_degree.
    """
    t0, _ = problem.moment_tables(2)
    if grid is None:
        mq, mp = t0[1, 0], t0[0, 1]
        sq = math.sqrt(max(t0[2, 0] - mq * mq, 1e-300))
        sp = math.sqrt(max(t0[0, 2] - mp * mp, 1e-300))
        grid = (np.linspace(mq - 3 * sq, mq + 3 * sq, 41), np.linspace(mp - 3 * sp, mp + 3 * sp, 41))
    qv, pv = (np.asarray(g, dtype=float) for g in grid)
    qq, pp = np.meshgrid(qv, pv, indexing="ij")
    qq, pp = qq.ravel(), pp.ravel()
    w0, w1 = wigner_ratio(problem, qq, pp)
    top = float(np.max(w0))
    keep = (w0 >= wigner_floor * top) & (w0 > 0)
    if not np.any(keep):
        raise ValueError("all grid points fall below the Wigner floor")
    phi = w1[keep] / w0[keep]
    # centre and scale coordinates for a well-conditioned fit
    xq, xp = qq[keep], pp[keep]
    cq, cp = xq.mean(), xp.mean()
    sq_ = max(np.ptp(xq), 1e-300) / 2
    sp_ = max(np.ptp(xp), 1e-300) / 2
    uq, up = (xq - cq) / sq_, (xp - cp) / sp_
    norm = max(math.sqrt(np.mean(phi**2)), 1e-300)
    residuals = []
    for deg in range(max_degree + 1):
        design = _monomial_design(uq, up, deg)
        coef, *_ = np.linalg.lstsq(design, phi, rcond=None)
        residuals.append(float(math.sqrt(np.mean((design @ coef - phi) ** 2)) / norm))
    return FitReport(tuple(range(max_degree + 1)), tuple(residuals), int(keep.sum()), int((~keep).sum()))


# -- binary dump ----------------------------------------------------------------

def write_fock_matrix(path, op: FockOperator) -> None:
    """Little-endian dump: 8-byte magic, uint64 dim, then row-major (re, im) float64 pairs."""
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", op.dim))
        fh.write(np.ascontiguousarray(op.matrix, dtype="<c16").tobytes(order="C"))


def read_fock_matrix(path) -> FockOperator:
    data = Path(path).read_bytes()
    if data[:8] != MAGIC:
        raise ValueError(f"{path}: bad magic {data[:8]!r}")
    (dim,) = struct.unpack("<Q", data[8:16])
    body = np.frombuffer(data[16:], dtype="<c16")
    if body.size != dim * dim:
        raise ValueError(f"{path}: expected {dim * dim} entries, found {body.size}")
    return FockOperator(body.reshape(dim, dim).astype(complex))


def point_prior_msl(problem: EstimationProblem) -> float:
    """Closed value of the oracle for a point prior (no parameter uncertainty)."""
    if not isinstance(problem.prior, GridPrior) or len(problem.prior.nodes) != 1:
        raise ValueError("needs a point prior")
    return prior_lambda(problem) - prior_mean_f(problem) ** 2
