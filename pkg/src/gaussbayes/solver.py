"""Subspace-constrained optimum: Gram system, projected SPM operator, estimators.

For a basis ``B_1..B_N`` of real symbols the constrained MSL is
``lambda - b^T G^+ b`` with ``G_ij = <B_i, B_j>_rho0`` (the symmetrised
rho0-weighted inner product) and ``b_i = Tr(rhobar B_i)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .bayes import EstimationProblem, LossMap, prior_lambda
from .gaussian import contract
from .phase_space import ONE, P, Q, PhasePolynomial, jordan_product, parse_poly

RCOND = 1e-12
DROP_TOL = 1e-10


class SelfAdjointnessWarning(UserWarning):
    """Basis mixes quadratures beyond degree two; the MSL is only a bound."""


@dataclass(frozen=True, eq=False)
class OperatorBasis:
    elements: tuple[PhasePolynomial, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        elements = tuple(self.elements)
        if not elements:
            raise ValueError("operator basis must be non-empty")
        for e in elements:
            if not isinstance(e, PhasePolynomial):
                raise TypeError("basis elements must be PhasePolynomial")
            if not e.is_real():
                raise ValueError(f"basis element {e} is not a real (Hermitian) symbol")
        object.__setattr__(self, "elements", tuple(e.real() for e in elements))
        labels = tuple(self.labels) or tuple(str(e) for e in elements)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_strings(cls, texts: Sequence[str]) -> "OperatorBasis":
        return cls(tuple(parse_poly(t) for t in texts), tuple(texts))

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    @property
    def degree(self) -> int:
        return int(max(e.degree() for e in self.elements if not e.is_zero()))

    def mixes_quadratures(self) -> bool:
        """True if some element of degree > 2 is not a function of one quadrature."""
        for e in self.elements:
            if e.degree() > 2 and single_quadrature_form(e) is None:
                return True
        return False


@dataclass(frozen=True, eq=False)
class ProjectedSPM:
    basis: OperatorBasis
    alpha: np.ndarray
    gram: np.ndarray
    bvec: np.ndarray
    lam: float
    msl: float
    symbol: PhasePolynomial

    def quadratic_msl(self, alpha=None) -> float:
        """MSL of ``sum alpha_i B_i`` evaluated as a quadratic form."""
        a = self.alpha if alpha is None else np.asarray(alpha, dtype=float)
        return float(self.lam + a @ self.gram @ a - 2.0 * self.bvec @ a)

    @property
    def residual(self) -> float:
        return float(np.max(np.abs(self.gram @ self.alpha - self.bvec)))

    @property
    def condition_number(self) -> float:
        ev = np.linalg.eigvalsh(self.gram)
        top = ev[-1]
        bottom = ev[0]
        return float(top / bottom) if bottom > 0 else math.inf


# -- system assembly ---------------------------------------------------------

def _inner_tables(problem: EstimationProblem, basis: OperatorBasis):
    t0, t1 = problem.moment_tables(2 * basis.degree)
    return t0, t1


def _gram_and_b(elements, t0, t1):
    n = len(elements)
    gram = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            gram[i, j] = gram[j, i] = contract(jordan_product(elements[i], elements[j]), t0).real
    bvec = np.array([contract(e, t1).real for e in elements])
    return gram, bvec


def build_system(problem: EstimationProblem, basis: OperatorBasis):
    """Gram matrix, ``b`` vector and ``lambda`` for ``basis``."""
    t0, t1 = _inner_tables(problem, basis)
    gram, bvec = _gram_and_b(basis.elements, t0, t1)
    return gram, bvec, prior_lambda(problem)


def _coeff_matrix(polys: Sequence[PhasePolynomial]):
    keys = sorted({k for p in polys for k in p.terms})
    mat = np.array([[p.coefficient(*k).real for p in polys] for k in keys]).reshape(len(keys), len(polys))
    return keys, mat


def _express(target: PhasePolynomial, basis: Sequence[PhasePolynomial]):
    """Minimum-norm coefficients of ``target`` in ``basis`` (None if outside the span)."""
    keys, mat = _coeff_matrix(list(basis) + [target])
    a, y = mat[:, :-1], mat[:, -1]
    coeffs, *_ = np.linalg.lstsq(a, y, rcond=None)
    if np.max(np.abs(a @ coeffs - y), initial=0.0) > 1e-10 * max(1.0, np.max(np.abs(y), initial=0.0)):
        return None
    return coeffs


def _pinv_solve(mat: np.ndarray, rhs: np.ndarray, rcond: float = RCOND) -> np.ndarray:
    # Jacobi-scaled eigen pseudo-inverse; scaling only improves conditioning.
    d = np.sqrt(np.clip(np.diag(mat), 0.0, None))
    keep = d > 0
    x = np.zeros_like(rhs)
    if not np.any(keep):
        return x
    s = mat[np.ix_(keep, keep)] / np.outer(d[keep], d[keep])
    w, v = np.linalg.eigh(s)
    cut = rcond * max(w[-1], 0.0)
    inv = np.where(w > cut, 1.0 / np.where(w > cut, w, 1.0), 0.0)
    y = v @ (inv * (v.T @ (rhs[keep] / d[keep])))
    x[keep] = y / d[keep]
    return x


def solve_projected_spm(problem: EstimationProblem, basis: OperatorBasis, rcond: float = RCOND) -> ProjectedSPM:
    """Projected SPM operator on ``span(basis)``.

    The identity is added to the basis when it is not already in the span,
    and the system is solved in rho0-centred coordinates (``B - <B>``), where
    the identity decouples. Coefficients are reported on the (possibly
    augmented) basis, with the minimum-norm choice when it is degenerate.
    """
    if basis.mixes_quadratures():
        warnings.warn(
            "basis mixes quadratures beyond degree two: self-adjointness of the "
            "projected operator is not guaranteed, the MSL is a lower bound",
            SelfAdjointnessWarning,
            stacklevel=2,
        )
    elements = list(basis.elements)
    labels = list(basis.labels)
    if _express(ONE, elements) is None:
        elements = [ONE] + elements
        labels = ["1"] + labels
    reported = OperatorBasis(tuple(elements), tuple(labels))

    t0, t1 = _inner_tables(problem, reported)
    lam = prior_lambda(problem)
    means = np.array([contract(e, t0).real for e in elements])
    b_raw = np.array([contract(e, t1).real for e in elements])
    b0 = t1[0, 0]
    centred = [e - m for e, m in zip(elements, means)]
    cov, _ = _gram_and_b(centred, t0, t1)
    b_c = b_raw - means * b0
    # elements that are constant under rho0 carry no information; judge this
    # against each element's own second moment so the test is scale-free
    raw_sq = np.array([contract(jordan_product(e, e), t0).real for e in elements])
    live = np.diag(cov) > rcond * np.maximum(raw_sq, 0.0)
    a_c = np.zeros(len(elements))
    if np.any(live):
        a_c[live] = _pinv_solve(cov[np.ix_(live, live)], b_c[live], rcond)
    symbol = PhasePolynomial.constant(b0)
    for a, c in zip(a_c, centred):
        symbol = symbol + a * c
    symbol = symbol.real()

    alpha = _express(symbol, elements)
    if alpha is None:  # pragma: no cover - symbol is built inside the span
        raise RuntimeError("projected symbol left the span of the basis")
    gram, bvec = _gram_and_b(elements, t0, t1)
    msl = float(lam - b0 * b0 - b_c @ a_c)
    return ProjectedSPM(reported, alpha, gram, bvec, lam, msl, symbol)


def orthogonalize(problem: EstimationProblem, basis: OperatorBasis, drop_tol: float = DROP_TOL) -> OperatorBasis:
    """Gram-Schmidt in the rho0-weighted inner product, without normalisation.

    Elements whose residual norm^2 falls below ``drop_tol`` times the largest
    input norm^2 are dropped.
    """
    gram, _, _ = build_system(problem, basis)
    n = len(basis)
    ref = max(np.max(np.diag(gram)), 0.0)
    if ref <= 0:
        raise ValueError("all basis elements have zero rho0-norm")
    kept: list[np.ndarray] = []
    labels = []
    for i in range(n):
        v = np.zeros(n)
        v[i] = 1.0
        for _ in range(2):  # re-orthogonalise once for stability
            for u in kept:
                v = v - (u @ gram @ v) / (u @ gram @ u) * u
        if v @ gram @ v > drop_tol * ref:
            kept.append(v)
            labels.append(basis.labels[i])
    if not kept:
        raise ValueError("all basis elements are degenerate")
    polys = []
    for v in kept:
        poly = PhasePolynomial.zero()
        for c, e in zip(v, basis.elements):
            if c != 0:
                poly = poly + c * e
        polys.append(poly.real())
    return OperatorBasis(tuple(polys), tuple(f"ortho[{lab}]" for lab in labels))


def constrained_msl_diagonal(problem: EstimationProblem, ortho_basis: OperatorBasis) -> float:
    """``lambda - sum b_i^2 / G_ii`` for a rho0-orthogonal basis."""
    gram, bvec, lam = build_system(problem, ortho_basis)
    diag = np.diag(gram)
    keep = diag > 0
    return float(lam - np.sum(bvec[keep] ** 2 / diag[keep]))


# -- single-quadrature structure & estimators --------------------------------

def single_quadrature_form(symbol: PhasePolynomial, tol: float = 1e-9):
    """Write ``symbol`` as ``g(q cos phi + p sin phi)``.

    Returns ``(phi, coeffs)`` with ``g(x) = sum coeffs[k] x^k`` and ``phi`` in
    ``[0, pi)``, or ``None`` if the symbol depends on both quadratures.
    """
    sym = symbol.real()
    deg = sym.degree()
    if deg <= 0:
        c = sym.coefficient(0, 0).real
        return 0.0, np.array([c])
    deg = int(deg)
    phi = None
    # the direction is read off the highest-degree part of lowest degree >= 1
    for d in range(deg, 0, -1):
        top = sym.homogeneous_part(d)
        if top.is_zero():
            continue
        cq = top.coefficient(d, 0).real
        cm = top.coefficient(d - 1, 1).real
        phi = math.atan2(cm, d * cq) if cq != 0 else math.pi / 2
        break
    phi = phi % math.pi
    rotated = sym.rotate(phi)
    scale = max(abs(c) for c in sym.terms.values())
    coeffs = np.zeros(deg + 1)
    for (m, n), c in rotated.terms.items():
        if n == 0:
            coeffs[m] = c.real
        elif abs(c) > tol * scale:
            return None
    return phi, coeffs


def constrained_estimator(spm: ProjectedSPM, loss: LossMap, outcome_value):
    """Estimate for a homodyne outcome: ``f^-1(g(x))`` for ``S_V = g(q_phi)``."""
    form = single_quadrature_form(spm.symbol)
    if form is None:
        raise ValueError(
            "projected operator mixes quadratures; its spectral measurement is not "
            "homodyne - use the Fock-space PVM path (fock.pm_msl_operator_pvm)"
        )
    _, coeffs = form
    x = np.asarray(outcome_value, dtype=float)
    return loss.inverse(np.polynomial.polynomial.polyval(x, coeffs))


# -- bases -------------------------------------------------------------------

def homodyne_power_basis(phi: float, powers: Sequence[int]) -> OperatorBasis:
    x = PhasePolynomial.quadrature(phi)
    els = tuple(ONE if k == 0 else (x**k).real() for k in powers)
    return OperatorBasis(els, tuple("1" if k == 0 else f"q_phi^{k}" for k in powers))


PRESETS = {
    "prior-only": lambda: OperatorBasis((ONE,), ("1",)),
    "linear-q": lambda: OperatorBasis((ONE, Q), ("1", "q")),
    "cubic-q": lambda: OperatorBasis((ONE, Q, Q**3), ("1", "q", "q^3")),
    "quadratic-qp": lambda: OperatorBasis((ONE, Q**2, P**2), ("1", "q^2", "p^2")),
    "full-quadratic": lambda: OperatorBasis(
        (ONE, Q, P, Q**2, Q * P, P**2), ("1", "q", "p", "q^2", "qp", "p^2")
    ),
}


def optimize_homodyne_angle(problem: EstimationProblem, powers: Sequence[int] = (0, 2), n_scan: int = 64,
                            xatol: float = 1e-6):
    """Scan ``phi`` over ``[0, pi)`` and refine the best point with bounded Brent minimisation."""
    def msl(phi):
        return solve_projected_spm(problem, homodyne_power_basis(phi, powers)).msl

    grid = np.linspace(0.0, math.pi, n_scan, endpoint=False)
    vals = np.array([msl(x) for x in grid])
    i = int(np.argmin(vals))
    step = grid[1] - grid[0]
    lo, hi = grid[i] - step, grid[i] + step
    res = minimize_scalar(msl, bounds=(lo, hi), method="bounded", options={"xatol": xatol})
    best_phi, best = (res.x, res.fun) if res.fun < vals[i] else (grid[i], vals[i])
    best_phi = float(best_phi % math.pi)
    return best_phi, solve_projected_spm(problem, homodyne_power_basis(best_phi, powers))


def resolve_basis(spec: str, problem: EstimationProblem | None = None) -> OperatorBasis:
    """Named preset, ``quadratic-homodyne(<phi>|auto)``, or ``;``-separated polynomials."""
    spec = spec.strip()
    if spec in PRESETS:
        return PRESETS[spec]()
    if spec.startswith("quadratic-homodyne(") and spec.endswith(")"):
        arg = spec[len("quadratic-homodyne("):-1].strip()
        if arg == "auto":
            if problem is None:
                raise ValueError("quadratic-homodyne(auto) needs a problem to optimise the angle")
            phi, _ = optimize_homodyne_angle(problem)
        else:
            phi = float(arg)
        return homodyne_power_basis(phi, (0, 2))
    raise ValueError(f"unknown basis preset {spec!r}")
