"""Priors, loss maps and prior-averaged functionals.

Everything that integrates over the parameter goes through
:func:`integrate_over_prior`, a Gauss-Legendre rule whose order is doubled
until two successive estimates agree.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy.special import roots_legendre

from .gaussian import ParametricGaussianModel, contract, moment_table
from .phase_space import PhasePolynomial


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach its tolerance."""


# -- priors ------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianPrior:
    mu0: float
    var0: float

    def __post_init__(self):
        if not self.var0 > 0:
            raise ValueError(f"prior variance must be positive, got {self.var0}")

    @property
    def mean(self) -> float:
        return self.mu0

    @property
    def variance(self) -> float:
        return self.var0

    def pdf(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.exp(-0.5 * (theta - self.mu0) ** 2 / self.var0) / math.sqrt(2 * math.pi * self.var0)

    def window(self, n_sigmas: float) -> tuple[float, float]:
        s = math.sqrt(self.var0)
        return self.mu0 - n_sigmas * s, self.mu0 + n_sigmas * s

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.normal(self.mu0, math.sqrt(self.var0), size)


@dataclass(frozen=True)
class UniformPrior:
    mu0: float
    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError(f"prior width must be positive, got {self.width}")

    @classmethod
    def from_variance(cls, mu0: float, var0: float) -> "UniformPrior":
        return cls(mu0, uniform_width_for_variance(var0))

    @property
    def mean(self) -> float:
        return self.mu0

    @property
    def variance(self) -> float:
        return self.width**2 / 12.0

    def pdf(self, theta):
        theta = np.asarray(theta, dtype=float)
        inside = np.abs(theta - self.mu0) <= 0.5 * self.width
        return np.where(inside, 1.0 / self.width, 0.0)

    def window(self, n_sigmas: float = 0.0) -> tuple[float, float]:
        return self.mu0 - 0.5 * self.width, self.mu0 + 0.5 * self.width

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        lo, hi = self.window()
        return rng.uniform(lo, hi, size)


@dataclass(frozen=True)
class GridPrior:
    """Discrete prior on explicit nodes; a single node is a point prior."""

    nodes: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        nodes = tuple(float(x) for x in np.atleast_1d(self.nodes))
        weights = tuple(float(x) for x in np.atleast_1d(self.weights))
        if len(nodes) != len(weights) or not nodes:
            raise ValueError("grid prior needs matching, non-empty nodes and weights")
        if any(w < 0 for w in weights):
            raise ValueError("grid weights must be non-negative")
        if abs(sum(weights) - 1.0) > 1e-12:
            raise ValueError(f"grid weights sum to {sum(weights)!r}, not 1")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def point(cls, theta: float) -> "GridPrior":
        return cls((theta,), (1.0,))

    @property
    def mean(self) -> float:
        return float(np.dot(self.nodes, self.weights))

    @property
    def variance(self) -> float:
        x = np.asarray(self.nodes)
        return float(np.dot(self.weights, (x - self.mean) ** 2))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.choice(np.asarray(self.nodes), size=size, p=np.asarray(self.weights))


Prior = Union[GaussianPrior, UniformPrior, GridPrior]


def uniform_width_for_variance(var0: float) -> float:
    """Width of the uniform prior with variance ``var0`` (var = width^2 / 12)."""
    return math.sqrt(12.0 * var0)


# -- loss maps ---------------------------------------------------------------

class LossMap(enum.Enum):
    """Location map ``f``: the loss is ``(f(estimate) - f(theta))^2``."""

    IDENTITY = "identity"
    LOG = "log"

    def forward(self, theta):
        if self is LossMap.IDENTITY:
            return np.asarray(theta, dtype=float)
        return np.log(theta)

    def inverse(self, s):
        if self is LossMap.IDENTITY:
            return np.asarray(s, dtype=float)
        return np.exp(s)


# -- quadrature --------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureConfig:
    order: int = 32
    max_order: int = 2048
    rtol: float = 1e-10
    support_sigmas: float = 10.0

    def __post_init__(self):
        if self.order < 2 or self.max_order < self.order:
            raise ValueError("need 2 <= order <= max_order")
        if not (self.rtol > 0 and self.support_sigmas >= 10.0):
            raise ValueError("rtol must be positive and the support must cover >= 10 sigma")


@functools.lru_cache(maxsize=32)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_legendre(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def theta_rule(prior: Prior, order: int, quad: QuadratureConfig, tilt: float = 0.0):
    """Nodes and prior-weighted weights of a given order.

    For Gaussian priors the window is ``mu0 +- (support_sigmas + tilt *
    sigma0) * sigma0``; the ``tilt`` term keeps exponentially growing
    integrands (``exp(k theta)`` times the prior) inside the window.
    """
    if isinstance(prior, GridPrior):
        return np.asarray(prior.nodes), np.asarray(prior.weights)
    if isinstance(prior, GaussianPrior):
        s = math.sqrt(prior.var0)
        lo, hi = prior.window(quad.support_sigmas + abs(tilt) * s)
    else:
        lo, hi = prior.window()
    x, w = gauss_legendre(order)
    half = 0.5 * (hi - lo)
    nodes = lo + half * (x + 1.0)
    return nodes, w * half * prior.pdf(nodes)


def integrate_over_prior(
    func: Callable[[np.ndarray], np.ndarray],
    prior: Prior,
    quad: QuadratureConfig,
    tilt: float = 0.0,
    what: str = "integral",
) -> np.ndarray:
    """``sum_k w_k func(theta_k)`` with order doubling until converged.

    ``func`` maps an array of nodes ``(K,)`` to values of shape ``(K, ...)``.
    Convergence is declared when, entry by entry, successive estimates
    differ by less than ``rtol`` times the integral of the absolute integrand.
    """
    if isinstance(prior, GridPrior):
        nodes, weights = theta_rule(prior, 0, quad)
        return np.tensordot(weights, func(nodes), axes=(0, 0))
    order = quad.order
    prev = None
    while order <= quad.max_order:
        nodes, weights = theta_rule(prior, order, quad, tilt)
        vals = func(nodes)
        est = np.tensordot(weights, vals, axes=(0, 0))
        if prev is not None:
            # per-entry scale: integral of |integrand|, so entries that vanish
            # by symmetry are judged against their natural size
            scale = np.tensordot(np.abs(weights), np.abs(vals), axes=(0, 0))
            if np.all(np.abs(est - prev) <= quad.rtol * scale + 1e-300):
                return est
        prev = est
        order *= 2
    raise QuadratureError(f"{what}: no convergence to rtol={quad.rtol} by order {quad.max_order}")


# -- problem -----------------------------------------------------------------

class Weight(enum.Enum):
    UNIT = "unit"
    F = "f"


@dataclass(frozen=True, eq=False)
class EstimationProblem:
    model: ParametricGaussianModel
    prior: Prior
    loss: LossMap = LossMap.IDENTITY
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)

    def with_prior(self, prior: Prior) -> "EstimationProblem":
        return EstimationProblem(self.model, prior, self.loss, self.quadrature)

    def tilt(self, degree: int) -> float:
        return self.model.growth_rate * degree

    def integrate(self, func, degree: int = 0, what: str = "integral"):
        return integrate_over_prior(func, self.prior, self.quadrature, self.tilt(degree), what)

    @functools.cached_property
    def _tables(self) -> dict:
        return {}

    def moment_tables(self, max_degree: int) -> tuple[np.ndarray, np.ndarray]:
        """Prior-averaged raw moments for both weights.

        Returns ``(T0, T1)`` with ``T0[m, n] = Tr(rho0 W(q^m p^n))`` and
        ``T1[m, n] = Tr(rhobar W(q^m p^n))``, ``W`` the Weyl quantisation.
        """
        max_degree = int(max_degree)
        for deg, tabs in self._tables.items():
            if deg >= max_degree:
                return tabs[0][: max_degree + 1, : max_degree + 1], tabs[1][: max_degree + 1, : max_degree + 1]
        f = self.loss.forward

        def integrand(thetas):
            means, covs = self.model.moments(thetas)
            t = moment_table(means, covs, max_degree)
            ft = f(thetas)[:, None, None]
            return np.stack([t, ft * t], axis=1)

        both = self.integrate(integrand, max_degree, what="averaged moments")
        # renormalise by the rule's prior mass so that Tr(rho0) = 1 exactly
        both = both / both[0, 0, 0]
        self._tables[max_degree] = (both[0], both[1])
        return both[0], both[1]


def prior_lambda(problem: EstimationProblem) -> float:
    """``lambda = int p(theta) f(theta)^2 dtheta``."""
    prior = problem.prior
    if problem.loss is LossMap.IDENTITY and not isinstance(prior, GridPrior):
        return prior.mean**2 + prior.variance
    f = problem.loss.forward
    return float(problem.integrate(lambda t: f(t) ** 2, what="lambda"))


def prior_mean_f(problem: EstimationProblem) -> float:
    """``int p(theta) f(theta) dtheta = Tr(rhobar)``."""
    if problem.loss is LossMap.IDENTITY:
        return float(problem.prior.mean)
    f = problem.loss.forward
    return float(problem.integrate(f, what="prior mean of f"))


def prior_loss(problem: EstimationProblem) -> float:
    """MSL of the best data-independent estimate (variance of f under the prior)."""
    return prior_lambda(problem) - prior_mean_f(problem) ** 2


def averaged_moment(problem: EstimationProblem, poly: PhasePolynomial, weight: Weight | str = Weight.UNIT) -> float:
    """``Tr(rho0 B)`` (unit weight) or ``Tr(rhobar B)`` (weight ``f``) for a real symbol ``B``."""
    weight = Weight(weight)
    if not poly.is_real():
        raise ValueError(f"symbol {poly} is not real (max imaginary coefficient {poly.max_imag():g})")
    if poly.is_zero():
        return 0.0
    t0, t1 = problem.moment_tables(int(poly.degree()))
    return float(contract(poly, t0 if weight is Weight.UNIT else t1).real)


def closed_form_theta_moment(prior: Prior, k: float, m: int) -> float:
    """Exact ``E[exp(k theta) theta^m]`` for a Gaussian prior, ``m`` in {0, 1, 2}."""
    if not isinstance(prior, GaussianPrior):
        raise TypeError("closed-form theta moments need a Gaussian prior")
    mu, s = prior.mu0, prior.var0
    mgf = math.exp(k * mu + 0.5 * k * k * s)
    shift = mu + k * s
    if m == 0:
        return mgf
    if m == 1:
        return shift * mgf
    if m == 2:
        return (shift * shift + s) * mgf
    raise ValueError(f"unsupported power m={m}; only 0, 1, 2")


def grid_nodes(values: Sequence[float]) -> np.ndarray:
    return np.asarray(values, dtype=float)
