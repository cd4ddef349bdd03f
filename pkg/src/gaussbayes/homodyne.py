"""Homodyne strategies: likelihoods, estimators, their MSL and Monte Carlo checks.

A homodyne measurement at angle ``phi`` returns ``x = q cos(phi) + p sin(phi)``;
for a Gaussian state its likelihood is normal with mean ``c . mean(theta)``
and variance ``c^T V(theta) c``, ``c = (cos phi, sin phi)``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .bayes import EstimationProblem, GaussianPrior, GridPrior, LossMap, QuadratureError, gauss_legendre, prior_lambda, theta_rule
from .solver import ProjectedSPM, single_quadrature_form

OUTCOME_SIGMAS = 10.0
MC_CHUNK = 1 << 16


@dataclass(frozen=True)
class HomodyneMeasurement:
    phi: float

    def __post_init__(self):
        if not math.isfinite(self.phi):
            raise ValueError("homodyne angle must be finite")
        object.__setattr__(self, "phi", float(self.phi) % math.pi)

    @property
    def direction(self) -> np.ndarray:
        return np.array([math.cos(self.phi), math.sin(self.phi)])


def homodyne_likelihood(problem: EstimationProblem, phi: float, theta):
    """Mean and variance of the outcome distribution ``p(x | theta)``."""
    c = HomodyneMeasurement(phi).direction
    means, covs = problem.model.moments(theta)
    mean = means @ c
    var = np.einsum("i,kij,j->k", c, covs, c)
    if np.any(var <= 0):
        raise ValueError("homodyne likelihood variance must be positive")
    if np.ndim(theta) == 0:
        return float(mean[0]), float(var[0])
    return mean, var


def _log_normal(x, mean, var):
    return -0.5 * (x - mean) ** 2 / var - 0.5 * np.log(2 * math.pi * var)


def _f_scale(problem: EstimationProblem) -> float:
    return math.sqrt(max(prior_lambda(problem), 1e-300))


# -- estimators -----------------------------------------------------------------

@dataclass(frozen=True)
class PolynomialEstimator:
    """``f(estimate) = sum coeffs[k] x^k`` for outcome ``x``."""

    coeffs: tuple[float, ...]
    loss: LossMap = LossMap.IDENTITY

    def __post_init__(self):
        coeffs = tuple(float(c) for c in np.atleast_1d(self.coeffs))
        if not coeffs or not all(math.isfinite(c) for c in coeffs):
            raise ValueError("estimator coefficients must be finite reals")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def constant(cls, value: float, loss: LossMap = LossMap.IDENTITY) -> "PolynomialEstimator":
        return cls((float(loss.forward(value)),), loss)

    def f_value(self, x):
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), self.coeffs)

    def __call__(self, x):
        return self.loss.inverse(self.f_value(x))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1


@dataclass(frozen=True, eq=False)
class PosteriorMeanEstimator:
    problem: EstimationProblem
    phi: float

    def f_value(self, x):
        return _posterior_f_mean(self.problem, self.phi, x)

    def __call__(self, x):
        return self.problem.loss.inverse(self.f_value(x))

    @property
    def degree(self) -> int:
        # grows at most linearly in the outcome for the supported models
        return 1


Estimator = Union[PolynomialEstimator, PosteriorMeanEstimator]


def strategy_from_spm(spm: ProjectedSPM, loss: LossMap = LossMap.IDENTITY):
    """Homodyne measurement and polynomial estimator realising a single-quadrature ``S_V``."""
    form = single_quadrature_form(spm.symbol)
    if form is None:
        raise ValueError("projected operator is not a function of a single quadrature")
    phi, coeffs = form
    return HomodyneMeasurement(phi), PolynomialEstimator(tuple(coeffs), loss)


# -- posterior mean -----------------------------------------------------------------

def _posterior_f_mean(problem: EstimationProblem, phi: float, x, raise_on_vanishing: bool = False):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    f = problem.loss.forward
    quad = problem.quadrature
    prior = problem.prior
    scale = _f_scale(problem)
    order = quad.order
    prev = None
    while True:
        nodes, weights = theta_rule(prior, order, quad)
        mean, var = homodyne_likelihood(problem, phi, nodes)
        pos = weights > 0
        nodes, weights, mean, var = nodes[pos], weights[pos], mean[pos], var[pos]
        logl = _log_normal(x[None, :], mean[:, None], var[:, None]) + np.log(weights)[:, None]
        top = logl.max(axis=0)
        if raise_on_vanishing and np.any(top < -700.0):
            raise ValueError("marginal likelihood of the outcome vanishes")
        e = np.exp(logl - top)
        est = (f(nodes) @ e) / e.sum(axis=0)
        if isinstance(prior, GridPrior):
            return est
        if prev is not None and np.all(np.abs(est - prev) <= quad.rtol * (np.abs(est) + scale)):
            return est
        prev = est
        order *= 2
        if order > quad.max_order:
            raise QuadratureError(f"posterior mean: no convergence by order {quad.max_order}")


def posterior_mean(problem: EstimationProblem, phi: float, x):
    """Bayes estimate ``f^-1(E[f(theta) | x])`` for homodyne outcome(s) ``x``."""
    val = problem.loss.inverse(_posterior_f_mean(problem, phi, x, raise_on_vanishing=True))
    return float(val[0]) if np.ndim(x) == 0 else val


# -- MSL of a fixed strategy ------------------------------------------------------

def _inner_expected_loss(problem, meas, estimator, thetas, rtol):
    """``E[(f(est(x)) - f(theta))^2 | theta]`` by Gauss-Legendre on mean +- 10 sd."""
    mean, var = homodyne_likelihood(problem, meas.phi, thetas)
    sd = np.sqrt(var)
    ft = problem.loss.forward(thetas)
    order = 16
    prev = None
    while order <= 1024:
        x, w = gauss_legendre(order)
        pts = mean[:, None] + OUTCOME_SIGMAS * sd[:, None] * x[None, :]
        dens = np.exp(-0.5 * (OUTCOME_SIGMAS * x[None, :]) ** 2) / math.sqrt(2 * math.pi)
        wts = OUTCOME_SIGMAS * w[None, :] * dens
        est = estimator.f_value(pts.ravel()).reshape(pts.shape)
        sq = (est - ft[:, None]) ** 2
        val = np.sum(wts * sq, axis=1)
        if prev is not None and np.all(np.abs(val - prev) <= rtol * np.abs(val) + 1e-300):
            return val
        prev = val
        order *= 2
    raise QuadratureError("outcome integral did not converge")


def _classical_msl_shared_grid(problem, meas, estimator) -> float:
    """Fixed-strategy MSL on one outcome grid shared by all parameter nodes.

    Used for estimators that are not polynomials: their features sit on the
    scale of the narrowest likelihood, which a per-node window misses.
    """
    quad = problem.quadrature
    centre, r0, r1 = _outcome_window(problem, meas.phi)
    scale = max(prior_lambda(problem), 1e-300)
    f = problem.loss.forward
    order = quad.order
    prev = None
    while order <= quad.max_order:
        nodes, weights = theta_rule(problem.prior, order, quad)
        pos = weights > 0
        nodes, weights = nodes[pos], weights[pos]
        mean, var = homodyne_likelihood(problem, meas.phi, nodes)
        xs, xw = _outcome_rule(centre, r0, r1, order)
        est = estimator.f_value(xs)
        dens = np.exp(_log_normal(xs[None, :], mean[:, None], var[:, None]))
        sq = (est[None, :] - f(nodes)[:, None]) ** 2
        val = float(weights @ (dens * sq) @ xw)
        if prev is not None and abs(val - prev) <= quad.rtol * scale:
            return val
        prev = val
        order *= 2
    raise QuadratureError(f"classical MSL: no convergence by order {quad.max_order}")


def classical_msl(problem: EstimationProblem, measurement: HomodyneMeasurement, estimator: Estimator) -> float:
    """``int dtheta dx p(theta) p(x|theta) (f(est(x)) - f(theta))^2``."""
    if not isinstance(estimator, PolynomialEstimator):
        return _classical_msl_shared_grid(problem, measurement, estimator)
    rtol = problem.quadrature.rtol

    def integrand(thetas):
        return _inner_expected_loss(problem, measurement, estimator, thetas, 0.1 * rtol)

    deg = max(estimator.degree, 1)
    return float(problem.integrate(integrand, 2 * deg, what="classical MSL"))


# -- PM MSL of a homodyne measurement ---------------------------------------------

def _outcome_rule(centre, r0, r1, order):
    """Nodes and weights covering ``centre +- r1``: GL on ``[-r0, r0]`` plus a
    log-spaced GL rule for ``r0 < |x - centre| < r1`` on each side."""
    x, w = gauss_legendre(order)
    core = centre + r0 * x
    core_w = r0 * w
    lu0, lu1 = math.log(r0), math.log(r1)
    u = 0.5 * (lu1 - lu0) * (x + 1.0) + lu0
    du = 0.5 * (lu1 - lu0) * w * np.exp(u)
    nodes = np.concatenate([core, centre + np.exp(u), centre - np.exp(u)])
    weights = np.concatenate([core_w, du, du])
    return nodes, weights


def _outcome_window(problem: EstimationProblem, phi: float):
    """Centre, narrowest and widest radius of the outcomes met under the prior."""
    prior = problem.prior
    nodes, w = theta_rule(prior, 0 if isinstance(prior, GridPrior) else 256, problem.quadrature)
    mean, var = homodyne_likelihood(problem, phi, nodes)
    sd = np.sqrt(var)
    support = w > 0
    centre = float(np.sum(w * mean) / np.sum(w))
    r0 = float(np.min(sd[support]))
    r1 = float(np.max(np.abs(mean[support] - centre) + 12.0 * sd[support]))
    return centre, r0, max(r1, 2.0 * r0)


def pm_msl_homodyne(problem: EstimationProblem, phi: float) -> float:
    """MSL of homodyne detection at ``phi`` followed by the posterior-mean estimate.

    ``lambda - int dx N(x)^2 / D(x)`` with ``D = int p L`` and ``N = int p f L``,
    evaluated in the log domain on an outcome grid that resolves both the
    narrowest and the widest likelihood met under the prior.
    """
    quad = problem.quadrature
    prior = problem.prior
    f = problem.loss.forward
    lam = prior_lambda(problem)
    scale = max(lam, 1e-300)
    centre, r0, r1 = _outcome_window(problem, phi)

    order = quad.order
    prev = None
    while order <= quad.max_order:
        nodes, weights = theta_rule(prior, order, quad)
        pos = weights > 0
        nodes, weights = nodes[pos], weights[pos]
        mean, var = homodyne_likelihood(problem, phi, nodes)
        fx = f(nodes)
        xs, xw = _outcome_rule(centre, r0, r1, order)
        logl = _log_normal(xs[None, :], mean[:, None], var[:, None]) + np.log(weights)[:, None]
        top = logl.max(axis=0)
        e = np.exp(logl - top)
        den = e.sum(axis=0)
        num = fx @ e
        gain = float(np.sum(xw * np.exp(top) * num * num / den))
        if prev is not None and abs(gain - prev) <= quad.rtol * scale:
            return lam - gain
        prev = gain
        order *= 2
    raise QuadratureError(f"homodyne PM MSL: no convergence by order {quad.max_order}")


def relative_msl(value: float, global_value: float) -> float:
    """``(value - global) / global``."""
    if not global_value > 0:
        raise ValueError(f"global MSL must be positive, got {global_value}")
    return (value - global_value) / global_value


# -- Monte Carlo --------------------------------------------------------------------

def _mc_chunk(problem, measurement, estimator, seed_seq, n):
    rng = np.random.Generator(np.random.Philox(seed_seq))
    thetas = problem.prior.sample(rng, n)
    mean, var = homodyne_likelihood(problem, measurement.phi, np.atleast_1d(thetas))
    x = mean + np.sqrt(var) * rng.standard_normal(n)
    loss = (estimator.f_value(x) - problem.loss.forward(thetas)) ** 2
    return float(loss.sum()), float((loss * loss).sum())


def simulate_single_shot(problem: EstimationProblem, measurement: HomodyneMeasurement, estimator: Estimator,
                         n_trials: int, seed: int, workers: Optional[int] = None):
    """Monte Carlo estimate of the MSL and its standard error.

    Trials are split into fixed-size chunks, each with its own Philox stream
    spawned from ``seed``; results are identical for any worker count.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    sizes = [MC_CHUNK] * (n_trials // MC_CHUNK)
    if n_trials % MC_CHUNK:
        sizes.append(n_trials % MC_CHUNK)
    seqs = np.random.SeedSequence(int(seed)).spawn(len(sizes))
    workers = workers or 1
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda a: _mc_chunk(problem, measurement, estimator, *a), zip(seqs, sizes)))
    else:
        parts = [_mc_chunk(problem, measurement, estimator, s, n) for s, n in zip(seqs, sizes)]
    total = math.fsum(p[0] for p in parts)
    total_sq = math.fsum(p[1] for p in parts)
    mean = total / n_trials
    if n_trials > 1:
        var = max(total_sq / n_trials - mean * mean, 0.0) * n_trials / (n_trials - 1)
        err = math.sqrt(var / n_trials)
    else:
        err = math.inf
    return mean, err


def default_workers() -> int:
    env = os.environ.get("GAUSSBAYES_WORKERS")
    if env:
        return max(1, int(env))
    return 1
