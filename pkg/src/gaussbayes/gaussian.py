"""Single-mode Gaussian states, parameter encodings and Gaussian moments."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .phase_space import PhasePolynomial


class PhysicalityWarning(UserWarning):
    """Covariance violates the uncertainty relation det V >= 1/4."""


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Mean ``(q, p)`` and covariance ``V`` of a single-mode Gaussian state.

    Vacuum has ``V = diag(1/2, 1/2)``. An unphysical covariance only warns,
    so that synthetic covariances remain representable.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(2)
        cov = np.asarray(self.cov, dtype=float).reshape(2, 2)
        if not np.all(np.isfinite(cov)) or not np.all(np.isfinite(mean)):
            raise ValueError("mean and covariance must be finite")
        if cov[0, 1] != cov[1, 0]:
            cov = cov.copy()
            cov[0, 1] = cov[1, 0] = 0.5 * (cov[0, 1] + cov[1, 0])
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        if self.det < 0.25 - 1e-12:
            warnings.warn(f"covariance has det V = {self.det:.6g} < 1/4", PhysicalityWarning, stacklevel=3)

    @property
    def det(self) -> float:
        v = self.cov
        return float(v[0, 0] * v[1, 1] - v[0, 1] * v[1, 0])

    def rotated(self, phi: float) -> "GaussianState":
        """State rotated in phase space by angle ``phi`` (counter-clockwise)."""
        r = rotation_matrix(phi)
        return GaussianState(r @ self.mean, r @ self.cov @ r.T)

    def displaced(self, dq: float, dp: float = 0.0) -> "GaussianState":
        return GaussianState(self.mean + np.array([dq, dp]), self.cov)

    def transformed(self, m: np.ndarray) -> "GaussianState":
        m = np.asarray(m, dtype=float)
        return GaussianState(m @ self.mean, m @ self.cov @ m.T)


def rotation_matrix(phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s], [s, c]])


def squeeze_matrix(theta: float) -> np.ndarray:
    return np.diag([math.exp(-theta), math.exp(theta)])


def make_vacuum() -> GaussianState:
    return GaussianState(np.zeros(2), 0.5 * np.eye(2))


def make_coherent(alpha: complex) -> GaussianState:
    alpha = complex(alpha)
    return GaussianState(math.sqrt(2.0) * np.array([alpha.real, alpha.imag]), 0.5 * np.eye(2))


def make_thermal(nbar: float) -> GaussianState:
    if nbar < 0:
        raise ValueError(f"mean photon number must be non-negative, got {nbar}")
    return GaussianState(np.zeros(2), (nbar + 0.5) * np.eye(2))


def is_faithful(state: GaussianState) -> bool:
    """A Gaussian state has trivial kernel iff det V > 1/4."""
    return state.det > 0.25


class ModelKind(enum.Enum):
    DISPLACEMENT = "displacement"
    SQUEEZING = "squeezing"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class ParametricGaussianModel:
    """Map ``theta -> (mean(theta), V(theta))`` acting on an input probe.

    ``growth_rate`` bounds how fast degree-k moments grow, ``~exp(k *
    growth_rate * |theta|)``; the quadrature engine widens its window by it.
    """

    kind: ModelKind
    input_state: GaussianState
    mean_fn: Optional[Callable[[float], np.ndarray]] = None
    cov_fn: Optional[Callable[[float], np.ndarray]] = None
    growth_rate: float = field(default=0.0)

    def __post_init__(self):
        kind = ModelKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is ModelKind.CUSTOM and (self.mean_fn is None or self.cov_fn is None):
            raise ValueError("custom models need mean_fn and cov_fn")
        if kind is ModelKind.SQUEEZING and self.growth_rate == 0.0:
            object.__setattr__(self, "growth_rate", 1.0)

    @classmethod
    def displacement(cls, probe: GaussianState) -> "ParametricGaussianModel":
        return cls(ModelKind.DISPLACEMENT, probe)

    @classmethod
    def squeezing(cls, probe: GaussianState) -> "ParametricGaussianModel":
        return cls(ModelKind.SQUEEZING, probe)

    def moments(self, thetas) -> tuple[np.ndarray, np.ndarray]:
        """Vectorised encoding: arrays of means ``(K, 2)`` and covariances ``(K, 2, 2)``."""
        thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
        mu = self.input_state.mean
        v = self.input_state.cov
        k = thetas.size
        if self.kind is ModelKind.DISPLACEMENT:
            means = np.empty((k, 2))
            means[:, 0] = mu[0] + thetas
            means[:, 1] = mu[1]
            covs = np.broadcast_to(v, (k, 2, 2)).copy()
        elif self.kind is ModelKind.SQUEEZING:
            em, ep = np.exp(-thetas), np.exp(thetas)
            means = np.stack([em * mu[0], ep * mu[1]], axis=1)
            covs = np.empty((k, 2, 2))
            covs[:, 0, 0] = em * em * v[0, 0]
            covs[:, 1, 1] = ep * ep * v[1, 1]
            covs[:, 0, 1] = covs[:, 1, 0] = v[0, 1]
        else:
            means = np.array([np.asarray(self.mean_fn(t), dtype=float) for t in thetas]).reshape(k, 2)
            covs = np.array([np.asarray(self.cov_fn(t), dtype=float) for t in thetas]).reshape(k, 2, 2)
        return means, covs


def encode(model: ParametricGaussianModel, theta: float) -> GaussianState:
    means, covs = model.moments([theta])
    return GaussianState(means[0], covs[0])


def moment_table(means: np.ndarray, covs: np.ndarray, max_degree: int) -> np.ndarray:
    """Raw moments ``E[q^m p^n]`` for a batch of Gaussians.

    Returns an array of shape ``(K, D+1, D+1)``; entries with ``m + n > D``
    are left at zero. Uses the Gaussian integration-by-parts recursion
    ``E[q X] = mu_q E[X] + V_qq E[dX/dq] + V_qp E[dX/dp]``, which is the
    pairing recursion of Isserlis' theorem extended to a nonzero mean.
    """
    means = np.atleast_2d(means)
    covs = np.reshape(covs, (-1, 2, 2))
    k = means.shape[0]
    d = int(max_degree)
    t = np.zeros((k, d + 1, d + 1))
    t[:, 0, 0] = 1.0
    mq, mp = means[:, 0], means[:, 1]
    vqq, vqp, vpp = covs[:, 0, 0], covs[:, 0, 1], covs[:, 1, 1]
    for n in range(d):
        t[:, 0, n + 1] = mp * t[:, 0, n] + (n * vpp * t[:, 0, n - 1] if n else 0.0)
    for total in range(1, d + 1):
        for m in range(1, total + 1):
            n = total - m
            # raise the q power of E[q^(m-1) p^n]
            val = mq * t[:, m - 1, n]
            if m >= 2:
                val = val + (m - 1) * vqq * t[:, m - 2, n]
            if n >= 1:
                val = val + n * vqp * t[:, m - 1, n - 1]
            t[:, m, n] = val
    return t


def contract(poly: PhasePolynomial, table: np.ndarray) -> np.ndarray:
    """Apply a moment table (last two axes ``m, n``) to a polynomial."""
    out = np.zeros(table.shape[:-2], dtype=complex)
    for (m, n), c in poly.terms.items():
        if m >= table.shape[-2] or n >= table.shape[-1] or m + n > table.shape[-1] - 1:
            raise ValueError(f"moment table too small for degree {m + n}")
        out = out + c * table[..., m, n]
    return out


def gaussian_moment(state: GaussianState, poly: PhasePolynomial) -> complex:
    """Exact phase-space average of ``poly`` under the state's Wigner function."""
    if poly.is_zero():
        return 0j
    table = moment_table(state.mean[None, :], state.cov[None, :, :], int(poly.degree()))
    return complex(contract(poly, table)[0])


def wigner(means: np.ndarray, covs: np.ndarray, q, p) -> np.ndarray:
    """Gaussian Wigner functions for a batch of states, evaluated on points ``(q, p)``.

    Returns shape ``(K,) + broadcast(q, p).shape``.
    """
    means = np.atleast_2d(means)
    covs = np.reshape(covs, (-1, 2, 2))
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    det = covs[:, 0, 0] * covs[:, 1, 1] - covs[:, 0, 1] ** 2
    inv_qq = covs[:, 1, 1] / det
    inv_pp = covs[:, 0, 0] / det
    inv_qp = -covs[:, 0, 1] / det
    extra = (1,) * q.ndim
    dq = q[None, ...] - means[:, 0].reshape((-1,) + extra)
    dp = p[None, ...] - means[:, 1].reshape((-1,) + extra)
    quad = (inv_qq.reshape((-1,) + extra) * dq**2 + 2 * inv_qp.reshape((-1,) + extra) * dq * dp
            + inv_pp.reshape((-1,) + extra) * dp**2)
    norm = 1.0 / (2 * np.pi * np.sqrt(det))
    return norm.reshape((-1,) + extra) * np.exp(-0.5 * quad)
