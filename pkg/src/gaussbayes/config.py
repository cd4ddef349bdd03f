"""Experiment configuration: TOML file -> validated dataclasses -> problems.

Unknown keys, wrong types and non-positive tolerances are rejected with the
line of the offending entry.
"""

from __future__ import annotations

import dataclasses
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .bayes import EstimationProblem, GaussianPrior, GridPrior, LossMap, QuadratureConfig, UniformPrior
from .gaussian import GaussianState, ParametricGaussianModel, make_coherent, make_thermal, make_vacuum
from .solver import OperatorBasis, resolve_basis


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ProbeConfig:
    kind: str = "vacuum"
    alpha: tuple[float, float] = (0.0, 0.0)
    nbar: float = 0.0
    mean: tuple[float, float] = (0.0, 0.0)
    cov: tuple[tuple[float, float], tuple[float, float]] = ((0.5, 0.0), (0.0, 0.5))
    rotation: float = 0.0

    def state(self) -> GaussianState:
        if self.kind == "vacuum":
            st = make_vacuum()
        elif self.kind == "coherent":
            st = make_coherent(complex(*self.alpha))
        elif self.kind == "thermal":
            st = make_thermal(self.nbar)
        elif self.kind == "gaussian":
            st = GaussianState(np.array(self.mean), np.array(self.cov))
        else:
            raise ConfigError(f"unknown probe kind {self.kind!r} (vacuum, coherent, thermal, gaussian)")
        return st.rotated(self.rotation) if self.rotation else st


@dataclass(frozen=True)
class ModelConfig:
    kind: str = "displacement"
    probe: ProbeConfig = field(default_factory=ProbeConfig)

    def build(self) -> ParametricGaussianModel:
        if self.kind == "displacement":
            return ParametricGaussianModel.displacement(self.probe.state())
        if self.kind == "squeezing":
            return ParametricGaussianModel.squeezing(self.probe.state())
        raise ConfigError(f"unknown model kind {self.kind!r} (displacement, squeezing)")


@dataclass(frozen=True)
class PriorConfig:
    kind: str = "gaussian"
    mu0: float = 0.0
    var0: float = 0.1
    nodes: tuple[float, ...] = ()
    weights: tuple[float, ...] = ()

    def build(self, var0: Optional[float] = None):
        v = self.var0 if var0 is None else var0
        if self.kind == "gaussian":
            return GaussianPrior(self.mu0, v)
        if self.kind == "uniform":
            return UniformPrior.from_variance(self.mu0, v)
        if self.kind == "grid":
            return GridPrior(self.nodes, self.weights)
        raise ConfigError(f"unknown prior kind {self.kind!r} (gaussian, uniform, grid)")


@dataclass(frozen=True)
class SweepConfig:
    sigma0_sq: tuple[float, ...] = ()
    width: tuple[float, ...] = ()
    log_min: float = 1e-3
    log_max: float = 1.0
    points: int = 25

    def grid(self) -> list[float]:
        if self.sigma0_sq and self.width:
            raise ConfigError("give either sweep.sigma0_sq or sweep.width, not both")
        if self.sigma0_sq:
            vals = list(self.sigma0_sq)
        elif self.width:
            vals = [w * w / 12.0 for w in self.width]
        else:
            if self.points < 1:
                raise ConfigError("sweep grid is empty")
            vals = list(np.logspace(math.log10(self.log_min), math.log10(self.log_max), self.points))
        if not vals:
            raise ConfigError("sweep grid is empty")
        if any(not v > 0 for v in vals):
            raise ConfigError("sweep variances must be positive")
        return sorted(float(v) for v in vals)


@dataclass(frozen=True)
class OracleConfig:
    enabled: bool = True
    d: int = 60
    max_dim: int = 960
    conv_tol: float = 1e-6
    trace_tol: float = 1e-8
    dump: str = ""


@dataclass(frozen=True)
class VerifyConfig:
    perturb: float = 0.0
    stationarity_tol: float = 1e-8
    orthogonality_tol: float = 1e-6
    excess_tol: float = 1e-4
    chain_slack: float = 1e-6
    theorem1_tol: float = 1e-6
    chain_perturbation: float = 1e-2


@dataclass(frozen=True)
class MonteCarloConfig:
    trials: int = 0


@dataclass(frozen=True)
class QuadratureSection:
    order: int = 32
    max_order: int = 2048
    rtol: float = 1e-10
    support_sigmas: float = 10.0


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    prior: PriorConfig = field(default_factory=PriorConfig)
    loss: str = "identity"
    bases: tuple[Union[str, tuple[str, ...]], ...] = ("linear-q",)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    monte_carlo: MonteCarloConfig = field(default_factory=MonteCarloConfig)
    quadrature: QuadratureSection = field(default_factory=QuadratureSection)
    seed: int = 0
    output: str = ""

    def loss_map(self) -> LossMap:
        try:
            return LossMap(self.loss)
        except ValueError:
            raise ConfigError(f"unknown loss map {self.loss!r} (identity, log)") from None

    def problem(self, var0: Optional[float] = None) -> EstimationProblem:
        q = self.quadrature
        quad = QuadratureConfig(q.order, q.max_order, q.rtol, q.support_sigmas)
        return EstimationProblem(self.model.build(), self.prior.build(var0), self.loss_map(), quad)

    def basis_list(self, problem: EstimationProblem) -> list[tuple[str, OperatorBasis]]:
        out = []
        for spec in self.bases:
            if isinstance(spec, str):
                out.append((spec, resolve_basis(spec, problem)))
            else:
                if not spec:
                    raise ConfigError("explicit basis must list at least one polynomial")
                out.append(("{" + ", ".join(spec) + "}", OperatorBasis.from_strings(list(spec))))
        return out


# -- loading --------------------------------------------------------------------

def _key_line(text: str, path: tuple[str, ...]) -> Optional[int]:
    """Line (1-based) where the dotted key ``path`` is assigned, if found."""
    table: tuple[str, ...] = ()
    header = re.compile(r"^\s*\[([^\[\]]+)\]\s*(#.*)?$")
    for i, line in enumerate(text.splitlines(), start=1):
        m = header.match(line)
        if m:
            table = tuple(part.strip().strip('"') for part in m.group(1).split("."))
            if table == path:
                return i
            continue
        m = re.match(r"^\s*([A-Za-z0-9_\-\.\"]+)\s*=", line)
        if m:
            key = tuple(part.strip().strip('"') for part in m.group(1).split("."))
            if table + key == path:
                return i
    return None


def _where(text: str, path: tuple[str, ...]) -> str:
    line = _key_line(text, path) if text else None
    name = ".".join(path)
    return f"{name} (line {line})" if line else name


def _coerce(value: Any, default: Any, where: str):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if isinstance(default, tuple):
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected an array, got {value!r}")
        return _freeze(value, where)
    raise ConfigError(f"{where}: unsupported value {value!r}")  # pragma: no cover


def _freeze(value, where):
    if isinstance(value, list):
        return tuple(_freeze(v, where) for v in value)
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ConfigError(f"{where}: unsupported array entry {value!r}")
    return float(value) if isinstance(value, int) and not isinstance(value, bool) else value


def _build(cls, table: dict, text: str, path: tuple[str, ...]):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in table.items():
        here = path + (key,)
        if key not in fields:
            raise ConfigError(f"unknown key {_where(text, here)}; allowed: {', '.join(sorted(fields))}")
        f = fields[key]
        default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
        if dataclasses.is_dataclass(default):
            if not isinstance(value, dict):
                raise ConfigError(f"{_where(text, here)}: expected a table")
            kwargs[key] = _build(type(default), value, text, here)
        elif key == "bases":
            if not isinstance(value, list) or not value:
                raise ConfigError(f"{_where(text, here)}: expected a non-empty array of basis specs")
            specs = []
            for v in value:
                if isinstance(v, str):
                    specs.append(v)
                elif isinstance(v, list) and all(isinstance(s, str) for s in v):
                    specs.append(tuple(v))
                else:
                    raise ConfigError(f"{_where(text, here)}: basis must be a preset name or an array of polynomials")
            kwargs[key] = tuple(specs)
        else:
            kwargs[key] = _coerce(value, default, _where(text, here))
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{'.'.join(path) or 'config'}: {exc}") from None


_POSITIVE = {
    ("oracle", "conv_tol"), ("oracle", "trace_tol"), ("oracle", "d"), ("oracle", "max_dim"),
    ("quadrature", "rtol"), ("quadrature", "order"), ("quadrature", "max_order"),
    ("verify", "stationarity_tol"), ("verify", "orthogonality_tol"), ("verify", "excess_tol"),
    ("verify", "chain_slack"), ("verify", "theorem1_tol"), ("verify", "chain_perturbation"),
}


def _validate(cfg: ExperimentConfig, text: str) -> None:
    for section, key in _POSITIVE:
        val = getattr(getattr(cfg, section), key)
        if not val > 0:
            raise ConfigError(f"{_where(text, (section, key))}: must be positive, got {val!r}")
    if cfg.oracle.d < 2:
        raise ConfigError(f"{_where(text, ('oracle', 'd'))}: must be at least 2")
    if cfg.quadrature.support_sigmas < 10:
        raise ConfigError(f"{_where(text, ('quadrature', 'support_sigmas'))}: must cover at least 10 sigma")
    if cfg.seed < 0 or cfg.seed >= 2**64:
        raise ConfigError(f"{_where(text, ('seed',))}: must be an unsigned 64-bit integer")
    if cfg.monte_carlo.trials < 0:
        raise ConfigError(f"{_where(text, ('monte_carlo', 'trials'))}: must be non-negative")
    cfg.loss_map()
    try:
        cfg.model.build()
        cfg.prior.build()
        for spec in cfg.bases:
            if isinstance(spec, str) and not spec.startswith("quadratic-homodyne("):
                resolve_basis(spec)
            elif not isinstance(spec, str):
                OperatorBasis.from_strings(list(spec))
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def parse_config(text: str) -> ExperimentConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"syntax error: {exc}") from None
    cfg = _build(ExperimentConfig, raw, text, ())
    _validate(cfg, text)
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
