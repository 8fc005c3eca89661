"""Diffusion models: state space, drift and diffusion coefficients.

A model describes the one-dimensional Ito diffusion

    dX_t = b(X_t) dt + sqrt(a(X_t)) dW_t

through its drift ``b`` and diffusion coefficient ``a``, together with the
lower edge of its state space (``-inf`` for diffusions on the whole line,
``0`` for radial-type processes living on ``(0, inf)``).

Drift families
--------------
``ZeroDrift``
    b = 0 (driftless).
``ConstantDrift``
    b = beta.
``LogLogLogDrift``
    b(x) = log(x) / (2 c) + gamma * log(log(x)) / c for x >= x_cut, held
    constant at b(x_cut) below the cutoff so the coefficient stays bounded
    near the left edge.  This family sits exactly at the critical growth
    rate separating persistent drawdowns from eventually vanishing ones,
    with ``gamma`` tuning which side of the boundary the process falls on.
``BesselDrift``
    b(x) = (k - 1) / (2 x) on (0, inf), the radial part of a k-dimensional
    Brownian motion (k need not be an integer).
``TabulatedDrift``
    piecewise-linear interpolation through given (x, b) points, constant
    beyond the first and last point.
``SumDrift``
    pointwise sum of other families.

All drift and diffusion callables are vectorized: they map a float array
to a float array of the same shape.  ``evaluate_drift`` and
``evaluate_diffusion`` add domain and positivity checking and accept
scalars as well as arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from .errors import ConfigError, DomainError, PositivityError

__all__ = [
    "ZeroDrift",
    "ConstantDrift",
    "LogLogLogDrift",
    "BesselDrift",
    "TabulatedDrift",
    "SumDrift",
    "ConstantDiffusion",
    "DiffusionModel",
    "make_model",
    "model_from_config",
    "evaluate_drift",
    "evaluate_diffusion",
]

DEFAULT_X_CUT = math.e ** 2


@dataclass(frozen=True)
class ZeroDrift:
    """Driftless motion, b = 0."""

    domain_lower: float = -math.inf

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ConstantDrift:
    """Constant drift b = beta."""

    beta: float
    domain_lower: float = -math.inf

    def __post_init__(self) -> None:
        if not np.isfinite(self.beta):
            raise ConfigError(f"constant drift needs finite beta, got {self.beta}")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.full_like(np.asarray(x, dtype=float), self.beta)


@dataclass(frozen=True)
class LogLogLogDrift:
    """Critical-growth drift log(x)/(2c) + gamma*log(log(x))/c, clamped below x_cut."""

    c: float
    gamma: float
    x_cut: float = DEFAULT_X_CUT
    domain_lower: float = -math.inf

    def __post_init__(self) -> None:
        if not (np.isfinite(self.c) and self.c > 0.0):
            raise ConfigError(f"crossing depth c must be positive, got {self.c}")
        if not (np.isfinite(self.x_cut) and self.x_cut >= math.e):
            raise ConfigError(
                f"x_cut must be >= e so log(log(x)) is nonnegative, got {self.x_cut}"
            )
        if not np.isfinite(self.gamma):
            raise ConfigError(f"gamma must be finite, got {self.gamma}")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        xc = np.maximum(np.asarray(x, dtype=float), self.x_cut)
        lx = np.log(xc)
        return lx / (2.0 * self.c) + self.gamma * np.log(lx) / self.c


@dataclass(frozen=True)
class BesselDrift:
    """Radial drift (k-1)/(2x) on (0, inf)."""

    k: float
    domain_lower: float = 0.0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.k) and self.k > 0.0):
            raise ConfigError(f"dimension parameter k must be positive, got {self.k}")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (self.k - 1.0) / (2.0 * x)


@dataclass(frozen=True)
class TabulatedDrift:
    """Piecewise-linear drift through (x, b) samples, constant beyond the ends."""

    xs: tuple[float, ...]
    bs: tuple[float, ...]
    domain_lower: float = -math.inf

    def __post_init__(self) -> None:
        if len(self.xs) != len(self.bs) or len(self.xs) < 2:
            raise ConfigError("tabulated drift needs >= 2 (x, b) pairs of equal length")
        xs = np.asarray(self.xs, dtype=float)
        if not np.all(np.isfinite(xs)) or not np.all(np.diff(xs) > 0.0):
            raise ConfigError("tabulated drift abscissae must be finite and strictly increasing")
        if not np.all(np.isfinite(np.asarray(self.bs, dtype=float))):
            raise ConfigError("tabulated drift values must be finite")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.interp(np.asarray(x, dtype=float), self.xs, self.bs)


@dataclass(frozen=True)
class SumDrift:
    """Pointwise sum of component drifts; the domain is their intersection."""

    parts: tuple

    def __post_init__(self) -> None:
        if not self.parts:
            raise ConfigError("sum drift needs at least one component")

    @property
    def domain_lower(self) -> float:
        return max(p.domain_lower for p in self.parts)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        total = np.zeros_like(x)
        for p in self.parts:
            total = total + p(x)
        return total


@dataclass(frozen=True)
class ConstantDiffusion:
    """Constant diffusion coefficient a = value."""

    value: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.value) and self.value > 0.0):
            raise PositivityError(f"diffusion coefficient must be positive, got {self.value}")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.full_like(np.asarray(x, dtype=float), self.value)


DriftLike = Union[
    ZeroDrift, ConstantDrift, LogLogLogDrift, BesselDrift, TabulatedDrift, SumDrift,
    Callable[[np.ndarray], np.ndarray],
]


@dataclass(frozen=True)
class DiffusionModel:
    """A one-dimensional diffusion with drift b, diffusion coefficient a > 0."""

    drift: DriftLike
    diffusion: Callable[[np.ndarray], np.ndarray]
    domain_lower: float = -math.inf
    name: str = ""
    family_params: Mapping = field(default_factory=dict)


def make_model(
    drift: DriftLike,
    diffusion: Union[float, Callable[[np.ndarray], np.ndarray]] = 1.0,
    *,
    name: str = "",
    domain_lower: float | None = None,
) -> DiffusionModel:
    """Assemble a :class:`DiffusionModel`, normalizing scalar diffusion to a callable.

    The domain edge defaults to the drift family's own (``0`` for
    :class:`BesselDrift`, ``-inf`` otherwise); an explicit ``domain_lower``
    can only shrink the domain, never extend it past a family's edge.
    """
    family_lower = getattr(drift, "domain_lower", -math.inf)
    lower = family_lower if domain_lower is None else max(domain_lower, family_lower)
    if isinstance(diffusion, (int, float)):
        diffusion = ConstantDiffusion(float(diffusion))
    params: dict = {}
    if hasattr(drift, "__dataclass_fields__"):
        params["family"] = type(drift).__name__
        for f in drift.__dataclass_fields__:
            if f not in ("domain_lower", "parts", "xs", "bs"):
                params[f] = getattr(drift, f)
    return DiffusionModel(
        drift=drift,
        diffusion=diffusion,
        domain_lower=lower,
        name=name,
        family_params=params,
    )


_FAMILY_KEYS = {
    "zero": (),
    "constant": ("beta",),
    "logloglog": ("c", "gamma", "x_cut"),
    "bessel": ("k",),
    "tabulated": ("points",),
    "sum": ("parts",),
}


def _drift_from_config(block: Mapping) -> DriftLike:
    if not isinstance(block, Mapping):
        raise ConfigError(f"drift block must be a mapping, got {type(block).__name__}")
    family = block.get("family")
    if family not in _FAMILY_KEYS:
        raise ConfigError(
            f"unknown drift family {family!r}; expected one of {sorted(_FAMILY_KEYS)}"
        )
    allowed = set(_FAMILY_KEYS[family]) | {"family", "a", "name"}
    extra = set(block) - allowed
    if extra:
        raise ConfigError(f"unexpected keys {sorted(extra)} in {family!r} drift block")
    try:
        if family == "zero":
            return ZeroDrift()
        if family == "constant":
            return ConstantDrift(beta=float(block["beta"]))
        if family == "logloglog":
            return LogLogLogDrift(
                c=float(block["c"]),
                gamma=float(block["gamma"]),
                x_cut=float(block.get("x_cut", DEFAULT_X_CUT)),
            )
        if family == "bessel":
            return BesselDrift(k=float(block["k"]))
        if family == "tabulated":
            points = block["points"]
            xs = tuple(float(p[0]) for p in points)
            bs = tuple(float(p[1]) for p in points)
            return TabulatedDrift(xs=xs, bs=bs)
        parts = tuple(_drift_from_config(p) for p in block["parts"])
        return SumDrift(parts=parts)
    except KeyError as missing:
        raise ConfigError(f"drift family {family!r} is missing key {missing}") from None
    except (TypeError, ValueError) as bad:
        if isinstance(bad, ConfigError):
            raise
        raise ConfigError(f"bad parameter in {family!r} drift block: {bad}") from None


def model_from_config(block: Mapping) -> DiffusionModel:
    """Build a model from a parsed TOML/JSON mapping.

    Expected shape::

        {"family": "logloglog", "c": 1.0, "gamma": 1.5, "x_cut": 7.389,
         "a": 1.0, "name": "optional label"}

    ``a`` is an optional constant diffusion coefficient (default 1.0); the
    ``sum`` family takes ``"parts": [<drift block>, ...]``.
    """
    drift = _drift_from_config(block)
    a = block.get("a", 1.0)
    if not isinstance(a, (int, float)):
        raise ConfigError(f"diffusion coefficient 'a' must be a number, got {a!r}")
    try:
        diffusion = ConstantDiffusion(float(a))
    except PositivityError as bad:
        raise ConfigError(str(bad)) from None
    name = block.get("name", block.get("family", ""))
    if not isinstance(name, str):
        raise ConfigError(f"model name must be a string, got {name!r}")
    return make_model(drift, diffusion, name=name)


def _checked_eval(
    model: DiffusionModel, fn: Callable[[np.ndarray], np.ndarray], x
) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if not np.all(np.isfinite(arr)):
        raise DomainError("evaluation points must be finite")
    if model.domain_lower > -math.inf and np.any(arr <= model.domain_lower):
        worst = float(arr.min())
        raise DomainError(
            f"x={worst!r} is outside the state space ({model.domain_lower}, inf)"
        )
    return np.asarray(fn(arr), dtype=float), scalar


def evaluate_drift(model: DiffusionModel, x):
    """Drift b(x) with domain checking; scalar in, scalar out."""
    values, scalar = _checked_eval(model, model.drift, x)
    return float(values[0]) if scalar else values


def evaluate_diffusion(model: DiffusionModel, x):
    """Diffusion coefficient a(x) with domain and positivity checking."""
    values, scalar = _checked_eval(model, model.diffusion, x)
    if not np.all(values > 0.0):
        worst = float(np.nanmin(values))
        raise PositivityError(f"diffusion coefficient must be > 0, got {worst!r}")
    return float(values[0]) if scalar else values
