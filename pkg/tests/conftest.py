"""Shared fixtures: scale functions are session-scoped because their
checkpoint caches make repeated hazard evaluation cheap only when the same
instance is reused across tests."""

from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from downcross.model import (
    BesselDrift,
    ConstantDiffusion,
    ConstantDrift,
    LogLogLogDrift,
    ZeroDrift,
    make_model,
)
from downcross.scale import ScaleFunction

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def sf_zero() -> ScaleFunction:
    return ScaleFunction(make_model(ZeroDrift(), ConstantDiffusion(1.0)))


@pytest.fixture(scope="session")
def sf_const() -> ScaleFunction:
    return ScaleFunction(make_model(ConstantDrift(1.0), ConstantDiffusion(1.0)))


@pytest.fixture(scope="session")
def sf_bessel4() -> ScaleFunction:
    return ScaleFunction(make_model(BesselDrift(4.0), ConstantDiffusion(1.0)))


@pytest.fixture(scope="session")
def sf_growth():
    """Factory for the critical-growth drift at depth c=1, keyed by gamma."""
    cache: dict[float, ScaleFunction] = {}

    def build(gamma: float) -> ScaleFunction:
        if gamma not in cache:
            model = make_model(
                LogLogLogDrift(c=1.0, gamma=gamma), ConstantDiffusion(1.0)
            )
            cache[gamma] = ScaleFunction(model)
        return cache[gamma]

    return build
