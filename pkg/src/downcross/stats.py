"""Comparison of empirical Monte Carlo distributions with analytic laws.

The central object is :class:`EmpiricalSurvival`, the step-function
estimate of the first-onset offset distribution built from simulated
paths, including the count of censored paths (paths absorbed or timed
out before any drawdown completed).  A censored path's unobserved onset,
had simulation continued, would lie at or above the path's running
record when it stopped; the smallest such record over the censored
paths is the *censoring frontier*, below which the estimate
``(#{offsets > g} + censored) / n`` is exact.

``ks_distance`` compares this estimate with an analytic survival curve
on a caller-supplied grid; the analytic side is any object exposing
``survival(gammas)`` over a float array (duck-typed so this module does
not depend on the analysis machinery).  ``dkw_bound`` supplies the
Dvoretzky–Kiefer–Wolfowitz sampling band used to judge the distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.stats import norm

from .errors import DomainError, InsufficientDataError

__all__ = [
    "EmpiricalSurvival",
    "ks_distance",
    "dkw_bound",
    "wilson_interval",
    "comparison_report",
]


@dataclass(frozen=True)
class EmpiricalSurvival:
    """Step-function survival estimate of first-onset offsets.

    ``offsets`` are the observed onset offsets (onset location minus the
    start point), stored sorted; ``censored_count`` is the number of
    paths with no observed onset.  ``censoring_frontier`` is the largest
    offset up to which censored paths are known not to have had an
    onset; the estimate is only valid on ``[0, frontier)``.
    """

    offsets: np.ndarray
    censored_count: int = 0
    censoring_frontier: float = math.inf

    def __post_init__(self) -> None:
        arr = np.sort(np.asarray(self.offsets, dtype=float))
        if arr.ndim != 1:
            raise DomainError("offsets must be one-dimensional")
        if arr.size and not np.all(np.isfinite(arr)):
            raise DomainError("offsets must be finite")
        if self.censored_count < 0:
            raise DomainError("censored_count must be >= 0")
        if arr.size + self.censored_count == 0:
            raise DomainError("empirical survival needs at least one path")
        object.__setattr__(self, "offsets", arr)
        arr.setflags(write=False)

    @classmethod
    def from_samples(
        cls,
        samples: Iterable[float | None],
        *,
        start_x: float = 0.0,
        censoring_frontier: float = math.inf,
    ) -> "EmpiricalSurvival":
        """Build from raw first-onset locations, ``None`` meaning censored."""
        items = list(samples)
        vals = [s - start_x for s in items if s is not None]
        censored = sum(1 for s in items if s is None)
        return cls(
            offsets=np.asarray(vals, dtype=float),
            censored_count=censored,
            censoring_frontier=censoring_frontier,
        )

    @property
    def n_total(self) -> int:
        return int(self.offsets.size) + self.censored_count

    def survival(self, gamma) -> np.ndarray | float:
        """Right-continuous estimate ``(#{offsets > gamma} + censored) / n``."""
        g = np.asarray(gamma, dtype=float)
        above = self.offsets.size - np.searchsorted(self.offsets, g, side="right")
        out = (above + self.censored_count) / self.n_total
        return float(out) if g.ndim == 0 else out


def ks_distance(emp: EmpiricalSurvival, law, grid) -> float:
    """Largest gap between the empirical and analytic survival on the grid.

    ``law`` must expose ``survival(gammas)`` over a float array.  Raises
    :class:`InsufficientDataError` below 100 uncensored samples, and
    :class:`DomainError` if the grid reaches past the censoring frontier
    (where the empirical estimate is no longer exact).
    """
    if emp.offsets.size < 100:
        raise InsufficientDataError(
            f"need >= 100 uncensored samples, got {emp.offsets.size}"
        )
    g = np.asarray(grid, dtype=float)
    if g.size == 0:
        raise DomainError("grid must be nonempty")
    if not np.all(np.isfinite(g)):
        raise DomainError("grid must be finite")
    if emp.censored_count > 0 and float(g.max()) >= emp.censoring_frontier:
        raise DomainError(
            f"grid reaches {float(g.max())!r}, at or past the censoring "
            f"frontier {emp.censoring_frontier!r}"
        )
    analytic = np.asarray(law.survival(g), dtype=float)
    empirical = np.asarray(emp.survival(g), dtype=float)
    return float(np.max(np.abs(empirical - analytic)))


def dkw_bound(n: int, alpha: float) -> float:
    """Dvoretzky–Kiefer–Wolfowitz band half-width ``sqrt(ln(2/alpha)/(2n))``.

    With probability at least ``1 - alpha`` the empirical distribution of
    ``n`` i.i.d. samples stays within this sup-distance of the truth.
    """
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise DomainError(f"n must be a positive integer, got {n!r}")
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must be in (0, 1), got {alpha!r}")
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


def wilson_interval(
    successes: int, trials: int, confidence: float = 0.95
) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if not (isinstance(trials, (int, np.integer)) and trials >= 1):
        raise DomainError(f"trials must be a positive integer, got {trials!r}")
    if not (0 <= successes <= trials):
        raise DomainError(f"successes must lie in [0, {trials}], got {successes!r}")
    if not (0.0 < confidence < 1.0):
        raise DomainError(f"confidence must be in (0, 1), got {confidence!r}")
    z = float(norm.ppf(0.5 + confidence / 2.0))
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2.0 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials))
    # The interval provably contains the point estimate; the min/max only
    # repairs the one-ulp rounding loss at p = 0 or 1.
    return min(max(0.0, center - half), p), max(min(1.0, center + half), p)


def comparison_report(
    emp: EmpiricalSurvival,
    law,
    grid,
    *,
    alpha: float = 0.05,
    allowance: float = 0.0,
) -> dict:
    """KS comparison summarized as ``{n, censored, ks, dkw_alpha05, pass}``.

    ``allowance`` widens the acceptance band beyond the DKW half-width to
    absorb known systematic error (e.g. time discretization).
    """
    ks = ks_distance(emp, law, grid)
    band = dkw_bound(emp.offsets.size, alpha)
    return {
        "n": emp.n_total,
        "censored": emp.censored_count,
        "ks": ks,
        "dkw_alpha05": band,
        "pass": bool(ks < band + allowance),
    }
