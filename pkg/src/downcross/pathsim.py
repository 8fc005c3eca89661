"""Monte Carlo simulation of the diffusion with drawdown-event detection.

Paths follow ``dX = b(X) dt + sqrt(a(X)) dW`` on a fixed time grid.  Two
distinct drawdown observables are provided, and they are not the same
random variable:

* ``first_onset`` — the literal earliest time ``t`` such that the path
  later falls ``c`` below ``X_t``, together with that level.  This is the
  first element of the down-crossed range.
* ``scan_downcrossings`` — the iterated sequence of completed drawdown
  events: an event fires when the drawdown from the running record first
  reaches ``c``; detection re-arms when the path climbs back to the
  record level.  The first event's ``onset_location`` (the record at
  first completion) is the quantity whose law is
  ``exp(-int hazard)``, and successive onsets are non-decreasing.

The literal first-onset level is lower whenever an early record is only
undercut *after* a higher record's drawdown has already completed, so the
two observables have different laws; both are exposed and both are tested.

Discrete sampling systematically under-measures records and dips by
``O(sqrt(dt))``, which visibly biases drawdown detection.  By default
each step is therefore augmented with the exact conditional extrema of
the Brownian bridge between the step endpoints (``bridge_extrema``),
which removes that bias; for constant coefficients the sampled record
process is then exact in distribution.

Reproducibility contract: path ``i`` uses an independent PCG64 stream
seeded with ``split_seed(master_seed, i)`` (a SplitMix64 mix).  Per path,
variates are drawn in chunks of ``STREAM_CHUNK`` steps in the fixed
order: normals, then (if bridge sampling is on) bridge-max uniforms,
then bridge-min uniforms.  Results are independent of batch and worker
scheduling because every path owns its stream.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError
from .model import DiffusionModel, evaluate_diffusion, evaluate_drift
from .stats import wilson_interval

__all__ = [
    "PathConfig",
    "CrossingEvent",
    "PathResult",
    "split_seed",
    "first_onset",
    "scan_downcrossings",
    "simulate_path",
    "simulate_paths",
    "sample_onset_locations",
    "estimate_ever_downcross",
    "SCHEME_EULER",
    "SCHEME_MILSTEIN",
    "EXIT_HORIZON",
    "EXIT_ABSORBED",
    "POLICY_ERROR",
    "POLICY_REFLECT",
    "STREAM_CHUNK",
]

SCHEME_EULER = "EulerMaruyama"
SCHEME_MILSTEIN = "Milstein"
EXIT_HORIZON = "HorizonReached"
EXIT_ABSORBED = "AbsorbedAtStop"
POLICY_ERROR = "error"
POLICY_REFLECT = "reflect"

_LOG = logging.getLogger(__name__)

# Steps per RNG draw block; part of the reproducibility contract.
STREAM_CHUNK = 4096
# Soft cap on per-batch path-matrix memory, in bytes.
_BATCH_BYTES = 2.0e8

_MASK64 = (1 << 64) - 1


def split_seed(master_seed: int, index: int) -> int:
    """Derive the 64-bit stream seed for path ``index`` from the master seed.

    SplitMix64: seed the state with ``master + (index+1) * golden-gamma``
    and apply the standard finalizer.  Distinct indices give independent,
    well-mixed streams, and the mapping is a frozen part of the output
    contract.
    """
    z = (int(master_seed) + (int(index) + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


@dataclass(frozen=True)
class PathConfig:
    """Time-stepping and stopping configuration for one simulation run.

    ``x_stop`` absorbs the path once it makes a new endpoint record at or
    above that level with current drawdown at most ``stop_guard``; for a
    process drifting to ``+inf`` this truncates the irrelevant tail of
    the trajectory.  ``bridge_extrema`` augments every step with exact
    conditional Brownian-bridge maxima and minima (visited max, min,
    endpoint), which drawdown detection then sees.
    """

    x0: float
    dt: float
    t_max: float
    x_stop: float = math.inf
    seed: int = 0
    scheme: str = SCHEME_EULER
    stop_guard: float = 0.0
    bridge_extrema: bool = True
    domain_policy: str = POLICY_ERROR

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x0)):
            raise ConfigError(f"x0 must be finite, got {self.x0!r}")
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ConfigError(f"dt must be positive and finite, got {self.dt!r}")
        if not (self.t_max > self.dt):
            raise ConfigError(f"t_max must exceed dt, got t_max={self.t_max!r}")
        if self.scheme not in (SCHEME_EULER, SCHEME_MILSTEIN):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.domain_policy not in (POLICY_ERROR, POLICY_REFLECT):
            raise ConfigError(f"unknown domain policy {self.domain_policy!r}")
        if not (self.stop_guard >= 0.0):
            raise ConfigError(f"stop_guard must be >= 0, got {self.stop_guard!r}")
        if not (0 <= int(self.seed) <= _MASK64):
            raise ConfigError("seed must fit in 64 bits")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))


@dataclass(frozen=True)
class CrossingEvent:
    """One completed drawdown of depth ``c``.

    ``onset_location`` is the running record from which the drawdown
    completed, ``onset_time`` the first time that record level was
    attained, and ``completion_time`` the first time the path had fallen
    ``c`` below it.
    """

    onset_location: float
    onset_time: float
    completion_time: float


@dataclass(frozen=True)
class PathResult:
    """Events and termination state of one simulated path.

    ``running_max`` is the largest sampled value; when the path ends with
    no event, any future event's onset would lie at or above it, so it
    bounds the censoring of the onset distribution from below.
    """

    events: tuple[CrossingEvent, ...]
    final_x: float
    exit_reason: str
    first_onset: float | None = field(default=None)
    running_max: float = -math.inf

    def __post_init__(self) -> None:
        expected = self.events[0].onset_location if self.events else None
        if self.first_onset is None and expected is not None:
            object.__setattr__(self, "first_onset", expected)


# -- detectors on stored discrete paths -----------------------------------


def first_onset(xs: np.ndarray, c: float) -> tuple[int, float] | None:
    """Literal first onset on a stored path: earliest index ``j`` with some
    later sample at or below ``xs[j] - c``.  Returns ``(index, level)`` or
    ``None``.  Single backward pass over suffix minima.
    """
    xs = np.asarray(xs, dtype=float)
    if not c > 0.0:
        raise DomainError(f"crossing depth must be positive, got {c}")
    n = xs.size
    if n < 2:
        return None
    suffix_min = np.empty(n)
    suffix_min[-1] = math.inf
    suffix_min[:-1] = np.minimum.accumulate(xs[::-1])[::-1][1:]
    hits = np.nonzero(suffix_min <= xs - c)[0]
    if hits.size == 0:
        return None
    j = int(hits[0])
    return j, float(xs[j])


def scan_downcrossings(xs: np.ndarray, c: float) -> list[tuple[int, int]]:
    """Iterated drawdown events on a stored path.

    An event fires at the first index where the drawdown from the running
    record reaches ``c``; the onset index is the first attainment of that
    record.  Detection then stays disarmed until the path returns to the
    record level, after which the next event is sought; onset levels are
    therefore non-decreasing (strictly increasing for continuous laws).
    Returns ``(onset_index, completion_index)`` pairs.
    """
    xs = np.asarray(xs, dtype=float)
    if not c > 0.0:
        raise DomainError(f"crossing depth must be positive, got {c}")
    events: list[tuple[int, int]] = []
    n = xs.size
    if n < 2:
        return events
    running_max = np.maximum.accumulate(xs)
    pos = 0
    while True:
        rel = np.nonzero(running_max[pos:] - xs[pos:] >= c)[0]
        if rel.size == 0:
            return events
        comp = pos + int(rel[0])
        level = running_max[comp]
        onset = int(np.searchsorted(running_max, level, side="left"))
        events.append((onset, comp))
        back = np.nonzero(xs[comp + 1:] >= level)[0]
        if back.size == 0:
            return events
        pos = comp + 1 + int(back[0])


# -- stepping engine -------------------------------------------------------


def _bridge_extreme(x0: np.ndarray, x1: np.ndarray, var: np.ndarray,
                    u: np.ndarray, upper: bool) -> np.ndarray:
    """Exact conditional extremum of a Brownian bridge between step endpoints.

    ``var`` is the step variance ``a * dt``.  The maximum satisfies
    ``P(M >= m) = exp(-2 (m - x0)(m - x1) / var)``; inverting at a uniform
    variate gives the sampled extremum, and the minimum follows by
    reflection.
    """
    u = np.maximum(u, 1e-300)
    disc = np.sqrt((x0 - x1) ** 2 - 2.0 * var * np.log(u))
    if upper:
        return 0.5 * (x0 + x1 + disc)
    return 0.5 * (x0 + x1 - disc)


def _diffusion_derivative(model: DiffusionModel, x: np.ndarray) -> np.ndarray:
    h = 1e-6 * np.maximum(1.0, np.abs(x))
    hi = np.asarray(model.diffusion(x + h), dtype=float)
    lo = np.asarray(model.diffusion(x - h), dtype=float)
    return (hi - lo) / (2.0 * h)


def _advance_scan(
    vals: np.ndarray,
    base_col: int,
    record: float,
    record_col: int,
    armed: bool,
    c: float,
    events: list[tuple[int, float, int]],
) -> tuple[float, int, bool]:
    """Continue the drawdown scan over one chunk of visited values.

    ``vals`` are the values visited after the state ``(record,
    record_col, armed)`` was reached; ``base_col`` is the global column
    index of ``vals[0]``.  Completed events are appended to ``events`` as
    ``(onset_col, onset_level, completion_col)`` and the updated state is
    returned.  Chunking is invisible: feeding a path in pieces yields
    exactly the events of ``scan_downcrossings`` on the whole path.
    """
    pos = 0
    n = vals.size
    while pos < n:
        if not armed:
            back = np.nonzero(vals[pos:] >= record)[0]
            if back.size == 0:
                return record, record_col, False
            pos += int(back[0])
            armed = True
        seg = vals[pos:]
        run = np.maximum(np.maximum.accumulate(seg), record)
        rel = np.nonzero(run - seg >= c)[0]
        if rel.size == 0:
            top = float(run[-1])
            if top > record:
                record_col = base_col + pos + int(np.argmax(seg >= top))
                record = top
            return record, record_col, True
        k = int(rel[0])
        level = float(run[k])
        if level > record:
            record_col = base_col + pos + int(np.argmax(seg >= level))
            record = level
        events.append((record_col, record, base_col + pos + k))
        armed = False
        pos += k + 1
    return record, record_col, armed


def _column_time(col: int, dt: float, per_step: int) -> float:
    """Physical time of a global trajectory column (column 0 is ``t=0``)."""
    if col <= 0:
        return 0.0
    step, sub = divmod(col - 1, per_step)
    return (step + (sub + 1) / per_step) * dt


def _simulate_batch(
    model: DiffusionModel, cfg: PathConfig, c: float, indices: range
) -> list[PathResult]:
    """Run the paths with the given indices, scanning events chunk by chunk.

    Trajectories are never stored whole: each ``STREAM_CHUNK`` block of
    steps is generated, scanned for drawdown events with carried scan
    state, and discarded, so memory is independent of ``t_max``.
    """
    m = len(indices)
    n = cfg.n_steps
    dt = cfg.dt
    lower = model.domain_lower
    bridge = cfg.bridge_extrema
    per_step = 3 if bridge else 1

    rngs = [np.random.Generator(np.random.PCG64(split_seed(cfg.seed, i))) for i in indices]
    cur = np.full(m, float(cfg.x0))
    endpoint_max = np.full(m, float(cfg.x0))
    alive = np.ones(m, dtype=bool)
    absorb_col = np.full(m, -1, dtype=np.int64)
    final_x = np.full(m, float(cfg.x0))
    record = np.full(m, float(cfg.x0))
    record_col = np.zeros(m, dtype=np.int64)
    armed = np.ones(m, dtype=bool)
    events: list[list[tuple[int, float, int]]] = [[] for _ in range(m)]

    domain_violations = 0
    for chunk_start in range(0, n, STREAM_CHUNK):
        act = np.nonzero(alive)[0]
        if act.size == 0:
            break
        k_steps = min(STREAM_CHUNK, n - chunk_start)
        n_act = act.size
        z = np.empty((n_act, k_steps))
        for row, i in enumerate(act):
            z[row] = rngs[i].standard_normal(k_steps)
        if bridge:
            u_hi = np.empty((n_act, k_steps))
            u_lo = np.empty((n_act, k_steps))
            for row, i in enumerate(act):
                u_hi[row] = rngs[i].random(k_steps)
            for row, i in enumerate(act):
                u_lo[row] = rngs[i].random(k_steps)
        vals = np.empty((n_act, k_steps * per_step))
        cur_a = cur[act]
        emax_a = endpoint_max[act]
        alive_a = np.ones(n_act, dtype=bool)
        # local (within-chunk) column index of the absorbing endpoint
        absorb_local = np.full(n_act, -1, dtype=np.int64)
        for k in range(k_steps):
            b = np.asarray(evaluate_drift(model, cur_a), dtype=float)
            a = np.asarray(evaluate_diffusion(model, cur_a), dtype=float)
            var = a * dt
            nxt = cur_a + b * dt + np.sqrt(var) * z[:, k]
            if cfg.scheme == SCHEME_MILSTEIN:
                nxt = nxt + 0.25 * _diffusion_derivative(model, cur_a) * dt * (z[:, k] ** 2 - 1.0)
            if not alive_a.all():
                # Paths absorbed earlier in this chunk are frozen so
                # coefficient evaluation stays inside the state space;
                # their remaining columns are discarded by the scan.
                nxt = np.where(alive_a, nxt, cur_a)
            if lower > -math.inf:
                bad = alive_a & (nxt <= lower)
                if bad.any():
                    if cfg.domain_policy == POLICY_ERROR:
                        which = int(np.nonzero(bad)[0][0])
                        raise DomainError(
                            f"path {indices[int(act[which])]} left the domain at t="
                            f"{(chunk_start + k + 1) * dt:.6g}: "
                            f"x={nxt[which]!r} <= {lower}"
                        )
                    nudge = 1e-12 * max(1.0, abs(lower))
                    nxt = np.where(bad, np.maximum(2.0 * lower - nxt, lower + nudge), nxt)
                    domain_violations += int(bad.sum())
            col = k * per_step
            if bridge:
                vals[:, col] = _bridge_extreme(cur_a, nxt, var, u_hi[:, k], upper=True)
                vals[:, col + 1] = _bridge_extreme(cur_a, nxt, var, u_lo[:, k], upper=False)
                vals[:, col + 2] = nxt
            else:
                vals[:, col] = nxt
            emax_a = np.maximum(emax_a, nxt)
            done = alive_a & (nxt >= cfg.x_stop) & (emax_a - nxt <= cfg.stop_guard)
            if done.any():
                absorb_local[done] = col + per_step - 1
                alive_a &= ~done
            cur_a = nxt
            if not alive_a.any():
                break

        base_col = 1 + chunk_start * per_step
        for row, i in enumerate(act):
            if absorb_local[row] >= 0:
                row_vals = vals[row, : absorb_local[row] + 1]
            else:
                row_vals = vals[row]
            record[i], record_col[i], armed[i] = _advance_scan(
                row_vals, base_col, float(record[i]), int(record_col[i]),
                bool(armed[i]), c, events[i],
            )
        cur[act] = cur_a
        endpoint_max[act] = emax_a
        newly = absorb_local >= 0
        if newly.any():
            done_idx = act[newly]
            absorb_col[done_idx] = base_col + absorb_local[newly]
            final_x[done_idx] = cur_a[newly]
            alive[done_idx] = False
    final_x[alive] = cur[alive]

    if domain_violations:
        _LOG.info(
            "reflected %d sub-steps at the domain edge %g", domain_violations, lower
        )

    out: list[PathResult] = []
    for i in range(m):
        evs = tuple(
            CrossingEvent(
                onset_location=level,
                onset_time=_column_time(oc, dt, per_step),
                completion_time=_column_time(cc, dt, per_step),
            )
            for oc, level, cc in events[i]
        )
        reason = EXIT_ABSORBED if absorb_col[i] >= 0 else EXIT_HORIZON
        out.append(
            PathResult(
                events=evs,
                final_x=float(final_x[i]),
                exit_reason=reason,
                running_max=float(record[i]),
            )
        )
    return out


def _run_paths(
    model: DiffusionModel,
    cfg: PathConfig,
    c: float,
    n_paths: int,
    n_workers: int,
) -> list[PathResult]:
    if n_paths < 1:
        raise ConfigError(f"n_paths must be >= 1, got {n_paths}")
    per_step = 3 if cfg.bridge_extrema else 1
    chunk = min(STREAM_CHUNK, cfg.n_steps)
    per_path_bytes = (per_step + (3 if cfg.bridge_extrema else 1)) * chunk * 8
    batch = max(1, min(n_paths, int(_BATCH_BYTES // per_path_bytes)))
    batches = [range(s, min(s + batch, n_paths)) for s in range(0, n_paths, batch)]
    if n_workers <= 1 or len(batches) == 1:
        chunks = [_simulate_batch(model, cfg, c, b) for b in batches]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            futures = [pool.submit(_simulate_batch, model, cfg, c, b) for b in batches]
            chunks = [f.result() for f in futures]
    return [r for chunk in chunks for r in chunk]


# -- public operations -----------------------------------------------------


def simulate_path(model: DiffusionModel, cfg: PathConfig, c: float) -> PathResult:
    """Simulate the path with index 0 under the master seed and scan events."""
    return _simulate_batch(model, cfg, c, range(0, 1))[0]


def simulate_paths(
    model: DiffusionModel,
    cfg: PathConfig,
    c: float,
    n_paths: int,
    *,
    n_workers: int = 1,
) -> list[PathResult]:
    """Simulate ``n_paths`` independent paths, ordered by path index.

    Path ``i`` is seeded with ``split_seed(cfg.seed, i)``; the outcome is
    identical for any ``n_workers``.
    """
    return _run_paths(model, cfg, c, n_paths, n_workers)


def sample_onset_locations(
    model: DiffusionModel,
    cfg: PathConfig,
    c: float,
    n_paths: int,
    *,
    n_workers: int = 1,
) -> list[float | None]:
    """First event onset location for each of ``n_paths`` independent paths.

    Entry ``i`` comes from the path seeded with ``split_seed(cfg.seed, i)``
    and is ``None`` when the path was absorbed or timed out before any
    drawdown completed.
    """
    results = _run_paths(model, cfg, c, n_paths, n_workers)
    return [r.first_onset for r in results]


def estimate_ever_downcross(
    model: DiffusionModel,
    cfg: PathConfig,
    c: float,
    n_paths: int,
    *,
    n_workers: int = 1,
) -> tuple[float, tuple[float, float]]:
    """Fraction of paths with at least one completed drawdown, with a 95%
    Wilson interval."""
    results = _run_paths(model, cfg, c, n_paths, n_workers)
    hits = sum(1 for r in results if r.events)
    return hits / n_paths, wilson_interval(hits, n_paths)
