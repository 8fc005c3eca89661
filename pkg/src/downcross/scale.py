"""Scale function machinery for one-dimensional diffusions.

For a diffusion with generator ``(a/2) d^2/dx^2 + b d/dx`` the scale
function

    u(x) = integral from base to x of exp(-B(y)) dy,
    B(y) = integral from base to y of (2 b / a)(z) dz,

is the harmonic coordinate: ``u(X_t)`` is a local martingale, and ratios
of ``u``-increments give two-sided exit probabilities.  All long-horizon
behaviour of the process is read off from the two tail integrals of
``exp(-B)``: the process drifts to ``+inf`` almost surely exactly when
the left tail integral diverges and the right tail integral converges.

Everything here is arranged so that ``exp(-B)`` is never formed when it
would overflow or underflow double precision:

* ``log_weight_integral(lo, hi)`` returns ``log`` of the ``u``-increment
  relative to the anchor ``lo``, i.e. ``log int exp(-(B(y) - B(lo)))``,
  computed with a min-shift so the integrand is of order one;
* exponent differences over short spans are always integrated locally
  (``exponent_between``) rather than formed as differences of large
  absolute values, which keeps drawdown-rate evaluations accurate even
  where ``B`` is of order 1e13.

``B`` checkpoints are cached on a monotone grid so repeated absolute
exponent evaluations only integrate from the nearest known point.
"""

from __future__ import annotations

import bisect
import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import quadrature
from .errors import DomainError, OverflowPolicyError, QuadratureError
from .model import DiffusionModel, evaluate_diffusion, evaluate_drift

__all__ = [
    "ScaleFunction",
    "TailDiagnosis",
    "TransienceVerdict",
    "TRANSIENT_TO_PLUS_INFINITY",
    "TRANSIENT_TO_MINUS_INFINITY",
    "RECURRENT",
    "INDETERMINATE",
]

TRANSIENT_TO_PLUS_INFINITY = "TransientToPlusInfinity"
TRANSIENT_TO_MINUS_INFINITY = "TransientToMinusInfinity"
RECURRENT = "Recurrent"
INDETERMINATE = "Indeterminate"

# log(u) values beyond this cannot be exponentiated into a double.
_EXP_LIMIT = 700.0
_MAX_SPLIT_DEPTH = 34


@dataclass(frozen=True)
class TailDiagnosis:
    """Decay diagnosis of one tail integral of exp(-B).

    The tail is probed with geometrically growing (or, toward a finite
    edge, shrinking) chunks; ``fitted_exponent`` is the local power ``q``
    such that the integrand behaves like ``distance**-q``.  ``q = 1`` is
    the convergence boundary.
    """

    direction: str
    fitted_exponent: float
    slope: float
    distances: np.ndarray
    log_chunks: np.ndarray
    diverges: bool | None


@dataclass(frozen=True)
class TransienceVerdict:
    """Outcome of the two-tail transience test."""

    classification: str
    left_integral_diverges: bool | None
    right_integral_converges: bool | None
    left: TailDiagnosis
    right: TailDiagnosis
    notes: tuple[str, ...] = ()


class ScaleFunction:
    """Scale function u, its exponent B, and stable log-increments.

    Parameters
    ----------
    model:
        The diffusion whose scale function is wanted.
    base_point:
        Normalization point with ``u(base) = 0`` and ``B(base) = 0``.
        Defaults to 0, or to ``domain_lower + 1`` when the state space has
        a finite lower edge.  Every derived probability is a ratio of
        ``u``-increments, so the choice only fixes a gauge.
    abs_tol, rel_tol:
        Quadrature error targets for a single integral evaluation.
    """

    def __init__(
        self,
        model: DiffusionModel,
        base_point: float | None = None,
        *,
        abs_tol: float = 1e-12,
        rel_tol: float = 1e-10,
    ) -> None:
        if base_point is None:
            base_point = 0.0 if model.domain_lower == -math.inf else model.domain_lower + 1.0
        if model.domain_lower > -math.inf and base_point <= model.domain_lower:
            raise DomainError(
                f"base point {base_point} is outside ({model.domain_lower}, inf)"
            )
        if not (abs_tol > 0.0 and rel_tol > 0.0):
            raise DomainError("tolerances must be positive")
        self.model = model
        self.base_point = float(base_point)
        self.abs_tol = float(abs_tol)
        self.rel_tol = float(rel_tol)
        self._lock = threading.Lock()
        self._ckpt_x: list[float] = [self.base_point]
        self._ckpt_b: list[float] = [0.0]

    # -- raw coefficient access -------------------------------------------

    def _rate(self, x: np.ndarray) -> np.ndarray:
        """The exponent density 2 b(x) / a(x), with coefficient checks."""
        b = evaluate_drift(self.model, x)
        a = evaluate_diffusion(self.model, x)
        return 2.0 * np.asarray(b) / np.asarray(a)

    def _check_in_domain(self, x: float, what: str = "x") -> None:
        lower = self.model.domain_lower
        if not np.isfinite(x):
            raise DomainError(f"{what}={x!r} must be finite")
        if lower > -math.inf and x <= lower:
            raise DomainError(f"{what}={x!r} is outside ({lower}, inf)")

    # -- exponent ----------------------------------------------------------

    def exponent_between(self, lo: float, hi: float) -> float:
        """``B(hi) - B(lo)`` as a direct local integral of 2b/a."""
        self._check_in_domain(lo, "lo")
        self._check_in_domain(hi, "hi")
        if lo == hi:
            return 0.0
        return quadrature.integrate(
            self._rate, lo, hi, abs_tol=self.abs_tol, rel_tol=self.rel_tol
        )

    def exponent(self, x: float) -> float:
        """Absolute exponent ``B(x)``, reusing the nearest cached checkpoint."""
        self._check_in_domain(x)
        with self._lock:
            idx = bisect.bisect_left(self._ckpt_x, x)
            best = None
            for j in (idx - 1, idx):
                if 0 <= j < len(self._ckpt_x):
                    cand = (abs(x - self._ckpt_x[j]), j)
                    if best is None or cand < best:
                        best = cand
            dist, j = best
            if dist == 0.0:
                return self._ckpt_b[j]
            anchor_x = self._ckpt_x[j]
            anchor_b = self._ckpt_b[j]
        value = anchor_b + self.exponent_between(anchor_x, x)
        with self._lock:
            idx = bisect.bisect_left(self._ckpt_x, x)
            if not (idx < len(self._ckpt_x) and self._ckpt_x[idx] == x):
                self._ckpt_x.insert(idx, x)
                self._ckpt_b.insert(idx, value)
        return value

    def exponent_profile(self, xs: np.ndarray) -> np.ndarray:
        """``B`` at each of the sorted points ``xs``, relative to ``xs[0]``.

        Evaluates one Gauss-Kronrod panel per gap in a single batched
        coefficient call, then re-integrates any gap whose error estimate
        is out of budget.  Returns an array with ``profile[0] == 0``.
        """
        xs = np.asarray(xs, dtype=float)
        if xs.ndim != 1 or xs.size < 2 or np.any(np.diff(xs) <= 0.0):
            raise DomainError("profile points must be strictly increasing, >= 2 of them")
        self._check_in_domain(float(xs[0]), "profile start")
        a, b = xs[:-1], xs[1:]
        pts = quadrature.panel_points(a, b)
        fv = self._rate(pts.ravel()).reshape(pts.shape)
        seg, err = quadrature.panel_integrals(fv, 0.5 * (b - a))
        budget = max(self.abs_tol, self.rel_tol * float(np.abs(seg).sum()))
        per_gap = budget / seg.size
        for i in np.nonzero(err > per_gap)[0]:
            seg[i] = quadrature.integrate(
                self._rate, float(a[i]), float(b[i]),
                abs_tol=per_gap, rel_tol=self.rel_tol,
            )
        out = np.empty(xs.size)
        out[0] = 0.0
        np.cumsum(seg, out=out[1:])
        return out

    # -- log-domain u increments ------------------------------------------

    @staticmethod
    def _probe_fractions(n_uniform: int = 25) -> np.ndarray:
        # Uniform coverage plus geometric grading into both endpoints, so
        # integrands whose mass hugs either end start from a usable mesh.
        us = np.linspace(0.0, 1.0, n_uniform)
        edge = np.geomspace(1e-9, 0.1, 8)
        return np.unique(np.concatenate([us, edge, 1.0 - edge]))

    def log_weight_integral(self, lo: float, hi: float) -> float:
        """``log int_lo^hi exp(-(B(y) - B(lo))) dy`` for ``hi > lo``.

        This is the logarithm of ``u(hi) - u(lo)`` in the gauge anchored at
        ``lo``.  The exponent is accumulated locally from ``lo`` so no
        large absolute ``B`` values are ever differenced; each quadrature
        gap is shifted by its own local exponent minimum and the gaps are
        combined with ``logsumexp``, so neither steeply rising nor steeply
        falling exponents can overflow a double.
        """
        self._check_in_domain(lo, "lo")
        self._check_in_domain(hi, "hi")
        if not hi > lo:
            raise DomainError(f"need hi > lo, got [{lo}, {hi}]")
        probes = np.unique(lo + (hi - lo) * self._probe_fractions())
        probes[0], probes[-1] = lo, hi
        delta = self.exponent_profile(probes)

        # Far from the origin the abscissae themselves are quantized: a node
        # is off by up to ulp/2, and the integrand's log-slope is the rate,
        # so relative accuracy below rate * ulp(coordinate) is unattainable.
        rate_scale = float(np.max(np.abs(self._rate(probes))))
        coord_ulp = float(np.spacing(max(abs(lo), abs(hi))))
        attainable = max(self.rel_tol, 4.0 * rate_scale * coord_ulp)

        # Each entry is (log gap value, log gap error, p, q, delta(p), depth).
        entries = [
            self._gap_log_weight(float(probes[i]), float(probes[i + 1]), float(delta[i]), 0)
            for i in range(probes.size - 1)
        ]
        log_rel = math.log(attainable)
        for _ in range(4000):
            vals = np.array([e[0] for e in entries])
            errs = np.array([e[1] for e in entries])
            total = float(logsumexp(vals))
            err_total = float(logsumexp(errs))
            if err_total <= total + log_rel or err_total < total - 60.0:
                if not np.isfinite(total):
                    raise QuadratureError(
                        f"weight integral degenerate over [{lo}, {hi}]"
                    )
                return total
            worst = int(np.argmax(errs))
            _, _, p, q, dp, depth = entries.pop(worst)
            m = 0.5 * (p + q)
            if depth >= _MAX_SPLIT_DEPTH or not p < m < q:
                raise QuadratureError(
                    f"log-weight integral failed to converge on [{p}, {q}]"
                )
            dm = dp + quadrature.integrate(
                self._rate, p, m, abs_tol=self.abs_tol, rel_tol=self.rel_tol
            )
            entries.append(self._gap_log_weight(p, m, dp, depth + 1))
            entries.append(self._gap_log_weight(m, q, dm, depth + 1))
        raise QuadratureError(
            f"weight integral did not converge over [{lo}, {hi}] within the split budget"
        )

    def _gap_log_weight(
        self, p: float, q: float, dp: float, depth: int
    ) -> tuple[float, float, float, float, float, int]:
        """One Kronrod panel of ``exp(-(B - B(anchor)))`` over ``[p, q]``.

        ``dp`` is the exponent at ``p`` relative to the anchor.  The
        exponent at the 15 panel nodes is built from 15 sub-panel
        integrals of the rate, all evaluated in one coefficient call; a
        local shift keeps the integrand in ``(0, 1]``, and the sub-panel
        exponent error estimates are folded into the returned log-error.
        """
        nodes = quadrature.panel_points(np.array([p]), np.array([q]))[0]
        sub_a = np.concatenate([[p], nodes[:-1]])
        sub_b = nodes
        pts = quadrature.panel_points(sub_a, sub_b)
        rv = self._rate(pts.ravel()).reshape(pts.shape)
        seg, seg_err = quadrature.panel_integrals(rv, 0.5 * (sub_b - sub_a))
        rel = np.cumsum(seg)
        shift = min(float(rel.min()), 0.0)
        fv = np.exp(-(rel - shift))
        integral, err = quadrature.panel_integrals(fv[None, :], np.array([0.5 * (q - p)]))
        value = max(float(integral[0]), 1e-320)
        # Exponent uncertainty enters the integrand multiplicatively.
        err_lin = max(float(err[0]) + value * min(float(np.sum(seg_err)), 1.0), 1e-320)
        offset = -dp - shift
        return math.log(value) + offset, math.log(err_lin) + offset, p, q, dp, depth

    # -- public scale quantities ------------------------------------------

    def scale_value(self, x: float) -> float:
        """``u(x)`` with ``u(base) = 0`` and ``u'(base) = 1``."""
        self._check_in_domain(x)
        if x == self.base_point:
            return 0.0
        if x > self.base_point:
            log_u = self.log_weight_integral(self.base_point, x)
            if log_u > _EXP_LIMIT:
                raise OverflowPolicyError(
                    f"u({x}) overflows double precision: log u = {log_u:.6g}"
                )
            return float(math.exp(log_u))
        log_mag = self.log_weight_integral(x, self.base_point) - self.exponent(x)
        if log_mag > _EXP_LIMIT:
            raise OverflowPolicyError(
                f"|u({x})| overflows double precision: log|u| = {log_mag:.6g}"
            )
        return -float(math.exp(log_mag))

    def scale_increment_log(self, x: float, c: float) -> float:
        """``log(u(x) - u(x - c))`` for drawdown depth ``c > 0``.

        Finite for every valid ``x`` even when ``exp(-B)`` itself under-
        or overflows, because only the local exponent shape enters; the
        absolute exponent at the anchor is added once, in log space.
        """
        if not c > 0.0:
            raise DomainError(f"crossing depth must be positive, got {c}")
        self._check_in_domain(x)
        self._check_in_domain(x - c, "x - c")
        return self.log_weight_integral(x - c, x) - self.exponent(x - c)

    # -- transience --------------------------------------------------------

    def classify_transience(
        self,
        *,
        n_probes: int = 30,
        ratio: float = 2.0,
        margin: float = 0.05,
    ) -> TransienceVerdict:
        """Classify long-run behaviour from the two tail integrals of exp(-B).

        Each tail is probed with geometric chunks; the fitted local decay
        power ``q`` of the integrand decides convergence, with ``q`` within
        ``margin`` of the boundary value 1 reported as inconclusive.
        """
        if n_probes < 8 or ratio <= 1.0:
            raise DomainError("need n_probes >= 8 and ratio > 1")
        right = self._diagnose_tail("right", n_probes, ratio, margin)
        left = self._diagnose_tail("left", n_probes, ratio, margin)

        right_conv = None if right.diverges is None else not right.diverges
        left_div = left.diverges
        notes: list[str] = []
        if left_div is None or right_conv is None:
            classification = INDETERMINATE
            notes.append("a tail decay fit landed within the margin of the boundary")
        elif left_div and right_conv:
            classification = TRANSIENT_TO_PLUS_INFINITY
        elif not left_div and not right_conv:
            classification = TRANSIENT_TO_MINUS_INFINITY
        elif left_div and not right_conv:
            classification = RECURRENT
        else:
            # Both tail integrals finite: exits either side with positive
            # probability, so no almost-sure direction exists.
            classification = INDETERMINATE
            notes.append("both tail integrals converge; no almost-sure direction")
        return TransienceVerdict(
            classification=classification,
            left_integral_diverges=left_div,
            right_integral_converges=right_conv,
            left=left,
            right=right,
            notes=tuple(notes),
        )

    def _diagnose_tail(
        self, direction: str, n_probes: int, ratio: float, margin: float
    ) -> TailDiagnosis:
        lower = self.model.domain_lower
        base = self.base_point
        distances = ratio ** np.arange(n_probes + 1)
        if direction == "right":
            points = (base + 1.0) + (distances - 1.0)
            toward_edge = False
        elif lower == -math.inf:
            points = (base - 1.0) - (distances - 1.0)
            toward_edge = False
        else:
            # Shrink geometrically toward the finite lower edge.
            d0 = base - lower
            distances = d0 * ratio ** -np.arange(n_probes + 1)
            points = lower + distances
            toward_edge = True

        log_chunks = np.empty(n_probes)
        b_at = 0.0  # exponent at points[j], relative to points[0]
        for j in range(n_probes):
            p, pn = float(points[j]), float(points[j + 1])
            step = self.exponent_between(p, pn)
            lo, hi = (p, pn) if pn > p else (pn, p)
            b_lo = b_at if lo == p else b_at + step
            log_chunks[j] = -b_lo + self.log_weight_integral(lo, hi)
            b_at += step

        mids = np.sqrt(np.abs(distances[:-1] * distances[1:]))
        n_fit = max(4, n_probes // 2)
        slope = float(np.polyfit(np.log(mids[-n_fit:]), log_chunks[-n_fit:], 1)[0])
        if toward_edge:
            # d decreasing toward the edge: chunks ~ d**(1-q) still, and the
            # integral diverges when they fail to vanish with d.
            q = 1.0 - slope
            diverges: bool | None
            if q > 1.0 + margin:
                diverges = True
            elif q < 1.0 - margin:
                diverges = False
            else:
                diverges = None
        else:
            q = 1.0 - slope
            if q > 1.0 + margin:
                diverges = False
            elif q < 1.0 - margin:
                diverges = True
            else:
                diverges = None
        return TailDiagnosis(
            direction=direction,
            fitted_exponent=q,
            slope=slope,
            distances=distances,
            log_chunks=log_chunks,
            diverges=diverges,
        )
