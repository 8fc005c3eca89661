"""Level-revisit summability sequences for the radial and log-drift families."""

from __future__ import annotations

import numpy as np
import pytest

from downcross.analysis import (
    DIVERGENT_IO_ONE,
    SUMMABLE_IO_ZERO,
    bessel_sequence_series,
    logdrift_downcross_sequence_check,
)
from downcross.errors import DomainError


def test_radial_series_terms_are_powers_of_n():
    # p_n = n^{-rho(k-2)}; for k = 4, rho = 1 that is 1/n^2.
    partials, verdict = bessel_sequence_series(4.0, 1.0, 4)
    assert verdict == SUMMABLE_IO_ZERO
    assert partials == pytest.approx(
        [1.0, 1.25, 1.25 + 1.0 / 9.0, 1.25 + 1.0 / 9.0 + 1.0 / 16.0], rel=1e-14
    )


def test_radial_series_harmonic_case_diverges():
    # k = 3, rho = 1: p_n = 1/n, so the partial sum is a harmonic number.
    partials, verdict = bessel_sequence_series(3.0, 1.0, 100)
    assert verdict == DIVERGENT_IO_ONE
    assert partials[-1] == pytest.approx(5.187377517639621, rel=1e-13)


def test_radial_series_convergent_regression():
    partials, verdict = bessel_sequence_series(4.0, 1.0, 100)
    assert verdict == SUMMABLE_IO_ZERO
    assert partials[-1] == pytest.approx(1.6349839001848923, rel=1e-13)
    assert np.all(np.diff(partials) > 0.0)


def test_radial_series_verdict_threshold():
    # Summable iff rho * (k - 2) > 1, with the boundary itself divergent.
    assert bessel_sequence_series(6.0, 0.3, 10)[1] == SUMMABLE_IO_ZERO
    assert bessel_sequence_series(2.5, 2.0, 10)[1] == DIVERGENT_IO_ONE  # exactly 1
    assert bessel_sequence_series(4.0, 0.5, 10)[1] == DIVERGENT_IO_ONE  # exactly 1
    assert bessel_sequence_series(2.5, 2.1, 10)[1] == SUMMABLE_IO_ZERO
    assert bessel_sequence_series(3.0, 0.9, 10)[1] == DIVERGENT_IO_ONE


def test_radial_series_validates_arguments():
    with pytest.raises(DomainError):
        bessel_sequence_series(2.0, 1.0, 10)  # k must exceed 2
    with pytest.raises(DomainError):
        bessel_sequence_series(4.0, 0.0, 10)
    with pytest.raises(DomainError):
        bessel_sequence_series(4.0, -1.0, 10)
    with pytest.raises(DomainError):
        bessel_sequence_series(4.0, 1.0, 1)  # need at least two terms


def test_logdrift_sequence_wide_spacing_is_summable():
    partials, verdict = logdrift_downcross_sequence_check(1.0, 2.0, 100)
    assert verdict == SUMMABLE_IO_ZERO
    assert partials[-1] == pytest.approx(0.30781840741303607, rel=1e-10)
    assert np.all(np.diff(partials) > 0.0)


def test_logdrift_sequence_boundary_spacing_diverges():
    # Spacing equal to the depth sits exactly on the summability edge;
    # the fitted decay stays at the boundary and is reported divergent.
    partials, verdict = logdrift_downcross_sequence_check(1.0, 1.0, 100)
    assert verdict == DIVERGENT_IO_ONE
    assert partials[-1] == pytest.approx(4.377755346961605, rel=1e-10)


def test_logdrift_sequence_narrow_spacing_diverges():
    partials, verdict = logdrift_downcross_sequence_check(1.0, 0.5, 100)
    assert verdict == DIVERGENT_IO_ONE
    assert partials[-1] == pytest.approx(24.473179145113143, rel=1e-10)


def test_logdrift_sequence_validates_arguments():
    with pytest.raises(DomainError):
        logdrift_downcross_sequence_check(0.0, 1.0, 100)
    with pytest.raises(DomainError):
        logdrift_downcross_sequence_check(1.0, 0.0, 100)
    with pytest.raises(DomainError):
        logdrift_downcross_sequence_check(1.0, 1.0, 5)  # too few terms to fit
