"""Slice star function T*(re^{i theta}, F_zeta) by two independent routes.

The star function of a slice is

    T*(re^{i theta}) = sup_E (1/2pi) int_E log|F(re^{ix} zeta)| dx + N(r, inf)

with the sup over subsets E of [-pi, pi] of measure 2*theta.  Discretely the
sup is solved by the bathtub principle — take the floor(theta*M/pi) largest
midpoint samples plus a linearly weighted fraction of the next one — and,
equivalently, by the level-threshold form

    (1/2pi) int log^+( log|F| - t ) dx + theta*t/pi

at the quantile t where the superlevel set has measure 2*theta.  Both forms
are computed here from the same samples and must agree to ~1e-10; their
agreement is one of the package's standing cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .funcdef import MeroFunction
from .slicing import Direction, SliceDivisor, _big_N_from_points, midpoint_angles, slice_divisor

__all__ = [
    "LOG_FLOOR",
    "LOG_CEILING",
    "CircleSamples",
    "RearrangedProfile",
    "StarValue",
    "LevelValue",
    "circle_log_samples",
    "sanitize_log_values",
    "star_rearranged",
    "level_threshold",
    "star_thresholded",
    "slice_star_total",
]

#: clamp bounds for log|F| samples near zeros/poles on the circle
LOG_FLOOR = -1.0e4
LOG_CEILING = 1.0e4


@dataclass(frozen=True, eq=False)
class CircleSamples:
    """log|F(re^{ix_i} zeta)| at the M midpoint angles x_i.

    ``clipped`` counts samples clamped at either bound (floor hits near
    zeros, ceiling hits at exact poles).  ``values`` is read-only.
    """

    r: float
    direction: Direction
    M: int
    values: np.ndarray
    clipped: int

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("radius must be positive")
        if self.M < 16:
            raise ValueError("need at least 16 samples")
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.M,):
            raise ValueError("values must have length M")
        if vals.min() < LOG_FLOOR or vals.max() > LOG_CEILING:
            raise ValueError("values outside the clamp bounds")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @cached_property
    def profile(self) -> "RearrangedProfile":
        return RearrangedProfile.from_samples(self)


@dataclass(frozen=True, eq=False)
class RearrangedProfile:
    """Nonincreasing rearrangement of circle samples with prefix sums.

    prefix_sums[j] is the sum of the j largest samples (length M+1, leading
    zero), so theta-sections of the star are O(1) lookups.
    """

    sorted_values: np.ndarray
    prefix_sums: np.ndarray

    def __post_init__(self):
        sv = np.asarray(self.sorted_values, dtype=float)
        ps = np.asarray(self.prefix_sums, dtype=float)
        if np.any(np.diff(sv) > 0):
            raise ValueError("sorted_values must be nonincreasing")
        if ps.shape != (sv.size + 1,) or ps[0] != 0:
            raise ValueError("prefix_sums must be cumulative with leading 0")
        sv.setflags(write=False)
        ps.setflags(write=False)
        object.__setattr__(self, "sorted_values", sv)
        object.__setattr__(self, "prefix_sums", ps)

    @classmethod
    def from_samples(cls, samples: CircleSamples) -> "RearrangedProfile":
        sv = np.sort(samples.values)[::-1].copy()
        ps = np.concatenate(([0.0], np.cumsum(sv)))
        return cls(sorted_values=sv, prefix_sums=ps)

    def fstar(self, theta: float) -> float:
        """Bathtub value: mean of the 2*theta-measure worth of top samples."""
        M = self.sorted_values.size
        k, frac = _split_theta(theta, M)
        value = self.prefix_sums[k]
        if frac:
            value = value + frac * self.sorted_values[k]
        return float(value / M)


class LevelValue(float):
    """A threshold level t; ``degenerate`` marks an all-equal sample set."""

    degenerate: bool

    def __new__(cls, value: float, degenerate: bool = False):
        obj = super().__new__(cls, value)
        obj.degenerate = bool(degenerate)
        return obj


@dataclass(frozen=True)
class StarValue:
    """T* split into its integral part (fstar) and N(r, inf)."""

    r: float
    theta: float
    fstar: float
    big_N_inf: float
    total: float

    def __post_init__(self):
        if not 0 <= self.theta <= math.pi:
            raise ValueError("theta must lie in [0, pi]")
        if self.total != self.fstar + self.big_N_inf:
            raise ValueError("total must equal fstar + big_N_inf exactly")


def _split_theta(theta: float, M: int) -> tuple[int, float]:
    if not 0 <= theta <= math.pi:
        raise ValueError(f"theta={theta} outside [0, pi]")
    s = theta * M / math.pi
    k = int(math.floor(s))
    if k >= M:
        return M, 0.0
    return k, s - k


def sanitize_log_values(vals: np.ndarray) -> tuple[np.ndarray, int]:
    """Clamp log|F| samples into [LOG_FLOOR, LOG_CEILING], counting clips.

    A node landing exactly on a slice zero gives -inf (clamped to the
    floor), an exact pole gives +inf (clamped to the ceiling), and an exact
    zero of both g and h gives NaN, which is the removable 0/0 of a common
    factor and is set to 0.  Evaluation never aborts.
    """
    vals = np.where(np.isnan(vals), 0.0, vals)
    clipped = int(np.count_nonzero((vals < LOG_FLOOR) | (vals > LOG_CEILING)))
    return np.clip(vals, LOG_FLOOR, LOG_CEILING), clipped


def _samples_from_divisor(div: SliceDivisor, r: float, M: int) -> CircleSamples:
    w = r * np.exp(1j * midpoint_angles(M))
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.log(np.abs(div.pair.g(w))) - np.log(np.abs(div.pair.h(w)))
        # shared g/h roots are removable factors of the slice, not features
        # of |F_zeta|; subtract their (nearly cancelling) log contributions
        for zg, zh, m in div.cancelled:
            if zg != zh:
                vals -= m * (np.log(np.abs(w - zg)) - np.log(np.abs(w - zh)))
    vals, clipped = sanitize_log_values(vals)
    return CircleSamples(r=float(r), direction=div.pair.direction, M=M, values=vals, clipped=clipped)


def circle_log_samples(F: MeroFunction, zeta: Direction, r: float, M: int = 4096) -> CircleSamples:
    """Midpoint samples of log|F(re^{ix} zeta)|, clamped to [floor, ceiling].

    If g_zeta and h_zeta share roots (indeterminate direction) the cancelled
    slice is sampled, consistent with the counting functions.
    """
    if M < 16:
        raise ValueError("M must be at least 16")
    return _samples_from_divisor(slice_divisor(F, zeta), r, M)


def star_rearranged(samples: CircleSamples, theta: float) -> float:
    """sup_{|E|=2 theta} (1/2pi) int_E log|F| dx via decreasing rearrangement."""
    return samples.profile.fstar(theta)


def level_threshold(samples: CircleSamples, theta: float) -> LevelValue:
    """The level t whose superlevel set has discrete measure 2*theta.

    Ties are resolved by sorted order; for an all-equal sample vector the
    common value is returned with ``degenerate=True``.
    """
    if not 0 < theta < math.pi:
        raise ValueError("theta must lie in (0, pi)")
    sv = samples.profile.sorted_values
    k, _ = _split_theta(theta, samples.M)
    degenerate = bool(sv[0] == sv[-1])
    return LevelValue(float(sv[min(k, samples.M - 1)]), degenerate)


def star_thresholded(samples: CircleSamples, theta: float) -> float:
    """Level-set form: (1/2pi) int (log|F| - t)^+ dx + theta*t/pi."""
    t = level_threshold(samples, theta)
    excess = float(np.maximum(samples.values - float(t), 0.0).sum()) / samples.M
    return excess + theta * float(t) / math.pi


def slice_star_total(
    F: MeroFunction, zeta: Direction, r: float, theta: float, M: int = 4096
) -> StarValue:
    """T*(re^{i theta}, F_zeta) = rearranged star + N(r, inf; F_zeta)."""
    div = slice_divisor(F, zeta)
    samples = _samples_from_divisor(div, r, M)
    fstar = star_rearranged(samples, theta)
    n_inf = _big_N_from_points(div.poles, r)
    return StarValue(r=float(r), theta=float(theta), fstar=fstar, big_N_inf=n_inf, total=fstar + n_inf)
