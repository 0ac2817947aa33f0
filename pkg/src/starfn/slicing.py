"""One-variable slices F_zeta(z) = F(z*zeta) and their counting functions.

A direction zeta on the unit sphere turns F = G/H into a rational function of
one variable with numerator g(z) = G(z*zeta) and denominator h(z) = H(z*zeta).
This module locates slice zeros/poles, cancels common roots (a shared root is
a removable factor of the slice, not an a-point), and evaluates

    n(t, a)  —  number of a-points with |z| <= t, with multiplicity,
    N(r, a)  =  integral of n(t,a)/t from 0 to r
             =  sum of m_j * log(r / |z_j|) over |z_j| <= r   (exact form),

plus a Jensen-identity residual used as a global consistency check:
N(r,0) - N(r,inf) equals the circle mean of log|F(r e^{ix} zeta)|.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .funcdef import MeroFunction, MultiPoly

__all__ = [
    "Direction",
    "UniPoly",
    "SlicePair",
    "RootSet",
    "CountingRecord",
    "SliceDivisor",
    "RootFindingError",
    "CircleProximityError",
    "make_slice",
    "roots_in_disk",
    "slice_divisor",
    "counting_small_n",
    "counting_big_N",
    "counting_record",
    "jensen_residual",
    "indeterminacy_test",
]

#: relative clustering tolerance for merging nearly-equal roots
CLUSTER_TOL = 1e-8
#: default tolerance for declaring a g-root and an h-root "common"
CANCEL_TOL = 1e-9
#: leading coefficients below this relative size are noise from collection
LEADING_TRIM = 1e-13

_NORM_TOL = 1e-14


class RootFindingError(RuntimeError):
    """The companion-matrix eigenvalue iteration failed to converge."""


class CircleProximityError(ValueError):
    """A slice root lies too close to the quadrature circle |z| = r."""


@dataclass(frozen=True)
class Direction:
    """A point zeta on the unit sphere of C^n."""

    components: tuple[complex, ...]

    def __post_init__(self):
        comps = tuple(complex(c) for c in self.components)
        object.__setattr__(self, "components", comps)
        norm = math.sqrt(sum(abs(c) ** 2 for c in comps))
        if abs(norm - 1.0) > _NORM_TOL:
            raise ValueError(f"direction norm {norm} is not 1 within {_NORM_TOL}")

    @classmethod
    def of(cls, vec: Sequence[complex]) -> "Direction":
        """Normalize an arbitrary nonzero vector onto the sphere."""
        comps = [complex(c) for c in vec]
        norm = math.sqrt(sum(abs(c) ** 2 for c in comps))
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(tuple(c / norm for c in comps))

    @property
    def n(self) -> int:
        return len(self.components)


@dataclass(frozen=True)
class UniPoly:
    """Univariate polynomial, coefficients in ascending degree.

    The zero polynomial is the empty coefficient tuple; otherwise the leading
    coefficient is nonzero.
    """

    coeffs: tuple[complex, ...]

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coeffs)
        while coeffs and coeffs[-1] == 0:
            coeffs = coeffs[:-1]
        for c in coeffs:
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise ValueError("non-finite coefficient")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def degree(self) -> int:
        if self.is_zero:
            raise ValueError("degree of the zero polynomial")
        return len(self.coeffs) - 1

    def __call__(self, z):
        """Horner evaluation; accepts scalars or numpy arrays."""
        if self.is_zero:
            return np.zeros_like(z) if isinstance(z, np.ndarray) else 0j
        if isinstance(z, np.ndarray):
            acc = np.full(z.shape, self.coeffs[-1], dtype=complex)
            for c in reversed(self.coeffs[:-1]):
                acc = acc * z + c
            return acc
        acc = self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * z + c
        return acc


@dataclass(frozen=True)
class SlicePair:
    """Numerator/denominator of the slice F_zeta; g(0) = h(0) = 1."""

    direction: Direction
    g: UniPoly
    h: UniPoly

    def __post_init__(self):
        for u in (self.g, self.h):
            if u.is_zero or u.coeffs[0] != 1:
                raise ValueError("slice polynomials must have constant term 1")


@dataclass(frozen=True)
class RootSet:
    """Clustered roots (location, multiplicity) plus a residual bound.

    residual_bound is the max |p(root)| over the reported locations — a
    cheap certificate of root quality, not a rigorous inclusion radius.
    """

    roots: tuple[tuple[complex, int], ...]
    residual_bound: float

    def total_multiplicity(self) -> int:
        return sum(m for _, m in self.roots)


@dataclass(frozen=True)
class CountingRecord:
    """n and N for one (r, a) query; a is 0 or math.inf."""

    r: float
    a: float
    small_n: int
    big_N: float

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("radius must be positive")
        if not (self.a == 0 or math.isinf(self.a)):
            raise ValueError("target a must be 0 or inf")
        if self.small_n < 0 or self.big_N < -1e-12:
            raise ValueError("counting functions are nonnegative")


@dataclass(frozen=True)
class SliceDivisor:
    """Zeros/poles of F_zeta after cancelling common roots of g and h.

    cancelled lists (g_root, h_root, multiplicity) pairs that were removed.
    """

    pair: SlicePair
    zeros: tuple[tuple[complex, int], ...]
    poles: tuple[tuple[complex, int], ...]
    cancelled: tuple[tuple[complex, complex, int], ...]


def make_slice(F: MeroFunction, zeta: Direction) -> SlicePair:
    """Restrict F to the complex line {z * zeta}."""
    if zeta.n != F.n:
        raise ValueError("direction dimension does not match F")
    g = _substitute(F.numerator, zeta.components)
    h = _substitute(F.denominator, zeta.components)
    return SlicePair(direction=zeta, g=g, h=h)


def _substitute(p: MultiPoly, comps: tuple[complex, ...]) -> UniPoly:
    out = [0j] * (p.degree() + 1)
    for exp, c in p.ordered_terms():
        w = c
        for comp, e in zip(comps, exp):
            if e:
                w *= comp ** e
        out[sum(exp)] += w
    return UniPoly(tuple(out))


def _effective_coeffs(u: UniPoly) -> tuple[complex, ...]:
    """Strip leading coefficients that are collection noise."""
    coeffs = u.coeffs
    top = max(abs(c) for c in coeffs)
    k = len(coeffs)
    while k > 1 and abs(coeffs[k - 1]) <= LEADING_TRIM * top:
        k -= 1
    return coeffs[:k]


_EPS = float(np.finfo(float).eps)


def _cluster(roots: np.ndarray) -> list[tuple[complex, int]]:
    """Merge root approximations into (location, multiplicity) clusters.

    Pass 1 is plain union-find at CLUSTER_TOL*(1+|z|).  Pass 2 re-merges
    cluster pairs whose distance fits the scatter of an m-fold root: an
    m-multiple root computed in double precision splits by about eps^(1/m)
    (e.g. ~1e-8 for a double root), which exceeds the base tolerance, so a
    combined cluster of size m = mi+mj is accepted within
    8*(1+|z|)*eps^(1/m).
    """
    k = len(roots)
    parent = list(range(k))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(k):
        for j in range(i + 1, k):
            tol = CLUSTER_TOL * (1.0 + max(abs(roots[i]), abs(roots[j])))
            if abs(roots[i] - roots[j]) <= tol:
                pi, pj = find(i), find(j)
                if pi != pj:
                    parent[pj] = pi
    groups: dict[int, list[complex]] = {}
    for i in range(k):
        groups.setdefault(find(i), []).append(complex(roots[i]))
    clusters = [(sum(g) / len(g), len(g)) for g in groups.values()]

    changed = True
    while changed and len(clusters) > 1:
        changed = False
        merged: list[tuple[complex, int]] = []
        used = [False] * len(clusters)
        for i in range(len(clusters)):
            if used[i]:
                continue
            zi, mi = clusters[i]
            for j in range(i + 1, len(clusters)):
                if used[j]:
                    continue
                zj, mj = clusters[j]
                m = mi + mj
                tol = 8.0 * (1.0 + max(abs(zi), abs(zj))) * _EPS ** (1.0 / m)
                if abs(zi - zj) <= tol:
                    zi = (zi * mi + zj * mj) / m
                    mi = m
                    used[j] = True
                    changed = True
            merged.append((zi, mi))
            used[i] = True
        clusters = merged

    clusters.sort(key=lambda zm: (abs(zm[0]), zm[0].real, zm[0].imag))
    return clusters


def roots_in_disk(u: UniPoly, t: float) -> RootSet:
    """All roots of u with |z| <= t, multiplicities by clustering."""
    if u.is_zero:
        raise ValueError("roots of the zero polynomial are undefined")
    if t < 0:
        raise ValueError("disk radius must be nonnegative")
    coeffs = _effective_coeffs(u)
    if len(coeffs) == 1:
        return RootSet(roots=(), residual_bound=0.0)
    try:
        raw = np.roots(np.asarray(coeffs[::-1], dtype=complex))
    except np.linalg.LinAlgError as exc:
        raise RootFindingError(f"root iteration did not converge: {exc}") from exc
    clusters = [(z, m) for z, m in _cluster(raw) if abs(z) <= t]
    residual = max((abs(complex(u(z))) for z, _ in clusters), default=0.0)
    return RootSet(roots=tuple(clusters), residual_bound=float(residual))


def slice_divisor(F: MeroFunction, zeta: Direction, tol: float = CANCEL_TOL) -> SliceDivisor:
    """Slice zeros and poles with common g/h roots cancelled in pairs."""
    pair = make_slice(F, zeta)
    gset = roots_in_disk(pair.g, math.inf)
    hset = roots_in_disk(pair.h, math.inf)
    zeros = [[z, m] for z, m in gset.roots]
    poles = [[z, m] for z, m in hset.roots]
    cancelled: list[tuple[complex, complex, int]] = []
    for zrec in zeros:
        if zrec[1] == 0:
            continue
        for prec in poles:
            if prec[1] == 0:
                continue
            if abs(zrec[0] - prec[0]) <= tol:
                m = min(zrec[1], prec[1])
                cancelled.append((zrec[0], prec[0], m))
                zrec[1] -= m
                prec[1] -= m
                if zrec[1] == 0:
                    break
    return SliceDivisor(
        pair=pair,
        zeros=tuple((z, m) for z, m in zeros if m > 0),
        poles=tuple((z, m) for z, m in poles if m > 0),
        cancelled=tuple(cancelled),
    )


def _points_for(div: SliceDivisor, a: float) -> tuple[tuple[complex, int], ...]:
    if a == 0:
        return div.zeros
    if math.isinf(a):
        return div.poles
    raise ValueError("target a must be 0 or inf")


def counting_small_n(F: MeroFunction, zeta: Direction, t: float, a: float) -> int:
    """n(t, a; F_zeta): a-points with |z| <= t, counted with multiplicity."""
    if t <= 0:
        raise ValueError("t must be positive")
    div = slice_divisor(F, zeta)
    return sum(m for z, m in _points_for(div, a) if abs(z) <= t)


def counting_big_N(F: MeroFunction, zeta: Direction, r: float, a: float) -> float:
    """N(r, a; F_zeta) = sum of m_j log(r/|z_j|) over a-points in |z| <= r."""
    if r <= 0:
        raise ValueError("r must be positive")
    div = slice_divisor(F, zeta)
    return _big_N_from_points(_points_for(div, a), r)


def _big_N_from_points(points: Sequence[tuple[complex, int]], r: float) -> float:
    return float(sum(m * math.log(r / abs(z)) for z, m in points if abs(z) <= r))


def counting_record(F: MeroFunction, zeta: Direction, r: float, a: float) -> CountingRecord:
    """Bundle n(r,a) and N(r,a) computed from one root extraction."""
    if r <= 0:
        raise ValueError("r must be positive")
    div = slice_divisor(F, zeta)
    pts = _points_for(div, a)
    inside = [(z, m) for z, m in pts if abs(z) <= r]
    return CountingRecord(
        r=float(r),
        a=float(a),
        small_n=sum(m for _, m in inside),
        big_N=_big_N_from_points(inside, r),
    )


def midpoint_angles(M: int) -> np.ndarray:
    """M midpoint-rule angles in (-pi, pi); nodes avoid exact axis angles."""
    if M < 1:
        raise ValueError("need at least one node")
    return -math.pi + (np.arange(M) + 0.5) * (2.0 * math.pi / M)


def jensen_residual(F: MeroFunction, zeta: Direction, r: float, M: int) -> float:
    """|N(r,0) - N(r,inf) - circle mean of log|F|| with M midpoint nodes."""
    if r <= 0:
        raise ValueError("r must be positive")
    if M < 16:
        raise ValueError("M must be at least 16")
    div = slice_divisor(F, zeta)
    for rs in (roots_in_disk(div.pair.g, math.inf), roots_in_disk(div.pair.h, math.inf)):
        for z, _ in rs.roots:
            if abs(abs(z) - r) < 1e-3 * r:
                raise CircleProximityError(
                    f"root at |z|={abs(z):.6g} within 1e-3*r of the circle r={r}"
                )
    lhs = _big_N_from_points(div.zeros, r) - _big_N_from_points(div.poles, r)
    w = r * np.exp(1j * midpoint_angles(M))
    vals = np.log(np.abs(div.pair.g(w))) - np.log(np.abs(div.pair.h(w)))
    return float(abs(lhs - vals.mean()))


def indeterminacy_test(
    F: MeroFunction, zeta: Direction, tol: float = CANCEL_TOL
) -> tuple[bool, float]:
    """Does the slice share a zero of g and h within tol?

    Returns (flag, separation): separation is the minimum distance between a
    g-root and an h-root (clustered locations), +inf if either set is empty.
    """
    pair = make_slice(F, zeta)
    gset = roots_in_disk(pair.g, math.inf)
    hset = roots_in_disk(pair.h, math.inf)
    if not gset.roots or not hset.roots:
        return False, math.inf
    sep = min(abs(zg - zh) for zg, _ in gset.roots for zh, _ in hset.roots)
    return sep <= tol, float(sep)
