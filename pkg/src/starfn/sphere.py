"""Sphere averages: star function, counting functions and Lelong numbers.

The several-variable star function is the average of the slice stars over
the unit sphere,

    T*(re^{i theta}, F) = mean over zeta of T*(re^{i theta}, F_zeta),

estimated by Monte Carlo with directions drawn uniformly on S^{2n-1}
(normalized 2n-dimensional Gaussians).  Directions whose slice is
near-indeterminate (a numerator and a denominator root within 1e-9) are
skipped and counted — that set has measure zero, so skips are rare and the
estimate is unbiased in the limit.

Everything slice-related is evaluated for all directions at once: slice
coefficients by vectorized substitution, roots by batched companion-matrix
eigenvalues grouped by effective degree, circle integrals by row-wise Horner
evaluation followed by an axis sort.  Estimates use numpy's pairwise
summation, so results are bit-identical for a fixed seed regardless of the
STARFN_THREADS chunking.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .funcdef import MeroFunction, MultiPoly
from .slicing import LEADING_TRIM, Direction, RootFindingError, midpoint_angles
from .starcore import LOG_CEILING, LOG_FLOOR, _split_theta, sanitize_log_values

__all__ = [
    "SKIP_TOL",
    "AllDirectionsSkippedError",
    "DirectionSample",
    "Estimate",
    "StarGrid",
    "PointStat",
    "Violation",
    "sample_directions",
    "star_several",
    "counting_several",
    "lelong_number",
    "star_grid",
    "subharmonicity_stats",
    "subharmonicity_report",
]

#: slice root separation below which a direction counts as indeterminate
SKIP_TOL = 1e-9


class AllDirectionsSkippedError(RuntimeError):
    """Every sampled direction was near-indeterminate; no estimate possible."""


@dataclass(frozen=True, eq=False)
class DirectionSample:
    """Reproducible i.i.d. uniform directions on the unit sphere of C^n."""

    n: int
    seed: int
    count: int
    directions: tuple[Direction, ...]
    skipped: int = 0

    def __post_init__(self):
        if self.count < 1 or len(self.directions) != self.count:
            raise ValueError("directions must have length count >= 1")

    def as_array(self) -> np.ndarray:
        """(count, n) complex matrix of the direction components."""
        arr = np.array([d.components for d in self.directions], dtype=complex)
        arr.setflags(write=False)
        return arr


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo mean with its standard error over the used directions."""

    mean: float
    stderr: float
    count_used: int

    def __post_init__(self):
        if self.count_used < 1:
            raise ValueError("an estimate needs at least one direction")
        if self.stderr < 0:
            raise ValueError("stderr is nonnegative")


@dataclass(frozen=True, eq=False)
class StarGrid:
    """star_several tabulated on an (r, theta) rectangle with shared sample."""

    r_values: tuple[float, ...]
    theta_values: tuple[float, ...]
    cells: tuple[tuple[Estimate, ...], ...]
    sample: DirectionSample
    skipped: int

    def __post_init__(self):
        if list(self.r_values) != sorted(self.r_values) or list(
            self.theta_values
        ) != sorted(self.theta_values):
            raise ValueError("grid axes must be sorted ascending")
        if len(self.cells) != len(self.r_values) or any(
            len(row) != len(self.theta_values) for row in self.cells
        ):
            raise ValueError("cells must be rectangular r x theta")


@dataclass(frozen=True)
class PointStat:
    """Discrete mean-value statistic at one interior grid point."""

    i: int
    j: int
    r: float
    theta: float
    mean_diff: float
    stderr: float


@dataclass(frozen=True)
class Violation:
    """An interior point whose circle mean falls below the center value
    by more than the noise allowance."""

    i: int
    j: int
    r: float
    theta: float
    mean_diff: float
    stderr: float
    threshold: float


def sample_directions(n: int, count: int, seed: int) -> DirectionSample:
    """Draw ``count`` uniform directions; deterministic per (n, count, seed)."""
    if n < 1 or count < 1:
        raise ValueError("n and count must be positive")
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((count, 2 * n))
    vecs = raw[:, 0::2] + 1j * raw[:, 1::2]
    norms = np.sqrt((np.abs(vecs) ** 2).sum(axis=1))
    if np.any(norms == 0):  # probability zero, but be explicit
        raise RuntimeError("degenerate Gaussian draw")
    vecs /= norms[:, None]
    directions = tuple(Direction(tuple(row)) for row in vecs)
    return DirectionSample(n=n, seed=int(seed), count=int(count), directions=directions)


# ---------------------------------------------------------------------------
# vectorized slice ensemble


@dataclass(frozen=True, eq=False)
class _Ensemble:
    """Slice data for the kept (non-indeterminate) directions of a sample."""

    total: int
    keep: np.ndarray  # (total,) bool
    g_coef: np.ndarray  # (kept, deg_g+1) complex, ascending
    h_coef: np.ndarray
    g_logroots: np.ndarray  # (kept, deg_g) float, +inf padding
    h_logroots: np.ndarray

    @property
    def kept(self) -> int:
        return self.g_coef.shape[0]

    @property
    def skipped(self) -> int:
        return self.total - self.kept


def _slice_coefficients(p: MultiPoly, dirs: np.ndarray) -> np.ndarray:
    count = dirs.shape[0]
    out = np.zeros((count, p.degree() + 1), dtype=complex)
    for exp, c in p.ordered_terms():
        w = np.full(count, c, dtype=complex)
        for j, e in enumerate(exp):
            if e:
                w *= dirs[:, j] ** e
        out[:, sum(exp)] += w
    return out


def _batched_roots(coef: np.ndarray) -> np.ndarray:
    """Roots of each row (ascending coefficients); NaN-padded to max degree."""
    count, width = coef.shape
    D = width - 1
    roots = np.full((count, D), np.nan, dtype=complex)
    if D == 0:
        return roots
    mags = np.abs(coef)
    significant = mags > (LEADING_TRIM * mags.max(axis=1))[:, None]
    eff = width - 1 - np.argmax(significant[:, ::-1], axis=1)
    for d in np.unique(eff):
        idx = np.nonzero(eff == d)[0]
        if d == 0:
            continue
        if d == 1:
            roots[idx, 0] = -coef[idx, 0] / coef[idx, 1]
            continue
        monic = coef[idx, :d] / coef[idx, d][:, None]
        comp = np.zeros((idx.size, d, d), dtype=complex)
        comp[:, np.arange(1, d), np.arange(d - 1)] = 1.0
        comp[:, :, -1] = -monic
        try:
            roots[idx, :d] = np.linalg.eigvals(comp)
        except np.linalg.LinAlgError as exc:
            raise RootFindingError(f"batched root extraction failed: {exc}") from exc
    return roots


def _log_moduli(roots: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        lm = np.log(np.abs(roots))
    return np.where(np.isnan(lm), np.inf, lm)


def _min_separation(gr: np.ndarray, hr: np.ndarray) -> np.ndarray:
    count = gr.shape[0]
    if gr.shape[1] == 0 or hr.shape[1] == 0:
        return np.full(count, np.inf)
    dist = np.abs(gr[:, :, None] - hr[:, None, :])
    dist = np.where(np.isnan(dist), np.inf, dist)
    return dist.reshape(count, -1).min(axis=1)


def _build_ensemble(F: MeroFunction, sample: DirectionSample, tol: float = SKIP_TOL) -> _Ensemble:
    if sample.n != F.n:
        raise ValueError("sample dimension does not match F")
    dirs = sample.as_array()
    g_coef = _slice_coefficients(F.numerator, dirs)
    h_coef = _slice_coefficients(F.denominator, dirs)
    g_roots = _batched_roots(g_coef)
    h_roots = _batched_roots(h_coef)
    keep = _min_separation(g_roots, h_roots) > tol
    return _Ensemble(
        total=sample.count,
        keep=keep,
        g_coef=g_coef[keep],
        h_coef=h_coef[keep],
        g_logroots=_log_moduli(g_roots[keep]),
        h_logroots=_log_moduli(h_roots[keep]),
    )


def _require_kept(ens: _Ensemble) -> None:
    if ens.kept == 0:
        raise AllDirectionsSkippedError(
            "all sampled directions were near-indeterminate (tol %.1e)" % SKIP_TOL
        )


def _n_integrated(logroots: np.ndarray, r: float) -> np.ndarray:
    """N(r) per direction: sum of log(r/|z_j|) over roots inside |z| <= r."""
    if logroots.shape[1] == 0:
        return np.zeros(logroots.shape[0])
    return np.maximum(math.log(r) - logroots, 0.0).sum(axis=1)


def _n_count(logroots: np.ndarray, t: float) -> np.ndarray:
    if logroots.shape[1] == 0:
        return np.zeros(logroots.shape[0])
    return (logroots <= math.log(t)).sum(axis=1).astype(float)


def _horner_rows(coef: np.ndarray, w: np.ndarray) -> np.ndarray:
    acc = np.broadcast_to(coef[:, -1:], (coef.shape[0], w.size)).copy()
    for k in range(coef.shape[1] - 2, -1, -1):
        acc *= w
        acc += coef[:, k : k + 1]
    return acc


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("STARFN_THREADS", "1")))
    except ValueError:
        return 1


def _star_values(ens: _Ensemble, r: float, thetas: Sequence[float], M: int) -> np.ndarray:
    """F* per kept direction at each theta: array (len(thetas), kept)."""
    splits = [_split_theta(float(t), M) for t in thetas]
    w = r * np.exp(1j * midpoint_angles(M))
    kept = ens.kept
    out = np.empty((len(splits), kept))
    chunk = max(64, int(2_000_000 // max(M, 1)))
    spans = [(lo, min(lo + chunk, kept)) for lo in range(0, kept, chunk)]

    def work(span: tuple[int, int]) -> None:
        lo, hi = span
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.log(np.abs(_horner_rows(ens.g_coef[lo:hi], w)))
            vals -= np.log(np.abs(_horner_rows(ens.h_coef[lo:hi], w)))
        vals, _ = sanitize_log_values(vals)
        vals.sort(axis=1)
        desc = vals[:, ::-1]
        prefix = np.cumsum(desc, axis=1)
        for ti, (k, frac) in enumerate(splits):
            v = prefix[:, k - 1] if k > 0 else np.zeros(hi - lo)
            if frac:
                v = v + frac * desc[:, k]
            out[ti, lo:hi] = v / M

    threads = _thread_count()
    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, spans))
    else:
        for span in spans:
            work(span)
    return out


def _estimate(values: np.ndarray, count_used: int) -> Estimate:
    mean = float(values.mean())
    if count_used > 1:
        stderr = float(values.std(ddof=1) / math.sqrt(count_used))
    else:
        stderr = 0.0
    return Estimate(mean=mean, stderr=stderr, count_used=count_used)


# ---------------------------------------------------------------------------
# public averaging operations


def star_several(
    F: MeroFunction,
    r: float,
    theta: float,
    sample: DirectionSample,
    M: int = 4096,
    tol: float = SKIP_TOL,
) -> Estimate:
    """Mean of T*(re^{i theta}, F_zeta) over the sample's directions."""
    if r <= 0:
        raise ValueError("r must be positive")
    ens = _build_ensemble(F, sample, tol)
    _require_kept(ens)
    totals = _star_values(ens, r, [theta], M)[0] + _n_integrated(ens.h_logroots, r)
    return _estimate(totals, ens.kept)


def counting_several(
    F: MeroFunction, r: float, a: float, sample: DirectionSample, tol: float = SKIP_TOL
) -> Estimate:
    """Mean of N(r, a; F_zeta) over the sample's directions."""
    if r <= 0:
        raise ValueError("r must be positive")
    ens = _build_ensemble(F, sample, tol)
    _require_kept(ens)
    logroots = _points_logroots(ens, a)
    return _estimate(_n_integrated(logroots, r), ens.kept)


def lelong_number(
    F: MeroFunction, t: float, a: float, sample: DirectionSample, tol: float = SKIP_TOL
) -> Estimate:
    """Mean of n(t, a; F_zeta): the density of the a-divisor at scale t."""
    if t <= 0:
        raise ValueError("t must be positive")
    ens = _build_ensemble(F, sample, tol)
    _require_kept(ens)
    logroots = _points_logroots(ens, a)
    return _estimate(_n_count(logroots, t), ens.kept)


def _points_logroots(ens: _Ensemble, a: float) -> np.ndarray:
    if a == 0:
        return ens.g_logroots
    if math.isinf(a):
        return ens.h_logroots
    raise ValueError("target a must be 0 or inf")


def star_grid(
    F: MeroFunction,
    r_values: Sequence[float],
    theta_values: Sequence[float],
    sample: DirectionSample,
    M: int = 4096,
    tol: float = SKIP_TOL,
) -> StarGrid:
    """Tabulate star_several on a rectangle, sharing one direction sample.

    Common random numbers: every cell is averaged over the same kept
    directions, so differences between neighboring cells are low-variance.
    """
    r_values = tuple(float(r) for r in r_values)
    theta_values = tuple(float(t) for t in theta_values)
    if any(r <= 0 for r in r_values):
        raise ValueError("radii must be positive")
    ens = _build_ensemble(F, sample, tol)
    _require_kept(ens)
    rows = []
    for r in r_values:
        fstar = _star_values(ens, r, theta_values, M)
        totals = fstar + _n_integrated(ens.h_logroots, r)[None, :]
        rows.append(tuple(_estimate(totals[ti], ens.kept) for ti in range(len(theta_values))))
    return StarGrid(
        r_values=r_values,
        theta_values=theta_values,
        cells=tuple(rows),
        sample=sample,
        skipped=ens.skipped,
    )


# ---------------------------------------------------------------------------
# subharmonicity verification


def _default_rho(r_values: Sequence[float], theta_values: Sequence[float]) -> float:
    """Half the minimum Euclidean spacing between adjacent grid points."""
    dr = np.diff(r_values)
    dth = np.diff(theta_values)
    spacings = list(dr)
    if dth.size:
        r_min = min(r_values)
        spacings.extend(2.0 * r_min * np.sin(dth / 2.0))
    if not spacings:
        raise ValueError("grid needs at least two points per axis")
    return 0.5 * float(min(spacings))


def subharmonicity_stats(
    F: MeroFunction,
    r_values: Sequence[float],
    theta_values: Sequence[float],
    sample: DirectionSample,
    M: int = 1024,
    rho: float | None = None,
    circle_nodes: int = 8,
    tol: float = SKIP_TOL,
) -> tuple[PointStat, ...]:
    """Discrete mean-value statistics of T*(., F) at interior grid points.

    For each interior z0 = r e^{i theta} the statistic is the average of
    T* over ``circle_nodes`` points of the circle |z - z0| = rho minus
    T*(z0), estimated per-direction with common random numbers.  The circle
    nodes are placed at angles theta + 2 pi c/C so that their radii
    |r + rho e^{2 pi i c/C}| are shared along grid rows — the evaluation is
    organized radius-by-radius.
    """
    r_values = tuple(float(r) for r in r_values)
    theta_values = tuple(float(t) for t in theta_values)
    nr, nt = len(r_values), len(theta_values)
    if nr < 3 or nt < 3:
        raise ValueError("need at least a 3x3 grid for interior points")
    if circle_nodes < 4:
        raise ValueError("need at least 4 circle nodes")
    if rho is None:
        rho = _default_rho(r_values, theta_values)
    if rho <= 0:
        raise ValueError("rho must be positive")
    interior_i = range(1, nr - 1)
    interior_j = range(1, nt - 1)
    for i in interior_i:
        for j in interior_j:
            if r_values[i] * math.sin(theta_values[j]) <= rho:
                raise ValueError(
                    f"test disk at (r={r_values[i]}, theta={theta_values[j]}) "
                    "leaves the upper half-plane"
                )

    ens = _build_ensemble(F, sample, tol)
    _require_kept(ens)
    kept = ens.kept
    C = circle_nodes
    psi = 2.0 * math.pi * np.arange(C) / C

    # accumulate per-direction circle sums, organized by shared radius
    acc = np.zeros((nr - 2, nt - 2, kept))
    tasks: dict[float, list[tuple[float, int, int]]] = {}
    for ii, i in enumerate(interior_i):
        q = r_values[i] + rho * np.exp(1j * psi)
        radii = np.abs(q)
        alphas = np.angle(q)
        for c in range(C):
            for jj, j in enumerate(interior_j):
                th = theta_values[j] + float(alphas[c])
                if not 0.0 <= th <= math.pi:
                    raise ValueError("circle node leaves the closed upper half-plane")
                tasks.setdefault(float(radii[c]), []).append((th, ii, jj))

    for radius, entries in tasks.items():
        thetas = [e[0] for e in entries]
        fstar = _star_values(ens, radius, thetas, M)
        totals = fstar + _n_integrated(ens.h_logroots, radius)[None, :]
        for row, (_, ii, jj) in zip(totals, entries):
            acc[ii, jj] += row

    stats = []
    for ii, i in enumerate(interior_i):
        thetas = [theta_values[j] for j in interior_j]
        fstar = _star_values(ens, r_values[i], thetas, M)
        centers = fstar + _n_integrated(ens.h_logroots, r_values[i])[None, :]
        for jj, j in enumerate(interior_j):
            diffs = acc[ii, jj] / C - centers[jj]
            est = _estimate(diffs, kept)
            stats.append(
                PointStat(
                    i=i,
                    j=j,
                    r=r_values[i],
                    theta=theta_values[j],
                    mean_diff=est.mean,
                    stderr=est.stderr,
                )
            )
    return tuple(stats)


def subharmonicity_report(
    F: MeroFunction,
    r_values: Sequence[float],
    theta_values: Sequence[float],
    sample: DirectionSample,
    M: int = 1024,
    rho: float | None = None,
    circle_nodes: int = 8,
    tol_quad: float = 1e-4,
    tol: float = SKIP_TOL,
) -> list[Violation]:
    """Interior points where the circle mean of T* undercuts the center.

    A subharmonic function satisfies mean >= center; a point is flagged when
    mean - center < -(3*stderr + tol_quad), i.e. beyond the Monte Carlo noise
    allowance plus the quadrature slack.
    """
    stats = subharmonicity_stats(
        F, r_values, theta_values, sample, M=M, rho=rho, circle_nodes=circle_nodes, tol=tol
    )
    violations = []
    for st in stats:
        threshold = -(3.0 * st.stderr + tol_quad)
        if st.mean_diff < threshold:
            violations.append(
                Violation(
                    i=st.i,
                    j=st.j,
                    r=st.r,
                    theta=st.theta,
                    mean_diff=st.mean_diff,
                    stderr=st.stderr,
                    threshold=threshold,
                )
            )
    return violations
