"""Canonical products, Taylor-coefficient structure, and the harmonic form.

One-variable meromorphic functions whose zeros sit on a single ray and poles
on the opposite ray can be written f(z) = P(e^{i theta_hat} z) with

    P(u) = e^{gamma u} * prod_m (1 + u/r_m) / prod_m (1 - u/s_m),

gamma >= 0, r_m, s_m > 0.  Their Taylor data has a rigid structure: with
c(1) = gamma + sum 1/r_m + sum 1/s_m and
c(k) = sum (-1)^{k+1}/r_m^k + sum 1/s_m^k for k >= 2,

    f^{(m+1)}(0) = sum_{k=0}^{m} binom(m,k) k! c(k+1) e^{i(k+1) theta_hat}
                   f^{(m-k)}(0),

and d_k = f^{(k)}(0) e^{-ik theta_hat} is real.  In several variables the
star-function average is harmonic (not merely subharmonic) exactly when
F(Z) = P(Z . eta) for such a P; this module detects and verifies that form:
the homogeneous parts of the series of F must satisfy P_k = c_k P_1^k with
real c_k, and the reconstructed one-variable P must have its zeros on one
ray and poles on the opposite ray.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from math import comb, factorial
from typing import Sequence

import numpy as np

from .funcdef import MeroFunction, MultiPoly, homogeneous_parts
from .slicing import Direction
from .sphere import _default_rho
from .starcore import slice_star_total

__all__ = [
    "CanonicalProduct",
    "TaylorCoeffs",
    "HarmonicForm",
    "DetectionReport",
    "load_canonical_product",
    "product_taylor_coeffs",
    "detect_harmonic_form",
    "verify_harmonic_form",
    "ray_alignment",
    "slice_harmonicity_test",
]

#: absolute tolerance on Im(c_k) when certifying profile coefficients
REAL_TOL = 1e-9
#: angular tolerance (radians) for the ray geometry of the reconstructed P
RAY_TOL = 1e-6


@dataclass(frozen=True)
class CanonicalProduct:
    """f(z) = P(e^{i rotation} z) with P built from gamma, {r_m}, {s_m}."""

    gamma: float
    rotation: float
    zero_moduli: tuple[float, ...]
    pole_moduli: tuple[float, ...]

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        object.__setattr__(self, "zero_moduli", tuple(float(r) for r in self.zero_moduli))
        object.__setattr__(self, "pole_moduli", tuple(float(s) for s in self.pole_moduli))
        if any(r <= 0 for r in self.zero_moduli + self.pole_moduli):
            raise ValueError("zero/pole moduli must be positive")


@dataclass(frozen=True)
class TaylorCoeffs:
    """Taylor data of a canonical product at 0.

    coeffs[k] = f^{(k)}(0)/k!; c_sums[k] = c(k) for k >= 1 (index 0 unused,
    kept 0.0); d_values[k] = f^{(k)}(0) e^{-ik theta_hat}, certified real.
    """

    K: int
    coeffs: tuple[complex, ...]
    c_sums: tuple[float, ...]
    d_values: tuple[float, ...]

    def __post_init__(self):
        if self.K < 0 or len(self.coeffs) != self.K + 1:
            raise ValueError("coeffs must have length K+1")
        if self.coeffs[0] != 1:
            raise ValueError("coeffs[0] must be 1 (f(0) = 1)")


@dataclass(frozen=True)
class HarmonicForm:
    """F(Z) = P(Z . eta) with P(u) = sum_k profile[k] u^k (c0 = c1 = 1)."""

    eta: tuple[complex, ...]
    profile: tuple[complex, ...]
    residual: float

    def __post_init__(self):
        if all(e == 0 for e in self.eta) and self.profile != (1 + 0j,):
            raise ValueError("eta = 0 forces the trivial profile (F == 1)")


@dataclass(frozen=True)
class DetectionReport:
    detected: bool
    form: HarmonicForm | None
    per_degree_residuals: tuple[float, ...]
    ray: tuple[float, float] | None  # (theta_hat, max angular deviation)

    def __post_init__(self):
        if self.detected and self.form is None:
            raise ValueError("a positive detection must carry its form")


def load_canonical_product(source) -> CanonicalProduct:
    """Read {"gamma": g, "theta": t, "zeros": [...], "poles": [...]}."""
    if isinstance(source, dict):
        data = source
    elif isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            data = json.load(fh)
    else:
        data = json.load(source)
    return CanonicalProduct(
        gamma=float(data.get("gamma", 0.0)),
        rotation=float(data.get("theta", 0.0)),
        zero_moduli=tuple(data.get("zeros", ())),
        pole_moduli=tuple(data.get("poles", ())),
    )


def product_taylor_coeffs(cp: CanonicalProduct, K: int) -> TaylorCoeffs:
    """Taylor coefficients of f up to order K via the c(k) recursion."""
    if K < 0:
        raise ValueError("K must be >= 0")
    rm = np.asarray(cp.zero_moduli)
    sm = np.asarray(cp.pole_moduli)
    c = [0.0] * (K + 1)
    if K >= 1:
        c[1] = cp.gamma + float((1.0 / rm).sum()) + float((1.0 / sm).sum())
    for k in range(2, K + 1):
        c[k] = float(((-1.0) ** (k + 1) / rm**k).sum()) + float((1.0 / sm**k).sum())

    # The recursion f^{(m+1)} = sum C(m,k) k! c(k+1) e^{i(k+1)th} f^{(m-k)}
    # factors the phases exactly: with d_j = f^{(j)}(0) e^{-ij th} it reads
    # d_{m+1} = sum C(m,k) k! c(k+1) d_{m-k} in real arithmetic.  Running it
    # on the d's keeps the reality of d_k exact instead of burying it under
    # phase-power roundoff.
    phase = complex(math.cos(cp.rotation), math.sin(cp.rotation))
    d_real = [1.0] + [0.0] * K
    for m in range(K):
        d_real[m + 1] = sum(
            comb(m, k) * factorial(k) * c[k + 1] * d_real[m - k] for k in range(m + 1)
        )
    derivs = [d_real[k] * phase**k for k in range(K + 1)]

    d_values = []
    for k, f_k in enumerate(derivs):
        d_k = f_k * phase ** (-k)
        if abs(d_k.imag) > 1e-12 * (1.0 + abs(d_k)):
            raise ArithmeticError(f"d_{k} = {d_k} failed the reality certificate")
        d_values.append(d_k.real)

    coeffs = tuple(f_k / factorial(k) for k, f_k in enumerate(derivs))
    return TaylorCoeffs(
        K=K, coeffs=coeffs, c_sums=tuple(c), d_values=tuple(d_values)
    )


# ---------------------------------------------------------------------------
# several-variable detection


def _series_inverse(H: MultiPoly, K: int) -> MultiPoly:
    """Power series of 1/H modulo total degree K (requires H(0) = 1)."""
    Q = MultiPoly.constant(H.n, 1) - H  # valuation >= 1
    acc = MultiPoly.constant(H.n, 1)
    power = MultiPoly.constant(H.n, 1)
    for _ in range(K):
        power = (power * Q).truncated(K)
        if power.is_zero:
            break
        acc = acc + power
    return acc


def _coeff_norm(p: MultiPoly) -> float:
    return max((abs(c) for c in p.terms.values()), default=0.0)


def _trimmed(coeffs: Sequence[complex]) -> np.ndarray:
    arr = np.asarray(coeffs, dtype=complex)
    scale = np.abs(arr).max()
    keep = len(arr)
    while keep > 1 and abs(arr[keep - 1]) <= 1e-10 * scale:
        keep -= 1
    return arr[:keep]


def _pade_split(profile: Sequence[complex], num_deg: int, den_deg: int):
    """Split a series into numerator/denominator of the given degrees."""
    c = list(profile) + [0j] * (num_deg + den_deg + 1 - len(profile))
    if den_deg == 0:
        return _trimmed(c[: num_deg + 1]), np.array([1 + 0j])
    A = np.empty((den_deg, den_deg), dtype=complex)
    rhs = np.empty(den_deg, dtype=complex)
    for i in range(den_deg):
        m = num_deg + 1 + i
        rhs[i] = -c[m]
        for j in range(1, den_deg + 1):
            A[i, j - 1] = c[m - j] if m - j >= 0 else 0j
    try:
        b_tail = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        b_tail = np.linalg.lstsq(A, rhs, rcond=None)[0]
    den = np.concatenate(([1 + 0j], b_tail))
    num = np.array(
        [sum(den[j] * c[m - j] for j in range(min(m, den_deg) + 1)) for m in range(num_deg + 1)]
    )
    return _trimmed(num), _trimmed(den)


def _wrap_angle(a: float) -> float:
    """Reduce to (-pi, pi]."""
    w = math.remainder(a, 2.0 * math.pi)
    return math.pi if w == -math.pi else w


def ray_alignment(
    roots: Sequence[complex], poles: Sequence[complex], tol_angle: float = RAY_TOL
) -> tuple[float | None, bool, float]:
    """Check that roots share one argument and poles the opposite one.

    Returns (theta_hat, aligned, max deviation); theta_hat rotates the roots
    onto the negative real axis and the poles onto the positive one, i.e.
    theta_hat = pi - (common root argument).  Empty input is vacuously
    aligned with theta_hat = None (the pure-exponential case).
    """
    pts = [complex(z) for z in roots] + [-complex(w) for w in poles]
    if not pts:
        return None, True, 0.0
    if any(z == 0 for z in pts):
        raise ValueError("roots/poles at the origin are not representable")
    units = [z / abs(z) for z in pts]
    mean = sum(units)
    beta = math.atan2(mean.imag, mean.real) if abs(mean) > 1e-12 * len(units) else (
        math.atan2(units[0].imag, units[0].real)
    )
    max_dev = max(
        abs(_wrap_angle(math.atan2(u.imag, u.real) - beta)) for u in units
    )
    return _wrap_angle(math.pi - beta), max_dev <= tol_angle, max_dev


def detect_harmonic_form(F: MeroFunction, tol: float = REAL_TOL) -> DetectionReport:
    """Decide whether F(Z) = P(Z . eta) for a ray-structured P.

    The series of G/H is expanded to K = deg G + deg H.  eta is its degree-1
    part; the candidate c_k are read off at the coordinate probe maximizing
    |P_1|, and detection requires, for every k <= K,

        |Im c_k| <= tol  and  ||P_k - c_k P_1^k||_inf <= tol ||P_k||_inf,

    plus the ray geometry of the P reconstructed from (c_k) — the coefficient
    law alone cannot reject zeros spread over a full line.
    """
    n = F.n
    K = F.numerator.degree() + F.denominator.degree()
    series = (F.numerator * _series_inverse(F.denominator, K)).truncated(K)
    parts = homogeneous_parts(series, K).parts

    if K == 0:
        eta = (0j,) * n
    else:
        eta = tuple(
            parts[1].coefficient(tuple(int(i == j) for i in range(n))) for j in range(n)
        )
    if all(e == 0 for e in eta):
        if F.numerator == F.denominator:
            form = HarmonicForm(eta=(0j,) * n, profile=(1 + 0j,), residual=0.0)
            return DetectionReport(True, form, (), None)
        return DetectionReport(False, None, (), None)

    J = max(range(n), key=lambda j: abs(eta[j]))
    probe = tuple(1 + 0j if i == J else 0j for i in range(n))
    q = eta[J]
    P1 = parts[1]

    profile: list[complex] = [1 + 0j]
    residuals: list[float] = []
    coeff_ok = True
    p1_power = MultiPoly.constant(n, 1)
    for k in range(1, K + 1):
        p1_power = p1_power * P1
        norm_k = _coeff_norm(parts[k])
        c_k = parts[k].eval(probe) / q**k if norm_k else 0j
        if abs(c_k.imag) > tol:
            coeff_ok = False
        diff_norm = _coeff_norm(parts[k] - p1_power.scale(c_k))
        residuals.append(diff_norm / norm_k if norm_k else (0.0 if diff_norm == 0 else math.inf))
        if residuals[-1] > tol:
            coeff_ok = False
        profile.append(c_k)

    num, den = _pade_split(profile, F.numerator.degree(), F.denominator.degree())
    with np.errstate(all="ignore"):
        zeros = np.roots(num[::-1]) if len(num) > 1 else np.array([])
        pole_pts = np.roots(den[::-1]) if len(den) > 1 else np.array([])
    theta_hat, aligned, max_dev = ray_alignment(zeros, pole_pts)
    ray = (theta_hat if theta_hat is not None else 0.0, max_dev)

    detected = coeff_ok and aligned
    form = (
        HarmonicForm(eta=eta, profile=tuple(profile), residual=max(residuals, default=0.0))
        if detected
        else None
    )
    return DetectionReport(detected, form, tuple(residuals), ray)


def verify_harmonic_form(
    F: MeroFunction,
    form: HarmonicForm,
    trials: int = 1000,
    seed: int = 0,
    radius: float = 0.3,
) -> float:
    """Max of |F(Z) - P(Z.eta)| / (1 + |F(Z)|) over random polydisk points.

    Points landing on (numerical) poles of F are resampled with a bounded
    retry budget.
    """
    rng = np.random.default_rng(seed)
    n = F.n
    worst = 0.0
    for _ in range(trials):
        for _attempt in range(100):
            radii = radius * np.sqrt(rng.uniform(size=n))
            angles = rng.uniform(0.0, 2.0 * math.pi, size=n)
            Z = tuple(complex(ri * math.cos(a), ri * math.sin(a)) for ri, a in zip(radii, angles))
            if abs(F.denominator.eval(Z)) > 1e-12:
                break
        else:
            raise RuntimeError("could not sample away from the poles of F")
        u = sum(z * e for z, e in zip(Z, form.eta))
        p_val = 0j
        for c in reversed(form.profile):
            p_val = p_val * u + c
        f_val = F.eval(Z)
        worst = max(worst, abs(f_val - p_val) / (1.0 + abs(f_val)))
    return worst


def slice_harmonicity_test(
    F: MeroFunction,
    zeta: Direction,
    r_values: Sequence[float],
    theta_values: Sequence[float],
    M: int = 1024,
    tol: float = 1e-3,
    rho: float | None = None,
    circle_nodes: int = 8,
) -> bool:
    """Discrete mean-value EQUALITY check for T*(., F_zeta) on a grid.

    True iff |circle mean - center| <= tol at every interior grid point.
    The subharmonic inequality always holds; equality at every point is the
    signature of a harmonic slice.
    """
    r_values = tuple(float(r) for r in r_values)
    theta_values = tuple(float(t) for t in theta_values)
    if len(r_values) < 3 or len(theta_values) < 3:
        raise ValueError("need at least a 3x3 grid for interior points")
    if rho is None:
        rho = _default_rho(r_values, theta_values)
    psi = 2.0 * math.pi * np.arange(circle_nodes) / circle_nodes
    for i in range(1, len(r_values) - 1):
        offsets = r_values[i] + rho * np.exp(1j * psi)
        radii = np.abs(offsets)
        alphas = np.angle(offsets)
        for j in range(1, len(theta_values) - 1):
            r0, th0 = r_values[i], theta_values[j]
            if r0 * math.sin(th0) <= rho:
                raise ValueError("test disk leaves the upper half-plane")
            center = slice_star_total(F, zeta, r0, th0, M=M).total
            ring = 0.0
            for R, al in zip(radii, alphas):
                ring += slice_star_total(F, zeta, float(R), th0 + float(al), M=M).total
            if abs(ring / circle_nodes - center) > tol:
                return False
    return True
