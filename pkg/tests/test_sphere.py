import math

import numpy as np
import pytest

from starfn.funcdef import MeroFunction, MultiPoly, linear_form, parse_function, parse_poly
from starfn.slicing import Direction, counting_record, slice_divisor
from starfn.sphere import (
    AllDirectionsSkippedError,
    DirectionSample,
    Estimate,
    StarGrid,
    counting_several,
    lelong_number,
    sample_directions,
    star_grid,
    star_several,
    subharmonicity_report,
    subharmonicity_stats,
)
from starfn.starcore import slice_star_total

RATIO = parse_function("(1 - z1) / (1 - z2)", 2)
ONE_PLUS_Z1 = parse_function("1 + z1", 2)

# E[log+(2|zeta_1|)] for uniform zeta on S^3: |zeta_1|^2 ~ Uniform(0,1), so
# the mean is (1/2) * int_{1/4}^{1} log(4u) du = log 2 - 3/8.
LOG_PLUS_MEAN = math.log(2.0) - 0.375


def test_sample_directions_determinism_and_symmetry():
    a = sample_directions(2, 400, seed=42)
    b = sample_directions(2, 400, seed=42)
    assert a.skipped == 0
    assert all(x.components == y.components for x, y in zip(a.directions, b.directions))
    c = sample_directions(2, 400, seed=43)
    assert any(x.components != y.components for x, y in zip(a.directions, c.directions))

    # symmetry: E|zeta_1|^2 = 1/2 on S^3
    big = sample_directions(2, 10_000, seed=42)
    mods = np.abs(big.as_array()[:, 0]) ** 2
    stderr = mods.std(ddof=1) / math.sqrt(mods.size)
    assert abs(mods.mean() - 0.5) <= 3 * stderr

    circle = sample_directions(1, 25, seed=0)
    assert all(len(d.components) == 1 for d in circle.directions)
    assert circle.as_array().shape == (25, 1)

    with pytest.raises(ValueError):
        sample_directions(2, 0, seed=1)
    with pytest.raises(ValueError):
        DirectionSample(n=2, seed=1, count=3, directions=a.directions[:2])


def test_estimate_validation():
    with pytest.raises(ValueError):
        Estimate(mean=0.0, stderr=0.0, count_used=0)
    with pytest.raises(ValueError):
        Estimate(mean=0.0, stderr=-1e-3, count_used=5)


def test_constant_function_means_are_exactly_zero():
    sample = sample_directions(2, 200, seed=5)
    one = MeroFunction.one(2)
    for est in (
        star_several(one, 2.0, 1.0, sample, M=64),
        counting_several(one, 2.0, math.inf, sample),
        lelong_number(one, 3.0, 0, sample),
    ):
        assert est.mean == 0.0
        assert est.stderr == 0.0
        assert est.count_used == 200


def test_star_theta_zero_equals_counting_infinity_exactly():
    sample = sample_directions(2, 1500, seed=11)
    s = star_several(RATIO, 2.0, 0.0, sample, M=256)
    c = counting_several(RATIO, 2.0, math.inf, sample)
    # same summands, same reduction -> identical, not merely close
    assert s.mean == c.mean
    assert s.stderr == c.stderr
    assert s.count_used == c.count_used


def test_counting_matches_per_direction_formula_and_integral():
    sample = sample_directions(2, 20_000, seed=7)
    est = counting_several(RATIO, 2.0, math.inf, sample)
    assert est.count_used == sample.count  # X = {zeta1 = zeta2} is never hit here

    # oracle: the slice pole sits at 1/zeta2, so N(2,inf) = max(0, log(2|zeta2|))
    s = np.abs(sample.as_array()[:, 1])
    oracle = np.maximum(0.0, np.log(2.0 * s))
    assert abs(est.mean - oracle.mean()) <= 1e-9

    # and the 1-D integral over the known distribution of |zeta2|
    assert abs(est.mean - LOG_PLUS_MEAN) <= 4 * est.stderr
    assert est.stderr < 3e-3


def test_star_path_and_counting_path_agree_on_log_plus():
    # T*(-r) = N(r,0): the star estimate at theta=pi and the zero-counting
    # estimate on an independent sample measure the same number.
    s1 = sample_directions(2, 4000, seed=101)
    s2 = sample_directions(2, 4000, seed=202)
    star = star_several(ONE_PLUS_Z1, 2.0, math.pi, s1, M=2048)
    cnt = counting_several(ONE_PLUS_Z1, 2.0, 0, s2)
    assert abs(star.mean - cnt.mean) <= 3 * (star.stderr + cnt.stderr)
    assert abs(cnt.mean - LOG_PLUS_MEAN) <= 4 * cnt.stderr


def test_star_several_matches_bruteforce_slice_loop():
    F = parse_function("(1 + z1 - 0.5*z2 + 0.25*z1*z2) / (1 + 0.3*z2^2)", 2)
    sample = sample_directions(2, 32, seed=3)
    r, theta, M = 1.7, 1.1, 2048
    est = star_several(F, r, theta, sample, M=M)

    totals = [slice_star_total(F, z, r, theta, M=M).total for z in sample.directions]
    assert est.count_used == 32
    assert abs(est.mean - np.mean(totals)) <= 1e-9
    assert abs(est.stderr - np.std(totals, ddof=1) / math.sqrt(32)) <= 1e-9


def test_one_variable_reduces_to_classical_slice():
    F = parse_function("(1 + z1) / (1 - 0.4*z1)", 1)
    sample = sample_directions(1, 64, seed=9)
    est = star_several(F, 1.0, math.pi / 2, sample, M=4096)
    classical = slice_star_total(F, Direction((1 + 0j,)), 1.0, math.pi / 2, M=4096).total
    # the integrand in the sphere average is rotation invariant on S^1, so
    # every direction reproduces the zeta=1 value up to node placement
    assert est.stderr <= 1e-3
    assert abs(est.mean - classical) <= 3 * est.stderr + 1e-3


def test_lelong_number_tail_and_small_t():
    sample = sample_directions(2, 4000, seed=13)
    tail = lelong_number(ONE_PLUS_Z1, 1e3, 0, sample)
    assert tail.mean >= 0.99
    inner = lelong_number(ONE_PLUS_Z1, 0.5, 0, sample)
    assert inner.mean == 0.0  # root modulus 1/|zeta1| >= 1 always

    with pytest.raises(ValueError):
        lelong_number(ONE_PLUS_Z1, -1.0, 0, sample)
    with pytest.raises(ValueError):
        counting_several(ONE_PLUS_Z1, 2.0, 1.0, sample)  # a must be 0 or inf


def test_counting_increment_equals_lelong_integral():
    # N(r2) - N(r1) = int_{r1}^{r2} n(t)/t dt, checked with Simpson on the
    # same sample (the per-direction identity is exact; quadrature only has
    # to resolve the smooth mean t -> mean n(t))
    sample = sample_directions(2, 4000, seed=21)
    r1, r2 = 1.5, 2.5
    lhs = (
        counting_several(ONE_PLUS_Z1, r2, 0, sample).mean
        - counting_several(ONE_PLUS_Z1, r1, 0, sample).mean
    )
    nodes = 33
    ts = np.linspace(r1, r2, nodes)
    weights = np.ones(nodes)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    weights *= (ts[1] - ts[0]) / 3.0
    ests = [lelong_number(ONE_PLUS_Z1, t, 0, sample) for t in ts]
    rhs = sum(w * e.mean / t for w, e, t in zip(weights, ests, ts))
    stderr_budget = sum(w * e.stderr / t for w, e, t in zip(weights, ests, ts))
    lhs_stderr = max(
        counting_several(ONE_PLUS_Z1, r, 0, sample).stderr for r in (r1, r2)
    )
    assert abs(lhs - rhs) <= 3 * (lhs_stderr + stderr_budget) + 3e-3


def test_star_grid_column_identities():
    sample = sample_directions(2, 800, seed=31)
    radii = (1.5, 2.0, 2.5)
    thetas = (0.0, math.pi / 2, math.pi)
    grid = star_grid(RATIO, radii, thetas, sample, M=2048)

    assert grid.skipped == 0
    for i, r in enumerate(radii):
        col0 = grid.cells[i][0]
        ninf = counting_several(RATIO, r, math.inf, sample)
        assert col0.mean == ninf.mean and col0.stderr == ninf.stderr

        colpi = grid.cells[i][2]
        nzero = counting_several(RATIO, r, 0, sample)
        assert abs(colpi.mean - nzero.mean) <= 1e-3  # Jensen quadrature only

        # theta -> T* is concave per direction, hence in the mean
        midpoint = 0.5 * (grid.cells[i][0].mean + grid.cells[i][2].mean)
        assert grid.cells[i][1].mean >= midpoint - 1e-12


def test_star_grid_validation():
    sample = sample_directions(2, 16, seed=1)
    with pytest.raises(ValueError):
        star_grid(RATIO, (2.0, 1.0), (0.0, 1.0), sample, M=64)[0]
    with pytest.raises(ValueError):
        star_grid(RATIO, (-1.0, 1.0), (0.0, 1.0), sample, M=64)
    with pytest.raises(ValueError):
        star_several(RATIO, 0.0, 1.0, sample, M=64)
    est = Estimate(mean=0.0, stderr=0.0, count_used=1)
    with pytest.raises(ValueError):
        StarGrid(
            r_values=(1.0, 2.0),
            theta_values=(1.0, 0.0),
            cells=((est, est), (est, est)),
            sample=sample,
            skipped=0,
        )


def test_all_directions_skipped_raises():
    shared_root = parse_function("(1 - z1) / (1 - z1)", 2)
    sample = sample_directions(2, 8, seed=2)
    with pytest.raises(AllDirectionsSkippedError):
        counting_several(shared_root, 2.0, math.inf, sample)


def _random_rational(rng, max_deg=4, terms=5):
    def random_poly():
        d = {}
        for _ in range(terms):
            e1 = int(rng.integers(0, max_deg + 1))
            e2 = int(rng.integers(0, max_deg + 1 - e1))
            if e1 == e2 == 0:
                continue
            d[(e1, e2)] = complex(rng.normal(), rng.normal())
        d[(0, 0)] = 1.0 + 0j
        return MultiPoly(2, d)

    return MeroFunction.from_polys(random_poly(), random_poly())


def test_skipped_fraction_is_tiny_for_random_rationals():
    rng = np.random.default_rng(2024)
    sample = sample_directions(2, 10_000, seed=77)
    for _ in range(3):
        F = _random_rational(rng)
        est = counting_several(F, 2.0, math.inf, sample)
        assert sample.count - est.count_used <= 10  # <= 1e-3 of the sample


def _compose(p, mat):
    rows = [linear_form(tuple(mat[i]), 2) for i in range(2)]
    out = MultiPoly.zero(2)
    for exp, c in p.terms.items():
        term = MultiPoly.constant(2, c)
        for row, e in zip(rows, exp):
            term = term * row**e
        out = out + term
    return out


def test_unitary_invariance_of_sphere_average():
    rng = np.random.default_rng(55)
    A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    U, _ = np.linalg.qr(A)
    FU = MeroFunction.from_polys(
        _compose(RATIO.numerator, U), _compose(RATIO.denominator, U)
    )
    s1 = sample_directions(2, 4000, seed=60)
    s2 = sample_directions(2, 4000, seed=61)
    a = star_several(RATIO, 2.0, 1.0, s1, M=2048)
    b = star_several(FU, 2.0, 1.0, s2, M=2048)
    assert abs(a.mean - b.mean) <= 4 * (a.stderr + b.stderr)


def test_empirical_continuity_at_regular_direction():
    # zeta0 = (0.8, 0.6) is not indeterminate for RATIO; the slice star total
    # should converge along directions approaching it.
    zeta0 = Direction((0.8 + 0j, 0.6 + 0j))
    base = slice_star_total(RATIO, zeta0, 2.0, 1.0, M=4096).total
    v0 = np.array([0.8, 0.6], dtype=complex)
    step = np.array([0.3, -0.4], dtype=complex)  # tangent-ish perturbation
    gaps = []
    for dist in (1e-2, 1e-3, 1e-4):
        vk = v0 + dist * step / np.linalg.norm(step)
        zk = Direction.of(vk)
        assert np.linalg.norm(np.array(zk.components) - v0) <= 2 * dist
        gaps.append(abs(slice_star_total(RATIO, zk, 2.0, 1.0, M=4096).total - base))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] <= 1e-3


def test_counting_jump_at_indeterminacy_point():
    # along zeta_k = (r_k, s_k) -> (1/sqrt2, 1/sqrt2), N(2,inf) stays
    # log 2 + log s_k, while at the limit the slice cancels and N = 0:
    # the jump is exactly log 2 + log(1/sqrt2) = log sqrt2.
    for s in (0.72, 0.709, 0.7072):
        r = math.sqrt(1.0 - s * s)
        zk = Direction((r + 0j, s + 0j))
        rec = counting_record(RATIO, zk, 2.0, math.inf)
        assert abs(rec.big_N - (math.log(2.0) + math.log(s))) <= 1e-9
    zeta0 = Direction.of((1.0, 1.0))
    rec0 = counting_record(RATIO, zeta0, 2.0, math.inf)
    assert rec0.big_N == 0.0
    jump = math.log(2.0) + math.log(1.0 / math.sqrt(2.0))
    assert abs(jump - math.log(math.sqrt(2.0))) <= 1e-15
    assert len(slice_divisor(RATIO, zeta0).cancelled) == 1


GRID_R = tuple(np.linspace(0.5, 2.0, 5))
GRID_TH = tuple(np.linspace(0.3, math.pi - 0.3, 5))


def test_subharmonicity_constant_function_all_zero():
    sample = sample_directions(2, 300, seed=8)
    stats = subharmonicity_stats(MeroFunction.one(2), GRID_R, GRID_TH, sample, M=128)
    assert len(stats) == 9
    assert all(st.mean_diff == 0.0 and st.stderr == 0.0 for st in stats)
    assert subharmonicity_report(MeroFunction.one(2), GRID_R, GRID_TH, sample, M=128) == []


def test_subharmonicity_harmonic_form_is_mean_value_flat():
    # F(Z) = P(Z.eta) with P=(1+u/2)^2, eta=(1,2): the sphere average is
    # harmonic, so circle means match centers up to quadrature noise.
    F = parse_function("1 + z1 + 2*z2 + 0.25*z1^2 + z1*z2 + z2^2", 2)
    sample = sample_directions(2, 1500, seed=88)
    stats = subharmonicity_stats(F, GRID_R, GRID_TH, sample, M=512)
    assert subharmonicity_report(F, GRID_R, GRID_TH, sample, M=512) == []
    for st in stats:
        assert abs(st.mean_diff) <= 3 * st.stderr + 1e-3


def test_subharmonicity_generic_product_strictly_positive_somewhere():
    F = parse_function("(1 + z1) * (1 + 2*z2)", 2)
    sample = sample_directions(2, 1500, seed=99)
    assert subharmonicity_report(F, GRID_R, GRID_TH, sample, M=512) == []
    stats = subharmonicity_stats(F, GRID_R, GRID_TH, sample, M=512)
    assert any(st.mean_diff > 3 * st.stderr and st.mean_diff > 0 for st in stats)


def test_subharmonicity_input_validation():
    sample = sample_directions(2, 32, seed=4)
    with pytest.raises(ValueError):
        subharmonicity_stats(RATIO, (1.0, 2.0), GRID_TH, sample, M=64)
    with pytest.raises(ValueError):
        # disk of this radius pokes below the real axis near theta=0.05
        subharmonicity_stats(
            RATIO, (0.5, 1.0, 1.5), (0.01, 0.05, 0.1), sample, M=64, rho=0.2
        )
    with pytest.raises(ValueError):
        subharmonicity_stats(RATIO, GRID_R, GRID_TH, sample, M=64, circle_nodes=2)


def test_thread_env_does_not_change_results(monkeypatch):
    sample = sample_directions(2, 3000, seed=123)
    radii = (1.0, 2.0)
    thetas = (0.5, 1.5, 2.5)

    def snapshot():
        grid = star_grid(RATIO, radii, thetas, sample, M=2048)
        return [(c.mean, c.stderr, c.count_used) for row in grid.cells for c in row]

    monkeypatch.delenv("STARFN_THREADS", raising=False)
    sequential = snapshot()
    monkeypatch.setenv("STARFN_THREADS", "4")
    threaded = snapshot()
    assert sequential == threaded  # bit-identical, not just close
