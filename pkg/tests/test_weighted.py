import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

import oracles
from zeta_ladder import (
    DomainError,
    MomentTable,
    MuFamily,
    PanelPolicy,
    WeightedMomentContext,
    integrate_weighted,
    laplace_fourth_moment,
    phi2_prime,
    phi2_second,
    weighted_fourth_moment,
    z4,
)
from zeta_ladder.weighted import j_kernel, phi2_second_parts

C0 = 1 / (2 * math.pi**2)


# ---------------------------------------------------------------------- mu


def test_mu_examples():
    assert abs(MuFamily().mu(math.e) - 4 * math.e) <= 1e-14
    assert abs(MuFamily().mu(math.e) - 10.8731) < 1e-4
    assert abs(MuFamily(2.0, 1.0).mu(math.e) - 4 * math.e**2) <= 1e-13
    assert abs(MuFamily().mu(100.0) - 1842.07) < 0.01


def test_mu_derivative_examples():
    d1, d2 = MuFamily().mu_derivatives(math.e)
    assert abs(d1 - 8.0) <= 1e-14
    assert abs(d2 - 4 / math.e) <= 1e-14


@pytest.mark.parametrize("family", [MuFamily(), MuFamily(1.0, 2.0), MuFamily(1.5, 1.0), MuFamily(2.0, 3.0)])
def test_mu_derivatives_against_finite_differences(family):
    y, h = 50.0, 1e-4
    d1, d2 = family.mu_derivatives(y)
    assert abs(oracles.central_difference(family.mu, y, h) / d1 - 1) <= 1e-8
    fd2 = oracles.central_difference(lambda v: family.mu_derivatives(v)[0], y, h)
    assert abs(fd2 / d2 - 1) <= 1e-7


def test_mu_is_increasing_and_admissible():
    ys = np.linspace(2, 5000, 400)
    for fam in (MuFamily(), MuFamily(1.0, 2.0), MuFamily(1.3, 1.7)):
        m = np.array([fam.mu(y) for y in ys])
        assert np.all(np.diff(m) > 0)
        # log^w2 y >= log y needs y >= e once w2 > 1
        big = ys >= math.e
        assert np.all(m[big] >= 4 * ys[big] * np.log(ys[big]) * (1 - 1e-15))
    m = np.array([MuFamily().mu(y) for y in ys])
    assert np.all(m >= 4 * ys * np.log(ys) * (1 - 1e-15))


@pytest.mark.parametrize("bad", [1.999, 0.0, -5.0, math.nan])
def test_mu_domain(bad):
    with pytest.raises(DomainError):
        MuFamily().mu(bad)


@pytest.mark.parametrize("w", [(0.5, 1.0), (1.0, 0.9), (math.inf, 1.0)])
def test_family_validation(w):
    with pytest.raises(DomainError):
        MuFamily(*w)


# ---------------------------------------------------------------------- W


def test_W_examples(ctx, w100_oracle):
    assert weighted_fourth_moment(10.0, ctx) > 0
    w100 = weighted_fourth_moment(100.0, ctx)
    assert abs(w100 / w100_oracle - 1) <= 1e-5
    assert weighted_fourth_moment(200.0, ctx) > w100


def test_W_against_direct_weighted_quadrature(ctx):
    # table route against integrate_weighted over the same range
    for x in (37.5, 250.0):
        direct = integrate_weighted(z4, x, 0.0, ctx.mu.mu(x))
        assert abs(weighted_fourth_moment(x, ctx) / direct.value - 1) <= 1e-7


@pytest.mark.parametrize("fixture", ["ctx", "ctx12"])
def test_W_strictly_increasing(fixture, request):
    c = request.getfixturevalue(fixture)
    w = [weighted_fourth_moment(y, c) for y in range(10, 1001, 10)]
    assert np.all(np.diff(w) > 0)


TAIL_50 = pytest.mark.xfail(
    strict=True,
    reason="with mu = 4y log y the dropped tail is 1.5e-6 of W at y=50 (below 1e-6 only from y ~ 53)",
)


@pytest.mark.parametrize(
    "fixture,y",
    [pytest.param("ctx", 50.0, marks=TAIL_50)]
    + [("ctx", y) for y in (55.0, 100.0, 300.0, 1000.0)]
    + [("ctx12", y) for y in (50.0, 100.0, 300.0, 1000.0)],
)
def test_truncation_soundness(fixture, y, request):
    c = request.getfixturevalue(fixture)
    w = weighted_fourth_moment(y, c)
    doubled, _ = c.table.weighted_moment(y, 2 * c.mu.mu(y))
    print(f"mu=({c.mu.omega1}, {c.mu.omega2}) y={y}: relative change {(doubled - w) / w:.3g}")
    assert abs(doubled - w) <= 1e-6 * w


@pytest.mark.parametrize("y", [50.0, 100.0, 1000.0])
def test_truncation_within_absolute_rule(ctx, y):
    # the truncation rule only promises a tail below 1/sqrt(delta) = sqrt(y)
    w = weighted_fourth_moment(y, ctx)
    doubled, _ = ctx.table.weighted_moment(y, 2 * ctx.mu.mu(y))
    assert 0 <= doubled - w <= math.sqrt(y)


def test_x_domain(ctx):
    with pytest.raises(DomainError):
        weighted_fourth_moment(1.5, ctx)


# ---------------------------------------------------------------- Laplace


def test_laplace_is_W_at_reciprocal(ctx):
    assert laplace_fourth_moment(0.01, ctx) == weighted_fourth_moment(100.0, ctx)


@pytest.mark.parametrize("bad", [0.0, -0.1, 0.51, math.nan])
def test_laplace_domain(ctx, bad):
    with pytest.raises(DomainError):
        laplace_fourth_moment(bad, ctx)


def test_laplace_tail_bound(ctx):
    d = 0.01
    U = ctx.mu.mu(1 / d)
    tail = integrate_weighted(z4, 1 / d, U, 2 * U).value
    assert tail <= 4 / (math.e * d * d) * math.exp(-d * U / 2)


def test_laplace_main_term_band(ctx):
    d = 1e-3
    ratio = laplace_fourth_moment(d, ctx) / (C0 / d * math.log(1 / d) ** 4)
    print(f"laplace ratio at delta=1e-3: {ratio:.6f}")
    assert 0.5 <= ratio <= 2.0


# --------------------------------------------------------------- phi2'


def test_phi2_prime_positive(ctx):
    assert phi2_prime(100.0, ctx) > 0


def test_phi2_prime_against_difference_of_W(ctx):
    h = 1e-3
    fd = oracles.central_difference(lambda y: weighted_fourth_moment(y, ctx), 100.0, h)
    assert abs(phi2_prime(100.0, ctx) / fd - 1) <= 1e-4


@pytest.mark.xfail(
    strict=True,
    reason="measured ratio 2.33 at y=1e3: the log^3 correction is about +130% of the leading term at this height",
)
def test_phi2_prime_leading_band_at_1e3(ctx):
    ratio = phi2_prime(1e3, ctx) / (C0 * math.log(1e3) ** 4)
    print(f"phi2'(1e3) / C0 log^4 = {ratio:.6f}")
    assert 0.5 <= ratio <= 2.0


def test_phi2_prime_approaches_leading_term(ctx):
    # not a band: the normalized value must fall toward 1 as y grows
    r = [phi2_prime(y, ctx) / (C0 * math.log(y) ** 4) for y in (1e3, 3e3, 1e4)]
    print("phi2' / C0 log^4 at 1e3, 3e3, 1e4:", r)
    assert r[0] > r[1] > r[2] > 1


# -------------------------------------------------------------- phi2''


@pytest.mark.parametrize("y", [100.0])
def test_g1_extrema(y):
    t_min, v_min = oracles.g1_min(y)
    t_max, v_max = oracles.g1_max(y)
    assert abs(j_kernel(t_min, y) / v_min - 1) <= 1e-12
    assert abs(j_kernel(t_max, y) / v_max - 1) <= 1e-12
    lo = minimize_scalar(lambda t: oracles.g1(t, y), bounds=(0, 2 * y), method="bounded", options={"xatol": 1e-9})
    hi = minimize_scalar(lambda t: -oracles.g1(t, y), bounds=(2 * y, 8 * y), method="bounded", options={"xatol": 1e-9})
    assert abs(lo.x - t_min) < 1e-5 * y and abs(hi.x - t_max) < 1e-5 * y


def test_phi2_second_against_difference_of_phi2_prime(ctx):
    h = 1e-2
    fd = oracles.central_difference(lambda y: phi2_prime(y, ctx), 100.0, h)
    assert abs(phi2_second(100.0, ctx) / fd - 1) <= 1e-3


def test_phi2_second_normalized_growth(ctx):
    def normalized(y):
        L = math.log(y)
        return abs(phi2_second(y, ctx)) * y / (L**4 * math.log(L) ** 2)

    a, b = normalized(1e3), normalized(1e4)
    print(f"normalized phi2'' at 1e3, 1e4: {a:.6g}, {b:.6g}")
    assert math.isfinite(a) and math.isfinite(b)
    assert b <= 10 * a


def test_boundary_part_is_tiny_for_default_family(ctx):
    # e^{-mu/y} = y^-4 makes the moving-limit terms negligible at these heights
    J, Q = phi2_second_parts(1e3, ctx)
    assert abs(Q) <= 1e-6 * abs(J)


@pytest.mark.parametrize("fixture", ["ctx", "ctx12"])
def test_derivative_chain_random_points(fixture, request):
    c = request.getfixturevalue(fixture)
    ys = np.random.default_rng(21).uniform(50, 1000, 8)
    for y in ys:
        fd1 = oracles.central_difference(lambda v: weighted_fourth_moment(v, c), y, 1e-3)
        assert abs(phi2_prime(y, c) / fd1 - 1) <= 1e-3
        fd2 = oracles.central_difference(lambda v: phi2_prime(v, c), y, 1e-3)
        assert abs(phi2_second(y, c) / fd2 - 1) <= 1e-3


def test_steeper_family_keeps_properties():
    ctx = WeightedMomentContext(MuFamily(1.5, 1.0))
    w = [weighted_fourth_moment(y, ctx) for y in (50.0, 100.0, 150.0)]
    assert w[0] < w[1] < w[2]
    fd = oracles.central_difference(lambda v: weighted_fourth_moment(v, ctx), 100.0, 1e-3)
    assert abs(phi2_prime(100.0, ctx) / fd - 1) <= 1e-4


def test_context_rejects_mismatched_table(evaluator):
    table = MomentTable(evaluator, PanelPolicy(rel_tol=1e-9))
    with pytest.raises(DomainError):
        WeightedMomentContext(MuFamily(), evaluator, PanelPolicy(), table)


def test_context_fingerprint_tracks_family(ctx, ctx12):
    assert ctx.fingerprint != ctx12.fingerprint
    assert ctx.fingerprint.startswith(ctx.table.fingerprint)
