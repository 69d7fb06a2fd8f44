import math

import numpy as np
import pytest

import oracles
from zeta_ladder import (
    DenseLadder,
    DomainError,
    LadderPoint,
    chord_slope,
    find_zero,
    hardy_z,
    integrate,
    inverse_ladder,
    phi2_derivative,
    reverse_interval,
    solve_phi2,
)

BRACKET_100 = pytest.mark.xfail(
    strict=True,
    reason="phi2(100) = 74.56, so |phi2 - T| = 25.44 exceeds T/4 = 25; the bracket is an asymptotic statement",
)


def test_residual_at_500(ctx):
    p = solve_phi2(500.0, ctx)
    assert isinstance(p, LadderPoint)
    assert p.residual <= 1e-9


def test_bracket_at_1000(ctx):
    assert 800 < solve_phi2(1000.0, ctx).phi2 < 1250


def test_distance_from_T_at_1e4(ctx):
    T = 1e4
    C = abs(solve_phi2(T, ctx).phi2 - T) * math.log(T) / T
    print(f"|phi2(1e4) - 1e4| log T / T = {C:.6f}")
    assert math.isfinite(C) and C <= 10


def test_inverse_round_trips(ctx):
    y = solve_phi2(500.0, ctx).phi2
    assert abs(inverse_ladder(y, ctx) / 500.0 - 1) <= 1e-6
    T = inverse_ladder(500.0, ctx)
    assert abs(solve_phi2(T, ctx).phi2 / 500.0 - 1) <= 1e-6


def test_inverse_accepts_ladder_values_below_the_floor(ctx):
    y = solve_phi2(100.0, ctx).phi2
    assert y < 100
    assert abs(inverse_ladder(y, ctx) / 100.0 - 1) <= 1e-9


def test_inner_bracket_is_recorded(ctx):
    p = solve_phi2(1000.0, ctx)
    assert p.in_inner_bracket and p.in_bracket


def test_inverse_bracket_at_1000(ctx):
    assert 800 < inverse_ladder(1000.0, ctx) < 1250


def test_phi2_at_100_solves_the_defining_equation_by_oracle(ctx):
    # independent check that the bracket miss at T=100 is real
    p = solve_phi2(100.0, ctx)
    x = p.phi2
    i_ref = oracles.simpson_z4(0.0, 100.0, 1e-4)
    w_ref = oracles.simpson_z4(0.0, ctx.mu.mu(x), 5e-3, weight=lambda t: np.exp(-t / x))
    assert abs(w_ref / i_ref - 1) <= 1e-6
    assert 74 < x < 75


@pytest.mark.parametrize("T", [pytest.param(100.0, marks=BRACKET_100), 200.0, 500.0, 1000.0, 5000.0])
def test_bracket_invariant(ctx, T):
    p = solve_phi2(T, ctx)
    assert p.in_bracket


def test_grid_monotone_with_small_residuals(ctx):
    grid = np.arange(100.0, 5001.0, 100.0)
    pts = [solve_phi2(T, ctx) for T in grid]
    values = np.array([p.phi2 for p in pts])
    assert np.all(np.diff(values) > 0)
    assert max(p.residual for p in pts) <= 1e-9
    # every point from 200 on sits inside the bracket; 100 is covered above
    assert all(p.in_bracket for p in pts[1:])


def test_round_trip_random(ctx):
    for T in np.random.default_rng(9).uniform(100, 5000, 20):
        y = solve_phi2(T, ctx).phi2
        assert abs(inverse_ladder(y, ctx) - T) <= 1e-6 * T


def test_derivative_vanishes_at_a_zero(ctx):
    grid = np.linspace(1000.0, 1002.0, 401)
    z = hardy_z(grid)
    i = int(np.flatnonzero(np.sign(z[:-1]) != np.sign(z[1:]))[0])
    gamma = find_zero(grid[i], grid[i + 1])
    assert phi2_derivative(gamma, ctx) <= 1e-8


def test_derivative_nonnegative(ctx):
    ts = np.random.default_rng(13).uniform(100, 3000, 100)
    assert all(phi2_derivative(t, ctx) >= 0 for t in ts)


def test_mean_derivative_matches_chord(ctx):
    dense = DenseLadder.for_heights(ctx, 1000.0, 1100.0)
    mean = integrate(dense.derivative, 1000.0, 1100.0, ctx.policy).value / 100.0
    chord = (solve_phi2(1100.0, ctx).phi2 - solve_phi2(1000.0, ctx).phi2) / 100.0
    assert abs(mean / chord - 1) <= 1e-3


def test_derivative_consistency_on_random_intervals(ctx):
    rng = np.random.default_rng(17)
    for _ in range(5):
        a = rng.uniform(150, 3000)
        b = a + rng.uniform(10, 300)
        dense = DenseLadder.for_heights(ctx, a, b)
        total = integrate(dense.derivative, a, b, ctx.policy).value
        exact = solve_phi2(b, ctx).phi2 - solve_phi2(a, ctx).phi2
        assert abs(total / exact - 1) <= 1e-3


def test_dense_ladder_matches_pointwise_solves(ctx):
    dense = DenseLadder.for_heights(ctx, 1000.0, 1500.0)
    ts = np.random.default_rng(2).uniform(1000, 1500, 12)
    got = dense.phi2(ts)
    ref = np.array([solve_phi2(t, ctx, tol=1e-12).phi2 for t in ts])
    assert np.max(np.abs(got / ref - 1)) <= 1e-9
    assert dense.w_tail <= 1e-12


def test_dense_ladder_range_is_enforced(ctx):
    dense = DenseLadder(ctx, 500.0, 600.0)
    with pytest.raises(DomainError):
        dense.phi2(5000.0)


def test_reverse_interval_examples(ctx):
    r = reverse_interval(1000.0, 100.0, ctx)
    assert abs(solve_phi2(r.T_ring, ctx).phi2 - 1000.0) <= 1e-6 * 1000
    assert abs(solve_phi2(r.TU_ring, ctx).phi2 - 1100.0) <= 1e-6 * 1100
    assert r.T_ring < r.TU_ring
    big = reverse_interval(1e4, 1e3, ctx)
    ratio = (big.TU_ring - big.T_ring) / 1e3
    print(f"reverse interval width / U at T=1e4: {ratio:.6f}")
    assert 0.5 <= ratio <= 2.0


def test_chord_examples(ctx):
    s3 = chord_slope(1e3, 1e3**0.93, ctx)
    s4 = chord_slope(1e4, 1e4**0.93, ctx)
    print(f"chord slopes: {s3:.6f} at 1e3, {s4:.6f} at 1e4")
    assert s3 > 0 and s4 > 0
    assert abs(s3 - 1) <= 5 / math.log(1e3)
    assert abs(s4 - 1) <= abs(s3 - 1) + 0.1


@pytest.mark.parametrize(
    "call",
    [
        lambda c: solve_phi2(99.0, c),
        lambda c: inverse_ladder(49.0, c),
        lambda c: phi2_derivative(10.0, c),
        lambda c: reverse_interval(1000.0, 1001.0, c),
        lambda c: reverse_interval(1000.0, 0.0, c),
        lambda c: chord_slope(1000.0, -1.0, c),
        lambda c: solve_phi2(math.nan, c),
    ],
)
def test_domain_gates(ctx, call):
    with pytest.raises(DomainError):
        call(ctx)


@pytest.mark.parametrize("T", [300.0, 2000.0])
def test_steeper_family_round_trip(ctx12, T):
    p = solve_phi2(T, ctx12)
    assert p.residual <= 1e-9
    assert abs(inverse_ladder(p.phi2, ctx12) - T) <= 1e-6 * T
