import itertools

import numpy as np
import pytest

from conelab._lattice import kernel_matrix
from conelab.dp_oracle import (bridge_value, check_tilt_identity,
                               dp_evolve, dp_statistics, exit_position_law,
                               exit_time_pmf_rescaled, halfspace_1d, hazard_ratio,
                               survival_scan)
from conelab.errors import ConfigError, WindowTooSmallError
from conelab.model import StepLaw, cone_contains

ROOT3 = np.sqrt(3.0)


def enumerate_paths(law, cone, x0, n):
    """Brute-force path enumeration: survival and endpoint law at time n."""
    survival = 0.0
    endpoint = {}
    exits = {}
    for steps in itertools.product(range(len(law.probs)), repeat=n):
        pos = np.asarray(x0, dtype=int).copy()
        prob = 1.0
        alive = True
        for k in steps:
            prob *= law.probs[k]
            pos = pos + law.support[k]
            if not cone_contains(cone, pos[None, :])[0]:
                alive = False
                break
        if alive:
            survival += prob
            endpoint[tuple(pos)] = endpoint.get(tuple(pos), 0.0) + prob
        elif len(steps) == n:
            pass
    return survival, endpoint


def test_one_and_two_step_survival_exact(nn4, quadrant):
    series = dp_evolve(nn4, quadrant, [1, 1], 2, rescale_by=1.0, L=10)
    assert series.survival[1] == 0.25
    assert series.survival[2] == 5.0 / 32.0


def test_dp_matches_enumeration(nn4, quadrant):
    for n in (1, 2, 3, 4):
        target, endpoint = enumerate_paths(nn4, quadrant, [1, 1], n)
        series = dp_evolve(nn4, quadrant, [1, 1], n, rescale_by=1.0, L=12,
                           retain=[n])
        assert series.survival[n] == pytest.approx(target, abs=1e-15)
        table = series.tables[n]
        for pt, mass in endpoint.items():
            assert series.grid.value_at(table, np.array(pt)) == pytest.approx(
                mass, abs=1e-15)


def test_immediate_death(quadrant):
    law = StepLaw(support=np.array([[-2, 0], [0, -2]]), probs=np.array([0.5, 0.5]))
    series = dp_evolve(law, quadrant, [1, 1], 1, rescale_by=1.0, L=8)
    assert series.survival[1] == 0.0


def test_mass_conservation_and_monotonicity(ctx):
    series = ctx.series
    for n, table in series.tables.items():
        assert table.sum() == pytest.approx(series.survival[n], abs=1e-12)
    raw = series.survival * series.rescale_by ** np.arange(series.n_max + 1)
    assert np.all(np.diff(raw) <= 1e-15)
    assert np.all(series.survival >= 0.0)


def test_rescaled_series_stays_in_range(ctx):
    b = ctx.series.survival
    assert np.all((b > 1e-12) & (b < 1e12))


def test_dp_matches_kernel_power(nn4, quadrant):
    # independent oracle: sparse-kernel matrix power on the same window
    series = dp_evolve(nn4, quadrant, [2, 2], 6, rescale_by=1.0, L=12, retain=[6])
    kernel = kernel_matrix(series.grid, nn4.support, nn4.probs)
    vec = np.zeros(series.grid.n_states)
    vec[series.grid.index_of(np.array([2, 2]))] = 1.0
    for _ in range(6):
        vec = kernel.T @ vec
    table = np.zeros(series.grid.shape)
    table[series.grid.mask] = vec
    assert np.max(np.abs(table - series.tables[6])) < 1e-14


def test_chapman_kolmogorov(nn4, quadrant):
    # q^(m+n)(x, z) = sum_y q^(m)(x, y) q^(n)(y, z), every factor from the DP
    m, n = 3, 4
    x0 = np.array([2, 2])
    series = dp_evolve(nn4, quadrant, x0, m + n, rescale_by=1.0, L=14,
                       retain=[m, m + n])
    mid = series.tables[m]
    grid = series.grid
    targets = [np.array([1, 1]), np.array([2, 2]), np.array([3, 2])]
    totals = {tuple(z): 0.0 for z in targets}
    for y in grid.points():
        mass = grid.value_at(mid, y)
        if mass == 0.0:
            continue
        sub = dp_evolve(nn4, quadrant, y, n, rescale_by=1.0, L=14, retain=[n])
        for z in targets:
            totals[tuple(z)] += mass * sub.grid.value_at(sub.tables[n], z)
    for z in targets:
        direct = grid.value_at(series.tables[m + n], z)
        assert totals[tuple(z)] == pytest.approx(direct, abs=1e-11)


def test_time_reversal_identity(cramer_nn4, quadrant):
    # d^(n)(x, y) = sum_z d^(m)(x, z) f^(n-m)(y, z) with f the reversed walk
    tilted = cramer_nn4.tilted
    rev = tilted.reversed()
    x0, y0 = np.array([2, 3]), np.array([3, 2])
    m, n = 3, 7
    fwd = dp_evolve(tilted, quadrant, x0, n, rescale_by=1.0, L=14, retain=[m, n])
    bwd = dp_evolve(rev, quadrant, y0, n - m, rescale_by=1.0, L=14, retain=[n - m])
    acc = 0.0
    for z in fwd.grid.points():
        acc += (fwd.grid.value_at(fwd.tables[m], z)
                * bwd.grid.value_at(bwd.tables[n - m], z))
    direct = fwd.grid.value_at(fwd.tables[n], y0)
    assert acc == pytest.approx(direct, abs=1e-11)


def test_tilt_identity_hand_value(nn4, quadrant, cramer_nn4):
    # one-step check: P(tau > 1) = c * (1/4) * (e^{-h1} + e^{-h2}) = 1/4;
    # the solved tilt point carries its gradient residual into the value
    c, h = cramer_nn4.c, cramer_nn4.h
    value = c * 0.25 * (np.exp(-h[0]) + np.exp(-h[1]))
    assert value == pytest.approx(0.25, abs=1e-13)


def test_tilt_identity_full(nn4, quadrant, cramer_nn4):
    err = check_tilt_identity(nn4, cramer_nn4, quadrant, [1, 1], n_max=20)
    assert err <= 1e-12


def test_tilt_identity_rejects_long_horizon(nn4, quadrant, cramer_nn4):
    with pytest.raises(ConfigError):
        check_tilt_identity(nn4, cramer_nn4, quadrant, [1, 1], n_max=60)


def test_exit_law_one_step(nn4, quadrant):
    series = dp_evolve(nn4, quadrant, [1, 1], 1, rescale_by=1.0, L=8, retain=[0])
    law, outside = exit_position_law(series, 1)
    grid = series.grid
    assert grid.value_at(law, np.array([0, 1])) == pytest.approx(0.5, abs=1e-15)
    assert grid.value_at(law, np.array([1, 0])) == pytest.approx(0.5, abs=1e-15)
    assert law.sum() == pytest.approx(1.0, abs=1e-15)


def test_exit_mass_matches_pmf(ctx):
    series = ctx.series
    n = ctx.params.n_hi
    q = series.tables[n - 1]
    grid = series.grid
    from conelab._lattice import shift_add
    full = np.zeros(grid.shape)
    for z, p in zip(series.law.support, series.law.probs):
        shift_add(full, q, z, p)
    outside = ~cone_contains(series.cone, grid.coords.reshape(-1, 2)).reshape(grid.shape)
    exit_total = full[outside].sum()
    # the collected exit mass carries one less rescaling than the pmf
    expected = exit_time_pmf_rescaled(series, n) * series.rescale_by
    assert exit_total == pytest.approx(expected, rel=1e-12)


def test_bridge_two_step_enumeration(nn4, quadrant):
    series = dp_evolve(nn4, quadrant, [1, 1], 2, rescale_by=1.0, L=8,
                       retain=[1, 2])
    z = np.array([2, 2])
    value = bridge_value(series, 2, 0.5, [np.array([1, 1])], z)
    # only two surviving 2-step paths reach (2, 2), none through (1, 1)
    assert value == 0.0
    # through (2, 1): q1(x, (2,1)) q1((2,1), z) / q2(x, z)
    aux = {(2, 1): dp_evolve(nn4, quadrant, [2, 1], 1, rescale_by=1.0, L=8,
                             retain=[1])}
    v21 = bridge_value(series, 2, 0.5, [np.array([2, 1])], z, aux=aux)
    q2 = series.grid.value_at(series.tables[2], z)
    expected = (1.0 / 8.0) * (1.0 / 8.0) / q2
    assert v21 == pytest.approx(expected, rel=1e-12)


def test_hazard_limit(ctx):
    measured = hazard_ratio(ctx.series, 300)
    assert measured == pytest.approx(2.0 / ROOT3 - 1.0, rel=0.02)


def test_window_monitor_raises(nn4, quadrant, cramer_nn4):
    with pytest.raises(WindowTooSmallError) as err:
        dp_evolve(cramer_nn4.tilted, quadrant, [1, 1], 200, rescale_by=1.0, L=10)
    assert err.value.suggested_L > 10


def test_start_validation(nn4, quadrant):
    with pytest.raises(ConfigError, match="cone"):
        dp_evolve(nn4, quadrant, [0, 1], 5)
    with pytest.raises(ConfigError, match="window"):
        dp_evolve(nn4, quadrant, [1, 70], 5, L=60)


def test_statistics_dispatcher(ctx):
    series = ctx.series
    out = dp_statistics(series, [
        {"kind": "survival", "n": 300},
        {"kind": "exit_time_pmf", "n": 300},
        {"kind": "hazard", "n": 300},
        {"kind": "conditional", "n": 300},
        {"kind": "exit_position", "n": 300},
        {"kind": "bridge", "n": 300, "t": 0.5, "A": [np.array([1, 1])],
         "z": np.array([2, 2])},
    ])
    assert out[0]["rescaled"] == series.survival[300]
    assert out[2]["value"] == hazard_ratio(series, 300)
    assert out[3]["law"].sum() == pytest.approx(1.0, abs=1e-12)
    assert out[4]["law"].sum() == pytest.approx(1.0, abs=1e-12)
    assert out[5]["value"] > 0.0
    with pytest.raises(ConfigError):
        dp_statistics(series, [{"kind": "nope"}])


def test_survival_scan_matches_forward_dp(cramer_nn4, quadrant):
    starts = [(1, 1), (3, 2), (5, 5)]
    scan = survival_scan(cramer_nn4.tilted, quadrant, starts, 40)
    for row, x0 in zip(scan, starts):
        fwd = dp_evolve(cramer_nn4.tilted, quadrant, x0, 40, rescale_by=1.0, L=80)
        assert np.max(np.abs(row - fwd.survival)) < 1e-12


def test_halfspace_projection(nn4):
    series = halfspace_1d(nn4, np.array([1.0, 0.0]), 1, 50)
    assert series.rescale_by == pytest.approx(ROOT3 / 4.0 + 0.5, abs=1e-14)
    assert series.survival[1] * series.rescale_by == pytest.approx(5.0 / 8.0,
                                                                   abs=1e-15)
    # projected law is {+1: 1/8, -1: 3/8, 0: 1/2}
    law = series.law
    got = {int(z[0]): p for z, p in zip(law.support, law.probs)}
    assert got == {1: pytest.approx(1 / 8), -1: pytest.approx(3 / 8),
                   0: pytest.approx(1 / 2)}


def test_halfspace_rejects_bad_projections(nn4):
    with pytest.raises(ConfigError, match="integer"):
        halfspace_1d(nn4, np.array([0.5, 0.0]), 1, 50)
    with pytest.raises(ConfigError, match="negative"):
        halfspace_1d(nn4, np.array([-1.0, 0.0]), 1, 50)


def test_raw_survival_log(ctx):
    series = ctx.series
    n = 300
    log_p = series.raw_survival_log(n)
    assert log_p == pytest.approx(n * np.log(series.rescale_by)
                                  + np.log(series.survival[n]), rel=1e-15)
