"""Dyadic content DP, density maxima, and concentration profiles."""

import math

import numpy as np
import pytest

from conftest import brute_profile_value, random_measure, random_region
from gmtkit.content import (InfeasibleCoverError, concentration_profile, density_levels,
                            density_sup, dyadic_content, exhaustive_content)
from gmtkit.decompose import max_restriction
from gmtkit.dyadic import Box, DyadicCube, Region
from gmtkit.frostman import frostman_construct
from gmtkit.gauges import PowerGauge


H2T = PowerGauge(1.0, normalized=True)   # h(t) = 2t
HT = PowerGauge(1.0)                     # h(t) = t


def test_empty_region():
    res = dyadic_content(Region(1), HT, math.inf, 5)
    assert res.value == 0.0 and res.optimal_cover.is_empty


def test_single_cube_example():
    # one level-2 cube in [0,1], h(t) = 2t: r = 1/8, value 0.25
    region = Region(1, [DyadicCube(2, (1,))])
    res = dyadic_content(region, H2T, math.inf, 5)
    assert res.value == pytest.approx(0.25, rel=1e-12)
    assert list(res.optimal_cover) == [DyadicCube(2, (1,))]


def test_full_interval_all_levels_tie():
    # every level prices the full interval at 1; the DP returns 1 and the
    # coarse tie-break picks the root
    region = Region(1, [DyadicCube(0, (0,))])
    res = dyadic_content(region, H2T, math.inf, 8)
    assert res.value == pytest.approx(1.0, rel=1e-12)
    assert list(res.optimal_cover) == [DyadicCube(0, (0,))]


def test_value_equals_cover_price(rng):
    box = Box((0.0, 0.0), 1.0)
    for _ in range(25):
        region = random_region(rng, dim=2)
        res = dyadic_content(region, HT, math.inf, 6)
        price = res.cover_price(box, HT)
        assert price == pytest.approx(res.value, rel=1e-12)


def test_delta_cap_forces_descent():
    # a level-0 region with delta excluding levels 0..1 must split down
    region = Region(1, [DyadicCube(0, (0,))])
    r2 = Box((0.0,), 1.0).cube_radius(2)
    res = dyadic_content(region, HT, r2, 6)
    # 4 level-2 cubes at h(r) = 1/8 each
    assert res.value == pytest.approx(4 * r2, rel=1e-12)
    assert len(res.optimal_cover) == 4
    assert all(q.level == 2 for q in res.optimal_cover)


def test_delta_below_leaf_radius_infeasible():
    region = Region(1, [DyadicCube(2, (1,))])
    tiny = Box((0.0,), 1.0).cube_radius(9)
    with pytest.raises(InfeasibleCoverError):
        dyadic_content(region, HT, tiny, 8)


def test_dp_matches_exhaustive_oracle(rng):
    for _ in range(60):
        region = random_region(rng)
        box = Box((0.0,) * region.dim, 1.0)
        delta = math.inf if rng.random() < 0.5 else box.cube_radius(region.max_level())
        dp = dyadic_content(region, HT, delta, 6).value
        oracle = exhaustive_content(region, HT, delta, 6)
        assert dp == pytest.approx(oracle, abs=1e-12)


def test_monotonicity_in_delta_and_region(rng):
    box = Box((0.0,) * 2, 1.0)
    for _ in range(20):
        region = random_region(rng, dim=2)
        deltas = sorted([box.cube_radius(region.max_level()), box.cube_radius(0), math.inf])
        values = [dyadic_content(region, HT, d, 7).value for d in deltas]
        assert values[0] >= values[1] - 1e-12 >= values[2] - 2e-12
        # region monotonicity: drop a cube
        if len(region) > 1:
            sub = Region(2, list(region)[:-1])
            assert dyadic_content(sub, HT, math.inf, 7).value \
                <= dyadic_content(region, HT, math.inf, 7).value + 1e-12


def test_subadditivity(rng):
    for _ in range(20):
        a = random_region(rng, dim=2)
        b = random_region(rng, dim=2)
        va = dyadic_content(a, HT, math.inf, 6).value
        vb = dyadic_content(b, HT, math.inf, 6).value
        vu = dyadic_content(a.union(b), HT, math.inf, 6).value
        assert vu <= va + vb + 1e-12


# -- density ------------------------------------------------------------------

def test_density_single_atom_per_level():
    box = Box((0.0,), 1.0)
    from gmtkit.measures import AtomicMeasure
    mu = AtomicMeasure(box, [[0.3]], [1.0])
    table = density_levels(mu, HT, range(0, 5))
    assert [v for _, v in table] == pytest.approx([2.0**(l + 1) for l in range(5)])
    assert density_sup(mu, HT, math.inf, range(0, 5)) == pytest.approx(32.0)


def test_density_uniform_level6_with_cap():
    box = Box((0.0,), 1.0)
    from gmtkit.measures import AtomicMeasure
    pos = (np.arange(64)[:, None] + 0.5) / 64
    mu = AtomicMeasure(box, pos, np.full(64, 1 / 64))
    sup = density_sup(mu, PowerGauge(0.5), 0.25, range(0, 7))
    assert sup == pytest.approx(1.0, rel=1e-12)


def test_density_frostman_within_one():
    region = Region(2, [DyadicCube(0, (0, 0))])
    result = frostman_construct(region, HT, 5)
    table = density_levels(result.measure, HT, range(0, 6))
    assert all(v <= 1.0 + 1e-9 for _, v in table)


def test_density_empty_measure():
    from gmtkit.measures import empty_measure
    mu = empty_measure(Box((0.0,), 1.0))
    assert density_sup(mu, HT, math.inf, range(0, 4)) == 0.0


def test_density_shifted_grids_catch_straddlers():
    # two atoms hugging the midpoint: plain level-1 cubes see half the mass,
    # a half-shifted cube sees both atoms
    box = Box((0.0,), 1.0)
    from gmtkit.measures import AtomicMeasure
    mu = AtomicMeasure(box, [[0.499], [0.501]], [1.0, 1.0])
    plain = density_sup(mu, HT, math.inf, [1])
    shifted = density_sup(mu, HT, math.inf, [1], shifted_grids=True)
    assert shifted >= 2 * plain - 1e-12


def test_density_content_duality(rng):
    # density_sup <= c iff the capped restriction keeps everything
    box = Box((0.0, 0.0), 1.0)
    for _ in range(15):
        mu = random_measure(rng, box=box, n_atoms=int(rng.integers(2, 8)))
        delta = math.inf
        max_level = 4
        sup = density_sup(mu, HT, delta, range(0, max_level + 1))
        for c in (sup * 0.9, sup, sup * 1.1):
            if c <= 0:
                continue
            nu = max_restriction(mu, HT, c, delta, max_level)
            keeps_all = nu.mass == pytest.approx(mu.total_mass, rel=1e-12)
            assert keeps_all == (sup <= c * (1 + 1e-12))


# -- concentration profile ------------------------------------------------------

def test_profile_single_atom_jump():
    box = Box((0.0,), 1.0)
    from gmtkit.measures import AtomicMeasure
    mu = AtomicMeasure(box, [[0.3]], [1.0])
    r3 = box.cube_radius(3)  # 1/16
    prof = concentration_profile(mu, HT, math.inf, [0.0, r3 / 2, r3, 1.0], 3)
    values = dict(prof.entries)
    assert values[0.0] == 0.0
    assert values[r3 / 2] == 0.0
    assert values[r3] == 1.0
    assert values[1.0] == 1.0
    assert prof.exact


def test_profile_two_masses_depth1():
    # masses {3,1} in the two level-1 halves, h(t) = 2t: one level-1 cube
    # costs 0.5 and the best pick captures the mass-3 atom
    box = Box((0.0,), 1.0)
    from gmtkit.measures import AtomicMeasure
    mu = AtomicMeasure(box, [[0.2], [0.8]], [3.0, 1.0])
    prof = concentration_profile(mu, H2T, math.inf, [0.5], 1)
    assert prof.exact
    assert dict(prof.entries)[0.5] == pytest.approx(3.0)


def test_profile_matches_bruteforce(rng):
    box = Box((0.0,), 1.0)
    for _ in range(10):
        mu = random_measure(rng, box=box, dim=1, n_atoms=3)
        budgets = [0.0, 0.05, 0.1, 0.3, 1.0]
        prof = concentration_profile(mu, HT, math.inf, budgets, 3)
        assert prof.exact
        for b, v in prof.entries:
            assert v == pytest.approx(brute_profile_value(mu, HT, math.inf, b, 3), abs=1e-12)


def test_profile_envelope_upper_bounds_exact(rng):
    box = Box((0.0,), 1.0)
    for _ in range(6):
        mu = random_measure(rng, box=box, dim=1, n_atoms=3)
        budgets = [0.02, 0.08, 0.2, 0.6]
        exact = concentration_profile(mu, HT, math.inf, budgets, 3)
        envelope = concentration_profile(mu, HT, math.inf, budgets, 3, exact_node_limit=0)
        assert not envelope.exact
        for (b, ve), (_, vx) in zip(envelope.entries, exact.entries):
            assert ve >= vx - 1e-12
        # envelope vertices are attainable points: they match the exact value
        for c, m in envelope.vertices:
            assert m == pytest.approx(brute_profile_value(mu, HT, math.inf, c, 3), abs=1e-9)


def test_profile_monotone_and_endpoints(rng):
    mu = random_measure(rng, dim=2, n_atoms=6)
    budgets = np.linspace(0, 2, 9)
    prof = concentration_profile(mu, HT, math.inf, budgets, 4)
    vals = [v for _, v in prof.entries]
    assert vals[0] == 0.0
    assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))
    assert vals[-1] <= mu.total_mass + 1e-12


def test_profile_eta_inversion():
    box = Box((0.0,), 1.0)
    from gmtkit.measures import AtomicMeasure
    mu = AtomicMeasure(box, [[0.3]], [1.0])
    prof = concentration_profile(mu, HT, math.inf, [0.0, 1.0], 3)
    eta = prof.eta_for(0.5)
    # any region with content <= eta captures at most 0.5
    assert prof.value(eta) <= 0.5
    assert eta < box.cube_radius(3) + 1e-12
