"""Measures, restrictions, grid fields, mollifiers, and file round-trips."""

import math

import numpy as np
import pytest

from gmtkit import fileio
from gmtkit.dyadic import Box, DyadicCube, Region
from gmtkit.fields import GridField, MollifierSpec, UnderResolvedKernelError, scalar_field
from gmtkit.gauges import PowerGauge, PowerLogGauge, TableGauge
from gmtkit.measures import (AtomicMeasure, SignedAtomicMeasure, WeightedRestriction,
                             full_restriction, tv_distance, zero_restriction)


BOX = Box((0.0, 0.0), 1.0)


def test_tv_distance_examples():
    mu = AtomicMeasure(Box((0.0,), 1.0), [[0.1], [0.6]], [3.0, 1.0])
    assert tv_distance(mu, full_restriction(mu)) == 0.0
    assert tv_distance(mu, zero_restriction(mu)) == mu.total_mass
    nu = WeightedRestriction(mu, [0.5, 1.0])
    assert tv_distance(mu, nu) == pytest.approx(1.5)
    # conservation: removed + kept = total, exactly
    assert tv_distance(mu, nu) + nu.mass == mu.total_mass


def test_tv_distance_mismatched_base():
    mu = AtomicMeasure(Box((0.0,), 1.0), [[0.1]], [1.0])
    other = AtomicMeasure(Box((0.0,), 1.0), [[0.2]], [1.0])
    nu = WeightedRestriction(other, [1.0])
    with pytest.raises(ValueError):
        tv_distance(mu, nu)


def test_restriction_domination(rng):
    mu = AtomicMeasure(BOX, rng.random((10, 2)) * 0.99, rng.uniform(0.1, 1, 10))
    nu = WeightedRestriction(mu, rng.random(10))
    for _ in range(20):
        level = int(rng.integers(0, 5))
        idx = tuple(int(rng.integers(0, 2**level)) for _ in range(2))
        cube = DyadicCube(level, idx)
        assert nu.cube_mass(cube) <= mu.cube_mass(cube) + 1e-12


def test_signed_measure_disjoint_supports():
    pos = AtomicMeasure(BOX, [[0.25, 0.25]], [1.0])
    neg = AtomicMeasure(BOX, [[0.25, 0.25]], [2.0])
    with pytest.raises(ValueError):
        SignedAtomicMeasure(pos, neg)
    ok = SignedAtomicMeasure(pos, AtomicMeasure(BOX, [[0.75, 0.75]], [2.0]))
    assert ok.total_variation == 3.0
    assert ok.net_mass == -1.0


def test_measure_roundtrip(tmp_path):
    mu = AtomicMeasure(BOX, [[0.1, 0.9], [1 / 3, 2 / 7]], [0.123456789012345, 2.0])
    path = tmp_path / "mu.json"
    fileio.write_measure(mu, path)
    back = fileio.read_measure(path)
    assert np.array_equal(back.positions, mu.positions)
    assert np.array_equal(back.masses, mu.masses)
    assert back.box == mu.box

    signed = SignedAtomicMeasure(mu, AtomicMeasure(BOX, [[0.5, 0.5]], [math.pi]))
    spath = tmp_path / "signed.json"
    fileio.write_measure(signed, spath)
    back2 = fileio.read_measure(spath)
    assert np.array_equal(back2.negative.masses, signed.negative.masses)


def test_gauge_roundtrip(tmp_path):
    for gauge in (PowerGauge(1.5, normalized=True), PowerLogGauge(1.0, 2.0),
                  TableGauge([(0.0, 0.0), (0.25, 0.125), (1.0, 1.0)])):
        path = tmp_path / "g.json"
        fileio.write_gauge(gauge, path)
        assert fileio.read_gauge(path) == gauge


def test_region_roundtrip(tmp_path):
    region = Region(2, [DyadicCube(2, (1, 3)), DyadicCube(4, (0, 15))])
    path = tmp_path / "r.json"
    fileio.write_region(region, path)
    assert fileio.read_region(path) == region


def test_field_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(3)
    field = GridField(BOX, 3, rng.standard_normal((8, 8)))
    fileio.write_field(field, tmp_path / "phi")
    back = fileio.read_field(tmp_path / "phi")
    assert back.level == 3 and back.box == BOX and back.rank == "scalar"
    assert np.array_equal(back.values, field.values)

    vec = GridField(BOX, 2, rng.standard_normal((2, 4, 4)))
    fileio.write_field(vec, tmp_path / "V.json")
    back2 = fileio.read_field(tmp_path / "V")
    assert back2.rank == "vector"
    assert np.array_equal(back2.values, vec.values)


def test_field_quadrature_and_interpolation():
    field = scalar_field(BOX, 5, lambda p: np.ones(p.shape[0]))
    assert field.quadrature() == pytest.approx(1.0)
    assert field.abs_quadrature() == pytest.approx(1.0)
    # linear function interpolates exactly away from the boundary band
    lin = scalar_field(BOX, 5, lambda p: 2.0 * p[:, 0] - p[:, 1])
    pts = np.array([[0.3, 0.4], [0.52, 0.18], [0.5, 0.5]])
    assert np.allclose(lin.interpolate(pts), 2 * pts[:, 0] - pts[:, 1], atol=1e-12)


def test_field_shape_validation():
    with pytest.raises(ValueError):
        GridField(BOX, 3, np.zeros((8, 7)))


def test_mollifier_unit_mass_and_support():
    for dim in (1, 2, 3):
        spec = MollifierSpec(dim, 0.3)
        # continuum normalization: radial quadrature of the profile is 1
        from scipy import integrate
        from gmtkit.fields import unit_sphere_area
        val, _ = integrate.quad(
            lambda r: r ** (dim - 1) * float(spec.profile(np.array([[r] + [0.0] * (dim - 1)]))[0]),
            0.0, spec.scale, epsabs=1e-12, epsrel=1e-12)
        assert unit_sphere_area(dim) * val == pytest.approx(1.0, abs=1e-6)
        # supported in the closed ball of radius delta
        outside = np.array([[spec.scale * 1.001] + [0.0] * (dim - 1)])
        assert spec.profile(outside)[0] == 0.0
        assert spec.enclosed_mass(spec.scale) == pytest.approx(1.0)
        assert spec.enclosed_mass(0.0) == 0.0


def test_mollifier_under_resolved():
    spec = MollifierSpec(2, 0.01)
    with pytest.raises(UnderResolvedKernelError):
        spec.stencil(0.25)
