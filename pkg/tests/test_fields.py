import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ablattice.errors import ZeroFieldRegionError
from ablattice.fields import (
    GaugeTransform,
    apply_gauge,
    circular_distance,
    extract_invariants,
    gauge_equivalent,
    random_config,
    reconstruct,
    wrap_angle,
)
from ablattice.lattice import build_lattice


@given(st.floats(-1e6, 1e6))
def test_wrap_angle_range(x):
    w = wrap_angle(x)
    assert -np.pi < w <= np.pi


@given(st.floats(-50.0, 50.0), st.integers(-5, 5))
def test_wrap_angle_periodic(x, n):
    assert wrap_angle(x + 2.0 * np.pi * n) == pytest.approx(wrap_angle(x), abs=1e-9)


@given(st.floats(-3.0, 3.0))
def test_wrap_angle_idempotent(x):
    assert wrap_angle(wrap_angle(x)) == pytest.approx(wrap_angle(x), abs=1e-12)


def test_wrap_angle_branch_convention():
    # pi maps to itself, -pi wraps to +pi: the interval is (-pi, pi]
    assert wrap_angle(np.pi) == pytest.approx(np.pi)
    assert wrap_angle(-np.pi) == pytest.approx(np.pi)
    assert wrap_angle(0.0) == 0.0


@given(st.floats(-10, 10), st.floats(-10, 10))
def test_circular_distance_symmetric_bounded(a, b):
    d = circular_distance(a, b)
    assert 0 <= d <= np.pi + 1e-12
    assert d == pytest.approx(circular_distance(b, a))


@settings(deadline=None, max_examples=30)
@given(st.integers(0, 10_000))
def test_invariants_unchanged_by_gauge(seed):
    lat = build_lattice(12, 10, 1.0, "open")
    c = random_config(lat, seed=seed)
    g = GaugeTransform.random(lat, seed=seed + 1)
    inv1 = extract_invariants(c)
    inv2 = extract_invariants(apply_gauge(c, g))
    assert np.max(np.abs(inv1.rho - inv2.rho)) < 1e-12
    assert np.max(circular_distance(inv1.dh, inv2.dh)) < 1e-12
    assert np.max(circular_distance(inv1.dv, inv2.dv)) < 1e-12


def test_constant_gauge_is_trivial_on_links():
    lat = build_lattice(8, 8, 1.0, "open")
    c = random_config(lat, seed=3)
    shifted = apply_gauge(c, GaugeTransform.constant(lat, 0.4))
    assert np.allclose(shifted.ah, c.ah)
    assert np.allclose(shifted.av, c.av)
    assert np.allclose(shifted.psi, np.exp(0.4j) * c.psi)


def test_gauge_equivalent_finds_witness():
    lat = build_lattice(10, 10, 1.0, "open")
    c = random_config(lat, seed=11)
    g = GaugeTransform.random(lat, seed=12)
    witness = gauge_equivalent(c, apply_gauge(c, g))
    assert witness is not None
    back = apply_gauge(c, witness)
    assert np.max(np.abs(back.psi - apply_gauge(c, g).psi)) < 1e-10


def test_gauge_equivalent_rejects_perturbed_link():
    lat = build_lattice(10, 10, 1.0, "open")
    c = random_config(lat, seed=21)
    other = c.copy()
    other.ah[4, 4] += 0.1
    assert gauge_equivalent(c, other) is None


def test_gauge_equivalent_rejects_perturbed_magnitude():
    lat = build_lattice(10, 10, 1.0, "open")
    c = random_config(lat, seed=22)
    other = c.copy()
    other.psi[5, 5] *= 1.01
    assert gauge_equivalent(c, other) is None


def test_reconstruct_round_trip():
    lat = build_lattice(12, 12, 1.0, "open")
    c = random_config(lat, seed=31, rho_min=0.1)
    rebuilt = reconstruct(extract_invariants(c))
    assert gauge_equivalent(rebuilt, c) is not None


def test_zero_field_region_reported():
    lat = build_lattice(8, 8, 1.0, "open")
    c = random_config(lat, seed=41)
    c.psi[3, 3] = 0.0
    with pytest.raises(ZeroFieldRegionError) as excinfo:
        extract_invariants(c)
    assert (3, 3) in excinfo.value.sites


def test_periodic_lattice_invariants():
    lat = build_lattice(8, 6, 1.0, "periodic")
    c = random_config(lat, seed=51)
    g = GaugeTransform.random(lat, seed=52)
    inv1 = extract_invariants(c)
    inv2 = extract_invariants(apply_gauge(c, g))
    assert np.max(circular_distance(inv1.dh, inv2.dh)) < 1e-12
    assert np.max(circular_distance(inv1.dv, inv2.dv)) < 1e-12
