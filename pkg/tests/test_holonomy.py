import numpy as np
import pytest

from ablattice.errors import NotContractibleError
from ablattice.fields import (
    GaugeTransform,
    apply_gauge,
    circular_distance,
    extract_invariants,
    random_config,
)
from ablattice.holonomy import (
    FluxSpec,
    all_plaquette_fluxes,
    coulomb_gauge_fix,
    holonomy,
    interior_divergence,
    plaquette_flux,
    solenoid_config,
    stokes_residual,
    unitary_gauge_fix,
    unitary_links_match_invariants,
)
from ablattice.lattice import Loop, build_lattice


def make_solenoid(total_flux=1.3, n=24, radius=2.5):
    lat = build_lattice(n, n, 1.0, "open")
    spec = FluxSpec(center=((n - 1) / 2, (n - 1) / 2), radius=radius, total_flux=total_flux)
    return lat, spec, solenoid_config(lat, spec)


def test_holonomy_encircling_solenoid():
    lat, spec, c = make_solenoid(1.3)
    loop = Loop.rectangle(lat, 4, 4, 19, 19)
    # independent check: sum of enclosed plaquette fluxes
    enclosed = float(np.sum(all_plaquette_fluxes(c)[4:19, 4:19]))
    res = holonomy(c, loop)
    assert res.raw == pytest.approx(enclosed, abs=1e-12)
    assert res.raw == pytest.approx(1.3, abs=1e-10)


def test_holonomy_outside_solenoid_vanishes():
    lat, spec, c = make_solenoid(1.3)
    loop = Loop.rectangle(lat, 1, 1, 5, 5)  # misses the flux disk
    assert holonomy(c, loop).raw == pytest.approx(0.0, abs=1e-12)


def test_holonomy_gauge_invariant():
    lat, spec, c = make_solenoid(0.8)
    loop = Loop.rectangle(lat, 3, 3, 20, 20)
    g = GaugeTransform.random(lat, seed=5)
    assert holonomy(apply_gauge(c, g), loop).raw == pytest.approx(
        holonomy(c, loop).raw, abs=1e-10
    )


def test_flux_uniform_on_disk_zero_outside():
    lat, spec, c = make_solenoid(1.3)
    interior = spec.interior_plaquettes(lat)
    per = 1.3 / len(interior)
    fluxes = all_plaquette_fluxes(c)
    for p in interior:
        assert plaquette_flux(c, p) == pytest.approx(per, abs=1e-12)
    outside = np.ones_like(fluxes, dtype=bool)
    for (px, py) in interior:
        outside[py, px] = False
    assert np.max(np.abs(fluxes[outside])) < 1e-12


def test_flux_plaquettes_fully_excised():
    lat, spec, c = make_solenoid(1.0)
    excised = set(spec.excised_sites(lat))
    for p in spec.interior_plaquettes(lat):
        assert all(s in excised for s in lat.plaquette_corners(p))


def test_flux_quantum_wraps_to_zero():
    lat, spec, c = make_solenoid(2.0 * np.pi)
    res = holonomy(c, Loop.rectangle(lat, 4, 4, 19, 19))
    assert res.raw == pytest.approx(2.0 * np.pi, abs=1e-10)
    assert res.wrapped == pytest.approx(0.0, abs=1e-10)


def test_solenoid_must_not_touch_boundary():
    lat = build_lattice(10, 10, 1.0, "open")
    with pytest.raises(ValueError):
        solenoid_config(lat, FluxSpec(center=(1.0, 5.0), radius=2.5, total_flux=1.0))


def test_stokes_on_random_configs():
    lat = build_lattice(16, 16, 1.0, "open")
    rng = np.random.default_rng(0)
    for i in range(50):
        c = random_config(lat, seed=i)
        x0, y0 = rng.integers(0, 10, size=2)
        x1 = rng.integers(x0 + 1, 15)
        y1 = rng.integers(y0 + 1, 15)
        loop = Loop.rectangle(lat, int(x0), int(y0), int(x1), int(y1))
        assert stokes_residual(c, loop) <= 1e-10


def test_stokes_rejects_loop_around_excised_block():
    lat, spec, c = make_solenoid(1.3)
    with pytest.raises(NotContractibleError):
        stokes_residual(c, Loop.rectangle(lat, 4, 4, 19, 19))


def test_coulomb_gauge_zeroes_interior_divergence():
    lat, spec, c = make_solenoid(1.3)
    fixed = coulomb_gauge_fix(c, tol=1e-10)
    assert interior_divergence(fixed) < 1e-10
    # same physics: invariants agree
    inv1, inv2 = extract_invariants(c), extract_invariants(fixed)
    assert np.max(circular_distance(inv1.dh, inv2.dh)) < 1e-9
    assert np.max(circular_distance(inv1.dv, inv2.dv)) < 1e-9


def test_coulomb_gauge_random_config():
    lat = build_lattice(20, 14, 1.0, "open")
    c = random_config(lat, seed=9)
    fixed = coulomb_gauge_fix(c, tol=1e-9)
    assert interior_divergence(fixed) < 1e-9


def test_unitary_gauge_makes_psi_real():
    lat = build_lattice(12, 12, 1.0, "open")
    c = random_config(lat, seed=17)
    fixed = unitary_gauge_fix(c)
    assert np.all(fixed.psi.imag == 0.0)
    assert np.all(fixed.psi.real[fixed.mask] > 0)


def test_unitary_gauge_links_equal_negated_invariants():
    lat = build_lattice(12, 12, 1.0, "open")
    c = random_config(lat, seed=23)
    assert unitary_links_match_invariants(c) < 1e-10


def test_negative_radius_rejected():
    with pytest.raises(ValueError):
        FluxSpec(center=(5.0, 5.0), radius=-1.0, total_flux=1.0)
