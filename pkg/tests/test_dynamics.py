import numpy as np
import pytest

from ablattice.dynamics import (
    EvolutionParams,
    InterferenceGeometry,
    PacketSpec,
    evolve,
    fit_fringes,
    gaussian_packet,
    hamiltonian_apply,
    hamiltonian_matrix,
    pattern_shift,
    predicted_shift,
    run_interference,
    step_crank_nicolson,
)
from ablattice.fields import (
    FieldConfig,
    GaugeTransform,
    apply_gauge,
    random_config,
    wrap_angle,
)
from ablattice.lattice import build_lattice

MINI = InterferenceGeometry(
    nx=96,
    ny=96,
    barrier_row=28,
    slit_separation=28.0,
    slit_width=8.0,
    solenoid_center_y=34.0,
    solenoid_radius=4.0,
    screen_row=80,
)
MINI_PARAMS = EvolutionParams(
    mass=1.0,
    dt=0.2,
    steps=450,
    solver_tol=1e-10,
    absorber_width=10,
    absorber_strength=0.05,
)
MINI_PACKET = PacketSpec(center=(MINI.axis_x, 12.0), width=9.0, momentum=(0.0, 1.2))


def free_config(nx, ny, boundary="open", seed=None):
    lat = build_lattice(nx, ny, 1.0, boundary)
    if seed is not None:
        return random_config(lat, seed=seed)
    psi = np.ones((ny, nx), dtype=complex)
    ah = np.zeros((ny, nx if boundary == "periodic" else nx - 1))
    av = np.zeros((ny if boundary == "periodic" else ny - 1, nx))
    return FieldConfig(lat, psi, ah, av, np.ones((ny, nx), dtype=bool))


def test_hamiltonian_hermitian():
    c = free_config(10, 8, seed=3)
    h = hamiltonian_matrix(c, mass=1.0)
    assert abs(h - h.getH()).max() < 1e-14


def test_constant_field_in_kernel_periodic():
    c = free_config(8, 8, boundary="periodic")
    out = hamiltonian_apply(c, c.psi, mass=1.0)
    assert np.max(np.abs(out)) < 1e-14


def test_plane_wave_dispersion_periodic():
    nx = ny = 16
    c = free_config(nx, ny, boundary="periodic")
    kx, ky = 2.0 * np.pi * 3 / nx, 2.0 * np.pi * 1 / ny
    xs, ys = np.meshgrid(np.arange(nx), np.arange(ny))
    psi = np.exp(1j * (kx * xs + ky * ys))
    out = hamiltonian_apply(c, psi, mass=1.0)
    expected = (2.0 - np.cos(kx) - np.cos(ky)) * psi
    assert np.max(np.abs(out - expected)) < 1e-12


def test_hopping_gauge_covariance():
    c = free_config(10, 10, seed=7)
    lam = GaugeTransform.random(c.lattice, seed=8)
    c2 = apply_gauge(c, lam)
    phase = np.exp(1j * lam.lam)
    out1 = hamiltonian_apply(c, c.psi, mass=1.0)
    out2 = hamiltonian_apply(c2, phase * c.psi, mass=1.0)
    assert np.max(np.abs(out2 - phase * out1)) < 1e-12


def test_crank_nicolson_unitary():
    c = free_config(24, 24, seed=11)
    params = EvolutionParams(mass=1.0, dt=0.1, steps=200, solver_tol=1e-13)
    psi0 = gaussian_packet(c.lattice, PacketSpec((12.0, 12.0), 3.0, (0.5, 0.0)))
    psi, norms = evolve(c, psi0, params, record_norm=True)
    assert np.max(np.abs(norms - 1.0)) < 1e-9


def test_single_step_matches_implicit_equation():
    c = free_config(12, 12, seed=13)
    params = EvolutionParams(mass=1.0, dt=0.05, steps=1, solver_tol=1e-13)
    psi0 = gaussian_packet(c.lattice, PacketSpec((6.0, 6.0), 2.5, (0.0, 0.0)))
    psi1 = step_crank_nicolson(psi0, c, params)
    lhs = psi1 + 0.5j * params.dt * hamiltonian_apply(c, psi1, 1.0)
    rhs = psi0 - 0.5j * params.dt * hamiltonian_apply(c, psi0, 1.0)
    assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_evolution_gauge_covariant():
    c = free_config(16, 16, seed=17)
    lam = GaugeTransform.random(c.lattice, seed=18)
    params = EvolutionParams(mass=1.0, dt=0.1, steps=20, solver_tol=1e-13)
    psi0 = gaussian_packet(c.lattice, PacketSpec((8.0, 8.0), 2.5, (0.3, 0.1)))
    a = evolve(c, psi0, params)
    b = evolve(apply_gauge(c, lam), np.exp(1j * lam.lam) * psi0, params)
    assert np.max(np.abs(b - np.exp(1j * lam.lam) * a)) < 1e-8


def test_absorber_removes_outgoing_norm():
    c = free_config(32, 32)
    params = EvolutionParams(
        mass=1.0, dt=0.2, steps=150, solver_tol=1e-10, absorber_width=6, absorber_strength=0.1
    )
    psi0 = gaussian_packet(c.lattice, PacketSpec((16.0, 16.0), 3.0, (1.0, 0.0)))
    psi, norms = evolve(c, psi0, params, absorb=True, record_norm=True)
    assert norms[-1] < 0.5  # the packet left through the edge


def test_gaussian_packet_normalized():
    lat = build_lattice(32, 32, 1.0, "open")
    psi = gaussian_packet(lat, PacketSpec((15.5, 15.5), 4.0, (0.2, -0.1)))
    assert np.linalg.norm(psi) == pytest.approx(1.0)


def test_packet_width_below_resolution_rejected():
    lat = build_lattice(16, 16, 2.0, "open")
    with pytest.raises(ValueError):
        gaussian_packet(lat, PacketSpec((8.0, 8.0), 1.0, (0.0, 0.0)))


def test_predicted_shift_wraps():
    assert predicted_shift(np.pi / 2) == pytest.approx(np.pi / 2)
    assert predicted_shift(2.0 * np.pi) == pytest.approx(0.0, abs=1e-12)
    assert predicted_shift(3.0 * np.pi / 2) == pytest.approx(-np.pi / 2)


def test_geometry_row_ordering_enforced():
    with pytest.raises(ValueError):
        InterferenceGeometry(barrier_row=100, solenoid_center_y=50.0)


def test_fit_fringes_recovers_known_pattern():
    x = np.arange(300, dtype=float)
    env = np.exp(-((x - 150.0) ** 2) / (2 * 60.0**2))
    k_true, phi_true = 0.31, 0.9
    intensity = env * (1.0 + 0.7 * np.cos(k_true * x + phi_true))
    fit = fit_fringes(intensity)
    assert fit.k == pytest.approx(k_true, rel=0.02)
    assert fit.quality > 0.9
    # with the wavenumber pinned, the phase is recovered accurately
    pinned = fit_fringes(intensity, k=k_true)
    assert abs(wrap_angle(pinned.phase - phi_true)) < 0.02
    assert pinned.visibility == pytest.approx(0.7, rel=0.1)


def test_pattern_shift_recovers_displacement():
    x = np.arange(300, dtype=float)
    env = np.exp(-((x - 150.0) ** 2) / (2 * 60.0**2))
    k = 0.31
    ref = env * (1.0 + 0.7 * np.cos(k * x + 0.2))
    moved = env * (1.0 + 0.7 * np.cos(k * x + 0.2 - 1.1))
    assert pattern_shift(moved, ref, k) == pytest.approx(1.1, abs=0.05)


def test_interference_zero_flux_symmetric():
    ref = run_interference(MINI, MINI.flux_spec(0.0), MINI_PARAMS, MINI_PACKET)
    lo, hi = MINI.nx // 4, MINI.nx - MINI.nx // 4
    win = ref[lo:hi]
    assert np.max(np.abs(win - win[::-1])) / np.max(win) < 1e-8


def test_interference_shift_small_lattice():
    ref = run_interference(MINI, MINI.flux_spec(0.0), MINI_PARAMS, MINI_PACKET)
    fit = fit_fringes(ref)
    inten = run_interference(MINI, MINI.flux_spec(np.pi / 2), MINI_PARAMS, MINI_PACKET)
    shift = pattern_shift(inten, ref, fit.k)
    assert abs(wrap_angle(shift - np.pi / 2)) < 0.15
