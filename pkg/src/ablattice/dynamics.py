"""Norm-preserving evolution of the matter field and the interference run.

The kinetic term uses hopping with link phases (Peierls factors): excised
sites are hard walls that simply drop out of the hopping sums. Time
stepping is Crank-Nicolson; the linear system is rewritten against the
Hermitian positive-definite operator (1 + (dt/2)^2 H^2) so a plain
conjugate-gradient iteration applies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.ndimage import gaussian_filter1d
from scipy.signal import hilbert

from .errors import ConvergenceError, ExperimentFailureError
from .fields import FieldConfig, wrap_angle
from .holonomy import FluxSpec, all_plaquette_fluxes, solenoid_config
from .lattice import Lattice, build_lattice


@dataclass(frozen=True)
class EvolutionParams:
    mass: float = 1.0
    dt: float = 0.1
    steps: int = 100
    solver_tol: float = 1e-12
    absorber_width: int = 0
    absorber_strength: float = 0.0

    def __post_init__(self):
        if self.mass <= 0 or self.dt <= 0 or self.steps <= 0:
            raise ValueError("mass, dt and steps must be positive")
        if self.solver_tol <= 0:
            raise ValueError("solver_tol must be positive")


@dataclass(frozen=True)
class PacketSpec:
    center: tuple[float, float]
    width: float
    momentum: tuple[float, float]


@dataclass
class FringeResult:
    screen_row: int
    intensity: np.ndarray
    extracted_shift: float
    fit_quality: float
    fit_phase: float = 0.0
    fit_k: float = 0.0
    visibility: float = 0.0


def hamiltonian_matrix(c: FieldConfig, mass: float) -> sp.csr_matrix:
    """Sparse Hermitian Hamiltonian over all sites (inactive rows are zero)."""
    lat = c.lattice
    n = lat.n_sites
    coef = 1.0 / (2.0 * mass * lat.spacing**2)
    rows, cols, vals = [], [], []
    diag = np.zeros(n)

    def idx(ix, iy):
        return iy * lat.nx + ix

    hmask = c.hlink_mask()
    ys, xs = np.nonzero(hmask)
    for iy, ix in zip(ys, xs):
        s = idx(ix, iy)
        t = idx((ix + 1) % lat.nx, iy)
        a = c.ah[iy, ix]
        rows += [s, t]
        cols += [t, s]
        vals += [-coef * np.exp(-1j * a), -coef * np.exp(1j * a)]
        diag[s] += coef
        diag[t] += coef
    vmask = c.vlink_mask()
    ys, xs = np.nonzero(vmask)
    for iy, ix in zip(ys, xs):
        s = idx(ix, iy)
        t = idx(ix, (iy + 1) % lat.ny)
        a = c.av[iy, ix]
        rows += [s, t]
        cols += [t, s]
        vals += [-coef * np.exp(-1j * a), -coef * np.exp(1j * a)]
        diag[s] += coef
        diag[t] += coef
    h = sp.coo_matrix((vals, (rows, cols)), shape=(n, n), dtype=complex)
    return (h + sp.diags(diag)).tocsr()


def hamiltonian_apply(c: FieldConfig, psi: np.ndarray, mass: float) -> np.ndarray:
    """Apply the minimally-coupled lattice Hamiltonian to a site field."""
    lat = c.lattice
    if psi.shape != (lat.ny, lat.nx):
        raise ValueError("field shape mismatch")
    h = hamiltonian_matrix(c, mass)
    return (h @ psi.ravel()).reshape(lat.ny, lat.nx)


def _cg_hpd(matvec, b, x0, tol, maxiter):
    """Conjugate gradients for a Hermitian positive-definite system."""
    x = x0.copy()
    r = b - matvec(x)
    p = r.copy()
    rs = float(np.vdot(r, r).real)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros_like(b), 0
    target = (tol * bnorm) ** 2
    for it in range(maxiter):
        if rs <= target:
            return x, it
        ap = matvec(p)
        alpha = rs / float(np.vdot(p, ap).real)
        x += alpha * p
        r -= alpha * ap
        rs_new = float(np.vdot(r, r).real)
        p = r + (rs_new / rs) * p
        rs = rs_new
    if rs <= target:
        return x, maxiter
    raise ConvergenceError(
        f"CG stalled: relative residual {np.sqrt(rs) / bnorm:.3e} after {maxiter} iterations",
        residual=float(np.sqrt(rs) / bnorm),
        iterations=maxiter,
    )


class CrankNicolsonEvolver:
    """Caches the step operators for repeated Crank-Nicolson steps."""

    def __init__(self, c: FieldConfig, params: EvolutionParams):
        self.lattice = c.lattice
        self.params = params
        n = c.lattice.n_sites
        h = hamiltonian_matrix(c, params.mass)
        alpha = 0.5 * params.dt
        eye = sp.identity(n, dtype=complex, format="csr")
        self.back = (eye - 1j * alpha * h).tocsr()  # (1 - i dt/2 H)
        self.normal = (eye + alpha**2 * (h @ h)).tocsr()  # (1 - i dt/2 H)(1 + i dt/2 H)
        self.h = h
        self._absorber = _absorber_mask(c.lattice, params)

    def step(self, psi: np.ndarray, absorb: bool = True) -> np.ndarray:
        v = psi.ravel()
        rhs = self.back @ (self.back @ v)
        out, _ = _cg_hpd(
            lambda x: self.normal @ x,
            rhs,
            v,
            self.params.solver_tol,
            maxiter=10_000,
        )
        out = out.reshape(psi.shape)
        if absorb and self._absorber is not None:
            out = out * self._absorber
        return out


def step_crank_nicolson(
    psi: np.ndarray, c: FieldConfig, params: EvolutionParams
) -> np.ndarray:
    """Single Crank-Nicolson step (no boundary absorption)."""
    return CrankNicolsonEvolver(c, params).step(psi, absorb=False)


def evolve(
    c: FieldConfig,
    psi0: np.ndarray,
    params: EvolutionParams,
    absorb: bool = False,
    record_norm: bool = False,
):
    """Run params.steps Crank-Nicolson steps; optionally record norms."""
    ev = CrankNicolsonEvolver(c, params)
    psi = np.asarray(psi0, dtype=complex)
    norms = []
    for _ in range(params.steps):
        psi = ev.step(psi, absorb=absorb)
        if record_norm:
            norms.append(float(np.linalg.norm(psi)))
    if record_norm:
        return psi, np.array(norms)
    return psi


def _absorber_mask(lat: Lattice, params: EvolutionParams) -> Optional[np.ndarray]:
    w = params.absorber_width
    s = params.absorber_strength
    if w <= 0 or s <= 0:
        return None
    nx, ny = lat.nx, lat.ny
    dx = np.minimum(np.arange(nx), np.arange(nx)[::-1])
    dy = np.minimum(np.arange(ny), np.arange(ny)[::-1])
    dist = np.minimum(dx[None, :], dy[:, None]).astype(float)
    ramp = np.clip(dist / w, 0.0, 1.0)
    # Cosine ramp: full damping strength at the edge, none past width w.
    damp = 1.0 - s * 0.5 * (1.0 + np.cos(np.pi * ramp))
    return damp


def gaussian_packet(lattice: Lattice, spec: PacketSpec) -> np.ndarray:
    """Normalized Gaussian wavepacket on the lattice sites."""
    if spec.width < 2.0 * lattice.spacing:
        raise ValueError(
            f"packet width {spec.width} below resolvable limit {2 * lattice.spacing}"
        )
    h = lattice.spacing
    x = np.arange(lattice.nx) * h
    y = np.arange(lattice.ny) * h
    cx, cy = spec.center
    kx, ky = spec.momentum
    xx, yy = np.meshgrid(x, y)
    r2 = (xx - cx) ** 2 + (yy - cy) ** 2
    psi = np.exp(-r2 / (4.0 * spec.width**2) + 1j * (kx * xx + ky * yy))
    psi /= np.linalg.norm(psi)
    return psi


def predicted_shift(e_flux: float) -> float:
    """Interference-pattern phase shift for a given dimensionless flux."""
    return float(wrap_angle(e_flux))


@dataclass(frozen=True)
class InterferenceGeometry:
    """Double-slit barrier with a solenoid between slits and screen.

    All coordinates are in site units on an open nx x ny lattice; the beam
    travels in +y. Slits are centered at (nx-1)/2 +- slit_separation/2.
    """

    nx: int = 256
    ny: int = 192
    spacing: float = 1.0
    barrier_row: int = 56
    slit_separation: float = 56.0
    slit_width: float = 12.0
    solenoid_center_y: float = 66.0
    solenoid_radius: float = 8.0
    screen_row: int = 168

    def __post_init__(self):
        if not (0 < self.barrier_row < self.solenoid_center_y < self.screen_row < self.ny):
            raise ValueError("geometry rows must satisfy barrier < solenoid < screen < ny")

    @property
    def axis_x(self) -> float:
        return (self.nx - 1) / 2.0

    def slit_centers(self) -> tuple[float, float]:
        return (
            self.axis_x - self.slit_separation / 2.0,
            self.axis_x + self.slit_separation / 2.0,
        )

    def build_config(self, flux: FluxSpec) -> FieldConfig:
        """Solenoid config with the barrier row excised except the slits.

        The link field is re-gauged onto a string running from the solenoid
        to the top boundary, away from the incoming packet: the vector
        potential then vanishes identically in the preparation region, so
        the prepared state is the same physical state at every flux value
        and the pattern is exactly periodic in whole flux quanta.
        """
        lat = build_lattice(self.nx, self.ny, self.spacing, "open")
        c = solenoid_config(lat, flux, background_psi=1.0)
        fluxes = all_plaquette_fluxes(c)
        ah = np.zeros_like(c.ah)
        ah[1:, :] = -np.cumsum(fluxes, axis=0)
        c.ah = ah
        c.av = np.zeros_like(c.av)
        left, right = self.slit_centers()
        half = self.slit_width / 2.0
        for ix in range(self.nx):
            if abs(ix - left) <= half or abs(ix - right) <= half:
                continue
            c.mask[self.barrier_row, ix] = False
        c.psi = np.where(c.mask, c.psi, 0.0)
        return c

    def flux_spec(self, e_flux: float) -> FluxSpec:
        return FluxSpec(
            center=(self.axis_x, self.solenoid_center_y),
            radius=self.solenoid_radius,
            total_flux=e_flux,
        )


def default_experiment_params() -> EvolutionParams:
    """Evolution parameters calibrated for the default geometry."""
    return EvolutionParams(
        mass=1.0,
        dt=0.2,
        steps=1000,
        solver_tol=1e-12,
        absorber_width=20,
        absorber_strength=0.05,
    )


def default_packet(geometry: InterferenceGeometry) -> PacketSpec:
    """Collimated packet aimed at the slits from below the barrier."""
    return PacketSpec(
        center=(geometry.axis_x * geometry.spacing, 24.0 * geometry.spacing),
        width=18.0 * geometry.spacing,
        momentum=(0.0, 1.2 / geometry.spacing),
    )


@dataclass
class FringeFit:
    phase: float
    k: float
    visibility: float
    quality: float


def fit_fringes(
    intensity: np.ndarray,
    k: Optional[float] = None,
    window_frac: float = 0.5,
) -> FringeFit:
    """Fit the central fringes to an envelope-modulated cosine.

    The envelope is estimated by low-pass smoothing; the fringe wavenumber
    comes from the spectral peak of the flattened signal (parabolic peak
    interpolation) unless supplied by the caller.
    """
    n = len(intensity)
    lo = int(round(n * (1.0 - window_frac) / 2.0))
    hi = n - lo
    x = np.arange(n, dtype=float)[lo:hi]
    win = np.asarray(intensity, dtype=float)[lo:hi]

    if k is None:
        flat = win - gaussian_filter1d(win, sigma=8.0)
        spec = np.abs(np.fft.rfft(flat * np.hanning(len(flat))))
        freqs = np.fft.rfftfreq(len(flat), d=1.0)
        j = int(np.argmax(spec[2:])) + 2  # skip near-DC bins
        if 0 < j < len(spec) - 1:
            denom = spec[j - 1] - 2 * spec[j] + spec[j + 1]
            corr = 0.5 * (spec[j - 1] - spec[j + 1]) / denom if denom != 0 else 0.0
        else:
            corr = 0.0
        k = 2.0 * np.pi * (freqs[j] + corr * (freqs[1] - freqs[0]))

    period = 2.0 * np.pi / k if k > 0 else len(win)
    env = gaussian_filter1d(win, sigma=max(2.0, period))
    env = np.maximum(env, 1e-12 * max(float(np.max(win)), 1e-300))
    s = win / env - 1.0

    # Weight by the envelope so the dim pattern wings do not dominate.
    w = env / float(np.max(env))
    basis = np.column_stack([np.cos(k * x), np.sin(k * x)])
    coef, *_ = np.linalg.lstsq(basis * w[:, None], s * w, rcond=None)
    a, b = coef
    model = basis @ coef
    ss_res = float(np.sum(w * (s - model) ** 2))
    mean_s = float(np.sum(w * s) / np.sum(w))
    ss_tot = float(np.sum(w * (s - mean_s) ** 2))
    quality = 0.0 if ss_tot == 0 else float(np.clip(1.0 - ss_res / ss_tot, 0.0, 1.0))
    phase = float(np.arctan2(-b, a))  # s ~ V cos(k x + phase)
    visibility = float(np.hypot(a, b))
    return FringeFit(phase=phase, k=float(k), visibility=visibility, quality=quality)


def pattern_shift(
    intensity: np.ndarray,
    reference: np.ndarray,
    k: float,
    window_frac: float = 0.5,
) -> float:
    """Phase displacement of one fringe pattern relative to another.

    Both patterns are flattened against their smoothed envelopes and turned
    into analytic signals; the shift is the amplitude-weighted circular mean
    of the pointwise phase difference. Comparing local phases (rather than
    phases of a single global cosine fit) keeps the estimate unbiased when
    the fringe spacing drifts across the window.
    """
    n = len(intensity)
    lo = int(round(n * (1.0 - window_frac) / 2.0))
    hi = n - lo
    period = 2.0 * np.pi / k if k > 0 else n

    def analytic(signal):
        win = np.asarray(signal, dtype=float)[lo:hi]
        env = gaussian_filter1d(win, sigma=max(2.0, period))
        env = np.maximum(env, 1e-12 * max(float(np.max(win)), 1e-300))
        return hilbert(win / env - 1.0), env

    za, ea = analytic(reference)
    zb, eb = analytic(intensity)
    w = np.abs(za) * np.abs(zb) * ea * eb
    return float(np.angle(np.sum(w * za * np.conj(zb))))


def run_interference(
    geometry: InterferenceGeometry,
    flux: FluxSpec,
    params: EvolutionParams,
    packet: PacketSpec,
) -> np.ndarray:
    """Evolve the packet through the apparatus; return the time-integrated
    screen-row intensity."""
    c = geometry.build_config(flux)
    psi = gaussian_packet(c.lattice, packet)
    psi = np.where(c.mask, psi, 0.0)
    psi /= np.linalg.norm(psi)
    ev = CrankNicolsonEvolver(c, params)
    screen = np.zeros(geometry.nx)
    transmitted = 0.0
    for step in range(params.steps):
        psi = ev.step(psi)
        screen += np.abs(psi[geometry.screen_row, :]) ** 2 * params.dt
        if step % 50 == 0 or step == params.steps - 1:
            beyond = float(np.sum(np.abs(psi[geometry.barrier_row + 1 :, :]) ** 2))
            transmitted = max(transmitted, beyond)
    if transmitted < 1e-4:
        raise ExperimentFailureError(
            f"transmitted probability {transmitted:.3e} < 1e-4: packet never "
            f"cleared the barrier (check momentum/steps)"
        )
    return screen


def ab_experiment(
    geometry: InterferenceGeometry,
    flux: FluxSpec,
    params: EvolutionParams,
    packet: PacketSpec,
    reference: Optional[FringeResult] = None,
) -> FringeResult:
    """Full interference run; the extracted shift is relative to a zero-flux
    reference (run internally when not supplied)."""
    if reference is None and flux.total_flux != 0.0:
        ref_intensity = run_interference(
            geometry, geometry.flux_spec(0.0), params, packet
        )
        ref_fit = fit_fringes(ref_intensity)
        reference = FringeResult(
            screen_row=geometry.screen_row,
            intensity=ref_intensity,
            extracted_shift=0.0,
            fit_quality=ref_fit.quality,
            fit_phase=ref_fit.phase,
            fit_k=ref_fit.k,
            visibility=ref_fit.visibility,
        )
    intensity = run_interference(geometry, flux, params, packet)
    if reference is None:
        fit = fit_fringes(intensity)
        return FringeResult(
            screen_row=geometry.screen_row,
            intensity=intensity,
            extracted_shift=0.0,
            fit_quality=fit.quality,
            fit_phase=fit.phase,
            fit_k=fit.k,
            visibility=fit.visibility,
        )
    fit = fit_fringes(intensity, k=reference.fit_k)
    shift = pattern_shift(intensity, reference.intensity, reference.fit_k)
    return FringeResult(
        screen_row=geometry.screen_row,
        intensity=intensity,
        extracted_shift=shift,
        fit_quality=fit.quality,
        fit_phase=fit.phase,
        fit_k=fit.k,
        visibility=fit.visibility,
    )


def unitary_gauge_static_check(
    c: FieldConfig, eps: Optional[float] = None
) -> tuple[float, float]:
    """Residuals of the two real stationary-state equations in unitary gauge.

    Transforms to the gauge where psi is real, then evaluates
    (laplacian - A.A) rho and 2 A.grad rho + (div A) rho with central
    differences over interior active sites. Diagnostic only: residuals are
    returned, not judged.
    """
    from .holonomy import unitary_gauge_fix

    fixed = unitary_gauge_fix(c, eps)
    lat = c.lattice
    if lat.periodic:
        raise ValueError("static check requires an open lattice")
    h = lat.spacing
    rho = fixed.psi.real
    interior = np.zeros_like(fixed.mask)
    interior[1:-1, 1:-1] = (
        fixed.mask[1:-1, 1:-1]
        & fixed.mask[:-2, 1:-1]
        & fixed.mask[2:, 1:-1]
        & fixed.mask[1:-1, :-2]
        & fixed.mask[1:-1, 2:]
    )
    lap = np.zeros_like(rho)
    lap[1:-1, 1:-1] = (
        rho[1:-1, 2:] + rho[1:-1, :-2] + rho[2:, 1:-1] + rho[:-2, 1:-1]
        - 4.0 * rho[1:-1, 1:-1]
    ) / h**2
    ax = np.zeros_like(rho)
    ay = np.zeros_like(rho)
    ax[:, 1:-1] = (fixed.ah[:, 1:] + fixed.ah[:, :-1]) / (2.0 * h)
    ay[1:-1, :] = (fixed.av[1:, :] + fixed.av[:-1, :]) / (2.0 * h)
    gx = np.zeros_like(rho)
    gy = np.zeros_like(rho)
    gx[:, 1:-1] = (rho[:, 2:] - rho[:, :-2]) / (2.0 * h)
    gy[1:-1, :] = (rho[2:, :] - rho[:-2, :]) / (2.0 * h)
    diva = np.zeros_like(rho)
    diva[:, 1:-1] += (fixed.ah[:, 1:] - fixed.ah[:, :-1]) / h**2
    diva[1:-1, :] += (fixed.av[1:, :] - fixed.av[:-1, :]) / h**2
    res1_field = lap - (ax**2 + ay**2) * rho
    res2_field = 2.0 * (ax * gx + ay * gy) + diva * rho
    res1 = float(np.max(np.abs(res1_field[interior]), initial=0.0))
    res2 = float(np.max(np.abs(res2_field[interior]), initial=0.0))
    return res1, res2
