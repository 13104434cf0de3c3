"""Field configurations on the lattice and their gauge-invariant content.

A configuration pairs a complex matter field on sites with a real link
field holding the integrated vector potential (charge folded in, so link
values are dimensionless phases). Link storage is one array per direction
in the canonical (+x, +y) orientation; the reversed direction is obtained
by negation, so antisymmetry holds exactly by construction.

A boolean site mask supports excised sites (hard obstacles) and restriction
to regions: inactive sites carry psi = 0 and take no part in comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ZeroFieldRegionError
from .lattice import Lattice, Region, Site, DirectedLink

TWO_PI = 2.0 * np.pi

#: Relative zero-field threshold: sites with |psi| below this fraction of the
#: maximum magnitude are treated as vanishing.
DEFAULT_EPS_REL = 1e-9


def wrap_angle(x):
    """Wrap angle(s) into the canonical branch (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=float), TWO_PI)


def circular_distance(x, y):
    """Distance between angles on the circle, in [0, pi]."""
    d = np.mod(np.asarray(x, dtype=float) - np.asarray(y, dtype=float), TWO_PI)
    return np.minimum(d, TWO_PI - d)


def _link_shapes(lat: Lattice) -> tuple[tuple[int, int], tuple[int, int]]:
    h = (lat.ny, lat.n_hlinks_per_row)
    v = (lat.n_vlink_rows, lat.nx)
    return h, v


@dataclass
class FieldConfig:
    """Matter field psi on sites plus link field (ah, av).

    ah[iy, ix] is the value on the link (ix, iy) -> (ix+1, iy);
    av[iy, ix] on (ix, iy) -> (ix, iy+1). The mask marks active sites;
    psi is held at 0 on inactive sites.
    """

    lattice: Lattice
    psi: np.ndarray
    ah: np.ndarray
    av: np.ndarray
    mask: np.ndarray = None

    def __post_init__(self):
        lat = self.lattice
        hshape, vshape = _link_shapes(lat)
        self.psi = np.asarray(self.psi, dtype=complex)
        self.ah = np.asarray(self.ah, dtype=float)
        self.av = np.asarray(self.av, dtype=float)
        if self.psi.shape != (lat.ny, lat.nx):
            raise ValueError(f"psi shape {self.psi.shape} != {(lat.ny, lat.nx)}")
        if self.ah.shape != hshape:
            raise ValueError(f"ah shape {self.ah.shape} != {hshape}")
        if self.av.shape != vshape:
            raise ValueError(f"av shape {self.av.shape} != {vshape}")
        if self.mask is None:
            self.mask = np.ones((lat.ny, lat.nx), dtype=bool)
        else:
            self.mask = np.asarray(self.mask, dtype=bool)
            if self.mask.shape != (lat.ny, lat.nx):
                raise ValueError("mask shape mismatch")
        self.psi = np.where(self.mask, self.psi, 0.0)
        if not np.all(np.isfinite(self.psi[self.mask])):
            raise ValueError("psi contains non-finite values on active sites")
        if not (np.all(np.isfinite(self.ah)) and np.all(np.isfinite(self.av))):
            raise ValueError("link field contains non-finite values")

    # -- site / link access -------------------------------------------------

    def is_active(self, site: Site) -> bool:
        ix, iy = site
        return bool(self.mask[iy, ix])

    def psi_at(self, site: Site) -> complex:
        ix, iy = site
        return complex(self.psi[iy, ix])

    def link_value(self, link: DirectedLink) -> float:
        """Value of the link field along a directed link (sign-aware)."""
        (sx, sy), (tx, ty) = link
        lat = self.lattice
        if lat.periodic:
            dx = (tx - sx) % lat.nx
            dy = (ty - sy) % lat.ny
            if dy == 0 and dx == 1:
                return float(self.ah[sy, sx])
            if dy == 0 and dx == lat.nx - 1:
                return -float(self.ah[ty, tx])
            if dx == 0 and dy == 1:
                return float(self.av[sy, sx])
            if dx == 0 and dy == lat.ny - 1:
                return -float(self.av[ty, tx])
        else:
            if ty == sy and tx == sx + 1:
                return float(self.ah[sy, sx])
            if ty == sy and tx == sx - 1:
                return -float(self.ah[sy, tx])
            if tx == sx and ty == sy + 1:
                return float(self.av[sy, sx])
            if tx == sx and ty == sy - 1:
                return -float(self.av[ty, sx])
        raise ValueError(f"{link} is not a lattice link")

    # -- masks --------------------------------------------------------------

    def hlink_mask(self) -> np.ndarray:
        """Active horizontal links (both endpoints active)."""
        m = self.mask
        if self.lattice.periodic:
            return m & np.roll(m, -1, axis=1)
        return m[:, :-1] & m[:, 1:]

    def vlink_mask(self) -> np.ndarray:
        m = self.mask
        if self.lattice.periodic:
            return m & np.roll(m, -1, axis=0)
        return m[:-1, :] & m[1:, :]

    def active_sites(self) -> list[Site]:
        ys, xs = np.nonzero(self.mask)
        return [(int(x), int(y)) for x, y in zip(xs, ys)]

    def active_region(self) -> Region:
        return Region.from_sites(self.lattice, self.active_sites())

    def copy(self) -> "FieldConfig":
        return FieldConfig(
            self.lattice, self.psi.copy(), self.ah.copy(), self.av.copy(), self.mask.copy()
        )

    def restrict(self, region: Region) -> "FieldConfig":
        """Restriction to a region: sites outside become inactive."""
        if region.lattice != self.lattice:
            raise ValueError("region lives on a different lattice")
        rmask = np.zeros_like(self.mask)
        for (ix, iy) in region.sites:
            rmask[iy, ix] = True
        return FieldConfig(self.lattice, self.psi, self.ah, self.av, self.mask & rmask)

    def zero_threshold(self, eps: Optional[float]) -> float:
        """Resolve an eps argument: None means relative to max |psi|."""
        if eps is not None:
            return float(eps)
        amax = np.max(np.abs(self.psi[self.mask])) if self.mask.any() else 0.0
        return DEFAULT_EPS_REL * amax


@dataclass
class GaugeTransform:
    """Real gauge function on sites (charge folded in, dimensionless)."""

    lattice: Lattice
    lam: np.ndarray

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=float)
        if self.lam.shape != (self.lattice.ny, self.lattice.nx):
            raise ValueError("gauge function shape mismatch")
        if not np.all(np.isfinite(self.lam)):
            raise ValueError("gauge function contains non-finite values")

    @classmethod
    def constant(cls, lattice: Lattice, value: float) -> "GaugeTransform":
        return cls(lattice, np.full((lattice.ny, lattice.nx), float(value)))

    @classmethod
    def random(cls, lattice: Lattice, seed: int, scale: float = np.pi) -> "GaugeTransform":
        rng = np.random.default_rng(seed)
        return cls(lattice, rng.uniform(-scale, scale, size=(lattice.ny, lattice.nx)))

    def compose(self, other: "GaugeTransform") -> "GaugeTransform":
        if self.lattice != other.lattice:
            raise ValueError("gauge functions on different lattices")
        return GaugeTransform(self.lattice, self.lam + other.lam)


@dataclass
class InvariantState:
    """Gauge-invariant data: site magnitudes and wrapped covariant phase steps.

    dh / dv follow the same layout as the link field; values lie in
    (-pi, pi] and are zero on inactive links.
    """

    lattice: Lattice
    rho: np.ndarray
    dh: np.ndarray
    dv: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        hshape, vshape = _link_shapes(self.lattice)
        self.rho = np.asarray(self.rho, dtype=float)
        self.dh = np.asarray(self.dh, dtype=float)
        self.dv = np.asarray(self.dv, dtype=float)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.rho.shape != (self.lattice.ny, self.lattice.nx):
            raise ValueError("rho shape mismatch")
        if self.dh.shape != hshape or self.dv.shape != vshape:
            raise ValueError("covariant-step shape mismatch")
        if np.any(self.rho[self.mask] < 0):
            raise ValueError("rho must be nonnegative")

    def allclose(self, other: "InvariantState", tol: float = 1e-12) -> bool:
        """Branch-aware comparison: rho absolutely, steps by circular distance."""
        if self.lattice != other.lattice or not np.array_equal(self.mask, other.mask):
            return False
        if np.max(np.abs(self.rho - other.rho), initial=0.0) > tol:
            return False
        if np.max(circular_distance(self.dh, other.dh), initial=0.0) > tol:
            return False
        if np.max(circular_distance(self.dv, other.dv), initial=0.0) > tol:
            return False
        return True


def apply_gauge(c: FieldConfig, g: GaugeTransform) -> FieldConfig:
    """Apply the gauge transformation generated by g.

    psi -> exp(i lam) psi on sites, link values shift by the forward
    difference of lam.
    """
    if g.lattice != c.lattice:
        raise ValueError("gauge transform lattice differs from config lattice")
    lam = g.lam
    lat = c.lattice
    psi = c.psi * np.exp(1j * lam)
    if lat.periodic:
        ah = c.ah + np.roll(lam, -1, axis=1) - lam
        av = c.av + np.roll(lam, -1, axis=0) - lam
    else:
        ah = c.ah + lam[:, 1:] - lam[:, :-1]
        av = c.av + lam[1:, :] - lam[:-1, :]
    return FieldConfig(lat, psi, ah, av, c.mask.copy())


def _check_nonvanishing(c: FieldConfig, eps: Optional[float]) -> float:
    thr = c.zero_threshold(eps)
    amp = np.abs(c.psi)
    bad = c.mask & (amp <= thr)
    if bad.any():
        ys, xs = np.nonzero(bad)
        raise ZeroFieldRegionError([(int(x), int(y)) for x, y in zip(xs, ys)], thr)
    return thr


def extract_invariants(c: FieldConfig, eps: Optional[float] = None) -> InvariantState:
    """Extract the complete gauge-invariant data (rho, covariant phase steps).

    Each active link carries wrap(arg psi(head) - arg psi(tail) - a).
    Raises ZeroFieldRegionError if any active site has |psi| <= eps
    (eps defaults to a small fraction of max |psi|).
    """
    _check_nonvanishing(c, eps)
    lat = c.lattice
    theta = np.angle(c.psi)
    if lat.periodic:
        dh = wrap_angle(np.roll(theta, -1, axis=1) - theta - c.ah)
        dv = wrap_angle(np.roll(theta, -1, axis=0) - theta - c.av)
    else:
        dh = wrap_angle(theta[:, 1:] - theta[:, :-1] - c.ah)
        dv = wrap_angle(theta[1:, :] - theta[:-1, :] - c.av)
    dh = np.where(c.hlink_mask(), dh, 0.0)
    dv = np.where(c.vlink_mask(), dv, 0.0)
    rho = np.where(c.mask, np.abs(c.psi), 0.0)
    return InvariantState(lat, rho, dh, dv, c.mask.copy())


def reconstruct(inv: InvariantState) -> FieldConfig:
    """Unitary-gauge representative of an invariant state.

    psi is real and positive (= rho); link values are the negated covariant
    steps, so extracting invariants again reproduces inv exactly up to the
    canonical branch.
    """
    if np.any(inv.rho[inv.mask] <= 0):
        raise ValueError("rho must be strictly positive on active sites")
    psi = inv.rho.astype(complex)
    return FieldConfig(inv.lattice, psi, -inv.dh, -inv.dv, inv.mask.copy())


def gauge_equivalent(
    c1: FieldConfig,
    c2: FieldConfig,
    eps: Optional[float] = None,
    tol: float = 1e-8,
) -> Optional[GaugeTransform]:
    """Decide gauge equivalence of two nonvanishing configs constructively.

    Returns the witness transform (lam = arg(psi2/psi1)) if magnitudes agree
    sitewise and all link values match after the induced shift (compared by
    circular distance), else None. Symmetric in its arguments: the witness
    for the swapped call is the negation.
    """
    if c1.lattice != c2.lattice:
        raise ValueError("configs live on different lattices")
    if not np.array_equal(c1.mask, c2.mask):
        raise ValueError("configs have different active-site masks")
    _check_nonvanishing(c1, eps)
    _check_nonvanishing(c2, eps)
    if np.max(np.abs(np.abs(c2.psi) - np.abs(c1.psi))[c1.mask], initial=0.0) > tol:
        return None
    lam = np.where(c1.mask, np.angle(c2.psi * np.conj(c1.psi)), 0.0)
    lat = c1.lattice
    if lat.periodic:
        resid_h = c2.ah - c1.ah - (np.roll(lam, -1, axis=1) - lam)
        resid_v = c2.av - c1.av - (np.roll(lam, -1, axis=0) - lam)
    else:
        resid_h = c2.ah - c1.ah - (lam[:, 1:] - lam[:, :-1])
        resid_v = c2.av - c1.av - (lam[1:, :] - lam[:-1, :])
    hmask, vmask = c1.hlink_mask(), c1.vlink_mask()
    worst = 0.0
    if hmask.any():
        worst = max(worst, float(np.max(circular_distance(resid_h, 0.0)[hmask])))
    if vmask.any():
        worst = max(worst, float(np.max(circular_distance(resid_v, 0.0)[vmask])))
    if worst > tol:
        return None
    return GaugeTransform(lat, lam)


def random_config(
    lattice: Lattice,
    seed: int,
    rho_min: float = 0.5,
    mask: Optional[np.ndarray] = None,
) -> FieldConfig:
    """Deterministic pseudo-random configuration with |psi| >= rho_min."""
    if not rho_min > 0:
        raise ValueError("rho_min must be positive")
    rng = np.random.default_rng(seed)
    shape = (lattice.ny, lattice.nx)
    rho = rho_min + rng.uniform(0.0, 1.0, size=shape)
    theta = rng.uniform(-np.pi, np.pi, size=shape)
    psi = rho * np.exp(1j * theta)
    hshape, vshape = _link_shapes(lattice)
    ah = rng.uniform(-np.pi, np.pi, size=hshape)
    av = rng.uniform(-np.pi, np.pi, size=vshape)
    return FieldConfig(lattice, psi, ah, av, mask.copy() if mask is not None else None)
