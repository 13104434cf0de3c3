"""Loop holonomies, plaquette fluxes, solenoid fields, and gauge fixing."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, NotContractibleError
from .fields import (
    FieldConfig,
    GaugeTransform,
    apply_gauge,
    extract_invariants,
    wrap_angle,
    _check_nonvanishing,
)
from .lattice import Lattice, Loop, Site, enclosed_plaquettes


class HolonomyResult(NamedTuple):
    raw: float
    wrapped: float


@dataclass(frozen=True)
class FluxSpec:
    """A solenoid: total dimensionless flux spread over a disk of plaquettes.

    center is in lattice coordinates (site units); sites strictly inside
    radius are excised from the matter field.
    """

    center: tuple[float, float]
    radius: float
    total_flux: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")

    def interior_plaquettes(self, lattice: Lattice) -> list[Site]:
        """Plaquettes carrying flux: all four corners strictly inside radius.

        Confining the flux to plaquettes fully behind the excised wall keeps
        every matter-accessible holonomy equal to (winding x total flux), so
        the physics outside is exactly periodic in whole flux quanta. Falls
        back to the single plaquette containing the center when the radius
        excises no complete plaquette.
        """
        cx, cy = self.center
        r2 = self.radius**2

        def inside(s):
            return (s[0] - cx) ** 2 + (s[1] - cy) ** 2 < r2

        plist = [
            p
            for p in lattice.plaquettes()
            if all(inside(c) for c in lattice.plaquette_corners(p))
        ]
        if not plist:
            px = int(np.clip(np.floor(cx), 0, lattice.nx - 2))
            py = int(np.clip(np.floor(cy), 0, lattice.ny - 2))
            plist = [(px, py)]
        return plist

    def excised_sites(self, lattice: Lattice) -> list[Site]:
        cx, cy = self.center
        return [
            (ix, iy)
            for (ix, iy) in lattice.sites()
            if (ix - cx) ** 2 + (iy - cy) ** 2 < self.radius**2
        ]


def holonomy(c: FieldConfig, loop: Loop) -> HolonomyResult:
    """Signed sum of link values along a closed loop, raw and wrapped."""
    if loop.lattice != c.lattice:
        raise ValueError("loop lives on a different lattice")
    raw = float(sum(c.link_value(link) for link in loop.links))
    return HolonomyResult(raw, float(wrap_angle(raw)))


def plaquette_flux(c: FieldConfig, p: Site) -> float:
    """Counterclockwise boundary sum of the four plaquette links (unwrapped)."""
    px, py = p
    lat = c.lattice
    if lat.periodic:
        return float(
            c.ah[py, px]
            + c.av[py, (px + 1) % lat.nx]
            - c.ah[(py + 1) % lat.ny, px]
            - c.av[py, px]
        )
    if not (0 <= px < lat.nx - 1 and 0 <= py < lat.ny - 1):
        raise ValueError(f"{p} is not a lattice plaquette")
    return float(c.ah[py, px] + c.av[py, px + 1] - c.ah[py + 1, px] - c.av[py, px])


def all_plaquette_fluxes(c: FieldConfig) -> np.ndarray:
    """Fluxes of every plaquette, indexed [py, px]."""
    lat = c.lattice
    if lat.periodic:
        return (
            c.ah
            + np.roll(c.av, -1, axis=1)
            - np.roll(c.ah, -1, axis=0)
            - c.av
        )
    return c.ah[:-1, :] + c.av[:, 1:] - c.ah[1:, :] - c.av[:, :-1]


def stokes_residual(c: FieldConfig, loop: Loop) -> float:
    """|loop holonomy - winding-weighted sum of enclosed plaquette fluxes|.

    Zero analytically; bounded by rounding numerically. Loops winding around
    excised sites are rejected: their interior plaquettes are not part of
    the ambient region.
    """
    winding = enclosed_plaquettes(loop)
    for p in winding:
        if any(not c.is_active(corner) for corner in c.lattice.plaquette_corners(p)):
            raise NotContractibleError(
                f"loop winds around plaquette {p} touching excised sites"
            )
    raw = holonomy(c, loop).raw
    surface = sum(w * plaquette_flux(c, p) for p, w in winding.items())
    return abs(raw - surface)


def solenoid_config(
    lattice: Lattice,
    spec: FluxSpec,
    background_psi: complex = 1.0 + 0.0j,
) -> FieldConfig:
    """Link field carrying the solenoid flux, uniform over the interior disk.

    The field starts from the discrete vortex profile (each link carries the
    winding-angle increment about the center, scaled by the total flux) and
    is corrected plaquette-row by plaquette-row so interior plaquettes carry
    exactly total_flux / n_interior and exterior plaquettes carry zero.
    psi is background_psi on all sites outside the solenoid; sites strictly
    inside the radius are excised.
    """
    if lattice.periodic:
        raise ValueError("solenoid construction requires an open lattice")
    cx, cy = spec.center
    excised = spec.excised_sites(lattice)
    for (ix, iy) in excised:
        if ix in (0, lattice.nx - 1) or iy in (0, lattice.ny - 1):
            raise ValueError("solenoid touches the lattice boundary")

    xs = np.arange(lattice.nx)
    ys = np.arange(lattice.ny)
    ang = np.arctan2(ys[:, None] - cy, xs[None, :] - cx)  # angle at each site
    scale = spec.total_flux / (2.0 * np.pi)
    if spec.total_flux == 0.0:
        ah = np.zeros((lattice.ny, lattice.nx - 1))
        av = np.zeros((lattice.ny - 1, lattice.nx))
    else:
        ah = scale * wrap_angle(ang[:, 1:] - ang[:, :-1])
        av = scale * wrap_angle(ang[1:, :] - ang[:-1, :])

    interior = spec.interior_plaquettes(lattice)
    target = np.zeros((lattice.ny - 1, lattice.nx - 1))
    per_plaq = spec.total_flux / len(interior)
    for (px, py) in interior:
        target[py, px] = per_plaq

    mask = np.ones((lattice.ny, lattice.nx), dtype=bool)
    for (ix, iy) in excised:
        mask[iy, ix] = False
    psi = np.full((lattice.ny, lattice.nx), complex(background_psi))
    cfg = FieldConfig(lattice, psi, ah, av, mask)

    # Row-local correction on vertical links: cumulative flux mismatch.
    diff = target - all_plaquette_fluxes(cfg)
    av = av.copy()
    av[:, 1:] += np.cumsum(diff, axis=1)
    return FieldConfig(lattice, psi, ah, av, mask)


def _divergence(c: FieldConfig) -> np.ndarray:
    """Discrete divergence of the link field at each site (open lattice).

    Outgoing minus incoming canonical links; links absent at the boundary
    contribute zero.
    """
    lat = c.lattice
    div = np.zeros((lat.ny, lat.nx))
    div[:, :-1] += c.ah
    div[:, 1:] -= c.ah
    div[:-1, :] += c.av
    div[1:, :] -= c.av
    return div


def coulomb_gauge_fix(
    c: FieldConfig,
    tol: float = 1e-10,
    max_iter: Optional[int] = None,
) -> FieldConfig:
    """Gauge-fix to zero discrete divergence at interior sites.

    Solves the lattice Poisson equation (Laplacian of lam = -div a) with
    lam = 0 on the boundary sites, then applies the resulting transform.
    Raises ConvergenceError if the linear solve cannot reach tol.
    """
    lat = c.lattice
    if lat.periodic:
        raise ValueError("Coulomb gauge fixing requires an open lattice")
    if max_iter is None:
        max_iter = 10 * lat.nx * lat.ny
    div = _divergence(c)
    inx, iny = lat.nx - 2, lat.ny - 2
    if inx <= 0 or iny <= 0:
        # No interior sites: nothing to fix.
        return c.copy()
    n = inx * iny
    lap = sp.kron(sp.eye(iny), _lap1d(inx)) + sp.kron(_lap1d(iny), sp.eye(inx))
    rhs = div[1:-1, 1:-1].ravel()
    x, info = spla.cg(lap.tocsr(), rhs, rtol=min(1e-12, tol), atol=0.0, maxiter=max_iter)
    resid = float(np.max(np.abs(lap @ x - rhs))) if n else 0.0
    if info != 0 or resid > tol:
        raise ConvergenceError(
            f"Poisson solve stalled: residual max-norm {resid:.3e} > {tol:.1e}",
            residual=resid,
        )
    lam = np.zeros((lat.ny, lat.nx))
    lam[1:-1, 1:-1] = x.reshape(iny, inx)
    return apply_gauge(c, GaugeTransform(lat, lam))


def _lap1d(n: int) -> sp.spmatrix:
    """1D Dirichlet (-Laplacian) stencil of size n."""
    return sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(n, n))


def interior_divergence(c: FieldConfig) -> float:
    """Max-norm of the discrete divergence over interior sites."""
    div = _divergence(c)
    return float(np.max(np.abs(div[1:-1, 1:-1]))) if min(div.shape) > 2 else 0.0


def unitary_gauge_fix(c: FieldConfig, eps: Optional[float] = None) -> FieldConfig:
    """Rotate psi real and positive everywhere; links absorb the phase.

    The output link field equals the negated covariant phase steps of the
    input, up to whole turns.
    """
    _check_nonvanishing(c, eps)
    lam = np.where(c.mask, -np.angle(np.where(c.mask, c.psi, 1.0)), 0.0)
    out = apply_gauge(c, GaugeTransform(c.lattice, lam))
    # Rotation puts psi on the positive real axis up to rounding in the
    # imaginary part; make it exactly real.
    out.psi = np.abs(out.psi).astype(complex)
    return out


def unitary_links_match_invariants(c: FieldConfig, eps: Optional[float] = None) -> float:
    """Worst circular distance between unitary-gauge links and -d of c."""
    inv = extract_invariants(c, eps)
    fixed = unitary_gauge_fix(c, eps)
    from .fields import circular_distance

    worst = 0.0
    hmask, vmask = c.hlink_mask(), c.vlink_mask()
    if hmask.any():
        worst = max(worst, float(np.max(circular_distance(fixed.ah, -inv.dh)[hmask])))
    if vmask.any():
        worst = max(worst, float(np.max(circular_distance(fixed.av, -inv.dv)[vmask])))
    return worst
