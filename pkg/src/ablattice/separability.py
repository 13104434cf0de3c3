"""Two-region cover analysis: when do region states underdetermine the whole?

A cover (X, Y) of the ambient sites is non-separable exactly when the
overlap X ∩ Y falls into at least two connected pieces and the matter field
vanishes throughout at least one of them. In that case a witness exists: a
configuration whose restrictions to X and Y are gauge-equivalent to the
original's but which differs from it globally (its solenoid holonomy moves
by a chosen delta).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import GluingMismatchError, NoWitnessError, ZeroFieldRegionError
from .fields import (
    FieldConfig,
    circular_distance,
    wrap_angle,
)
from .holonomy import holonomy
from .lattice import DirectedLink, Loop, Region, Site, connected_components

Path = list[DirectedLink]


@dataclass
class CoverAnalysis:
    """Result of analyzing a two-region cover."""

    X: Region
    Y: Region
    overlap_components: list[Region]
    zero_components: list[Region]
    nonseparable: bool
    eps: float
    diagnostics: str = ""

    def to_dict(self) -> dict:
        def comp_summary(r: Region) -> dict:
            return {"n_sites": len(r.sites), "min_site": list(min(r.sites))}

        return {
            "n_overlap_components": len(self.overlap_components),
            "n_zero_components": len(self.zero_components),
            "overlap_components": [comp_summary(r) for r in self.overlap_components],
            "zero_components": [comp_summary(r) for r in self.zero_components],
            "nonseparable": self.nonseparable,
            "eps": self.eps,
            "diagnostics": self.diagnostics,
        }


def analyze_cover(
    c: FieldConfig,
    X: Region,
    Y: Region,
    eps: Optional[float] = None,
) -> CoverAnalysis:
    """Classify the overlap components of a cover and decide non-separability."""
    if X.lattice != c.lattice or Y.lattice != c.lattice:
        raise ValueError("regions live on a different lattice")
    active = set(c.active_sites())
    if not active <= (X.sites | Y.sites):
        missing = sorted(active - (X.sites | Y.sites))[:5]
        raise ValueError(f"X and Y do not cover the active sites (e.g. {missing})")
    # Excised sites are not part of the field's domain: they must neither
    # bridge overlap components nor count as vanishing field.
    overlap = X.intersection(Y).intersection(c.active_region())
    if not overlap.sites:
        raise ValueError("X and Y have empty overlap on the active sites")
    thr = c.zero_threshold(eps)
    comps = connected_components(overlap)
    zero = []
    for comp in comps:
        if max(abs(c.psi_at(s)) for s in comp.sites) <= thr:
            zero.append(comp)
    nonsep = len(comps) >= 2 and len(zero) >= 1
    diag = (
        f"{len(comps)} overlap component(s), {len(zero)} below eps={thr:.3e}; "
        f"nonseparable={nonsep}"
    )
    return CoverAnalysis(X, Y, comps, zero, nonsep, thr, diag)


def transport_equivalent(
    c1: FieldConfig,
    c2: FieldConfig,
    region: Region,
    eps: Optional[float] = None,
    tol: float = 1e-8,
) -> bool:
    """Gauge-equivalence of two configs restricted to a connected region,
    tolerating zero-field pockets.

    Integrates the candidate gauge function along a spanning tree of the
    region from the link-value differences, fixes the free constant at a
    nonvanishing site, then checks every induced link (circularly) and every
    nonvanishing site.
    """
    if c1.lattice != c2.lattice:
        raise ValueError("configs live on different lattices")
    sites = [s for s in sorted(region.sites) if c1.is_active(s) and c2.is_active(s)]
    if not sites:
        raise ValueError("region has no active sites")
    thr1 = c1.zero_threshold(eps)
    thr2 = c2.zero_threshold(eps)
    if np.max(np.abs(np.abs(c1.psi) - np.abs(c2.psi))[c1.mask & c2.mask], initial=0.0) > tol:
        return False

    site_set = set(sites)
    lam: dict[Site, float] = {}
    # Integrate link differences over a BFS tree.
    start = sites[0]
    lam[start] = 0.0
    queue = deque([start])
    while queue:
        s = queue.popleft()
        for t in c1.lattice.neighbors(s):
            if t in site_set and t not in lam:
                diff = c2.link_value((s, t)) - c1.link_value((s, t))
                lam[t] = lam[s] + diff
                queue.append(t)
    if len(lam) != len(site_set):
        raise ValueError("region is not connected")

    # Fix the global constant at the first clearly nonvanishing site.
    anchor = next(
        (s for s in sites if abs(c1.psi_at(s)) > thr1 and abs(c2.psi_at(s)) > thr2),
        None,
    )
    offset = 0.0
    if anchor is not None:
        offset = float(np.angle(c2.psi_at(anchor) * np.conj(c1.psi_at(anchor)))) - lam[anchor]

    # Every induced link must close and every nonvanishing site must match.
    for (s, t) in region.induced_links:
        if s not in site_set or t not in site_set:
            continue
        diff = c2.link_value((s, t)) - c1.link_value((s, t))
        if circular_distance(lam[t] - lam[s], diff) > tol:
            return False
    for s in sites:
        if abs(c1.psi_at(s)) > thr1:
            expected = c1.psi_at(s) * np.exp(1j * (lam[s] + offset))
            if abs(expected - c2.psi_at(s)) > tol * max(1.0, abs(c2.psi_at(s))):
                return False
    return True


def _candidate_cuts(c: FieldConfig, zero_comp: Region) -> list[list[tuple]]:
    """Candidate jump cuts inside a zero component.

    Each cut is a list of (array_name, iy, ix) entries addressing the
    link-array elements crossed by a vertical or horizontal jump line
    through the component.
    """
    zs = zero_comp.sites
    xs = sorted({ix for (ix, _) in zs})
    ys = sorted({iy for (_, iy) in zs})
    cuts = []
    # Vertical jump lines between columns jx-1 and jx: horizontal links.
    for jx in xs[1:]:
        links = [
            ("ah", iy, jx - 1)
            for (ix, iy) in zs
            if ix == jx and (jx - 1, iy) in zs
        ]
        if links:
            cuts.append(links)
    # Horizontal jump lines between rows jy-1 and jy: vertical links.
    for jy in ys[1:]:
        links = [
            ("av", jy - 1, ix)
            for (ix, iy) in zs
            if iy == jy and (ix, jy - 1) in zs
        ]
        if links:
            cuts.append(links)
    return cuts


def construct_witness(
    c: FieldConfig,
    analysis: CoverAnalysis,
    delta: float,
    tol: float = 1e-8,
) -> FieldConfig:
    """Build a configuration certifying non-separability of the cover.

    Adds delta to the links crossing a jump line routed through a zero
    overlap component, leaving psi untouched. The result is verified to be
    gauge-equivalent to c on X and on Y separately but to differ globally
    (any loop crossing the cut once picks up delta).
    """
    if not analysis.nonseparable:
        raise NoWitnessError("cover is separable: no witness exists")
    if circular_distance(delta, 0.0) < 1e-12:
        raise ValueError("delta must be nonzero mod 2*pi")
    attempts = 0
    for zero_comp in analysis.zero_components:
        for cut in _candidate_cuts(c, zero_comp):
            attempts += 1
            cand = c.copy()
            for (name, iy, ix) in cut:
                getattr(cand, name)[iy, ix] += delta
            if _verify_witness(c, cand, analysis, tol):
                return cand
    raise NoWitnessError(
        f"no valid jump line found in any zero component ({attempts} cuts tried)"
    )


def _verify_witness(c: FieldConfig, cand: FieldConfig, analysis: CoverAnalysis, tol: float) -> bool:
    for region in (analysis.X, analysis.Y):
        comps = connected_components(region.intersection(cand.active_region()))
        for comp in comps:
            if not transport_equivalent(c, cand, comp, tol=tol):
                return False
    # Global inequivalence: some plaquette flux (wrapped) must move.
    from .holonomy import all_plaquette_fluxes

    shift = circular_distance(all_plaquette_fluxes(cand), all_plaquette_fluxes(c))
    return bool(np.max(shift) > tol)


def glue(cX: FieldConfig, cY: FieldConfig, tol: float = 1e-8) -> FieldConfig:
    """Combine two region-restricted configs into one on the union.

    The restrictions must agree on the shared sites (psi sitewise) and on
    the shared links (circularly) within tol; X's values win where both are
    present.
    """
    if cX.lattice != cY.lattice:
        raise ValueError("configs live on different lattices")
    both = cX.mask & cY.mask
    bad_sites = []
    if both.any():
        mism = both & (np.abs(cX.psi - cY.psi) > tol)
        ys, xs = np.nonzero(mism)
        bad_sites = [(int(x), int(y)) for x, y in zip(xs, ys)]
    bad_links = []
    hboth = cX.hlink_mask() & cY.hlink_mask()
    vboth = cX.vlink_mask() & cY.vlink_mask()
    hmism = hboth & (circular_distance(cX.ah, cY.ah) > tol)
    vmism = vboth & (circular_distance(cX.av, cY.av) > tol)
    ys, xs = np.nonzero(hmism)
    bad_links += [(((int(x), int(y)), (int(x) + 1, int(y)))) for x, y in zip(xs, ys)]
    ys, xs = np.nonzero(vmism)
    bad_links += [(((int(x), int(y)), (int(x), int(y) + 1))) for x, y in zip(xs, ys)]
    if bad_sites or bad_links:
        raise GluingMismatchError(
            f"restrictions disagree on {len(bad_sites)} site(s), {len(bad_links)} link(s)",
            bad_sites=bad_sites,
            bad_links=bad_links,
        )
    mask = cX.mask | cY.mask
    psi = np.where(cX.mask, cX.psi, cY.psi)
    ah = np.where(cX.hlink_mask(), cX.ah, cY.ah)
    av = np.where(cX.vlink_mask(), cX.av, cY.av)
    return FieldConfig(cX.lattice, psi, ah, av, mask)


def phase_transport(c: FieldConfig, path: Path, eps: Optional[float] = None) -> float:
    """Accumulated covariant phase step along an open path of directed links.

    Gauge-invariant; requires |psi| above the zero threshold at every site
    the path visits.
    """
    if not path:
        return 0.0
    thr = c.zero_threshold(eps)
    total = 0.0
    visited = [path[0][0]] + [t for (_, t) in path]
    bad = [s for s in visited if not c.is_active(s) or abs(c.psi_at(s)) <= thr]
    if bad:
        raise ZeroFieldRegionError(bad, thr)
    for (s, t), (s2, _) in zip(path, path[1:] + [(path[-1][1], None)]):
        if t != s2:
            raise ValueError(f"path is not a chain at {t}")
    for (s, t) in path:
        step = np.angle(c.psi_at(t)) - np.angle(c.psi_at(s)) - c.link_value((s, t))
        total += float(wrap_angle(step))
    return total


def shortest_path(region: Region, start: Site, goal: Site) -> Path:
    """Deterministic BFS shortest path between two sites inside a region.

    Ties break by lexicographic site order (via sorted neighbor expansion).
    """
    if start not in region.sites or goal not in region.sites:
        raise ValueError("endpoints must lie inside the region")
    prev: dict[Site, Site] = {start: start}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        if s == goal:
            break
        for n in region.neighbors_in(s):
            if n not in prev:
                prev[n] = s
                queue.append(n)
    if goal not in prev:
        raise ValueError(f"no path from {start} to {goal} inside the region")
    sites = [goal]
    while sites[-1] != start:
        sites.append(prev[sites[-1]])
    sites.reverse()
    return [(sites[i], sites[i + 1]) for i in range(len(sites) - 1)]


def codependence_check(
    c: FieldConfig,
    X: Region,
    Y: Region,
    alpha: Site,
    beta: Site,
    eps: Optional[float] = None,
) -> tuple[float, float, float]:
    """Phase transported from alpha to beta through X and through Y.

    Returns (thetaX, thetaY, residual) where the residual is the wrapped
    mismatch between thetaX - thetaY and the holonomy of the closed loop
    running alpha -> beta through Y and back through X. The identity holds
    exactly up to rounding, for any configuration with nonvanishing psi.
    """
    overlap = X.intersection(Y)
    if alpha not in overlap.sites or beta not in overlap.sites:
        raise ValueError("alpha and beta must lie in both regions")
    path_x = shortest_path(X, alpha, beta)
    path_y = shortest_path(Y, alpha, beta)
    theta_x = phase_transport(c, path_x, eps)
    theta_y = phase_transport(c, path_y, eps)
    loop_links = tuple(path_y) + tuple((t, s) for (s, t) in reversed(path_x))
    loop = Loop(c.lattice, loop_links)
    raw = holonomy(c, loop).raw
    residual = float(np.abs(wrap_angle(theta_x - theta_y - raw)))
    return theta_x, theta_y, residual
