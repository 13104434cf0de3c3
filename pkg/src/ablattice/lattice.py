"""Rectangular 2D lattice geometry: sites, directed links, plaquettes, regions, loops.

Site coordinates are integer pairs (ix, iy) with 0 <= ix < nx, 0 <= iy < ny.
Sites are indexed row-major: index = iy * nx + ix. Horizontal links point in
+x, vertical links in +y; a directed link is an ordered pair of adjacent
sites. Plaquettes are labelled by their lower-left corner (px, py) and
oriented counterclockwise.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator

from .errors import NotSupportedError

Site = tuple[int, int]
DirectedLink = tuple[Site, Site]

OPEN = "open"
PERIODIC = "periodic"


@dataclass(frozen=True)
class Lattice:
    """Rectangular lattice of nx x ny sites with uniform spacing."""

    nx: int
    ny: int
    spacing: float = 1.0
    boundary: str = OPEN

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError(f"lattice needs nx, ny >= 2, got {self.nx}x{self.ny}")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        if self.boundary not in (OPEN, PERIODIC):
            raise ValueError(f"unknown boundary {self.boundary!r}")

    # -- counts ------------------------------------------------------------

    @property
    def periodic(self) -> bool:
        return self.boundary == PERIODIC

    @property
    def n_sites(self) -> int:
        return self.nx * self.ny

    @property
    def n_hlinks_per_row(self) -> int:
        return self.nx if self.periodic else self.nx - 1

    @property
    def n_vlink_rows(self) -> int:
        return self.ny if self.periodic else self.ny - 1

    @property
    def n_links(self) -> int:
        return self.ny * self.n_hlinks_per_row + self.n_vlink_rows * self.nx

    @property
    def n_plaquettes(self) -> int:
        if self.periodic:
            return self.nx * self.ny
        return (self.nx - 1) * (self.ny - 1)

    # -- enumeration -------------------------------------------------------

    def site_index(self, site: Site) -> int:
        ix, iy = site
        return iy * self.nx + ix

    def sites(self) -> Iterator[Site]:
        for iy in range(self.ny):
            for ix in range(self.nx):
                yield (ix, iy)

    def in_bounds(self, site: Site) -> bool:
        ix, iy = site
        return 0 <= ix < self.nx and 0 <= iy < self.ny

    def wrap_site(self, site: Site) -> Site:
        ix, iy = site
        if self.periodic:
            return (ix % self.nx, iy % self.ny)
        return site

    def neighbors(self, site: Site) -> list[Site]:
        """Adjacent sites, lexicographically ordered for determinism."""
        ix, iy = site
        out = []
        for jx, jy in ((ix - 1, iy), (ix, iy - 1), (ix, iy + 1), (ix + 1, iy)):
            if self.periodic:
                out.append((jx % self.nx, jy % self.ny))
            elif 0 <= jx < self.nx and 0 <= jy < self.ny:
                out.append((jx, jy))
        return out

    def links(self) -> Iterator[DirectedLink]:
        """Every undirected link once, in its canonical (+x / +y) direction."""
        for iy in range(self.ny):
            for ix in range(self.n_hlinks_per_row):
                yield ((ix, iy), self.wrap_site((ix + 1, iy)))
        for iy in range(self.n_vlink_rows):
            for ix in range(self.nx):
                yield ((ix, iy), self.wrap_site((ix, iy + 1)))

    def plaquettes(self) -> Iterator[Site]:
        pnx = self.nx if self.periodic else self.nx - 1
        pny = self.ny if self.periodic else self.ny - 1
        for py in range(pny):
            for px in range(pnx):
                yield (px, py)

    def plaquette_corners(self, p: Site) -> tuple[Site, Site, Site, Site]:
        px, py = p
        return (
            self.wrap_site((px, py)),
            self.wrap_site((px + 1, py)),
            self.wrap_site((px + 1, py + 1)),
            self.wrap_site((px, py + 1)),
        )

    def plaquette_boundary(self, p: Site) -> tuple[DirectedLink, ...]:
        """The four boundary links of plaquette p, counterclockwise."""
        a, b, c, d = self.plaquette_corners(p)
        return ((a, b), (b, c), (c, d), (d, a))

    def is_link(self, link: DirectedLink) -> bool:
        s, t = link
        if not (self.in_bounds(s) and self.in_bounds(t)):
            return False
        return t in self.neighbors(s)


def build_lattice(nx: int, ny: int, spacing: float = 1.0, boundary: str = OPEN) -> Lattice:
    """Construct a lattice, validating dimensions and spacing."""
    return Lattice(nx=nx, ny=ny, spacing=spacing, boundary=boundary)


@dataclass(frozen=True)
class Region:
    """A set of lattice sites with its induced links and plaquettes.

    The induced links are exactly the lattice links with both endpoints in
    the site set; induced plaquettes have all four corners in the set.
    """

    lattice: Lattice
    sites: frozenset[Site]

    def __post_init__(self):
        for s in self.sites:
            if not self.lattice.in_bounds(s):
                raise ValueError(f"site {s} outside lattice")

    @classmethod
    def from_sites(cls, lattice: Lattice, sites: Iterable[Site]) -> "Region":
        return cls(lattice, frozenset(sites))

    @classmethod
    def rect(cls, lattice: Lattice, x0: int, y0: int, x1: int, y1: int) -> "Region":
        """Rectangle of sites with inclusive integer corner coordinates."""
        if x1 < x0 or y1 < y0:
            raise ValueError(f"degenerate rectangle ({x0},{y0})-({x1},{y1})")
        sites = {
            (ix, iy)
            for ix in range(x0, x1 + 1)
            for iy in range(y0, y1 + 1)
            if lattice.in_bounds((ix, iy))
        }
        return cls(lattice, frozenset(sites))

    @classmethod
    def full(cls, lattice: Lattice) -> "Region":
        return cls(lattice, frozenset(lattice.sites()))

    def __contains__(self, site: Site) -> bool:
        return site in self.sites

    def __len__(self) -> int:
        return len(self.sites)

    def union(self, other: "Region") -> "Region":
        self._check_same_lattice(other)
        return Region(self.lattice, self.sites | other.sites)

    def difference(self, other: "Region") -> "Region":
        self._check_same_lattice(other)
        return Region(self.lattice, self.sites - other.sites)

    def intersection(self, other: "Region") -> "Region":
        self._check_same_lattice(other)
        return Region(self.lattice, self.sites & other.sites)

    def _check_same_lattice(self, other: "Region"):
        if self.lattice != other.lattice:
            raise ValueError("regions live on different lattices")

    @cached_property
    def induced_links(self) -> frozenset[DirectedLink]:
        """Canonical-direction links with both endpoints in the region."""
        return frozenset(
            (s, t) for (s, t) in self.lattice.links() if s in self.sites and t in self.sites
        )

    @cached_property
    def induced_plaquettes(self) -> frozenset[Site]:
        return frozenset(
            p
            for p in self.lattice.plaquettes()
            if all(c in self.sites for c in self.lattice.plaquette_corners(p))
        )

    def neighbors_in(self, site: Site) -> list[Site]:
        return [n for n in self.lattice.neighbors(site) if n in self.sites]


def connected_components(region: Region) -> list[Region]:
    """Partition a region into maximal components connected by induced links.

    Components are returned sorted by their lexicographically smallest site,
    so the output order is deterministic.
    """
    if not region.sites:
        raise ValueError("cannot take components of an empty region")
    unseen = set(region.sites)
    comps = []
    while unseen:
        seed = min(unseen)
        comp = {seed}
        queue = deque([seed])
        unseen.discard(seed)
        while queue:
            s = queue.popleft()
            for n in region.neighbors_in(s):
                if n in unseen:
                    unseen.discard(n)
                    comp.add(n)
                    queue.append(n)
        comps.append(Region(region.lattice, frozenset(comp)))
    comps.sort(key=lambda r: min(r.sites))
    return comps


def cycle_rank(region: Region) -> int:
    """Rank of the region's link cycle space: #links - #sites + #components."""
    ncomp = len(connected_components(region))
    return len(region.induced_links) - len(region.sites) + ncomp


def is_simply_connected(region: Region) -> bool:
    """True iff the region is connected and every independent link cycle is
    filled by a plaquette induced in the region.

    Disconnected regions count as not simply connected. Periodic lattices are
    rejected: the wrap-around cycles of the torus are outside this analysis.
    """
    if not region.sites:
        raise ValueError("cannot analyze an empty region")
    if region.lattice.periodic:
        raise NotSupportedError("simple-connectedness is only defined for open lattices")
    comps = connected_components(region)
    if len(comps) != 1:
        return False
    rank = len(region.induced_links) - len(region.sites) + 1
    return rank == len(region.induced_plaquettes)


@dataclass(frozen=True)
class Loop:
    """A closed path of directed links on the lattice."""

    lattice: Lattice
    links: tuple[DirectedLink, ...]

    def __post_init__(self):
        if not self.links:
            raise ValueError("a loop needs at least one link")
        for link in self.links:
            if not self.lattice.is_link(link):
                raise ValueError(f"{link} is not a lattice link")
        for (_, head), (tail, _) in zip(self.links, self.links[1:] + self.links[:1]):
            if head != tail:
                raise ValueError(f"path is not closed: {head} != {tail}")

    @classmethod
    def from_sites(cls, lattice: Lattice, sites: Iterable[Site]) -> "Loop":
        """Build a loop from a closed site sequence (first == last optional)."""
        seq = [tuple(s) for s in sites]
        if len(seq) >= 2 and seq[0] == seq[-1]:
            seq = seq[:-1]
        if len(seq) < 2:
            raise ValueError("need at least two distinct sites")
        links = tuple((seq[i], seq[(i + 1) % len(seq)]) for i in range(len(seq)))
        return cls(lattice, links)

    @classmethod
    def rectangle(cls, lattice: Lattice, x0: int, y0: int, x1: int, y1: int) -> "Loop":
        """Counterclockwise boundary of the rectangle with the given corners."""
        if x1 <= x0 or y1 <= y0:
            raise ValueError("rectangle loop needs x1 > x0 and y1 > y0")
        path = []
        path += [(x, y0) for x in range(x0, x1)]
        path += [(x1, y) for y in range(y0, y1)]
        path += [(x, y1) for x in range(x1, x0, -1)]
        path += [(x0, y) for y in range(y1, y0, -1)]
        return cls.from_sites(lattice, path)

    def reversed(self) -> "Loop":
        return Loop(self.lattice, tuple((t, s) for (s, t) in reversed(self.links)))

    def concatenate(self, other: "Loop") -> "Loop":
        """Join two loops sharing this loop's start site."""
        if self.lattice != other.lattice:
            raise ValueError("loops live on different lattices")
        if self.links[0][0] != other.links[0][0]:
            raise ValueError("loops do not share a basepoint")
        return Loop(self.lattice, self.links + other.links)

    def site_sequence(self) -> list[Site]:
        return [s for (s, _) in self.links]


def enclosed_plaquettes(loop: Loop) -> dict[Site, int]:
    """Winding number of the loop around each plaquette center.

    Counterclockwise winding is positive; plaquettes with zero winding are
    omitted. Computed exactly by counting signed crossings of a rightward
    ray from each plaquette center: only vertical links can cross it.
    """
    lat = loop.lattice
    if lat.periodic:
        raise NotSupportedError("enclosed plaquettes are only defined for open lattices")
    vlinks = []  # (x, ylow, sign): sign +1 for upward traversal
    xs, ys = [], []
    for (sx, sy), (tx, ty) in loop.links:
        xs += [sx]
        ys += [sy]
        if sx == tx:
            vlinks.append((sx, min(sy, ty), +1 if ty > sy else -1))
    if not vlinks:
        return {}
    out: dict[Site, int] = {}
    for py in range(min(ys), max(ys)):
        for px in range(min(xs), max(xs)):
            w = sum(sign for (x, ylow, sign) in vlinks if ylow == py and x >= px + 1)
            if w != 0:
                out[(px, py)] = w
    return out
