"""Plain-text experiment configuration: INI sections with a strict schema.

Unknown sections or keys are rejected outright — a silent typo in a physics
parameter is worse than a parse error. Flux values may be given either as
the dimensionless e*Phi ("total_flux") or in flux quanta ("flux_quanta",
multiplied by 2*pi); reports always use the dimensionless value.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dynamics import EvolutionParams, InterferenceGeometry, PacketSpec
from .errors import ConfigError
from .holonomy import FluxSpec
from .lattice import Lattice, Region, build_lattice

_SCHEMA = {
    "lattice": {"nx", "ny", "spacing", "boundary"},
    "flux": {"center", "radius", "total_flux", "flux_quanta"},
    "regions": None,  # free-form: every key names a region
    "dynamics": {
        "mass",
        "dt",
        "steps",
        "solver_tol",
        "absorber_width",
        "absorber_strength",
    },
    "packet": {"center", "width", "momentum"},
    "geometry": {
        "nx",
        "ny",
        "spacing",
        "barrier_row",
        "slit_separation",
        "slit_width",
        "solenoid_center_y",
        "solenoid_radius",
        "screen_row",
    },
    "sweep": {"total_flux", "flux_quanta"},
    "invariance": {"count", "rho_min"},
    "separability": {"x", "y", "delta", "zero"},
    "codependence": {"x", "y", "alpha", "beta"},
    "output": {"directory", "formats", "seed"},
}


@dataclass
class ExperimentConfig:
    lattice: Optional[Lattice] = None
    flux: Optional[FluxSpec] = None
    regions: dict[str, Region] = field(default_factory=dict)
    dynamics: Optional[EvolutionParams] = None
    packet: Optional[PacketSpec] = None
    geometry: Optional[InterferenceGeometry] = None
    sweep_fluxes: Optional[list[float]] = None
    invariance_count: int = 100
    invariance_rho_min: float = 0.1
    separability: dict = field(default_factory=dict)
    codependence: dict = field(default_factory=dict)
    output_directory: str = "."
    output_formats: tuple[str, ...] = ("json", "csv")
    seed: Optional[int] = None


def _floats(text: str, n: int, what: str) -> tuple[float, ...]:
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    if len(parts) != n:
        raise ConfigError(f"{what}: expected {n} numbers, got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as e:
        raise ConfigError(f"{what}: {e}") from e


def _int(text: str, what: str) -> int:
    try:
        return int(text)
    except ValueError as e:
        raise ConfigError(f"{what}: not an integer: {text!r}") from e


def _float(text: str, what: str) -> float:
    try:
        return float(text)
    except ValueError as e:
        raise ConfigError(f"{what}: not a number: {text!r}") from e


_RECT = re.compile(r"rect\(\s*(-?\d+)\s*,\s*(-?\d+)\s*,\s*(-?\d+)\s*,\s*(-?\d+)\s*\)")


def parse_region(lattice: Lattice, text: str, name: str) -> Region:
    """Region literal: rect(x0,y0,x1,y1) or full, combined with + and -.

    Corner coordinates are inclusive site indices. Combination is
    left-associative: "full - rect(4,4,7,7)" punches a hole.
    """
    tokens = re.findall(r"rect\([^)]*\)|full|[+-]", text)
    if "".join(tokens).replace(" ", "") != text.replace(" ", ""):
        raise ConfigError(f"region {name!r}: cannot parse {text!r}")
    if not tokens or tokens[0] in "+-":
        raise ConfigError(f"region {name!r}: must start with a term")

    def term(tok: str) -> Region:
        if tok == "full":
            return Region.full(lattice)
        m = _RECT.fullmatch(tok)
        if not m:
            raise ConfigError(f"region {name!r}: bad term {tok!r}")
        x0, y0, x1, y1 = (int(g) for g in m.groups())
        if not (0 <= x0 <= x1 < lattice.nx and 0 <= y0 <= y1 < lattice.ny):
            raise ConfigError(f"region {name!r}: rect out of bounds: {tok}")
        return Region.rect(lattice, x0, y0, x1, y1)

    result = term(tokens[0])
    i = 1
    while i < len(tokens):
        op = tokens[i]
        if op not in "+-" or i + 1 >= len(tokens):
            raise ConfigError(f"region {name!r}: dangling operator in {text!r}")
        rhs = term(tokens[i + 1])
        result = result.union(rhs) if op == "+" else result.difference(rhs)
        i += 2
    return result


def _flux_value(section, context: str) -> float:
    has_direct = "total_flux" in section
    has_quanta = "flux_quanta" in section
    if has_direct and has_quanta:
        raise ConfigError(f"{context}: give total_flux or flux_quanta, not both")
    if has_direct:
        return _float(section["total_flux"], f"{context}.total_flux")
    if has_quanta:
        return 2.0 * np.pi * _float(section["flux_quanta"], f"{context}.flux_quanta")
    raise ConfigError(f"{context}: total_flux or flux_quanta required")


def _flux_list(section, context: str) -> list[float]:
    has_direct = "total_flux" in section
    has_quanta = "flux_quanta" in section
    if has_direct == has_quanta:
        raise ConfigError(f"{context}: give total_flux or flux_quanta (exactly one)")
    key = "total_flux" if has_direct else "flux_quanta"
    parts = [p for p in re.split(r"[,\s]+", section[key].strip()) if p]
    if not parts:
        raise ConfigError(f"{context}.{key}: empty flux list")
    try:
        vals = [float(p) for p in parts]
    except ValueError as e:
        raise ConfigError(f"{context}.{key}: {e}") from e
    if has_quanta:
        vals = [2.0 * np.pi * v for v in vals]
    return vals


def load_config(path: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as f:
            parser.read_file(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path!r}: {e}") from e
    except configparser.Error as e:
        raise ConfigError(f"malformed config {path!r}: {e}") from e
    return parse_config(parser)


def parse_config(parser: configparser.ConfigParser) -> ExperimentConfig:
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        allowed = _SCHEMA[section]
        if allowed is not None:
            for key in parser[section]:
                if key not in allowed:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")

    cfg = ExperimentConfig()

    if parser.has_section("lattice"):
        s = parser["lattice"]
        boundary = s.get("boundary", "open")
        if boundary not in ("open", "periodic"):
            raise ConfigError(f"lattice.boundary: {boundary!r} not open/periodic")
        cfg.lattice = build_lattice(
            _int(s.get("nx", "32"), "lattice.nx"),
            _int(s.get("ny", "32"), "lattice.ny"),
            _float(s.get("spacing", "1.0"), "lattice.spacing"),
            boundary,
        )

    if parser.has_section("flux"):
        s = parser["flux"]
        if "center" not in s or "radius" not in s:
            raise ConfigError("[flux] needs center and radius")
        cx, cy = _floats(s["center"], 2, "flux.center")
        cfg.flux = FluxSpec(
            center=(cx, cy),
            radius=_float(s["radius"], "flux.radius"),
            total_flux=_flux_value(s, "flux"),
        )

    if parser.has_section("regions"):
        if cfg.lattice is None:
            raise ConfigError("[regions] requires a [lattice] section")
        for name, text in parser["regions"].items():
            cfg.regions[name] = parse_region(cfg.lattice, text, name)

    if parser.has_section("dynamics"):
        s = parser["dynamics"]
        cfg.dynamics = EvolutionParams(
            mass=_float(s.get("mass", "1.0"), "dynamics.mass"),
            dt=_float(s.get("dt", "0.2"), "dynamics.dt"),
            steps=_int(s.get("steps", "1000"), "dynamics.steps"),
            solver_tol=_float(s.get("solver_tol", "1e-12"), "dynamics.solver_tol"),
            absorber_width=_int(s.get("absorber_width", "20"), "dynamics.absorber_width"),
            absorber_strength=_float(
                s.get("absorber_strength", "0.05"), "dynamics.absorber_strength"
            ),
        )

    if parser.has_section("packet"):
        s = parser["packet"]
        for key in ("center", "width", "momentum"):
            if key not in s:
                raise ConfigError(f"[packet] needs {key}")
        cfg.packet = PacketSpec(
            center=_floats(s["center"], 2, "packet.center"),
            width=_float(s["width"], "packet.width"),
            momentum=_floats(s["momentum"], 2, "packet.momentum"),
        )

    if parser.has_section("geometry"):
        s = parser["geometry"]
        defaults = InterferenceGeometry()
        cfg.geometry = InterferenceGeometry(
            nx=_int(s.get("nx", str(defaults.nx)), "geometry.nx"),
            ny=_int(s.get("ny", str(defaults.ny)), "geometry.ny"),
            spacing=_float(s.get("spacing", str(defaults.spacing)), "geometry.spacing"),
            barrier_row=_int(
                s.get("barrier_row", str(defaults.barrier_row)), "geometry.barrier_row"
            ),
            slit_separation=_float(
                s.get("slit_separation", str(defaults.slit_separation)),
                "geometry.slit_separation",
            ),
            slit_width=_float(
                s.get("slit_width", str(defaults.slit_width)), "geometry.slit_width"
            ),
            solenoid_center_y=_float(
                s.get("solenoid_center_y", str(defaults.solenoid_center_y)),
                "geometry.solenoid_center_y",
            ),
            solenoid_radius=_float(
                s.get("solenoid_radius", str(defaults.solenoid_radius)),
                "geometry.solenoid_radius",
            ),
            screen_row=_int(
                s.get("screen_row", str(defaults.screen_row)), "geometry.screen_row"
            ),
        )

    if parser.has_section("sweep"):
        cfg.sweep_fluxes = _flux_list(parser["sweep"], "sweep")

    if parser.has_section("invariance"):
        s = parser["invariance"]
        cfg.invariance_count = _int(s.get("count", "100"), "invariance.count")
        if cfg.invariance_count < 0:
            raise ConfigError("invariance.count must be nonnegative")
        cfg.invariance_rho_min = _float(s.get("rho_min", "0.1"), "invariance.rho_min")

    if parser.has_section("separability"):
        s = parser["separability"]
        for key in ("x", "y"):
            if key not in s:
                raise ConfigError(f"[separability] needs {key}")
        cfg.separability = {
            "x": s["x"],
            "y": s["y"],
            "delta": _float(s["delta"], "separability.delta") if "delta" in s else None,
            "zero": s.get("zero"),
        }

    if parser.has_section("codependence"):
        s = parser["codependence"]
        for key in ("x", "y", "alpha", "beta"):
            if key not in s:
                raise ConfigError(f"[codependence] needs {key}")
        ax, ay = _floats(s["alpha"], 2, "codependence.alpha")
        bx, by = _floats(s["beta"], 2, "codependence.beta")
        cfg.codependence = {
            "x": s["x"],
            "y": s["y"],
            "alpha": (int(ax), int(ay)),
            "beta": (int(bx), int(by)),
        }

    if parser.has_section("output"):
        s = parser["output"]
        cfg.output_directory = s.get("directory", ".")
        formats = tuple(
            p for p in re.split(r"[,\s]+", s.get("formats", "json,csv")) if p
        )
        for fmt in formats:
            if fmt not in ("json", "csv", "binary"):
                raise ConfigError(f"output.formats: unknown format {fmt!r}")
        cfg.output_formats = formats
        if "seed" in s:
            cfg.seed = _int(s["seed"], "output.seed")

    return cfg
