"""Command-line front end: analysis subcommands with file reports.

Every subcommand writes its delimited results (JSON/CSV, optionally binary
field files) plus rendered figures into the output directory. Exit status
is 0 only when every check the command ran passed; configuration or usage
problems exit 2.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import time

import numpy as np

from .config import ExperimentConfig, load_config
from .dynamics import (
    InterferenceGeometry,
    default_experiment_params,
    default_packet,
    fit_fringes,
    pattern_shift,
    predicted_shift,
    run_interference,
)
from .errors import ConfigError, ExperimentFailureError, FormatError, NoWitnessError
from .fields import (
    GaugeTransform,
    apply_gauge,
    circular_distance,
    extract_invariants,
    gauge_equivalent,
    random_config,
    reconstruct,
    wrap_angle,
)
from .holonomy import (
    coulomb_gauge_fix,
    interior_divergence,
    solenoid_config,
    stokes_residual,
    unitary_gauge_fix,
)
from .lattice import Loop, build_lattice
from .separability import analyze_cover, codependence_check, construct_witness
from .serialization import (
    MAGIC,
    config_from_bytes,
    config_from_json,
    config_to_bytes,
    config_to_json,
)


def atomic_write(path: str, data) -> None:
    """Write a file via a temp name in the same directory, then rename."""
    mode = "wb" if isinstance(data, bytes) else "w"
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, mode) as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str, doc) -> None:
    atomic_write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def write_csv(path: str, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    atomic_write(path, buf.getvalue())


def write_metadata(outdir: str, command: str) -> None:
    """Timestamps are quarantined here so result files stay deterministic."""
    from . import __version__

    write_json(
        os.path.join(outdir, "run-metadata.json"),
        {"command": command, "version": __version__, "unix_time": time.time()},
    )



def _seed(cfg: ExperimentConfig, args) -> int:
    if args.seed is not None:
        return args.seed
    if cfg.seed is not None:
        return cfg.seed
    return 0


def cmd_check_invariance(cfg: ExperimentConfig, args) -> int:
    lat = cfg.lattice or build_lattice(32, 32, 1.0, "open")
    n = cfg.invariance_count
    seed = _seed(cfg, args)
    worst = 0.0
    failed = 0
    for i in range(n):
        c = random_config(lat, seed=seed + i, rho_min=cfg.invariance_rho_min)
        g = GaugeTransform.random(lat, seed=seed + 100_000 + i)
        inv1 = extract_invariants(c)
        inv2 = extract_invariants(apply_gauge(c, g))
        resid = max(
            float(np.max(circular_distance(inv1.dh, inv2.dh))),
            float(np.max(circular_distance(inv1.dv, inv2.dv))),
            float(np.max(np.abs(inv1.rho - inv2.rho))),
        )
        ok = resid < 1e-10
        # Completeness: the reconstruction must be gauge-equivalent back.
        if gauge_equivalent(reconstruct(inv1), c) is None:
            ok = False
        worst = max(worst, resid)
        failed += 0 if ok else 1
    report = {"checked": n, "passed": n - failed, "failed": failed, "worst_residual": worst}
    write_json(os.path.join(args.out, "invariance-report.json"), report)
    write_metadata(args.out, "check-invariance")
    print(json.dumps(report))
    return 0 if failed == 0 else 1


def cmd_check_stokes(cfg: ExperimentConfig, args) -> int:
    lat = cfg.lattice or build_lattice(32, 32, 1.0, "open")
    seed = _seed(cfg, args)
    rng = np.random.default_rng(seed)
    n = cfg.invariance_count
    worst = 0.0
    failed = 0
    for i in range(n):
        c = random_config(lat, seed=seed + i)
        x0 = int(rng.integers(0, lat.nx - 2))
        y0 = int(rng.integers(0, lat.ny - 2))
        x1 = int(rng.integers(x0 + 1, lat.nx - 1))
        y1 = int(rng.integers(y0 + 1, lat.ny - 1))
        resid = stokes_residual(c, Loop.rectangle(lat, x0, y0, x1, y1))
        worst = max(worst, resid)
        failed += 0 if resid <= 1e-10 else 1
    report = {"checked": n, "passed": n - failed, "failed": failed, "worst_residual": worst}
    write_json(os.path.join(args.out, "stokes-report.json"), report)
    write_metadata(args.out, "check-stokes")
    print(json.dumps(report))
    return 0 if failed == 0 else 1


def _solenoid_from_config(cfg: ExperimentConfig):
    if cfg.lattice is None or cfg.flux is None:
        raise ConfigError("this command needs [lattice] and [flux] sections")
    return solenoid_config(cfg.lattice, cfg.flux)


def cmd_separability(cfg: ExperimentConfig, args) -> int:
    from .plotting import plot_region_map

    c = _solenoid_from_config(cfg)
    spec = cfg.separability
    if not spec:
        raise ConfigError("this command needs a [separability] config section")
    try:
        X = cfg.regions[spec["x"]]
        Y = cfg.regions[spec["y"]]
    except KeyError as e:
        raise ConfigError(f"separability references unknown region {e}") from e
    zero_sites = []
    if spec.get("zero"):
        if spec["zero"] not in cfg.regions:
            raise ConfigError(f"unknown zero region {spec['zero']!r}")
        zero_sites = sorted(cfg.regions[spec["zero"]].sites)
        for (ix, iy) in zero_sites:
            c.psi[iy, ix] = 0.0
    analysis = analyze_cover(c, X, Y)
    report = analysis.to_dict()
    report["witness_written"] = False
    status = 0
    if analysis.nonseparable and spec.get("delta") is not None:
        try:
            witness = construct_witness(c, analysis, spec["delta"])
            for fmt in cfg.output_formats:
                if fmt == "json":
                    atomic_write(
                        os.path.join(args.out, "witness.json"), config_to_json(witness)
                    )
                elif fmt == "binary":
                    atomic_write(
                        os.path.join(args.out, "witness.bin"), config_to_bytes(witness)
                    )
            report["witness_written"] = True
            report["witness_delta"] = spec["delta"]
        except NoWitnessError as e:
            report["witness_error"] = str(e)
            status = 1
    write_json(os.path.join(args.out, "separability-report.json"), report)
    plot_region_map(
        c, X, Y, os.path.join(args.out, "cover-map.png"), zero_sites=zero_sites
    )
    write_metadata(args.out, "separability")
    print(json.dumps(report))
    return status


def cmd_codependence(cfg: ExperimentConfig, args) -> int:
    c = _solenoid_from_config(cfg)
    spec = cfg.codependence
    if not spec:
        raise ConfigError("this command needs a [codependence] config section")
    try:
        X = cfg.regions[spec["x"]]
        Y = cfg.regions[spec["y"]]
    except KeyError as e:
        raise ConfigError(f"codependence references unknown region {e}") from e
    theta_x, theta_y, resid = codependence_check(c, X, Y, spec["alpha"], spec["beta"])
    e_flux = cfg.flux.total_flux
    phase_gap = float(wrap_angle(theta_x - theta_y))
    report = {
        "theta_x": theta_x,
        "theta_y": theta_y,
        "phase_gap_wrapped": phase_gap,
        "e_flux": e_flux,
        "loop_residual": resid,
        "matches_flux": bool(abs(wrap_angle(phase_gap - e_flux)) <= 1e-8),
    }
    write_json(os.path.join(args.out, "codependence-report.json"), report)
    write_metadata(args.out, "codependence")
    print(json.dumps(report))
    return 0 if report["matches_flux"] else 1


def cmd_ab_sweep(cfg: ExperimentConfig, args) -> int:
    from .plotting import plot_screen_intensity, plot_shift_sweep

    geometry = cfg.geometry or InterferenceGeometry()
    params = cfg.dynamics or default_experiment_params()
    packet = cfg.packet or default_packet(geometry)
    fluxes = cfg.sweep_fluxes
    if not fluxes:
        raise ConfigError("this command needs a [sweep] section with flux values")

    reference = run_interference(geometry, geometry.flux_spec(0.0), params, packet)
    ref_fit = fit_fringes(reference)
    write_csv(
        os.path.join(args.out, "intensity-reference.csv"),
        ["screen_site", "intensity"],
        [(i, f"{v:.17g}") for i, v in enumerate(reference)],
    )
    plot_screen_intensity(
        reference,
        os.path.join(args.out, "intensity-reference.png"),
        title="screen intensity, flux = 0",
    )

    rows = []
    status = 0
    plotted = []
    for idx, e_flux in enumerate(sorted(fluxes)):
        tag = f"{idx:02d}"
        try:
            intensity = run_interference(
                geometry, geometry.flux_spec(e_flux), params, packet
            )
        except ExperimentFailureError as e:
            rows.append((f"{e_flux:.17g}", "failed", "", "", str(e)))
            status = 1
            continue
        shift = (
            0.0 if e_flux == 0.0 else pattern_shift(intensity, reference, ref_fit.k)
        )
        fit = fit_fringes(intensity, k=ref_fit.k)
        pred = predicted_shift(e_flux)
        err = abs(float(wrap_angle(shift - pred)))
        rows.append(
            (
                f"{e_flux:.17g}",
                f"{shift:.17g}",
                f"{pred:.17g}",
                f"{err:.17g}",
                f"{fit.quality:.17g}",
            )
        )
        write_csv(
            os.path.join(args.out, f"intensity-{tag}.csv"),
            ["screen_site", "intensity"],
            [(i, f"{v:.17g}") for i, v in enumerate(intensity)],
        )
        plot_screen_intensity(
            intensity,
            os.path.join(args.out, f"intensity-{tag}.png"),
            reference=reference,
            title=f"screen intensity, e*Phi = {e_flux:.4g}",
        )
        plotted.append((e_flux, shift, pred))
    write_csv(
        os.path.join(args.out, "sweep-summary.csv"),
        ["e_flux", "extracted_shift", "predicted_shift", "abs_error", "fit_quality"],
        rows,
    )
    if plotted:
        plot_shift_sweep(
            [p[0] for p in plotted],
            [p[1] for p in plotted],
            [p[2] for p in plotted],
            os.path.join(args.out, "shift-sweep.png"),
        )
    summary = {
        "n_points": len(fluxes),
        "n_failed": sum(1 for r in rows if r[1] == "failed"),
        "reference_k": ref_fit.k,
        "reference_visibility": ref_fit.visibility,
    }
    write_json(os.path.join(args.out, "sweep-summary.json"), summary)
    write_metadata(args.out, "ab-sweep")
    print(json.dumps(summary))
    return status


def cmd_gauge_fix(cfg: ExperimentConfig, args) -> int:
    c = _load_field(args.input)
    if args.mode == "coulomb":
        fixed = coulomb_gauge_fix(c)
        report = {"mode": "coulomb", "interior_divergence": interior_divergence(fixed)}
    else:
        fixed = unitary_gauge_fix(c)
        report = {
            "mode": "unitary",
            "max_imag_psi": float(np.max(np.abs(fixed.psi.imag))),
        }
    out_path = os.path.join(args.out, f"gauge-fixed.{_ext(args.format)}")
    atomic_write(out_path, _encode_field(fixed, args.format))
    write_json(os.path.join(args.out, "gauge-fix-report.json"), report)
    write_metadata(args.out, "gauge-fix")
    print(json.dumps(report))
    return 0


def _ext(fmt: str) -> str:
    return "bin" if fmt == "binary" else "json"


def _encode_field(c, fmt: str):
    if fmt == "binary":
        return config_to_bytes(c)
    if fmt == "json":
        return config_to_json(c)
    raise ConfigError(f"field files support json or binary, not {fmt!r}")


def _load_field(path: str):
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read {path!r}: {e}") from e
    if raw[: len(MAGIC)] == MAGIC:
        return config_from_bytes(raw)
    return config_from_json(raw.decode("utf-8", errors="replace"))


def cmd_dump(cfg: ExperimentConfig, args) -> int:
    c = _solenoid_from_config(cfg)
    out_path = os.path.join(args.out, f"field.{_ext(args.format)}")
    atomic_write(out_path, _encode_field(c, args.format))
    write_metadata(args.out, "dump")
    print(out_path)
    return 0


def cmd_load(cfg: ExperimentConfig, args) -> int:
    c = _load_field(args.input)
    lat = c.lattice
    summary = {
        "nx": lat.nx,
        "ny": lat.ny,
        "spacing": lat.spacing,
        "boundary": lat.boundary,
        "active_sites": int(np.sum(c.mask)),
        "max_abs_psi": float(np.max(np.abs(c.psi))),
    }
    if args.convert:
        out_path = os.path.join(args.out, f"field.{_ext(args.format)}")
        atomic_write(out_path, _encode_field(c, args.format))
        summary["converted_to"] = out_path
        write_metadata(args.out, "load")
    print(json.dumps(summary))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ablattice",
        description="U(1) lattice field analysis and interference experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_input=False):
        p.add_argument("--config", default=None, help="experiment config file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override RNG seed")
        p.add_argument(
            "--format",
            choices=("json", "csv", "binary"),
            default="json",
            help="field-file format where applicable",
        )
        if needs_input:
            p.add_argument("input", help="field configuration file")

    common(sub.add_parser("check-invariance", help="gauge-invariance property suite"))
    common(sub.add_parser("check-stokes", help="holonomy vs enclosed-flux identity"))
    common(sub.add_parser("separability", help="cover analysis and witness files"))
    common(sub.add_parser("codependence", help="two-path phase comparison"))
    common(sub.add_parser("ab-sweep", help="interference shift across a flux sweep"))
    p = sub.add_parser("gauge-fix", help="re-gauge a stored field configuration")
    common(p, needs_input=True)
    p.add_argument("--mode", choices=("coulomb", "unitary"), default="coulomb")
    common(sub.add_parser("dump", help="write the configured solenoid field to disk"))
    p = sub.add_parser("load", help="read and summarize a stored field")
    common(p, needs_input=True)
    p.add_argument(
        "--convert", action="store_true", help="re-emit in --format under --out"
    )
    return parser


_COMMANDS = {
    "check-invariance": cmd_check_invariance,
    "check-stokes": cmd_check_stokes,
    "separability": cmd_separability,
    "codependence": cmd_codependence,
    "ab-sweep": cmd_ab_sweep,
    "gauge-fix": cmd_gauge_fix,
    "dump": cmd_dump,
    "load": cmd_load,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FormatError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
