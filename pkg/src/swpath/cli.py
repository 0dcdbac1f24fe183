"""Scenario runner: each experiment is a named subcommand emitting artifacts.

Commands: ``straight``, ``layers``, ``widths``, ``tjunction``, ``corners``,
``raytrace``, ``validate``, ``render``. Outputs are CSV tables plus PGM/raw
field snapshots, written atomically; a failed scenario keeps its partial
files under a ``.partial`` suffix and exits with status 1. Bad arguments
exit with status 2.

Configuration is a ``key = value`` file with bracketed sections (see
``configs/default.cfg``); command-line flags override the file, which
overrides built-in defaults (the measured-surface parameter set).
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import analysis, artifacts, dsl, layout, physics, raytrace, scenes
from .physics import DielectricSpec, MetalSpec, SurfaceConfig
from .solver import PROFILES, Scene, SolverConfig, build_scene, run, transmission


@dataclass
class Settings:
    surface: SurfaceConfig
    solver: SolverConfig
    profile: str
    out_dir: str
    eval_freqs: tuple[float, ...]
    materials: dict
    experiments: dict[str, str] = field(default_factory=dict)
    raytrace_opts: dict[str, str] = field(default_factory=dict)


def _parse_float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.replace(",", " ").split()]


def _parse_int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.replace(",", " ").split()]


def _load_settings(args) -> Settings:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    if args.config:
        if not cp.read(args.config):
            raise SystemExit(f"error: cannot read config file {args.config!r}")
    surf_cfg = cp["surface"] if cp.has_section("surface") else {}
    sol_cfg = cp["solver"] if cp.has_section("solver") else {}
    exp_cfg = dict(cp["experiments"]) if cp.has_section("experiments") else {}
    ray_cfg = dict(cp["raytrace"]) if cp.has_section("raytrace") else {}

    materials = physics.load_materials(surf_cfg.get("materials_file") or None)
    diel = materials.get(surf_cfg.get("dielectric", "resin"))
    ground = materials.get(surf_cfg.get("ground", "silver_ink"))
    if not isinstance(diel, DielectricSpec):
        raise SystemExit(f"error: surface dielectric {surf_cfg.get('dielectric')!r} not in database")
    if not isinstance(ground, MetalSpec):
        raise SystemExit(f"error: ground metal {surf_cfg.get('ground')!r} not in database")
    diel = replace(
        diel,
        eps_r=float(surf_cfg.get("eps_r", diel.eps_r)),
        tan_delta=float(surf_cfg.get("tan_delta", diel.tan_delta)),
        thickness_h=float(surf_cfg.get("thickness_mm", 2.0)) * 1e-3,
    )
    surface = SurfaceConfig(
        dielectric=diel,
        ground=ground,
        porosity_geometry=physics.PorosityGeometry(
            cavity_radius_r=float(surf_cfg.get("cavity_radius_mm", 0.5)) * 1e-3,
            cavity_pitch_ws=float(surf_cfg.get("pitch_mm", 2.0)) * 1e-3,
        ),
        transducer_aperture_w=float(surf_cfg.get("aperture_w_mm", 7.112)) * 1e-3,
        transducer_aperture_h=float(surf_cfg.get("aperture_h_mm", 3.566)) * 1e-3,
    )

    profile = args.profile or sol_cfg.get("profile", "desk")
    if profile not in PROFILES:
        raise SystemExit(f"error: unknown profile {profile!r}")
    dft = tuple(np.arange(
        float(sol_cfg.get("dft_start_ghz", 21.0)) * 1e9,
        float(sol_cfg.get("dft_stop_ghz", 42.0)) * 1e9 + 1e6,
        float(sol_cfg.get("dft_step_ghz", 0.25)) * 1e9,
    ))
    solver = SolverConfig(
        cell_size=PROFILES[profile],
        courant_factor=float(sol_cfg.get("courant", 0.99 / math.sqrt(2))),
        pml_cells=int(sol_cfg.get("pml_cells", 10)),
        pulse_center_f=float(sol_cfg.get("center_ghz", 26.0)) * 1e9,
        pulse_bandwidth=float(sol_cfg.get("bandwidth_ghz", 33.0)) * 1e9,
        confinement_kappa=float(sol_cfg.get("kappa", physics.DEFAULT_KAPPA)),
        workers=args.workers or int(sol_cfg.get("workers", 1)),
        dft_frequencies=dft,
    )
    eval_freqs = tuple(f * 1e9 for f in _parse_float_list(args.freqs))
    return Settings(
        surface=surface, solver=solver, profile=profile,
        out_dir=args.out, eval_freqs=eval_freqs,
        materials=materials, experiments=exp_cfg, raytrace_opts=ray_cfg,
    )


class Scenario:
    """Collects artifacts for one scenario; commits them atomically.

    Files are staged under ``<name>.partial`` and renamed on success, so an
    aborted scenario leaves its partial outputs inspectable.
    """

    def __init__(self, out_dir: str, name: str):
        self.dir = os.path.join(out_dir, name)
        self.staged: list[tuple[str, str]] = []

    def write(self, filename: str, data: bytes | str) -> None:
        final = os.path.join(self.dir, filename)
        partial = final + ".partial"
        artifacts.atomic_write(partial, data)
        self.staged.append((partial, final))

    def commit(self) -> None:
        for partial, final in self.staged:
            os.replace(partial, final)
        self.staged.clear()


def _log(msg: str) -> None:
    print(msg, flush=True)


def _run_scene(scene: Scene, cfg: SolverConfig, *, snapshot: bool = False):
    state = build_scene(scene, cfg=cfg)
    t0 = time.time()
    result = run(state, snapshot=snapshot)
    _log(f"  {scene.name}: {result.steps} steps, {time.time() - t0:.1f}s"
         + ("" if result.converged else " [hit max steps]"))
    return state, result


def _distance_curves(result, distances, layout_id, prefix="d"):
    ref = result.probe("ref")
    return [
        transmission(result.probe(f"{prefix}{scenes._mm(d)}"), ref,
                     layout_id=layout_id, distance_m=d)
        for d in distances
    ]


def _metrics_rows(curves, fit: analysis.AttenuationFit | None, isolation_db=None):
    rows = []
    for c in curves:
        peak = analysis.optimal_frequency(c)
        band = analysis.half_power_band(c)
        rows.append({
            "layout": c.layout_id,
            "d_mm": c.distance_m * 1e3,
            "f_opt_ghz": peak.frequency / 1e9,
            "band_lo_ghz": band.lo / 1e9,
            "band_hi_ghz": band.hi / 1e9,
            "avg_s21_db": analysis.band_average_s21(c, band),
            "slope_db_per_m": fit.slope_db_per_m if fit else "",
            "r2": fit.r_squared if fit else "",
            "isolation_db": isolation_db if isolation_db is not None else "",
        })
    return rows


# -- commands ---------------------------------------------------------------


def cmd_straight(args, st: Settings) -> int:
    distances = tuple(d * 1e-3 for d in _parse_float_list(
        args.distances or st.experiments.get("distances_mm", "50,70,90,110,130,150")))
    width = (args.width or float(st.experiments.get("width_mm", 10.0))) * 1e-3
    layers = args.layers or 1
    sc = Scenario(st.out_dir, "straight")
    scene = scenes.straight_scene(st.solver, st.surface, width_wc=width,
                                  layers=layers, distances=distances)
    _log(f"straight: wc={width*1e3:g} mm, layers={layers}, "
         f"{len(distances)} distances, profile={st.profile}")
    state, result = _run_scene(scene, st.solver, snapshot=True)
    curves = _distance_curves(result, distances, scene.name)
    fit = analysis.attenuation_fit(curves, st.eval_freqs[0])
    iso = None
    if "mirror" in result.probes:
        at = min(distances, key=lambda d: abs(d - 80e-3))
        c_in = next(c for c in curves if abs(c.distance_m - at) < 1e-9)
        c_mir = transmission(result.probe("mirror"), result.probe("ref"))
        iso = analysis.isolation(c_in.value_at(st.eval_freqs[0]),
                                 c_mir.value_at(st.eval_freqs[0]))
    sc.write("probes.csv", artifacts.probe_csv(list(result.probes.values())))
    sc.write("curves.csv", artifacts.curves_csv(curves))
    sc.write("metrics.csv", artifacts.metrics_csv(_metrics_rows(curves, fit, iso)))
    sc.write("field.pgm", artifacts.field_to_pgm(result.max_field))
    sc.commit()
    for f in st.eval_freqs:
        ff = analysis.attenuation_fit(curves, f)
        _log(f"  fit @ {f/1e9:g} GHz: {ff.slope_db_per_m:.2f} dB/m (R2={ff.r_squared:.4f})")
    return 0


def cmd_layers(args, st: Settings) -> int:
    layer_list = _parse_int_list(args.layers_list or st.experiments.get("layers", "1,2,3,4"))
    d = (args.distance or float(st.experiments.get("layer_distance_mm", 110.0))) * 1e-3
    sc = Scenario(st.out_dir, "layers")
    curves = []
    for layers in layer_list:
        scene = scenes.straight_scene(st.solver, st.surface, layers=layers,
                                      distances=(d,), mirror_at=None)
        state, result = _run_scene(scene, st.solver)
        c = transmission(result.probe(f"a{scenes._mm(d)}"), result.probe("ref"),
                         layout_id=scene.name, distance_m=d)
        curves.append(c)
    sc.write("curves.csv", artifacts.curves_csv(curves))
    sc.write("metrics.csv", artifacts.metrics_csv(_metrics_rows(curves, None)))
    sc.commit()
    band = analysis.Band(24e9, 28e9)
    levels = [analysis.band_average_s21(c, band) for c in curves]
    for L, lv in zip(layer_list, levels):
        _log(f"  layers={L}: band-average {lv:.3f} dB")
    for i in range(1, len(levels)):
        _log(f"  marginal improvement {layer_list[i-1]}->{layer_list[i]}: "
             f"{levels[i]-levels[i-1]:+.3f} dB")
    return 0


def cmd_widths(args, st: Settings) -> int:
    widths = tuple(w * 1e-3 for w in _parse_float_list(
        args.widths or st.experiments.get("widths_mm", "10,12,14,16")))
    d = (args.distance or 50.0) * 1e-3
    sc = Scenario(st.out_dir, "widths")
    curves, onset_rows = [], []
    for wc in widths:
        scene = scenes.width_scene(st.solver, st.surface, width_wc=wc, distance=d)
        state, result = _run_scene(scene, st.solver)
        ref = result.probe("ref")
        c = transmission(result.probe("rx"), ref, layout_id=scene.name, distance_m=d)
        curves.append(c)
        conv = result.probe("cm").spectrum - result.probe("c0").spectrum \
            + result.probe("cp").spectrum
        mc = analysis.TransmissionCurve(
            ref.frequencies, 20 * np.log10(np.abs(conv) / np.abs(ref.spectrum)),
            layout_id=scene.name, distance_m=d)
        onset = analysis.onset_frequency(mc)
        onset_rows.append((wc * 1e3, onset / 1e9 if onset else ""))
        _log(f"  wc={wc*1e3:g} mm: multimode onset "
             f"{'none' if onset is None else f'{onset/1e9:.2f} GHz'}")
    sc.write("curves.csv", artifacts.curves_csv(curves))
    sc.write("metrics.csv", artifacts.metrics_csv(_metrics_rows(curves, None)))
    sc.write("onsets.csv", artifacts._csv_text(["wc_mm", "onset_ghz"], onset_rows))
    sc.commit()
    return 0


def cmd_tjunction(args, st: Settings) -> int:
    modes = [args.mode] if args.mode else ["straight", "turn"]
    sc = Scenario(st.out_dir, "tjunction")
    summary = []
    for mode in modes:
        scene = scenes.tjunction_scene(st.solver, st.surface, mode=mode)
        state, result = _run_scene(scene, st.solver, snapshot=True)
        ref = result.probe("ref")
        sc.write(f"probes_{mode}.csv", artifacts.probe_csv(list(result.probes.values())))
        sc.write(f"field_{mode}.pgm", artifacts.field_to_pgm(result.max_field))
        artifacts.write_swf(os.path.join(sc.dir, f"field_{mode}.swf.partial"), result.max_field)
        sc.staged.append((os.path.join(sc.dir, f"field_{mode}.swf.partial"),
                          os.path.join(sc.dir, f"field_{mode}.swf")))
        band = analysis.Band(24e9, 28e9)
        thru = analysis.band_average_s21(
            transmission(result.probe("thru"), ref), band)
        turn = analysis.band_average_s21(
            transmission(result.probe("turn"), ref), band)
        rows = []
        for p in result.probes.values():
            if p.probe_id.startswith(("pz", "py")):
                c = transmission(p, ref)
                rows.append((mode, p.probe_id, float(p.probe_id[2:]),
                             analysis.band_average_s21(c, band)))
        rows.sort(key=lambda r: (r[1][1], r[2]))
        sc.write(f"profile_{mode}.csv",
                 artifacts._csv_text(["mode", "probe", "path_mm", "level_db"], rows))
        desired, undesired = (thru, turn) if mode == "straight" else (turn, thru)
        summary.append((mode, desired, undesired, desired - undesired))
        _log(f"  mode={mode}: desired {desired:.2f} dB, undesired {undesired:.2f} dB, "
             f"contrast {desired-undesired:.1f} dB")
    sc.write("summary.csv", artifacts._csv_text(
        ["mode", "desired_db", "undesired_db", "contrast_db"], summary))
    sc.commit()
    return 0


def cmd_corners(args, st: Settings) -> int:
    ks = _parse_int_list(args.k_list or st.experiments.get("corners", "0,1,2,3,4,5,6,7,8"))
    sc = Scenario(st.out_dir, "corners")
    straight_scene = scenes.corner_reference_scene(st.solver, st.surface)
    state, result = _run_scene(straight_scene, st.solver)
    ref_curve = transmission(result.probe("out"), result.probe("ref"),
                             layout_id="straight_reference")
    curves, rows = [ref_curve], []
    for k in ks:
        scene = scenes.corner_scene(st.solver, st.surface, k=k)
        state, result = _run_scene(scene, st.solver)
        c = transmission(result.probe("out"), result.probe("ref"),
                         layout_id=scene.name, distance_m=0.095)
        curves.append(c)
        resp = c.minus(ref_curve, layout_id=f"corner_{k}_response")
        f_opt = analysis.band_power_centroid(resp, 22e9, 32e9)
        avg = analysis.band_average_s21(resp, analysis.Band(23e9, 29e9))
        wt = layout.corner_width(k, st.surface.porosity_geometry.cavity_pitch_ws) if k >= 1 else ""
        rows.append((k, wt if wt == "" else wt * 1e3, f_opt / 1e9, avg))
        _log(f"  corner {k}: w_t={'--' if wt == '' else f'{wt*1e3:.1f}'} mm, "
             f"optimal {f_opt/1e9:.2f} GHz, band-average {avg:.1f} dB")
    sc.write("curves.csv", artifacts.curves_csv(curves))
    sc.write("summary.csv", artifacts._csv_text(
        ["corner", "wt_mm", "f_opt_ghz", "band_avg_db"], rows))
    sc.commit()
    return 0


def cmd_raytrace(args, st: Settings) -> int:
    opts = st.raytrace_opts
    f = float(opts.get("frequency_ghz", 26.0)) * 1e9
    diel_name = opts.get("surface_dielectric", "ptfe")
    ground = st.materials.get(opts.get("ground", "galinstan"))
    diel = st.materials.get(diel_name)
    if not isinstance(diel, DielectricSpec) or not isinstance(ground, MetalSpec):
        raise SystemExit("error: raytrace materials not found in database")
    surface = replace(st.surface, dielectric=diel, ground=ground)
    metal_names = [m.strip() for m in
                   (args.materials or opts.get("wall_metals", "pec,copper,galinstan")).split(",")]
    max_images = int(opts.get("max_images", 64))
    coax_rate = float(opts.get("coax_db_per_m", 0.5))
    d = raytrace.default_distance_grid(float(opts.get("d_max_m", 50.0)),
                                       int(opts.get("points", 60)))
    cols = {}
    name_map = {"pec": "pec_db", "copper": "copper_db", "galinstan": "galinstan_db"}
    for name in metal_names:
        metal = physics.PEC if name == "pec" else st.materials.get(name)
        if not isinstance(metal, MetalSpec):
            raise SystemExit(f"error: wall metal {name!r} not in database")
        model = raytrace.RayPathModel.for_surface(
            f, float(opts.get("width_mm", 10.0)) * 1e-3, metal, surface,
            confinement_kappa=st.solver.confinement_kappa, max_images=max_images)
        cols[name_map.get(name, name + "_db")] = raytrace.guided_power(model, d)
        _log(f"  {name}: {cols[name_map.get(name, name + '_db')][-1]:.1f} dB at {d[-1]:.0f} m")
    space, nonguided = raytrace.reference_curves(f, d, surface,
                                                 st.solver.confinement_kappa)
    cols["space_db"] = space
    cols["nonguided_db"] = nonguided
    cols["coax_db"] = raytrace.coax_curve(d, coax_rate)
    sc = Scenario(st.out_dir, "raytrace")
    sc.write("raytrace.csv", artifacts.raytrace_csv(d, cols))
    sc.commit()
    return 0


def cmd_render(args, st: Settings) -> int:
    if args.layout:
        with open(args.layout, encoding="utf-8") as fh:
            grid, geom = dsl.parse_layout(fh.read())
        name = os.path.splitext(os.path.basename(args.layout))[0]
        scene = Scene(geometry=geom, surface=st.surface, grid=grid, name=name)
    else:
        builder = {
            "straight": lambda: scenes.straight_scene(st.solver, st.surface),
            "tjunction": lambda: scenes.tjunction_scene(st.solver, st.surface, mode="turn"),
            "corner": lambda: scenes.corner_scene(st.solver, st.surface, k=4),
        }.get(args.preset)
        if builder is None:
            raise SystemExit(f"error: unknown preset {args.preset!r}")
        scene = builder()
    sc = Scenario(st.out_dir, "render")
    if args.what in ("mask", "both"):
        mask = layout.rasterize(
            scene.grid, st.solver.cell_size,
            st.surface.porosity_geometry.cavity_radius_r,
            y_extent=scene.geometry.y_extent, z_extent=scene.geometry.z_extent)
        sc.write(f"{scene.name}_mask.pgm", layout.mask_to_pgm(mask))
    if args.what in ("field", "both"):
        if not scene.geometry.transducers:
            raise SystemExit("error: field render needs a scene with a transducer")
        state, result = _run_scene(scene, st.solver, snapshot=True)
        sc.write(f"{scene.name}_field.pgm", artifacts.field_to_pgm(result.max_field))
        artifacts.write_swf(os.path.join(sc.dir, f"{scene.name}_field.swf.partial"),
                            result.max_field)
        sc.staged.append((os.path.join(sc.dir, f"{scene.name}_field.swf.partial"),
                          os.path.join(sc.dir, f"{scene.name}_field.swf")))
    sc.commit()
    _log(f"  rendered into {sc.dir}")
    return 0


def cmd_validate(args, st: Settings) -> int:
    from . import validate as validate_mod
    report = validate_mod.run_validation(st)
    sc = Scenario(st.out_dir, "validate")
    sc.write("validate.json", json.dumps(report, indent=2))
    sc.commit()
    ok = report["passed"]
    for check in report["checks"]:
        _log(f"  [{'PASS' if check['status'] == 'pass' else 'FAIL'}] "
             f"{check['name']}: {check['detail']} ({check['seconds']:.1f}s)")
    _log(f"validation {'passed' if ok else 'FAILED'}")
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="swpath",
        description="Guided surface-wave pathway experiments and analysis.")
    parser.add_argument("--config", help="configuration file (key = value sections)")
    parser.add_argument("--out", default="out", help="artifact output directory")
    parser.add_argument("--profile", choices=sorted(PROFILES),
                        help="grid resolution profile (desk: 0.1 mm, ci: 0.2 mm)")
    parser.add_argument("--freqs", default="26,28,30",
                        help="evaluation frequencies in GHz (comma-separated)")
    parser.add_argument("--workers", type=int, help="row bands updated in parallel")
    parser.add_argument("--seedless", action="store_true",
                        help=argparse.SUPPRESS)   # rejected: nothing here is random
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("straight", help="straight-pathway distance sweep")
    p.add_argument("--distances", help="probe distances in mm")
    p.add_argument("--width", type=float, help="pathway width in mm")
    p.add_argument("--layers", type=int, help="wall layers (1..4)")
    p.set_defaults(fn=cmd_straight)

    p = sub.add_parser("layers", help="multi-layer wall comparison")
    p.add_argument("--layers-list", help="layer counts, e.g. 1,2,3,4")
    p.add_argument("--distance", type=float, help="probe distance in mm")
    p.set_defaults(fn=cmd_layers)

    p = sub.add_parser("widths", help="pathway-width frequency selectivity")
    p.add_argument("--widths", help="pathway widths in mm")
    p.add_argument("--distance", type=float, help="probe distance in mm")
    p.set_defaults(fn=cmd_widths)

    p = sub.add_parser("tjunction", help="switchable T-junction")
    p.add_argument("--mode", choices=["straight", "turn"])
    p.set_defaults(fn=cmd_tjunction)

    p = sub.add_parser("corners", help="90-degree corner comparison")
    p.add_argument("--k-list", help="corner indices, e.g. 0,1,...,8")
    p.set_defaults(fn=cmd_corners)

    p = sub.add_parser("raytrace", help="long-distance path-loss comparison")
    p.add_argument("--materials", help="wall metals, e.g. pec,copper,galinstan")
    p.set_defaults(fn=cmd_raytrace)

    p = sub.add_parser("validate", help="run the validation battery (CI profile)")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("render", help="render a layout mask or field map")
    p.add_argument("--layout", help="layout program (.swl) to render")
    p.add_argument("--preset", help="preset scene: straight, tjunction, corner")
    p.add_argument("--what", choices=["mask", "field", "both"], default="mask")
    p.set_defaults(fn=cmd_render)

    args = parser.parse_args(argv)
    if args.seedless:
        parser.error("--seedless is not applicable: the solver is deterministic "
                     "and uses no random numbers")
    if args.command == "validate" and not args.profile:
        args.profile = "ci"
    try:
        settings = _load_settings(args)
    except (KeyError, ValueError) as exc:
        parser.error(str(exc))
    try:
        return args.fn(args, settings)
    except Exception as exc:  # scenario failure: partial artifacts stay on disk
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
