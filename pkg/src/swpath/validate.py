"""Validation battery: fast invariant checks over every subsystem.

Each check returns a measured-vs-expected detail string; the runner times
them individually and aggregates a machine-readable report. Solver checks
run small scenes at the configured profile; dB tolerances widen by 50% on
the coarse "ci" profile.
"""

from __future__ import annotations

import math
import time
from dataclasses import replace

import numpy as np

from . import analysis, dsl, layout, physics, raytrace, scenes
from .layout import ProbePoint, SceneGeometry, Transducer
from .solver import PROFILES, Scene, SolverConfig, build_scene, run, transmission

TABLE_XS = {26e9: 240.0, 28e9: 257.0, 30e9: 276.0}
TABLE_CORNER_WIDTHS_MM = [12.7, 11.3, 9.9, 8.5, 7.1, 5.7, 4.2, 2.8]
CALIBRATED_SLOPE = 28.56  # dB/m at 26 GHz


def _tol_scale(cfg: SolverConfig) -> float:
    return 1.5 if cfg.cell_size >= PROFILES["ci"] else 1.0


def check_analytic_table(st) -> tuple[bool, str]:
    surface = physics.table_surface()
    rho = physics.porosity(surface.porosity_geometry)
    eps_eff = physics.effective_permittivity(surface.dielectric.eps_r, rho)
    parts = [f"rho={rho*100:.2f}%", f"eps_eff={eps_eff:.3f}"]
    ok = abs(rho - 0.1963) < 1e-4 and abs(eps_eff - 2.4) <= 0.01
    diel_eff = surface.effective_dielectric()
    for f, expected in TABLE_XS.items():
        xs = physics.surface_impedance(f, diel_eff, surface.ground).imag
        parts.append(f"Xs({f/1e9:.0f}GHz)={xs:.1f}")
        ok = ok and abs(xs - expected) / expected <= 0.01
    return ok, ", ".join(parts)


def check_corner_widths(st) -> tuple[bool, str]:
    widths = [layout.corner_width(k) * 1e3 for k in range(1, 9)]
    ok = all(abs(w - e) <= 0.05 for w, e in zip(widths, TABLE_CORNER_WIDTHS_MM))
    return ok, "w_t(mm)=" + ",".join(f"{w:.2f}" for w in widths)


def check_parser_roundtrip(st) -> tuple[bool, str]:
    programs = [
        "GRID 30 100 2mm",
        "GRID 30 100 2mm\nWALL (0,0)-(0,9)\nFILL 3 4",
        "GRID 40 80 2mm\nPRESET corner k=4 width=10mm",
        "GRID 70 80 2mm\nPRESET tjunction mode=turn width=10mm arm=40mm",
    ]
    n_ok = 0
    for text in programs:
        grid, geom = dsl.parse_layout(text)
        grid2, _ = dsl.parse_layout(dsl.unparse(grid, geom))
        n_ok += grid2.filled == grid.filled
    return n_ok == len(programs), f"{n_ok}/{len(programs)} programs round-trip"


def check_raytrace(st) -> tuple[bool, str]:
    db = physics.load_materials()
    surface = replace(physics.table_surface(), dielectric=db["ptfe"], ground=db["galinstan"])
    d = raytrace.default_distance_grid()
    curves = {}
    for name, metal in [("pec", physics.PEC), ("copper", db["copper"]),
                        ("galinstan", db["galinstan"])]:
        model = raytrace.RayPathModel.for_surface(26e9, 10e-3, metal, surface)
        curves[name] = raytrace.guided_power(model, d)
    ordered = np.all(curves["pec"] >= curves["copper"]) and \
        np.all(curves["copper"] >= curves["galinstan"])
    gal50 = curves["galinstan"][-1]
    model32 = raytrace.RayPathModel.for_surface(26e9, 10e-3, db["galinstan"], surface,
                                                max_images=32)
    conv = np.max(np.abs(raytrace.guided_power(model32, d) - curves["galinstan"]))
    ok = bool(ordered and gal50 > -40.0 and conv < 0.1)
    return ok, f"ordered={ordered}, galinstan(50m)={gal50:.1f} dB, image conv {conv:.3f} dB"


def check_spreading(st) -> tuple[bool, str]:
    cfg = st.solver
    scene = scenes.spreading_scene(cfg, st.surface,
                                   radii=tuple(r * 1e-3 for r in range(30, 121, 10)))
    result = run(build_scene(scene, cfg=cfg))
    k26 = int(np.argmin(np.abs(np.asarray(cfg.dft_frequencies) - 26e9)))
    levels = []
    for p in result.probes.values():
        d = (p.probe_id[1:])
        levels.append(20 * math.log10(abs(p.spectrum[k26]) * math.sqrt(float(d) * 1e-3)))
    spread = max(levels) - min(levels)
    tol = 0.5 * _tol_scale(cfg)
    return spread <= tol, f"amplitude*sqrt(d) spread {spread:.3f} dB (tol {tol:.2f})"


def _small_straight(cfg, surface, *, d=40e-3, source_index=1, reverse=False):
    cs = cfg.cell_size
    z_src = 20e-3
    wa = surface.transducer_aperture_w
    y_extent = scenes._snap(-20e-3, 20e-3, cs)
    z_extent = scenes._snap(0.0, z_src + d + 20e-3, cs, center=z_src)
    grid = layout.preset_straight(10e-3, d + 20e-3)
    grid = scenes.replace_grid_origin(grid, z_start=z_src - 10e-3)
    if reverse:
        probes = [ProbePoint("ref", 0.0, z_src + d - scenes.REF_OFFSET,
                             axis="y", width=wa, gated=True),
                  ProbePoint("rx", 0.0, z_src)]
    else:
        probes = [ProbePoint("ref", 0.0, z_src + scenes.REF_OFFSET,
                             axis="y", width=wa, gated=True),
                  ProbePoint("rx", 0.0, z_src + d)]
    geom = SceneGeometry(
        y_extent=y_extent, z_extent=z_extent,
        transducers={1: Transducer(1, 0.0, z_src, width=wa),
                     2: Transducer(2, 0.0, z_src + d, width=wa, direction=-1)},
        probes=probes, reference_probe="ref")
    return Scene(geometry=geom, surface=surface, grid=grid,
                 source_index=source_index, name="validate_straight")


def check_determinism(st) -> tuple[bool, str]:
    cfg = st.solver
    spectra = []
    for workers in (1, 3):
        cfg_w = replace(cfg, workers=workers)
        scene = _small_straight(cfg_w, st.surface)
        result = run(build_scene(scene, cfg=cfg_w))
        spectra.append(np.concatenate([p.spectrum for p in result.probes.values()]))
    identical = bool(np.array_equal(spectra[0], spectra[1]))
    return identical, f"bit-identical across worker counts: {identical}"


def check_reciprocity(st) -> tuple[bool, str]:
    cfg = st.solver
    k26 = int(np.argmin(np.abs(np.asarray(cfg.dft_frequencies) - 26e9)))
    values = []
    for reverse in (False, True):
        scene = _small_straight(cfg, st.surface, source_index=2 if reverse else 1,
                                reverse=reverse)
        result = run(build_scene(scene, cfg=cfg))
        c = transmission(result.probe("rx"), result.probe("ref"))
        values.append(c.s21_db[k26])
    delta = abs(values[0] - values[1])
    tol = 0.2 * _tol_scale(cfg)
    return delta <= tol, f"forward/reverse S21 differ {delta:.4f} dB (tol {tol:.2f})"


def check_energy(st) -> tuple[bool, str]:
    cfg = replace(st.solver, run_time=1.2e-9)
    surface = replace(st.surface,
                      dielectric=replace(st.surface.dielectric, tan_delta=0.0))
    cs = cfg.cell_size
    y_extent = scenes._snap(-25e-3, 25e-3, cs)
    z_extent = scenes._snap(0.0, 50e-3, cs, center=20e-3)
    geom = SceneGeometry(y_extent=y_extent, z_extent=z_extent,
                         transducers={1: Transducer(1, 0.0, 20e-3, width=4 * cs)})
    scene = Scene(geometry=geom, surface=surface, grid=None, name="energy")
    result = run(build_scene(scene, cfg=cfg), energy_series=True)
    en = result.energy_series
    n_off = int(math.ceil(cfg.source_off_time / cfg.dt))
    tail = en[n_off:]
    increases = np.diff(tail) / np.maximum(tail[:-1], 1e-300)
    worst = float(increases.max(initial=0.0))
    ok = worst <= 1e-3 and tail[-1] <= tail[0]
    return ok, f"worst post-source energy increase {worst*100:.4f}% (tol 0.1%)"


def check_attenuation_calibration(st) -> tuple[bool, str]:
    cfg = st.solver
    distances = tuple(d * 1e-3 for d in range(50, 151, 20))
    scene = scenes.straight_scene(cfg, st.surface, distances=distances, mirror_at=None,
                                  aperture_probes=False)
    result = run(build_scene(scene, cfg=cfg))
    ref = result.probe("ref")
    curves = [transmission(result.probe(f"d{scenes._mm(d)}"), ref, distance_m=d)
              for d in distances]
    fit = analysis.attenuation_fit(curves, 26e9)
    rel_tol = 0.15 * _tol_scale(cfg)
    ok = abs(fit.slope_db_per_m - CALIBRATED_SLOPE) <= rel_tol * CALIBRATED_SLOPE
    return ok, (f"slope {fit.slope_db_per_m:.2f} dB/m vs {CALIBRATED_SLOPE} "
                f"+-{rel_tol*100:.0f}% (R2={fit.r_squared:.4f}, "
                f"kappa={cfg.confinement_kappa})")


CHECKS = [
    ("analytic_table", check_analytic_table),
    ("corner_width_table", check_corner_widths),
    ("parser_roundtrip", check_parser_roundtrip),
    ("raytrace_model", check_raytrace),
    ("spreading", check_spreading),
    ("determinism", check_determinism),
    ("reciprocity", check_reciprocity),
    ("energy", check_energy),
    ("attenuation_calibration", check_attenuation_calibration),
]


def run_validation(st) -> dict:
    checks = []
    passed = True
    for name, fn in CHECKS:
        t0 = time.time()
        try:
            ok, detail = fn(st)
        except Exception as exc:
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        checks.append({
            "name": name,
            "status": "pass" if ok else "fail",
            "detail": detail,
            "seconds": round(time.time() - t0, 2),
        })
        passed = passed and ok
    return {"profile": "ci" if st.solver.cell_size >= PROFILES["ci"] else "desk",
            "passed": passed, "checks": checks}
