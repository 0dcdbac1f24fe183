"""Scene builders for the experiment geometries.

Each builder returns a :class:`swpath.solver.Scene` with pins, transducers
and probes placed for one experiment protocol:

* straight pathway with a distance sweep (single- or multi-layer walls),
* the non-guided (empty lattice) counterpart,
* cylindrical-spreading validation scene,
* pathway-width sweep with multimode-onset detection probes,
* switchable T-junction (straight / 90-degree turn),
* 90-degree corners with chamfered outer walls.

Geometric conventions: the pathway centerline is y = 0 and it is aligned to
a solver cell center, so that wall pairs, apertures and probes are exactly
mirror-symmetric and probe separations are exact cell multiples. The
reference probe sits 5 mm in front of the source aperture and accumulates
only during the launch window (it normalizes out the source spectrum before
any reflection returns).
"""

from __future__ import annotations

import math
from dataclasses import replace

from . import layout as L
from . import physics
from .layout import ProbePoint, SceneGeometry, Transducer
from .solver import Scene, SolverConfig

REF_OFFSET = 5e-3          # reference probe distance in front of the aperture
PROBE_INTERVAL = 10e-3     # centerline probe spacing for junction profiles
DEFAULT_DISTANCES = tuple(round(d * 1e-3, 6) for d in range(50, 151, 20))


def _mm(x: float) -> str:
    return f"{round(x * 1e3):d}"


def _snap(lo: float, hi: float, cs: float, center: float = 0.0) -> tuple[float, float]:
    """Shift/pad an extent so ``center`` lands on a cell center."""
    lo2 = center - (math.ceil((center - lo) / cs - 0.5) + 0.5) * cs
    n = int(math.ceil((hi - lo2) / cs))
    return lo2, lo2 + n * cs

def _lossless(surface: physics.SurfaceConfig) -> physics.SurfaceConfig:
    return replace(surface, dielectric=replace(surface.dielectric, tan_delta=0.0))


def straight_scene(cfg: SolverConfig, surface: physics.SurfaceConfig | None = None, *,
                   width_wc: float = 10e-3, layers: int = 1,
                   distances: tuple[float, ...] = DEFAULT_DISTANCES,
                   mirror_at: float | None = 80e-3,
                   aperture_probes: bool = True,
                   walls: bool = True,
                   lossless: bool = False,
                   name: str | None = None) -> Scene:
    """Straight pathway with probes at each distance from the source plane.

    With ``walls=False`` the lattice stays empty (the non-guided scene).
    Point probes sit on the centerline ("d<mm>"); aperture-averaged line
    probes ("a<mm>") model reception into a transducer-sized aperture.
    """
    if surface is None:
        surface = physics.table_surface()
    if lossless:
        surface = _lossless(surface)
    cs = cfg.cell_size
    d_max = max(distances)
    z_src = 25e-3
    wa = surface.transducer_aperture_w
    y_extent = _snap(-30e-3, 30e-3, cs)
    z_extent = _snap(0.0, z_src + d_max + L.WALL_OVERHANG + 15e-3, cs, center=z_src)

    grid = None
    if walls:
        grid = L.preset_straight(width_wc, d_max + 2 * L.WALL_OVERHANG, layers=layers)
        grid = replace_grid_origin(grid, z_start=z_src - L.WALL_OVERHANG)

    probes = [ProbePoint("ref", 0.0, z_src + REF_OFFSET, axis="y", width=wa, gated=True)]
    for d in distances:
        probes.append(ProbePoint(f"d{_mm(d)}", 0.0, z_src + d))
        if aperture_probes:
            probes.append(ProbePoint(f"a{_mm(d)}", 0.0, z_src + d, axis="y", width=wa))
    if mirror_at is not None:
        probes.append(ProbePoint("mirror", width_wc, z_src + mirror_at))

    geom = SceneGeometry(
        y_extent=y_extent, z_extent=z_extent,
        transducers={
            1: Transducer(1, 0.0, z_src, width=wa),
            2: Transducer(2, 0.0, z_src + d_max, width=wa, direction=-1),
        },
        probes=probes, reference_probe="ref",
    )
    if name is None:
        kind = "straight" if walls else "open"
        name = f"{kind}_wc{_mm(width_wc)}_L{layers}"
    return Scene(geometry=geom, surface=surface, grid=grid, name=name)


def replace_grid_origin(grid: L.PinGrid, *, y_start: float | None = None,
                        z_start: float | None = None) -> L.PinGrid:
    """Return the grid translated so its origin starts at the given coords."""
    oy, oz = grid.origin
    return L.PinGrid(
        rows=grid.rows, cols=grid.cols, pitch_ws=grid.pitch_ws,
        origin=(oy if y_start is None else y_start + (oy - grid.origin[0]),
                oz if z_start is None else z_start),
        filled=set(grid.filled),
    )


def open_scene(cfg: SolverConfig, surface: physics.SurfaceConfig | None = None, *,
               distances: tuple[float, ...] = DEFAULT_DISTANCES,
               mirror_at: float | None = 80e-3,
               lossless: bool = False) -> Scene:
    """Non-guided counterpart of the straight scene (no pins)."""
    return straight_scene(cfg, surface, walls=False, distances=distances,
                          mirror_at=mirror_at, lossless=lossless)


def spreading_scene(cfg: SolverConfig, surface: physics.SurfaceConfig | None = None, *,
                    radii: tuple[float, ...] = tuple(r * 1e-3 for r in range(30, 121, 10))
                    ) -> Scene:
    """Lossless empty scene with a compact source for the 1/sqrt(d) check."""
    if surface is None:
        surface = physics.table_surface()
    surface = _lossless(surface)
    cs = cfg.cell_size
    z_src = 20e-3
    y_extent = _snap(-30e-3, 30e-3, cs)
    z_extent = _snap(0.0, z_src + max(radii) + 40e-3, cs, center=z_src)
    probes = [ProbePoint(f"d{_mm(r)}", 0.0, z_src + r) for r in radii]
    geom = SceneGeometry(
        y_extent=y_extent, z_extent=z_extent,
        transducers={1: Transducer(1, 0.0, z_src, width=4 * cs)},
        probes=probes,
    )
    return Scene(geometry=geom, surface=surface, grid=None, name="spreading")


def width_scene(cfg: SolverConfig, surface: physics.SurfaceConfig | None = None, *,
                width_wc: float = 10e-3, distance: float = 50e-3) -> Scene:
    """Width-sweep scene: aperture S21 probe plus a mode-conversion triple.

    The triple samples the field at the centerline and at +-wc/3; the
    combination E(-wc/3) - E(0) + E(+wc/3) rejects the fundamental lateral
    mode and flags the third-mode onset as a sharp spectral rise.
    """
    if surface is None:
        surface = physics.table_surface()
    cs = cfg.cell_size
    z_src = 25e-3
    wa = surface.transducer_aperture_w
    y_extent = _snap(-35e-3 - width_wc / 2, 35e-3 + width_wc / 2, cs)
    z_extent = _snap(0.0, z_src + distance + L.WALL_OVERHANG + 15e-3, cs, center=z_src)
    grid = L.preset_straight(width_wc, distance + 2 * L.WALL_OVERHANG, layers=1)
    grid = replace_grid_origin(grid, z_start=z_src - L.WALL_OVERHANG)
    zp = z_src + distance
    probes = [
        ProbePoint("ref", 0.0, z_src + REF_OFFSET, axis="y", width=wa, gated=True),
        ProbePoint("rx", 0.0, zp, axis="y", width=wa),
        ProbePoint("c0", 0.0, zp),
        ProbePoint("cm", -width_wc / 3.0, zp),
        ProbePoint("cp", +width_wc / 3.0, zp),
    ]
    geom = SceneGeometry(
        y_extent=y_extent, z_extent=z_extent,
        transducers={1: Transducer(1, 0.0, z_src, width=wa),
                     2: Transducer(2, 0.0, zp, width=wa, direction=-1)},
        probes=probes, reference_probe="ref",
    )
    return Scene(geometry=geom, surface=surface, grid=grid,
                 name=f"width_wc{_mm(width_wc)}")


def tjunction_scene(cfg: SolverConfig, surface: physics.SurfaceConfig | None = None, *,
                    mode: str = "straight", width_wc: float = 10e-3,
                    arm_length: float = 60e-3,
                    probe_distance: float = 50e-3) -> Scene:
    """T-junction: arm 1 feeds the junction at the origin; arm 2 continues
    along +z and arm 3 branches along +y. Aperture probes "thru" and "turn"
    sit at equal path length on the two candidate output arms; point probes
    trace both centerlines at 10 mm intervals."""
    if surface is None:
        surface = physics.table_surface()
    cs = cfg.cell_size
    wa = surface.transducer_aperture_w
    z_src = -(arm_length - 10e-3)
    grid = L.preset_tjunction(mode, width_wc, arm_length=arm_length)
    y_extent = _snap(-30e-3, arm_length + 20e-3, cs)
    z_extent = _snap(z_src - 25e-3, arm_length + 20e-3, cs, center=0.0)

    probes = [ProbePoint("ref", 0.0, z_src + REF_OFFSET, axis="y", width=wa, gated=True),
              ProbePoint("thru", 0.0, probe_distance, axis="y", width=wa),
              ProbePoint("turn", probe_distance, 0.0, axis="z", width=wa)]
    z = z_src + PROBE_INTERVAL
    while z <= arm_length - 10e-3 + 1e-9:
        probes.append(ProbePoint(f"pz{_mm(z - z_src)}", 0.0, z))
        z += PROBE_INTERVAL
    y = PROBE_INTERVAL
    while y <= arm_length - 10e-3 + 1e-9:
        probes.append(ProbePoint(f"py{_mm(y - z_src)}", y, 0.0))
        y += PROBE_INTERVAL

    geom = SceneGeometry(
        y_extent=y_extent, z_extent=z_extent,
        transducers={
            1: Transducer(1, 0.0, z_src, width=wa),
            2: Transducer(2, 0.0, arm_length - 10e-3, width=wa, direction=-1),
            3: Transducer(3, arm_length - 10e-3, 0.0, width=wa, axis="z", direction=-1),
        },
        probes=probes, reference_probe="ref",
    )
    return Scene(geometry=geom, surface=surface, grid=grid, name=f"tjunction_{mode}")


def corner_reference_scene(cfg: SolverConfig, surface: physics.SurfaceConfig | None = None, *,
                           width_wc: float = 10e-3, path: float = 95e-3) -> Scene:
    """Straight channel matching the corner scenes' total path length.

    Its "out" aperture probe mirrors the corner scenes' output probe, so
    corner-minus-reference curves isolate the corner's own response.
    """
    if surface is None:
        surface = physics.table_surface()
    cs = cfg.cell_size
    z_src = 25e-3
    wa = surface.transducer_aperture_w
    y_extent = _snap(-30e-3, 30e-3, cs)
    z_extent = _snap(0.0, z_src + path + L.WALL_OVERHANG + 15e-3, cs, center=z_src)
    grid = L.preset_straight(width_wc, path + 2 * L.WALL_OVERHANG, layers=1)
    grid = replace_grid_origin(grid, z_start=z_src - L.WALL_OVERHANG)
    probes = [ProbePoint("ref", 0.0, z_src + REF_OFFSET, axis="y", width=wa, gated=True),
              ProbePoint("out", 0.0, z_src + path, axis="y", width=wa)]
    geom = SceneGeometry(
        y_extent=y_extent, z_extent=z_extent,
        transducers={1: Transducer(1, 0.0, z_src, width=wa)},
        probes=probes, reference_probe="ref",
    )
    return Scene(geometry=geom, surface=surface, grid=grid, name="corner_reference")


def corner_scene(cfg: SolverConfig, surface: physics.SurfaceConfig | None = None, *,
                 k: int = 0, width_wc: float = 10e-3,
                 arm_in: float = 50e-3, arm_out: float = 45e-3) -> Scene:
    """90-degree corner scene: input along +z, output along +y, output
    aperture probe at a fixed total path length for every corner shape."""
    if surface is None:
        surface = physics.table_surface()
    cs = cfg.cell_size
    wa = surface.transducer_aperture_w
    z_src = -arm_in
    grid = L.preset_corner(k, width_wc, arm_in=arm_in + L.WALL_OVERHANG,
                           arm_out=arm_out + L.WALL_OVERHANG)
    y_extent = _snap(-30e-3, arm_out + L.WALL_OVERHANG + 12e-3, cs)
    z_extent = _snap(z_src - 25e-3, width_wc / 2 + 14e-3, cs, center=0.0)
    probes = [ProbePoint("ref", 0.0, z_src + REF_OFFSET, axis="y", width=wa, gated=True),
              ProbePoint("out", arm_out, 0.0, axis="z", width=wa)]
    geom = SceneGeometry(
        y_extent=y_extent, z_extent=z_extent,
        transducers={
            1: Transducer(1, 0.0, z_src, width=wa),
            3: Transducer(3, arm_out, 0.0, width=wa, axis="z", direction=-1),
        },
        probes=probes, reference_probe="ref",
    )
    return Scene(geometry=geom, surface=surface, grid=grid, name=f"corner_{k}")
