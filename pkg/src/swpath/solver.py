"""2D time-domain solver for guided surface waves in the surface plane.

The bound TM surface wave is collapsed onto the (y, z) surface plane: the
out-of-plane electric field E propagates through an effective medium of
permittivity ``n_eff**2`` with an equivalent conductivity representing the
dielectric loss (see :func:`swpath.physics.equivalent_loss_rate`). Metal
pins become PEC cells (or high-conductivity cells in lossy-pin mode).

The scheme is the standard staggered-grid leapfrog with a split-field
absorbing layer ringing the domain. Updates are data-parallel over disjoint
row bands with a one-cell halo; results are bit-identical for any worker
count because every cell's update expression is unchanged by banding and
probe accumulation stays serial.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import layout as layout_mod
from . import physics
from .analysis import TransmissionCurve
from .layout import ProbePoint, SceneGeometry, Transducer
from .physics import EPS0, MU0, C0, MetalSpec, SurfaceConfig

#: Grid resolution (m) per named profile; "ci" halves the resolution and all
#: dB tolerances derived from acceptance targets widen by 50%.
PROFILES = {"desk": 1e-4, "ci": 2e-4}

#: Spacing between a transducer aperture and its reflecting back wall.
BACKSHORT_OFFSET = 2.4e-3

_COURANT_LIMIT = 0.99 / math.sqrt(2.0)


class SolverDiverged(RuntimeError):
    """Raised when a field update produces non-finite values."""


@dataclass(frozen=True)
class SolverConfig:
    cell_size: float = 1e-4
    courant_factor: float = _COURANT_LIMIT
    pml_cells: int = 10
    pulse_center_f: float = 26e9
    pulse_bandwidth: float = 33e9          # full width at 10% spectral amplitude
    run_time: float | None = None          # None: stop on residual-energy criterion
    dft_frequencies: tuple[float, ...] = tuple(np.arange(21e9, 42.01e9, 0.25e9))
    confinement_kappa: float = physics.DEFAULT_KAPPA
    workers: int = 1
    max_steps: int | None = None
    lossy_pins: bool = False
    debug_checks: bool = False
    check_interval: int = 100
    residual_energy_ratio: float = 1e-5

    def __post_init__(self):
        if not 0 < self.courant_factor <= _COURANT_LIMIT:
            raise ValueError(
                f"courant_factor must be in (0, {_COURANT_LIMIT:.4f}], got {self.courant_factor}")
        if self.pml_cells < 8:
            raise ValueError(f"pml_cells must be >= 8, got {self.pml_cells}")
        if not self.cell_size > 0:
            raise ValueError("cell_size must be positive")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if not self.dft_frequencies:
            raise ValueError("dft_frequencies must be non-empty")

    @property
    def dt(self) -> float:
        return self.courant_factor * self.cell_size / C0

    @property
    def pulse_tau(self) -> float:
        # exp(-(pi*tau*df)^2) = 0.1 at df = bandwidth/2
        return 2.0 * math.sqrt(math.log(10.0)) / (math.pi * self.pulse_bandwidth)

    @property
    def pulse_t0(self) -> float:
        return 5.0 * self.pulse_tau

    @property
    def source_off_time(self) -> float:
        return self.pulse_t0 + 6.0 * self.pulse_tau

    def waveform(self, t: float) -> float:
        """Gaussian-modulated sinusoid drive signal."""
        arg = (t - self.pulse_t0) / self.pulse_tau
        return math.exp(-arg * arg) * math.sin(2.0 * math.pi * self.pulse_center_f * t)

    def for_profile(name: str = "desk", **overrides) -> "SolverConfig":  # noqa: N805
        if name not in PROFILES:
            raise ValueError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}")
        return SolverConfig(cell_size=PROFILES[name], **overrides)

    for_profile = staticmethod(for_profile)


@dataclass
class ProbeRecord:
    """Running single-frequency transform accumulators for one probe."""

    probe_id: str
    y: float                    # snapped physical position
    z: float
    frequencies: np.ndarray
    spectrum: np.ndarray        # complex accumulators, one per frequency
    gated: bool = False
    rows: np.ndarray = field(default=None, repr=False)
    cols: np.ndarray = field(default=None, repr=False)


@dataclass
class Scene:
    """Pin layout plus physical scene description for one solver run."""

    geometry: SceneGeometry
    surface: SurfaceConfig
    grid: layout_mod.PinGrid | None = None
    source_index: int = 1
    pin_metal: MetalSpec = MetalSpec(3.15e6)
    name: str = "scene"


class FieldState:
    """Field arrays, material maps, probes and source bookkeeping."""

    def __init__(self, scene: Scene, cfg: SolverConfig):
        self.scene = scene
        self.cfg = cfg
        cs = cfg.cell_size
        geom = scene.geometry
        self.y0, y1 = geom.y_extent
        self.z0, z1 = geom.z_extent
        self.ny = int(math.ceil((y1 - self.y0) / cs - 1e-9))
        self.nz = int(math.ceil((z1 - self.z0) / cs - 1e-9))
        min_span = 2 * cfg.pml_cells + 8
        if self.ny < min_span or self.nz < min_span:
            raise ValueError(
                f"domain {self.ny}x{self.nz} cells too small for {cfg.pml_cells}-cell "
                "absorber plus interior")
        self.dt = cfg.dt
        self.n = 0
        self.time = 0.0

        sol = physics.surface_solution(cfg.pulse_center_f, scene.surface)
        self.solution = sol
        eff = scene.surface.effective_dielectric()
        loss = physics.equivalent_loss_rate(
            cfg.pulse_center_f, sol.n_eff, eff.tan_delta, cfg.confinement_kappa)
        self.alpha_db_per_m = loss.alpha_db_per_m
        self.eps_bg = sol.n_eff ** 2

        f_max = max(cfg.dft_frequencies)
        n_max = physics.surface_solution(f_max, scene.surface).n_eff
        lam_min = C0 / (f_max * n_max)
        if cs > lam_min / 15.0:
            raise ValueError(
                f"cell_size {cs} too coarse: shortest wavelength {lam_min:.4g} m "
                f"needs <= {lam_min / 15.0:.4g} m")

        # material maps
        self.eps_r_map = np.full((self.ny, self.nz), self.eps_bg)
        self.sigma_map = np.full((self.ny, self.nz), loss.sigma_eq)
        if scene.grid is not None and scene.grid.filled:
            radius = scene.surface.porosity_geometry.cavity_radius_r
            mask = layout_mod.rasterize(
                scene.grid, cs, radius,
                y_extent=(self.y0, self.y0 + self.ny * cs),
                z_extent=(self.z0, self.z0 + self.nz * cs))
            self.pec_mask = mask
        else:
            self.pec_mask = np.zeros((self.ny, self.nz), bool)
        if cfg.lossy_pins and not scene.pin_metal.is_pec:
            # spread the metal's sheet conductance over one cell
            delta = physics.skin_depth(cfg.pulse_center_f, scene.pin_metal)
            self.sigma_map[self.pec_mask] = scene.pin_metal.sigma * delta / cs
            self.pin_cells_enforced = False
        else:
            self.pin_cells_enforced = True

        # transducer back walls are part of the launcher model
        self._add_backshorts()

        self._build_coefficients()

        self.ea = np.zeros((self.ny, self.nz))
        self.eb = np.zeros((self.ny, self.nz))
        self.e = np.zeros((self.ny, self.nz))
        self.hz = np.zeros((self.ny - 1, self.nz))   # H along z, staggered in y
        self.hy = np.zeros((self.ny, self.nz - 1))   # H along y, staggered in z
        # scratch for difference terms; bands write disjoint row ranges
        self._shz = np.empty_like(self.hz)
        self._shy = np.empty_like(self.hy)
        self._se = np.empty_like(self.e)

        self.sources = []
        src = geom.transducers.get(scene.source_index)
        if src is not None:
            self.sources.append(self._aperture_cells(src))

        self.probes: list[ProbeRecord] = []
        freqs = np.asarray(cfg.dft_frequencies, float)
        self._omega = 2.0 * np.pi * freqs
        for p in geom.probes:
            rows, cols = self._probe_cells(p)
            self.probes.append(ProbeRecord(
                probe_id=p.probe_id,
                y=self.y0 + (float(np.mean(rows)) + 0.5) * cs,
                z=self.z0 + (float(np.mean(cols)) + 0.5) * cs,
                frequencies=freqs.copy(),
                spectrum=np.zeros(len(freqs), complex),
                gated=p.gated,
                rows=rows, cols=cols,
            ))

        self._bands = self._make_bands(cfg.workers)
        self._pool = ThreadPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None

    # -- geometry helpers ---------------------------------------------------

    def cell_index(self, y: float, z: float) -> tuple[int, int]:
        cs = self.cfg.cell_size
        i = int(round((y - self.y0) / cs - 0.5))
        j = int(round((z - self.z0) / cs - 0.5))
        if not (0 <= i < self.ny and 0 <= j < self.nz):
            raise ValueError(f"point ({y}, {z}) outside the solver domain")
        return i, j

    def _line_cells(self, y, z, axis, width):
        ic, jc = self.cell_index(y, z)
        ncells = max(int(round(width / self.cfg.cell_size)), 1)
        ncells += 1 - ncells % 2   # odd count keeps the line exactly centered
        half = ncells // 2
        if axis == "y":
            rows = np.arange(ic - half, ic + half + 1)
            cols = np.full(ncells, jc)
        else:
            rows = np.full(ncells, ic)
            cols = np.arange(jc - half, jc + half + 1)
        if rows.min() < 0 or rows.max() >= self.ny or cols.min() < 0 or cols.max() >= self.nz:
            raise ValueError(f"line probe/source at ({y}, {z}) spills outside the domain")
        return rows, cols

    def _probe_cells(self, p: ProbePoint):
        if p.axis is None:
            i, j = self.cell_index(p.y, p.z)
            return np.array([i]), np.array([j])
        return self._line_cells(p.y, p.z, p.axis, p.width)

    def _aperture_cells(self, t: Transducer):
        return self._line_cells(t.y, t.z, t.axis, t.width)

    def _add_backshorts(self):
        geom = self.scene.geometry
        src = geom.transducers.get(self.scene.source_index)
        if src is None:
            return
        cs = self.cfg.cell_size
        off = BACKSHORT_OFFSET * src.direction
        by = src.y - (off if src.axis == "z" else 0.0)
        bz = src.z - (off if src.axis == "y" else 0.0)
        try:
            rows, cols = self._line_cells(by, bz, src.axis, src.width + 4 * cs)
        except ValueError:
            return   # back wall would fall outside; run without it
        self.pec_mask[rows, cols] = True

    # -- update coefficients -------------------------------------------------

    def _absorber_profile(self, n: int, staggered: bool) -> np.ndarray:
        cfg = self.cfg
        npml = cfg.pml_cells
        n_bg = math.sqrt(self.eps_bg)
        eta0 = MU0 * C0
        smax = 3.0 * n_bg * math.log(1e6) / (2.0 * eta0 * npml * cfg.cell_size)
        idx = np.arange(n) + (0.5 if staggered else 0.0)
        depth = np.minimum(idx, (n - 1) - idx)
        prof = np.where(depth < npml, ((npml - depth) / npml) ** 2, 0.0)
        return smax * prof

    def _build_coefficients(self):
        cfg = self.cfg
        dt, cs = self.dt, cfg.cell_size
        eps = self.eps_r_map * EPS0
        sig_y = self._absorber_profile(self.ny, False)[:, None]
        sig_z = self._absorber_profile(self.nz, False)[None, :]
        siga = self.sigma_map + sig_y
        sigb = self.sigma_map + sig_z
        den_a = eps / dt + siga / 2.0
        den_b = eps / dt + sigb / 2.0
        self.ca_a = (eps / dt - siga / 2.0) / den_a
        self.cb_a = (1.0 / cs) / den_a
        self.ca_b = (eps / dt - sigb / 2.0) / den_b
        self.cb_b = (1.0 / cs) / den_b
        if self.pin_cells_enforced:
            for arr in (self.ca_a, self.cb_a, self.ca_b, self.cb_b):
                arr[self.pec_mask] = 0.0
        # magnetic absorber, impedance-matched to the background medium
        scale = MU0 / (EPS0 * self.eps_bg)
        sstar_y = self._absorber_profile(self.ny, True)[: self.ny - 1] * scale
        sstar_z = self._absorber_profile(self.nz, True)[: self.nz - 1] * scale
        den_hy = MU0 / dt + sstar_y[:, None] / 2.0
        den_hz = MU0 / dt + sstar_z[None, :] / 2.0
        self.ch_a_y = (MU0 / dt - sstar_y[:, None] / 2.0) / den_hy
        self.ch_b_y = (1.0 / cs) / den_hy
        self.ch_a_z = (MU0 / dt - sstar_z[None, :] / 2.0) / den_hz
        self.ch_b_z = (1.0 / cs) / den_hz

    def _make_bands(self, workers: int):
        edges = np.linspace(0, self.ny, workers + 1).astype(int)
        return [(int(edges[k]), int(edges[k + 1])) for k in range(workers)]

    # -- update kernels -------------------------------------------------------

    def _update_h_band(self, r0: int, r1: int):
        e, hz, hy = self.e, self.hz, self.hy
        h0, h1 = r0, min(r1, self.ny - 1)
        if h0 < h1:
            band = hz[h0:h1]
            band *= self.ch_a_y[h0:h1]
            diff = np.subtract(e[h0 + 1:h1 + 1], e[h0:h1], out=self._shz[h0:h1])
            diff *= self.ch_b_y[h0:h1]
            band += diff
        band = hy[r0:r1]
        band *= self.ch_a_z
        diff = np.subtract(e[r0:r1, 1:], e[r0:r1, :-1], out=self._shy[r0:r1])
        diff *= self.ch_b_z
        band -= diff

    def _update_e_band(self, r0: int, r1: int):
        a0, a1 = max(r0, 1), min(r1, self.ny - 1)
        if a0 >= a1:
            return
        ea, eb, hz, hy = self.ea, self.eb, self.hz, self.hy
        band = ea[a0:a1]
        band *= self.ca_a[a0:a1]
        diff = np.subtract(hz[a0:a1], hz[a0 - 1:a1 - 1], out=self._se[a0:a1])
        diff *= self.cb_a[a0:a1]
        band += diff
        band = eb[a0:a1, 1:-1]
        band *= self.ca_b[a0:a1, 1:-1]
        diff = np.subtract(hy[a0:a1, 1:], hy[a0:a1, :-1], out=self._se[a0:a1, 1:-1])
        diff *= self.cb_b[a0:a1, 1:-1]
        band -= diff

    def _sum_e_band(self, r0: int, r1: int):
        np.add(self.ea[r0:r1], self.eb[r0:r1], out=self.e[r0:r1])

    def _run_banded(self, fn):
        if self._pool is None:
            fn(0, self.ny)
        else:
            list(self._pool.map(lambda b: fn(*b), self._bands))

    # -- public stepping -------------------------------------------------------

    def step(self):
        """Advance H then E by one time step (no source injection)."""
        self._run_banded(self._update_h_band)
        self._run_banded(self._update_e_band)
        self._run_banded(self._sum_e_band)
        self.n += 1
        self.time = self.n * self.dt

    def inject(self, rows, cols, value: float):
        """Soft (additive) source across the given cells."""
        self.ea[rows, cols] += value
        self.e[rows, cols] += value

    def accumulate_probes(self):
        phase = np.exp(-1j * self._omega * self.time) * self.dt
        for p in self.probes:
            if p.gated and self.time > self.cfg.source_off_time:
                continue
            p.spectrum += np.mean(self.e[p.rows, p.cols]) * phase

    def interior(self) -> tuple[slice, slice]:
        m = self.cfg.pml_cells + 2
        return (slice(m, self.ny - m), slice(m, self.nz - m))

    def interior_energy(self) -> float:
        sl = self.interior()
        return float(np.sum(self.e[sl] ** 2))

    def field_energy(self, e_prev: np.ndarray) -> float:
        """Discrete energy of the leapfrog scheme (time-centered E product)."""
        eps = self.eps_r_map * EPS0
        ue = 0.5 * float(np.sum(eps * e_prev * self.e))
        uh = 0.5 * MU0 * (float(np.sum(self.hy ** 2)) + float(np.sum(self.hz ** 2)))
        return ue + uh

    def check_finite(self):
        if not np.isfinite(self.e).all():
            bad = np.argwhere(~np.isfinite(self.e))[0]
            raise SolverDiverged(
                f"non-finite field at step {self.n}, cell ({bad[0]}, {bad[1]})")

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None


def build_scene(scene: Scene | layout_mod.PinGrid,
                surface: SurfaceConfig | None = None,
                cfg: SolverConfig | None = None) -> FieldState:
    """Prepare field arrays and material maps for a scene.

    Accepts either a full :class:`Scene` or a bare pin grid (which gets a
    default geometry derived from its bounding box).
    """
    if isinstance(scene, layout_mod.PinGrid):
        if surface is None:
            raise ValueError("a SurfaceConfig is required with a bare PinGrid")
        grid = scene
        margin = 16 * (cfg.cell_size if cfg else 1e-4)
        geom = SceneGeometry(
            y_extent=(grid.origin[0] - margin, grid.origin[0] + grid.rows * grid.pitch_ws + margin),
            z_extent=(grid.origin[1] - margin, grid.origin[1] + grid.cols * grid.pitch_ws + margin),
        )
        scene = Scene(geometry=geom, surface=surface, grid=grid)
    elif surface is not None:
        scene = replace(scene, surface=surface)
    return FieldState(scene, cfg if cfg is not None else SolverConfig())


def inject_source(state: FieldState, transducer: Transducer, t: float) -> None:
    """Drive one transducer aperture with the configured waveform at time t."""
    rows, cols = state._aperture_cells(transducer)
    state.inject(rows, cols, state.cfg.waveform(t))


@dataclass
class RunResult:
    probes: dict[str, ProbeRecord]
    steps: int
    converged: bool
    elapsed_s: float
    final_field: np.ndarray | None = None
    max_field: np.ndarray | None = None
    energy_series: np.ndarray | None = None

    def probe(self, probe_id: str) -> ProbeRecord:
        return self.probes[probe_id]


def run(state: FieldState, *, snapshot: bool = False,
        energy_series: bool = False) -> RunResult:
    """Drive the scene's source and march until the field has decayed.

    Termination: fixed ``run_time`` when configured, otherwise when the
    interior field energy falls below ``residual_energy_ratio`` of its peak.
    Hitting ``max_steps`` first clears the ``converged`` flag.
    """
    cfg = state.cfg
    t_wall = time.time()
    if cfg.run_time is not None:
        max_steps = int(round(cfg.run_time / state.dt))
    elif cfg.max_steps is not None:
        max_steps = cfg.max_steps
    else:
        ly = state.ny * cfg.cell_size
        lz = state.nz * cfg.cell_size
        transit = math.hypot(ly, lz) * math.sqrt(state.eps_bg) / C0
        max_steps = int(round((cfg.source_off_time + 15.0 * transit) / state.dt))
    use_energy_stop = cfg.run_time is None

    max_field = np.zeros_like(state.e) if snapshot else None
    energies: list[float] = []
    e_prev = state.e.copy() if energy_series else None

    peak_energy = 0.0
    converged = not use_energy_stop
    for _ in range(max_steps):
        if energy_series:
            np.copyto(e_prev, state.e)
        state.step()
        t = state.time
        g = cfg.waveform(t)
        if g != 0.0:
            for rows, cols in state.sources:
                state.inject(rows, cols, g)
        state.accumulate_probes()
        if snapshot:
            np.maximum(max_field, np.abs(state.e), out=max_field)
        if energy_series:
            energies.append(state.field_energy(e_prev))
        if cfg.debug_checks:
            state.check_finite()
        if state.n % cfg.check_interval == 0:
            if not cfg.debug_checks:
                state.check_finite()
            if use_energy_stop:
                en = state.interior_energy()
                peak_energy = max(peak_energy, en)
                if t > cfg.source_off_time and peak_energy > 0.0 \
                        and en < cfg.residual_energy_ratio * peak_energy:
                    converged = True
                    break

    state.close()
    return RunResult(
        probes={p.probe_id: p for p in state.probes},
        steps=state.n,
        converged=converged,
        elapsed_s=time.time() - t_wall,
        final_field=state.e.copy() if snapshot else None,
        max_field=max_field,
        energy_series=np.asarray(energies) if energy_series else None,
    )


#: Reference spectra smaller than this fraction of their own peak mark the
#: frequency as invalid in transmission curves.
_REF_FLOOR = 1e-9


def transmission(probe: ProbeRecord, ref: ProbeRecord, *,
                 layout_id: str = "", distance_m: float = float("nan")) -> TransmissionCurve:
    """Normalized transmission 20*log10(|probe| / |ref|) per frequency."""
    if not np.array_equal(probe.frequencies, ref.frequencies):
        raise ValueError("probe and reference were accumulated on different frequency sets")
    ref_mag = np.abs(ref.spectrum)
    valid = ref_mag > _REF_FLOOR * float(ref_mag.max(initial=0.0))
    s21 = np.full(len(ref_mag), np.nan)
    s21[valid] = 20.0 * np.log10(np.abs(probe.spectrum[valid]) / ref_mag[valid])
    return TransmissionCurve(
        frequencies=probe.frequencies.copy(),
        s21_db=s21,
        layout_id=layout_id,
        distance_m=distance_m,
        valid=valid,
    )
