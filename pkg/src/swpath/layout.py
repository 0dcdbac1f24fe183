"""Cavity-lattice layouts: pin grids, experiment presets, rasterization.

A :class:`PinGrid` is a square lattice of cavity sites with pitch ``ws``;
the ``filled`` set records which cavities hold conductive pins. Row index
runs along the lateral (y) axis, column index along the propagation (z)
axis; site (r, c) sits at ``origin + (r*ws, c*ws)``.

Presets build the experiment geometries: straight pathways with one or more
wall layers, the switchable T-junction, and the family of 90-degree corners
whose outer wall is chamfered progressively inward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SQRT2 = math.sqrt(2.0)

DEFAULT_PITCH = 2e-3          # cavity center-to-center separation, m
DEFAULT_CAVITY_RADIUS = 5e-4  # m
#: Straight-pathway walls run this far past each transducer aperture.
WALL_OVERHANG = 10e-3


@dataclass
class PinGrid:
    """Square cavity lattice with a set of filled (pin) sites."""

    rows: int
    cols: int
    pitch_ws: float = DEFAULT_PITCH
    origin: tuple[float, float] = (0.0, 0.0)   # (y, z) of site (0, 0)
    filled: set[tuple[int, int]] = field(default_factory=set)

    def __post_init__(self):
        if self.rows <= 0 or self.cols <= 0:
            raise ValueError(f"grid must have positive extent, got {self.rows}x{self.cols}")
        if not self.pitch_ws > 0:
            raise ValueError(f"pitch must be positive, got {self.pitch_ws}")
        for rc in self.filled:
            self._check(*rc)

    def _check(self, r: int, c: int) -> tuple[int, int]:
        if not (0 <= r < self.rows and 0 <= c < self.cols):
            raise IndexError(f"site ({r}, {c}) outside {self.rows}x{self.cols} grid")
        return (r, c)

    def fill(self, r: int, c: int) -> None:
        self.filled.add(self._check(r, c))

    def fill_line(self, r0: int, c0: int, r1: int, c1: int) -> None:
        """Fill an inclusive straight or 45-degree run of sites."""
        dr, dc = r1 - r0, c1 - c0
        if not (dr == 0 or dc == 0 or abs(dr) == abs(dc)):
            raise ValueError(f"line ({r0},{c0})-({r1},{c1}) is neither straight nor 45 degrees")
        n = max(abs(dr), abs(dc))
        sr = (dr > 0) - (dr < 0)
        sc = (dc > 0) - (dc < 0)
        for k in range(n + 1):
            self.fill(r0 + sr * k, c0 + sc * k)

    def position(self, r: int, c: int) -> tuple[float, float]:
        """Physical (y, z) of a lattice site."""
        return (self.origin[0] + r * self.pitch_ws, self.origin[1] + c * self.pitch_ws)

    def pin_positions(self) -> list[tuple[float, float]]:
        return [self.position(r, c) for (r, c) in sorted(self.filled)]

    def site_near(self, y: float, z: float) -> tuple[int, int]:
        """Lattice site nearest a physical point (may be out of range)."""
        r = round((y - self.origin[0]) / self.pitch_ws)
        c = round((z - self.origin[1]) / self.pitch_ws)
        return (int(r), int(c))


@dataclass(frozen=True)
class Transducer:
    """Aperture segment: centered at (y, z), spanning ``width`` across ``axis``.

    ``axis='y'`` means the aperture line runs along y and launches/receives
    along z; ``direction`` is +1 toward increasing coordinate.
    """

    index: int
    y: float
    z: float
    width: float = 7.112e-3
    axis: str = "y"
    direction: int = 1


@dataclass(frozen=True)
class ProbePoint:
    """Field sampling site. ``axis=None`` is a point probe; 'y'/'z' average
    the complex field over a ``width`` line (a finite receiver aperture)."""

    probe_id: str
    y: float
    z: float
    axis: str | None = None
    width: float = 0.0
    gated: bool = False   # accumulate only during the launch window


@dataclass
class SceneGeometry:
    """Physical extents plus transducers and probe definitions."""

    y_extent: tuple[float, float]
    z_extent: tuple[float, float]
    transducers: dict[int, Transducer] = field(default_factory=dict)
    probes: list[ProbePoint] = field(default_factory=list)
    reference_probe: str | None = None

    def __post_init__(self):
        if self.y_extent[1] <= self.y_extent[0] or self.z_extent[1] <= self.z_extent[0]:
            raise ValueError("scene extents must be non-empty")


def _span_sites(length: float, pitch: float) -> int:
    return int(round(length / pitch))


def _require_multiple(value: float, pitch: float, what: str) -> int:
    n = value / pitch
    if abs(n - round(n)) > 1e-9 or round(n) <= 0:
        raise ValueError(f"{what} ({value}) must be a positive multiple of the pitch ({pitch})")
    return int(round(n))


def preset_straight(width_wc: float, length: float, layers: int = 1,
                    pitch_ws: float = DEFAULT_PITCH) -> PinGrid:
    """Two parallel pin-wall bands forming a straight pathway.

    ``width_wc`` is the center-to-center separation of the innermost wall
    rows; each extra layer adds one row outward on both sides. The walls
    span ``length`` along z starting at z = 0; the pathway centerline sits
    at y = 0.
    """
    n_wc = _require_multiple(width_wc, pitch_ws, "pathway width")
    if n_wc < 2:
        raise ValueError(f"pathway width {width_wc} is below two lattice pitches")
    if not 1 <= layers <= 4:
        raise ValueError(f"layers must be in 1..4, got {layers}")
    ncols = _span_sites(length, pitch_ws) + 1
    nrows = n_wc + 2 * layers - 1
    grid = PinGrid(
        rows=nrows, cols=ncols, pitch_ws=pitch_ws,
        origin=(-width_wc / 2.0 - (layers - 1) * pitch_ws, 0.0),
    )
    for layer in range(layers):
        lo = layers - 1 - layer
        hi = layers - 1 + n_wc + layer
        for c in range(ncols):
            grid.fill(lo, c)
            grid.fill(hi, c)
    return grid


def preset_tjunction(mode: str, width_wc: float = 10e-3,
                     arm_length: float = 60e-3,
                     pitch_ws: float = DEFAULT_PITCH) -> PinGrid:
    """Three-arm junction with a switchable center.

    Arm 1 enters along +z, arm 2 continues along +z, arm 3 leaves along +y.
    The junction center (crossing of the two centerlines) is at (0, 0).
    ``mode='straight'`` closes the arm-3 entrance with a pin row;
    ``mode='turn'`` installs a dense 45-degree pin mirror redirecting arm 1
    into arm 3 (which also blocks the straight continuation).
    """
    if mode not in ("straight", "turn"):
        raise ValueError(f"mode must be 'straight' or 'turn', got {mode!r}")
    n_wc = _require_multiple(width_wc, pitch_ws, "pathway width")
    half = width_wc / 2.0
    n_arm = _span_sites(arm_length, pitch_ws)
    # grid covers y in [-half - pitch, arm_length], z in [-arm_length, arm_length]
    extra = 1
    rows = n_arm + n_wc // 2 + 1 + extra + (n_wc - n_wc // 2)
    cols = 2 * n_arm + 1
    origin_y = -half - extra * pitch_ws
    origin_z = -arm_length
    grid = PinGrid(rows=rows, cols=cols, pitch_ws=pitch_ws, origin=(origin_y, origin_z))

    def site(y, z):
        return grid.site_near(y, z)

    # lower wall: continuous under both straight arms
    grid.fill_line(*site(-half, -arm_length), *site(-half, arm_length))
    # upper wall with the arm-3 opening between z = -half and z = +half
    grid.fill_line(*site(half, -arm_length), *site(half, -half))
    grid.fill_line(*site(half, half), *site(half, arm_length))
    # arm-3 side walls
    grid.fill_line(*site(half, -half), *site(arm_length, -half))
    grid.fill_line(*site(half, half), *site(arm_length, half))
    if mode == "straight":
        grid.fill_line(*site(half, -half), *site(half, half))
    else:
        # staircase mirror: pins at every lattice site along the 45-degree
        # path, stepping z then y, so adjacent pins stay one pitch apart
        r0, c0 = site(-half, -half)
        r1, c1 = site(half, half)
        n = c1 - c0
        for k in range(n):
            grid.fill(r0 + k, c0 + k)
            grid.fill(r0 + k + 1, c0 + k)
        grid.fill(r1, c1)
    return grid


def corner_width(k: int, pitch_ws: float = DEFAULT_PITCH) -> float:
    """Corner width for chamfer step k: distance from the inner vertex pin
    to the midpoint of the chamfered outer wall."""
    if not 1 <= k <= 8:
        raise ValueError(f"corner index k must be in 1..8, got {k}")
    return (10 - k) * pitch_ws / SQRT2


def preset_corner(k: int, width_wc: float = 10e-3,
                  arm_in: float = 50e-3, arm_out: float = 45e-3,
                  pitch_ws: float = DEFAULT_PITCH) -> PinGrid:
    """90-degree turn pathway whose outer corner is chamfered inward.

    The input arm runs along +z (centerline y = 0) and the output arm along
    +y (centerline z = 0); the centerlines cross at the origin. The inner
    wall is a right angle with its vertex pin at (+wc/2, -wc/2). The outer
    wall is a right angle for k = 0, the same minus its vertex pin for
    k = 1, and a 45-degree chamfer wall moved progressively inward for
    k >= 2 (its midpoint sits ``corner_width(k)`` from the inner vertex).
    """
    if not 0 <= k <= 8:
        raise ValueError(f"corner index k must be in 0..8, got {k}")
    n_wc = _require_multiple(width_wc, pitch_ws, "pathway width")
    half = width_wc / 2.0
    kk = max(k, 1)
    bz = half - kk * pitch_ws    # chamfer start on the input's outer wall
    cy = -half + kk * pitch_ws   # chamfer end on the output's outer wall
    y_lo = -half - 1 * pitch_ws
    y_hi = arm_out
    z_lo = -arm_in
    z_hi = half + 1 * pitch_ws
    rows = _span_sites(y_hi - y_lo, pitch_ws) + 1
    cols = _span_sites(z_hi - z_lo, pitch_ws) + 1
    grid = PinGrid(rows=rows, cols=cols, pitch_ws=pitch_ws, origin=(y_lo, z_lo))

    def site(y, z):
        return grid.site_near(y, z)

    # inner right angle
    grid.fill_line(*site(half, -arm_in), *site(half, -half))
    grid.fill_line(*site(half, -half), *site(arm_out, -half))
    if k == 0:
        grid.fill_line(*site(-half, -arm_in), *site(-half, half))
        grid.fill_line(*site(-half, half), *site(arm_out, half))
    else:
        grid.fill_line(*site(-half, -arm_in), *site(-half, bz))
        grid.fill_line(*site(cy, half), *site(arm_out, half))
        grid.fill_line(*site(-half, bz), *site(cy, half))   # 45-degree chamfer
    return grid


def rasterize(grid: PinGrid, cell_size: float,
              cavity_radius: float = DEFAULT_CAVITY_RADIUS,
              y_extent: tuple[float, float] | None = None,
              z_extent: tuple[float, float] | None = None) -> np.ndarray:
    """Boolean occupancy mask of the filled cavities on a uniform cell grid.

    Cell (i, j) covers [y0 + i*cs, y0 + (i+1)*cs) x [z0 + j*cs, ...); a cell
    is metal exactly when its center lies strictly inside a pin circle, so
    the result is independent of evaluation order or partitioning.
    """
    if cell_size > cavity_radius / 2.0:
        raise ValueError(
            f"cell_size {cell_size} too coarse: must be <= cavity_radius/2 "
            f"({cavity_radius / 2.0}) to resolve pins"
        )
    if y_extent is None:
        y_extent = (grid.origin[0] - grid.pitch_ws, grid.origin[0] + grid.rows * grid.pitch_ws)
    if z_extent is None:
        z_extent = (grid.origin[1] - grid.pitch_ws, grid.origin[1] + grid.cols * grid.pitch_ws)
    y0, y1 = y_extent
    z0, z1 = z_extent
    ny = int(round((y1 - y0) / cell_size))
    nz = int(round((z1 - z0) / cell_size))
    mask = np.zeros((ny, nz), dtype=bool)
    r2 = cavity_radius * cavity_radius
    for (r, c) in grid.filled:
        py, pz = grid.position(r, c)
        i0 = max(int(math.floor((py - cavity_radius - y0) / cell_size)) - 1, 0)
        i1 = min(int(math.ceil((py + cavity_radius - y0) / cell_size)) + 1, ny)
        j0 = max(int(math.floor((pz - cavity_radius - z0) / cell_size)) - 1, 0)
        j1 = min(int(math.ceil((pz + cavity_radius - z0) / cell_size)) + 1, nz)
        if i0 >= i1 or j0 >= j1:
            continue
        ii = np.arange(i0, i1)
        jj = np.arange(j0, j1)
        dy = y0 + (ii + 0.5) * cell_size - py
        dz = z0 + (jj + 0.5) * cell_size - pz
        mask[np.ix_(ii, jj)] |= (dy[:, None] ** 2 + dz[None, :] ** 2) < r2
    return mask


def mask_to_pgm(mask: np.ndarray) -> bytes:
    """Binary PGM (P5) image of an occupancy mask: 0 dielectric, 255 metal."""
    ny, nz = mask.shape
    header = f"P5\n{nz} {ny}\n255\n".encode("ascii")
    return header + (mask.astype(np.uint8) * 255).tobytes()
