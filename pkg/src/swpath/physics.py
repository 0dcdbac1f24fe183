"""Closed-form TM surface-wave model for a porous dielectric-coated conductor.

All quantities are SI. The model covers a thin dielectric layer (thickness
``h``, relative permittivity ``eps_r``, loss tangent ``tan_delta``) on a
conductive ground plane. Cylindrical cavities arranged on a square lattice
make the layer porous; the porous layer is homogenized to an effective
permittivity before any propagation quantity is evaluated.

The chain of derived quantities:

    skin_depth -> gamma_x -> gamma_z -> effective_index -> equivalent_loss_rate

``effective_index`` and ``equivalent_loss_rate`` feed the 2D in-plane solver
(see :mod:`swpath.solver`), which treats the bound wave as propagation in a
medium of index ``n_eff`` with an equivalent conductivity.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from importlib import resources
from typing import NamedTuple

# Vacuum constants. c0 is derived from eps0 and mu0 so the set is exactly
# self-consistent (eps0 is the rounded engineering value, not CODATA).
EPS0 = 8.854e-12        # F/m
MU0 = 4e-7 * math.pi    # H/m
C0 = 1.0 / math.sqrt(MU0 * EPS0)  # m/s

#: Default fraction of the dielectric loss assigned to the bound mode when
#: mapping tan_delta to an in-plane attenuation (see equivalent_loss_rate).
DEFAULT_KAPPA = 0.657


@dataclass(frozen=True)
class PhysicalConstants:
    eps0: float = EPS0
    mu0: float = MU0
    c0: float = C0


@dataclass(frozen=True)
class DielectricSpec:
    """Dielectric layer: relative permittivity, loss tangent and thickness.

    ``tan_delta`` is taken as frequency-constant (single-point data); the
    frequency it was specified at is kept for bookkeeping only.
    """

    eps_r: float
    tan_delta: float
    tan_delta_ref_freq: float
    thickness_h: float

    def __post_init__(self):
        if not self.eps_r > 1.0:
            raise ValueError(f"eps_r must exceed 1, got {self.eps_r}")
        if self.tan_delta < 0.0:
            raise ValueError(f"tan_delta must be >= 0, got {self.tan_delta}")
        if not self.thickness_h > 0.0:
            raise ValueError(f"thickness_h must be positive, got {self.thickness_h}")


@dataclass(frozen=True)
class MetalSpec:
    """Conductor described by its electric conductivity in S/m.

    ``sigma = math.inf`` denotes a perfect electric conductor.
    """

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def is_pec(self) -> bool:
        return math.isinf(self.sigma)


#: Perfect electric conductor.
PEC = MetalSpec(math.inf)


@dataclass(frozen=True)
class PorosityGeometry:
    """Cavity lattice: circular cavities on an even square grid."""

    cavity_radius_r: float
    cavity_pitch_ws: float

    def __post_init__(self):
        if not 0.0 < 2.0 * self.cavity_radius_r <= self.cavity_pitch_ws:
            raise ValueError(
                "need 0 < 2*cavity_radius_r <= cavity_pitch_ws, got "
                f"r={self.cavity_radius_r}, ws={self.cavity_pitch_ws}"
            )


@dataclass(frozen=True)
class SurfaceWaveSolution:
    """Propagation quantities of the bound TM mode at one frequency."""

    frequency: float
    gamma_x: complex        # normal decay coefficient, 1/m
    gamma_z: complex        # along-surface propagation coefficient, 1/m
    n_eff: float            # effective index
    Zs: complex             # surface impedance, ohm
    skin_depth: float       # m

    @property
    def Rs(self) -> float:
        return self.Zs.real

    @property
    def Xs(self) -> float:
        return self.Zs.imag


@dataclass(frozen=True)
class FieldTriplet:
    """Complex TM field amplitudes at a point (time factor omitted)."""

    Hy: complex
    Ex: complex
    Ez: complex


@dataclass(frozen=True)
class SurfaceConfig:
    """Full physical description of the reconfigurable surface."""

    dielectric: DielectricSpec
    ground: MetalSpec
    porosity_geometry: PorosityGeometry
    transducer_aperture_w: float = 7.112e-3  # m
    transducer_aperture_h: float = 3.566e-3  # m (not used by the 2D solver)

    def effective_dielectric(self) -> DielectricSpec:
        """Dielectric spec with the porous layer homogenized."""
        rho = porosity(self.porosity_geometry)
        return replace(
            self.dielectric,
            eps_r=effective_permittivity(self.dielectric.eps_r, rho),
        )


def _check_frequency(f: float) -> float:
    if not f > 0.0:
        raise ValueError(f"frequency must be positive, got {f}")
    return 2.0 * math.pi * f


def skin_depth(f: float, metal: MetalSpec) -> float:
    """Skin depth of a conductor at frequency f (meters)."""
    w = _check_frequency(f)
    if metal.is_pec:
        return 0.0
    return math.sqrt(2.0 / (w * MU0 * metal.sigma))


def gamma_x(f: float, dielectric: DielectricSpec, metal: MetalSpec) -> complex:
    """Complex decay coefficient of the bound mode normal to the surface.

    For a porous layer, pass the homogenized dielectric
    (``SurfaceConfig.effective_dielectric``); the formula itself is for a
    uniform layer.
    """
    w = _check_frequency(f)
    d = skin_depth(f, metal)
    er = dielectric.eps_r
    h = dielectric.thickness_h
    return w * w * MU0 * EPS0 * complex((er - 1.0) / er * h + d / 2.0, -d / 2.0)


def gamma_z(f: float, gx: complex) -> complex:
    """Along-surface propagation coefficient from the normal coefficient.

    Branch: Re(gamma_z) >= 0, and Im(gamma_z) >= 0 when the real part
    vanishes, so exp(-gamma_z * z) never grows for z > 0.
    """
    w = _check_frequency(f)
    val = -(w * w * MU0 * EPS0) - gx * gx
    root = cmath.sqrt(val)
    if root.real < 0.0 or (root.real == 0.0 and root.imag < 0.0):
        root = -root
    return root


def effective_index(f: float, gz: complex) -> float:
    """Phase index of the bound mode, Im(gamma_z) * c0 / omega."""
    w = _check_frequency(f)
    if not gz.imag > 0.0:
        raise ValueError(f"gamma_z must have positive imaginary part, got {gz}")
    return gz.imag * C0 / w


def surface_impedance(f: float, dielectric: DielectricSpec, metal: MetalSpec) -> complex:
    """Surface impedance Rs + jXs of the air-dielectric interface (ohm)."""
    w = _check_frequency(f)
    d = skin_depth(f, metal)
    er = dielectric.eps_r
    h = dielectric.thickness_h
    return complex(
        w * MU0 * d / 2.0,
        w * MU0 * ((er - 1.0) / er * h + d / 2.0),
    )


def porosity(geom: PorosityGeometry) -> float:
    """Open-area fraction of the cavity lattice, pi r^2 / ws^2."""
    r = geom.cavity_radius_r
    ws = geom.cavity_pitch_ws
    return math.pi * r * r / (ws * ws)


def effective_permittivity(eps_r: float, rho: float) -> float:
    """Homogenized permittivity of the porous layer.

    Valid for eps_r > 1 and porosity 0 <= rho < 1; reduces to eps_r at
    rho = 0 and stays within (1, eps_r].
    """
    if not eps_r > 1.0:
        raise ValueError(f"eps_r must exceed 1, got {eps_r}")
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must be in [0, 1), got {rho}")
    num = eps_r * (1.0 + 3.0 * eps_r + 3.0 * rho * (1.0 - eps_r))
    den = 1.0 + 3.0 * eps_r + rho * (eps_r - 1.0)
    return num / den


def solve_surface_wave(f: float, dielectric: DielectricSpec, metal: MetalSpec) -> SurfaceWaveSolution:
    """Evaluate the full propagation solution for a uniform layer."""
    gx = gamma_x(f, dielectric, metal)
    gz = gamma_z(f, gx)
    return SurfaceWaveSolution(
        frequency=f,
        gamma_x=gx,
        gamma_z=gz,
        n_eff=effective_index(f, gz),
        Zs=surface_impedance(f, dielectric, metal),
        skin_depth=skin_depth(f, metal),
    )


def surface_solution(f: float, surface: SurfaceConfig) -> SurfaceWaveSolution:
    """Full solution for a porous surface (homogenizes the layer first)."""
    return solve_surface_wave(f, surface.effective_dielectric(), surface.ground)


def field_profile(A: float, x: float, z: float, d: float, f: float,
                  sol: SurfaceWaveSolution) -> FieldTriplet:
    """TM field amplitudes at height x, axial position z, distance d.

    The cylindrical 1/sqrt(d) spreading factor requires d > 0; the harmonic
    time factor is omitted (phase is carried by the complex values).
    """
    if not d > 0.0:
        raise ValueError(f"propagation distance d must be positive, got {d}")
    if x < 0.0:
        raise ValueError(f"height x must be >= 0, got {x}")
    w = _check_frequency(f)
    envelope = cmath.exp(-sol.gamma_z * z) * cmath.exp(-sol.gamma_x * x) / math.sqrt(d)
    hy = A * envelope
    jweps = 1j * w * EPS0
    return FieldTriplet(
        Hy=hy,
        Ex=sol.gamma_z / jweps * hy,
        Ez=-sol.gamma_x / jweps * hy,
    )


class EquivalentLoss(NamedTuple):
    alpha_db_per_m: float
    sigma_eq: float


def equivalent_loss_rate(f: float, n_eff: float, tan_delta: float,
                         confinement_kappa: float = DEFAULT_KAPPA) -> EquivalentLoss:
    """Map dielectric loss onto the in-plane effective medium.

    Returns the plane-wave attenuation rate (dB/m) and the equivalent medium
    conductivity sigma_eq (S/m) that reproduces it in a medium of permittivity
    n_eff**2. ``confinement_kappa`` scales how much of the loss tangent the
    bound mode sees; the default is calibrated so the 26 GHz in-pathway rate
    matches the measured 28.56 dB/m.
    """
    if not (f > 0 and n_eff > 0 and tan_delta >= 0 and confinement_kappa > 0):
        raise ValueError("all of f, n_eff, confinement_kappa must be positive and tan_delta >= 0")
    w = 2.0 * math.pi * f
    alpha_db = 8.686 * (w * n_eff * tan_delta * confinement_kappa) / (2.0 * C0)
    sigma_eq = w * EPS0 * n_eff * n_eff * tan_delta * confinement_kappa
    return EquivalentLoss(alpha_db, sigma_eq)


# ---------------------------------------------------------------------------
# Material database: one material per line,
#   <name> <sigma_S_per_m>                      for metals
#   <name> <eps_r> <tan_delta> <ref_freq_hz>    for dielectrics
# '#' starts a comment.
# ---------------------------------------------------------------------------

def parse_materials(text: str) -> dict[str, MetalSpec | DielectricSpec]:
    """Parse the line-oriented material database format."""
    db: dict[str, MetalSpec | DielectricSpec] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        name = parts[0]
        try:
            if len(parts) == 2:
                db[name] = MetalSpec(sigma=float(parts[1]))
            elif len(parts) == 4:
                db[name] = DielectricSpec(
                    eps_r=float(parts[1]),
                    tan_delta=float(parts[2]),
                    tan_delta_ref_freq=float(parts[3]),
                    thickness_h=2e-3,  # default layer thickness; override as needed
                )
            else:
                raise ValueError("expected 2 fields (metal) or 4 fields (dielectric)")
        except ValueError as exc:
            raise ValueError(f"material database line {lineno}: {exc}") from exc
    return db


def load_materials(path: str | None = None) -> dict[str, MetalSpec | DielectricSpec]:
    """Load a material database file; defaults to the bundled one."""
    if path is None:
        text = resources.files("swpath").joinpath("materials.txt").read_text()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return parse_materials(text)


def table_surface(materials: dict | None = None, *, dielectric: str = "resin",
                  ground: str = "silver_ink") -> SurfaceConfig:
    """The canonical measured surface: resin on silver ink, 19.6% porosity."""
    db = materials if materials is not None else load_materials()
    diel = db[dielectric]
    met = db[ground]
    if not isinstance(diel, DielectricSpec):
        raise ValueError(f"{dielectric!r} is not a dielectric")
    if not isinstance(met, MetalSpec):
        raise ValueError(f"{ground!r} is not a metal")
    return SurfaceConfig(
        dielectric=diel,
        ground=met,
        porosity_geometry=PorosityGeometry(cavity_radius_r=0.5e-3, cavity_pitch_ws=2e-3),
    )
