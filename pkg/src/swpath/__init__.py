"""Surface-wave pathway toolkit.

Subpackages:

* :mod:`swpath.physics` - closed-form TM surface-wave model and materials
* :mod:`swpath.layout` - cavity-lattice layouts and experiment presets
* :mod:`swpath.dsl` - the pathway-layout language
* :mod:`swpath.solver` - 2D effective-index time-domain solver
* :mod:`swpath.scenes` - ready-made experiment scenes
* :mod:`swpath.raytrace` - image-method long-distance path loss
* :mod:`swpath.analysis` - transmission-curve metrics
* :mod:`swpath.artifacts` - CSV / PGM / raw-dump writers
"""

from .analysis import (
    AttenuationFit,
    Band,
    MetricsReport,
    PeakEstimate,
    TransmissionCurve,
    attenuation_fit,
    band_average_s21,
    band_power_centroid,
    half_power_band,
    isolation,
    onset_frequency,
    optimal_frequency,
)
from .layout import (
    PinGrid,
    ProbePoint,
    SceneGeometry,
    Transducer,
    corner_width,
    preset_corner,
    preset_straight,
    preset_tjunction,
    rasterize,
)
from .physics import (
    C0,
    DEFAULT_KAPPA,
    EPS0,
    MU0,
    PEC,
    DielectricSpec,
    FieldTriplet,
    MetalSpec,
    PhysicalConstants,
    PorosityGeometry,
    SurfaceConfig,
    SurfaceWaveSolution,
    effective_index,
    effective_permittivity,
    equivalent_loss_rate,
    field_profile,
    gamma_x,
    gamma_z,
    load_materials,
    porosity,
    skin_depth,
    solve_surface_wave,
    surface_impedance,
    surface_solution,
    table_surface,
)
from .raytrace import RayPathModel, guided_power, reference_curves, wall_reflection
from .solver import (
    FieldState,
    ProbeRecord,
    RunResult,
    Scene,
    SolverConfig,
    build_scene,
    inject_source,
    run,
    transmission,
)

__version__ = "0.1.0"
