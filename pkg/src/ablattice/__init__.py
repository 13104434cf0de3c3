"""2D U(1) lattice toolkit: gauge-invariant field analysis and a numerical
Aharonov-Bohm interference experiment."""

from .lattice import (
    Lattice,
    Loop,
    Region,
    build_lattice,
    connected_components,
    cycle_rank,
    enclosed_plaquettes,
    is_simply_connected,
)
from .fields import (
    FieldConfig,
    GaugeTransform,
    InvariantState,
    apply_gauge,
    circular_distance,
    extract_invariants,
    gauge_equivalent,
    random_config,
    reconstruct,
    wrap_angle,
)
from .holonomy import (
    FluxSpec,
    coulomb_gauge_fix,
    holonomy,
    plaquette_flux,
    all_plaquette_fluxes,
    solenoid_config,
    stokes_residual,
    unitary_gauge_fix,
)
from .separability import (
    CoverAnalysis,
    analyze_cover,
    codependence_check,
    construct_witness,
    glue,
    phase_transport,
    shortest_path,
    transport_equivalent,
)
from .dynamics import (
    CrankNicolsonEvolver,
    EvolutionParams,
    FringeResult,
    InterferenceGeometry,
    PacketSpec,
    ab_experiment,
    default_experiment_params,
    default_packet,
    evolve,
    fit_fringes,
    pattern_shift,
    gaussian_packet,
    hamiltonian_apply,
    hamiltonian_matrix,
    predicted_shift,
    run_interference,
    step_crank_nicolson,
    unitary_gauge_static_check,
)

from .serialization import (
    config_from_bytes,
    config_from_json,
    config_to_bytes,
    config_to_json,
    from_bytes,
    invariants_from_json,
    invariants_to_bytes,
    invariants_to_json,
)
from .config import ExperimentConfig, load_config, parse_region

__version__ = "0.1.0"
