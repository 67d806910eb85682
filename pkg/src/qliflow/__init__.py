"""Causal information-flow and operator-spreading diagnostics for the 1D
mixed-field Ising chain, with cross-validating ED and MPS-TEBD engines.

The central quantity is the freeze-and-compare entropy difference
T_d(t): evolve one initial state under the full Hamiltonian and under a
copy with every term touching one site removed, and subtract the
single-site entropies at an observation site a distance d away.  The
sign, magnitude, and time integral of T_d quantify how strongly the
frozen site's dynamics drives entropy change at the distant site."""

__version__ = "0.1.0"

from .model import (
    HamiltonianSpec,
    OperatorSum,
    Term,
    VelocityTable,
    build_hamiltonian,
    build_frozen_hamiltonian,
    dispersion,
    velocity_table,
)
from .ed import (
    CapacityError,
    StateVector,
    dense_matrix,
    evolve,
    ground_state_dense,
    neel_state,
    otoc_series,
    reduce_single_site,
    von_neumann_entropy,
)
from .mps import (
    BlochVector,
    DMRGResult,
    MPSState,
    TEBDConfig,
    bloch_entropy,
    contract_to_dense,
    dmrg_ground_state,
    mps_from_product,
    neel_directions,
    tebd_evolve,
)
from .qlif import (
    AllUp,
    DenseVector,
    EDEngine,
    GroundStateOf,
    MPSEngine,
    Neel,
    QLIFHeatmap,
    QLIFRequest,
    QLIFTrace,
    SpinPattern,
    qlif_heatmap,
    qlif_trace,
    read_heatmap_csv,
    read_trace_csv,
    time_integral,
    write_heatmap_csv,
    write_trace_csv,
)
from .otoc import (
    ButterflyFit,
    OTOCTrace,
    butterfly_velocity,
    otoc_multidistance,
    write_otoc_csv,
)
from .analysis import (
    ChaosVerdict,
    FitResult,
    InsufficientDataError,
    LightConeFit,
    chaos_metric,
    front_arrival,
    light_cone_velocity,
    powerlaw_fit,
)
from .config import (
    ConfigError,
    ExperimentConfig,
    parse_config,
    preset,
    serialize_config,
)
from .runner import RunManifest, manifest_hash, run
