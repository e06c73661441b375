"""pflab: desk-scale numerical laboratory for a fibered Pauli-Fierz
Hamiltonian (electron spin coupled to a cutoff quantized radiation field at
fixed total momentum) on a truncated photon Fock space."""

from .errors import (
    ConfigError,
    DimensionCapError,
    DomainError,
    GapTooSmallError,
    IndeterminateDegeneracy,
    NonHermitianError,
    NotAxialError,
    PflabError,
    ScientificFailure,
    SolverError,
)
from .fock import (
    FockBasis,
    Mode,
    ModeSet,
    OccupationState,
    annihilation_matrix,
    axial_mode_set,
    creation_matrix,
    enumerate_basis,
    explicit_mode_set,
    field_energy,
    field_momentum,
    hermiticity_defect,
    hermitize,
    number_operator,
    spin_tensor,
)
from .model import (
    Dispersion,
    FormFactor,
    ModelConfig,
    assemble_hamiltonian,
    build_basis,
    build_magnetic_field,
    build_vector_potential,
    check_dispersion_axioms,
    coupling_bound,
    free_hamiltonian,
    interaction_part,
    polarization_vectors,
    rotation_matrix,
)
from .quadrature import QuadratureSpec
from .spectra import (
    FreeEnergyCurve,
    GapReport,
    GroundCluster,
    RadialEnergyCurve,
    SpectralResult,
    axial_k_grid,
    detect_ground_cluster,
    energy_sweep,
    gap_estimate,
    solve_lowest,
    sweep_energy_curve,
)

__version__ = "0.1.0"
