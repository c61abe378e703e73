"""Quantum link models on arrays of dipolar molecules.

Simulation engine for U(1) lattice gauge theories (quantum link models with
link spin S = 1/2 or S = 1) realized by chains of polar molecules whose four
lowest rotational levels encode matter sites and gauge links.  The package
covers Hamiltonian construction on both sides of the correspondence, the
level-energy matching that makes the molecular array reproduce the gauge
theory, real-time evolution, and the faithfulness diagnostics (fidelity,
Gauss-law violation, string observables).
"""

__version__ = "0.1.0"

from .rotational import (
    PairGeometry,
    catalog_coefficient,
    catalog_transitions,
    dipole_matrix_element,
    pair_coefficient,
    wigner_3j,
)
from .qlm import (
    QlmBasis,
    QlmParams,
    apply_mass_sign_flip_transform,
    build_qlm_hamiltonian,
    cp_odd_observables,
    cp_transform,
    dynamical_gauss_sites,
    gauss_diagonal,
    string_preset,
)
from .params import (
    ChainGeometry,
    EnergyLadder,
    InfeasibleParametersError,
    ParameterContext,
    ParameterSet,
    PhysicalScales,
    assign_energies,
    check_s1_cancellation,
    compute_hopping,
    default_geometry,
    default_ladder,
    dipolar_coupling_hz,
    sigma_self_interaction,
    solve_s1_angle,
)
from .dmh import (
    DmhBasis,
    MoleculeArray,
    QlmDmhEmbedding,
    build_dmh_hamiltonian,
    build_embedding,
    embed_qlm_state,
    enumerate_dmh_basis,
    project_dmh_state,
)
from .effective import (
    EffectiveComparison,
    SubspacePartition,
    compare_effective_to_target,
    first_order_coupling_norm,
    partition_around,
    residual_terms,
    second_order_effective,
)
from .evolve import (
    EvolutionRecord,
    default_times,
    dmh_observables,
    evolve_emulation,
    evolve_qlm_string,
    fidelity_series,
    qlm_observables,
    string_state,
    time_evolve,
    write_record_csv,
)
from .cli import ScenarioConfig, available_presets, run_scenario, scenario_from_preset, sweep_gamma
