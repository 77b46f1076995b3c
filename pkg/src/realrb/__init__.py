"""Randomized benchmarking over the real Clifford group.

Uniform sampling of the group via binary orthogonal matrices, noisy
sequence simulation, orthogonal-twirl analytics, 2-design certification,
and decay-curve fitting yielding average and rebit fidelities.
"""

from realrb.channels import (
    Channel,
    TwirlCoefficients,
    amplitude_damping,
    avg_fidelity_from_bc,
    check_density_matrix,
    coherent,
    dephasing,
    depolarizing,
    flip_operator,
    haar_fidelity_oracle,
    haar_orthogonal,
    haar_unitary,
    noise_model,
    projectors,
    random_cptp_channel,
    rebit_fidelity_from_b,
    twirl_analytic,
    twirl_average,
    twirled_channel_from_coefficients,
    twirled_power_apply,
)
from realrb.clifford import (
    Gate,
    PauliLabel,
    RealCliffordElement,
    circuit_matrix,
    circuit_symplectic,
    compose,
    enumerate_closure,
    gate_matrix,
    gate_symplectic,
    hermitian_pauli,
    identity_element,
    inverse,
    pauli_label_from_matrix,
    real_clifford_generators,
    real_pauli_matrix,
    sample_real_clifford,
    synthesize_clifford,
)
from realrb.config import ConfigError, load_config_document, serialize_config, validate_config
from realrb.design import (
    CertificationResult,
    MatrixEnsemble,
    certify_orthogonal_2design,
    commutant_dimension,
    frame_potential,
    frame_potential_monte_carlo,
)
from realrb.engine import (
    DecayDataset,
    DecayRow,
    ExperimentConfig,
    SimulationError,
    abc_from_spam,
    default_lengths,
    generate_sequence,
    measurement_effects,
    prepared_states,
    run_campaign,
    simulate_sequence,
)
from realrb.f2 import (
    BitMatrix,
    PhaseVector,
    enumerate_orthogonal_plus,
    invert_symplectic,
    is_in_orthogonal_plus,
    orthogonal_complement,
    quadratic_form,
    sample_orthogonal_plus,
    symplectic_form,
)
from realrb.fitting import (
    FidelityEstimate,
    FitResult,
    decay_offsets,
    difference_estimators,
    estimate_fidelities,
    fit_single_exponential,
    full_model_fit,
)

__version__ = "0.1.0"
