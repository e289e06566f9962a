"""Bayesian-optimal single-copy estimation of a mixing parameter.

Given two known states rho1 and rho2 and a prior over ``lam``, this
package finds the measurement minimizing the expected squared error when
estimating ``lam`` in ``rho(lam) = lam rho1 + (1 - lam) rho2`` from one
copy, scores arbitrary measurements, and verifies the analytic answers by
brute-force search and Monte Carlo simulation.
"""

from .bayes import (
    EstimationReport,
    MeasurementScore,
    PosteriorMoments,
    Prior,
    effective_states,
    posterior_moments,
    prior_from_decoherence,
    q_functional,
    q_permutation_form,
)
from .errors import EstimationError
from .highdim import (
    ReductionKind,
    ReductionOutcome,
    aligned_basis,
    embed_and_check,
    solve_commuting,
    solve_pure_plus_noise,
    solve_two_dim_support,
    support_rank,
)
from .policy import DEFAULT_POLICY, NumericPolicy
from .qubit import (
    AngleSolution,
    PlanarGeometry,
    PlanarPovm,
    brute_force_planar,
    optimal_alpha,
    optimal_pvm,
    planar_geometry,
    q_of_angle,
    reduce_to_plane,
    split_effect,
)
from .simulate import (
    DecoherenceModel,
    SimulationSummary,
    TrialRecord,
    decoherence_state,
    entanglement_demo,
    ppt_threshold,
    run_simulation,
    solve_decay_estimation,
)
from .states import (
    BlochVector,
    DensityMatrix,
    Effect,
    OperatorBasis,
    Povm,
    basis_compose,
    basis_decompose,
    bloch_compose,
    bloch_decompose,
    common_eigenbasis,
    gell_mann_basis,
    validate_povm,
    validate_state,
)

__version__ = "0.1.0"

__all__ = [
    "AngleSolution",
    "BlochVector",
    "DEFAULT_POLICY",
    "DecoherenceModel",
    "DensityMatrix",
    "Effect",
    "EstimationError",
    "EstimationReport",
    "MeasurementScore",
    "NumericPolicy",
    "OperatorBasis",
    "PlanarGeometry",
    "PlanarPovm",
    "PosteriorMoments",
    "Povm",
    "Prior",
    "ReductionKind",
    "ReductionOutcome",
    "SimulationSummary",
    "TrialRecord",
    "aligned_basis",
    "basis_compose",
    "basis_decompose",
    "bloch_compose",
    "bloch_decompose",
    "brute_force_planar",
    "common_eigenbasis",
    "decoherence_state",
    "effective_states",
    "embed_and_check",
    "entanglement_demo",
    "gell_mann_basis",
    "optimal_alpha",
    "optimal_pvm",
    "planar_geometry",
    "posterior_moments",
    "ppt_threshold",
    "prior_from_decoherence",
    "q_functional",
    "q_of_angle",
    "q_permutation_form",
    "reduce_to_plane",
    "run_simulation",
    "solve_commuting",
    "solve_decay_estimation",
    "solve_pure_plus_noise",
    "solve_two_dim_support",
    "split_effect",
    "support_rank",
    "validate_povm",
    "validate_state",
]
