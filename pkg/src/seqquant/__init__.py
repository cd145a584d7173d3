"""Decentralized multihypothesis sequential detection with binary quantizers.

The package solves for maximin sensor quantizers, runs the two-stage
sequential test driven by one-bit messages, and estimates its Bayes risk by
Monte Carlo simulation.
"""

from .models import (
    FiniteAlphabet,
    Gaussian,
    HypothesisSet,
    Scenario,
    ValidationReport,
    raw_kl,
    validate_scenario,
)
from .quantizer import (
    DeterministicQuantizer,
    RandomizedQuantizer,
    Region,
    RootFindConfig,
    bernoulli_kl,
    canonical_coeffs,
    induced_bernoulli,
    info_number,
    kl_pair,
    quantize,
    quantizer_from_dict,
    quantizer_to_dict,
    ulq_region,
)
from .maximin import (
    CandidateSet,
    GridConfig,
    MaximinSolution,
    brute_force_maximin,
    generate_candidates,
    optimal_weights,
    solve_maximin,
)
from .engine import (
    PosteriorState,
    StageOneResult,
    StopDiagnostics,
    TestSpec,
    TrialOutcome,
    block_schedule,
    posterior_update,
    run_stage_one,
    run_trial,
    stop_diagnostics,
)
from .montecarlo import (
    RiskEstimate,
    SweepResult,
    centralized_benchmark,
    estimate_risk,
    sweep,
    theoretical_risk,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
