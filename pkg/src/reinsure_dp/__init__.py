"""Optimal dynamic reinsurance by risk-sensitive dynamic programming.

The package solves for reinsurance policies that minimize the insurer's
recursive cost of solvency capital: at each period the insurer picks a
retained-loss function under a premium budget, and the cost criterion chains a
monetary risk measure of the current net position with the discounted value of
the next period's capital requirement. Distributions are finite (discretized),
so every risk measure and premium evaluates exactly; the dynamic program runs
on a surplus grid with certified bounding envelopes, and closed-form reference
solutions validate the solver on the configurations where the optimum is known.
"""

__version__ = "0.1.0"

from . import errors
from .dp import (
    GridSpec,
    InfiniteSolution,
    ModelConfig,
    PolicyTable,
    SearchSpec,
    StageData,
    ValueFunction,
    apply_L,
    bellman_step,
    bounding_functions,
    evaluate_policy,
    solve_finite,
    solve_infinite,
    weighted_norm,
)
from .oracles import (
    VarLayerSolution,
    oracle_es_uniform,
    oracle_unconstrained,
    oracle_var_layer,
    static_reinsurance,
)
from .sim import (
    SimResult,
    ruin_bound_check,
    simulate_paths,
)
from .premiums import (
    PremiumSpec,
    expected_premium,
    layer_premium_closed_form,
    premium,
    treaty_premium,
    wang_premium,
)
from .treaties import (
    Treaty,
    feasible_retention_range,
    is_admissible,
    make_treaty,
    premium_breakpoints,
)
from .risk import (
    Distortion,
    RiskSpec,
    Spectrum,
    atom_weights,
    distortion_preset,
    distortion_rm,
    entropic,
    es,
    es_spectrum,
    evaluate,
    is_coherent,
    spectral_rm,
    tabulated_distortion,
    var,
)
from .distributions import (
    DiscreteDistribution,
    FamilySpec,
    discretize,
    ess_sup,
    independent_product,
    make_discrete,
    push_forward,
    quantile,
    survival,
)

__all__ = [
    "errors",
    "DiscreteDistribution",
    "FamilySpec",
    "discretize",
    "ess_sup",
    "independent_product",
    "make_discrete",
    "push_forward",
    "quantile",
    "survival",
    "Distortion",
    "RiskSpec",
    "Spectrum",
    "atom_weights",
    "distortion_preset",
    "distortion_rm",
    "entropic",
    "es",
    "es_spectrum",
    "evaluate",
    "is_coherent",
    "spectral_rm",
    "tabulated_distortion",
    "var",
    "PremiumSpec",
    "expected_premium",
    "layer_premium_closed_form",
    "premium",
    "treaty_premium",
    "wang_premium",
    "Treaty",
    "feasible_retention_range",
    "is_admissible",
    "make_treaty",
    "premium_breakpoints",
    "VarLayerSolution",
    "oracle_es_uniform",
    "oracle_unconstrained",
    "oracle_var_layer",
    "static_reinsurance",
    "GridSpec",
    "InfiniteSolution",
    "ModelConfig",
    "PolicyTable",
    "SearchSpec",
    "StageData",
    "ValueFunction",
    "apply_L",
    "bellman_step",
    "bounding_functions",
    "evaluate_policy",
    "solve_finite",
    "solve_infinite",
    "weighted_norm",
    "SimResult",
    "ruin_bound_check",
    "simulate_paths",
    "__version__",
]
