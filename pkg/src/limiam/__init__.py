"""Causal discovery for linear acyclic models with dependent disturbances.

Order-dependent mean independence replaces the mutual-independence assumption
of non-Gaussian causal discovery: later disturbances cannot be predicted in
mean from earlier ones, while higher-moment dependence (shared volatility,
common scale factors) is allowed.  The package provides the sequential
residual-based discovery algorithm with four mean-independence scorers, the
moment-tensor algebra behind finite-order identification, population failure
analysis of independence-based procedures, synthetic benchmark generators and
harness, and an SVAR residual testing pipeline.
"""

__version__ = "0.1.0"

from .discover import (
    CausalOrder,
    DegenerateDataError,
    DiscoveryResult,
    direct_limiam,
    direct_lingam_baseline,
    edges_from_B,
    estimate_B,
    shd,
)
from .meanind import (
    FiniteOrderScorer,
    KernelScorer,
    MomentScorer,
    ResidualPair,
    SieveScorer,
    cv_select,
    local_linear_fit,
    score_finite_order,
    score_kernel,
    score_moment,
    score_sieve,
    scorer_from_name,
)
from .popfail import (
    Cumulant4Config,
    Verdict,
    genericity_score_2d,
    jade_empirical_check,
    jade_objective,
    jade_reversal_verdict,
    residual_dependence_scores,
)
from .simulate import (
    AuxDistribution,
    ConditionalMixture,
    Independent,
    LaggedHetero,
    Threshold,
    WeightedDag,
    design_from_name,
    generate_dataset,
    sample_dag,
    sample_disturbances,
    scale_mixture_2d,
)
from .svar import (
    TestReport,
    VarModel,
    bootstrap_se_B,
    fit_var,
    mutual_independence_test,
    ordered_meanind_test,
    svar_discover,
)
from .tensor import (
    DegenerateTensorError,
    SymmetricTensor,
    TriangularPattern,
    UnitLowerTriangular,
    fourth_cumulants_2d,
    higher_order_ldl,
    moments_from_samples,
    reversed_factorization,
    tensor_action,
)
