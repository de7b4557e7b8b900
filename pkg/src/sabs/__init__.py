"""Testing whether conditional causal effects are simultaneously
identifiable from target-domain observational data and transportable from
source-domain experiments, without a known causal graph, and exploiting the
combined data when they are."""

__version__ = "0.1.0"

from .diagram import (
    EXAMPLE_DIAGRAMS,
    DiagramError,
    ManipulatedView,
    NodeId,
    SelectionDiagram,
    d_separated,
    enumerate_sabs,
    format_diagram,
    is_backdoor_set,
    is_s_admissible,
    is_sabs,
    parse_diagram,
)
from .discrete import (
    ContingencyCounts,
    ScoreError,
    ScoreResult,
    conditional_entropy,
    log_ml_h,
    log_ml_not_h,
    posterior_sabs,
    tabulate,
    tabulate_pair,
)
from .estimate import (
    EffectEstimator,
    EstimationError,
    auc_sabs,
    cross_entropy,
    fit_estimator,
    paired_sign_test,
)
from .experiment import (
    EvalReport,
    ExperimentConfig,
    ExperimentResult,
    prior_ablation,
    run_experiment,
)
from .mcmc import (
    LogisticParams,
    McmcConfig,
    PosteriorSample,
    PriorSpec,
    dump_chain,
    likelihood,
    probs_abs,
    sample_posterior,
    sample_prior,
)
from .scm import (
    Dataset,
    Mechanism,
    ScmSpec,
    SimulationError,
    VariableMeta,
    build_scenario,
    build_scenario1,
    build_scenario1_discrete,
    build_scenario2,
    build_scenario2_discrete,
    discretize_scenarios,
    load_dataset,
    load_spec,
    sample,
    save_dataset,
    save_spec,
)
from .search import (
    DiscreteScorer,
    McmcScorer,
    SearchOutcome,
    exhaustive_sabs,
    find_sabs,
    make_scorer,
)
