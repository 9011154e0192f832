"""Reliability-aware treatment decision support.

Fits probabilistic potential-outcome models to imbalanced observational
data, quantifies decision reliability through the estimated Type S error
rate, and runs decision-making-aware active learning (counterfactual and
comparative elicitation) against simulated or human oracles.
"""

from .active_learning import (
    AcquisitionScore,
    Candidate,
    Criterion,
    KnnConfig,
    PoolState,
    apply_answer,
    bernoulli_kl,
    gaussian_kl,
    initial_state,
    knn_filter,
    lookahead_type_s,
    score_dm_aware,
    score_dm_aware_explore,
    score_eig,
    score_targeted_ig,
    score_uncertainty,
    select_query,
)
from .basis import BasisConfig
from .blr import BLRConfig, WeightPosterior, blr_fit, blr_predict, blr_update
from .data import Dataset, Source
from .datagen import (
    BernoulliRbfConfig,
    SigmoidGenConfig,
    TabularError,
    TabularSchema,
    gen_bernoulli_rbf,
    gen_sigmoid_continuous,
    gen_tabular_standin,
    load_tabular,
    save_tabular,
    standin_schema,
)
from .experiments import (
    BootstrapSummary,
    ExperimentConfig,
    bootstrap_ci,
    run_al,
    run_correlation,
    write_outputs,
)
from .gp import FitError, GPFit, GPHyperparams, HyperPrior, gp_fit, gp_predict, kernel_ard
from .logistic import (
    ComparativeAnswer,
    WeightLaplacePosterior,
    comparative_augmented_fit,
    logistic_rbf_fit,
    logistic_theta_draws,
)
from .oracles import (
    ComparisonQuery,
    OracleConfig,
    OracleKind,
    PointQuery,
    answer_comparison,
    answer_point,
)
from .outcome import BLROutcomeModel, GPOutcomeModel, LogisticOutcomeModel
from .predictive import GaussianPredictive, ite_predictive
from .quadrature import QuadratureRule, gauss_hermite, gauss_hermite_expect
from .reliability import (
    DecisionOrientation,
    ImbalanceMeasure,
    TypeSEstimate,
    bernoulli_entropy,
    decide,
    estimate_type_s_draws,
    estimate_type_s_gaussian,
    mmd,
    observed_type_s,
)

__version__ = "0.1.0"
