"""Accuracy and fairness measures for probabilistic predictors, and their linear aggregation."""

from .accuracy import estimated_accuracy
from .aggregation import (
    SimplexGrid,
    SweepResult,
    check_pareto_indifference,
    expected_utility,
    overall,
    simplex_sweep,
    utility_eval,
)
from .core import (
    AggregationSpec,
    DomainError,
    EmptyPositiveClassError,
    FairAggError,
    FiniteLottery,
    GroupPartition,
    InputDistribution,
    MeasureVector,
    OutcomeDistribution,
    OutcomeSpace,
    PredictionRecord,
    PredictionStream,
    UnsupportedMeasureError,
    UtilitySpec,
    UtilityUndefinedError,
    ZeroProbabilityError,
    point_mass,
    uniform_input_distribution,
)
from .estimation import EstimatedModel, compas_decile_estimator, empirical_mle_estimator
from .fairness import FairnessMeasureSpec, eq_opp, evaluate_fairness, group_fnr
from .scoring import ScoringRule, brier_score, check_strict_propriety, log_score, spherical_score

__version__ = "0.1.0"
