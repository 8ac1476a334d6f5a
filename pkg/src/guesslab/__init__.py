"""Command-parameterized models, their statistics, and closed-loop experiments.

The package splits into a model layer (states, unitaries, measurements keyed
by binary command words, plus perfect-fit constructors and witness searches),
a statistics layer (Bhattacharyya-angle distances, trial-count floors,
likelihood-ratio discrimination), a lattice of model sets under narrowing
predicates, colored condition-event net fragments with refinement and
coupling, and a token-driven machine simulation with instruments, parsers,
and calibration harnesses on top.
"""

from .errors import (
    BadEpsilon,
    BadOutcomeIndex,
    BadPhase,
    BadSampleSize,
    CommandNotInSet,
    DimensionMismatch,
    GuesslabError,
    InvalidColor,
    InvalidRecord,
    NotEnabled,
    NotUnitary,
    SpectraMismatch,
)
from .model_lattice import (
    BestFit,
    CommandSplit,
    ModelSet,
    NarrowingPredicate,
    ParametricFamily,
    check_component_independence,
    check_composition,
    join,
    meet,
    select_best_fit,
)
from .petri_net import (
    BLACK,
    EMPTY,
    AnalysisResult,
    Event,
    Marking,
    NetFragment,
    SchedulerPolicy,
    Token,
    analyze,
    blacken_marking,
    coarsen_colors,
    coarsen_events,
    couple,
    deserialize_net,
    enabled_events,
    extract,
    fire,
    inject,
    nets_structurally_equal,
    reduced_net,
    refine_colors,
    serialize_net,
    simulate,
)
from .qm_model import (
    Command,
    HilbertSpace,
    MeasurementFn,
    Model,
    OutcomeRecord,
    PhaseAssignment,
    StateFn,
    UnitaryFn,
    apply_equivalence,
    construct_fitting_model,
    construct_fitting_model_general,
    construct_orthogonal_pair,
    distinguish_by_witness,
    model_from_json_obj,
    model_to_json_obj,
    models_equal,
    outcome_distribution,
    outcome_probability,
    reduce_model,
)
from .stat_distance import (
    CommandWeights,
    Distribution,
    Verdict,
    discriminate,
    indistinguishable_in_trials,
    log_likelihood_ratio,
    min_sample_size,
    spectral_norm_diff,
    statistical_distance,
    vector_distance_bound,
    weighted_model_distance,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisResult",
    "BLACK",
    "BadEpsilon",
    "BadOutcomeIndex",
    "BadPhase",
    "BadSampleSize",
    "BestFit",
    "Command",
    "CommandNotInSet",
    "CommandSplit",
    "CommandWeights",
    "DimensionMismatch",
    "Distribution",
    "EMPTY",
    "Event",
    "GuesslabError",
    "HilbertSpace",
    "InvalidColor",
    "InvalidRecord",
    "Marking",
    "MeasurementFn",
    "Model",
    "ModelSet",
    "NarrowingPredicate",
    "NetFragment",
    "NotEnabled",
    "NotUnitary",
    "OutcomeRecord",
    "ParametricFamily",
    "PhaseAssignment",
    "SchedulerPolicy",
    "SpectraMismatch",
    "StateFn",
    "Token",
    "UnitaryFn",
    "Verdict",
    "analyze",
    "apply_equivalence",
    "blacken_marking",
    "check_component_independence",
    "check_composition",
    "coarsen_colors",
    "coarsen_events",
    "construct_fitting_model",
    "construct_fitting_model_general",
    "construct_orthogonal_pair",
    "couple",
    "deserialize_net",
    "discriminate",
    "distinguish_by_witness",
    "enabled_events",
    "extract",
    "fire",
    "indistinguishable_in_trials",
    "inject",
    "join",
    "log_likelihood_ratio",
    "meet",
    "min_sample_size",
    "model_from_json_obj",
    "model_to_json_obj",
    "models_equal",
    "nets_structurally_equal",
    "outcome_distribution",
    "outcome_probability",
    "reduce_model",
    "reduced_net",
    "refine_colors",
    "select_best_fit",
    "serialize_net",
    "simulate",
    "spectral_norm_diff",
    "statistical_distance",
    "vector_distance_bound",
    "weighted_model_distance",
]
