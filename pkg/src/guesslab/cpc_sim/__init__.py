"""Closed-loop simulation: machines, instruments, and experiment harnesses."""

from .harness import (
    CalibrationConfig,
    CalibrationReport,
    GateErrorResult,
    GatePair,
    ParserDependenceResult,
    RotationFamily,
    SampleSizeResult,
    SampleSizeRow,
    StageReport,
    build_mode_net,
    gate_sequence_error,
    initial_mode_marking,
    parser_dependence_demo,
    run_calibration,
    sample_size_experiment,
    worst_case_gate_pair,
)
from .instrument import (
    PARSERS,
    PER_BIT,
    PER_DETECTOR,
    PER_RECORD,
    Instrument,
    OutcomeParser,
    one_hot_record_values,
    parse_outcomes,
    record_integers,
    tally_by_values,
)
from .tmp import (
    BLANK,
    ProgramTable,
    RunResult,
    Rule,
    StepResult,
    TMP,
    binary_increment_program,
    echo_program,
    program_token,
    run_program,
    step,
)

__all__ = [
    "BLANK",
    "CalibrationConfig",
    "CalibrationReport",
    "GateErrorResult",
    "GatePair",
    "Instrument",
    "OutcomeParser",
    "PARSERS",
    "PER_BIT",
    "PER_DETECTOR",
    "PER_RECORD",
    "ParserDependenceResult",
    "ProgramTable",
    "RotationFamily",
    "Rule",
    "RunResult",
    "SampleSizeResult",
    "SampleSizeRow",
    "StageReport",
    "StepResult",
    "TMP",
    "binary_increment_program",
    "build_mode_net",
    "echo_program",
    "gate_sequence_error",
    "initial_mode_marking",
    "one_hot_record_values",
    "parse_outcomes",
    "parser_dependence_demo",
    "program_token",
    "record_integers",
    "run_calibration",
    "run_program",
    "sample_size_experiment",
    "step",
    "tally_by_values",
    "worst_case_gate_pair",
]
