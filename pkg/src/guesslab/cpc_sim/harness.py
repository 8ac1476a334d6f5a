"""Experiment harnesses: calibration, gate-sequence errors, sample sizes.

The calibration harness alternates between running and testing an instrument.
For each precision stage ``epsilon`` it estimates the weighted statistical
distance between the target gate's predicted outcome distribution and the
parsed record coming back from the instrument; when the distance exceeds
``epsilon / 2`` it searches the command parameter (coordinate descent with
step halving) for a command that does better.  Control flow is not an ad-hoc
loop: a small net fragment shipped with the package (states ready / running /
testing / calibrating, verdict-colored tokens steering the branch) is stepped
through its firings, and the harness fires only events the net enables.

``sample_size_experiment`` probes the trial-count law: two models that differ
only by a unitary gap of spectral norm ``epsilon`` need on the order of
``epsilon**-2`` trials before a likelihood-ratio test can tell them apart, so
the empirically found minimum trial count must sit at or above
``ceil(epsilon**-2)`` and fall with slope -2 on a log-log plot.
"""

from __future__ import annotations

import json
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from importlib import resources

import numpy as np

from ..errors import BadEpsilon, InvalidConfig, NotUnitary
from ..linalg import is_unitary, rotation_matrix, spectral_norm
from ..petri_net import (
    Marking,
    NetFragment,
    Token,
    deserialize_net,
    enabled_events,
    encode_color,
    extract,
    fire,
    inject,
)
from ..qm_model import (
    Command,
    HilbertSpace,
    MeasurementFn,
    Model,
    OutcomeRecord,
    StateFn,
    UnitaryFn,
    outcome_distribution,
)
from ..stat_distance import (
    CommandWeights,
    Verdict,
    discriminate,
    min_sample_size,
    weighted_model_distance,
)
from .instrument import Instrument, one_hot_record_values, record_integers

GUESS_POLICIES = ("coordinate-descent", "grid-scan")


def _derived_seed(*key: int) -> int:
    """A stable child seed from a tuple of nonnegative integers."""
    return int(np.random.SeedSequence(tuple(int(k) for k in key)).generate_state(1)[0])


# ---------------------------------------------------------------------------
# a one-parameter rotation-gate family
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RotationFamily:
    """Planar rotation gates addressed by a fixed-width angle command.

    Commands are ``bits``-wide binary words encoding a uniform grid over
    [-pi, pi); the named angle is quantized to the grid.  The instrument's
    hidden truth may apply an extra angle offset, which is exactly what the
    calibration harness is supposed to recover.
    """

    bits: int = 12

    @property
    def size(self) -> int:
        return 1 << self.bits

    def command(self, theta) -> Command:
        angle = float(np.atleast_1d(np.asarray(theta, dtype=float))[0])
        index = int(round((angle + math.pi) / (2 * math.pi) * self.size)) % self.size
        return Command(format(index, f"0{self.bits}b"))

    def angle(self, b: Command) -> float:
        index = int(b.bits, 2)
        return -math.pi + 2 * math.pi * index / self.size

    def commands(self) -> tuple[Command, ...]:
        return tuple(Command(format(i, f"0{self.bits}b")) for i in range(self.size))

    def gate_model(self, offset: float = 0.0) -> UnitaryFn:
        return UnitaryFn({b: rotation_matrix(self.angle(b) + offset)
                          for b in self.commands()})

    def instrument_model(self, offset: float = 0.0,
                         detectors: int = 2, intervals: int = 1) -> Model:
        """Full model over the command grid: |0> in, rotate, read the basis.

        Measurement eigenvalues equal the integers the per-record parser
        assigns to one-hot detector records, so parsed records align with
        model spectra with no further bookkeeping.
        """
        commands = self.commands()
        values = list(one_hot_record_values(detectors, intervals)[:2])
        e0 = np.array([1.0, 0.0], dtype=np.complex128)
        return Model(
            HilbertSpace(2),
            StateFn({b: e0 for b in commands}),
            self.gate_model(offset),
            MeasurementFn.diagonal({b: values for b in commands}, 2),
            commands,
        )


# ---------------------------------------------------------------------------
# calibration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CalibrationConfig:
    """Everything the harness needs, bar the instrument itself.

    ``budget_rule`` maps each stage precision to the trial count spent per
    distance estimate; validation rejects budgets below the sample-size law
    ``min_sample_size(epsilon)``, which no experiment can beat.
    """

    target_gate: np.ndarray
    command_family: Callable[[Sequence[float]], Command]
    gate_model: UnitaryFn
    epsilon_schedule: tuple[float, ...]
    budget_rule: Callable[[float], int]
    guess_policy: str = "coordinate-descent"
    seed: int = 0
    initial_theta: tuple[float, ...] = (0.0,)
    initial_step: float = 0.4
    max_evals_per_stage: int = 60

    def validate(self) -> None:
        if not self.epsilon_schedule:
            raise InvalidConfig("epsilon schedule is empty")
        for eps in self.epsilon_schedule:
            if not 0.0 < eps <= 2.0:
                raise InvalidConfig(f"schedule epsilon {eps} outside (0, 2]")
        if any(b >= a for a, b in zip(self.epsilon_schedule, self.epsilon_schedule[1:])):
            raise InvalidConfig("epsilon schedule must be strictly decreasing")
        for eps in self.epsilon_schedule:
            budget = int(self.budget_rule(eps))
            floor = min_sample_size(eps)
            if budget < floor:
                raise InvalidConfig(
                    f"budget {budget} at epsilon {eps} is below the "
                    f"sample-size floor {floor}"
                )
        if self.guess_policy not in GUESS_POLICIES:
            raise InvalidConfig(f"unknown guess policy {self.guess_policy!r}")
        if not is_unitary(np.asarray(self.target_gate, dtype=np.complex128)):
            raise NotUnitary("target gate must be unitary")
        if self.initial_step <= 0:
            raise InvalidConfig("initial step must be positive")
        if self.max_evals_per_stage < 3:
            raise InvalidConfig("need at least three evaluations per stage")


@dataclass(frozen=True)
class StageReport:
    epsilon: float
    budget: int
    trials_used: int
    evaluations: int
    theta: tuple[float, ...]
    achieved_distance: float
    model_predicted_distance: float
    calibrated: bool
    passed: bool


@dataclass(frozen=True)
class CalibrationReport:
    stages: tuple[StageReport, ...]
    trace: tuple[dict, ...]
    seed: int
    final_theta: tuple[float, ...]


def build_mode_net() -> NetFragment:
    """The run/test/calibrate scheduler net shipped as package data."""
    text = resources.files("guesslab").joinpath("data/mode_alternation.json").read_text()
    return deserialize_net(json.loads(text))


def initial_mode_marking() -> Marking:
    return Marking({"ready": "go"})


class _ModeDriver:
    """Steps the scheduler net and keeps the firing trace."""

    def __init__(self) -> None:
        self.net = build_mode_net()
        self.marking = initial_mode_marking()
        self.trace: list[dict] = []
        self._step = 0

    def _record(self, row: dict) -> None:
        row["step"] = self._step
        self._step += 1
        self.trace.append(row)

    def fire(self, event_id: str) -> None:
        event = self.net.events[event_id]
        consumed = {s: encode_color(self.marking.get(s).color) for s in event.inputs}  # type: ignore[union-attr]
        self.marking = fire(self.net, self.marking, event_id)
        produced = {s: encode_color(self.marking.get(s).color)
                    for s in event.outputs if self.marking.has(s)}
        self._record({"event": event_id, "consumed": consumed, "produced": produced})

    def deliver_verdict(self, passed: bool) -> str:
        verdict = "pass" if passed else "fail"
        self.marking = inject(self.net, self.marking, "verdict", Token(verdict))
        self._record({"inject": {"verdict": verdict}})
        candidates = enabled_events(self.net, self.marking)
        expected = "test_pass" if passed else "test_fail"
        if expected not in candidates:
            raise InvalidConfig(
                f"scheduler net did not enable {expected!r}; enabled: {candidates}"
            )
        self.fire(expected)
        token, self.marking = extract(self.net, self.marking, "stage_report")
        self._record({"extract": {"stage_report": encode_color(token.color)}})
        return verdict


def run_calibration(config: CalibrationConfig, instrument: Instrument) -> CalibrationReport:
    """Walk the epsilon schedule: test, calibrate when needed, move on.

    The instrument is consulted exclusively through ``measure``; records are
    parsed per-record, matched against the target gate's predictions by
    outcome value, and summarized as a weighted statistical distance.  The
    stage passes when that distance is at most ``epsilon / 2``.
    """
    config.validate()
    detectors, intervals = instrument.detector_shape
    target = np.asarray(config.target_gate, dtype=np.complex128)
    dim = target.shape[0]
    values = one_hot_record_values(detectors, intervals)[:dim]
    family_commands = config.gate_model.commands
    e0 = np.zeros(dim, dtype=np.complex128)
    e0[0] = 1.0
    target_model = Model(
        HilbertSpace(dim),
        StateFn({b: e0 for b in family_commands}),
        UnitaryFn({b: target for b in family_commands}),
        MeasurementFn.diagonal({b: list(values) for b in family_commands}, dim),
        family_commands,
    )

    spent = {"trials": 0, "evals": 0}

    def estimate(theta: np.ndarray, budget: int) -> float:
        b = config.command_family(theta)
        records = instrument.measure(b, budget)
        ints = record_integers(records)
        tallies = [(lam, int((ints == lam).sum())) for lam in values]
        parsed = OutcomeRecord({b: [(lam, n) for lam, n in tallies if n > 0]})
        spent["trials"] += budget
        spent["evals"] += 1
        return weighted_model_distance(target_model, parsed, CommandWeights({b: 1.0}))

    driver = _ModeDriver()
    stages: list[StageReport] = []
    theta = np.asarray(config.initial_theta, dtype=float)

    for stage_index, eps in enumerate(config.epsilon_schedule):
        budget = int(config.budget_rule(eps))
        spent["trials"] = 0
        spent["evals"] = 0

        driver.fire("begin_run")
        driver.fire("run_done")
        distance = estimate(theta, budget)
        passed = distance <= eps / 2
        driver.deliver_verdict(passed)

        calibrated = False
        if not passed:
            if config.guess_policy == "grid-scan":
                theta, distance = _grid_scan(estimate, theta, budget, config)
            else:
                theta, distance = _coordinate_descent(estimate, theta, budget, eps, config)
            calibrated = True
            driver.fire("calibrated")
            distance = estimate(theta, budget)  # confirmation run
            passed = distance <= eps / 2
            driver.deliver_verdict(passed)
            if not passed:
                driver.fire("accept_residual")

        b = config.command_family(theta)
        predicted = weighted_model_distance(
            target_model,
            _model_at(config, b, values, dim),
            CommandWeights({b: 1.0}),
        )
        stages.append(StageReport(
            epsilon=eps,
            budget=budget,
            trials_used=spent["trials"],
            evaluations=spent["evals"],
            theta=tuple(float(t) for t in theta),
            achieved_distance=float(distance),
            model_predicted_distance=float(predicted),
            calibrated=calibrated,
            passed=bool(passed),
        ))

    return CalibrationReport(
        stages=tuple(stages),
        trace=tuple(driver.trace),
        seed=config.seed,
        final_theta=tuple(float(t) for t in theta),
    )


def _model_at(config: CalibrationConfig, b: Command,
              values: tuple[float, ...], dim: int) -> Model:
    """The scientist's own model of what command ``b`` implements."""
    e0 = np.zeros(dim, dtype=np.complex128)
    e0[0] = 1.0
    return Model(
        HilbertSpace(dim),
        StateFn({b: e0}),
        UnitaryFn({b: config.gate_model(b)}),
        MeasurementFn.diagonal({b: list(values)}, dim),
        (b,),
    )


def _coordinate_descent(estimate, theta0: np.ndarray, budget: int, eps: float,
                        config: CalibrationConfig) -> tuple[np.ndarray, float]:
    """Axis-by-axis probing with step halving down to eps/8 resolution."""
    theta = np.asarray(theta0, dtype=float).copy()
    best = estimate(theta, budget)
    evals = 1
    step = config.initial_step
    min_step = eps / 8
    while step >= min_step and evals < config.max_evals_per_stage:
        improved = False
        for axis in range(theta.size):
            for sign in (1.0, -1.0):
                if evals >= config.max_evals_per_stage:
                    break
                candidate = theta.copy()
                candidate[axis] += sign * step
                d = estimate(candidate, budget)
                evals += 1
                if d < best:
                    theta, best = candidate, d
                    improved = True
                    break
        if not improved:
            step /= 2
    return theta, best


def _grid_scan(estimate, theta0: np.ndarray, budget: int,
               config: CalibrationConfig) -> tuple[np.ndarray, float]:
    """Probe a fixed symmetric grid around the current guess, keep the best."""
    theta = np.asarray(theta0, dtype=float).copy()
    best_theta, best = theta, estimate(theta, budget)
    points = max(3, config.max_evals_per_stage - 1)
    for offset in np.linspace(-2 * config.initial_step, 2 * config.initial_step, points):
        candidate = theta.copy()
        candidate[0] += float(offset)
        d = estimate(candidate, budget)
        if d < best:
            best_theta, best = candidate, d
    return best_theta, best


# ---------------------------------------------------------------------------
# gate-sequence error accumulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GateErrorResult:
    gate_count: int
    per_gate_error: float
    bound: float
    measured: tuple[float, ...]

    @property
    def max_measured(self) -> float:
        return max(self.measured)


def gate_sequence_error(gates: Sequence[np.ndarray], per_gate_error: float,
                        draws: int = 100, seed: int = 0) -> GateErrorResult:
    """Spectral-norm error of a perturbed gate product against K * epsilon.

    Each draw perturbs every gate by an independent random matrix scaled to
    spectral norm ``per_gate_error`` and measures the spectral norm of the
    difference between the perturbed and ideal products.  To first order the
    error is additive across the sequence, bounded by ``K * per_gate_error``.
    """
    eps = float(per_gate_error)
    if eps < 0 or eps > 2:
        raise BadEpsilon(f"per-gate error must lie in [0, 2], got {eps}")
    matrices = [np.asarray(g, dtype=np.complex128) for g in gates]
    if not matrices:
        raise ValueError("need at least one gate")
    dim = matrices[0].shape[0]
    for g in matrices:
        if g.shape != (dim, dim):
            raise ValueError("gates must share one dimension")
        if not is_unitary(g):
            raise NotUnitary("every gate in the sequence must be unitary")

    rng = np.random.default_rng(seed)
    ideal = np.eye(dim, dtype=np.complex128)
    for g in matrices:
        ideal = g @ ideal

    measured = []
    for _ in range(int(draws)):
        perturbed = np.eye(dim, dtype=np.complex128)
        for g in matrices:
            noise = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
            scale = spectral_norm(noise)
            error = (eps / scale) * noise if scale > 0 else np.zeros_like(noise)
            perturbed = (g + error) @ perturbed
        measured.append(spectral_norm(perturbed - ideal))
    return GateErrorResult(
        gate_count=len(matrices),
        per_gate_error=eps,
        bound=len(matrices) * eps,
        measured=tuple(measured),
    )


# ---------------------------------------------------------------------------
# the sample-size law
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GatePair:
    """Two models identical except for a unitary gap of known spectral norm."""

    model_p: Model
    model_q: Model
    command: Command
    epsilon: float


def worst_case_gate_pair(epsilon: float) -> GatePair:
    """The most distinguishable pair at a given spectral-norm gap.

    A planar rotation by ``2 * arcsin(epsilon / 2)`` differs from the identity
    by exactly ``epsilon`` in spectral norm, and preparing the basis state
    with a basis readout saturates the overlap bound; no other state or
    measurement separates the pair faster.  This is the adversarial case for
    the trial-count law, which must hold even here.
    """
    eps = float(epsilon)
    if not 0.0 < eps <= 2.0:
        raise BadEpsilon(f"epsilon must lie in (0, 2], got {eps}")
    angle = 2.0 * math.asin(min(eps / 2.0, 1.0))
    b = Command("0")
    values = list(one_hot_record_values(2, 1))
    e0 = np.array([1.0, 0.0], dtype=np.complex128)
    eye = np.eye(2, dtype=np.complex128)
    shared_state = StateFn({b: e0})
    shared_m = MeasurementFn.diagonal({b: values}, 2)
    model_p = Model(HilbertSpace(2), shared_state, UnitaryFn({b: eye}), shared_m, (b,))
    model_q = Model(HilbertSpace(2), shared_state,
                    UnitaryFn({b: rotation_matrix(angle)}), shared_m, (b,))
    return GatePair(model_p=model_p, model_q=model_q, command=b, epsilon=eps)


@dataclass(frozen=True)
class SampleSizeRow:
    epsilon: float
    n_bound: int
    n_empirical: int
    power: float
    saturated: bool


@dataclass(frozen=True)
class SampleSizeResult:
    rows: tuple[SampleSizeRow, ...]
    power_target: float
    repetitions: int
    seed: int

    def empirical_slope(self) -> float:
        xs = [math.log(r.epsilon) for r in self.rows if not r.saturated]
        ys = [math.log(r.n_empirical) for r in self.rows if not r.saturated]
        if len(xs) < 2:
            raise ValueError("need at least two unsaturated rows for a slope")
        return float(np.polyfit(xs, ys, 1)[0])


InstrumentFactory = Callable[[Model, int], Instrument]


def _default_factory(model: Model, seed: int) -> Instrument:
    return Instrument(model, seed)


def sample_size_experiment(epsilons: Sequence[float],
                           power_target: float = 0.95,
                           instr_factory: InstrumentFactory = _default_factory,
                           repetitions: int = 500,
                           seed: int = 0,
                           max_n: int = 1_000_000) -> SampleSizeResult:
    """Find the smallest trial count reaching a discrimination power target.

    For each gap the worst-case pair is built and, per candidate trial count
    ``n``, instruments seeded per repetition draw records under both models;
    power is the worse of the two correct-verdict rates of the likelihood
    ratio test.  A doubling sweep followed by bisection finds the smallest
    ``n`` meeting the target (or reports saturation at ``max_n``).
    """
    if not 0.5 < power_target < 1.0:
        raise InvalidConfig(f"power target must lie in (0.5, 1), got {power_target}")
    if repetitions < 500:
        raise InvalidConfig("at least 500 Monte-Carlo repetitions are required")
    for eps in epsilons:
        if not 0.0 < eps <= 0.5:
            raise BadEpsilon(f"experiment epsilon must lie in (0, 0.5], got {eps}")

    rows = []
    for stage, eps in enumerate(epsilons):
        pair = worst_case_gate_pair(eps)
        b = pair.command
        p = outcome_distribution(pair.model_p, b)
        q = outcome_distribution(pair.model_q, b)
        values = one_hot_record_values(2, 1)

        def side_rate(model: Model, want: Verdict, n: int, side: int) -> float:
            hits = 0
            for rep in range(repetitions):
                instr = instr_factory(
                    model, _derived_seed(seed, stage, n, rep, side)
                )
                ints = record_integers(instr.measure(b, n))
                tallies = [int((ints == lam).sum()) for lam in values]
                if discriminate(tallies, p, q) is want:
                    hits += 1
            return hits / repetitions

        cache: dict[int, float] = {}

        def power(n: int) -> float:
            if n not in cache:
                cache[n] = min(side_rate(pair.model_p, Verdict.FAVOR_P, n, 0),
                               side_rate(pair.model_q, Verdict.FAVOR_Q, n, 1))
            return cache[n]

        n = 1
        while power(n) < power_target and n < max_n:
            n = min(2 * n, max_n)
        if power(n) < power_target:
            rows.append(SampleSizeRow(eps, min_sample_size(eps), n, power(n), True))
            continue
        lo, hi = n // 2, n
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if power(mid) >= power_target:
                hi = mid
            else:
                lo = mid
        rows.append(SampleSizeRow(eps, min_sample_size(eps), hi, power(hi), False))

    return SampleSizeResult(rows=tuple(rows), power_target=power_target,
                            repetitions=repetitions, seed=seed)


# ---------------------------------------------------------------------------
# parser dependence
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParserDependenceResult:
    record_per_bit: OutcomeRecord
    record_per_record: OutcomeRecord
    best_fit_per_bit: int
    best_fit_per_record: int
    scores_per_bit: tuple[float, ...]
    scores_per_record: tuple[float, ...]

    @property
    def selections_differ(self) -> bool:
        return self.best_fit_per_bit != self.best_fit_per_record


def parser_dependence_demo(seed: int = 0, trials: int = 400) -> ParserDependenceResult:
    """One bit stream, two parsers, two different best-fitting models.

    The instrument one-hot encodes a two-outcome measurement.  Read per bit,
    every record contributes one click and one silence, so the parsed
    frequencies are an even split no matter what the instrument does; read
    per record, the frequencies reproduce the true outcome distribution.
    Against a shared candidate set the two parses elect different models,
    which is the whole point: the outcome count is chosen by the reading,
    not by the bits.
    """
    from ..model_lattice import ModelSet, select_best_fit
    from .instrument import PER_BIT, PER_RECORD, parse_outcomes

    b = Command("0")
    values = list(one_hot_record_values(2, 1))  # (2.0, 1.0)
    amp = np.array([math.sqrt(0.7), math.sqrt(0.3)], dtype=np.complex128)
    true_model = Model(
        HilbertSpace(2),
        StateFn({b: amp}),
        UnitaryFn.identity([b], 2),
        MeasurementFn.diagonal({b: values}, 2),
        (b,),
    )
    instrument = Instrument(true_model, seed)
    records = instrument.measure(b, trials)
    record_bits = parse_outcomes(PER_BIT, {b: records})
    record_whole = parse_outcomes(PER_RECORD, {b: records})

    def candidate(p0: float, p1: float, p2: float) -> Model:
        amplitudes = np.sqrt(np.array([p0, p1, p2], dtype=np.complex128))
        return Model(
            HilbertSpace(3),
            StateFn({b: amplitudes}),
            UnitaryFn.identity([b], 3),
            MeasurementFn.diagonal({b: [0.0, 1.0, 2.0]}, 3),
            (b,),
        )

    candidates = ModelSet.of_models([
        candidate(0.5, 0.5, 0.0),   # what per-bit reading sees
        candidate(0.0, 0.3, 0.7),   # what per-record reading sees
        candidate(1 / 3, 1 / 3, 1 / 3),
        candidate(0.8, 0.1, 0.1),
        candidate(0.05, 0.9, 0.05),
    ])
    weights = CommandWeights({b: 1.0})
    scores_bit = tuple(
        weighted_model_distance(m, record_bits, weights) for m in candidates
    )
    scores_whole = tuple(
        weighted_model_distance(m, record_whole, weights) for m in candidates
    )
    best_bit = select_best_fit(candidates, record_bits, weights)
    best_whole = select_best_fit(candidates, record_whole, weights)
    return ParserDependenceResult(
        record_per_bit=record_bits,
        record_per_record=record_whole,
        best_fit_per_bit=best_bit.index,
        best_fit_per_record=best_whole.index,
        scores_per_bit=scores_bit,
        scores_per_record=scores_whole,
    )
