"""Statistical distance, distinguishability criteria, and sample-size bounds.

The distance between outcome distributions is the Bhattacharyya angle
``d(p, q) = arccos(sum_j sqrt(p_j q_j))``, the natural metric on probability
vectors viewed as points on the unit sphere of root-probabilities.  Two
distributions are treated as indistinguishable in ``n`` trials unless
``sqrt(n) * d`` exceeds 1, and a spectral-norm gap ``epsilon`` between two
gate models forces at least ``ceil(epsilon^-2)`` trials before any experiment
can tell them apart.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadEpsilon,
    BadSampleSize,
    CommandNotInSet,
    DimensionMismatch,
    LengthMismatch,
    SpectraMismatch,
)
from .linalg import as_complex_vector, spectral_norm
from .qm_model import Command, Model, OutcomeRecord, outcome_distribution

#: log-likelihood-ratio threshold: 19:1 posterior odds
DEFAULT_LLR_THRESHOLD = math.log(19.0)

#: additive smoothing applied to zero probabilities inside the LLR
LLR_SMOOTHING = 1e-12


@dataclass(frozen=True)
class Distribution:
    """A validated probability vector.

    Entries may stray below 0 or above 1 by at most 1e-12 (they are clipped),
    and the total must be within 1e-9 of one.
    """

    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        cleaned = []
        for p in self.probs:
            p = float(p)
            if p < -1e-12 or p > 1.0 + 1e-12:
                raise ValueError(f"probability {p} outside [0, 1]")
            cleaned.append(min(max(p, 0.0), 1.0))
        total = sum(cleaned)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total}, not 1")
        object.__setattr__(self, "probs", tuple(cleaned))

    @classmethod
    def coerce(cls, x: "Distribution | Sequence[float] | np.ndarray") -> "Distribution":
        if isinstance(x, Distribution):
            return x
        return cls(tuple(np.asarray(x, dtype=float)))

    @classmethod
    def from_counts(cls, counts: Sequence[int]) -> "Distribution":
        arr = np.asarray(counts, dtype=float)
        total = arr.sum()
        if total <= 0:
            raise BadSampleSize("cannot normalize an all-zero tally")
        return cls(tuple(arr / total))

    def as_array(self) -> np.ndarray:
        return np.array(self.probs, dtype=float)

    def __len__(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class CommandWeights:
    """Nonnegative weights over commands, summing to one within 1e-9."""

    weights: Mapping[Command, float]

    def __post_init__(self) -> None:
        frozen = {b: float(w) for b, w in self.weights.items()}
        if not frozen:
            raise ValueError("no commands weighted")
        if any(w < 0 for w in frozen.values()):
            raise ValueError("weights must be nonnegative")
        total = sum(frozen.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {total}, not 1")
        object.__setattr__(self, "weights", frozen)

    @classmethod
    def uniform(cls, commands: Sequence[Command]) -> "CommandWeights":
        n = len(commands)
        return cls({b: 1.0 / n for b in commands})

    def items(self):
        return self.weights.items()


class Verdict(enum.Enum):
    """Outcome of a log-likelihood-ratio discrimination."""

    FAVOR_P = "favor_p"
    FAVOR_Q = "favor_q"
    UNDECIDED = "undecided"


# ---------------------------------------------------------------------------
# core distances
# ---------------------------------------------------------------------------

def statistical_distance(p, q) -> float:
    """Bhattacharyya angle between two distributions of equal length."""
    pd = Distribution.coerce(p).as_array()
    qd = Distribution.coerce(q).as_array()
    if pd.size != qd.size:
        raise LengthMismatch(f"distribution lengths differ: {pd.size} vs {qd.size}")
    coefficient = float(np.sum(np.sqrt(pd * qd)))
    return math.acos(min(max(coefficient, 0.0), 1.0))


def indistinguishable_in_trials(p, q, n: int) -> bool:
    """True when ``sqrt(n) * d(p, q) <= 1``: too close to tell apart."""
    n = int(n)
    if n < 1:
        raise BadSampleSize(f"trial count must be >= 1, got {n}")
    return math.sqrt(n) * statistical_distance(p, q) <= 1.0


def vector_distance_bound(v_alpha, v_beta) -> float:
    """Upper bound ``arccos |<v_alpha | v_beta>|`` on any statistical distance.

    No measurement can separate two prepared states by more than the angle
    between them; inputs must be unit vectors of equal dimension.
    """
    a = as_complex_vector(v_alpha)
    b = as_complex_vector(v_beta)
    if a.size != b.size:
        raise DimensionMismatch(f"vector lengths differ: {a.size} vs {b.size}")
    for name, vec in (("first", a), ("second", b)):
        norm = np.linalg.norm(vec)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"{name} vector has norm {norm}, expected 1")
    overlap = abs(np.vdot(a, b))
    return math.acos(min(overlap, 1.0))


def spectral_norm_diff(u_alpha, u_beta) -> float:
    """Largest singular value of the difference of two equal-size matrices."""
    a = np.asarray(u_alpha, dtype=np.complex128)
    b = np.asarray(u_beta, dtype=np.complex128)
    if a.shape != b.shape:
        raise DimensionMismatch(f"matrix shapes differ: {a.shape} vs {b.shape}")
    return spectral_norm(a - b)


def min_sample_size(epsilon: float) -> int:
    """Fewest trials that could distinguish gates separated by ``epsilon``.

    Returns ``ceil(epsilon^-2)``.  The reciprocal square is snapped to the
    nearest integer when within 1e-9 of it, so grid values like 0.1 map to
    100 rather than 101 under floating-point noise.
    """
    epsilon = float(epsilon)
    if not 0.0 < epsilon <= 2.0:
        raise BadEpsilon(f"epsilon must lie in (0, 2], got {epsilon}")
    raw = epsilon ** -2
    nearest = round(raw)
    if abs(raw - nearest) <= 1e-9 * max(1.0, abs(raw)):
        return int(nearest)
    return math.ceil(raw)


# ---------------------------------------------------------------------------
# weighted model distance
# ---------------------------------------------------------------------------

def _aligned_model_distributions(model_a: Model, model_b: Model,
                                 b: Command) -> tuple[np.ndarray, np.ndarray]:
    """Outcome distributions of two models aligned by eigenvalue."""
    terms_a = sorted(model_a.m(b), key=lambda t: t.value)
    terms_b = sorted(model_b.m(b), key=lambda t: t.value)
    if len(terms_a) != len(terms_b):
        raise SpectraMismatch(
            f"models have {len(terms_a)} vs {len(terms_b)} outcomes for {b!r}"
        )
    for x, y in zip(terms_a, terms_b):
        if abs(x.value - y.value) > 1e-9:
            raise SpectraMismatch(
                f"eigenvalues {x.value} and {y.value} for {b!r} do not match"
            )
    dist_a = outcome_distribution(model_a, b)
    dist_b = outcome_distribution(model_b, b)
    order_a = np.argsort([t.value for t in model_a.m(b)], kind="stable")
    order_b = np.argsort([t.value for t in model_b.m(b)], kind="stable")
    return dist_a[order_a], dist_b[order_b]


def _record_frequencies_for_model(model: Model, record: OutcomeRecord,
                                  b: Command) -> tuple[np.ndarray, np.ndarray]:
    """Model distribution and recorded frequencies aligned by eigenvalue.

    Every recorded value must match some model eigenvalue within 1e-9;
    model eigenvalues absent from the record contribute frequency zero.
    """
    terms = model.m(b)
    freqs = np.zeros(len(terms))
    recorded = record.outcomes(b)
    total = record.total(b)
    for lam, n in recorded:
        matches = [i for i, t in enumerate(terms) if abs(t.value - lam) <= 1e-9]
        if not matches:
            raise SpectraMismatch(
                f"recorded value {lam} for {b!r} matches no model eigenvalue"
            )
        freqs[matches[0]] += n / total
    return outcome_distribution(model, b), freqs


def weighted_model_distance(model_a: Model,
                            other: "Model | OutcomeRecord",
                            weights: CommandWeights) -> float:
    """Weighted average statistical distance across commands.

    ``other`` may be a second model (spectra aligned by eigenvalue) or an
    outcome record (frequencies matched to the first model's eigenvalues).
    Every weighted command must be known to both sides.
    """
    total = 0.0
    for b, weight in weights.items():
        if b not in model_a.commands:
            raise CommandNotInSet(f"weighted command {b!r} missing from the model")
        if isinstance(other, OutcomeRecord):
            if b not in other.commands:
                raise CommandNotInSet(f"weighted command {b!r} missing from the record")
            p, q = _record_frequencies_for_model(model_a, other, b)
        else:
            if b not in other.commands:
                raise CommandNotInSet(f"weighted command {b!r} missing from the second model")
            p, q = _aligned_model_distributions(model_a, other, b)
        coefficient = float(np.sum(np.sqrt(p * q)))
        total += weight * math.acos(min(max(coefficient, 0.0), 1.0))
    return total


# ---------------------------------------------------------------------------
# likelihood-ratio discrimination
# ---------------------------------------------------------------------------

def log_likelihood_ratio(samples, p, q) -> float:
    """``sum_j n_j ln(p_j / q_j)`` with zero probabilities smoothed to 1e-12."""
    tallies = np.asarray(samples, dtype=float)
    pd = Distribution.coerce(p).as_array()
    qd = Distribution.coerce(q).as_array()
    if not (tallies.size == pd.size == qd.size):
        raise LengthMismatch(
            f"tallies/p/q lengths differ: {tallies.size}/{pd.size}/{qd.size}"
        )
    if tallies.size == 0 or tallies.sum() <= 0:
        raise BadSampleSize("empty tallies cannot be discriminated")
    if np.any(tallies < 0):
        raise ValueError("tallies must be nonnegative")
    ps = np.where(pd <= 0.0, LLR_SMOOTHING, pd)
    qs = np.where(qd <= 0.0, LLR_SMOOTHING, qd)
    return float(np.sum(tallies * np.log(ps / qs)))


def discriminate(samples, p, q, tau: float = DEFAULT_LLR_THRESHOLD) -> Verdict:
    """Three-way verdict from the log-likelihood ratio at threshold ``tau``."""
    llr = log_likelihood_ratio(samples, p, q)
    if llr > tau:
        return Verdict.FAVOR_P
    if llr < -tau:
        return Verdict.FAVOR_Q
    return Verdict.UNDECIDED
