"""Simulated instruments that answer commands with raw detector records.

An instrument owns a hidden true model and a seeded random stream.  Asking it
to ``measure`` a command for some number of trials returns nothing but bit
arrays: one record per trial, each record an L x K grid of detector clicks
(L detectors observed over K time intervals).  The default encoding fires
exactly one detector at the final interval (the detector index is the
sampled outcome), but the instrument never says which reading convention it
used.  Turning records into outcome values is the business of an
``OutcomeParser``, and different parsers extract genuinely different
experiments from identical bits: a record of L*K bits supports anywhere from
one outcome per record up to one outcome per bit.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass

import numpy as np

from ..errors import BadRecordShape, BadSampleSize, CommandNotInSet, DimensionMismatch
from ..qm_model import Command, Model, OutcomeRecord, outcome_distribution


class Instrument:
    """A black box: commands in, detector-bit records out.

    The true model is deliberately private; well-behaved clients touch only
    ``detector_shape``, ``commands`` and ``measure``.
    """

    def __init__(self, true_model: Model, seed: int,
                 detectors: int | None = None, intervals: int = 1):
        max_outcomes = max(true_model.m.outcome_count(b) for b in true_model.commands)
        detectors = max_outcomes if detectors is None else int(detectors)
        if detectors < max_outcomes:
            raise DimensionMismatch(
                f"{detectors} detectors cannot encode {max_outcomes} outcomes one-hot"
            )
        if intervals < 1:
            raise ValueError("need at least one time interval")
        self._true_model = true_model
        self._rng = np.random.default_rng(seed)
        self._detectors = detectors
        self._intervals = int(intervals)
        self._distributions = {
            b: outcome_distribution(true_model, b) for b in true_model.commands
        }
        self.commands: tuple[Command, ...] = true_model.commands

    @property
    def detector_shape(self) -> tuple[int, int]:
        """(detectors, time intervals) of every record."""
        return (self._detectors, self._intervals)

    def measure(self, b: Command, trials: int) -> np.ndarray:
        """Run ``trials`` repetitions of command ``b``.

        Returns a uint8 array of shape (trials, detectors, intervals); each
        record carries a single click at the final interval, on the detector
        matching the sampled outcome.
        """
        trials = int(trials)
        if trials < 1:
            raise BadSampleSize(f"trial count must be >= 1, got {trials}")
        if b not in self._distributions:
            raise CommandNotInSet(f"instrument does not answer command {b!r}")
        # guard against tiny negative rounding before sampling
        clean = np.clip(self._distributions[b], 0.0, None)
        clean = clean / clean.sum()
        indices = self._rng.choice(len(clean), size=trials, p=clean)
        records = np.zeros((trials, self._detectors, self._intervals), dtype=np.uint8)
        records[np.arange(trials), indices, self._intervals - 1] = 1
        return records


# ---------------------------------------------------------------------------
# parsers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OutcomeParser:
    """A named policy mapping one raw record to a list of outcome values."""

    name: str
    values_per_record: Callable[[np.ndarray], np.ndarray]


def _check_records(records: np.ndarray) -> np.ndarray:
    arr = np.asarray(records)
    if arr.ndim != 3:
        raise BadRecordShape(
            f"records must have shape (trials, detectors, intervals), got {arr.shape}"
        )
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise BadRecordShape("records must contain only 0/1 detector bits")
    return arr.astype(np.uint8)


def _bits_to_int(bits: np.ndarray) -> np.ndarray:
    """Big-endian integer value of trailing-axis bit vectors."""
    flat = bits.reshape(bits.shape[0], -1)
    weights = 1 << np.arange(flat.shape[1] - 1, -1, -1)
    return flat @ weights


def record_integers(records: np.ndarray) -> np.ndarray:
    """Per-record parser values for a whole batch at once.

    Equivalent to mapping the per-record parser over the batch, but
    vectorized; experiment loops that tally millions of records go through
    here while ``parse_outcomes`` stays the order-faithful reference path.
    """
    arr = _check_records(records)
    return _bits_to_int(arr.reshape(arr.shape[0], -1)).astype(float)


PER_BIT = OutcomeParser(
    name="per-bit",
    # every one of the L*K bits is its own outcome with value 0 or 1
    values_per_record=lambda record: record.reshape(-1).astype(float),
)

PER_RECORD = OutcomeParser(
    name="per-record",
    # the whole record is one outcome: the big-endian integer of its bits
    values_per_record=lambda record: np.array(
        [float(_bits_to_int(record.reshape(1, -1))[0])]
    ),
)

PER_DETECTOR = OutcomeParser(
    name="per-detector",
    # one outcome per detector: the integer of that detector's K bits
    values_per_record=lambda record: _bits_to_int(record).astype(float),
)

PARSERS: Mapping[str, OutcomeParser] = {
    p.name: p for p in (PER_BIT, PER_RECORD, PER_DETECTOR)
}


def parse_outcomes(parser: OutcomeParser,
                   records_by_command: Mapping[Command, np.ndarray]) -> OutcomeRecord:
    """Apply one parsing policy to raw records, tallying an outcome record.

    Outcome values are indexed in order of first appearance in the sample
    stream, per command.
    """
    samples: dict[Command, list[float]] = {}
    for b, records in records_by_command.items():
        arr = _check_records(records)
        stream: list[float] = []
        for record in arr:
            stream.extend(parser.values_per_record(record).tolist())
        samples[b] = stream
    return OutcomeRecord.from_samples(samples)


def one_hot_record_values(detectors: int, intervals: int) -> tuple[float, ...]:
    """Per-record parser values of the one-hot encoding, outcome 1 first.

    Outcome j clicks detector j-1 at the final interval; as a big-endian
    integer over the flattened (detector, interval) grid that is
    ``2 ** ((detectors - j) * intervals)``.
    """
    return tuple(
        float(1 << ((detectors - j) * intervals)) for j in range(1, detectors + 1)
    )


def tally_by_values(record: OutcomeRecord, b: Command,
                    values: tuple[float, ...]) -> np.ndarray:
    """Counts aligned to a fixed value order (zeros for unseen values)."""
    counts = np.zeros(len(values))
    lookup = {value: i for i, value in enumerate(values)}
    for lam, n in record.outcomes(b):
        if lam not in lookup:
            raise BadRecordShape(f"unexpected outcome value {lam} for {b!r}")
        counts[lookup[lam]] = n
    return counts
