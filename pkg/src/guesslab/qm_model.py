"""Command-parameterized quantum models and perfect-fit constructors.

A model assigns to every command ``b`` (a finite binary word) a prepared state
vector ``v(b)``, a unitary ``U(b)``, and a measurement ``M(b)`` given in
spectral form.  The probability of seeing outcome ``j`` under command ``b`` is
the sandwich ``<v(b)| U(b)^† M_j(b) U(b) |v(b)>`` with ``M_j`` the projector
attached to the j-th spectral term.

Given only an outcome record (per command, a list of observed measurement
values with their counts), this module constructs models that reproduce the
recorded frequencies exactly.  The constructors expose the freedom that makes
such fits non-unique: arbitrary phases on the state amplitudes, arbitrary
padding eigenvalues on the unused dimensions, and (in the general form)
arbitrary unit vectors inside enlarged eigenspaces.  ``distinguish_by_witness``
searches a fixed finite family of two-outcome measurements for one on which two
such fits disagree.
"""

from __future__ import annotations

import cmath
import json
import math
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadOutcomeIndex,
    CommandNotInSet,
    DimensionMismatch,
    InvalidPadding,
    InvalidRecord,
    InvalidWitnessVector,
    NotUnitary,
)
from .linalg import (
    MATRIX_ATOL,
    as_complex_matrix,
    as_complex_vector,
    basis_vector,
    is_hermitian,
    is_unit_vector,
    is_unitary,
    projector_onto,
)

#: tolerance for "perfect fit": reproduced frequencies match recorded ones
FIT_ATOL = 1e-12

#: relative phases searched by distinguish_by_witness
WITNESS_PHASES = (0.0, math.pi / 2, math.pi, 3 * math.pi / 2)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Command:
    """A finite binary word; the empty word is a valid command."""

    bits: str = ""

    def __post_init__(self) -> None:
        if any(c not in "01" for c in self.bits):
            raise ValueError(f"command bits must be 0/1, got {self.bits!r}")

    def __len__(self) -> int:
        return len(self.bits)

    def concat(self, other: "Command") -> "Command":
        """Concatenation: self first, then other."""
        return Command(self.bits + other.bits)

    def to_hex(self) -> str:
        """Hex encoding that preserves leading zeros and the empty word.

        A sentinel 1-bit is prepended before conversion, so ``""`` -> ``"1"``,
        ``"0"`` -> ``"2"``, ``"101"`` -> ``"d"``.  ``from_hex`` inverts this.
        """
        return format(int("1" + self.bits, 2), "x")

    @classmethod
    def from_hex(cls, text: str) -> "Command":
        value = int(text, 16)
        if value < 1:
            raise ValueError(f"not a command hex string: {text!r}")
        return cls(bin(value)[3:])  # strip "0b" and the sentinel bit

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return f"Command({self.bits!r})"


def command_set(commands: Iterable[Command]) -> tuple[Command, ...]:
    """Validate and freeze an ordered command set (no duplicates)."""
    out = tuple(commands)
    if len(set(out)) != len(out):
        raise ValueError("command set contains duplicates")
    if not out:
        raise ValueError("command set is empty")
    return out


@dataclass(frozen=True)
class HilbertSpace:
    """A finite-dimensional state space; only the dimension matters here."""

    dim: int

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")


# ---------------------------------------------------------------------------
# the three command-indexed functions
# ---------------------------------------------------------------------------

def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class StateFn:
    """Map from commands to prepared unit vectors."""

    def __init__(self, vectors: Mapping[Command, Sequence[complex] | np.ndarray]):
        if not vectors:
            raise ValueError("StateFn needs at least one command")
        self._vectors: dict[Command, np.ndarray] = {}
        dim = None
        for b, raw in vectors.items():
            v = as_complex_vector(raw)
            if dim is None:
                dim = v.size
            elif v.size != dim:
                raise DimensionMismatch(
                    f"state vectors disagree in dimension: {v.size} vs {dim}"
                )
            if not is_unit_vector(v):
                raise ValueError(f"state vector for {b!r} is not normalized")
            self._vectors[b] = _freeze(v)
        self.dim: int = int(dim)  # type: ignore[arg-type]
        self.commands: tuple[Command, ...] = tuple(self._vectors)

    def __call__(self, b: Command) -> np.ndarray:
        try:
            return self._vectors[b]
        except KeyError:
            raise CommandNotInSet(f"state function not defined on {b!r}") from None


class UnitaryFn:
    """Map from commands to unitaries, checked entrywise to 1e-9."""

    def __init__(self, matrices: Mapping[Command, np.ndarray]):
        if not matrices:
            raise ValueError("UnitaryFn needs at least one command")
        self._matrices: dict[Command, np.ndarray] = {}
        dim = None
        for b, raw in matrices.items():
            u = as_complex_matrix(raw)
            if dim is None:
                dim = u.shape[0]
            elif u.shape[0] != dim:
                raise DimensionMismatch(
                    f"unitaries disagree in dimension: {u.shape[0]} vs {dim}"
                )
            if not is_unitary(u):
                raise NotUnitary(f"matrix for {b!r} fails unitarity at {MATRIX_ATOL}")
            self._matrices[b] = _freeze(u)
        self.dim: int = int(dim)  # type: ignore[arg-type]
        self.commands: tuple[Command, ...] = tuple(self._matrices)

    def __call__(self, b: Command) -> np.ndarray:
        try:
            return self._matrices[b]
        except KeyError:
            raise CommandNotInSet(f"unitary function not defined on {b!r}") from None

    @classmethod
    def identity(cls, commands: Iterable[Command], dim: int) -> "UnitaryFn":
        eye = np.eye(dim, dtype=np.complex128)
        return cls({b: eye for b in commands})


@dataclass(frozen=True)
class SpectralTerm:
    """One (eigenvalue, projector) pair of a measurement."""

    value: float
    projector: np.ndarray


class MeasurementFn:
    """Map from commands to measurements in spectral form.

    Per command the projectors must be an orthogonal, complete family
    (``M_j M_k = delta_jk M_j``, ``sum_j M_j = 1``) with pairwise distinct
    eigenvalues; all checks use an entrywise tolerance of 1e-9.
    """

    def __init__(self, spectra: Mapping[Command, Sequence[tuple[float, np.ndarray]]]):
        if not spectra:
            raise ValueError("MeasurementFn needs at least one command")
        self._spectra: dict[Command, tuple[SpectralTerm, ...]] = {}
        dim = None
        for b, raw_terms in spectra.items():
            terms = []
            for value, raw in raw_terms:
                p = as_complex_matrix(raw)
                if dim is None:
                    dim = p.shape[0]
                elif p.shape[0] != dim:
                    raise DimensionMismatch(
                        f"projectors disagree in dimension: {p.shape[0]} vs {dim}"
                    )
                terms.append(SpectralTerm(float(value), _freeze(p)))
            self._validate_command(b, terms, int(dim))  # type: ignore[arg-type]
            self._spectra[b] = tuple(terms)
        self.dim: int = int(dim)  # type: ignore[arg-type]
        self.commands: tuple[Command, ...] = tuple(self._spectra)

    @staticmethod
    def _validate_command(b: Command, terms: list[SpectralTerm], dim: int) -> None:
        if not terms:
            raise ValueError(f"measurement for {b!r} has no spectral terms")
        values = [t.value for t in terms]
        for i in range(len(values)):
            for k in range(i + 1, len(values)):
                if abs(values[i] - values[k]) <= MATRIX_ATOL:
                    raise ValueError(
                        f"measurement for {b!r} repeats eigenvalue {values[i]}"
                    )
        total = np.zeros((dim, dim), dtype=np.complex128)
        for i, term in enumerate(terms):
            p = term.projector
            if not is_hermitian(p):
                raise ValueError(f"projector {i + 1} for {b!r} is not hermitian")
            for k, other in enumerate(terms):
                product = p @ other.projector
                expect = p if i == k else 0.0
                if np.max(np.abs(product - expect)) > MATRIX_ATOL:
                    raise ValueError(
                        f"projectors {i + 1},{k + 1} for {b!r} are not orthogonal idempotents"
                    )
            total += p
        if np.max(np.abs(total - np.eye(dim))) > MATRIX_ATOL:
            raise ValueError(f"projectors for {b!r} do not sum to the identity")

    def __call__(self, b: Command) -> tuple[SpectralTerm, ...]:
        try:
            return self._spectra[b]
        except KeyError:
            raise CommandNotInSet(f"measurement function not defined on {b!r}") from None

    def outcome_count(self, b: Command) -> int:
        return len(self(b))

    @classmethod
    def diagonal(cls, assignments: Mapping[Command, Sequence[float]], dim: int) -> "MeasurementFn":
        """Measurement whose eigenvectors are the computational basis.

        ``assignments[b]`` lists one eigenvalue per basis vector; equal values
        would merge eigenspaces, so they are rejected by validation.
        """
        spectra = {}
        for b, values in assignments.items():
            if len(values) != dim:
                raise DimensionMismatch(
                    f"need {dim} eigenvalues for {b!r}, got {len(values)}"
                )
            terms = []
            for j, value in enumerate(values):
                proj = np.zeros((dim, dim), dtype=np.complex128)
                proj[j, j] = 1.0
                terms.append((float(value), proj))
            spectra[b] = terms
        return cls(spectra)


@dataclass(frozen=True)
class Model:
    """A command-indexed triple (state, unitary, measurement)."""

    space: HilbertSpace
    v: StateFn
    u: UnitaryFn
    m: MeasurementFn
    commands: tuple[Command, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "commands", command_set(self.commands))
        for fn, label in ((self.v, "state"), (self.u, "unitary"), (self.m, "measurement")):
            if set(fn.commands) != set(self.commands):
                raise CommandNotInSet(
                    f"{label} function domain does not match the model's command set"
                )
            if fn.dim != self.space.dim:
                raise DimensionMismatch(
                    f"{label} function has dimension {fn.dim}, space has {self.space.dim}"
                )

    @classmethod
    def build(cls, v: StateFn, u: UnitaryFn, m: MeasurementFn,
              commands: Iterable[Command] | None = None) -> "Model":
        cmds = tuple(commands) if commands is not None else v.commands
        return cls(HilbertSpace(v.dim), v, u, m, cmds)


# ---------------------------------------------------------------------------
# outcome records
# ---------------------------------------------------------------------------

class OutcomeRecord:
    """Observed measurement values and counts, per command.

    Outcome indices are 1-based and ordered by first appearance.  Values must
    be pairwise separated by more than 1e-9 per command (they are matched
    against measurement spectra at that tolerance), and every count is a
    positive integer.
    """

    def __init__(self, entries: Mapping[Command, Sequence[tuple[float, int]]]):
        self._entries: dict[Command, tuple[tuple[float, int], ...]] = {}
        for b, pairs in entries.items():
            frozen = tuple((float(lam), int(n)) for lam, n in pairs)
            if not frozen:
                raise InvalidRecord(f"command {b!r} has no recorded outcomes")
            values = [lam for lam, _ in frozen]
            for i in range(len(values)):
                for k in range(i + 1, len(values)):
                    if abs(values[i] - values[k]) <= 1e-9:
                        raise InvalidRecord(
                            f"duplicate outcome value {values[i]} for {b!r}"
                        )
            for lam, n in frozen:
                if n < 1:
                    raise InvalidRecord(f"count {n} for value {lam} of {b!r} is not >= 1")
            self._entries[b] = frozen
        if not self._entries:
            raise InvalidRecord("record has no commands")

    @property
    def commands(self) -> tuple[Command, ...]:
        return tuple(self._entries)

    def outcomes(self, b: Command) -> tuple[tuple[float, int], ...]:
        try:
            return self._entries[b]
        except KeyError:
            raise CommandNotInSet(f"record has no entry for {b!r}") from None

    def outcome_count(self, b: Command) -> int:
        """Number of distinct recorded outcomes for ``b``."""
        return len(self.outcomes(b))

    def total(self, b: Command) -> int:
        """Total number of trials recorded for ``b``."""
        return sum(n for _, n in self.outcomes(b))

    def values(self, b: Command) -> tuple[float, ...]:
        return tuple(lam for lam, _ in self.outcomes(b))

    def frequencies(self, b: Command) -> np.ndarray:
        pairs = self.outcomes(b)
        total = self.total(b)
        return np.array([n / total for _, n in pairs], dtype=float)

    def max_outcome_count(self) -> int:
        return max(self.outcome_count(b) for b in self.commands)

    @classmethod
    def from_samples(cls, samples: Mapping[Command, Sequence[float]]) -> "OutcomeRecord":
        """Tally raw per-trial values; outcome order is order of first appearance."""
        entries: dict[Command, list[tuple[float, int]]] = {}
        for b, stream in samples.items():
            order: list[float] = []
            counts: dict[float, int] = {}
            for raw in stream:
                value = float(raw)
                if value not in counts:
                    order.append(value)
                    counts[value] = 0
                counts[value] += 1
            entries[b] = [(value, counts[value]) for value in order]
        return cls(entries)

    # -- serialization: {"<command hex>": [{"lambda": x, "n": k}, ...]} --

    def to_json_obj(self) -> dict:
        return {
            b.to_hex(): [{"lambda": lam, "n": n} for lam, n in pairs]
            for b, pairs in self._entries.items()
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True)

    @classmethod
    def from_json_obj(cls, obj: Mapping[str, Sequence[Mapping[str, float]]]) -> "OutcomeRecord":
        entries = {
            Command.from_hex(key): [(row["lambda"], row["n"]) for row in rows]
            for key, rows in obj.items()
        }
        return cls(entries)

    @classmethod
    def from_json(cls, text: str) -> "OutcomeRecord":
        return cls.from_json_obj(json.loads(text))


# ---------------------------------------------------------------------------
# phases and padding for the fit constructors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseAssignment:
    """Free parameters of the diagonal fit constructor.

    ``phase(j, b)`` supplies the amplitude phase of outcome ``j`` under ``b``;
    ``padding(j, b)`` supplies the eigenvalue for the unused dimension ``j``
    (indices above the recorded outcome count).  ``padding=None`` picks safe
    defaults: max recorded value plus 1, 2, ... which can never collide.
    """

    phase: Callable[[int, Command], float]
    padding: Callable[[int, Command], float] | None = None

    @classmethod
    def zero(cls) -> "PhaseAssignment":
        return cls(phase=lambda j, b: 0.0)

    @classmethod
    def random(cls, rng: np.random.Generator) -> "PhaseAssignment":
        """Phases drawn uniformly from [0, 2*pi), memoized per (j, b)."""
        cache: dict[tuple[int, Command], float] = {}

        def phase(j: int, b: Command) -> float:
            key = (j, b)
            if key not in cache:
                cache[key] = float(rng.uniform(0.0, 2.0 * math.pi))
            return cache[key]

        return cls(phase=phase)


def _padding_values(record: OutcomeRecord, phases: PhaseAssignment | None,
                    b: Command, count: int) -> list[float]:
    """Eigenvalues for the unused dimensions of command ``b``."""
    recorded = record.values(b)
    j_count = len(recorded)
    if phases is not None and phases.padding is not None:
        mu = [float(phases.padding(j, b)) for j in range(j_count + 1, j_count + count + 1)]
    else:
        top = max(recorded)
        mu = [top + k for k in range(1, count + 1)]
    taken = list(recorded)
    for value in mu:
        for other in taken:
            if abs(value - other) <= 1e-9:
                raise InvalidPadding(
                    f"padding value {value} collides with another eigenvalue for {b!r}"
                )
        taken.append(value)
    return mu


# ---------------------------------------------------------------------------
# probabilities and equivalences
# ---------------------------------------------------------------------------

def outcome_probability(model: Model, b: Command, j: int) -> float:
    """Probability of outcome ``j`` (1-based) under command ``b``.

    Computed as ``<v| U^† M_j U |v>``; the imaginary part vanishes for a
    hermitian projector and is discarded.  Values are clamped to [0, 1] only
    when they stray within 1e-9 of the boundary.
    """
    if b not in model.commands:
        raise CommandNotInSet(f"command {b!r} is not in the model's set")
    terms = model.m(b)
    if not 1 <= j <= len(terms):
        raise BadOutcomeIndex(f"outcome {j} out of range 1..{len(terms)} for {b!r}")
    w = model.u(b) @ model.v(b)
    p = float(np.real(w.conj() @ (terms[j - 1].projector @ w)))
    if -1e-9 <= p < 0.0:
        return 0.0
    if 1.0 < p <= 1.0 + 1e-9:
        return 1.0
    return p


def outcome_distribution(model: Model, b: Command) -> np.ndarray:
    """All outcome probabilities for ``b``, in spectral-term order."""
    return np.array(
        [outcome_probability(model, b, j) for j in range(1, model.m.outcome_count(b) + 1)]
    )


def reduce_model(model: Model) -> Model:
    """Fold the unitary into the state: (v, U, M) -> (U v, 1, M).

    Outcome probabilities are unchanged, which is why any model is equivalent
    to one whose command dependence sits entirely in the prepared state.
    """
    vectors = {b: model.u(b) @ model.v(b) for b in model.commands}
    return Model(
        model.space,
        StateFn(vectors),
        UnitaryFn.identity(model.commands, model.space.dim),
        model.m,
        model.commands,
    )


def apply_equivalence(model: Model, q: np.ndarray) -> Model:
    """Conjugate the whole model by a fixed unitary ``q``.

    Returns the model (q v, q U q^†, q M q^†); every outcome probability is
    preserved exactly, which makes the representation non-unique.
    """
    q = as_complex_matrix(q)
    if q.shape[0] != model.space.dim:
        raise DimensionMismatch(
            f"equivalence has dimension {q.shape[0]}, model has {model.space.dim}"
        )
    if not is_unitary(q):
        raise NotUnitary("equivalence transformation must be unitary")
    qh = q.conj().T
    vectors = {b: q @ model.v(b) for b in model.commands}
    matrices = {b: q @ model.u(b) @ qh for b in model.commands}
    spectra = {
        b: [(t.value, q @ t.projector @ qh) for t in model.m(b)]
        for b in model.commands
    }
    return Model(model.space, StateFn(vectors), UnitaryFn(matrices),
                 MeasurementFn(spectra), model.commands)


# ---------------------------------------------------------------------------
# perfect-fit constructors
# ---------------------------------------------------------------------------

def construct_fitting_model(record: OutcomeRecord,
                            phases: PhaseAssignment | None = None,
                            padding_dim: int | None = None) -> Model:
    """Diagonal perfect fit: amplitudes are root-frequencies with free phases.

    For each command the state is ``sum_j sqrt(n_j/N) e^{i phi(j,b)} |j>``, the
    unitary is the identity, and the measurement assigns recorded value
    ``lambda_j`` to basis vector ``j`` (plus padding eigenvalues on unused
    dimensions).  The reproduced outcome probabilities equal the recorded
    frequencies to machine precision.
    """
    if phases is None:
        phases = PhaseAssignment.zero()
    needed = record.max_outcome_count()
    dim = needed if padding_dim is None else int(padding_dim)
    if dim < needed:
        raise DimensionMismatch(
            f"padding dimension {dim} is below the {needed} outcomes recorded"
        )
    vectors: dict[Command, np.ndarray] = {}
    assignments: dict[Command, list[float]] = {}
    for b in record.commands:
        pairs = record.outcomes(b)
        total = record.total(b)
        v = np.zeros(dim, dtype=np.complex128)
        for j, (_, n) in enumerate(pairs, start=1):
            v[j - 1] = math.sqrt(n / total) * cmath.exp(1j * phases.phase(j, b))
        vectors[b] = v
        mu = _padding_values(record, phases, b, dim - len(pairs))
        assignments[b] = [lam for lam, _ in pairs] + mu
    commands = record.commands
    return Model(
        HilbertSpace(dim),
        StateFn(vectors),
        UnitaryFn.identity(commands, dim),
        MeasurementFn.diagonal(assignments, dim),
        commands,
    )


def construct_fitting_model_general(
    record: OutcomeRecord,
    eigenspace_dims: Callable[[int, Command], int] | int,
    w: Callable[[int, Command], Sequence[complex] | np.ndarray],
    dim: int | None = None,
    padding_values: Callable[[int, Command], float] | None = None,
) -> Model:
    """Perfect fit with enlarged eigenspaces and chosen witness vectors.

    Recorded outcome ``j`` of command ``b`` gets an eigenspace of dimension
    ``eigenspace_dims(j, b) >= 2`` spanned by consecutive basis vectors;
    ``w(j, b)`` places a unit vector inside that eigenspace (given either in
    eigenspace coordinates or as a full-space vector), and the state is the
    root-frequency combination of those vectors.  Leftover dimensions become
    one-dimensional padding eigenspaces.  The fit is again exact, yet none of
    the ``w`` choices are observable through this measurement alone.
    """
    if isinstance(eigenspace_dims, int):
        fixed = int(eigenspace_dims)
        dims_fn = lambda j, b: fixed  # noqa: E731
    else:
        dims_fn = eigenspace_dims

    layouts: dict[Command, list[int]] = {}
    for b in record.commands:
        dims = [int(dims_fn(j, b)) for j in range(1, record.outcome_count(b) + 1)]
        if any(d < 2 for d in dims):
            raise ValueError("eigenspace dimensions must be >= 2")
        layouts[b] = dims
    needed = max(sum(dims) for dims in layouts.values())
    space_dim = needed if dim is None else int(dim)
    if space_dim < needed:
        raise DimensionMismatch(
            f"eigenspace layout needs dimension {needed}, configured space has {space_dim}"
        )

    aux = PhaseAssignment(phase=lambda j, b: 0.0, padding=padding_values) \
        if padding_values is not None else None

    vectors: dict[Command, np.ndarray] = {}
    spectra: dict[Command, list[tuple[float, np.ndarray]]] = {}
    for b in record.commands:
        dims = layouts[b]
        pairs = record.outcomes(b)
        total = record.total(b)
        offset = 0
        v = np.zeros(space_dim, dtype=np.complex128)
        terms: list[tuple[float, np.ndarray]] = []
        for j, ((lam, n), block_dim) in enumerate(zip(pairs, dims), start=1):
            block = slice(offset, offset + block_dim)
            raw = as_complex_vector(w(j, b))
            if raw.size == block_dim:
                full = np.zeros(space_dim, dtype=np.complex128)
                full[block] = raw
            elif raw.size == space_dim:
                full = raw.copy()
                outside = np.linalg.norm(np.delete(full, range(offset, offset + block_dim)))
                if outside > MATRIX_ATOL:
                    raise InvalidWitnessVector(
                        f"witness {j} for {b!r} has weight outside its eigenspace"
                    )
            else:
                raise InvalidWitnessVector(
                    f"witness {j} for {b!r} has length {raw.size}; expected "
                    f"{block_dim} (eigenspace) or {space_dim} (full space)"
                )
            if not is_unit_vector(full):
                raise InvalidWitnessVector(f"witness {j} for {b!r} is not a unit vector")
            v += math.sqrt(n / total) * full
            proj = np.zeros((space_dim, space_dim), dtype=np.complex128)
            proj[block, block] = np.eye(block_dim)
            terms.append((lam, proj))
            offset += block_dim
        mu = _padding_values(record, aux, b, space_dim - offset)
        for k, value in enumerate(mu):
            proj = np.zeros((space_dim, space_dim), dtype=np.complex128)
            proj[offset + k, offset + k] = 1.0
            terms.append((value, proj))
        vectors[b] = v
        spectra[b] = terms

    commands = record.commands
    return Model(
        HilbertSpace(space_dim),
        StateFn(vectors),
        UnitaryFn.identity(commands, space_dim),
        MeasurementFn(spectra),
        commands,
    )


def construct_orthogonal_pair(record: OutcomeRecord,
                              eigenspace_dim: int = 2) -> tuple[Model, Model]:
    """Two perfect fits of the same record with orthogonal prepared states.

    Both models use the same two-dimensional eigenspaces; the first places its
    witness vectors on the first basis vector of each eigenspace, the second on
    the second.  Per-eigenspace orthogonality makes every pair of prepared
    states orthogonal, so the overlap bound on statistical distance is as loose
    as it can get while the two fits remain observationally identical on the
    recorded measurement.
    """
    if eigenspace_dim < 2:
        raise ValueError("eigenspace dimension must be >= 2")

    def w_first(j: int, b: Command) -> np.ndarray:
        return basis_vector(eigenspace_dim, 0)

    def w_second(j: int, b: Command) -> np.ndarray:
        return basis_vector(eigenspace_dim, 1)

    first = construct_fitting_model_general(record, eigenspace_dim, w_first)
    second = construct_fitting_model_general(record, eigenspace_dim, w_second)
    return first, second


# ---------------------------------------------------------------------------
# telling fits apart
# ---------------------------------------------------------------------------

def distinguish_by_witness(
    model_a: Model,
    model_b: Model,
    phases: Sequence[float] = WITNESS_PHASES,
) -> tuple[MeasurementFn, float]:
    """Search a fixed family of witness measurements for maximal disagreement.

    The family consists of projectors onto ``(|a> + e^{i theta} |c>)/sqrt(2)``
    for every computational-basis pair ``a < c`` and every relative phase in
    ``phases``.  Returns the best two-outcome measurement (eigenvalues 1 and 0,
    defined on the shared command set) together with the largest probability
    gap it achieves over all commands.  A gap of zero within 1e-9 means the
    two models agree on every witness in the family.
    """
    if model_a.space.dim != model_b.space.dim:
        raise DimensionMismatch("models must share a dimension to compare witnesses")
    shared = [b for b in model_a.commands if b in set(model_b.commands)]
    if not shared:
        raise CommandNotInSet("models share no commands")

    dim = model_a.space.dim
    prepared_a = {b: model_a.u(b) @ model_a.v(b) for b in shared}
    prepared_b = {b: model_b.u(b) @ model_b.v(b) for b in shared}

    best_gap = -1.0
    best_vector: np.ndarray | None = None
    for a in range(dim):
        for c in range(a + 1, dim):
            for theta in phases:
                u = np.zeros(dim, dtype=np.complex128)
                u[a] = 1.0 / math.sqrt(2.0)
                u[c] = cmath.exp(1j * theta) / math.sqrt(2.0)
                for b in shared:
                    pa = abs(np.vdot(u, prepared_a[b])) ** 2
                    pb = abs(np.vdot(u, prepared_b[b])) ** 2
                    gap = abs(pa - pb)
                    if gap > best_gap:
                        best_gap = gap
                        best_vector = u

    assert best_vector is not None
    proj = projector_onto(best_vector)
    complement = np.eye(dim, dtype=np.complex128) - proj
    witness = MeasurementFn({b: [(1.0, proj), (0.0, complement)] for b in shared})
    return witness, float(best_gap)


# ---------------------------------------------------------------------------
# model serialization
# ---------------------------------------------------------------------------

def _matrix_to_json(a: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(a)]


def _matrix_from_json(rows: Sequence) -> np.ndarray:
    return np.array(
        [[complex(re, im) for re, im in row] for row in rows], dtype=np.complex128
    )


def _vector_to_json(v: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v)]


def _vector_from_json(items: Sequence) -> np.ndarray:
    return np.array([complex(re, im) for re, im in items], dtype=np.complex128)


def model_to_json_obj(model: Model) -> dict:
    """JSON form with row-major complex matrices as [re, im] pairs."""
    return {
        "dim": model.space.dim,
        "commands": [b.to_hex() for b in model.commands],
        "state": {b.to_hex(): _vector_to_json(model.v(b)) for b in model.commands},
        "unitary": {b.to_hex(): _matrix_to_json(model.u(b)) for b in model.commands},
        "measurement": {
            b.to_hex(): [
                {"value": t.value, "projector": _matrix_to_json(t.projector)}
                for t in model.m(b)
            ]
            for b in model.commands
        },
    }


def model_from_json_obj(obj: Mapping) -> Model:
    commands = [Command.from_hex(h) for h in obj["commands"]]
    vectors = {Command.from_hex(h): _vector_from_json(v) for h, v in obj["state"].items()}
    matrices = {Command.from_hex(h): _matrix_from_json(u) for h, u in obj["unitary"].items()}
    spectra = {
        Command.from_hex(h): [(row["value"], _matrix_from_json(row["projector"])) for row in rows]
        for h, rows in obj["measurement"].items()
    }
    return Model(
        HilbertSpace(int(obj["dim"])),
        StateFn(vectors),
        UnitaryFn(matrices),
        MeasurementFn(spectra),
        tuple(commands),
    )


def models_equal(a: Model, b: Model, atol: float = 1e-12) -> bool:
    """Numeric equality of serialized forms within ``atol``.

    Commands, dimensions and spectral-term order must match exactly; all
    vector and matrix entries (and eigenvalues) may differ by at most ``atol``.
    """
    if a.space.dim != b.space.dim or a.commands != b.commands:
        return False
    for cmd in a.commands:
        if np.max(np.abs(a.v(cmd) - b.v(cmd))) > atol:
            return False
        if np.max(np.abs(a.u(cmd) - b.u(cmd))) > atol:
            return False
        ta, tb = a.m(cmd), b.m(cmd)
        if len(ta) != len(tb):
            return False
        for x, y in zip(ta, tb):
            if abs(x.value - y.value) > atol:
                return False
            if np.max(np.abs(x.projector - y.projector)) > atol:
                return False
    return True
