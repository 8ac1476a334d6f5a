"""Finite model sets, narrowing predicates, and best-fit selection.

A guess about an instrument is rarely a single model; it is a set of models
compatible with what has been observed, ordered by inclusion.  Narrowing that
set (by structural assumptions such as command-split independence or unitary
composition) moves down the lattice; ``meet`` and ``join`` are plain
intersection and union under numeric model identity.  ``select_best_fit``
picks the member closest to an outcome record, and cannot do better than the
record allows: distinct models that fit equally well stay tied.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadSplit,
    CommandNotInSet,
    EmptyModelSet,
    NotMaterialized,
)
from .qm_model import Command, Model, OutcomeRecord, models_equal
from .stat_distance import CommandWeights, weighted_model_distance

#: numeric identity tolerance for set membership
IDENTITY_ATOL = 1e-12

#: tolerance for structural property checks (function equality across commands)
PROPERTY_ATOL = 1e-9

#: best-fit scores within this of each other count as tied
SCORE_ATOL = 1e-9


@dataclass(frozen=True)
class NarrowingPredicate:
    """A named membership test used to narrow a model set."""

    name: str
    test: Callable[[Model], bool]

    def __call__(self, model: Model) -> bool:
        return bool(self.test(model))

    @classmethod
    def from_command_split(cls, split: "CommandSplit") -> "NarrowingPredicate":
        return cls(f"component-independent[{split.name}]",
                   lambda model: check_component_independence(model, split))

    @classmethod
    def from_composition(cls, commands: Sequence[Command]) -> "NarrowingPredicate":
        frozen = tuple(commands)
        return cls("composition-respecting",
                   lambda model: check_composition(model.u, frozen))


@dataclass(frozen=True)
class ParametricFamily:
    """A generator over a finite parameter grid, enumerated lazily."""

    generator: Callable[[tuple[float, ...]], Model]
    grid: tuple[tuple[float, ...], ...]
    name: str = ""


@dataclass(frozen=True)
class ModelSet:
    """Either an explicit tuple of models or an unenumerated family.

    Explicit sets always satisfy their predicates (construction filters);
    family-backed sets postpone both enumeration and filtering until
    ``materialize``.
    """

    members: tuple[Model, ...] | None = None
    family: ParametricFamily | None = None
    predicates: tuple[NarrowingPredicate, ...] = field(default=())

    def __post_init__(self) -> None:
        if (self.members is None) == (self.family is None):
            raise ValueError("provide exactly one of members or family")

    @classmethod
    def of_models(cls, models: Iterable[Model],
                  predicates: Iterable[NarrowingPredicate] = ()) -> "ModelSet":
        preds = tuple(predicates)
        kept = tuple(m for m in models if all(p(m) for p in preds))
        return cls(members=kept, predicates=preds)

    @classmethod
    def of_family(cls, family: ParametricFamily,
                  predicates: Iterable[NarrowingPredicate] = ()) -> "ModelSet":
        return cls(family=family, predicates=tuple(predicates))

    @property
    def is_materialized(self) -> bool:
        return self.members is not None

    def materialize(self) -> "ModelSet":
        """Enumerate the grid (if any) and apply every predicate."""
        if self.members is not None:
            return self
        assert self.family is not None
        generated = (self.family.generator(theta) for theta in self.family.grid)
        kept = tuple(m for m in generated if all(p(m) for p in self.predicates))
        return ModelSet(members=kept, predicates=self.predicates)

    def narrowed(self, predicate: NarrowingPredicate) -> "ModelSet":
        """Attach one more predicate; filters immediately when explicit."""
        preds = self.predicates + (predicate,)
        if self.members is not None:
            return ModelSet(
                members=tuple(m for m in self.members if predicate(m)),
                predicates=preds,
            )
        return ModelSet(family=self.family, predicates=preds)

    def require_members(self) -> tuple[Model, ...]:
        if self.members is None:
            raise NotMaterialized("materialize the family before using set operations")
        return self.members

    def __len__(self) -> int:
        return len(self.require_members())

    def __iter__(self):
        return iter(self.require_members())


def _contains(models: Sequence[Model], candidate: Model) -> bool:
    return any(models_equal(m, candidate, IDENTITY_ATOL) for m in models)


def meet(a: ModelSet, b: ModelSet) -> ModelSet:
    """Intersection under numeric model identity; keeps a's order."""
    left = a.require_members()
    right = b.require_members()
    kept = tuple(m for m in left if _contains(right, m))
    return ModelSet(members=kept, predicates=a.predicates + b.predicates)


def join(a: ModelSet, b: ModelSet) -> ModelSet:
    """Union under numeric model identity; a's members first, then new ones."""
    left = a.require_members()
    right = b.require_members()
    extra = tuple(m for m in right if not _contains(left, m))
    return ModelSet(members=left + extra, predicates=())


# ---------------------------------------------------------------------------
# structural properties as predicates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CommandSplit:
    """Decomposition of each command into state/unitary/measurement parts.

    ``parts(b)`` returns ``(b_v, b_u, b_m)`` whose concatenation must equal
    ``b``; anything else (including a missing entry) is a bad split.
    """

    parts: Callable[[Command], tuple[Command, Command, Command]]
    name: str = "split"

    def __call__(self, b: Command) -> tuple[Command, Command, Command]:
        try:
            b_v, b_u, b_m = self.parts(b)
        except (KeyError, TypeError, ValueError) as exc:
            raise BadSplit(f"split does not cover {b!r}") from exc
        if b_v.concat(b_u).concat(b_m) != b:
            raise BadSplit(
                f"split of {b!r} reassembles to {b_v.concat(b_u).concat(b_m)!r}"
            )
        return b_v, b_u, b_m

    @classmethod
    def by_lengths(cls, len_v: int, len_u: int, len_m: int) -> "CommandSplit":
        def parts(b: Command) -> tuple[Command, Command, Command]:
            if len(b) != len_v + len_u + len_m:
                raise BadSplit(
                    f"command {b!r} has length {len(b)}, split expects "
                    f"{len_v + len_u + len_m}"
                )
            bits = b.bits
            return (
                Command(bits[:len_v]),
                Command(bits[len_v:len_v + len_u]),
                Command(bits[len_v + len_u:]),
            )

        return cls(parts, name=f"lengths({len_v},{len_u},{len_m})")


def _measurements_agree(model: Model, b1: Command, b2: Command, atol: float) -> bool:
    t1, t2 = model.m(b1), model.m(b2)
    if len(t1) != len(t2):
        return False
    for x, y in zip(t1, t2):
        if abs(x.value - y.value) > atol:
            return False
        if np.max(np.abs(x.projector - y.projector)) > atol:
            return False
    return True


def check_component_independence(model: Model, split: CommandSplit,
                                 atol: float = PROPERTY_ATOL) -> bool:
    """Does each function depend only on its own slice of the command?

    For every pair of commands whose state slices agree, the prepared states
    must agree (within ``atol``); likewise for the unitary and measurement
    slices.  Models built from genuinely separate per-component tables pass;
    any cross-talk fails.
    """
    commands = model.commands
    splits = {b: split(b) for b in commands}
    for i, b1 in enumerate(commands):
        for b2 in commands[i + 1:]:
            s1, s2 = splits[b1], splits[b2]
            if s1[0] == s2[0] and np.max(np.abs(model.v(b1) - model.v(b2))) > atol:
                return False
            if s1[1] == s2[1] and np.max(np.abs(model.u(b1) - model.u(b2))) > atol:
                return False
            if s1[2] == s2[2] and not _measurements_agree(model, b1, b2, atol):
                return False
    return True


def check_composition(u, commands: Sequence[Command],
                      atol: float = PROPERTY_ATOL) -> bool:
    """Does the unitary respect concatenation, ``U(b1 || b2) = U(b2) U(b1)``?

    The command sent first acts first, so the matrix order is reversed.
    Every pairwise concatenation (including with the empty word, which forces
    ``U`` of the empty word to be the identity when it is present) must lie in
    ``u``'s domain.
    """
    frozen = tuple(commands)
    domain = set(u.commands)
    for b1 in frozen:
        for b2 in frozen:
            joined = b1.concat(b2)
            if joined not in domain:
                raise CommandNotInSet(
                    f"concatenation {joined!r} is outside the unitary's domain"
                )
            if np.max(np.abs(u(joined) - u(b2) @ u(b1))) > atol:
                return False
    return True


# ---------------------------------------------------------------------------
# best fit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BestFit:
    model: Model
    score: float
    index: int


def select_best_fit(candidates: ModelSet, record: OutcomeRecord,
                    weights: CommandWeights) -> BestFit:
    """Member with minimal weighted distance to the record.

    Scores within 1e-9 of the current best count as ties, and ties are broken
    by enumeration order (the earlier member wins), so equally perfect fits
    resolve deterministically rather than by floating-point noise.
    """
    members = candidates.require_members()
    if not members:
        raise EmptyModelSet("cannot select from an empty model set")
    best: BestFit | None = None
    for index, model in enumerate(members):
        score = weighted_model_distance(model, record, weights)
        if best is None or score < best.score - SCORE_ATOL:
            best = BestFit(model=model, score=score, index=index)
    assert best is not None
    return best
