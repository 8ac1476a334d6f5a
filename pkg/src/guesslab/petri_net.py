"""Colored condition-event net fragments with exogenous boundary states.

A fragment is a condition-event net (every state holds at most one token)
whose boundary carries dedicated input and output states: the only way the
environment touches the net is by injecting tokens into input states and
extracting them from output states.  Tokens are colored by structured values,
and each event carries a partial color function: an event is enabled only
when its input colors lie in the function's domain, which is how data
constraints become control flow.

Two morphisms connect levels of description.  ``refine_colors`` trades color
detail for net detail by splitting every event along a partition of the color
sets; ``coarsen_events`` merges such a split back.  ``coarsen_colors`` drops
colors entirely (black tokens), a surjection that preserves firing sequences
in one direction only.  ``reduced_net`` removes the exogenous boundary so the
remainder can be analyzed as a classical net, and ``couple`` composes two
fragments through signal states that hand a token from a tock event of one
machine to a tick event of the other.
"""

from __future__ import annotations

import itertools
import json
from abc import ABC, abstractmethod
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadPartition,
    BadPhase,
    CapacityViolation,
    InvalidColor,
    NetValidationError,
    NoToken,
    NotEnabled,
    StateSpaceTooLarge,
)

# ---------------------------------------------------------------------------
# colors and tokens
# ---------------------------------------------------------------------------

class _Reserved:
    """Singleton sentinel colors; identity-based equality keeps them distinct
    from any user string."""

    _instances: dict[str, "_Reserved"] = {}

    def __new__(cls, name: str) -> "_Reserved":
        if name not in cls._instances:
            instance = super().__new__(cls)
            instance._name = name
            cls._instances[name] = instance
        return cls._instances[name]

    def __repr__(self) -> str:
        return f"<{self._name}>"

    @property
    def name(self) -> str:
        return self._name


#: the reserved "nothing entered" color used by clocked buffers
EMPTY = _Reserved("empty")

#: the color of tokens in a fully coarsened net
BLACK = _Reserved("black")

Color = object  # str | int | bytes | tuple[Color, ...] | _Reserved


def is_color(x) -> bool:
    if isinstance(x, (_Reserved, str, bytes)):
        return True
    if isinstance(x, int) and not isinstance(x, bool):
        return True
    if isinstance(x, tuple):
        return all(is_color(item) for item in x)
    return False


def encode_color(color) -> object:
    """JSON-encodable form of a color (strings and ints pass through)."""
    if isinstance(color, _Reserved):
        return {"reserved": color.name}
    if isinstance(color, bytes):
        return {"bytes": color.hex()}
    if isinstance(color, tuple):
        return [encode_color(item) for item in color]
    if isinstance(color, (str, int)):
        return color
    raise InvalidColor(f"not a color: {color!r}")


def decode_color(obj) -> Color:
    if isinstance(obj, dict):
        if "reserved" in obj:
            return _Reserved(obj["reserved"])
        if "bytes" in obj:
            return bytes.fromhex(obj["bytes"])
        raise InvalidColor(f"unknown color encoding: {obj!r}")
    if isinstance(obj, list):
        return tuple(decode_color(item) for item in obj)
    if isinstance(obj, (str, int)):
        return obj
    raise InvalidColor(f"unknown color encoding: {obj!r}")


@dataclass(frozen=True)
class Token:
    """A colored token; the color is the whole of its identity."""

    color: Color = EMPTY

    def __post_init__(self) -> None:
        if not is_color(self.color):
            raise InvalidColor(f"not a color: {self.color!r}")


# ---------------------------------------------------------------------------
# color functions
# ---------------------------------------------------------------------------

class ColorFunction(ABC):
    """A partial function from input color tuples to output color tuples."""

    @abstractmethod
    def defined_on(self, colors: tuple) -> bool: ...

    @abstractmethod
    def apply(self, colors: tuple) -> tuple: ...


class TableColorFunction(ColorFunction):
    """An explicit finite table; the domain is exactly its keys."""

    def __init__(self, table: Mapping[tuple, tuple]):
        frozen: dict[tuple, tuple] = {}
        for key, value in table.items():
            key = tuple(key)
            value = tuple(value)
            if not all(is_color(c) for c in key + value):
                raise InvalidColor(f"table entry {key!r} -> {value!r} uses non-colors")
            frozen[key] = value
        if not frozen:
            raise NetValidationError("color-function table is empty")
        self.table = frozen

    def defined_on(self, colors: tuple) -> bool:
        return tuple(colors) in self.table

    def apply(self, colors: tuple) -> tuple:
        return self.table[tuple(colors)]


class IdentityColorFunction(ColorFunction):
    """Total; passes input colors through unchanged (arities must agree)."""

    def defined_on(self, colors: tuple) -> bool:
        return True

    def apply(self, colors: tuple) -> tuple:
        return tuple(colors)


class BlackColorFunction(ColorFunction):
    """Total; produces black tokens regardless of input."""

    def __init__(self, out_arity: int):
        self.out_arity = int(out_arity)

    def defined_on(self, colors: tuple) -> bool:
        return True

    def apply(self, colors: tuple) -> tuple:
        return (BLACK,) * self.out_arity


class ConstColorFunction(ColorFunction):
    """Total; produces a fixed output tuple."""

    def __init__(self, outputs: Sequence[Color]):
        self.outputs = tuple(outputs)
        if not all(is_color(c) for c in self.outputs):
            raise InvalidColor("constant outputs must be colors")

    def defined_on(self, colors: tuple) -> bool:
        return True

    def apply(self, colors: tuple) -> tuple:
        return self.outputs


class RestrictedColorFunction(ColorFunction):
    """A base function restricted to per-position color blocks."""

    def __init__(self, base: ColorFunction, blocks: Sequence[frozenset]):
        self.base = base
        self.blocks = tuple(frozenset(b) for b in blocks)

    def defined_on(self, colors: tuple) -> bool:
        colors = tuple(colors)
        if len(colors) != len(self.blocks):
            return False
        if any(c not in block for c, block in zip(colors, self.blocks)):
            return False
        return self.base.defined_on(colors)

    def apply(self, colors: tuple) -> tuple:
        return self.base.apply(tuple(colors))


class _SignalEmit(ColorFunction):
    """Wraps a coupled tock event: appends the signal message to its outputs."""

    def __init__(self, base: ColorFunction, message: Color):
        self.base = base
        self.message = message

    def defined_on(self, colors: tuple) -> bool:
        return self.base.defined_on(colors)

    def apply(self, colors: tuple) -> tuple:
        return self.base.apply(colors) + (self.message,)


class _SignalAwait(ColorFunction):
    """Wraps a coupled tick event: requires and consumes a trailing signal."""

    def __init__(self, base: ColorFunction, colors: frozenset):
        self.base = base
        self.signal_colors = frozenset(colors)

    def defined_on(self, colors: tuple) -> bool:
        colors = tuple(colors)
        if not colors or colors[-1] not in self.signal_colors:
            return False
        return self.base.defined_on(colors[:-1])

    def apply(self, colors: tuple) -> tuple:
        return self.base.apply(tuple(colors)[:-1])


def materialize_color_function(fn: ColorFunction,
                               input_sets: Sequence[frozenset]) -> dict[tuple, tuple]:
    """Enumerate a function's graph over the finite product of color sets."""
    graph: dict[tuple, tuple] = {}
    for combo in itertools.product(*input_sets):
        if fn.defined_on(combo):
            graph[combo] = fn.apply(combo)
    return graph


# ---------------------------------------------------------------------------
# fragments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Event:
    """One event: ordered input and output arcs plus a color function.

    ``phase`` optionally tags the event as a "tick" or "tock" so it can take
    part in signal coupling; the signal consumes a token at a tock and
    delivers it to a tick, opposite to the phase at which a state machine
    would read its own inputs.
    """

    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    color_fn: ColorFunction
    phase: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if self.phase not in (None, "tick", "tock"):
            raise NetValidationError(f"phase must be tick/tock/None, got {self.phase!r}")


class NetFragment:
    """A colored condition-event net with exogenous input/output states."""

    def __init__(self,
                 states: Mapping[str, Iterable[Color]],
                 events: Mapping[str, Event],
                 inputs: Mapping[str, Iterable[Color]] | None = None,
                 outputs: Mapping[str, Iterable[Color]] | None = None):
        self.states = {s: frozenset(colors) for s, colors in states.items()}
        self.inputs = {s: frozenset(colors) for s, colors in (inputs or {}).items()}
        self.outputs = {s: frozenset(colors) for s, colors in (outputs or {}).items()}
        self.events = dict(events)
        self._validate()

    # -- structure ----------------------------------------------------------

    def _validate(self) -> None:
        groups = [set(self.states), set(self.inputs), set(self.outputs), set(self.events)]
        for i in range(len(groups)):
            for k in range(i + 1, len(groups)):
                overlap = groups[i] & groups[k]
                if overlap:
                    raise NetValidationError(f"identifiers reused across kinds: {sorted(overlap)}")
        for table in (self.states, self.inputs, self.outputs):
            for s, colors in table.items():
                if not colors:
                    raise NetValidationError(f"state {s!r} has an empty color set")
                for c in colors:
                    if not is_color(c):
                        raise InvalidColor(f"state {s!r} declares non-color {c!r}")
        if not self.events:
            raise NetValidationError("a fragment needs at least one event")
        sources = set(self.states) | set(self.inputs)
        targets = set(self.states) | set(self.outputs)
        for eid, event in self.events.items():
            if not event.inputs:
                raise NetValidationError(f"event {eid!r} has no input arc")
            if not event.outputs:
                raise NetValidationError(f"event {eid!r} has no output arc")
            if len(set(event.inputs)) != len(event.inputs):
                raise NetValidationError(f"event {eid!r} reads a state twice")
            if len(set(event.outputs)) != len(event.outputs):
                raise NetValidationError(f"event {eid!r} writes a state twice")
            for s in event.inputs:
                if s not in sources:
                    raise NetValidationError(
                        f"event {eid!r} reads {s!r}, which is not an internal or input state"
                    )
            for s in event.outputs:
                if s not in targets:
                    raise NetValidationError(
                        f"event {eid!r} writes {s!r}, which is not an internal or output state"
                    )
            loop = set(event.inputs) & set(event.outputs)
            if loop:
                raise NetValidationError(f"event {eid!r} forms a self-loop on {sorted(loop)}")
            self._validate_function(eid, event)

    def _validate_function(self, eid: str, event: Event) -> None:
        fn = event.color_fn
        if isinstance(fn, IdentityColorFunction) and len(event.inputs) != len(event.outputs):
            raise NetValidationError(
                f"event {eid!r} uses identity colors but has unequal arities"
            )
        if isinstance(fn, ConstColorFunction) and len(fn.outputs) != len(event.outputs):
            raise NetValidationError(
                f"event {eid!r} constant function arity does not match its outputs"
            )
        if isinstance(fn, TableColorFunction):
            in_sets = [self.color_set(s) for s in event.inputs]
            out_sets = [self.color_set(s) for s in event.outputs]
            for key, value in fn.table.items():
                if len(key) != len(event.inputs) or len(value) != len(event.outputs):
                    raise NetValidationError(
                        f"event {eid!r} table entry {key!r} has the wrong arity"
                    )
                for c, allowed in zip(key, in_sets):
                    if c not in allowed:
                        raise NetValidationError(
                            f"event {eid!r} table reads color {c!r} outside its input set"
                        )
                for c, allowed in zip(value, out_sets):
                    if c not in allowed:
                        raise NetValidationError(
                            f"event {eid!r} table writes color {c!r} outside its output set"
                        )

    def color_set(self, state: str) -> frozenset:
        for table in (self.states, self.inputs, self.outputs):
            if state in table:
                return table[state]
        raise NetValidationError(f"unknown state {state!r}")

    def all_state_ids(self) -> tuple[str, ...]:
        return tuple(self.states) + tuple(self.inputs) + tuple(self.outputs)


# ---------------------------------------------------------------------------
# markings and firing
# ---------------------------------------------------------------------------

class Marking:
    """An immutable assignment of at most one token per state."""

    def __init__(self, tokens: Mapping[str, Token | Color] | None = None):
        frozen: dict[str, Token] = {}
        for state, value in (tokens or {}).items():
            frozen[state] = value if isinstance(value, Token) else Token(value)
        self._tokens = frozen

    def get(self, state: str) -> Token | None:
        return self._tokens.get(state)

    def has(self, state: str) -> bool:
        return state in self._tokens

    def items(self):
        return self._tokens.items()

    def marked_states(self) -> frozenset[str]:
        return frozenset(self._tokens)

    def key(self) -> frozenset:
        """Hashable identity: the set of (state, color) pairs."""
        return frozenset((s, t.color) for s, t in self._tokens.items())

    def replaced(self, remove: Iterable[str], add: Mapping[str, Token]) -> "Marking":
        tokens = dict(self._tokens)
        for state in remove:
            tokens.pop(state, None)
        tokens.update(add)
        return Marking(tokens)

    def __eq__(self, other) -> bool:
        return isinstance(other, Marking) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        inside = ", ".join(f"{s}={t.color!r}" for s, t in sorted(self._tokens.items()))
        return f"Marking({inside})"


def validate_marking(net: NetFragment, marking: Marking) -> None:
    for state, token in marking.items():
        allowed = net.color_set(state)  # raises for unknown states
        if token.color not in allowed:
            raise InvalidColor(
                f"token color {token.color!r} is outside the color set of {state!r}"
            )


def enabled_events(net: NetFragment, marking: Marking) -> tuple[str, ...]:
    """Events whose inputs are all filled with colors in the function domain
    and whose outputs are all free.  Sorted for determinism."""
    enabled = []
    for eid in sorted(net.events):
        event = net.events[eid]
        tokens = [marking.get(s) for s in event.inputs]
        if any(t is None for t in tokens):
            continue
        if any(marking.has(s) for s in event.outputs):
            continue
        colors = tuple(t.color for t in tokens)  # type: ignore[union-attr]
        if event.color_fn.defined_on(colors):
            enabled.append(eid)
    return tuple(enabled)


def fire(net: NetFragment, marking: Marking, event_id: str) -> Marking:
    """Fire one enabled event; pure, so replaying a trace is trivial."""
    if event_id not in net.events:
        raise NetValidationError(f"unknown event {event_id!r}")
    if event_id not in enabled_events(net, marking):
        raise NotEnabled(f"event {event_id!r} is not enabled")
    event = net.events[event_id]
    colors = tuple(marking.get(s).color for s in event.inputs)  # type: ignore[union-attr]
    produced = event.color_fn.apply(colors)
    if len(produced) != len(event.outputs):
        raise NetValidationError(
            f"event {event_id!r} produced {len(produced)} colors for "
            f"{len(event.outputs)} outputs"
        )
    add = {}
    for state, color in zip(event.outputs, produced):
        if color not in net.color_set(state):
            raise InvalidColor(
                f"event {event_id!r} writes color {color!r} outside the set of {state!r}"
            )
        add[state] = Token(color)
    return marking.replaced(event.inputs, add)


def inject(net: NetFragment, marking: Marking, state: str, token: Token) -> Marking:
    """Place a token on an exogenous input state."""
    if state not in net.inputs:
        raise NetValidationError(f"{state!r} is not an input state")
    if marking.has(state):
        raise CapacityViolation(f"input state {state!r} already holds a token")
    if token.color not in net.inputs[state]:
        raise InvalidColor(
            f"color {token.color!r} is outside the color set of input {state!r}"
        )
    return marking.replaced((), {state: token})


def extract(net: NetFragment, marking: Marking, state: str) -> tuple[Token, Marking]:
    """Remove and return the token on an exogenous output state."""
    if state not in net.outputs:
        raise NetValidationError(f"{state!r} is not an output state")
    token = marking.get(state)
    if token is None:
        raise NoToken(f"output state {state!r} is empty")
    return token, marking.replaced((state,), {})


# ---------------------------------------------------------------------------
# refinement and coarsening
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RefineResult:
    """A refined net plus the event surjection back to the original.

    Markings are untouched by refinement (states and colors are identical),
    so the marking bijection is the identity; only events are renamed.
    """

    net: NetFragment
    event_map: Mapping[str, str]


def _validated_partition(net: NetFragment,
                         partition: Mapping[str, Sequence[Iterable[Color]]]
                         ) -> dict[str, tuple[frozenset, ...]]:
    known = set(net.all_state_ids())
    for state in partition:
        if state not in known:
            raise BadPartition(f"partition names unknown state {state!r}")
    blocks_by_state: dict[str, tuple[frozenset, ...]] = {}
    for state in net.all_state_ids():
        colors = net.color_set(state)
        if state not in partition:
            blocks_by_state[state] = (colors,)
            continue
        blocks = tuple(frozenset(b) for b in partition[state])
        if any(not b for b in blocks):
            raise BadPartition(f"partition of {state!r} has an empty block")
        union: set = set()
        count = 0
        for b in blocks:
            union |= b
            count += len(b)
        if union != set(colors) or count != len(colors):
            raise BadPartition(
                f"partition of {state!r} does not split its color set exactly"
            )
        blocks_by_state[state] = blocks
    return blocks_by_state


def refine_colors(net: NetFragment,
                  partition: Mapping[str, Sequence[Iterable[Color]]]) -> RefineResult:
    """Split each event along a partition of its input color sets.

    For every combination of one block per input state whose intersection with
    the color-function domain is nonempty, the event gains a variant whose
    function is the restriction to that combination.  Colors, states and
    markings are unchanged; the count of variants equals the number of
    nonempty domain restrictions.
    """
    blocks_by_state = _validated_partition(net, partition)
    new_events: dict[str, Event] = {}
    event_map: dict[str, str] = {}
    for eid in sorted(net.events):
        event = net.events[eid]
        input_blocks = [blocks_by_state[s] for s in event.inputs]
        variant = 0
        for combo in itertools.product(*input_blocks):
            restricted = RestrictedColorFunction(event.color_fn, combo)
            domain = materialize_color_function(restricted, combo)
            if not domain:
                continue
            variant += 1
            new_id = f"{eid}__{variant}"
            new_events[new_id] = Event(event.inputs, event.outputs, restricted, event.phase)
            event_map[new_id] = eid
    refined = NetFragment(net.states, new_events, net.inputs, net.outputs)
    return RefineResult(net=refined, event_map=event_map)


def coarsen_events(refined: NetFragment,
                   event_map: Mapping[str, str]) -> NetFragment:
    """Merge refined event variants back into single events.

    The inverse of ``refine_colors``: variants mapping to the same original
    event are merged, their restricted color functions unioned into one table.
    """
    grouped: dict[str, list[str]] = {}
    for new_id in refined.events:
        if new_id not in event_map:
            raise NetValidationError(f"event map misses refined event {new_id!r}")
        grouped.setdefault(event_map[new_id], []).append(new_id)
    merged: dict[str, Event] = {}
    for original, variants in grouped.items():
        first = refined.events[variants[0]]
        table: dict[tuple, tuple] = {}
        for vid in variants:
            event = refined.events[vid]
            if event.inputs != first.inputs or event.outputs != first.outputs:
                raise NetValidationError(
                    f"variants of {original!r} disagree on their arcs"
                )
            in_sets = [refined.color_set(s) for s in event.inputs]
            table.update(materialize_color_function(event.color_fn, in_sets))
        merged[original] = Event(first.inputs, first.outputs,
                                 TableColorFunction(table), first.phase)
    return NetFragment(refined.states, merged, refined.inputs, refined.outputs)


def coarsen_colors(net: NetFragment) -> NetFragment:
    """Forget colors: every set becomes {black}, every function total.

    Any legal colored firing sequence replays on the result (see
    ``blacken_marking``), but the black net may enable firings the colored
    net forbade; the morphism is a surjection, not an isomorphism.
    """
    black = frozenset({BLACK})
    events = {
        eid: Event(e.inputs, e.outputs, BlackColorFunction(len(e.outputs)), e.phase)
        for eid, e in net.events.items()
    }
    return NetFragment(
        {s: black for s in net.states},
        events,
        {s: black for s in net.inputs},
        {s: black for s in net.outputs},
    )


def blacken_marking(marking: Marking) -> Marking:
    return Marking({s: Token(BLACK) for s, _ in marking.items()})


def nets_structurally_equal(a: NetFragment, b: NetFragment) -> bool:
    """Equality of states, color sets, arcs, phases, and function graphs."""
    if (a.states != b.states or a.inputs != b.inputs or a.outputs != b.outputs
            or set(a.events) != set(b.events)):
        return False
    for eid, ea in a.events.items():
        eb = b.events[eid]
        if ea.inputs != eb.inputs or ea.outputs != eb.outputs or ea.phase != eb.phase:
            return False
        in_sets = [a.color_set(s) for s in ea.inputs]
        if materialize_color_function(ea.color_fn, in_sets) != \
                materialize_color_function(eb.color_fn, in_sets):
            return False
    return True


# ---------------------------------------------------------------------------
# classical reduction and analysis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReducedNet:
    """The classical net left after dropping exogenous states and their arcs.

    Events keep only their internal arcs, so an event wired entirely to the
    boundary may end up with an empty pre- or post-set.
    """

    states: frozenset[str]
    events: Mapping[str, tuple[tuple[str, ...], tuple[str, ...]]]


def reduced_net(net: NetFragment) -> ReducedNet:
    internal = set(net.states)
    events = {
        eid: (
            tuple(s for s in e.inputs if s in internal),
            tuple(s for s in e.outputs if s in internal),
        )
        for eid, e in net.events.items()
    }
    return ReducedNet(states=frozenset(internal), events=events)


@dataclass(frozen=True)
class AnalysisResult:
    reachable: frozenset[frozenset[str]]
    live_events: frozenset[str]
    dead_events: frozenset[str]
    contact_pairs: tuple[tuple[frozenset[str], str], ...]


def analyze(net: "ReducedNet | NetFragment", initial: Iterable[str],
            bound: int = 10_000) -> AnalysisResult:
    """Exhaustive reachability over the color-abstracted classical net.

    Markings are sets of marked states (capacity one holds by construction:
    an event blocked by an occupied output simply does not fire; such contact
    situations are reported rather than treated as reachable violations).
    An event is live when, from every reachable marking, some marking where
    it is enabled remains reachable.
    """
    classical = reduced_net(net) if isinstance(net, NetFragment) else net
    start = frozenset(initial)
    unknown = start - classical.states
    if unknown:
        raise NetValidationError(f"initial marking uses unknown states: {sorted(unknown)}")

    def enabled(m: frozenset[str], eid: str) -> bool:
        pre, post = classical.events[eid]
        return set(pre) <= m and not (set(post) & m)

    def successor(m: frozenset[str], eid: str) -> frozenset[str]:
        pre, post = classical.events[eid]
        return frozenset((m - set(pre)) | set(post))

    reachable: set[frozenset[str]] = {start}
    edges: dict[frozenset[str], list[frozenset[str]]] = {start: []}
    enabled_at: dict[str, set[frozenset[str]]] = {eid: set() for eid in classical.events}
    contact: list[tuple[frozenset[str], str]] = []
    frontier = [start]
    while frontier:
        m = frontier.pop()
        for eid in sorted(classical.events):
            pre, post = classical.events[eid]
            if not set(pre) <= m:
                continue
            if set(post) & m:
                contact.append((m, eid))
                continue
            enabled_at[eid].add(m)
            nxt = successor(m, eid)
            edges[m].append(nxt)
            if nxt not in reachable:
                if len(reachable) >= bound:
                    raise StateSpaceTooLarge(
                        f"more than {bound} reachable markings"
                    )
                reachable.add(nxt)
                edges.setdefault(nxt, [])
                frontier.append(nxt)

    reverse: dict[frozenset[str], list[frozenset[str]]] = {m: [] for m in reachable}
    for src, dsts in edges.items():
        for dst in dsts:
            reverse[dst].append(src)

    live: set[str] = set()
    dead: set[str] = set()
    for eid, where in enabled_at.items():
        if not where:
            dead.add(eid)
            continue
        can_reach = set(where)
        stack = list(where)
        while stack:
            node = stack.pop()
            for prev in reverse[node]:
                if prev not in can_reach:
                    can_reach.add(prev)
                    stack.append(prev)
        if can_reach == reachable:
            live.add(eid)
    return AnalysisResult(
        reachable=frozenset(reachable),
        live_events=frozenset(live),
        dead_events=frozenset(dead),
        contact_pairs=tuple(contact),
    )


# ---------------------------------------------------------------------------
# coupling through signal states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SignalArc:
    """One signal channel from a tock event of one net to a tick of the other.

    ``direction`` is "ab" (first net signals the second) or "ba".  The signal
    state is created fresh; ``message`` is the color the tock deposits there.
    """

    direction: str
    source_event: str
    target_event: str
    state: str
    colors: frozenset = field(default_factory=lambda: frozenset({"signal"}))
    message: Color = "signal"

    def __post_init__(self) -> None:
        if self.direction not in ("ab", "ba"):
            raise ValueError(f"direction must be 'ab' or 'ba', got {self.direction!r}")
        if self.message not in self.colors:
            raise InvalidColor("signal message must belong to the signal color set")


def couple(a: NetFragment, b: NetFragment,
           signal_arcs: Sequence[SignalArc] = (),
           names: tuple[str, str] = ("A", "B")) -> NetFragment:
    """Disjoint union of two fragments joined by signal states.

    Every coupled source event must be a tock and every target a tick: a
    signal leaves a machine when that machine commits its step and is read by
    the other machine when it starts one, which is what serializes the pair.
    With no arcs the result is the two nets running independently.
    """
    pa, pb = names

    def rename(net: NetFragment, prefix: str) -> tuple[dict, dict, dict, dict]:
        states = {f"{prefix}.{s}": c for s, c in net.states.items()}
        inputs = {f"{prefix}.{s}": c for s, c in net.inputs.items()}
        outputs = {f"{prefix}.{s}": c for s, c in net.outputs.items()}
        events = {
            f"{prefix}.{eid}": Event(
                tuple(f"{prefix}.{s}" for s in e.inputs),
                tuple(f"{prefix}.{s}" for s in e.outputs),
                e.color_fn,
                e.phase,
            )
            for eid, e in net.events.items()
        }
        return states, inputs, outputs, events

    sa, ia, oa, ea = rename(a, pa)
    sb, ib, ob, eb = rename(b, pb)
    states = {**sa, **sb}
    inputs = {**ia, **ib}
    outputs = {**oa, **ob}
    events = {**ea, **eb}

    for arc in signal_arcs:
        src_net, dst_net = (a, b) if arc.direction == "ab" else (b, a)
        src_prefix, dst_prefix = (pa, pb) if arc.direction == "ab" else (pb, pa)
        if arc.source_event not in src_net.events:
            raise NetValidationError(f"unknown source event {arc.source_event!r}")
        if arc.target_event not in dst_net.events:
            raise NetValidationError(f"unknown target event {arc.target_event!r}")
        if src_net.events[arc.source_event].phase != "tock":
            raise BadPhase(f"signal source {arc.source_event!r} must be a tock event")
        if dst_net.events[arc.target_event].phase != "tick":
            raise BadPhase(f"signal target {arc.target_event!r} must be a tick event")
        if arc.state in states or arc.state in inputs or arc.state in outputs:
            raise NetValidationError(f"signal state {arc.state!r} collides with another id")
        states[arc.state] = frozenset(arc.colors)

        src_id = f"{src_prefix}.{arc.source_event}"
        src = events[src_id]
        events[src_id] = Event(src.inputs, src.outputs + (arc.state,),
                               _SignalEmit(src.color_fn, arc.message), src.phase)
        dst_id = f"{dst_prefix}.{arc.target_event}"
        dst = events[dst_id]
        events[dst_id] = Event(dst.inputs + (arc.state,), dst.outputs,
                               _SignalAwait(dst.color_fn, frozenset(arc.colors)), dst.phase)

    return NetFragment(states, events, inputs, outputs)


def prefix_marking(marking: Marking, prefix: str) -> Marking:
    return Marking({f"{prefix}.{s}": t for s, t in marking.items()})


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def color_function_to_json(fn: ColorFunction, input_sets: Sequence[frozenset]) -> dict:
    if isinstance(fn, IdentityColorFunction):
        return {"builtin": "identity"}
    if isinstance(fn, BlackColorFunction):
        return {"builtin": "black"}
    if isinstance(fn, ConstColorFunction):
        return {"const": [encode_color(c) for c in fn.outputs]}
    if isinstance(fn, TableColorFunction):
        graph = fn.table
    else:
        # wrapped/restricted functions serialize as their finite graph
        graph = materialize_color_function(fn, input_sets)
    return {
        "table": [
            {"in": [encode_color(c) for c in key],
             "out": [encode_color(c) for c in value]}
            for key, value in sorted(graph.items(), key=lambda kv: repr(kv[0]))
        ]
    }


def color_function_from_json(obj: Mapping, out_arity: int) -> ColorFunction:
    if "builtin" in obj:
        if obj["builtin"] == "identity":
            return IdentityColorFunction()
        if obj["builtin"] == "black":
            return BlackColorFunction(out_arity)
        raise NetValidationError(f"unknown builtin color function {obj['builtin']!r}")
    if "const" in obj:
        return ConstColorFunction(tuple(decode_color(c) for c in obj["const"]))
    if "table" in obj:
        table = {
            tuple(decode_color(c) for c in row["in"]):
                tuple(decode_color(c) for c in row["out"])
            for row in obj["table"]
        }
        return TableColorFunction(table)
    raise NetValidationError(f"unrecognized color function encoding: {obj!r}")


def serialize_net(net: NetFragment) -> dict:
    def states_json(table: Mapping[str, frozenset]) -> dict:
        return {
            s: {"colors": sorted((encode_color(c) for c in colors), key=repr)}
            for s, colors in table.items()
        }

    return {
        "states": states_json(net.states),
        "inputs": states_json(net.inputs),
        "outputs": states_json(net.outputs),
        "events": {
            eid: {
                "inputs": list(e.inputs),
                "outputs": list(e.outputs),
                "phase": e.phase,
                "function": color_function_to_json(
                    e.color_fn, [net.color_set(s) for s in e.inputs]
                ),
            }
            for eid, e in net.events.items()
        },
    }


def deserialize_net(obj: Mapping) -> NetFragment:
    def states_from(table: Mapping) -> dict:
        return {
            s: frozenset(decode_color(c) for c in entry["colors"])
            for s, entry in table.items()
        }

    events = {}
    for eid, entry in obj.get("events", {}).items():
        outputs = tuple(entry["outputs"])
        events[eid] = Event(
            tuple(entry["inputs"]),
            outputs,
            color_function_from_json(entry["function"], len(outputs)),
            entry.get("phase"),
        )
    return NetFragment(
        states_from(obj.get("states", {})),
        events,
        states_from(obj.get("inputs", {})),
        states_from(obj.get("outputs", {})),
    )


def marking_to_json(marking: Marking) -> dict:
    return {s: encode_color(t.color) for s, t in marking.items()}


def marking_from_json(obj: Mapping) -> Marking:
    return Marking({s: Token(decode_color(c)) for s, c in obj.items()})


# ---------------------------------------------------------------------------
# scheduled simulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SchedulerPolicy:
    """Conflict resolution for simulation: a priority list or a seeded draw."""

    kind: str = "priority"
    priority: tuple[str, ...] = ()
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("priority", "random"):
            raise ValueError(f"scheduler kind must be priority/random, got {self.kind!r}")


@dataclass(frozen=True)
class SimulationResult:
    marking: Marking
    trace: tuple[dict, ...]
    fired_counts: Mapping[str, int]


def simulate(net: NetFragment, marking: Marking, steps: int,
             policy: SchedulerPolicy | None = None,
             injections: Mapping[int, Sequence[tuple[str, Color]]] | None = None,
             drain_outputs: bool = True) -> SimulationResult:
    """Run the fragment for ``steps`` scheduler rounds.

    Each round injects any scheduled tokens, fires at most one event chosen
    by the policy, then (optionally) drains every occupied output state.
    The trace records injections, firings with consumed/produced colors, and
    extractions, one JSON-ready row per action.
    """
    policy = policy or SchedulerPolicy()
    injections = injections or {}
    rng = np.random.default_rng(policy.seed)
    validate_marking(net, marking)

    def pick(candidates: tuple[str, ...]) -> str:
        if policy.kind == "random":
            return candidates[int(rng.integers(len(candidates)))]
        ranked = [e for e in policy.priority if e in candidates]
        return ranked[0] if ranked else candidates[0]

    trace: list[dict] = []
    counts: dict[str, int] = {eid: 0 for eid in net.events}
    for step in range(int(steps)):
        for state, color in injections.get(step, ()):  # scheduled boundary input
            marking = inject(net, marking, state, Token(color))
            trace.append({"step": step, "inject": {state: encode_color(color)}})
        candidates = enabled_events(net, marking)
        if candidates:
            eid = pick(candidates)
            event = net.events[eid]
            consumed = {s: encode_color(marking.get(s).color) for s in event.inputs}  # type: ignore[union-attr]
            marking = fire(net, marking, eid)
            produced = {s: encode_color(marking.get(s).color) for s in event.outputs
                        if marking.has(s)}
            counts[eid] += 1
            trace.append({"step": step, "event": eid,
                          "consumed": consumed, "produced": produced})
        else:
            trace.append({"step": step, "event": None})
        if drain_outputs:
            for state in net.outputs:
                if marking.has(state):
                    token, marking = extract(net, marking, state)
                    trace.append({"step": step, "extract": {state: encode_color(token.color)}})
    return SimulationResult(marking=marking, trace=tuple(trace), fired_counts=counts)


def trace_to_jsonl(trace: Sequence[Mapping]) -> str:
    return "\n".join(json.dumps(row, sort_keys=True) for row in trace) + "\n"
