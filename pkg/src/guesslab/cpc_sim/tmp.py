"""A clocked process-control machine with an unbounded tape.

The machine couples a finite-state controller to registers, an indexed memory
(the tape), and clocked input/output buffers toward a scientist and an
instrument.  Each step is one full clock cycle: at the tick the transition
function consumes whatever tokens sit in the input buffers and updates state,
registers, tape, and head; at the tock the staged output tokens are released.
With no program loaded and empty inputs the machine is quiescent: stepping
it any number of times changes nothing and emits nothing, so every change is
traceable to an injected token.

The controller is universal in the practical sense: a program token carries a
flat rule table (a JSON-encoded map from (state, read symbol) to next state,
written symbol, head move, and an optional emitted token) and loading it
makes the machine simulate that table one rule per step.  Two pseudo-reads
connect the table to the buffers: a rule keyed on ``"?in"`` fires when the
scientist queue is nonempty (binding the dequeued color), and the more
specific ``"?in=<value>"`` matches only that color.  Writes and emissions may
name ``"?in"`` (the consumed color) or, for emissions, ``"?read"`` (the tape
symbol under the head).  Injecting a new program token mid-run replaces the
resident table at the next step.
"""

from __future__ import annotations

import hashlib
import json
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace
from typing import NamedTuple

from ..errors import InvalidColor
from ..petri_net import EMPTY, Token, is_color

#: tape symbol for unwritten cells
BLANK = "_"

_MOVES = {"L": -1, "R": 1, "S": 0}


@dataclass(frozen=True)
class Rule:
    """One table entry: next state, written symbol, head move, emitted token."""

    next_state: str
    write: str | None = None
    move: str = "S"
    emit: object = None

    def __post_init__(self) -> None:
        if self.move not in _MOVES:
            raise ValueError(f"move must be L/R/S, got {self.move!r}")


@dataclass(frozen=True)
class ProgramTable:
    """A flat quintuple table, JSON-serializable onto a token color."""

    start: str
    halt: frozenset[str]
    rules: Mapping[tuple[str, str], Rule]

    def __post_init__(self) -> None:
        object.__setattr__(self, "halt", frozenset(self.halt))
        object.__setattr__(self, "rules", dict(self.rules))

    def to_json_obj(self) -> dict:
        return {
            "start": self.start,
            "halt": sorted(self.halt),
            "rules": [
                {"state": state, "read": read, "next": rule.next_state,
                 "write": rule.write, "move": rule.move, "emit": rule.emit}
                for (state, read), rule in self.rules.items()
            ],
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "ProgramTable":
        rules = {
            (row["state"], row["read"]): Rule(
                next_state=row["next"],
                write=row.get("write"),
                move=row.get("move", "S"),
                emit=row.get("emit"),
            )
            for row in obj["rules"]
        }
        return cls(start=obj["start"], halt=frozenset(obj.get("halt", ())), rules=rules)


def program_token(table: ProgramTable) -> Token:
    """Encode a rule table as a token color: ("program", <canonical json>)."""
    text = json.dumps(table.to_json_obj(), sort_keys=True, separators=(",", ":"))
    return Token(("program", text))


def _decode_program(color) -> ProgramTable | None:
    if (isinstance(color, tuple) and len(color) == 2 and color[0] == "program"
            and isinstance(color[1], str)):
        try:
            return ProgramTable.from_json_obj(json.loads(color[1]))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            return None
    return None


def _is_program_token(color) -> bool:
    return isinstance(color, tuple) and len(color) == 2 and color[0] == "program"


@dataclass(frozen=True)
class TMP:
    """Machine state between clock cycles.  Immutable; ``step`` returns a copy."""

    state: str = "idle"
    program: ProgramTable | None = None
    tm_state: str | None = None
    memory: Mapping[int, str] = field(default_factory=dict)
    head: int = 0
    scientist_queue: tuple = ()
    instrument_queue: tuple = ()

    def scanned(self) -> str:
        return self.memory.get(self.head, BLANK)

    def halted(self) -> bool:
        return (self.program is not None and self.tm_state is not None
                and self.tm_state in self.program.halt)

    def tape_string(self) -> str:
        """Contiguous non-blank tape content, lowest index first."""
        cells = {i: s for i, s in self.memory.items() if s != BLANK}
        if not cells:
            return ""
        lo, hi = min(cells), max(cells)
        return "".join(cells.get(i, BLANK) for i in range(lo, hi + 1))

    def digest(self) -> str:
        """Stable hash of the complete machine state (for quiescence checks)."""
        payload = json.dumps(
            {
                "state": self.state,
                "program": self.program.to_json_obj() if self.program else None,
                "tm_state": self.tm_state,
                "memory": sorted(self.memory.items()),
                "head": self.head,
                "sci": [repr(c) for c in self.scientist_queue],
                "inst": [repr(c) for c in self.instrument_queue],
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()


class StepResult(NamedTuple):
    machine: TMP
    scientist_out: Token
    instrument_out: Token
    action: str


def step(machine: TMP, scientist_token: Token = Token(EMPTY),
         instrument_token: Token = Token(EMPTY)) -> StepResult:
    """One full clock cycle: consume inputs at the tick, emit at the tock.

    The returned action string names what the tick did ("idle" when nothing
    changed), so a driver can log explicit no-ops such as a malformed program
    token without the machine having to carry a mutable log.
    """
    for token in (scientist_token, instrument_token):
        if not is_color(token.color):
            raise InvalidColor(f"not a token color: {token.color!r}")

    actions: list[str] = []
    program = machine.program
    tm_state = machine.tm_state
    state = machine.state
    sci_queue = machine.scientist_queue
    inst_queue = machine.instrument_queue

    # tick, part 1: absorb input tokens
    if scientist_token.color is not EMPTY:
        if _is_program_token(scientist_token.color):
            table = _decode_program(scientist_token.color)
            if table is None:
                actions.append("ignored-malformed-program")
            else:
                program, tm_state, state = table, table.start, "running"
                actions.append("program-loaded")
        else:
            sci_queue = sci_queue + (scientist_token.color,)
            actions.append("queued-scientist-input")
    if instrument_token.color is not EMPTY:
        inst_queue = inst_queue + (instrument_token.color,)
        actions.append("queued-instrument-input")

    # tick, part 2: one rule of the resident program
    memory = machine.memory
    head = machine.head
    sci_out: object = EMPTY
    inst_out: object = EMPTY
    if program is not None and tm_state is not None and tm_state not in program.halt:
        rule = None
        consumed = None
        if sci_queue:
            candidate = sci_queue[0]
            rule = program.rules.get((tm_state, f"?in={candidate}"))
            if rule is None:
                rule = program.rules.get((tm_state, "?in"))
            if rule is not None:
                consumed, sci_queue = candidate, sci_queue[1:]
        if rule is None:
            scanned = memory.get(head, BLANK)
            rule = program.rules.get((tm_state, scanned))
        if rule is not None:
            scanned = memory.get(head, BLANK)
            written = rule.write
            if written == "?in":
                written = str(consumed) if consumed is not None else None
            if written is not None and written != scanned:
                memory = dict(memory)
                if written == BLANK:
                    memory.pop(head, None)
                else:
                    memory[head] = written
            head += _MOVES[rule.move]
            tm_state = rule.next_state
            if rule.emit is not None:
                value = rule.emit
                if value == "?in":
                    value = consumed
                elif value == "?read":
                    value = scanned
                if value is not None:
                    sci_out = value
            actions.append("halted" if tm_state in program.halt else "rule-fired")
        else:
            actions.append("tm-stuck")

    changed = (
        state != machine.state or program is not machine.program
        or tm_state != machine.tm_state or memory is not machine.memory
        or head != machine.head or sci_queue != machine.scientist_queue
        or inst_queue != machine.instrument_queue
    )
    if not changed and sci_out is EMPTY and inst_out is EMPTY:
        # quiescent or no-op cycle: hand back the same machine object
        return StepResult(machine, Token(EMPTY), Token(EMPTY),
                          "+".join(actions) if actions else "idle")

    updated = replace(
        machine,
        state=state,
        program=program,
        tm_state=tm_state,
        memory=memory,
        head=head,
        scientist_queue=sci_queue,
        instrument_queue=inst_queue,
    )
    # tock: release staged outputs
    return StepResult(updated, Token(sci_out), Token(inst_out),
                      "+".join(actions) if actions else "idle")


@dataclass(frozen=True)
class RunResult:
    machine: TMP
    outputs: tuple
    steps: int
    halted: bool
    timed_out: bool


def run_program(machine: TMP, program: ProgramTable,
                inputs: Sequence = (),
                max_steps: int = 10_000,
                interrupts: Mapping[int, Token] | None = None) -> RunResult:
    """Inject a program, stream inputs, and step until halt or budget.

    ``inputs`` are scientist tokens delivered one per step after the program
    token; ``interrupts`` overrides the scientist token at given step indices
    (injecting a fresh program token there reprograms the machine mid-run).
    Budget exhaustion is not a machine error; the result simply reports
    ``timed_out`` so the harness can decide what it means.
    """
    interrupts = dict(interrupts or {})
    pending = [Token(c) if not isinstance(c, Token) else c for c in inputs]
    outputs: list = []
    current = machine
    steps_taken = 0
    for index in range(int(max_steps)):
        if index == 0:
            token = program_token(program)
        elif index in interrupts:
            token = interrupts[index]
        elif pending:
            token = pending.pop(0)
        else:
            token = Token(EMPTY)
        current, sci_out, _, _ = step(current, token)
        steps_taken += 1
        if sci_out.color is not EMPTY:
            outputs.append(sci_out.color)
        if current.halted():
            return RunResult(current, tuple(outputs), steps_taken, True, False)
    return RunResult(current, tuple(outputs), steps_taken, current.halted(), True)


# ---------------------------------------------------------------------------
# stock programs
# ---------------------------------------------------------------------------

def echo_program(end_marker: str = "end") -> ProgramTable:
    """Copy every scientist input token to the output until the end marker."""
    return ProgramTable(
        start="run",
        halt=frozenset({"done"}),
        rules={
            ("run", f"?in={end_marker}"): Rule("done"),
            ("run", "?in"): Rule("run", emit="?in"),
        },
    )


def binary_increment_program(end_marker: str = "end") -> ProgramTable:
    """Read a binary number from the input stream, add one to it on the tape.

    Bits arrive most-significant first and are written left to right; the end
    marker switches to carry propagation from the rightmost bit.
    """
    return ProgramTable(
        start="load",
        halt=frozenset({"done"}),
        rules={
            ("load", f"?in={end_marker}"): Rule("back", move="L"),
            ("load", "?in"): Rule("load", write="?in", move="R"),
            ("back", "1"): Rule("back", write="0", move="L"),
            ("back", "0"): Rule("done", write="1"),
            ("back", BLANK): Rule("done", write="1"),
        },
    )
