"""One-tape Turing machines, deterministic and nondeterministic.

Machines are immutable descriptions.  Stepping, bounded halting search
and deterministic runs are pure functions of (machine, input, budget),
so machines and configurations can be shared freely across threads.

Halting time of a nondeterministic machine is taken to be the minimum
number of steps over halting computations; consequently
``halts_within(M, w, n)`` is exactly ``min_halting_steps(M, w, n) is not
None``.  Bounded search over the configuration tree prunes a
configuration only when it reappears with a residual budget no larger
than one it has already been explored with (breadth-first order makes
the first visit the most generous one).

Besides transition-table machines there are "virtual" machines: a host
procedure mapping (input word, step budget) to a run result under a
declared, reproducible step accounting.  The constructions around the
bounded halting problem are realized as virtual machines.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Callable, Optional, Union

from .words import Alphabet, Word

LEFT = "L"
RIGHT = "R"


class MachineFormatError(ValueError):
    """A machine description violates a structural invariant."""


class NondeterministicRunError(ValueError):
    """run_deterministic was handed a machine with branching choices."""


class AnswerDecodeError(ValueError):
    """A configuration cannot be decoded under the answer convention."""


class Answer(Enum):
    YES = "Yes"
    NO = "No"
    DONT_KNOW = "DontKnow"


@dataclass(frozen=True)
class Configuration:
    """A machine snapshot: state, tape left of the head, tape from the head on.

    Both sides are stored as raw tape-symbol tuples with periphery blanks
    trimmed away, which makes the representation canonical: equal
    configurations denote equal machine states.  The head reads the first
    symbol of ``right``, or the blank when ``right`` is empty.
    """

    state: str
    left: tuple[str, ...]
    right: tuple[str, ...]


@dataclass(frozen=True)
class RunResult:
    """Outcome of running a machine on one input.

    kind is one of "halted" (reached the final state, with an exact step
    count), "broke" (no transition applied), or "budget" (the step budget
    ran out first).
    """

    kind: str
    steps: Optional[int] = None
    final: Optional[Configuration] = None
    budget: Optional[int] = None

    @staticmethod
    def halted(steps: int, final: Configuration) -> "RunResult":
        return RunResult("halted", steps=steps, final=final)

    @staticmethod
    def broke(steps: int) -> "RunResult":
        return RunResult("broke", steps=steps)

    @staticmethod
    def budget_exhausted(budget: int) -> "RunResult":
        return RunResult("budget", budget=budget)

    @property
    def is_halted(self) -> bool:
        return self.kind == "halted"


@dataclass(frozen=True)
class TuringMachine:
    """A one-tape machine given by its transition table.

    Transitions are 5-tuples (state, read, state', write, direction) with
    read over the tape alphabet plus the blank, write over the tape
    alphabet only, and direction L or R.  With ``tape_mode="two-way"``
    (the default) the tape is infinite on both ends; with "one-end" a
    left move at the left edge leaves the head in place.

    ``yes_symbol``/``no_symbol`` optionally designate which two symbols
    play the answer-marker roles for deciders; machines that merely
    accept by halting leave them unset.
    """

    states: tuple[str, ...]
    initial: str
    final: str
    tape_alphabet: Alphabet
    blank: str
    transitions: tuple[tuple[str, str, str, str, str], ...]
    tape_mode: str = "two-way"
    yes_symbol: Optional[str] = None
    no_symbol: Optional[str] = None
    name: str = ""

    def __post_init__(self) -> None:
        if self.tape_alphabet.size < 2:
            raise MachineFormatError("tape alphabet needs at least 2 symbols")
        if self.blank in self.tape_alphabet:
            raise MachineFormatError("blank must not be a tape-alphabet symbol")
        if len(set(self.states)) != len(self.states):
            raise MachineFormatError("duplicate state names")
        for q in (self.initial, self.final):
            if q not in self.states:
                raise MachineFormatError(f"state {q!r} not declared")
        if self.tape_mode not in ("two-way", "one-end"):
            raise MachineFormatError(f"unknown tape mode {self.tape_mode!r}")
        reads = set(self.tape_alphabet.symbols) | {self.blank}
        for t in self.transitions:
            if len(t) != 5:
                raise MachineFormatError(f"malformed transition {t!r}")
            q, a, q2, a2, d = t
            if q not in self.states or q2 not in self.states:
                raise MachineFormatError(f"transition {t!r} references unknown state")
            if a not in reads:
                raise MachineFormatError(f"transition {t!r} reads unknown symbol")
            if a2 not in self.tape_alphabet:
                raise MachineFormatError(f"transition {t!r} must write a tape symbol")
            if d not in (LEFT, RIGHT):
                raise MachineFormatError(f"transition {t!r} has bad direction")
        for marker in (self.yes_symbol, self.no_symbol):
            if marker is not None and marker not in self.tape_alphabet:
                raise MachineFormatError(f"answer symbol {marker!r} not in alphabet")

    @cached_property
    def _delta(self) -> dict[tuple[str, str], tuple[tuple[str, str, str], ...]]:
        table: dict[tuple[str, str], list[tuple[str, str, str]]] = {}
        for q, a, q2, a2, d in self.transitions:
            table.setdefault((q, a), []).append((q2, a2, d))
        # deterministic iteration order for searches
        return {k: tuple(sorted(set(v))) for k, v in table.items()}

    @cached_property
    def determinism(self) -> str:
        """"deterministic" (total function), "partial" (at most one choice
        everywhere, but not total), or "nondeterministic"."""
        if any(len(v) > 1 for v in self._delta.values()):
            return "nondeterministic"
        reads = list(self.tape_alphabet.symbols) + [self.blank]
        total = all((q, a) in self._delta for q in self.states for a in reads)
        return "deterministic" if total else "partial"

    @property
    def has_answer_convention(self) -> bool:
        return self.yes_symbol is not None and self.no_symbol is not None

    def word(self, text) -> Word:
        return self.tape_alphabet.word(text)

    def to_canonical_dict(self) -> dict:
        """A canonical JSON-able description; equal behaviour-defining data
        yields byte-equal serializations."""
        return {
            "blank": self.blank,
            "delta": sorted(list(t) for t in set(self.transitions)),
            "final": self.final,
            "initial": self.initial,
            "no_symbol": self.no_symbol,
            "states": sorted(self.states),
            "tape": self.tape_mode,
            "tape_alphabet": list(self.tape_alphabet.symbols),
            "yes_symbol": self.yes_symbol,
        }


@dataclass(frozen=True)
class VirtualMachine:
    """A machine realized by a host procedure instead of a table.

    The evaluator maps (input word, step budget) to a RunResult and must
    be deterministic and budget-monotone: a Halted result obtained with
    budget b is returned identically for every budget >= b.  The step
    accounting is declared by the construction that builds the machine.

    ``definition`` is a JSON-able description sufficient to identify the
    machine for encoding purposes; ``declared_guard`` (if set) bounds the
    steps of every halting run as a function of input length.
    """

    name: str
    evaluator: Callable[[Word, int], RunResult]
    alphabet: Alphabet
    declared_guard: Optional[Callable[[int], int]] = None
    definition: dict = field(default_factory=dict)

    def word(self, text) -> Word:
        return self.alphabet.word(text)


Machine = Union[TuringMachine, VirtualMachine]


def initial_configuration(machine: TuringMachine, x: Word) -> Configuration:
    if x.alphabet != machine.tape_alphabet:
        raise MachineFormatError("input word is over the wrong alphabet")
    return Configuration(machine.initial, (), x.letters)


def _trim(machine: TuringMachine, left: tuple[str, ...], right: tuple[str, ...]):
    blank = machine.blank
    i = 0
    while i < len(left) and left[i] == blank:
        i += 1
    j = len(right)
    while j > 0 and right[j - 1] == blank:
        j -= 1
    return left[i:], right[:j]


def step(machine: TuringMachine, config: Configuration) -> tuple[Configuration, ...]:
    """Every configuration reachable from ``config`` in one step.

    Empty exactly when the machine breaks (no transition matches).  Runs
    and searches never expand configurations at the final state, but the
    step relation itself is oblivious to halting.
    """
    read = config.right[0] if config.right else machine.blank
    rest = config.right[1:] if config.right else ()
    out = []
    for q2, a2, d in machine._delta.get((config.state, read), ()):
        if d == RIGHT:
            left, right = config.left + (a2,), rest
        elif config.left:
            left, right = config.left[:-1], (config.left[-1], a2) + rest
        elif machine.tape_mode == "two-way":
            left, right = (), (machine.blank, a2) + rest
        else:  # one-end tape: left move at the edge keeps the head in place
            left, right = (), (a2,) + rest
        left, right = _trim(machine, left, right)
        out.append(Configuration(q2, left, right))
    return tuple(dict.fromkeys(out))


def run_deterministic(machine: TuringMachine, x: Word, budget: int) -> RunResult:
    """Run a (possibly partial) deterministic machine from (initial, empty, x)."""
    if machine.determinism == "nondeterministic":
        raise NondeterministicRunError(
            "run_deterministic requires a machine without branching choices"
        )
    config = initial_configuration(machine, x)
    steps = 0
    while True:
        if config.state == machine.final:
            return RunResult.halted(steps, config)
        if steps >= budget:
            return RunResult.budget_exhausted(budget)
        succ = step(machine, config)
        if not succ:
            return RunResult.broke(steps)
        config = succ[0]
        steps += 1


def _search_halting(
    machine: TuringMachine,
    x: Word,
    budget: int,
    *,
    accept: Callable[[Configuration], bool] = lambda c: True,
) -> Optional[tuple[int, Configuration]]:
    """Breadth-first search of the configuration tree for an accepted halt.

    Returns (steps, final configuration) for the earliest accepted halting
    configuration reachable within ``budget`` steps, or None.  A
    configuration is re-expanded only if seen with a strictly larger
    residual budget than before; BFS visits each configuration with its
    maximal residual first, so a plain first-visit set is exact.
    """
    if budget < 0:
        return None
    start = initial_configuration(machine, x)
    seen = {start}
    frontier: deque[Configuration] = deque([start])
    depth = 0
    while frontier and depth <= budget:
        for config in frontier:
            if config.state == machine.final and accept(config):
                return depth, config
        if depth == budget:
            break
        nxt: deque[Configuration] = deque()
        for config in frontier:
            if config.state == machine.final:
                continue  # halted: the computation ends here
            for succ in step(machine, config):
                if succ not in seen:
                    seen.add(succ)
                    nxt.append(succ)
        frontier = nxt
        depth += 1
    return None


def min_halting_steps(machine: Machine, w: Word, budget: int) -> Optional[int]:
    """Least n <= budget such that some computation halts within n steps."""
    if isinstance(machine, VirtualMachine):
        result = machine.evaluator(w, budget)
        if result.is_halted and result.steps is not None and result.steps <= budget:
            return result.steps
        return None
    found = _search_halting(machine, w, budget)
    return None if found is None else found[0]


def halts_within(machine: Machine, w: Word, n: int) -> bool:
    """True iff some computation path reaches the final state within n steps."""
    return min_halting_steps(machine, w, n) is not None


def decode_answer(machine: TuringMachine, config: Configuration) -> Answer:
    """Decode a halted configuration under the machine's answer convention.

    The configuration must be (final state, empty left tape, w); w starting
    with two yes-markers means Yes, yes-marker then no-marker means No, and
    a leading no-marker means DontKnow.
    """
    if not machine.has_answer_convention:
        raise AnswerDecodeError("machine declares no answer convention")
    if config.state != machine.final:
        raise AnswerDecodeError("configuration is not at the final state")
    if config.left:
        raise AnswerDecodeError("left tape is not empty")
    w = config.right
    yes, no = machine.yes_symbol, machine.no_symbol
    if w and w[0] == no:
        return Answer.DONT_KNOW
    if len(w) >= 2 and w[0] == yes and w[1] == yes:
        return Answer.YES
    if len(w) >= 2 and w[0] == yes and w[1] == no:
        return Answer.NO
    raise AnswerDecodeError(f"tape {''.join(w)!r} matches no answer pattern")


def min_deciding_steps(machine: Machine, w: Word, budget: int) -> Optional[int]:
    """Like min_halting_steps, but halting runs whose configuration decodes
    to DontKnow do not count (their time is infinite).  Machines without an
    answer convention decide by halting; undecodable halting tapes still
    count as stopping."""
    if isinstance(machine, VirtualMachine):
        return min_halting_steps(machine, w, budget)
    if not machine.has_answer_convention:
        return min_halting_steps(machine, w, budget)

    def accept(config: Configuration) -> bool:
        try:
            return decode_answer(machine, config) is not Answer.DONT_KNOW
        except AnswerDecodeError:
            return True

    found = _search_halting(machine, w, budget, accept=accept)
    return None if found is None else found[0]


def load_machine(source) -> TuringMachine:
    """Load a machine from a JSON file path, JSON text, or a dict.

    Format:
        {"states": [...], "initial": "q0", "final": "q1",
         "tape_alphabet": ["0", "1"], "blank": "_", "tape": "two-way",
         "yes_symbol": "1", "no_symbol": "0",
         "delta": [["q0", "0", "q1", "1", "R"], ...]}

    The deterministic/partial/nondeterministic flag is inferred from delta.
    """
    if isinstance(source, dict):
        data = source
    else:
        text = Path(source).read_text() if Path(str(source)).exists() else str(source)
        data = json.loads(text)
    try:
        alphabet = Alphabet(tuple(data["tape_alphabet"]))
        return TuringMachine(
            states=tuple(data["states"]),
            initial=data["initial"],
            final=data["final"],
            tape_alphabet=alphabet,
            blank=data["blank"],
            transitions=tuple(tuple(t) for t in data["delta"]),
            tape_mode=data.get("tape", "two-way"),
            yes_symbol=data.get("yes_symbol"),
            no_symbol=data.get("no_symbol"),
            name=data.get("name", ""),
        )
    except KeyError as exc:
        raise MachineFormatError(f"missing machine field: {exc}") from exc
