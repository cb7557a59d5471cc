import json

import pytest
from hypothesis import given, settings, strategies as st

from gclab import BINARY, TuringMachine
from gclab.machine import (
    Answer,
    AnswerDecodeError,
    Configuration,
    MachineFormatError,
    NondeterministicRunError,
    VirtualMachine,
    RunResult,
    decode_answer,
    halts_within,
    initial_configuration,
    load_machine,
    min_deciding_steps,
    min_halting_steps,
    run_deterministic,
    step,
)


def test_determinism_classification(halt1, find_zero, contains01_ntm):
    assert halt1.determinism == "deterministic"
    assert find_zero.determinism == "partial"
    assert contains01_ntm.determinism == "nondeterministic"


def test_step_singleton_for_deterministic(halt1):
    c = initial_configuration(halt1, BINARY.word("0"))
    succ = step(halt1, c)
    assert len(succ) == 1
    assert succ[0].state == "q1"


def test_step_empty_on_break(breaker):
    c = initial_configuration(breaker, BINARY.word("0"))
    assert step(breaker, c) == ()


def test_step_branches_on_ntm(contains01_ntm):
    c = initial_configuration(contains01_ntm, BINARY.word("01"))
    succ = step(contains01_ntm, c)
    assert len(succ) == 2
    assert {s.state for s in succ} == {"q0", "q2"}


def test_run_deterministic_halt(halt1):
    result = run_deterministic(halt1, BINARY.word("0"), 10)
    assert result.kind == "halted" and result.steps == 1


def test_run_deterministic_budget(loop):
    result = run_deterministic(loop, BINARY.word("0"), 100)
    assert result.kind == "budget" and result.budget == 100


def test_run_deterministic_broke(breaker):
    result = run_deterministic(breaker, BINARY.word("0"), 10)
    assert result.kind == "broke" and result.steps == 0


def test_run_rejects_ntm(contains01_ntm):
    with pytest.raises(NondeterministicRunError):
        run_deterministic(contains01_ntm, BINARY.word("01"), 5)


def test_halts_within_branching():
    # branch A halts in 3 steps, branch B loops forever
    machine = TuringMachine(
        states=("q0", "qa", "qb", "qL", "q1"),
        initial="q0",
        final="q1",
        tape_alphabet=BINARY,
        blank="_",
        transitions=(
            ("q0", "0", "qa", "0", "R"),
            ("q0", "0", "qL", "0", "R"),
            ("qa", "1", "qb", "1", "R"),
            ("qb", "1", "q1", "1", "R"),
            ("qb", "_", "q1", "0", "R"),
            ("qL", "1", "qL", "1", "L"),
            ("qL", "0", "qL", "0", "L"),
            ("qL", "_", "qL", "0", "L"),
        ),
    )
    w = BINARY.word("011")
    assert halts_within(machine, w, 3)
    assert not halts_within(machine, w, 2)


def test_halts_within_break_and_zero_budget(breaker, halt1):
    for n in range(5):
        assert not halts_within(breaker, BINARY.word("0"), n)
    assert not halts_within(halt1, BINARY.word("0"), 0)


def test_min_halting_steps(halt1, loop, contains01_ntm):
    assert min_halting_steps(halt1, BINARY.word("1"), 10) == 1
    assert min_halting_steps(loop, BINARY.word("1"), 50) is None
    # two halting branches of different lengths: the minimum wins
    machine = TuringMachine(
        states=("q0", "qa", "qb1", "qb2", "qb3", "qb4", "q1"),
        initial="q0",
        final="q1",
        tape_alphabet=BINARY,
        blank="_",
        transitions=(
            ("q0", "0", "qa", "0", "R"),
            ("q0", "0", "qb1", "0", "R"),
            ("qa", "1", "qb2", "1", "R"),
            ("qb2", "1", "q1", "1", "R"),
            ("qb1", "1", "qb3", "0", "R"),
            ("qb3", "1", "qb4", "0", "R"),
            ("qb4", "_", "q1", "0", "R"),
        ),
    )
    assert min_halting_steps(machine, BINARY.word("011"), 10) == 3


def test_budget_monotonicity_on_random_small_machines():
    import itertools
    import random

    rng = random.Random(7)
    states = ("q0", "qa", "q1")
    reads = ("0", "1", "_")
    for trial in range(30):
        table = []
        for q in ("q0", "qa"):
            for a in reads:
                for q2, a2, d in rng.sample(
                    list(itertools.product(states, ("0", "1"), ("L", "R"))), k=rng.randrange(3)
                ):
                    table.append((q, a, q2, a2, d))
        machine = TuringMachine(
            states=states, initial="q0", final="q1",
            tape_alphabet=BINARY, blank="_", transitions=tuple(table),
        )
        for text in ("", "0", "10", "110"):
            w = BINARY.word(text)
            witnesses = [n for n in range(13) if halts_within(machine, w, n)]
            if witnesses:
                first = witnesses[0]
                assert witnesses == list(range(first, 13))


def test_deterministic_oracle_equivalence(halt1, loop_on_one, find_zero):
    for machine in (halt1, loop_on_one, find_zero):
        for n in range(6):
            for x in BINARY.sphere(n):
                result = run_deterministic(machine, x, 40)
                expected = result.steps if result.kind == "halted" else None
                assert min_halting_steps(machine, x, 40) == expected


def test_one_end_tape_mode():
    # keeps head position on a left move at the edge; two-way grows a blank
    base = dict(
        states=("q0", "qa", "q1"),
        initial="q0",
        final="q1",
        tape_alphabet=BINARY,
        blank="_",
        transitions=(
            ("q0", "0", "qa", "1", "L"),
            ("qa", "1", "q1", "1", "R"),
            ("qa", "_", "q1", "0", "R"),
        ),
    )
    one_end = TuringMachine(**base, tape_mode="one-end")
    result = run_deterministic(one_end, BINARY.word("0"), 10)
    assert result.kind == "halted"
    assert result.final.left == ("1",)  # stayed on the rewritten cell
    two_way = TuringMachine(**base, tape_mode="two-way")
    result2 = run_deterministic(two_way, BINARY.word("0"), 10)
    assert result2.kind == "halted"
    assert result2.final.left == ("0",)  # visited the blank to the left


def test_decode_answer(answer_machine):
    yes = run_deterministic(answer_machine, BINARY.word("1"), 10)
    no = run_deterministic(answer_machine, BINARY.word("0"), 10)
    dk = run_deterministic(answer_machine, BINARY.empty, 10)
    assert decode_answer(answer_machine, yes.final) is Answer.YES
    assert decode_answer(answer_machine, no.final) is Answer.NO
    assert decode_answer(answer_machine, dk.final) is Answer.DONT_KNOW


def test_decode_answer_errors(answer_machine):
    with pytest.raises(AnswerDecodeError):
        decode_answer(answer_machine, Configuration("q0", (), ("1", "1")))
    with pytest.raises(AnswerDecodeError):
        decode_answer(answer_machine, Configuration("q1", ("0",), ("1", "1")))
    with pytest.raises(AnswerDecodeError):
        decode_answer(answer_machine, Configuration("q1", (), ("1",)))


def test_min_deciding_steps_skips_dont_know(answer_machine):
    # the empty input halts with DontKnow: deciding time is infinite
    assert min_halting_steps(answer_machine, BINARY.empty, 10) == 2
    assert min_deciding_steps(answer_machine, BINARY.empty, 10) is None
    assert min_deciding_steps(answer_machine, BINARY.word("1"), 10) == 2


def test_virtual_machine_monotonicity():
    def evaluator(w, budget):
        needed = len(w) + 1
        if budget >= needed:
            return RunResult.halted(needed, None)
        return RunResult.budget_exhausted(budget)

    vm = VirtualMachine(name="len+1", evaluator=evaluator, alphabet=BINARY)
    for text in ("", "0", "0110"):
        w = BINARY.word(text)
        for b in range(12):
            r = min_halting_steps(vm, w, b)
            if r is not None:
                assert min_halting_steps(vm, w, 2 * b) == r


@settings(max_examples=60)
@given(st.text(alphabet="01", max_size=6), st.integers(0, 8))
def test_vm_budget_doubling_property(text, budget):
    def evaluator(w, b):
        needed = 2 * len(w)
        if b >= needed:
            return RunResult.halted(needed, None)
        return RunResult.budget_exhausted(b)

    vm = VirtualMachine(name="2len", evaluator=evaluator, alphabet=BINARY)
    w = BINARY.word(text)
    first = vm.evaluator(w, budget)
    if first.is_halted:
        again = vm.evaluator(w, 2 * budget)
        assert again.is_halted and again.steps == first.steps


def test_loader_roundtrip(tmp_path, find_zero):
    payload = {
        "states": ["q0", "q1"],
        "initial": "q0",
        "final": "q1",
        "tape_alphabet": ["0", "1"],
        "blank": "_",
        "tape": "two-way",
        "delta": [["q0", "0", "q1", "0", "R"], ["q0", "1", "q0", "1", "R"]],
    }
    path = tmp_path / "machine.json"
    path.write_text(json.dumps(payload))
    loaded = load_machine(str(path))
    assert loaded.determinism == "partial"
    assert loaded.to_canonical_dict()["delta"] == find_zero.to_canonical_dict()["delta"]


def test_loader_validates():
    with pytest.raises(MachineFormatError):
        load_machine({
            "states": ["q0"], "initial": "q0", "final": "q1",
            "tape_alphabet": ["0", "1"], "blank": "_", "delta": [],
        })
    with pytest.raises(MachineFormatError):
        load_machine({
            "states": ["q0", "q1"], "initial": "q0", "final": "q1",
            "tape_alphabet": ["0", "1"], "blank": "_",
            "delta": [["q0", "0", "q1", "_", "R"]],  # writes the blank
        })
