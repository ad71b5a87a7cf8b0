import dataclasses

import pytest

import oracle
from conftest import W1, W2, W3
from loas.asp.grounder import ground
from loas.asp.parser import parse_atom, parse_program, parse_rule
from loas.asp.solver import enumerate_answer_sets
from loas.engine import brute_force_solutions
from loas.errors import TaskError
from loas.hyp_space import SearchSpace
from loas.task_model import (
    BRAVE,
    CAUTIOUS,
    Hypothesis,
    LearningTask,
    OrderingExample,
    PartialInterpretation,
    ViolatingInterpretation,
    ViolatingPair,
    check_task_conditions,
    find_violating_reason,
    interpretation_extends,
    is_inductive_solution,
    is_positive_hypothesis,
    is_remaining_hypothesis,
    is_violating_hypothesis,
    partial_extends,
    respects_ordering,
)
from microtasks import micro_task


def atoms(*texts):
    return frozenset(parse_atom(t) for t in texts)


def pi(inc=(), exc=(), id=""):
    return PartialInterpretation(atoms(*inc), atoms(*exc), id)


FACTS4 = atoms("slot(m,1)", "slot(m,2)", "slot(t,1)", "slot(t,2)", "busy(m,1)")
H1, H2, H3 = Hypothesis(), Hypothesis({"r1"}), Hypothesis({"r1", "r2"})

E1 = pi(["assign(m,1)", "assign(m,2)"], ["assign(t,1)", "assign(t,2)"], "e1")
E2 = pi(["assign(m,1)", "assign(t,1)"], [], "e2")


# ---------------------------------------------------------------------------
# extension


def test_interpretation_extends():
    slots = atoms("slot(m,1)", "slot(m,2)", "slot(t,1)", "slot(t,2)")
    assert interpretation_extends(slots | atoms("assign(m,1)", "assign(m,2)"), E1)
    assert interpretation_extends(atoms("x"), pi())
    assert not interpretation_extends(atoms("p"), pi(["p"], ["p"]))


def test_partial_extends():
    assert partial_extends(pi(["p", "q"], ["r"]), pi(["p"], ["r"]))
    assert partial_extends(pi(["p"]), pi())
    assert not partial_extends(pi(["p"]), pi([], ["p"]))


# ---------------------------------------------------------------------------
# orderings


@pytest.mark.parametrize("w,brave,cautious", [(W1, False, False), (W2, True, True), (W3, True, False)])
def test_example2_table(example1, w, brave, cautious):
    prog = example1 + parse_program(w)
    assert respects_ordering(prog, OrderingExample("e1", "e2", BRAVE), E1, E2) is brave
    assert respects_ordering(prog, OrderingExample("e1", "e2", CAUTIOUS), E1, E2) is cautious


def test_example2_extensions(example1):
    ans = enumerate_answer_sets(example1)
    assert len([a for a in ans if interpretation_extends(a, E1)]) == 1
    assert len([a for a in ans if interpretation_extends(a, E2)]) == 4


def test_cautious_is_vacuous_without_pairs(example1):
    # no answer set assigns and excludes m1 at once, so there is nothing to order
    never = pi(["assign(m,1)"], ["slot(m,1)"], "x")
    prog = example1 + parse_program(W2)
    assert respects_ordering(prog, OrderingExample("x", "e2", CAUTIOUS), never, E2)
    assert not respects_ordering(prog, OrderingExample("x", "e2", BRAVE), never, E2)


# ---------------------------------------------------------------------------
# Example 4


def test_example4_positive(example4_task):
    assert is_positive_hypothesis(example4_task, H1)
    assert is_positive_hypothesis(example4_task, H2)
    assert is_positive_hypothesis(example4_task, H3)


def test_example4_uncoverable(example4_task):
    t = dataclasses.replace(
        example4_task,
        space=SearchSpace.from_rules([parse_rule(":- assign(t,1).")]),
        _as_cache={},
    )
    assert not is_positive_hypothesis(t, Hypothesis({"r1"}))


def test_example4_h1_violating_interpretation(example4_task):
    reason = find_violating_reason(example4_task, H1)
    assert reason == ViolatingInterpretation(FACTS4 | atoms("assign(m,1)"))
    assert is_violating_hypothesis(example4_task, H1)


def test_example4_h1_violating_pair(example4_task):
    # with the negative example removed only the pair remains
    t = dataclasses.replace(example4_task, negatives=(), _as_cache={})
    reason = find_violating_reason(t, H1)
    assert isinstance(reason, ViolatingPair)
    assert reason.first == FACTS4 | atoms("assign(t,1)", "assign(t,2)")
    assert reason.second == FACTS4 | atoms("assign(m,2)", "assign(t,1)")


def test_example4_h2_pair_only(example4_task):
    reason = find_violating_reason(example4_task, H2)
    assert isinstance(reason, ViolatingPair)
    assert reason.first == FACTS4 | atoms("assign(t,1)", "assign(t,2)")
    assert reason.second == FACTS4 | atoms("assign(m,2)", "assign(t,1)")
    assert reason.ordering.first == "e1" and reason.ordering.second == "e2"


def test_example4_h3_solution(example4_task):
    assert find_violating_reason(example4_task, H3) is None
    assert is_inductive_solution(example4_task, H3)
    assert not is_inductive_solution(example4_task, H1)
    assert not is_inductive_solution(example4_task, H2)


def test_remaining(example4_task):
    t = example4_task
    assert is_remaining_hypothesis(t, H1, [])
    r1 = find_violating_reason(t, H1)
    assert not is_remaining_hypothesis(t, H1, [r1])
    r2 = find_violating_reason(t, H2)
    assert is_remaining_hypothesis(t, H3, [r1, r2])
    assert not is_remaining_hypothesis(t, H2, [r1, r2])


def test_example5_solution(example5_task):
    h = Hypothesis({"r1", "r4"})
    assert is_inductive_solution(example5_task, h)
    assert h.cost(example5_task.space) == 5


# ---------------------------------------------------------------------------
# conditions


def _task(positives, negatives=(), orderings=(), background="0 {p; q} 2."):
    return LearningTask(parse_program(background), SearchSpace.from_rules([]), tuple(positives),
                        tuple(negatives), tuple(orderings))


def test_cautious_cycle_is_necessary_failure():
    t = _task([pi(["p"], [], "e1"), pi(["q"], [], "e2")],
              orderings=[OrderingExample("e1", "e2", CAUTIOUS), OrderingExample("e2", "e1", CAUTIOUS)])
    report = check_task_conditions(t)
    assert report.unsatisfiable
    assert [r.name[:5] for r in report.failed(necessary=True)] == ["(iii)"]
    assert "e1 -> e2 -> e1" in report.failed(necessary=True)[0].detail


def test_extension_of_negative_is_necessary_failure():
    t = _task([pi(["p"], [], "e1")], negatives=[pi([], [], "n1")])
    report = check_task_conditions(t)
    assert report.unsatisfiable
    assert report.failed(necessary=True)[0].name.startswith("(ii)")


def test_brave_cycle_is_only_advisory():
    t = _task([pi(["p"], [], "e1"), pi(["q"], [], "e2")],
              orderings=[OrderingExample("e1", "e2", BRAVE), OrderingExample("e2", "e1", BRAVE)])
    report = check_task_conditions(t)
    assert not report.unsatisfiable
    assert any(r.name.startswith("(iii)") for r in report.failed(necessary=False))


def test_classical_model_condition():
    t = _task([pi(["p"], [], "e1")], background="q. :- p, q.")
    assert check_task_conditions(t).failed(necessary=True)[0].name.startswith("(i)")


def test_example5_passes_necessary_conditions(example5_task):
    assert not check_task_conditions(example5_task).unsatisfiable


def test_task_rejects_bad_orderings():
    with pytest.raises(TaskError):
        _task([pi(["p"], [], "e1")], orderings=[OrderingExample("e1", "e9", BRAVE)])
    with pytest.raises(TaskError):
        _task([pi(["p"], [], "e1")], orderings=[OrderingExample("e1", "e1", CAUTIOUS)])
    with pytest.raises(TaskError):
        _task([pi(["p"], [], "e1"), pi(["q"], [], "e1")])
    with pytest.raises(ValueError):
        OrderingExample("a", "b", "sometimes")


@pytest.mark.parametrize("kind", ["negative", "cycle"])
def test_failed_necessary_conditions_leave_no_solutions(kind):
    space = [":~ p.[1@1]", ":~ q.[1@1]", ":- p, q.", "p :- not q."]
    if kind == "negative":
        t = _task([pi(["p"], [], "e1")], negatives=[pi([], [], "n1")])
    else:
        t = _task([pi(["p"], [], "e1"), pi(["q"], [], "e2")],
                  orderings=[OrderingExample("e1", "e2", CAUTIOUS), OrderingExample("e2", "e1", CAUTIOUS)])
    t = dataclasses.replace(t, space=SearchSpace.from_rules([parse_rule(r) for r in space]), _as_cache={})
    assert check_task_conditions(t).unsatisfiable
    assert brute_force_solutions(t) == []


# ---------------------------------------------------------------------------
# properties over random micro-tasks


def _all_hypotheses(t):
    ids = t.space.ids()
    for mask in range(1 << len(ids)):
        yield Hypothesis({i for k, i in enumerate(ids) if mask >> k & 1})


@pytest.mark.parametrize("seed", range(25))
def test_coherence_and_oracle_agreement(seed):
    t = micro_task(seed)
    for h in _all_hypotheses(t):
        solution = is_inductive_solution(t, h)
        positive = is_positive_hypothesis(t, h)
        reason = find_violating_reason(t, h) if positive else None
        assert solution == (positive and reason is None)
        assert solution == oracle.is_solution(t, h.ids)
        if reason is not None:
            # a reason refutes the hypothesis it came from
            assert not is_remaining_hypothesis(t, h, [reason])
            rules = list(ground(t.program(h)))
            if isinstance(reason, ViolatingInterpretation):
                assert reason.interpretation in oracle.answer_sets(rules)
                assert any(oracle.extends(reason.interpretation, e) for e in t.negatives)
            else:
                assert not oracle.better(rules, reason.first, reason.second)
