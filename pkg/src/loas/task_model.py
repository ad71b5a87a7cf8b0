"""Learning tasks, hypotheses, violating reasons and the judgements over them."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

from .asp.semantics import WeakProfile, profile_dominates, weak_profile
from .asp.solver import enumerate_answer_sets, has_classical_model
from .asp.syntax import Atom, Program, WeakConstraint, atom_key, interpretation_str
from .errors import TaskError
from .hyp_space import SearchSpace

BRAVE = "brave"
CAUTIOUS = "cautious"


@dataclass(frozen=True)
class PartialInterpretation:
    inc: frozenset
    exc: frozenset
    id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "inc", frozenset(self.inc))
        object.__setattr__(self, "exc", frozenset(self.exc))

    def __str__(self):
        inc = ", ".join(str(a) for a in sorted(self.inc, key=atom_key))
        exc = ", ".join(str(a) for a in sorted(self.exc, key=atom_key))
        return f"<{{{inc}}}, {{{exc}}}>"


@dataclass(frozen=True)
class OrderingExample:
    first: str
    second: str
    kind: str = BRAVE
    id: str = ""

    def __post_init__(self):
        if self.kind not in (BRAVE, CAUTIOUS):
            raise ValueError(f"unknown ordering kind {self.kind!r}")


@dataclass(frozen=True)
class Hypothesis:
    ids: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "ids", frozenset(self.ids))

    def cost(self, space: SearchSpace) -> int:
        return space.cost(self.ids)

    def program(self, space: SearchSpace) -> Program:
        return space.program(self.ids)

    def sorted_ids(self, space: SearchSpace) -> list:
        return sorted(self.ids, key=space.index)

    def __len__(self):
        return len(self.ids)


@dataclass(frozen=True)
class ViolatingInterpretation:
    interpretation: frozenset

    def __str__(self):
        return f"violating interpretation {interpretation_str(self.interpretation)}"


@dataclass(frozen=True)
class ViolatingPair:
    first: frozenset
    second: frozenset
    ordering: OrderingExample

    def __str__(self):
        return (
            f"violating pair ({interpretation_str(self.first)}, {interpretation_str(self.second)}) "
            f"for ordering ({self.ordering.first}, {self.ordering.second})"
        )


@dataclass
class LearningTask:
    background: Program
    space: SearchSpace
    positives: tuple = ()
    negatives: tuple = ()
    orderings: tuple = ()
    max_level: int | None = None
    _as_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        ids = [e.id for e in self.positives]
        if len(set(ids)) != len(ids):
            raise TaskError("duplicate positive example ids")
        pos = set(ids)
        for o in self.orderings:
            for end in (o.first, o.second):
                if end not in pos:
                    raise TaskError(f"ordering endpoint {end!r} is not a positive example")
            if o.kind == CAUTIOUS and o.first == o.second:
                raise TaskError(f"cautious ordering ({o.first}, {o.second}) orders an example against itself")

    @cached_property
    def example(self) -> dict:
        return {e.id: e for e in self.positives}

    @property
    def brave(self) -> list:
        return [o for o in self.orderings if o.kind == BRAVE]

    @property
    def cautious(self) -> list:
        return [o for o in self.orderings if o.kind == CAUTIOUS]

    def program(self, h: Hypothesis) -> Program:
        return self.background + h.program(self.space)

    def answer_sets(self, h: Hypothesis) -> list:
        """AS(B ∪ H); weak constraints never matter, so results are shared."""
        key = frozenset(i for i in h.ids if type(self.space[i].rule) is not WeakConstraint)
        cached = self._as_cache.get(key)
        if cached is None:
            prog = self.background.non_weak() + Program(self.space[i].rule for i in sorted(key, key=self.space.index))
            cached = enumerate_answer_sets(prog)
            self._as_cache[key] = cached
        return cached


# ---------------------------------------------------------------------------
# basic judgements


def interpretation_extends(a, e: PartialInterpretation) -> bool:
    return e.inc <= a and not (e.exc & a)


def partial_extends(e1: PartialInterpretation, e2: PartialInterpretation) -> bool:
    return e2.inc <= e1.inc and e2.exc <= e1.exc


class _Ranking:
    """Weak profiles of a fixed set of answer sets under one program."""

    def __init__(self, program: Program, answer_sets):
        self.weak = program.weak()
        self.answer_sets = answer_sets
        self._profiles: dict = {}

    def profile(self, a) -> WeakProfile:
        p = self._profiles.get(a)
        if p is None:
            p = weak_profile(self.weak, a)
            self._profiles[a] = p
        return p

    def dominates(self, a1, a2) -> bool:
        return profile_dominates(self.profile(a1), self.profile(a2))

    def extending(self, e: PartialInterpretation) -> list:
        return [a for a in self.answer_sets if interpretation_extends(a, e)]


def _respects(r: _Ranking, kind: str, e1, e2) -> bool:
    ext1, ext2 = r.extending(e1), r.extending(e2)
    if kind == BRAVE:
        return any(r.dominates(a1, a2) for a1 in ext1 for a2 in ext2)
    return all(r.dominates(a1, a2) for a1 in ext1 for a2 in ext2)


def respects_ordering(p: Program, o: OrderingExample, e1: PartialInterpretation, e2: PartialInterpretation,
                      answer_sets=None) -> bool:
    """Brave or cautious respect over AS(p) and the weak constraints of ``p``.

    ``answer_sets`` may pass AS(p) when the caller already has it.
    """
    if answer_sets is None:
        answer_sets = enumerate_answer_sets(p.non_weak())
    return _respects(_Ranking(p, answer_sets), o.kind, e1, e2)


def ranking(t: LearningTask, h: Hypothesis) -> "_Ranking":
    """Answer sets of B ∪ H with their weak profiles, computed lazily."""
    return _Ranking(t.program(h), t.answer_sets(h))


def is_positive_hypothesis(t: LearningTask, h: Hypothesis, rk: _Ranking | None = None) -> bool:
    r = rk or ranking(t, h)
    for e in t.positives:
        if not r.extending(e):
            return False
    return all(_respects(r, BRAVE, t.example[o.first], t.example[o.second]) for o in t.brave)


def _witness_key(a) -> tuple:
    # smaller interpretations first, then canonical atom order
    return (len(a), sorted(a, key=atom_key))


def _least(models):
    return min(models, key=_witness_key) if models else None


def find_violating_reason(t: LearningTask, h: Hypothesis, rk: _Ranking | None = None):
    """A violating interpretation if one exists, else a violating pair, else None.

    Interpretations come before pairs; among witnesses the smallest is
    chosen, ties broken by canonical atom order.
    """
    r = rk or ranking(t, h)
    witnesses = [a for a in r.answer_sets if any(interpretation_extends(a, e) for e in t.negatives)]
    if witnesses:
        return ViolatingInterpretation(_least(witnesses))
    for o in t.cautious:
        ext1 = r.extending(t.example[o.first])
        ext2 = r.extending(t.example[o.second])
        bad = [(a1, a2) for a1 in ext1 for a2 in ext2 if not r.dominates(a1, a2)]
        if bad:
            a1, a2 = min(bad, key=lambda p: (_witness_key(p[0]), _witness_key(p[1])))
            return ViolatingPair(a1, a2, o)
    return None


def is_violating_hypothesis(t: LearningTask, h: Hypothesis) -> bool:
    return is_positive_hypothesis(t, h) and find_violating_reason(t, h) is not None


def is_remaining_hypothesis(t: LearningTask, h: Hypothesis, vr, rk: _Ranking | None = None) -> bool:
    r = rk or ranking(t, h)
    members = set(r.answer_sets)
    for reason in vr:
        if isinstance(reason, ViolatingInterpretation):
            if reason.interpretation in members:
                return False
        elif reason.first in members and reason.second in members:
            if not r.dominates(reason.first, reason.second):
                return False
    return True


def is_inductive_solution(t: LearningTask, h: Hypothesis) -> bool:
    r = ranking(t, h)
    if not is_positive_hypothesis(t, h, r):
        return False
    if any(interpretation_extends(a, e) for a in r.answer_sets for e in t.negatives):
        return False
    return all(_respects(r, CAUTIOUS, t.example[o.first], t.example[o.second]) for o in t.cautious)


# ---------------------------------------------------------------------------
# consistency conditions


@dataclass(frozen=True)
class ConditionResult:
    name: str
    necessary: bool
    passed: bool
    detail: str = ""


@dataclass
class ConsistencyReport:
    results: list

    @property
    def unsatisfiable(self) -> bool:
        """A necessary condition fails, so the task has no inductive solution."""
        return any(r.necessary and not r.passed for r in self.results)

    def failed(self, necessary: bool | None = None) -> list:
        return [r for r in self.results if not r.passed and (necessary is None or r.necessary == necessary)]

    def __str__(self):
        lines = []
        for r in self.results:
            kind = "necessary" if r.necessary else "sufficient"
            status = "ok" if r.passed else ("UNSATISFIABLE" if r.necessary else "not met")
            line = f"{kind} {r.name}: {status}"
            if r.detail:
                line += f" ({r.detail})"
            lines.append(line)
        return "\n".join(lines)


def _cycle(nodes, edges):
    """Some cycle of the digraph as a list of nodes, or None."""
    color = {n: 0 for n in nodes}
    parent = {}
    for start in sorted(nodes):
        if color[start]:
            continue
        stack = [(start, iter(sorted(edges.get(start, ()))))]
        color[start] = 1
        while stack:
            node, it = stack[-1]
            for nxt in it:
                if color.get(nxt, 0) == 1:
                    path = [node]
                    while path[-1] != nxt:
                        path.append(parent[path[-1]])
                    return list(reversed(path))
                if color.get(nxt, 0) == 0:
                    color[nxt] = 1
                    parent[nxt] = node
                    stack.append((nxt, iter(sorted(edges.get(nxt, ())))))
                    break
            else:
                color[node] = 2
                stack.pop()
    return None


def _digraph(orderings):
    edges: dict = {}
    for o in orderings:
        edges.setdefault(o.first, set()).add(o.second)
    return edges


def check_task_conditions(t: LearningTask) -> ConsistencyReport:
    results = []
    bad = [e.id for e in t.positives if not has_classical_model(t.background, e.inc, e.exc)]
    results.append(ConditionResult(
        "(i) every positive example extends a classical model of B", True, not bad,
        f"no model for {', '.join(bad)}" if bad else ""))
    pairs = [(p.id, n.id) for p in t.positives for n in t.negatives if partial_extends(p, n)]
    results.append(ConditionResult(
        "(ii) no positive example extends a negative example", True, not pairs,
        "; ".join(f"{p} extends {n}" for p, n in pairs)))
    ids = [e.id for e in t.positives]
    cyc = _cycle(ids, _digraph(t.cautious))
    results.append(ConditionResult(
        "(iii) no cycle of cautious orderings", True, cyc is None,
        " -> ".join(cyc + cyc[:1]) if cyc else ""))
    # sufficient conditions (advisory)
    ext = []
    examples = list(t.positives) + list(t.negatives)
    for p in t.positives:
        for e in examples:
            if e is not p and partial_extends(p, e):
                ext.append((p.id, e.id))
    results.append(ConditionResult(
        "(i) no positive example extends another example", False, not ext,
        "; ".join(f"{a} extends {b}" for a, b in ext)))
    results.append(ConditionResult(
        "(ii) every positive example extends a classical model of B", False, not bad, ""))
    cyc_all = _cycle(ids, _digraph(t.orderings))
    results.append(ConditionResult(
        "(iii) no cycle of brave and cautious orderings", False, cyc_all is None,
        " -> ".join(cyc_all + cyc_all[:1]) if cyc_all else ""))
    return ConsistencyReport(results)
