"""Declarative semantics: reduct, answer-set test, weak profiles and dominance.

These functions follow the definitions directly and are deliberately kept
independent from the search engine in :mod:`loas.asp.solver`; the test suite
uses them to cross-check enumeration.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from ..errors import NotGround
from .grounder import ground
from .syntax import (
    BOTTOM,
    Aggregate,
    Atom,
    ChoiceRule,
    Comparison,
    HardConstraint,
    Integer,
    Literal,
    NormalRule,
    Program,
    WeakConstraint,
    rule_is_ground,
    term_key,
)

BOT = Atom(BOTTOM)


def _require_ground(p: Program):
    for r in p:
        if not rule_is_ground(r):
            raise NotGround(f"rule is not ground: {r}")


def compute_reduct(p: Program, i) -> Program:
    """The simplified reduct of ``p`` with respect to interpretation ``i``.

    Aggregates and comparisons are evaluated against ``i`` like negative
    literals: a false one removes the rule, a true one is dropped.
    """
    _require_ground(p)
    i = frozenset(i)
    out = []
    for r in p:
        if type(r) is WeakConstraint:
            continue
        positives = []
        removed = False
        for b in r.body:
            tp = type(b)
            if tp is Literal:
                if b.negated:
                    if b.atom in i:
                        removed = True
                        break
                else:
                    positives.append(Literal(b.atom))
            elif tp is Comparison:
                if not b.evaluate():
                    removed = True
                    break
            elif tp is Aggregate:
                if not b.evaluate(i):
                    removed = True
                    break
        if removed:
            continue
        body = tuple(positives)
        tp = type(r)
        if tp is NormalRule:
            out.append(NormalRule(r.head, body))
        elif tp is HardConstraint:
            out.append(NormalRule(BOT, body))
        else:
            chosen = [h for h in r.heads if h in i]
            if not r.lower <= len(set(chosen)) <= r.upper:
                out.append(NormalRule(BOT, body))
            else:
                out.extend(NormalRule(h, body) for h in chosen)
    return Program(out)


def least_model(p: Program) -> frozenset:
    """Least model of a negation-free program of normal rules."""
    waiting = defaultdict(list)
    missing = []
    heads = []
    model = set()
    queue = []
    for idx, r in enumerate(p):
        body = {b.atom for b in r.body}
        heads.append(r.head)
        missing.append(len(body))
        for a in body:
            waiting[a].append(idx)
        if not body:
            queue.append(r.head)
    while queue:
        a = queue.pop()
        if a in model:
            continue
        model.add(a)
        for idx in waiting.get(a, ()):
            missing[idx] -= 1
            if missing[idx] == 0:
                queue.append(heads[idx])
    return frozenset(model)


def is_answer_set(p: Program, i) -> bool:
    i = frozenset(i)
    if BOT in i:
        return False
    m = least_model(compute_reduct(p, i))
    return BOT not in m and m == i


@dataclass(frozen=True)
class WeakProfile:
    tuples: frozenset
    level_sums: dict = field(hash=False, compare=False)

    @classmethod
    def from_tuples(cls, tuples) -> "WeakProfile":
        tuples = frozenset(tuples)
        sums: dict[int, int] = defaultdict(int)
        for w, lev, _ in tuples:
            sums[lev] += w
        return cls(tuples, dict(sums))

    def level_sum(self, level: int) -> int:
        return self.level_sums.get(level, 0)

    def sorted_tuples(self) -> list:
        return sorted(self.tuples, key=lambda t: (t[1], t[0], tuple(term_key(x) for x in t[2])))


def _body_holds(body, i) -> bool:
    for b in body:
        tp = type(b)
        if tp is Literal:
            if (b.atom in i) == b.negated:
                return False
        elif tp is Comparison:
            if not b.evaluate():
                return False
        elif not b.evaluate(i):
            return False
    return True


def _ground_weak(p: Program, a: frozenset) -> Program:
    if p.is_ground():
        return p.weak()
    facts = [NormalRule(x) for x in a]
    return ground(Program(list(p.weak()) + facts)).weak()


def weak_profile(p: Program, a) -> WeakProfile:
    """``weak(P, A)`` together with the per-level sums.

    A non-ground ``p`` is instantiated over the atoms of ``a``.
    """
    a = frozenset(a)
    tuples = set()
    for r in _ground_weak(p, a):
        if _body_holds(r.body, a):
            if type(r.weight) is not Integer or type(r.level) is not Integer:
                raise NotGround(f"weak constraint with non-integer weight or level: {r}")
            tuples.add((r.weight.value, r.level.value, r.terms))
    return WeakProfile.from_tuples(tuples)


def profile_dominates(pr1: WeakProfile, pr2: WeakProfile) -> bool:
    levels = set(pr1.level_sums) | set(pr2.level_sums)
    for lev in sorted(levels, reverse=True):
        s1, s2 = pr1.level_sum(lev), pr2.level_sum(lev)
        if s1 != s2:
            return s1 < s2
    return False


def dominates(p: Program, a1, a2) -> bool:
    """``a1`` is strictly better than ``a2`` under the weak constraints of ``p``."""
    return profile_dominates(weak_profile(p, a1), weak_profile(p, a2))


def comparison_outcome(pr1: WeakProfile, pr2: WeakProfile) -> int:
    """1 if the first profile dominates, -1 if the second does, 0 otherwise."""
    if profile_dominates(pr1, pr2):
        return 1
    if profile_dominates(pr2, pr1):
        return -1
    return 0
