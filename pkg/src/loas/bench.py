"""Desk-scale reproduction of the scheduling accuracy experiment.

A target hypothesis is sampled from the scheduling search space, ordering
examples are generated from its ranking of the timetables, a hypothesis is
learned from them and compared with the target on every pair of answer sets.
"""

from __future__ import annotations

import csv
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .asp.semantics import comparison_outcome, weak_profile
from .asp.solver import enumerate_answer_sets
from .asp.syntax import Atom, ChoiceRule, Constant, Integer, Literal, NormalRule, Program, Variable, WeakConstraint
from .engine import EngineConfig, ilasp2
from .errors import ExhaustedSampling
from .hyp_space import ModeBiasWithOrdering, ModeDeclaration, SearchSpace, build_search_space
from .task_model import BRAVE, CAUTIOUS, LearningTask, OrderingExample, PartialInterpretation, respects_ordering

DAY_NAMES = ("m", "t", "w", "h", "f", "s", "u")
# slot carrying a c1 course on each day of the three-day timetable (None: no c1 course)
C1_PATTERN = (1, None, 2)

MAX_REJECTIONS = 1000


@dataclass
class BenchSpec:
    days: int = 3
    slots_per_day: int = 3
    num_targets: int = 10
    trials_per_target: int = 5
    num_examples: int = 10
    fullness_range: tuple = (5 / 9, 1.0)
    seed: int = 0
    max_rules: int = 3

    def __post_init__(self):
        if self.days < 1 or self.slots_per_day < 1:
            raise ValueError("days and slots_per_day must be positive")
        if self.days > len(DAY_NAMES):
            raise ValueError(f"at most {len(DAY_NAMES)} days are supported")
        lo, hi = self.fullness_range
        if not 0 <= lo <= hi <= 1:
            raise ValueError(f"bad fullness range {self.fullness_range}")


# ---------------------------------------------------------------------------
# domain


def _atom(pred, *args) -> Atom:
    return Atom(pred, [Integer(a) if isinstance(a, int) else Constant(a) for a in args])


def _fact(a: Atom) -> NormalRule:
    return NormalRule(a, ())


def scheduling_background(days: int = 3, slots: int = 3) -> Program:
    """Slots, inequality, course types and the assignment choice.

    Course types repeat the three-day pattern cyclically for longer weeks.
    """
    names = DAY_NAMES[:days]
    rules = [_fact(_atom("slot", d, s)) for d in names for s in range(1, slots + 1)]
    rules += [_fact(_atom("neq", a, b)) for a in range(1, slots + 1) for b in range(1, slots + 1) if a != b]
    rules += [_fact(_atom("neq", a, b)) for a in names for b in names if a != b]
    for i, d in enumerate(names):
        c1 = C1_PATTERN[i % len(C1_PATTERN)]
        for s in range(1, slots + 1):
            rules.append(_fact(_atom("type", d, s, "c1" if s == c1 else "c2")))
    x, y = Variable("X"), Variable("Y")
    rules.append(ChoiceRule(0, 1, (Atom("assign", (x, y)),), (Literal(Atom("slot", (x, y))),)))
    return Program(rules)


def scheduling_bias(max_level: int = 2) -> ModeBiasWithOrdering:
    decls = tuple(
        ModeDeclaration(p, marks)
        for p, marks in (("assign", ("v", "v")), ("neq", ("v", "v")), ("type", ("v", "v", "c")))
    )
    return ModeBiasWithOrdering(
        ordering_decls=decls,
        weights=(-1, 1),
        max_level=max_level,
        constants=(Constant("c1"), Constant("c2")),
    )


_ROLES = {"assign": ("day", "slot"), "type": ("day", "slot", None), "neq": (None, None)}


def _useful(rule) -> bool:
    """Drop weak constraints that are vacuous or duplicate others over this domain.

    Variables are typed (day or slot) by their position in assign/type,
    assign literals are positive, every variable occurs in one of them, and
    neq only relates two distinct variables of the same type.
    """
    sort: dict = {}
    assigned = set()
    for lit in rule.body:
        a = lit.atom
        if a.predicate == "assign":
            if lit.negated:
                return False
            assigned |= set(a.variables())
        for t, role in zip(a.args, _ROLES[a.predicate]):
            if isinstance(t, Variable) and role and sort.setdefault(t, role) != role:
                return False
    if not assigned:
        return False
    for lit in rule.body:
        a = lit.atom
        if a.predicate == "neq":
            x, y = a.args
            if x == y or sort.get(x) is None or sort.get(x) != sort.get(y):
                return False
        if set(a.variables()) - assigned:
            return False
    return True


def scheduling_space(max_level: int = 2) -> SearchSpace:
    full = build_search_space(scheduling_bias(max_level))
    return SearchSpace.from_rules([e.rule for e in full if _useful(e.rule)])


def generate_scheduling_task(spec: BenchSpec) -> LearningTask:
    """Background and search space of the scheduling domain, without examples."""
    return LearningTask(
        background=scheduling_background(spec.days, spec.slots_per_day),
        space=scheduling_space(),
        max_level=2,
    )


def assignable_atoms(background: Program) -> list:
    return sorted(
        (Atom("assign", r.head.args) for r in background
         if type(r) is NormalRule and not r.body and r.head.predicate == "slot"),
        key=str,
    )


# ---------------------------------------------------------------------------
# sampling


def _ranks_something(weak: Program, answer_sets) -> bool:
    profiles = {weak_profile(weak, a) for a in answer_sets}
    return len(profiles) > 1


def sample_target_hypothesis(space: SearchSpace, rng: random.Random, background: Program,
                             answer_sets=None, max_rules: int = 3, max_tries: int = MAX_REJECTIONS):
    """1 to ``max_rules`` weak constraints drawn uniformly from ``space``.

    Draws under which every answer set of the background has the same weak
    profile are rejected.  Returns the list of space ids.
    """
    weak_ids = [e.id for e in space if type(e.rule) is WeakConstraint]
    if not weak_ids:
        raise ExhaustedSampling("the space has no weak constraints")
    if answer_sets is None:
        answer_sets = enumerate_answer_sets(background)
    for _ in range(max_tries):
        k = rng.randint(1, min(max_rules, len(weak_ids)))
        ids = rng.sample(weak_ids, k)
        if _ranks_something(space.program(ids), answer_sets):
            return sorted(ids, key=space.index)
    raise ExhaustedSampling(f"no ranking hypothesis after {max_tries} draws")


def _partial(a, atoms, count, rng, ident) -> PartialInterpretation:
    chosen = rng.sample(atoms, count)
    inc = {x for x in chosen if x in a}
    exc = {x for x in chosen if x not in a}
    return PartialInterpretation(inc, exc, ident)


def generate_ordering_examples(target: Program, background: Program, n: int, fullness, rng: random.Random,
                               answer_sets=None, max_tries: int = MAX_REJECTIONS):
    """``n`` orderings bravely respected by ``background`` plus ``target``.

    Returns ``(positives, brave, cautious)``; an ordering goes to the cautious
    set exactly when it is also cautiously respected.
    """
    if n == 0:
        return [], [], []
    program = background + target
    if answer_sets is None:
        answer_sets = enumerate_answer_sets(background)
    weak = target.weak()
    atoms = assignable_atoms(background)
    lo = max(0, round(fullness[0] * len(atoms)))
    hi = round(fullness[1] * len(atoms))
    positives, brave, cautious = [], [], []
    tries = 0
    while len(brave) + len(cautious) < n:
        tries += 1
        if tries > max_tries * n:
            raise ExhaustedSampling("could not generate enough ordered pairs")
        a1, a2 = rng.sample(answer_sets, 2)
        outcome = comparison_outcome(weak_profile(weak, a1), weak_profile(weak, a2))
        if outcome == 0:
            continue
        if outcome < 0:
            a1, a2 = a2, a1
        k = len(brave) + len(cautious)
        e1 = _partial(a1, atoms, rng.randint(lo, hi), rng, f"e{2 * k + 1}")
        e2 = _partial(a2, atoms, rng.randint(lo, hi), rng, f"e{2 * k + 2}")
        positives += [e1, e2]
        o = OrderingExample(e1.id, e2.id, CAUTIOUS, f"o{k + 1}")
        if respects_ordering(program, o, e1, e2, answer_sets):
            cautious.append(o)
        else:
            brave.append(OrderingExample(e1.id, e2.id, BRAVE, o.id))
    return positives, brave, cautious


def pairwise_accuracy(target: Program, learned: Program, background: Program, answer_sets=None) -> float:
    """Fraction of unordered answer-set pairs on which both rank identically.

    The comparison is three-way: first better, second better, or neither.
    """
    if answer_sets is None:
        answer_sets = enumerate_answer_sets(background)
    wt, wl = target.weak(), learned.weak()
    pt = [weak_profile(wt, a) for a in answer_sets]
    pl = [weak_profile(wl, a) for a in answer_sets]
    n = len(answer_sets)
    if n < 2:
        return 1.0
    agree = total = 0
    for i in range(n):
        for j in range(i + 1, n):
            total += 1
            agree += comparison_outcome(pt[i], pt[j]) == comparison_outcome(pl[i], pl[j])
    return agree / total


# ---------------------------------------------------------------------------
# experiment driver

CSV_COLUMNS = ("target_id", "trial", "n_examples", "fullness_mean", "accuracy", "wall_ms", "iterations")


@dataclass
class TrialResult:
    target_id: int
    trial: int
    n_examples: int
    fullness_mean: float
    accuracy: float
    wall_ms: float
    iterations: int
    target: list = field(default_factory=list)
    learned: list = field(default_factory=list)

    def row(self) -> dict:
        return {
            "target_id": self.target_id,
            "trial": self.trial,
            "n_examples": self.n_examples,
            "fullness_mean": round(self.fullness_mean, 4),
            "accuracy": round(self.accuracy, 6),
            "wall_ms": round(self.wall_ms, 1),
            "iterations": self.iterations,
        }


def _targets(spec: BenchSpec, skeleton: LearningTask, answer_sets) -> list:
    rng = random.Random(f"{spec.seed}:targets")
    return [
        sample_target_hypothesis(skeleton.space, rng, skeleton.background, answer_sets, spec.max_rules)
        for _ in range(spec.num_targets)
    ]


def run_trial(spec: BenchSpec, target_index: int, trial: int, config: EngineConfig, _cache={}) -> TrialResult:
    """One learning run; the RNG stream depends only on (seed, target, trial)."""
    key = (spec.days, spec.slots_per_day, spec.seed, spec.num_targets, spec.max_rules)
    if key not in _cache:
        skeleton = generate_scheduling_task(spec)
        answer_sets = enumerate_answer_sets(skeleton.background)
        _cache.clear()
        _cache[key] = (skeleton, answer_sets, _targets(spec, skeleton, answer_sets))
    skeleton, answer_sets, targets = _cache[key]
    space = skeleton.space
    target_ids = targets[target_index]
    target = space.program(target_ids)
    rng = random.Random(f"{spec.seed}:{target_index}:{trial}:{spec.num_examples}")
    positives, brave, cautious = generate_ordering_examples(
        target, skeleton.background, spec.num_examples, spec.fullness_range, rng, answer_sets)
    task = LearningTask(
        background=skeleton.background,
        space=space,
        positives=tuple(positives),
        orderings=tuple(brave + cautious),
        max_level=skeleton.max_level,
    )
    start = time.perf_counter()
    result = ilasp2(task, config)
    wall = (time.perf_counter() - start) * 1000
    learned_ids = sorted(result.solutions[0].ids, key=space.index) if result.solutions else []
    atoms = len(assignable_atoms(skeleton.background))
    specified = [len(e.inc) + len(e.exc) for e in positives]
    fullness = sum(specified) / (len(specified) * atoms) if specified else 0.0
    accuracy = pairwise_accuracy(target, space.program(learned_ids), skeleton.background, answer_sets)
    return TrialResult(target_index, trial, spec.num_examples, fullness, accuracy, wall,
                       result.iterations, list(target_ids), learned_ids)


def _run_one(args):
    return run_trial(*args)


def run_accuracy(spec: BenchSpec, config: EngineConfig, jobs: int = 1) -> list:
    """All (target, trial) runs of ``spec`` in a fixed order."""
    work = [(spec, t, k, config) for t in range(spec.num_targets) for k in range(spec.trials_per_target)]
    if jobs <= 1:
        return [_run_one(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_one, work))


def write_csv(results, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for r in results:
            w.writerow(r.row())


def mean_accuracy(results) -> float:
    return sum(r.accuracy for r in results) / len(results) if results else 0.0
