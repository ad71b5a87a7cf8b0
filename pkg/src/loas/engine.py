"""The ILASP2 learning loop, its solver backends and a brute-force oracle."""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

from .asp import solver as native
from .asp.syntax import Atom, Constant, HardConstraint, Literal, Program
from .errors import IterationLimitExceeded, LoasError, ResourceLimit, SpaceTooLarge
from .external import default_command, run_solver
from .meta_encoding import MetaContext, build_t_meta, build_vr_meta, decode_hypothesis, decode_meta_answer_set
from .task_model import (
    Hypothesis,
    LearningTask,
    ranking,
    find_violating_reason,
    is_inductive_solution,
    is_positive_hypothesis,
    is_remaining_hypothesis,
)

BRUTE_FORCE_LIMIT = 16
_VIOLATING = Atom("violating")


class Strategy(enum.Enum):
    META_NATIVE = "meta-native"
    META_EXTERNAL = "meta-external"
    DIRECT = "direct"


@dataclass
class EngineConfig:
    strategy: Strategy = Strategy.META_NATIVE
    external_command: str | None = None
    max_iterations: int = 10_000
    timeout_seconds: float | None = None
    transcript: bool = False

    def __post_init__(self):
        if isinstance(self.strategy, str):
            self.strategy = Strategy(self.strategy)
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.strategy is Strategy.META_EXTERNAL:
            self.external_command = self.external_command or default_command()
            if not self.external_command:
                raise ValueError("the meta-external strategy needs a solver command")


@dataclass(frozen=True)
class SolveResult:
    answer_set: frozenset
    optimality: int


@dataclass
class LearnResult:
    solutions: list
    iterations: int
    reasons: list
    # (meta optimality, hypothesis, violating flag) for each optimal model seen
    trace: list = field(default_factory=list)
    wall_time: float = 0.0


class _Deadline:
    def __init__(self, seconds):
        self.end = None if seconds is None else time.monotonic() + seconds

    def remaining(self):
        if self.end is None:
            return None
        left = self.end - time.monotonic()
        if left <= 0:
            raise ResourceLimit("time budget exhausted")
        return left

    def check(self):
        self.remaining()


def solve_optimal(p: Program, config: EngineConfig | None = None, timeout=None) -> SolveResult | None:
    """One optimal answer set with its level-0 cost, or None if unsatisfiable."""
    config = config or EngineConfig()
    if config.strategy is Strategy.META_EXTERNAL:
        out = run_solver(config.external_command, p, timeout, config.transcript)
        if out is None:
            return None
        atoms, costs = out
        return SolveResult(atoms, costs[-1] if costs else 0)
    out = native.solve_optimal(p)
    if out is None:
        return None
    model, sums = out
    return SolveResult(model, sums.get(0, 0))


# ---------------------------------------------------------------------------
# meta-level strategies


def _hyp_block(ctx: MetaContext, h: Hypothesis) -> HardConstraint:
    body = []
    for e in ctx.task.space:
        body.append(Literal(Atom("in_h", (Constant(e.id),)), e.id not in h.ids))
    return HardConstraint(tuple(body))


def _all_optimal(ctx, program, best: SolveResult, config, deadline, trace) -> list:
    """Every optimal hypothesis; each optimal model seen is appended to ``trace``."""
    if config.strategy is Strategy.META_NATIVE:
        proj = [Atom("in_h", (Constant(e.id),)) for e in ctx.task.space] + [_VIOLATING]
        models = native.optimal_answer_sets(program, projection=proj)
        hs = []
        for m in models:
            h = decode_hypothesis(ctx, m)
            trace.append((best.optimality, h, _VIOLATING in m))
            hs.append(h)
        return _unique(hs)
    # external: block each hypothesis found and re-solve while the optimum holds
    found = [decode_hypothesis(ctx, best.answer_set)]
    blocks = [_hyp_block(ctx, found[0])]
    while True:
        res = solve_optimal(program + Program(blocks), config, deadline.remaining())
        if res is None or res.optimality != best.optimality:
            return found
        h = decode_hypothesis(ctx, res.answer_set)
        trace.append((res.optimality, h, _VIOLATING in res.answer_set))
        found.append(h)
        blocks.append(_hyp_block(ctx, h))


def _unique(hs) -> list:
    seen, out = set(), []
    for h in hs:
        if h.ids not in seen:
            seen.add(h.ids)
            out.append(h)
    return out


def _ilasp2_meta(t: LearningTask, config: EngineConfig, deadline: _Deadline) -> LearnResult:
    ctx = MetaContext.for_task(t)
    t_meta = build_t_meta(ctx).program
    vr: list = []
    trace: list = []
    iterations = 0
    while True:
        iterations += 1
        if iterations > config.max_iterations:
            raise IterationLimitExceeded(config.max_iterations)
        program = t_meta + build_vr_meta(ctx, vr).program
        res = solve_optimal(program, config, deadline.remaining())
        if res is None:
            return LearnResult([], iterations, vr, trace)
        h, reason = decode_meta_answer_set(ctx, res.answer_set)
        trace.append((res.optimality, h, _VIOLATING in res.answer_set))
        if res.optimality % 2 == 1:
            sols = _all_optimal(ctx, program, res, config, deadline, trace)
            return LearnResult(_sorted(t, sols), iterations, vr, trace)
        if reason is None or reason in vr:
            raise LoasError(f"meta optimum {res.optimality} is even but yields no new violating reason")
        vr.append(reason)


# ---------------------------------------------------------------------------
# direct strategy


def subsets_by_cost(space, max_cost=None):
    """Yield (cost, ids) for every subset of ``space`` in nondecreasing cost.

    Subsets of equal cost come in a fixed order.
    """
    entries = sorted(space, key=lambda e: (e.cost, space.index(e.id)))
    costs = [e.cost for e in entries]
    total = sum(costs)
    limit = total if max_cost is None else min(total, max_cost)
    suffix = [0] * (len(entries) + 1)
    for i in range(len(entries) - 1, -1, -1):
        suffix[i] = suffix[i + 1] + costs[i]

    def exact(i, remaining, chosen):
        if remaining == 0:
            yield tuple(chosen)
            return
        if i == len(entries) or suffix[i] < remaining:
            return
        if costs[i] <= remaining:
            chosen.append(entries[i].id)
            yield from exact(i + 1, remaining - costs[i], chosen)
            chosen.pop()
        yield from exact(i + 1, remaining, chosen)

    for c in range(0, limit + 1):
        for ids in exact(0, c, []):
            yield c, frozenset(ids)


def _ilasp2_direct(t: LearningTask, config: EngineConfig, deadline: _Deadline) -> LearnResult:
    vr: list = []
    positive: dict = {}
    dead: set = set()
    trace: list = []
    iterations = 0
    while True:
        iterations += 1
        if iterations > config.max_iterations:
            raise IterationLimitExceeded(config.max_iterations)
        best_cost = None
        candidates = []
        for c, ids in subsets_by_cost(t.space):
            if best_cost is not None and c > best_cost:
                break
            if ids in dead:
                continue
            deadline.check()
            h = Hypothesis(ids)
            r = ranking(t, h)
            pos = positive.get(ids)
            if pos is None:
                pos = positive[ids] = is_positive_hypothesis(t, h, r)
            if not pos:
                continue
            if not is_remaining_hypothesis(t, h, vr, r):
                dead.add(ids)
                continue
            best_cost = c
            candidates.append((h, r))
        if best_cost is None:
            return LearnResult([], iterations, vr, trace)
        for h, r in candidates:
            reason = find_violating_reason(t, h, r)
            if reason is not None:
                trace.append((2 * best_cost, h, True))
                vr.append(reason)
                dead.add(h.ids)
                break
        else:
            trace.append((2 * best_cost + 1, candidates[0][0], False))
            return LearnResult(_sorted(t, [h for h, _ in candidates]), iterations, vr, trace)


def _sorted(t: LearningTask, hs) -> list:
    return sorted(hs, key=lambda h: (h.cost(t.space), sorted(t.space.index(i) for i in h.ids)))


def ilasp2(t: LearningTask, config: EngineConfig | None = None) -> LearnResult:
    """Optimal inductive solutions of ``t`` (empty when there are none)."""
    config = config or EngineConfig()
    deadline = _Deadline(config.timeout_seconds)
    start = time.perf_counter()
    if config.strategy is Strategy.DIRECT:
        result = _ilasp2_direct(t, config, deadline)
    else:
        result = _ilasp2_meta(t, config, deadline)
    result.wall_time = time.perf_counter() - start
    return result


def brute_force_solutions(t: LearningTask, limit: int = BRUTE_FORCE_LIMIT) -> list:
    """All minimum-cost inductive solutions, by exhaustive cost-ordered search."""
    if len(t.space) > limit:
        raise SpaceTooLarge(len(t.space), limit)
    best = None
    out = []
    for c, ids in subsets_by_cost(t.space):
        if best is not None and c > best:
            break
        h = Hypothesis(ids)
        if is_inductive_solution(t, h):
            best = c
            out.append(h)
    return _sorted(t, out)


__all__ = [
    "BRUTE_FORCE_LIMIT",
    "EngineConfig",
    "LearnResult",
    "SolveResult",
    "Strategy",
    "brute_force_solutions",
    "ilasp2",
    "solve_optimal",
    "subsets_by_cost",
]
