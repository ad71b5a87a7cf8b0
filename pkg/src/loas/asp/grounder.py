"""Relevance-restricted grounding by semi-naive bottom-up instantiation.

An instantiation of a rule is produced only when every positive body atom is
potentially derivable, i.e. occurs as a fact or as a head (choice heads
included) of an instantiation produced earlier.  Aggregate elements are
expanded against the final set of derivable atoms.
"""

from __future__ import annotations

from collections import defaultdict

from ..errors import GroundingError, NonFiniteGrounding
from .syntax import (
    Aggregate,
    AggregateElement,
    Atom,
    ChoiceRule,
    Comparison,
    Function,
    HardConstraint,
    Integer,
    Literal,
    NormalRule,
    Program,
    Variable,
    WeakConstraint,
    rule_is_ground,
)

DEFAULT_NESTING_BOUND = 2


def match_term(pattern, value, binding: dict) -> bool:
    """Extend ``binding`` so that ``pattern`` instantiates to ``value``."""
    tp = type(pattern)
    if tp is Variable:
        bound = binding.get(pattern)
        if bound is None:
            binding[pattern] = value
            return True
        return bound == value
    if tp is Function:
        if type(value) is not Function or value.functor != pattern.functor or len(value.args) != len(pattern.args):
            return False
        if pattern.is_ground:
            return pattern == value
        for p, v in zip(pattern.args, value.args):
            if not match_term(p, v, binding):
                return False
        return True
    return pattern == value


def match_atom(pattern: Atom, atom: Atom, binding: dict):
    """Return an extended copy of ``binding`` or ``None``."""
    b = dict(binding)
    for p, v in zip(pattern.args, atom.args):
        if not match_term(p, v, b):
            return None
    return b


class _AtomStore:
    """Derivable atoms per signature, with arrival stamps and argument indexes."""

    def __init__(self):
        self.stamp: dict[Atom, int] = {}
        self.by_sig: dict[tuple, list] = defaultdict(list)
        self.index: dict[tuple, dict] = defaultdict(lambda: defaultdict(list))

    def add(self, atom: Atom, stamp: int) -> bool:
        if atom in self.stamp:
            return False
        self.stamp[atom] = stamp
        sig = atom.signature
        self.by_sig[sig].append(atom)
        for i, a in enumerate(atom.args):
            self.index[(sig, i)][a].append(atom)
        return True

    def candidates(self, pattern: Atom, binding: dict):
        sig = pattern.signature
        best = None
        for i, arg in enumerate(pattern.args):
            if arg.is_ground:
                val = arg
            elif type(arg) is Variable and arg in binding:
                val = binding[arg]
            else:
                continue
            lst = self.index[(sig, i)].get(val, ())
            if best is None or len(lst) < len(best):
                best = lst
                if not best:
                    break
        if best is None:
            return self.by_sig.get(sig, ())
        return best


class _CompiledRule:
    __slots__ = ("rule", "positives", "comparisons", "bindings", "ground", "orders")

    def __init__(self, rule):
        self.rule = rule
        self.positives = [b.atom for b in rule.body if type(b) is Literal and not b.negated]
        self.comparisons = [b for b in rule.body if type(b) is Comparison]
        self.bindings: list[dict] = []
        self.ground = rule_is_ground(rule)
        self.orders = {}

    def order_for(self, first: int) -> list[int]:
        """Join order starting at positive literal ``first``, greedy on boundness."""
        order = self.orders.get(first)
        if order is not None:
            return order
        bound = set(self.positives[first].variables()) if first >= 0 else set()
        rest = [i for i in range(len(self.positives)) if i != first]
        order = [first] if first >= 0 else []
        while rest:
            def score(i):
                vs = set(self.positives[i].variables())
                unbound = len(vs - bound)
                return (unbound > 0, -len(vs & bound), unbound, i)

            best = min(rest, key=score)
            rest.remove(best)
            order.append(best)
            bound |= set(self.positives[best].variables())
        self.orders[first] = order
        return order


def _heads(rule) -> tuple:
    if type(rule) is NormalRule:
        return (rule.head,)
    if type(rule) is ChoiceRule:
        return rule.heads
    return ()


class Grounder:
    """Incremental grounder: rules may be added after a call to :meth:`ground`."""

    def __init__(self, nesting_bound: int = DEFAULT_NESTING_BOUND, extra_constants=()):
        self.nesting_bound = nesting_bound
        self.extra_constants = frozenset(extra_constants)
        self.store = _AtomStore()
        self.rules: list[_CompiledRule] = []
        self.round = 0
        self._max_input_depth = 0
        self._pending: list[_CompiledRule] = []

    # ------------------------------------------------------------------
    def add(self, rules) -> None:
        for r in rules:
            c = _CompiledRule(r)
            self._max_input_depth = max(self._max_input_depth, _rule_depth(r))
            self.rules.append(c)
            self._pending.append(c)

    @property
    def depth_limit(self) -> int:
        return max(self.nesting_bound, self._max_input_depth)

    def possible_atoms(self) -> set:
        return set(self.store.stamp)

    # ------------------------------------------------------------------
    def _emit_heads(self, c: _CompiledRule, binding: dict, new_round: int, fresh: list):
        limit = self.depth_limit
        for h in _heads(c.rule):
            g = h.substitute(binding)
            if g.depth() > limit:
                raise NonFiniteGrounding(g, limit)
            if self.store.add(g, new_round):
                fresh.append(g)

    def _join(self, c: _CompiledRule, order, pos: int, binding: dict, modes, r: int, out: list):
        if pos == len(order):
            out.append(binding)
            return
        idx = order[pos]
        pattern = c.positives[idx]
        mode = modes[idx]
        stamp = self.store.stamp
        for atom in self.store.candidates(pattern, binding):
            s = stamp[atom]
            if mode == "old":
                if s >= r - 1:
                    continue
            elif mode == "delta":
                if s != r - 1:
                    continue
            elif s > r - 1:
                continue
            b = match_atom(pattern, atom, binding)
            if b is None:
                continue
            if not self._comparisons_ok(c, b):
                continue
            self._join(c, order, pos + 1, b, modes, r, out)

    @staticmethod
    def _comparisons_ok(c: _CompiledRule, binding: dict) -> bool:
        for cmp in c.comparisons:
            g = cmp.substitute(binding)
            if g.is_ground and not g.evaluate():
                return False
        return True

    def _instantiate(self, c: _CompiledRule, r: int, full: bool) -> list:
        """Bindings for ``c`` new in round ``r``.

        With ``full`` every combination of atoms available before round ``r``
        is considered (used for rules added since the last fixpoint).
        """
        k = len(c.positives)
        out: list = []
        if k == 0:
            if full:
                if self._comparisons_ok(c, {}):
                    out.append({})
            return out
        if full:
            modes = ["all"] * k
            self._join(c, c.order_for(-1), 0, {}, modes, r, out)
            return out
        for i in range(k):
            modes = ["old"] * i + ["delta"] + ["all"] * (k - i - 1)
            self._join(c, c.order_for(i), 0, {}, modes, r, out)
        return out

    def _fixpoint(self):
        # Round r consumes atoms stamped r-1 (the delta) and stamps new ones r.
        pending, self._pending = self._pending, []
        self.round += 1
        r = self.round
        fresh: list = []
        for c in pending:
            for b in self._instantiate(c, r, full=True):
                c.bindings.append(b)
                self._emit_heads(c, b, r, fresh)
        while fresh:
            self.round += 1
            r = self.round
            fresh = []
            for c in self.rules:
                if not c.positives:
                    continue
                for b in self._instantiate(c, r, full=False):
                    c.bindings.append(b)
                    self._emit_heads(c, b, r, fresh)

    # ------------------------------------------------------------------
    def ground(self) -> Program:
        if self._pending:
            self._fixpoint()
        out = []
        seen = set()
        for c in self.rules:
            if c.ground:
                rules = [c.rule]
            else:
                rules = [self._ground_rule(c.rule, b) for b in c.bindings]
            for g in rules:
                if g not in seen:
                    seen.add(g)
                    out.append(g)
        return Program(out)

    def _ground_rule(self, rule, binding):
        body = []
        for b in rule.body:
            tp = type(b)
            if tp is Literal:
                body.append(Literal(b.atom.substitute(binding), b.negated))
            elif tp is Comparison:
                g = b.substitute(binding)
                if not g.is_ground:
                    raise GroundingError(f"comparison {b} not bound in {rule}")
                if not g.evaluate():
                    raise AssertionError("comparison filtered during join")
                # satisfied ground comparisons are dropped
            else:
                body.append(self._ground_aggregate(b, binding))
        body = tuple(body)
        tp = type(rule)
        if tp is NormalRule:
            return NormalRule(rule.head.substitute(binding), body)
        if tp is HardConstraint:
            return HardConstraint(body)
        if tp is ChoiceRule:
            return ChoiceRule(rule.lower, rule.upper, tuple(h.substitute(binding) for h in rule.heads), body)
        weight = rule.weight.substitute(binding)
        level = rule.level.substitute(binding)
        if type(weight) is not Integer or type(level) is not Integer:
            raise GroundingError(f"weak constraint weight/level not integers after grounding: {rule}")
        return WeakConstraint(body, weight, level, tuple(t.substitute(binding) for t in rule.terms))

    def _ground_aggregate(self, agg: Aggregate, binding) -> Aggregate:
        elements = []
        seen = set()
        for e in agg.elements:
            pattern = e.atom.substitute(binding)
            weight = e.weight.substitute(binding)
            for atom in self.store.candidates(pattern, {}):
                b = match_atom(pattern, atom, {})
                if b is None:
                    continue
                w = weight.substitute(b)
                if type(w) is not Integer:
                    raise GroundingError(f"aggregate weight {e.weight} not an integer")
                ge = AggregateElement(atom, w, e.negative)
                if ge not in seen:
                    seen.add(ge)
                    elements.append(ge)
        return Aggregate(agg.kind, tuple(elements), agg.lower, agg.upper)


def _rule_depth(rule) -> int:
    depth = 0
    for h in _heads(rule):
        depth = max(depth, h.depth())
    for b in rule.body:
        if type(b) is Literal:
            depth = max(depth, b.atom.depth())
        elif type(b) is Aggregate:
            for e in b.elements:
                depth = max(depth, e.atom.depth())
    return depth


def ground(program, extra_constants=(), nesting_bound: int = DEFAULT_NESTING_BOUND) -> Program:
    """Ground ``program``; ground input rules are passed through unchanged."""
    g = Grounder(nesting_bound, extra_constants)
    g.add(program)
    return g.ground()
