"""Hypothesis spaces built from a mode bias with ordering."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb

from .errors import SearchSpaceExplosion
from .asp.syntax import (
    Atom,
    ChoiceRule,
    Constant,
    HardConstraint,
    Integer,
    Literal,
    NormalRule,
    Program,
    Variable,
    WeakConstraint,
    term_key,
    unsafe_variables,
)

VAR = "v"
CONST = "c"
DEFAULT_CAP = 100_000


@dataclass(frozen=True)
class ModeDeclaration:
    predicate: str
    placeholders: tuple

    @classmethod
    def from_atom(cls, atom: Atom) -> "ModeDeclaration":
        marks = []
        for a in atom.args:
            if type(a) is not Constant or a.name not in (VAR, CONST):
                raise ValueError(f"mode declaration arguments must be 'v' or 'c': {atom}")
            marks.append(a.name)
        return cls(atom.predicate, tuple(marks))

    @property
    def arity(self) -> int:
        return len(self.placeholders)

    def __str__(self):
        if not self.placeholders:
            return self.predicate
        return f"{self.predicate}({','.join(self.placeholders)})"


@dataclass
class ModeBiasWithOrdering:
    head_decls: tuple = ()
    body_decls: tuple = ()
    ordering_decls: tuple = ()
    weights: tuple = (1,)
    max_level: int = 1
    max_body: int = 3
    max_vars: int = 3
    constants: tuple = ()
    max_head_atoms: int = 1
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if self.max_level < 1:
            raise ValueError("max_level must be at least 1")
        if self.max_body < 1 or self.max_vars < 1 or self.max_head_atoms < 1:
            raise ValueError("mode bias limits must be positive")

    @property
    def levels(self) -> range:
        return range(0, self.max_level)


def atom_compatible(a: Atom, m: ModeDeclaration) -> bool:
    if a.predicate != m.predicate or len(a.args) != m.arity:
        return False
    for t, mark in zip(a.args, m.placeholders):
        if mark == VAR:
            if type(t) is not Variable:
                return False
        elif type(t) not in (Constant, Integer):
            return False
    return True


def rule_cost(r) -> int:
    tp = type(r)
    if tp is NormalRule:
        return 1 + len(r.body)
    if tp is HardConstraint or tp is WeakConstraint:
        return len(r.body)
    k = len(r.heads)
    subsets = sum(comb(k, s) for s in range(r.lower, r.upper + 1))
    return len(r.body) + k * subsets


@dataclass(frozen=True)
class SpaceEntry:
    id: str
    rule: object
    cost: int

    def __str__(self):
        return f"{self.id}: {self.rule}"


@dataclass
class SearchSpace:
    entries: list = field(default_factory=list)

    def __post_init__(self):
        self.by_id = {e.id: e for e in self.entries}
        if len(self.by_id) != len(self.entries):
            raise ValueError("duplicate search-space ids")

    @classmethod
    def from_rules(cls, rules) -> "SearchSpace":
        """Explicit space: ids r1, r2, ... in the given order."""
        return cls([SpaceEntry(f"r{i}", r, rule_cost(r)) for i, r in enumerate(rules, 1)])

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, rid: str) -> SpaceEntry:
        return self.by_id[rid]

    def ids(self) -> list:
        return [e.id for e in self.entries]

    def program(self, ids) -> Program:
        return Program(self.by_id[i].rule for i in sorted(ids, key=self.index))

    def cost(self, ids) -> int:
        return sum(self.by_id[i].cost for i in ids)

    def index(self, rid: str) -> int:
        if not hasattr(self, "_pos"):
            self._pos = {e.id: k for k, e in enumerate(self.entries)}
        return self._pos[rid]

    def weak_levels(self) -> set:
        return {e.rule.level.value for e in self.entries if type(e.rule) is WeakConstraint}


# ---------------------------------------------------------------------------
# enumeration

# literal template: (negated, predicate, args) with args entries ("v", k) or ("c", term)


def _templates(decls, constants, max_vars, allow_negation=True):
    out = []
    for d in decls:
        slots = []
        for mark in d.placeholders:
            if mark == VAR:
                slots.append([("v", k) for k in range(max_vars)])
            else:
                slots.append([("c", c) for c in constants])
        for args in itertools.product(*slots):
            out.append((False, d.predicate, tuple(args)))
            if allow_negation:
                out.append((True, d.predicate, tuple(args)))
    return out


def _tvars(lits):
    vs = set()
    for _, _, args in lits:
        for kind, x in args:
            if kind == "v":
                vs.add(x)
    return vs


def _positive_vars(body):
    vs = set()
    for neg, _, args in body:
        if not neg:
            for kind, x in args:
                if kind == "v":
                    vs.add(x)
    return vs


def _arg_key(a, perm):
    kind, x = a
    if kind == "v":
        return (0, perm[x])
    # the term itself is never compared: equal keys imply equal terms
    return (1, term_key(x), x)


def _lit_key(lit, perm):
    neg, pred, args = lit
    return (neg, pred, len(args), tuple(_arg_key(a, perm) for a in args))


def _canonical(heads, body, nvars):
    """Minimal (heads, body) key over all variable renamings, plus the chosen renaming."""
    best = None
    for perm in itertools.permutations(range(nvars)):
        hk = tuple(sorted(_lit_key(h, perm) for h in heads))
        bk = tuple(sorted(_lit_key(b, perm) for b in body))
        key = (hk, bk)
        if best is None or key < best[0]:
            best = (key, perm)
    return best


def _to_atom(pred, args, names):
    terms = []
    for kind, x in args:
        terms.append(names[x] if kind == "v" else x)
    return Atom(pred, terms)


def _materialize(key, nvars):
    """Rule parts from a canonical key with variables named by first appearance."""
    hk, bk = key
    order = []
    for lits in (hk, bk):
        for _, _, _, args in lits:
            for a in args:
                if a[0] == 0 and a[1] not in order:
                    order.append(a[1])
    names = {x: Variable(f"V{i + 1}") for i, x in enumerate(order)}

    def atom(lk):
        _, pred, _, args = lk
        terms = [names[a[1]] if a[0] == 0 else a[2] for a in args]
        return Atom(pred, terms)

    heads = [atom(h) for h in hk]
    body = tuple(Literal(atom(b), b[0]) for b in bk)
    return heads, body


def _bodies(templates, max_body, min_body):
    for n in range(min_body, max_body + 1):
        yield from itertools.combinations(templates, n)


def _consistent(body) -> bool:
    pos = {(p, a) for neg, p, a in body if not neg}
    return not any(neg and (p, a) in pos for neg, p, a in body)


def _uses_prefix(vs) -> bool:
    return vs == set(range(len(vs)))


def build_search_space(m: ModeBiasWithOrdering) -> SearchSpace:
    """Enumerate the canonical rules permitted by ``m``.

    Besides canonical duplicates, rules whose body contains a literal and its
    negation, a repeated literal, or (for normal rules) the head itself are
    left out: they can never change the answer sets or their ordering.
    """
    constants = tuple(sorted(m.constants, key=term_key))
    seen = set()
    found = []

    def emit(kind, extra, heads, body, nvars):
        key, _ = _canonical(heads, body, nvars)
        full = (kind, extra, key)
        if full in seen:
            return
        seen.add(full)
        found.append((kind, extra, key, nvars))
        if len(found) > m.cap:
            raise SearchSpaceExplosion(len(found), m.cap)

    # rules of S_LAS(M_h, M_b)
    if m.body_decls or m.head_decls:
        body_t = _templates(m.body_decls, constants, m.max_vars)
        head_t = [t for t in _templates(m.head_decls, constants, m.max_vars, allow_negation=False)]
        for body in _bodies(body_t, m.max_body, 0):
            if not _consistent(body):
                continue
            bvars = _tvars(body)
            pvars = _positive_vars(body)
            if bvars - pvars:
                continue
            if body and m.body_decls:
                if _uses_prefix(bvars):
                    emit("constraint", None, (), body, len(bvars))
            for k in range(1, m.max_head_atoms + 1):
                for heads in itertools.combinations(head_t, k):
                    hvars = _tvars(heads)
                    allv = bvars | hvars
                    if hvars - pvars or len(allv) > m.max_vars or not _uses_prefix(allv):
                        continue
                    if k == 1 and any(not neg and (p, a) == heads[0][1:] for neg, p, a in body):
                        continue
                    if k == 1:
                        emit("normal", None, heads, body, len(allv))
                    for lo in range(0, k + 1):
                        for hi in range(lo, k + 1):
                            emit("choice", (lo, hi), heads, body, len(allv))
    # weak constraints
    if m.ordering_decls:
        ord_t = _templates(m.ordering_decls, constants, m.max_vars)
        for body in _bodies(ord_t, m.max_body, 1):
            if not _consistent(body):
                continue
            bvars = _tvars(body)
            if bvars - _positive_vars(body) or not _uses_prefix(bvars):
                continue
            emit("weak", None, (), body, len(bvars))

    rules = []
    for kind, extra, key, nvars in found:
        heads, body = _materialize(key, nvars)
        if kind == "constraint":
            rules.append(HardConstraint(body))
        elif kind == "normal":
            rules.append(NormalRule(heads[0], body))
        elif kind == "choice":
            rules.append(ChoiceRule(extra[0], extra[1], tuple(heads), body))
        else:
            terms = []
            for b in body:
                for v in b.atom.variables():
                    if v not in terms:
                        terms.append(v)
            for lev in m.levels:
                for w in sorted(m.weights):
                    rules.append(WeakConstraint(body, Integer(w), Integer(lev), tuple(terms)))
                    if len(rules) > m.cap:
                        raise SearchSpaceExplosion(len(rules), m.cap)
    for r in rules:
        assert not unsafe_variables(r), r
    order = {NormalRule: 0, ChoiceRule: 1, HardConstraint: 2, WeakConstraint: 3}
    rules.sort(key=lambda r: (order[type(r)], rule_cost(r), str(r)))
    return SearchSpace.from_rules(rules)
