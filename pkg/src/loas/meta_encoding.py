"""Meta-level encodings of learning tasks.

The programs built here are ordinary ASP programs over reified atoms: an atom
``a`` of the task becomes ``in_as(a, t)`` inside the answer set named ``t``
(or ``in_vs(a, t)`` / ``mmr(a, t)`` when checking a fixed interpretation).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .asp.syntax import (
    BOTTOM,
    Aggregate,
    AggregateElement,
    Atom,
    ChoiceRule,
    Comparison,
    Constant,
    Function,
    HardConstraint,
    Integer,
    Literal,
    NormalRule,
    Program,
    Term,
    Variable,
    WeakConstraint,
    atom_key,
    term_key,
    term_to_atom,
)
from .errors import MalformedMetaModel, ReservedPredicateClash
from .task_model import (
    CAUTIOUS,
    Hypothesis,
    LearningTask,
    OrderingExample,
    ViolatingInterpretation,
    ViolatingPair,
)

RESERVED = frozenset({
    "in_as", "in_vs", "in_h", "w", "lv", "as", "vs", "cov", "v_i", "v_p", "violating",
    "dom", "dom_lv", "non_dom_lv", "non_bef", "mmr", "nas", BOTTOM,
})

_L, _L2, _W, _A = Variable("L"), Variable("L2"), Variable("W"), Variable("A")
_VIOLATING = Atom("violating")


def _pos(atom: Atom) -> Literal:
    return Literal(atom)


def _neg(atom: Atom) -> Literal:
    return Literal(atom, True)


def reify_atom(atom: Atom, pred: str, t: Term) -> Atom:
    """``pred(atom, t)``."""
    return Atom(pred, (atom.as_term(), t))


def _rule_variable_names(rule) -> set:
    return {v.name for v in rule.variables()}


def fresh_variable(rule, base: str = "X") -> Variable:
    """``base`` unless the rule already uses that name, else ``base1``, ``base2``, ..."""
    used = _rule_variable_names(rule)
    if base not in used:
        return Variable(base)
    k = 1
    while f"{base}{k}" in used:
        k += 1
    return Variable(f"{base}{k}")


# ---------------------------------------------------------------------------
# combinators


def _reify_body(body, pred: str, t: Term):
    out = []
    for b in body:
        tp = type(b)
        if tp is Literal:
            out.append(Literal(reify_atom(b.atom, pred, t), b.negated))
        elif tp is Aggregate:
            out.append(Aggregate(b.kind, tuple(
                AggregateElement(reify_atom(e.atom, pred, t), e.weight, e.negative) for e in b.elements), b.lower, b.upper))
        else:
            out.append(b)
    return tuple(out)


def reify_rule(r, pred: str, t: Term):
    tp = type(r)
    body = _reify_body(r.body, pred, t)
    if tp is NormalRule:
        return NormalRule(reify_atom(r.head, pred, t), body)
    if tp is HardConstraint:
        return HardConstraint(body)
    if tp is ChoiceRule:
        return ChoiceRule(r.lower, r.upper, tuple(reify_atom(h, pred, t) for h in r.heads), body)
    raise TypeError("weak constraints are reified with meta_weak")


def reify(p, pred: str, t: Term):
    """Reify a program (a :class:`Program`) or a set of atoms (a set of ``pred`` atoms)."""
    if isinstance(p, Program):
        return Program(reify_rule(r, pred, t) for r in p)
    return {reify_atom(a, pred, t) for a in p}


def _with_body(r, extra):
    extra = tuple(extra)
    tp = type(r)
    if tp is NormalRule:
        return NormalRule(r.head, r.body + extra)
    if tp is HardConstraint:
        return HardConstraint(r.body + extra)
    if tp is ChoiceRule:
        return ChoiceRule(r.lower, r.upper, r.heads, r.body + extra)
    return WeakConstraint(r.body + extra, r.weight, r.level, r.terms)


def append_body_atom(p: Program, a: Atom) -> Program:
    return Program(_with_body(r, (_pos(a),)) for r in p)


def cover_program(e, t: Term) -> Program:
    cov = Atom("cov", (t,))
    body = tuple(_pos(reify_atom(a, "in_as", t)) for a in sorted(e.inc, key=atom_key))
    body += tuple(_neg(reify_atom(a, "in_as", t)) for a in sorted(e.exc, key=atom_key))
    return Program([NormalRule(cov, body), HardConstraint((_neg(cov),))])


def args_term(terms) -> Term:
    return Function("args", terms) if terms else Constant("args")


def meta_weak(w: WeakConstraint, p1: str, p2: str, t: Term):
    head = Atom("w", (w.weight, w.level, args_term(w.terms), t))
    body = (_pos(Atom(p2, (t,))),) + _reify_body(w.body, p1, t)
    return NormalRule(head, body)


def _sum_diff(first: Term, second: Term) -> Aggregate:
    """``#sum{w(W,L,A,first)=W, w(W,L,A,second)=-W} < 0``."""
    return Aggregate("sum", (
        AggregateElement(Atom("w", (_W, _L, _A, first)), _W),
        AggregateElement(Atom("w", (_W, _L, _A, second)), _W, True),
    ), None, -1)


def dominates_program(t1: Term, t2: Term) -> Program:
    lv = lambda v: _pos(Atom("lv", (v,)))  # noqa: E731
    dom_lv = Atom("dom_lv", (t1, t2, _L))
    non_dom_lv = Atom("non_dom_lv", (t1, t2, _L))
    non_bef = Atom("non_bef", (t1, t2, _L))
    return Program([
        NormalRule(dom_lv, (lv(_L), _sum_diff(t1, t2))),
        NormalRule(non_dom_lv, (lv(_L), _sum_diff(t2, t1))),
        NormalRule(non_bef, (lv(_L), lv(_L2), Comparison("<", _L, _L2),
                             _pos(Atom("non_dom_lv", (t1, t2, _L2))))),
        NormalRule(Atom("dom", (t1, t2)), (_pos(dom_lv), _neg(non_bef))),
    ])


def _mmr_body(body, x: Term):
    out = []
    for b in body:
        if type(b) is Literal:
            out.append(_pos(reify_atom(b.atom, "mmr", x)) if not b.negated else _neg(reify_atom(b.atom, "in_vs", x)))
        else:
            out.append(b)
    return tuple(out)


def reductify_rule(r) -> list:
    x = fresh_variable(r)
    body = _mmr_body(r.body, x)
    vs = _pos(Atom("vs", (x,)))
    tp = type(r)
    bot = Atom(BOTTOM)
    if tp is NormalRule:
        return [NormalRule(reify_atom(r.head, "mmr", x), body + (vs,))]
    if tp is HardConstraint:
        return [NormalRule(reify_atom(bot, "mmr", x), body + (vs,))]
    if tp is ChoiceRule:
        elems = tuple(AggregateElement(reify_atom(h, "in_vs", x)) for h in r.heads)
        out = [
            NormalRule(reify_atom(h, "mmr", x),
                       body + (Aggregate("count", elems, r.lower, r.upper), _pos(reify_atom(h, "in_vs", x))))
            for h in r.heads
        ]
        # vs(X) keeps the bound-violation rules safe when the body is empty
        out.append(NormalRule(reify_atom(bot, "mmr", x), body + (Aggregate("count", elems, r.upper + 1, None), vs)))
        out.append(NormalRule(reify_atom(bot, "mmr", x), body + (Aggregate("count", elems, None, r.lower - 1), vs)))
        return out
    raise TypeError("reductify is undefined on weak constraints")


def reductify(p: Program) -> Program:
    out = []
    for r in p:
        out.extend(reductify_rule(r))
    return Program(out)


# ---------------------------------------------------------------------------
# context


_INT_RE = re.compile(r"^-?[0-9]+$")


def id_term(ident: str) -> Term:
    if _INT_RE.match(ident):
        return Integer(int(ident))
    return Constant(ident)


def _predicates(program: Program) -> set:
    return {a.predicate for a in program.atoms()}


def check_reserved(task: LearningTask):
    used = _predicates(task.background) | _predicates(Program(e.rule for e in task.space))
    clash = sorted(used & RESERVED)
    if clash:
        raise ReservedPredicateClash(clash)


@dataclass
class MetaContext:
    task: LearningTask
    example_ids: dict
    negative_id: Term
    brave_ids: list
    levels: tuple
    hyp_decode: dict = field(default_factory=dict)

    @classmethod
    def for_task(cls, task: LearningTask) -> "MetaContext":
        check_reserved(task)
        example_ids = {e.id: id_term(e.id) for e in task.positives}
        used = set(example_ids.values())
        negative = Constant("n")
        k = 0
        while negative in used:
            k += 1
            negative = Constant(f"n{k}")
        used.add(negative)
        brave_ids = []
        ints = [t.value for t in example_ids.values() if type(t) is Integer]
        all_int = len(ints) == len(example_ids)
        nxt = max(ints, default=0) + 1
        for idx, o in enumerate(task.brave, 1):
            pair = []
            for side in "ab":
                if all_int:
                    t = Integer(nxt)
                    nxt += 1
                else:
                    t = Constant(f"b{idx}{side}")
                    while t in used:
                        t = Constant(t.name + "_")
                used.add(t)
                pair.append(t)
            brave_ids.append((o, pair[0], pair[1]))
        levels = set()
        for r in list(task.background.weak()) + [e.rule for e in task.space if type(e.rule) is WeakConstraint]:
            if type(r.level) is Integer:
                levels.add(r.level.value)
        decode = {Constant(e.id): e.id for e in task.space}
        return cls(task, example_ids, negative, brave_ids, tuple(sorted(levels)), decode)

    @property
    def used_ids(self) -> set:
        return set(self.example_ids.values()) | {self.negative_id} | {t for _, a, b in self.brave_ids for t in (a, b)}

    def lv_facts(self) -> list:
        return [NormalRule(Atom("lv", (Integer(lev),))) for lev in self.levels]


@dataclass
class MetaProgram:
    program: Program
    hyp_decode: dict

    def __str__(self):
        return str(self.program)


def _as_guard(r, pred="as"):
    x = fresh_variable(r)
    return x, Atom(pred, (x,))


def _meta_rule(r, extra=()):
    """``append(reify(r, in_as, X), as(X))`` plus further body atoms."""
    x, guard = _as_guard(r)
    return _with_body(reify_rule(r, "in_as", x), (_pos(guard),) + tuple(_pos(a) for a in extra))


def _meta_weak_rule(w, p1, p2, extra=()):
    x = fresh_variable(w)
    return _with_body(meta_weak(w, p1, p2, x), tuple(_pos(a) for a in extra))


def _in_h(rid: str) -> Atom:
    return Atom("in_h", (Constant(rid),))


def build_t_meta(ctx: MetaContext) -> MetaProgram:
    t = ctx.task
    rules = []
    # meta(B)
    for r in t.background:
        if type(r) is WeakConstraint:
            rules.append(_meta_weak_rule(r, "in_as", "as"))
        else:
            rules.append(_meta_rule(r))
    # meta(S_M)
    for e in t.space:
        if type(e.rule) is WeakConstraint:
            rules.append(_meta_weak_rule(e.rule, "in_as", "as", (_in_h(e.id),)))
        else:
            rules.append(_meta_rule(e.rule, (_in_h(e.id),)))
    if len(t.space):
        rules.append(ChoiceRule(0, len(t.space), tuple(_in_h(e.id) for e in t.space)))
    for e in t.space:
        rules.append(WeakConstraint((_pos(_in_h(e.id)),), Integer(2 * e.cost), Integer(0), (Constant(e.id),)))
    # meta(E+)
    for e in t.positives:
        tid = ctx.example_ids[e.id]
        rules.append(NormalRule(Atom("as", (tid,))))
        rules.extend(cover_program(e, tid))
    # meta(E-)
    n = ctx.negative_id
    if t.negatives:
        rules.append(NormalRule(Atom("as", (n,))))
        for e in t.negatives:
            body = tuple(_pos(reify_atom(a, "in_as", n)) for a in sorted(e.inc, key=atom_key))
            body += tuple(_neg(reify_atom(a, "in_as", n)) for a in sorted(e.exc, key=atom_key))
            rules.append(NormalRule(Atom("v_i"), body))
        rules.append(NormalRule(_VIOLATING, (_pos(Atom("v_i")),)))
    rules.append(WeakConstraint((_neg(_VIOLATING),), Integer(1), Integer(0), ()))
    # meta(O^b)
    for o, a, b in ctx.brave_ids:
        rules.append(NormalRule(Atom("as", (a,))))
        rules.append(NormalRule(Atom("as", (b,))))
        rules.extend(cover_program(t.example[o.first], a))
        rules.extend(cover_program(t.example[o.second], b))
        rules.extend(dominates_program(a, b))
        rules.append(HardConstraint((_neg(Atom("dom", (a, b))),)))
    rules.extend(ctx.lv_facts())
    # meta(O^c)
    if t.cautious:
        for o in t.cautious:
            a, b = ctx.example_ids[o.first], ctx.example_ids[o.second]
            rules.extend(dominates_program(a, b))
            rules.append(NormalRule(Atom("v_p", (a, b)), (_neg(Atom("dom", (a, b))),)))
        t1, t2 = Variable("T1"), Variable("T2")
        rules.append(NormalRule(Atom("v_p"), (_pos(Atom("v_p", (t1, t2))),)))
        rules.append(NormalRule(_VIOLATING, (_pos(Atom("v_p")),)))
    return MetaProgram(Program(_dedupe(rules)), dict(ctx.hyp_decode))


def _dedupe(rules):
    seen = set()
    out = []
    for r in rules:
        if r not in seen:
            seen.add(r)
            out.append(r)
    return out


def reason_ids(ctx: MetaContext, vr) -> list:
    """One fresh id per violating interpretation, two per violating pair."""
    used = ctx.used_ids
    out = []
    k = 0

    def fresh():
        nonlocal k
        while True:
            k += 1
            c = Constant(f"v{k}")
            if c not in used:
                return c

    for reason in vr:
        if isinstance(reason, ViolatingInterpretation):
            out.append((reason, fresh()))
        else:
            out.append((reason, fresh(), fresh()))
    return out


def _in_vs_facts(interpretation, t: Term) -> list:
    return [NormalRule(reify_atom(a, "in_vs", t)) for a in sorted(interpretation, key=atom_key)] + [
        NormalRule(Atom("vs", (t,)))]


def aux_program(ctx: MetaContext) -> list:
    t = ctx.task
    rules = list(reductify(t.background.non_weak()))
    x, a = Variable("X"), Variable("A")
    rules.append(NormalRule(Atom("nas", (x,)), (_pos(Atom("in_vs", (a, x))), _neg(Atom("mmr", (a, x))))))
    rules.append(NormalRule(Atom("nas", (x,)), (_neg(Atom("in_vs", (a, x))), _pos(Atom("mmr", (a, x))))))
    for e in t.space:
        if type(e.rule) is WeakConstraint:
            rules.append(_meta_weak_rule(e.rule, "in_vs", "vs", (_in_h(e.id),)))
        else:
            rules.extend(append_body_atom(Program(reductify_rule(e.rule)), _in_h(e.id)))
    for w in t.background.weak():
        rules.append(_meta_weak_rule(w, "in_vs", "vs"))
    rules.extend(ctx.lv_facts())
    return rules


def build_vr_meta(ctx: MetaContext, vr) -> MetaProgram:
    rules = []
    for item in reason_ids(ctx, vr):
        reason = item[0]
        if isinstance(reason, ViolatingInterpretation):
            tid = item[1]
            rules.extend(_in_vs_facts(reason.interpretation, tid))
            rules.append(HardConstraint((_neg(Atom("nas", (tid,))),)))
        else:
            t1, t2 = item[1], item[2]
            rules.extend(dominates_program(t1, t2))
            rules.extend(_in_vs_facts(reason.first, t1))
            rules.extend(_in_vs_facts(reason.second, t2))
            rules.append(HardConstraint((
                _neg(Atom("nas", (t1,))), _neg(Atom("nas", (t2,))), _neg(Atom("dom", (t1, t2))))))
    rules.extend(aux_program(ctx))
    return MetaProgram(Program(_dedupe(rules)), dict(ctx.hyp_decode))


# ---------------------------------------------------------------------------
# decoding


def _reified(a, pred: str, t: Term) -> frozenset:
    out = []
    for x in a:
        if x.predicate == pred and len(x.args) == 2 and x.args[1] == t:
            out.append(term_to_atom(x.args[0]))
    return frozenset(out)


def decode_hypothesis(ctx: MetaContext, a) -> Hypothesis:
    ids = []
    for x in a:
        if x.predicate == "in_h" and len(x.args) == 1:
            rid = ctx.hyp_decode.get(x.args[0])
            if rid is None:
                raise MalformedMetaModel(f"in_h refers to unknown rule id {x.args[0]}")
            ids.append(rid)
    return Hypothesis(frozenset(ids))


def violating_pair(ctx: MetaContext, a):
    """The violating pair witnessed by the least ``v_p(t1, t2)`` atom of ``a``, if any."""
    pairs = sorted(
        (x.args for x in a if x.predicate == "v_p" and len(x.args) == 2),
        key=lambda p: (term_key(p[0]), term_key(p[1])),
    )
    for t1, t2 in pairs:
        for o in ctx.task.cautious:
            if ctx.example_ids[o.first] == t1 and ctx.example_ids[o.second] == t2:
                return ViolatingPair(_reified(a, "in_as", t1), _reified(a, "in_as", t2), o)
        raise MalformedMetaModel(f"v_p({t1},{t2}) matches no cautious ordering")
    return None


def decode_meta_answer_set(ctx: MetaContext, a):
    """``(hypothesis, reason)``; an interpretation is preferred to a pair."""
    a = frozenset(a)
    h = decode_hypothesis(ctx, a)
    if Atom("v_i") in a:
        return h, ViolatingInterpretation(_reified(a, "in_as", ctx.negative_id))
    return h, violating_pair(ctx, a)
