import dataclasses
import itertools
import random

import pytest

from conftest import GOLDEN
from loas.asp.grounder import ground
from loas.asp.parser import parse_atom, parse_program, parse_rule
from loas.asp.semantics import dominates, is_answer_set
from loas.asp.solver import enumerate_answer_sets, optimal_answer_sets
from loas.asp.syntax import Atom, Constant, Integer, NormalRule, Program, Variable, WeakConstraint
from loas.engine import solve_optimal
from loas.errors import MalformedMetaModel, ReservedPredicateClash
from loas.hyp_space import SearchSpace
from loas.meta_encoding import (
    MetaContext,
    append_body_atom,
    build_t_meta,
    build_vr_meta,
    cover_program,
    decode_meta_answer_set,
    dominates_program,
    meta_weak,
    reductify,
    reify,
    violating_pair,
)
from loas.task_model import LearningTask, PartialInterpretation, ViolatingInterpretation, ViolatingPair
from loas.taskfile import parse_task_text

X = Variable("X")


def atoms(*texts):
    return frozenset(parse_atom(t) for t in texts)


def p(text, bottom=False):
    return parse_program(text, allow_bottom=bottom)


def rule_key(r):
    """A rule up to the order of its body literals."""
    return type(r).__name__, str(dataclasses.replace(r, body=())), tuple(sorted(str(b) for b in r.body))


def same_rules(a, b):
    return sorted(map(rule_key, a)) == sorted(map(rule_key, b))


def listing(name):
    text = (GOLDEN / name).read_text()
    inner = text[text.index("{") + 1:text.rindex("}")]
    # one listing has a missing comma between two atoms
    return frozenset(parse_atom(a) for a in inner.replace(") in_as", "), in_as").replace("\n", " ").split(", "))


APPENDIX_VI = ViolatingInterpretation(atoms("p(1)", "p(2)", "r(1)", "r(2)", "a"))


def appendix_vp(task):
    return ViolatingPair(atoms("p(2)", "q(1)", "r(1)", "r(2)", "a"),
                         atoms("q(1)", "q(2)", "r(1)", "r(2)", "a"), task.cautious[0])


# ---------------------------------------------------------------------------
# combinators


def test_reify_program():
    out = reify(p("p :- not q."), "in_as", X)
    # unsafe until as(X) is appended, so compare the text
    assert [str(r) for r in out] == ["in_as(p,X) :- not in_as(q,X)."]
    assert reify(Program([]), "in_as", X) == Program([])
    assert reify(atoms("a", "b(1)"), "in_vs", Constant("v1")) == atoms("in_vs(a,v1)", "in_vs(b(1),v1)")


def test_append_body_atom():
    prog = reify(p("p :- not q."), "in_as", X)
    assert append_body_atom(prog, parse_atom("as(X)")) == p("in_as(p,X) :- not in_as(q,X), as(X).")
    assert append_body_atom(Program([]), parse_atom("a")) == Program([])
    assert append_body_atom(p("f."), parse_atom("a")) == p("f :- a.")


def test_reified_grounding_of_first_appendix_example():
    prog = append_body_atom(reify(p("p :- not q. q :- not p."), "in_as", X), parse_atom("as(X)"))
    q = prog + p("as(as1). as(as2).")
    q = q + cover_program(PartialInterpretation(atoms("p"), ()), Constant("as1"))
    q = q + cover_program(PartialInterpretation((), atoms("p")), Constant("as2"))
    g = {str(r) for r in ground(q)}
    assert "in_as(p,as1) :- not in_as(q,as1), as(as1)." in g
    assert enumerate_answer_sets(q) == [
        atoms("as(as1)", "as(as2)", "in_as(p,as1)", "in_as(q,as2)", "cov(as1)", "cov(as2)")]


@pytest.mark.parametrize("inc,exc,t,expected", [
    (["p"], [], "as1", "cov(as1) :- in_as(p,as1).  :- not cov(as1)."),
    ([], ["p"], "as2", "cov(as2) :- not in_as(p,as2).  :- not cov(as2)."),
    ([], [], "t", "cov(t).  :- not cov(t)."),
])
def test_cover_program(inc, exc, t, expected):
    out = cover_program(PartialInterpretation(atoms(*inc), atoms(*exc)), Constant(t))
    assert out == p(expected)


def test_meta_weak():
    w1, w2 = p(":~ p(V).[1@2, V]  :~ q(V).[2@1, V]")
    assert same_rules([meta_weak(w1, "in_as", "as", X)], p("w(1,2,args(V),X) :- as(X), in_as(p(V),X)."))
    assert same_rules([meta_weak(w2, "in_as", "as", X)], p("w(2,1,args(V),X) :- as(X), in_as(q(V),X)."))
    empty = WeakConstraint((), Integer(3), Integer(1), ())
    assert str(meta_weak(empty, "in_as", "as", X)) == "w(3,1,args,X) :- as(X)."


def test_meta_weak_represents_the_profile():
    prog = Program(meta_weak(w, "in_as", "as", X) for w in p(":~ p(V).[1@2, V]  :~ q(V).[2@1, V]"))
    prog = prog + Program(NormalRule(a) for a in reify(atoms("p(1)", "p(2)", "q(1)"), "in_as", Constant("id")))
    prog = prog + p("as(id).")
    (model,) = enumerate_answer_sets(prog)
    assert {a for a in model if a.predicate == "w"} == atoms(
        "w(1,2,args(1),id)", "w(1,2,args(2),id)", "w(2,1,args(1),id)")


def test_dominates_program_text():
    heads = ("dom_lv", "non_dom_lv", "non_bef", "dom")
    golden = [r for r in p((GOLDEN / "t_meta_appendix.lp").read_text())
              if type(r) is NormalRule and r.head.predicate in heads and "(5,6" in str(r)]
    out = dominates_program(Integer(5), Integer(6))
    assert len(golden) == 4 and same_rules(out, golden)
    assert str(out).count("#sum{w(W,L,A,5)=W, w(W,L,A,6)=-W} < 0") == 1


def _dominance_program(i1, i2, t1, t2, weak, levels):
    prog = Program(meta_weak(w, "in_as", "as", X) for w in weak)
    for interp, t in ((i1, "id1"), (i2, "id2")):
        prog = prog + Program(NormalRule(a) for a in reify(interp, "in_as", Constant(t)))
        prog = prog + p(f"as({t}).")
    prog = prog + Program(NormalRule(Atom("lv", (Integer(l),))) for l in levels)
    return prog + dominates_program(Constant(t1), Constant(t2))


def test_dominance_evaluation_appendix():
    weak = p(":~ p(V).[1@2, V]  :~ q(V).[2@1, V]")
    i, i2 = atoms("p(1)", "p(2)", "q(1)"), atoms("p(1)", "p(2)", "p(3)")
    (m,) = enumerate_answer_sets(_dominance_program(i, i2, "id1", "id2", weak, (1, 2)))
    assert atoms("dom_lv(id1,id2,2)", "non_dom_lv(id1,id2,1)", "dom(id1,id2)") <= m
    assert not any(a.predicate == "non_bef" for a in m)
    (m,) = enumerate_answer_sets(_dominance_program(i, i2, "id2", "id1", weak, (1, 2)))
    assert atoms("dom_lv(id2,id1,1)", "non_dom_lv(id2,id1,2)", "non_bef(id2,id1,1)") <= m
    assert parse_atom("dom(id2,id1)") not in m


def test_identical_profiles_do_not_dominate():
    weak = p(":~ p(V).[1@1, V]")
    i1, i2 = atoms("p(1)", "q"), atoms("p(2)")
    for a, b in (("id1", "id2"), ("id2", "id1")):
        (m,) = enumerate_answer_sets(_dominance_program(i1, i2, a, b, weak, (1,)))
        assert not any(x.predicate == "dom" for x in m)


@pytest.mark.parametrize("seed", range(25))
def test_encoded_dominance_agrees_with_procedural(seed):
    rng = random.Random(seed)
    names = ["a", "b", "c"]
    weak = []
    for _ in range(rng.randint(1, 4)):
        body = rng.choice(names)
        if rng.random() < 0.3:
            body += f", not {rng.choice(names)}"
        weak.append(f":~ {body}.[{rng.choice([-2, -1, 1, 2])}@{rng.randint(0, 2)}, k{rng.randint(1, 2)}]")
    weak = p("\n".join(weak))
    levels = sorted({w.level.value for w in weak})
    interps = [frozenset(parse_atom(x) for x in s) for k in range(4) for s in itertools.combinations(names, k)]
    for i1 in interps:
        for i2 in interps:
            (m,) = enumerate_answer_sets(_dominance_program(i1, i2, "id1", "id2", weak, levels))
            assert (parse_atom("dom(id1,id2)") in m) == dominates(weak, i1, i2)


# ---------------------------------------------------------------------------
# reductify


def test_reductify_appendix():
    out = reductify(p("p :- not q. q :- not p."))
    assert out == p("mmr(p,X) :- not in_vs(q,X), vs(X).  mmr(q,X) :- not in_vs(p,X), vs(X).")


def test_reductify_constraint():
    assert reductify(p(":- a.")) == p("mmr(bot,X) :- mmr(a,X), vs(X).", bottom=True)


def test_reductify_choice():
    out = reductify(p("1 {a} 1."))
    assert same_rules(out, p("""
        mmr(a,X) :- 1 {in_vs(a,X)} 1, in_vs(a,X).
        mmr(bot,X) :- 2 {in_vs(a,X)}, vs(X).
        mmr(bot,X) :- {in_vs(a,X)} 0, vs(X).
    """, bottom=True))


def test_reductify_check_of_appendix_interpretation():
    prog = reductify(p("p :- not q. q :- not p.")) + p("vs(vs1). in_vs(p,vs1).")
    assert enumerate_answer_sets(prog) == [atoms("vs(vs1)", "in_vs(p,vs1)", "mmr(p,vs1)")]


def _random_program(rng):
    names = ["a", "b", "c", "d"][: rng.randint(2, 4)]
    lines = []
    for _ in range(rng.randint(1, 5)):
        body = list(dict.fromkeys(("not " if rng.random() < 0.4 else "") + rng.choice(names)
                                  for _ in range(rng.randint(0, 2))))
        tail = f" :- {', '.join(body)}." if body else "."
        kind = rng.random()
        if kind < 0.5:
            lines.append(rng.choice(names) + tail)
        elif kind < 0.8:
            heads = rng.sample(names, rng.randint(1, 2))
            lo = rng.randint(0, len(heads))
            lines.append(f"{lo} {{{'; '.join(heads)}}} {rng.randint(lo, len(heads))}" + tail)
        elif body:
            lines.append(tail[1:])
    return p("\n".join(lines)), names


@pytest.mark.parametrize("seed", range(30))
def test_reduct_fidelity(seed):
    prog, names = _random_program(random.Random(seed))
    nas = p("nas(X) :- in_vs(A,X), not mmr(A,X).  nas(X) :- not in_vs(A,X), mmr(A,X).")
    for k in range(len(names) + 1):
        for sub in itertools.combinations(names, k):
            i = atoms(*sub)
            facts = Program(NormalRule(a) for a in reify(i, "in_vs", Constant("v1")))
            (m,) = enumerate_answer_sets(reductify(prog) + nas + facts + p("vs(v1)."))
            assert (parse_atom("nas(v1)") not in m) == is_answer_set(ground(prog), i)


# ---------------------------------------------------------------------------
# whole encodings


def test_t_meta_matches_figure(appendix_task):
    ctx = MetaContext.for_task(appendix_task)
    golden = p((GOLDEN / "t_meta_appendix.lp").read_text(), bottom=True)
    assert same_rules(build_t_meta(ctx).program, golden)


def test_vr_meta_matches_figure(appendix_task):
    ctx = MetaContext.for_task(appendix_task)
    vr = [APPENDIX_VI, appendix_vp(appendix_task)]
    golden = p((GOLDEN / "vr_meta_appendix.lp").read_text(), bottom=True)
    assert same_rules(build_vr_meta(ctx, vr).program, golden)


def test_appendix_final_optimality(appendix_task):
    ctx = MetaContext.for_task(appendix_task)
    vr = [APPENDIX_VI, appendix_vp(appendix_task)]
    prog = build_t_meta(ctx).program + build_vr_meta(ctx, vr).program
    best = solve_optimal(prog)
    assert best.optimality == 5
    hs = {decode_meta_answer_set(ctx, m)[0].ids for m in optimal_answer_sets(prog)}
    assert frozenset({"r1", "r2"}) in hs
    assert {str(appendix_task.space[i].rule) for i in ("r1", "r2")} == {"q(1).", ":~ q(V).[1@1, V, r2]"}


def test_listings_are_answer_sets_of_t_meta(appendix_task):
    ctx = MetaContext.for_task(appendix_task)
    g = ground(build_t_meta(ctx).program)
    for name in ("answer_set_vi.txt", "answer_set_vp.txt"):
        assert is_answer_set(g, listing(name))


def test_decode_first_listing(appendix_task):
    ctx = MetaContext.for_task(appendix_task)
    h, reason = decode_meta_answer_set(ctx, listing("answer_set_vi.txt"))
    assert h.ids == {"r2"}
    assert reason == ViolatingInterpretation(atoms("r(1)", "r(2)", "p(1)", "q(2)", "a"))


def test_decode_second_listing(appendix_task):
    ctx = MetaContext.for_task(appendix_task)
    a = listing("answer_set_vp.txt")
    h, reason = decode_meta_answer_set(ctx, a)
    assert h.ids == {"r2"}
    # the listing also holds v_i, and interpretations take precedence
    assert isinstance(reason, ViolatingInterpretation)
    vp = violating_pair(ctx, a)
    assert vp.first == atoms("p(2)", "q(1)", "r(1)", "r(2)", "a")
    assert vp.second == atoms("p(1)", "q(2)", "r(1)", "r(2)", "a")
    assert (vp.ordering.first, vp.ordering.second) == ("1", "2")


def test_decode_without_reasons(appendix_task):
    ctx = MetaContext.for_task(appendix_task)
    h, reason = decode_meta_answer_set(ctx, atoms("in_h(r1)", "as(1)"))
    assert h.ids == {"r1"} and reason is None
    with pytest.raises(MalformedMetaModel):
        decode_meta_answer_set(ctx, atoms("in_h(r9)"))


def test_empty_task_encoding():
    t = parse_task_text("a :- not b. b :- not a.\n#space {\n  :~ a.[1@1]\n}\n").task()
    out = build_t_meta(MetaContext.for_task(t)).program
    assert same_rules(out, p("""
        in_as(a,X) :- not in_as(b,X), as(X).
        in_as(b,X) :- not in_as(a,X), as(X).
        w(1,1,args,X) :- in_as(a,X), as(X), in_h(r1).
        0 {in_h(r1)} 1.
        :~ in_h(r1).[2@0, r1]
        :~ not violating.[1@0]
        lv(1).
    """))


def test_empty_vr_is_inert(appendix_task):
    ctx = MetaContext.for_task(appendix_task)
    t_meta = build_t_meta(ctx).program
    vr_meta = build_vr_meta(ctx, []).program
    assert not any(r.head is not None and r.head.predicate == "vs" for r in vr_meta if type(r) is NormalRule)
    proj = list(atoms("in_h(r1)", "in_h(r2)", "in_h(r3)", "violating"))
    assert set(enumerate_answer_sets(t_meta, proj)) == set(enumerate_answer_sets(t_meta + vr_meta, proj))


def test_reserved_predicate_clash():
    t = parse_task_text("as(1).\n#pos(e1, {}, {}).\n").task()
    with pytest.raises(ReservedPredicateClash):
        MetaContext.for_task(t)
    t = LearningTask(p("a."), SearchSpace.from_rules([parse_rule("in_h(1).")]))
    with pytest.raises(ReservedPredicateClash):
        MetaContext.for_task(t)


def test_emission_round_trip(appendix_task, example4_task):
    for task in (appendix_task, example4_task):
        ctx = MetaContext.for_task(task)
        vr = [APPENDIX_VI] if task is appendix_task else []
        for prog in (build_t_meta(ctx).program, build_vr_meta(ctx, vr).program):
            assert p(str(prog), bottom=True) == prog
