"""Reader for learning-task files.

A task file mixes background rules with directives::

    #background { slot(m,1). 0 {assign(X,Y)} 1 :- slot(X,Y). }
    #pos(e1, {assign(m,1)}, {assign(t,2)}).
    #neg(n1, {assign(m,1), assign(m,2)}, {}).
    #brave_ordering(e1, e2).            % or #brave_ordering(o1, e1, e2).
    #cautious_ordering(e1, e2).
    #modeo(assign(v,v)).  #modeh(p(c)).  #modeb(q(v)).
    #weight(1).  #weight(-1).  #maxlevel(2).  #maxbody(3).  #maxvars(3).
    #constant(c1).  #maxhead(1).
    #space { q(1).  :~ q(V).[1@1, V, r2] }   % explicit space, ids r1, r2, ...

Rules outside any block belong to the background.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from .asp.parser import RuleParser, TokenStream, check_safety
from .asp.syntax import Constant, Integer, Program
from .errors import ParseError, TaskError
from .hyp_space import ModeBiasWithOrdering, ModeDeclaration, SearchSpace, build_search_space
from .task_model import BRAVE, CAUTIOUS, LearningTask, OrderingExample, PartialInterpretation

log = logging.getLogger(__name__)


@dataclass
class TaskFile:
    """Parsed statements of a task file, before the search space is built."""

    path: str | None = None
    background: list = field(default_factory=list)
    positives: list = field(default_factory=list)
    negatives: list = field(default_factory=list)
    orderings: list = field(default_factory=list)
    head_decls: list = field(default_factory=list)
    body_decls: list = field(default_factory=list)
    ordering_decls: list = field(default_factory=list)
    weights: list = field(default_factory=list)
    constants: list = field(default_factory=list)
    limits: dict = field(default_factory=dict)
    space_rules: list | None = None

    def bias(self, **overrides) -> ModeBiasWithOrdering:
        constants = self.constants or sorted(self._default_constants(), key=str)
        params = dict(
            head_decls=tuple(self.head_decls),
            body_decls=tuple(self.body_decls),
            ordering_decls=tuple(self.ordering_decls),
            weights=tuple(sorted(set(self.weights))) or (1,),
            constants=tuple(constants),
        )
        names = {"maxlevel": "max_level", "maxbody": "max_body", "maxvars": "max_vars", "maxhead": "max_head_atoms"}
        for k, v in self.limits.items():
            params[names[k]] = v
        params.update({k: v for k, v in overrides.items() if v is not None})
        return ModeBiasWithOrdering(**params)

    def _default_constants(self) -> set:
        consts = set()

        def collect(term):
            if type(term) in (Constant, Integer):
                consts.add(term)
            elif hasattr(term, "args"):
                for a in term.args:
                    collect(a)

        atoms = set(Program(self.background).atoms())
        for e in self.positives + self.negatives:
            atoms |= e.inc | e.exc
        for a in atoms:
            for t in a.args:
                collect(t)
        return consts

    def unmatched_modes(self) -> list:
        """Body and ordering declarations whose predicate/arity never occurs in the task."""
        known = {(a.predicate, len(a.args)) for a in Program(self.background).atoms()}
        for e in self.positives + self.negatives:
            known |= {(a.predicate, len(a.args)) for a in e.inc | e.exc}
        known |= {(m.predicate, m.arity) for m in self.head_decls}
        return [m for m in self.body_decls + self.ordering_decls if (m.predicate, m.arity) not in known]

    def space(self, **overrides) -> SearchSpace:
        if self.space_rules is not None:
            return SearchSpace.from_rules(self.space_rules)
        for m in self.unmatched_modes():
            log.warning("mode declaration %s matches no predicate of the task", m)
        return build_search_space(self.bias(**overrides))

    def task(self, **overrides) -> LearningTask:
        m = None
        if self.space_rules is None:
            m = self.bias(**overrides).max_level
        return LearningTask(
            background=Program(self.background),
            space=self.space(**overrides),
            positives=tuple(self.positives),
            negatives=tuple(self.negatives),
            orderings=tuple(self.orderings),
            max_level=m,
        )


class _TaskParser(RuleParser):
    def __init__(self, text: str):
        super().__init__(TokenStream(text))
        self.out = TaskFile()
        self._neg_count = 0
        self._ordering_count = 0

    def parse(self) -> TaskFile:
        s = self.s
        while not s.eof():
            tok = s.current
            if tok.kind == "directive":
                self.directive()
            else:
                start = len(self.out.background)
                self.out.background.append(self.rule())
                check_safety(self.out.background[start:], start)
        self._check_ids()
        return self.out

    # -- helpers ----------------------------------------------------------
    def _ident(self) -> str:
        tok = self.s.current
        if tok.kind in ("ident", "int"):
            self.s.advance()
            return tok.text
        self.s.error(f"expected an identifier, found {tok.text or 'end of input'!r}")

    def _atom_set(self) -> frozenset:
        s = self.s
        s.expect("{")
        atoms = []
        if not s.at("}"):
            atoms.append(self.atom())
            while s.accept(",") or s.accept(";"):
                atoms.append(self.atom())
        s.expect("}")
        for a in atoms:
            if not a.is_ground:
                s.error(f"example atom {a} is not ground")
        return frozenset(atoms)

    def _int(self) -> int:
        s = self.s
        neg = s.accept("-")
        tok = s.current
        if tok.kind != "int":
            s.error("expected an integer")
        s.advance()
        return -int(tok.text) if neg else int(tok.text)

    def _rule_block(self) -> list:
        s = self.s
        s.expect("{")
        rules = []
        while not s.at("}"):
            if s.eof():
                s.error("unterminated block")
            rules.append(self.rule())
        s.expect("}")
        check_safety(rules)
        return rules

    def _mode(self) -> ModeDeclaration:
        tok = self.s.current
        a = self.atom()
        try:
            return ModeDeclaration.from_atom(a)
        except ValueError as exc:
            raise ParseError(tok.pos, str(exc)) from None

    # -- statements -------------------------------------------------------
    def directive(self):
        s = self.s
        tok = s.advance()
        name = tok.text[1:]
        out = self.out
        if name == "background":
            out.background.extend(self._rule_block())
            return
        if name == "space":
            out.space_rules = (out.space_rules or []) + self._rule_block()
            return
        s.expect("(")
        if name in ("pos", "neg"):
            ident = None
            if not s.at("{"):
                ident = self._ident()
                s.expect(",")
            inc = self._atom_set()
            exc = frozenset()
            if s.accept(","):
                exc = self._atom_set()
            if inc & exc:
                s.error(f"example has atoms both included and excluded: {sorted(map(str, inc & exc))}", tok)
            if name == "pos":
                ident = ident or str(len(out.positives) + 1)
                out.positives.append(PartialInterpretation(inc, exc, ident))
            else:
                self._neg_count += 1
                ident = ident or f"neg{self._neg_count}"
                out.negatives.append(PartialInterpretation(inc, exc, ident))
        elif name in ("brave_ordering", "cautious_ordering"):
            ids = [self._ident()]
            while s.accept(","):
                ids.append(self._ident())
            if len(ids) not in (2, 3):
                s.error("an ordering takes two example ids, optionally preceded by its own id", tok)
            self._ordering_count += 1
            oid = ids[0] if len(ids) == 3 else f"o{self._ordering_count}"
            kind = BRAVE if name.startswith("brave") else CAUTIOUS
            out.orderings.append(OrderingExample(ids[-2], ids[-1], kind, oid))
        elif name == "modeh":
            out.head_decls.append(self._mode())
        elif name == "modeb":
            out.body_decls.append(self._mode())
        elif name == "modeo":
            out.ordering_decls.append(self._mode())
        elif name == "weight":
            out.weights.append(self._int())
        elif name == "constant":
            t = self.term()
            if type(t) not in (Constant, Integer):
                s.error("#constant expects a constant or integer", tok)
            out.constants.append(t)
        elif name in ("maxlevel", "maxbody", "maxvars", "maxhead"):
            v = self._int()
            if v < 1:
                s.error(f"#{name} must be positive", tok)
            out.limits[name] = v
        else:
            s.error(f"unknown directive {tok.text}", tok)
        s.expect(")")
        s.expect(".")

    def _check_ids(self):
        ids = [e.id for e in self.out.positives]
        seen = set()
        for i in ids:
            if i in seen:
                raise TaskError(f"duplicate positive example id {i!r}")
            seen.add(i)
        for o in self.out.orderings:
            for end in (o.first, o.second):
                if end not in seen:
                    raise TaskError(f"ordering {o.id} refers to unknown positive example {end!r}")
            if o.kind == CAUTIOUS and o.first == o.second:
                raise TaskError(f"cautious ordering {o.id} orders example {o.first!r} against itself")


def parse_task_text(text: str) -> TaskFile:
    return _TaskParser(text).parse()


def load_task_file(path) -> TaskFile:
    tf = parse_task_text(Path(path).read_text())
    tf.path = str(path)
    return tf


def load_task(path, **overrides) -> LearningTask:
    return load_task_file(path).task(**overrides)
