"""Terms, atoms, literals, rules and programs of the supported ASP fragment.

All objects are immutable and hashable.  ``str()`` of any object yields the
concrete syntax that :mod:`loas.asp.parser` reads back.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Union

_VARIABLE_RE = re.compile(r"^[A-Z][A-Za-z0-9_]*$")
_CONSTANT_RE = re.compile(r"^[a-z][A-Za-z0-9_]*$")

BOTTOM = "bot"


class Term:
    __slots__ = ()

    @property
    def is_ground(self) -> bool:
        raise NotImplementedError

    def variables(self) -> Iterator["Variable"]:
        raise NotImplementedError

    def substitute(self, binding: Mapping["Variable", "Term"]) -> "Term":
        raise NotImplementedError

    def depth(self) -> int:
        return 0


class Variable(Term):
    __slots__ = ("name", "_hash")

    def __init__(self, name: str):
        if not _VARIABLE_RE.match(name):
            raise ValueError(f"invalid variable name {name!r}")
        self.name = name
        self._hash = hash(("V", name))

    is_ground = False

    def variables(self):
        yield self

    def substitute(self, binding):
        return binding.get(self, self)

    def __eq__(self, other):
        return type(other) is Variable and other.name == self.name

    def __hash__(self):
        return self._hash

    def __str__(self):
        return self.name

    __repr__ = __str__


class Constant(Term):
    __slots__ = ("name", "_hash")

    def __init__(self, name: str):
        if not _CONSTANT_RE.match(name):
            raise ValueError(f"invalid constant name {name!r}")
        self.name = name
        self._hash = hash(("C", name))

    is_ground = True

    def variables(self):
        return iter(())

    def substitute(self, binding):
        return self

    def __eq__(self, other):
        return type(other) is Constant and other.name == self.name

    def __hash__(self):
        return self._hash

    def __str__(self):
        return self.name

    __repr__ = __str__


class Integer(Term):
    __slots__ = ("value", "_hash")

    def __init__(self, value: int):
        self.value = int(value)
        self._hash = hash(("I", self.value))

    is_ground = True

    def variables(self):
        return iter(())

    def substitute(self, binding):
        return self

    def __eq__(self, other):
        return type(other) is Integer and other.value == self.value

    def __hash__(self):
        return self._hash

    def __str__(self):
        return str(self.value)

    __repr__ = __str__


class Function(Term):
    __slots__ = ("functor", "args", "_hash", "_ground")

    def __init__(self, functor: str, args: Iterable[Term]):
        args = tuple(args)
        if not args:
            raise ValueError("function terms need at least one argument")
        if not _CONSTANT_RE.match(functor):
            raise ValueError(f"invalid functor {functor!r}")
        self.functor = functor
        self.args = args
        self._hash = hash(("F", functor, args))
        self._ground = all(a.is_ground for a in args)

    @property
    def is_ground(self):
        return self._ground

    def variables(self):
        for a in self.args:
            yield from a.variables()

    def substitute(self, binding):
        if self._ground:
            return self
        return Function(self.functor, [a.substitute(binding) for a in self.args])

    def depth(self):
        return 1 + max(a.depth() for a in self.args)

    def __eq__(self, other):
        return (
            type(other) is Function
            and other._hash == self._hash
            and other.functor == self.functor
            and other.args == self.args
        )

    def __hash__(self):
        return self._hash

    def __str__(self):
        return f"{self.functor}({','.join(map(str, self.args))})"

    __repr__ = __str__


def term_key(t: Term) -> tuple:
    """Canonical order: integers < constants < functions < variables."""
    tp = type(t)
    if tp is Integer:
        return (0, t.value)
    if tp is Constant:
        return (1, t.name)
    if tp is Function:
        return (2, t.functor, len(t.args), tuple(term_key(a) for a in t.args))
    return (3, t.name)


class Atom:
    __slots__ = ("predicate", "args", "_hash", "_ground")

    def __init__(self, predicate: str, args: Iterable[Term] = ()):
        if not _CONSTANT_RE.match(predicate):
            raise ValueError(f"invalid predicate name {predicate!r}")
        self.predicate = predicate
        self.args = tuple(args)
        self._hash = hash((predicate, self.args))
        self._ground = all(a.is_ground for a in self.args)

    @property
    def signature(self) -> tuple[str, int]:
        return (self.predicate, len(self.args))

    @property
    def is_ground(self) -> bool:
        return self._ground

    def variables(self) -> Iterator[Variable]:
        for a in self.args:
            yield from a.variables()

    def substitute(self, binding) -> "Atom":
        if self._ground:
            return self
        return Atom(self.predicate, [a.substitute(binding) for a in self.args])

    def depth(self) -> int:
        return max((a.depth() for a in self.args), default=0)

    def as_term(self) -> Term:
        """The atom viewed as a term, used when reifying programs."""
        if not self.args:
            return Constant(self.predicate)
        return Function(self.predicate, self.args)

    def __eq__(self, other):
        return (
            type(other) is Atom
            and other._hash == self._hash
            and other.predicate == self.predicate
            and other.args == self.args
        )

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return atom_key(self) < atom_key(other)

    def __str__(self):
        if not self.args:
            return self.predicate
        return f"{self.predicate}({','.join(map(str, self.args))})"

    __repr__ = __str__


def atom_key(a: Atom) -> tuple:
    return (a.predicate, len(a.args), tuple(term_key(t) for t in a.args))


def term_to_atom(t: Term) -> Atom:
    if type(t) is Constant:
        return Atom(t.name)
    if type(t) is Function:
        return Atom(t.functor, t.args)
    raise ValueError(f"term {t} does not denote an atom")


# --------------------------------------------------------------------------
# body elements


@dataclass(frozen=True)
class Literal:
    atom: Atom
    negated: bool = False

    def variables(self):
        return self.atom.variables()

    def substitute(self, binding) -> "Literal":
        return Literal(self.atom.substitute(binding), self.negated)

    @property
    def is_ground(self):
        return self.atom.is_ground

    def __str__(self):
        return f"not {self.atom}" if self.negated else str(self.atom)


_COMPARISONS = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}


@dataclass(frozen=True)
class Comparison:
    op: str
    left: Term
    right: Term

    def __post_init__(self):
        if self.op not in _COMPARISONS:
            raise ValueError(f"unknown comparison {self.op!r}")

    def variables(self):
        yield from self.left.variables()
        yield from self.right.variables()

    def substitute(self, binding) -> "Comparison":
        return Comparison(self.op, self.left.substitute(binding), self.right.substitute(binding))

    @property
    def is_ground(self):
        return self.left.is_ground and self.right.is_ground

    def evaluate(self) -> bool:
        if self.op in ("=", "!="):
            return _COMPARISONS[self.op](self.left, self.right)
        return _COMPARISONS[self.op](term_key(self.left), term_key(self.right))

    def __str__(self):
        return f"{self.left} {self.op} {self.right}"


@dataclass(frozen=True)
class AggregateElement:
    """``atom = weight`` inside a sum; ``negative`` flips the weight's sign."""

    atom: Atom
    weight: Term = Integer(1)
    negative: bool = False

    def substitute(self, binding) -> "AggregateElement":
        return AggregateElement(self.atom.substitute(binding), self.weight.substitute(binding), self.negative)

    def variables(self):
        yield from self.atom.variables()
        yield from self.weight.variables()

    def ground_weight(self) -> int:
        if type(self.weight) is not Integer:
            raise ValueError(f"non-integer aggregate weight {self.weight}")
        return -self.weight.value if self.negative else self.weight.value

    def __str__(self):
        sign = "-" if self.negative else ""
        return f"{self.atom}={sign}{self.weight}"


@dataclass(frozen=True)
class Aggregate:
    """Body aggregate ``lower <= sum(elements) <= upper``.

    ``kind`` only affects printing: ``"count"`` renders as ``l {a; b} u`` and
    ``"sum"`` as ``#sum{a=W, b=-W} < k``.
    """

    kind: str
    elements: tuple
    lower: int | None = None
    upper: int | None = None

    def variables(self):
        for e in self.elements:
            yield from e.variables()

    def global_variables(self, bound: set) -> set:
        """Variables of the elements that are bound outside the aggregate."""
        return {v for v in self.variables() if v in bound}

    def substitute(self, binding) -> "Aggregate":
        return Aggregate(self.kind, tuple(e.substitute(binding) for e in self.elements), self.lower, self.upper)

    @property
    def is_ground(self):
        return all(e.atom.is_ground and e.weight.is_ground for e in self.elements)

    def holds(self, total: int) -> bool:
        if self.lower is not None and total < self.lower:
            return False
        if self.upper is not None and total > self.upper:
            return False
        return True

    def evaluate(self, interpretation) -> bool:
        # set semantics: a repeated (atom, weight) element counts once
        seen = {(e.atom, e.ground_weight()) for e in self.elements if e.atom in interpretation}
        return self.holds(sum(w for _, w in seen))

    def __str__(self):
        if self.kind == "count":
            inner = "; ".join(str(e.atom) for e in self.elements)
            lo = f"{self.lower} " if self.lower is not None else ""
            hi = f" {self.upper}" if self.upper is not None else ""
            return f"{lo}{{{inner}}}{hi}"
        inner = ", ".join(map(str, self.elements))
        if self.lower is None and self.upper is not None:
            return f"#sum{{{inner}}} < {self.upper + 1}"
        if self.upper is None and self.lower is not None:
            return f"#sum{{{inner}}} > {self.lower - 1}"
        return f"{self.lower} #sum{{{inner}}} {self.upper}"


BodyElement = Union[Literal, Comparison, Aggregate]


def _body_str(body) -> str:
    return ", ".join(map(str, body))


def _body_variables(body):
    for b in body:
        yield from b.variables()


def positive_body_variables(body) -> set:
    out = set()
    for b in body:
        if type(b) is Literal and not b.negated:
            out.update(b.atom.variables())
    return out


# --------------------------------------------------------------------------
# rules


@dataclass(frozen=True)
class NormalRule:
    head: Atom
    body: tuple = ()

    def head_atoms(self):
        return (self.head,)

    def variables(self):
        yield from self.head.variables()
        yield from _body_variables(self.body)

    def substitute(self, binding):
        return NormalRule(self.head.substitute(binding), tuple(b.substitute(binding) for b in self.body))

    def __str__(self):
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {_body_str(self.body)}."


@dataclass(frozen=True)
class HardConstraint:
    body: tuple

    def head_atoms(self):
        return ()

    def variables(self):
        return _body_variables(self.body)

    def substitute(self, binding):
        return HardConstraint(tuple(b.substitute(binding) for b in self.body))

    def __str__(self):
        return f":- {_body_str(self.body)}."


@dataclass(frozen=True)
class ChoiceRule:
    lower: int
    upper: int
    heads: tuple
    body: tuple = ()

    def head_atoms(self):
        return self.heads

    def variables(self):
        for h in self.heads:
            yield from h.variables()
        yield from _body_variables(self.body)

    def substitute(self, binding):
        return ChoiceRule(
            self.lower,
            self.upper,
            tuple(h.substitute(binding) for h in self.heads),
            tuple(b.substitute(binding) for b in self.body),
        )

    def __str__(self):
        head = f"{self.lower} {{{'; '.join(map(str, self.heads))}}} {self.upper}"
        if not self.body:
            return f"{head}."
        return f"{head} :- {_body_str(self.body)}."


@dataclass(frozen=True)
class WeakConstraint:
    body: tuple
    weight: Term
    level: Term
    terms: tuple = ()

    def head_atoms(self):
        return ()

    def variables(self):
        yield from _body_variables(self.body)
        yield from self.weight.variables()
        yield from self.level.variables()
        for t in self.terms:
            yield from t.variables()

    def substitute(self, binding):
        return WeakConstraint(
            tuple(b.substitute(binding) for b in self.body),
            self.weight.substitute(binding),
            self.level.substitute(binding),
            tuple(t.substitute(binding) for t in self.terms),
        )

    def __str__(self):
        tail = "".join(f", {t}" for t in self.terms)
        return f":~ {_body_str(self.body)}.[{self.weight}@{self.level}{tail}]"


Rule = Union[NormalRule, HardConstraint, ChoiceRule, WeakConstraint]


def rule_is_ground(rule) -> bool:
    return next(iter(rule.variables()), None) is None


def positive_atoms(body) -> list:
    return [b.atom for b in body if type(b) is Literal and not b.negated]


def negative_atoms(body) -> list:
    return [b.atom for b in body if type(b) is Literal and b.negated]


def unsafe_variables(rule) -> list:
    """Variables of ``rule`` without an occurrence in a positive body literal.

    Variables local to an aggregate element (not occurring anywhere outside
    the aggregate) are bound by the aggregate itself and are exempt.
    """
    safe = positive_body_variables(rule.body)
    outside = set()
    if type(rule) is NormalRule:
        outside.update(rule.head.variables())
    elif type(rule) is ChoiceRule:
        for h in rule.heads:
            outside.update(h.variables())
    elif type(rule) is WeakConstraint:
        outside.update(rule.weight.variables())
        outside.update(rule.level.variables())
        for t in rule.terms:
            outside.update(t.variables())
    for b in rule.body:
        if type(b) is not Aggregate:
            outside.update(b.variables())
    unsafe = []
    seen = set()
    for v in rule.variables():
        if v in seen:
            continue
        seen.add(v)
        if v in safe:
            continue
        if v in outside:
            unsafe.append(v)
    return unsafe


class Program:
    """An ordered collection of rules; equality ignores order and duplicates."""

    __slots__ = ("rules",)

    def __init__(self, rules: Iterable = ()):
        self.rules = tuple(rules)

    def __iter__(self):
        return iter(self.rules)

    def __len__(self):
        return len(self.rules)

    def __add__(self, other):
        return Program(self.rules + tuple(other))

    def __eq__(self, other):
        return isinstance(other, Program) and set(self.rules) == set(other.rules)

    def __hash__(self):
        return hash(frozenset(self.rules))

    def weak(self) -> "Program":
        return Program(r for r in self.rules if type(r) is WeakConstraint)

    def non_weak(self) -> "Program":
        return Program(r for r in self.rules if type(r) is not WeakConstraint)

    def atoms(self) -> set:
        out = set()
        for r in self.rules:
            out.update(r.head_atoms())
            for b in r.body:
                if type(b) is Literal:
                    out.add(b.atom)
                elif type(b) is Aggregate:
                    out.update(e.atom for e in b.elements)
        return out

    def is_ground(self) -> bool:
        return all(rule_is_ground(r) for r in self.rules)

    def __str__(self):
        return "\n".join(map(str, self.rules))

    def __repr__(self):
        return f"Program({len(self.rules)} rules)"


def interpretation_str(atoms) -> str:
    return "{" + ", ".join(str(a) for a in sorted(atoms, key=atom_key)) + "}"
