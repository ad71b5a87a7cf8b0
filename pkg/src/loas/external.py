"""Running an external ASP solver as a subprocess.

The program is written to a temporary file in a solver-neutral dialect: the
``#sum{a=W, b=-W} < 0`` bodies used by the dominance rules are rewritten to
the tuple syntax ``#sum{W,A,p: a; -W,A,n: b} < 0`` that mainstream solvers
accept.  The solver's output is scanned for the last ``Answer:`` block and
the last ``Optimization`` line; ``UNSATISFIABLE`` means there is no model.
"""

from __future__ import annotations

import logging
import os
import re
import shlex
import subprocess
import tempfile

from .asp.parser import parse_atom
from .asp.syntax import Aggregate, ChoiceRule, HardConstraint, NormalRule, WeakConstraint
from .errors import ExternalSolverError, ResourceLimit

ENV_VAR = "LOAS_SOLVER_CMD"
OK_EXIT_CODES = {0, 10, 20, 30}

log = logging.getLogger(__name__)


def default_command() -> str | None:
    return os.environ.get(ENV_VAR) or None


def _element_terms(e, index: int) -> str:
    # tuple identity: weight, every variable of the atom, and the element's position
    vars_ = []
    for v in e.atom.variables():
        if v not in vars_:
            vars_.append(v)
    sign = "-" if e.negative else ""
    tup = [f"{sign}{e.weight}"] + [str(v) for v in vars_ if v != e.weight] + [f"e{index}"]
    return f"{','.join(tup)}: {e.atom}"


def _aggregate_text(g: Aggregate) -> str:
    if g.kind == "count":
        return str(g)
    inner = "; ".join(_element_terms(e, i) for i, e in enumerate(g.elements))
    if g.lower is None:
        return f"#sum{{{inner}}} < {g.upper + 1}"
    if g.upper is None:
        return f"#sum{{{inner}}} > {g.lower - 1}"
    return f"{g.lower} #sum{{{inner}}} {g.upper}"


def _body_text(body) -> str:
    return ", ".join(_aggregate_text(b) if type(b) is Aggregate else str(b) for b in body)


def rule_text(r) -> str:
    """Rule text in the external dialect (identical except for #sum bodies)."""
    if not any(type(b) is Aggregate and b.kind == "sum" for b in r.body):
        return str(r)
    body = _body_text(r.body)
    tp = type(r)
    if tp is NormalRule:
        return f"{r.head} :- {body}."
    if tp is HardConstraint:
        return f":- {body}."
    if tp is ChoiceRule:
        return f"{r.lower} {{{'; '.join(map(str, r.heads))}}} {r.upper} :- {body}."
    assert tp is WeakConstraint
    tail = "".join(f", {t}" for t in r.terms)
    return f":~ {body}.[{r.weight}@{r.level}{tail}]"


def program_text(program) -> str:
    return "\n".join(rule_text(r) for r in program) + "\n"


_OPT_RE = re.compile(r"^Optimization\s*:\s*(.*)$")


def parse_output(text: str):
    """``(atoms, costs)`` from solver output, or None when unsatisfiable.

    ``costs`` lists the optimisation values as printed (highest priority first).
    """
    lines = text.splitlines()
    answer = None
    costs: list = []
    unsat = False
    for i, line in enumerate(lines):
        s = line.strip()
        if s.startswith("Answer:"):
            answer = lines[i + 1].strip() if i + 1 < len(lines) else ""
        elif s == "UNSATISFIABLE":
            unsat = True
        else:
            m = _OPT_RE.match(s)
            if m:
                costs = [int(x) for x in m.group(1).split()]
    if answer is None:
        if unsat:
            return None
        raise ExternalSolverError(0, text)
    atoms = frozenset(parse_atom(tok) for tok in _split_atoms(answer))
    return atoms, costs


def _split_atoms(line: str) -> list:
    # atoms are separated by spaces outside parentheses
    out, depth, cur = [], 0, []
    for ch in line:
        if ch == " " and depth == 0:
            if cur:
                out.append("".join(cur))
                cur = []
            continue
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        cur.append(ch)
    if cur:
        out.append("".join(cur))
    return out


def run_solver(command: str, program, timeout: float | None = None, transcript: bool = False):
    """Solve ``program`` with the external ``command`` template.

    ``{program}`` in the template is replaced by the file path; without the
    placeholder the path is appended.
    """
    with tempfile.NamedTemporaryFile("w", suffix=".lp", delete=False) as fh:
        fh.write(program_text(program))
        path = fh.name
    try:
        parts = shlex.split(command)
        if any("{program}" in p for p in parts):
            argv = [p.replace("{program}", path) for p in parts]
        else:
            argv = parts + [path]
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
        except subprocess.TimeoutExpired:
            raise ResourceLimit(f"external solver exceeded {timeout}s") from None
        except OSError as exc:
            raise ExternalSolverError(-1, str(exc)) from None
        out = proc.stdout + ("\n" + proc.stderr if proc.stderr else "")
        if transcript:
            log.info("external solver transcript:\n%s", out)
        if proc.returncode not in OK_EXIT_CODES:
            raise ExternalSolverError(proc.returncode, out)
        return parse_output(proc.stdout)
    finally:
        os.unlink(path)
