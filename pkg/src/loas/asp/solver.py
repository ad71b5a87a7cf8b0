"""Native answer-set search.

The ground program is simplified with the well-founded alternating fixpoint,
translated to clauses plus (reified) linear constraints, and searched with
conflict-driven clause learning.  Non-tight programs get an unfounded-set
check on every total assignment; violated loops are learned as clauses.
Weak constraints become one lexicographically scaled objective that is
minimised by branch-and-bound.
"""

from __future__ import annotations

import heapq
from collections import defaultdict

from .syntax import (
    BOTTOM,
    Aggregate,
    Atom,
    ChoiceRule,
    Comparison,
    HardConstraint,
    Literal,
    NormalRule,
    WeakConstraint,
)

TRUE = 1
FALSE = -1

_DEC = 1  # culprits that lowered the attainable maximum
_INC = 2  # culprits that raised the guaranteed minimum


class _Linear:
    """``lower <= sum(w_i * l_i) <= upper``, optionally reified by ``reif``.

    With ``equiv`` the reification is two-way, otherwise ``reif`` only
    implies the constraint.
    """

    __slots__ = ("lits", "weights", "lower", "upper", "reif", "equiv", "minv", "maxv", "maxabs")

    def __init__(self, lits, weights, lower, upper, reif=0, equiv=False):
        self.lits = lits
        self.weights = weights
        self.lower = lower
        self.upper = upper
        self.reif = reif
        self.equiv = equiv
        self.minv = sum(w for w in weights if w < 0)
        self.maxv = sum(w for w in weights if w > 0)
        self.maxabs = max((abs(w) for w in weights), default=0)


class Engine:
    """Clause/linear-constraint search core over integer literals."""

    def __init__(self):
        self.nvars = 0
        self.value = [0]
        self.level = [0]
        self.reason = [None]
        self.tpos = [0]
        self.phase = [False]
        self.activity = [0.0]
        self.occ = [[]]
        self.watches = defaultdict(list)
        self.clauses: list[list[int]] = []
        self.linears: list[_Linear] = []
        self.trail: list[int] = []
        self.limits: list[int] = []
        self.qhead = 0
        self.inc = 1.0
        self.heap: list = []
        self.inconsistent = False
        self.conflicts = 0
        self.pending_linear: set[int] = set()

    # -- variables --------------------------------------------------------
    def new_var(self) -> int:
        self.nvars += 1
        self.value.append(0)
        self.level.append(0)
        self.reason.append(None)
        self.tpos.append(0)
        self.phase.append(False)
        self.activity.append(0.0)
        self.occ.append([])
        heapq.heappush(self.heap, (0.0, self.nvars))
        return self.nvars

    def val(self, lit: int) -> int:
        v = self.value[lit if lit > 0 else -lit]
        return v if lit > 0 else -v

    @property
    def decision_level(self) -> int:
        return len(self.limits)

    # -- assignment -------------------------------------------------------
    def _assign(self, lit: int, reason) -> None:
        v = lit if lit > 0 else -lit
        self.value[v] = TRUE if lit > 0 else FALSE
        self.level[v] = len(self.limits)
        self.reason[v] = reason
        self.tpos[v] = len(self.trail)
        self.trail.append(lit)
        for ci, k in self.occ[v]:
            c = self.linears[ci]
            if k < 0:
                continue
            w = c.weights[k]
            if (c.lits[k] > 0) == (lit > 0):
                # element literal became true
                if w > 0:
                    c.minv += w
                else:
                    c.maxv += w
            else:
                if w > 0:
                    c.maxv -= w
                else:
                    c.minv -= w

    def _unassign_to(self, level: int) -> None:
        if len(self.limits) <= level:
            return
        stop = self.limits[level]
        trail = self.trail
        value = self.value
        for idx in range(len(trail) - 1, stop - 1, -1):
            lit = trail[idx]
            v = lit if lit > 0 else -lit
            for ci, k in self.occ[v]:
                if k < 0:
                    continue
                c = self.linears[ci]
                w = c.weights[k]
                if (c.lits[k] > 0) == (lit > 0):
                    if w > 0:
                        c.minv -= w
                    else:
                        c.maxv -= w
                else:
                    if w > 0:
                        c.maxv += w
                    else:
                        c.minv += w
            self.phase[v] = lit > 0
            value[v] = 0
            self.reason[v] = None
            heapq.heappush(self.heap, (-self.activity[v], v))
        del trail[stop:]
        del self.limits[level:]
        self.qhead = min(self.qhead, stop)

    # -- constraints --------------------------------------------------------
    def add_clause(self, lits) -> None:
        """Add a clause at decision level 0."""
        if self.inconsistent:
            return
        assert not self.limits
        seen = set()
        out = []
        for l in lits:
            if l in seen:
                continue
            if -l in seen:
                return
            v = self.val(l)
            if v == TRUE:
                return
            if v == FALSE:
                continue
            seen.add(l)
            out.append(l)
        if not out:
            self.inconsistent = True
            return
        if len(out) == 1:
            self._assign(out[0], None)
            return
        ci = len(self.clauses)
        self.clauses.append(out)
        self.watches[out[0]].append(ci)
        self.watches[out[1]].append(ci)

    def add_linear(self, lits, weights, lower=None, upper=None, reif=0, equiv=False) -> int:
        assert not self.limits
        ci = len(self.linears)
        c = _Linear(list(lits), list(weights), lower, upper, reif, equiv)
        self.linears.append(c)
        for k, l in enumerate(c.lits):
            v = abs(l)
            self.occ[v].append((ci, k))
            # account for literals already fixed at level 0
            x = self.val(l)
            if x:
                w = c.weights[k]
                if x == TRUE:
                    if w > 0:
                        c.minv += w
                    else:
                        c.maxv += w
                else:
                    if w > 0:
                        c.maxv -= w
                    else:
                        c.minv -= w
        if reif:
            self.occ[abs(reif)].append((ci, -1))
        self.pending_linear.add(ci)
        return ci

    # -- propagation ----------------------------------------------------------
    def _explain(self, ci: int, mask: int, cond: int, before: int) -> list[int]:
        """False literals justifying a linear propagation (clause minus the implied literal)."""
        c = self.linears[ci]
        out = []
        value = self.value
        tpos = self.tpos
        for l, w in zip(c.lits, c.weights):
            v = l if l > 0 else -l
            x = value[v]
            if not x or tpos[v] >= before:
                continue
            true = (x == TRUE) == (l > 0)
            lowered_max = (not true and w > 0) or (true and w < 0)
            if lowered_max:
                if mask & _DEC:
                    out.append(l if not true else -l)
            elif mask & _INC:
                out.append(l if not true else -l)
        if cond:
            out.append(-cond)
        return out

    def _check_linear(self, ci: int):
        """Propagate linear constraint ``ci``; return a conflict clause or None."""
        c = self.linears[ci]
        r = c.reif
        rv = self.val(r) if r else TRUE
        if rv == TRUE:
            if c.lower is not None:
                conf = self._enforce_ge(ci, c, c.lower, r)
                if conf is not None:
                    return conf
            if c.upper is not None:
                conf = self._enforce_le(ci, c, c.upper, r)
                if conf is not None:
                    return conf
            return None
        if rv == FALSE:
            if c.equiv:
                if c.upper is None:
                    return self._enforce_le(ci, c, c.lower - 1, -r)
                if c.lower is None:
                    return self._enforce_ge(ci, c, c.upper + 1, -r)
                # two-sided: only detect a definitely satisfied body
                if c.minv >= c.lower and c.maxv <= c.upper:
                    return self._explain(ci, _DEC | _INC, -r, len(self.trail) + 1)
            return None
        # reification literal open
        if (c.lower is not None and c.maxv < c.lower):
            self._assign(-r, ("L", ci, _DEC, 0))
        elif c.upper is not None and c.minv > c.upper:
            self._assign(-r, ("L", ci, _INC, 0))
        elif c.equiv and (c.lower is None or c.minv >= c.lower) and (c.upper is None or c.maxv <= c.upper):
            mask = (_INC if c.lower is not None else 0) | (_DEC if c.upper is not None else 0)
            self._assign(r, ("L", ci, mask, 0))
        return None

    def _enforce_ge(self, ci, c, bound, cond):
        if c.maxv < bound:
            return self._explain(ci, _DEC, cond, len(self.trail) + 1)
        slack = c.maxv - bound
        if slack >= c.maxabs:
            return None
        value = self.value
        for l, w in zip(c.lits, c.weights):
            if value[l if l > 0 else -l]:
                continue
            if w > slack:
                self._assign(l, ("L", ci, _DEC, cond))
            elif -w > slack:
                self._assign(-l, ("L", ci, _DEC, cond))
        return None

    def _enforce_le(self, ci, c, bound, cond):
        if c.minv > bound:
            return self._explain(ci, _INC, cond, len(self.trail) + 1)
        slack = bound - c.minv
        if slack >= c.maxabs:
            return None
        value = self.value
        for l, w in zip(c.lits, c.weights):
            if value[l if l > 0 else -l]:
                continue
            if w > slack:
                self._assign(-l, ("L", ci, _INC, cond))
            elif -w > slack:
                self._assign(l, ("L", ci, _INC, cond))
        return None

    def propagate(self):
        """Unit propagation; returns a falsified clause (list of literals) or None."""
        if self.pending_linear:
            pend = sorted(self.pending_linear)
            self.pending_linear.clear()
            for ci in pend:
                conf = self._check_linear(ci)
                if conf is not None:
                    return conf
        trail = self.trail
        value = self.value
        clauses = self.clauses
        watches = self.watches
        while self.qhead < len(trail):
            lit = trail[self.qhead]
            self.qhead += 1
            false_lit = -lit
            wl = watches.get(false_lit)
            if wl:
                i = j = 0
                n = len(wl)
                while i < n:
                    ci = wl[i]
                    i += 1
                    c = clauses[ci]
                    if c[0] == false_lit:
                        c[0], c[1] = c[1], c[0]
                    first = c[0]
                    fv = value[first if first > 0 else -first]
                    if fv and (fv == TRUE) == (first > 0):
                        wl[j] = ci
                        j += 1
                        continue
                    found = False
                    for k in range(2, len(c)):
                        x = c[k]
                        xv = value[x if x > 0 else -x]
                        if not xv or (xv == TRUE) == (x > 0):
                            c[1], c[k] = x, false_lit
                            watches[x].append(ci)
                            found = True
                            break
                    if found:
                        continue
                    wl[j] = ci
                    j += 1
                    if fv:
                        # conflict
                        while i < n:
                            wl[j] = wl[i]
                            j += 1
                            i += 1
                        del wl[j:]
                        return list(c)
                    self._assign(first, ci)
                del wl[j:]
            v = lit if lit > 0 else -lit
            occ = self.occ[v]
            if occ:
                for ci, _ in occ:
                    conf = self._check_linear(ci)
                    if conf is not None:
                        return conf
        return None

    # -- conflict analysis ---------------------------------------------------
    def _reason_lits(self, v: int) -> list[int]:
        r = self.reason[v]
        lit = v if self.value[v] == TRUE else -v
        if type(r) is int:
            return [x for x in self.clauses[r] if x != lit]
        _, ci, mask, cond = r
        return self._explain(ci, mask, cond, self.tpos[v])

    def _bump(self, v: int) -> None:
        a = self.activity[v] + self.inc
        self.activity[v] = a
        if a > 1e100:
            self.activity = [x * 1e-100 for x in self.activity]
            self.inc *= 1e-100
            self.heap = [(-self.activity[u], u) for u in range(1, self.nvars + 1) if not self.value[u]]
            heapq.heapify(self.heap)
        elif not self.value[v]:
            heapq.heappush(self.heap, (-a, v))

    def analyze(self, conflict: list[int]):
        level = self.level
        cur = len(self.limits)
        seen = set()
        learnt = [0]
        counter = 0
        clause = conflict
        idx = len(self.trail) - 1
        p = 0
        while True:
            for q in clause:
                v = q if q > 0 else -q
                if v in seen or level[v] == 0:
                    continue
                seen.add(v)
                self._bump(v)
                if level[v] == cur:
                    counter += 1
                else:
                    learnt.append(q)
            while True:
                x = self.trail[idx]
                idx -= 1
                if (x if x > 0 else -x) in seen:
                    break
            p = x
            v = p if p > 0 else -p
            seen.discard(v)
            counter -= 1
            if counter <= 0:
                break
            clause = self._reason_lits(v)
        learnt[0] = -p
        self.inc *= 1.05
        if len(learnt) == 1:
            return learnt, 0
        best = 1
        for k in range(2, len(learnt)):
            if level[abs(learnt[k])] > level[abs(learnt[best])]:
                best = k
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, level[abs(learnt[1])]

    def _learn(self, learnt: list[int]) -> None:
        if len(learnt) == 1:
            self._assign(learnt[0], None)
            return
        ci = len(self.clauses)
        self.clauses.append(learnt)
        self.watches[learnt[0]].append(ci)
        self.watches[learnt[1]].append(ci)
        self._assign(learnt[0], ci)

    def resolve_conflict(self, conflict: list[int]) -> bool:
        """Backjump and learn from ``conflict``; False if it holds at level 0."""
        self.conflicts += 1
        top = 0
        for q in conflict:
            lv = self.level[abs(q)]
            if lv > top:
                top = lv
        if top == 0:
            return False
        if top < len(self.limits):
            self._unassign_to(top)
        learnt, back = self.analyze(conflict)
        self._unassign_to(back)
        self._learn(learnt)
        return True

    def add_conflict_clause(self, lits: list[int]) -> bool:
        """Add a clause that may be falsified under the current assignment."""
        if not lits:
            return False
        ci = len(self.clauses)
        for l in lits:
            if self.val(l) != FALSE:
                break
        else:
            # fully falsified: record it and analyse
            if len(lits) >= 2:
                order = sorted(lits, key=lambda l: -self.level[abs(l)])
                self.clauses.append(order)
                self.watches[order[0]].append(ci)
                self.watches[order[1]].append(ci)
            return self.resolve_conflict(list(lits))
        # not falsified: backtrack to 0 and add normally
        self._unassign_to(0)
        self.add_clause(lits)
        return not self.inconsistent

    # -- decisions ------------------------------------------------------------
    def _pick(self) -> int:
        heap = self.heap
        value = self.value
        while heap:
            _, v = heapq.heappop(heap)
            if not value[v]:
                return v
        for v in range(1, self.nvars + 1):
            if not value[v]:
                return v
        return 0

    def decide(self) -> bool:
        v = self._pick()
        if not v:
            return False
        self.limits.append(len(self.trail))
        self._assign(v if self.phase[v] else -v, None)
        return True

    def search(self, on_total=None, budget=None) -> bool:
        """Find a total assignment; ``on_total`` may veto it by returning a clause."""
        if self.inconsistent:
            return False
        restart_at = 100
        luby_i = 1
        since = 0
        while True:
            conflict = self.propagate()
            if conflict is not None:
                if not self.resolve_conflict(conflict):
                    self.inconsistent = True
                    return False
                since += 1
                continue
            if since >= restart_at and self.limits:
                luby_i += 1
                restart_at = 100 * _luby(luby_i)
                since = 0
                self._unassign_to(0)
                continue
            if not self.decide():
                if on_total is not None:
                    extra = on_total()
                    if extra is not None:
                        if not self.add_conflict_clause(extra):
                            self.inconsistent = True
                            return False
                        continue
                return True


def _luby(i: int) -> int:
    k = 1
    while (1 << k) - 1 < i:
        k += 1
    while True:
        if i == (1 << k) - 1:
            return 1 << (k - 1)
        i -= (1 << (k - 1)) - 1
        k = 1
        while (1 << k) - 1 < i:
            k += 1


# ---------------------------------------------------------------------------
# Program translation


def _split_body(body):
    pos, neg, aggs = [], [], []
    for b in body:
        tp = type(b)
        if tp is Literal:
            (neg if b.negated else pos).append(b.atom)
        elif tp is Comparison:
            if not b.evaluate():
                return None
        else:
            aggs.append(b)
    return pos, neg, aggs


def _agg_bounds(agg: Aggregate, true_atoms, possible):
    """(min, max) attainable sum given definitely true atoms and possible atoms."""
    lo = hi = 0
    for e, w in _agg_pairs(agg):
        if e.atom in true_atoms:
            lo += w
            hi += w
        elif e.atom in possible:
            if w > 0:
                hi += w
            else:
                lo += w
    return lo, hi


def _agg_pairs(agg: Aggregate):
    seen = set()
    for e in agg.elements:
        key = (e.atom, e.ground_weight())
        if key not in seen:
            seen.add(key)
            yield e, key[1]


def _agg_status(agg: Aggregate, true_atoms, possible):
    lo, hi = _agg_bounds(agg, true_atoms, possible)
    lower, upper = agg.lower, agg.upper
    if (lower is not None and hi < lower) or (upper is not None and lo > upper):
        return FALSE
    if (lower is None or lo >= lower) and (upper is None or hi <= upper):
        return TRUE
    return 0


class _Rule:
    __slots__ = ("kind", "heads", "pos", "neg", "aggs", "lower", "upper", "src")

    def __init__(self, kind, heads, pos, neg, aggs, lower=0, upper=0, src=None):
        self.kind = kind
        self.heads = heads
        self.pos = pos
        self.neg = neg
        self.aggs = aggs
        self.lower = lower
        self.upper = upper
        self.src = src


class _Everything:
    def __contains__(self, item):
        return True


_ALL = _Everything()


class GroundSolver:
    """Search over the answer sets of a ground program.

    With ``classical=True`` the rules are read as propositional implications
    and models need not be supported or founded.
    """

    def __init__(self, program, classical: bool = False):
        self.classical = classical
        self.engine = Engine()
        self.atom_var: dict[Atom, int] = {}
        self.var_atom: dict[int, Atom] = {}
        self.true_atoms: frozenset = frozenset()
        self.objective = None
        self.levels: list[int] = []
        self.weak_tuples = []
        self._loop_rules = None
        self._build(program)

    # -- translation ------------------------------------------------------------
    def _build(self, program):
        rules = []
        weak = []
        for r in program:
            tp = type(r)
            if tp is WeakConstraint:
                weak.append(r)
                continue
            split = _split_body(r.body)
            if split is None:
                continue
            pos, neg, aggs = split
            if tp is NormalRule:
                if r.head.predicate == BOTTOM and not r.head.args:
                    rules.append(_Rule("h", (), pos, neg, aggs))
                else:
                    rules.append(_Rule("n", (r.head,), pos, neg, aggs))
            elif tp is HardConstraint:
                rules.append(_Rule("h", (), pos, neg, aggs))
            else:
                heads = tuple(dict.fromkeys(r.heads))
                lower = r.lower
                upper = min(r.upper, len(heads))
                rules.append(_Rule("c", heads, pos, neg, aggs, lower, upper))
        eng = self.engine
        if self.classical:
            atoms = set()
            for r in rules:
                atoms.update(r.heads)
                atoms.update(r.pos)
                atoms.update(r.neg)
                for g in r.aggs:
                    atoms.update(e.atom for e in g.elements)
            for r in weak:
                for b in r.body:
                    if type(b) is Literal:
                        atoms.add(b.atom)
            true_atoms, possible = set(), None
            for a in sorted(atoms):
                self._var(a)
        else:
            true_atoms, possible = _well_founded(rules)
            self.true_atoms = frozenset(true_atoms)
            for a in sorted(possible - true_atoms):
                self._var(a)
        supports = defaultdict(list)
        agg_cache = {}
        dep_edges = defaultdict(set)
        loop_rules = []
        for r in rules:
            body = self._body_lits(r, true_atoms, possible, agg_cache)
            if body is None:
                continue
            blit = self._body_var(body)
            if r.kind == "h":
                if blit is True:
                    eng.inconsistent = True
                    return
                eng.add_clause([-x for x in body])
                continue
            if r.kind == "n":
                h = r.heads[0]
                if h in true_atoms:
                    continue
                hv = self._var(h)
                if blit is True:
                    eng.add_clause([hv])
                else:
                    eng.add_clause([-blit, hv])
                supports[hv].append(blit)
                heads = [hv]
            else:
                hvars = []
                n_true = 0
                for h in r.heads:
                    if h in true_atoms:
                        n_true += 1
                    elif possible is None or h in possible:
                        hvars.append(self._var(h))
                lo = r.lower - n_true
                hi = r.upper - n_true
                if lo > 0 or hi < len(hvars):
                    if blit is True:
                        eng.add_linear(hvars, [1] * len(hvars), lo if lo > 0 else None, hi if hi < len(hvars) else None)
                    else:
                        eng.add_linear(hvars, [1] * len(hvars), lo if lo > 0 else None, hi if hi < len(hvars) else None, reif=blit)
                for hv in hvars:
                    supports[hv].append(blit)
                heads = hvars
            if not self.classical:
                posv = [self.atom_var[a] for a in r.pos if a in self.atom_var]
                aggv = []
                for g in r.aggs:
                    for e in g.elements:
                        av = self.atom_var.get(e.atom)
                        if av is not None and not e.negative:
                            aggv.append(av)
                for hv in heads:
                    for u in posv:
                        dep_edges[hv].add(u)
                    for u in aggv:
                        dep_edges[hv].add(u)
                loop_rules.append((heads, posv, blit, r))
        if not self.classical:
            for v, a in list(self.var_atom.items()):
                sup = supports.get(v, [])
                if any(s is True for s in sup):
                    continue
                eng.add_clause([-v] + sup)
            if _has_cycle(dep_edges):
                self._loop_rules = loop_rules
        self._build_objective(weak, true_atoms, possible, agg_cache)

    def _var(self, atom: Atom) -> int:
        v = self.atom_var.get(atom)
        if v is None:
            v = self.engine.new_var()
            self.atom_var[atom] = v
            self.var_atom[v] = atom
        return v

    def _lit_of(self, atom, true_atoms, possible):
        """Literal for ``atom``: True/False constants or a variable."""
        if atom in true_atoms:
            return True
        if possible is not None and atom not in possible:
            return False
        return self._var(atom)

    def _agg_lit(self, g: Aggregate, true_atoms, possible, cache):
        key = g
        if key in cache:
            return cache[key]
        lits, weights = [], []
        offset = 0
        for e, w in _agg_pairs(g):
            if w == 0:
                continue
            x = self._lit_of(e.atom, true_atoms, possible)
            if x is True:
                offset += w
            elif x is False:
                continue
            else:
                lits.append(x)
                weights.append(w)
        lower = None if g.lower is None else g.lower - offset
        upper = None if g.upper is None else g.upper - offset
        minv = sum(w for w in weights if w < 0)
        maxv = sum(w for w in weights if w > 0)
        if (lower is not None and maxv < lower) or (upper is not None and minv > upper):
            res = False
        elif (lower is None or minv >= lower) and (upper is None or maxv <= upper):
            res = True
        else:
            r = self.engine.new_var()
            self.engine.add_linear(lits, weights, lower, upper, reif=r, equiv=True)
            res = r
        cache[key] = res
        return res

    def _body_lits(self, r: _Rule, true_atoms, possible, agg_cache):
        out = []
        for a in r.pos:
            x = self._lit_of(a, true_atoms, possible)
            if x is False:
                return None
            if x is not True:
                out.append(x)
        for a in r.neg:
            x = self._lit_of(a, true_atoms, possible)
            if x is True:
                return None
            if x is not False:
                out.append(-x)
        for g in r.aggs:
            x = self._agg_lit(g, true_atoms, possible, agg_cache)
            if x is False:
                return None
            if x is not True:
                out.append(x)
        return list(dict.fromkeys(out))

    def _body_var(self, body):
        if not body:
            return True
        if len(body) == 1:
            return body[0]
        key = tuple(sorted(body))
        cache = self.__dict__.setdefault("_bodies", {})
        b = cache.get(key)
        if b is not None:
            return b
        eng = self.engine
        b = eng.new_var()
        for x in body:
            eng.add_clause([-b, x])
        eng.add_clause([b] + [-x for x in body])
        cache[key] = b
        return b

    # -- weak constraints ---------------------------------------------------
    def _build_objective(self, weak, true_atoms, possible, agg_cache):
        groups: dict = {}
        for r in weak:
            split = _split_body(r.body)
            if split is None:
                continue
            pos, neg, aggs = split
            body = self._body_lits(_Rule("w", (), pos, neg, aggs), true_atoms, possible, agg_cache)
            if body is None:
                continue
            key = (r.weight.value, r.level.value, r.terms)
            blit = self._body_var(body)
            groups.setdefault(key, []).append(blit)
        eng = self.engine
        per_level = defaultdict(list)
        constant = defaultdict(int)
        for key in sorted(groups, key=lambda k: (k[1], k[0], tuple(map(str, k[2])))):
            w, lev, _ = key
            bodies = groups[key]
            if any(b is True for b in bodies):
                constant[lev] += w
                self.weak_tuples.append((key, True))
                continue
            bodies = list(dict.fromkeys(bodies))
            if len(bodies) == 1:
                t = bodies[0]
            else:
                t = eng.new_var()
                for b in bodies:
                    eng.add_clause([-b, t])
                eng.add_clause([-t] + bodies)
            self.weak_tuples.append((key, t))
            if w:
                per_level[lev].append((t, w))
        levels = sorted(set(per_level) | set(constant))
        self.levels = levels
        self.constant_cost = dict(constant)
        if not per_level:
            return
        factor = 1
        lits, weights = [], []
        self.level_factor = {}
        for lev in levels:
            self.level_factor[lev] = factor
            span = 0
            for t, w in per_level.get(lev, ()):
                lits.append(t)
                weights.append(w * factor)
                span += abs(w)
            factor *= span + 1
        self.objective = eng.add_linear(lits, weights, None, None)

    # -- unfounded sets ---------------------------------------------------------
    def _unfounded_check(self):
        """Loop clause for an unfounded set of the current total assignment, or None."""
        eng = self.engine
        value = eng.value
        derived = set()
        waiting = defaultdict(list)
        missing = {}
        queue = []
        rules = self._loop_rules

        def lit_true(x):
            if x is True:
                return True
            return value[abs(x)] == (TRUE if x > 0 else FALSE)

        for idx, (heads, posv, blit, r) in enumerate(rules):
            if not lit_true(blit):
                continue
            need = [u for u in posv]
            missing[idx] = len(need)
            for u in need:
                waiting[u].append(idx)
            if not need:
                queue.append(idx)
        while queue:
            idx = queue.pop()
            for hv in rules[idx][0]:
                if value[hv] == TRUE and hv not in derived:
                    derived.add(hv)
                    for j in waiting.get(hv, ()):
                        missing[j] -= 1
                        if missing[j] == 0:
                            queue.append(j)
        unfounded = [v for v in self.var_atom if value[v] == TRUE and v not in derived]
        if not unfounded:
            return None
        u = set(unfounded)
        external = []
        for heads, posv, blit, r in rules:
            if blit is True:
                continue
            if any(h in u for h in heads) and not any(p in u for p in posv):
                external.append(blit)
        external = list(dict.fromkeys(external))
        # one loop clause for the first unfounded atom suffices to refute the assignment
        a = min(unfounded)
        return [-a] + external

    # -- public API ---------------------------------------------------------------
    def _on_total(self):
        if self.classical or self._loop_rules is None:
            return None
        return self._unfounded_check()

    def _model(self) -> frozenset:
        value = self.engine.value
        return self.true_atoms | frozenset(a for v, a in self.var_atom.items() if value[v] == TRUE)

    def cost(self) -> dict:
        """Per-level weak sums of the current total assignment."""
        value = self.engine.value
        sums = defaultdict(int)
        for (w, lev, _), t in self.weak_tuples:
            if t is True or value[abs(t)] == (TRUE if t > 0 else FALSE):
                sums[lev] += w
        return {lev: sums.get(lev, 0) for lev in self.levels}

    def _objective_value(self) -> int:
        c = self.engine.linears[self.objective]
        return c.minv

    def assume(self, atom: Atom, truth: bool) -> bool:
        """Fix ``atom`` permanently; False if that is immediately contradictory."""
        eng = self.engine
        eng._unassign_to(0)
        if atom in self.true_atoms:
            return truth
        v = self.atom_var.get(atom)
        if v is None:
            # unconstrained atoms are free in classical models, false otherwise
            if not truth or self.classical:
                return True
            eng.inconsistent = True
            return False
        eng.add_clause([v if truth else -v])
        return not eng.inconsistent

    def solve(self) -> frozenset | None:
        eng = self.engine
        eng._unassign_to(0)
        if not eng.search(self._on_total):
            return None
        return self._model()

    def models(self, projection=None):
        """Yield answer sets, distinct on ``projection`` atoms (all atoms if None)."""
        eng = self.engine
        if projection is None:
            pvars = sorted(self.var_atom)
        else:
            pvars = sorted(self.atom_var[a] for a in projection if a in self.atom_var)
        while True:
            eng._unassign_to(0)
            if not eng.search(self._on_total):
                return
            m = self._model()
            yield m
            block = [-v if eng.value[v] == TRUE else v for v in pvars]
            eng._unassign_to(0)
            if not block:
                return
            eng.add_clause(block)
            if eng.inconsistent:
                return

    def optimize(self):
        """Return (answer set, per-level sums) of an optimal answer set, or None."""
        eng = self.engine
        best = None
        while True:
            eng._unassign_to(0)
            if not eng.search(self._on_total):
                break
            best = (self._model(), self.cost())
            if self.objective is None:
                break
            val = self._objective_value()
            eng._unassign_to(0)
            c = eng.linears[self.objective]
            c.upper = val - 1
            eng.pending_linear.add(self.objective)
        return best

    def bound_objective(self, value: int) -> None:
        """Restrict the scaled objective to at most ``value``."""
        eng = self.engine
        eng._unassign_to(0)
        eng.linears[self.objective].upper = value
        eng.pending_linear.add(self.objective)


def _lfp(rules, true_atoms, possible, optimistic):
    derived: set = set()
    missing = []
    waiting = defaultdict(list)
    queue = []
    for idx, r in enumerate(rules):
        kind = r.kind
        ok = True
        if kind == "h" or kind == "w":
            ok = False
        elif optimistic:
            for a in r.neg:
                if a in true_atoms:
                    ok = False
                    break
            if ok:
                for g in r.aggs:
                    if _agg_status(g, true_atoms, _ALL if possible is None else possible) == FALSE:
                        ok = False
                        break
        else:
            if kind != "n":
                ok = False
            else:
                for a in r.neg:
                    if a in possible:
                        ok = False
                        break
                if ok:
                    for g in r.aggs:
                        if _agg_status(g, true_atoms, possible) != TRUE:
                            ok = False
                            break
        body = set(r.pos)
        missing.append(len(body))
        if not ok:
            continue
        for a in body:
            waiting[a].append(idx)
        if not body:
            queue.append(idx)
    while queue:
        idx = queue.pop()
        for h in rules[idx].heads:
            if h not in derived:
                derived.add(h)
                for j in waiting.get(h, ()):
                    missing[j] -= 1
                    if missing[j] == 0:
                        queue.append(j)
    return derived


def _has_cycle(edges) -> bool:
    """True iff the positive dependency graph has a cycle (iterative DFS)."""
    color = {}
    for start in list(edges):
        if start in color:
            continue
        stack = [(start, iter(edges.get(start, ())))]
        color[start] = 1
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                c = color.get(nxt, 0)
                if c == 1:
                    return True
                if c == 0:
                    color[nxt] = 1
                    stack.append((nxt, iter(edges.get(nxt, ()))))
                    advanced = True
                    break
            if not advanced:
                color[node] = 2
                stack.pop()
    return False


def _well_founded(rules):
    """Alternating fixpoint: (atoms true in every answer set, atoms possibly true)."""
    relaxed = [_Rule("p", r.heads, r.pos, r.neg, r.aggs) if r.kind == "c" else r for r in rules]
    true_atoms: set = set()
    possible = None
    while True:
        new_possible = _lfp(relaxed, true_atoms, possible, optimistic=True)
        new_true = _lfp(relaxed, true_atoms, new_possible, optimistic=False)
        if new_true == true_atoms and new_possible == possible:
            return true_atoms, possible
        true_atoms, possible = new_true, new_possible


# ---------------------------------------------------------------------------
# Program-level entry points


def _grounded(program, extra_constants=()):
    from .grounder import ground

    return program if program.is_ground() else ground(program, extra_constants)


def canonical_order(models) -> list:
    return sorted(models, key=lambda m: sorted(m))


def enumerate_answer_sets(program, projection=None) -> list:
    """All answer sets of ``program`` in canonical order."""
    solver = GroundSolver(_grounded(program))
    return canonical_order(solver.models(projection))


def solve_optimal(program):
    """``(answer set, level sums)`` of one optimal answer set, or None."""
    return GroundSolver(_grounded(program)).optimize()


def optimal_answer_sets(program, projection=None) -> list:
    """All optimal answer sets (distinct on ``projection`` when given)."""
    g = _grounded(program)
    first = GroundSolver(g)
    best = first.optimize()
    if best is None:
        return []
    if first.objective is None:
        return canonical_order(GroundSolver(g).models(projection))
    second = GroundSolver(g)
    second.bound_objective(_scaled(second, best[1]))
    return canonical_order(second.models(projection))


def _scaled(solver: GroundSolver, sums: dict) -> int:
    total = 0
    for lev, factor in solver.level_factor.items():
        total += factor * (sums.get(lev, 0) - solver.constant_cost.get(lev, 0))
    return total


def has_classical_model(program, inc=(), exc=()) -> bool:
    """Some classical model of the non-weak rules contains ``inc`` and avoids ``exc``."""
    from .syntax import ChoiceRule as _Choice, Program

    inc = list(inc)
    # make every example atom part of the grounding so its value is free
    extra = [_Choice(0, 1, (a,), ()) for a in inc] + [_Choice(0, 1, (a,), ()) for a in exc]
    g = _grounded(Program(list(program.non_weak()) + extra))
    solver = GroundSolver(Program([r for r in g if r not in extra]), classical=True)
    for a in inc:
        if not solver.assume(a, True):
            return False
    for a in exc:
        if not solver.assume(a, False):
            return False
    return solver.solve() is not None
