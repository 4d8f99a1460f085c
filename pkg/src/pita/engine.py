"""Tabled evaluation of transformed programs with answer subsumption.

Every call is tabled.  A table maps each ground answer tuple to the BDD of
its explanations; new explanations for a known tuple are joined into the
stored BDD with disjunction.  Mutually recursive subgoals form components
(found Tarjan-style on the call stack) that are re-evaluated in rounds until
no stored BDD changes; since BDDs are canonical the test is an integer
comparison.

Negation is evaluated only against tables that can no longer grow.  A
negative literal on a subgoal of the component still being evaluated is set
aside; once the component reaches a fixpoint without it, its tables are
opened to negation and evaluated again.  If any answer changes at that point
the program is not fixed-order stratified and :class:`NegationCycleError` is
raised; this is conservative (some programs with a total well-founded model
are rejected) but never returns a wrong probability.
"""
from __future__ import annotations

import itertools
import sys
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .bdd import ONE, ZERO, BddManager, NodeRef
from .ground import BuiltinError, eval_builtin
from .syntax import (
    Program,
    Struct,
    Term,
    Var,
    is_ground,
    parse_program,
    resolve,
    unify_with,
)
from .transform import (
    And,
    Builtin,
    Call,
    Equality,
    NegCall,
    One,
    TransformedClause,
    TransformedProgram,
    VarIntro,
    Zero,
    get_var,
    pita_transform,
)

NEW, INCOMPLETE, COMPLETE = "new", "incomplete", "complete"

PRELUDE = """
member(X, [X|_]).
member(X, [_|T]) :- member(X, T).
append([], L, L).
append([H|T], L, [H|R]) :- append(T, L, R).
"""


class EngineError(Exception):
    pass


class FlounderError(EngineError):
    """A negative literal was selected while still non-ground."""


class NegationCycleError(EngineError):
    """A subgoal depends on its own negation (not fixed-order stratified)."""


class CapExceeded(EngineError):
    """An evaluation guard tripped: the query is probably not bounded-term-size."""


@dataclass
class EvaluationConfig:
    max_depth: Optional[int] = None
    max_rounds: int = 10_000
    max_answers: int = 1_000_000
    max_subgoals: int = 100_000
    max_call_depth: int = 400

    def __post_init__(self):
        for name in ("max_depth", "max_rounds", "max_answers", "max_subgoals", "max_call_depth"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ValueError(f"{name} must be positive")


@dataclass(eq=False)
class Table:
    call: Struct
    abstracted: bool = False
    status: str = NEW
    answers: Dict[Tuple[Term, ...], NodeRef] = field(default_factory=dict)
    dfn: int = -1
    lowlink: int = -1
    evaluated_in: int = -1
    on_chain: bool = False
    suspended: bool = False
    settling: bool = False
    read_negatively: bool = False

    @property
    def complete(self) -> bool:
        return self.status == COMPLETE


# ---------------------------------------------------------------------------
# Term-depth abstraction


def abstract_term(t: Term, depth: int, fresh=None) -> Term:
    """Replace every subterm below ``depth`` (the root is at depth 1) with a
    fresh variable."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    fresh = fresh if fresh is not None else itertools.count()

    def walk_(x, d):
        if d > depth:
            return Var(f"_A#{next(fresh)}")
        if isinstance(x, Struct) and x.args:
            return Struct(x.functor, tuple(walk_(a, d + 1) for a in x.args))
        return x

    return walk_(t, 1)


def abstract_atom(atom: Struct, depth: int) -> Struct:
    """Abstract each argument of ``atom``; arguments sit at depth 1."""
    fresh = itertools.count()
    return Struct(atom.functor, tuple(abstract_term(a, depth, fresh) for a in atom.args))


def canonical_call(atom: Struct) -> Struct:
    """Variant representative whose variable names cannot clash with clause
    variables."""
    mapping: Dict[Var, Var] = {}

    def canon(x):
        if isinstance(x, Var):
            if x not in mapping:
                mapping[x] = Var(f"_#{len(mapping)}")
            return mapping[x]
        if isinstance(x, Struct) and x.args:
            return Struct(x.functor, tuple(canon(a) for a in x.args))
        return x

    return canon(atom)


# ---------------------------------------------------------------------------
# Sessions


class Session:
    """One evaluation: tables, BDD manager and variable registry."""

    def __init__(self, tp: TransformedProgram, cfg: Optional[EvaluationConfig] = None):
        self.tp = tp
        self.cfg = cfg or EvaluationConfig()
        self.manager = BddManager()
        self.tables: Dict[Struct, Table] = {}
        self._stack: List[Table] = []
        self._dfn = itertools.count()
        self._round = 0
        self._changed = False
        self._chain_depth = 0
        self.stats = {
            "subgoals": 0,
            "rounds": 0,
            "evaluations": 0,
            "answers": 0,
            "suspensions": 0,
            # negative reads of tables that were not yet complete; stays 0 on
            # programs whose negation never cycles back into its caller
            "negation_on_incomplete": 0,
        }
        needed = 12 * self.cfg.max_call_depth + 2000
        if sys.getrecursionlimit() < needed:
            sys.setrecursionlimit(needed)

    # -- public --------------------------------------------------------------

    def solve(self, query: Struct) -> Table:
        """Evaluate ``query`` to completion and return its table."""
        t = self._call(query, None)
        if not t.complete:
            raise EngineError(f"evaluation of {query} did not complete")
        return t

    def answers(self, query: Struct) -> List[Tuple[Struct, NodeRef]]:
        """Ground instances of ``query`` with their explanation BDDs."""
        t = self.solve(query)
        out = []
        for args, node in t.answers.items():
            s = unify_with(Struct("", query.args), Struct("", args), {})
            if s is not None:
                out.append((Struct(query.functor, args), node))
        out.sort(key=lambda e: str(e[0]))
        return out

    # -- tabling -------------------------------------------------------------

    def _call(self, atom: Struct, caller: Optional[Table]) -> Table:
        call = atom
        abstracted = False
        if self.cfg.max_depth is not None:
            call = _abstract_call(atom, self.cfg.max_depth)
            abstracted = call != atom
        key = canonical_call(call)
        t = self.tables.get(key)
        if t is None:
            if len(self.tables) >= self.cfg.max_subgoals:
                raise CapExceeded(f"more than {self.cfg.max_subgoals} tabled subgoals")
            t = Table(key, abstracted)
            self.tables[key] = t
            self.stats["subgoals"] += 1
            self._evaluate_new(t)
        elif not t.complete and not t.on_chain and t.evaluated_in != self._round:
            self._evaluate_once(t)
        if caller is not None and not t.complete:
            caller.lowlink = min(caller.lowlink, t.lowlink)
        return t

    def _evaluate_new(self, t: Table):
        t.dfn = t.lowlink = next(self._dfn)
        t.status = INCOMPLETE
        self._stack.append(t)
        saved = self._changed
        while True:
            self._changed = False
            self._round += 1
            self._evaluate_once(t)
            if t.lowlink < t.dfn:
                break
            if not self._changed:
                members = self._stack[self._stack.index(t):]
                if not self._settle(members):
                    self._complete_component(t)
                    break
            self.stats["rounds"] += 1
            if self.stats["rounds"] > self.cfg.max_rounds:
                raise CapExceeded(f"more than {self.cfg.max_rounds} fixpoint rounds")
        self._changed = self._changed or saved

    def _settle(self, members: List[Table]) -> bool:
        """Let negation read the component's tables from the next round on.
        True when some derivation had been set aside (another round is due)."""
        pending = False
        for m in members:
            if m.suspended:
                pending = True
                m.suspended = False
        if pending:
            # from now on every answer change is a negation cycle: a value
            # read through negation in this component could have been stale
            for m in members:
                m.settling = True
                m.read_negatively = True
        return pending

    def _complete_component(self, leader: Table):
        idx = self._stack.index(leader)
        for m in self._stack[idx:]:
            m.status = COMPLETE
            m.settling = False
        del self._stack[idx:]

    def _evaluate_once(self, t: Table):
        self._chain_depth += 1
        if self._chain_depth > self.cfg.max_call_depth:
            raise CapExceeded(f"call depth exceeds {self.cfg.max_call_depth}")
        t.on_chain = True
        t.evaluated_in = self._round
        self.stats["evaluations"] += 1
        try:
            for tc in self.tp.for_predicate(t.call.indicator):
                self._resolve(t, tc)
        finally:
            t.on_chain = False
            self._chain_depth -= 1

    def _add_answer(self, t: Table, args: Tuple[Term, ...], node: NodeRef):
        if node == ZERO:
            return
        old = t.answers.get(args)
        new = node if old is None else self.manager.bdd_or(old, node)
        if new == old:
            return
        if t.complete or t.read_negatively:
            raise NegationCycleError(
                f"answer {Struct(t.call.functor, args)} depends on a negation "
                "inside its own recursive component"
            )
        if old is None:
            self.stats["answers"] += 1
            if self.stats["answers"] > self.cfg.max_answers:
                raise CapExceeded(f"more than {self.cfg.max_answers} answers")
        t.answers[args] = new
        self._changed = True

    # -- clause bodies ---------------------------------------------------------

    def _resolve(self, t: Table, tc: TransformedClause):
        s0 = unify_with(tc.head, t.call, {})
        if s0 is None:
            return
        n_slots = tc.head_slot + 1
        for g in tc.body:
            n_slots = max(n_slots, _max_slot(g) + 1)
        manager = self.manager
        goals = tc.body
        n_goals = len(goals)
        stack = [(0, s0, (ZERO,) * n_slots)]
        while stack:
            i, s, slots = stack.pop()
            if i == n_goals:
                args = tuple(resolve(a, s) for a in t.call.args)
                if not all(is_ground(a) for a in args):
                    raise EngineError(f"non-ground answer {Struct(t.call.functor, args)}")
                self._add_answer(t, args, slots[tc.head_slot])
                continue
            g = goals[i]
            if isinstance(g, Call):
                atom = resolve(g.atom, s)
                sub = self._call(atom, t)
                pattern = Struct("", atom.args)
                matches = []
                for args, node in list(sub.answers.items()):
                    s2 = unify_with(pattern, Struct("", args), s)
                    if s2 is not None:
                        matches.append((i + 1, s2, _set(slots, g.out, node)))
                stack.extend(reversed(matches))
            elif isinstance(g, And):
                node = manager.bdd_and(slots[g.left], slots[g.right])
                if node != ZERO:
                    stack.append((i + 1, s, _set(slots, g.out, node)))
            elif isinstance(g, NegCall):
                atom = resolve(g.atom, s)
                if not is_ground(atom):
                    raise FlounderError(f"non-ground negative literal \\+ {atom}")
                sub = self._negative_call(atom, t)
                if sub is None:
                    continue
                node = sub.answers.get(atom.args)
                if node is None:
                    stack.append((i + 1, s, _set(slots, g.out, ONE)))
                else:
                    slots = _set(slots, g.inp, node)
                    stack.append((i + 1, s, _set(slots, g.out, manager.bdd_not(node))))
            elif isinstance(g, VarIntro):
                key = tuple(resolve(v, s) for v in g.key_vars)
                if not all(is_ground(k) for k in key):
                    raise EngineError(
                        f"clause {g.rule} reached a probabilistic choice with non-ground "
                        f"variables {key}; the program is not range-restricted"
                    )
                v = get_var(manager, (g.rule, key), g.value_probs)
                stack.append((i + 1, s, _set(slots, g.out, v)))
            elif isinstance(g, Equality):
                v = slots[g.var]
                stack.append((i + 1, s, _set(slots, g.out, manager.equality(v, g.value))))
            elif isinstance(g, One):
                stack.append((i + 1, s, _set(slots, g.out, ONE)))
            elif isinstance(g, Zero):
                continue
            elif isinstance(g, Builtin):
                try:
                    s2 = eval_builtin(g.atom, s)
                except BuiltinError as exc:
                    raise EngineError(f"{exc} in {resolve(g.atom, s)}") from None
                if g.positive and s2 is not None:
                    stack.append((i + 1, s2, slots))
                elif not g.positive:
                    if not is_ground(resolve(g.atom, s)):
                        raise FlounderError(f"non-ground negative built-in \\+ {resolve(g.atom, s)}")
                    if s2 is None:
                        stack.append((i + 1, s, slots))
            else:
                raise TypeError(g)

    def _negative_call(self, atom: Struct, caller: Table) -> Optional[Table]:
        """The completed table for ``atom``, or None when it is still being
        evaluated (the derivation is set aside)."""
        sub = self._call(atom, caller)
        if sub.complete:
            return sub
        if sub.settling:
            self.stats["negation_on_incomplete"] += 1
            return sub
        caller.suspended = True
        self.stats["suspensions"] += 1
        return None


def _abstract_call(atom: Struct, depth: int) -> Struct:
    from .syntax import term_depth

    if all(term_depth(a) <= depth for a in atom.args):
        return atom
    return abstract_atom(atom, depth)


def _max_slot(g) -> int:
    slots = [getattr(g, name) for name in ("out", "inp", "left", "right", "var") if hasattr(g, name)]
    return max(slots, default=-1)


def _set(slots: tuple, i: int, value) -> tuple:
    return slots[:i] + (value,) + slots[i + 1:]


# ---------------------------------------------------------------------------
# Pipeline


def add_prelude(program: Program) -> Program:
    """Append list predicates the program calls but does not define."""
    prelude = parse_program(PRELUDE)
    called = {lit.atom.indicator for c in program.clauses for lit in c.body}
    needed = [c for c in prelude.clauses if c.head.atoms[0].indicator in called
              and not program.defined(c.head.atoms[0].indicator)]
    if not needed:
        return program
    return Program.from_clauses(list(program.clauses) + needed)


@dataclass
class QueryRun:
    """Answers of one query evaluation together with the session that
    produced them."""

    query: Struct
    answers: List[Tuple[Struct, float]]
    nodes: List[Tuple[Struct, NodeRef]]
    session: Session
    seconds: float

    @property
    def stats(self) -> Dict[str, int]:
        s = dict(self.session.stats)
        s["bdd_nodes"] = len(self.session.manager)
        s["bdd_vars"] = self.session.manager.num_vars
        return s


def run_query(program: Program, query: Struct, cfg: Optional[EvaluationConfig] = None) -> QueryRun:
    start = time.perf_counter()
    tp = pita_transform(add_prelude(program))
    session = Session(tp, cfg)
    nodes = session.answers(query)
    answers = [(a, session.manager.ret_prob(n)) for a, n in nodes]
    if not answers and is_ground(query):
        answers = [(query, 0.0)]
    return QueryRun(query, answers, nodes, session, time.perf_counter() - start)


def prob(program: Program, query: Struct, cfg: Optional[EvaluationConfig] = None) -> List[Tuple[Struct, float]]:
    """Probability of every ground answer of ``query``; a ground query with
    no answer gets probability 0."""
    return run_query(program, query, cfg).answers


@dataclass(frozen=True)
class Explanation:
    """One root-to-1 path of an answer BDD, decoded into the allowed head
    choices of each ground clause it constrains.  Keys are
    ``(clause_id, grounding)``; a singleton value set is an atomic choice."""

    constraints: Tuple[Tuple[Tuple[int, Tuple[Term, ...]], frozenset], ...]
    probability: float

    def as_dict(self) -> Dict[Tuple[int, Tuple[Term, ...]], frozenset]:
        return dict(self.constraints)

    def composite_choice(self):
        """The path as atomic choices, or None if some clause keeps more than
        one possible head."""
        from .semantics import AtomicChoice

        if any(len(vals) != 1 for _, vals in self.constraints):
            return None
        return frozenset(AtomicChoice(cid, g, next(iter(vals))) for (cid, g), vals in self.constraints)


def decode_paths(manager: BddManager, node: NodeRef) -> List[Explanation]:
    out = []
    for path in manager.paths_to_one(node):
        decoded = manager.path_to_values(path)
        constraints = []
        for v, values in decoded.items():
            rule, grounding = v.key
            constraints.append(((rule - 1, grounding), values))
        constraints.sort(key=repr)
        out.append(Explanation(tuple(constraints), manager.path_probability(path)))
    return out


def explanation_paths(program: Program, query: Struct,
                      cfg: Optional[EvaluationConfig] = None) -> List[Explanation]:
    """Mutually incompatible explanations of a ground query read off its BDD."""
    if not is_ground(query):
        raise ValueError("explanation_paths needs a ground query")
    run = run_query(program, query, cfg)
    if not run.nodes:
        return []
    return decode_paths(run.session.manager, run.nodes[0][1])
