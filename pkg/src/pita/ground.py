"""Grounding of function-free programs and evaluation of arithmetic built-ins."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Set, Tuple

from .syntax import (
    BUILTINS,
    Clause,
    Literal,
    Program,
    Struct,
    Substitution,
    Term,
    Var,
    is_ground,
    normalize_heads,
    resolve,
    unify_with,
    walk,
)

DEFAULT_GROUNDING_CAP = 100_000


class GroundingError(Exception):
    """The grounding is infinite or larger than the configured cap."""


class BuiltinError(Exception):
    pass


@dataclass(frozen=True)
class GroundClause:
    clause_id: int
    grounding: Tuple[Term, ...]
    head: Tuple[Tuple[Struct, float], ...]
    includes_null: bool
    null_prob: float
    body: Tuple[Literal, ...]

    @property
    def n_choices(self) -> int:
        return len(self.head) + (1 if self.includes_null else 0)

    def choice_prob(self, index: int) -> float:
        if index <= len(self.head):
            return self.head[index - 1][1]
        return self.null_prob

    def choice_atom(self, index: int) -> Optional[Struct]:
        """Head atom selected by ``index``; None for the null disjunct."""
        if index <= len(self.head):
            return self.head[index - 1][0]
        return None

    @property
    def head_atoms(self) -> Tuple[Struct, ...]:
        return tuple(a for a, _ in self.head)

    def __str__(self):
        head = " ; ".join(f"{a}:{p:g}" for a, p in self.head)
        body = ", ".join(str(lit) for lit in self.body)
        return f"{head} :- {body}." if body else f"{head}."


@dataclass
class GroundProgram:
    clauses: List[GroundClause]
    source: Program

    def __len__(self):
        return len(self.clauses)

    def __iter__(self):
        return iter(self.clauses)


# ---------------------------------------------------------------------------
# Built-ins


def eval_arith(t: Term, s: Substitution) -> int:
    t = walk(t, s)
    if isinstance(t, int):
        return t
    if isinstance(t, Var):
        raise BuiltinError("arithmetic on an unbound variable")
    if t.functor in ("+", "-", "*") and len(t.args) == 2:
        a = eval_arith(t.args[0], s)
        b = eval_arith(t.args[1], s)
        return a + b if t.functor == "+" else a - b if t.functor == "-" else a * b
    raise BuiltinError(f"not an arithmetic expression: {t}")


_COMPARE = {
    "=:=": lambda a, b: a == b,
    "=\\=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
    "=<": lambda a, b: a <= b,
    ">=": lambda a, b: a >= b,
}


def eval_builtin(atom: Struct, s: Substitution) -> Optional[Substitution]:
    """Run a built-in under ``s``; the extended substitution or None."""
    op = atom.functor
    left, right = atom.args
    if op == "is":
        value = eval_arith(right, s)
        return unify_with(left, value, s)
    if op in _COMPARE:
        return s if _COMPARE[op](eval_arith(left, s), eval_arith(right, s)) else None
    if op == "=":
        return unify_with(left, right, s)
    if op == "\\=":
        return s if unify_with(left, right, s) is None else None
    if op == "==":
        return s if resolve(left, s) == resolve(right, s) else None
    if op == "\\==":
        return s if resolve(left, s) != resolve(right, s) else None
    raise BuiltinError(f"unknown built-in {op}/2")


def is_builtin(atom: Struct) -> bool:
    return atom.indicator in BUILTINS


# ---------------------------------------------------------------------------
# Grounding


def _has_function_symbols(t: Term) -> bool:
    if isinstance(t, Struct) and t.args:
        return True
    return False


def _constants(t: Term, acc: Set[Term]):
    if isinstance(t, int):
        acc.add(t)
    elif isinstance(t, Struct):
        if not t.args:
            acc.add(t)
        for a in t.args:
            _constants(a, acc)


def herbrand_universe(program: Program, extra: Iterable[Struct] = ()) -> List[Term]:
    """Constants of a function-free program; raises GroundingError when a
    function symbol makes the universe infinite."""
    consts: Set[Term] = set()
    atoms = [a for c in program.clauses for a in c.head.atoms]
    atoms += [lit.atom for c in program.clauses for lit in c.body]
    atoms += list(extra)
    for atom in atoms:
        if is_builtin(atom):
            for arg in atom.args:
                if not isinstance(arg, Struct):
                    _constants(arg, consts)
            continue
        for arg in atom.args:
            if _has_function_symbols(arg):
                raise GroundingError(f"function symbol in {atom}: the Herbrand universe is infinite")
            _constants(arg, consts)
    return sorted(consts, key=lambda t: (isinstance(t, Struct), str(t)))


def ground_clauses(program: Program, extra_atoms: Iterable[Struct] = (),
                   cap: int = DEFAULT_GROUNDING_CAP, simplify: bool = True) -> GroundProgram:
    """Ground every clause over the Herbrand universe.

    With ``simplify`` only instances whose positive body atoms can be heads of
    some ground clause are kept (the others never fire in any world); head-only
    and negation-only variables still range over the whole universe.
    """
    program = normalize_heads(program)
    universe = herbrand_universe(program, extra_atoms)
    if not simplify:
        return GroundProgram(_naive(program, universe, cap), program)

    possible: Set[Struct] = set()
    by_pred: Dict[Tuple[str, int], Set[Struct]] = {}
    instances: Dict[Tuple[int, Tuple], GroundClause] = {}
    changed = True
    while changed:
        changed = False
        for c in program.clauses:
            for g in _join(c, universe, by_pred):
                key = (c.id, g.grounding)
                if key in instances:
                    continue
                instances[key] = g
                if len(instances) > cap:
                    raise GroundingError(f"grounding exceeds cap of {cap} clauses")
                for atom in g.head_atoms:
                    if atom not in possible:
                        possible.add(atom)
                        by_pred.setdefault(atom.indicator, set()).add(atom)
                        changed = True
    ordered = sorted(instances.values(), key=lambda g: (g.clause_id, [str(t) for t in g.grounding]))
    return GroundProgram(ordered, program)


_INTERN: Dict[Struct, Struct] = {}


def _intern(atom: Struct) -> Struct:
    """Share one object per ground atom so set lookups hit on identity."""
    if len(_INTERN) > 1_000_000:
        _INTERN.clear()
    return _INTERN.setdefault(atom, atom)


def _instantiate(c: Clause, s: Substitution) -> Optional[GroundClause]:
    body = []
    for lit in c.body:
        if is_builtin(lit.atom):
            try:
                ok = eval_builtin(lit.atom, s) is not None
            except BuiltinError:
                ok = False
            if ok != lit.positive:
                return None
            continue
        body.append(Literal(_intern(resolve(lit.atom, s)), lit.positive))
    grounding = tuple(resolve(v, s) for v in c.variables)
    head = tuple((_intern(resolve(a, s)), p) for a, p in c.head.disjuncts)
    return GroundClause(c.id, grounding, head, c.head.includes_null, c.head.null_prob, tuple(body))


def _naive(program: Program, universe: List[Term], cap: int) -> List[GroundClause]:
    out = []
    for c in program.clauses:
        vs = c.variables
        for values in itertools.product(universe, repeat=len(vs)):
            g = _instantiate(c, dict(zip(vs, values)))
            if g is not None:
                out.append(g)
                if len(out) > cap:
                    raise GroundingError(f"grounding exceeds cap of {cap} clauses")
    return out


def _join(c: Clause, universe: List[Term], by_pred) -> Iterable[GroundClause]:
    positives = [lit.atom for lit in c.body if lit.positive and not is_builtin(lit.atom)]
    subs = [{}]
    for atom in positives:
        nxt = []
        for s in subs:
            for fact in by_pred.get(atom.indicator, ()):
                s2 = unify_with(atom, fact, s)
                if s2 is not None:
                    nxt.append(s2)
        subs = nxt
        if not subs:
            return
    vs = c.variables
    for s in subs:
        free = [v for v in vs if not is_ground(resolve(v, s))]
        for values in itertools.product(universe, repeat=len(free)):
            s2 = dict(s)
            s2.update(zip(free, values))
            g = _instantiate(c, s2)
            if g is not None:
                yield g
