"""Brute-force distribution semantics: selections, worlds, well-founded
models by the iterated fixpoint, and query probabilities by enumeration.

This module is the reference the tabled engine is checked against, so it
shares nothing with the engine beyond parsing and the BDD used by
:func:`measure`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, List, NamedTuple, Optional, Sequence, Set, Tuple

from .analysis import atomic_search_space
from .bdd import BddManager, choices_to_bdd
from .ground import DEFAULT_GROUNDING_CAP, GroundProgram, ground_clauses
from .syntax import Literal, Program, Struct, Term, is_ground, normalize_heads, unify

DEFAULT_MAX_WORLDS = 2 ** 20


class OracleError(Exception):
    pass


class WorldCapError(OracleError):
    pass


class UnsoundProgramError(OracleError):
    """Some world leaves a relevant atom undefined in its well-founded model."""


class AtomicChoice(NamedTuple):
    clause_id: int
    grounding: Tuple[Term, ...]
    head_index: int


CompositeChoice = FrozenSet[AtomicChoice]

Rule = Tuple[Struct, Tuple[Literal, ...]]


@dataclass
class World:
    selection: Tuple[int, ...]
    rules: List[Rule]
    probability: float


@dataclass
class ThreeValuedInterp:
    true_atoms: Dict[Struct, int] = field(default_factory=dict)
    false_atoms: Dict[Struct, int] = field(default_factory=dict)
    undefined_atoms: Set[Struct] = field(default_factory=set)

    def value(self, atom: Struct) -> Optional[bool]:
        if atom in self.true_atoms:
            return True
        if atom in self.undefined_atoms:
            return None
        return False

    def stratum(self, atom: Struct) -> Optional[int]:
        if atom in self.true_atoms:
            return self.true_atoms[atom]
        return self.false_atoms.get(atom)

    @property
    def total(self) -> bool:
        return not self.undefined_atoms


# ---------------------------------------------------------------------------
# Grounding, choices and worlds


def ground_program(program: Program, query: Optional[Struct] = None,
                   cap: int = DEFAULT_GROUNDING_CAP) -> GroundProgram:
    """All relevant ground instances; restricted to the atomic search space
    of ``query`` when one is given."""
    ground = ground_clauses(program, [query] if query is not None else [], cap=cap)
    if query is not None:
        ground = atomic_search_space(ground, query)
    return ground


def choice_probability(k: Iterable[AtomicChoice], program: Program) -> float:
    program = normalize_heads(program)
    p = 1.0
    seen: Dict[Tuple, int] = {}
    for cid, grounding, index in k:
        if seen.setdefault((cid, tuple(grounding)), index) != index:
            raise OracleError(f"inconsistent composite choice for clause {cid}")
        p *= program.clauses[cid].head.value_probs()[index - 1]
    return p


def count_selections(ground: GroundProgram) -> int:
    n = 1
    for c in ground.clauses:
        n *= c.n_choices
    return n


def enumerate_worlds(ground: GroundProgram, max_worlds: int = DEFAULT_MAX_WORLDS,
                     include_zero: bool = False) -> Iterator[World]:
    """One world per selection.  Zero-probability selections are skipped
    unless ``include_zero`` is set."""
    n = count_selections(ground)
    if n > max_worlds:
        raise WorldCapError(f"{n} selections exceed the cap of {max_worlds}")
    clauses = ground.clauses
    options = []
    for c in clauses:
        opts = []
        for i in range(1, c.n_choices + 1):
            p = c.choice_prob(i)
            if p > 0.0 or include_zero:
                atom = c.choice_atom(i)
                opts.append((i, p, None if atom is None else (atom, c.body)))
        options.append(opts)
    for combo in itertools.product(*options):
        prob = 1.0
        rules = []
        for i, p, rule in combo:
            prob *= p
            if rule is not None:
                rules.append(rule)
        yield World(tuple(i for i, _, _ in combo), rules, prob)


def selection_choices(ground: GroundProgram, selection: Sequence[int]) -> Dict[Tuple[int, Tuple], int]:
    return {(c.clause_id, c.grounding): i for c, i in zip(ground.clauses, selection)}


# ---------------------------------------------------------------------------
# Well-founded model by the iterated fixpoint


def wfm(rules: Sequence[Rule], fixed_order: bool = False) -> ThreeValuedInterp:
    """Iterate the True/False operators; atoms get the index of the
    iteration that first decided them as their stratum (first is 0)."""
    atoms: Set[Struct] = set()
    for head, body in rules:
        atoms.add(head)
        for lit in body:
            atoms.add(lit.atom)

    interp = ThreeValuedInterp()
    tr, fa = interp.true_atoms, interp.false_atoms

    stratum = 0
    while True:
        # least fixpoint of True_I: a rule fires once its negative literals
        # are false in I and its positive atoms have been derived
        new_true = _propagate(rules, lambda body: _true_pending(body, tr, fa), set(tr))
        new_true -= tr.keys()
        # greatest fixpoint of False_I, as the complement of the least set of
        # atoms that may still become true
        pending = _survive_fixed if fixed_order else _survive_pending
        maybe = _propagate(rules, lambda body: pending(body, tr, fa), set(tr) | set(fa))
        new_false = atoms - maybe
        if not new_true and not new_false:
            break
        for a in new_true:
            tr[a] = stratum
        for a in new_false:
            fa[a] = stratum
        stratum += 1
    interp.undefined_atoms = atoms - tr.keys() - fa.keys()
    return interp


def _propagate(rules, pending_of, start: Set[Struct]) -> Set[Struct]:
    """Least set containing ``start`` and closed under the rules, where each
    rule is reduced by ``pending_of`` to the atoms it still waits for (None
    when it can never fire)."""
    derived = set(start)
    waiting: Dict[Struct, List[int]] = {}
    counts: List[int] = []
    heads: List[Struct] = []
    queue: List[Struct] = []
    for head, body in rules:
        need = pending_of(body)
        if need is None or head in derived:
            continue
        need = {a for a in need if a not in derived}
        if not need:
            derived.add(head)
            queue.append(head)
            continue
        idx = len(counts)
        counts.append(len(need))
        heads.append(head)
        for a in need:
            waiting.setdefault(a, []).append(idx)
    queue.extend(start)
    while queue:
        a = queue.pop()
        for idx in waiting.pop(a, ()):
            counts[idx] -= 1
            if counts[idx] == 0 and heads[idx] not in derived:
                derived.add(heads[idx])
                queue.append(heads[idx])
    return derived


def _true_pending(body, tr, fa):
    need = []
    for lit in body:
        if lit.positive:
            if lit.atom in fa:
                return None
            need.append(lit.atom)
        elif lit.atom not in fa:
            return None
    return need


def _survive_pending(body, tr, fa):
    """The clause cannot be shown to fail unless one of its positive atoms
    turns out to be unfounded."""
    need = []
    for lit in body:
        if lit.positive:
            if lit.atom in fa:
                return None
            need.append(lit.atom)
        elif lit.atom in tr:
            return None
    return need


def _survive_fixed(body, tr, fa):
    """Fixed-order variant: only the first literal not already true in I may
    make the clause fail."""
    for lit in body:
        if (lit.atom in tr) if lit.positive else (lit.atom in fa):
            continue
        if (lit.atom in fa) if lit.positive else (lit.atom in tr):
            return None
        return [lit.atom] if lit.positive else []
    return []


def wfm_fixed_order(rules: Sequence[Rule]) -> ThreeValuedInterp:
    return wfm(rules, fixed_order=True)


# ---------------------------------------------------------------------------
# Query probabilities


@dataclass
class OracleResult:
    probability: float
    worlds: int


def _check_total(model: ThreeValuedInterp, relevant: Optional[Set[Struct]] = None):
    undefined = model.undefined_atoms if relevant is None else model.undefined_atoms & relevant
    if undefined:
        sample = sorted(str(a) for a in undefined)[:5]
        raise UnsoundProgramError(f"world with undefined atoms: {', '.join(sample)}")


def oracle_query(program: Program, query: Struct, max_worlds: int = DEFAULT_MAX_WORLDS,
                 cap: int = DEFAULT_GROUNDING_CAP) -> OracleResult:
    if not is_ground(query):
        raise OracleError("the oracle needs a ground query")
    ground = ground_program(program, query, cap=cap)
    total = 0.0
    count = 0
    for w in enumerate_worlds(ground, max_worlds):
        count += 1
        model = wfm(w.rules)
        _check_total(model)
        if query in model.true_atoms:
            total += w.probability
    return OracleResult(total, count)


def oracle_query_prob(program: Program, query: Struct, max_worlds: int = DEFAULT_MAX_WORLDS) -> float:
    return oracle_query(program, query, max_worlds).probability


def oracle_atom_probs(program: Program, max_worlds: int = DEFAULT_MAX_WORLDS) -> Dict[Struct, float]:
    """Probability of every atom that is true in some world, from a single
    enumeration of the whole grounding."""
    ground = ground_program(program)
    probs: Dict[Struct, float] = {}
    for w in enumerate_worlds(ground, max_worlds):
        model = wfm(w.rules)
        _check_total(model)
        for a in model.true_atoms:
            probs[a] = probs.get(a, 0.0) + w.probability
    return probs


def explanations_of(program: Program, query: Struct,
                    max_worlds: int = DEFAULT_MAX_WORLDS) -> Set[CompositeChoice]:
    """A covering set of explanations: each satisfying selection projected
    onto the probabilistic clauses of the query's search space."""
    ground = ground_program(program, query)
    K: Set[CompositeChoice] = set()
    for w in enumerate_worlds(ground, max_worlds):
        model = wfm(w.rules)
        _check_total(model)
        if query not in model.true_atoms:
            continue
        K.add(frozenset(
            AtomicChoice(c.clause_id, c.grounding, i)
            for c, i in zip(ground.clauses, w.selection)
            if c.n_choices > 1
        ))
    return K


def measure(program: Program, K: Iterable[Iterable[AtomicChoice]]) -> float:
    """Measure of the worlds identified by the finite set ``K``."""
    program = normalize_heads(program)
    manager = BddManager()
    return manager.ret_prob(choices_to_bdd(manager, K, program))


def world_satisfies(ground: GroundProgram, selection: Sequence[int], query: Struct) -> bool:
    rules = []
    for c, i in zip(ground.clauses, selection):
        atom = c.choice_atom(i)
        if atom is not None:
            rules.append((atom, c.body))
    return query in wfm(rules).true_atoms


def ground_instances(ground: GroundProgram, query: Struct) -> List[Struct]:
    atoms = {a for c in ground.clauses for a in c.head_atoms}
    return sorted((a for a in atoms if unify(a, query) is not None), key=str)
