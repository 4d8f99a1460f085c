"""Clause-level transformation of an LPAD into explanation-threading clauses.

Each transformed clause carries its explanation in numbered *slots*.  Goals
read and write slots strictly left to right; the head's explanation is the
value of ``head_slot`` once the body has run.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple, Union

from .bdd import BddError, BddManager, MultiValuedVar
from .syntax import BUILTINS, Clause, Program, Struct, Var, format_term, normalize_heads


@dataclass(frozen=True)
class One:
    out: int


@dataclass(frozen=True)
class Zero:
    out: int


@dataclass(frozen=True)
class Call:
    atom: Struct
    out: int


@dataclass(frozen=True)
class NegCall:
    atom: Struct
    inp: int
    out: int


@dataclass(frozen=True)
class And:
    left: int
    right: int
    out: int


@dataclass(frozen=True)
class VarIntro:
    rule: int
    key_vars: Tuple[Var, ...]
    value_probs: Tuple[float, ...]
    out: int


@dataclass(frozen=True)
class Equality:
    var: int
    value: int
    out: int


@dataclass(frozen=True)
class Builtin:
    """Deterministic built-in; its explanation is the constant 1."""

    atom: Struct
    positive: bool = True


Goal = Union[One, Zero, Call, NegCall, And, VarIntro, Equality, Builtin]


@dataclass(frozen=True)
class TransformedClause:
    head: Struct
    body: Tuple[Goal, ...]
    head_slot: int
    clause_id: int
    head_index: int


@dataclass
class TransformedProgram:
    clauses: List[TransformedClause]
    source: Program

    def for_predicate(self, indicator) -> List[TransformedClause]:
        return self._index.get(indicator, [])

    def __post_init__(self):
        self._index: Dict[Tuple[str, int], List[TransformedClause]] = {}
        for tc in self.clauses:
            self._index.setdefault(tc.head.indicator, []).append(tc)


def is_builtin(atom: Struct) -> bool:
    return atom.indicator in BUILTINS


def _transform_clause(clause: Clause) -> List[TransformedClause]:
    head = clause.head
    rule = clause.id + 1
    probs = tuple(head.value_probs())
    disjunctive = head.n_choices > 1
    key_vars = tuple(clause.variables)

    slot = 0
    body: List[Goal] = []
    if clause.body or not disjunctive:
        body.append(One(slot))
    acc = slot
    for lit in clause.body:
        if is_builtin(lit.atom):
            body.append(Builtin(lit.atom, lit.positive))
            continue
        if lit.positive:
            b = slot + 1
            body.append(Call(lit.atom, b))
            slot = b
        else:
            bn, b = slot + 1, slot + 2
            body.append(NegCall(lit.atom, bn, b))
            slot = b
        out = slot + 1
        body.append(And(acc, slot, out))
        acc = slot = out

    if not disjunctive:
        return [TransformedClause(head.disjuncts[0][0], tuple(body), acc, clause.id, 1)]

    result = []
    for i, (atom, _) in enumerate(head.disjuncts, start=1):
        goals = list(body)
        var_slot = slot + 1
        goals.append(VarIntro(rule, key_vars, probs, var_slot))
        if clause.body:
            eq_slot = var_slot + 1
            goals.append(Equality(var_slot, i, eq_slot))
            goals.append(And(acc, eq_slot, eq_slot + 1))
            head_slot = eq_slot + 1
        else:
            goals.append(Equality(var_slot, i, var_slot + 1))
            head_slot = var_slot + 1
        result.append(TransformedClause(atom, tuple(goals), head_slot, clause.id, i))
    return result


def pita_transform(program: Program) -> TransformedProgram:
    """Transform every clause; a null disjunct gets a value but no clause."""
    program = normalize_heads(program)
    clauses = []
    for c in program.clauses:
        clauses.extend(_transform_clause(c))
    return TransformedProgram(clauses, program)


def get_var(manager: BddManager, key: Tuple[int, Tuple], value_probs: Sequence[float]) -> MultiValuedVar:
    """Return the variable registered for ``key`` or create it."""
    v = manager.registry.get(key)
    if v is None:
        v = manager.add_var(len(value_probs), list(value_probs), key=key)
        manager.registry[key] = v
    elif list(v.value_probs) != list(value_probs):
        raise BddError(f"variable {key} requested with different probabilities")
    return v


# ---------------------------------------------------------------------------
# Rendering


def _prob_text(p: float) -> str:
    return f"{round(p, 12):g}"


def _render_goal(g: Goal, names: Dict[int, str]) -> str:
    if isinstance(g, One):
        return f"one({names[g.out]})"
    if isinstance(g, Zero):
        return f"zero({names[g.out]})"
    if isinstance(g, Call):
        return _with_slot(g.atom, names[g.out])
    if isinstance(g, NegCall):
        return f"({_with_slot(g.atom, names[g.inp])} -> not({names[g.inp]},{names[g.out]}) ; one({names[g.out]}))"
    if isinstance(g, And):
        return f"and({names[g.left]},{names[g.right]},{names[g.out]})"
    if isinstance(g, VarIntro):
        keys = ",".join(v.name for v in g.key_vars)
        probs = ",".join(_prob_text(p) for p in g.value_probs)
        return f"get_var_n({g.rule},[{keys}],[{probs}],{names[g.out]})"
    if isinstance(g, Equality):
        return f"equality({names[g.var]},{g.value},{names[g.out]})"
    if isinstance(g, Builtin):
        text = format_term(g.atom)
        return text if g.positive else "\\+ " + text
    raise TypeError(g)


def _with_slot(atom: Struct, slot: str) -> str:
    args = [format_term(a) for a in atom.args] + [slot]
    return f"{format_term(Struct(atom.functor))}({','.join(args)})"


def _slot_names(tc: TransformedClause) -> Dict[int, str]:
    """Names following the textbook convention: BB_k for accumulated
    conjunctions, B_k / BN_k for literal explanations, Var and B for the
    head choice, BDD for the head slot."""
    names: Dict[int, str] = {tc.head_slot: "BDD"}
    lit = 0
    for g in tc.body:
        if isinstance(g, One) and g.out not in names:
            names[g.out] = "BB0"
        elif isinstance(g, Call):
            lit += 1
            names[g.out] = f"B{lit}"
        elif isinstance(g, NegCall):
            lit += 1
            names[g.inp] = f"BN{lit}"
            names[g.out] = f"B{lit}"
        elif isinstance(g, And) and g.out not in names:
            names[g.out] = f"BB{lit}"
        elif isinstance(g, VarIntro):
            names[g.out] = "Var"
        elif isinstance(g, Equality) and g.out not in names:
            names[g.out] = "B"
    return names


def render_clause(tc: TransformedClause) -> str:
    names = _slot_names(tc)
    head = _with_slot(tc.head, names[tc.head_slot])
    text = head + " :- "
    for k, g in enumerate(tc.body):
        if k:
            text += ",\n    " if isinstance(g, (VarIntro, Equality)) else ", "
        text += _render_goal(g, names)
    return text + "."


def dump_transformed(tp: TransformedProgram) -> str:
    return "".join(render_clause(tc) + "\n" for tc in tp.clauses)
