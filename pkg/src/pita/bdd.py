"""Reduced ordered BDDs over weighted Boolean variables.

Nodes are integer handles into a :class:`BddManager`; ``0`` and ``1`` are the
terminals.  Every node is hash-consed, so two handles are equal exactly when
they denote the same function.  Multivalued variables are encoded with
``n - 1`` Boolean variables: value ``i < n`` is ``~X1 & ... & ~X(i-1) & Xi``
and value ``n`` is ``~X1 & ... & ~X(n-1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, Hashable, Iterable, List, Optional, Sequence, Tuple

ZERO = 0
ONE = 1

NodeRef = int

_TERMINAL_LEVEL = math.inf


class BddError(Exception):
    pass


@dataclass(frozen=True)
class BooleanVar:
    index: int
    weight: float


@dataclass(frozen=True)
class MultiValuedVar:
    id: int
    n_values: int
    value_probs: Tuple[float, ...]
    boolean_vars: Tuple[BooleanVar, ...]
    key: Optional[Hashable] = None


def boolean_weights(value_probs: Sequence[float]) -> List[float]:
    """Weights of the ``n - 1`` Boolean variables encoding ``value_probs``.

    P(X_i) = P(X=i) / prod_{j<i} (1 - P(X_j)); a zero denominator means the
    value is unreachable and gets weight 0.
    """
    weights = []
    remaining = 1.0
    for p in value_probs[:-1]:
        w = p / remaining if remaining > 0.0 else 0.0
        w = min(max(w, 0.0), 1.0)
        weights.append(w)
        remaining *= 1.0 - w
    return weights


class BddManager:
    """Node store, apply caches and the multivalued-variable registry."""

    def __init__(self):
        # (level, low, high); terminals sit below every variable
        self._nodes: List[Tuple[float, int, int]] = [
            (_TERMINAL_LEVEL, ZERO, ZERO),
            (_TERMINAL_LEVEL, ONE, ONE),
        ]
        self._unique: Dict[Tuple[int, int, int], int] = {}
        self._cache: Dict[Tuple[str, int, int], int] = {}
        self.bool_vars: List[BooleanVar] = []
        self.mv_vars: List[MultiValuedVar] = []
        self._owner: List[int] = []  # boolean var index -> multivalued var id
        self.registry: Dict[Hashable, MultiValuedVar] = {}

    # -- structure ---------------------------------------------------------

    def one(self) -> NodeRef:
        return ONE

    def zero(self) -> NodeRef:
        return ZERO

    def __len__(self):
        """Number of internal nodes ever created."""
        return len(self._nodes) - 2

    @property
    def num_vars(self) -> int:
        return len(self.bool_vars)

    def level(self, u: NodeRef) -> float:
        return self._nodes[u][0]

    def low(self, u: NodeRef) -> NodeRef:
        return self._nodes[u][1]

    def high(self, u: NodeRef) -> NodeRef:
        return self._nodes[u][2]

    def is_terminal(self, u: NodeRef) -> bool:
        return u <= ONE

    def node(self, var: int, low: NodeRef, high: NodeRef) -> NodeRef:
        if low == high:
            return low
        if not (var < self.level(low) and var < self.level(high)):
            raise BddError(f"variable order violated at var {var}")
        key = (var, low, high)
        u = self._unique.get(key)
        if u is None:
            u = len(self._nodes)
            self._nodes.append(key)
            self._unique[key] = u
        return u

    def new_bool_var(self, weight: float) -> BooleanVar:
        if not 0.0 <= weight <= 1.0:
            raise BddError(f"weight {weight} outside [0,1]")
        bv = BooleanVar(len(self.bool_vars), weight)
        self.bool_vars.append(bv)
        self._owner.append(-1)
        return bv

    def var(self, bv: BooleanVar) -> NodeRef:
        return self.node(bv.index, ZERO, ONE)

    def size(self, u: NodeRef) -> int:
        """Internal nodes reachable from ``u``."""
        seen = set()
        stack = [u]
        while stack:
            v = stack.pop()
            if v <= ONE or v in seen:
                continue
            seen.add(v)
            stack.append(self.low(v))
            stack.append(self.high(v))
        return len(seen)

    def support(self, u: NodeRef) -> List[int]:
        seen = set()
        levels = set()
        stack = [u]
        while stack:
            v = stack.pop()
            if v <= ONE or v in seen:
                continue
            seen.add(v)
            levels.add(int(self.level(v)))
            stack.append(self.low(v))
            stack.append(self.high(v))
        return sorted(levels)

    # -- Boolean operations ------------------------------------------------

    def bdd_not(self, a: NodeRef) -> NodeRef:
        if a == ZERO:
            return ONE
        if a == ONE:
            return ZERO
        key = ("not", a, a)
        r = self._cache.get(key)
        if r is None:
            lvl, lo, hi = self._nodes[a]
            r = self.node(lvl, self.bdd_not(lo), self.bdd_not(hi))
            self._cache[key] = r
        return r

    def bdd_and(self, a: NodeRef, b: NodeRef) -> NodeRef:
        if a == ZERO or b == ZERO:
            return ZERO
        if a == ONE:
            return b
        if b == ONE or a == b:
            return a
        if a > b:
            a, b = b, a
        key = ("and", a, b)
        r = self._cache.get(key)
        if r is None:
            r = self._apply2(self.bdd_and, a, b)
            self._cache[key] = r
        return r

    def bdd_or(self, a: NodeRef, b: NodeRef) -> NodeRef:
        if a == ONE or b == ONE:
            return ONE
        if a == ZERO:
            return b
        if b == ZERO or a == b:
            return a
        if a > b:
            a, b = b, a
        key = ("or", a, b)
        r = self._cache.get(key)
        if r is None:
            r = self._apply2(self.bdd_or, a, b)
            self._cache[key] = r
        return r

    def _apply2(self, op, a: NodeRef, b: NodeRef) -> NodeRef:
        la, a0, a1 = self._nodes[a]
        lb, b0, b1 = self._nodes[b]
        if la == lb:
            return self.node(la, op(a0, b0), op(a1, b1))
        if la < lb:
            return self.node(la, op(a0, b), op(a1, b))
        return self.node(lb, op(a, b0), op(a, b1))

    def conjoin(self, nodes: Iterable[NodeRef]) -> NodeRef:
        r = ONE
        for u in nodes:
            r = self.bdd_and(r, u)
        return r

    def disjoin(self, nodes: Iterable[NodeRef]) -> NodeRef:
        r = ZERO
        for u in nodes:
            r = self.bdd_or(r, u)
        return r

    def clear_cache(self):
        self._cache.clear()

    # -- multivalued variables -----------------------------------------------

    def add_var(self, n_values: int, value_probs: Sequence[float], key: Hashable = None) -> MultiValuedVar:
        """Register a multivalued variable; its Boolean variables are appended
        to the end of the order."""
        if n_values < 1 or len(value_probs) != n_values:
            raise BddError(f"need {n_values} probabilities, got {len(value_probs)}")
        if any(p < 0.0 or p > 1.0 for p in value_probs):
            raise BddError(f"probabilities outside [0,1]: {list(value_probs)}")
        if abs(sum(value_probs) - 1.0) > 1e-12:
            raise BddError(f"probabilities sum to {sum(value_probs)!r}, not 1")
        mv_id = len(self.mv_vars)
        bvs = []
        for w in boolean_weights(value_probs):
            bv = self.new_bool_var(w)
            self._owner[bv.index] = mv_id
            bvs.append(bv)
        v = MultiValuedVar(mv_id, n_values, tuple(value_probs), tuple(bvs), key)
        self.mv_vars.append(v)
        return v

    def equality(self, v: MultiValuedVar, i: int) -> NodeRef:
        """BDD for ``v = i`` (values are 1-based)."""
        if not 1 <= i <= v.n_values:
            raise BddError(f"value {i} out of range 1..{v.n_values}")
        bvs = v.boolean_vars
        if i < v.n_values:
            r = self.node(bvs[i - 1].index, ZERO, ONE)
            prefix = bvs[: i - 1]
        else:
            r = ONE
            prefix = bvs
        for bv in reversed(prefix):
            r = self.node(bv.index, r, ZERO)
        return r

    def owner(self, bool_index: int) -> Optional[MultiValuedVar]:
        mv_id = self._owner[bool_index]
        return self.mv_vars[mv_id] if mv_id >= 0 else None

    # -- probability and paths -----------------------------------------------

    def ret_prob(self, a: NodeRef) -> float:
        """Weighted model count of ``a``."""
        memo = {ZERO: 0.0, ONE: 1.0}
        stack = [a]
        while stack:
            u = stack.pop()
            if u in memo:
                continue
            lvl, lo, hi = self._nodes[u]
            if lo in memo and hi in memo:
                w = self.bool_vars[lvl].weight
                memo[u] = w * memo[hi] + (1.0 - w) * memo[lo]
            else:
                stack.append(u)
                stack.append(lo)
                stack.append(hi)
        return memo[a]

    def paths_to_one(self, a: NodeRef) -> List[Dict[int, bool]]:
        """Every root-to-1 path as a partial assignment {bool var index: value}."""
        paths = []
        stack = [(a, ())]
        while stack:
            u, path = stack.pop()
            if u == ZERO:
                continue
            if u == ONE:
                paths.append(dict(path))
                continue
            lvl, lo, hi = self._nodes[u]
            stack.append((lo, path + ((lvl, False),)))
            stack.append((hi, path + ((lvl, True),)))
        return paths

    def path_probability(self, path: Dict[int, bool]) -> float:
        p = 1.0
        for idx, val in path.items():
            w = self.bool_vars[idx].weight
            p *= w if val else 1.0 - w
        return p

    def path_to_values(self, path: Dict[int, bool]) -> Dict[MultiValuedVar, FrozenSet[int]]:
        """Decode a path into the set of allowed values of each multivalued
        variable it constrains.  A singleton set is an atomic choice."""
        by_var: Dict[int, Dict[int, bool]] = {}
        for idx, val in path.items():
            mv = self._owner[idx]
            if mv < 0:
                raise BddError(f"Boolean variable {idx} belongs to no multivalued variable")
            by_var.setdefault(mv, {})[idx] = val
        decoded = {}
        for mv_id, bits in by_var.items():
            v = self.mv_vars[mv_id]
            allowed = frozenset(
                value for value in range(1, v.n_values + 1)
                if all(_bit_for_value(v, value, idx) in (None, val) for idx, val in bits.items())
            )
            decoded[v] = allowed
        return decoded

    # -- export ---------------------------------------------------------------

    def to_dot(self, a: NodeRef, name: str = "bdd") -> str:
        lines = [f"digraph {name} {{"]
        lines.append('  n0 [shape=box,label="0"];')
        lines.append('  n1 [shape=box,label="1"];')
        seen = set()
        stack = [a]
        while stack:
            u = stack.pop()
            if u <= ONE or u in seen:
                continue
            seen.add(u)
            lvl, lo, hi = self._nodes[u]
            lines.append(f'  n{u} [label="{self.var_label(int(lvl))}"];')
            lines.append(f"  n{u} -> n{hi};")
            lines.append(f"  n{u} -> n{lo} [style=dashed];")
            stack.extend((lo, hi))
        lines.append("}")
        return "\n".join(lines) + "\n"

    def var_label(self, bool_index: int) -> str:
        v = self.owner(bool_index)
        if v is None:
            return f"x{bool_index}"
        pos = [bv.index for bv in v.boolean_vars].index(bool_index) + 1
        return f"X{_key_text(v)}_{pos}"


def _key_text(v: MultiValuedVar) -> str:
    """Readable variable name: rule number and grounding for registered
    variables, the creation id otherwise."""
    if isinstance(v.key, tuple) and len(v.key) == 2 and isinstance(v.key[1], tuple):
        from .syntax import format_term

        rule, grounding = v.key
        args = ",".join(format_term(t) for t in grounding)
        return f"{rule}({args})" if args else str(rule)
    return str(v.id) if v.key is None else str(v.key)


def _bit_for_value(v: MultiValuedVar, value: int, bool_index: int) -> Optional[bool]:
    """Value forced on Boolean variable ``bool_index`` by ``v = value``;
    None when the encoding leaves it free."""
    pos = [bv.index for bv in v.boolean_vars].index(bool_index) + 1
    if pos < value:
        return False
    if pos == value:
        return True
    return None


def choices_to_bdd(manager: BddManager, K, program) -> NodeRef:
    """BDD of the disjunction over ``K`` of the conjunction of each composite
    choice's equations.

    Atomic choices are ``(clause_id, grounding, head_index)`` triples; their
    variables are shared with the engine through the registry key
    ``(clause_id + 1, grounding)``.
    """
    from .transform import get_var

    result = ZERO
    for kappa in K:
        seen: Dict[Tuple, int] = {}
        conj = ONE
        for cid, grounding, index in sorted(kappa, key=repr):
            if seen.setdefault((cid, grounding), index) != index:
                raise BddError(f"inconsistent composite choice for clause {cid} {grounding}")
            clause = program.clauses[cid]
            probs = clause.head.value_probs()
            v = get_var(manager, (cid + 1, tuple(grounding)), probs)
            conj = manager.bdd_and(conj, manager.equality(v, index))
        result = manager.bdd_or(result, conj)
    return result
