"""Atom dependency graphs, query-relevant sub-programs and a conservative
predicate-level stratification check."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set, Tuple

from .ground import GroundClause, GroundProgram, GroundingError, ground_clauses, is_builtin
from .syntax import Program, Struct, format_term, unify

POSITIVE = "positive"
NEGATIVE = "negative"
HEAD = "head"


@dataclass
class AtomDependencyGraph:
    vertices: Set = field(default_factory=set)
    edges: Dict[Tuple, Set[str]] = field(default_factory=dict)

    def add_edge(self, v1, v2, polarity: str):
        self.vertices.add(v1)
        self.vertices.add(v2)
        self.edges.setdefault((v1, v2), set()).add(polarity)

    def successors(self, v) -> List:
        return [b for (a, b) in self.edges if a == v]

    def adjacency(self) -> Dict:
        adj: Dict = {v: [] for v in self.vertices}
        for a, b in self.edges:
            adj[a].append(b)
        return adj

    def reachable(self, sources: Iterable) -> Set:
        adj = self.adjacency()
        seen = set()
        queue = deque(s for s in sources if s in self.vertices)
        seen.update(queue)
        while queue:
            v = queue.popleft()
            for w in adj.get(v, ()):
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return seen

    def to_dot(self, name: str = "deps") -> str:
        lines = [f"digraph {name} {{"]
        for v in sorted(self.vertices, key=_label):
            lines.append(f'  "{_label(v)}";')
        for (a, b), pols in sorted(self.edges.items(), key=lambda e: (_label(e[0][0]), _label(e[0][1]))):
            style = ' [style=dashed,label="not"]' if NEGATIVE in pols else ""
            if pols == {HEAD}:
                style = " [style=dotted]"
            lines.append(f'  "{_label(a)}" -> "{_label(b)}"{style};')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _label(v) -> str:
    if isinstance(v, tuple):
        return f"{v[0]}/{v[1]}"
    return format_term(v)


def dependency_graph(ground: Iterable[GroundClause]) -> AtomDependencyGraph:
    """Edges from each head atom to every body atom and to every other head
    atom of the same clause."""
    g = AtomDependencyGraph()
    for c in ground:
        heads = c.head_atoms
        for h in heads:
            g.vertices.add(h)
            for lit in c.body:
                g.add_edge(h, lit.atom, POSITIVE if lit.positive else NEGATIVE)
        for i, h1 in enumerate(heads):
            for j, h2 in enumerate(heads):
                if i != j:
                    g.add_edge(h1, h2, HEAD)
        for lit in c.body:
            g.vertices.add(lit.atom)
    return g


def atomic_search_space(ground: GroundProgram, query: Struct) -> GroundProgram:
    """Clauses with a head atom reachable from a ground instance of ``query``."""
    g = dependency_graph(ground.clauses)
    sources = [v for v in g.vertices if unify(v, query) is not None]
    space = g.reachable(sources)
    kept = [c for c in ground.clauses if any(h in space for h in c.head_atoms)]
    return GroundProgram(kept, ground.source)


def relevant_predicates(program: Program, query: Struct) -> Set[Tuple[str, int]]:
    """Predicate-level approximation of the search space."""
    adj = _predicate_graph(program, include_heads=True)
    start = query.indicator
    seen = {start}
    queue = deque([start])
    while queue:
        p = queue.popleft()
        for q, _ in adj.get(p, ()):
            if q not in seen:
                seen.add(q)
                queue.append(q)
    return seen


def search_space_clauses(program: Program, query: Struct) -> List[int]:
    """Ids of the source clauses relevant to ``query``: ground reachability
    when the program grounds finitely, predicate reachability otherwise."""
    try:
        ground = ground_clauses(program, [query])
    except GroundingError:
        preds = relevant_predicates(program, query)
        return [c.id for c in program.clauses if any(a.indicator in preds for a in c.head.atoms)]
    space = atomic_search_space(ground, query)
    return sorted({c.clause_id for c in space.clauses})


def _predicate_graph(program: Program, include_heads: bool) -> Dict[Tuple[str, int], List[Tuple[Tuple[str, int], str]]]:
    adj: Dict = {}
    for c in program.clauses:
        heads = [a.indicator for a in c.head.atoms]
        for h in heads:
            adj.setdefault(h, [])
            for lit in c.body:
                if is_builtin(lit.atom):
                    continue
                adj[h].append((lit.atom.indicator, POSITIVE if lit.positive else NEGATIVE))
            if include_heads:
                adj[h].extend((h2, HEAD) for h2 in heads if h2 != h)
    return adj


@dataclass
class StratificationReport:
    verdict: str
    witness: Optional[List[Tuple[str, int]]] = None

    @property
    def stratified(self) -> bool:
        return self.verdict == "stratified"


def check_predicate_stratification(program: Program) -> StratificationReport:
    """Reject when some predicate cycle passes through a negative edge.

    The witness lists the predicates of the cycle, starting and ending with
    the head of the negative edge.  Head-head edges are ignored.
    """
    adj = _predicate_graph(program, include_heads=False)
    for src in sorted(adj):
        for dst, pol in adj[src]:
            if pol != NEGATIVE:
                continue
            path = _find_path(adj, dst, src)
            if path is not None:
                return StratificationReport("rejected", [src] + path)
    return StratificationReport("stratified")


def _find_path(adj, start, goal) -> Optional[List]:
    parent = {start: None}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        if v == goal:
            path = []
            while v is not None:
                path.append(v)
                v = parent[v]
            return path[::-1]
        for w, _ in adj.get(v, ()):
            if w not in parent:
                parent[w] = v
                queue.append(w)
    return None
