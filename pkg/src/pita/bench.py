"""Benchmark and test-program generators: the hidden Markov model, random
probabilistic graphs with two path definitions, and small random LPADs."""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .analysis import check_predicate_stratification
from .ground import GroundingError
from .semantics import count_selections, ground_program
from .syntax import Program, parse_program

HMM_PROGRAM = """\
s(0,1):1/3 ; s(0,2):1/3 ; s(0,3):1/3.
s(T,1):1/3 ; s(T,2):1/3 ; s(T,3):1/3 :- T1 is T-1, T1 >= 0, s(T1,F), \\+ s(T1,3).
"""


def hmm_program() -> Program:
    return parse_program(HMM_PROGRAM)


def hmm_forward(n: int, state: int = 1) -> float:
    """P(s(n, state)) by forward dynamic programming over the chain with
    states 1..3 (3 absorbing into 'stopped' one step later)."""
    third = Fraction(1, 3)
    dist = {1: third, 2: third, 3: third}
    for _ in range(n):
        alive = dist[1] + dist[2]
        dist = {1: alive * third, 2: alive * third, 3: alive * third}
    return float(dist[state])


# ---------------------------------------------------------------------------
# Graphs


@dataclass
class Graph:
    nodes: List[str]
    edges: List[Tuple[str, str]]
    source: str
    target: str
    prob: float = 0.5

    def edge_facts(self) -> str:
        return "".join(f"edge({a},{b}):{self.prob}.\n" for a, b in self.edges)


def random_graph(seed: int, n_nodes: Optional[int] = None, n_edges: Optional[int] = None,
                 max_edges: int = 12) -> Graph:
    """Undirected graph without duplicate edges; queries go from n0 to the
    last node."""
    rng = random.Random(seed)
    if n_nodes is None:
        n_nodes = rng.randint(3, 7)
    nodes = [f"n{i}" for i in range(n_nodes)]
    pairs = [(a, b) for i, a in enumerate(nodes) for b in nodes[i + 1:]]
    if n_edges is None:
        n_edges = rng.randint(n_nodes - 1, min(max_edges, len(pairs)))
    n_edges = min(n_edges, len(pairs), max_edges)
    edges = rng.sample(pairs, n_edges)
    edges = [(a, b) if rng.random() < 0.5 else (b, a) for a, b in edges]
    return Graph(nodes, edges, nodes[0], nodes[-1])


ARC_CLAUSES = """\
arc(X,Y) :- edge(X,Y).
arc(X,Y) :- edge(Y,X).
"""

# Explicit loop check with a list of visited nodes.  The printed version also
# calls append(V0,_S,V1) before the recursive call; with V1 unbound that goal
# has infinitely many non-ground answers under tabling, so it is left out.
PATH_LIST = """\
path(X,Y) :- path(X,Y,[X],Z).
path(X,Y,V,[Y|V]) :- arc(X,Y).
path(X,Y,V0,V1) :- arc(X,Z), \\+ member(Z,V0), path(Z,Y,[Z|V0],V1).
"""

# Loop check left to tabling.
PATH_TABLED = """\
path(X,X).
path(X,Y) :- path(X,Z), arc(Z,Y).
"""


def path_program(graph: Graph, tabled: bool = True) -> Program:
    text = (PATH_TABLED if tabled else PATH_LIST) + ARC_CLAUSES + graph.edge_facts()
    return parse_program(text)


def path_query(graph: Graph) -> str:
    return f"path({graph.source},{graph.target})"


def path_brute_force(graph: Graph) -> float:
    """Connectivity probability by enumerating edge subsets."""
    m = len(graph.edges)
    total = 0.0
    for mask in range(1 << m):
        adj: Dict[str, List[str]] = {v: [] for v in graph.nodes}
        k = 0
        for i, (a, b) in enumerate(graph.edges):
            if mask >> i & 1:
                adj[a].append(b)
                adj[b].append(a)
                k += 1
        seen = {graph.source}
        todo = [graph.source]
        while todo:
            v = todo.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    todo.append(w)
        if graph.target in seen:
            total += graph.prob ** k * (1 - graph.prob) ** (m - k)
    return total


# ---------------------------------------------------------------------------
# Random LPADs


def random_lpad_text(rng: random.Random, max_clauses: int = 6, max_disjuncts: int = 3,
                     max_body: int = 2, max_constants: int = 3) -> str:
    """A function-free, range-restricted LPAD whose negation is stratified at
    the predicate level: each predicate gets a level, positive literals may
    use the same or a lower level, negative ones only strictly lower levels.
    Negative literals come after the positive ones and use only their
    variables, so they are ground when selected."""
    consts = ["a", "b", "c"][: rng.randint(1, max_constants)]
    preds = [(f"p{i}", rng.randint(0, 2), rng.randint(0, 2)) for i in range(rng.randint(2, 4))]
    lines = []
    for _ in range(rng.randint(1, max_clauses)):
        n_heads = rng.randint(1, max_disjuncts)
        heads = [rng.choice(preds) for _ in range(n_heads)]
        level = min(h[2] for h in heads)
        same_or_lower = [p for p in preds if p[2] <= level]
        lower = [p for p in preds if p[2] < level]
        positives, negatives = [], []
        bound: List[str] = []
        for _ in range(rng.randint(0, max_body)):
            if lower and rng.random() < 0.35:
                negatives.append(rng.choice(lower))
            else:
                name, arity, _ = rng.choice(same_or_lower)
                args = [rng.choice(["X", "Y"] + consts) for _ in range(arity)]
                bound.extend(a for a in args if a in ("X", "Y") and a not in bound)
                positives.append(_atom(name, args))
        body = positives + [
            "\\+ " + _atom(name, [rng.choice(bound + consts) for _ in range(arity)])
            for name, arity, _ in negatives
        ]
        probs = _random_annotations(rng, n_heads)
        head_parts = []
        for (name, arity, _), p in zip(heads, probs):
            atom = _atom(name, [rng.choice(bound + consts) for _ in range(arity)])
            head_parts.append(atom if p is None else f"{atom}:{p}")
        line = " ; ".join(head_parts)
        if body:
            line += " :- " + ", ".join(body)
        lines.append(line + ".")
    return "\n".join(lines) + "\n"


def _atom(name: str, args: List[str]) -> str:
    return f"{name}({','.join(args)})" if args else name


def _random_annotations(rng: random.Random, n: int) -> List[Optional[str]]:
    """Annotations in tenths (exact in decimal text), summing to at most 1;
    a lone head is sometimes left unannotated (certain)."""
    if n == 1 and rng.random() < 0.4:
        return [None]
    total = rng.randint(n, 10)
    cuts = sorted(rng.sample(range(1, total), n - 1)) if n > 1 else []
    parts = [b - a for a, b in zip([0] + cuts, cuts + [total])]
    return ["1.0" if p == 10 else f"0.{p}" for p in parts]


def random_lpad(seed: int, max_worlds: int = 4096, min_worlds: int = 2, **kw) -> Program:
    """Random program whose grounding has between ``min_worlds`` and
    ``max_worlds`` selections (rejection sampling from a deterministic
    stream per seed)."""
    rng = random.Random(seed)
    while True:
        program = parse_program(random_lpad_text(rng, **kw))
        try:
            ground = ground_program(program)
        except GroundingError:
            continue
        if not min_worlds <= count_selections(ground) <= max_worlds:
            continue
        assert check_predicate_stratification(program).stratified
        return program


# ---------------------------------------------------------------------------
# Timed runs


@dataclass
class BenchRow:
    instance: str
    size: int
    prob: float
    time_ms: float
    bdd_nodes: int
    subgoals: int

    def fields(self) -> list:
        return [self.instance, self.size, repr(self.prob), f"{self.time_ms:.3f}", self.bdd_nodes, self.subgoals]


CSV_COLUMNS = ["instance", "size", "prob", "time_ms", "bdd_nodes", "subgoals"]


def _timed(instance: str, size: int, program: Program, query: str, cfg=None) -> BenchRow:
    from .engine import run_query
    from .syntax import parse_atom

    run = run_query(program, parse_atom(query), cfg)
    stats = run.stats
    p = run.answers[0][1] if run.answers else 0.0
    return BenchRow(instance, size, p, run.seconds * 1000, stats["bdd_nodes"], stats["subgoals"])


def bench_hmm(max_n: int, cfg=None) -> List[BenchRow]:
    program = hmm_program()
    return [_timed(f"hmm_N{n}", n, program, f"s({n},1)", cfg) for n in range(max_n + 1)]


def bench_path(count: int, seed: int, max_edges: int = 12, cfg=None) -> List[BenchRow]:
    rows = []
    for k in range(count):
        g = random_graph(seed + k, max_edges=max_edges)
        for tabled in (False, True):
            name = f"graph{seed + k}_{'tabled' if tabled else 'list'}"
            rows.append(_timed(name, len(g.edges), path_program(g, tabled), path_query(g), cfg))
    return rows
