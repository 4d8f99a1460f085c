"""Programs and checks shared by several test modules."""
import itertools

from pita.engine import Session, add_prelude, decode_paths
from pita.ground import herbrand_universe
from pita.semantics import enumerate_worlds, ground_program, wfm
from pita.syntax import Struct, parse_program
from pita.transform import pita_transform

EX1 = """\
strong_sneezing(X):0.3 ; moderate_sneezing(X):0.5 :- flu(X).
strong_sneezing(X):0.2 ; moderate_sneezing(X):0.6 :- hay_fever(X).
flu(david).
hay_fever(david).
"""

EX2 = """\
s :- \\+ s.
s :- \\+ p, \\+ q, \\+ r.
p :- q, \\+ r, \\+ s.
q :- r, \\+ p.
r :- p, \\+ q.
"""

DEEP = """\
q:0.5 :- p(X).
p(X) :- p(f(X)).
p(0).
"""


def ex1():
    return parse_program(EX1)


def ground_rules(text):
    """Normal ground rules of a program without disjunctive heads."""
    g = ground_program(parse_program(text))
    return [(c.choice_atom(1), c.body) for c in g.clauses]


def herbrand_atoms(program):
    universe = herbrand_universe(program)
    for name, arity in sorted(program.predicates):
        for args in itertools.product(universe, repeat=arity):
            yield Struct(name, tuple(args))


def engine_atom_probs(program):
    """Engine probability and explanation BDD of every Herbrand atom, from a
    single session."""
    session = Session(pita_transform(add_prelude(program)))
    out = {}
    for atom in herbrand_atoms(program):
        node = session.solve(atom).answers.get(atom.args)
        p = 0.0 if node is None else session.manager.ret_prob(node)
        out[atom] = (p, node)
    return session, out


def world_table(program):
    """Every world of the full grounding as (choices, probability, true atoms)."""
    ground = ground_program(program)
    rows = []
    for w in enumerate_worlds(ground):
        choices = {(c.clause_id, c.grounding): i for c, i in zip(ground.clauses, w.selection)}
        rows.append((choices, w.probability, set(wfm(w.rules).true_atoms)))
    return ground, rows


def check_paths_against_worlds(manager, node, query, rows, search_space_keys):
    """Each path of the answer BDD is an explanation and together they cover
    every world where the query holds.  Returns the number of paths."""
    paths = decode_paths(manager, node)
    for e in paths:
        for key, _ in e.constraints:
            assert key in search_space_keys, f"path constrains {key} outside the search space"
    for choices, _, true_atoms in rows:
        inside = [all(choices[key] in vals for key, vals in e.constraints) for e in paths]
        assert sum(inside) <= 1, "paths are not mutually incompatible"
        if any(inside):
            assert query in true_atoms, "a path is not an explanation"
        elif query in true_atoms:
            raise AssertionError(f"world satisfying {query} is not covered")
    return len(paths)
