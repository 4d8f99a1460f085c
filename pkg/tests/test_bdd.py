import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import ex1
from pita.bdd import ONE, ZERO, BddError, BddManager, boolean_weights, choices_to_bdd
from pita.semantics import AtomicChoice
from pita.syntax import Struct, normalize_heads

TOL = 1e-12
DAVID = (Struct("david"),)


# -- random formulas and a brute-force reference --------------------------

def random_formula(rng, n_vars, depth):
    if depth == 0 or rng.random() < 0.2:
        return ("var", rng.randrange(n_vars))
    op = rng.choice(["and", "or", "not", "and", "or"])
    if op == "not":
        return ("not", random_formula(rng, n_vars, depth - 1))
    return (op, random_formula(rng, n_vars, depth - 1), random_formula(rng, n_vars, depth - 1))


def evaluate(f, assignment):
    tag = f[0]
    if tag == "var":
        return assignment[f[1]]
    if tag == "not":
        return not evaluate(f[1], assignment)
    if tag == "and":
        return evaluate(f[1], assignment) and evaluate(f[2], assignment)
    return evaluate(f[1], assignment) or evaluate(f[2], assignment)


def build(m, f, nodes):
    tag = f[0]
    if tag == "var":
        return nodes[f[1]]
    if tag == "not":
        return m.bdd_not(build(m, f[1], nodes))
    a, b = build(m, f[1], nodes), build(m, f[2], nodes)
    return m.bdd_and(a, b) if tag == "and" else m.bdd_or(a, b)


def brute_force(f, weights):
    total = 0.0
    for bits in itertools.product([False, True], repeat=len(weights)):
        if evaluate(f, bits):
            p = 1.0
            for b, w in zip(bits, weights):
                p *= w if b else 1 - w
            total += p
    return total


def bdd_eval(m, u, assignment):
    while u > ONE:
        u = m.high(u) if assignment[int(m.level(u))] else m.low(u)
    return u == ONE


def fresh(n, rng):
    m = BddManager()
    weights = [rng.random() for _ in range(n)]
    nodes = [m.var(m.new_bool_var(w)) for w in weights]
    return m, weights, nodes


def test_random_bdds_match_enumeration():
    rng = random.Random(7)
    for _ in range(60):
        n = rng.randint(1, 10)
        m, weights, nodes = fresh(n, rng)
        f = random_formula(rng, n, 6)
        u = build(m, f, nodes)
        assert abs(m.ret_prob(u) - brute_force(f, weights)) < TOL
        for bits in itertools.product([False, True], repeat=n):
            assert bdd_eval(m, u, bits) == evaluate(f, bits)


def test_paths_incompatible_and_sum_to_probability():
    rng = random.Random(11)
    for _ in range(60):
        n = rng.randint(1, 9)
        m, weights, nodes = fresh(n, rng)
        u = build(m, random_formula(rng, n, 6), nodes)
        paths = m.paths_to_one(u)
        for p1, p2 in itertools.combinations(paths, 2):
            assert any(k in p2 and p2[k] != v for k, v in p1.items())
        assert abs(sum(m.path_probability(p) for p in paths) - m.ret_prob(u)) < TOL


def test_reduced_and_ordered():
    rng = random.Random(3)
    m, _, nodes = fresh(8, rng)
    for _ in range(30):
        build(m, random_formula(rng, 8, 6), nodes)
    for u in range(2, len(m) + 2):
        assert m.low(u) != m.high(u)
        for child in (m.low(u), m.high(u)):
            assert m.level(child) > m.level(u)


# -- Boolean algebra on NodeRefs ------------------------------------------

formula_seeds = st.integers(0, 10 ** 6)


@settings(max_examples=100, deadline=None)
@given(formula_seeds)
def test_boolean_laws(seed):
    rng = random.Random(seed)
    m, _, nodes = fresh(6, rng)
    x, y, z = (build(m, random_formula(rng, 6, 4), nodes) for _ in range(3))
    assert m.bdd_not(m.bdd_and(x, y)) == m.bdd_or(m.bdd_not(x), m.bdd_not(y))
    assert m.bdd_not(m.bdd_or(x, y)) == m.bdd_and(m.bdd_not(x), m.bdd_not(y))
    assert m.bdd_not(m.bdd_not(x)) == x
    assert m.bdd_and(x, m.bdd_or(y, z)) == m.bdd_or(m.bdd_and(x, y), m.bdd_and(x, z))
    assert m.bdd_or(x, m.bdd_and(y, z)) == m.bdd_and(m.bdd_or(x, y), m.bdd_or(x, z))
    assert m.bdd_and(x, m.one()) == x
    assert m.bdd_or(x, m.bdd_not(x)) == m.one()
    assert m.bdd_and(x, m.bdd_not(x)) == m.zero()


@settings(max_examples=100, deadline=None)
@given(formula_seeds)
def test_canonicity(seed):
    # the same function built through an unrelated expression gets the same handle
    rng = random.Random(seed)
    m, _, nodes = fresh(5, rng)
    f = random_formula(rng, 5, 5)
    u = build(m, f, nodes)
    # Shannon expansion over variable 0 rebuilt from the truth table
    minterms = [bits for bits in itertools.product([False, True], repeat=5) if evaluate(f, bits)]
    v = m.disjoin(m.conjoin(n if b else m.bdd_not(n) for n, b in zip(nodes, bits)) for bits in minterms)
    assert u == v


# -- multivalued variables ------------------------------------------------

def test_boolean_weights_of_example_clause():
    w = boolean_weights([0.3, 0.5, 0.2])
    assert abs(w[0] - 0.3) < TOL and abs(w[1] - 0.5 / 0.7) < TOL
    assert boolean_weights([1.0]) == []
    assert boolean_weights([0.25, 0.75]) == [0.25]
    # an unreachable value after a certain one gets weight 0
    assert boolean_weights([1.0, 0.0, 0.0]) == [1.0, 0.0]


def test_add_var_registers_consecutive_booleans():
    m = BddManager()
    v = m.add_var(3, [0.3, 0.5, 0.2])
    u = m.add_var(1, [1.0])
    assert [b.index for b in v.boolean_vars] == [0, 1]
    assert list(u.boolean_vars) == []
    with pytest.raises(BddError):
        m.add_var(2, [0.5, 0.6])


def test_equality_examples():
    m = BddManager()
    v = m.add_var(3, [0.3, 0.5, 0.2])
    e2 = m.equality(v, 2)
    assert m.size(e2) == 2
    assert abs(m.ret_prob(e2) - 0.5) < TOL
    assert m.disjoin(m.equality(v, i) for i in (1, 2, 3)) == ONE
    one_valued = m.add_var(1, [1.0])
    assert m.equality(one_valued, 1) == ONE
    with pytest.raises(BddError):
        m.equality(v, 4)


def test_equalities_partition_probability():
    rng = random.Random(5)
    m = BddManager()
    for _ in range(200):
        n = rng.randint(1, 6)
        raw = [rng.random() for _ in range(n)]
        if rng.random() < 0.2:
            raw[rng.randrange(n)] = 0.0
        total = sum(raw) or 1.0
        probs = [x / total for x in raw]
        probs[-1] = 1.0 - sum(probs[:-1])
        v = m.add_var(n, probs)
        values = [m.ret_prob(m.equality(v, i)) for i in range(1, n + 1)]
        assert abs(sum(values) - 1.0) < TOL
        for got, want in zip(values, probs):
            assert abs(got - want) < 1e-12
        for i, j in itertools.combinations(range(1, n + 1), 2):
            assert m.bdd_and(m.equality(v, i), m.equality(v, j)) == ZERO


# -- the sneezing example -------------------------------------------------

def K1():
    return [{AtomicChoice(0, DAVID, 2)}, {AtomicChoice(1, DAVID, 2)}]


def K2():
    return [
        {AtomicChoice(0, DAVID, 2)},
        {AtomicChoice(0, DAVID, 1), AtomicChoice(1, DAVID, 2)},
        {AtomicChoice(0, DAVID, 3), AtomicChoice(1, DAVID, 2)},
    ]


def test_figure_one_bdd():
    m = BddManager()
    prog = normalize_heads(ex1())
    u = choices_to_bdd(m, K1(), prog)
    assert m.size(u) == 4
    assert abs(m.ret_prob(u) - 0.8) < 1e-9
    paths = m.paths_to_one(u)
    assert len(paths) == 3
    assert abs(sum(m.path_probability(p) for p in paths) - 0.8) < TOL
    # the other covering set denotes the same function
    assert choices_to_bdd(m, K2(), prog) == u


def test_choices_to_bdd_trivial_cases():
    m = BddManager()
    prog = normalize_heads(ex1())
    assert choices_to_bdd(m, [set()], prog) == ONE
    assert choices_to_bdd(m, [], prog) == ZERO
    with pytest.raises(BddError):
        choices_to_bdd(m, [{AtomicChoice(0, DAVID, 1), AtomicChoice(0, DAVID, 2)}], prog)


def test_path_values_decode_atomic_choices():
    m = BddManager()
    prog = normalize_heads(ex1())
    u = choices_to_bdd(m, K1(), prog)
    decoded = sorted(
        sorted((v.key, tuple(sorted(vals))) for v, vals in m.path_to_values(p).items())
        for p in m.paths_to_one(u)
    )
    assert decoded == [
        [((1, DAVID), (1,)), ((2, DAVID), (2,))],
        [((1, DAVID), (2,))],
        [((1, DAVID), (3,)), ((2, DAVID), (2,))],
    ]


def test_paths_give_second_covering_set_when_its_variable_comes_first():
    # creating clause 2's variable first yields exactly the published set
    m = BddManager()
    prog = normalize_heads(ex1())
    from pita.transform import get_var

    get_var(m, (2, DAVID), prog.clauses[1].head.value_probs())
    u = choices_to_bdd(m, K1(), prog)
    probs = sorted(m.path_probability(p) for p in m.paths_to_one(u))
    assert [round(p, 12) for p in probs] == [0.1, 0.1, 0.6]


def test_dot_export():
    m = BddManager()
    u = choices_to_bdd(m, K1(), normalize_heads(ex1()))
    dot = m.to_dot(u)
    assert dot.startswith("digraph")
    assert dot.count("style=dashed") == 4
    assert "X1(david)_1" in dot
