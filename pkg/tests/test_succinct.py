import math
import random
from itertools import permutations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symcirc.circuit import AND, MAJ, NOT, CircuitError, Gate, all_assignments, naive_evaluate, rigidify
from symcirc.foc import compile_formula, parse_formula, satisfying_tuples
from symcirc.perm import Permutation
from symcirc.relstruct import Structure, Vocabulary
from symcirc.succinct import (
    PartialValuation,
    _ExtensionPlan,
    brute_force_ev,
    build_ev,
    consistent,
    extension_count,
    extract_query,
    succinct_evaluate,
)
from symcirc.symmetry import NotSymmetricError, analyze_symmetry

from helpers import (
    GRAPH,
    all_edges_or,
    build,
    compiled_corpus,
    lone_edge,
    random_bijection,
    random_structures,
    random_symmetric_circuit,
    universe,
)

K2 = Structure(GRAPH, ("a", "b"), {"E": {("a", "b"), ("b", "a")}})


def pv(**kw):
    return PartialValuation.of({int(k[1:]): v for k, v in kw.items()})


# -- valuations ------------------------------------------------------------------------------


def test_consistent_examples():
    a = pv(x1="a")
    assert consistent(a, a)
    assert not consistent(a, pv(x2="a"))
    assert consistent(a, pv(x1="a", x2="b"))
    assert not consistent(a, pv(x1="b"))


def test_partial_valuation_invariants():
    with pytest.raises(ValueError):
        PartialValuation((1, 2), ("a", "a"))
    with pytest.raises(ValueError):
        PartialValuation((2, 1), ("a", "b"))


@pytest.mark.parametrize("n", [3, 4, 5])
def test_extension_count_matches_enumeration(n):
    universe_ = tuple(range(n))
    for parent_size in range(n + 1):
        for child_size in range(n + 1):
            for overlap in range(min(parent_size, child_size) + 1):
                if parent_size + child_size - overlap > n:
                    continue
                parent = tuple(range(1, parent_size + 1))
                child = tuple(range(parent_size - overlap + 1, parent_size - overlap + child_size + 1))
                plan = _ExtensionPlan(parent, child)
                row = tuple(universe_[:parent_size])
                exts = list(plan.extensions(row, universe_))
                alpha = PartialValuation(parent, row)
                assert all(consistent(alpha, PartialValuation(child, b)) for b in exts)
                brute = [b for b in permutations(universe_, child_size)
                         if consistent(alpha, PartialValuation(child, b))]
                assert sorted(exts) == sorted(brute)
                assert len(exts) == extension_count(n, parent_size, child_size - overlap)


# -- EV construction -------------------------------------------------------------------------


def test_const_and_relational_rows():
    c = build(2, {"one": Gate.const(1), "e": Gate.rel("E", (1, 2)), "r": Gate.op(AND, ["one", "e"])},
              {(): "r"})
    with pytest.raises(NotSymmetricError):
        analyze_symmetry(c)
    sym = build(2, {"one": Gate.const(1), "e": Gate.rel("E", (1, 2)), "f": Gate.rel("E", (2, 1)),
                    "r": Gate.op(AND, ["one", "e", "f"])}, {(): "r"})
    a = analyze_symmetry(sym)
    ev = build_ev(sym, K2, a)
    assert ev.rows["one"] == {()}
    # n = 2: SP(e) is all singletons and the support drops the block {1}
    assert a.support("e") == (2,)
    assert ev.rows["e"] == {("a",), ("b",)}
    assert extract_query(sym, a, ev) == {()}


def test_k2_rows_with_full_support():
    c = rigidify(compile_formula(parse_formula("(exists x (exists y (E x y)))"), 3))
    s = Structure(GRAPH, ("a", "b", "c"), {"E": {("a", "b"), ("b", "a")}})
    a = analyze_symmetry(c)
    ev = build_ev(c, s, a)
    e12 = next(g for g, gate in c.gates.items() if gate.kind == "rel" and gate.args == (1, 2))
    # support of E(1,2) at n = 3 is {2,3}; a row maps 2 and 3, and 1 is forced
    assert a.support(e12) == (2, 3)
    assert ev.rows[e12] == {("b", "c"), ("a", "c")}
    assert ev.rows[e12] == brute_force_ev(c, s, a)[e12]


def test_q0_and_unary_queries():
    c = all_edges_or()
    empty = Structure(GRAPH, universe(3))
    assert succinct_evaluate(c, empty) == frozenset()
    one = build(3, {"one": Gate.const(1)}, {(): "one"})
    assert succinct_evaluate(one, empty) == {()}
    unary = compile_formula(parse_formula("(exists y (E x y))"), 3)
    path = Structure(GRAPH, universe(3), {"E": {("a", "b")}})
    assert succinct_evaluate(unary, path) == {("a",)}


def test_non_symmetric_is_rejected():
    with pytest.raises(NotSymmetricError):
        succinct_evaluate(lone_edge(), Structure(GRAPH, universe(3)))


def test_size_mismatch():
    c = all_edges_or()
    with pytest.raises(CircuitError):
        build_ev(c, K2, analyze_symmetry(c))


def test_majority_of_pairs_on_tournament():
    phi = parse_formula("(maj x (maj y (E x y)))")
    n = 5
    edges = {(u, v) for u in universe(n) for v in universe(n) if u < v and (ord(v) - ord(u)) % 2 == 1}
    edges |= {(v, u) for u in universe(n) for v in universe(n) if u < v and (ord(v) - ord(u)) % 2 == 0}
    s = Structure(GRAPH, universe(n), {"E": edges})
    c = compile_formula(phi, n, "majority")
    expected = satisfying_tuples(phi, s)
    assert succinct_evaluate(c, s) == expected
    assert naive_evaluate(c, s, {a: i for i, a in enumerate(universe(n), 1)}).query == expected


@pytest.mark.parametrize("seed", range(10))
def test_ev_matches_definition_by_enumeration(seed):
    rng = random.Random(seed)
    for item in compiled_corpus(3, 500 + seed, ns=(3, 4, 5)):
        c = rigidify(item.circuit)
        a = analyze_symmetry(c)
        for s in random_structures(item.n, rng, 2):
            ev = build_ev(c, s, a)
            assert ev.rows == brute_force_ev(c, s, a)
            for g, rows in ev.rows.items():
                assert len(rows) <= math.perm(c.n, len(a.support(g)))
            assert ev.total_rows() <= len(c.gates) * c.n ** a.sp_of_circuit


@pytest.mark.parametrize("seed", range(10))
def test_fast_path_and_not_forms_agree(seed):
    rng = random.Random(seed)
    for item in compiled_corpus(4, 600 + seed, ns=(3, 4, 5, 6)):
        c = rigidify(item.circuit)
        a = analyze_symmetry(c)
        s = random_structures(item.n, rng, 1)[0]
        slow = build_ev(c, s, a)
        assert build_ev(c, s, a, fast=True).rows == slow.rows
        # NOT: "some consistent beta outside EV(h)" equals "every consistent beta outside EV(h)"
        for g, gate in c.gates.items():
            if gate.label != NOT:
                continue
            (h,) = gate.children
            plan = _ExtensionPlan(a.support(g), a.support(h))
            for row in permutations(s.universe, len(a.support(g))):
                outside = [b not in slow.rows[h] for b in plan.extensions(row, s.universe)]
                assert any(outside) == all(outside)


@pytest.mark.parametrize("seed", range(6))
def test_orbit_consistency_of_ev(seed):
    rng = random.Random(seed)
    item = compiled_corpus(1, 700 + seed, ns=(4, 5))[0]
    c = rigidify(item.circuit)
    a = analyze_symmetry(c)
    s = random_structures(item.n, rng, 1)[0]
    ev = build_ev(c, s, a)
    images = list(range(1, c.n + 1))
    rng.shuffle(images)
    sigma = Permutation(tuple(images))
    pi = a.automorphism(sigma)
    compared = 0
    for g in c.gates:
        # when the tie-break picks corresponding blocks, spt(pi g) = sigma spt(g)
        # and alpha moves to alpha . sigma^-1
        if set(a.support(pi[g])) != set(sigma.apply(a.support(g))):
            continue
        compared += 1
        moved = set()
        for row in ev.rows[g]:
            target = {sigma(x): v for x, v in zip(a.support(g), row)}
            moved.add(tuple(target[y] for y in a.support(pi[g])))
        assert moved == ev.rows[pi[g]]
    assert compared > 0


@given(st.integers(0, 10**6))
@settings(max_examples=30, deadline=None)
def test_succinct_matches_naive_and_tarski(seed):
    rng = random.Random(seed)
    item = compiled_corpus(1, seed, ns=(3, 4, 5, 6, 7))[0]
    s = random_structures(item.n, rng, 1)[0]
    got = succinct_evaluate(item.circuit, s)
    assert got == satisfying_tuples(item.phi, s)
    assert got == naive_evaluate(item.circuit, s, random_bijection(s, rng)).query


def test_dump_format():
    c = all_edges_or()
    s = Structure(GRAPH, universe(3), {"E": {("a", "b")}})
    lines = build_ev(c, s, analyze_symmetry(c)).dump()
    assert "ev root support= rows=1" in lines
    assert any(line.startswith("ev e12 support=2,3 rows=1") for line in lines)
    assert lines[lines.index("ev e12 support=2,3 rows=1") + 1].strip() == "2->b 3->c"


def test_majority_multiplicity_survives_compilation():
    # (maj x (= x y)) is true iff 1 >= n - 1; at n = 2 yes, at n = 3 no.
    phi = parse_formula("(maj x (= x y))")
    for n, expected in ((2, True), (3, False)):
        c = compile_formula(phi, n, "majority")
        s = Structure(Vocabulary.of(P=1), universe(n))
        want = {(a,) for a in universe(n)} if expected else set()
        assert satisfying_tuples(phi, s) == want
        for gamma in all_assignments(s):
            assert naive_evaluate(c, s, gamma).query == want
        assert succinct_evaluate(c, s) == want
    assert any(g.label == MAJ for g in compile_formula(phi, 3, "majority").gates.values())


@pytest.mark.parametrize("seed", range(20))
def test_random_symmetric_circuits_evaluate_consistently(seed):
    rng = random.Random(seed)
    c = random_symmetric_circuit(rng.choice((3, 4, 5)), rng, layers=rng.randint(2, 4))
    a = analyze_symmetry(c)
    for s in random_structures(c.n, rng, 2):
        ev = build_ev(c, s, a)
        assert ev.rows == brute_force_ev(c, s, a)
        assert build_ev(c, s, a, fast=True).rows == ev.rows
        got = extract_query(c, a, ev)
        assert all(naive_evaluate(c, s, gamma).query == got for gamma in all_assignments(s))
