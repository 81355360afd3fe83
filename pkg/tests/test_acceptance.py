"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the summary lines are
printed even without ``-s``.
"""

from __future__ import annotations

import math
import random
import time
from collections import defaultdict

import pytest

from symcirc.circuit import (
    all_assignments,
    format_circuit,
    gate_values,
    is_rigid,
    naive_evaluate,
    rigidify,
    topological_order,
)
from symcirc.cli import main
from symcirc.foc import (
    CompileOptions,
    compile_formula,
    compile_with_provenance,
    format_formula,
    iter_formula_corpus,
    parse_formula,
    satisfying_tuples,
    variables,
)
from symcirc.perm import Permutation, coarsest_supporting_partition, run_lemma_check
from symcirc.succinct import IntegralityError, build_ev, extract_query
from symcirc.symmetry import (
    NotSymmetricError,
    analyze_symmetry,
    brute_force_stabilisers,
    is_induced_automorphism,
    support_report,
)

from helpers import VOCAB, compiled_corpus, provenance_automorphism, random_bijection, random_structures


def report(capsys, tag: str, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] {tag}: {detail}")
    assert ok, detail


# -- criteria 1 and 8 share one pass over the corpus ---------------------------------------------


@pytest.fixture(scope="module")
def oracle_run():
    rng = random.Random(20240611)
    stats = defaultdict(int)
    mismatches = []
    bases = set()
    ns = set()
    start = time.perf_counter()
    for i, (phi, basis) in enumerate(iter_formula_corpus(200, 1234, VOCAB)):
        n = 3 + i % 4
        bases.add(basis)
        ns.add(n)
        c = rigidify(compile_with_provenance(phi, CompileOptions(n, basis))[0])
        analysis = analyze_symmetry(c)
        stats["formulas"] += 1
        for s in random_structures(n, rng, 3):
            stats["structures"] += 1
            try:
                ev = build_ev(c, s, analysis, check_integrality=True)
            except IntegralityError as exc:
                stats["integrality_failures"] += 1
                mismatches.append(("integrality", str(exc)))
                continue
            stats["fraction_sums"] += ev.fraction_sums_checked
            got = extract_query(c, analysis, ev)
            if got != satisfying_tuples(phi, s):
                mismatches.append(("tarski", phi, n, s))
            for _ in range(5):
                stats["naive_runs"] += 1
                if naive_evaluate(c, s, random_bijection(s, rng)).query != got:
                    mismatches.append(("naive", phi, n, s))
    stats["seconds"] = time.perf_counter() - start
    return stats, mismatches, bases, ns


def test_ac1_oracle_equivalence(capsys, oracle_run):
    stats, mismatches, bases, ns = oracle_run
    ok = (not mismatches and stats["formulas"] >= 200 and stats["structures"] >= 600
          and bases == {"standard", "majority"} and ns == {3, 4, 5, 6} and stats["seconds"] < 300)
    report(capsys, "AC1 oracle equivalence",
           ok, f"{stats['formulas']} formulas, {stats['structures']} structures, "
               f"{stats['naive_runs']} naive runs, {len(mismatches)} mismatches, {stats['seconds']:.1f}s")


def test_ac8_integrality(capsys, oracle_run):
    stats, _, _, _ = oracle_run
    ok = stats["integrality_failures"] == 0 and stats["fraction_sums"] > 0
    report(capsys, "AC8 child-fraction integrality", ok,
           f"{stats['fraction_sums']} sums checked, {stats['integrality_failures']} failures")


# -- criterion 2 ---------------------------------------------------------------------------------------


def test_ac2_gamma_locality(capsys):
    rng = random.Random(7)
    violations = count_violations = groups = 0
    corpus = compiled_corpus(50, 2002, ns=(3, 4, 5))
    for item in corpus:
        c = rigidify(item.circuit)
        a = analyze_symmetry(c)
        order = topological_order(c)
        s = random_structures(item.n, rng, 1)[0]
        seen: dict[tuple, tuple[int, int]] = {}
        for gamma in all_assignments(s):
            inverse = {u: x for x, u in gamma.items()}
            vals = gate_values(c, s, inverse, order)
            for g, gate in c.gates.items():
                key = (g, tuple(inverse[x] for x in a.support(g)))
                true_kids = sum(vals[h] for h in gate.children)
                prev = seen.setdefault(key, (vals[g], true_kids))
                if prev[0] != vals[g]:
                    violations += 1
                if prev[1] != true_kids:
                    count_violations += 1
        groups += len(seen)
    ok = len(corpus) == 50 and violations == 0 and count_violations == 0
    report(capsys, "AC2 gamma locality", ok,
           f"{len(corpus)} circuits, {groups} (gate, restriction) classes, "
           f"{violations} value violations, {count_violations} true-children violations")


# -- criteria 3 and 4 --------------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def small_circuits():
    out = []
    for item in compiled_corpus(100, 3003, ns=(3, 4, 5)):
        c = rigidify(item.circuit)
        out.append((c, analyze_symmetry(c), brute_force_stabilisers(c)))
    return out


def test_ac3_supporting_partition_oracle(capsys, small_circuits):
    gates = mismatched = 0
    for c, a, stabs in small_circuits:
        for g, gs in a.gates.items():
            gates += 1
            if coarsest_supporting_partition(c.n, stabs[g].__contains__) != gs.sp:
                mismatched += 1
    ok = len(small_circuits) == 100 and mismatched == 0
    report(capsys, "AC3 supporting-partition oracle", ok,
           f"{len(small_circuits)} circuits, {gates} gates, {mismatched} mismatches")


def test_ac4_orbit_stabiliser(capsys, small_circuits):
    gates = bad = 0
    for c, a, stabs in small_circuits:
        for g, gs in a.gates.items():
            gates += 1
            if gs.orbit_size * len(stabs[g]) != math.factorial(c.n):
                bad += 1
    report(capsys, "AC4 orbit-stabiliser", bad == 0, f"{gates} gates, {bad} failures")


# -- criterion 5 ---------------------------------------------------------------------------------------------


def _symmetric_by_provenance(item) -> bool:
    n = item.n
    for u in range(1, n + 1):
        for v in range(u + 1, n + 1):
            sigma = Permutation.transposition(n, u, v)
            if not is_induced_automorphism(item.circuit, sigma, provenance_automorphism(item.provenance, sigma)):
                return False
    return True


def test_ac5_rigidify(capsys):
    rng = random.Random(55)
    corpus = compiled_corpus(40, 5005, ns=(3, 4), share=True) + compiled_corpus(40, 5006, ns=(3, 4), share=False)
    not_rigid_before = not_rigid_after = value_mismatch = symmetry_lost = symmetric_before = 0
    assignments = 0
    for item in corpus:
        c = item.circuit
        r = rigidify(c)
        not_rigid_before += not is_rigid(c)
        not_rigid_after += not is_rigid(r)
        order_c, order_r = topological_order(c), topological_order(r)
        for s in random_structures(item.n, rng, 3):
            for gamma in all_assignments(s):
                assignments += 1
                inverse = {u: x for x, u in gamma.items()}
                if gate_values(c, s, inverse, order_c) != gate_values(r, s, inverse, order_r):
                    value_mismatch += 1
        if _symmetric_by_provenance(item):
            symmetric_before += 1
            try:
                analyze_symmetry(r)
            except NotSymmetricError:
                symmetry_lost += 1
    ok = not_rigid_after == 0 and value_mismatch == 0 and symmetry_lost == 0 and not_rigid_before > 0
    report(capsys, "AC5 rigidify", ok,
           f"{len(corpus)} circuits ({not_rigid_before} non-rigid before, {not_rigid_after} after), "
           f"{assignments} (structure, bijection) checks, {value_mismatch} value mismatches, "
           f"{symmetric_before} symmetric before, {symmetry_lost} lost symmetry")


# -- criterion 6 ----------------------------------------------------------------------------------------------


def test_ac6_partition_lemmas(capsys):
    start = time.perf_counter()
    small = run_lemma_check("small-large", 256, 0.5, 10_000, seed=11)
    large = run_lemma_check("largepart", 1024, 0.4, 10_000, seed=12)
    elapsed = time.perf_counter() - start
    worst = max(small.max_index_rel_error, large.max_index_rel_error)
    ok = (small.samples == large.samples == 10_000 and small.violations == 0 and large.violations == 0
          and worst <= 1e-9 and elapsed < 60)
    report(capsys, "AC6 partition lemmas", ok,
           f"small-large n=256 eps=0.5: {small.violations} violations "
           f"(log n hypothesis {'met' if small.global_hypothesis else 'unmet'}); "
           f"largepart n=1024 eps=0.4: {large.violations} violations "
           f"(log n hypothesis {'met' if large.global_hypothesis else 'unmet'}, "
           f"{large.conditional_violations} violations with it ignored); "
           f"max index rel error {worst:.1e}; {elapsed:.1f}s")


# -- criterion 7 ----------------------------------------------------------------------------------------------


def test_ac7_support_bound(capsys, tmp_path):
    worst_excess = -math.inf
    circuits = 0
    per_n = {}
    for n in range(3, 9):
        for phi, basis in iter_formula_corpus(12, 7000 + n, VOCAB):
            c = rigidify(compile_with_provenance(phi, CompileOptions(n, basis))[0])
            a = analyze_symmetry(c)
            k = len(variables(phi))
            worst_excess = max(worst_excess, a.sp_of_circuit - k)
            per_n[n] = max(per_n.get(n, 0), a.sp_of_circuit)
            circuits += 1
    # the theorem bound, reported with its hypotheses flagged
    phi = parse_formula("(forall x (exists y (and (E x y) (not (= x y)))))")
    path = tmp_path / "c.txt"
    path.write_text(format_circuit(compile_formula(phi, 6)))
    code = main(["bound-report", "-c", str(path), "--epsilon", "0.8"])
    out = capsys.readouterr().out
    rep = dict(line.split("=", 1) for line in out.splitlines())
    c6 = rigidify(compile_formula(phi, 6))
    direct = support_report(c6, analyze_symmetry(c6), 0.8)
    bound_ok = (code == 0 and rep["hypotheses_met"] == "false" and rep["hyp_n_large"] == "unmet"
                and float(rep["theorem_bound"]) == pytest.approx(direct.theorem_bound))
    ok = worst_excess <= 0 and bound_ok
    report(capsys, "AC7 support bound", ok,
           f"{circuits} circuits over n=3..8, max support by n {per_n}, "
           f"max (support - #variables) = {worst_excess}; bound-report for {format_formula(phi)} at n=6: "
           f"theorem_bound={rep.get('theorem_bound')} hypotheses_met={rep.get('hypotheses_met')}")

