"""Support-based evaluation of rigid symmetric circuits.

Instead of fixing one bijection between the structure and ``[n]``, each gate
``g`` gets the set ``EV(g)`` of injective partial maps from its canonical
support into the structure that force ``g`` true.  Since a gate's value
depends only on where its support is sent, these sets determine the
circuit's output, and each has at most ``n^|support|`` rows.

Rows are stored as tuples aligned with the sorted support, so a row
``(a, b)`` for support ``(2, 5)`` means ``2 -> a, 5 -> b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import Iterator, Mapping

from .circuit import (
    AND,
    BRUTE_FORCE_MAX_N,
    CONST,
    MAJ,
    NOT,
    OR,
    REL,
    Circuit,
    CircuitError,
    all_assignments,
    gate_values,
    require_valid,
    rigidify,
    topological_order,
)
from .relstruct import Structure
from .symmetry import SymmetryAnalysis, analyze_symmetry


class IntegralityError(ArithmeticError):
    """The fraction sum over a gate's children was not an integer."""


@dataclass(frozen=True)
class PartialValuation:
    """Injective map from a sorted subset of ``[n]`` to structure elements."""

    domain: tuple[int, ...]
    images: tuple

    def __post_init__(self):
        if len(self.domain) != len(self.images):
            raise ValueError("domain and images differ in length")
        if list(self.domain) != sorted(set(self.domain)):
            raise ValueError("domain must be sorted and duplicate-free")
        if len(set(self.images)) != len(self.images):
            raise ValueError("valuation is not injective")

    @classmethod
    def of(cls, mapping: Mapping[int, object]) -> "PartialValuation":
        dom = tuple(sorted(mapping))
        return cls(dom, tuple(mapping[x] for x in dom))

    def as_dict(self) -> dict[int, object]:
        return dict(zip(self.domain, self.images))


def consistent(alpha: PartialValuation, beta: PartialValuation) -> bool:
    """Agree on the shared domain, and use disjoint images off it."""
    a, b = alpha.as_dict(), beta.as_dict()
    shared = a.keys() & b.keys()
    if any(a[x] != b[x] for x in shared):
        return False
    only_a = {a[x] for x in a.keys() - shared}
    return not any(b[y] in only_a for y in b.keys() - shared)


def extension_count(n: int, parent_size: int, fresh: int) -> int:
    """``|A_h|``: injective extensions placing ``fresh`` new points off the parent's image."""
    return math.perm(n - parent_size, fresh)


class _ExtensionPlan:
    """How to build a child's row from a parent's row.

    Child support positions either copy a parent position or take a fresh
    element outside the parent's image.
    """

    def __init__(self, parent: tuple[int, ...], child: tuple[int, ...]):
        where = {x: i for i, x in enumerate(parent)}
        self.slots = [where.get(y) for y in child]
        self.fresh = [i for i, s in enumerate(self.slots) if s is None]

    def extensions(self, row: tuple, universe: tuple) -> Iterator[tuple]:
        if not self.fresh:
            yield tuple(row[s] for s in self.slots)
            return
        used = set(row)
        avail = [a for a in universe if a not in used]
        base = [row[s] if s is not None else None for s in self.slots]
        for pick in permutations(avail, len(self.fresh)):
            for i, a in zip(self.fresh, pick):
                base[i] = a
            yield tuple(base)


@dataclass
class EVRelation:
    universe: tuple
    support: dict[str, tuple[int, ...]]
    rows: dict[str, frozenset[tuple]]
    fraction_sums_checked: int = 0

    def valuations(self, g: str) -> list[PartialValuation]:
        dom = self.support[g]
        return [PartialValuation(dom, row) for row in sorted(self.rows[g], key=repr)]

    def total_rows(self) -> int:
        return sum(len(r) for r in self.rows.values())

    def dump(self) -> list[str]:
        lines = []
        for g, dom in self.support.items():
            lines.append(f"ev {g} support={','.join(map(str, dom))} rows={len(self.rows[g])}")
            for row in sorted(self.rows[g], key=lambda r: tuple(map(str, r))):
                lines.append("  " + " ".join(f"{x}->{a}" for x, a in zip(dom, row)))
        return lines


def _decide(op: str, hits: list[int], sizes: list[int], weighted_total: int, denom: int, fast: bool) -> bool:
    """Gate decision from per-child hit counts ``|A_h & EV(h)|`` out of ``|A_h|``.

    ``weighted_total / denom`` is the exact fraction sum over the children.
    """
    k = len(hits)
    if fast:
        if op == AND:
            return weighted_total == k * denom
        if op == OR:
            return weighted_total >= denom
        if op == NOT:
            return weighted_total == 0
        return 2 * weighted_total >= k * denom
    if op == AND:
        return all(hit == size for hit, size in zip(hits, sizes))
    if op == OR:
        return any(hits)
    if op == NOT:
        ((hit,), (size,)) = hits, sizes
        return hit < size
    if op == MAJ:
        return 2 * weighted_total >= k * denom
    raise CircuitError(f"unknown operation {op!r}")


def build_ev(c: Circuit, s: Structure, analysis: SymmetryAnalysis, *, fast: bool = False,
             check_integrality: bool = True) -> EVRelation:
    """Compute ``EV(g)`` for every gate, children first.

    By default AND, OR and NOT use their universal/existential form over the
    consistent extensions of each row; ``fast=True`` instead thresholds the
    number of true children, which must give the same answer.  With
    ``check_integrality`` every child-fraction sum is verified to be an
    integer, raising :class:`IntegralityError` otherwise.
    """
    if s.size != c.n:
        raise CircuitError(f"structure has {s.size} elements, circuit universe has {c.n}")
    if set(analysis.gates) != set(c.gates) or analysis.n != c.n:
        raise CircuitError("symmetry analysis does not belong to this circuit")
    universe = s.universe
    n = c.n
    support = {g: analysis.support(g) for g in c.gates}
    rows: dict[str, frozenset[tuple]] = {}
    checked = 0
    for g in topological_order(c):
        gate = c.gates[g]
        dom = support[g]
        if gate.kind == CONST:
            if dom:
                raise CircuitError(f"constant gate {g} has nonempty support {dom}")
            rows[g] = frozenset({()}) if gate.label == "1" else frozenset()
            continue
        if gate.kind == REL:
            rows[g] = _relational_rows(dom, gate.args, s.relations[gate.label], universe)
            continue
        kids = sorted(gate.children)
        plans = [(_ExtensionPlan(dom, support[h]), rows[h]) for h in kids]
        sizes = [extension_count(n, len(dom), len(plan.fresh)) for plan, _ in plans]
        denom = math.lcm(*sizes)
        weights = [denom // size for size in sizes]
        true_rows = set()
        for row in permutations(universe, len(dom)):
            hits = [sum(1 for beta in plan.extensions(row, universe) if beta in ev_h) for plan, ev_h in plans]
            weighted = sum(h * w for h, w in zip(hits, weights))
            if check_integrality:
                checked += 1
                if weighted % denom:
                    raise IntegralityError(
                        f"gate {g}, row {row}: child fractions sum to {Fraction(weighted, denom)}"
                    )
            if _decide(gate.label, hits, sizes, weighted, denom, fast):
                true_rows.add(row)
        rows[g] = frozenset(true_rows)
    return EVRelation(universe, support, rows, checked)


def _relational_rows(dom: tuple[int, ...], args: tuple[int, ...], rel: frozenset, universe: tuple) -> frozenset:
    # Normally the support is exactly the tuple's elements.  When the tuple
    # uses n-1 or n points the support may leave one of them out; the
    # missing point's image is then forced, so extend before testing.
    needed = tuple(sorted(set(dom) | set(args)))
    plan = _ExtensionPlan(dom, needed)
    pos = {x: i for i, x in enumerate(needed)}
    out = set()
    for row in permutations(universe, len(dom)):
        for ext in plan.extensions(row, universe):
            if tuple(ext[pos[u]] for u in args) in rel:
                out.add(row)
                break
    return frozenset(out)


def extract_query(c: Circuit, analysis: SymmetryAnalysis, ev: EVRelation) -> frozenset[tuple]:
    """Read the query off the output gates.

    For ``q = 0`` the result is ``{()}`` (true) or empty (false).  An output
    gate's support is the set of elements in its output tuple, except that
    when at most one element lies outside that set all blocks are singletons
    and the canonical choice may differ; each row is therefore extended
    consistently to the tuple's elements before reading the tuple off.
    """
    result = set()
    for t, g in c.outputs.items():
        _check_output_support(c.n, t, analysis.gates[g].sp)
        dom = ev.support[g]
        need = tuple(sorted(set(dom) | set(t)))
        plan = _ExtensionPlan(dom, need)
        pos = {x: i for i, x in enumerate(need)}
        for row in ev.rows[g]:
            if not plan.fresh:
                result.add(tuple(row[plan.slots[pos[u]]] for u in t))
                continue
            for ext in plan.extensions(row, ev.universe):
                result.add(tuple(ext[pos[u]] for u in t))
    return frozenset(result)


def _check_output_support(n: int, marking: tuple[int, ...], sp) -> None:
    marked = set(marking)
    for block in sp.blocks:
        if len(block) > 1 and marked & set(block):
            raise CircuitError(f"output gate for {marking}: supporting partition {sp} does not isolate its marking")
        if len(block) == 1 and block[0] not in marked and n - len(marked) > 1:
            raise CircuitError(f"output gate for {marking}: supporting partition {sp} isolates unmarked {block[0]}")


def succinct_evaluate(c: Circuit, s: Structure, *, fast: bool = False) -> frozenset[tuple]:
    """Rigidify, analyse symmetry, build EV and extract the query."""
    require_valid(c)
    rc = rigidify(c)
    analysis = analyze_symmetry(rc)
    ev = build_ev(rc, s, analysis, fast=fast)
    return extract_query(rc, analysis, ev)


def brute_force_ev(c: Circuit, s: Structure, analysis: SymmetryAnalysis) -> dict[str, frozenset[tuple]]:
    """``EV(g)`` from its definition: restrictions to ``spt(g)`` of every inverse
    bijection under which ``g`` is true.  Enumerates all ``n!`` bijections."""
    if c.n > BRUTE_FORCE_MAX_N:
        raise CircuitError(f"n={c.n} is too large for bijection enumeration")
    order = topological_order(c)
    out: dict[str, set] = {g: set() for g in c.gates}
    for gamma in all_assignments(s):
        inverse = {i: a for a, i in gamma.items()}
        for g, v in gate_values(c, s, inverse, order).items():
            if v:
                out[g].add(tuple(inverse[x] for x in analysis.support(g)))
    return {g: frozenset(rows) for g, rows in out.items()}
