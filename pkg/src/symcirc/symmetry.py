"""Induced automorphisms, symmetry decision, orbits and supports of gates.

Everything here assumes a rigid circuit: rigidity makes the automorphism
induced by a permutation of the universe unique, and lets it be found
bottom-up in one pass.  Symmetry is decided from the ``n(n-1)/2``
transpositions alone, since they generate ``Sym(n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .circuit import (
    CONST,
    REL,
    Circuit,
    CircuitError,
    gate_key,
    require_valid,
    rigidity_witness,
    topological_order,
)
from .perm import (
    DisjointSet,
    Partition,
    Permutation,
    all_permutations,
    coarsest_supporting_partition,
    pointwise_stabiliser_elements,
    transposition_factors,
)

#: Oracles that enumerate all of Sym(n) are capped here.
SYMMETRY_ORACLE_MAX_N = 5


class NotRigidError(CircuitError):
    def __init__(self, witness: tuple[str, str] | None = None):
        self.witness = witness
        msg = "circuit is not rigid; run rigidify first"
        if witness:
            msg += f" (gates {witness[0]} and {witness[1]} are indistinguishable)"
        super().__init__(msg)


class NotSymmetricError(CircuitError):
    def __init__(self, transposition: tuple[int, int]):
        self.transposition = transposition
        super().__init__(f"transposition ({transposition[0]} {transposition[1]}) induces no automorphism")


@dataclass(frozen=True)
class InducedAutomorphism:
    sigma: Permutation
    pi: Mapping[str, str]

    def __call__(self, g: str) -> str:
        return self.pi[g]


class AutomorphismFinder:
    """Lookup tables for computing induced automorphisms of one rigid circuit."""

    def __init__(self, c: Circuit, check: bool = True):
        if check:
            require_valid(c)
            witness = rigidity_witness(c)
            if witness:
                raise NotRigidError(witness)
        self.c = c
        self.order = topological_order(c)
        self.by_key: dict[tuple, str] = {}
        for gid in c.sorted_ids:
            gate = c.gates[gid]
            mark = c.marking.get(gid)
            if gate.kind in (REL, CONST):
                key = (gate.signature, mark)
            else:
                key = (gate.label, gate.children, mark)
            self.by_key[key] = gid

    def image(self, sigma: Permutation) -> InducedAutomorphism | None:
        """The automorphism induced by ``sigma``, or ``None`` if there is none."""
        c = self.c
        if sigma.n != c.n:
            raise ValueError(f"permutation of [1..{sigma.n}] applied to a circuit on [1..{c.n}]")
        pi: dict[str, str] = {}
        for g in self.order:
            gate = c.gates[g]
            mark = c.marking.get(g)
            new_mark = sigma.apply(mark) if mark is not None else None
            if gate.kind == REL:
                key = ((gate.kind, gate.label, sigma.apply(gate.args)), new_mark)
            elif gate.kind == CONST:
                key = (gate.signature, new_mark)
            else:
                key = (gate.label, frozenset(pi[h] for h in gate.children), new_mark)
            target = self.by_key.get(key)
            if target is None:
                return None
            pi[g] = target
        if len(set(pi.values())) != len(pi):
            return None  # pragma: no cover - excluded by rigidity
        return InducedAutomorphism(sigma, pi)


def induced_automorphism(c: Circuit, sigma: Permutation) -> InducedAutomorphism | None:
    return AutomorphismFinder(c).image(sigma)


def is_induced_automorphism(c: Circuit, sigma: Permutation, pi: Mapping[str, str]) -> bool:
    """Check the defining conditions directly; works for non-rigid circuits too."""
    if set(pi) != set(c.gates) or set(pi.values()) != set(c.gates):
        return False
    for g, gate in c.gates.items():
        img = c.gates[pi[g]]
        if (img.kind, img.label) != (gate.kind, gate.label):
            return False
        if gate.kind == REL and img.args != sigma.apply(gate.args):
            return False
        if img.children != frozenset(pi[h] for h in gate.children):
            return False
    return all(pi[g] == c.outputs[sigma.apply(t)] for t, g in c.outputs.items())


@dataclass(frozen=True)
class GateSymmetry:
    orbit_id: str
    orbit_size: int
    sp: Partition
    support: tuple[int, ...]


@dataclass(frozen=True)
class SymmetryAnalysis:
    n: int
    transposition_autos: Mapping[tuple[int, int], InducedAutomorphism]
    gates: Mapping[str, GateSymmetry]

    def support(self, g: str) -> tuple[int, ...]:
        return self.gates[g].support

    @property
    def sp_of_circuit(self) -> int:
        return max((len(gs.support) for gs in self.gates.values()), default=0)

    @property
    def max_orbit_size(self) -> int:
        return max((gs.orbit_size for gs in self.gates.values()), default=1)

    def automorphism(self, sigma: Permutation) -> dict[str, str]:
        """Automorphism induced by ``sigma``, composed from transposition automorphisms."""
        return compose_transpositions(self, transposition_factors(sigma))


def compose_transpositions(analysis: SymmetryAnalysis, factors: list[tuple[int, int]]) -> dict[str, str]:
    """Gate map of ``t_0 * t_1 * ... * t_k`` (rightmost factor applied first)."""
    pi = {g: g for g in analysis.gates}
    for t in reversed(factors):
        step = analysis.transposition_autos[t].pi
        pi = {g: step[img] for g, img in pi.items()}
    return pi


def find_asymmetry(c: Circuit) -> tuple[int, int] | None:
    """First transposition that induces no automorphism, or ``None`` if ``c`` is symmetric."""
    finder = AutomorphismFinder(c)
    for u in range(1, c.n + 1):
        for v in range(u + 1, c.n + 1):
            if finder.image(Permutation.transposition(c.n, u, v)) is None:
                return (u, v)
    return None


def analyze_symmetry(c: Circuit) -> SymmetryAnalysis:
    """Decide symmetry and compute orbits, coarsest supporting partitions and supports.

    Raises :class:`NotSymmetricError` with a failing transposition when the
    circuit is not symmetric, and :class:`NotRigidError` for non-rigid input.
    """
    finder = AutomorphismFinder(c)
    n = c.n
    autos: dict[tuple[int, int], InducedAutomorphism] = {}
    for u in range(1, n + 1):
        for v in range(u + 1, n + 1):
            auto = finder.image(Permutation.transposition(n, u, v))
            if auto is None:
                raise NotSymmetricError((u, v))
            autos[(u, v)] = auto

    orbits = DisjointSet(c.gates)
    for auto in autos.values():
        for g, h in auto.pi.items():
            orbits.union(g, h)
    orbit_of: dict[str, tuple[str, int]] = {}
    for members in orbits.groups():
        rep = min(members, key=gate_key)
        for g in members:
            orbit_of[g] = (rep, len(members))

    gates = {}
    for g in c.sorted_ids:
        ds = DisjointSet(range(1, n + 1))
        for (u, v), auto in autos.items():
            if auto.pi[g] == g:
                ds.union(u, v)
        sp = Partition(n, tuple(tuple(b) for b in ds.groups()))
        rep, size = orbit_of[g]
        gates[g] = GateSymmetry(rep, size, sp, sp.support())
    return SymmetryAnalysis(n, autos, gates)


def is_symmetric(c: Circuit) -> bool:
    return find_asymmetry(c) is None


def format_supports(analysis: SymmetryAnalysis) -> list[str]:
    lines = []
    for g in sorted(analysis.gates, key=gate_key):
        gs = analysis.gates[g]
        lines.append(f"gate {g} orbit={gs.orbit_size} sp={gs.sp} support={','.join(map(str, gs.support))}")
    return lines


# -- support theorem diagnostics -----------------------------------------------


@dataclass(frozen=True)
class SupportReport:
    n: int
    max_orbit_size: int
    sp_of_circuit: int
    epsilon: float
    theorem_bound: float
    eps_in_range: bool
    n_large_enough: bool
    orbit_small_enough: bool

    @property
    def hypotheses_met(self) -> bool:
        return self.eps_in_range and self.n_large_enough and self.orbit_small_enough

    @property
    def bound_holds(self) -> bool:
        return self.sp_of_circuit <= self.theorem_bound + 1e-9

    def lines(self) -> list[str]:
        def flag(b: bool) -> str:
            return "met" if b else "unmet"

        return [
            f"n={self.n}",
            f"max_orbit_size={self.max_orbit_size}",
            f"sp_of_circuit={self.sp_of_circuit}",
            f"epsilon={self.epsilon}",
            f"theorem_bound={self.theorem_bound:.6g}",
            f"hyp_epsilon_range={flag(self.eps_in_range)}",
            f"hyp_n_large={flag(self.n_large_enough)}",
            f"hyp_orbit_small={flag(self.orbit_small_enough)}",
            f"hypotheses_met={str(self.hypotheses_met).lower()}",
            f"bound_holds={str(self.bound_holds).lower()}",
        ]


def support_report(c: Circuit, analysis: SymmetryAnalysis, eps: float) -> SupportReport:
    """Compare the largest canonical support with ``(33/eps) log s / log n``.

    The theorem needs ``n > 2^(56/eps^2)``, so at any size a circuit can be
    built the report is informational; if the hypotheses do hold the bound
    is asserted.
    """
    if not 0 < eps <= 1:
        raise ValueError(f"epsilon must lie in (0, 1], got {eps}")
    n = analysis.n
    s = analysis.max_orbit_size
    log_s = math.log2(s)
    if log_s == 0:
        bound = 0.0
    elif n > 1:
        bound = (33 / eps) * log_s / math.log2(n)
    else:
        bound = math.inf
    report = SupportReport(
        n=n,
        max_orbit_size=s,
        sp_of_circuit=analysis.sp_of_circuit,
        epsilon=eps,
        theorem_bound=bound,
        eps_in_range=2 / 3 <= eps <= 1,
        n_large_enough=math.log2(n) > 56 / eps**2 if n > 1 else False,
        orbit_small_enough=log_s <= n ** (1 - eps),
    )
    if report.hypotheses_met and not report.bound_holds:
        raise AssertionError(f"support bound violated: {report}")  # pragma: no cover
    return report


# -- brute-force oracles ----------------------------------------------------------


def _require_oracle_size(n: int, cap: int) -> None:
    if n > cap:
        raise CircuitError(f"n={n} exceeds the brute-force cap {cap}")


def brute_force_stabilisers(c: Circuit, cap: int = SYMMETRY_ORACLE_MAX_N) -> dict[str, set[Permutation]]:
    """Stab(g) for every gate, by computing the automorphism of every permutation."""
    _require_oracle_size(c.n, cap)
    finder = AutomorphismFinder(c)
    stabs: dict[str, set[Permutation]] = {g: set() for g in c.gates}
    for sigma in all_permutations(c.n):
        auto = finder.image(sigma)
        if auto is None:
            raise CircuitError(f"permutation {sigma} induces no automorphism")
        for g, h in auto.pi.items():
            if g == h:
                stabs[g].add(sigma)
    return stabs


def orbit_stabiliser_check(c: Circuit, analysis: SymmetryAnalysis) -> bool:
    """``|Orb(g)| * |Stab(g)| == n!`` for every gate, stabilisers by brute force."""
    stabs = brute_force_stabilisers(c)
    total = math.factorial(c.n)
    return all(analysis.gates[g].orbit_size * len(stabs[g]) == total for g in c.gates)


def _fixing_partition(n: int, points: tuple[int, ...]) -> Partition:
    """Singletons for ``points``, everything else in one block."""
    rest = tuple(x for x in range(1, n + 1) if x not in points)
    return Partition(n, tuple((x,) for x in points) + ((rest,) if rest else ()))


def brute_force_support_check(c: Circuit, analysis: SymmetryAnalysis) -> bool:
    """Check supports and coarsest supporting partitions against their definitions.

    For each gate: every permutation fixing the canonical support pointwise
    fixes the gate, and the computed partition equals the merge of all
    partitions of ``[n]`` whose pointwise stabiliser lies in Stab(g).
    """
    stabs = brute_force_stabilisers(c)
    n = c.n
    for g, gs in analysis.gates.items():
        stab = stabs[g]
        if not all(sigma in stab for sigma in pointwise_stabiliser_elements(_fixing_partition(n, gs.support))):
            return False
        if coarsest_supporting_partition(n, stab.__contains__) != gs.sp:
            return False
    return True
