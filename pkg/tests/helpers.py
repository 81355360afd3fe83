"""Shared fixtures-by-function for the test modules."""

from __future__ import annotations

import random
from dataclasses import dataclass
from string import ascii_lowercase

from symcirc.circuit import Circuit, Gate, parse_circuit, rigidify
from symcirc.foc import CompileOptions, Formula, compile_with_provenance, iter_formula_corpus, variables
from symcirc.perm import Permutation, all_permutations
from symcirc.relstruct import Structure, Vocabulary, random_structure

VOCAB = Vocabulary.of(E=2, P=1)
GRAPH = Vocabulary.of(E=2)


def universe(n: int) -> tuple[str, ...]:
    return tuple(ascii_lowercase[:n])


def random_structures(n: int, rng: random.Random, count: int, vocab: Vocabulary = VOCAB) -> list[Structure]:
    return [random_structure(vocab, universe(n), rng, rng.choice((0.15, 0.4, 0.6, 0.85))) for _ in range(count)]


def random_bijection(s: Structure, rng: random.Random) -> dict:
    idx = list(range(1, s.size + 1))
    rng.shuffle(idx)
    return dict(zip(s.universe, idx))


@dataclass
class Compiled:
    phi: Formula
    basis: str
    n: int
    circuit: Circuit
    provenance: dict

    @property
    def num_vars(self) -> int:
        return len(variables(self.phi))


def compiled_corpus(count: int, seed: int, ns=(3, 4, 5), share: bool = True) -> list[Compiled]:
    rng = random.Random(seed)
    out = []
    for phi, basis in iter_formula_corpus(count, seed, VOCAB):
        n = rng.choice(ns)
        c, prov = compile_with_provenance(phi, CompileOptions(n, basis, share))
        out.append(Compiled(phi, basis, n, c, prov))
    return out


def _move(origin: tuple, sigma: Permutation) -> tuple:
    tag = origin[0]
    if tag == "input":
        kind, label, args = origin[1]
        return ("input", (kind, label, sigma.apply(args)))
    if tag == "output":
        return ("output", sigma.apply(origin[1]))
    if tag == "maj-child":
        return ("maj-child", _move(origin[1], sigma), sigma(origin[2]))
    ident, values = origin
    return (ident, sigma.apply(values))


def provenance_automorphism(prov: dict, sigma: Permutation) -> dict[str, str]:
    """Gate map induced by ``sigma`` on a compiled circuit, read off the compiler's bookkeeping.

    Compiled circuits need not be rigid, so this is how their symmetry is
    established before rigidification.
    """
    where = {origin: g for g, origin in prov.items()}
    return {g: where[_move(origin, sigma)] for g, origin in prov.items()}


def build(n: int, gates: dict[str, Gate], outputs: dict, q: int = 0, basis: str = "standard") -> Circuit:
    return Circuit(n, q, basis, gates, outputs)


ALL_EDGES_OR_3 = """\
circuit n=3 q=0 basis=standard
gate e12 rel E 1 2
gate e13 rel E 1 3
gate e21 rel E 2 1
gate e23 rel E 2 3
gate e31 rel E 3 1
gate e32 rel E 3 2
gate root op OR <- e12 e13 e21 e23 e31 e32
output () root
"""

LONE_EDGE_3 = """\
circuit n=3 q=0 basis=standard
gate g rel E 1 2
output () g
"""


def all_edges_or() -> Circuit:
    return parse_circuit(ALL_EDGES_OR_3)


def lone_edge() -> Circuit:
    return parse_circuit(LONE_EDGE_3)


def rigid(c: Circuit) -> Circuit:
    return rigidify(c)


def random_symmetric_circuit(n: int, rng: random.Random, layers: int = 3, majority: bool = True) -> Circuit:
    """A rigid symmetric circuit built by closing every new gate under Sym(n).

    Gates are identified by their structure (label, tuple, children), so the
    image of a gate under a permutation is computed structurally.  This
    reaches supporting partitions that compiled formulas never produce, such
    as ``{1,2}{3,4}``.
    """
    perms = list(all_permutations(n))
    ids: dict[tuple, str] = {}
    gates: dict[str, Gate] = {}
    image_memo: dict[tuple, tuple] = {}

    def image(key: tuple, sigma: Permutation) -> tuple:
        memo_key = (key, sigma.images)
        if memo_key not in image_memo:
            if key[0] == "rel":
                out = ("rel", key[1], sigma.apply(key[2]))
            elif key[0] == "const":
                out = key
            else:
                out = (key[0], frozenset(image(k, sigma) for k in key[1]))
            image_memo[memo_key] = out
        return image_memo[memo_key]

    def add(key: tuple) -> None:
        if key in ids:
            return
        gid = f"g{len(ids)}"
        ids[key] = gid
        if key[0] == "rel":
            gates[gid] = Gate.rel(key[1], key[2])
        elif key[0] == "const":
            gates[gid] = Gate.const(key[1])
        else:
            gates[gid] = Gate.op(key[0], [ids[k] for k in key[1]])

    def add_orbit(key: tuple) -> list[tuple]:
        orbit = {image(key, sigma) for sigma in perms}
        for k in sorted(orbit, key=repr):
            add(k)
        return sorted(orbit, key=repr)

    orbits = []
    for _ in range(rng.randint(1, 2)):
        sym, arity = rng.choice([("E", 2), ("P", 1)])
        orbits.append(add_orbit(("rel", sym, tuple(rng.randint(1, n) for _ in range(arity)))))
    if rng.random() < 0.3:
        orbits.append(add_orbit(("const", rng.randint(0, 1))))
    ops = ["AND", "OR", "NOT"] + (["MAJ", "MAJ"] if majority else [])
    for _ in range(layers):
        op = rng.choice(ops)
        pool = [k for orb in orbits for k in orb]
        size = 1 if op == "NOT" else rng.randint(1, min(4, len(pool)))
        orbits.append(add_orbit((op, frozenset(rng.sample(pool, size)))))
    chosen = rng.sample(orbits, min(len(orbits), rng.randint(1, 2)))
    root = (rng.choice(["AND", "OR"] + (["MAJ"] if majority else [])), frozenset(k for orb in chosen for k in orb))
    add(root)
    basis = "majority" if majority else "standard"
    return Circuit(n, 0, basis, gates, {(): ids[root]})
