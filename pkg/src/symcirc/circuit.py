"""Circuits over relational structures.

A circuit has a universe ``[n]``, a set of gates (opaque string ids) each
carrying a label and a set of children, and an output map sending every
``q``-tuple over ``[n]`` to a gate.  Relational gates carry a symbol and a
tuple over ``[n]``; a structure is fed in through a bijection from its
elements onto ``[n]``.
"""

from __future__ import annotations

import graphlib
import re
from dataclasses import dataclass, field
from functools import cached_property
from itertools import permutations, product
from typing import Iterable, Mapping

from .relstruct import Structure, StructureError

STANDARD = "standard"
MAJORITY = "majority"
BASES = (STANDARD, MAJORITY)

CONST, REL, OP = "const", "rel", "op"
AND, OR, NOT, MAJ = "AND", "OR", "NOT", "MAJ"
OPS = {STANDARD: (AND, OR, NOT), MAJORITY: (AND, OR, NOT, MAJ)}

#: Largest universe for which all n! assignments are enumerated.
BRUTE_FORCE_MAX_N = 8


class CircuitError(ValueError):
    pass


class CircuitParseError(CircuitError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Gate:
    """A gate label plus its children.

    ``kind`` is ``const`` (``label`` is ``"0"``/``"1"``), ``rel`` (``label`` is
    the symbol, ``args`` the tuple over ``[n]``) or ``op`` (``label`` is one of
    AND/OR/NOT/MAJ).
    """

    kind: str
    label: str
    args: tuple[int, ...] = ()
    children: frozenset[str] = frozenset()

    @classmethod
    def const(cls, bit: int) -> "Gate":
        return cls(CONST, str(int(bit)))

    @classmethod
    def rel(cls, symbol: str, args: Iterable[int]) -> "Gate":
        return cls(REL, symbol, tuple(args))

    @classmethod
    def op(cls, op: str, children: Iterable[str]) -> "Gate":
        return cls(OP, op, (), frozenset(children))

    @property
    def signature(self) -> tuple:
        return (self.kind, self.label, self.args)


def gate_key(gid: str):
    """Natural sort key so that ``g2 < g10``."""
    return [(0, int(tok), "") if tok.isdigit() else (1, 0, tok) for tok in re.findall(r"\d+|\D+", gid)]


@dataclass(frozen=True)
class Circuit:
    n: int
    q: int
    basis: str
    gates: Mapping[str, Gate]
    outputs: Mapping[tuple[int, ...], str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "gates", dict(self.gates))
        object.__setattr__(self, "outputs", {tuple(k): v for k, v in self.outputs.items()})

    @cached_property
    def sorted_ids(self) -> list[str]:
        return sorted(self.gates, key=gate_key)

    @cached_property
    def marking(self) -> dict[str, tuple[int, ...]]:
        """Output tuple of each output gate (inverse of the output map)."""
        return {g: t for t, g in self.outputs.items()}

    @cached_property
    def parents(self) -> dict[str, list[str]]:
        out = {g: [] for g in self.gates}
        for gid in self.sorted_ids:
            for h in self.gates[gid].children:
                out.setdefault(h, []).append(gid)
        return out

    @property
    def wires(self) -> set[tuple[str, str]]:
        return {(h, g) for g, gate in self.gates.items() for h in gate.children}

    def __len__(self) -> int:
        return len(self.gates)


# -- structural checks --------------------------------------------------------


def topological_order(c: Circuit) -> list[str]:
    """Children before parents; ties broken by natural gate-id order."""
    if "_topo" in c.__dict__:
        return c.__dict__["_topo"]
    ts = graphlib.TopologicalSorter()
    for gid in c.sorted_ids:
        ts.add(gid, *sorted(c.gates[gid].children, key=gate_key))
    try:
        ts.prepare()
    except graphlib.CycleError as exc:
        raise CircuitError(f"wires contain a cycle through {exc.args[1]}") from None
    order = []
    while ts.is_active():
        ready = sorted(ts.get_ready(), key=gate_key)
        order.extend(ready)
        ts.done(*ready)
    c.__dict__["_topo"] = order
    return order


def heights(c: Circuit) -> dict[str, int]:
    """Longest path from an input gate to each gate."""
    h: dict[str, int] = {}
    for g in topological_order(c):
        kids = c.gates[g].children
        h[g] = 1 + max(h[k] for k in kids) if kids else 0
    return h


def height(c: Circuit, g: str) -> int:
    return heights(c)[g]


def validate(c: Circuit) -> list[str]:
    """Return every violated well-formedness condition (empty list if ok)."""
    errs: list[str] = []
    if c.basis not in BASES:
        errs.append(f"unknown basis {c.basis!r}")
    if c.n < 1:
        errs.append(f"universe size must be positive, got {c.n}")
    if c.q < 0:
        errs.append(f"output arity must be nonnegative, got {c.q}")
    allowed_ops = OPS.get(c.basis, OPS[MAJORITY])
    consts: dict[str, list[str]] = {"0": [], "1": []}
    rel_seen: dict[tuple, str] = {}
    arity: dict[str, int] = {}
    for gid in c.sorted_ids:
        gate = c.gates[gid]
        missing = sorted(h for h in gate.children if h not in c.gates)
        if missing:
            errs.append(f"gate {gid}: unknown children {missing}")
        if gate.kind == CONST:
            if gate.label not in consts:
                errs.append(f"gate {gid}: bad constant {gate.label!r}")
            else:
                consts[gate.label].append(gid)
        elif gate.kind == REL:
            if not gate.args:
                errs.append(f"gate {gid}: relational gate needs a nonempty tuple")
            bad = [u for u in gate.args if not 1 <= u <= c.n]
            if bad:
                errs.append(f"gate {gid}: tuple entries {bad} outside [1..{c.n}]")
            if arity.setdefault(gate.label, len(gate.args)) != len(gate.args):
                errs.append(f"gate {gid}: {gate.label} used with arities {arity[gate.label]} and {len(gate.args)}")
            key = (gate.label, gate.args)
            if key in rel_seen:
                errs.append(f"gate {gid}: lambda not injective, same tuple as {rel_seen[key]}")
            else:
                rel_seen[key] = gid
        elif gate.kind == OP:
            if gate.label not in allowed_ops:
                errs.append(f"gate {gid}: operation {gate.label} not in the {c.basis} basis")
            if not gate.children:
                errs.append(f"gate {gid}: internal gate without inputs (input gates must be constants or relations)")
            if gate.label == NOT and len(gate.children) != 1:
                errs.append(f"gate {gid}: NOT needs exactly one child, has {len(gate.children)}")
        else:
            errs.append(f"gate {gid}: unknown kind {gate.kind!r}")
        if gate.kind in (CONST, REL) and gate.children:
            errs.append(f"gate {gid}: input gate has incoming wires")
    for bit, ids in consts.items():
        if len(ids) > 1:
            errs.append(f"duplicate constant {bit}: gates {ids}")
    try:
        topological_order(c)
    except CircuitError:
        errs.append("wires are not a DAG")
    for t, gid in c.outputs.items():
        if len(t) != c.q or any(not 1 <= u <= c.n for u in t):
            errs.append(f"output tuple {t} is not in [1..{c.n}]^{c.q}")
        if gid not in c.gates:
            errs.append(f"output {t} points to unknown gate {gid}")
    if len(set(c.outputs.values())) != len(c.outputs):
        errs.append("output map is not injective")
    if c.n >= 1 and c.q >= 0 and len(c.outputs) != c.n ** c.q:
        errs.append(f"output map covers {len(c.outputs)} of {c.n ** c.q} tuples")
    return errs


def require_valid(c: Circuit) -> None:
    errs = validate(c)
    if errs:
        raise CircuitError("invalid circuit: " + "; ".join(errs))


def rigidity_witness(c: Circuit) -> tuple[str, str] | None:
    """Two distinct gates with equal label, tuple, output marking and children, if any."""
    seen: dict[tuple, str] = {}
    for gid in c.sorted_ids:
        gate = c.gates[gid]
        key = (gate.signature, c.marking.get(gid), gate.children)
        if key in seen:
            return seen[key], gid
        seen[key] = gid
    return None


def is_rigid(c: Circuit) -> bool:
    return rigidity_witness(c) is None


# -- evaluation -----------------------------------------------------------------


def apply_op(op: str, values: list[int]) -> int:
    """Basis operations; nullary AND and MAJ give 1, nullary OR gives 0."""
    ones = sum(values)
    if op == AND:
        return int(ones == len(values))
    if op == OR:
        return int(ones > 0)
    if op == NOT:
        if len(values) != 1:
            raise CircuitError("NOT takes exactly one input")
        return 1 - values[0]
    if op == MAJ:
        return int(2 * ones >= len(values))
    raise CircuitError(f"unknown operation {op!r}")


def check_assignment(c: Circuit, s: Structure, gamma: Mapping) -> None:
    if s.size != c.n:
        raise CircuitError(f"structure has {s.size} elements, circuit universe has {c.n}")
    if set(gamma) != set(s.universe):
        raise CircuitError("assignment must cover exactly the structure's universe")
    if sorted(gamma.values()) != list(range(1, c.n + 1)):
        raise CircuitError(f"assignment is not a bijection onto [1..{c.n}]")


def _check_vocab(c: Circuit, s: Structure) -> None:
    for gate in c.gates.values():
        if gate.kind == REL:
            if gate.label not in s.vocab:
                raise CircuitError(f"structure vocabulary lacks {gate.label}")
            if s.vocab.arity(gate.label) != len(gate.args):
                raise CircuitError(f"{gate.label} has arity {s.vocab.arity(gate.label)} in the structure")


def gate_values(c: Circuit, s: Structure, inverse: Mapping[int, object], order: list[str] | None = None) -> dict[str, int]:
    """Evaluate every gate; ``inverse`` maps ``[n]`` back to structure elements."""
    vals: dict[str, int] = {}
    rels = s.relations
    for g in order or topological_order(c):
        gate = c.gates[g]
        if gate.kind == CONST:
            vals[g] = int(gate.label)
        elif gate.kind == REL:
            vals[g] = int(tuple(inverse[u] for u in gate.args) in rels[gate.label])
        else:
            vals[g] = apply_op(gate.label, [vals[h] for h in gate.children])
    return vals


@dataclass(frozen=True)
class NaiveResult:
    values: dict[str, int]
    query: frozenset[tuple]


def naive_evaluate(c: Circuit, s: Structure, gamma: Mapping) -> NaiveResult:
    """Evaluate ``c`` on ``s`` presented through the bijection ``gamma`` (element -> [n]).

    The query is returned as a set of ``q``-tuples of structure elements; for
    ``q = 0`` it is ``{()}`` when the output gate is true and empty otherwise.
    """
    check_assignment(c, s, gamma)
    _check_vocab(c, s)
    inverse = {u: a for a, u in gamma.items()}
    vals = gate_values(c, s, inverse)
    query = frozenset(tuple(inverse[u] for u in t) for t, g in c.outputs.items() if vals[g])
    return NaiveResult(vals, query)


def all_assignments(s: Structure) -> Iterable[dict]:
    n = s.size
    for perm in permutations(range(1, n + 1)):
        yield dict(zip(s.universe, perm))


def is_invariant_bruteforce(c: Circuit, s: Structure) -> bool:
    """Whether the query is the same under all ``n!`` presentations of ``s``."""
    if c.n > BRUTE_FORCE_MAX_N:
        raise CircuitError(f"n={c.n} is too large to enumerate all bijections (cap {BRUTE_FORCE_MAX_N})")
    first = None
    for gamma in all_assignments(s):
        q = naive_evaluate(c, s, gamma).query
        if first is None:
            first = q
        elif q != first:
            return False
    return True


# -- rigidification --------------------------------------------------------------


def _equivalence_classes(c: Circuit) -> list[list[str]]:
    classes: dict[tuple, list[str]] = {}
    for gid in c.sorted_ids:
        gate = c.gates[gid]
        classes.setdefault((gate.signature, c.marking.get(gid), gate.children), []).append(gid)
    return [ids for ids in classes.values() if len(ids) > 1]


def rigidify(c: Circuit) -> Circuit:
    """Equivalent rigid circuit on the same gate ids.

    Gates with equal label, marking and children are collapsed into a chain:
    the first keeps its inputs, each later one becomes a single-input AND of
    its predecessor.  A parent that took ``c_f`` wires from the class is
    rewired to the last ``c_f`` gates of the chain, so fan-in counts (which
    matter for MAJ) are unchanged.  Classes are handled by increasing height,
    all classes at the current minimum height at once.
    """
    require_valid(c)
    gates = dict(c.gates)
    for _ in range(len(gates) + 1):
        cur = Circuit(c.n, c.q, c.basis, gates, c.outputs)
        classes = _equivalence_classes(cur)
        if not classes:
            return cur
        h = heights(cur)
        low = min(h[ids[0]] for ids in classes)
        for ids in sorted((ids for ids in classes if h[ids[0]] == low), key=lambda ids: gate_key(ids[0])):
            _collapse_class(gates, cur.parents, ids)
    raise CircuitError("rigidify did not converge")  # pragma: no cover


def _collapse_class(gates: dict[str, Gate], parents: dict[str, list[str]], chain: list[str]) -> None:
    members = set(chain)
    fan_in: dict[str, int] = {}
    for g in chain:
        for f in parents[g]:
            if f not in members:
                fan_in[f] = fan_in.get(f, 0) + 1
    for prev, g in zip(chain, chain[1:]):
        gates[g] = Gate.op(AND, [prev])
    size = len(chain)
    for f, count in fan_in.items():
        old = gates[f]
        kept = old.children - members
        gates[f] = Gate(old.kind, old.label, old.args, kept | frozenset(chain[size - count:]))


# -- file formats -----------------------------------------------------------------

_OUTPUT_RE = re.compile(r"^\(([^)]*)\)$")


def format_circuit(c: Circuit) -> str:
    lines = [f"circuit n={c.n} q={c.q} basis={c.basis}"]
    try:
        order = topological_order(c)
    except CircuitError:
        order = c.sorted_ids
    for gid in order:
        gate = c.gates[gid]
        if gate.kind == CONST:
            lines.append(f"gate {gid} const {gate.label}")
        elif gate.kind == REL:
            lines.append(f"gate {gid} rel {gate.label} " + " ".join(map(str, gate.args)))
        else:
            kids = " ".join(sorted(gate.children, key=gate_key))
            lines.append(f"gate {gid} op {gate.label} <- {kids}".rstrip())
    for t in sorted(c.outputs):
        lines.append(f"output ({','.join(map(str, t))}) {c.outputs[t]}")
    return "\n".join(lines) + "\n"


def _int(tok: str, what: str, line: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise CircuitParseError(f"{what} must be an integer, got {tok!r}", line) from None


def parse_circuit(text: str) -> Circuit:
    header = None
    gates: dict[str, Gate] = {}
    outputs: dict[tuple[int, ...], str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        toks = raw.split("#", 1)[0].split()
        if not toks:
            continue
        if header is None:
            if toks[0] != "circuit":
                raise CircuitParseError("first line must be 'circuit n=.. q=.. basis=..'", lineno)
            fields = dict(tok.split("=", 1) for tok in toks[1:] if "=" in tok)
            if set(fields) != {"n", "q", "basis"} or len(toks) != 4:
                raise CircuitParseError("header needs exactly n=, q= and basis=", lineno)
            if fields["basis"] not in BASES:
                raise CircuitParseError(f"unknown basis {fields['basis']!r}", lineno)
            header = (_int(fields["n"], "n", lineno), _int(fields["q"], "q", lineno), fields["basis"])
            continue
        if toks[0] == "gate":
            if len(toks) < 4:
                raise CircuitParseError("truncated gate line", lineno)
            gid, kind = toks[1], toks[2]
            if gid in gates:
                raise CircuitParseError(f"duplicate gate id {gid}", lineno)
            if kind == "const":
                if len(toks) != 4 or toks[3] not in ("0", "1"):
                    raise CircuitParseError("const gate needs a single 0 or 1", lineno)
                gates[gid] = Gate.const(int(toks[3]))
            elif kind == "rel":
                if len(toks) < 5:
                    raise CircuitParseError("rel gate needs a symbol and a tuple", lineno)
                gates[gid] = Gate.rel(toks[3], [_int(t, "tuple entry", lineno) for t in toks[4:]])
            elif kind == "op":
                if toks[3] not in (AND, OR, NOT, MAJ):
                    raise CircuitParseError(f"unknown operation {toks[3]!r}", lineno)
                if len(toks) < 5 or toks[4] != "<-":
                    raise CircuitParseError("op gate needs '<-' before its children", lineno)
                kids = toks[5:]
                if len(set(kids)) != len(kids):
                    raise CircuitParseError("repeated child (wires form a set)", lineno)
                gates[gid] = Gate.op(toks[3], kids)
            else:
                raise CircuitParseError(f"unknown gate kind {kind!r}", lineno)
        elif toks[0] == "output":
            if len(toks) != 3:
                raise CircuitParseError("output line is 'output (u1,...,uq) id'", lineno)
            m = _OUTPUT_RE.match(toks[1])
            if not m:
                raise CircuitParseError(f"bad output tuple {toks[1]!r}", lineno)
            tup = tuple(_int(t, "output entry", lineno) for t in m.group(1).split(",") if t.strip())
            if tup in outputs:
                raise CircuitParseError(f"output tuple {tup} given twice", lineno)
            outputs[tup] = toks[2]
        else:
            raise CircuitParseError(f"unknown directive {toks[0]!r}", lineno)
    if header is None:
        raise CircuitParseError("missing circuit header")
    n, q, basis = header
    return Circuit(n, q, basis, gates, outputs)


def parse_assignment(text: str) -> dict[str, int]:
    gamma: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        elem, sep, idx = line.partition("=")
        if not sep:
            raise StructureError("expected element=index", lineno)
        elem = elem.strip()
        if elem in gamma:
            raise StructureError(f"element {elem!r} assigned twice", lineno)
        try:
            gamma[elem] = int(idx)
        except ValueError:
            raise StructureError(f"bad index {idx.strip()!r}", lineno) from None
    return gamma


def format_assignment(gamma: Mapping) -> str:
    return "".join(f"{a}={u}\n" for a, u in gamma.items())


def output_tuples(n: int, q: int) -> list[tuple[int, ...]]:
    return list(product(range(1, n + 1), repeat=q))
