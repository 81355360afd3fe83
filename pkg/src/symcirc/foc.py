"""First-order formulas (with a majority quantifier) and their circuits.

Formulas are written as s-expressions::

    (exists x (forall y (or (= x y) (E x y))))
    (maj x (P x))

A formula with free variables ``v1 .. vq`` (in order of first occurrence)
compiles to a circuit computing a ``q``-ary query.  The circuit has one gate
per subformula and assignment of its free variables into ``[n]``, so it is
symmetric by construction.  :func:`satisfying_tuples` is a direct recursive
model checker used as the semantic reference.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from itertools import product
from typing import Iterator, Mapping, Union

from .circuit import AND, MAJ, MAJORITY, NOT, OR, STANDARD, Circuit, Gate
from .relstruct import Structure, Vocabulary


class FormulaError(ValueError):
    pass


@dataclass(frozen=True)
class Atom:
    symbol: str
    vars: tuple[str, ...]


@dataclass(frozen=True)
class Eq:
    left: str
    right: str


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Maj:
    """At least half of the universe satisfies ``body`` at ``var``."""

    var: str
    body: "Formula"


Formula = Union[Atom, Eq, Not, And, Or, Exists, Forall, Maj]
QUANTIFIERS = {"exists": Exists, "forall": Forall, "maj": Maj}
_KEYWORDS = {"exists", "forall", "maj", "and", "or", "not", "="}
_VAR_RE = re.compile(r"^[A-Za-z]+$")


# -- syntax -----------------------------------------------------------------------


def _tokenize(text: str) -> list[str]:
    return re.findall(r"\(|\)|[^\s()]+", text)


def _read(tokens: list[str], pos: int):
    if pos >= len(tokens):
        raise FormulaError("unexpected end of input")
    tok = tokens[pos]
    if tok == ")":
        raise FormulaError(f"unexpected ')' at token {pos}")
    if tok != "(":
        return tok, pos + 1
    items = []
    pos += 1
    while True:
        if pos >= len(tokens):
            raise FormulaError("unbalanced parentheses")
        if tokens[pos] == ")":
            return items, pos + 1
        item, pos = _read(tokens, pos)
        items.append(item)


def _variable(tok, where: str) -> str:
    if not isinstance(tok, str) or not _VAR_RE.match(tok) or tok in _KEYWORDS:
        raise FormulaError(f"expected a variable in {where}, got {tok!r}")
    return tok


def _build(sx) -> Formula:
    if not isinstance(sx, list) or not sx:
        raise FormulaError(f"expected a parenthesised formula, got {sx!r}")
    head, args = sx[0], sx[1:]
    if not isinstance(head, str):
        raise FormulaError("operator position holds a list")
    if head in QUANTIFIERS:
        if len(args) != 2:
            raise FormulaError(f"{head} takes a variable and a body")
        return QUANTIFIERS[head](_variable(args[0], head), _build(args[1]))
    if head in ("and", "or"):
        if not args:
            raise FormulaError(f"{head} needs at least one argument")
        parts = tuple(_build(a) for a in args)
        return And(parts) if head == "and" else Or(parts)
    if head == "not":
        if len(args) != 1:
            raise FormulaError("not takes one argument")
        return Not(_build(args[0]))
    if head == "=":
        if len(args) != 2:
            raise FormulaError("= takes two variables")
        return Eq(_variable(args[0], "="), _variable(args[1], "="))
    if not args:
        raise FormulaError(f"relation {head} needs at least one argument")
    return Atom(head, tuple(_variable(a, head) for a in args))


def parse_formula(text: str) -> Formula:
    tokens = _tokenize(text)
    sx, pos = _read(tokens, 0)
    if pos != len(tokens):
        raise FormulaError("trailing input after formula")
    return _build(sx)


def format_formula(phi: Formula) -> str:
    if isinstance(phi, Atom):
        return f"({phi.symbol} {' '.join(phi.vars)})"
    if isinstance(phi, Eq):
        return f"(= {phi.left} {phi.right})"
    if isinstance(phi, Not):
        return f"(not {format_formula(phi.body)})"
    if isinstance(phi, (And, Or)):
        op = "and" if isinstance(phi, And) else "or"
        return f"({op} {' '.join(format_formula(p) for p in phi.parts)})"
    name = {Exists: "exists", Forall: "forall", Maj: "maj"}[type(phi)]
    return f"({name} {phi.var} {format_formula(phi.body)})"


def free_variables(phi: Formula) -> tuple[str, ...]:
    """Free variables in order of first occurrence."""
    out: dict[str, None] = {}

    def walk(f: Formula, bound: frozenset):
        if isinstance(f, Atom):
            for v in f.vars:
                if v not in bound:
                    out.setdefault(v)
        elif isinstance(f, Eq):
            for v in (f.left, f.right):
                if v not in bound:
                    out.setdefault(v)
        elif isinstance(f, Not):
            walk(f.body, bound)
        elif isinstance(f, (And, Or)):
            for p in f.parts:
                walk(p, bound)
        else:
            walk(f.body, bound | {f.var})

    walk(phi, frozenset())
    return tuple(out)


def variables(phi: Formula) -> set[str]:
    """Every variable occurring in ``phi``, bound or free."""
    if isinstance(phi, Atom):
        return set(phi.vars)
    if isinstance(phi, Eq):
        return {phi.left, phi.right}
    if isinstance(phi, Not):
        return variables(phi.body)
    if isinstance(phi, (And, Or)):
        return set().union(*(variables(p) for p in phi.parts))
    return {phi.var} | variables(phi.body)


def relation_arities(phi: Formula) -> dict[str, int]:
    out: dict[str, int] = {}

    def walk(f: Formula):
        if isinstance(f, Atom):
            if out.setdefault(f.symbol, len(f.vars)) != len(f.vars):
                raise FormulaError(f"{f.symbol} used with arities {out[f.symbol]} and {len(f.vars)}")
        elif isinstance(f, Not):
            walk(f.body)
        elif isinstance(f, (And, Or)):
            for p in f.parts:
                walk(p)
        elif not isinstance(f, Eq):
            walk(f.body)

    walk(phi)
    return out


def uses_majority(phi: Formula) -> bool:
    if isinstance(phi, Maj):
        return True
    if isinstance(phi, (Atom, Eq)):
        return False
    if isinstance(phi, (And, Or)):
        return any(uses_majority(p) for p in phi.parts)
    return uses_majority(phi.body)


# -- semantics ---------------------------------------------------------------------


def model_check(phi: Formula, s: Structure, env: Mapping[str, object]) -> bool:
    """Tarski semantics of ``phi`` in ``s`` under the variable assignment ``env``."""
    if isinstance(phi, Atom):
        return tuple(env[v] for v in phi.vars) in s.relations[phi.symbol]
    if isinstance(phi, Eq):
        return env[phi.left] == env[phi.right]
    if isinstance(phi, Not):
        return not model_check(phi.body, s, env)
    if isinstance(phi, And):
        return all(model_check(p, s, env) for p in phi.parts)
    if isinstance(phi, Or):
        return any(model_check(p, s, env) for p in phi.parts)
    hits = (model_check(phi.body, s, {**env, phi.var: a}) for a in s.universe)
    if isinstance(phi, Exists):
        return any(hits)
    if isinstance(phi, Forall):
        return all(hits)
    return 2 * sum(hits) >= s.size


def satisfying_tuples(phi: Formula, s: Structure) -> frozenset[tuple]:
    """All tuples (over the free variables, in order) satisfying ``phi``; ``{()}``/empty for sentences."""
    fv = free_variables(phi)
    return frozenset(
        t for t in product(s.universe, repeat=len(fv)) if model_check(phi, s, dict(zip(fv, t)))
    )


# -- compilation ---------------------------------------------------------------------


@dataclass(frozen=True)
class CompileOptions:
    n: int
    basis: str = STANDARD
    share_subcircuits: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise FormulaError(f"universe size must be positive, got {self.n}")
        if self.basis not in (STANDARD, MAJORITY):
            raise FormulaError(f"unknown basis {self.basis!r}")


class _Compiler:
    def __init__(self, opts: CompileOptions):
        self.opts = opts
        self.gates: dict[str, Gate] = {}
        self.memo: dict[tuple, str] = {}
        self.inputs: dict[tuple, str] = {}
        self.provenance: dict[str, tuple] = {}

    def _new(self, gate: Gate, origin: tuple) -> str:
        gid = f"g{len(self.gates)}"
        self.gates[gid] = gate
        self.provenance[gid] = origin
        return gid

    def input_gate(self, gate: Gate) -> str:
        key = gate.signature
        if key not in self.inputs:
            self.inputs[key] = self._new(gate, ("input", gate.signature))
        return self.inputs[key]

    def build(self, phi: Formula, env: Mapping[str, int], path: tuple) -> str:
        if isinstance(phi, Atom):
            return self.input_gate(Gate.rel(phi.symbol, [env[v] for v in phi.vars]))
        if isinstance(phi, Eq):
            return self.input_gate(Gate.const(env[phi.left] == env[phi.right]))
        fv = free_variables(phi)
        ident = phi if self.opts.share_subcircuits else path
        key = (ident, tuple(env[v] for v in fv))
        if key in self.memo:
            return self.memo[key]
        if isinstance(phi, Not):
            gate = Gate.op(NOT, [self.build(phi.body, env, path + (0,))])
        elif isinstance(phi, (And, Or)):
            kids = [self.build(p, env, path + (i,)) for i, p in enumerate(phi.parts)]
            gate = Gate.op(AND if isinstance(phi, And) else OR, kids)
        else:
            kids = [self.build(phi.body, {**env, phi.var: a}, path + (0,)) for a in range(1, self.opts.n + 1)]
            op = {Exists: OR, Forall: AND, Maj: MAJ}[type(phi)]
            if op == MAJ and len(set(kids)) != len(kids) and len(set(kids)) > 1:
                # wires form a set, so repeated children would lose their
                # multiplicity; give every instance its own AND wrapper
                kids = [
                    self._new(Gate.op(AND, [k]), ("maj-child", key, a))
                    for a, k in enumerate(kids, start=1)
                ]
            gate = Gate.op(op, kids)
        gid = self._new(gate, key)
        self.memo[key] = gid
        return gid


def compile_formula(phi: Formula, opts: CompileOptions | int, basis: str | None = None) -> Circuit:
    """Circuit computing ``phi`` on structures of size ``opts.n``.

    Output gate for tuple ``t`` is a single-input AND over the root instance
    at ``t``, keeping the output map injective when instances coincide.
    """
    circuit, _ = compile_with_provenance(phi, opts, basis)
    return circuit


def compile_with_provenance(phi: Formula, opts: CompileOptions | int,
                            basis: str | None = None) -> tuple[Circuit, dict[str, tuple]]:
    """Like :func:`compile_formula`, also returning each gate's (subformula, assignment) origin."""
    if isinstance(opts, int):
        opts = CompileOptions(opts, basis or STANDARD)
    if uses_majority(phi) and opts.basis != MAJORITY:
        raise FormulaError("the majority quantifier needs the majority basis")
    relation_arities(phi)
    comp = _Compiler(opts)
    fv = free_variables(phi)
    outputs = {}
    for t in product(range(1, opts.n + 1), repeat=len(fv)):
        root = comp.build(phi, dict(zip(fv, t)), ())
        outputs[t] = comp._new(Gate.op(AND, [root]), ("output", t))
    return Circuit(opts.n, len(fv), opts.basis, comp.gates, outputs), comp.provenance


# -- random formulas -----------------------------------------------------------------


def random_formula(depth: int, vocab: Vocabulary, vars: tuple[str, ...] | list[str], seed: int,
                   basis: str = STANDARD) -> Formula:
    """Reproducible random formula of nesting depth at most ``depth``.

    Depth 1 gives an atom or an equality.
    """
    if depth < 1:
        raise FormulaError("depth must be at least 1")
    if not vars:
        raise FormulaError("need at least one variable")
    rng = random.Random(seed)
    vars = tuple(vars)

    def leaf() -> Formula:
        if rng.random() < 0.2:
            return Eq(rng.choice(vars), rng.choice(vars))
        name, arity = rng.choice(vocab.symbols)
        return Atom(name, tuple(rng.choice(vars) for _ in range(arity)))

    ops = ["not", "and", "or", "exists", "forall"]
    if basis == MAJORITY:
        ops += ["maj", "maj"]

    def gen(d: int) -> Formula:
        if d <= 1:
            return leaf()
        op = rng.choice(ops)
        sub = lambda: gen(rng.randint(1, d - 1))  # noqa: E731
        if op == "not":
            return Not(gen(d - 1))
        if op in ("and", "or"):
            parts = (gen(d - 1),) + tuple(sub() for _ in range(rng.randint(0, 2)))
            return And(parts) if op == "and" else Or(parts)
        return QUANTIFIERS[op](rng.choice(vars), gen(d - 1))

    return gen(depth)


def iter_formula_corpus(count: int, seed: int, vocab: Vocabulary, vars=("x", "y", "z"),
                        depths=(1, 2, 3, 4), bases=(STANDARD, MAJORITY)) -> Iterator[tuple[Formula, str]]:
    rng = random.Random(seed)
    for _ in range(count):
        basis = rng.choice(bases)
        yield random_formula(rng.choice(depths), vocab, vars, rng.randrange(2**32), basis), basis
