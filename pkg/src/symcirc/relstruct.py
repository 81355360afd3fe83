"""Relational vocabularies and finite structures.

A structure is the input a circuit is evaluated on.  Elements are arbitrary
non-whitespace tokens; the order they are listed in is kept so that output
is reproducible, but it never carries meaning.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from itertools import product
from typing import Hashable, Iterable, Mapping

logger = logging.getLogger(__name__)


class StructureError(ValueError):
    """Raised for malformed vocabularies, structures or structure files."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Vocabulary:
    symbols: tuple[tuple[str, int], ...]

    def __post_init__(self):
        seen = set()
        for name, arity in self.symbols:
            if name in seen:
                raise StructureError(f"duplicate relation symbol {name!r}")
            if not isinstance(arity, int) or arity < 1:
                raise StructureError(f"symbol {name!r} needs a positive arity, got {arity!r}")
            seen.add(name)

    @classmethod
    def of(cls, **arities: int) -> "Vocabulary":
        return cls(tuple(arities.items()))

    def arity(self, name: str) -> int:
        for sym, arity in self.symbols:
            if sym == name:
                return arity
        raise StructureError(f"unknown relation symbol {name!r}")

    def __contains__(self, name: object) -> bool:
        return any(sym == name for sym, _ in self.symbols)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.symbols)

    def __str__(self) -> str:
        return " ".join(f"{name}/{arity}" for name, arity in self.symbols)


@dataclass(frozen=True)
class Structure:
    """A finite structure over ``vocab``.

    ``relations`` maps every symbol of the vocabulary to a frozenset of
    tuples of universe elements.  Missing symbols are treated as empty.
    """

    vocab: Vocabulary
    universe: tuple[Hashable, ...]
    relations: Mapping[str, frozenset[tuple]] = field(default_factory=dict)

    def __post_init__(self):
        universe = tuple(self.universe)
        if not universe:
            raise StructureError("universe must be nonempty")
        if len(set(universe)) != len(universe):
            raise StructureError("universe elements must be distinct")
        members = set(universe)
        rels = {}
        for name in self.relations:
            if name not in self.vocab:
                raise StructureError(f"relation {name!r} not in vocabulary")
        for name, arity in self.vocab.symbols:
            tuples = frozenset(tuple(t) for t in self.relations.get(name, ()))
            for t in tuples:
                if len(t) != arity:
                    raise StructureError(f"tuple {t} has length {len(t)}, {name} has arity {arity}")
                for a in t:
                    if a not in members:
                        raise StructureError(f"tuple {t} of {name} uses non-element {a!r}")
            rels[name] = tuples
        object.__setattr__(self, "universe", universe)
        object.__setattr__(self, "relations", rels)

    @property
    def size(self) -> int:
        return len(self.universe)

    def __len__(self) -> int:
        return len(self.universe)


def holds(s: Structure, symbol: str, tup: Iterable) -> bool:
    """Return whether ``tup`` belongs to relation ``symbol`` of ``s``."""
    tup = tuple(tup)
    arity = s.vocab.arity(symbol)
    if len(tup) != arity:
        raise StructureError(f"{symbol} has arity {arity}, got a {len(tup)}-tuple")
    return tup in s.relations[symbol]


def relabel(s: Structure, gamma: Mapping) -> Structure:
    """Push ``s`` forward along the bijection ``gamma`` (element -> new id)."""
    missing = [a for a in s.universe if a not in gamma]
    if missing:
        raise StructureError(f"relabelling is not total, missing {missing}")
    image = [gamma[a] for a in s.universe]
    if len(set(image)) != len(image):
        raise StructureError("relabelling is not injective")
    rels = {name: frozenset(tuple(gamma[a] for a in t) for t in ts) for name, ts in s.relations.items()}
    return Structure(s.vocab, tuple(image), rels)


def _parse_symbol(token: str, line: int) -> tuple[str, int]:
    name, sep, arity = token.partition("/")
    if not sep or not name:
        raise StructureError(f"expected NAME/ARITY, got {token!r}", line)
    try:
        return name, int(arity)
    except ValueError:
        raise StructureError(f"bad arity in {token!r}", line) from None


def parse_structure(text: str) -> Structure:
    vocab = None
    universe = None
    rels: dict[str, set] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        head, args = line[0], line[1:]
        if vocab is None:
            if head != "vocab":
                raise StructureError("first line must be 'vocab'", lineno)
            try:
                vocab = Vocabulary(tuple(_parse_symbol(tok, lineno) for tok in args))
            except StructureError as exc:
                if exc.line is None:
                    raise StructureError(str(exc), lineno) from None
                raise
            rels = {name: set() for name in vocab.names}
        elif head == "vocab":
            raise StructureError("duplicate 'vocab' line", lineno)
        elif head == "universe":
            if universe is not None:
                raise StructureError("duplicate 'universe' line", lineno)
            if len(set(args)) != len(args):
                dup = sorted({a for a in args if args.count(a) > 1})
                raise StructureError(f"duplicate universe element(s) {dup}", lineno)
            if not args:
                raise StructureError("universe must be nonempty", lineno)
            universe = tuple(args)
        elif head == "rel":
            if universe is None:
                raise StructureError("'rel' before 'universe'", lineno)
            if not args:
                raise StructureError("'rel' needs a symbol", lineno)
            name, tup = args[0], tuple(args[1:])
            if name not in vocab:
                raise StructureError(f"undeclared symbol {name!r}", lineno)
            if len(tup) != vocab.arity(name):
                raise StructureError(
                    f"arity mismatch: {name} has arity {vocab.arity(name)}, got {len(tup)} elements", lineno
                )
            unknown = [a for a in tup if a not in universe]
            if unknown:
                raise StructureError(f"unknown element(s) {unknown}", lineno)
            if tup in rels[name]:
                logger.warning("line %d: duplicate tuple %s in %s ignored", lineno, tup, name)
            rels[name].add(tup)
        else:
            raise StructureError(f"unknown directive {head!r}", lineno)
    if vocab is None:
        raise StructureError("missing 'vocab' line")
    if universe is None:
        raise StructureError("missing 'universe' line")
    return Structure(vocab, universe, {k: frozenset(v) for k, v in rels.items()})


def format_structure(s: Structure) -> str:
    order = {a: i for i, a in enumerate(s.universe)}
    lines = [f"vocab {s.vocab}", "universe " + " ".join(map(str, s.universe))]
    for name in s.vocab.names:
        for t in sorted(s.relations[name], key=lambda t: [order[a] for a in t]):
            lines.append(" ".join(["rel", name, *map(str, t)]))
    return "\n".join(lines) + "\n"


def random_structure(vocab: Vocabulary, universe: Iterable, rng: random.Random, density: float = 0.5) -> Structure:
    """Each possible tuple is included independently with probability ``density``."""
    universe = tuple(universe)
    rels = {}
    for name, arity in vocab.symbols:
        rels[name] = frozenset(t for t in product(universe, repeat=arity) if rng.random() < density)
    return Structure(vocab, universe, rels)
