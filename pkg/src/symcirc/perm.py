"""Permutations and partitions of ``[n] = {1..n}``.

Besides the basic types this module holds the partition merge used to build
coarsest supporting partitions, index arithmetic for setwise stabilisers,
numeric checkers for the two part-size inequalities, and brute-force
supporting-partition oracles for small explicit groups.
"""

from __future__ import annotations

import math
import random
from collections import Counter, deque
from dataclasses import dataclass
from functools import cached_property
from itertools import permutations, product
from typing import Callable, Iterable, Iterator, Sequence

#: Explicit groups and Bell enumeration are capped here (7! = 5040, Bell(7) = 877).
ORACLE_MAX_N = 7

# Slack for comparing floating logs against thresholds that are exact in
# rational arithmetic (e.g. log2(1024) >= 4 / 0.4).
_LOG_SLACK = 1e-9


class OracleSizeError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Permutation:
    """A permutation of ``[n]`` in one-line form: ``images[i - 1] == sigma(i)``."""

    images: tuple[int, ...]

    def __post_init__(self):
        images = tuple(self.images)
        if sorted(images) != list(range(1, len(images) + 1)):
            raise ValueError(f"not a permutation of [1..{len(images)}]: {images}")
        object.__setattr__(self, "images", images)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def transposition(cls, n: int, u: int, v: int) -> "Permutation":
        images = list(range(1, n + 1))
        images[u - 1], images[v - 1] = v, u
        return cls(tuple(images))

    @classmethod
    def from_cycles(cls, n: int, *cycles: Sequence[int]) -> "Permutation":
        images = list(range(1, n + 1))
        for cyc in cycles:
            for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                images[a - 1] = b
        return cls(tuple(images))

    @classmethod
    def parse(cls, text: str) -> "Permutation":
        return cls(tuple(int(tok) for tok in text.split()))

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    def __mul__(self, other: "Permutation") -> "Permutation":
        """Composition ``(self * other)(i) == self(other(i))``."""
        return Permutation(tuple(self.images[j - 1] for j in other.images))

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, j in enumerate(self.images, start=1):
            inv[j - 1] = i
        return Permutation(tuple(inv))

    def apply(self, xs: Iterable[int]) -> tuple[int, ...]:
        return tuple(self.images[x - 1] for x in xs)

    def is_identity(self) -> bool:
        return all(i == j for i, j in enumerate(self.images, start=1))

    def moved(self) -> list[int]:
        return [i for i, j in enumerate(self.images, start=1) if i != j]

    def __str__(self) -> str:
        return " ".join(map(str, self.images))


def all_permutations(n: int) -> Iterator[Permutation]:
    for p in permutations(range(1, n + 1)):
        yield Permutation(p)


def transposition_factors(sigma: Permutation) -> list[tuple[int, int]]:
    """Factor ``sigma`` into transpositions, applied right-to-left.

    ``sigma == t_0 * t_1 * ... * t_k`` for the returned list ``[t_0, ..., t_k]``.
    Uses the cycle decomposition ``(a1 .. am) = (a1 am)(a1 a(m-1))...(a1 a2)``.
    """
    seen = set()
    factors = []
    for start in range(1, sigma.n + 1):
        if start in seen:
            continue
        cyc = [start]
        seen.add(start)
        j = sigma(start)
        while j != start:
            cyc.append(j)
            seen.add(j)
            j = sigma(j)
        for b in reversed(cyc[1:]):
            factors.append((min(start, b), max(start, b)))
    return factors


class DisjointSet:
    """Union-find with path compression, keyed by arbitrary hashables."""

    def __init__(self, items: Iterable = ()):
        self.parent = {x: x for x in items}

    def add(self, x) -> None:
        self.parent.setdefault(x, x)

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x, y) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            self.parent[ry] = rx

    def groups(self) -> list[list]:
        out: dict = {}
        for x in self.parent:
            out.setdefault(self.find(x), []).append(x)
        return list(out.values())


@dataclass(frozen=True)
class Partition:
    """A partition of ``[n]`` in canonical form.

    Blocks are sorted tuples, ordered by their minimum element, so two
    partitions are equal iff their ``blocks`` are equal.
    """

    n: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = sorted((b if len(b) == 1 else tuple(sorted(b)) for b in map(tuple, self.blocks)),
                        key=lambda b: b[0] if b else 0)
        if any(not b for b in blocks):
            raise ValueError("partition blocks must be nonempty")
        flat = [x for b in blocks for x in b]
        if sorted(flat) != list(range(1, self.n + 1)):
            raise ValueError(f"blocks do not partition [1..{self.n}]: {blocks}")
        object.__setattr__(self, "blocks", tuple(blocks))

    @classmethod
    def of(cls, n: int, blocks: Iterable[Iterable[int]]) -> "Partition":
        return cls(n, tuple(tuple(b) for b in blocks))

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(n, tuple((i,) for i in range(1, n + 1)))

    @classmethod
    def whole(cls, n: int) -> "Partition":
        return cls(n, (tuple(range(1, n + 1)),))

    @classmethod
    def pair(cls, n: int, u: int, v: int) -> "Partition":
        """``{{u, v}}`` plus singletons."""
        rest = [(w,) for w in range(1, n + 1) if w not in (u, v)]
        return cls(n, ((u, v), *rest))

    @classmethod
    def parse(cls, text: str, n: int | None = None) -> "Partition":
        text = text.strip()
        if not (text.startswith("{") and text.endswith("}")):
            raise ValueError(f"bad partition text {text!r}")
        blocks = [tuple(int(x) for x in chunk.split(",") if x.strip()) for chunk in text[1:-1].split("}{")]
        if n is None:
            n = sum(len(b) for b in blocks)
        return cls(n, tuple(blocks))

    def __str__(self) -> str:
        return "".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks)

    def __len__(self) -> int:
        return len(self.blocks)

    def block_of(self, x: int) -> tuple[int, ...]:
        for b in self.blocks:
            if x in b:
                return b
        raise KeyError(x)

    def sizes(self) -> list[int]:
        return [len(b) for b in self.blocks]

    @cached_property
    def largest_block(self) -> tuple[int, ...]:
        """A maximum-size block; ties go to the block with the smallest minimum."""
        best = self.blocks[0]
        for b in self.blocks[1:]:
            if len(b) > len(best):
                best = b
        return best

    @property
    def norm(self) -> int:
        """``n`` minus the size of the largest block."""
        return self.n - len(self.largest_block)

    def support(self) -> tuple[int, ...]:
        """Union of all blocks except :attr:`largest_block`, sorted."""
        big = self.largest_block
        return tuple(sorted(x for b in self.blocks if b is not big for x in b))

    def apply(self, sigma: Permutation) -> "Partition":
        return Partition(self.n, tuple(sigma.apply(b) for b in self.blocks))

    def refines(self, other: "Partition") -> bool:
        """True iff every block of ``self`` lies inside a block of ``other``."""
        where = {x: i for i, b in enumerate(other.blocks) for x in b}
        return all(len({where[x] for x in b}) == 1 for b in self.blocks)

    def fixes_pointwise(self, sigma: Permutation) -> bool:
        """Whether ``sigma`` maps every block onto itself."""
        return all(set(sigma.apply(b)) == set(b) for b in self.blocks)

    def fixes_setwise(self, sigma: Permutation) -> bool:
        """Whether ``sigma`` permutes the blocks among themselves."""
        blocks = {frozenset(b) for b in self.blocks}
        return all(frozenset(sigma.apply(b)) in blocks for b in self.blocks)


def merge_partitions(p: Partition, other: Partition) -> Partition:
    """Finest partition coarser than both ``p`` and ``other``."""
    if p.n != other.n:
        raise ValueError(f"partitions of different sets: n={p.n} vs n={other.n}")
    ds = DisjointSet(range(1, p.n + 1))
    for b in p.blocks + other.blocks:
        for x in b[1:]:
            ds.union(b[0], x)
    return Partition(p.n, tuple(tuple(g) for g in ds.groups()))


def merge_all(n: int, parts: Iterable[Partition]) -> Partition:
    out = Partition.singletons(n)
    for p in parts:
        out = merge_partitions(out, p)
    return out


def all_partitions(n: int) -> Iterator[Partition]:
    """Every partition of ``[n]`` (restricted growth strings)."""
    if n == 0:
        yield Partition(0, ())
        return

    def rec(i: int, blocks: list[list[int]]):
        if i > n:
            yield Partition(n, tuple(tuple(b) for b in blocks))
            return
        for b in blocks:
            b.append(i)
            yield from rec(i + 1, blocks)
            b.pop()
        blocks.append([i])
        yield from rec(i + 1, blocks)
        blocks.pop()

    yield from rec(1, [])


# -- index arithmetic ---------------------------------------------------------


def setstab_size(p: Partition) -> int:
    """Exact order of the setwise stabiliser of ``p``."""
    size = 1
    for block_size, mult in Counter(p.sizes()).items():
        size *= math.factorial(block_size) ** mult * math.factorial(mult)
    return size


def partition_index(p: Partition) -> int:
    """Exact ``[Sym(n) : SetStab(p)]``."""
    return math.factorial(p.n) // setstab_size(p)


def _log_factorial(k: int) -> float:
    return math.lgamma(k + 1)


def setstab_log_size(p: Partition) -> float:
    """Natural log of ``|SetStab(p)|`` from log-gamma sums."""
    return math.fsum(
        mult * _log_factorial(size) + _log_factorial(mult) for size, mult in Counter(p.sizes()).items()
    )


def partition_log_index(p: Partition) -> float:
    """Natural log of ``[Sym(n) : SetStab(p)]``; never negative."""
    return max(0.0, _log_factorial(p.n) - setstab_log_size(p))


# -- part-size inequalities ---------------------------------------------------


@dataclass(frozen=True)
class PartitionBoundReport:
    lemma: str
    n: int
    k: int
    k_prime: int
    S: int
    max_part: int
    log_index: float
    epsilon: float
    bound: float
    hyp_log_n: bool
    hyp_index: bool
    hyp_parts: bool
    lhs: float

    @property
    def hypotheses_met(self) -> bool:
        return self.hyp_log_n and self.hyp_index and self.hyp_parts

    @property
    def inequality(self) -> bool:
        """The conclusion evaluated on its own, hypotheses aside."""
        if self.lemma == "small-large":
            return self.lhs <= self.bound + _LOG_SLACK
        return self.lhs >= self.bound - _LOG_SLACK

    @property
    def holds(self) -> bool:
        return (not self.hypotheses_met) or self.inequality


def _check_epsilon(eps: float) -> None:
    if not 0 <= eps < 1:
        raise ValueError(f"epsilon must lie in [0, 1), got {eps}")


def _index_window(n: int, log2_index: float, eps: float) -> bool:
    # n <= s <= 2^(n^(1-eps)), compared in log2
    return math.log2(n) - _LOG_SLACK <= log2_index <= n ** (1 - eps) + _LOG_SLACK


def _ratio(log2_index: float, n: int) -> float:
    return log2_index / math.log2(n) if n > 1 else math.inf


def check_small_large(p: Partition, eps: float, log_index: float | None = None) -> PartitionBoundReport:
    """``min(k, n-k) <= (8/eps) log s / log n`` for partitions of small index."""
    _check_epsilon(eps)
    n, k = p.n, len(p)
    ln_s = partition_log_index(p) if log_index is None else log_index
    log2_s = ln_s / math.log(2)
    k_prime = min(k, n - k)
    hyp_log_n = eps > 0 and n > 1 and math.log2(n) >= 4 / eps - _LOG_SLACK
    bound = (8 / eps) * _ratio(log2_s, n) if eps > 0 else math.inf
    return PartitionBoundReport(
        lemma="small-large", n=n, k=k, k_prime=k_prime, S=p.norm, max_part=n - p.norm,
        log_index=ln_s, epsilon=eps, bound=bound, hyp_log_n=hyp_log_n,
        hyp_index=n > 1 and _index_window(n, log2_s, eps), hyp_parts=True, lhs=float(k_prime),
    )


def check_large_part(p: Partition, eps: float, log_index: float | None = None) -> PartitionBoundReport:
    """Largest part ``>= n - (33/eps) log s / log n`` when there are at most n/2 parts."""
    _check_epsilon(eps)
    n, k = p.n, len(p)
    ln_s = partition_log_index(p) if log_index is None else log_index
    log2_s = ln_s / math.log(2)
    hyp_log_n = eps > 0 and n > 1 and math.log2(n) >= 8 / eps**2 - _LOG_SLACK
    bound = n - (33 / eps) * _ratio(log2_s, n) if eps > 0 else -math.inf
    return PartitionBoundReport(
        lemma="largepart", n=n, k=k, k_prime=min(k, n - k), S=p.norm, max_part=n - p.norm,
        log_index=ln_s, epsilon=eps, bound=bound, hyp_log_n=hyp_log_n,
        hyp_index=n > 1 and _index_window(n, log2_s, eps), hyp_parts=2 * k <= n, lhs=float(n - p.norm),
    )


def _random_composition(total: int, rng: random.Random, min_part: int = 1) -> list[int]:
    parts = []
    while total > 0:
        if total < 2 * min_part:
            parts.append(total)
            break
        size = rng.randint(min_part, total)
        if total - size and total - size < min_part:
            size = total
        parts.append(size)
        total -= size
    return parts


def sample_small_index_partition(n: int, eps: float, rng: random.Random,
                                 max_blocks: int | None = None) -> Partition:
    """Draw a random partition whose index is likely to fall in ``[n, 2^(n^(1-eps))]``.

    Uniform partitions almost never have such a small index, so the sampler
    builds either one huge block plus a few small ones, or mostly singletons
    plus a few small non-singleton blocks.  Both shapes are needed: they are
    the two regimes the small-large inequality distinguishes.  With
    ``max_blocks`` the singleton-heavy shape is skipped when it would
    certainly have too many blocks.
    """
    budget = n ** (1 - eps)
    # C(n, m) >= (n/m)^m, so moving more than ~budget/log2(n/...) elements overshoots
    cap = max(1, int(2 * budget / max(1.0, math.log2(n) - 2)) + 1)
    m = rng.randint(1, min(cap, n - 1))
    chosen = rng.sample(range(1, n + 1), m)
    picked = set(chosen)
    rest = [x for x in range(1, n + 1) if x not in picked]
    mostly_singletons = rng.random() >= 0.5
    if mostly_singletons and max_blocks is not None and len(rest) > max_blocks:
        mostly_singletons = False
    if not mostly_singletons:
        blocks = [tuple(rest)]
        pos = 0
        for size in _random_composition(m, rng):
            blocks.append(tuple(chosen[pos:pos + size]))
            pos += size
    else:
        blocks = [(x,) for x in rest]
        pos = 0
        for size in _random_composition(m, rng, min_part=2) if m >= 2 else [m]:
            blocks.append(tuple(chosen[pos:pos + size]))
            pos += size
    return Partition(n, tuple(b for b in blocks if b))


@dataclass
class LemmaCheckSummary:
    lemma: str
    n: int
    epsilon: float
    samples: int
    attempts: int
    global_hypothesis: bool
    violations: int
    conditional_violations: int
    max_index_rel_error: float

    def lines(self) -> list[str]:
        return [
            f"lemma={self.lemma}",
            f"n={self.n}",
            f"epsilon={self.epsilon}",
            f"samples={self.samples}",
            f"attempts={self.attempts}",
            f"hypothesis_log_n={'met' if self.global_hypothesis else 'unmet'}",
            f"violations={self.violations}",
            f"conditional_violations={self.conditional_violations}",
            f"max_index_rel_error={self.max_index_rel_error:.3e}",
        ]


def run_lemma_check(lemma: str, n: int, eps: float, samples: int, seed: int,
                    max_attempts: int | None = None) -> LemmaCheckSummary:
    """Sample partitions meeting the per-partition hypotheses and test the inequality.

    ``violations`` counts failures of the lemma exactly as stated (so it is 0
    by construction when the global ``log n`` hypothesis is unmet).
    ``conditional_violations`` ignores that global hypothesis and is
    reported for information.  The log-gamma index is cross-checked against
    exact big-integer arithmetic for every sample.
    """
    if lemma not in ("small-large", "largepart"):
        raise ValueError(f"unknown lemma {lemma!r}")
    check = check_small_large if lemma == "small-large" else check_large_part
    rng = random.Random(seed)
    max_attempts = max_attempts or 200 * samples
    max_blocks = n // 2 if lemma == "largepart" else None
    taken = attempts = violations = conditional = 0
    worst = 0.0
    global_hyp = None
    while taken < samples:
        if attempts >= max_attempts:
            raise RuntimeError(f"only {taken} of {samples} samples met the hypotheses in {attempts} attempts")
        attempts += 1
        p = sample_small_index_partition(n, eps, rng, max_blocks)
        rep = check(p, eps)
        global_hyp = rep.hyp_log_n
        if not (rep.hyp_index and rep.hyp_parts):
            continue
        taken += 1
        exact = math.log(partition_index(p))
        if exact > 0:
            worst = max(worst, abs(rep.log_index - exact) / exact)
        if not rep.holds:
            violations += 1
        if not rep.inequality:
            conditional += 1
    return LemmaCheckSummary(lemma, n, eps, taken, attempts, bool(global_hyp), violations, conditional, worst)


# -- explicit groups and supporting-partition oracles --------------------------


class ExplicitGroup:
    """A permutation group given by its full element list (small ``n`` only)."""

    def __init__(self, n: int, elements: Iterable[Permutation]):
        self.n = n
        self.elements = frozenset(elements)
        if any(g.n != n for g in self.elements):
            raise ValueError("group elements act on different sets")
        if Permutation.identity(n) not in self.elements:
            raise ValueError("group lacks the identity")
        for g in self.elements:
            if g.inverse() not in self.elements:
                raise ValueError("group not closed under inverses")
            for h in self.elements:
                if g * h not in self.elements:
                    raise ValueError("group not closed under composition")

    @classmethod
    def generated_by(cls, n: int, gens: Iterable[Permutation]) -> "ExplicitGroup":
        _require_small(n)
        ident = Permutation.identity(n)
        gens = list(gens)
        seen = {ident}
        queue = deque([ident])
        while queue:
            g = queue.popleft()
            for s in gens:
                h = s * g
                if h not in seen:
                    seen.add(h)
                    queue.append(h)
        return cls(n, seen)

    @classmethod
    def symmetric(cls, n: int) -> "ExplicitGroup":
        _require_small(n)
        return cls(n, all_permutations(n))

    @classmethod
    def alternating(cls, n: int) -> "ExplicitGroup":
        _require_small(n)
        return cls(n, (g for g in all_permutations(n) if len(transposition_factors(g)) % 2 == 0))

    @classmethod
    def trivial(cls, n: int) -> "ExplicitGroup":
        return cls(n, [Permutation.identity(n)])

    @classmethod
    def pointwise_stabiliser(cls, p: Partition) -> "ExplicitGroup":
        _require_small(p.n)
        return cls(p.n, pointwise_stabiliser_elements(p))

    def conjugate(self, sigma: Permutation) -> "ExplicitGroup":
        inv = sigma.inverse()
        return ExplicitGroup(self.n, (sigma * g * inv for g in self.elements))

    def __contains__(self, g: Permutation) -> bool:
        return g in self.elements

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)


def _require_small(n: int) -> None:
    if n > ORACLE_MAX_N:
        raise OracleSizeError(f"n={n} exceeds the enumeration cap {ORACLE_MAX_N}")


def pointwise_stabiliser_elements(p: Partition) -> Iterator[Permutation]:
    """Every permutation mapping each block of ``p`` onto itself."""
    per_block = [list(permutations(b)) for b in p.blocks]
    for choice in product(*per_block):
        images = [0] * p.n
        for block, img in zip(p.blocks, choice):
            for x, y in zip(block, img):
                images[x - 1] = y
        yield Permutation(tuple(images))


def coarsest_supporting_partition(n: int, contains: Callable[[Permutation], bool]) -> Partition:
    """Merge of all partitions whose pointwise stabiliser lies in the group.

    The group is given as a membership predicate; every partition of ``[n]``
    is enumerated and its pointwise stabiliser is listed element by element.
    """
    _require_small(n)
    supporting = (p for p in all_partitions(n) if all(contains(g) for g in pointwise_stabiliser_elements(p)))
    return merge_all(n, supporting)


def brute_force_sp(g: ExplicitGroup) -> Partition:
    return coarsest_supporting_partition(g.n, g.__contains__)


def group_sandwich_check(g: ExplicitGroup) -> bool:
    """``PointStab(SP(g)) <= g <= SetStab(SP(g))``."""
    sp = brute_force_sp(g)
    lower = all(s in g for s in pointwise_stabiliser_elements(sp))
    upper = all(sp.fixes_setwise(s) for s in g)
    return lower and upper


def conjugation_check(g: ExplicitGroup, sigma: Permutation) -> bool:
    """``sigma SP(g) == SP(sigma g sigma^-1)``."""
    return brute_force_sp(g).apply(sigma) == brute_force_sp(g.conjugate(sigma))
