"""Block-split partitions and admissible pairs of functions.

An admissible pair of level ``ell`` is described by ``ell`` distinct support
points and, for each point, the pair ``(alpha, beta)`` of subset sums of the
zero- and one-flagged indices of the block assigned to it.  Pairs are handled
as *functions*: two descriptions with the same support and the same values
are the same pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations
from typing import Callable, Hashable, Iterable, Iterator, Sequence

from hrlab.forms import LinearForm, subset_sum, subset_sums

Block = tuple[int, ...]
# (indices flagged 0, indices flagged 1), both sorted and 1-based
Split = tuple[Block, Block]
ValuePair = tuple[int, int]


@dataclass(frozen=True)
class BlockSplitPartition:
    blocks: tuple[Block, ...]
    splits: tuple[Split, ...]

    @property
    def level(self) -> int:
        return len(self.blocks)

    def values(self, phi: LinearForm) -> tuple[ValuePair, ...]:
        return tuple((subset_sum(phi, zero), subset_sum(phi, one)) for zero, one in self.splits)


def set_partitions(h: int, ell: int) -> Iterator[tuple[Block, ...]]:
    """Partitions of ``{1..h}`` into exactly ``ell`` blocks, via restricted growth strings.

    Blocks come out ordered by least element; partitions in lexicographic RGS order.
    """
    if not 1 <= ell <= h:
        return
    rgs = [0] * h

    def rec(i: int, used: int) -> Iterator[tuple[Block, ...]]:
        if h - i < ell - used:
            return
        if i == h:
            if used == ell:
                blocks: list[list[int]] = [[] for _ in range(ell)]
                for idx, b in enumerate(rgs, start=1):
                    blocks[b].append(idx)
                yield tuple(tuple(b) for b in blocks)
            return
        for b in range(min(used + 1, ell)):
            rgs[i] = b
            yield from rec(i + 1, max(used, b + 1))

    rgs[0] = 0
    yield from rec(1, 1)


def enumerate_partitions(h: int, ell: int) -> Iterator[BlockSplitPartition]:
    """Every partition into ``ell`` blocks, each with every 0/1 split.

    Splits follow a binary counter over flags: bit ``i-1`` of the counter is
    the flag of index ``i``.
    """
    for blocks in set_partitions(h, ell):
        for counter in range(1 << h):
            splits = tuple(
                (
                    tuple(i for i in block if not counter >> (i - 1) & 1),
                    tuple(i for i in block if counter >> (i - 1) & 1),
                )
                for block in blocks
            )
            yield BlockSplitPartition(blocks, splits)


@lru_cache(maxsize=256)
def _value_table(coeffs: tuple[int, ...], ell: int) -> tuple[tuple[tuple[ValuePair, ...], ...], tuple[tuple[Split, ...], ...]]:
    phi = LinearForm(coeffs)
    seen: dict[tuple[ValuePair, ...], tuple[Split, ...]] = {}
    for part in enumerate_partitions(phi.arity, ell):
        vals = part.values(phi)
        for perm in permutations(range(ell)):
            key = tuple(vals[p] for p in perm)
            if key not in seen:
                seen[key] = tuple(part.splits[p] for p in perm)
    keys = tuple(sorted(seen))
    return keys, tuple(seen[k] for k in keys)


def value_tuples(phi: LinearForm, ell: int) -> tuple[tuple[ValuePair, ...], ...]:
    """Sorted distinct value tuples ``((alpha_j, beta_j))_j`` for ordered supports of size ``ell``.

    The set does not depend on the module, so the number of level-``ell``
    pairs on a module of order N is ``C(N, ell) * len(value_tuples)``.
    """
    return _value_table(phi.coeffs, ell)[0]


def value_realizations(phi: LinearForm, ell: int) -> tuple[tuple[Split, ...], ...]:
    """One realizing labelled split per entry of :func:`value_tuples`."""
    return _value_table(phi.coeffs, ell)[1]


@dataclass(frozen=True)
class AdmissiblePair:
    """Finitely supported pair ``(alpha, beta)``.

    ``splits[j]`` is a realizing ``(I_{j,0}, I_{j,1})`` for ``support[j]``
    when known.
    """

    support: tuple[Hashable, ...]
    alpha: tuple[int, ...]
    beta: tuple[int, ...]
    splits: tuple[Split, ...] | None = None

    def __post_init__(self) -> None:
        if not (len(self.support) == len(self.alpha) == len(self.beta)):
            raise ValueError("support and value lists differ in length")
        if len(set(self.support)) != len(self.support):
            raise ValueError("support points must be distinct")

    @property
    def level(self) -> int:
        return len(self.support)

    def at(self, x: Hashable) -> ValuePair:
        for y, a, b in zip(self.support, self.alpha, self.beta):
            if y == x:
                return a, b
        return 0, 0

    def as_function(self) -> frozenset[tuple[Hashable, int, int]]:
        return frozenset(zip(self.support, self.alpha, self.beta))

    def evaluate(self, M, f: Callable) -> tuple[int, ...]:
        """``sum_x alpha(x) f(x) + beta(x) (f(x) + x)`` in module ``M``."""
        coeffs: list[int] = []
        points = []
        for y, a, b in zip(self.support, self.alpha, self.beta):
            fy = f(y)
            coeffs += [a + b, b]
            points += [fy, y]
        return M.linear_combination(coeffs, points)

    def representation(self):
        """The tuple ``(x_i, lambda_i)`` obtained by sending index ``i`` in block ``j`` to ``y_j``."""
        from hrlab.images import Representation

        if self.splits is None:
            raise ValueError("pair carries no realizing partition")
        h = sum(len(z) + len(o) for z, o in self.splits)
        points: list = [None] * h
        flags = [0] * h
        for y, (zero, one) in zip(self.support, self.splits):
            for i in zero:
                points[i - 1] = y
            for i in one:
                points[i - 1] = y
                flags[i - 1] = 1
        return Representation(tuple(points), tuple(flags))


def is_admissible(pair: AdmissiblePair, phi: LinearForm) -> bool:
    """Check the realizing partition: it covers ``1..h`` and reproduces every value."""
    if pair.splits is None or len(pair.splits) != pair.level:
        return False
    seen: list[int] = []
    for (zero, one), a, b in zip(pair.splits, pair.alpha, pair.beta):
        if not zero and not one:
            return False
        if subset_sum(phi, zero) != a or subset_sum(phi, one) != b:
            return False
        seen += list(zero) + list(one)
    allowed = subset_sums(phi).sums | {0}
    if any(v not in allowed for v in pair.alpha + pair.beta):
        return False
    return sorted(seen) == list(range(1, phi.arity + 1))


# -- colex ranking of combinations -----------------------------------------------


def colex_combinations(n: int, k: int) -> Iterator[tuple[int, ...]]:
    """k-subsets of ``range(n)`` as ascending tuples, in colexicographic order."""
    if k == 0:
        yield ()
        return
    for top in range(k - 1, n):
        for rest in colex_combinations(top, k - 1):
            yield rest + (top,)


def colex_rank(combo: Sequence[int]) -> int:
    return sum(math.comb(c, j + 1) for j, c in enumerate(combo))


def colex_unrank(r: int, k: int, n: int) -> tuple[int, ...]:
    out = [0] * k
    hi = n
    for j in range(k, 0, -1):
        # largest c < hi with comb(c, j) <= r
        lo_c, hi_c = j - 1, hi - 1
        while lo_c < hi_c:
            mid = (lo_c + hi_c + 1) // 2
            if math.comb(mid, j) <= r:
                lo_c = mid
            else:
                hi_c = mid - 1
        out[j - 1] = lo_c
        r -= math.comb(lo_c, j)
        hi = lo_c
    return tuple(out)


class PairCatalog:
    """All admissible pairs of level exactly ``ell`` on a module of order ``size``.

    Elements are addressed by their canonical index ``0..size-1``;
    ``element_at`` converts an index to the element placed in the support.
    Pair ``i`` is the ``(i // V)``-th support in colex order with the
    ``(i % V)``-th value tuple, where ``V = len(value_tuples)``.
    """

    def __init__(
        self,
        phi: LinearForm,
        size: int,
        ell: int,
        element_at: Callable[[int], Hashable] | None = None,
        index_of: Callable[[Hashable], int] | None = None,
    ) -> None:
        self.phi = phi
        self.size = size
        self.ell = ell
        self.values = value_tuples(phi, ell)
        self.realizations = value_realizations(phi, ell)
        self._value_index = {v: k for k, v in enumerate(self.values)}
        self.element_at = element_at or (lambda i: i)
        self.index_of = index_of or (lambda x: x)

    @property
    def count(self) -> int:
        if self.size < self.ell:
            return 0
        return math.comb(self.size, self.ell) * len(self.values)

    def __len__(self) -> int:
        return self.count

    def description_count(self) -> int:
        """Number of (ordered support, partition, split) descriptions, before dedup."""
        if self.size < self.ell:
            return 0
        partitions = sum(1 for _ in set_partitions(self.phi.arity, self.ell))
        return math.perm(self.size, self.ell) * partitions * (1 << self.phi.arity)

    def _make(self, combo: tuple[int, ...], v: int) -> AdmissiblePair:
        vals = self.values[v]
        return AdmissiblePair(
            tuple(self.element_at(c) for c in combo),
            tuple(a for a, _ in vals),
            tuple(b for _, b in vals),
            self.realizations[v],
        )

    def pair_at(self, i: int) -> AdmissiblePair:
        if not 0 <= i < self.count:
            raise IndexError(f"pair index {i} out of range [0, {self.count})")
        r, v = divmod(i, len(self.values))
        return self._make(colex_unrank(r, self.ell, self.size), v)

    def index(self, support: Sequence[Hashable], values: Sequence[ValuePair]) -> int:
        """Index of the pair with this support and per-point values (any order)."""
        order = sorted(range(len(support)), key=lambda j: self.index_of(support[j]))
        combo = tuple(self.index_of(support[j]) for j in order)
        key = tuple(tuple(values[j]) for j in order)
        return colex_rank(combo) * len(self.values) + self._value_index[key]

    def __iter__(self) -> Iterator[AdmissiblePair]:
        if self.size < self.ell:
            return
        for combo in colex_combinations(self.size, self.ell):
            for v in range(len(self.values)):
                yield self._make(combo, v)


def enumerate_admissible(phi: LinearForm, M, ell: int) -> PairCatalog:
    """Stream of level-``ell`` pairs on module ``M`` in canonical order; ``.count`` is exact."""
    return PairCatalog(phi, M.order, ell, M.element_at, M.index_of)


def count_admissible_bruteforce(phi: LinearForm, elements: Sequence[Hashable], ell: int) -> int:
    """Count distinct function pairs over all (ordered support, partition, split) descriptions."""
    functions = set()
    for part in enumerate_partitions(phi.arity, ell):
        vals = part.values(phi)
        for ys in permutations(elements, ell):
            functions.add(frozenset((y, a, b) for y, (a, b) in zip(ys, vals)))
    return len(functions)


def pushforward(
    pair: AdmissiblePair,
    project: Callable[[Hashable], Hashable] = lambda y: y[0],
    key: Callable[[Hashable], object] | None = None,
) -> AdmissiblePair:
    """Sum ``alpha`` and ``beta`` over the fibres of ``project``.

    Support points with equal projections merge, and so do their blocks.
    """
    groups: dict[Hashable, list[int]] = {}
    for j, y in enumerate(pair.support):
        groups.setdefault(project(y), []).append(j)
    zs = sorted(groups, key=key)
    alpha = tuple(sum(pair.alpha[j] for j in groups[z]) for z in zs)
    beta = tuple(sum(pair.beta[j] for j in groups[z]) for z in zs)
    splits = None
    if pair.splits is not None:
        splits = tuple(
            (
                tuple(sorted(i for j in groups[z] for i in pair.splits[j][0])),
                tuple(sorted(i for j in groups[z] for i in pair.splits[j][1])),
            )
            for z in zs
        )
    return AdmissiblePair(tuple(zs), alpha, beta, splits)


def pairs_up_to(phi: LinearForm, M, max_level: int) -> Iterable[AdmissiblePair]:
    for ell in range(1, max_level + 1):
        yield from enumerate_admissible(phi, M, ell)


__all__ = [
    "AdmissiblePair",
    "BlockSplitPartition",
    "PairCatalog",
    "colex_combinations",
    "colex_rank",
    "colex_unrank",
    "count_admissible_bruteforce",
    "enumerate_admissible",
    "enumerate_partitions",
    "is_admissible",
    "pairs_up_to",
    "pushforward",
    "set_partitions",
    "value_realizations",
    "value_tuples",
]
