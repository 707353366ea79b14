"""Images of subsets under linear forms, level-restricted images and representations.

Subsets of a module with pairwise coprime factors are stored as bit vectors
over the CRT-flattened indices ``0..m-1`` (a Python int), provided ``m`` fits
the bitset budget; sumsets are then unions of cyclic rotations.  Other
subsets fall back to hashed sets of residue tuples.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from hrlab.admissible import value_tuples
from hrlab.config import Budget, default_budget
from hrlab.errors import BudgetExceeded
from hrlab.forms import LinearForm
from hrlab.modules import Element, FiniteModule


def mask_to_indices(mask: int, m: int) -> np.ndarray:
    raw = mask.to_bytes((m + 7) // 8, "little")
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")[:m]
    return np.flatnonzero(bits)


def indices_to_mask(idx: np.ndarray, m: int) -> int:
    arr = np.zeros(m, dtype=bool)
    arr[np.asarray(idx, dtype=np.int64)] = True
    return int.from_bytes(np.packbits(arr, bitorder="little").tobytes(), "little")


def _rotate(x: int, k: int, m: int, full: int) -> int:
    if k == 0:
        return x
    return ((x << k) | (x >> (m - k))) & full


def uses_bitset(M: FiniteModule, budget: Budget) -> bool:
    return M.order <= budget.bitset_limit and M.is_cyclic


class ModuleSubset:
    """A subset of a :class:`FiniteModule`."""

    __slots__ = ("parent", "_mask", "_elems")

    def __init__(self, parent: FiniteModule, *, mask: int | None = None,
                 elems: frozenset[Element] | None = None) -> None:
        if (mask is None) == (elems is None):
            raise ValueError("give exactly one of mask or elems")
        self.parent = parent
        self._mask = mask
        self._elems = elems

    # -- construction --------------------------------------------------------

    @classmethod
    def from_elements(cls, parent: FiniteModule, elems: Iterable[Sequence[int]],
                      budget: Budget | None = None) -> "ModuleSubset":
        budget = budget or default_budget()
        items = [tuple(x) for x in elems]
        for x in items:
            if not parent.contains(x):
                raise ValueError(f"{x} is not an element of {parent.factors}")
        if uses_bitset(parent, budget):
            crt = parent.crt
            idx = np.array([crt.flatten(x) for x in items], dtype=np.int64)
            return cls(parent, mask=indices_to_mask(idx, parent.order))
        return cls(parent, elems=frozenset(items))

    @classmethod
    def from_indices(cls, parent: FiniteModule, idx: np.ndarray | Iterable[int],
                     budget: Budget | None = None) -> "ModuleSubset":
        """Build from canonical element indices (CRT values when cyclic)."""
        budget = budget or default_budget()
        idx = np.asarray(list(idx) if not isinstance(idx, np.ndarray) else idx, dtype=np.int64)
        if uses_bitset(parent, budget):
            return cls(parent, mask=indices_to_mask(idx % parent.order, parent.order))
        return cls(parent, elems=frozenset(parent.element_at(int(i)) for i in idx))

    @classmethod
    def full(cls, parent: FiniteModule, budget: Budget | None = None) -> "ModuleSubset":
        budget = budget or default_budget()
        if uses_bitset(parent, budget):
            return cls(parent, mask=(1 << parent.order) - 1)
        return cls(parent, elems=frozenset(parent))

    # -- queries ---------------------------------------------------------------

    @property
    def is_bitset(self) -> bool:
        return self._mask is not None

    @property
    def mask(self) -> int:
        if self._mask is None:
            raise TypeError("subset is not stored as a bit vector")
        return self._mask

    def indices(self) -> np.ndarray:
        """Sorted canonical indices of the members."""
        if self._mask is not None:
            return mask_to_indices(self._mask, self.parent.order)
        return np.array(sorted(self.parent.index_of(x) for x in self._elems), dtype=np.int64)

    def elements(self) -> frozenset[Element]:
        if self._elems is not None:
            return self._elems
        un = self.parent.crt.unflatten
        return frozenset(un(int(i)) for i in self.indices())

    def __len__(self) -> int:
        if self._mask is not None:
            return self._mask.bit_count()
        return len(self._elems)

    def __iter__(self) -> Iterator[Element]:
        if self._elems is not None:
            yield from sorted(self._elems, key=self.parent.index_of)
            return
        un = self.parent.crt.unflatten
        for i in self.indices():
            yield un(int(i))

    def __contains__(self, x: object) -> bool:
        if not isinstance(x, tuple) or not self.parent.contains(x):
            return False
        if self._mask is not None:
            return bool(self._mask >> self.parent.crt.flatten(x) & 1)
        return x in self._elems

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ModuleSubset) or other.parent != self.parent:
            return NotImplemented
        if self._mask is not None and other._mask is not None:
            return self._mask == other._mask
        return self.elements() == other.elements()

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"ModuleSubset({self.parent.factors}, size={len(self)})"

    def is_full(self) -> bool:
        return len(self) == self.parent.order

    def issubset(self, other: "ModuleSubset") -> bool:
        if self._mask is not None and other._mask is not None:
            return self._mask & ~other._mask == 0
        return self.elements() <= other.elements()

    def __le__(self, other: "ModuleSubset") -> bool:
        return self.issubset(other)

    def __or__(self, other: "ModuleSubset") -> "ModuleSubset":
        if self._mask is not None and other._mask is not None:
            return ModuleSubset(self.parent, mask=self._mask | other._mask)
        return ModuleSubset(self.parent, elems=self.elements() | other.elements())

    def with_zero(self) -> "ModuleSubset":
        if self._mask is not None:
            return ModuleSubset(self.parent, mask=self._mask | 1)
        return ModuleSubset(self.parent, elems=self._elems | {self.parent.zero})

    # -- arithmetic ------------------------------------------------------------

    def dilate(self, k: int) -> "ModuleSubset":
        """``{k*a : a in self}``."""
        M = self.parent
        if self._mask is not None:
            m = M.order
            idx = (self.indices() * (k % m)) % m
            return ModuleSubset(M, mask=indices_to_mask(idx, m))
        return ModuleSubset(M, elems=frozenset(M.scalar_mul(k, x) for x in self._elems))

    def sumset(self, other: "ModuleSubset", budget: Budget | None = None) -> "ModuleSubset":
        budget = budget or default_budget()
        M = self.parent
        if self._mask is not None and other._mask is not None:
            m = M.order
            small, big = (self, other) if len(self) <= len(other) else (other, self)
            work = len(small) * (m // 64 + 1)
            if work > budget.max_work:
                raise BudgetExceeded(f"sumset needs ~{work} word operations (cap {budget.max_work})")
            full = (1 << m) - 1
            acc = 0
            x = big._mask
            for k in small.indices():
                acc |= _rotate(x, int(k), m, full)
                if acc == full:
                    break
            return ModuleSubset(M, mask=acc)
        work = len(self) * len(other)
        if work > budget.max_enumeration:
            raise BudgetExceeded(f"hashed sumset needs {work} additions (cap {budget.max_enumeration})")
        return ModuleSubset(M, elems=frozenset(
            M.add(a, b) for a in self.elements() for b in other.elements()
        ))


# -- images ----------------------------------------------------------------------


def image(phi: LinearForm, A: ModuleSubset, budget: Budget | None = None) -> ModuleSubset:
    """``Φ(A)`` as the sumset ``φ_1·A + ... + φ_h·A``, evaluated left to right."""
    if len(A) == 0:
        raise ValueError("image of the empty set")
    coeffs = list(phi.coeffs)
    acc = A.dilate(coeffs[0])
    for c in coeffs[1:]:
        acc = acc.sumset(A.dilate(c), budget)
    return acc


def image_naive(phi: LinearForm, A: ModuleSubset) -> frozenset[Element]:
    """Oracle: evaluate ``Φ`` on every tuple of ``A^h``."""
    M = A.parent
    elems = sorted(A.elements())
    out = set()
    for tup in product(elems, repeat=phi.arity):
        out.add(M.linear_combination(phi.coeffs, tup))
    return frozenset(out)


def is_surjective(upsilon: LinearForm, A: ModuleSubset, include_zero: bool = False,
                  budget: Budget | None = None) -> bool:
    """``Υ(A) = M`` (or ``Υ(A ∪ {0}) = M`` with ``include_zero``)."""
    B = A.with_zero() if include_zero else A
    if len(B) == 0:
        return False
    return image(upsilon, B, budget).is_full()


# -- A(M, f) and level images --------------------------------------------------------


def tabulate(f: Callable[[Element], Element], M: FiniteModule) -> np.ndarray:
    """``f`` on every element of cyclic ``M``, as CRT-flattened values indexed by CRT value."""
    table = getattr(f, "table", None)
    if table is not None:
        return table(M)
    crt = M.crt
    return np.array([crt.flatten(f(crt.unflatten(i))) for i in range(M.order)], dtype=np.int64)


def amf_set(M: FiniteModule, f: Callable[[Element], Element],
            budget: Budget | None = None) -> ModuleSubset:
    """``{f(x)} ∪ {f(x) + x}`` over all ``x`` in ``M``."""
    budget = budget or default_budget()
    if M.order > budget.max_enumeration and not uses_bitset(M, budget):
        raise BudgetExceeded(f"module of order {M.order} is too large to enumerate")
    if uses_bitset(M, budget):
        m = M.order
        F = tabulate(f, M)
        X = np.arange(m, dtype=np.int64)
        return ModuleSubset.from_indices(M, np.concatenate([F, (F + X) % m]), budget)
    elems = set()
    for x in M:
        fx = f(x)
        elems.add(fx)
        elems.add(M.add(fx, x))
    return ModuleSubset(M, elems=frozenset(elems))


def _term_image(M: FiniteModule, f, a: int, b: int, budget: Budget, cache: dict) -> ModuleSubset:
    """``{(a+b) f(y) + b y : y in M}``: one support point carrying values ``(a, b)``."""
    key = (a, b)
    if key in cache:
        return cache[key]
    if uses_bitset(M, budget):
        m = M.order
        if "table" not in cache:
            cache["table"] = tabulate(f, M)
        F = cache["table"]
        X = np.arange(m, dtype=np.int64)
        idx = (((a + b) % m) * F + (b % m) * X) % m
        out = ModuleSubset.from_indices(M, idx, budget)
    else:
        out = ModuleSubset(M, elems=frozenset(
            M.linear_combination((a + b, b), (f(y), y)) for y in M
        ))
    cache[key] = out
    return out


def level_image(phi: LinearForm, M: FiniteModule, f, ell: int,
                budget: Budget | None = None) -> ModuleSubset:
    """Elements of ``Φ(A(M, f))`` with a representation of level at most ``ell``.

    For each multiset of per-point values realizable at level ``j <= ell`` this
    takes the sumset of the single-point images.  Letting support points
    coincide only merges blocks, which yields representations of lower level,
    so the union is exactly the level-restricted image.
    """
    budget = budget or default_budget()
    if not 1 <= ell <= phi.arity:
        raise ValueError(f"level {ell} outside 1..{phi.arity}")
    if not uses_bitset(M, budget) and M.order > budget.max_enumeration:
        raise BudgetExceeded(f"module of order {M.order} is too large to enumerate")
    cache: dict = {}
    result: ModuleSubset | None = None
    for j in range(1, ell + 1):
        multisets = {tuple(sorted(v)) for v in value_tuples(phi, j)}
        for vals in sorted(multisets):
            acc = _term_image(M, f, *vals[0], budget, cache)
            for ab in vals[1:]:
                acc = acc.sumset(_term_image(M, f, *ab, budget, cache), budget)
            result = acc if result is None else result | acc
    assert result is not None
    return result


def level_image_naive(phi: LinearForm, M: FiniteModule, f, ell: int) -> frozenset[Element]:
    """Oracle: enumerate supports of size ``j <= ell`` and every admissible value tuple."""
    elems = list(M)
    fx = {x: f(x) for x in elems}
    out = set()
    for j in range(1, ell + 1):
        vals = value_tuples(phi, j)
        for ys in combinations(elems, j):
            for v in vals:
                coeffs: list[int] = []
                pts: list[Element] = []
                for y, (a, b) in zip(ys, v):
                    coeffs += [a + b, b]
                    pts += [fx[y], y]
                out.add(M.linear_combination(coeffs, pts))
    return frozenset(out)


def level_one_image(phi: LinearForm, M: FiniteModule, f, budget: Budget | None = None) -> ModuleSubset:
    return level_image(phi, M, f, 1, budget)


# -- representations -------------------------------------------------------------


@dataclass(frozen=True)
class Representation:
    """``w = Φ(f(x_1) + λ_1 x_1, ..., f(x_h) + λ_h x_h)``."""

    points: tuple[Element, ...]
    flags: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.points) != len(self.flags) or not self.points:
            raise ValueError("points and flags must be nonempty and of equal length")
        if any(lam not in (0, 1) for lam in self.flags):
            raise ValueError("flags must be 0 or 1")

    @property
    def level(self) -> int:
        return len(set(self.points))

    def arguments(self, M: FiniteModule, f) -> tuple[Element, ...]:
        """The members of ``A(M, f)`` fed to the form."""
        return tuple(M.add(f(x), M.scalar_mul(lam, x)) for x, lam in zip(self.points, self.flags))

    def evaluate(self, phi: LinearForm, M: FiniteModule, f) -> Element:
        return M.linear_combination(phi.coeffs, self.arguments(M, f))


def canonical_representation(phi: LinearForm, M: FiniteModule, rep: Representation) -> Representation:
    """Sort (point, flag) pairs within each group of slots sharing a coefficient."""
    points = list(rep.points)
    flags = list(rep.flags)
    groups: dict[int, list[int]] = {}
    for i, c in enumerate(phi.coeffs):
        groups.setdefault(c, []).append(i)
    for slots in groups.values():
        items = sorted(((M.index_of(points[i]), flags[i], points[i]) for i in slots))
        for i, (_, lam, x) in zip(slots, items):
            points[i] = x
            flags[i] = lam
    return Representation(tuple(points), tuple(flags))


def decompose(phi: LinearForm, M: FiniteModule, f, w: Element, max_level: int,
              budget: Budget | None = None) -> list[Representation]:
    """Every representation of ``w`` of level at most ``max_level``, canonicalized.

    Representations differing only by permuting slots with equal
    coefficients count once.
    """
    budget = budget or default_budget()
    h = phi.arity
    if not 1 <= max_level <= h:
        raise ValueError(f"max_level {max_level} outside 1..{h}")
    work = M.order ** h * 2 ** h
    if work > budget.max_enumeration:
        raise BudgetExceeded(f"decomposition needs {work} evaluations (cap {budget.max_enumeration})")
    w = M.element(w)
    elems = list(M)
    fx = {x: f(x) for x in elems}
    found: dict[tuple, Representation] = {}
    for xs in product(elems, repeat=h):
        if len(set(xs)) > max_level:
            continue
        for lam in product((0, 1), repeat=h):
            args = [M.add(fx[x], x) if l else fx[x] for x, l in zip(xs, lam)]
            if M.linear_combination(phi.coeffs, args) != w:
                continue
            rep = canonical_representation(phi, M, Representation(xs, lam))
            key = (tuple(M.index_of(p) for p in rep.points), rep.flags)
            found.setdefault(key, rep)
    return [found[k] for k in sorted(found)]


__all__ = [
    "ModuleSubset",
    "Representation",
    "amf_set",
    "canonical_representation",
    "decompose",
    "image",
    "image_naive",
    "indices_to_mask",
    "is_surjective",
    "level_image",
    "level_image_naive",
    "mask_to_indices",
    "tabulate",
]
